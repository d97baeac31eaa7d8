//! Univariate mode estimation: half-sample initializer plus Newton polish
//! of the kernel-density objective.

use crate::error::{Error, Result};
use crate::kernel::{scaled_unchecked, Bandwidth};

/// Result of a Newton mode refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEstimate {
    /// Location of the estimated mode.
    pub m: f64,
    /// Kernel-density value `(1/N) sum phi_h(m - x_i)` at `m`.
    pub density: f64,
    /// Newton steps taken.
    pub iterations: usize,
    /// Whether the step-size tolerance was met before the safeguards fired.
    pub converged: bool,
}

/// Half-sample mode: repeatedly keep the shortest half of the ordered
/// sample until at most three points remain.
///
/// Terminal rules: a singleton is the mode; two points average; for three
/// points, the midpoint of the closer pair (the middle point when the gaps
/// tie).
pub fn half_sample_mode(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::DegenerateSample("empty sample".into()));
    }
    for &x in sample {
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite value {x}")));
        }
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut lo = 0usize;
    let mut hi = sorted.len(); // exclusive
    while hi - lo > 3 {
        let k = hi - lo;
        let half = k.div_ceil(2);
        let mut best_start = lo;
        let mut best_range = sorted[lo + half - 1] - sorted[lo];
        for start in lo + 1..=hi - half {
            let range = sorted[start + half - 1] - sorted[start];
            if range < best_range {
                best_range = range;
                best_start = start;
            }
        }
        lo = best_start;
        hi = best_start + half;
    }
    let tail = &sorted[lo..hi];
    Ok(match tail.len() {
        1 => tail[0],
        2 => 0.5 * (tail[0] + tail[1]),
        _ => {
            let left = tail[1] - tail[0];
            let right = tail[2] - tail[1];
            if left < right {
                0.5 * (tail[0] + tail[1])
            } else if right < left {
                0.5 * (tail[1] + tail[2])
            } else {
                tail[1]
            }
        }
    })
}

/// KDE objective `(1/N) sum phi_h(m - x_i)` without input validation.
pub(crate) fn kde_objective(sample: &[f64], h: f64, m: f64) -> f64 {
    let sum: f64 = sample.iter().map(|&x| scaled_unchecked(m - x, h)).sum();
    sum / sample.len() as f64
}

/// Newton refinement of the KDE objective starting from `m0`.
///
/// Uses `F(m) = sum (m - x_i) phi_h(m - x_i)` and
/// `dF/dm = sum {1 - ((m - x_i)/h)^2} phi_h(m - x_i)`; a vanishing or
/// non-finite step ends the iteration with `converged = false`. The
/// returned location never scores below `m0`.
pub fn newton_mode(
    sample: &[f64],
    h: Bandwidth,
    m0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ModeEstimate> {
    if sample.is_empty() {
        return Err(Error::DegenerateSample("empty sample".into()));
    }
    if !m0.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite m0 {m0}")));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidArgument(
            "newton_mode needs tol > 0 and max_iter >= 1".into(),
        ));
    }
    let h = h.get();
    // Work in coordinates centered at m0 so the iteration depends only on
    // the offsets m0 - x_i (this also makes shift equivariance exact when
    // those offsets are).
    let offsets: Vec<f64> = sample.iter().map(|&x| x - m0).collect();
    let objective = |delta: f64| kde_objective(&offsets, h, delta);

    let mut delta = 0.0f64;
    let mut best_delta = 0.0f64;
    let mut best_obj = objective(0.0);
    let mut iterations = 0usize;
    let mut converged = false;

    for _ in 0..max_iter {
        let mut f = 0.0;
        let mut df = 0.0;
        for &z in &offsets {
            let r = delta - z;
            let w = scaled_unchecked(r, h);
            f += r * w;
            let t = r / h;
            df += (1.0 - t * t) * w;
        }
        if df.abs() < 1e-12 || !f.is_finite() || !df.is_finite() {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        delta -= step;
        iterations += 1;
        if !delta.is_finite() {
            break;
        }
        let obj = objective(delta);
        if obj > best_obj {
            best_obj = obj;
            best_delta = delta;
        }
        if step.abs() < tol {
            converged = true;
            break;
        }
    }

    Ok(ModeEstimate {
        m: m0 + best_delta,
        density: best_obj,
        iterations,
        converged,
    })
}
