//! The modal PCA fit: minor components found by maximizing the kernel
//! density at the mode of the projected sample.
//!
//! Each component alternates a mode update (half-sample initializer plus
//! Newton polish) with a direction update. The direction step relaxes the
//! log objective by Jensen's inequality into a weighted least-squares
//! surrogate, solved in chart coordinates of the constrained sphere by
//! conjugate gradient. Components are extracted sequentially under
//! orthogonality constraints.

use nalgebra::DVector;

use crate::baseline::SubspaceBasis;
use crate::data::{DataMatrix, Direction};
use crate::error::{Error, Result};
use crate::grid::{self, GridConfig};
use crate::kernel::{self, scaled_unchecked, Bandwidth};
use crate::manifold::{orthonormal_complement, Chart};
use crate::mode;

/// One solved minor component.
#[derive(Debug, Clone)]
pub struct ModalComponent {
    /// 1-based extraction order (MC_1 first).
    pub index: usize,
    pub direction: Direction,
    /// Mode of the projected sample along `direction`.
    pub mode: f64,
    pub bandwidth: Bandwidth,
    /// Final kernel-density objective value.
    pub objective: f64,
    /// Outer iterations used.
    pub iterations: usize,
    pub converged: bool,
}

/// Ordered minor components with the sample geometry they were fit on.
#[derive(Debug, Clone)]
pub struct MpcaModel {
    components: Vec<ModalComponent>,
    dim: usize,
    n_samples: usize,
}

impl MpcaModel {
    /// Assembles a model, enforcing pairwise orthogonality of directions.
    pub fn from_components(
        dim: usize,
        n_samples: usize,
        components: Vec<ModalComponent>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Config("model needs at least one component".into()));
        }
        for c in &components {
            if c.direction.dim() != dim {
                return Err(Error::Dimension(format!(
                    "component {} has dimension {} != {dim}",
                    c.index,
                    c.direction.dim()
                )));
            }
            if !(c.objective > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "component {} objective must be positive",
                    c.index
                )));
            }
        }
        for i in 0..components.len() {
            for j in 0..i {
                let dot = components[i].direction.dot(&components[j].direction);
                if dot.abs() > 1e-8 {
                    return Err(Error::InvalidFrame(format!(
                        "components {} and {} not orthogonal (dot = {dot:.3e})",
                        components[j].index, components[i].index
                    )));
                }
            }
        }
        Ok(Self {
            components,
            dim,
            n_samples,
        })
    }

    pub fn components(&self) -> &[ModalComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Reconstructed center `sum_k m_k v_k`; exact when r = d, a partial
    /// sum otherwise.
    pub fn center(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim);
        for comp in &self.components {
            c.axpy(comp.mode, comp.direction.vector(), 1.0);
        }
        c
    }

    /// Basis formed by the minor components in extraction order.
    pub fn minor_subspace(&self) -> Result<SubspaceBasis> {
        let dirs: Vec<Direction> = self
            .components
            .iter()
            .map(|c| c.direction.clone())
            .collect();
        SubspaceBasis::from_directions(&dirs)
    }

    /// Principal subspace of dimension `p`.
    ///
    /// With r < d components this is the orthogonal complement of the minor
    /// components (so `p` must equal d - r). With a full set r = d it is
    /// the span of the last `p` extracted directions, least concentrated
    /// first.
    pub fn principal_subspace(&self, p: usize) -> Result<SubspaceBasis> {
        let r = self.n_components();
        if self.dim == r {
            if p == 0 || p > r {
                return Err(Error::Dimension(format!("p = {p} out of range 1..={r}")));
            }
            let dirs: Vec<Direction> = self
                .components
                .iter()
                .rev()
                .take(p)
                .map(|c| c.direction.clone())
                .collect();
            SubspaceBasis::from_directions(&dirs)
        } else {
            if p != self.dim - r {
                return Err(Error::Dimension(format!(
                    "complement of {r} minor components has dimension {}, not {p}",
                    self.dim - r
                )));
            }
            let frame: Vec<DVector<f64>> = self
                .components
                .iter()
                .map(|c| c.direction.vector().clone())
                .collect();
            SubspaceBasis::new(orthonormal_complement(&frame, self.dim))
        }
    }
}

/// Fit parameters.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Number of minor components r (at most d).
    pub n_components: usize,
    pub grid: GridConfig,
    /// Relative objective-change threshold ending the outer loop.
    pub outer_tol: f64,
    pub max_outer: usize,
    /// Gradient-norm threshold for the conjugate-gradient direction step.
    pub inner_tol: f64,
    /// Inner iteration cap; defaults to `100 * (d - k)` per component.
    pub max_inner: Option<usize>,
    pub seed: u64,
    /// Multiplier on the raw MAD in the bandwidth rule (1.4826 gives the
    /// normal-consistent convention).
    pub mad_factor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_components: 1,
            grid: GridConfig::default(),
            outer_tol: 1e-7,
            max_outer: 200,
            inner_tol: 1e-8,
            max_inner: None,
            seed: 0,
            mad_factor: 1.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.n_components == 0 {
            return Err(Error::Config("n_components must be at least 1".into()));
        }
        if !(self.outer_tol > 0.0) || !(self.inner_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be at least 1".into()));
        }
        if !(self.mad_factor > 0.0) || !self.mad_factor.is_finite() {
            return Err(Error::Config("mad_factor must be positive".into()));
        }
        Ok(())
    }
}

/// Objective values around one outer iteration, all under that iteration's
/// bandwidth.
#[derive(Debug, Clone)]
pub struct OuterIterationRecord {
    /// 1-based component index.
    pub component: usize,
    pub bandwidth: f64,
    /// Objective at the previous (m, v) under the fresh bandwidth.
    pub at_start: f64,
    pub after_m_step: f64,
    pub after_v_step: f64,
}

/// Per-iteration objective trace of a fit.
#[derive(Debug, Clone, Default)]
pub struct FitTrace {
    pub records: Vec<OuterIterationRecord>,
}

/// Exact sample average `(1/N) sum phi_h(m - v^T x_i)`.
pub fn objective(data: &DataMatrix, m: f64, v: &Direction, h: Bandwidth) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite mode {m}")));
    }
    if v.dim() != data.dim() {
        return Err(Error::Dimension("direction dimension mismatch".into()));
    }
    let proj = data.project(v.vector());
    Ok(mode::kde_objective(&proj, h.get(), m))
}

/// Weighted objective `sum_i w_i phi_h(m - v^T x_i)` for point masses `w`.
pub(crate) fn weighted_objective(
    data: &DataMatrix,
    weights: &[f64],
    m: f64,
    v: &DVector<f64>,
    h: f64,
) -> f64 {
    let proj = data.project(v);
    proj.iter()
        .zip(weights)
        .map(|(&p, &w)| w * scaled_unchecked(m - p, h))
        .sum()
}

fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// One majorize-maximize direction step: Jensen weights from the current
/// direction, then the weighted least-squares surrogate minimized over the
/// constrained sphere in chart coordinates. Never decreases the weighted
/// kernel objective (the step is rejected if numerics would).
fn wls_step(
    data: &DataMatrix,
    weights: &[f64],
    m: f64,
    v_curr: &Direction,
    constraints: &[Direction],
    h: Bandwidth,
    inner_tol: f64,
    max_inner: Option<usize>,
) -> Result<Direction> {
    let hv = h.get();
    let proj = data.project(v_curr.vector());

    // Jensen weights q_i proportional to w_i phi_h(m - v^T x_i).
    let mut q: Vec<f64> = proj
        .iter()
        .zip(weights)
        .map(|(&p, &w)| w * scaled_unchecked(m - p, hv))
        .collect();
    let total: f64 = q.iter().sum();
    if total > 0.0 && total.is_finite() {
        for qi in &mut q {
            *qi /= total;
        }
    } else {
        // Kernel mass underflowed; fall back to the raw masses.
        q.copy_from_slice(weights);
    }

    // Surrogate G(v) = v^T M v - 2 m c^T v + m^2 with M = sum q x x^T.
    let x = data.matrix();
    let mut xq = x.clone();
    for (i, mut row) in xq.row_iter_mut().enumerate() {
        row *= q[i];
    }
    let m_mat = x.transpose() * xq;
    let c_vec = x.transpose() * DVector::from_vec(q);

    let chart = Chart::build(v_curr.clone(), constraints.to_vec())?;
    let codim = chart.codim();
    let max_iter = max_inner.unwrap_or(100 * codim);

    let g_of = |v: &DVector<f64>| -> f64 {
        (v.transpose() * &m_mat * v)[(0, 0)] - 2.0 * m * c_vec.dot(v) + m * m
    };
    // Gradient of G(inverse(beta)) via the chart Jacobian.
    let grad_beta = |beta: &DVector<f64>, v: &DVector<f64>| -> DVector<f64> {
        let g_v = (&m_mat * v - &c_vec * m) * 2.0;
        let s = beta.dot(beta);
        let denom = 1.0 + s;
        let t1 = chart.basis().transpose() * &g_v;
        let b = chart.center().vector().dot(&g_v);
        let coeff = 4.0 * (beta.dot(&t1) + b) / (denom * denom);
        t1 * (2.0 / denom) - beta * coeff
    };

    let mut beta = DVector::zeros(codim);
    let mut v = v_curr.vector().clone();
    let mut value = g_of(&v);
    let mut grad = grad_beta(&beta, &v);
    let mut dir = -&grad;
    let mut alpha_prev = 1.0f64;
    let mut best_v = v.clone();

    for iter in 0..max_iter {
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::OptimizationFailure {
                message: "non-finite gradient in direction step".into(),
                best: best_v,
            });
        }
        let gnorm = grad.norm();
        if gnorm < inner_tol {
            break;
        }
        let mut slope = grad.dot(&dir);
        if slope >= 0.0 {
            dir = -&grad;
            slope = -gnorm * gnorm;
        }
        // Backtracking Armijo line search.
        let mut alpha = (2.0 * alpha_prev).min(1e3);
        let mut accepted = false;
        for _ in 0..60 {
            let beta_try = &beta + &dir * alpha;
            let v_try = chart.inverse(&beta_try)?.into_vector();
            let value_try = g_of(&v_try);
            if value_try <= value + 1e-4 * alpha * slope {
                beta = beta_try;
                v = v_try;
                value = value_try;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        alpha_prev = alpha;
        best_v = v.clone();
        let grad_new = grad_beta(&beta, &v);
        // Polak-Ribiere with non-negativity restart; periodic reset too.
        let denom = grad.dot(&grad);
        let mut pr = if denom > 0.0 {
            grad_new.dot(&(&grad_new - &grad)) / denom
        } else {
            0.0
        };
        if !pr.is_finite() || (iter + 1) % codim.max(1) == 0 {
            pr = 0.0;
        }
        pr = pr.max(0.0);
        dir = -&grad_new + &dir * pr;
        grad = grad_new;
    }

    let candidate = Direction::from_vector(v)?;
    // MM safeguard on the true weighted kernel objective.
    let before = weighted_objective(data, weights, m, v_curr.vector(), hv);
    let after = weighted_objective(data, weights, m, candidate.vector(), hv);
    if after >= before {
        Ok(candidate)
    } else {
        Ok(v_curr.clone())
    }
}

/// Direction update at a fixed mode `m`: Jensen relaxation, weighted least
/// squares in chart coordinates, conjugate-gradient solve. The returned
/// direction's kernel objective is at least the current one's.
pub fn weighted_direction_update(
    data: &DataMatrix,
    m: f64,
    v_curr: &Direction,
    constraints: &[Direction],
    h: Bandwidth,
    inner_tol: f64,
    max_inner: Option<usize>,
) -> Result<Direction> {
    if !m.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite mode {m}")));
    }
    if !(inner_tol > 0.0) {
        return Err(Error::Config("inner_tol must be positive".into()));
    }
    let w = uniform_weights(data.n_samples());
    wls_step(data, &w, m, v_curr, constraints, h, inner_tol, max_inner)
}

/// One monotone direction-ascent step: the majorize-maximize update
/// followed by safeguarded over-relaxation. The plain surrogate step
/// contracts slowly near flat ridges, so the move is extrapolated in chart
/// coordinates (doubling the step while the true kernel objective keeps
/// improving). Returns the direction and its weighted objective.
fn ascent_step(
    data: &DataMatrix,
    weights: &[f64],
    m: f64,
    v_curr: &Direction,
    constraints: &[Direction],
    h: Bandwidth,
    inner_tol: f64,
    max_inner: Option<usize>,
) -> Result<(Direction, f64)> {
    let hv = h.get();
    let codim = data.dim() as isize - constraints.len() as isize - 1;
    if codim <= 0 {
        // The direction is fully determined by the constraints.
        let obj = weighted_objective(data, weights, m, v_curr.vector(), hv);
        return Ok((v_curr.clone(), obj));
    }
    let stepped = wls_step(data, weights, m, v_curr, constraints, h, inner_tol, max_inner)?;
    let mut best_obj = weighted_objective(data, weights, m, stepped.vector(), hv);
    if stepped.vector() == v_curr.vector() {
        return Ok((stepped, best_obj));
    }
    let mut best = stepped.clone();
    let chart = Chart::build(v_curr.clone(), constraints.to_vec())?;
    if let Ok(beta) = chart.forward(&stepped) {
        let mut factor = 2.0;
        for _ in 0..24 {
            let cand = chart.inverse(&(&beta * factor))?;
            let obj = weighted_objective(data, weights, m, cand.vector(), hv);
            if obj > best_obj {
                best_obj = obj;
                best = cand;
                factor *= 2.0;
            } else {
                break;
            }
        }
    }
    Ok((best, best_obj))
}

/// Repeated fixed-mode direction ascent at `m = 0` under a fixed bandwidth,
/// used by the breakdown-point search and influence-function oracles.
/// Returns the direction and its final weighted objective
/// `sum_i w_i phi_h(v^T x_i)`.
pub(crate) fn direction_ascent_fixed_mode(
    data: &DataMatrix,
    weights: Option<&[f64]>,
    constraints: &[Direction],
    h: Bandwidth,
    v_init: Direction,
    tol: f64,
    max_outer: usize,
    inner_tol: f64,
    max_inner: Option<usize>,
) -> Result<(Direction, f64)> {
    let owned;
    let w: &[f64] = match weights {
        Some(w) => w,
        None => {
            owned = uniform_weights(data.n_samples());
            &owned
        }
    };
    let mut v = v_init;
    let mut obj = weighted_objective(data, w, 0.0, v.vector(), h.get());
    for _ in 0..max_outer {
        let (v_new, obj_new) = ascent_step(data, w, 0.0, &v, constraints, h, inner_tol, max_inner)?;
        let gain = obj_new - obj;
        v = v_new;
        obj = obj_new;
        if gain.abs() < tol * obj.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok((v, obj))
}

fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Fits `cfg.n_components` minor components by sequential deflation.
pub fn fit(data: &DataMatrix, cfg: &FitConfig) -> Result<MpcaModel> {
    fit_with_trace(data, cfg).map(|(model, _)| model)
}

/// As [`fit`], also returning the per-iteration objective trace.
pub fn fit_with_trace(data: &DataMatrix, cfg: &FitConfig) -> Result<(MpcaModel, FitTrace)> {
    cfg.validate()?;
    let n = data.n_samples();
    let d = data.dim();
    if n < 2 || d < 2 {
        return Err(Error::DegenerateSample(format!(
            "fit needs n >= 2 and d >= 2, got n = {n}, d = {d}"
        )));
    }
    if cfg.n_components > d {
        return Err(Error::Dimension(format!(
            "r = {} exceeds dimension {d}",
            cfg.n_components
        )));
    }
    if data.is_degenerate() {
        return Err(Error::DegenerateSample("all rows identical".into()));
    }

    let mut components: Vec<ModalComponent> = Vec::with_capacity(cfg.n_components);
    let mut trace = FitTrace::default();

    for k in 1..=cfg.n_components {
        let constraints: Vec<Direction> =
            components.iter().map(|c| c.direction.clone()).collect();
        let mut v = grid::grid_init(data, &constraints, &cfg.grid)?;
        let mut m_prev: Option<f64> = None;
        let mut h_prev: Option<Bandwidth> = None;
        let mut obj_prev: Option<f64> = None;
        let mut final_h = None;
        let mut final_m = 0.0;
        let mut final_obj = 0.0;
        let mut iterations = 0usize;
        let mut converged = false;
        let mut stalled = false;

        for outer in 0..cfg.max_outer {
            iterations = outer + 1;
            let proj = data.project(v.vector());

            if all_equal(&proj) {
                // The sample lies exactly on a hyperplane orthogonal to v:
                // perfect concentration. Keep the last bandwidth (or fall
                // back to the global data scale) and stop.
                let h = match h_prev {
                    Some(h) => h,
                    None => {
                        let pooled: Vec<f64> = data.matrix().iter().copied().collect();
                        kernel::terrell_bandwidth_scaled(&pooled, cfg.mad_factor)?
                    }
                };
                final_h = Some(h);
                final_m = proj[0];
                final_obj = scaled_unchecked(0.0, h.get());
                converged = true;
                break;
            }

            let h = kernel::terrell_bandwidth_scaled(&proj, cfg.mad_factor)?;
            let hv = h.get();

            // m-step: Newton from the warm start, with a half-sample-mode
            // restart each iteration; the better objective wins.
            let newton_tol = 1e-8 * hv;
            let warm_start = match m_prev {
                Some(m) => m,
                None => mode::half_sample_mode(&proj)?,
            };
            let at_start = mode::kde_objective(&proj, hv, warm_start);
            let mut est = mode::newton_mode(&proj, h, warm_start, newton_tol, 50)?;
            if stalled {
                // The outer loop stopped moving: retry the mode from the
                // half-sample estimate in case the warm start is stuck on
                // a shoulder of the density.
                let hsm = mode::half_sample_mode(&proj)?;
                let restart = mode::newton_mode(&proj, h, hsm, newton_tol, 50)?;
                if restart.density > est.density {
                    est = restart;
                }
            }
            // Guard the fixed-h segment: never fall below the warm start.
            let (m, after_m) = if est.density >= at_start {
                (est.m, est.density)
            } else {
                (warm_start, at_start)
            };

            // v-step.
            let w = uniform_weights(n);
            let codim = d - constraints.len() - 1;
            let (v_new, after_v) = if codim == 0 {
                // The direction is fully determined by the constraints.
                (v.clone(), mode::kde_objective(&proj, hv, m))
            } else {
                let stepped =
                    wls_step(data, &w, m, &v, &constraints, h, cfg.inner_tol, cfg.max_inner)?;
                let obj = weighted_objective(data, &w, m, stepped.vector(), hv);
                (stepped, obj)
            };
            v = v_new;

            trace.records.push(OuterIterationRecord {
                component: k,
                bandwidth: hv,
                at_start,
                after_m_step: after_m,
                after_v_step: after_v,
            });

            m_prev = Some(m);
            h_prev = Some(h);
            final_h = Some(h);
            final_m = m;
            final_obj = after_v;

            if let Some(prev) = obj_prev {
                if (after_v - prev).abs() < cfg.outer_tol * after_v.abs() {
                    if stalled {
                        converged = true;
                        break;
                    }
                    stalled = true;
                } else {
                    stalled = false;
                }
            }
            obj_prev = Some(after_v);
        }

        let mut direction = v;
        if direction.canonicalize_sign() {
            final_m = -final_m;
        }
        components.push(ModalComponent {
            index: k,
            direction,
            mode: final_m,
            bandwidth: final_h.expect("at least one outer iteration ran"),
            objective: final_obj,
            iterations,
            converged,
        });
    }

    let model = MpcaModel::from_components(d, n, components)?;
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian_sample(seed: u64, n: usize, stds: &[f64]) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = stds.len();
        let mut cells = Vec::with_capacity(n * d);
        for _ in 0..n {
            for &s in stds {
                cells.push(Normal::new(0.0, s).unwrap().sample(&mut rng));
            }
        }
        DataMatrix::from_rows(n, d, &cells).unwrap()
    }

    #[test]
    fn objective_reference_values() {
        let h = Bandwidth::new(0.7).unwrap();
        // Every point projects exactly to m: value is phi_h(0).
        let data = DataMatrix::from_rows(3, 2, &[2.0, 0.0, 2.0, 5.0, 2.0, -3.0]).unwrap();
        let v = Direction::canonical(2, 0);
        let got = objective(&data, 2.0, &v, h).unwrap();
        assert_relative_eq!(got, 1.0 / (0.7 * (2.0 * std::f64::consts::PI).sqrt()), epsilon = 1e-12);

        // Single point.
        let data = DataMatrix::from_rows(1, 2, &[1.5, 0.5]).unwrap();
        let got = objective(&data, 0.3, &v, h).unwrap();
        assert_relative_eq!(got, scaled_unchecked(0.3 - 1.5, 0.7), epsilon = 1e-15);

        // Hand dataset: projections {0, 1, 2}, m = 0, h = 1.
        let data = DataMatrix::from_rows(3, 2, &[0.0, 9.0, 1.0, -4.0, 2.0, 2.0]).unwrap();
        let got = objective(&data, 0.0, &v, Bandwidth::new(1.0).unwrap()).unwrap();
        let expect = (kernel::gaussian_kernel(0.0).unwrap()
            + kernel::gaussian_kernel(1.0).unwrap()
            + kernel::gaussian_kernel(2.0).unwrap())
            / 3.0;
        assert_relative_eq!(got, expect, epsilon = 1e-15);
        assert_relative_eq!(got, 0.2316346, epsilon = 1e-6);
    }

    #[test]
    fn chart_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = gaussian_sample(3, 40, &[1.0, 0.7, 0.4]);
        let x = data.matrix();
        let q = uniform_weights(40);
        let mut xq = x.clone();
        for (i, mut row) in xq.row_iter_mut().enumerate() {
            row *= q[i];
        }
        let m_mat = x.transpose() * xq;
        let c_vec = x.transpose() * DVector::from_vec(q);
        let m = 0.3;

        let v0 = Direction::from_vector(DVector::from_vec(vec![0.6, -0.3, 0.9])).unwrap();
        let chart = Chart::build(v0, vec![]).unwrap();
        let g_of = |v: &DVector<f64>| -> f64 {
            (v.transpose() * &m_mat * v)[(0, 0)] - 2.0 * m * c_vec.dot(v) + m * m
        };
        for _ in 0..10 {
            let beta = DVector::from_fn(2, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let v = chart.inverse(&beta).unwrap().into_vector();
            let g_v = (&m_mat * &v - &c_vec * m) * 2.0;
            let s = beta.dot(&beta);
            let denom = 1.0 + s;
            let t1 = chart.basis().transpose() * &g_v;
            let b = chart.center().vector().dot(&g_v);
            let coeff = 4.0 * (beta.dot(&t1) + b) / (denom * denom);
            let grad = &t1 * (2.0 / denom) - &beta * coeff;

            let eps = 1e-6;
            for j in 0..2 {
                let mut bp = beta.clone();
                bp[j] += eps;
                let mut bm = beta.clone();
                bm[j] -= eps;
                let fd = (g_of(&chart.inverse(&bp).unwrap().into_vector())
                    - g_of(&chart.inverse(&bm).unwrap().into_vector()))
                    / (2.0 * eps);
                assert!(
                    (grad[j] - fd).abs() < 1e-6 * (1.0 + fd.abs()),
                    "grad {} fd {}",
                    grad[j],
                    fd
                );
            }
        }
    }

    #[test]
    fn direction_update_flat_objective_keeps_current() {
        // Symmetric cross with |v^T x| equal for all points: the surrogate
        // is exactly flat over the sphere, so the step returns v unchanged.
        let data = DataMatrix::from_rows(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0])
            .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = Direction::from_vector(DVector::from_vec(vec![s, s])).unwrap();
        let h = Bandwidth::new(1.0).unwrap();
        let out = weighted_direction_update(&data, 0.0, &v, &[], h, 1e-8, None).unwrap();
        assert_eq!(out.vector(), v.vector());
    }

    #[test]
    fn direction_update_exact_line_data() {
        // Points t_i (0, 1): the residual vanishes at v = (1, 0).
        let ts = [-2.0, -1.0, 0.5, 1.5, 3.0];
        let mut cells = Vec::new();
        for &t in &ts {
            cells.push(0.0);
            cells.push(t);
        }
        let data = DataMatrix::from_rows(5, 2, &cells).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = Direction::from_vector(DVector::from_vec(vec![s, s])).unwrap();
        let h = Bandwidth::new(0.5).unwrap();
        let out = weighted_direction_update(&data, 0.0, &v, &[], h, 1e-10, Some(500)).unwrap();
        assert!(out.vector()[1].abs() < 1e-5, "got {:?}", out);
    }

    #[test]
    fn direction_update_monotone_on_random_instances() {
        for seed in 0..10 {
            let data = gaussian_sample(100 + seed, 30, &[1.3, 0.8, 0.5]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = Direction::from_vector(DVector::from_fn(3, |_, _| {
                rng.gen::<f64>() * 2.0 - 1.0
            }))
            .unwrap();
            let proj = data.project(v.vector());
            let h = kernel::terrell_bandwidth(&proj).unwrap();
            let m = mode::half_sample_mode(&proj).unwrap();

            let w = uniform_weights(30);
            let before_g = {
                let q: Vec<f64> = proj
                    .iter()
                    .map(|&p| scaled_unchecked(m - p, h.get()))
                    .collect();
                let total: f64 = q.iter().sum();
                proj.iter()
                    .zip(&q)
                    .map(|(&p, &qi)| qi / total * (m - p) * (m - p))
                    .sum::<f64>()
            };
            let out = weighted_direction_update(&data, m, &v, &[], h, 1e-10, None).unwrap();
            let proj_new = data.project(out.vector());
            let after_g = {
                let q: Vec<f64> = proj
                    .iter()
                    .map(|&p| scaled_unchecked(m - p, h.get()))
                    .collect();
                let total: f64 = q.iter().sum();
                proj_new
                    .iter()
                    .zip(&q)
                    .map(|(&p, &qi)| qi / total * (m - p) * (m - p))
                    .sum::<f64>()
            };
            assert!(after_g <= before_g + 1e-12, "surrogate increased");
            let before = weighted_objective(&data, &w, m, v.vector(), h.get());
            let after = weighted_objective(&data, &w, m, out.vector(), h.get());
            assert!(after >= before - 1e-15, "kernel objective decreased");
        }
    }

    #[test]
    fn fit_recovers_gaussian_axes() {
        let data = gaussian_sample(21, 500, &[2f64.sqrt(), 1.0]);
        let cfg = FitConfig {
            n_components: 2,
            ..FitConfig::default()
        };
        let model = fit(&data, &cfg).unwrap();
        // Oracle: cPCA on the same sample (equivalent for Gaussian data).
        let cpca = baseline::cpca_fit(&data, 2).unwrap();
        let minor = cpca.basis.matrix().column(1).into_owned();
        let major = cpca.basis.matrix().column(0).into_owned();
        let mc1 = &model.components()[0].direction;
        let mc2 = &model.components()[1].direction;
        let a1 = mc1.vector().dot(&minor).abs().min(1.0).acos();
        let a2 = mc2.vector().dot(&major).abs().min(1.0).acos();
        assert!(a1 < 10f64.to_radians(), "MC1 angle {} deg", a1.to_degrees());
        assert!(a2 < 10f64.to_radians(), "MC2 angle {} deg", a2.to_degrees());
    }

    #[test]
    fn full_rank_fit_is_orthonormal() {
        let data = gaussian_sample(5, 80, &[1.2, 0.9, 0.5, 0.3]);
        let cfg = FitConfig {
            n_components: 4,
            ..FitConfig::default()
        };
        let model = fit(&data, &cfg).unwrap();
        let basis = model.minor_subspace().unwrap();
        let v = basis.matrix();
        let gram = v.transpose() * v;
        assert!((gram - DMatrix::identity(4, 4)).norm() < 1e-8);
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let data = gaussian_sample(1, 30, &[1.0, 0.5]);
        let cfg = FitConfig {
            n_components: 3,
            ..FitConfig::default()
        };
        assert!(matches!(fit(&data, &cfg), Err(Error::Dimension(_))));

        let degenerate = DataMatrix::from_rows(3, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            fit(&degenerate, &FitConfig::default()),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn mm_ascent_within_fixed_bandwidth_segments() {
        let data = gaussian_sample(33, 120, &[1.5, 1.0, 0.6]);
        let cfg = FitConfig {
            n_components: 2,
            ..FitConfig::default()
        };
        let (_, trace) = fit_with_trace(&data, &cfg).unwrap();
        assert!(!trace.records.is_empty());
        for rec in &trace.records {
            assert!(
                rec.after_m_step >= rec.at_start - 1e-10,
                "m-step decreased: {} -> {}",
                rec.at_start,
                rec.after_m_step
            );
            assert!(
                rec.after_v_step >= rec.after_m_step - 1e-10,
                "v-step decreased: {} -> {}",
                rec.after_m_step,
                rec.after_v_step
            );
        }
    }

    #[test]
    fn rotation_equivariance() {
        let data = gaussian_sample(55, 1000, &[2.0, 1.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let gauss = DMatrix::from_fn(3, 3, |_, _| rng.gen::<f64>() - 0.5);
        let q = gauss.qr().q();
        let rotated = DataMatrix::new(data.matrix() * q.transpose()).unwrap();

        let cfg = FitConfig {
            n_components: 2,
            ..FitConfig::default()
        };
        let base = fit(&data, &cfg).unwrap();
        let rot = fit(&rotated, &cfg).unwrap();
        for (b, r) in base.components().iter().zip(rot.components()) {
            let mapped = &q * b.direction.vector();
            let angle = mapped.dot(r.direction.vector()).abs().min(1.0).acos();
            assert!(angle < 5f64.to_radians(), "component {} angle {} deg", b.index, angle.to_degrees());
        }
    }

    #[test]
    fn shift_equivariance() {
        let data = gaussian_sample(77, 1000, &[2.0, 1.0, 0.5]);
        let shift = DVector::from_vec(vec![3.0, -2.0, 1.0]);
        let shifted = data.centered(&(-&shift));

        let cfg = FitConfig {
            n_components: 2,
            ..FitConfig::default()
        };
        let base = fit(&data, &cfg).unwrap();
        let moved = fit(&shifted, &cfg).unwrap();
        for (b, s) in base.components().iter().zip(moved.components()) {
            let angle = b.direction.angle_to(&s.direction);
            assert!(angle < 5f64.to_radians(), "angle {} deg", angle.to_degrees());
            // Mode moves by v^T c for the aligned sign.
            let sign = if b.direction.dot(&s.direction) >= 0.0 { 1.0 } else { -1.0 };
            let expect = sign * b.mode + s.direction.vector().dot(&shift);
            assert!(
                (s.mode - expect).abs() < 0.2,
                "mode {} vs expected {}",
                s.mode,
                expect
            );
        }
    }

    #[test]
    fn principal_subspace_views() {
        let data = gaussian_sample(13, 200, &[1.5, 1.0, 0.4]);
        let cfg = FitConfig {
            n_components: 1,
            ..FitConfig::default()
        };
        let model = fit(&data, &cfg).unwrap();
        let pc = model.principal_subspace(2).unwrap();
        assert_eq!(pc.rank(), 2);
        let mc = model.components()[0].direction.vector();
        assert!((pc.matrix().transpose() * mc).norm() < 1e-10);
        assert!(model.principal_subspace(1).is_err());
    }
}
