//! Gaussian kernel, its derivatives, and the oversmoothed bandwidth rule.

use crate::error::{Error, Result};

/// `1/sqrt(2*pi)`.
const INV_SQRT_TAU: f64 = 0.39894228040143267794;

/// Leading constant of the oversmoothed bandwidth rule for the Gaussian
/// kernel: `h = 1.144 * s * n^(-1/5)`.
pub const OVERSMOOTH_FACTOR: f64 = 1.144;

/// A positive kernel smoothing scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(h: f64) -> Result<Self> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be a positive finite real, got {h}"
            )));
        }
        Ok(Self(h))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

fn check_finite(z: f64) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("non-finite input {z}")))
    }
}

/// Standard Gaussian density `exp(-z^2/2)/sqrt(2*pi)`.
pub fn gaussian_kernel(z: f64) -> Result<f64> {
    check_finite(z)?;
    Ok(gaussian_unchecked(z))
}

#[inline]
pub(crate) fn gaussian_unchecked(z: f64) -> f64 {
    (-0.5 * z * z).exp() * INV_SQRT_TAU
}

/// Scaled kernel `phi(z/h)/h`.
pub fn scaled_kernel(z: f64, h: Bandwidth) -> Result<f64> {
    check_finite(z)?;
    Ok(scaled_unchecked(z, h.get()))
}

#[inline]
pub(crate) fn scaled_unchecked(z: f64, h: f64) -> f64 {
    gaussian_unchecked(z / h) / h
}

/// First and second derivatives of the Gaussian kernel:
/// `phi'(z) = -z phi(z)`, `phi''(z) = (z^2 - 1) phi(z)`.
pub fn kernel_derivatives(z: f64) -> Result<(f64, f64)> {
    check_finite(z)?;
    let phi = gaussian_unchecked(z);
    Ok((-z * phi, (z * z - 1.0) * phi))
}

/// Median of a sample; even lengths take the midpoint of the central pair.
pub(crate) fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Raw median absolute deviation about the median (no consistency factor).
pub fn mad(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::DegenerateSample("empty sample".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let med = median(&sorted);
    let mut devs: Vec<f64> = sorted.iter().map(|x| (x - med).abs()).collect();
    devs.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(median(&devs))
}

/// Oversmoothed bandwidth `1.144 * s * n^(-1/5)` with `s` the raw MAD.
///
/// When more than half the sample coincides (MAD = 0), the scale falls back
/// to the smallest positive gap between distinct sorted values so quantized
/// data still gets a usable bandwidth.
pub fn terrell_bandwidth(projected: &[f64]) -> Result<Bandwidth> {
    terrell_bandwidth_scaled(projected, 1.0)
}

/// Same rule with the MAD multiplied by `mad_factor` (pass 1.4826 for the
/// normal-consistent convention used by e.g. R's `mad()`).
pub fn terrell_bandwidth_scaled(projected: &[f64], mad_factor: f64) -> Result<Bandwidth> {
    if projected.len() < 2 {
        return Err(Error::DegenerateSample(
            "bandwidth selection needs at least 2 points".into(),
        ));
    }
    if !mad_factor.is_finite() || mad_factor <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "mad_factor must be positive, got {mad_factor}"
        )));
    }
    for &x in projected {
        check_finite(x)?;
    }
    let n = projected.len() as f64;
    let mut scale = mad(projected)? * mad_factor;
    if scale == 0.0 {
        let mut sorted = projected.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let mut min_gap = f64::INFINITY;
        for w in sorted.windows(2) {
            let gap = w[1] - w[0];
            if gap > 0.0 && gap < min_gap {
                min_gap = gap;
            }
        }
        if !min_gap.is_finite() {
            return Err(Error::DegenerateSample(
                "all values identical; no positive gap to fall back on".into(),
            ));
        }
        scale = min_gap * mad_factor;
    }
    Bandwidth::new(OVERSMOOTH_FACTOR * scale * n.powf(-0.2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_at_zero_and_one() {
        assert_relative_eq!(gaussian_kernel(0.0).unwrap(), 0.3989422804, epsilon = 1e-9);
        assert_relative_eq!(gaussian_kernel(1.0).unwrap(), 0.2419707245, epsilon = 1e-9);
        assert_eq!(
            gaussian_kernel(1.0).unwrap(),
            gaussian_kernel(-1.0).unwrap()
        );
    }

    #[test]
    fn kernel_rejects_non_finite() {
        assert!(gaussian_kernel(f64::NAN).is_err());
        assert!(scaled_kernel(f64::INFINITY, Bandwidth::new(1.0).unwrap()).is_err());
        assert!(kernel_derivatives(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn scaled_kernel_values() {
        let h1 = Bandwidth::new(1.0).unwrap();
        let h2 = Bandwidth::new(2.0).unwrap();
        assert_relative_eq!(scaled_kernel(0.0, h1).unwrap(), 0.3989422804, epsilon = 1e-9);
        assert_relative_eq!(scaled_kernel(0.0, h2).unwrap(), 0.1994711402, epsilon = 1e-9);
        assert_relative_eq!(scaled_kernel(3.0, h1).unwrap(), 0.0044318484, epsilon = 1e-9);
    }

    #[test]
    fn derivative_closed_forms() {
        let (d1, d2) = kernel_derivatives(0.0).unwrap();
        assert_eq!(d1, 0.0);
        assert_relative_eq!(d2, -0.3989422804, epsilon = 1e-9);

        let (d1, d2) = kernel_derivatives(1.0).unwrap();
        assert_relative_eq!(d1, -0.2419707245, epsilon = 1e-9);
        assert_relative_eq!(d2, 0.0, epsilon = 1e-15);

        let phi2 = gaussian_kernel(2.0).unwrap();
        let (d1, d2) = kernel_derivatives(2.0).unwrap();
        assert_relative_eq!(d1, -2.0 * phi2, epsilon = 1e-15);
        assert_relative_eq!(d2, 3.0 * phi2, epsilon = 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        // d1 against central differences of the kernel; d2 against central
        // differences of the analytic d1 (a second difference of the kernel
        // itself sits at the f64 cancellation floor, ~1e-6 absolute).
        // Errors are relative to the local kernel scale.
        let step = 1e-5;
        let mut z = -5.0;
        while z <= 5.0 {
            let (d1, d2) = kernel_derivatives(z).unwrap();
            let fd1 = (gaussian_unchecked(z + step) - gaussian_unchecked(z - step)) / (2.0 * step);
            let d1p = kernel_derivatives(z + step).unwrap().0;
            let d1m = kernel_derivatives(z - step).unwrap().0;
            let fd2 = (d1p - d1m) / (2.0 * step);
            let scale = gaussian_unchecked(z).max(d1.abs()).max(d2.abs());
            assert!(((d1 - fd1) / scale).abs() < 1e-6, "d1 mismatch at z={z}");
            assert!(((d2 - fd2) / scale).abs() < 1e-6, "d2 mismatch at z={z}");
            z += 0.125;
        }
    }

    #[test]
    fn kernel_integrates_to_one() {
        // Composite Simpson over [-10, 10].
        let n = 20_000;
        let a = -10.0;
        let b = 10.0;
        let h = (b - a) / n as f64;
        let mut sum = gaussian_unchecked(a) + gaussian_unchecked(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            sum += gaussian_unchecked(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let integral = sum * h / 3.0;
        assert!((integral - 1.0).abs() < 1e-8, "integral = {integral}");
    }

    #[test]
    fn terrell_reference_values() {
        // 100 points with median 0 and every absolute deviation 1: MAD = 1.
        let mut sample = vec![-1.0; 50];
        sample.extend(vec![1.0; 50]);
        let h = terrell_bandwidth(&sample).unwrap().get();
        assert_relative_eq!(h, 1.144 * 100f64.powf(-0.2), epsilon = 1e-12);
        assert_relative_eq!(h, 0.4554, epsilon = 1e-4);

        // Hand computation: median 0.5, |devs| {1.5, 0.5, 0.5, 1.5}, MAD 1.0.
        let h = terrell_bandwidth(&[-1.0, 0.0, 1.0, 2.0]).unwrap().get();
        assert_relative_eq!(h, 1.144 * 4f64.powf(-0.2), epsilon = 1e-12);
        assert_relative_eq!(h, 0.867, epsilon = 1e-3);
    }

    #[test]
    fn terrell_zero_mad_fallback() {
        // Three of four points identical: MAD = 0, min positive gap = 1.
        let h = terrell_bandwidth(&[1.0, 1.0, 1.0, 2.0]).unwrap().get();
        assert_relative_eq!(h, 1.144 * 4f64.powf(-0.2), epsilon = 1e-12);
    }

    #[test]
    fn terrell_degenerate_errors() {
        assert!(terrell_bandwidth(&[1.0]).is_err());
        assert!(terrell_bandwidth(&[2.0, 2.0, 2.0]).is_err());
    }

    #[test]
    fn mad_consistency_factor_scales_bandwidth() {
        let sample = [-1.0, 0.0, 1.0, 2.0];
        let raw = terrell_bandwidth(&sample).unwrap().get();
        let scaled = terrell_bandwidth_scaled(&sample, 1.4826).unwrap().get();
        assert_relative_eq!(scaled, raw * 1.4826, epsilon = 1e-12);
    }

    #[test]
    fn bandwidth_construction_guards() {
        assert!(Bandwidth::new(0.0).is_err());
        assert!(Bandwidth::new(-1.0).is_err());
        assert!(Bandwidth::new(f64::NAN).is_err());
    }
}
