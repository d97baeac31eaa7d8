//! Classical PCA and the spectral subspace distance.

use nalgebra::{DMatrix, DVector};

use crate::data::{DataMatrix, Direction};
use crate::error::{Error, Result};

const RANK_TOL: f64 = 1e-10;

/// A d x p matrix with linearly independent columns spanning a subspace.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    matrix: DMatrix<f64>,
}

impl SubspaceBasis {
    /// Validates full column rank (smallest singular value above
    /// `1e-10` times the largest).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.ncols() == 0 || matrix.nrows() == 0 {
            return Err(Error::InvalidBasis("empty basis".into()));
        }
        if matrix.ncols() > matrix.nrows() {
            return Err(Error::InvalidBasis(format!(
                "{} columns cannot be independent in dimension {}",
                matrix.ncols(),
                matrix.nrows()
            )));
        }
        let svd = matrix.clone().svd(false, false);
        let max_sv = svd.singular_values.max();
        let min_sv = svd.singular_values.min();
        if !(min_sv > RANK_TOL * max_sv) {
            return Err(Error::InvalidBasis(format!(
                "rank deficient basis (sigma_min/sigma_max = {:.3e})",
                min_sv / max_sv
            )));
        }
        Ok(Self { matrix })
    }

    pub fn from_directions(directions: &[Direction]) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidBasis("empty basis".into()));
        }
        let cols: Vec<DVector<f64>> = directions.iter().map(|d| d.vector().clone()).collect();
        Self::new(DMatrix::from_columns(&cols))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.matrix.ncols()
    }

    /// Orthogonal projector `B (B^T B)^{-1} B^T` onto the column space.
    fn projector(&self) -> DMatrix<f64> {
        // An orthonormal basis of the column space from the SVD keeps the
        // projector accurate for ill-scaled inputs.
        let svd = self.matrix.clone().svd(true, false);
        let u = svd.u.expect("u requested");
        let p = self.rank();
        let u_p = u.columns(0, p);
        &u_p * u_p.transpose()
    }
}

/// Eigendecomposition summary of classical PCA.
#[derive(Debug, Clone)]
pub struct CpcaFit {
    /// Top-p eigenvectors, descending eigenvalue order, sign-canonicalized.
    pub basis: SubspaceBasis,
    /// All d eigenvalues, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
}

/// Classical PCA on the mean-centered sample covariance (n-1 divisor).
pub fn cpca_fit(data: &DataMatrix, p: usize) -> Result<CpcaFit> {
    let n = data.n_samples();
    let d = data.dim();
    if n < 2 {
        return Err(Error::DegenerateSample("need at least 2 rows".into()));
    }
    if p == 0 || p > d {
        return Err(Error::Dimension(format!("p = {p} out of range 1..={d}")));
    }
    let x = data.matrix();
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = cov.symmetric_eigen();

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let columns: Vec<DVector<f64>> = order
        .iter()
        .take(p)
        .map(|&i| {
            let mut dir = Direction::from_vector(eig.eigenvectors.column(i).into_owned())
                .expect("unit eigenvector");
            dir.canonicalize_sign();
            dir.into_vector()
        })
        .collect();
    Ok(CpcaFit {
        basis: SubspaceBasis::new(DMatrix::from_columns(&columns))?,
        eigenvalues,
    })
}

/// Direction of smallest sample variance (last eigenvector).
pub fn cpca_minor_direction(data: &DataMatrix) -> Result<Direction> {
    let d = data.dim();
    let fit = cpca_fit(data, d)?;
    Direction::from_vector(fit.basis.matrix().column(d - 1).into_owned())
}

/// Spectral distance between column spaces: arcsine of the largest singular
/// value of the difference of the two orthogonal projectors. Ranges over
/// `[0, pi/2]`; the maximum principal angle between the subspaces.
pub fn specdist(b1: &SubspaceBasis, b2: &SubspaceBasis) -> Result<f64> {
    if b1.dim() != b2.dim() {
        return Err(Error::Dimension(format!(
            "ambient dimensions differ: {} vs {}",
            b1.dim(),
            b2.dim()
        )));
    }
    let diff = b1.projector() - b2.projector();
    let s = diff.svd(false, false).singular_values.max();
    Ok(s.clamp(0.0, 1.0).asin())
}

/// Smallest k such that the top-k eigenvalues cover 95% of the total.
pub fn dimension_95(eigenvalues: &[f64]) -> Result<usize> {
    if eigenvalues.is_empty() {
        return Err(Error::DegenerateSample("empty spectrum".into()));
    }
    for (i, &v) in eigenvalues.iter().enumerate() {
        if !(v >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue {i} is negative or NaN: {v}"
            )));
        }
        if i > 0 && v > eigenvalues[i - 1] {
            return Err(Error::InvalidArgument(
                "eigenvalues must be in descending order".into(),
            ));
        }
    }
    let total: f64 = eigenvalues.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateSample("all-zero spectrum".into()));
    }
    let mut cum = 0.0;
    for (i, &v) in eigenvalues.iter().enumerate() {
        cum += v;
        if cum >= 0.95 * total {
            return Ok(i + 1);
        }
    }
    Ok(eigenvalues.len())
}
