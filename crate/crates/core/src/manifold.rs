//! Explicit chart of the constrained unit sphere onto Euclidean space.
//!
//! For previously fixed directions `v_1 .. v_{k-1}` and a center `v0`
//! orthogonal to them, the admissible set
//! `{v in S^{d-1} : v ⊥ v_j, v != -v0}` maps bijectively onto `R^{d-k}` by
//!
//! ```text
//! forward(v)  = U^T v / (1 + v0^T v)
//! inverse(b)  = (2 U b + (1 - b^T b) v0) / (1 + b^T b)
//! ```
//!
//! with `U` an orthonormal basis of the complement of
//! `span{v_1 .. v_{k-1}, v0}`.

use nalgebra::{DMatrix, DVector};

use crate::data::Direction;
use crate::error::{Error, Result};

const FRAME_TOL: f64 = 1e-8;
const SINGULARITY_TOL: f64 = 1e-10;

/// Chart of the constrained sphere centered at `v0`.
#[derive(Debug, Clone)]
pub struct Chart {
    v0: Direction,
    u: DMatrix<f64>,
    constraints: Vec<Direction>,
}

/// Extends `frame` (mutually orthonormal vectors in R^d) to a full
/// orthonormal basis by modified Gram-Schmidt over the canonical basis in
/// index order, returning the new columns. Candidates whose residual falls
/// below `1e-8` are skipped, so the construction is deterministic.
pub(crate) fn orthonormal_complement(frame: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = frame.to_vec();
    let mut complement: Vec<DVector<f64>> = Vec::new();
    for i in 0..d {
        if basis.len() == d {
            break;
        }
        let mut cand = DVector::zeros(d);
        cand[i] = 1.0;
        // Two MGS passes keep orthogonality near machine precision.
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&cand);
                cand.axpy(-proj, b, 1.0);
            }
        }
        let norm = cand.norm();
        if norm > FRAME_TOL {
            cand /= norm;
            basis.push(cand.clone());
            complement.push(cand);
        }
    }
    if complement.is_empty() {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&complement)
    }
}

impl Chart {
    /// Builds the chart centered at `v0` under the given constraints.
    pub fn build(v0: Direction, constraints: Vec<Direction>) -> Result<Self> {
        let d = v0.dim();
        if constraints.len() + 1 >= d {
            return Err(Error::Dimension(format!(
                "complement of {} constraints plus the center is empty in dimension {d}",
                constraints.len()
            )));
        }
        for (j, c) in constraints.iter().enumerate() {
            if c.dim() != d {
                return Err(Error::Dimension(format!(
                    "constraint {j} has dimension {} != {d}",
                    c.dim()
                )));
            }
            let dot = c.dot(&v0);
            if dot.abs() > FRAME_TOL {
                return Err(Error::InvalidFrame(format!(
                    "constraint {j} not orthogonal to v0 (dot = {dot:.3e})"
                )));
            }
            for (i, other) in constraints.iter().enumerate().take(j) {
                let dot = c.dot(other);
                if dot.abs() > FRAME_TOL {
                    return Err(Error::InvalidFrame(format!(
                        "constraints {i} and {j} not orthogonal (dot = {dot:.3e})"
                    )));
                }
            }
        }
        let mut frame: Vec<DVector<f64>> = constraints.iter().map(|c| c.vector().clone()).collect();
        frame.push(v0.vector().clone());
        let u = orthonormal_complement(&frame, d);
        debug_assert_eq!(u.ncols(), d - constraints.len() - 1);
        Ok(Self { v0, u, constraints })
    }

    pub fn center(&self) -> &Direction {
        &self.v0
    }

    /// Orthonormal basis of the chart's tangent coordinates, `d x (d-k)`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn constraints(&self) -> &[Direction] {
        &self.constraints
    }

    /// Dimension of the chart's codomain.
    pub fn codim(&self) -> usize {
        self.u.ncols()
    }

    /// Maps an admissible direction to chart coordinates.
    pub fn forward(&self, v: &Direction) -> Result<DVector<f64>> {
        if v.dim() != self.v0.dim() {
            return Err(Error::Dimension("direction dimension mismatch".into()));
        }
        for (j, c) in self.constraints.iter().enumerate() {
            let dot = c.dot(v);
            if dot.abs() > FRAME_TOL {
                return Err(Error::InvalidPoint(format!(
                    "direction violates constraint {j} (dot = {dot:.3e})"
                )));
            }
        }
        let denom = 1.0 + self.v0.dot(v);
        if denom < SINGULARITY_TOL {
            return Err(Error::ChartSingularity);
        }
        Ok((self.u.transpose() * v.vector()) / denom)
    }

    /// Maps chart coordinates back to a unit direction orthogonal to every
    /// constraint.
    pub fn inverse(&self, beta: &DVector<f64>) -> Result<Direction> {
        if beta.len() != self.codim() {
            return Err(Error::Dimension(format!(
                "expected beta of length {}, got {}",
                self.codim(),
                beta.len()
            )));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("non-finite beta".into()));
        }
        let s = beta.dot(beta);
        let denom = 1.0 + s;
        // Scale the coordinates first so the combination stays bounded even
        // for very large |beta|; this preserves constraint orthogonality.
        let coeff = beta * (2.0 / denom);
        let mut v = &self.u * coeff;
        v.axpy((1.0 - s) / denom, self.v0.vector(), 1.0);
        Direction::from_vector(v)
    }
}
