//! Sample and direction containers shared by every module.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// An n x d sample: one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    inner: DMatrix<f64>,
}

impl DataMatrix {
    /// Wraps an observation matrix, rejecting non-finite cells.
    pub fn new(inner: DMatrix<f64>) -> Result<Self> {
        for (idx, value) in inner.iter().enumerate() {
            if !value.is_finite() {
                let row = idx % inner.nrows();
                let col = idx / inner.nrows();
                return Err(Error::InvalidArgument(format!(
                    "non-finite cell at row {row}, column {col}"
                )));
            }
        }
        Ok(Self { inner })
    }

    /// Builds from row-major data, `n` rows by `d` columns.
    pub fn from_rows(n: usize, d: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != n * d {
            return Err(Error::Structure(format!(
                "expected {} cells for a {n}x{d} matrix, got {}",
                n * d,
                row_major.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, d, row_major))
    }

    pub fn n_samples(&self) -> usize {
        self.inner.nrows()
    }

    pub fn dim(&self) -> usize {
        self.inner.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.inner.row(i).transpose()
    }

    /// Projections of every observation on `v`, in row order.
    pub fn project(&self, v: &DVector<f64>) -> Vec<f64> {
        (&self.inner * v).iter().copied().collect()
    }

    /// True when every observation equals the first row.
    pub fn is_degenerate(&self) -> bool {
        let n = self.n_samples();
        if n <= 1 {
            return true;
        }
        let first = self.inner.row(0);
        (1..n).all(|i| self.inner.row(i) == first)
    }

    /// Returns a copy with `center` subtracted from every row.
    pub fn centered(&self, center: &DVector<f64>) -> Self {
        let mut inner = self.inner.clone();
        for mut row in inner.row_iter_mut() {
            for (j, c) in center.iter().enumerate() {
                row[j] -= c;
            }
        }
        Self { inner }
    }
}

/// A unit vector in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    inner: DVector<f64>,
}

impl Direction {
    /// Accepts a vector that is already unit length (within `1e-8`).
    pub fn new(inner: DVector<f64>) -> Result<Self> {
        let norm = inner.norm();
        if !norm.is_finite() {
            return Err(Error::InvalidArgument("non-finite direction".into()));
        }
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "direction norm {norm} is not 1"
            )));
        }
        // Renormalize unless already unit to machine precision; skipping
        // the division keeps serialization round-trips bit-exact.
        let inner = if (norm - 1.0).abs() < 1e-14 {
            inner
        } else {
            inner / norm
        };
        Ok(Self { inner })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument(
                "cannot normalize zero or non-finite vector".into(),
            ));
        }
        Ok(Self { inner: v / norm })
    }

    /// Unit vector along canonical axis `i`.
    pub fn canonical(d: usize, i: usize) -> Self {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        Self { inner: v }
    }

    pub fn dim(&self) -> usize {
        self.inner.len()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.inner
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.inner
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.inner.dot(&other.inner)
    }

    /// Angle to another direction ignoring sign, in radians.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        self.dot(other).abs().min(1.0).acos()
    }

    /// Flips the sign so the first coordinate with magnitude above `1e-9`
    /// is non-negative. Returns whether a flip happened.
    pub fn canonicalize_sign(&mut self) -> bool {
        for &c in self.inner.iter() {
            if c.abs() > 1e-9 {
                if c < 0.0 {
                    self.inner.neg_mut();
                    return true;
                }
                return false;
            }
        }
        false
    }
}
