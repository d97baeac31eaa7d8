//! Cyclic angular grid search used to initialize the direction optimizer.
//!
//! A sweep evaluates the mode-concentration objective at `n_grid` angles of
//! a plane, then repeatedly halves the window around the best angle. In
//! dimension above two the halving cycles run over the planes spanned by
//! the current direction and each (complement-projected) canonical axis;
//! the whole schedule starts from several axes and the finalists are
//! compared under a Newton-polished score at a common bandwidth.

use nalgebra::{DMatrix, DVector};

use crate::data::{DataMatrix, Direction};
use crate::error::{Error, Result};
use crate::kernel;
use crate::manifold::orthonormal_complement;
use crate::mode;

const PARALLEL_TOL: f64 = 1e-8;
/// Independent sweep starts (one per admissible axis, capped).
const MAX_STARTS: usize = 8;
/// Repetitions of the full halving schedule while it improves.
const MAX_PASSES: usize = 3;

/// Grid-search parameters: points per sweep and number of halving cycles.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_grid: usize,
    pub n_cycles: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        // Final angular resolution pi / (n_grid * 2^(n_cycles - 1)) < 1e-3 rad.
        Self {
            n_grid: 21,
            n_cycles: 10,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid < 3 {
            return Err(Error::Config(format!(
                "n_grid must be at least 3, got {}",
                self.n_grid
            )));
        }
        if self.n_cycles < 1 {
            return Err(Error::Config("n_cycles must be at least 1".into()));
        }
        Ok(())
    }
}

fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Mode-concentration score of a projected sample: kernel density at the
/// half-sample mode under the oversmoothed bandwidth. A sample projected to
/// a single point is maximally concentrated and scores infinity.
pub(crate) fn mode_density_score(projected: &[f64]) -> Result<f64> {
    if all_equal(projected) {
        return Ok(f64::INFINITY);
    }
    let h = kernel::terrell_bandwidth(projected)?;
    let m = mode::half_sample_mode(projected)?;
    Ok(mode::kde_objective(projected, h.get(), m))
}

/// Newton-polished kernel density at the mode under a caller-fixed
/// bandwidth. Finalists of independent sweeps are ranked this way at a
/// common bandwidth: comparing adaptive-bandwidth scores would hand the
/// win to whichever direction happened to collapse its own bandwidth.
fn polished_score_at(projected: &[f64], h: kernel::Bandwidth) -> Result<f64> {
    if all_equal(projected) {
        return Ok(f64::INFINITY);
    }
    let m0 = mode::half_sample_mode(projected)?;
    let est = mode::newton_mode(projected, h, m0, 1e-10 * h.get(), 100)?;
    Ok(est.density)
}

/// Common comparison bandwidth for a set of finalists: the median of
/// their per-direction oversmoothed bandwidths.
fn common_bandwidth(finalists: &[Vec<f64>]) -> Result<kernel::Bandwidth> {
    let mut hs = Vec::with_capacity(finalists.len());
    for proj in finalists {
        if !all_equal(proj) {
            hs.push(kernel::terrell_bandwidth(proj)?.get());
        }
    }
    if hs.is_empty() {
        // Every finalist is exactly degenerate; any bandwidth ranks them
        // equally.
        return kernel::Bandwidth::new(1.0);
    }
    hs.sort_by(|a, b| a.partial_cmp(b).expect("finite bandwidths"));
    kernel::Bandwidth::new(hs[hs.len() / 2])
}

/// One multi-cycle sweep over the plane spanned by the samples `p1`, `p2`
/// (projections of the data on two orthonormal plane vectors). Returns the
/// best angle and its score; ties keep the earliest candidate.
pub(crate) fn sweep_plane(
    p1: &[f64],
    p2: &[f64],
    cfg: &GridConfig,
    score: &dyn Fn(&[f64]) -> Result<f64>,
) -> Result<(f64, f64)> {
    let n = p1.len();
    let mut candidate = vec![0.0f64; n];
    let mut best_theta = 0.0f64;
    let mut best_score = f64::NEG_INFINITY;
    let mut have_best = false;
    for cycle in 0..cfg.n_cycles {
        let center = if cycle == 0 { 0.0 } else { best_theta };
        let half_width = std::f64::consts::PI / 2f64.powi(cycle as i32 + 1);
        let step = 2.0 * half_width / cfg.n_grid as f64;
        for j in 0..cfg.n_grid {
            let theta = center - half_width + j as f64 * step;
            let (c, s) = (theta.cos(), theta.sin());
            for i in 0..n {
                candidate[i] = c * p1[i] + s * p2[i];
            }
            let value = score(&candidate)?;
            if !have_best || value > best_score {
                best_score = value;
                best_theta = theta;
                have_best = true;
            }
        }
    }
    Ok((best_theta, best_score))
}

/// Angular grid search in two dimensions; returns `(cos t, sin t)` for the
/// best angle, sign-canonicalized.
pub fn grid_search_2d(data: &DataMatrix, cfg: &GridConfig) -> Result<Direction> {
    cfg.validate()?;
    if data.dim() != 2 {
        return Err(Error::Dimension(format!(
            "grid_search_2d expects 2 columns, got {}",
            data.dim()
        )));
    }
    if data.n_samples() < 2 {
        return Err(Error::DegenerateSample("need at least 2 rows".into()));
    }
    if data.is_degenerate() {
        return Err(Error::DegenerateSample("all rows identical".into()));
    }
    let p1 = data.project(&DVector::from_vec(vec![1.0, 0.0]));
    let p2 = data.project(&DVector::from_vec(vec![0.0, 1.0]));
    let (theta, _) = sweep_plane(&p1, &p2, cfg, &mode_density_score)?;
    let mut dir = Direction::from_vector(DVector::from_vec(vec![theta.cos(), theta.sin()]))?;
    dir.canonicalize_sign();
    Ok(dir)
}

/// Shared geometry of a constrained search: the complement basis of the
/// constraints and the data expressed in its coordinates.
struct ComplementSpace {
    w: DMatrix<f64>,
    reduced: DMatrix<f64>,
}

fn complement_space(data: &DataMatrix, constraints: &[Direction]) -> Result<ComplementSpace> {
    let d = data.dim();
    if constraints.len() >= d {
        return Err(Error::Dimension(format!(
            "complement of {} constraints is empty in dimension {d}",
            constraints.len()
        )));
    }
    let frame: Vec<DVector<f64>> = constraints.iter().map(|c| c.vector().clone()).collect();
    let w = orthonormal_complement(&frame, d);
    let reduced = data.matrix() * &w;
    Ok(ComplementSpace { w, reduced })
}

/// What the plane sweeps of the initializer maximize.
enum SweepObjective<'a> {
    /// Half-sample-mode density with the bandwidth frozen per plane from
    /// the incumbent's projections. Freezing removes the 1/h reward a
    /// per-candidate bandwidth would grant to directions that collapse
    /// their own spread estimate.
    ModeDensity,
    /// Caller-supplied score (already bandwidth-free or fixed-bandwidth).
    Custom(&'a dyn Fn(&[f64]) -> Result<f64>),
}

fn hsm_density_at(projected: &[f64], h: f64) -> Result<f64> {
    if all_equal(projected) {
        return Ok(f64::INFINITY);
    }
    let m = mode::half_sample_mode(projected)?;
    Ok(mode::kde_objective(projected, h, m))
}

/// Runs the cyclic halving schedule from up to [`MAX_STARTS`] admissible
/// axes and returns the distinct finalists in complement coordinates.
fn collect_finalists(
    space: &ComplementSpace,
    cfg: &GridConfig,
    objective: &SweepObjective,
) -> Result<Vec<DVector<f64>>> {
    let d = space.w.nrows();
    let n = space.reduced.nrows();
    // Complement projections of the canonical axes, i.e. rows of W.
    let axes: Vec<DVector<f64>> = (0..d)
        .filter_map(|i| {
            let row = space.w.row(i).transpose();
            let norm = row.norm();
            if norm > PARALLEL_TOL {
                Some(row / norm)
            } else {
                None
            }
        })
        .collect();
    if axes.is_empty() {
        return Err(Error::Dimension("no admissible canonical direction".into()));
    }

    let mut candidate = vec![0.0f64; n];
    let mut p1 = vec![0.0f64; n];
    let mut p2 = vec![0.0f64; n];
    let mut finalists: Vec<DVector<f64>> = Vec::new();

    'starts: for start in axes.iter().take(MAX_STARTS) {
        let mut current: DVector<f64> = start.clone();

        // Halving cycles over all axis planes: cycle t sweeps n_grid angles
        // on a window of half-width pi/2^(t+1) around the incumbent in each
        // plane. The schedule repeats while it still improves; a single
        // greedy pass can lock into a side ripple of the objective.
        for _ in 0..MAX_PASSES {
            let mut improved = false;
            for cycle in 0..cfg.n_cycles {
                let half_width = std::f64::consts::PI / 2f64.powi(cycle as i32 + 1);
                let step = 2.0 * half_width / cfg.n_grid as f64;
                for axis in &axes {
                    let overlap = current.dot(axis);
                    if overlap.abs() > 1.0 - PARALLEL_TOL {
                        continue;
                    }
                    // Orthonormal plane basis {current, b2}.
                    let mut b2 = axis - &current * overlap;
                    let norm = b2.norm();
                    if norm < PARALLEL_TOL {
                        continue;
                    }
                    b2 /= norm;
                    for (i, row) in space.reduced.row_iter().enumerate() {
                        p1[i] = row.transpose().dot(&current);
                        p2[i] = row.transpose().dot(&b2);
                    }

                    // Incumbent score under this plane's objective.
                    let plane_h;
                    let mut plane_best = match objective {
                        SweepObjective::ModeDensity => {
                            if all_equal(&p1) {
                                // Exactly degenerate incumbent: nothing to
                                // improve on, in this start.
                                finalists.push(current);
                                continue 'starts;
                            }
                            plane_h = kernel::terrell_bandwidth(&p1)?.get();
                            hsm_density_at(&p1, plane_h)?
                        }
                        SweepObjective::Custom(score) => {
                            plane_h = 0.0;
                            score(&p1)?
                        }
                    };

                    let mut best_theta = None;
                    for j in 0..cfg.n_grid {
                        let theta = -half_width + j as f64 * step;
                        let (c, s) = (theta.cos(), theta.sin());
                        for i in 0..n {
                            candidate[i] = c * p1[i] + s * p2[i];
                        }
                        let value = match objective {
                            SweepObjective::ModeDensity => {
                                hsm_density_at(&candidate, plane_h)?
                            }
                            SweepObjective::Custom(score) => score(&candidate)?,
                        };
                        if value > plane_best {
                            plane_best = value;
                            best_theta = Some(theta);
                        }
                    }
                    if let Some(theta) = best_theta {
                        let mut updated = &current * theta.cos() + &b2 * theta.sin();
                        let norm = updated.norm();
                        updated /= norm;
                        current = updated;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if finalists
            .iter()
            .all(|f| f.dot(&current).abs() < 1.0 - 1e-9)
        {
            finalists.push(current);
        }
    }
    Ok(finalists)
}

fn project_columns(space: &ComplementSpace, v: &DVector<f64>) -> Vec<f64> {
    space
        .reduced
        .row_iter()
        .map(|row| row.transpose().dot(v))
        .collect()
}

fn validate_inputs(data: &DataMatrix, cfg: &GridConfig) -> Result<()> {
    cfg.validate()?;
    if data.n_samples() < 2 {
        return Err(Error::DegenerateSample("need at least 2 rows".into()));
    }
    if data.is_degenerate() {
        return Err(Error::DegenerateSample("all rows identical".into()));
    }
    Ok(())
}

/// GRID initializer under orthogonality constraints, scored by the
/// mode-concentration objective; finalists of independent starts are
/// ranked by the polished score at their common bandwidth.
pub fn grid_init(
    data: &DataMatrix,
    constraints: &[Direction],
    cfg: &GridConfig,
) -> Result<Direction> {
    validate_inputs(data, cfg)?;
    let space = complement_space(data, constraints)?;
    let dc = space.w.ncols();

    if dc == 1 {
        // The complement is a single line; the direction is forced.
        let mut dir = Direction::from_vector(space.w.column(0).into_owned())?;
        dir.canonicalize_sign();
        return Ok(dir);
    }
    if dc == 2 {
        // A single plane: exactly the two-dimensional search in the
        // complement coordinates.
        let p1: Vec<f64> = space.reduced.column(0).iter().copied().collect();
        let p2: Vec<f64> = space.reduced.column(1).iter().copied().collect();
        let (theta, _) = sweep_plane(&p1, &p2, cfg, &mode_density_score)?;
        let plane = space.w.column(0) * theta.cos() + space.w.column(1) * theta.sin();
        let mut dir = Direction::from_vector(plane)?;
        dir.canonicalize_sign();
        return Ok(dir);
    }

    let finalists = collect_finalists(&space, cfg, &SweepObjective::ModeDensity)?;
    let projections: Vec<Vec<f64>> = finalists
        .iter()
        .map(|f| project_columns(&space, f))
        .collect();
    let h = common_bandwidth(&projections)?;
    let mut winner = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (i, proj) in projections.iter().enumerate() {
        let value = polished_score_at(proj, h)?;
        if value > best {
            best = value;
            winner = i;
        }
    }
    let mut dir = Direction::from_vector(&space.w * &finalists[winner])?;
    dir.canonicalize_sign();
    Ok(dir)
}

/// GRID initializer with a caller-supplied projected-sample score; the
/// same score drives the sweeps and ranks the finalists. Returns the
/// winner and its score.
pub(crate) fn grid_init_scored(
    data: &DataMatrix,
    constraints: &[Direction],
    cfg: &GridConfig,
    score: &dyn Fn(&[f64]) -> Result<f64>,
) -> Result<(Direction, f64)> {
    validate_inputs(data, cfg)?;
    let space = complement_space(data, constraints)?;
    let dc = space.w.ncols();

    if dc == 1 {
        let mut dir = Direction::from_vector(space.w.column(0).into_owned())?;
        dir.canonicalize_sign();
        let value = score(&space.reduced.column(0).iter().copied().collect::<Vec<_>>())?;
        return Ok((dir, value));
    }
    if dc == 2 {
        let p1: Vec<f64> = space.reduced.column(0).iter().copied().collect();
        let p2: Vec<f64> = space.reduced.column(1).iter().copied().collect();
        let (theta, value) = sweep_plane(&p1, &p2, cfg, score)?;
        let plane = space.w.column(0) * theta.cos() + space.w.column(1) * theta.sin();
        let mut dir = Direction::from_vector(plane)?;
        dir.canonicalize_sign();
        return Ok((dir, value));
    }

    let finalists = collect_finalists(&space, cfg, &SweepObjective::Custom(score))?;
    let mut winner = None;
    for finalist in &finalists {
        let value = score(&project_columns(&space, finalist))?;
        match winner {
            Some((best, _)) if value <= best => {}
            _ => winner = Some((value, finalist.clone())),
        }
    }
    let (value, finalist) = winner.expect("at least one finalist");
    let mut dir = Direction::from_vector(&space.w * finalist)?;
    dir.canonicalize_sign();
    Ok((dir, value))
}
