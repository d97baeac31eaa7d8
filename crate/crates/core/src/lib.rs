//! Robust principal component analysis by modal projection pursuit.
//!
//! Minor components are directions along which the projected sample
//! concentrates most tightly, measured by the kernel-density value at the
//! mode of the projections. Principal components span the orthogonal
//! complement. The crate also ships the estimator's robustness
//! diagnostics (analytic influence function, a computable lower bound of
//! the angular breakdown point), classical-PCA baselines, synthetic
//! contamination benchmarks, and CSV/JSON interchange.

pub mod baseline;
pub mod data;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod manifold;
pub mod mode;
pub mod robustness;
pub mod synth;

pub use baseline::{cpca_fit, cpca_minor_direction, dimension_95, specdist, CpcaFit, SubspaceBasis};
pub use data::{DataMatrix, Direction};
pub use error::{Error, Result};
pub use estimator::{
    fit, fit_with_trace, objective, weighted_direction_update, FitConfig, FitTrace, ModalComponent,
    MpcaModel,
};
pub use grid::{grid_init, grid_search_2d, GridConfig};
pub use kernel::{
    gaussian_kernel, kernel_derivatives, scaled_kernel, terrell_bandwidth,
    terrell_bandwidth_scaled, Bandwidth,
};
pub use mode::{half_sample_mode, newton_mode, ModeEstimate};
pub use robustness::{
    breakdown_experiment, calibrate_sigma_z, fit_fixed_mode, influence_mpca, influence_numeric,
    lbbp, lbbp_on_sample, mode_center, BreakdownConfig, InfluenceResult, LbbpReport,
    LbbpSearchConfig, RefitMethod,
};
pub use synth::{generate, ScenarioFamily, ScenarioSpec};
