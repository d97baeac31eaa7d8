pub mod bench;
pub mod fit;
pub mod influence;
pub mod lbbp;
pub mod specdist;
pub mod synth;

use std::path::{Path, PathBuf};

use modalpca::Error;

/// Harness failure categories, mapped onto stable exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config files, or unreadable inputs (exit 2).
    Config(String),
    /// The computation itself failed (exit 3).
    Numeric(String),
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match &err {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::Dimension(_)
            | Error::Parse { .. }
            | Error::Structure(_)
            | Error::Format(_)
            | Error::Io(_) => CliError::Config(err.to_string()),
            Error::DegenerateSample(_)
            | Error::InvalidFrame(_)
            | Error::InvalidPoint(_)
            | Error::ChartSingularity
            | Error::InvalidBasis(_)
            | Error::SingularSystem { .. }
            | Error::OptimizationFailure { .. } => CliError::Numeric(err.to_string()),
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// splitmix64 step, for deriving per-cell seeds from the global one.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic seed for cell `index` of a sweep.
pub fn cell_seed(global: u64, index: u64) -> u64 {
    let mut state = global ^ index.wrapping_mul(0xA076_1D64_78BD_642F);
    splitmix64(&mut state)
}

/// Ensures the output directory exists and returns `dir/name`.
pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| config_err(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

/// Parses a sweep list: either comma separated (`0,0.1,0.2`) or a range
/// `start:end:step` (inclusive end, within half a step).
pub fn parse_sweep(raw: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| config_err(format!("bad range start {:?}", parts[0])))?;
        let end: f64 = parts[1]
            .parse()
            .map_err(|_| config_err(format!("bad range end {:?}", parts[1])))?;
        let step: f64 = parts[2]
            .parse()
            .map_err(|_| config_err(format!("bad range step {:?}", parts[2])))?;
        if !(step > 0.0) || end < start {
            return Err(config_err("range needs step > 0 and end >= start"));
        }
        let count = ((end - start) / step + 0.5).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("bad sweep value {tok:?}")))
        })
        .collect()
}

/// Merges an optional JSON config file with command-line overrides: the
/// file supplies defaults, explicit flags win.
pub fn load_config<T: serde::de::DeserializeOwned + Default>(
    path: Option<&Path>,
) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let raw = std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&raw)
                .map_err(|e| config_err(format!("bad config {}: {e}", p.display())))
        }
    }
}
