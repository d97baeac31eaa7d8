use std::path::PathBuf;

use clap::Parser;
use modalpca::{io, synth, ScenarioFamily, ScenarioSpec};

use super::{config_err, load_config, CliError};
use super::fit::parse_family;

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub eps: Option<f64>,
    pub sigma_z: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Parser, Debug)]
pub struct Args {
    /// gaussian-diag, laplace-scaled or lbbp-3d.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    sigma_z: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with the same fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileConfig = load_config(args.config.as_deref())?;
    let scenario = args
        .scenario
        .or(file.scenario)
        .ok_or_else(|| config_err("--scenario is required"))?;
    let family = parse_family(&scenario)?;
    let n = args.n.or(file.n).ok_or_else(|| config_err("--n is required"))?;
    let eps = args.eps.or(file.eps).unwrap_or(0.0);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out = args
        .out
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from("dataset.csv"));

    let spec = match family {
        ScenarioFamily::Lbbp3d => {
            let sigma_z = args
                .sigma_z
                .or(file.sigma_z)
                .ok_or_else(|| config_err("--sigma-z is required for lbbp-3d"))?;
            ScenarioSpec::lbbp(sigma_z, n, eps, seed)
        }
        _ => {
            let d = args.d.or(file.d).ok_or_else(|| config_err("--d is required"))?;
            ScenarioSpec::new(family, d, n, eps, seed)
        }
    };
    let (data, mask, truth) = synth::generate(&spec)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| config_err(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    io::write_dataset_csv(&out, &data, Some(&mask), true)?;
    println!(
        "{} rows ({} outliers), ground-truth dimension {}; written to {}",
        data.n_samples(),
        mask.iter().filter(|&&m| !m).count(),
        truth.rank(),
        out.display()
    );
    Ok(())
}
