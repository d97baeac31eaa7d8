use std::path::PathBuf;

use clap::Parser;
use modalpca::{
    baseline, estimator, io, synth, DataMatrix, FitConfig, ScenarioFamily, ScenarioSpec,
};

use super::{config_err, load_config, out_path, CliError};

/// File-config mirror of the fit parameters; flags override these.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub header: Option<bool>,
    pub label_column: Option<String>,
    pub scenario: Option<String>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub eps: Option<f64>,
    pub sigma_z: Option<f64>,
    pub components: Option<usize>,
    pub seed: Option<u64>,
    pub mad_factor: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Parser, Debug)]
pub struct Args {
    /// CSV dataset to fit (mutually exclusive with --scenario).
    #[arg(long)]
    input: Option<PathBuf>,
    /// The CSV has a header row.
    #[arg(long)]
    header: bool,
    /// Label column with 0/1 or inlier/outlier values (implies --header).
    #[arg(long)]
    label_column: Option<String>,
    /// Synthetic scenario: gaussian-diag, laplace-scaled or lbbp-3d.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Outlier fraction in [0, 1).
    #[arg(long)]
    eps: Option<f64>,
    /// Third-coordinate spread (lbbp-3d scenario only).
    #[arg(long)]
    sigma_z: Option<f64>,
    /// Number of minor components (default: d minus the 95% dimension for
    /// scenarios, 1 for CSV input).
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// MAD multiplier in the bandwidth rule.
    #[arg(long)]
    mad_factor: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// JSON file with the same fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn parse_family(name: &str) -> Result<ScenarioFamily, CliError> {
    match name {
        "gaussian-diag" => Ok(ScenarioFamily::GaussianDiag),
        "laplace-scaled" => Ok(ScenarioFamily::LaplaceScaled),
        "lbbp-3d" => Ok(ScenarioFamily::Lbbp3d),
        other => Err(config_err(format!(
            "scenario must be gaussian-diag, laplace-scaled or lbbp-3d, got {other:?}"
        ))),
    }
}

pub struct LoadedData {
    pub data: DataMatrix,
    pub truth: Option<baseline::SubspaceBasis>,
}

/// Loads either the CSV input or the synthetic scenario.
pub fn load_data(
    input: Option<&PathBuf>,
    header: bool,
    label_column: Option<&String>,
    scenario: Option<&String>,
    n: Option<usize>,
    d: Option<usize>,
    eps: f64,
    sigma_z: Option<f64>,
    seed: u64,
) -> Result<LoadedData, CliError> {
    match (input, scenario) {
        (Some(_), Some(_)) => Err(config_err("--input and --scenario are mutually exclusive")),
        (None, None) => Err(config_err("one of --input or --scenario is required")),
        (Some(path), None) => {
            let opts = io::CsvOptions {
                header: header || label_column.is_some(),
                label_column: label_column.cloned(),
                delimiter: b',',
            };
            let parsed = io::read_csv(path, &opts)?;
            Ok(LoadedData {
                data: parsed.data,
                truth: None,
            })
        }
        (None, Some(name)) => {
            let family = parse_family(name)?;
            if !(0.0..1.0).contains(&eps) {
                return Err(config_err(format!("eps must lie in [0, 1), got {eps}")));
            }
            let n = n.ok_or_else(|| config_err("--n is required with --scenario"))?;
            let spec = match family {
                ScenarioFamily::Lbbp3d => {
                    let sz = sigma_z
                        .ok_or_else(|| config_err("--sigma-z is required for lbbp-3d"))?;
                    ScenarioSpec::lbbp(sz, n, eps, seed)
                }
                _ => {
                    let d = d.ok_or_else(|| config_err("--d is required with --scenario"))?;
                    ScenarioSpec::new(family, d, n, eps, seed)
                }
            };
            let (data, _, truth) = synth::generate(&spec)?;
            Ok(LoadedData {
                data,
                truth: Some(truth),
            })
        }
    }
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileConfig = load_config(args.config.as_deref())?;
    let input = args.input.or(file.input);
    let header = args.header || file.header.unwrap_or(false);
    let label_column = args.label_column.or(file.label_column);
    let scenario = args.scenario.or(file.scenario);
    let n = args.n.or(file.n);
    let d = args.d.or(file.d);
    let eps = args.eps.or(file.eps).unwrap_or(0.0);
    let sigma_z = args.sigma_z.or(file.sigma_z);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let mad_factor = args.mad_factor.or(file.mad_factor).unwrap_or(1.0);
    let out_dir = args
        .out_dir
        .or(file.out_dir)
        .unwrap_or_else(|| PathBuf::from("."));

    let loaded = load_data(
        input.as_ref(),
        header,
        label_column.as_ref(),
        scenario.as_ref(),
        n,
        d,
        eps,
        sigma_z,
        seed,
    )?;
    let dim = loaded.data.dim();

    let components = match (args.components.or(file.components), &loaded.truth) {
        (Some(r), _) => r,
        // Default: enough minor components that the principal complement
        // has the ground-truth dimension.
        (None, Some(truth)) => dim - truth.rank(),
        (None, None) => 1,
    };
    if components == 0 || components > dim {
        return Err(config_err(format!(
            "components = {components} out of range 1..={dim}"
        )));
    }

    let cfg = FitConfig {
        n_components: components,
        seed,
        mad_factor,
        ..FitConfig::default()
    };
    cfg.validate()?;
    let model = estimator::fit(&loaded.data, &cfg)?;

    let model_path = out_path(&out_dir, "model.json")?;
    io::write_model(&model, &model_path)?;
    for c in model.components() {
        println!(
            "k={} mode={} objective={} iterations={} converged={}",
            c.index, c.mode, c.objective, c.iterations, c.converged
        );
    }
    println!("model written to {}", model_path.display());

    if let Some(truth) = &loaded.truth {
        if dim - components == truth.rank() {
            let pc = model.principal_subspace(truth.rank())?;
            let dist = baseline::specdist(&pc, truth)?;
            println!("specdist(principal subspace, ground truth) = {dist}");
        }
    }
    Ok(())
}
