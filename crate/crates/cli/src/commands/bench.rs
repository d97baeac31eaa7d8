use std::path::PathBuf;

use clap::Parser;
use modalpca::io::BenchmarkRow;
use modalpca::{baseline, estimator, io, synth, FitConfig, ScenarioFamily, ScenarioSpec};
use rayon::prelude::*;

use super::{cell_seed, config_err, load_config, out_path, parse_sweep, CliError};
use super::fit::parse_family;

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub eps: Option<f64>,
    pub sweep_eps: Option<String>,
    pub sweep_n: Option<String>,
    pub seeds: Option<usize>,
    pub methods: Option<String>,
    pub seed: Option<u64>,
    pub mad_factor: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Parser, Debug)]
pub struct Args {
    /// gaussian-diag or laplace-scaled.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Outlier fractions to sweep: comma list or start:end:step.
    #[arg(long)]
    sweep_eps: Option<String>,
    /// Sample sizes to sweep (fixes eps via --eps).
    #[arg(long)]
    sweep_n: Option<String>,
    /// Outlier fraction for --sweep-n runs.
    #[arg(long)]
    eps: Option<f64>,
    /// Number of seeded repetitions per sweep point.
    #[arg(long)]
    seeds: Option<usize>,
    /// Comma list from {mpca, cpca}.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mad_factor: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// JSON file with the same fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq)]
enum Method {
    Mpca,
    Cpca,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Mpca => "mpca",
            Method::Cpca => "cpca",
        }
    }
}

fn parse_methods(raw: &str) -> Result<Vec<Method>, CliError> {
    let mut out = Vec::new();
    for tok in raw.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        match tok {
            "mpca" => out.push(Method::Mpca),
            "cpca" => out.push(Method::Cpca),
            other => return Err(config_err(format!("unknown method {other:?}"))),
        }
    }
    if out.is_empty() {
        return Err(config_err("method list is empty"));
    }
    Ok(out)
}

/// Spectral distance of the estimated principal subspace to the canonical
/// ground truth, for one scenario draw.
fn cell_specdist(
    method: Method,
    family: ScenarioFamily,
    d: usize,
    n: usize,
    eps: f64,
    seed: u64,
    mad_factor: f64,
) -> Result<f64, CliError> {
    let spec = ScenarioSpec::new(family, d, n, eps, seed);
    let (data, _, truth) = synth::generate(&spec)?;
    let k = truth.rank();
    let basis = match method {
        Method::Cpca => baseline::cpca_fit(&data, k)?.basis,
        Method::Mpca => {
            let cfg = FitConfig {
                n_components: d - k,
                seed,
                mad_factor,
                ..FitConfig::default()
            };
            let model = estimator::fit(&data, &cfg)?;
            model.principal_subspace(k)?
        }
    };
    Ok(baseline::specdist(&basis, &truth)?)
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileConfig = load_config(args.config.as_deref())?;
    let scenario = args
        .scenario
        .or(file.scenario)
        .ok_or_else(|| config_err("--scenario is required"))?;
    let family = parse_family(&scenario)?;
    if family == ScenarioFamily::Lbbp3d {
        return Err(config_err("bench sweeps gaussian-diag or laplace-scaled"));
    }
    let d = args.d.or(file.d).ok_or_else(|| config_err("--d is required"))?;
    let seeds = args.seeds.or(file.seeds).unwrap_or(20);
    if seeds == 0 {
        return Err(config_err("--seeds must be at least 1"));
    }
    let methods = parse_methods(
        &args
            .methods
            .or(file.methods)
            .unwrap_or_else(|| "mpca,cpca".into()),
    )?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let mad_factor = args.mad_factor.or(file.mad_factor).unwrap_or(1.0);
    let out_dir = args
        .out_dir
        .or(file.out_dir)
        .unwrap_or_else(|| PathBuf::from("."));
    let sweep_eps = args.sweep_eps.or(file.sweep_eps);
    let sweep_n = args.sweep_n.or(file.sweep_n);

    // The sweep axis: outlier fraction at fixed n, or n at fixed fraction.
    let (param_name, params, fixed_n, fixed_eps) = match (&sweep_eps, &sweep_n) {
        (Some(_), Some(_)) => {
            return Err(config_err("--sweep-eps and --sweep-n are mutually exclusive"))
        }
        (Some(raw), None) => {
            let n = args.n.or(file.n).ok_or_else(|| config_err("--n is required"))?;
            let values = parse_sweep(raw)?;
            for &e in &values {
                if !(0.0..1.0).contains(&e) {
                    return Err(config_err(format!("eps must lie in [0, 1), got {e}")));
                }
            }
            ("epsilon", values, Some(n), None)
        }
        (None, Some(raw)) => {
            let eps = args.eps.or(file.eps).unwrap_or(0.2);
            if !(0.0..1.0).contains(&eps) {
                return Err(config_err(format!("eps must lie in [0, 1), got {eps}")));
            }
            let values = parse_sweep(raw)?;
            for &v in &values {
                if v < 4.0 || v.fract() != 0.0 {
                    return Err(config_err(format!("sample sizes must be integers >= 4, got {v}")));
                }
            }
            ("n", values, None, Some(eps))
        }
        (None, None) => return Err(config_err("one of --sweep-eps or --sweep-n is required")),
    };

    struct Cell {
        method: Method,
        param: f64,
        seed_index: usize,
    }
    let mut cells = Vec::new();
    for &param in &params {
        for seed_index in 0..seeds {
            for &method in &methods {
                cells.push(Cell {
                    method,
                    param,
                    seed_index,
                });
            }
        }
    }

    let rows: Vec<BenchmarkRow> = cells
        .par_iter()
        .map(|cell| {
            // The data seed depends only on the repetition index, so every
            // sweep point and method sees the same inlier draw.
            let data_seed = cell_seed(seed, cell.seed_index as u64);
            let (n, eps) = match (fixed_n, fixed_eps) {
                (Some(n), None) => (n, cell.param),
                (None, Some(eps)) => (cell.param as usize, eps),
                _ => unreachable!(),
            };
            let dist =
                cell_specdist(cell.method, family, d, n, eps, data_seed, mad_factor)?;
            Ok(BenchmarkRow {
                method: cell.method.name().to_string(),
                param: cell.param,
                seed: data_seed,
                specdist: dist,
            })
        })
        .collect::<Result<_, CliError>>()?;

    let path = out_path(&out_dir, "benchmark.csv")?;
    io::write_benchmark_csv(&path, param_name, &rows)?;
    println!("{} rows written to {}", rows.len(), path.display());
    Ok(())
}
