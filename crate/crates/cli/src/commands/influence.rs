use std::path::PathBuf;

use clap::Parser;
use modalpca::io::InfluenceRow;
use modalpca::{
    influence_mpca, influence_numeric, io, robustness, synth, Bandwidth, DataMatrix, GridConfig,
    RefitMethod,
};
use nalgebra::DVector;
use rayon::prelude::*;

use super::{config_err, load_config, out_path, CliError};

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub method: Option<String>,
    pub n: Option<usize>,
    pub grid_res: Option<usize>,
    pub range: Option<f64>,
    pub h: Option<f64>,
    pub epsilon: Option<f64>,
    pub component: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Parser, Debug)]
pub struct Args {
    /// mpca (analytic) or cpca (finite-contamination refit).
    #[arg(long)]
    method: Option<String>,
    /// Sample size of the N(0, diag(2,1)) draw the empirical measure uses.
    #[arg(long)]
    n: Option<usize>,
    /// Grid points per axis over [-range, range]^2 (1 gives the origin).
    #[arg(long)]
    grid_res: Option<usize>,
    #[arg(long)]
    range: Option<f64>,
    /// Kernel bandwidth of the modal estimator.
    #[arg(long)]
    h: Option<f64>,
    /// Contamination mass for the numeric route.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Component index k.
    #[arg(long)]
    component: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// JSON file with the same fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn grid_positions(res: usize, range: f64) -> Vec<f64> {
    if res == 1 {
        return vec![0.0];
    }
    (0..res)
        .map(|i| -range + 2.0 * range * i as f64 / (res - 1) as f64)
        .collect()
}

/// A sign-symmetric draw from N(0, diag(2,1)): the reference measure of
/// the influence contours, with the mode at the origin by construction.
fn reference_sample(n: usize, seed: u64) -> Result<DataMatrix, CliError> {
    let half = n.div_ceil(2);
    let base = synth::gaussian_sample(&[2f64.sqrt(), 1.0], half, seed)?;
    Ok(synth::symmetrize(&base))
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileConfig = load_config(args.config.as_deref())?;
    let method = args
        .method
        .or(file.method)
        .unwrap_or_else(|| "mpca".into());
    let n = args.n.or(file.n).unwrap_or(200);
    let res = args.grid_res.or(file.grid_res).unwrap_or(81);
    let range = args.range.or(file.range).unwrap_or(4.0);
    let h = Bandwidth::new(args.h.or(file.h).unwrap_or(1.0))?;
    let epsilon = args.epsilon.or(file.epsilon).unwrap_or(1e-3);
    let k = args.component.or(file.component).unwrap_or(1);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out_dir = args
        .out_dir
        .or(file.out_dir)
        .unwrap_or_else(|| PathBuf::from("."));
    if res == 0 {
        return Err(config_err("grid_res must be at least 1"));
    }
    if !(range > 0.0) {
        return Err(config_err(format!("range must be positive, got {range}")));
    }
    if k == 0 || k > 2 {
        return Err(config_err("component must be 1 or 2 for the 2-d grid"));
    }

    let data = reference_sample(n, seed)?;
    let positions = grid_positions(res, range);
    let mut points = Vec::with_capacity(positions.len() * positions.len());
    for &u1 in &positions {
        for &u2 in &positions {
            points.push((u1, u2));
        }
    }

    let rows: Vec<InfluenceRow> = match method.as_str() {
        "mpca" => {
            let model = robustness::fit_fixed_mode(&data, h, k, &GridConfig::default())?;
            points
                .par_iter()
                .map(|&(u1, u2)| {
                    let u = DVector::from_vec(vec![u1, u2]);
                    let result = influence_mpca(&data, &model, &u, k, h)?;
                    Ok(InfluenceRow {
                        u1,
                        u2,
                        norm: result.norm,
                    })
                })
                .collect::<Result<_, CliError>>()?
        }
        "cpca" => points
            .par_iter()
            .map(|&(u1, u2)| {
                let u = DVector::from_vec(vec![u1, u2]);
                let quotient = influence_numeric(&data, RefitMethod::Cpca, &u, k, epsilon)?;
                Ok(InfluenceRow {
                    u1,
                    u2,
                    norm: quotient.norm(),
                })
            })
            .collect::<Result<_, CliError>>()?,
        other => {
            return Err(config_err(format!(
                "method must be mpca or cpca, got {other:?}"
            )))
        }
    };

    let path = out_path(&out_dir, &format!("influence_{method}.csv"))?;
    io::write_influence_csv(&path, &rows)?;
    println!("{} rows written to {}", rows.len(), path.display());
    Ok(())
}
