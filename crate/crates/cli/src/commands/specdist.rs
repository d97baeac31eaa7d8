use std::path::PathBuf;

use clap::Parser;
use modalpca::{baseline, io};

use super::CliError;

#[derive(Parser, Debug)]
pub struct Args {
    /// First basis CSV: one row per ambient dimension, one column per
    /// basis vector.
    basis_a: PathBuf,
    /// Second basis CSV.
    basis_b: PathBuf,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let a = baseline::SubspaceBasis::new(io::read_basis_csv(&args.basis_a)?)?;
    let b = baseline::SubspaceBasis::new(io::read_basis_csv(&args.basis_b)?)?;
    let dist = baseline::specdist(&a, &b)?;
    println!("{dist}");
    Ok(())
}
