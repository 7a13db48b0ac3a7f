//! `rank`: apply a strategy to one matrix file.

use std::path::PathBuf;

use serde::Serialize;

use verisynth::StrategyOutput;

use crate::exit::{Classify, CliResult};
use crate::inputs;
use crate::Context;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Pass matrix JSON file.
    #[arg(long)]
    matrix: PathBuf,
    /// Strategy file or built-in name.
    #[arg(long, default_value = "initial")]
    strategy: String,
}

#[derive(Serialize)]
struct Ranked<'a> {
    problem_id: &'a str,
    strategy: &'a str,
    #[serde(flatten)]
    output: &'a StrategyOutput,
    zero_variance: bool,
}

pub fn run(_ctx: &Context, args: Args) -> CliResult {
    let matrix = inputs::matrix(&args.matrix)?;
    let (strategy, _) = inputs::strategy(&args.strategy)?;
    let output = strategy.apply(&matrix)?;
    let ranked = Ranked {
        problem_id: &matrix.problem_id,
        strategy: &strategy.name,
        zero_variance: output.is_zero_variance(),
        output: &output,
    };
    println!("{}", serde_json::to_string_pretty(&ranked).or_backend("serializing output")?);
    Ok(())
}
