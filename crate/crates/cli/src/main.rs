//! `mrf`: command-line front end for dictionary building, measurement
//! simulation, reconstruction, evaluation, rendering and parameter sweeps.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;
mod manifest;
mod render;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use mrf_core::solvers::{Method, StepStrategy};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "mrf", version, about = "MR fingerprinting reconstruction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the dictionary and write it with its LUT and compression basis.
    BuildDict(BuildDictArgs),
    /// Simulate measurements of the digital phantom.
    Simulate(SimulateArgs),
    /// Reconstruct T1/T2/PD maps from measurements.
    Recon(ReconArgs),
    /// Relative errors (and ROI statistics) of maps against ground truth.
    Eval(EvalArgs),
    /// Render a map container to a PNG.
    Render(RenderArgs),
    /// Run a methods x lengths x noise sweep from a JSON spec.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct BuildDictArgs {
    /// Schedule container to use instead of generating one.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Sequence length when generating the schedule.
    #[arg(long = "L", default_value_t = 400)]
    pub length: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// `default` or a JSON file `{"t1_values": [..], "t2_values": [..]}`.
    #[arg(long, default_value = "default")]
    pub grid: String,
    /// Rank of the stored compression basis.
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SamplingKind {
    Cartesian,
    Spiral,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    /// Output directory of `build-dict`.
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub nx: usize,
    #[arg(long, default_value_t = 64)]
    pub ny: usize,
    #[arg(long, value_enum, default_value_t = SamplingKind::Cartesian)]
    pub sampling: SamplingKind,
    /// Cartesian undersampling factor.
    #[arg(long, default_value_t = 8.0)]
    pub reduction: f64,
    #[arg(long, default_value_t = 1)]
    pub coils: usize,
    /// Noise std relative to the largest sample.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Move ground-truth relaxation times to the nearest grid values.
    #[arg(long)]
    pub snap: bool,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

fn parse_method(s: &str) -> Result<(Method, StepStrategy), String> {
    mrf_core::bench::parse_method_label(s).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum StepArg {
    Fsz,
    Bt,
}

#[derive(Args, Debug, Serialize)]
pub struct ReconArgs {
    /// Output directory of `simulate` (or any directory with the same files).
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory of `build-dict`.
    #[arg(long)]
    pub dict: PathBuf,
    /// classical, air-mrf, igp-mrf-XY, gfb-mrf; an optional -fsz/-bt suffix sets the step.
    #[arg(long, value_parser = parse_method)]
    #[serde(skip)]
    pub method: (Method, StepStrategy),
    #[arg(long)]
    pub step: Option<StepArg>,
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,
    #[arg(long, default_value_t = 10)]
    pub kmax: usize,
    /// Compression rank k.
    #[arg(long, default_value_t = 10)]
    pub rank: usize,
    /// Use condition b in its `new >= old` form.
    #[arg(long)]
    pub literal_condb: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Directory with t1/t2 map containers.
    #[arg(long)]
    pub maps: PathBuf,
    /// Directory with ground-truth t1/t2 containers.
    #[arg(long)]
    pub truth: PathBuf,
    /// Mask container; defaults to `mask.mrfa` in the truth directory.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Integer label container; one row of statistics per nonzero label.
    #[arg(long)]
    pub roi: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Display window `lo:hi`.
    #[arg(long, value_parser = render::parse_range, allow_hyphen_values = true)]
    pub range: (f64, f64),
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    /// JSON experiment spec; missing fields take their defaults.
    #[arg(long)]
    pub spec: PathBuf,
    /// Overrides the spec seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Command::BuildDict(a) => commands::build_dict(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Recon(a) => commands::recon(a),
        Command::Eval(a) => commands::eval(a),
        Command::Render(a) => commands::render(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
