use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use groundstate_core::batch::verify::{run_suite, verify_csv, Suite};
use groundstate_core::batch::{choose_method, dump_fields, dump_scalar_field};
use groundstate_core::{
    classify_regime, default_nodes, run_sweep, solve_scalar, solve_system, Boundary, ClassifyOptions, DomainSpec,
    Error, Grid, MethodChoice, MethodSelector, RunConfig, SolveOptions, SolveReport, SystemParams,
};

#[derive(Parser)]
#[command(name = "groundstate", version, about = "Least-energy solutions of coupled cubic elliptic systems on boxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state of the scalar equation -Δz + λz = z³.
    SolveScalar {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Prefix for the raw field dump.
        #[arg(long)]
        fields: Option<PathBuf>,
    },
    /// Least-energy solution of the coupled system.
    SolveSystem {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "auto")]
        method: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        fields: Option<PathBuf>,
        /// Record every projection of the descent in the report.
        #[arg(long)]
        trace: bool,
    },
    /// Regime report: thresholds, conditions and the selected method.
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        dim: usize,
        /// |Ω| of a cube domain.
        #[arg(long, default_value_t = 1.0)]
        volume: f64,
        #[arg(long, default_value = "neumann")]
        bc: String,
        /// Solve the scalar problems for the ground levels and derived thresholds.
        #[arg(long = "with-L")]
        with_levels: bool,
        /// Grid for `--with-L`; per-dimension default when absent.
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form verification suites, written as CSV.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter sweep from a JSON run configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output directory of the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda1: f64,
    #[arg(long, allow_hyphen_values = true)]
    lambda2: f64,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<SystemParams, Error> {
        SystemParams::new(self.lambda1, self.lambda2, self.beta)
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value = "neumann")]
    bc: String,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Nodes per axis; a single value applies to every axis.
    #[arg(long, value_delimiter = ',')]
    nodes: Option<Vec<usize>>,
    /// Side lengths; a single value applies to every axis.
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<f64>>,
}

fn broadcast<T: Copy>(values: Vec<T>, dim: usize, what: &str) -> Result<Vec<T>, Error> {
    match values.len() {
        1 => Ok(vec![values[0]; dim]),
        n if n == dim => Ok(values),
        n => Err(Error::InvalidParams(format!("{n} {what} for dimension {dim}"))),
    }
}

impl GridArgs {
    fn build(&self) -> Result<std::sync::Arc<Grid>, Error> {
        let boundary: Boundary = self.bc.parse()?;
        if !(1..=4).contains(&self.dim) {
            return Err(Error::Dimension(self.dim));
        }
        let lengths = broadcast(self.lengths.clone().unwrap_or_else(|| vec![1.0]), self.dim, "side lengths")?;
        let nodes = match &self.nodes {
            Some(n) => broadcast(n.clone(), self.dim, "node counts")?,
            None => default_nodes(self.dim)?,
        };
        Grid::new(DomainSpec::new(lengths, boundary)?, &nodes)
    }
}

#[derive(Serialize)]
struct SystemOutput<'a> {
    choice: &'a MethodChoice,
    report: &'a SolveReport,
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", text.trim_end()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Error> {
    emit(&serde_json::to_string_pretty(value)?, out)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("GROUNDSTATE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParams(format!("GROUNDSTATE_THREADS must be a positive integer, got '{raw}'")))?;
    // a second initialization (tests in one process) is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn run(command: Command) -> Result<(), Error> {
    configure_threads()?;
    match command {
        Command::SolveScalar { lambda, grid, seed, out, fields } => {
            let grid = grid.build()?;
            let opts = SolveOptions { seed, ..Default::default() };
            let report = solve_scalar(lambda, &grid, &opts)?;
            if let Some(prefix) = &fields {
                dump_scalar_field(&report.z, prefix)?;
            }
            emit_json(&report, out.as_deref())
        }
        Command::SolveSystem { params, method, grid, seed, out, fields, trace } => {
            let params = params.params()?;
            let selector: MethodSelector = method.parse()?;
            let grid = grid.build()?;
            let opts = SolveOptions { seed, trace, ..Default::default() };
            let choice = match selector {
                MethodSelector::Auto => choose_method(&params, &grid, &opts)?,
                MethodSelector::Fixed(m) => MethodChoice {
                    method: m,
                    clause: "fixed".into(),
                    outside_theory: false,
                },
            };
            let mut report = solve_system(&params, &grid, choice.method, &opts)?;
            report.outside_theory |= choice.outside_theory;
            if let Some(prefix) = &fields {
                dump_fields(&report.pair, prefix)?;
            }
            emit_json(&SystemOutput { choice: &choice, report: &report }, out.as_deref())
        }
        Command::Classify { params, dim, volume, bc, with_levels, nodes, out } => {
            let params = params.params()?;
            if !(1..=4).contains(&dim) {
                return Err(Error::Dimension(dim));
            }
            if !(volume.is_finite() && volume > 0.0) {
                return Err(Error::InvalidDomain(format!("volume must be positive, got {volume}")));
            }
            let side = volume.powf(1.0 / dim as f64);
            let domain = DomainSpec::new(vec![side; dim], bc.parse()?)?;
            let nodes = nodes.map(|n| broadcast(n, dim, "node counts")).transpose()?;
            let opts = ClassifyOptions {
                with_levels,
                nodes,
                ..Default::default()
            };
            emit_json(&classify_regime(&params, &domain, &opts)?, out.as_deref())
        }
        Command::Verify { suite, out } => {
            let suite: Suite = suite.parse()?;
            emit(&verify_csv(&run_suite(suite)?)?, out.as_deref())
        }
        Command::Sweep { config, out } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Error::InvalidParams(format!("cannot read config {}: {e}", config.display())))?;
            let mut cfg: RunConfig = serde_json::from_str(&text)?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            let result = run_sweep(&cfg)?;
            if cfg.output_dir.is_none() {
                emit_json(&result, None)?;
            }
            Ok(())
        }
    }
}

/// 2 for bad input, 3 for everything that failed after the input was accepted.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidDomain(_)
        | Error::InvalidResolution(_)
        | Error::InvalidParams(_)
        | Error::Resolution(_)
        | Error::Dimension(_)
        | Error::Json(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
