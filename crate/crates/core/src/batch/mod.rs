//! Batch driver: run configurations, parameter sweeps and their persisted
//! outputs.

mod io;
pub mod verify;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descent::SolveOptions;
use crate::error::{Error, Result};
use crate::grid::{DomainSpec, Grid};
use crate::operators::SystemParams;
use crate::regimes::{auto_select_method, beta_underbar, classify_regime, ClassifyOptions, MethodChoice, RegimeReport};
use crate::scalar::solve_scalar;
use crate::system::{solve_system, Method, SolveReport};

pub use io::{dump_fields, dump_scalar_field, load_fields, sweep_csv, write_sweep, FieldSidecar};

/// `auto` or a fixed method tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodSelector {
    Auto,
    Fixed(Method),
}

impl FromStr for MethodSelector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            Ok(MethodSelector::Auto)
        } else {
            s.parse().map(MethodSelector::Fixed)
        }
    }
}

impl TryFrom<String> for MethodSelector {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodSelector> for String {
    fn from(m: MethodSelector) -> String {
        m.to_string()
    }
}

impl fmt::Display for MethodSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSelector::Auto => f.write_str("auto"),
            MethodSelector::Fixed(m) => m.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub nodes: Vec<usize>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default = "auto")]
    pub method: MethodSelector,
    #[serde(default)]
    pub solve: SolveOptions,
    /// Directory for the JSON reports, the CSV summary and field dumps.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub dump_fields: bool,
    /// Adds a wall-time column to the CSV; off by default so reruns are
    /// byte-identical.
    #[serde(default)]
    pub timing: bool,
}

fn auto() -> MethodSelector {
    MethodSelector::Auto
}

impl RunConfig {
    pub fn single(domain: DomainSpec, nodes: Vec<usize>, params: SystemParams, method: MethodSelector) -> Self {
        RunConfig {
            domain,
            nodes,
            lambda1: vec![params.lambda1],
            lambda2: vec![params.lambda2],
            beta: vec![params.beta],
            method,
            solve: SolveOptions::default(),
            output_dir: None,
            dump_fields: false,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        DomainSpec::new(self.domain.side_lengths().to_vec(), self.domain.boundary())?;
        for (name, list) in [("lambda1", &self.lambda1), ("lambda2", &self.lambda2), ("beta", &self.beta)] {
            if list.is_empty() {
                return Err(Error::InvalidParams(format!("sweep list {name} is empty")));
            }
            if list.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParams(format!("sweep list {name} has non-finite entries")));
            }
        }
        if self.nodes.len() != self.domain.dimension() {
            return Err(Error::InvalidResolution(format!(
                "{} node counts for a {}-dimensional domain",
                self.nodes.len(),
                self.domain.dimension()
            )));
        }
        if self.dump_fields && self.output_dir.is_none() {
            return Err(Error::InvalidParams("field dumps need an output directory".into()));
        }
        Ok(())
    }

    /// Parameter tuples in sweep order, β varying fastest.
    pub fn tuples(&self) -> Result<Vec<SystemParams>> {
        let mut out = Vec::new();
        for &a in &self.lambda1 {
            for &b in &self.lambda2 {
                for &c in &self.beta {
                    out.push(SystemParams::new(a, b, c)?);
                }
            }
        }
        Ok(out)
    }
}

/// One sweep row. Failures stay in the table with their message.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub params: SystemParams,
    pub choice: Option<MethodChoice>,
    pub report: Option<SolveReport>,
    pub regime: Option<RegimeReport>,
    pub error: Option<String>,
    /// Seconds spent on the row; recorded only when timing is requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub domain: DomainSpec,
    pub nodes: Vec<usize>,
    pub seed: u64,
    pub solve: SolveOptions,
    pub version: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub provenance: Provenance,
    pub rows: Vec<SweepRow>,
}

/// Picks the method for one tuple; the weak-cooperation row needs `β̲` and
/// therefore the scalar levels.
pub fn choose_method(params: &SystemParams, grid: &std::sync::Arc<Grid>, opts: &SolveOptions) -> Result<MethodChoice> {
    let positive = params.lambda1 > 0.0 && params.lambda2 > 0.0;
    let underbar = if positive && params.beta > 0.0 && params.beta <= 1.0 {
        let l1 = solve_scalar(params.lambda1, grid, opts)?.level;
        let l2 = solve_scalar(params.lambda2, grid, opts)?.level;
        beta_underbar(l1, l2).ok()
    } else {
        None
    };
    Ok(auto_select_method(params, underbar))
}

fn run_row(params: SystemParams, grid: &std::sync::Arc<Grid>, config: &RunConfig) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        params,
        choice: None,
        report: None,
        regime: None,
        error: None,
        wall_time: None,
    };
    let result = (|| -> Result<()> {
        let choice = match config.method {
            MethodSelector::Auto => choose_method(&params, grid, &config.solve)?,
            MethodSelector::Fixed(m) => MethodChoice {
                method: m,
                clause: "fixed".into(),
                outside_theory: false,
            },
        };
        row.choice = Some(choice.clone());
        row.regime = Some(classify_regime(&params, &config.domain, &ClassifyOptions::default())?);
        let mut report = solve_system(&params, grid, choice.method, &config.solve)?;
        report.outside_theory |= choice.outside_theory;
        row.report = Some(report);
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    if config.timing {
        row.wall_time = Some(start.elapsed().as_secs_f64());
    }
    row
}

/// Runs every tuple on the global pool. Rows keep input order; per-tuple
/// failures are recorded, only infrastructure errors are returned.
pub fn run_sweep(config: &RunConfig) -> Result<SweepResult> {
    config.validate()?;
    let grid = Grid::new(config.domain.clone(), &config.nodes)?;
    let tuples = config.tuples()?;
    let rows: Vec<SweepRow> = tuples.into_par_iter().map(|p| run_row(p, &grid, config)).collect();
    let result = SweepResult {
        provenance: Provenance {
            domain: config.domain.clone(),
            nodes: config.nodes.clone(),
            seed: config.solve.seed,
            solve: config.solve.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        rows,
    };
    if let Some(dir) = &config.output_dir {
        write_sweep(&result, dir, config.timing, config.dump_fields)?;
    }
    Ok(result)
}
