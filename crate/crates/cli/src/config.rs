//! Run configuration: a TOML document whose every key is either present or taken
//! from [`defaults_toml`]. Unknown keys are rejected.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use nls_normalized::params::{check_single_exponent, Params};
use nls_normalized::solver::{SolverOptions, AUTO_NODES};
use nls_normalized::survey::{Axis, GridSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Oracle,
    Solve,
    Sweep,
    Threshold,
    Check,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Oracle => "oracle",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Threshold => "threshold",
            Command::Check => "check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        [Command::Oracle, Command::Solve, Command::Sweep, Command::Threshold, Command::Check]
            .into_iter()
            .find(|c| c.name() == s)
            .with_context(|| format!("unknown command {s:?}; expected oracle, solve, sweep, threshold or check"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Physical parameters as written in the file; validated per command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemTable {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for ProblemTable {
    fn default() -> Self {
        Self {
            dim: 3,
            p: 4.0,
            q: 4.0,
            mu1: 1.0,
            mu2: 1.0,
            beta: 1.0,
            a: 1.0,
            b: 1.0,
        }
    }
}

impl ProblemTable {
    fn params(&self) -> Result<Params> {
        let t = self;
        Ok(Params::new(t.dim, t.p, t.q, t.mu1, t.mu2, t.beta, t.a, t.b)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridTable {
    /// Absent: sized from the parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    pub n_nodes: usize,
}

impl Default for GridTable {
    fn default() -> Self {
        Self {
            r_max: None,
            n_nodes: AUTO_NODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputTable {
    /// Absent: csv for sweeps, json otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Absent: standard output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdTable {
    /// Energy estimate to use instead of the closed-form upper bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_estimate: Option<f64>,
    /// Run the solver first and use its energy when it converges.
    pub solve: bool,
}

/// The document as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Overrides `solver.seed` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub problem: ProblemTable,
    pub grid: GridTable,
    pub solver: SolverOptions,
    pub sweep: SweepTable,
    pub output: OutputTable,
    pub threshold: ThresholdTable,
}

/// The defaults table, printed by `--show-defaults`.
pub fn defaults_toml() -> String {
    let raw = RawConfig {
        command: Some(Command::Solve),
        seed: Some(0),
        ..Default::default()
    };
    toml::to_string(&raw).expect("defaults serialize")
}

/// What a command needs from the physical parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    /// `oracle` only reads `N` and `p`.
    Scalar { dim: usize, p: f64 },
    Coupled(Params),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub problem: Problem,
    pub grid: GridSpec,
    pub solver: SolverOptions,
    pub sweep: Option<(Axis, Vec<f64>)>,
    pub format: Format,
    pub path: Option<PathBuf>,
    pub threshold: ThresholdTable,
}

impl RunConfig {
    pub fn params(&self) -> Option<&Params> {
        match &self.problem {
            Problem::Coupled(p) => Some(p),
            Problem::Scalar { .. } => None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

pub fn parse_raw(text: &str) -> Result<RawConfig> {
    // toml reports the line and column of syntax errors and the name of unknown keys
    toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))
}

pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    validate(parse_raw(text)?, overrides)
}

pub fn validate(raw: RawConfig, overrides: &Overrides) -> Result<RunConfig> {
    let command = overrides
        .command
        .or(raw.command)
        .context("no command given: set `command` in the configuration or pass one on the command line")?;
    let problem = match command {
        Command::Oracle => {
            let p = check_single_exponent(raw.problem.dim, raw.problem.p)?;
            Problem::Scalar {
                dim: raw.problem.dim,
                p,
            }
        }
        _ => Problem::Coupled(raw.problem.params()?),
    };

    let mut solver = raw.solver;
    if let Some(s) = raw.seed {
        solver.seed = s;
    }
    if let Some(s) = overrides.seed {
        solver.seed = s;
    }
    solver.validate()?;

    if let Some(r) = raw.grid.r_max {
        if !(r.is_finite() && r > 0.0) {
            bail!("grid.r_max must be positive and finite, got {r}");
        }
    }
    let grid = GridSpec {
        r_max: raw.grid.r_max,
        n_nodes: raw.grid.n_nodes,
    };

    let sweep = match command {
        Command::Sweep => {
            let axis = raw.sweep.axis.context("sweep.axis is required for the sweep command")?;
            let base = match &problem {
                Problem::Coupled(p) => *p,
                Problem::Scalar { .. } => unreachable!(),
            };
            for &v in &raw.sweep.values {
                axis.apply(&base, v)
                    .with_context(|| format!("sweep value {axis} = {v} is not admissible"))?;
            }
            Some((axis, raw.sweep.values))
        }
        _ => None,
    };

    if let Problem::Coupled(p) = &problem {
        match command {
            Command::Check if !(matches!(p.dim, 3 | 4) && p.doubly_critical()) => {
                bail!("check needs N = 3 or 4 and p = q = 2N/(N-2)")
            }
            Command::Threshold if !(matches!(p.dim, 3 | 4) && p.q_critical() && !p.p_critical()) => {
                bail!("threshold needs N = 3 or 4, q = 2N/(N-2) and p below it")
            }
            _ => {}
        }
    }

    let format = raw.output.format.unwrap_or(match command {
        Command::Sweep => Format::Csv,
        _ => Format::Json,
    });
    if format == Format::Csv && command != Command::Sweep {
        bail!("output.format = \"csv\" is only available for sweep");
    }

    Ok(RunConfig {
        command,
        problem,
        grid,
        solver,
        sweep,
        format,
        path: overrides.output.clone().or(raw.output.path),
        threshold: raw.threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "command = \"solve\"\n[problem]\nN = 3\np = 4\nq = 4\nmu1 = 1\nmu2 = 1\nbeta = 1\na = 1\nb = 1\n";

    #[test]
    fn minimal_solve_gets_defaults() {
        let c = parse_config(MINIMAL, &Overrides::default()).unwrap();
        assert_eq!(c.command, Command::Solve);
        assert_eq!(c.solver, SolverOptions::default());
        assert_eq!(c.format, Format::Json);
        assert_eq!(c.grid, GridSpec::default());
    }

    #[test]
    fn subcritical_exponent_rejected_by_name() {
        let text = MINIMAL.replace("p = 4", "p = 3");
        let err = parse_config(&text, &Overrides::default()).unwrap_err();
        assert!(format!("{err:#}").contains("p must exceed 2 + 4/N"), "{err:#}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("beta = 1", "betta = 1");
        let err = parse_config(&text, &Overrides::default()).unwrap_err();
        assert!(format!("{err:#}").contains("betta"), "{err:#}");
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_config("command = \"solve\"\n[problem\n", &Overrides::default()).unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
    }

    #[test]
    fn defaults_round_trip() {
        let raw = parse_raw(&defaults_toml()).unwrap();
        let c = validate(raw, &Overrides::default()).unwrap();
        assert_eq!(c.command, Command::Solve);
    }

    #[test]
    fn seed_precedence() {
        let text = format!("seed = 5\n{MINIMAL}\n[solver]\nseed = 3\n");
        let c = parse_config(&text, &Overrides::default()).unwrap();
        assert_eq!(c.solver.seed, 5);
        let o = Overrides {
            seed: Some(9),
            ..Default::default()
        };
        assert_eq!(parse_config(&text, &o).unwrap().solver.seed, 9);
    }

    #[test]
    fn oracle_reads_only_scalar_exponent() {
        let c = parse_config("command = \"oracle\"\n[problem]\nN = 1\np = 4\n", &Overrides::default()).unwrap();
        assert_eq!(c.problem, Problem::Scalar { dim: 1, p: 4.0 });
    }

    #[test]
    fn command_specific_checks() {
        let o = Overrides {
            command: Some(Command::Check),
            ..Default::default()
        };
        assert!(parse_config(MINIMAL, &o).is_err());
        let sweep = Overrides {
            command: Some(Command::Sweep),
            ..Default::default()
        };
        assert!(parse_config(MINIMAL, &sweep).is_err());
        let text = format!("{MINIMAL}[sweep]\naxis = \"p\"\nvalues = [4.0, 3.0]\n");
        assert!(parse_config(&text, &sweep).is_err());
        let text = format!("{MINIMAL}[output]\nformat = \"csv\"\n");
        assert!(parse_config(&text, &Overrides::default()).is_err());
    }
}
