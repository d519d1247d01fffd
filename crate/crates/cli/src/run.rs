//! Command dispatch. Every command computes its whole artifact in memory first;
//! the caller writes it once at the end.

use anyhow::{Context, Result};
use nls_normalized::oracle::{gn_constant, ground_profile};
use nls_normalized::params::Params;
use nls_normalized::solver::{descend, NonexistenceReport, SolveResult, Status};
use nls_normalized::survey::{
    nonexistence_map, sweep, threshold_critical, write_csv, Axis, SweepConfig, SweepRecord, ThresholdReport,
};
use serde::Serialize;

use crate::config::{Command, Format, Problem, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_NONEXISTENCE: i32 = 3;

/// The artifact and the process exit code it implies.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub output: Vec<u8>,
    /// Printed to stderr, e.g. why the exit code is not zero.
    pub note: Option<String>,
}

#[derive(Serialize)]
struct OracleOut {
    command: &'static str,
    #[serde(rename = "N")]
    dim: usize,
    p: f64,
    w0: f64,
    l2_mass: f64,
    kinetic: f64,
    /// `(int w^p)^{1/p}`
    lp_norm: f64,
    gn_constant: f64,
    residual: f64,
}

#[derive(Serialize)]
struct GridOut {
    #[serde(rename = "N")]
    dim: usize,
    r_max: f64,
    n_nodes: usize,
}

#[derive(Serialize)]
struct StateOut<'a> {
    r: &'a [f64],
    u: &'a [f64],
    v: &'a [f64],
}

#[derive(Serialize)]
struct SolveOut<'a> {
    command: &'static str,
    params: Params,
    grid: GridOut,
    status: Status,
    energy: f64,
    lambda1: f64,
    lambda2: f64,
    pohozaev_residual: f64,
    pde_residual: f64,
    iterations: usize,
    stalled: bool,
    state: StateOut<'a>,
}

impl<'a> SolveOut<'a> {
    fn new(params: &Params, r: &'a SolveResult) -> Self {
        let g = r.state.grid();
        Self {
            command: "solve",
            params: *params,
            grid: GridOut {
                dim: g.dim(),
                r_max: g.r_max(),
                n_nodes: g.len(),
            },
            status: r.status,
            energy: r.energy,
            lambda1: r.lambda1,
            lambda2: r.lambda2,
            pohozaev_residual: r.pohozaev_residual,
            pde_residual: r.pde_residual,
            iterations: r.iterations,
            stalled: r.stalled,
            state: StateOut {
                r: g.nodes(),
                u: r.state.u.values(),
                v: r.state.v.values(),
            },
        }
    }
}

#[derive(Serialize)]
struct SolveSummary {
    status: Status,
    energy: f64,
    lambda1: f64,
    lambda2: f64,
    pde_residual: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct ThresholdOut {
    command: &'static str,
    params: Params,
    report: ThresholdReport,
    /// Present when `threshold.solve` asked for a solver run.
    #[serde(skip_serializing_if = "Option::is_none")]
    solve: Option<SolveSummary>,
}

#[derive(Serialize)]
struct CheckOut<'a> {
    command: &'static str,
    params: Params,
    /// `Error` when the run itself failed.
    status: &'static str,
    energy: f64,
    lambda1: f64,
    lambda2: f64,
    pde_residual: f64,
    iterations: usize,
    /// Absent when the multipliers are undefined.
    report: Option<NonexistenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct SweepOut<'a> {
    command: &'static str,
    axis: Axis,
    records: &'a [SweepRecord],
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn coupled(cfg: &RunConfig) -> Params {
    *cfg.params().expect("validated: coupled command carries Params")
}

pub fn run(cfg: &RunConfig, jobs: usize) -> Result<Outcome> {
    let ok = |output| Outcome {
        code: EXIT_OK,
        output,
        note: None,
    };
    match cfg.command {
        Command::Oracle => {
            let Problem::Scalar { dim, p } = cfg.problem else {
                unreachable!("validated: oracle carries a scalar problem")
            };
            let w = ground_profile(dim, p)?;
            let out = OracleOut {
                command: "oracle",
                dim,
                p,
                w0: w.w0(),
                l2_mass: w.mass,
                kinetic: w.kinetic,
                lp_norm: w.lp.powf(1.0 / p),
                gn_constant: gn_constant(dim, p)?,
                residual: w.residual(),
            };
            Ok(ok(json(&out)?))
        }
        Command::Solve => {
            let params = coupled(cfg);
            let grid = cfg.grid.build(&params)?;
            let r = descend(&params, &grid, &cfg.solver)?;
            let output = json(&SolveOut::new(&params, &r))?;
            Ok(match r.status {
                Status::Converged => ok(output),
                s => Outcome {
                    code: EXIT_NOT_CONVERGED,
                    output,
                    note: Some(format!("solver did not converge: {}", s.as_str())),
                },
            })
        }
        Command::Threshold => {
            let params = coupled(cfg);
            let mut estimate = cfg.threshold.m_estimate;
            let mut solve = None;
            if cfg.threshold.solve {
                let grid = cfg.grid.build(&params)?;
                let r = descend(&params, &grid, &cfg.solver)?;
                if r.status == Status::Converged {
                    estimate = Some(r.energy);
                }
                solve = Some(SolveSummary {
                    status: r.status,
                    energy: r.energy,
                    lambda1: r.lambda1,
                    lambda2: r.lambda2,
                    pde_residual: r.pde_residual,
                    iterations: r.iterations,
                });
            }
            let report = threshold_critical(&params, estimate)?;
            Ok(ok(json(&ThresholdOut {
                command: "threshold",
                params,
                report,
                solve,
            })?))
        }
        Command::Check => {
            let params = coupled(cfg);
            let scfg = SweepConfig {
                grid: cfg.grid,
                jobs: 1,
                wall_time: false,
            };
            let records = nonexistence_map(&params, &[params.beta], &cfg.solver, &scfg)?;
            let rec = records.into_iter().next().context("nonexistence map returned no record")?;
            let output = json(&CheckOut {
                command: "check",
                params,
                status: rec.status_str(),
                energy: rec.energy,
                lambda1: rec.lambda1,
                lambda2: rec.lambda2,
                pde_residual: rec.pde_residual,
                iterations: rec.iterations,
                report: rec.nonexistence,
                error: rec.error.as_deref(),
            })?;
            let (code, note) = match (rec.status, rec.nonexistence) {
                (None, _) => (EXIT_ERROR, format!("check run failed: {}", rec.error.unwrap_or_default())),
                (Some(Status::Converged), _) => (
                    EXIT_ERROR,
                    "solver converged on the doubly critical system, where no positive solution exists".into(),
                ),
                (Some(_), Some(rep)) if !rep.excluded => (
                    EXIT_ERROR,
                    "candidate is not excluded by the multiplier identity".into(),
                ),
                (Some(s), _) => (EXIT_NONEXISTENCE, format!("no ground state, as expected ({})", s.as_str())),
            };
            Ok(Outcome {
                code,
                output,
                note: Some(note),
            })
        }
        Command::Sweep => {
            let params = coupled(cfg);
            let (axis, values) = cfg.sweep.as_ref().expect("validated: sweep carries axis and values");
            let scfg = SweepConfig {
                grid: cfg.grid,
                jobs,
                wall_time: false,
            };
            let records = sweep(&params, *axis, values, &cfg.solver, &scfg)?;
            let output = match cfg.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_csv(&records, &mut buf)?;
                    buf
                }
                Format::Json => json(&SweepOut {
                    command: "sweep",
                    axis: *axis,
                    records: &records,
                })?,
            };
            Ok(ok(output))
        }
    }
}
