//! Existence thresholds for the Sobolev-critical case, parameter sweeps and the
//! nonexistence map of the doubly critical system.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::RadialGrid;
use crate::oracle::{single_energy_closed_form, sobolev_constant, OracleError};
use crate::params::{Params, ParamsError};
use crate::solver::{
    auto_grid, check_nonexistence_identity, descend, NonexistenceReport, SolveResult, SolverError, SolverOptions,
    Status, AUTO_NODES,
};

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("threshold needs N = 3 or 4, q = 2N/(N-2) and p below it (got N = {dim}, p = {p}, q = {q})")]
    Criticality { dim: usize, p: f64, q: f64 },
    #[error("nonexistence map needs N = 3 or 4 and p = q = 2N/(N-2) (got N = {dim}, p = {p}, q = {q})")]
    NotDoublyCritical { dim: usize, p: f64, q: f64 },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Sufficient condition for a ground state when `q` is Sobolev critical:
/// `m(a, b) + beta sqrt(ab) < S^{N/2} / (N mu2^{N/2 - 1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// The closed-form version of the condition, with `m(a, b)` replaced by the
    /// scalar energy `m(a, 0)` that bounds it from above.
    pub sufficient_condition_holds: bool,
    /// `lhs` uses the closed form rather than a solver estimate.
    pub used_closed_form: bool,
}

/// `S^{N/2} / (N mu2^{N/2 - 1})`, the energy of the Aubin-Talenti level.
pub fn critical_level(dim: usize, mu2: f64) -> Result<f64, SurveyError> {
    let n = dim as f64;
    let s = sobolev_constant(dim)?;
    Ok(s.powf(0.5 * n) / (n * mu2.powf(0.5 * n - 1.0)))
}

pub fn threshold_critical(params: &Params, m_estimate: Option<f64>) -> Result<ThresholdReport, SurveyError> {
    if !(3..=4).contains(&params.dim) || !params.q_critical() || params.p_critical() {
        return Err(SurveyError::Criticality {
            dim: params.dim,
            p: params.p,
            q: params.q,
        });
    }
    let rhs = critical_level(params.dim, params.mu2)?;
    let coupling = params.beta * (params.a * params.b).sqrt();
    let closed = single_energy_closed_form(params.mu1, params.p, params.a, params.dim)? + coupling;
    let lhs = m_estimate.map_or(closed, |m| m + coupling);
    Ok(ThresholdReport {
        lhs,
        rhs,
        margin: rhs - lhs,
        sufficient_condition_holds: closed < rhs,
        used_closed_form: m_estimate.is_none(),
    })
}

/// A parameter that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    A,
    B,
    Beta,
    Mu1,
    Mu2,
    P,
    Q,
}

impl Axis {
    pub const ALL: [Axis; 7] = [Axis::A, Axis::B, Axis::Beta, Axis::Mu1, Axis::Mu2, Axis::P, Axis::Q];

    pub fn name(&self) -> &'static str {
        match self {
            Axis::A => "a",
            Axis::B => "b",
            Axis::Beta => "beta",
            Axis::Mu1 => "mu1",
            Axis::Mu2 => "mu2",
            Axis::P => "p",
            Axis::Q => "q",
        }
    }

    /// `base` with this parameter set to `value`, validated.
    pub fn apply(&self, base: &Params, value: f64) -> Result<Params, ParamsError> {
        let mut p = *base;
        match self {
            Axis::A => p.a = value,
            Axis::B => p.b = value,
            Axis::Beta => p.beta = value,
            Axis::Mu1 => p.mu1 = value,
            Axis::Mu2 => p.mu2 = value,
            Axis::P => p.p = value,
            Axis::Q => p.q = value,
        }
        p.validated()
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown sweep axis {0:?}; expected one of a, b, beta, mu1, mu2, p, q")]
pub struct UnknownAxis(pub String);

impl FromStr for Axis {
    type Err = UnknownAxis;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| UnknownAxis(s.to_string()))
    }
}

/// How each solve in a sweep picks its grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// `None` sizes the domain from the parameters (see [`auto_grid`]).
    pub r_max: Option<f64>,
    pub n_nodes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            r_max: None,
            n_nodes: AUTO_NODES,
        }
    }
}

impl GridSpec {
    pub fn build(&self, params: &Params) -> Result<RadialGrid, SolverError> {
        match self.r_max {
            Some(r) => Ok(RadialGrid::new(params.dim, r, self.n_nodes)?),
            None => auto_grid(params, self.n_nodes),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub grid: GridSpec,
    /// Worker threads; 0 lets the pool choose.
    pub jobs: usize,
    /// Record elapsed seconds per solve. Off by default because it makes the
    /// output depend on the machine.
    pub wall_time: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            jobs: 1,
            wall_time: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub axis: Axis,
    pub value: f64,
    pub params: Params,
    pub energy: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `None` when the solve returned an error, described in `error`.
    pub status: Option<Status>,
    pub pohozaev_residual: f64,
    pub pde_residual: f64,
    pub iterations: usize,
    pub threshold: Option<ThresholdReport>,
    pub nonexistence: Option<NonexistenceReport>,
    pub wall_time: Option<f64>,
    pub error: Option<String>,
}

impl SweepRecord {
    fn from_result(axis: Axis, value: f64, params: Params, r: &SolveResult) -> Self {
        Self {
            axis,
            value,
            params,
            energy: r.energy,
            lambda1: r.lambda1,
            lambda2: r.lambda2,
            status: Some(r.status),
            pohozaev_residual: r.pohozaev_residual,
            pde_residual: r.pde_residual,
            iterations: r.iterations,
            threshold: None,
            nonexistence: None,
            wall_time: None,
            error: None,
        }
    }

    fn failed(axis: Axis, value: f64, params: Params, err: &SurveyError) -> Self {
        Self {
            axis,
            value,
            params,
            energy: f64::NAN,
            lambda1: f64::NAN,
            lambda2: f64::NAN,
            status: None,
            pohozaev_residual: f64::NAN,
            pde_residual: f64::NAN,
            iterations: 0,
            threshold: None,
            nonexistence: None,
            wall_time: None,
            error: Some(err.to_string()),
        }
    }

    pub fn status_str(&self) -> &'static str {
        self.status.map_or("Error", |s| s.as_str())
    }
}

fn params_key(p: &Params) -> [f64; 8] {
    [p.dim as f64, p.p, p.q, p.mu1, p.mu2, p.beta, p.a, p.b]
}

/// Lexicographic order over `(N, p, q, mu1, mu2, beta, a, b)`, then axis value.
pub fn canonical_order(x: &SweepRecord, y: &SweepRecord) -> Ordering {
    params_key(&x.params)
        .iter()
        .zip(params_key(&y.params).iter())
        .map(|(a, b)| a.total_cmp(b))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .then(x.value.total_cmp(&y.value))
}

fn solve_one(
    axis: Axis,
    value: f64,
    params: Params,
    opts: &SolverOptions,
    cfg: &SweepConfig,
    critical_check: bool,
) -> SweepRecord {
    let start = Instant::now();
    let run = || -> Result<SweepRecord, SurveyError> {
        let grid = cfg.grid.build(&params)?;
        let result = descend(&params, &grid, opts)?;
        let mut rec = SweepRecord::from_result(axis, value, params, &result);
        if threshold_applies(&params) {
            let estimate = (result.status == Status::Converged).then_some(result.energy);
            rec.threshold = Some(threshold_critical(&params, estimate)?);
        }
        if critical_check && result.lambda1.is_finite() && result.lambda2.is_finite() {
            rec.nonexistence = Some(check_nonexistence_identity(&result, &params)?);
        }
        Ok(rec)
    };
    let mut rec = run().unwrap_or_else(|e| SweepRecord::failed(axis, value, params, &e));
    if cfg.wall_time {
        rec.wall_time = Some(start.elapsed().as_secs_f64());
    }
    rec
}

fn threshold_applies(p: &Params) -> bool {
    (3..=4).contains(&p.dim) && p.q_critical() && !p.p_critical()
}

fn run_pool(
    cfg: &SweepConfig,
    items: Vec<(Axis, f64, Params)>,
    opts: &SolverOptions,
    critical_check: bool,
) -> Result<Vec<SweepRecord>, SurveyError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| SurveyError::Pool(e.to_string()))?;
    let mut records: Vec<SweepRecord> = pool.install(|| {
        items
            .into_par_iter()
            .map(|(axis, value, params)| solve_one(axis, value, params, opts, cfg, critical_check))
            .collect()
    });
    records.sort_by(canonical_order);
    Ok(records)
}

/// One solve per value of `axis`. Every value is validated before any solve
/// starts; solver failures become records rather than errors.
pub fn sweep(
    base: &Params,
    axis: Axis,
    values: &[f64],
    opts: &SolverOptions,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRecord>, SurveyError> {
    opts.validate()?;
    let items = values
        .iter()
        .map(|&v| Ok((axis, v, axis.apply(base, v)?)))
        .collect::<Result<Vec<_>, ParamsError>>()?;
    run_pool(cfg, items, opts, false)
}

/// Solves of the doubly critical system over `betas`, each checked against the
/// multiplier identity. A `Converged` record would contradict the nonexistence
/// result; [`nonexistence_violations`] lists them.
pub fn nonexistence_map(
    base: &Params,
    betas: &[f64],
    opts: &SolverOptions,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRecord>, SurveyError> {
    if !(3..=4).contains(&base.dim) || !base.doubly_critical() {
        return Err(SurveyError::NotDoublyCritical {
            dim: base.dim,
            p: base.p,
            q: base.q,
        });
    }
    opts.validate()?;
    let items = betas
        .iter()
        .map(|&v| Ok((Axis::Beta, v, Axis::Beta.apply(base, v)?)))
        .collect::<Result<Vec<_>, ParamsError>>()?;
    run_pool(cfg, items, opts, true)
}

/// Records of a nonexistence map that report a ground state or whose candidate
/// passes the identity check.
pub fn nonexistence_violations(records: &[SweepRecord]) -> Vec<&SweepRecord> {
    records
        .iter()
        .filter(|r| r.status == Some(Status::Converged) || r.nonexistence.is_some_and(|n| !n.excluded))
        .collect()
}

pub const CSV_HEADER: &str =
    "axis,value,N,p,q,mu1,mu2,beta,a,b,energy,lambda1,lambda2,status,pohozaev_residual,pde_residual,iterations,wall_time";

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn write_csv<W: Write>(records: &[SweepRecord], mut out: W) -> io::Result<()> {
    out.write_all(CSV_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for r in records {
        let p = &r.params;
        let floats = [p.p, p.q, p.mu1, p.mu2, p.beta, p.a, p.b, r.energy, r.lambda1, r.lambda2];
        let mut line = format!("{},{},{}", r.axis, fmt_float(r.value), p.dim);
        for (k, x) in floats.iter().enumerate() {
            line.push(',');
            line.push_str(&fmt_float(*x));
            if k == floats.len() - 1 {
                line.push(',');
                line.push_str(r.status_str());
            }
        }
        line.push_str(&format!(
            ",{},{},{},{}\n",
            fmt_float(r.pohozaev_residual),
            fmt_float(r.pde_residual),
            r.iterations,
            r.wall_time.map(fmt_float).unwrap_or_default()
        ));
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}
