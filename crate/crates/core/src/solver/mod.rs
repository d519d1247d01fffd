//! Ground states of the coupled system by descent on `phi = max_t J(t * (u, v))`
//! restricted to nonnegative radial pairs of prescribed masses.
//!
//! Each iteration keeps the iterate on the Pohozaev set (so `phi = J` there),
//! extracts the multipliers by testing the equations against `u` and `v`, and
//! takes a backtracked step along the tangential residual. The residual is
//! preconditioned with the tridiagonal operator `-Delta + c(r)`, which makes the
//! step size essentially independent of the grid and of the scale of `lambda`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::{FunctionalError, Norms, PairState};
use crate::grid::{abs_pow, sphere_area, GridError, RadialGrid};
use crate::oracle::{single_lambda, OracleError};
use crate::params::Params;

mod banded;
mod polish;

/// Nodes of the automatically sized solve grid.
pub const AUTO_NODES: usize = 4001;
/// Extent of the automatic grid, in decay lengths `1/sqrt(lambda)` of the
/// decoupled components.
pub const AUTO_DECAY_LENGTHS: f64 = 24.0;
/// Fallback grid when no component has a scalar ground state to size against.
pub const FALLBACK_R_MAX: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("beta = {0} < 0: the system has no positive ground state for repulsive coupling, search refused")]
    RepulsiveCoupling(f64),
    #[error("system solves need N >= 2 (radial compactness fails for N = 1)")]
    OneDimensional,
    #[error("grid dimension {grid} does not match N = {params}")]
    DimensionMismatch { grid: usize, params: usize },
    #[error("invalid solver option: {0}")]
    InvalidOptions(String),
    #[error("the nonexistence identity only applies when p = q = 2N/(N-2)")]
    Misuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub step0: f64,
    pub backtrack_factor: f64,
    /// Stopping tolerance on the scaled constrained gradient.
    pub tol_grad: f64,
    /// Scaled sup-norm PDE residual required for a converged status.
    pub tol_pde: f64,
    /// `|P| / |grad|^2` required for a converged status.
    pub tol_pohozaev: f64,
    pub seed: u64,
    /// A component whose `int |u|^p` drops below this has vanished.
    pub collapse_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            step0: 0.5,
            backtrack_factor: 0.5,
            tol_grad: 1e-6,
            tol_pde: 1e-6,
            tol_pohozaev: 1e-8,
            seed: 0,
            collapse_threshold: 1e-10,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidOptions(m.to_string()));
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.step0) {
            return bad("step0 must be positive");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(pos(self.tol_grad) && pos(self.tol_pde) && pos(self.tol_pohozaev)) {
            return bad("tolerances must be positive");
        }
        if !pos(self.collapse_threshold) {
            return bad("collapse_threshold must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord, Hash)]
pub enum Status {
    Converged,
    MaxIter,
    Collapsed,
    NoGroundState,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::MaxIter => "MaxIter",
            Status::Collapsed => "Collapsed",
            Status::NoGroundState => "NoGroundState",
        }
    }
}

/// Residual diagnostics of a candidate `(u, v, lambda1, lambda2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// Sup of the first equation's residual over the sup of its largest term.
    pub pde_u: f64,
    pub pde_v: f64,
    /// `max(pde_u, pde_v)`
    pub pde: f64,
    /// `|P(u, v)| / (|grad u|^2 + |grad v|^2)`
    pub pohozaev: f64,
    pub mass_error_u: f64,
    pub mass_error_v: f64,
    /// Relative gap in `K + lambda1 a + lambda2 b = mu1 |u|_p^p + mu2 |v|_q^q + 2 beta int uv`.
    pub nehari_gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub state: PairState,
    pub lambda1: f64,
    pub lambda2: f64,
    pub energy: f64,
    pub pohozaev_residual: f64,
    pub pde_residual: f64,
    pub iterations: usize,
    pub status: Status,
    /// The line search could not decrease `phi` any further before the
    /// tolerances were met.
    pub stalled: bool,
    /// Values of `phi` at the initial state and after every accepted step.
    pub phi_history: Vec<f64>,
}

/// Multipliers from testing each equation against its own component.
pub fn multipliers_from_norms(params: &Params, n: &Norms) -> (f64, f64) {
    let l1 = (params.mu1 * n.lp_u + params.beta * n.inner - n.kin_u) / params.a;
    let l2 = (params.mu2 * n.lq_v + params.beta * n.inner - n.kin_v) / params.b;
    (l1, l2)
}

pub fn multipliers(params: &Params, state: &PairState) -> Result<(f64, f64), SolverError> {
    Ok(multipliers_from_norms(params, &Norms::of(params, state)?))
}

/// The grid used when none is configured: [`AUTO_DECAY_LENGTHS`] decay lengths of
/// the most spread-out decoupled component with a scalar ground state.
pub fn auto_grid(params: &Params, n_nodes: usize) -> Result<RadialGrid, SolverError> {
    let mut lam = f64::INFINITY;
    if !params.p_critical() {
        lam = lam.min(single_lambda(params.mu1, params.p, params.a, params.dim)?);
    }
    if !params.q_critical() {
        lam = lam.min(single_lambda(params.mu2, params.q, params.b, params.dim)?);
    }
    let r_max = if lam.is_finite() {
        AUTO_DECAY_LENGTHS / lam.sqrt()
    } else {
        FALLBACK_R_MAX
    };
    Ok(RadialGrid::new(params.dim, r_max, n_nodes)?)
}

/// Gaussians `exp(-r^2 / (2 sigma^2))` with one width `sigma / (r_max / 20)` drawn
/// from the seed in `[0.5, 2]`, normalized to the masses. Sharing the width keeps
/// the flow inside the invariant subspace `u = v` on symmetric fixtures.
pub fn init_state(params: &Params, grid: &RadialGrid, seed: u64) -> Result<PairState, SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = rng.gen_range(0.5..=2.0) * grid.r_max() / 20.0;
    let f = grid.sample(|r| (-r * r / (2.0 * sigma * sigma)).exp())?;
    let u = grid.normalize_mass(&f, params.a)?;
    let v = grid.normalize_mass(&f, params.b)?;
    Ok(PairState::new(u, v)?)
}

fn check_inputs(params: &Params, grid: &RadialGrid) -> Result<(), SolverError> {
    if grid.dim() != params.dim {
        return Err(SolverError::DimensionMismatch {
            grid: grid.dim(),
            params: params.dim,
        });
    }
    if params.dim == 1 {
        return Err(SolverError::OneDimensional);
    }
    if params.beta < 0.0 {
        return Err(SolverError::RepulsiveCoupling(params.beta));
    }
    Ok(())
}

/// Window (accepted iterations) over which a relative decrease of `phi` below
/// [`STAGNATION`] counts as stagnation and triggers the Newton polish.
const STAGNATION_WINDOW: usize = 20;
const STAGNATION: f64 = 1e-12;
/// Iterations to wait before retrying a failed polish.
const POLISH_RETRY: usize = 500;
/// The polish aims this factor below the requested tolerance.
const POLISH_MARGIN: f64 = 1e-2;
/// Relative amount by which the polished energy may exceed the descent minimum.
/// The descent minimizes the quadrature energy while the polish solves the
/// Laplacian equations; the two discrete problems differ at the level of the
/// discretization error (largest at the zero-weight origin node for even `N`).
const POLISH_ENERGY_SLACK: f64 = 1e-6;

/// Above this `|ln t|` the projection dilates by interpolation.
const LINEAR_DILATION: f64 = 1e-2;

/// Working buffers for one descent run.
struct Work {
    params: Params,
    grid: RadialGrid,
    scratch: Vec<f64>,
    lap: Vec<f64>,
    /// flux weights `omega r_{i+1/2}^{N-1} / h` of the preconditioner
    flux: Vec<f64>,
}

struct Projected {
    u: Vec<f64>,
    v: Vec<f64>,
    norms: Norms,
    /// product of the applied dilation factors
    dilation: f64,
}

impl Work {
    fn new(params: Params, grid: RadialGrid) -> Self {
        let n = grid.len();
        let h = grid.spacing();
        let omega = sphere_area(grid.dim());
        let flux = (0..n)
            .map(|i| omega * ((i as f64 + 0.5) * h).powi(grid.dim() as i32 - 1) / h)
            .collect();
        Self {
            params,
            grid,
            scratch: vec![0.0; n],
            lap: vec![0.0; n],
            flux,
        }
    }

    fn norms(&mut self, u: &[f64], v: &[f64]) -> Norms {
        Norms::from_slices(&self.params, &self.grid, u, v, &mut self.scratch)
    }

    fn renormalize(&self, f: &mut [f64], mass: f64) -> bool {
        let m = self.grid.quad_product(f, f);
        if !(m > 0.0 && m.is_finite()) {
            return false;
        }
        let c = (mass / m).sqrt();
        f.iter_mut().for_each(|x| *x *= c);
        true
    }

    /// `f + s (r f' + N f / 2)`: the dilation by `e^s` to first order, free of
    /// interpolation error.
    fn infinitesimal_dilation(&mut self, f: &[f64], s: f64) -> Vec<f64> {
        self.grid.derivative_into(f, &mut self.scratch);
        let half_n = 0.5 * self.grid.dim() as f64;
        f.iter()
            .zip(&self.scratch)
            .zip(self.grid.nodes())
            .map(|((&x, &dx), &r)| (x + s * (r * dx + half_n * x)).max(0.0))
            .collect()
    }

    /// Dilate onto the Pohozaev set and restore the masses. Large factors go through
    /// the interpolating dilation; the final corrections use the generator of the
    /// dilation group, whose error is second order in `ln t` rather than tied to
    /// the grid spacing.
    fn project(&mut self, mut u: Vec<f64>, mut v: Vec<f64>, tol: f64) -> Result<Projected, SolverError> {
        let mut norms = self.norms(&u, &v);
        let mut dilation = 1.0;
        for _ in 0..25 {
            let fiber = norms.fiber(&self.params);
            if fiber.pohozaev_at(1.0).abs() <= tol * fiber.kinetic {
                break;
            }
            let t = fiber.maximizer()?;
            dilation *= t;
            let s = t.ln();
            if s.abs() > LINEAR_DILATION {
                u = self.grid.dilate_slice(&u, t);
                v = self.grid.dilate_slice(&v, t);
            } else {
                u = self.infinitesimal_dilation(&u, s);
                v = self.infinitesimal_dilation(&v, s);
            }
            if !(self.renormalize(&mut u, self.params.a) && self.renormalize(&mut v, self.params.b)) {
                return Err(GridError::ZeroMass.into());
            }
            norms = self.norms(&u, &v);
            if !(t.is_finite()) || !(1e-8..=1e8).contains(&dilation) {
                break;
            }
        }
        Ok(Projected {
            u,
            v,
            norms,
            dilation,
        })
    }

    /// Partial derivatives of the discrete `J` with respect to the nodal values of `u`.
    fn energy_partials(&mut self, u: &[f64], other: &[f64], mu: f64, p: f64) -> Vec<f64> {
        let w = self.grid.weights();
        let mut out = vec![0.0; u.len()];
        self.grid.kinetic_gradient_into(u, &mut out);
        let beta = self.params.beta;
        for i in 0..u.len() {
            out[i] -= w[i] * (mu * abs_pow(u[i], p - 1.0) * u[i].signum() + beta * other[i]);
        }
        out
    }

    /// `g = -Delta u + lambda u - mu |u|^{p-2} u - beta v` and its scaled sup norm.
    fn residual(&mut self, u: &[f64], other: &[f64], lambda: f64, mu: f64, p: f64, g: &mut [f64]) -> f64 {
        self.grid.laplacian_into(u, &mut self.lap);
        let beta = self.params.beta;
        let (mut worst, mut scale) = (0.0f64, 0.0f64);
        for i in 0..u.len() {
            let nl = mu * abs_pow(u[i], p - 1.0) * u[i].signum();
            let terms = [-self.lap[i], lambda * u[i], -nl, -beta * other[i]];
            g[i] = terms.iter().sum();
            worst = worst.max(g[i].abs());
            for t in terms {
                scale = scale.max(t.abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            f64::INFINITY
        }
    }

    /// Solve `(A + diag(cv_weights * c)) x = rhs`, where `A` is the finite-volume
    /// form of `-Delta` with a homogeneous Dirichlet value just past `r_max`.
    fn precondition(&self, c: &[f64], rhs: &[f64], out: &mut [f64]) {
        let n = rhs.len();
        let w = self.grid.cv_weights();
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for i in 0..n {
            let left = if i > 0 { self.flux[i - 1] } else { 0.0 };
            diag[i] = left + self.flux[i] + w[i] * c[i];
            sup[i] = -self.flux[i];
        }
        // Thomas algorithm on the symmetric tridiagonal system.
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = sup[0] / diag[0];
        dp[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - sup[i - 1] * cp[i - 1];
            cp[i] = sup[i] / m;
            dp[i] = (rhs[i] + self.flux[i - 1] * dp[i - 1]) / m;
        }
        out[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            out[i] = dp[i] - cp[i] * out[i + 1];
        }
    }

    /// Preconditioned gradient of the discrete energy, projected onto the tangent
    /// space of the mass sphere. The partials are used rather than the PDE residual
    /// so that the direction is a descent direction of exactly the functional the
    /// line search measures.
    #[allow(clippy::too_many_arguments)]
    fn direction(&mut self, u: &[f64], other: &[f64], lambda: f64, mu: f64, p: f64, kin: f64, mass: f64) -> Vec<f64> {
        let n = u.len();
        let floor = 0.1 * kin / mass;
        let c: Vec<f64> = u
            .iter()
            .map(|&x| lambda.max(floor) + (p - 1.0) * mu * abs_pow(x, p - 2.0))
            .collect();
        let rhs_g = self.energy_partials(u, other, mu, p);
        let w = self.grid.weights();
        let rhs_u: Vec<f64> = (0..n).map(|i| w[i] * u[i]).collect();
        let mut y = vec![0.0; n];
        let mut z = vec![0.0; n];
        self.precondition(&c, &rhs_g, &mut y);
        self.precondition(&c, &rhs_u, &mut z);
        let uy = self.grid.quad_product(u, &y);
        let uz = self.grid.quad_product(u, &z);
        let alpha = if uz != 0.0 { uy / uz } else { 0.0 };
        y.iter_mut().zip(&z).for_each(|(a, b)| *a -= alpha * b);
        y
    }
}

/// Concentration length `sqrt(mass / kinetic)`.
fn width(mass: f64, kin: f64) -> f64 {
    (mass / kin).sqrt()
}

pub fn residuals(params: &Params, state: &PairState, lambda1: f64, lambda2: f64) -> Result<Residuals, SolverError> {
    check_inputs(params, state.grid())?;
    let mut work = Work::new(*params, state.grid().clone());
    let (u, v) = (state.u.values(), state.v.values());
    let norms = work.norms(u, v);
    let mut g = vec![0.0; u.len()];
    let pde_u = work.residual(u, v, lambda1, params.mu1, params.p, &mut g);
    let pde_v = work.residual(v, u, lambda2, params.mu2, params.q, &mut g);
    let fiber = norms.fiber(params);
    let lhs = norms.kinetic() + lambda1 * params.a + lambda2 * params.b;
    let rhs = params.mu1 * norms.lp_u + params.mu2 * norms.lq_v + 2.0 * params.beta * norms.inner;
    Ok(Residuals {
        pde_u,
        pde_v,
        pde: pde_u.max(pde_v),
        pohozaev: fiber.pohozaev_at(1.0).abs() / fiber.kinetic,
        mass_error_u: (norms.mass_u / params.a - 1.0).abs(),
        mass_error_v: (norms.mass_v / params.b - 1.0).abs(),
        nehari_gap: (lhs - rhs).abs() / lhs.abs().max(rhs.abs()),
    })
}

/// Dilate a pair onto the Pohozaev set, keeping its masses.
pub fn project_pohozaev(params: &Params, state: &PairState, tol: f64) -> Result<PairState, SolverError> {
    check_inputs(params, state.grid())?;
    let grid = state.grid().clone();
    let mut work = Work::new(*params, grid.clone());
    let pr = work.project(state.u.values().to_vec(), state.v.values().to_vec(), tol)?;
    Ok(PairState::new(grid.field(pr.u)?, grid.field(pr.v)?)?)
}

/// Run the descent from the seeded initial state.
pub fn descend(params: &Params, grid: &RadialGrid, opts: &SolverOptions) -> Result<SolveResult, SolverError> {
    check_inputs(params, grid)?;
    let init = init_state(params, grid, opts.seed)?;
    descend_from(params, init, opts)
}

/// Run the descent from a caller-supplied state.
pub fn descend_from(params: &Params, init: PairState, opts: &SolverOptions) -> Result<SolveResult, SolverError> {
    opts.validate()?;
    let grid = init.grid().clone();
    check_inputs(params, &grid)?;
    let n = grid.len();
    let h = grid.spacing();
    let mut work = Work::new(*params, grid.clone());
    // Project well below the reporting tolerance so it never limits convergence.
    let proj_tol = 1e-3 * opts.tol_pohozaev;

    let mut u = init.u.into_values();
    let mut v = init.v.into_values();
    if !(work.renormalize(&mut u, params.a) && work.renormalize(&mut v, params.b)) {
        return Err(GridError::ZeroMass.into());
    }
    let mut cur = work.project(u, v, proj_tol)?;
    let mut total_dilation = cur.dilation;
    let mut phi = cur.norms.fiber(params).value(1.0);
    let mut history = vec![phi];
    let mut tau = opts.step0;
    let tau_max = 4.0 * opts.step0;
    let mut gu = vec![0.0; n];
    let mut gv = vec![0.0; n];
    let mut iterations = 0;
    let mut stalled = false;
    let mut collapsed = false;
    let mut polished = false;
    let mut next_polish = 0;
    let mut pde;
    let (mut l1, mut l2);

    loop {
        (l1, l2) = multipliers_from_norms(params, &cur.norms);
        let ru = work.residual(&cur.u, &cur.v, l1, params.mu1, params.p, &mut gu);
        let rv = work.residual(&cur.v, &cur.u, l2, params.mu2, params.q, &mut gv);
        pde = ru.max(rv);

        let nm = &cur.norms;
        if is_collapsed(params, opts, nm, total_dilation, h) {
            collapsed = true;
            break;
        }
        if pde <= opts.tol_grad || iterations >= opts.max_iter {
            break;
        }
        let k = history.len();
        let stagnant = k > STAGNATION_WINDOW && history[k - 1 - STAGNATION_WINDOW] - history[k - 1] <= STAGNATION * phi.abs();
        if stagnant && iterations >= next_polish {
            // a polished iterate can still miss the tolerance once the multipliers
            // are recomputed from its norms; descent resumes before the next try
            next_polish = iterations + POLISH_RETRY;
            if let Some(done) = try_polish(&mut work, &cur, phi, l1, l2, opts)? {
                (cur, phi) = done;
                polished = true;
                continue;
            }
        }

        let du = work.direction(&cur.u, &cur.v, l1, params.mu1, params.p, nm.kin_u, params.a);
        let dv = work.direction(&cur.v, &cur.u, l2, params.mu2, params.q, nm.kin_v, params.b);
        let mut accepted = None;
        while tau >= 1e-12 {
            let mut un: Vec<f64> = cur.u.iter().zip(&du).map(|(x, d)| (x - tau * d).max(0.0)).collect();
            let mut vn: Vec<f64> = cur.v.iter().zip(&dv).map(|(x, d)| (x - tau * d).max(0.0)).collect();
            if work.renormalize(&mut un, params.a) && work.renormalize(&mut vn, params.b) {
                if let Ok(trial) = work.project(un, vn, proj_tol) {
                    let val = trial.norms.fiber(params).value(1.0);
                    if val <= phi {
                        accepted = Some((trial, val));
                        break;
                    }
                }
            }
            tau *= opts.backtrack_factor;
        }
        iterations += 1;
        match accepted {
            Some((trial, val)) => {
                total_dilation *= trial.dilation;
                cur = trial;
                phi = val;
                history.push(phi);
                tau = (tau * 1.5).min(tau_max);
            }
            None => {
                stalled = true;
                break;
            }
        }
    }
    if !collapsed && !polished && pde > opts.tol_grad {
        if let Some(done) = try_polish(&mut work, &cur, phi, l1, l2, opts)? {
            (cur, phi) = done;
            (l1, l2) = multipliers_from_norms(params, &cur.norms);
            let ru = work.residual(&cur.u, &cur.v, l1, params.mu1, params.p, &mut gu);
            let rv = work.residual(&cur.v, &cur.u, l2, params.mu2, params.q, &mut gv);
            pde = ru.max(rv);
        }
    }

    let fiber = cur.norms.fiber(params);
    let pohozaev_residual = fiber.pohozaev_at(1.0).abs() / fiber.kinetic;
    let interior_positive = cur.u[..n - 1].iter().all(|&x| x > 0.0) && cur.v[..n - 1].iter().all(|&x| x > 0.0);
    let converged = !collapsed
        && pde <= opts.tol_pde
        && pde <= opts.tol_grad
        && pohozaev_residual <= opts.tol_pohozaev
        && l1 > 0.0
        && l2 > 0.0
        && interior_positive;

    let state = PairState::new(grid.field(cur.u)?, grid.field(cur.v)?)?;
    let mut result = SolveResult {
        state,
        lambda1: l1,
        lambda2: l2,
        energy: phi,
        pohozaev_residual,
        pde_residual: pde,
        iterations,
        status: if collapsed {
            Status::Collapsed
        } else if converged {
            Status::Converged
        } else {
            Status::MaxIter
        },
        stalled,
        phi_history: history,
    };
    if params.doubly_critical() && result.status != Status::Collapsed {
        // No positive solution exists; whatever the flow produced is a candidate
        // to be ruled out, never a ground state.
        let report = check_nonexistence_identity(&result, params)?;
        result.status = if report.excluded {
            Status::NoGroundState
        } else {
            Status::MaxIter
        };
    }
    Ok(result)
}

/// Newton polish of a stagnated iterate. The result replaces the iterate only if
/// it is positive, reaches the tolerances and does not raise `phi` by more than
/// [`POLISH_ENERGY_SLACK`]; it is never entered into the descent history.
fn try_polish(
    work: &mut Work,
    cur: &Projected,
    phi: f64,
    l1: f64,
    l2: f64,
    opts: &SolverOptions,
) -> Result<Option<(Projected, f64)>, SolverError> {
    let target = POLISH_MARGIN * opts.tol_grad.min(opts.tol_pde);
    let Some(pol) = work.polish(&cur.u, &cur.v, l1, l2, target) else {
        return Ok(None);
    };
    let n = pol.u.len();
    if !(pol.u[..n - 1].iter().all(|&x| x > 0.0) && pol.v[..n - 1].iter().all(|&x| x > 0.0)) {
        return Ok(None);
    }
    let norms = work.norms(&pol.u, &pol.v);
    let val = norms.fiber(&work.params).max_value()?;
    if val > phi + POLISH_ENERGY_SLACK * phi.abs() {
        return Ok(None);
    }
    Ok(Some((
        Projected {
            u: pol.u,
            v: pol.v,
            norms,
            dilation: 1.0,
        },
        val,
    )))
}

fn is_collapsed(params: &Params, opts: &SolverOptions, n: &Norms, dilation: f64, h: f64) -> bool {
    let vanished = params.mu1 * n.lp_u < opts.collapse_threshold || params.mu2 * n.lq_v < opts.collapse_threshold;
    let runaway = !(1e-6..=1e6).contains(&dilation);
    // Concentration below what the grid can represent is the finite-grid form
    // of an unbounded dilation.
    let unresolved = width(n.mass_u, n.kin_u).min(width(n.mass_v, n.kin_v)) < 2.0 * h;
    vanished || runaway || unresolved
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// `lambda1 a + lambda2 b` exceeds `2 beta sqrt(ab)`: the identity itself fails.
    Contradiction,
    /// Both sides agree within tolerance (Cauchy-Schwarz saturated).
    Boundary,
    /// The identity holds, which forces `beta >= sqrt(lambda1 lambda2)` (or a
    /// non-positive multiplier); either way the Liouville argument rules out a
    /// positive solution.
    LiouvilleExcluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonexistenceReport {
    /// `lambda1 a + lambda2 b`
    pub lhs: f64,
    /// `2 beta sqrt(ab)`
    pub rhs: f64,
    /// `2 beta int uv`
    pub coupling: f64,
    pub tol: f64,
    pub verdict: Verdict,
    /// `beta >= sqrt(lambda1 lambda2)`, or a multiplier is non-positive.
    pub liouville_forced: bool,
    /// The candidate cannot be a positive solution.
    pub excluded: bool,
}

/// Evaluate `lambda1 a + lambda2 b = 2 beta int uv <= 2 beta sqrt(ab)` on a
/// candidate of the doubly critical system.
pub fn check_nonexistence_identity(result: &SolveResult, params: &Params) -> Result<NonexistenceReport, SolverError> {
    if !params.doubly_critical() {
        return Err(SolverError::Misuse);
    }
    let (l1, l2) = (result.lambda1, result.lambda2);
    let lhs = l1 * params.a + l2 * params.b;
    let rhs = 2.0 * params.beta * (params.a * params.b).sqrt();
    let g = result.state.grid();
    let coupling = 2.0 * params.beta * g.quad_product(result.state.u.values(), result.state.v.values());
    let tol = 1e-8 * lhs.abs();
    let verdict = if lhs > rhs + tol {
        Verdict::Contradiction
    } else if (lhs - rhs).abs() <= tol {
        Verdict::Boundary
    } else {
        Verdict::LiouvilleExcluded
    };
    let liouville_forced = l1 <= 0.0 || l2 <= 0.0 || params.beta >= (l1 * l2).sqrt();
    let excluded = verdict == Verdict::Contradiction || liouville_forced || lhs <= rhs + tol;
    Ok(NonexistenceReport {
        lhs,
        rhs,
        coupling,
        tol,
        verdict,
        liouville_forced,
        excluded,
    })
}
