//! Energy, Pohozaev functional and the one-parameter fiber `t -> J(t * (u, v))`.
//!
//! Every scalar quantity that depends on the pair only through `|grad u|^2 + |grad v|^2`,
//! `int |u|^p`, `int |v|^q` and `int u v` is computed from a [`Norms`] snapshot, so the
//! solver can evaluate energy, Pohozaev value and fiber maximum from a single pass.

use thiserror::Error;

use crate::grid::{Field, GridError, RadialGrid};
use crate::params::{gamma_exponent, Params};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("u and v live on different grids")]
    PairGridMismatch,
    #[error("the fiber has no interior maximum (kinetic {kinetic}, nonlinear weights {a_term}, {b_term})")]
    NoFiberMaximum {
        kinetic: f64,
        a_term: f64,
        b_term: f64,
    },
    #[error("grid dimension {grid} does not match N = {params}")]
    DimensionMismatch { grid: usize, params: usize },
}

/// A pair `(u, v)` of radial fields on the same grid.
#[derive(Clone, Debug)]
pub struct PairState {
    pub u: Field,
    pub v: Field,
}

impl PairState {
    pub fn new(u: Field, v: Field) -> Result<Self, FunctionalError> {
        if !u.grid().same_as(v.grid()) {
            return Err(FunctionalError::PairGridMismatch);
        }
        Ok(Self { u, v })
    }

    pub fn grid(&self) -> &RadialGrid {
        self.u.grid()
    }

    pub fn masses(&self) -> (f64, f64) {
        let g = self.grid();
        (
            g.quad_product(self.u.values(), self.u.values()),
            g.quad_product(self.v.values(), self.v.values()),
        )
    }

    /// True when both masses match `(a, b)` to relative tolerance `tol`.
    pub fn on_sphere(&self, a: f64, b: f64, tol: f64) -> bool {
        let (ma, mb) = self.masses();
        (ma / a - 1.0).abs() <= tol && (mb / b - 1.0).abs() <= tol
    }
}

/// The integrals of a pair that enter every functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub kin_u: f64,
    pub kin_v: f64,
    /// `int |u|^p`
    pub lp_u: f64,
    /// `int |v|^q`
    pub lq_v: f64,
    /// `int u v`
    pub inner: f64,
    pub mass_u: f64,
    pub mass_v: f64,
}

impl Norms {
    pub fn from_slices(
        params: &Params,
        grid: &RadialGrid,
        u: &[f64],
        v: &[f64],
        scratch: &mut [f64],
    ) -> Self {
        let kin_u = grid.kinetic_slice(u, scratch);
        let kin_v = grid.kinetic_slice(v, scratch);
        let (mut lp_u, mut lq_v, mut inner, mut mass_u, mut mass_v) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((w, &x), &y) in grid.weights().iter().zip(u).zip(v) {
            lp_u += w * crate::grid::abs_pow(x, params.p);
            lq_v += w * crate::grid::abs_pow(y, params.q);
            inner += w * x * y;
            mass_u += w * x * x;
            mass_v += w * y * y;
        }
        Norms {
            kin_u,
            kin_v,
            lp_u,
            lq_v,
            inner,
            mass_u,
            mass_v,
        }
    }

    pub fn of(params: &Params, state: &PairState) -> Result<Self, FunctionalError> {
        let grid = state.grid();
        if grid.dim() != params.dim {
            return Err(FunctionalError::DimensionMismatch {
                grid: grid.dim(),
                params: params.dim,
            });
        }
        let mut scratch = vec![0.0; grid.len()];
        Ok(Self::from_slices(
            params,
            grid,
            state.u.values(),
            state.v.values(),
            &mut scratch,
        ))
    }

    pub fn kinetic(&self) -> f64 {
        self.kin_u + self.kin_v
    }

    pub fn fiber(&self, params: &Params) -> FiberCoefficients {
        FiberCoefficients {
            kinetic: self.kinetic(),
            a_term: params.mu1 / params.p * self.lp_u,
            b_term: params.mu2 / params.q * self.lq_v,
            coupling: params.beta * self.inner,
            exp_p: params.p * params.gamma_p(),
            exp_q: params.q * params.gamma_q(),
        }
    }
}

/// `h(t) = J(t * (u, v)) = t^2 K / 2 - A t^{e_p} - B t^{e_q} - L`, with
/// `e_p = p gamma_p`. The coupling term `L = beta int u v` is dilation invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberCoefficients {
    pub kinetic: f64,
    pub a_term: f64,
    pub b_term: f64,
    pub coupling: f64,
    pub exp_p: f64,
    pub exp_q: f64,
}

impl FiberCoefficients {
    pub fn value(&self, t: f64) -> f64 {
        0.5 * t * t * self.kinetic
            - self.a_term * t.powf(self.exp_p)
            - self.b_term * t.powf(self.exp_q)
            - self.coupling
    }

    pub fn derivative(&self, t: f64) -> f64 {
        t * self.kinetic
            - self.exp_p * self.a_term * t.powf(self.exp_p - 1.0)
            - self.exp_q * self.b_term * t.powf(self.exp_q - 1.0)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.kinetic
            - self.exp_p * (self.exp_p - 1.0) * self.a_term * t.powf(self.exp_p - 2.0)
            - self.exp_q * (self.exp_q - 1.0) * self.b_term * t.powf(self.exp_q - 2.0)
    }

    /// Pohozaev value of the dilated pair, `P(t * (u, v)) = t h'(t)`.
    pub fn pohozaev_at(&self, t: f64) -> f64 {
        t * self.derivative(t)
    }

    /// `G(s) = K - e_p A e^{(e_p - 2) s} - e_q B e^{(e_q - 2) s}`, so that
    /// `P(e^s * (u, v)) = e^{2 s} G(s)`. Strictly decreasing and concave.
    fn g(&self, s: f64) -> (f64, f64) {
        let tp = self.exp_p * self.a_term * ((self.exp_p - 2.0) * s).exp();
        let tq = self.exp_q * self.b_term * ((self.exp_q - 2.0) * s).exp();
        (
            self.kinetic - tp - tq,
            -(self.exp_p - 2.0) * tp - (self.exp_q - 2.0) * tq,
        )
    }

    /// The unique `t* > 0` with `h'(t*) = 0`; it is the global maximum of `h`.
    pub fn maximizer(&self) -> Result<f64, FunctionalError> {
        let fail = || FunctionalError::NoFiberMaximum {
            kinetic: self.kinetic,
            a_term: self.a_term,
            b_term: self.b_term,
        };
        let k = self.kinetic;
        if !(k > 0.0 && k.is_finite()) || !(self.a_term >= 0.0 && self.b_term >= 0.0) {
            return Err(fail());
        }
        let mut exps = Vec::with_capacity(2);
        if self.a_term > 0.0 {
            exps.push(self.exp_p);
        }
        if self.b_term > 0.0 {
            exps.push(self.exp_q);
        }
        if exps.is_empty() || exps.iter().any(|&e| !(e > 2.0)) {
            return Err(fail());
        }
        let e_min = exps.iter().cloned().fold(f64::INFINITY, f64::min);
        let e_max = exps.iter().cloned().fold(0.0, f64::max);
        // Start to the right of the root: there G <= 0, and Newton on a decreasing
        // concave function then converges monotonically from the right.
        let ratio = k / (self.exp_p * self.a_term + self.exp_q * self.b_term);
        let e0 = if ratio >= 1.0 { e_min } else { e_max };
        let mut s = ratio.ln() / (e0 - 2.0);
        let tol = 1e-14 * k;
        for _ in 0..200 {
            let (g, dg) = self.g(s);
            if !(g.is_finite() && dg.is_finite()) || dg >= 0.0 {
                break;
            }
            if g.abs() <= tol {
                return Ok(s.exp());
            }
            let step = g / dg;
            s -= step;
            if step.abs() <= 1e-15 * s.abs().max(1.0) {
                return Ok(s.exp());
            }
        }
        self.bisect().ok_or_else(fail)
    }

    fn bisect(&self) -> Option<f64> {
        let (mut lo, mut hi) = (-6.0 * std::f64::consts::LN_10, 6.0 * std::f64::consts::LN_10);
        while self.g(lo).0 < 0.0 {
            lo -= 10.0;
            if lo < -700.0 {
                return None;
            }
        }
        while self.g(hi).0 > 0.0 {
            hi += 10.0;
            if hi > 700.0 {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.g(mid).0 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Some((0.5 * (lo + hi)).exp())
    }

    /// `max_t h(t)`.
    pub fn max_value(&self) -> Result<f64, FunctionalError> {
        Ok(self.value(self.maximizer()?))
    }
}

pub fn energy(params: &Params, state: &PairState) -> Result<f64, FunctionalError> {
    Ok(Norms::of(params, state)?.fiber(params).value(1.0))
}

pub fn pohozaev(params: &Params, state: &PairState) -> Result<f64, FunctionalError> {
    Ok(Norms::of(params, state)?.fiber(params).pohozaev_at(1.0))
}

pub fn fiber_coefficients(
    params: &Params,
    state: &PairState,
) -> Result<FiberCoefficients, FunctionalError> {
    Ok(Norms::of(params, state)?.fiber(params))
}

pub fn fiber_maximizer(params: &Params, state: &PairState) -> Result<f64, FunctionalError> {
    fiber_coefficients(params, state)?.maximizer()
}

/// `phi(u, v) = max_t J(t * (u, v))`.
pub fn phi(params: &Params, state: &PairState) -> Result<f64, FunctionalError> {
    fiber_coefficients(params, state)?.max_value()
}

/// Scalar Pohozaev functional `|grad u|^2 - mu gamma_p |u|_p^p`.
pub fn single_pohozaev(mu: f64, p: f64, u: &Field) -> Result<f64, FunctionalError> {
    let g = u.grid();
    let k = g.kinetic(u)?;
    Ok(k - mu * gamma_exponent(p, g.dim()) * g.quad_abs_pow(u.values(), p))
}

/// Scalar energy `|grad u|^2 / 2 - mu |u|_p^p / p`.
pub fn single_energy(mu: f64, p: f64, u: &Field) -> Result<f64, FunctionalError> {
    let g = u.grid();
    let k = g.kinetic(u)?;
    Ok(0.5 * k - mu / p * g.quad_abs_pow(u.values(), p))
}
