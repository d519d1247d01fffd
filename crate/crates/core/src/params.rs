use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exponents within this distance of `2* = 2N/(N-2)` are snapped to it.
const CRITICAL_SNAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("N must be 1, 2, 3 or 4 (got {0})")]
    Dimension(usize),
    #[error("{name} must be a finite number (got {value})")]
    NotFinite { name: &'static str, value: f64 },
    #[error("{name} must exceed 2 + 4/N = {bound} (mass-supercritical range), got {value}")]
    NotSupercritical {
        name: &'static str,
        value: f64,
        bound: f64,
    },
    #[error("{name} must not exceed the Sobolev exponent 2N/(N-2) = {bound} (got {value})")]
    AboveSobolev {
        name: &'static str,
        value: f64,
        bound: f64,
    },
    #[error("{name} must exceed 2 (got {value})")]
    NotAboveTwo { name: &'static str, value: f64 },
    #[error("{name} must be strictly below the Sobolev exponent 2N/(N-2) = {bound} (got {value})")]
    NotSubcritical {
        name: &'static str,
        value: f64,
        bound: f64,
    },
    #[error("{name} must be positive (got {value})")]
    NotPositive { name: &'static str, value: f64 },
}

/// `2* = 2N/(N-2)`, infinite for `N <= 2`.
pub fn sobolev_exponent(dim: usize) -> f64 {
    if dim <= 2 {
        f64::INFINITY
    } else {
        2.0 * dim as f64 / (dim as f64 - 2.0)
    }
}

/// `gamma_p = N (p - 2) / (2 p)`, the exponent in the Gagliardo-Nirenberg inequality.
pub fn gamma_exponent(p: f64, dim: usize) -> f64 {
    dim as f64 * (p - 2.0) / (2.0 * p)
}

fn finite(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ParamsError::NotFinite { name, value })
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    if finite(name, value)? > 0.0 {
        Ok(value)
    } else {
        Err(ParamsError::NotPositive { name, value })
    }
}

fn snap(dim: usize, value: f64) -> f64 {
    let crit = sobolev_exponent(dim);
    if crit.is_finite() && (value - crit).abs() <= CRITICAL_SNAP {
        crit
    } else {
        value
    }
}

fn check_dim(dim: usize) -> Result<(), ParamsError> {
    if (1..=4).contains(&dim) {
        Ok(())
    } else {
        Err(ParamsError::Dimension(dim))
    }
}

/// Check `2 + 4/N < p <= 2*` and return `p`, snapped to `2*` if within rounding.
pub fn check_coupled_exponent(name: &'static str, dim: usize, p: f64) -> Result<f64, ParamsError> {
    check_dim(dim)?;
    let p = snap(dim, finite(name, p)?);
    let lower = 2.0 + 4.0 / dim as f64;
    if p <= lower {
        return Err(ParamsError::NotSupercritical {
            name,
            value: p,
            bound: lower,
        });
    }
    let upper = sobolev_exponent(dim);
    if p > upper {
        return Err(ParamsError::AboveSobolev {
            name,
            value: p,
            bound: upper,
        });
    }
    Ok(p)
}

/// Check `2 < p < 2*`, the range where the scalar ground state exists.
pub fn check_single_exponent(dim: usize, p: f64) -> Result<f64, ParamsError> {
    check_dim(dim)?;
    let p = finite("p", p)?;
    if p <= 2.0 {
        return Err(ParamsError::NotAboveTwo { name: "p", value: p });
    }
    let upper = sobolev_exponent(dim);
    if p >= upper - CRITICAL_SNAP {
        return Err(ParamsError::NotSubcritical {
            name: "p",
            value: p,
            bound: upper,
        });
    }
    Ok(p)
}

/// Physical parameters of the coupled problem. Construct through [`Params::new`]
/// (or [`Params::validated`] after deserializing) so the ranges are enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
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

impl Params {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dim: usize,
        p: f64,
        q: f64,
        mu1: f64,
        mu2: f64,
        beta: f64,
        a: f64,
        b: f64,
    ) -> Result<Self, ParamsError> {
        Params {
            dim,
            p,
            q,
            mu1,
            mu2,
            beta,
            a,
            b,
        }
        .validated()
    }

    /// Symmetric fixture with equal exponents, couplings and masses.
    pub fn symmetric(dim: usize, p: f64, mu: f64, beta: f64, a: f64) -> Result<Self, ParamsError> {
        Self::new(dim, p, p, mu, mu, beta, a, a)
    }

    pub fn validated(self) -> Result<Self, ParamsError> {
        let p = check_coupled_exponent("p", self.dim, self.p)?;
        let q = check_coupled_exponent("q", self.dim, self.q)?;
        Ok(Params {
            dim: self.dim,
            p,
            q,
            mu1: positive("mu1", self.mu1)?,
            mu2: positive("mu2", self.mu2)?,
            beta: finite("beta", self.beta)?,
            a: positive("a", self.a)?,
            b: positive("b", self.b)?,
        })
    }

    pub fn gamma_p(&self) -> f64 {
        gamma_exponent(self.p, self.dim)
    }
    pub fn gamma_q(&self) -> f64 {
        gamma_exponent(self.q, self.dim)
    }
    pub fn p_critical(&self) -> bool {
        self.p == sobolev_exponent(self.dim)
    }
    pub fn q_critical(&self) -> bool {
        self.q == sobolev_exponent(self.dim)
    }
    pub fn doubly_critical(&self) -> bool {
        self.p_critical() && self.q_critical()
    }
    pub fn with_beta(&self, beta: f64) -> Self {
        Params { beta, ..*self }
    }
}
