//! Best constant `S` in `S |u|_{2*}^2 <= |grad u|^2`, obtained as the Rayleigh
//! quotient of the Aubin-Talenti bubble `U(r) = (1 + r^2)^{-(N-2)/2}`.

use std::f64::consts::PI;

use crate::grid::{sphere_area, RadialGrid};
use crate::params::sobolev_exponent;

use super::OracleError;

const DOMAIN: f64 = 1000.0;
const NODES: usize = 200_001;

/// `Gamma(k/2)` for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    let (mut x, mut g) = if k % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while 2.0 * x < k as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// `N (N - 2) pi (Gamma(N/2) / Gamma(N))^{2/N}`.
pub fn sobolev_closed_form(dim: usize) -> Result<f64, OracleError> {
    if !(3..=4).contains(&dim) {
        return Err(OracleError::NoSobolevConstant(dim));
    }
    let n = dim as f64;
    Ok(n * (n - 2.0) * PI * (gamma_half(dim) / gamma_half(2 * dim)).powf(2.0 / n))
}

/// `binom(-N, k)` for k = 0, 1, ...
fn neg_binomials(dim: usize) -> impl Iterator<Item = f64> {
    let n = dim as f64;
    (0..40usize).scan(1.0, move |c, k| {
        let out = *c;
        *c *= -(n + k as f64) / (k as f64 + 1.0);
        Some(out)
    })
}

/// `int_R^inf (N-2)^2 r^{N+1} (1 + r^2)^{-N} dr` and `int_R^inf r^{N-1} (1 + r^2)^{-N} dr`
/// from the expansion of `(1 + r^{-2})^{-N}`, valid for `R > 1`.
fn tails(dim: usize, r: f64) -> (f64, f64) {
    let n = dim as f64;
    let mut kin = 0.0;
    let mut crit = 0.0;
    for (k, c) in neg_binomials(dim).enumerate() {
        let k = k as f64;
        kin += c * r.powf(2.0 - n - 2.0 * k) / (n - 2.0 + 2.0 * k);
        crit += c * r.powf(-n - 2.0 * k) / (n + 2.0 * k);
    }
    ((n - 2.0).powi(2) * kin, crit)
}

/// Rayleigh quotient of `U_s(r) = s^{(N-2)/2} U(s r)` on `grid`, with the part of
/// the integrals beyond `r_max` added analytically.
pub fn bubble_quotient(grid: &RadialGrid, scale: f64) -> Result<f64, OracleError> {
    let dim = grid.dim();
    if !(3..=4).contains(&dim) {
        return Err(OracleError::NoSobolevConstant(dim));
    }
    let n = dim as f64;
    let crit = sobolev_exponent(dim);
    let amp = scale.powf(0.5 * (n - 2.0));
    let (mut kin, mut lcrit) = (0.0, 0.0);
    for (&w, &r) in grid.weights().iter().zip(grid.nodes()) {
        let x = scale * r;
        let base = 1.0 + x * x;
        let u = amp * base.powf(-0.5 * (n - 2.0));
        let du = -amp * scale * (n - 2.0) * x * base.powf(-0.5 * n);
        kin += w * du * du;
        lcrit += w * u.powf(crit);
    }
    // Tails transform by r -> s r; the bubble family is invariant so only the
    // lower limit changes.
    let (tk, tc) = tails(dim, scale * grid.r_max());
    let omega = sphere_area(dim);
    kin += omega * tk;
    lcrit += omega * tc;
    Ok(kin / lcrit.powf(2.0 / crit))
}

/// Sobolev constant computed from the bubble quotient on a large domain.
pub fn sobolev_constant(dim: usize) -> Result<f64, OracleError> {
    if !(3..=4).contains(&dim) {
        return Err(OracleError::NoSobolevConstant(dim));
    }
    let grid = RadialGrid::new(dim, DOMAIN, NODES)?;
    bubble_quotient(&grid, 1.0)
}
