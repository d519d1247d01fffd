//! Checks shared by the property suite and the acceptance target. Each `check_*`
//! takes already-drawn inputs so it can run under `proptest!` or a bare
//! `TestRunner`.

#![allow(dead_code)]

use nls_normalized::functionals::FiberCoefficients;
use nls_normalized::grid::RadialGrid;
use nls_normalized::oracle::gn_constant;
use nls_normalized::params::{gamma_exponent, Params};
use nls_normalized::solver::SolverOptions;
use nls_normalized::survey::{sweep, write_csv, Axis, SweepConfig};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// `(N, p)` pairs with a scalar ground state.
pub const EXPONENTS: [(usize, f64); 5] = [(1, 3.0), (1, 4.0), (2, 5.0), (3, 4.0), (4, 3.0)];

/// One smooth even bump `amp (1 + c r^2) exp(-alpha r^2)`.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub amp: f64,
    pub c: f64,
    pub alpha: f64,
}

pub fn bumps() -> impl Strategy<Value = Vec<Bump>> {
    prop::collection::vec(
        (0.1f64..2.0, 0.0f64..1.0, 0.3f64..3.0).prop_map(|(amp, c, alpha)| Bump { amp, c, alpha }),
        1..4,
    )
}

pub fn sample(grid: &RadialGrid, bumps: &[Bump]) -> Vec<f64> {
    grid.nodes()
        .iter()
        .map(|&r| {
            bumps
                .iter()
                .map(|b| b.amp * (1.0 + b.c * r * r) * (-b.alpha * r * r).exp())
                .sum()
        })
        .collect()
}

pub fn field_grid(dim: usize) -> RadialGrid {
    RadialGrid::new(dim, 25.0, 2501).unwrap()
}

/// `s * (t * f)` against `(s t) * f`, sup norm relative to `sup |f|`.
pub fn check_dilation_group(dim: usize, bumps: &[Bump], s: f64, t: f64) -> Result<(), TestCaseError> {
    let g = field_grid(dim);
    let f = sample(&g, bumps);
    let twice = g.dilate_slice(&g.dilate_slice(&f, t), s);
    let once = g.dilate_slice(&f, s * t);
    let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let err = twice.iter().zip(&once).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
    prop_assert!(err <= 1e-5, "N = {dim}, s = {s}, t = {t}: deviation {err:e}");
    // the dilation preserves mass
    let m0 = g.quad_product(&f, &f);
    let m1 = g.quad_product(&once, &once);
    prop_assert!((m1 - m0).abs() <= 1e-6 * m0, "mass {m0} -> {m1}");
    Ok(())
}

/// `|u|_p <= C |grad u|^gamma |u|^{1 - gamma}` with the oracle's sharp constant.
pub fn check_gn(dim: usize, p: f64, bumps: &[Bump]) -> Result<(), TestCaseError> {
    let g = field_grid(dim);
    let f = sample(&g, bumps);
    let mut scratch = vec![0.0; f.len()];
    let kin = g.kinetic_slice(&f, &mut scratch);
    let mass = g.quad_product(&f, &f);
    let lp = g.quad_abs_pow(&f, p).powf(1.0 / p);
    let gamma = gamma_exponent(p, dim);
    let c = gn_constant(dim, p).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let bound = c * kin.powf(0.5 * gamma) * mass.powf(0.5 * (1.0 - gamma));
    prop_assert!(lp <= bound * (1.0 + 1e-9), "N = {dim}, p = {p}: |u|_p = {lp} > {bound}");
    Ok(())
}

pub fn fiber_coefficients() -> impl Strategy<Value = FiberCoefficients> {
    (
        0.1f64..10.0,
        prop_oneof![Just(0.0), 0.1f64..10.0],
        0.1f64..10.0,
        -5.0f64..5.0,
        2.5f64..6.0,
        2.5f64..6.0,
    )
        .prop_map(|(kinetic, a_term, b_term, coupling, exp_p, exp_q)| FiberCoefficients {
            kinetic,
            a_term,
            b_term,
            coupling,
            exp_p,
            exp_q,
        })
}

/// The computed maximizer against a dense scan in `ln t`.
pub fn check_fiber_scan(c: &FiberCoefficients) -> Result<(), TestCaseError> {
    let t = c.maximizer().map_err(|e| TestCaseError::fail(e.to_string()))?;
    let best = c.value(t);
    let (lo, hi, n) = (-15.0f64, 15.0f64, 300_000);
    let (mut scan_best, mut scan_t) = (f64::NEG_INFINITY, 0.0);
    for i in 0..=n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        let v = c.value(s.exp());
        if v > scan_best {
            scan_best = v;
            scan_t = s.exp();
        }
    }
    let scale = c.kinetic * t * t;
    prop_assert!(best >= scan_best - 1e-12 * scale, "h(t*) = {best} below scanned {scan_best}");
    prop_assert!(c.derivative(t).abs() <= 1e-10 * c.kinetic * t, "h'(t*) = {:e}", c.derivative(t));
    prop_assert!((t.ln() - scan_t.ln()).abs() <= 1e-2, "t* = {t}, scan {scan_t}");
    Ok(())
}

/// `int |grad f|^2 = -int f Delta f` for a decaying field.
pub fn check_integration_by_parts(dim: usize, bumps: &[Bump]) -> Result<(), TestCaseError> {
    let g = field_grid(dim);
    let f = sample(&g, bumps);
    let mut scratch = vec![0.0; f.len()];
    let kin = g.kinetic_slice(&f, &mut scratch);
    let mut lap = vec![0.0; f.len()];
    g.laplacian_into(&f, &mut lap);
    let by_parts = -g.quad_product(&f, &lap);
    prop_assert!((kin - by_parts).abs() <= 1e-6 * kin, "N = {dim}: {kin} vs {by_parts}");
    Ok(())
}

/// Two sweeps over the same values, with different worker counts and value
/// order, produce identical CSV bytes.
pub fn check_sweep_bytes(values: &[f64], jobs: usize) -> Result<(), TestCaseError> {
    let base = Params::symmetric(3, 4.0, 1.0, 1.0, 1.0).unwrap();
    let opts = SolverOptions::default();
    let csv = |vals: &[f64], jobs| {
        let cfg = SweepConfig {
            jobs,
            ..Default::default()
        };
        let recs = sweep(&base, Axis::Beta, vals, &opts, &cfg).unwrap();
        let mut out = Vec::new();
        write_csv(&recs, &mut out).unwrap();
        out
    };
    let first = csv(values, 1);
    let mut reversed = values.to_vec();
    reversed.reverse();
    let second = csv(&reversed, jobs);
    prop_assert_eq!(first.len(), second.len());
    prop_assert!(first == second, "sweep CSV differs between runs");
    Ok(())
}
