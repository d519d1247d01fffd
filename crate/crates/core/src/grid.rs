//! Uniform radial grids on `[0, r_max]` together with the quadrature, stencils and
//! dilations used by everything else in the crate.
//!
//! A radial function `f(|x|)` on `R^N` is stored by its nodal values. Integrals are
//! `omega_{N-1} * int_0^{r_max} f r^{N-1} dr`, evaluated with the trapezoid rule plus
//! end corrections, so that smooth decaying profiles are integrated to high order.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Stencil half-width used by the sixth-order difference formulas.
const HALF_WIDTH: usize = 3;
const D1: [f64; 4] = [0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
/// Gregory end weights (sixth order) replacing the trapezoid weights at the outer
/// end, listed from node `n - 6` to node `n - 1`.
const GREGORY: [f64; 6] = [
    61343.0 / 60480.0,
    55031.0 / 60480.0,
    37621.0 / 30240.0,
    18869.0 / 30240.0,
    84199.0 / 60480.0,
    19087.0 / 60480.0,
];
/// Coefficients of the undivided fourth difference.
const FOURTH: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];
/// Weight of the odd-even stabilizer in the kinetic energy.
const STABILIZER: f64 = 1.0 / 16.0;
pub const MIN_NODES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("dimension N = {0} is outside the supported range 1..=4")]
    UnsupportedDimension(usize),
    #[error("r_max must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("at least {MIN_NODES} nodes are required, got {0}")]
    TooFewNodes(usize),
    #[error("field belongs to a different grid")]
    GridMismatch,
    #[error("expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite nodal value at index {0}")]
    NonFinite(usize),
    #[error("dilation factor must be positive and finite, got {0}")]
    BadDilation(f64),
    #[error("cannot normalize a field with zero mass")]
    ZeroMass,
    #[error("target mass must be positive and finite, got {0}")]
    BadTarget(f64),
    #[error("Lebesgue exponent must be at least 1, got {0}")]
    BadExponent(f64),
}

struct GridData {
    dim: usize,
    r_max: f64,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Weights with a control-volume value at the origin, used where a strictly
    /// positive mass matrix is needed.
    cv_weights: Vec<f64>,
}

/// A uniform grid `r_i = i h`, `h = r_max / (n - 1)`. Cloning is cheap.
#[derive(Clone)]
pub struct RadialGrid {
    data: Arc<GridData>,
}

impl fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGrid")
            .field("dim", &self.data.dim)
            .field("r_max", &self.data.r_max)
            .field("n_nodes", &self.data.nodes.len())
            .finish()
    }
}

/// Surface area of the unit sphere in `R^N`, `2 pi^{N/2} / Gamma(N/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => f64::NAN,
    }
}

/// Left-end corrections for even `N`, where `f r^{N-1}` is odd in `r` and the
/// trapezoid rule loses its spectral accuracy at the origin. The weights `e_i` on
/// nodes 1..=3 remove the Euler-Maclaurin terms for `f = 1, r^2, r^4`.
fn origin_corrections(dim: usize) -> [f64; 3] {
    if dim % 2 == 1 {
        return [0.0; 3];
    }
    // B_2, B_4, B_6, B_8
    let bern = |k: usize| match k {
        2 => 1.0 / 6.0,
        4 => -1.0 / 30.0,
        6 => 1.0 / 42.0,
        8 => -1.0 / 30.0,
        _ => unreachable!(),
    };
    let rhs: Vec<f64> = (0..3)
        .map(|j| {
            let k = dim + 2 * j;
            bern(k) / k as f64
        })
        .collect();
    // Solve sum_i e_i i^{2j} = rhs_j by Cramer's rule on the 3x3 system.
    let m = [[1.0, 1.0, 1.0], [1.0, 4.0, 9.0], [1.0, 16.0, 81.0]];
    let det3 = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det3(m);
    let mut e = [0.0; 3];
    for (col, slot) in e.iter_mut().enumerate() {
        let mut a = m;
        for row in 0..3 {
            a[row][col] = rhs[row];
        }
        *slot = det3(a) / d;
    }
    e
}

impl RadialGrid {
    pub fn new(dim: usize, r_max: f64, n_nodes: usize) -> Result<Self, GridError> {
        if !(1..=4).contains(&dim) {
            return Err(GridError::UnsupportedDimension(dim));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(GridError::BadRadius(r_max));
        }
        if n_nodes < MIN_NODES {
            return Err(GridError::TooFewNodes(n_nodes));
        }
        let n = n_nodes;
        let h = r_max / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let omega = sphere_area(dim);
        let mut weights: Vec<f64> = nodes
            .iter()
            .map(|&r| omega * h * r.powi(dim as i32 - 1))
            .collect();
        if dim == 1 {
            weights[0] *= 0.5;
        } else {
            weights[0] = 0.0;
        }
        for (k, g) in GREGORY.iter().enumerate() {
            let i = n - GREGORY.len() + k;
            weights[i] *= g;
        }
        let hn = h.powi(dim as i32);
        for (k, e) in origin_corrections(dim).iter().enumerate() {
            weights[k + 1] += omega * hn * e;
        }
        let mut cv_weights = weights.clone();
        if dim > 1 {
            cv_weights[0] = omega * (0.5 * h).powi(dim as i32) / dim as f64;
        }
        Ok(Self {
            data: Arc::new(GridData {
                dim,
                r_max,
                h,
                nodes,
                weights,
                cv_weights,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.data.dim
    }
    pub fn r_max(&self) -> f64 {
        self.data.r_max
    }
    pub fn spacing(&self) -> f64 {
        self.data.h
    }
    pub fn len(&self) -> usize {
        self.data.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn nodes(&self) -> &[f64] {
        &self.data.nodes
    }
    /// Quadrature weights, including the sphere area.
    pub fn weights(&self) -> &[f64] {
        &self.data.weights
    }
    pub fn cv_weights(&self) -> &[f64] {
        &self.data.cv_weights
    }

    /// Two grids are interchangeable when their defining parameters agree.
    pub fn same_as(&self, other: &RadialGrid) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
            || (self.data.dim == other.data.dim
                && self.len() == other.len()
                && self.data.r_max.to_bits() == other.data.r_max.to_bits())
    }

    pub fn field(&self, values: Vec<f64>) -> Result<Field, GridError> {
        if values.len() != self.len() {
            return Err(GridError::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Field {
            grid: self.clone(),
            values,
        })
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Result<Field, GridError> {
        self.field(self.nodes().iter().map(|&r| f(r)).collect())
    }

    pub fn zeros(&self) -> Field {
        Field {
            grid: self.clone(),
            values: vec![0.0; self.len()],
        }
    }

    fn check(&self, f: &Field) -> Result<(), GridError> {
        if self.same_as(&f.grid) {
            Ok(())
        } else {
            Err(GridError::GridMismatch)
        }
    }

    // ----- slice kernels; callers guarantee the length -----

    pub fn quad(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights()
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn quad_product(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights()
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// `int |f|^p`, with the common exponents special-cased.
    pub fn quad_abs_pow(&self, f: &[f64], p: f64) -> f64 {
        self.weights()
            .iter()
            .zip(f)
            .map(|(w, v)| w * abs_pow(*v, p))
            .sum()
    }

    #[inline]
    fn ghost(f: &[f64], j: isize) -> f64 {
        let n = f.len() as isize;
        let k = j.abs();
        if k >= n {
            0.0
        } else {
            f[k as usize]
        }
    }

    /// Sixth-order first derivative. The origin uses even reflection, values past
    /// `r_max` are taken to be zero.
    pub fn derivative_into(&self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        let inv_h = 1.0 / self.data.h;
        for i in 0..n {
            let interior = i >= HALF_WIDTH && i + HALF_WIDTH < n;
            let mut acc = 0.0;
            if interior {
                for k in 1..=HALF_WIDTH {
                    acc += D1[k] * (f[i + k] - f[i - k]);
                }
            } else {
                let ii = i as isize;
                for k in 1..=HALF_WIDTH as isize {
                    acc += D1[k as usize] * (Self::ghost(f, ii + k) - Self::ghost(f, ii - k));
                }
            }
            out[i] = acc * inv_h;
        }
    }

    /// Sixth-order radial Laplacian `f'' + (N-1) f'/r`, equal to `N f''(0)` at the origin.
    pub fn laplacian_into(&self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        let h = self.data.h;
        let inv_h = 1.0 / h;
        let inv_h2 = inv_h * inv_h;
        let dm1 = self.data.dim as f64 - 1.0;
        for i in 0..n {
            let interior = i >= HALF_WIDTH && i + HALF_WIDTH < n;
            let (mut d1, mut d2) = (0.0, D2[0] * f[i]);
            if interior {
                for k in 1..=HALF_WIDTH {
                    d1 += D1[k] * (f[i + k] - f[i - k]);
                    d2 += D2[k] * (f[i + k] + f[i - k]);
                }
            } else {
                let ii = i as isize;
                for k in 1..=HALF_WIDTH as isize {
                    let (a, b) = (Self::ghost(f, ii + k), Self::ghost(f, ii - k));
                    d1 += D1[k as usize] * (a - b);
                    d2 += D2[k as usize] * (a + b);
                }
            }
            out[i] = if i == 0 {
                self.data.dim as f64 * d2 * inv_h2
            } else {
                d2 * inv_h2 + dm1 * d1 * inv_h / (i as f64 * h)
            };
        }
    }

    /// Nonzero entries `(column, coefficient)` of row `i` of the matrix applied by
    /// [`laplacian_into`](Self::laplacian_into); repeated columns (from the
    /// reflection at the origin) are listed separately and must be summed.
    pub(crate) fn laplacian_row(&self, i: usize) -> Vec<(usize, f64)> {
        let n = self.data.nodes.len() as isize;
        let h = self.data.h;
        let inv_h2 = 1.0 / (h * h);
        let dm1 = self.data.dim as f64 - 1.0;
        let ii = i as isize;
        let mut row = Vec::with_capacity(2 * HALF_WIDTH + 1);
        for k in -(HALF_WIDTH as isize)..=HALF_WIDTH as isize {
            let col = (ii + k).abs();
            if col >= n {
                continue;
            }
            let ka = k.unsigned_abs();
            let c = if i == 0 {
                self.data.dim as f64 * D2[ka] * inv_h2
            } else {
                D2[ka] * inv_h2 + dm1 * k.signum() as f64 * D1[ka] / (h * h * i as f64)
            };
            row.push((col as usize, c));
        }
        row
    }

    /// Row `i` of the matrix applied by [`derivative_into`](Self::derivative_into).
    fn derivative_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.len() as isize;
        let ii = i as isize;
        let inv_h = 1.0 / self.data.h;
        (1..=HALF_WIDTH as isize).flat_map(move |k| {
            let c = D1[k as usize] * inv_h;
            [((ii + k).abs(), c), ((ii - k).abs(), -c)]
                .into_iter()
                .filter(move |&(j, _)| j < n)
                .map(|(j, c)| (j as usize, c))
        })
    }

    /// Undivided fourth difference `f_{i-2} - 4 f_{i-1} + 6 f_i - 4 f_{i+1} + f_{i+2}`
    /// with the same ghost values as the other stencils.
    fn fourth_difference_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.len() as isize;
        let ii = i as isize;
        FOURTH
            .iter()
            .enumerate()
            .map(move |(k, &c)| ((ii + k as isize - 2).abs(), c))
            .filter(move |&(j, _)| j < n)
            .map(|(j, c)| (j as usize, c))
    }

    /// `int |f'|^2` as the quadrature of the squared sixth-order derivative plus the
    /// stabilizer `STABILIZER * sum W (delta^4 f)^2 / h^2`. The stabilizer is
    /// `O(h^6)` on smooth profiles, but it charges the odd-even mode that a wide
    /// central difference cannot see, so minimizing the energy cannot pump mass into
    /// grid-scale oscillations.
    pub fn kinetic_slice(&self, f: &[f64], scratch: &mut [f64]) -> f64 {
        self.derivative_into(f, scratch);
        let smooth = self.quad_product(scratch, scratch);
        let w = self.weights();
        let stab: f64 = (0..f.len())
            .map(|i| {
                let d: f64 = self.fourth_difference_row(i).map(|(j, c)| c * f[j]).sum();
                w[i] * d * d
            })
            .sum();
        smooth + STABILIZER * stab / (self.data.h * self.data.h)
    }

    /// Gradient of `kinetic_slice(f) / 2` with respect to the nodal values.
    pub fn kinetic_gradient_into(&self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        let w = self.weights();
        out.iter_mut().for_each(|x| *x = 0.0);
        let s = STABILIZER / (self.data.h * self.data.h);
        for i in 0..n {
            let d: f64 = self.derivative_row(i).map(|(j, c)| c * f[j]).sum();
            for (j, c) in self.derivative_row(i) {
                out[j] += w[i] * d * c;
            }
            let d4: f64 = self.fourth_difference_row(i).map(|(j, c)| c * f[j]).sum();
            for (j, c) in self.fourth_difference_row(i) {
                out[j] += s * w[i] * d4 * c;
            }
        }
    }

    /// Monotone cubic Hermite interpolant evaluated at `t r_i`, scaled by `t^{N/2}`.
    pub fn dilate_slice(&self, f: &[f64], t: f64) -> Vec<f64> {
        if t == 1.0 {
            return f.to_vec();
        }
        let slopes = monotone_slopes(f);
        let h = self.data.h;
        let n = f.len();
        let amp = t.powf(0.5 * self.data.dim as f64);
        self.nodes()
            .iter()
            .map(|&r| {
                let s = t * r / h;
                if s >= (n - 1) as f64 {
                    return if s == (n - 1) as f64 { amp * f[n - 1] } else { 0.0 };
                }
                let k = s.floor() as usize;
                amp * hermite(f[k], f[k + 1], slopes[k], slopes[k + 1], s - k as f64)
            })
            .collect()
    }

    // ----- checked field operations -----

    pub fn integrate(&self, f: &Field) -> Result<f64, GridError> {
        self.check(f)?;
        Ok(self.quad(&f.values))
    }

    pub fn inner(&self, f: &Field, g: &Field) -> Result<f64, GridError> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.quad_product(&f.values, &g.values))
    }

    pub fn mass(&self, f: &Field) -> Result<f64, GridError> {
        self.inner(f, f)
    }

    /// `(int |f|^p)^{1/p}`.
    pub fn lp_norm(&self, f: &Field, p: f64) -> Result<f64, GridError> {
        self.check(f)?;
        if !(p >= 1.0) {
            return Err(GridError::BadExponent(p));
        }
        if p.is_infinite() {
            return Ok(f.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        Ok(self.quad_abs_pow(&f.values, p).powf(1.0 / p))
    }

    pub fn gradient(&self, f: &Field) -> Result<Field, GridError> {
        self.check(f)?;
        let mut out = vec![0.0; self.len()];
        self.derivative_into(&f.values, &mut out);
        self.field(out)
    }

    pub fn laplacian(&self, f: &Field) -> Result<Field, GridError> {
        self.check(f)?;
        let mut out = vec![0.0; self.len()];
        self.laplacian_into(&f.values, &mut out);
        self.field(out)
    }

    /// `int |grad f|^2`.
    pub fn kinetic(&self, f: &Field) -> Result<f64, GridError> {
        self.check(f)?;
        let mut scratch = vec![0.0; self.len()];
        Ok(self.kinetic_slice(&f.values, &mut scratch))
    }

    /// The mass-preserving dilation `(t * f)(r) = t^{N/2} f(t r)`.
    pub fn dilate(&self, f: &Field, t: f64) -> Result<Field, GridError> {
        self.check(f)?;
        if !(t.is_finite() && t > 0.0) {
            return Err(GridError::BadDilation(t));
        }
        self.field(self.dilate_slice(&f.values, t))
    }

    pub fn normalize_mass(&self, f: &Field, target: f64) -> Result<Field, GridError> {
        self.check(f)?;
        if !(target.is_finite() && target > 0.0) {
            return Err(GridError::BadTarget(target));
        }
        let m = self.quad_product(&f.values, &f.values);
        if !(m > 0.0) {
            return Err(GridError::ZeroMass);
        }
        let c = (target / m).sqrt();
        self.field(f.values.iter().map(|v| v * c).collect())
    }
}

#[inline]
pub(crate) fn abs_pow(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else if p == 6.0 {
        let s = a * a * a;
        s * s
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(p)
    }
}

/// Fritsch-Carlson limited slopes in units of the node spacing.
fn monotone_slopes(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        let dl = f[k] - f[k - 1];
        let dr = f[k + 1] - f[k];
        if dl * dr <= 0.0 {
            continue;
        }
        let c = 0.5 * (dl + dr);
        let lim = 3.0 * dl.abs().min(dr.abs());
        m[k] = c.signum() * c.abs().min(lim);
    }
    // Slope zero at the origin (even profile); one-sided at the far end.
    let dl = f[n - 1] - f[n - 2];
    m[n - 1] = dl;
    m
}

#[inline]
fn hermite(f0: f64, f1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let x2 = x * x;
    let x3 = x2 * x;
    let v = (2.0 * x3 - 3.0 * x2 + 1.0) * f0
        + (x3 - 2.0 * x2 + x) * m0
        + (-2.0 * x3 + 3.0 * x2) * f1
        + (x3 - x2) * m1;
    let (lo, hi) = if f0 <= f1 { (f0, f1) } else { (f1, f0) };
    v.clamp(lo, hi)
}

/// Nodal values of a radial function on a particular grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }
    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball_volume(dim: usize, r: f64) -> f64 {
        sphere_area(dim) * r.powi(dim as i32) / dim as f64
    }

    #[test]
    fn indicator_integrates_to_ball_volume() {
        for dim in 1..=4 {
            let g = RadialGrid::new(dim, 1.0, 101).unwrap();
            let one = g.sample(|_| 1.0).unwrap();
            let v = g.integrate(&one).unwrap();
            assert!((v / ball_volume(dim, 1.0) - 1.0).abs() < 1e-10, "N={dim}: {v}");
        }
    }

    #[test]
    fn monomials_up_to_fourth_order() {
        // int_0^1 r^{2j} r^{N-1} = 1/(N+2j)
        for dim in 1..=4 {
            let g = RadialGrid::new(dim, 1.0, 201).unwrap();
            for j in 0..=2 {
                let f = g.sample(|r| r.powi(2 * j)).unwrap();
                let exact = sphere_area(dim) / (dim as f64 + 2.0 * j as f64);
                let rel = (g.integrate(&f).unwrap() / exact - 1.0).abs();
                assert!(rel < 1e-9, "N={dim} j={j}: {rel}");
            }
        }
    }

    #[test]
    fn gaussian_masses() {
        let g3 = RadialGrid::new(3, 8.0, 2001).unwrap();
        let f = g3.sample(|r| (-r * r).exp()).unwrap();
        assert!((g3.integrate(&f).unwrap() - PI.powf(1.5)).abs() < 1e-6);
        let g2 = RadialGrid::new(2, 8.0, 2001).unwrap();
        let f = g2.sample(|r| (-r * r).exp()).unwrap();
        assert!((g2.integrate(&f).unwrap() - PI).abs() < 1e-8);
    }

    #[test]
    fn weights_are_nonnegative() {
        for dim in 1..=4 {
            let g = RadialGrid::new(dim, 3.0, 50).unwrap();
            assert!(g.weights().iter().all(|&w| w >= 0.0));
            assert!(g.cv_weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn laplacian_of_gaussian() {
        // Delta e^{-r^2} = (4 r^2 - 2N) e^{-r^2}
        for dim in 1..=4 {
            let g = RadialGrid::new(dim, 10.0, 4001).unwrap();
            let f = g.sample(|r| (-r * r).exp()).unwrap();
            let lap = g.laplacian(&f).unwrap();
            let err = g
                .nodes()
                .iter()
                .zip(lap.values())
                .map(|(&r, &l)| (l - (4.0 * r * r - 2.0 * dim as f64) * (-r * r).exp()).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-9, "N={dim}: {err}");
        }
    }

    #[test]
    fn kinetic_of_gaussian() {
        // int |grad e^{-r^2}|^2 = N (pi/2)^{N/2}
        for dim in 1..=4 {
            let g = RadialGrid::new(dim, 10.0, 2001).unwrap();
            let f = g.sample(|r| (-r * r).exp()).unwrap();
            let k = g.kinetic(&f).unwrap();
            let exact = dim as f64 * (PI / 2.0).powf(dim as f64 / 2.0);
            assert!((k / exact - 1.0).abs() < 1e-9, "N={dim}: {k} vs {exact}");
        }
    }

    #[test]
    fn kinetic_gradient_matches_finite_differences() {
        let g = RadialGrid::new(2, 3.0, 41).unwrap();
        let f: Vec<f64> = (0..41).map(|i| (-(i as f64 * 0.1).powi(2)).exp() + 0.01 * ((i * 7 % 13) as f64).sin()).collect();
        let mut grad = vec![0.0; 41];
        g.kinetic_gradient_into(&f, &mut grad);
        let mut scratch = vec![0.0; 41];
        for i in [0, 1, 2, 5, 20, 38, 40] {
            let eps = 1e-6;
            let (mut fp, mut fm) = (f.clone(), f.clone());
            fp[i] += eps;
            fm[i] -= eps;
            let fd = (g.kinetic_slice(&fp, &mut scratch) - g.kinetic_slice(&fm, &mut scratch)) / (4.0 * eps);
            assert!((fd - grad[i]).abs() < 1e-6 * grad[i].abs().max(1.0), "node {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn kinetic_charges_odd_even_mode() {
        let g = RadialGrid::new(3, 4.0, 401).unwrap();
        let saw: Vec<f64> = (0..401).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * (-(i as f64) * 0.01).exp()).collect();
        let mut scratch = vec![0.0; 401];
        let k = g.kinetic_slice(&saw, &mut scratch);
        let m = g.quad_product(&saw, &saw);
        let h = g.spacing();
        assert!(k > 10.0 * m / (h * h), "{k} vs {}", m / (h * h));
    }

    #[test]
    fn laplacian_rows_reproduce_operator() {
        let g = RadialGrid::new(3, 2.0, 30).unwrap();
        let f: Vec<f64> = (0..30).map(|i| ((i * 7 % 13) as f64).sin()).collect();
        let mut lap = vec![0.0; 30];
        g.laplacian_into(&f, &mut lap);
        for (i, &l) in lap.iter().enumerate() {
            let s: f64 = g.laplacian_row(i).iter().map(|&(j, c)| c * f[j]).sum();
            assert!((s - l).abs() < 1e-9 * l.abs().max(1.0), "row {i}: {s} vs {l}");
        }
    }

    #[test]
    fn dilation_identity_is_exact() {
        let g = RadialGrid::new(3, 5.0, 101).unwrap();
        let f = g.sample(|r| (-r).exp()).unwrap();
        assert_eq!(g.dilate(&f, 1.0).unwrap().values(), f.values());
    }

    #[test]
    fn dilation_preserves_mass() {
        let g = RadialGrid::new(3, 20.0, 4001).unwrap();
        let f = g.sample(|r| (-r * r).exp()).unwrap();
        let m0 = g.mass(&f).unwrap();
        for t in [0.5, 0.8, 1.3, 2.0] {
            let m = g.mass(&g.dilate(&f, t).unwrap()).unwrap();
            assert!((m / m0 - 1.0).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn errors() {
        assert_eq!(
            RadialGrid::new(5, 1.0, 100).unwrap_err(),
            GridError::UnsupportedDimension(5)
        );
        assert!(matches!(RadialGrid::new(3, -1.0, 100), Err(GridError::BadRadius(_))));
        assert!(matches!(RadialGrid::new(3, 1.0, 5), Err(GridError::TooFewNodes(5))));
        let g = RadialGrid::new(3, 1.0, 100).unwrap();
        let h = RadialGrid::new(3, 2.0, 100).unwrap();
        let f = h.zeros();
        assert_eq!(g.integrate(&f).unwrap_err(), GridError::GridMismatch);
        assert_eq!(g.normalize_mass(&g.zeros(), 1.0).unwrap_err(), GridError::ZeroMass);
        assert!(matches!(g.dilate(&g.zeros(), 0.0), Err(GridError::BadDilation(_))));
        assert!(matches!(g.field(vec![f64::NAN; 100]), Err(GridError::NonFinite(0))));
    }
}
