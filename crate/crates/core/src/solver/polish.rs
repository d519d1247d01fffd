//! Newton iteration on the discrete system itself,
//!
//! ```text
//! -Delta_h u + l1 u - mu1 |u|^{p-2} u - beta v = 0,   sum W u^2 = a,
//! -Delta_h v + l2 v - mu2 |v|^{q-2} v - beta u = 0,   sum W v^2 = b,
//! ```
//!
//! with `(u, v, l1, l2)` as unknowns. The descent minimizes an energy whose
//! discrete gradient is not exactly the sixth-order Laplacian residual, so its
//! limit solves the equations only to discretization accuracy; a few Newton steps
//! from there remove that gap. Unknowns are interleaved as `(u_0, v_0, u_1, ...)`
//! so the Jacobian is banded, and the two multiplier columns are eliminated by a
//! Schur complement.

use crate::grid::abs_pow;

use super::banded::Banded;
use super::Work;

/// Interleaved half-bandwidth: the Laplacian reaches three nodes each way.
const BAND: usize = 7;
const MAX_NEWTON: usize = 30;
const MAX_HALVINGS: usize = 12;

pub(super) struct Polished {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl Work {
    /// Residuals of the bordered system and the scaled sup norm used for reporting.
    fn newton_residual(&mut self, u: &[f64], v: &[f64], l1: f64, l2: f64) -> (Vec<f64>, [f64; 2], f64) {
        let n = u.len();
        let mut gu = vec![0.0; n];
        let mut gv = vec![0.0; n];
        let ru = self.residual(u, v, l1, self.params.mu1, self.params.p, &mut gu);
        let rv = self.residual(v, u, l2, self.params.mu2, self.params.q, &mut gv);
        let mut f = vec![0.0; 2 * n];
        for i in 0..n {
            f[2 * i] = gu[i];
            f[2 * i + 1] = gv[i];
        }
        let g = [
            self.grid.quad_product(u, u) - self.params.a,
            self.grid.quad_product(v, v) - self.params.b,
        ];
        (f, g, ru.max(rv))
    }

    /// Scale-free merit combining both blocks.
    fn merit(f: &[f64], g: &[f64; 2], fscale: f64, params: (f64, f64)) -> f64 {
        let fs: f64 = f.iter().map(|x| (x / fscale).powi(2)).sum::<f64>() / f.len() as f64;
        fs + (g[0] / params.0).powi(2) + (g[1] / params.1).powi(2)
    }

    /// Polish `(u, v, l1, l2)` to a zero of the discrete system. Returns `None` if
    /// the Jacobian is singular or the iteration stops making progress before the
    /// reported residual falls below `target`.
    pub(super) fn polish(&mut self, u: &[f64], v: &[f64], l1: f64, l2: f64, target: f64) -> Option<Polished> {
        let n = u.len();
        let p = self.params;
        let (mut u, mut v, mut l1, mut l2) = (u.to_vec(), v.to_vec(), l1, l2);
        let (mut f, mut g, mut pde) = self.newton_residual(&u, &v, l1, l2);
        // residual scale frozen at the start so the merit is comparable across steps
        let fscale = u
            .iter()
            .chain(&v)
            .map(|x| x.abs())
            .fold(0.0, f64::max)
            * l1.abs().max(l2.abs()).max(1.0);
        let masses = (p.a, p.b);
        let mut merit = Self::merit(&f, &g, fscale, masses);
        let rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| self.grid.laplacian_row(i)).collect();
        let w = self.grid.weights().to_vec();

        for _ in 0..MAX_NEWTON {
            if pde <= target {
                break;
            }
            let mut jac = Banded::zeros(2 * n, BAND, BAND);
            for (i, row) in rows.iter().enumerate() {
                for &(j, c) in row {
                    jac.add(2 * i, 2 * j, -c);
                    jac.add(2 * i + 1, 2 * j + 1, -c);
                }
                jac.add(2 * i, 2 * i, l1 - (p.p - 1.0) * p.mu1 * abs_pow(u[i], p.p - 2.0));
                jac.add(2 * i + 1, 2 * i + 1, l2 - (p.q - 1.0) * p.mu2 * abs_pow(v[i], p.q - 2.0));
                jac.add(2 * i, 2 * i + 1, -p.beta);
                jac.add(2 * i + 1, 2 * i, -p.beta);
            }
            if !jac.factor() {
                return None;
            }
            let mut y0: Vec<f64> = f.iter().map(|x| -x).collect();
            let mut y1 = vec![0.0; 2 * n];
            let mut y2 = vec![0.0; 2 * n];
            for i in 0..n {
                y1[2 * i] = u[i];
                y2[2 * i + 1] = v[i];
            }
            jac.solve(&mut y0);
            jac.solve(&mut y1);
            jac.solve(&mut y2);
            // mass rows: 2 W u . du = -g_1, 2 W v . dv = -g_2
            let dot = |y: &[f64], k: usize, f: &[f64]| -> f64 { (0..n).map(|i| 2.0 * w[i] * f[i] * y[2 * i + k]).sum() };
            let s = [
                [dot(&y1, 0, &u), dot(&y2, 0, &u)],
                [dot(&y1, 1, &v), dot(&y2, 1, &v)],
            ];
            let r = [dot(&y0, 0, &u) + g[0], dot(&y0, 1, &v) + g[1]];
            let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let dl1 = (r[0] * s[1][1] - r[1] * s[0][1]) / det;
            let dl2 = (s[0][0] * r[1] - s[1][0] * r[0]) / det;

            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..MAX_HALVINGS {
                let un: Vec<f64> = (0..n).map(|i| u[i] + step * (y0[2 * i] - dl1 * y1[2 * i] - dl2 * y2[2 * i])).collect();
                let vn: Vec<f64> = (0..n)
                    .map(|i| v[i] + step * (y0[2 * i + 1] - dl1 * y1[2 * i + 1] - dl2 * y2[2 * i + 1]))
                    .collect();
                let (l1n, l2n) = (l1 + step * dl1, l2 + step * dl2);
                let (fn_, gn, pden) = self.newton_residual(&un, &vn, l1n, l2n);
                let mn = Self::merit(&fn_, &gn, fscale, masses);
                if mn.is_finite() && mn < merit {
                    (u, v, l1, l2, f, g, pde, merit) = (un, vn, l1n, l2n, fn_, gn, pden, mn);
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (pde <= target).then_some(Polished { u, v })
    }
}
