//! Banded LU factorization with partial pivoting, in the row-interchange form of
//! LAPACK's `gbtrf`/`gbtrs`.

pub(crate) struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    /// row-major band rows of width `2 kl + ku + 1`; entry `(i, j)` lives at
    /// offset `j + kl - i` within row `i`
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl Banded {
    pub(crate) fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * width],
            piv: Vec::new(),
        }
    }

    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j + self.kl - i < self.width());
        i * self.width() + j + self.kl - i
    }

    /// Add `value` to entry `(i, j)`; `j - i` must lie in `[-kl, ku]`.
    pub(crate) fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] += value;
    }

    /// Factor in place. Returns `false` on an exactly singular pivot.
    pub(crate) fn factor(&mut self) -> bool {
        let n = self.n;
        let reach = self.kl + self.ku;
        self.piv = vec![0; n];
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.piv[k] = p;
            if best == 0.0 || !best.is_finite() {
                return false;
            }
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        true
    }

    /// Solve with the factors from [`factor`](Self::factor), overwriting `b`.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let reach = self.kl + self.ku;
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                b[i] -= self.data[self.idx(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                acc -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = acc / self.data[self.idx(k, k)];
        }
    }
}
