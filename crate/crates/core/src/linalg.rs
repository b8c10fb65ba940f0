//! Small dense matrix plus an LU factorisation with partial pivoting that
//! can restrict elimination to a known band.
//!
//! The cell Jacobian is block-tridiagonal in node-major ordering, so the
//! elimination only ever touches `kl` rows below and `kl + ku` columns right
//! of the pivot. The storage stays dense.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("matrix is singular to working precision at pivot column {column}")]
pub struct SingularMatrix {
    pub column: usize,
}

/// Bandwidth hint for [`LuFactor::factor`]. `Band::dense(n)` disables it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub lower: usize,
    pub upper: usize,
}

impl Band {
    pub fn dense(n: usize) -> Self {
        Self { lower: n.saturating_sub(1), upper: n.saturating_sub(1) }
    }
}

/// Row-equilibrated LU factors of `D A` with `D` the row scaling. Row
/// interchanges are stored per elimination step and replayed on the
/// right-hand side, so the multipliers of each column stay inside the band.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: Matrix,
    pivots: Vec<usize>,
    row_scale: Vec<f64>,
    band: Band,
}

impl LuFactor {
    pub fn factor(mut a: Matrix, band: Band) -> Result<Self, SingularMatrix> {
        let n = a.n_rows;
        assert_eq!(n, a.n_cols, "LU needs a square matrix");
        let mut row_scale = vec![1.0; n];
        for (i, scale) in row_scale.iter_mut().enumerate() {
            let m = a.row(i).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if m == 0.0 || !m.is_finite() {
                return Err(SingularMatrix { column: i });
            }
            *scale = 1.0 / m;
            for v in &mut a.data[i * n..(i + 1) * n] {
                *v *= *scale;
            }
        }
        let mut pivots: Vec<usize> = (0..n).collect();
        let reach = band.lower + band.upper;
        for k in 0..n {
            let row_end = (k + band.lower + 1).min(n);
            let col_end = (k + reach + 1).min(n);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for i in k + 1..row_end {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < 1e-300 || !best.is_finite() {
                return Err(SingularMatrix { column: k });
            }
            if p != k {
                for j in k..col_end {
                    a.data.swap(k * n + j, p * n + j);
                }
                pivots[k] = p;
            }
            let pivot = a.get(k, k);
            for i in k + 1..row_end {
                let f = a.get(i, k) / pivot;
                if f == 0.0 {
                    continue;
                }
                a.set(i, k, f);
                for j in k + 1..col_end {
                    let v = a.get(i, j) - f * a.get(k, j);
                    a.set(i, j, v);
                }
            }
        }
        Ok(Self { lu: a, pivots, row_scale, band })
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = b.iter().zip(&self.row_scale).map(|(v, s)| v * s).collect();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let row_end = (k + self.band.lower + 1).min(n);
            let xk = x[k];
            for (i, xi) in x.iter_mut().enumerate().take(row_end).skip(k + 1) {
                *xi -= self.lu.get(i, k) * xk;
            }
        }
        let reach = self.band.lower + self.band.upper;
        for k in (0..n).rev() {
            let col_end = (k + reach + 1).min(n);
            let mut s = x[k];
            for j in k + 1..col_end {
                s -= self.lu.get(k, j) * x[j];
            }
            x[k] = s / self.lu.get(k, k);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn banded_random(n: usize, kl: usize, ku: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // rows of very different magnitude exercise the equilibration
                a.set(i, j, uniform(&mut rng) * 10f64.powi((i % 7) as i32 - 3));
            }
        }
        a
    }

    #[test]
    fn dense_solve_recovers_known_solution() {
        let n = 12;
        let a = banded_random(n, n - 1, n - 1, 3);
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 4.5).collect();
        let b = a.mul_vec(&x);
        let lu = LuFactor::factor(a, Band::dense(n)).unwrap();
        let got = lu.solve(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-9, "{g} vs {e}");
        }
    }

    #[test]
    fn banded_factor_matches_dense_factor() {
        let n = 60;
        let (kl, ku) = (5, 7);
        let a = banded_random(n, kl, ku, 11);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let banded = LuFactor::factor(a.clone(), Band { lower: kl, upper: ku }).unwrap().solve(&b);
        let dense = LuFactor::factor(a.clone(), Band::dense(n)).unwrap().solve(&b);
        for (x, y) in banded.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-8 * (1.0 + y.abs()));
        }
        let r = a.mul_vec(&banded);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-8);
        }
    }

    #[test]
    fn banded_factor_with_sparse_rows() {
        // zeros inside the band force pivots far from the diagonal
        let n = 80;
        let kl = 9;
        let mut a = banded_random(n, kl, kl, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + kl + 1).min(n) {
                if uniform(&mut rng) < 0.0 {
                    a.set(i, j, 0.0);
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let b = a.mul_vec(&x);
        let banded = LuFactor::factor(a.clone(), Band { lower: kl, upper: kl }).unwrap().solve(&b);
        let dense = LuFactor::factor(a, Band::dense(n)).unwrap().solve(&b);
        for (x, y) in banded.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-7 * (1.0 + y.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn zero_row_is_reported_singular() {
        let mut a = Matrix::zeros(3, 3);
        a.set(0, 0, 1.0);
        a.set(2, 2, 1.0);
        assert_eq!(LuFactor::factor(a, Band::dense(3)).unwrap_err(), SingularMatrix { column: 1 });
    }
}
