//! Dense complex matrices and LU factorisation with partial pivoting.

use crate::error::{Error, Result};
use num_complex::Complex64;

pub type ComplexVector = Vec<Complex64>;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[Complex64]) -> ComplexVector {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Aᴴ x`
    pub fn matvec_adjoint(&self, x: &[Complex64]) -> ComplexVector {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `PA = LU`; `L` unit lower triangular stored below the diagonal.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: ComplexMatrix,
    /// Row `i` of `PA` is row `perm[i]` of `A`.
    perm: Vec<usize>,
}

const PIVOT_FLOOR: f64 = 1e-300;

impl LuFactor {
    pub fn new(mut a: ComplexMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::Shape(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot: f64 = 0.0;
        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, a[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmag > PIVOT_FLOOR.max(scale * 1e-15 * f64::EPSILON)) {
                let condition = if pmag > 0.0 { max_pivot.max(pmag) / pmag } else { f64::INFINITY };
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot: pmag,
                    condition,
                });
            }
            min_pivot = min_pivot.min(pmag);
            max_pivot = max_pivot.max(pmag);
            if p != k {
                perm.swap(p, k);
                let (lo, hi) = a.data.split_at_mut(p * n);
                lo[k * n..(k + 1) * n].swap_with_slice(&mut hi[..n]);
            }
            let inv = a[(k, k)].inv();
            let (top, bottom) = a.data.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n + k + 1..k * n + n];
            for row in bottom.chunks_exact_mut(n) {
                let l = row[k] * inv;
                row[k] = l;
                if l.re != 0.0 || l.im != 0.0 {
                    for (r, u) in row[k + 1..].iter_mut().zip(pivot_row) {
                        *r -= l * u;
                    }
                }
            }
        }
        let _ = min_pivot;
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Ratio of largest to smallest pivot magnitude; a cheap lower bound on
    /// the condition number.
    pub fn pivot_ratio(&self) -> f64 {
        let mags: Vec<f64> = (0..self.dim()).map(|i| self.lu[(i, i)].norm()).collect();
        let max = mags.iter().copied().fold(0.0, f64::max);
        let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<ComplexVector> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Shape(format!("rhs length {} for n = {n}", b.len())));
        }
        let mut x: ComplexVector = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: Complex64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: Complex64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }

    /// Solve `Aᴴ x = c` with the same factorisation.
    pub fn solve_adjoint(&self, c: &[Complex64]) -> Result<ComplexVector> {
        let n = self.dim();
        if c.len() != n {
            return Err(Error::Shape(format!("rhs length {} for n = {n}", c.len())));
        }
        // Aᴴ = Uᴴ Lᴴ P: forward with Uᴴ, backward with Lᴴ, then undo P.
        let mut w = c.to_vec();
        for i in 0..n {
            let d = self.lu[(i, i)].conj();
            w[i] /= d;
            let wi = w[i];
            let row = self.lu.row(i);
            for (wj, u) in w[i + 1..].iter_mut().zip(&row[i + 1..]) {
                *wj -= u.conj() * wi;
            }
        }
        for i in (0..n).rev() {
            let wi = w[i];
            let row = self.lu.row(i);
            for (wj, l) in w[..i].iter_mut().zip(&row[..i]) {
                *wj -= l.conj() * wi;
            }
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        Ok(x)
    }
}

/// Solve `A y = b` by LU with partial pivoting.
pub fn solve_linear(a: &ComplexMatrix, b: &[Complex64]) -> Result<ComplexVector> {
    LuFactor::new(a.clone())?.solve(b)
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
