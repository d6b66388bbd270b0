//! Dense row-major matrix plus a deterministic one-sided Jacobi SVD.
//!
//! Desk-scale only: the SVD is exact-ish (quadratic convergence) and has no
//! randomized path, which keeps embedding combination reproducible
//! bit-for-bit across runs and platforms.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Build from row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Thin SVD `M = U diag(sigma) V^T` with `r = min(rows, cols)` columns.
///
/// Singular values are sorted descending. Columns carry a fixed sign
/// convention: the largest-magnitude component of each right-singular
/// vector is positive (ties broken by lowest index).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    /// `U_k diag(sigma_k) V_k^T`, the rank-`k` reconstruction.
    pub fn reconstruct(&self, k: usize) -> Matrix {
        let k = k.min(self.sigma.len());
        let mut m = Matrix::zeros(self.u.rows(), self.v.rows());
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let mut acc = 0.0;
                for t in 0..k {
                    acc += self.u.get(r, t) * self.sigma[t] * self.v.get(c, t);
                }
                m.set(r, c, acc);
            }
        }
        m
    }
}

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 60;

pub fn svd(m: &Matrix) -> Svd {
    if m.rows() >= m.cols() {
        svd_tall(m)
    } else {
        // svd(M^T) swaps the roles of U and V.
        let t = svd_tall(&m.transpose());
        Svd { u: t.v, sigma: t.sigma, v: t.u }
    }
}

/// One-sided Jacobi on a tall (rows >= cols) matrix: orthogonalize columns
/// by plane rotations, accumulating the rotations into V.
fn svd_tall(m: &Matrix) -> Svd {
    let n = m.rows();
    let d = m.cols();
    let mut a: Vec<Vec<f64>> = (0..d).map(|c| m.column(c)).collect();
    let mut v: Vec<Vec<f64>> = (0..d)
        .map(|c| {
            let mut col = vec![0.0; d];
            col[c] = 1.0;
            col
        })
        .collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..d.saturating_sub(1) {
            for j in (i + 1)..d {
                let alpha = dot(&a[i], &a[i]);
                let beta = dot(&a[j], &a[j]);
                let gamma = dot(&a[i], &a[j]);
                if gamma == 0.0 || math::abs(gamma) <= JACOBI_TOL * math::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + math::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + math::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                for r in 0..n {
                    let ai = a[i][r];
                    let aj = a[j][r];
                    a[i][r] = c * ai - s * aj;
                    a[j][r] = s * ai + c * aj;
                }
                for r in 0..d {
                    let vi = v[i][r];
                    let vj = v[j][r];
                    v[i][r] = c * vi - s * vj;
                    v[j][r] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let mut sigmas: Vec<f64> = a.iter().map(|col| norm(col)).collect();
    order.sort_by(|&x, &y| sigmas[y].partial_cmp(&sigmas[x]).unwrap().then(x.cmp(&y)));

    let r = n.min(d);
    let mut u = Matrix::zeros(n, r);
    let mut vm = Matrix::zeros(d, r);
    let mut sigma = Vec::with_capacity(r);
    for (out_c, &src) in order.iter().take(r).enumerate() {
        let s = sigmas[src];
        // Sign: largest-magnitude component of the right-singular vector
        // made positive; ties resolved by the lowest index.
        let mut pivot = 0;
        for (idx, val) in v[src].iter().enumerate() {
            if math::abs(*val) > math::abs(v[src][pivot]) {
                pivot = idx;
            }
        }
        let flip = if v[src][pivot] < 0.0 { -1.0 } else { 1.0 };
        sigma.push(s);
        for row in 0..d {
            vm.set(row, out_c, flip * v[src][row]);
        }
        if s > 0.0 {
            for row in 0..n {
                u.set(row, out_c, flip * a[src][row] / s);
            }
        }
    }
    sigmas.sort_by(|x, y| y.partial_cmp(x).unwrap());

    Svd { u, sigma, v: vm }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn svd_of_diagonal_matrix() {
        let m = Matrix::from_vec(3, 2, vec![3.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let s = svd(&m);
        assert_close(s.sigma[0], 3.0, 1e-12);
        assert_close(s.sigma[1], 2.0, 1e-12);
        let rec = s.reconstruct(2);
        for r in 0..3 {
            for c in 0..2 {
                assert_close(rec.get(r, c), m.get(r, c), 1e-12);
            }
        }
    }

    #[test]
    fn svd_handles_wide_matrix() {
        let m = Matrix::from_vec(2, 4, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let s = svd(&m);
        assert_eq!(s.u.rows(), 2);
        assert_eq!(s.v.rows(), 4);
        let rec = s.reconstruct(2);
        for r in 0..2 {
            for c in 0..4 {
                assert_close(rec.get(r, c), m.get(r, c), 1e-10);
            }
        }
    }

    #[test]
    fn singular_values_sorted_and_nonnegative() {
        let m = Matrix::from_vec(4, 3, (0..12).map(|i| ((i * 7 % 5) as f64) - 2.0).collect());
        let s = svd(&m);
        for w in s.sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(s.sigma.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn zero_matrix_svd() {
        let m = Matrix::zeros(3, 2);
        let s = svd(&m);
        assert_eq!(s.sigma, vec![0.0, 0.0]);
    }
}
