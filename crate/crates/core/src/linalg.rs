//! Small dense linear algebra: the handful of factorizations the geometry
//! needs for matrices with at most a few dozen entries.
//!
//! Matrices are column-major so that Jacobian columns (tangent vectors) are
//! contiguous slices.

use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    ///
    /// Panics if the columns have different lengths.
    pub fn from_columns<C: AsRef<[T]>>(rows: usize, columns: &[C]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            let c = c.as_ref();
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend_from_slice(c);
        }
        Self {
            rows,
            cols: columns.len(),
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> {
        (0..self.cols).map(move |j| self.col(j))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch");
        Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(T::zero(), |acc, l| acc + self[(i, l)] * rhs[(l, j)])
        })
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![T::zero(); self.rows];
        for (j, &vj) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o = *o + a * vj;
            }
        }
        out
    }

    /// `Aᵀ v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.rows, v.len());
        self.columns().map(|c| dot(c, v)).collect()
    }

    /// Gram matrix `AᵀA`.
    pub fn gram(&self) -> Self {
        let k = self.cols;
        let mut g = Self::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = dot(self.col(i), self.col(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[j * self.rows + i]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[j * self.rows + i]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Thin singular value decomposition `A = U diag(sigma) Vᵀ` of a tall matrix.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// `m × k`, orthonormal columns for every nonzero singular value.
    pub u: Mat<T>,
    /// Descending.
    pub sigma: Vec<T>,
    /// `k × k` orthogonal.
    pub v: Mat<T>,
}

impl<T: Real> Svd<T> {
    pub fn sigma_max(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }

    pub fn sigma_min(&self) -> T {
        self.sigma.last().copied().unwrap_or_else(T::zero)
    }

    /// Minimum-norm least-squares solution of `A x = b`.
    pub fn solve_least_squares(&self, b: &[T]) -> Vec<T> {
        let k = self.sigma.len();
        let cutoff = self.sigma_max() * T::epsilon() * T::from_usize_lossy(self.u.rows().max(1));
        let coeff: Vec<T> = (0..k)
            .map(|j| {
                if self.sigma[j] > cutoff {
                    dot(self.u.col(j), b) / self.sigma[j]
                } else {
                    T::zero()
                }
            })
            .collect();
        self.v.mul_vec(&coeff)
    }
}

/// One-sided Jacobi SVD for `rows >= cols`.
pub fn svd<T: Real>(a: &Mat<T>) -> Svd<T> {
    let (m, k) = (a.rows(), a.cols());
    assert!(m >= k, "svd expects a tall matrix");
    let mut w = a.clone();
    let mut v = Mat::identity(k);
    let eps = T::epsilon();

    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                let gamma = dot(w.col(p), w.col(q));
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::two() * gamma);
                let t = zeta.sign_nonneg() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<T> = (0..k).map(|j| norm(w.col(j))).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = Mat::zeros(m, k);
    let mut vs = Mat::zeros(k, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > T::zero() {
            for (o, &x) in u.col_mut(dst).iter_mut().zip(w.col(src)) {
                *o = x / s;
            }
        }
        vs.col_mut(dst).copy_from_slice(v.col(src));
    }
    Svd { u, sigma, v: vs }
}

fn rotate_columns<T: Real>(m: &mut Mat<T>, p: usize, q: usize, c: T, s: T) {
    for i in 0..m.rows() {
        let a = m[(i, p)];
        let b = m[(i, q)];
        m[(i, p)] = c * a - s * b;
        m[(i, q)] = s * a + c * b;
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns.
pub fn symmetric_eigen<T: Real>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "symmetric_eigen expects a square matrix");
    let mut s = a.clone();
    let mut v = Mat::identity(n);

    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + s[(i, j)] * s[(i, j)]);
        let diag: T = (0..n).fold(T::zero(), |acc, i| acc + s[(i, i)] * s[(i, i)]);
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (s[(q, q)] - s[(p, p)]) / (T::two() * apq);
                let t = theta.sign_nonneg() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let sn = t * c;
                // S <- Jᵀ S J with J the Givens rotation in the (p, q) plane.
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
                rotate_columns(&mut v, p, q, c, sn);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[(i, i)].partial_cmp(&s[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| s[(i, i)]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.col_mut(dst).copy_from_slice(v.col(src));
    }
    (values, vecs)
}

/// Solves `A x = b` for symmetric positive definite `A`; `None` if `A` is not.
pub fn cholesky_solve<T: Real>(a: &Mat<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - l[(i, k)] * y[k];
        }
        y[i] = y[i] / l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] = y[i] - l[(k, i)] * y[k];
        }
        y[i] = y[i] / l[(i, i)];
    }
    Some(y)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant<T: Real>(a: &Mat<T>) -> T {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = a.clone();
    let mut det = T::one();
    for c in 0..n {
        let pivot = (c..n)
            .max_by(|&i, &j| {
                m[(i, c)]
                    .abs()
                    .partial_cmp(&m[(j, c)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(c);
        if m[(pivot, c)] == T::zero() {
            return T::zero();
        }
        if pivot != c {
            for j in 0..n {
                let tmp = m[(c, j)];
                m[(c, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            det = -det;
        }
        let p = m[(c, c)];
        det = det * p;
        for i in (c + 1)..n {
            let f = m[(i, c)] / p;
            for j in c..n {
                m[(i, j)] = m[(i, j)] - f * m[(c, j)];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs_matrix() {
        let a = Mat::from_columns(3, &[[1.0, 2.0, 0.5], [-0.3, 0.7, 4.0]]);
        let f = svd(&a);
        let us = Mat::from_fn(3, 2, |i, j| f.u[(i, j)] * f.sigma[j]);
        let back = us.matmul(&f.v.transpose());
        assert!(back.max_abs_diff(&a) < 1e-14);
        assert!(f.sigma[0] >= f.sigma[1]);
        assert!(f.u.gram().max_abs_diff(&Mat::identity(2)) < 1e-14);
    }

    #[test]
    fn svd_of_rank_one_matrix_has_zero_singular_value() {
        let a = Mat::<f64>::from_columns(3, &[[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]]);
        let f = svd(&a);
        assert!(f.sigma_min().abs() < 1e-14);
        assert!((f.sigma_max() - 10.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn eigen_of_diagonalizable_matrix() {
        let a = Mat::<f64>::from_columns(3, &[[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]]);
        let (vals, vecs) = symmetric_eigen(&a);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        assert!((vals[2] - 5.0).abs() < 1e-14);
        for j in 0..3 {
            let av = a.mul_vec(vecs.col(j));
            for i in 0..3 {
                assert!((av[i] - vals[j] * vecs[(i, j)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cholesky_and_determinant() {
        let a = Mat::from_columns(2, &[[4.0, 2.0], [2.0, 3.0]]);
        let x = cholesky_solve(&a, &[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0f64).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0f64).abs() < 1e-14);
        assert!((determinant(&a) - 8.0f64).abs() < 1e-14);
        let singular = Mat::from_columns(2, &[[1.0, 2.0], [2.0, 4.0]]);
        assert!(cholesky_solve(&singular, &[1.0, 1.0]).is_none());
        assert_eq!(determinant(&Mat::from_columns(2, &[[0.0, 1.0], [1.0, 0.0]])), -1.0);
    }
}
