//! Vectors, directions, angle windows and hyperplanes of ℝⁿ.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::Real;

/// A point or vector of ℝⁿ with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct VecN<T>(Vec<T>);

impl<T: Real> VecN<T> {
    /// Rejects non-finite coordinates.
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate in {:?}",
                crate::error::to_f64_vec(&coords)
            )));
        }
        Ok(Self(coords))
    }

    /// Wraps coordinates produced by arithmetic on finite values.
    #[inline]
    pub(crate) fn from_vec(coords: Vec<T>) -> Self {
        Self(coords)
    }

    pub fn from_slice(coords: &[T]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn axis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = T::one();
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        linalg::dot(&self.0, &other.0)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.iter().map(|&x| x * s).collect())
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a + s * b).collect())
    }

    pub fn distance(&self, other: &Self) -> T {
        (self - other).norm()
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn to_f64(&self) -> VecN<f64> {
        VecN(crate::error::to_f64_vec(&self.0))
    }
}

impl<T> Index<usize> for VecN<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> AsRef<[T]> for VecN<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

impl<'a, T: Real> Add<&'a VecN<T>> for &'a VecN<T> {
    type Output = VecN<T>;
    fn add(self, rhs: &VecN<T>) -> VecN<T> {
        assert_eq!(self.dim(), rhs.dim());
        VecN(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect())
    }
}

impl<'a, T: Real> Sub<&'a VecN<T>> for &'a VecN<T> {
    type Output = VecN<T>;
    fn sub(self, rhs: &VecN<T>) -> VecN<T> {
        assert_eq!(self.dim(), rhs.dim());
        VecN(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a - b).collect())
    }
}

impl<T: Real> Mul<T> for &VecN<T> {
    type Output = VecN<T>;
    fn mul(self, s: T) -> VecN<T> {
        self.scale(s)
    }
}

impl<T: Real> Neg for &VecN<T> {
    type Output = VecN<T>;
    fn neg(self) -> VecN<T> {
        self.scale(-T::one())
    }
}

/// A unit vector of ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Direction<T>(VecN<T>);

impl<T: Real> Direction<T> {
    /// Normalizes `v`; fails for the zero vector.
    pub fn new(v: VecN<T>) -> Result<Self> {
        let n = v.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        Ok(Self(v.scale(T::one() / n)))
    }

    /// Accepts `v` only if it is already unit within [`Real::UNIT_TOL`].
    pub fn from_unit(v: VecN<T>) -> Result<Self> {
        let n = v.norm();
        if (n - T::one()).abs() > T::unit_tol() {
            return Err(Error::InvalidInput(format!("direction has norm {n}, expected 1")));
        }
        Ok(Self(v))
    }

    /// For vectors that are unit by construction; no check.
    #[inline]
    pub(crate) fn unchecked(v: VecN<T>) -> Self {
        Self(v)
    }

    pub fn axis(n: usize, i: usize) -> Self {
        Self(VecN::axis(n, i))
    }

    /// The last coordinate axis `(0, …, 0, 1)`.
    pub fn last_axis(n: usize) -> Self {
        Self::axis(n, n - 1)
    }

    #[inline]
    pub fn as_vec(&self) -> &VecN<T> {
        &self.0
    }

    pub fn into_vec(self) -> VecN<T> {
        self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn dot(&self, v: &VecN<T>) -> T {
        self.0.dot(v)
    }

    pub fn flipped(&self) -> Self {
        Self(-&self.0)
    }

    /// Sign-normalizes so the first coordinate with magnitude above
    /// `tol` is positive.
    pub fn canonical_sign(&self, tol: T) -> Self {
        match self.0.as_slice().iter().find(|c| c.abs() > tol) {
            Some(c) if *c < T::zero() => self.flipped(),
            _ => self.clone(),
        }
    }
}

impl<T> Index<usize> for Direction<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// The admissible angle range `(theta0 - epsilon, theta0 + epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleWindow<T> {
    pub theta0: T,
    pub epsilon: T,
}

impl<T: Real> AngleWindow<T> {
    /// Requires `0 <= epsilon < π/2` and the window inside `(-π/2, π/2)`.
    pub fn new(theta0: T, epsilon: T) -> Result<Self> {
        let half_pi = T::FRAC_PI_2();
        if !theta0.is_finite() || !epsilon.is_finite() {
            return Err(Error::InvalidInput("window bounds must be finite".into()));
        }
        if epsilon < T::zero() || epsilon >= half_pi {
            return Err(Error::InvalidInput(format!(
                "epsilon = {epsilon} must satisfy 0 <= epsilon < pi/2"
            )));
        }
        if theta0 - epsilon <= -half_pi || theta0 + epsilon >= half_pi {
            return Err(Error::InvalidInput(format!(
                "window ({}, {}) must lie inside (-pi/2, pi/2)",
                theta0 - epsilon,
                theta0 + epsilon
            )));
        }
        Ok(Self { theta0, epsilon })
    }

    pub fn lo(&self) -> T {
        self.theta0 - self.epsilon
    }

    pub fn hi(&self) -> T {
        self.theta0 + self.epsilon
    }

    /// A zero-width window is the helix case: angles must equal `theta0`
    /// within [`Real::HELIX_TOL`].
    pub fn is_helix(&self) -> bool {
        self.epsilon == T::zero()
    }

    /// Signed distance of `theta` to the window boundary, positive inside.
    pub fn margin(&self, theta: T) -> T {
        let half_width = if self.is_helix() { T::helix_tol() } else { self.epsilon };
        half_width - (theta - self.theta0).abs()
    }

    /// Strict membership in the open window.
    pub fn contains(&self, theta: T) -> bool {
        self.margin(theta) > T::zero()
    }
}

/// An affine hyperplane `{y : ⟨y - point, normal⟩ = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperplane<T> {
    pub point: VecN<T>,
    pub normal: Direction<T>,
}

impl<T: Real> Hyperplane<T> {
    pub fn new(point: VecN<T>, normal: Direction<T>) -> Result<Self> {
        if point.dim() != normal.dim() {
            return Err(Error::InvalidInput("hyperplane dimension mismatch".into()));
        }
        Ok(Self { point, normal })
    }

    #[inline]
    pub fn signed_offset(&self, y: &VecN<T>) -> T {
        self.normal.dot(&(y - &self.point))
    }

    /// Translate of the hyperplane through `point`.
    pub fn through(&self, point: VecN<T>) -> Self {
        Self {
            point,
            normal: self.normal.clone(),
        }
    }
}

/// Membership of `y` in `q` up to the offset tolerance `tol`.
pub fn hyperplane_slice_test<T: Real>(q: &Hyperplane<T>, y: &VecN<T>, tol: T) -> bool {
    q.signed_offset(y).abs() <= tol
}

/// Orthogonal projection of `v` onto the span of `basis`, via the Gram
/// normal equations.
pub fn project_onto_subspace<T: Real>(v: &VecN<T>, basis: &[VecN<T>]) -> Result<VecN<T>> {
    let n = v.dim();
    if basis.is_empty() {
        return Ok(VecN::zeros(n));
    }
    if basis.iter().any(|b| b.dim() != n) {
        return Err(Error::InvalidInput("basis dimension mismatch".into()));
    }
    let a = Mat::from_columns(n, basis);
    let gram = a.gram();
    let (eig, _) = linalg::symmetric_eigen(&gram);
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    if !(lo > T::zero()) || hi / lo > T::cond_limit() {
        return Err(Error::DegenerateBasis(format!(
            "Gram matrix condition number {} exceeds limit",
            if lo > T::zero() { hi / lo } else { T::infinity() }
        )));
    }
    let rhs = a.tr_mul_vec(v.as_slice());
    let coeff = linalg::cholesky_solve(&gram, &rhs)
        .ok_or_else(|| Error::DegenerateBasis("Gram matrix not positive definite".into()))?;
    Ok(VecN::from_vec(a.mul_vec(&coeff)))
}

/// Angle `θ` between a direction and the hyperplane with unit normal `xi`,
/// from `sin θ = ⟨d, xi⟩`. The sign follows the orientation of `xi`.
pub fn signed_angle<T: Real>(d: &Direction<T>, xi: &Direction<T>) -> T {
    let s = d.as_vec().dot(xi.as_vec());
    s.max(-T::one()).min(T::one()).asin()
}

/// Completes an orthonormal family to an orthonormal basis of ℝⁿ.
///
/// The input vectors come first, unchanged. The completion runs
/// Gram–Schmidt (two passes) over the coordinate axes in index order,
/// skipping axes whose residual norm is below `1/sqrt(2n)`; some axis
/// always clears that bar while the basis is incomplete.
pub fn extend_orthonormal_basis<T: Real>(partial: &[VecN<T>], n: usize) -> Result<Vec<VecN<T>>> {
    if partial.len() > n {
        return Err(Error::DegenerateBasis(format!(
            "{} vectors cannot be orthonormal in dimension {n}",
            partial.len()
        )));
    }
    if partial.iter().any(|v| v.dim() != n) {
        return Err(Error::DegenerateBasis("vector dimension mismatch".into()));
    }
    let tol = T::ortho_tol();
    for (i, a) in partial.iter().enumerate() {
        for (j, b) in partial.iter().enumerate().skip(i) {
            let target = if i == j { T::one() } else { T::zero() };
            if (a.dot(b) - target).abs() > tol {
                return Err(Error::DegenerateBasis(format!(
                    "input vectors {i} and {j} are not orthonormal"
                )));
            }
        }
    }

    let mut basis: Vec<VecN<T>> = partial.to_vec();
    let threshold = T::one() / (T::two() * T::from_usize_lossy(n)).sqrt();
    for axis in 0..n {
        if basis.len() == n {
            break;
        }
        let mut w = VecN::axis(n, axis);
        for _pass in 0..2 {
            for b in &basis {
                let c = w.dot(b);
                w = w.axpy(-c, b);
            }
        }
        let len = w.norm();
        if len >= threshold {
            basis.push(w.scale(T::one() / len));
        }
    }
    debug_assert_eq!(basis.len(), n);
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, SQRT_2};

    fn v(c: &[f64]) -> VecN<f64> {
        VecN::from_slice(c).unwrap()
    }

    #[test]
    fn projection_examples() {
        let p = project_onto_subspace(&v(&[0., 0., 1.]), &[v(&[1., 0., 0.]), v(&[0., 1., 0.])]).unwrap();
        assert_eq!(p, v(&[0., 0., 0.]));
        let p = project_onto_subspace(&v(&[1., 1., 0.]), &[v(&[1., 0., 0.])]).unwrap();
        assert_eq!(p, v(&[1., 0., 0.]));
    }

    #[test]
    fn projection_matches_gram_schmidt_oracle() {
        let target = v(&[1., 2., 3.]);
        let basis = [v(&[1. / SQRT_2, 1. / SQRT_2, 0.]), v(&[0., 0., 1.])];
        let p = project_onto_subspace(&target, &basis).unwrap();
        // Component-wise Gram–Schmidt: the basis is already orthonormal, so
        // the projection is the sum of the coordinate components.
        let oracle = basis.iter().fold(VecN::zeros(3), |acc, b| acc.axpy(target.dot(b), b));
        assert!(p.distance(&oracle) < 1e-14);
        // Frozen from the oracle: (1.5, 1.5, 3).
        assert!(p.distance(&v(&[1.5, 1.5, 3.0])) < 1e-14);
        let resid = &target - &p;
        for b in &basis {
            assert!(resid.dot(b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_rejects_dependent_basis() {
        let err = project_onto_subspace(&v(&[1., 0., 0.]), &[v(&[1., 1., 0.]), v(&[2., 2., 0.])]);
        assert!(matches!(err, Err(Error::DegenerateBasis(_))));
        let err = project_onto_subspace(&v(&[1., 0., 0.]), &[v(&[1., 0., 0.]), v(&[1., 1e-7, 0.])]);
        assert!(matches!(err, Err(Error::DegenerateBasis(_))));
    }

    #[test]
    fn signed_angle_examples() {
        let d = Direction::<f64>::last_axis(3);
        assert!((signed_angle(&d, &d) - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(signed_angle(&d, &Direction::axis(3, 0)), 0.0);
        let xi = Direction::new(v(&[3f64.sqrt() / 2., 0., 0.5])).unwrap();
        assert!((signed_angle(&d, &xi) - FRAC_PI_6).abs() < 1e-15);
        assert_eq!(signed_angle(&d, &xi.flipped()), -signed_angle(&d, &xi));
    }

    #[test]
    fn signed_angle_clamps_roundoff() {
        let d = Direction::unchecked(v(&[0., 0., 1. + 1e-15]));
        assert_eq!(signed_angle(&d, &Direction::last_axis(3)), FRAC_PI_2);
    }

    #[test]
    fn basis_completion_examples() {
        let b = extend_orthonormal_basis(&[v(&[1., 0., 0.]), v(&[0., 0., 1.])], 3).unwrap();
        assert_eq!(b.len(), 3);
        assert!((b[2][1].abs() - 1.0).abs() < 1e-12);
        let b = extend_orthonormal_basis::<f64>(&[], 4).unwrap();
        for (i, e) in b.iter().enumerate() {
            assert_eq!(*e, VecN::axis(4, i));
        }
        let b = extend_orthonormal_basis(&[v(&[1. / SQRT_2, 1. / SQRT_2, 0.])], 3).unwrap();
        let g = Mat::from_columns(3, &b).gram();
        assert!(g.max_abs_diff(&Mat::identity(3)) < 1e-12);
        assert_eq!(b[0], v(&[1. / SQRT_2, 1. / SQRT_2, 0.]));
    }

    #[test]
    fn basis_completion_rejects_non_orthonormal_input() {
        let err = extend_orthonormal_basis(&[v(&[1., 1., 0.])], 3);
        assert!(matches!(err, Err(Error::DegenerateBasis(_))));
        let err = extend_orthonormal_basis(&[v(&[1., 0., 0.]), v(&[0.6, 0.8, 0.])], 3);
        assert!(matches!(err, Err(Error::DegenerateBasis(_))));
    }

    #[test]
    fn hyperplane_examples() {
        let q = Hyperplane::new(VecN::zeros(3), Direction::last_axis(3)).unwrap();
        assert!(hyperplane_slice_test(&q, &v(&[5., 2., 0.]), 1e-9));
        assert!(!hyperplane_slice_test(&q, &v(&[0., 0., 1.]), 1e-9));
        let q = Hyperplane::new(v(&[1., 0., 0.]), Direction::last_axis(3)).unwrap();
        assert!(hyperplane_slice_test(&q, &v(&[3., 3., 1e-12]), 1e-9));
    }

    #[test]
    fn window_validation() {
        assert!(AngleWindow::new(0.0, 1.6).is_err());
        assert!(AngleWindow::new(0.0, -0.1).is_err());
        assert!(AngleWindow::new(1.0, 0.6).is_err());
        let w = AngleWindow::new(0.0, FRAC_PI_6).unwrap();
        assert!(w.contains(0.5) && !w.contains(FRAC_PI_6) && !w.contains(-0.6));
        let helix = AngleWindow::new(0.0, 0.0).unwrap();
        assert!(helix.contains(1e-12) && !helix.contains(1e-6));
    }

    #[test]
    fn vectors_reject_non_finite() {
        assert!(VecN::new(vec![1.0, f64::NAN]).is_err());
        assert!(Direction::new(VecN::<f64>::zeros(3)).is_err());
        assert!(Direction::from_unit(v(&[1.0, 1e-5, 0.0])).is_err());
    }
}
