//! Parametric hypersurfaces: charts, Jacobians, tangent frames and
//! coherently oriented normal fields.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{to_f64_vec, Error, Result};
use crate::euclid::{extend_orthonormal_basis, signed_angle, Direction, VecN};
use crate::linalg::{self, Mat, Svd};
use crate::Real;

/// One axis of a parameter domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
    /// Open axes exclude their endpoints.
    pub open: bool,
}

impl<T: Real> Interval<T> {
    pub fn closed(lo: T, hi: T) -> Self {
        Self { lo, hi, open: false }
    }

    pub fn open(lo: T, hi: T) -> Self {
        Self { lo, hi, open: true }
    }

    pub fn contains(&self, x: T) -> bool {
        if self.open {
            self.lo < x && x < self.hi
        } else {
            self.lo <= x && x <= self.hi
        }
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn center(&self) -> T {
        (self.lo + self.hi) * T::half()
    }
}

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainBox<T> {
    axes: Vec<Interval<T>>,
}

impl<T: Real> DomainBox<T> {
    pub fn new(axes: Vec<Interval<T>>) -> Result<Self> {
        if axes.iter().any(|a| !(a.lo < a.hi)) {
            return Err(Error::InvalidInput("domain axes need lo < hi".into()));
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[Interval<T>] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn contains(&self, u: &[T]) -> bool {
        u.len() == self.axes.len() && self.axes.iter().zip(u).all(|(a, &x)| a.contains(x))
    }

    pub fn center(&self) -> Vec<T> {
        self.axes.iter().map(Interval::center).collect()
    }

    /// Box with one extra trailing axis.
    pub fn with_axis(&self, axis: Interval<T>) -> Self {
        let mut axes = self.axes.clone();
        axes.push(axis);
        Self { axes }
    }

    /// Box with axis `i` removed.
    pub fn without_axis(&self, i: usize) -> Self {
        let mut axes = self.axes.clone();
        axes.remove(i);
        Self { axes }
    }
}

/// Regular lattice of sample nodes over a [`DomainBox`].
///
/// Closed axes include their endpoints; open axes place `count` nodes at
/// the interior points of a `count + 1` subdivision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleGrid {
    counts: Vec<usize>,
}

impl SampleGrid {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() || counts.iter().any(|&c| c < 2) {
            return Err(Error::InvalidInput(
                "sample grids need at least 2 nodes per axis".into(),
            ));
        }
        Ok(Self { counts })
    }

    pub fn uniform(dim: usize, count: usize) -> Result<Self> {
        Self::new(vec![count; dim])
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major multi-index, last axis fastest.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.counts.len()];
        for (slot, &c) in idx.iter_mut().zip(&self.counts).rev() {
            *slot = flat % c;
            flat /= c;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn spacing<T: Real>(&self, domain: &DomainBox<T>, axis: usize) -> T {
        let a = domain.axes()[axis];
        let c = self.counts[axis];
        if a.open {
            a.width() / T::from_usize_lossy(c + 1)
        } else {
            a.width() / T::from_usize_lossy(c - 1)
        }
    }

    pub fn coordinate<T: Real>(&self, domain: &DomainBox<T>, axis: usize, i: usize) -> T {
        let a = domain.axes()[axis];
        let h = self.spacing(domain, axis);
        if a.open {
            a.lo + h * T::from_usize_lossy(i + 1)
        } else if i + 1 == self.counts[axis] {
            a.hi
        } else {
            a.lo + h * T::from_usize_lossy(i)
        }
    }

    pub fn node<T: Real>(&self, domain: &DomainBox<T>, flat: usize) -> Vec<T> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.coordinate(domain, axis, i))
            .collect()
    }

    pub fn nodes<T: Real>(&self, domain: &DomainBox<T>) -> Vec<Vec<T>> {
        (0..self.len()).map(|i| self.node(domain, i)).collect()
    }

    /// Lattice edges `(a, b)` with `b` the successor of `a` along one axis.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            let idx = self.multi_index(a);
            for axis in 0..self.dim() {
                if idx[axis] + 1 < self.counts[axis] {
                    let mut nb = idx.clone();
                    nb[axis] += 1;
                    out.push((a, self.flat_index(&nb)));
                }
            }
        }
        out
    }

    fn neighbors(&self, a: usize) -> Vec<usize> {
        let idx = self.multi_index(a);
        let mut out = Vec::with_capacity(2 * self.dim());
        for axis in 0..self.dim() {
            if idx[axis] > 0 {
                let mut nb = idx.clone();
                nb[axis] -= 1;
                out.push(self.flat_index(&nb));
            }
            if idx[axis] + 1 < self.counts[axis] {
                let mut nb = idx.clone();
                nb[axis] += 1;
                out.push(self.flat_index(&nb));
            }
        }
        out
    }
}

/// How [`ParamImmersion::jacobian`] differentiates the chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    Analytic,
    FiniteDifference,
}

pub type EvalFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type JacobianFn<T> = Arc<dyn Fn(&[T]) -> Mat<T> + Send + Sync>;
/// Second partials `∂²ψ/∂u_i∂u_j`, stored at index `i * k + j`.
pub type HessianFn<T> = Arc<dyn Fn(&[T]) -> Vec<Vec<T>> + Send + Sync>;

/// A chart `ψ: box ⊂ ℝᵏ → ℝᵐ`.
#[derive(Clone)]
pub struct ParamImmersion<T> {
    name: String,
    ambient_dim: usize,
    domain: DomainBox<T>,
    eval: EvalFn<T>,
    jacobian: Option<JacobianFn<T>>,
    hessian: Option<HessianFn<T>>,
    mode: JacobianMode,
}

impl<T> fmt::Debug for ParamImmersion<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamImmersion")
            .field("name", &self.name)
            .field("ambient_dim", &self.ambient_dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("mode", &self.mode)
            .finish()
    }
}

impl<T: Real> ParamImmersion<T> {
    pub fn new(
        name: impl Into<String>,
        ambient_dim: usize,
        domain: DomainBox<T>,
        eval: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            ambient_dim,
            domain,
            eval: Arc::new(eval),
            jacobian: None,
            hessian: None,
            mode: JacobianMode::FiniteDifference,
        }
    }

    /// Attaches an analytic Jacobian and switches to analytic mode.
    pub fn with_jacobian(mut self, jac: impl Fn(&[T]) -> Mat<T> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self.mode = JacobianMode::Analytic;
        self
    }

    pub fn with_hessian(mut self, hess: impl Fn(&[T]) -> Vec<Vec<T>> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hess));
        self
    }

    /// Requests a Jacobian mode; analytic falls back to finite differences
    /// when no analytic Jacobian is attached.
    pub fn with_mode(mut self, mode: JacobianMode) -> Self {
        self.mode = if self.jacobian.is_some() {
            mode
        } else {
            JacobianMode::FiniteDifference
        };
        self
    }

    pub fn with_domain(mut self, domain: DomainBox<T>) -> Self {
        assert_eq!(domain.dim(), self.domain.dim(), "domain dimension change");
        self.domain = domain;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &DomainBox<T> {
        &self.domain
    }

    pub fn domain_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn mode(&self) -> JacobianMode {
        self.mode
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn evaluate(&self, u: &[T]) -> Result<VecN<T>> {
        let out = (self.eval)(u);
        if out.len() != self.ambient_dim || out.iter().any(|x| !x.is_finite()) {
            return Err(Error::EvaluationFailure(to_f64_vec(u)));
        }
        Ok(VecN::from_vec(out))
    }

    /// `m × k` Jacobian, analytic or by finite differences depending on the mode.
    pub fn jacobian(&self, u: &[T]) -> Result<Mat<T>> {
        match (&self.jacobian, self.mode) {
            (Some(jac), JacobianMode::Analytic) => {
                let j = jac(u);
                if j.rows() != self.ambient_dim
                    || j.cols() != self.domain_dim()
                    || j.columns().flatten().any(|x| !x.is_finite())
                {
                    return Err(Error::EvaluationFailure(to_f64_vec(u)));
                }
                Ok(j)
            }
            _ => self.fd_jacobian(u),
        }
    }

    /// Central differences with `h = cbrt(eps)·max(1, |u_j|)`; second-order
    /// one-sided stencils where the central stencil leaves the domain.
    pub fn fd_jacobian(&self, u: &[T]) -> Result<Mat<T>> {
        let k = self.domain_dim();
        let mut jac = Mat::zeros(self.ambient_dim, k);
        let base_step = T::epsilon().cbrt();
        for j in 0..k {
            let h = base_step * T::one().max(u[j].abs());
            let axis = self.domain.axes()[j];
            let shifted = |delta: T| -> Result<VecN<T>> {
                let mut w = u.to_vec();
                w[j] = w[j] + delta;
                self.evaluate(&w)
            };
            let col = if axis.contains(u[j] - h) && axis.contains(u[j] + h) {
                let fp = shifted(h)?;
                let fm = shifted(-h)?;
                (&fp - &fm).scale(T::one() / (T::two() * h))
            } else {
                let s = if axis.contains(u[j] + T::two() * h) {
                    h
                } else if axis.contains(u[j] - T::two() * h) {
                    -h
                } else {
                    return Err(Error::EvaluationFailure(to_f64_vec(u)));
                };
                let f0 = self.evaluate(u)?;
                let f1 = shifted(s)?;
                let f2 = shifted(T::two() * s)?;
                f0.scale(-T::lit(3.0))
                    .axpy(T::lit(4.0), &f1)
                    .axpy(-T::one(), &f2)
                    .scale(T::one() / (T::two() * s))
            };
            jac.col_mut(j).copy_from_slice(col.as_slice());
        }
        Ok(jac)
    }

    pub fn analytic_jacobian(&self, u: &[T]) -> Option<Mat<T>> {
        self.jacobian.as_ref().map(|j| j(u))
    }

    pub fn hessian(&self, u: &[T]) -> Option<Vec<Vec<T>>> {
        self.hessian.as_ref().map(|h| h(u))
    }
}

/// Orthonormal tangent frame and unit normal at one chart point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentFrame<T> {
    pub param: Vec<T>,
    pub point: VecN<T>,
    pub tangent_basis: Vec<VecN<T>>,
    pub xi: Direction<T>,
    /// `arcsin⟨d, xi⟩` for the query direction.
    pub theta: T,
    pub sigma_min: T,
    pub sigma_max: T,
}

impl<T: Real> TangentFrame<T> {
    /// Reverses the normal (and the angle with it).
    pub fn flip(&mut self) {
        self.xi = self.xi.flipped();
        self.theta = -self.theta;
    }
}

/// Unit normal from the SVD of a full-rank `m × (m-1)` Jacobian: the
/// completion of the left singular vectors to a basis of ℝᵐ.
pub(crate) fn normal_from_svd<T: Real>(svd: &Svd<T>, m: usize) -> Result<(Vec<VecN<T>>, Direction<T>)> {
    let tangents: Vec<VecN<T>> = svd.u.columns().map(|c| VecN::from_vec(c.to_vec())).collect();
    let mut basis = extend_orthonormal_basis(&tangents, m)?;
    let normal = basis
        .pop()
        .ok_or_else(|| Error::DegenerateBasis("no normal direction".into()))?;
    Ok((tangents, Direction::unchecked(normal)))
}

/// Seed orientation: `⟨xi, d⟩ > 0` when that is decidable, else the first
/// clearly nonzero coordinate positive.
pub fn seed_orientation<T: Real>(xi: &Direction<T>, d: &Direction<T>) -> Direction<T> {
    let s = d.dot(xi.as_vec());
    if s.abs() > T::unit_tol() {
        if s < T::zero() {
            xi.flipped()
        } else {
            xi.clone()
        }
    } else {
        xi.canonical_sign(T::unit_tol())
    }
}

pub(crate) fn checked_svd<T: Real>(s: &ParamImmersion<T>, u: &[T]) -> Result<(Mat<T>, Svd<T>)> {
    let jac = s.jacobian(u)?;
    let svd = linalg::svd(&jac);
    let ratio = if svd.sigma_max() > T::zero() {
        svd.sigma_min() / svd.sigma_max()
    } else {
        T::zero()
    };
    if !(ratio > T::rank_gate()) {
        return Err(Error::RankDeficient {
            at: to_f64_vec(u),
            ratio: ratio.to_f64().unwrap_or(0.0),
        });
    }
    Ok((jac, svd))
}

/// Tangent frame of a hypersurface chart at `u`, normal seed-oriented
/// against `d` (see [`seed_orientation`]).
pub fn tangent_frame<T: Real>(s: &ParamImmersion<T>, u: &[T], d: &Direction<T>) -> Result<TangentFrame<T>> {
    let m = s.ambient_dim();
    if s.domain_dim() + 1 != m {
        return Err(Error::InvalidInput(format!(
            "tangent frames need a hypersurface, got k = {} in m = {m}",
            s.domain_dim()
        )));
    }
    if d.dim() != m {
        return Err(Error::InvalidInput("direction dimension mismatch".into()));
    }
    let point = s.evaluate(u)?;
    let (_, svd) = checked_svd(s, u)?;
    let (tangent_basis, xi) = normal_from_svd(&svd, m)?;
    let xi = seed_orientation(&xi, d);
    let theta = signed_angle(d, &xi);
    Ok(TangentFrame {
        param: u.to_vec(),
        point,
        tangent_basis,
        xi,
        theta,
        sigma_min: svd.sigma_min(),
        sigma_max: svd.sigma_max(),
    })
}

/// Frames at every grid node with a single coherent normal orientation.
#[derive(Debug, Clone)]
pub struct FrameField<T> {
    pub grid: SampleGrid,
    pub frames: Vec<TangentFrame<T>>,
}

/// Computes frames at all nodes, attempting each independently.
pub(crate) fn frames_on_grid<T: Real>(
    s: &ParamImmersion<T>,
    grid: &SampleGrid,
    d: &Direction<T>,
) -> Vec<Result<TangentFrame<T>>> {
    let nodes = grid.nodes(s.domain());
    nodes.par_iter().map(|u| tangent_frame(s, u, d)).collect()
}

/// Propagates the orientation of the first available node across lattice
/// edges, then audits every edge. Nodes with `None` are skipped.
pub(crate) fn orient_frames<T: Real>(grid: &SampleGrid, frames: &mut [Option<TangentFrame<T>>]) -> Result<()> {
    let n = frames.len();
    let mut visited = vec![false; n];
    for seed in 0..n {
        if visited[seed] || frames[seed].is_none() {
            continue;
        }
        // Each connected component keeps the seed rule at its first node.
        visited[seed] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(a) = queue.pop_front() {
            for b in grid.neighbors(a) {
                if visited[b] || frames[b].is_none() {
                    continue;
                }
                let dot = {
                    let fa = frames[a].as_ref().expect("visited node has a frame");
                    let fb = frames[b].as_ref().expect("checked above");
                    fa.xi.dot(fb.xi.as_vec())
                };
                if dot < T::zero() {
                    frames[b].as_mut().expect("checked above").flip();
                }
                visited[b] = true;
                queue.push_back(b);
            }
        }
    }
    for (a, b) in grid.edges() {
        if let (Some(fa), Some(fb)) = (&frames[a], &frames[b]) {
            if fa.xi.dot(fb.xi.as_vec()) <= T::zero() {
                return Err(Error::OrientationConflict(a, b));
            }
        }
    }
    Ok(())
}

/// Coherently oriented frame field over `grid`.
///
/// The first node follows the seed rule; every lattice edge must end with
/// `⟨xi_a, xi_b⟩ > 0`, otherwise [`Error::OrientationConflict`].
pub fn orient_normal_field<T: Real>(
    s: &ParamImmersion<T>,
    grid: &SampleGrid,
    d: &Direction<T>,
) -> Result<FrameField<T>> {
    if grid.dim() != s.domain_dim() {
        return Err(Error::InvalidInput("grid dimension mismatch".into()));
    }
    let mut frames = frames_on_grid(s, grid, d)
        .into_iter()
        .map(|f| f.map(Some))
        .collect::<Result<Vec<_>>>()?;
    orient_frames(grid, &mut frames)?;
    Ok(FrameField {
        grid: grid.clone(),
        frames: frames.into_iter().map(|f| f.expect("all present")).collect(),
    })
}
