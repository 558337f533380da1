//! Local product structure of a semi-helix recovered from the surface alone.
//!
//! Slicing by the hyperplane through `p` orthogonal to `d` gives a copy of
//! the base; following the `T_θ` flow from each slice point down to angle
//! zero translates it onto the base itself, and the flow circles give the
//! sweep radius. The decomposition
//!
//! ```text
//! p = q + 2r·sin(θ_p/2)·T_φ(q),     φ = (π − θ_p)/2
//! ```
//!
//! is then checked pointwise on a neighborhood of `p`, and optionally the
//! whole chart is rebuilt from the recovered base and compared with the
//! original samples.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::construct::{build_product_surface, BaseField, BaseSample, SemiHelixSpec};
use crate::curves::{curve_frame, fit_circle, flow_curvature, CircleFit, Stepper};
use crate::error::{Error, Result};
use crate::euclid::{AngleWindow, Direction, Hyperplane, VecN};
use crate::surface::{DomainBox, Interval, JacobianMode, ParamImmersion, SampleGrid};
use crate::Real;

/// Chart points whose images lie on a hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceCurve<T> {
    pub params: Vec<Vec<T>>,
    pub points: Vec<VecN<T>>,
    pub tol: T,
}

/// Roots of `⟨ψ(u) − q.point, q.normal⟩` along every grid line, refined by
/// bisection to `|g| <= tol`.
pub fn slice_by_hyperplane<T: Real>(
    m: &ParamImmersion<T>,
    q: &Hyperplane<T>,
    grid: &SampleGrid,
    tol: T,
) -> Result<SliceCurve<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidInput("slice tolerance must be positive".into()));
    }
    if grid.dim() != m.domain_dim() {
        return Err(Error::InvalidInput("grid dimension mismatch".into()));
    }
    let g = |u: &[T]| m.evaluate(u).ok().map(|y| q.signed_offset(&y));
    let nodes = grid.nodes(m.domain());
    let values: Vec<Option<T>> = nodes.par_iter().map(|u| g(u)).collect();

    let mut on_node = BTreeSet::new();
    for (i, v) in values.iter().enumerate() {
        if matches!(v, Some(x) if x.abs() <= tol) {
            on_node.insert(i);
        }
    }
    let mut params: Vec<Vec<T>> = on_node.iter().map(|&i| nodes[i].clone()).collect();
    let crossings: Vec<Vec<T>> = grid
        .edges()
        .par_iter()
        .filter_map(|&(i, j)| {
            let (gi, gj) = (values[i]?, values[j]?);
            if on_node.contains(&i) || on_node.contains(&j) || gi * gj >= T::zero() {
                return None;
            }
            let at = |s: T| -> Vec<T> { nodes[i].iter().zip(&nodes[j]).map(|(&a, &b)| a + s * (b - a)).collect() };
            let (mut lo, mut hi) = (T::zero(), T::one());
            for _ in 0..200 {
                let mid = (lo + hi) * T::half();
                let u = at(mid);
                let gm = g(&u)?;
                if gm.abs() <= tol {
                    return Some(u);
                }
                if (gm < T::zero()) == (gi < T::zero()) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= T::epsilon() {
                    break;
                }
            }
            None
        })
        .collect();
    params.extend(crossings);
    if params.is_empty() {
        return Err(Error::EmptySlice);
    }
    let points = params.iter().map(|u| m.evaluate(u)).collect::<Result<Vec<_>>>()?;
    Ok(SliceCurve { params, points, tol })
}

const ZERO_ANGLE_TOL: f64 = 1e-9;

/// The point where the flow line through `p` is parallel to `d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroAnglePoint<T> {
    pub q: VecN<T>,
    /// Chart coordinates of `q` when it lies on the surface.
    pub q_param: Option<Vec<T>>,
    /// Angle at `p` with the normal pointing away from the flow circle's
    /// center.
    pub theta_p: T,
    /// Base normal at `q`, pointing from `q` toward the circle center.
    pub eta_q: Direction<T>,
    /// `q` was obtained by continuing the fitted circle off the surface.
    pub extended: bool,
    pub circle: Option<CircleFit<T>>,
}

fn flow_step<T: Real>(m: &ParamImmersion<T>, u: &[T], d: &Direction<T>) -> Result<T> {
    let kappa = flow_curvature(m, u, d)?.norm();
    Ok(T::lit(0.01) / kappa.max(T::one()))
}

fn sign_of<T: Real>(x: T) -> bool {
    x < T::zero()
}

/// Follows the `T_θ` flow from `u_p` toward decreasing `|θ|` until the
/// angle vanishes (bisection on the last step). When zero is outside the
/// chart, continues the fitted flow circle to its zero-angle point instead.
pub fn trace_to_zero_angle<T: Real>(m: &ParamImmersion<T>, d: &Direction<T>, u_p: &[T]) -> Result<ZeroAnglePoint<T>> {
    let tol = T::lit(ZERO_ANGLE_TOL);
    let mut stepper = Stepper::new(m, d, u_p)?;
    let theta_p = stepper.frame.theta;
    let p = stepper.frame.point.clone();
    let on_surface = |u: Vec<T>, frame: &crate::surface::TangentFrame<T>| ZeroAnglePoint {
        q: frame.point.clone(),
        q_param: Some(u),
        theta_p,
        eta_q: frame.xi.flipped(),
        extended: false,
        circle: None,
    };
    if theta_p.abs() < tol {
        return Ok(on_surface(u_p.to_vec(), &stepper.frame));
    }
    let h = flow_step(m, u_p, d)?;
    let sense = if theta_p > T::zero() { -T::one() } else { T::one() };
    let mut points = vec![p.clone()];
    for _ in 0..100_000 {
        let Some((next, frame)) = stepper.step(sense * h)? else {
            break;
        };
        let prev = stepper.frame.theta;
        if frame.theta.abs() < tol {
            return Ok(on_surface(next, &frame));
        }
        if sign_of(frame.theta) != sign_of(prev) {
            let (mut lo, mut hi) = (T::zero(), h);
            let mut best = (next, frame);
            for _ in 0..200 {
                let mid = (lo + hi) * T::half();
                let Some((u, f)) = stepper.step(sense * mid)? else {
                    hi = mid;
                    continue;
                };
                let done = f.theta.abs() < tol || hi - lo <= T::epsilon() * h;
                if sign_of(f.theta) == sign_of(prev) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if f.theta.abs() < best.1.theta.abs() {
                    best = (u, f);
                }
                if done {
                    break;
                }
            }
            return Ok(on_surface(best.0, &best.1));
        }
        if frame.theta.abs() > prev.abs() + T::ortho_tol() {
            return Err(Error::FitFailure("angle does not decrease along the flow".into()));
        }
        points.push(frame.point.clone());
        stepper.advance(next, frame);
    }

    // Zero angle is off the chart: continue along the fitted circle.
    let toward = points.len();
    let mut back = Stepper::new(m, d, u_p)?;
    for _ in 0..toward.max(8) {
        let Some((next, frame)) = back.step(-sense * h)? else {
            break;
        };
        points.push(frame.point.clone());
        back.advance(next, frame);
    }
    let circle = fit_circle(&points).map_err(|e| Error::FitFailure(e.to_string()))?;
    let [e1, e2] = &circle.plane_basis;
    let (a, b) = (d.dot(e1), d.dot(e2));
    let len = (a * a + b * b).sqrt();
    if !(len > T::lit(1e-6)) {
        return Err(Error::FitFailure("flow circle plane does not contain the axis".into()));
    }
    let w = e1.scale(-b / len).axpy(a / len, e2);
    let candidates = [
        circle.center.axpy(circle.radius, &w),
        circle.center.axpy(-circle.radius, &w),
    ];
    let q = if candidates[0].distance(&p) <= candidates[1].distance(&p) {
        candidates[0].clone()
    } else {
        candidates[1].clone()
    };
    let eta_q = Direction::new(&circle.center - &q)?;
    Ok(ZeroAnglePoint {
        q,
        q_param: None,
        theta_p,
        eta_q,
        extended: true,
        circle: Some(circle),
    })
}

/// Traces the flow line through `u` both ways inside the chart.
pub fn flow_line_points<T: Real>(
    m: &ParamImmersion<T>,
    d: &Direction<T>,
    u: &[T],
    max_steps: usize,
) -> Result<Vec<VecN<T>>> {
    let h = flow_step(m, u, d)?;
    let mut points = Vec::new();
    for sense in [-T::one(), T::one()] {
        let mut stepper = Stepper::new(m, d, u)?;
        if sense > T::zero() {
            points.push(stepper.frame.point.clone());
        }
        for _ in 0..max_steps {
            let Some((next, frame)) = stepper.step(sense * h)? else {
                break;
            };
            points.push(frame.point.clone());
            stepper.advance(next, frame);
        }
    }
    Ok(points)
}

/// Radius of the circle fitted to the flow line through `u_p`.
pub fn estimate_radius<T: Real>(m: &ParamImmersion<T>, d: &Direction<T>, u_p: &[T]) -> Result<T> {
    let points = flow_line_points(m, d, u_p, 200)?;
    Ok(fit_circle(&points)?.radius)
}

/// `|p − q − 2r·sin(θ/2)·T_φ(q)|` with `T_φ = cos φ·η + sin φ·d`.
pub fn verify_decomposition<T: Real>(
    p: &VecN<T>,
    q: &VecN<T>,
    r: T,
    theta: T,
    eta_q: &Direction<T>,
    d: &Direction<T>,
) -> T {
    let phi = (T::PI() - theta) * T::half();
    let t_phi = eta_q.as_vec().scale(phi.cos()).axpy(phi.sin(), d.as_vec());
    let chord = T::two() * r * (theta * T::half()).sin();
    (p - q).axpy(-chord, &t_phi).norm()
}

/// Outcome for one neighborhood sample `y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborhoodSample<T> {
    pub param: Vec<T>,
    pub y: Option<VecN<T>>,
    pub y_prime: Option<VecN<T>>,
    pub theta: Option<T>,
    pub residual: Option<T>,
    /// `|⟨y′ − y, d⟩ + r̂·sin θ_y|`.
    pub translation_error: Option<T>,
    pub error: Option<String>,
}

/// Comparison of the chart rebuilt from the recovered base with the input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RebuildCheck<T> {
    pub samples: usize,
    pub hausdorff: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport<T> {
    pub p: VecN<T>,
    pub u_p: Vec<T>,
    pub theta_p: T,
    pub q: VecN<T>,
    pub q_extended: bool,
    pub r_hat: T,
    pub residual: T,
    pub neighborhood: Vec<NeighborhoodSample<T>>,
    pub max_residual: T,
    /// Spread of `⟨y′, d⟩` over the neighborhood.
    pub d_component_spread: T,
    pub max_translation_error: T,
    pub failures: usize,
    pub rebuild: Option<RebuildCheck<T>>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ReconstructOptions<T: Real> {
    /// Neighborhood width as a fraction of each axis extent.
    pub neighborhood_fraction: T,
    pub neighborhood_count: usize,
    pub residual_tol: T,
    pub d_spread_tol: T,
    pub translation_tol: T,
    /// Window and grid for the rebuild comparison; skipped when `None`.
    pub rebuild: Option<(AngleWindow<T>, SampleGrid)>,
    pub hausdorff_tol: T,
}

impl<T: Real> Default for ReconstructOptions<T> {
    fn default() -> Self {
        Self {
            neighborhood_fraction: T::lit(0.1),
            neighborhood_count: 5,
            residual_tol: T::lit(1e-6),
            d_spread_tol: T::lit(1e-8),
            translation_tol: T::lit(1e-6),
            rebuild: None,
            hausdorff_tol: T::lit(1e-5),
        }
    }
}

/// Box of the given relative width around `u`, kept inside the domain.
pub fn neighborhood_box<T: Real>(domain: &DomainBox<T>, u: &[T], fraction: T) -> Result<DomainBox<T>> {
    let axes = domain
        .axes()
        .iter()
        .zip(u)
        .map(|(iv, &c)| {
            let half = iv.width() * fraction * T::half();
            let pad = if iv.open { iv.width() * T::lit(1e-6) } else { T::zero() };
            Interval::closed((c - half).max(iv.lo + pad), (c + half).min(iv.hi - pad))
        })
        .collect();
    DomainBox::new(axes)
}

/// Checks the local decomposition on a neighborhood of `u_p`.
///
/// Failures at individual neighborhood samples are recorded in the report;
/// failures at `p` itself are returned as errors.
pub fn reconstruct_local<T: Real>(
    m: &ParamImmersion<T>,
    d: &Direction<T>,
    u_p: &[T],
    opts: &ReconstructOptions<T>,
) -> Result<ReconstructionReport<T>> {
    let zp = trace_to_zero_angle(m, d, u_p)?;
    let p = m.evaluate(u_p)?;
    let r_hat = estimate_radius(m, d, u_p)?;
    let residual = verify_decomposition(&p, &zp.q, r_hat, zp.theta_p, &zp.eta_q, d);

    let local = neighborhood_box(m.domain(), u_p, opts.neighborhood_fraction)?;
    let grid = SampleGrid::uniform(m.domain_dim(), opts.neighborhood_count)?;
    let neighborhood: Vec<NeighborhoodSample<T>> = grid
        .nodes(&local)
        .into_par_iter()
        .map(|u| {
            let outcome = (|| -> Result<(VecN<T>, ZeroAnglePoint<T>)> {
                let y = m.evaluate(&u)?;
                let z = trace_to_zero_angle(m, d, &u)?;
                Ok((y, z))
            })();
            match outcome {
                Ok((y, z)) => {
                    let res = verify_decomposition(&y, &z.q, r_hat, z.theta_p, &z.eta_q, d);
                    let shift = d.dot(&(&z.q - &y));
                    NeighborhoodSample {
                        param: u,
                        translation_error: Some((shift + r_hat * z.theta_p.sin()).abs()),
                        y: Some(y),
                        y_prime: Some(z.q),
                        theta: Some(z.theta_p),
                        residual: Some(res),
                        error: None,
                    }
                }
                Err(e) => NeighborhoodSample {
                    param: u,
                    y: None,
                    y_prime: None,
                    theta: None,
                    residual: None,
                    translation_error: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let failures = neighborhood.iter().filter(|s| s.error.is_some()).count();
    let max_of =
        |f: &dyn Fn(&NeighborhoodSample<T>) -> Option<T>| neighborhood.iter().filter_map(f).fold(T::zero(), T::max);
    let max_residual = max_of(&|s| s.residual).max(residual);
    let max_translation_error = max_of(&|s| s.translation_error);
    let heights: Vec<T> = neighborhood
        .iter()
        .filter_map(|s| s.y_prime.as_ref().map(|q| d.dot(q)))
        .collect();
    let d_component_spread = if heights.is_empty() {
        T::zero()
    } else {
        let hi = heights.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = heights.iter().copied().fold(T::infinity(), T::min);
        hi - lo
    };

    let rebuild = match &opts.rebuild {
        Some((window, grid)) => {
            let hausdorff = rebuild_distance(m, d, u_p, r_hat, window, grid)?;
            Some(RebuildCheck {
                samples: grid.len(),
                hausdorff,
                pass: hausdorff < opts.hausdorff_tol,
            })
        }
        None => None,
    };

    let pass = failures == 0
        && max_residual < opts.residual_tol
        && d_component_spread < opts.d_spread_tol
        && max_translation_error < opts.translation_tol
        && rebuild.as_ref().is_none_or(|r| r.pass);
    Ok(ReconstructionReport {
        p,
        u_p: u_p.to_vec(),
        theta_p: zp.theta_p,
        q: zp.q,
        q_extended: zp.extended,
        r_hat,
        residual,
        neighborhood,
        max_residual,
        d_component_spread,
        max_translation_error,
        failures,
        rebuild,
        pass,
    })
}

/// Base recovered from a chart whose last coordinate is transversal to the
/// slice through `p`: each base coordinate is solved onto the slice, then
/// moved along its flow circle to angle zero.
#[derive(Debug, Clone)]
pub struct RecoveredBase<T: Real> {
    chart: ParamImmersion<T>,
    d: Direction<T>,
    slice: Hyperplane<T>,
    r: T,
    domain: DomainBox<T>,
}

impl<T: Real> RecoveredBase<T> {
    pub fn new(chart: ParamImmersion<T>, d: Direction<T>, p: VecN<T>, r: T) -> Result<Self> {
        if chart.domain_dim() < 2 {
            return Err(Error::InvalidInput(
                "rebuild needs a chart with a transversal axis".into(),
            ));
        }
        let domain = chart.domain().without_axis(chart.domain_dim() - 1);
        let slice = Hyperplane::new(p, d.clone())?;
        Ok(Self {
            chart,
            d,
            slice,
            r,
            domain,
        })
    }

    /// Last chart coordinate where `(u_base, s)` lies on the slice.
    fn solve_slice(&self, u_base: &[T]) -> Result<Vec<T>> {
        let axis = *self.chart.domain().axes().last().expect("chart has axes");
        let pad = if axis.open {
            axis.width() * T::lit(1e-9)
        } else {
            T::zero()
        };
        let (a, b) = (axis.lo + pad, axis.hi - pad);
        let point = |s: T| {
            let mut u = u_base.to_vec();
            u.push(s);
            u
        };
        let g = |s: T| -> Result<T> { Ok(self.slice.signed_offset(&self.chart.evaluate(&point(s))?)) };
        let scan = 32;
        let mut prev = (a, g(a)?);
        for i in 1..=scan {
            let s = a + (b - a) * T::from_usize_lossy(i) / T::from_usize_lossy(scan);
            let gs = g(s)?;
            if prev.1 == T::zero() {
                return Ok(point(prev.0));
            }
            if prev.1 * gs <= T::zero() {
                let (mut lo, mut hi, g_lo) = (prev.0, s, prev.1);
                for _ in 0..200 {
                    let mid = (lo + hi) * T::half();
                    let gm = g(mid)?;
                    if gm == T::zero() {
                        return Ok(point(mid));
                    }
                    if (gm < T::zero()) == (g_lo < T::zero()) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= T::epsilon() * (T::one() + mid.abs()) {
                        break;
                    }
                }
                return Ok(point((lo + hi) * T::half()));
            }
            prev = (s, gs);
        }
        Err(Error::EmptySlice)
    }
}

impl<T: Real> BaseField<T> for RecoveredBase<T> {
    fn domain(&self) -> &DomainBox<T> {
        &self.domain
    }

    fn ambient_dim(&self) -> usize {
        self.d.dim()
    }

    /// `y′ = y + r·n − r·unit(P n)`, where `n` points from `y` to its flow
    /// circle center and `P` projects onto `d^⊥`.
    fn sample(&self, u: &[T]) -> Result<BaseSample<T>> {
        let u_full = self.solve_slice(u)?;
        let frame = curve_frame(&self.chart, &u_full, &self.d)?;
        let n = frame.xi.flipped();
        let eta = Direction::new(n.as_vec().axpy(-self.d.dot(n.as_vec()), self.d.as_vec()))?;
        let x = frame.point.axpy(self.r, n.as_vec()).axpy(-self.r, eta.as_vec());
        Ok(BaseSample { x, eta })
    }

    fn label(&self) -> String {
        format!("recovered[{}]", self.chart.name())
    }
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff_distance<T: Real>(a: &[VecN<T>], b: &[VecN<T>]) -> T {
    let directed = |from: &[VecN<T>], to: &[VecN<T>]| {
        from.par_iter()
            .map(|x| to.iter().map(|y| x.distance(y)).fold(T::infinity(), T::min))
            .reduce(T::zero, T::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Rebuilds the chart from the base recovered through `u_p` and the radius
/// `r`, and returns the Hausdorff distance between both sample sets.
pub fn rebuild_distance<T: Real>(
    m: &ParamImmersion<T>,
    d: &Direction<T>,
    u_p: &[T],
    r: T,
    window: &AngleWindow<T>,
    grid: &SampleGrid,
) -> Result<T> {
    let base = RecoveredBase::new(m.clone(), d.clone(), m.evaluate(u_p)?, r)?;
    let spec = SemiHelixSpec::new(Arc::new(base), r, *window, d.clone())?;
    let rebuilt = build_product_surface(&spec, JacobianMode::FiniteDifference)?;
    let sample = |s: &ParamImmersion<T>| -> Result<Vec<VecN<T>>> {
        grid.nodes(s.domain()).par_iter().map(|u| s.evaluate(u)).collect()
    };
    Ok(hausdorff_distance(&sample(m)?, &sample(&rebuilt)?))
}
