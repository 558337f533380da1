//! Integral curves of the tangential part of the axis, their closed-form
//! circles and circle fitting.
//!
//! On a semi-helix the curves `α' = T_θ(α)` are arcs of circles of radius
//! `r` along which the angle grows linearly, `θ(t) = t/r + c`. Tracing runs
//! in the parameter domain: the ambient field is pulled back through the
//! Jacobian by least squares, so every iterate stays on the surface.

use serde::Serialize;

use crate::construct::BaseSample;
use crate::error::{to_f64_vec, Error, Result};
use crate::euclid::{extend_orthonormal_basis, signed_angle, Direction, VecN};
use crate::linalg::{self, Mat};
use crate::surface::{checked_svd, seed_orientation, tangent_frame, ParamImmersion, TangentFrame};
use crate::Real;

/// Unit tangential component of `d` from a frame: `(d − ⟨d,ξ⟩ξ)/|…|`.
pub fn t_theta_from_frame<T: Real>(frame: &TangentFrame<T>, d: &Direction<T>) -> Result<Direction<T>> {
    let xi = frame.xi.as_vec();
    let tang = d.as_vec().axpy(-d.dot(xi), xi);
    let len = tang.norm();
    if !(len >= T::lit(1e-10)) {
        return Err(Error::TangentDegenerate(to_f64_vec(&frame.param)));
    }
    Ok(Direction::unchecked(tang.scale(T::one() / len)))
}

/// The field `T_θ` at the chart point `u`.
pub fn t_theta_field<T: Real>(m: &ParamImmersion<T>, u: &[T], d: &Direction<T>) -> Result<Direction<T>> {
    t_theta_from_frame(&tangent_frame(m, u, d)?, d)
}

/// `T_θ` pulled back to the parameter domain: `J⁺ T_θ`.
pub fn parameter_velocity<T: Real>(m: &ParamImmersion<T>, u: &[T], d: &Direction<T>) -> Result<Vec<T>> {
    let tt = t_theta_field(m, u, d)?;
    let (_, svd) = checked_svd(m, u)?;
    Ok(svd.solve_least_squares(tt.as_vec().as_slice()))
}

/// Curvature vector `dT_θ/dt` of the flow line through `u`, by central
/// differences along the flow (one-sided at the chart boundary).
pub fn flow_curvature<T: Real>(m: &ParamImmersion<T>, u: &[T], d: &Direction<T>) -> Result<VecN<T>> {
    let here = t_theta_field(m, u, d)?;
    let v = parameter_velocity(m, u, d)?;
    let h = T::epsilon().cbrt();
    let shifted = |s: T| -> Option<Direction<T>> {
        let w: Vec<T> = u.iter().zip(&v).map(|(&a, &b)| a + s * h * b).collect();
        if !m.domain().contains(&w) {
            return None;
        }
        t_theta_field(m, &w, d).ok()
    };
    Ok(match (shifted(T::one()), shifted(-T::one())) {
        (Some(f), Some(b)) => (f.as_vec() - b.as_vec()).scale(T::half() / h),
        (Some(f), None) => (f.as_vec() - here.as_vec()).scale(T::one() / h),
        (None, Some(b)) => (here.as_vec() - b.as_vec()).scale(T::one() / h),
        (None, None) => VecN::zeros(d.dim()),
    })
}

/// Frame at `u` with the normal pointing away from the center of curvature
/// of the `T_θ` flow line, so that `θ` increases along `+T_θ`. Falls back
/// to the seed orientation on straight flow lines.
pub fn curve_frame<T: Real>(m: &ParamImmersion<T>, u: &[T], d: &Direction<T>) -> Result<TangentFrame<T>> {
    let mut frame = tangent_frame(m, u, d)?;
    let kappa = flow_curvature(m, u, d)?;
    let along = frame.xi.dot(&kappa);
    if along.abs() > T::lit(1e-6) {
        if along > T::zero() {
            frame.flip();
        }
    } else if seed_orientation(&frame.xi, d) != frame.xi {
        frame.flip();
    }
    Ok(frame)
}

/// A traced integral curve of `T_θ` on a uniform `t` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralCurve<T> {
    /// Strictly increasing, uniform step.
    pub t: Vec<T>,
    pub params: Vec<Vec<T>>,
    pub points: Vec<VecN<T>>,
    /// Angle per node under the curvature orientation of [`curve_frame`],
    /// carried continuously along the curve.
    pub angles: Vec<T>,
    /// The requested span was cut short by the chart boundary.
    pub domain_exit: bool,
}

impl<T: Real> IntegralCurve<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest deviation of the node-to-node speed from 1.
    pub fn max_speed_error(&self) -> T {
        self.points
            .windows(2)
            .zip(self.t.windows(2))
            .map(|(p, t)| (p[1].distance(&p[0]) / (t[1] - t[0]) - T::one()).abs())
            .fold(T::zero(), T::max)
    }
}

/// One RK4 integration state with its oriented frame.
pub(crate) struct Stepper<'a, T: Real> {
    m: &'a ParamImmersion<T>,
    d: &'a Direction<T>,
    pub u: Vec<T>,
    pub frame: TangentFrame<T>,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub(crate) fn new(m: &'a ParamImmersion<T>, d: &'a Direction<T>, u: &[T]) -> Result<Self> {
        let frame = curve_frame(m, u, d)?;
        Ok(Self {
            m,
            d,
            u: u.to_vec(),
            frame,
        })
    }

    /// Classical RK4 step of signed length `h`. `Ok(None)` when a stage
    /// leaves the domain.
    pub(crate) fn step(&self, h: T) -> Result<Option<(Vec<T>, TangentFrame<T>)>> {
        let m = self.m;
        let vel = |w: &[T]| -> Result<Option<Vec<T>>> {
            if !m.domain().contains(w) {
                return Ok(None);
            }
            parameter_velocity(m, w, self.d).map(Some)
        };
        let offset = |k: &[T], s: T| -> Vec<T> { self.u.iter().zip(k).map(|(&a, &b)| a + s * b).collect() };
        let Some(k1) = vel(&self.u)? else { return Ok(None) };
        let Some(k2) = vel(&offset(&k1, h * T::half()))? else {
            return Ok(None);
        };
        let Some(k3) = vel(&offset(&k2, h * T::half()))? else {
            return Ok(None);
        };
        let Some(k4) = vel(&offset(&k3, h))? else {
            return Ok(None);
        };
        let sixth = h / T::lit(6.0);
        let next: Vec<T> = (0..self.u.len())
            .map(|i| self.u[i] + sixth * (k1[i] + T::two() * (k2[i] + k3[i]) + k4[i]))
            .collect();
        if !m.domain().contains(&next) {
            return Ok(None);
        }
        let mut frame = tangent_frame(m, &next, self.d)?;
        if frame.xi.dot(self.frame.xi.as_vec()) < T::zero() {
            frame.flip();
        }
        Ok(Some((next, frame)))
    }

    pub(crate) fn advance(&mut self, next: Vec<T>, frame: TangentFrame<T>) {
        self.u = next;
        self.frame = frame;
    }
}

/// Traces `α' = T_θ(α)` from the chart point `u0` over `t ∈ [0, span]` (or
/// `[span, 0]` for negative spans) with RK4 steps of size `h`.
///
/// Stops early, with `domain_exit` set, when a stage leaves the chart.
pub fn trace_integral_curve<T: Real>(
    m: &ParamImmersion<T>,
    d: &Direction<T>,
    u0: &[T],
    span: T,
    h: T,
) -> Result<IntegralCurve<T>> {
    if !(h > T::zero()) || !span.is_finite() {
        return Err(Error::InvalidInput("trace needs h > 0 and a finite span".into()));
    }
    let mut stepper = Stepper::new(m, d, u0)?;
    let sense = if span < T::zero() { -T::one() } else { T::one() };
    let steps = (span.abs() / h + T::lit(1e-9)).floor().to_usize().unwrap_or(0);

    let mut params = vec![u0.to_vec()];
    let mut points = vec![stepper.frame.point.clone()];
    let mut angles = vec![stepper.frame.theta];
    let mut domain_exit = false;
    for _ in 0..steps {
        match stepper.step(sense * h)? {
            Some((next, frame)) => {
                params.push(next.clone());
                points.push(frame.point.clone());
                angles.push(frame.theta);
                stepper.advance(next, frame);
            }
            None => {
                domain_exit = true;
                break;
            }
        }
    }
    let count = params.len();
    let mut t: Vec<T> = (0..count).map(|k| sense * h * T::from_usize_lossy(k)).collect();
    if sense < T::zero() {
        t.reverse();
        params.reverse();
        points.reverse();
        angles.reverse();
    }
    Ok(IntegralCurve {
        t,
        params,
        points,
        angles,
        domain_exit,
    })
}

/// `α(t) = ((1/a)cos(at+c) + c1)e1 + ((1/a)sin(at+c) + c2)e2 + Σ_{i≥3} c_i e_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormArc<T> {
    pub a: T,
    pub c: T,
    pub offsets: Vec<T>,
    pub basis: Vec<VecN<T>>,
}

impl<T: Real> ClosedFormArc<T> {
    pub fn new(a: T, c: T, offsets: Vec<T>, basis: Vec<VecN<T>>) -> Result<Self> {
        if a == T::zero() || !a.is_finite() {
            return Err(Error::InvalidInput("angular rate must be nonzero".into()));
        }
        let n = basis.len();
        if offsets.len() != n || n < 2 || basis.iter().any(|b| b.dim() != n) {
            return Err(Error::InvalidInput(
                "arc basis must be a square basis matching offsets".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { T::one() } else { T::zero() };
                if (basis[i].dot(&basis[j]) - target).abs() > T::ortho_tol() {
                    return Err(Error::DegenerateBasis("arc basis is not orthonormal".into()));
                }
            }
        }
        Ok(Self { a, c, offsets, basis })
    }

    /// The swept circle through the base sample `b`, parametrized so that
    /// `t = 0` is at sweep angle `theta_start`: `e1 = −η`, `e2 = d`,
    /// `a = 1/r`, `c = theta_start`, offsets from the center `x + rη`.
    pub fn from_construction(b: &BaseSample<T>, theta_start: T, r: T, d: &Direction<T>) -> Result<Self> {
        let e1 = b.eta.as_vec().scale(-T::one());
        let basis = extend_orthonormal_basis(&[e1, d.as_vec().clone()], d.dim())?;
        let center = b.x.axpy(r, b.eta.as_vec());
        let offsets = basis.iter().map(|e| e.dot(&center)).collect();
        Self::new(T::one() / r, theta_start, offsets, basis)
    }

    pub fn radius(&self) -> T {
        T::one() / self.a.abs()
    }

    pub fn eval(&self, t: T) -> VecN<T> {
        let phase = self.a * t + self.c;
        let n = self.basis.len();
        let mut coeff = self.offsets.clone();
        coeff[0] = coeff[0] + phase.cos() / self.a;
        coeff[1] = coeff[1] + phase.sin() / self.a;
        self.basis
            .iter()
            .zip(&coeff)
            .fold(VecN::zeros(n), |acc, (e, &c)| acc.axpy(c, e))
    }
}

/// Least-squares circle through points in ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircleFit<T> {
    pub center: VecN<T>,
    pub radius: T,
    pub plane_basis: [VecN<T>; 2],
    /// RMS distance of the points from the fitted plane.
    pub planarity_rms: T,
    /// RMS of `|p − center| − radius` within the plane.
    pub radial_rms: T,
}

/// PCA plane, algebraic (Kåsa) fit in the plane, then Gauss–Newton on the
/// geometric distance.
pub fn fit_circle<T: Real>(points: &[VecN<T>]) -> Result<CircleFit<T>> {
    if points.len() < 4 {
        return Err(Error::DegenerateGeometry(format!(
            "circle fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let n = points[0].dim();
    if n < 2 || points.iter().any(|p| p.dim() != n) {
        return Err(Error::DegenerateGeometry("inconsistent point dimensions".into()));
    }
    let count = T::from_usize_lossy(points.len());
    let centroid = points
        .iter()
        .fold(VecN::zeros(n), |acc, p| acc.axpy(T::one(), p))
        .scale(T::one() / count);
    let centered: Vec<VecN<T>> = points.iter().map(|p| p - &centroid).collect();
    let cov = Mat::from_fn(n, n, |i, j| {
        centered.iter().fold(T::zero(), |acc, p| acc + p[i] * p[j]) / count
    });
    let (vals, vecs) = linalg::symmetric_eigen(&cov);
    let s1 = vals[n - 1].max(T::zero()).sqrt();
    let s2 = vals[n - 2].max(T::zero()).sqrt();
    if !(s1 > T::zero()) || !(s2 > T::collinear_gate() * s1) {
        return Err(Error::DegenerateGeometry("points are collinear or coincident".into()));
    }
    let e1 = VecN::from_vec(vecs.col(n - 1).to_vec());
    let e2 = VecN::from_vec(vecs.col(n - 2).to_vec());

    let planar: Vec<(T, T)> = centered.iter().map(|p| (p.dot(&e1), p.dot(&e2))).collect();
    let planarity_rms = (centered
        .iter()
        .zip(&planar)
        .map(|(p, &(a, b))| {
            let off = p.axpy(-a, &e1).axpy(-b, &e2);
            off.dot(&off)
        })
        .fold(T::zero(), |acc, v| acc + v)
        / count)
        .sqrt();

    // Kåsa: a² + b² = 2·ca·a + 2·cb·b + k.
    let design = Mat::from_fn(planar.len(), 3, |i, j| match j {
        0 => T::two() * planar[i].0,
        1 => T::two() * planar[i].1,
        _ => T::one(),
    });
    let rhs: Vec<T> = planar.iter().map(|&(a, b)| a * a + b * b).collect();
    let sol = linalg::svd(&design).solve_least_squares(&rhs);
    let (mut ca, mut cb) = (sol[0], sol[1]);
    let r2 = sol[2] + ca * ca + cb * cb;
    if !(r2 > T::zero()) || !r2.is_finite() {
        return Err(Error::DegenerateGeometry("algebraic circle fit failed".into()));
    }
    let mut radius = r2.sqrt();

    for _ in 0..20 {
        let mut jac = Mat::zeros(planar.len(), 3);
        let mut res = vec![T::zero(); planar.len()];
        for (i, &(a, b)) in planar.iter().enumerate() {
            let (da, db) = (a - ca, b - cb);
            let dist = (da * da + db * db).sqrt();
            if dist == T::zero() {
                return Err(Error::DegenerateGeometry("point at the circle center".into()));
            }
            res[i] = dist - radius;
            jac[(i, 0)] = -da / dist;
            jac[(i, 1)] = -db / dist;
            jac[(i, 2)] = -T::one();
        }
        let step = linalg::svd(&jac).solve_least_squares(&res);
        ca = ca - step[0];
        cb = cb - step[1];
        radius = radius - step[2];
        let size = step.iter().fold(T::zero(), |acc, s| acc.max(s.abs()));
        if size <= T::epsilon() * T::lit(4.0) * (T::one() + radius) {
            break;
        }
    }
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::DegenerateGeometry("geometric circle fit diverged".into()));
    }
    let radial_rms = (planar
        .iter()
        .map(|&(a, b)| {
            let e = ((a - ca) * (a - ca) + (b - cb) * (b - cb)).sqrt() - radius;
            e * e
        })
        .fold(T::zero(), |acc, v| acc + v)
        / count)
        .sqrt();
    Ok(CircleFit {
        center: centroid.axpy(ca, &e1).axpy(cb, &e2),
        radius,
        plane_basis: [e1, e2],
        planarity_rms,
        radial_rms,
    })
}

/// Least-squares line `θ ≈ slope·t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub max_residual: T,
}

pub fn theta_linearity<T: Real>(curve: &IntegralCurve<T>) -> Result<LineFit<T>> {
    fit_line(&curve.t, &curve.angles)
}

pub fn fit_line<T: Real>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    if x.len() < 3 || x.len() != y.len() {
        return Err(Error::InsufficientData("line fit needs at least 3 samples".into()));
    }
    let count = T::from_usize_lossy(x.len());
    let mx = x.iter().fold(T::zero(), |a, &v| a + v) / count;
    let my = y.iter().fold(T::zero(), |a, &v| a + v) / count;
    let (sxx, sxy) = x.iter().zip(y).fold((T::zero(), T::zero()), |(sxx, sxy), (&a, &b)| {
        (sxx + (a - mx) * (a - mx), sxy + (a - mx) * (b - my))
    });
    if !(sxx > T::zero()) {
        return Err(Error::InsufficientData("line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (b - (slope * a + intercept)).abs())
        .fold(T::zero(), T::max);
    Ok(LineFit {
        slope,
        intercept,
        max_residual,
    })
}

/// Largest principal angle between the planes spanned by two orthonormal
/// pairs.
pub fn plane_angle<T: Real>(a: &[VecN<T>; 2], b: &[VecN<T>; 2]) -> T {
    let cross = Mat::from_fn(2, 2, |i, j| a[i].dot(&b[j]));
    let cos = linalg::svd(&cross).sigma_min().min(T::one());
    // Better conditioned than acos near zero.
    (T::one() - cos * cos).max(T::zero()).sqrt().asin()
}

/// Angle under the curvature orientation at a chart point.
pub fn curve_angle<T: Real>(m: &ParamImmersion<T>, u: &[T], d: &Direction<T>) -> Result<T> {
    let f = curve_frame(m, u, d)?;
    Ok(signed_angle(d, &f.xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build_product_surface, SemiHelixSpec};
    use crate::euclid::AngleWindow;
    use crate::presets::Preset;
    use crate::surface::JacobianMode;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};

    fn fixture(r: f64, eps: f64) -> (SemiHelixSpec<f64>, ParamImmersion<f64>) {
        let circle = Preset::Circle(1.0).immersion(2).unwrap();
        let spec = SemiHelixSpec::from_surface(circle, r, AngleWindow::new(0.0, eps).unwrap(), false).unwrap();
        let m = build_product_surface(&spec, JacobianMode::Analytic).unwrap();
        (spec, m)
    }

    fn v(c: &[f64]) -> VecN<f64> {
        VecN::from_slice(c).unwrap()
    }

    #[test]
    fn t_theta_examples() {
        let d = Direction::last_axis(3);
        let cyl = Preset::Cylinder(1.0).immersion(3).unwrap();
        let tt = t_theta_field(&cyl, &[0.4, 0.1], &d).unwrap();
        assert!(tt.as_vec().distance(d.as_vec()) < 1e-12);

        let plane = Preset::Plane.immersion(3).unwrap();
        assert!(matches!(
            t_theta_field(&plane, &[0.1, 0.2], &d),
            Err(Error::TangentDegenerate(_))
        ));

        let (spec, m) = fixture(1.0, FRAC_PI_3);
        for (u, th) in [(0.3, 0.4), (2.0, -0.7), (5.0, 0.0)] {
            let b = spec.sample(&[u]).unwrap();
            let oracle = crate::construct::t_theta(&b, th, &d);
            let got = t_theta_field(&m, &[u, th], &d).unwrap();
            assert!(got.as_vec().distance(oracle.as_vec()) < 1e-9);
        }
    }

    #[test]
    fn curve_orientation_matches_sweep_angle() {
        let (_, m) = fixture(1.0, FRAC_PI_3);
        let d = Direction::last_axis(3);
        for th in [-0.8, -0.1, 0.0, 0.3, 0.9] {
            assert!((curve_angle(&m, &[1.0, th], &d).unwrap() - th).abs() < 1e-9);
        }
    }

    #[test]
    fn fixture_trace_follows_the_sweep_circle() {
        let (_, m) = fixture(1.0, FRAC_PI_3);
        let d = Direction::last_axis(3);
        let curve = trace_integral_curve(&m, &d, &[0.0, 0.0], FRAC_PI_6, 1e-3).unwrap();
        assert!(!curve.domain_exit);
        let last = curve.points.last().unwrap();
        let t = *curve.t.last().unwrap();
        let oracle = v(&[2.0 - t.cos(), 0.0, t.sin()]);
        assert!(last.distance(&oracle) < 1e-8);
        let at = v(&[2.0 - 3f64.sqrt() / 2.0, 0.0, 0.5]);
        assert!((t - FRAC_PI_6).abs() < 1e-3 || last.distance(&at) < 1e-8);
        assert!(curve.max_speed_error() < 1e-3);
    }

    #[test]
    fn trace_stops_at_the_window_boundary() {
        let (_, m) = fixture(1.0, 0.2);
        let d = Direction::last_axis(3);
        let curve = trace_integral_curve(&m, &d, &[1.0, 0.0], 1.0, 1e-2).unwrap();
        assert!(curve.domain_exit);
        assert!(curve.angles.iter().all(|t| t.abs() < 0.2));
        let back = trace_integral_curve(&m, &d, &[1.0, 0.0], -0.1, 1e-2).unwrap();
        assert!(back.t.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*back.t.last().unwrap(), 0.0);
    }

    #[test]
    fn cylinder_rulings_are_straight() {
        let cyl = Preset::Cylinder(1.0).immersion(3).unwrap();
        let d = Direction::last_axis(3);
        let curve = trace_integral_curve(&cyl, &d, &[1.0, -0.5], 0.8, 1e-2).unwrap();
        for (p, &t) in curve.points.iter().zip(&curve.t) {
            assert!(p.distance(&v(&[1f64.cos(), 1f64.sin(), -0.5 + t])) < 1e-12);
        }
        assert!(curve.max_speed_error() < 1e-12);
        let fit = theta_linearity(&curve).unwrap();
        assert!(fit.slope.abs() < 1e-12 && fit.max_residual < 1e-12);
        assert!(matches!(fit_circle(&curve.points), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn zero_span_gives_single_node() {
        let (_, m) = fixture(1.0, 0.5);
        let d = Direction::last_axis(3);
        let curve = trace_integral_curve(&m, &d, &[2.0, 0.1], 0.0, 1e-3).unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!(curve.points[0], m.evaluate(&[2.0, 0.1]).unwrap());
    }

    #[test]
    fn closed_form_examples() {
        let basis: Vec<VecN<f64>> = (0..3).map(|i| VecN::axis(3, i)).collect();
        let arc = ClosedFormArc::new(1.0, 0.0, vec![0.0; 3], basis.clone()).unwrap();
        assert!(arc.eval(0.0).distance(&basis[0]) < 1e-15);
        let arc = ClosedFormArc::new(1.0, FRAC_PI_2, vec![0.0; 3], basis.clone()).unwrap();
        assert!(arc.eval(0.0).distance(&basis[1]) < 1e-15);
        let arc = ClosedFormArc::new(2.0, 0.0, vec![0.0; 3], basis.clone()).unwrap();
        for t in [0.0, 0.4, 2.0] {
            assert!((arc.eval(t).norm() - 0.5).abs() < 1e-15);
        }
        assert_eq!(arc.radius(), 0.5);
        assert!(ClosedFormArc::new(0.0, 0.0, vec![0.0; 3], basis).is_err());
    }

    #[test]
    fn circle_fit_recovers_exact_circle() {
        let pts: Vec<VecN<f64>> = (0..50)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 50.0;
                v(&[2.0 + a.cos(), 0.0, a.sin()])
            })
            .collect();
        let fit = fit_circle(&pts).unwrap();
        assert!(fit.center.distance(&v(&[2.0, 0.0, 0.0])) < 1e-10);
        assert!((fit.radius - 1.0).abs() < 1e-10);
        assert!(fit.planarity_rms < 1e-12);
    }

    #[test]
    fn circle_fit_rejects_collinear_points() {
        let pts = [v(&[0., 0., 0.]), v(&[1., 1., 0.]), v(&[2., 2., 0.])];
        assert!(matches!(fit_circle(&pts), Err(Error::DegenerateGeometry(_))));
        let pts: Vec<_> = (0..5).map(|i| v(&[i as f64, 0., 0.])).collect();
        assert!(matches!(fit_circle(&pts), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn line_fit_examples() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|x| 2.0 * x + 0.5).collect();
        let fit = fit_line(&t, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-14 && (fit.intercept - 0.5).abs() < 1e-14);
        assert!(fit_line(&t[..2], &y[..2]).is_err());
    }

    #[test]
    fn plane_angle_examples() {
        let e = |i| VecN::<f64>::axis(3, i);
        assert!(plane_angle(&[e(0), e(1)], &[e(1), e(0)]) < 1e-15);
        assert!((plane_angle(&[e(0), e(1)], &[e(0), e(2)]) - FRAC_PI_2).abs() < 1e-12);
    }
}
