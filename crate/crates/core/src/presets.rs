//! Named surfaces with analytic first and second derivatives.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::surface::{DomainBox, Interval, ParamImmersion};
use crate::Real;

/// Catalog entry. Parameters are radii (`ρ`, `R`) or the graph amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// The coordinate hyperplane `x_m = 0` of ℝᵐ over `[-1, 1]^(m-1)`.
    Plane,
    /// Circle of radius ρ in ℝ².
    Circle(f64),
    /// Round sphere of radius ρ in ℝ³, latitude kept away from the poles.
    Sphere(f64),
    /// Vertical cylinder of radius ρ in ℝ³.
    Cylinder(f64),
    /// Torus with center-line radius `R` and tube radius `ρ`.
    Torus(f64, f64),
    /// Graph `z = A·sin(x)·sin(y)`.
    Graph(f64),
}

impl Preset {
    /// Ambient dimension the preset lives in; `None` for the plane, which
    /// exists in every dimension.
    pub fn natural_ambient_dim(&self) -> Option<usize> {
        match self {
            Preset::Plane => None,
            Preset::Circle(_) => Some(2),
            _ => Some(3),
        }
    }

    pub fn immersion<T: Real>(&self, ambient_dim: usize) -> Result<ParamImmersion<T>> {
        if let Some(m) = self.natural_ambient_dim() {
            if m != ambient_dim {
                return Err(Error::InvalidInput(format!(
                    "{self} lives in R^{m}, not R^{ambient_dim}"
                )));
            }
        }
        let lit = T::lit;
        let name = self.to_string();
        let s = match *self {
            Preset::Plane => {
                if ambient_dim < 2 {
                    return Err(Error::InvalidInput("plane needs ambient dimension >= 2".into()));
                }
                let m = ambient_dim;
                let k = m - 1;
                let dom = DomainBox::new(vec![Interval::closed(-T::one(), T::one()); k])?;
                ParamImmersion::new(name, m, dom, move |u: &[T]| {
                    let mut p = u.to_vec();
                    p.push(T::zero());
                    p
                })
                .with_jacobian(move |_u: &[T]| Mat::from_fn(m, k, |i, j| if i == j { T::one() } else { T::zero() }))
                .with_hessian(move |_u: &[T]| vec![vec![T::zero(); m]; k * k])
            }
            Preset::Circle(rho) => {
                positive(rho, "circle radius")?;
                let r = lit(rho);
                let dom = DomainBox::new(vec![Interval::closed(T::zero(), lit(TAU))])?;
                ParamImmersion::new(name, 2, dom, move |u: &[T]| vec![r * u[0].cos(), r * u[0].sin()])
                    .with_jacobian(move |u: &[T]| Mat::from_columns(2, &[[-r * u[0].sin(), r * u[0].cos()]]))
                    .with_hessian(move |u: &[T]| vec![vec![-r * u[0].cos(), -r * u[0].sin()]])
            }
            Preset::Sphere(rho) => {
                positive(rho, "sphere radius")?;
                let r = lit(rho);
                let dom = DomainBox::new(vec![
                    Interval::closed(T::zero(), lit(TAU)),
                    Interval::closed(lit(-1.3), lit(1.3)),
                ])?;
                ParamImmersion::new(name, 3, dom, move |u: &[T]| {
                    let (su, cu, sv, cv) = (u[0].sin(), u[0].cos(), u[1].sin(), u[1].cos());
                    vec![r * cu * cv, r * su * cv, r * sv]
                })
                .with_jacobian(move |u: &[T]| {
                    let (su, cu, sv, cv) = (u[0].sin(), u[0].cos(), u[1].sin(), u[1].cos());
                    Mat::from_columns(
                        3,
                        &[
                            [-r * su * cv, r * cu * cv, T::zero()],
                            [-r * cu * sv, -r * su * sv, r * cv],
                        ],
                    )
                })
                .with_hessian(move |u: &[T]| {
                    let (su, cu, sv, cv) = (u[0].sin(), u[0].cos(), u[1].sin(), u[1].cos());
                    let uu = vec![-r * cu * cv, -r * su * cv, T::zero()];
                    let uv = vec![r * su * sv, -r * cu * sv, T::zero()];
                    let vv = vec![-r * cu * cv, -r * su * cv, -r * sv];
                    vec![uu, uv.clone(), uv, vv]
                })
            }
            Preset::Cylinder(rho) => {
                positive(rho, "cylinder radius")?;
                let r = lit(rho);
                let dom = DomainBox::new(vec![
                    Interval::closed(T::zero(), lit(TAU)),
                    Interval::closed(-T::one(), T::one()),
                ])?;
                ParamImmersion::new(name, 3, dom, move |u: &[T]| vec![r * u[0].cos(), r * u[0].sin(), u[1]])
                    .with_jacobian(move |u: &[T]| {
                        Mat::from_columns(
                            3,
                            &[
                                [-r * u[0].sin(), r * u[0].cos(), T::zero()],
                                [T::zero(), T::zero(), T::one()],
                            ],
                        )
                    })
                    .with_hessian(move |u: &[T]| {
                        let z = vec![T::zero(); 3];
                        vec![
                            vec![-r * u[0].cos(), -r * u[0].sin(), T::zero()],
                            z.clone(),
                            z.clone(),
                            z,
                        ]
                    })
            }
            Preset::Torus(big, rho) => {
                positive(rho, "torus tube radius")?;
                if !(big > rho) {
                    return Err(Error::InvalidInput("torus needs R > rho".into()));
                }
                let (rr, r) = (lit(big), lit(rho));
                let dom = DomainBox::new(vec![
                    Interval::closed(T::zero(), lit(TAU)),
                    Interval::closed(T::zero(), lit(TAU)),
                ])?;
                ParamImmersion::new(name, 3, dom, move |u: &[T]| {
                    let w = rr + r * u[1].cos();
                    vec![w * u[0].cos(), w * u[0].sin(), r * u[1].sin()]
                })
                .with_jacobian(move |u: &[T]| {
                    let (su, cu, sv, cv) = (u[0].sin(), u[0].cos(), u[1].sin(), u[1].cos());
                    let w = rr + r * cv;
                    Mat::from_columns(3, &[[-w * su, w * cu, T::zero()], [-r * sv * cu, -r * sv * su, r * cv]])
                })
                .with_hessian(move |u: &[T]| {
                    let (su, cu, sv, cv) = (u[0].sin(), u[0].cos(), u[1].sin(), u[1].cos());
                    let w = rr + r * cv;
                    let uu = vec![-w * cu, -w * su, T::zero()];
                    let uv = vec![r * sv * su, -r * sv * cu, T::zero()];
                    let vv = vec![-r * cv * cu, -r * cv * su, -r * sv];
                    vec![uu, uv.clone(), uv, vv]
                })
            }
            Preset::Graph(amp) => {
                if !amp.is_finite() {
                    return Err(Error::InvalidInput("graph amplitude must be finite".into()));
                }
                let a = lit(amp);
                let dom = DomainBox::new(vec![Interval::closed(lit(-1.5), lit(1.5)); 2])?;
                ParamImmersion::new(name, 3, dom, move |u: &[T]| {
                    vec![u[0], u[1], a * u[0].sin() * u[1].sin()]
                })
                .with_jacobian(move |u: &[T]| {
                    let (sx, cx, sy, cy) = (u[0].sin(), u[0].cos(), u[1].sin(), u[1].cos());
                    Mat::from_columns(
                        3,
                        &[[T::one(), T::zero(), a * cx * sy], [T::zero(), T::one(), a * sx * cy]],
                    )
                })
                .with_hessian(move |u: &[T]| {
                    let (sx, cx, sy, cy) = (u[0].sin(), u[0].cos(), u[1].sin(), u[1].cos());
                    let xx = vec![T::zero(), T::zero(), -a * sx * sy];
                    let xy = vec![T::zero(), T::zero(), a * cx * cy];
                    vec![xx.clone(), xy.clone(), xy, xx]
                })
            }
        };
        Ok(s)
    }
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be positive, got {x}")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Plane => write!(f, "plane"),
            Preset::Circle(r) => write!(f, "circle({r})"),
            Preset::Sphere(r) => write!(f, "sphere({r})"),
            Preset::Cylinder(r) => write!(f, "cylinder({r})"),
            Preset::Torus(big, r) => write!(f, "torus({big},{r})"),
            Preset::Graph(a) => write!(f, "graph({a})"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// Parses `name` or `name(p1,p2,…)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::InvalidInput(format!("unbalanced parentheses in '{s}'")))?;
                let args = inner
                    .split(',')
                    .filter(|a| !a.trim().is_empty())
                    .map(|a| {
                        a.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidInput(format!("bad preset parameter '{a}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (s[..open].trim(), args)
            }
            None => (s, Vec::new()),
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "preset '{name}' takes {n} parameter(s), got {}",
                    args.len()
                )))
            }
        };
        match name {
            "plane" => arity(0).map(|_| Preset::Plane),
            "circle" => arity(1).map(|_| Preset::Circle(args[0])),
            "sphere" => arity(1).map(|_| Preset::Sphere(args[0])),
            "cylinder" => arity(1).map(|_| Preset::Cylinder(args[0])),
            "torus" => arity(2).map(|_| Preset::Torus(args[0], args[1])),
            "graph" => arity(1).map(|_| Preset::Graph(args[0])),
            other => Err(Error::InvalidInput(format!("unknown preset '{other}'"))),
        }
    }
}
