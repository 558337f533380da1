//! Semi-helix hypersurfaces of Euclidean space.
//!
//! A hypersurface `M ⊂ ℝⁿ` is a semi-helix with respect to a unit vector
//! `d` when the angle `θ = arcsin⟨d, ξ⟩` between `d` and every tangent
//! space stays in an open window `(θ0 − ε, θ0 + ε)`; with `ε = 0` it is a
//! helix. This crate
//!
//! * sweeps a base hypersurface of `d^⊥` along circles into a semi-helix
//!   ([`construct`]),
//! * certifies the angle window on any parametric hypersurface from SVD
//!   tangent frames ([`surface`], [`construct::verify_semihelix`]),
//! * traces the integral curves of the tangential part of `d`, which are
//!   circle arcs ([`curves`]),
//! * recovers the base, the sweep radius and the local product structure
//!   from the surface alone ([`reconstruct`]),
//! * fits the axis `d` to an oriented point cloud ([`direction_fit`]).
//!
//! Everything numeric is generic over [`Real`] (`f64` or `f32`); the
//! aliases below fix the scalar type.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod construct;
pub mod curves;
pub mod direction_fit;
pub mod error;
pub mod euclid;
pub mod export;
pub mod linalg;
pub mod presets;
pub mod reconstruct;
pub mod scalar;
pub mod surface;

pub use construct::{
    build_product_surface, check_immersion_rank, immerse, verify_construction, verify_semihelix, BaseField, BaseSample,
    ParametricBase, SemiHelixSpec,
};
pub use curves::{fit_circle, theta_linearity, trace_integral_curve, ClosedFormArc, IntegralCurve};
pub use direction_fit::{fit_direction, OrientedPointCloud};
pub use error::{Error, Result};
pub use euclid::{AngleWindow, Direction, Hyperplane, VecN};
pub use presets::Preset;
pub use reconstruct::{reconstruct_local, trace_to_zero_angle, ReconstructOptions};
pub use scalar::Real;
pub use surface::{DomainBox, Interval, JacobianMode, ParamImmersion, SampleGrid};

pub type Vector = VecN<f64>;
pub type Vector32 = VecN<f32>;
pub type Axis = Direction<f64>;
pub type Axis32 = Direction<f32>;
pub type Window = AngleWindow<f64>;
pub type Window32 = AngleWindow<f32>;
pub type Surface = ParamImmersion<f64>;
pub type Surface32 = ParamImmersion<f32>;
pub type Spec = SemiHelixSpec<f64>;
pub type Spec32 = SemiHelixSpec<f32>;
