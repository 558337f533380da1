//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};
use serde::Serialize;

/// Real scalar usable by the kernel: `f32` or `f64`.
///
/// The associated tolerances are the gates the algorithms use to detect
/// degenerate input. They are tight for `f64` and scaled to the available
/// precision for `f32`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Serialize + Send + Sync + 'static
{
    /// Allowed deviation of a direction from unit length.
    const UNIT_TOL: f64;
    /// Allowed deviation of a Gram matrix from the identity.
    const ORTHO_TOL: f64;
    /// Largest accepted Gram matrix condition number.
    const COND_LIMIT: f64;
    /// Smallest accepted ratio `sigma_min / sigma_max` of a Jacobian.
    const RANK_GATE: f64;
    /// Below this norm a tangential projection is considered to vanish.
    const DEGENERATE_TOL: f64;
    /// Ratio of second to first principal value under which points are collinear.
    const COLLINEAR_GATE: f64;
    /// Width of the admissible band when a window has zero half-width.
    const HELIX_TOL: f64;

    /// Converts an `f64` literal; every literal used by the crate is representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    /// `1` for non-negative values, `-1` otherwise (`signum` without the NaN/zero quirks).
    #[inline]
    fn sign_nonneg(self) -> Self {
        if self >= Self::zero() {
            Self::one()
        } else {
            -Self::one()
        }
    }

    fn unit_tol() -> Self {
        Self::lit(Self::UNIT_TOL)
    }
    fn ortho_tol() -> Self {
        Self::lit(Self::ORTHO_TOL)
    }
    fn cond_limit() -> Self {
        Self::lit(Self::COND_LIMIT)
    }
    fn rank_gate() -> Self {
        Self::lit(Self::RANK_GATE)
    }
    fn degenerate_tol() -> Self {
        Self::lit(Self::DEGENERATE_TOL)
    }
    fn collinear_gate() -> Self {
        Self::lit(Self::COLLINEAR_GATE)
    }
    fn helix_tol() -> Self {
        Self::lit(Self::HELIX_TOL)
    }
}

impl Real for f64 {
    const UNIT_TOL: f64 = 1e-12;
    const ORTHO_TOL: f64 = 1e-10;
    const COND_LIMIT: f64 = 1e12;
    const RANK_GATE: f64 = 1e-8;
    const DEGENERATE_TOL: f64 = 1e-10;
    const COLLINEAR_GATE: f64 = 1e-10;
    const HELIX_TOL: f64 = 1e-9;
}

impl Real for f32 {
    const UNIT_TOL: f64 = 1e-5;
    const ORTHO_TOL: f64 = 1e-4;
    const COND_LIMIT: f64 = 1e5;
    const RANK_GATE: f64 = 1e-4;
    const DEGENERATE_TOL: f64 = 1e-5;
    const COLLINEAR_GATE: f64 = 1e-5;
    const HELIX_TOL: f64 = 1e-4;
}
