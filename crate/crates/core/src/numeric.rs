//! Scalar abstraction and the shared tolerance record.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Tolerances used across the crate, fixed per scalar precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Unit norm of states, unit trace, probability sums, capability slack.
    pub normalization: T,
    /// Accepted deviation from Σa² = 1 when constructing a channel.
    pub channel_normalization: T,
    /// Max-entry deviation of M†M from the identity.
    pub unitary: T,
    /// Most negative eigenvalue still treated as zero.
    pub eigenvalue: T,
    /// Residual accepted for the perfect-teleportation constraint equations.
    pub constraint: T,
    /// Target residual of the internal root finder and slack for closed-form domains.
    pub solver: T,
    /// Deviation allowed on the equal-weight and orthogonality conditions of a branch.
    pub correction: T,
    /// Magnitudes at or below this are treated as exact zeros.
    pub zero: T,
}

/// Floating-point scalar the library is generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Serialize + Send + Sync + 'static
{
    const TOL: Tolerances<Self>;
}

impl Real for f64 {
    const TOL: Tolerances<f64> = Tolerances {
        normalization: 1e-12,
        channel_normalization: 1e-9,
        unitary: 1e-10,
        eigenvalue: 1e-10,
        constraint: 1e-10,
        solver: 1e-12,
        correction: 1e-9,
        zero: 1e-14,
    };
}

impl Real for f32 {
    const TOL: Tolerances<f32> = Tolerances {
        normalization: 1e-5,
        channel_normalization: 1e-5,
        unitary: 1e-5,
        eigenvalue: 1e-5,
        constraint: 1e-4,
        solver: 1e-6,
        correction: 1e-4,
        zero: 1e-7,
    };
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub(crate) fn clamp<T: Real>(x: T, lo: T, hi: T) -> T {
    x.max(lo).min(hi)
}

/// log₂ 3, the entanglement entropy of the maximally entangled two-qutrit state.
#[inline]
pub fn log2_3<T: Real>() -> T {
    lit::<T>(3.0).log2()
}
