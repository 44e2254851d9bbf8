//! Resource quantifiers of a scheme and the trade-off bounds on `E₁₂ + H₁₂`.
//!
//! `E₁₂` averages the entanglement entropy of Alice's basis vectors over the
//! outcome distribution, `H₁₂` is the Shannon entropy of that distribution.

use serde::Serialize;
use thiserror::Error;

use crate::channel::SchmidtChannel;
use crate::numeric::{clamp, lit, log2_3, to_f64, Real};
use crate::qlinalg::{binary_entropy, entanglement_from_tangle, qubit_qutrit_tangle, shannon_entropy};
use crate::scheme::{assemble_d12, SchemeError, SchemeParams};
use crate::teleport::{measure_branches, probabilities_closed_form, total_state, InputQubit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResourceError {
    #[error("{name} = {value} outside [{lo}, {hi}]")]
    Domain {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("arccos argument {value} outside [-1, 1]")]
    Arccos { value: f64 },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

fn domain<T: Real>(name: &'static str, value: T, lo: T, hi: T) -> Result<(), ResourceError> {
    let tol = T::TOL.solver;
    if value >= lo - tol && value <= hi + tol {
        Ok(())
    } else {
        Err(ResourceError::Domain {
            name,
            value: to_f64(value),
            lo: to_f64(lo),
            hi: to_f64(hi),
        })
    }
}

/// All resource quantities of one scheme on one channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResourceReport<T> {
    pub e_channel: T,
    pub e12: T,
    pub h12: T,
    /// Row tangles in the order `1+, 2+, 3+, 1−, 2−, 3−`.
    pub tangles: [T; 6],
    pub probabilities: [T; 6],
    pub sum: T,
}

/// `Σ P·E(C)` with `E(C) = H((1 + √(1 − C))/2)`.
pub fn measurement_entanglement<T: Real>(probabilities: &[T], tangles: &[T]) -> T {
    assert_eq!(probabilities.len(), tangles.len());
    probabilities
        .iter()
        .zip(tangles)
        .fold(T::zero(), |acc, (&p, &c)| acc + p * entanglement_from_tangle(c))
}

/// Classical bits sent to Bob: `−Σ P log₂ P`.
pub fn classical_cost<T: Real>(probabilities: &[T]) -> T {
    shannon_entropy(probabilities)
}

/// Row tangles from the rotation entries and phases, order `1+, 2+, 3+, 1−, 2−, 3−`.
pub fn branch_tangles<T: Real>(params: &SchemeParams<T>) -> [T; 6] {
    let u = params.rotation();
    let sq = |x: T| x * x;
    let four = lit::<T>(4.0);
    let two = lit::<T>(2.0);
    let one = T::one();
    let c1 = four * sq(u[0][1]) * (sq(u[0][0]) + sq(u[0][2]));
    let c2 = four * sq(u[1][1]) * (sq(u[1][0]) + sq(u[1][2]));
    let [d1, d2] = params.delta;
    let c3 = two * sq(u[2][0]) * sq(u[2][1]) * (one - d1.cos())
        + two * sq(u[2][0]) * sq(u[2][2]) * (one - d2.cos())
        + two * sq(u[2][1]) * sq(u[2][2]) * (one - (d1 + d2).cos());
    [c1, c1, c3, c2, c2, c3].map(|c| clamp(c, T::zero(), T::one()))
}

/// Report computed by projecting the joint state onto the assembled basis.
pub fn resource_report<T: Real>(ch: &SchmidtChannel<T>, params: &SchemeParams<T>) -> Result<ResourceReport<T>, ResourceError> {
    let (canonical, _) = ch.canonicalize();
    let (_, basis) = assemble_d12(params)?;
    let branches = measure_branches(&total_state(&InputQubit::zero(), &canonical), &basis);
    let mut probabilities = [T::zero(); 6];
    let mut tangles = [T::zero(); 6];
    for (i, b) in branches.iter().enumerate() {
        probabilities[i] = b.probability;
        tangles[i] = qubit_qutrit_tangle(&b.basis_vector).expect("six-dimensional row");
    }
    Ok(assemble(ch.entropy(), probabilities, tangles))
}

/// Report computed from the closed-form probabilities and tangles.
pub fn resource_report_closed_form<T: Real>(ch: &SchmidtChannel<T>, params: &SchemeParams<T>) -> ResourceReport<T> {
    let (canonical, _) = ch.canonicalize();
    assemble(ch.entropy(), probabilities_closed_form(&canonical, params), branch_tangles(params))
}

fn assemble<T: Real>(e_channel: T, probabilities: [T; 6], tangles: [T; 6]) -> ResourceReport<T> {
    let e12 = measurement_entanglement(&probabilities, &tangles);
    let h12 = classical_cost(&probabilities);
    ResourceReport {
        e_channel,
        e12,
        h12,
        tangles,
        probabilities,
        sum: e12 + h12,
    }
}

fn arccos_checked<T: Real>(x: T) -> Result<T, ResourceError> {
    if !(x.abs() <= T::one() + T::TOL.solver) {
        return Err(ResourceError::Arccos { value: to_f64(x) });
    }
    Ok(clamp(x, -T::one(), T::one()).acos())
}

fn comparison_value<T: Real>(xi1: T, xi2: T) -> Result<T, ResourceError> {
    let radicand = lit::<T>(1.0 / 3.0) + lit::<T>(2.0 / 9.0) * (xi1.cos() + xi2.cos() + (xi1 - xi2).cos());
    let x = (T::one() + radicand.max(T::zero()).sqrt()) / lit(2.0);
    Ok(binary_entropy(clamp(x, T::zero(), T::one())).expect("argument clamped"))
}

/// Measurement entanglement of the comparison protocol for channels with two
/// equal coefficients `a₁` and a distinct third one `d`, `d² = 1 − 2a₁²`.
pub fn comparison_e12_case1<T: Real>(a1: T) -> Result<T, ResourceError> {
    let w1 = a1 * a1;
    domain("a1^2", w1, lit(0.25), lit(0.5))?;
    let w1 = clamp(w1, lit(0.25), lit(0.5));
    let wd = (T::one() - lit::<T>(2.0) * w1).max(T::zero());
    let xi1 = T::PI() - arccos_checked((lit::<T>(2.0) * w1 * w1 - wd * wd) / (lit::<T>(2.0) * w1 * w1))?;
    let xi2 = T::PI() + arccos_checked(wd / (lit::<T>(2.0) * w1))?;
    comparison_value(xi1, xi2)
}

/// Measurement entanglement of the comparison protocol for `a₁² = 1/2`,
/// `a₀² + a₂² = 1/2`. Vanishing `a₀` or `a₂` take the limiting arguments.
pub fn comparison_e12_case2<T: Real>(a0: T, a2: T) -> Result<T, ResourceError> {
    let x = a0 * a0;
    let y = a2 * a2;
    let half = lit::<T>(0.5);
    let quarter = lit::<T>(0.25);
    if (x + y - half).abs() > T::TOL.channel_normalization {
        return Err(ResourceError::Domain {
            name: "a0^2 + a2^2",
            value: to_f64(x + y),
            lo: 0.5,
            hi: 0.5,
        });
    }
    let zero = T::TOL.zero;
    let arg1 = if x <= zero { T::one() } else { (x * x + quarter - y * y) / x };
    let arg2 = if x <= zero || y <= zero {
        -T::one()
    } else {
        (x * x + y * y - quarter) / (lit::<T>(2.0) * x * y)
    };
    let xi1 = T::PI() - arccos_checked(arg1)?;
    let xi2 = T::PI() + arccos_checked(arg2)?;
    comparison_value(xi1, xi2)
}

/// A point of the equal-coefficient family with θ₂ = π/4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlueCurvePoint<T> {
    pub theta1: T,
    pub theta3: T,
    /// Order `1+, 2+, 3+, 1−, 2−, 3−`.
    pub probabilities: [T; 6],
    pub tangles: [T; 6],
    pub e12: T,
    pub h12: T,
}

impl<T: Real> BlueCurvePoint<T> {
    pub fn sum(&self) -> T {
        self.e12 + self.h12
    }
}

/// θ₁ paired with θ₃ on the θ₂ = π/4 family.
pub fn blue_curve_theta1<T: Real>(theta3: T) -> T {
    let two = lit::<T>(2.0);
    let t = two * theta3;
    (-lit::<T>(2.0).sqrt() * t.cos()).atan2(t.sin()) / two
}

/// Channel with `a₁ = a₂` realized by the θ₂ = π/4 family at θ₃ ∈ [0, π/4].
pub fn blue_curve_channel<T: Real>(theta3: T) -> SchmidtChannel<T> {
    let c = (lit::<T>(2.0) * theta3).cos();
    let w1 = T::one() / (lit::<T>(2.0) + c);
    let w0 = (T::one() - lit::<T>(2.0) * w1).max(T::zero());
    SchmidtChannel::new(w0.sqrt(), w1.sqrt(), w1.sqrt()).expect("normalized by construction")
}

/// Closed-form probabilities, tangles and resources along the θ₂ = π/4 family.
pub fn blue_curve_point<T: Real>(theta3: T) -> BlueCurvePoint<T> {
    let theta1 = blue_curve_theta1(theta3);
    let (s1, c1) = theta1.sin_cos();
    let (s3, c3) = theta3.sin_cos();
    let sq = |x: T| x * x;
    let one = T::one();
    let den = lit::<T>(4.0) + lit::<T>(2.0) * (lit::<T>(2.0) * theta3).cos();
    let p_plus = (sq(s1) + sq(c1) * sq(c3)) / den;
    let p_minus = (sq(c3) + sq(c1) * sq(s3)) / den;
    let p_three = sq(c3) / den;
    let c_plus = one - sq(sq(c1)) * sq(sq(s3));
    let c_minus = one - sq(sq(s1)) * sq(sq(s3));
    let c_three = sq(c3) * (one + sq(s3));
    let probabilities = [p_plus, p_plus, p_three, p_minus, p_minus, p_three];
    let tangles = [c_plus, c_plus, c_three, c_minus, c_minus, c_three].map(|c| clamp(c, T::zero(), one));
    BlueCurvePoint {
        theta1,
        theta3,
        probabilities,
        tangles,
        e12: measurement_entanglement(&probabilities, &tangles),
        h12: classical_cost(&probabilities),
    }
}

/// θ₃ of the θ₂ = π/4 family for a channel with `a₁ = a₂`.
pub fn blue_curve_theta3<T: Real>(a1: T) -> Result<T, ResourceError> {
    let w1 = a1 * a1;
    domain("a1^2", w1, lit(1.0 / 3.0), lit(0.5))?;
    let arg = (T::one() - lit::<T>(2.0) * w1) / w1;
    Ok(arccos_checked(arg)? / lit(2.0))
}

/// Upper bound on `E₁₂ + H₁₂` for channels with `a₁ = a₂`, `a₁² ∈ [1/3, 1/2]`.
pub fn upper_bound_sum<T: Real>(a1: T) -> Result<T, ResourceError> {
    Ok(blue_curve_point(blue_curve_theta3(a1)?).sum())
}

/// Channel entropy of `(√(1−2w), √w, √w)`.
fn equal_pair_entropy<T: Real>(w: T) -> T {
    shannon_entropy(&[T::one() - lit::<T>(2.0) * w, w, w])
}

/// The upper bound as a function of channel entropy on `[1, log₂3]`.
pub fn upper_bound_at_entropy<T: Real>(e: T) -> Result<T, ResourceError> {
    domain("E", e, T::one(), log2_3())?;
    // entropy decreases monotonically as w runs over [1/3, 1/2]
    let mut lo = lit::<T>(1.0 / 3.0);
    let mut hi = lit::<T>(0.5);
    for _ in 0..200 {
        let mid = (lo + hi) / lit(2.0);
        if equal_pair_entropy(mid) > e {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() {
            break;
        }
    }
    upper_bound_sum(((lo + hi) / lit(2.0)).sqrt())
}

/// Slope of the linear piece of the lower bound.
pub fn bound_slope<T: Real>() -> T {
    let l = log2_3::<T>();
    (lit::<T>(5.0 / 3.0) - l) / (l - lit(1.5))
}

/// Intercept of the linear piece of the lower bound.
pub fn bound_intercept<T: Real>() -> T {
    let l = log2_3::<T>();
    lit::<T>(2.0) * l + lit::<T>(11.0 / 6.0) - T::one() / (lit::<T>(4.0) * l - lit(6.0))
}

/// `g(q)` of the lower bound, with `q log₂ q → 0` at `q = 0`.
pub fn bound_g<T: Real>(q: T) -> T {
    let one = T::one();
    let two = lit::<T>(2.0);
    let q1 = q + one;
    let q2 = two * q + one;
    let q_log_q = if q <= T::zero() { T::zero() } else { q * q.log2() };
    (q + lit(3.0)) / q1 + two * q1.log2() - q2 / (q1 * q1) * q2.log2() - q2 / (q1 * q1) * q_log_q
}

/// The `q ∈ [0, 1/2]` with `H(q) = 2(E − 1)`, by bisection.
pub fn bound_q<T: Real>(e: T) -> Result<T, ResourceError> {
    domain("E", e, T::one(), lit(1.5))?;
    let target = clamp(lit::<T>(2.0) * (e - T::one()), T::zero(), T::one());
    if target <= T::zero() {
        return Ok(T::zero());
    }
    let h = |q: T| binary_entropy(q).expect("q in [0, 1/2]");
    let mut lo = T::zero();
    let mut hi = lit::<T>(0.5);
    let tol = lit::<T>(1e-12).max(T::epsilon());
    while hi - lo > tol {
        let mid = (lo + hi) / lit(2.0);
        if h(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / lit(2.0))
}

/// Curved piece of the lower bound, `E ∈ [1, 3/2]`.
pub fn bound_f1<T: Real>(e: T) -> Result<T, ResourceError> {
    Ok(bound_g(bound_q(e)?))
}

/// Linear piece of the lower bound, `E ∈ [3/2, log₂3]`.
pub fn bound_f2<T: Real>(e: T) -> Result<T, ResourceError> {
    domain("E", e, lit(1.5), log2_3())?;
    Ok(bound_slope::<T>() * e + bound_intercept::<T>())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    LowerF1,
    LowerF2,
    Upper,
}

/// One bound evaluated at one channel entropy, with the parameters used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundCurve<T> {
    pub kind: BoundKind,
    pub domain: (T, T),
    pub q: Option<T>,
    pub k: Option<T>,
    pub b: Option<T>,
    pub entropy: T,
    pub value: T,
}

/// Lower bound on `E₁₂ + H₁₂` for channel entropy `E ∈ [1, log₂3]`; the linear
/// piece applies from `E = 3/2` on.
pub fn lower_bound_curve<T: Real>(e: T) -> Result<BoundCurve<T>, ResourceError> {
    domain("E", e, T::one(), log2_3())?;
    let three_halves = lit::<T>(1.5);
    if e < three_halves {
        let q = bound_q(e)?;
        Ok(BoundCurve {
            kind: BoundKind::LowerF1,
            domain: (T::one(), three_halves),
            q: Some(q),
            k: None,
            b: None,
            entropy: e,
            value: bound_g(q),
        })
    } else {
        Ok(BoundCurve {
            kind: BoundKind::LowerF2,
            domain: (three_halves, log2_3()),
            q: None,
            k: Some(bound_slope()),
            b: Some(bound_intercept()),
            entropy: e,
            value: bound_f2(e)?,
        })
    }
}

pub fn lower_bound_sum<T: Real>(e: T) -> Result<T, ResourceError> {
    lower_bound_curve(e).map(|c| c.value)
}

pub fn upper_bound_curve<T: Real>(e: T) -> Result<BoundCurve<T>, ResourceError> {
    Ok(BoundCurve {
        kind: BoundKind::Upper,
        domain: (T::one(), log2_3()),
        q: None,
        k: None,
        b: None,
        entropy: e,
        value: upper_bound_at_entropy(e)?,
    })
}
