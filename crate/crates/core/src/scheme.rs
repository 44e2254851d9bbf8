//! Alice's joint-measurement unitary D₁₂ and the constraint solver behind it.
//!
//! For a canonical channel (largest coefficient at index 1) the measurement is
//! built from a real rotation `U = R_z(θ₁) R_y(θ₂) R_x(θ₃)` and a copy of it with
//! its last two columns phased by `e^{iδ₁}`, `e^{iδ₂}`. Perfect teleportation
//! requires, for the two rows `k = 1, 2`,
//!
//! ```text
//! a₀² u_k1² + a₂² u_k3² = a₁² u_k2²
//! ```
//!
//! and the phase condition `a₀²u₃₁² + a₁²u₃₂² e^{iδ₁} + a₂²u₃₃² e^{-iδ₂} = 0`.
//!
//! Summing the row equations over all three rows gives
//! `a₀²u₃₁² − a₁²u₃₂² + a₂²u₃₃² = a₀² + a₂² − a₁²`, which involves only θ₂ and θ₃.
//! The phase condition is a closed triangle of the three lengths
//! `(a₀²u₃₁², a₁²u₃₂², a₂²u₃₃²)`. Together these cut a line segment out of
//! the possible third rows, so the feasible schemes of a channel form one
//! closed interval in either θ₂ or θ₃. Once the third row is fixed, the first-row
//! equation is a traceless quadratic form in `(cos θ₁, sin θ₁)` and always has
//! a root.

use std::fmt;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelPermutation, SchmidtChannel};
use crate::numeric::{clamp, lit, to_f64, Real};
use crate::qlinalg::{qubit_tangle, CMat, CVec};

pub type Mat3<T> = [[T; 3]; 3];
pub type Mat2<T> = [[T; 2]; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("channel must carry its largest Schmidt coefficient at index 1")]
    NotCanonical,
    #[error("channel cannot teleport a qubit perfectly: max a_j^2 = {max_square} > 1/2")]
    Incapable { max_square: f64 },
    #[error("phase triangle violated: side {side} of lengths {lengths:?} exceeds the sum of the others")]
    TriangleViolation { side: usize, lengths: [f64; 3] },
    #[error("no scheme at {parameter} = {value}; admissible interval {admissible:?}")]
    Infeasible {
        parameter: &'static str,
        value: f64,
        admissible: Option<(f64, f64)>,
    },
    #[error("assembled measurement is not unitary (defect {defect:e})")]
    NonUnitary { defect: f64 },
    #[error("{name} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

/// Sign half of a branch label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

/// Outcome label `j±` of Alice's measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BranchLabel {
    pub level: u8,
    pub sign: Sign,
}

impl BranchLabel {
    pub const fn new(level: u8, sign: Sign) -> Self {
        Self { level, sign }
    }
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "{}{}", self.level, s)
    }
}

impl Serialize for BranchLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Row order of the two-qutrit D₁₂: `1+, 2+, 3+, 1−, 2−, 3−`.
pub const QUTRIT_LABELS: [BranchLabel; 6] = [
    BranchLabel::new(1, Sign::Plus),
    BranchLabel::new(2, Sign::Plus),
    BranchLabel::new(3, Sign::Plus),
    BranchLabel::new(1, Sign::Minus),
    BranchLabel::new(2, Sign::Minus),
    BranchLabel::new(3, Sign::Minus),
];

/// Row order of the two-qubit D₁₂: `1+, 2+, 1−, 2−`.
pub const QUBIT_LABELS: [BranchLabel; 4] = [
    BranchLabel::new(1, Sign::Plus),
    BranchLabel::new(2, Sign::Plus),
    BranchLabel::new(1, Sign::Minus),
    BranchLabel::new(2, Sign::Minus),
];

/// Rotation angles, phases and the balance angle of the measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams<T> {
    pub theta: [T; 3],
    pub delta: [T; 2],
    pub zeta: T,
}

impl<T: Real> SchemeParams<T> {
    /// Parameters with the balance angle at π/4.
    pub fn new(theta: [T; 3], delta: [T; 2]) -> Self {
        Self {
            theta,
            delta,
            zeta: T::FRAC_PI_4(),
        }
    }

    pub fn rotation(&self) -> Mat3<T> {
        rotation_from_angles(self.theta[0], self.theta[1], self.theta[2])
    }

    pub fn unitary_pair(&self) -> UnitaryPair<T> {
        UnitaryPair {
            u: self.rotation(),
            delta: self.delta,
        }
    }
}

/// `R_z(θ₁) R_y(θ₂) R_x(θ₃)`.
pub fn rotation_from_angles<T: Real>(t1: T, t2: T, t3: T) -> Mat3<T> {
    let (s1, c1) = t1.sin_cos();
    let (s2, c2) = t2.sin_cos();
    let (s3, c3) = t3.sin_cos();
    [
        [c1 * c2, c1 * s2 * s3 - s1 * c3, c1 * s2 * c3 + s1 * s3],
        [s1 * c2, s1 * s2 * s3 + c1 * c3, s1 * s2 * c3 - c1 * s3],
        [-s2, c2 * s3, c2 * c3],
    ]
}

fn mat3_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).fold(T::zero(), |acc, k| acc + a[i][k] * b[k][j]);
        }
    }
    out
}

pub fn det3<T: Real>(m: &Mat3<T>) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// The real rotation `U` and the phased copy `V` acting on the two 3-d subspaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitaryPair<T> {
    pub u: Mat3<T>,
    pub delta: [T; 2],
}

impl<T: Real> UnitaryPair<T> {
    /// `V` with columns two and three multiplied by `e^{iδ₁}`, `e^{iδ₂}`.
    pub fn v(&self) -> CMat<T> {
        let phase = [
            Complex::new(T::one(), T::zero()),
            Complex::from_polar(T::one(), self.delta[0]),
            Complex::from_polar(T::one(), self.delta[1]),
        ];
        CMat::from_fn(3, 3, |k, l| phase[l] * self.u[k][l])
    }

    /// `max |UᵀU − I|`.
    pub fn orthogonality_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let dot = (0..3).fold(T::zero(), |acc, k| acc + self.u[k][i] * self.u[k][j]);
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn is_special_orthogonal(&self, tol: T) -> bool {
        self.orthogonality_defect() <= tol && (det3(&self.u) - T::one()).abs() <= tol
    }
}

/// Lengths `(a₀²u₃₁², a₁²u₃₂², a₂²u₃₃²)` of the three phasors in the phase condition.
pub fn phasor_lengths<T: Real>(ch: &SchmidtChannel<T>, u: &Mat3<T>) -> [T; 3] {
    let w = ch.squares();
    [w[0] * u[2][0] * u[2][0], w[1] * u[2][1] * u[2][1], w[2] * u[2][2] * u[2][2]]
}

/// Phases closing `a₀²u₃₁² + a₁²u₃₂² e^{iδ₁} + a₂²u₃₃² e^{-iδ₂} = 0`.
///
/// The branch with `sin δ₁ ≥ 0` is returned; δ₂ is then fixed by exact
/// cancellation and reported in `(-π, π]`.
pub fn solve_phases<T: Real>(ch: &SchmidtChannel<T>, u: &Mat3<T>) -> Result<[T; 2], SchemeError> {
    phases_from_lengths(phasor_lengths(ch, u))
}

pub(crate) fn phases_from_lengths<T: Real>(l: [T; 3]) -> Result<[T; 2], SchemeError> {
    let tol = T::TOL.solver;
    let total = l[0] + l[1] + l[2];
    for side in 0..3 {
        if l[side] > total - l[side] + tol {
            return Err(SchemeError::TriangleViolation {
                side,
                lengths: l.map(to_f64),
            });
        }
    }
    let zero = T::TOL.zero;
    let [a, b, c] = l;
    let pi = T::PI();
    // Degenerate triangles: at least one side vanishes, the other two cancel.
    if a <= zero && b <= zero && c <= zero {
        return Ok([T::zero(), T::zero()]);
    }
    if a <= zero || b <= zero {
        return Ok([T::zero(), pi]);
    }
    if c <= zero {
        return Ok([pi, T::zero()]);
    }
    let two = lit::<T>(2.0);
    let cos_d1 = clamp((c * c - a * a - b * b) / (two * a * b), -T::one(), T::one());
    let d1 = cos_d1.acos();
    let z = -(Complex::new(a, T::zero()) + Complex::from_polar(b, d1));
    let mut d2 = -z.im.atan2(z.re);
    if d2 <= -pi {
        d2 = d2 + two * pi;
    }
    Ok([d1, d2])
}

/// Residuals of the constraint equations for a canonical channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintResiduals<T> {
    /// `a₀²u_k1² + a₂²u_k3² − a₁²u_k2²` for the first two rows.
    pub rows: [T; 2],
    /// Modulus of the phase-condition sum.
    pub phase: T,
}

impl<T: Real> ConstraintResiduals<T> {
    pub fn max(&self) -> T {
        self.rows[0].abs().max(self.rows[1].abs()).max(self.phase)
    }
}

fn row_residual<T: Real>(w: &[T; 3], row: &[T; 3]) -> T {
    w[0] * row[0] * row[0] + w[2] * row[2] * row[2] - w[1] * row[1] * row[1]
}

pub fn constraint_residuals<T: Real>(ch: &SchmidtChannel<T>, params: &SchemeParams<T>) -> ConstraintResiduals<T> {
    let u = params.rotation();
    let w = ch.squares();
    let l = phasor_lengths(ch, &u);
    let sum = Complex::new(l[0], T::zero())
        + Complex::from_polar(l[1], params.delta[0])
        + Complex::from_polar(l[2], -params.delta[1]);
    ConstraintResiduals {
        rows: [row_residual(&w, &u[0]), row_residual(&w, &u[1])],
        phase: sum.norm(),
    }
}

/// The feasible family of schemes for one canonical channel.
///
/// `tilt = sin²θ₂` runs over `[tilt.0, tilt.1]`; along that segment θ₃ is a
/// monotone function whose image is `[theta3.0, theta3.1]`. For channels with
/// `a₁ = a₂` the θ₃ interval collapses to a point and θ₂ is the free angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdmissibleRange<T> {
    pub theta3: (T, T),
    pub theta2: (T, T),
    tilt: (T, T),
}

impl<T: Real> AdmissibleRange<T> {
    pub fn tilt(&self) -> (T, T) {
        self.tilt
    }

    pub fn contains_theta3(&self, theta3: T) -> bool {
        let tol = T::TOL.solver;
        theta3 >= self.theta3.0 - tol && theta3 <= self.theta3.1 + tol
    }

    /// `n` values of θ₂ spread evenly in `sin²θ₂` over the segment.
    pub fn theta2_grid(&self, n: usize) -> Vec<T> {
        let (lo, hi) = self.tilt;
        if n == 1 {
            return vec![tilt_to_theta2((lo + hi) / lit(2.0))];
        }
        (0..n)
            .map(|i| {
                let f = lit::<T>(i as f64) / lit::<T>((n - 1) as f64);
                tilt_to_theta2(lo + (hi - lo) * f)
            })
            .collect()
    }

    /// θ₂ at the middle of the segment.
    pub fn midpoint_theta2(&self) -> T {
        tilt_to_theta2((self.tilt.0 + self.tilt.1) / lit(2.0))
    }
}

fn tilt_to_theta2<T: Real>(p: T) -> T {
    clamp(p, T::zero(), T::one()).sqrt().asin()
}

/// θ₃ on the constraint line for a given `sin²θ₂`.
fn theta3_on_line<T: Real>(w: &[T; 3], p: T) -> T {
    let q = (w[0] + w[2] - (w[0] + w[1]) * p) / (w[1] + w[2]);
    let r2 = T::one() - p - q;
    r2.max(T::zero()).sqrt().atan2(q.max(T::zero()).sqrt())
}

/// Exact feasible family for a canonical channel, or `None` when there is none.
pub fn admissible_range<T: Real>(ch: &SchmidtChannel<T>) -> Option<AdmissibleRange<T>> {
    let w = ch.squares();
    let tol = T::TOL.solver;
    let zero = T::TOL.zero;
    let two = lit::<T>(2.0);
    if w[1] <= zero || w[1] + w[2] <= zero {
        return None;
    }
    let s = w[0] + w[2] - w[1];
    if s < -tol {
        return None;
    }
    let s = s.max(T::zero());
    let mut lo = T::zero();
    let mut hi = T::one();
    // a₀²u₃₁² ≥ s/2
    if w[0] > zero {
        lo = lo.max(s / (two * w[0]));
    } else if s > tol {
        return None;
    }
    // a₂²u₃₃² ≥ s/2
    let qmin = if w[2] > zero {
        s / (two * w[2])
    } else if s > tol {
        return None;
    } else {
        T::zero()
    };
    hi = hi.min((w[0] + w[2] - (w[1] + w[2]) * qmin) / (w[0] + w[1]));
    // u₃₂² ≥ 0
    let c0 = w[1] - w[0];
    let c1 = w[0] - w[2];
    if c1 < -zero {
        hi = hi.min(c0 / -c1);
    } else if c1 > zero {
        lo = lo.max(-c0 / c1);
    } else if c0 < -tol {
        return None;
    }
    if lo > hi + tol {
        return None;
    }
    if lo > hi {
        let mid = (lo + hi) / two;
        lo = mid;
        hi = mid;
    }
    let t_lo = theta3_on_line(&w, lo);
    let t_hi = theta3_on_line(&w, hi);
    Some(AdmissibleRange {
        theta3: (t_lo.min(t_hi), t_lo.max(t_hi)),
        theta2: (tilt_to_theta2(lo), tilt_to_theta2(hi)),
        tilt: (lo, hi),
    })
}

/// A solved scheme for a canonical channel, with the channel's feasible family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Solution<T> {
    pub params: SchemeParams<T>,
    pub residuals: ConstraintResiduals<T>,
    pub admissible: Option<AdmissibleRange<T>>,
}

fn infeasible<T: Real>(parameter: &'static str, value: T, range: Option<AdmissibleRange<T>>) -> SchemeError {
    SchemeError::Infeasible {
        parameter,
        value: to_f64(value),
        admissible: range.map(|r| {
            if parameter == "theta2" {
                (to_f64(r.theta2.0), to_f64(r.theta2.1))
            } else {
                (to_f64(r.theta3.0), to_f64(r.theta3.1))
            }
        }),
    }
}

/// Solves the constraints with θ₃ as the free angle.
///
/// θ₂ follows from the summed row identity. When that identity holds for every
/// θ₂ at this θ₃ (the `a₁ = a₂` family), θ₂ = π/4 is used if the phase
/// triangle allows it, otherwise the nearest admissible value.
pub fn solve_constraints<T: Real>(ch: &SchmidtChannel<T>, theta3: T) -> Result<Solution<T>, SchemeError> {
    if !ch.is_canonical() {
        return Err(SchemeError::NotCanonical);
    }
    let range = admissible_range(ch);
    if !theta3.is_finite() {
        return Err(infeasible("theta3", theta3, range));
    }
    let w = ch.squares();
    let tol = T::TOL.solver;
    let two = lit::<T>(2.0);
    let s = w[0] + w[2] - w[1];
    let (s3, c3) = theta3.sin_cos();
    let k = w[2] * c3 * c3 - w[1] * s3 * s3;
    let den = w[0] - k;
    let num = s - k;
    let tilt = if den.abs() <= tol {
        if num.abs() > tol {
            return Err(infeasible("theta3", theta3, range));
        }
        // every θ₂ satisfies the summed identity; the triangle picks the window
        let s = s.max(T::zero());
        let lo = if w[0] > T::TOL.zero { s / (two * w[0]) } else { T::zero() };
        let hi = if w[2] * c3 * c3 > T::TOL.zero {
            T::one() - s / (two * w[2] * c3 * c3)
        } else {
            T::one()
        };
        if lo > hi + tol {
            return Err(infeasible("theta3", theta3, range));
        }
        clamp(lit(0.5), lo, hi.max(lo))
    } else {
        num / den
    };
    if !(tilt >= -tol && tilt <= T::one() + tol) {
        return Err(infeasible("theta3", theta3, range));
    }
    complete(ch, tilt_to_theta2(tilt), theta3, range).ok_or_else(|| infeasible("theta3", theta3, range))
}

/// Solves the constraints with θ₂ ∈ [0, π/2] as the free angle.
pub fn solve_for_theta2<T: Real>(ch: &SchmidtChannel<T>, theta2: T) -> Result<Solution<T>, SchemeError> {
    if !ch.is_canonical() {
        return Err(SchemeError::NotCanonical);
    }
    let range = admissible_range(ch);
    let tol = T::TOL.solver;
    if !(theta2 >= -tol && theta2 <= T::FRAC_PI_2() + tol) {
        return Err(infeasible("theta2", theta2, range));
    }
    let w = ch.squares();
    let (s2, _) = theta2.sin_cos();
    let p = s2 * s2;
    let q = (w[0] + w[2] - (w[0] + w[1]) * p) / (w[1] + w[2]);
    if q < -tol || T::one() - p - q < -tol {
        return Err(infeasible("theta2", theta2, range));
    }
    let theta3 = theta3_on_line(&w, p);
    complete(ch, theta2, theta3, range).ok_or_else(|| infeasible("theta2", theta2, range))
}

/// Solves at the middle of the channel's feasible family.
pub fn solve_default<T: Real>(ch: &SchmidtChannel<T>) -> Result<Solution<T>, SchemeError> {
    if !ch.is_canonical() {
        return Err(SchemeError::NotCanonical);
    }
    let range = admissible_range(ch).ok_or(SchemeError::Infeasible {
        parameter: "theta2",
        value: f64::NAN,
        admissible: None,
    })?;
    solve_for_theta2(ch, range.midpoint_theta2())
}

/// Given θ₂ and θ₃, finds θ₁ from the first-row equation and closes the phases.
fn complete<T: Real>(
    ch: &SchmidtChannel<T>,
    theta2: T,
    theta3: T,
    range: Option<AdmissibleRange<T>>,
) -> Option<Solution<T>> {
    let w = ch.squares();
    let m = mat3_mul(&rotation_from_angles(T::zero(), theta2, T::zero()), &rotation_from_angles(T::zero(), T::zero(), theta3));
    let quad = |x: &[T; 3], y: &[T; 3]| w[0] * x[0] * y[0] - w[1] * x[1] * y[1] + w[2] * x[2] * y[2];
    let q11 = quad(&m[0], &m[0]);
    let q22 = quad(&m[1], &m[1]);
    let q12 = quad(&m[0], &m[1]);
    // f(θ₁) = mean + half·cos 2θ₁ − q12·sin 2θ₁
    let two = lit::<T>(2.0);
    let mean = (q11 + q22) / two;
    let half = (q11 - q22) / two;
    let radius = half.hypot(q12);
    let theta1 = if radius <= T::TOL.zero {
        T::zero()
    } else {
        let psi = q12.atan2(half);
        let phi = clamp(-mean / radius, -T::one(), T::one()).acos() - psi;
        normalize_theta1(phi / two)
    };
    let mut theta = [theta1, theta2, theta3];
    let mut u = rotation_from_angles(theta[0], theta[1], theta[2]);
    let row_err = |u: &Mat3<T>| row_residual(&w, &u[0]).abs().max(row_residual(&w, &u[1]).abs());
    if row_err(&u) > T::TOL.solver {
        if let Some([t1, t2]) = polish(&w, theta) {
            theta = [normalize_theta1(t1), t2, theta3];
            u = rotation_from_angles(theta[0], theta[1], theta[2]);
        }
    }
    let delta = solve_phases(ch, &u).ok()?;
    let params = SchemeParams::new(theta, delta);
    let residuals = constraint_residuals(ch, &params);
    if residuals.max() > T::TOL.constraint {
        return None;
    }
    Some(Solution {
        params,
        residuals,
        admissible: range,
    })
}

/// Maps θ₁ into (−π/4, π/4]; shifting by π/2 only swaps the ± labels.
fn normalize_theta1<T: Real>(t: T) -> T {
    let quarter = T::FRAC_PI_4();
    let half = T::FRAC_PI_2();
    let mut t = t % T::PI();
    while t > quarter {
        t = t - half;
    }
    while t <= -quarter + T::TOL.solver {
        t = t + half;
    }
    t
}

fn row_residual_pair<T: Real>(w: &[T; 3], theta: [T; 3]) -> [T; 2] {
    let u = rotation_from_angles(theta[0], theta[1], theta[2]);
    [row_residual(w, &u[0]), row_residual(w, &u[1])]
}

/// Damped Newton refinement of (θ₁, θ₂) at fixed θ₃.
fn polish<T: Real>(w: &[T; 3], start: [T; 3]) -> Option<[T; 2]> {
    newton2(|x| row_residual_pair(w, [x[0], x[1], start[2]]), [start[0], start[1]])
}

fn newton2<T: Real>(f: impl Fn([T; 2]) -> [T; 2], x0: [T; 2]) -> Option<[T; 2]> {
    let target = T::TOL.solver;
    let h = lit::<T>(1e-7);
    let norm = |r: [T; 2]| r[0].abs().max(r[1].abs());
    let mut x = x0;
    let mut r = f(x);
    for _ in 0..60 {
        if norm(r) <= target {
            return Some(x);
        }
        let mut jac = [[T::zero(); 2]; 2];
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] = xp[j] + h;
            xm[j] = xm[j] - h;
            let (fp, fm) = (f(xp), f(xm));
            for i in 0..2 {
                jac[i][j] = (fp[i] - fm[i]) / (h + h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        // the two residuals can be dependent; fall back to a gradient step
        let step = if det.abs() > T::TOL.zero {
            [
                (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
                (jac[0][0] * r[1] - jac[1][0] * r[0]) / det,
            ]
        } else {
            let g = [
                jac[0][0] * r[0] + jac[1][0] * r[1],
                jac[0][1] * r[0] + jac[1][1] * r[1],
            ];
            let gg = g[0] * g[0] + g[1] * g[1];
            if gg <= T::zero() {
                return None;
            }
            let scale = (r[0] * r[0] + r[1] * r[1]) / gg;
            [g[0] * scale, g[1] * scale]
        };
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let trial = [x[0] - lambda * step[0], x[1] - lambda * step[1]];
            let rt = f(trial);
            if norm(rt) < norm(r) {
                x = trial;
                r = rt;
                accepted = true;
                break;
            }
            lambda = lambda / lit(2.0);
        }
        if !accepted {
            break;
        }
    }
    (norm(r) <= target).then_some(x)
}

/// Solves the row equations for (θ₁, θ₂) by damped Newton from seeded random
/// starts in `[0, π/2]²`, then closes the phases. Independent of the closed-form
/// route used by [`solve_constraints`].
pub fn solve_constraints_newton<T: Real>(
    ch: &SchmidtChannel<T>,
    theta3: T,
    seed: u64,
    restarts: usize,
) -> Result<Solution<T>, SchemeError> {
    if !ch.is_canonical() {
        return Err(SchemeError::NotCanonical);
    }
    let range = admissible_range(ch);
    let w = ch.squares();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        let x0 = [
            lit::<T>(rng.random_range(0.0..std::f64::consts::FRAC_PI_2)),
            lit::<T>(rng.random_range(0.0..std::f64::consts::FRAC_PI_2)),
        ];
        let Some([t1, t2]) = newton2(|x| row_residual_pair(&w, [x[0], x[1], theta3]), x0) else {
            continue;
        };
        let theta = [t1, t2, theta3];
        let u = rotation_from_angles(theta[0], theta[1], theta[2]);
        let Ok(delta) = solve_phases(ch, &u) else {
            continue;
        };
        let params = SchemeParams::new(theta, delta);
        let residuals = constraint_residuals(ch, &params);
        if residuals.max() <= T::TOL.constraint {
            return Ok(Solution {
                params,
                residuals,
                admissible: range,
            });
        }
    }
    Err(infeasible("theta3", theta3, range))
}

/// The measurement basis: one vector per row of D₁₂, labeled.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis<T> {
    labels: Vec<BranchLabel>,
    vectors: Vec<CVec<T>>,
    qudit_dim: usize,
}

impl<T: Real> MeasurementBasis<T> {
    pub fn new(labels: Vec<BranchLabel>, vectors: Vec<CVec<T>>) -> Self {
        assert_eq!(labels.len(), vectors.len());
        let qudit_dim = vectors[0].dim() / 2;
        assert!(vectors.iter().all(|v| v.dim() == 2 * qudit_dim));
        Self {
            labels,
            vectors,
            qudit_dim,
        }
    }

    fn from_matrix(m: &CMat<T>, labels: &[BranchLabel]) -> Self {
        Self::new(labels.to_vec(), (0..m.rows()).map(|i| m.row(i)).collect())
    }

    pub fn labels(&self) -> &[BranchLabel] {
        &self.labels
    }

    pub fn vectors(&self) -> &[CVec<T>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Dimension of Alice's second system (3 for a qutrit, 2 for a qubit).
    pub fn qudit_dim(&self) -> usize {
        self.qudit_dim
    }

    pub fn get(&self, label: BranchLabel) -> Option<&CVec<T>> {
        self.labels.iter().position(|&l| l == label).map(|i| &self.vectors[i])
    }

    pub fn as_matrix(&self) -> CMat<T> {
        CMat::from_rows(&self.vectors)
    }

    /// `max |⟨ψ_i|ψ_j⟩ − δ_ij|`.
    pub fn gram_defect(&self) -> T {
        let m = self.as_matrix();
        m.matmul(&m.adjoint()).max_abs_diff(&CMat::identity(self.len()))
    }

    pub fn tangles(&self) -> Vec<T> {
        self.vectors
            .iter()
            .map(|v| qubit_tangle(v).expect("qubit ⊗ qudit vector"))
            .collect()
    }

    /// Moves qutrit level `i` to `perm.original_index(i)` in every vector.
    pub fn relabel_qutrit(&self, perm: &ChannelPermutation) -> Self {
        if perm.is_identity() {
            return self.clone();
        }
        let d = self.qudit_dim;
        assert_eq!(d, 3, "relabeling applies to qutrit bases");
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                let mut out = CVec::zeros(2 * d);
                for q in 0..2 {
                    for i in 0..d {
                        out[q * d + perm.original_index(i)] = v[q * d + i];
                    }
                }
                out
            })
            .collect();
        Self::new(self.labels.clone(), vectors)
    }
}

/// Assembles the 6×6 D₁₂ in the basis `|00⟩, |01⟩, |02⟩, |10⟩, |11⟩, |12⟩` and
/// returns it with its rows as the measurement basis.
pub fn assemble_d12<T: Real>(params: &SchemeParams<T>) -> Result<(CMat<T>, MeasurementBasis<T>), SchemeError> {
    let u = params.rotation();
    let (sz, cz) = params.zeta.sin_cos();
    let e1 = Complex::from_polar(T::one(), params.delta[0]);
    let e2 = Complex::from_polar(T::one(), params.delta[1]);
    let r = |x: T| Complex::new(x, T::zero());
    let o = r(T::zero());
    let rows = [
        [r(u[0][0]), o, r(u[0][2]), o, r(u[0][1]), o],
        [o, e1 * u[0][1], o, r(u[0][0]), o, e2 * u[0][2]],
        [
            r(u[2][0] * cz),
            e1 * (u[2][1] * sz),
            r(u[2][2] * cz),
            r(u[2][0] * sz),
            r(u[2][1] * cz),
            e2 * (u[2][2] * sz),
        ],
        [r(u[1][0]), o, r(u[1][2]), o, r(u[1][1]), o],
        [o, e1 * u[1][1], o, r(u[1][0]), o, e2 * u[1][2]],
        [
            r(-u[2][0] * sz),
            e1 * (u[2][1] * cz),
            r(-u[2][2] * sz),
            r(u[2][0] * cz),
            r(-u[2][1] * sz),
            e2 * (u[2][2] * cz),
        ],
    ];
    let m = CMat::from_fn(6, 6, |i, j| rows[i][j]);
    let defect = m.unitarity_defect();
    if defect > T::TOL.unitary {
        return Err(SchemeError::NonUnitary { defect: to_f64(defect) });
    }
    let basis = MeasurementBasis::from_matrix(&m, &QUTRIT_LABELS);
    Ok((m, basis))
}

/// The two closed-form bases available when `a₀ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecialCase {
    /// Free angle θ₁, rotation `R(θ₁, 0, π/4)`.
    A,
    /// Free angle θ₂, rotation `R(0, θ₂, π/4)`.
    B,
}

fn check_special_angle<T: Real>(theta: T) -> Result<(), SchemeError> {
    let tol = T::TOL.solver;
    if !(theta >= -tol && theta <= T::FRAC_PI_2() + tol) {
        return Err(SchemeError::OutOfRange {
            name: "theta",
            value: to_f64(theta),
            lo: 0.0,
            hi: std::f64::consts::FRAC_PI_2,
        });
    }
    Ok(())
}

/// Scheme parameters generating the `a₀ = 0` special-case bases.
pub fn special_case_params<T: Real>(variant: SpecialCase, theta: T) -> Result<SchemeParams<T>, SchemeError> {
    check_special_angle(theta)?;
    let q = T::FRAC_PI_4();
    let angles = match variant {
        SpecialCase::A => [theta, T::zero(), q],
        SpecialCase::B => [T::zero(), theta, q],
    };
    Ok(SchemeParams::new(angles, [T::zero(), T::PI()]))
}

/// The `a₀ = 0` bases written out term by term, rows labeled `1+ … 3−`.
///
/// Variant B uses `(|11⟩ − |02⟩)/√2` and `(|01⟩ + |12⟩)/√2` for `1−` and `2−`;
/// with the opposite relative signs those rows would overlap `1+` and `2+`.
pub fn special_case_basis<T: Real>(variant: SpecialCase, theta: T) -> Result<MeasurementBasis<T>, SchemeError> {
    check_special_angle(theta)?;
    let (s, c) = theta.sin_cos();
    let h = T::FRAC_1_SQRT_2();
    let half = lit::<T>(0.5);
    let z = T::zero();
    // columns: |00⟩ |01⟩ |02⟩ |10⟩ |11⟩ |12⟩
    let rows: [[T; 6]; 6] = match variant {
        SpecialCase::A => [
            [c, z, s * h, z, -s * h, z],
            [z, -s * h, z, c, z, -s * h],
            [z, half, half, z, half, -half],
            [s, z, -c * h, z, c * h, z],
            [z, c * h, z, s, z, c * h],
            [z, -half, half, z, half, half],
        ],
        SpecialCase::B => {
            let c2 = c * half;
            [
                [c, z, s * h, z, s * h, z],
                [z, s * h, z, c, z, -s * h],
                [-s * h, c2, c2, -s * h, c2, -c2],
                [z, z, -h, z, h, z],
                [z, h, z, z, z, h],
                [-s * h, -c2, c2, s * h, c2, c2],
            ]
        }
    };
    Ok(MeasurementBasis::new(
        QUTRIT_LABELS.to_vec(),
        rows.iter().map(|r| CVec::from_real(r)).collect(),
    ))
}

/// 2×2 rotation `[[cos φ, sin φ], [−sin φ, cos φ]]`.
pub fn two_qubit_rotation<T: Real>(phi: T) -> Mat2<T> {
    let (s, c) = phi.sin_cos();
    [[c, s], [-s, c]]
}

/// The 4×4 D₁₂ for a two-qubit channel in the basis `|00⟩, |01⟩, |10⟩, |11⟩`,
/// with `V` sharing the entries of `U`.
pub fn two_qubit_d12<T: Real>(u: &Mat2<T>, eta: T, delta: T) -> CMat<T> {
    let (se, ce) = eta.sin_cos();
    let ph = Complex::from_polar(T::one(), -delta);
    let r = |x: T| Complex::new(x, T::zero());
    let o = r(T::zero());
    let rows = [
        [r(u[0][0]), o, o, r(u[0][1])],
        [r(u[1][0] * ce), ph * (u[1][1] * se), r(u[1][0] * se), r(u[1][1] * ce)],
        [o, ph * u[0][1], r(u[0][0]), o],
        [r(-u[1][0] * se), ph * (u[1][1] * ce), r(u[1][0] * ce), r(-u[1][1] * se)],
    ];
    CMat::from_fn(4, 4, |i, j| rows[i][j])
}

/// Rows of [`two_qubit_d12`] labeled `1+, 2+, 1−, 2−`.
pub fn two_qubit_basis<T: Real>(u: &Mat2<T>, eta: T, delta: T) -> MeasurementBasis<T> {
    MeasurementBasis::from_matrix(&two_qubit_d12(u, eta, delta), &QUBIT_LABELS)
}

/// A two-qubit channel `a₀|00⟩ + a₁|11⟩` admits a perfect scheme only when it is
/// maximally entangled.
pub fn two_qubit_feasible<T: Real>(a0: T, a1: T) -> bool {
    let _ = a1;
    (a0 * a0 - lit(0.5)).abs() <= T::TOL.normalization
}

/// A scheme for an arbitrary capable channel, solved in the canonical frame and
/// relabeled back.
#[derive(Clone, Debug, PartialEq)]
pub struct Scheme<T> {
    channel: SchmidtChannel<T>,
    canonical: SchmidtChannel<T>,
    permutation: ChannelPermutation,
    params: SchemeParams<T>,
    admissible: Option<AdmissibleRange<T>>,
}

/// How to pick a member of the feasible family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FreeAngle<T> {
    Theta3(T),
    Theta2(T),
    Midpoint,
}

impl<T: Real> Scheme<T> {
    pub fn solve(channel: &SchmidtChannel<T>, choice: FreeAngle<T>) -> Result<Self, SchemeError> {
        if !channel.is_teleport_capable() {
            let max = channel.squares().iter().fold(T::zero(), |m, &x| m.max(x));
            return Err(SchemeError::Incapable { max_square: to_f64(max) });
        }
        let (canonical, permutation) = channel.canonicalize();
        let sol = match choice {
            FreeAngle::Theta3(t) => solve_constraints(&canonical, t)?,
            FreeAngle::Theta2(t) => solve_for_theta2(&canonical, t)?,
            FreeAngle::Midpoint => solve_default(&canonical)?,
        };
        Ok(Self {
            channel: *channel,
            canonical,
            permutation,
            params: sol.params,
            admissible: sol.admissible,
        })
    }

    /// Wraps hand-supplied parameters after checking them against the
    /// canonical form of `channel`.
    pub fn from_params(channel: &SchmidtChannel<T>, params: SchemeParams<T>) -> Result<Self, SchemeError> {
        let (canonical, permutation) = channel.canonicalize();
        let res = constraint_residuals(&canonical, &params);
        if res.max() > T::TOL.constraint {
            return Err(SchemeError::Infeasible {
                parameter: "params",
                value: to_f64(res.max()),
                admissible: None,
            });
        }
        Ok(Self {
            channel: *channel,
            canonical,
            permutation,
            params,
            admissible: admissible_range(&canonical),
        })
    }

    pub fn channel(&self) -> &SchmidtChannel<T> {
        &self.channel
    }

    pub fn canonical_channel(&self) -> &SchmidtChannel<T> {
        &self.canonical
    }

    pub fn permutation(&self) -> ChannelPermutation {
        self.permutation
    }

    pub fn params(&self) -> &SchemeParams<T> {
        &self.params
    }

    pub fn admissible(&self) -> Option<&AdmissibleRange<T>> {
        self.admissible.as_ref()
    }

    /// Measurement basis in the labeling of the original channel.
    pub fn basis(&self) -> Result<MeasurementBasis<T>, SchemeError> {
        let (_, basis) = assemble_d12(&self.params)?;
        Ok(basis.relabel_qutrit(&self.permutation))
    }
}
