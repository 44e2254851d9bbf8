//! The shared two-qutrit channel `a₀|00⟩ + a₁|11⟩ + a₂|22⟩` in Schmidt form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{to_f64, Real};
use crate::qlinalg::{entropy_term, CMat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("Schmidt coefficient a{index} = {value} is not finite")]
    NonFinite { index: usize, value: f64 },
    #[error("Schmidt coefficient a{index} = {value} is negative")]
    Negative { index: usize, value: f64 },
    #[error("Schmidt coefficient a{index} = {value} exceeds 1")]
    TooLarge { index: usize, value: f64 },
    #[error("channel is not normalized: sum of squares = {sum}")]
    NotNormalized { sum: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
struct RawChannel<T> {
    a: [T; 3],
}

/// Real, nonnegative Schmidt coefficients of the channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawChannel<T>",
    bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct SchmidtChannel<T> {
    a: [T; 3],
}

impl<T: Real> TryFrom<RawChannel<T>> for SchmidtChannel<T> {
    type Error = ChannelError;
    fn try_from(raw: RawChannel<T>) -> Result<Self, Self::Error> {
        Self::new(raw.a[0], raw.a[1], raw.a[2])
    }
}

impl<T: Real> SchmidtChannel<T> {
    /// Validates and stores the coefficients as given, without reordering.
    pub fn new(a0: T, a1: T, a2: T) -> Result<Self, ChannelError> {
        let a = [a0, a1, a2];
        Self::check_entries(&a)?;
        let sum = a.iter().fold(T::zero(), |s, &x| s + x * x);
        if (sum - T::one()).abs() > T::TOL.channel_normalization {
            return Err(ChannelError::NotNormalized { sum: to_f64(sum) });
        }
        Ok(Self { a })
    }

    /// Rescales a nearly normalized triple onto the unit sphere. Accepts inputs
    /// whose squared norm is within `tol` of one, e.g. truncated decimals.
    pub fn normalized_from(a: [T; 3], tol: T) -> Result<Self, ChannelError> {
        Self::check_entries(&a)?;
        let sum = a.iter().fold(T::zero(), |s, &x| s + x * x);
        if !((sum - T::one()).abs() <= tol) || sum <= T::zero() {
            return Err(ChannelError::NotNormalized { sum: to_f64(sum) });
        }
        let n = sum.sqrt();
        Self::new(a[0] / n, a[1] / n, a[2] / n)
    }

    fn check_entries(a: &[T; 3]) -> Result<(), ChannelError> {
        for (index, &value) in a.iter().enumerate() {
            if !value.is_finite() {
                return Err(ChannelError::NonFinite { index, value: to_f64(value) });
            }
            if value < T::zero() {
                return Err(ChannelError::Negative { index, value: to_f64(value) });
            }
            if value > T::one() + T::TOL.channel_normalization {
                return Err(ChannelError::TooLarge { index, value: to_f64(value) });
            }
        }
        Ok(())
    }

    /// The maximally entangled channel `(|00⟩ + |11⟩ + |22⟩)/√3`.
    pub fn maximally_entangled() -> Self {
        let x = (T::one() / (T::one() + T::one() + T::one())).sqrt();
        Self { a: [x, x, x] }
    }

    pub fn coefficients(&self) -> [T; 3] {
        self.a
    }

    pub fn squares(&self) -> [T; 3] {
        self.a.map(|x| x * x)
    }

    /// Entanglement entropy `-Σ aᵢ² log₂ aᵢ²` in bits.
    pub fn entropy(&self) -> T {
        self.squares().iter().fold(T::zero(), |s, &w| s + entropy_term(w))
    }

    /// Whether a qubit can be teleported perfectly: `max aⱼ² ≤ 1/2`.
    pub fn is_teleport_capable(&self) -> bool {
        let max = self.squares().iter().fold(T::zero(), |m, &w| m.max(w));
        max <= T::one() / (T::one() + T::one()) + T::TOL.normalization
    }

    /// Relabels the Schmidt basis so the largest coefficient sits at index 1.
    ///
    /// Ties keep index 1 when it is among the maxima; otherwise the first
    /// maximal index is swapped into place.
    pub fn canonicalize(&self) -> (Self, ChannelPermutation) {
        let w = self.squares();
        let max = w.iter().fold(T::zero(), |m, &x| m.max(x));
        let slack = T::TOL.zero;
        let perm = if w[1] >= max - slack {
            ChannelPermutation::IDENTITY
        } else if w[0] >= max - slack {
            ChannelPermutation { perm: [1, 0, 2] }
        } else {
            ChannelPermutation { perm: [0, 2, 1] }
        };
        (perm.apply(self), perm)
    }

    pub fn is_canonical(&self) -> bool {
        let w = self.squares();
        w[1] >= w[0].max(w[2]) - T::TOL.zero
    }
}

/// Constructs a channel, see [`SchmidtChannel::new`].
pub fn make_channel<T: Real>(a0: T, a1: T, a2: T) -> Result<SchmidtChannel<T>, ChannelError> {
    SchmidtChannel::new(a0, a1, a2)
}

/// A relabeling of the qutrit basis: canonical index `i` corresponds to the
/// original index `perm[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelPermutation {
    pub perm: [usize; 3],
}

impl ChannelPermutation {
    pub const IDENTITY: Self = Self { perm: [0, 1, 2] };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn apply<T: Real>(&self, ch: &SchmidtChannel<T>) -> SchmidtChannel<T> {
        SchmidtChannel {
            a: self.perm.map(|i| ch.a[i]),
        }
    }

    /// Original-frame index of canonical level `i`.
    pub fn original_index(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = [0; 3];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Self { perm: inv }
    }

    /// Unitary sending canonical `|i⟩` to original `|perm[i]⟩`.
    pub fn qutrit_unitary<T: Real>(&self) -> CMat<T> {
        CMat::from_fn(3, 3, |row, col| {
            let v = if self.perm[col] == row { T::one() } else { T::zero() };
            num_complex::Complex::new(v, T::zero())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ch(a: [f64; 3]) -> SchmidtChannel<f64> {
        SchmidtChannel::new(a[0], a[1], a[2]).unwrap()
    }

    #[test]
    fn make_channel_examples() {
        let t = (1.0f64 / 3.0).sqrt();
        assert!(make_channel(t, t, t).is_ok());
        assert!(matches!(make_channel(0.6, 0.6, 0.6), Err(ChannelError::NotNormalized { .. })));
        let h = 0.5f64.sqrt();
        let degenerate = make_channel(0.0, h, h).unwrap();
        assert_eq!(degenerate.coefficients(), [0.0, h, h]);
        assert!(matches!(make_channel(-0.1, 0.7, 0.7), Err(ChannelError::Negative { index: 0, .. })));
        assert!(matches!(make_channel(f64::NAN, 0.7, 0.7), Err(ChannelError::NonFinite { .. })));
    }

    #[test]
    fn coefficients_are_not_reordered() {
        let c = ch([0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]);
        assert_eq!(c.coefficients()[0], 0.5f64.sqrt());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(ch([1.0, 0.0, 0.0]).entropy(), 0.0);
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(ch([0.0, h, h]).entropy(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(SchmidtChannel::<f64>::maximally_entangled().entropy(), 3f64.log2(), epsilon = 1e-14);
    }

    #[test]
    fn capability_examples() {
        assert!(SchmidtChannel::<f64>::maximally_entangled().is_teleport_capable());
        let over = ch([0.2f64.sqrt(), 0.6f64.sqrt(), 0.2f64.sqrt()]);
        assert!(!over.is_teleport_capable());
        let h = 0.5f64.sqrt();
        assert!(ch([h, h, 0.0]).is_teleport_capable());
    }

    #[test]
    fn canonicalize_examples() {
        let (c, p) = ch([0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]).canonicalize();
        assert_eq!(c.coefficients(), [0.3f64.sqrt(), 0.5f64.sqrt(), 0.2f64.sqrt()]);
        assert_eq!(p.perm, [1, 0, 2]);

        let orig = ch([0.2f64.sqrt(), 0.5f64.sqrt(), 0.3f64.sqrt()]);
        let (c, p) = orig.canonicalize();
        assert_eq!(c, orig);
        assert!(p.is_identity());

        let (c, p) = ch([0.5, 0.5, 0.5f64.sqrt()]).canonicalize();
        assert_eq!(c.coefficients(), [0.5, 0.5f64.sqrt(), 0.5]);
        assert_eq!(p.perm, [0, 2, 1]);
    }

    #[test]
    fn canonicalize_ties_prefer_identity() {
        let h = 0.5f64.sqrt();
        let (_, p) = ch([h, h, 0.0]).canonicalize();
        assert!(p.is_identity());
        // a0 = a2 > a1: the first maximal index moves
        let x = 0.45f64.sqrt();
        let (c, p) = ch([x, 0.1f64.sqrt(), x]).canonicalize();
        assert_eq!(p.perm, [1, 0, 2]);
        assert!(c.is_canonical());
    }

    #[test]
    fn json_shape() {
        let c = ch([0.0, 0.5f64.sqrt(), 0.5f64.sqrt()]);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.starts_with("{\"a\":["));
        let back: SchmidtChannel<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<SchmidtChannel<f64>>("{\"a\":[0.6,0.6,0.6]}").is_err());
    }

    #[test]
    fn permutation_unitary_maps_levels() {
        let p = ChannelPermutation { perm: [1, 0, 2] };
        let u = p.qutrit_unitary::<f64>();
        assert!(u.is_unitary(1e-15));
        assert_eq!(u[(1, 0)].re, 1.0);
        assert_eq!(p.inverse().inverse(), p);
    }

    fn arb_channel() -> impl Strategy<Value = SchmidtChannel<f64>> {
        (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0)
            .prop_filter("nonzero", |(a, b, c)| a + b + c > 1e-3)
            .prop_map(|(a, b, c)| {
                let n = (a * a + b * b + c * c).sqrt();
                SchmidtChannel::new(a / n, b / n, c / n).unwrap()
            })
    }

    proptest! {
        #[test]
        fn entropy_permutation_invariant(c in arb_channel()) {
            let [a0, a1, a2] = c.coefficients();
            let e = c.entropy();
            for p in [[a0, a2, a1], [a1, a0, a2], [a1, a2, a0], [a2, a0, a1], [a2, a1, a0]] {
                let q = SchmidtChannel::new(p[0], p[1], p[2]).unwrap();
                prop_assert!((q.entropy() - e).abs() <= 1e-14);
            }
            prop_assert!(e >= 0.0 && e <= 3f64.log2() + 1e-14);
        }

        #[test]
        fn canonicalize_preserves_capability(c in arb_channel()) {
            let (canon, perm) = c.canonicalize();
            prop_assert!(canon.is_canonical());
            prop_assert_eq!(canon.is_teleport_capable(), c.is_teleport_capable());
            let back = perm.inverse().apply(&canon);
            prop_assert_eq!(back, c);
        }
    }
}
