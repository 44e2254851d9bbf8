//! Exact state-vector run of the protocol: joint state, Alice's projection,
//! Bob's correction and the per-branch fidelity.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::channel::SchmidtChannel;
use crate::numeric::{lit, to_f64, Real};
use crate::qlinalg::{CMat, CVec};
use crate::scheme::{assemble_d12, BranchLabel, MeasurementBasis, SchemeError, SchemeParams, QUTRIT_LABELS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TeleportError {
    #[error("input amplitudes not normalized: |alpha|^2 + |beta|^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },
    #[error("channel cannot teleport a qubit perfectly: max a_j^2 = {max_square} > 1/2")]
    Incapable { max_square: f64 },
    #[error("branch {label} is not perfectly correctable: weight gap {weight_gap:e}, overlap {overlap:e}")]
    NotCorrectable {
        label: String,
        weight_gap: f64,
        overlap: f64,
    },
    #[error("basis of dimension {basis} does not fit {coefficients} Schmidt coefficients")]
    DimensionMismatch { basis: usize, coefficients: usize },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// The unknown qubit `α|0⟩ + β|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InputQubit<T> {
    alpha: Complex<T>,
    beta: Complex<T>,
}

impl<T: Real> InputQubit<T> {
    pub fn new(alpha: Complex<T>, beta: Complex<T>) -> Result<Self, TeleportError> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if !((n - T::one()).abs() <= T::TOL.normalization) {
            return Err(TeleportError::NotNormalized { norm_sqr: to_f64(n) });
        }
        Ok(Self { alpha, beta })
    }

    pub fn zero() -> Self {
        Self {
            alpha: Complex::new(T::one(), T::zero()),
            beta: Complex::new(T::zero(), T::zero()),
        }
    }

    /// Haar-distributed qubit from two normalized complex Gaussian deviates.
    pub fn haar_random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut g = || lit::<T>(rng.sample::<f64, _>(StandardNormal));
            let alpha = Complex::new(g(), g());
            let beta = Complex::new(g(), g());
            let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
            if n > T::TOL.zero {
                return Self {
                    alpha: alpha / n,
                    beta: beta / n,
                };
            }
        }
    }

    pub fn alpha(&self) -> Complex<T> {
        self.alpha
    }

    pub fn beta(&self) -> Complex<T> {
        self.beta
    }

    pub fn as_vector(&self) -> CVec<T> {
        CVec::new(vec![self.alpha, self.beta])
    }
}

/// `(α|0⟩ + β|1⟩) ⊗ Σⱼ aⱼ|jj⟩` for any number of Schmidt terms, ordered
/// qubit ⊗ Alice's qudit ⊗ Bob's qudit.
pub fn total_state_general<T: Real>(input: &InputQubit<T>, coeffs: &[T]) -> CVec<T> {
    let d = coeffs.len();
    let mut out = CVec::zeros(2 * d * d);
    for (j, &a) in coeffs.iter().enumerate() {
        out[j * d + j] = input.alpha * a;
        out[d * d + j * d + j] = input.beta * a;
    }
    out
}

/// The 18-dimensional joint state of the input qubit and the qutrit channel.
pub fn total_state<T: Real>(input: &InputQubit<T>, ch: &SchmidtChannel<T>) -> CVec<T> {
    total_state_general(input, &ch.coefficients())
}

/// One outcome of Alice's measurement before Bob acts.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeBranch<T> {
    pub label: BranchLabel,
    pub basis_vector: CVec<T>,
    pub probability: T,
    /// `(⟨ψ|⊗I)|total⟩`, left unnormalized.
    pub collapsed: CVec<T>,
}

/// Projects the joint state onto every basis vector of Alice's measurement.
pub fn measure_branches<T: Real>(total: &CVec<T>, basis: &MeasurementBasis<T>) -> Vec<OutcomeBranch<T>> {
    let d = basis.qudit_dim();
    assert_eq!(total.dim(), 2 * d * d, "joint state does not match basis");
    basis
        .labels()
        .iter()
        .zip(basis.vectors())
        .map(|(&label, psi)| {
            let mut collapsed = CVec::zeros(d);
            for k in 0..d {
                let mut acc = Complex::new(T::zero(), T::zero());
                for m in 0..2 * d {
                    acc = acc + psi[m].conj() * total[m * d + k];
                }
                collapsed[k] = acc;
            }
            OutcomeBranch {
                label,
                basis_vector: psi.clone(),
                probability: collapsed.norm_sqr(),
                collapsed,
            }
        })
        .collect()
}

/// The input-independent parts of a collapsed state, `φ = αφ_α + βφ_β`.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchStructure<T> {
    pub phi_alpha: CVec<T>,
    pub phi_beta: CVec<T>,
}

impl<T: Real> BranchStructure<T> {
    /// `|‖φ_α‖² − ‖φ_β‖²|`.
    pub fn weight_gap(&self) -> T {
        (self.phi_alpha.norm_sqr() - self.phi_beta.norm_sqr()).abs()
    }

    /// `|⟨φ_α|φ_β⟩|`.
    pub fn overlap(&self) -> T {
        self.phi_alpha.inner(&self.phi_beta).norm()
    }

    pub fn is_correctable(&self, tol: T) -> bool {
        self.weight_gap() <= tol && self.overlap() <= tol
    }

    pub fn collapsed(&self, input: &InputQubit<T>) -> CVec<T> {
        self.phi_alpha.scale(input.alpha).add(&self.phi_beta.scale(input.beta))
    }
}

/// Reads `φ_α`, `φ_β` of one basis vector off the channel coefficients.
pub fn branch_structure<T: Real>(basis_vector: &CVec<T>, coeffs: &[T]) -> BranchStructure<T> {
    let d = coeffs.len();
    assert_eq!(basis_vector.dim(), 2 * d);
    let part = |q: usize| CVec::new((0..d).map(|j| basis_vector[q * d + j].conj() * coeffs[j]).collect());
    BranchStructure {
        phi_alpha: part(0),
        phi_beta: part(1),
    }
}

/// Bob's unitary for one branch: `φ̂_α ↦ |0⟩`, `φ̂_β ↦ |1⟩`, remaining rows by
/// Gram-Schmidt over the computational basis with the first nonzero entry of
/// each made real positive. A branch of zero weight gets the identity.
pub fn correction_unitary<T: Real>(structure: &BranchStructure<T>) -> Result<CMat<T>, TeleportError> {
    let d = structure.phi_alpha.dim();
    let tol = T::TOL.correction;
    let weight = structure.phi_alpha.norm_sqr().max(structure.phi_beta.norm_sqr());
    if weight <= T::TOL.zero {
        return Ok(CMat::identity(d));
    }
    if !structure.is_correctable(tol) {
        return Err(not_correctable(None, structure));
    }
    let n = structure.phi_alpha.norm();
    let mut rows: Vec<CVec<T>> = vec![
        structure.phi_alpha.scale_real(T::one() / n).conj(),
        structure.phi_beta.scale_real(T::one() / n).conj(),
    ];
    while rows.len() < d {
        let mut best: Option<(T, CVec<T>)> = None;
        for e in 0..d {
            let mut v = CVec::basis(d, e);
            for r in &rows {
                // rows hold conjugated vectors; project in that representation
                v = v.sub(&r.scale(r.inner(&v)));
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("d > 0");
        let mut v = v.scale_real(T::one() / norm);
        if let Some(first) = v.entries().iter().copied().find(|z| z.norm() > T::TOL.zero) {
            v = v.scale(first.conj() / first.norm());
        }
        rows.push(v);
    }
    Ok(CMat::from_rows(&rows))
}

fn not_correctable<T: Real>(label: Option<BranchLabel>, s: &BranchStructure<T>) -> TeleportError {
    TeleportError::NotCorrectable {
        label: label.map_or_else(|| "?".to_owned(), |l| l.to_string()),
        weight_gap: to_f64(s.weight_gap()),
        overlap: to_f64(s.overlap()),
    }
}

/// `|⟨φ|W|φ_branch⟩|² / P`, taken as 1 on a zero-probability branch.
pub fn branch_fidelity<T: Real>(input: &InputQubit<T>, correction: &CMat<T>, branch: &OutcomeBranch<T>) -> T {
    if branch.probability <= T::TOL.zero {
        return T::one();
    }
    let d = correction.rows();
    let mut target = CVec::zeros(d);
    target[0] = input.alpha;
    target[1] = input.beta;
    let out = correction.apply(&branch.collapsed);
    target.inner(&out).norm_sqr() / branch.probability
}

/// A measured branch with Bob's correction applied.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectedBranch<T> {
    pub branch: OutcomeBranch<T>,
    pub correction: CMat<T>,
    pub fidelity: T,
}

/// Per-branch summary in label order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchReport<T> {
    pub label: BranchLabel,
    pub probability: T,
    pub fidelity: T,
}

/// Result of one teleportation run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TeleportReport<T> {
    pub branches: Vec<BranchReport<T>>,
    /// Probability-weighted fidelity.
    pub mean_fidelity: T,
    pub min_fidelity: T,
}

impl<T: Real> TeleportReport<T> {
    fn from_branches(branches: &[CorrectedBranch<T>]) -> Self {
        let mean = branches
            .iter()
            .fold(T::zero(), |acc, b| acc + b.branch.probability * b.fidelity);
        let min = branches.iter().fold(T::infinity(), |m, b| m.min(b.fidelity));
        Self {
            branches: branches
                .iter()
                .map(|b| BranchReport {
                    label: b.branch.label,
                    probability: b.branch.probability,
                    fidelity: b.fidelity,
                })
                .collect(),
            mean_fidelity: mean,
            min_fidelity: min,
        }
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.branches.iter().map(|b| b.probability).collect()
    }
}

/// Runs the protocol for any basis of qubit ⊗ d-level vectors and matching
/// Schmidt coefficients.
pub fn run_protocol<T: Real>(
    input: &InputQubit<T>,
    coeffs: &[T],
    basis: &MeasurementBasis<T>,
) -> Result<(Vec<CorrectedBranch<T>>, TeleportReport<T>), TeleportError> {
    if basis.qudit_dim() != coeffs.len() {
        return Err(TeleportError::DimensionMismatch {
            basis: basis.qudit_dim(),
            coefficients: coeffs.len(),
        });
    }
    let total = total_state_general(input, coeffs);
    let corrected = measure_branches(&total, basis)
        .into_iter()
        .map(|branch| {
            let structure = branch_structure(&branch.basis_vector, coeffs);
            let correction = correction_unitary(&structure).map_err(|_| not_correctable(Some(branch.label), &structure))?;
            let fidelity = branch_fidelity(input, &correction, &branch);
            Ok(CorrectedBranch {
                branch,
                correction,
                fidelity,
            })
        })
        .collect::<Result<Vec<_>, TeleportError>>()?;
    let report = TeleportReport::from_branches(&corrected);
    Ok((corrected, report))
}

/// Teleports `input` through `ch` with Alice measuring in the basis built from
/// `params`. Parameters refer to the canonical form of the channel; the basis
/// is relabeled to the channel's own ordering.
pub fn run_teleport<T: Real>(
    input: &InputQubit<T>,
    ch: &SchmidtChannel<T>,
    params: &SchemeParams<T>,
) -> Result<TeleportReport<T>, TeleportError> {
    if !ch.is_teleport_capable() {
        let max = ch.squares().iter().fold(T::zero(), |m, &x| m.max(x));
        return Err(TeleportError::Incapable { max_square: to_f64(max) });
    }
    let (_, perm) = ch.canonicalize();
    let (_, basis) = assemble_d12(params)?;
    let basis = basis.relabel_qutrit(&perm);
    run_protocol(input, &ch.coefficients(), &basis).map(|(_, r)| r)
}

/// Collapsed states of a canonical channel written directly from the rotation
/// entries and phases, in the order `1+, 2+, 3+, 1−, 2−, 3−`.
pub fn collapsed_closed_form<T: Real>(
    input: &InputQubit<T>,
    ch: &SchmidtChannel<T>,
    params: &SchemeParams<T>,
) -> Vec<CVec<T>> {
    let u = params.rotation();
    let [a0, a1, a2] = ch.coefficients();
    let (al, be) = (input.alpha, input.beta);
    let e1 = Complex::from_polar(T::one(), -params.delta[0]);
    let e2 = Complex::from_polar(T::one(), -params.delta[1]);
    let h = T::FRAC_1_SQRT_2();
    let v = |x: [Complex<T>; 3]| CVec::new(x.to_vec());
    let plus_minus = |k: usize| {
        let one = v([al * (a0 * u[k][0]), be * (a1 * u[k][1]), al * (a2 * u[k][2])]);
        let two = v([be * (a0 * u[k][0]), al * e1 * (a1 * u[k][1]), be * e2 * (a2 * u[k][2])]);
        (one, two)
    };
    let three = |sign: T| {
        let alpha_part = [al * (sign * a0 * u[2][0]), al * e1 * (a1 * u[2][1]), al * (sign * a2 * u[2][2])];
        let beta_part = [be * (a0 * u[2][0]), be * (sign * a1 * u[2][1]), be * e2 * (a2 * u[2][2])];
        CVec::new((0..3).map(|j| (alpha_part[j] + beta_part[j]) * h).collect())
    };
    let (p1, p2) = plus_minus(0);
    let (m1, m2) = plus_minus(1);
    vec![p1, p2, three(T::one()), m1, m2, three(-T::one())]
}

/// Outcome probabilities of a canonical channel from the rotation entries,
/// in the order `1+, 2+, 3+, 1−, 2−, 3−`.
pub fn probabilities_closed_form<T: Real>(ch: &SchmidtChannel<T>, params: &SchemeParams<T>) -> [T; 6] {
    let u = params.rotation();
    let w = ch.squares();
    let plus = w[0] * u[0][0] * u[0][0] + w[2] * u[0][2] * u[0][2];
    let minus = w[0] * u[1][0] * u[1][0] + w[2] * u[1][2] * u[1][2];
    let three = (w[0] * u[2][0] * u[2][0] + w[1] * u[2][1] * u[2][1] + w[2] * u[2][2] * u[2][2]) / lit(2.0);
    [plus, plus, three, minus, minus, three]
}

/// Labels in the order used by every six-outcome report.
pub fn labels() -> [BranchLabel; 6] {
    QUTRIT_LABELS
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{
        solve_constraints, solve_default, special_case_basis, special_case_params, two_qubit_basis,
        two_qubit_rotation, SpecialCase,
    };
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn sym() -> SchmidtChannel<f64> {
        SchmidtChannel::maximally_entangled()
    }

    fn degenerate() -> SchmidtChannel<f64> {
        let h = 0.5f64.sqrt();
        SchmidtChannel::<f64>::new(0.0, h, h).unwrap()
    }

    #[test]
    fn input_validation() {
        assert!(InputQubit::new(c(0.6, 0.0), c(0.0, 0.8)).is_ok());
        assert!(matches!(
            InputQubit::new(c(0.6, 0.0), c(0.0, 0.7)),
            Err(TeleportError::NotNormalized { .. })
        ));
    }

    #[test]
    fn haar_inputs_are_normalized_and_seeded() {
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = InputQubit::<f64>::haar_random(&mut r1);
            let b = InputQubit::<f64>::haar_random(&mut r2);
            assert_eq!(a, b);
            assert_abs_diff_eq!(a.as_vector().norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn total_state_for_basis_input() {
        let t = total_state(&InputQubit::zero(), &sym());
        let s = 1.0 / 3.0f64.sqrt();
        for i in 0..18 {
            let expected = if [0, 4, 8].contains(&i) { s } else { 0.0 };
            assert_abs_diff_eq!(t[i].re, expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn total_state_product_channel() {
        let input = InputQubit::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let t = total_state(&input, &SchmidtChannel::<f64>::new(1.0, 0.0, 0.0).unwrap());
        assert_eq!(t[0], c(0.6, 0.0));
        assert_eq!(t[9], c(0.0, 0.8));
        assert_eq!(t.entries().iter().filter(|z| z.norm() > 0.0).count(), 2);
    }

    #[test]
    fn total_state_generic_terms() {
        let input = InputQubit::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let ch = SchmidtChannel::<f64>::new(0.5, 0.6, 0.6244997998398398).unwrap();
        let t = total_state(&input, &ch);
        let a = ch.coefficients();
        for j in 0..3 {
            assert_eq!(t[j * 3 + j], input.alpha() * a[j]);
            assert_eq!(t[9 + j * 3 + j], input.beta() * a[j]);
        }
        assert_eq!(t.entries().iter().filter(|z| z.norm() > 0.0).count(), 6);
        assert_abs_diff_eq!(t.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_quarter_angle_probabilities() {
        let basis = special_case_basis(SpecialCase::A, FRAC_PI_4).unwrap();
        let input = InputQubit::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let branches = measure_branches(&total_state(&input, &degenerate()), &basis);
        let p: Vec<f64> = branches.iter().map(|b| b.probability).collect();
        let expected = [0.125, 0.125, 0.25, 0.125, 0.125, 0.25];
        for (x, y) in p.iter().zip(expected) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
        }
        // φ₁₊ = (α|2⟩ − β|1⟩)/(2√2)
        let k = 1.0 / (2.0 * 2.0f64.sqrt());
        let phi = &branches[0].collapsed;
        assert_abs_diff_eq!((phi[2] - input.alpha() * k).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((phi[1] + input.beta() * k).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_zero_angle_reduces_to_bell() {
        let basis = special_case_basis(SpecialCase::A, 0.0).unwrap();
        let branches = measure_branches(&total_state(&InputQubit::zero(), &degenerate()), &basis);
        let p: Vec<f64> = branches.iter().map(|b| b.probability).collect();
        for (x, y) in p.iter().zip([0.0, 0.0, 0.25, 0.25, 0.25, 0.25]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn correction_for_swap_branch() {
        let s = BranchStructure {
            phi_alpha: CVec::<f64>::basis(3, 2),
            phi_beta: CVec::basis(3, 1).scale_real(-1.0),
        };
        let w = correction_unitary(&s).unwrap();
        let expected = CMat::from_real(3, 3, &[0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(w.max_abs_diff(&expected) <= 1e-15);
    }

    #[test]
    fn correction_for_identity_branch() {
        let s = BranchStructure {
            phi_alpha: CVec::<f64>::basis(3, 0),
            phi_beta: CVec::basis(3, 1),
        };
        assert!(correction_unitary(&s).unwrap().max_abs_diff(&CMat::identity(3)) <= 1e-15);
    }

    #[test]
    fn correction_rejects_unequal_weights() {
        let s = BranchStructure {
            phi_alpha: CVec::<f64>::basis(3, 0),
            phi_beta: CVec::basis(3, 1).scale_real(0.5),
        };
        assert!(matches!(correction_unitary(&s), Err(TeleportError::NotCorrectable { .. })));
    }

    #[test]
    fn basis_input_gives_unit_fidelity() {
        let sol = solve_constraints(&sym(), 0.0).unwrap();
        let r = run_teleport(&InputQubit::zero(), &sym(), &sol.params).unwrap();
        assert!(r.branches.iter().all(|b| (b.fidelity - 1.0).abs() <= 1e-10));
    }

    #[test]
    fn random_inputs_symmetric_channel() {
        let sol = solve_constraints(&sym(), 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let input = InputQubit::haar_random(&mut rng);
            let r = run_teleport(&input, &sym(), &sol.params).unwrap();
            assert!(r.min_fidelity >= 1.0 - 1e-10);
            assert_abs_diff_eq!(r.probabilities().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn correction_maps_collapsed_to_input_for_random_inputs() {
        let ch = SchmidtChannel::<f64>::new(0.5, 0.65, 0.5722761571129799).unwrap();
        let sol = solve_default(&ch).unwrap();
        let (_, basis) = assemble_d12(&sol.params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let input = InputQubit::haar_random(&mut rng);
            let (branches, _) = run_protocol(&input, &ch.coefficients(), &basis).unwrap();
            for b in branches {
                assert!(b.correction.is_unitary(1e-10));
                let out = b.correction.apply(&b.branch.collapsed);
                let mut target = CVec::zeros(3);
                target[0] = input.alpha();
                target[1] = input.beta();
                let scaled = target.scale_real(b.branch.probability.sqrt());
                assert!(out.max_abs_diff_up_to_phase(&scaled) <= 1e-10);
            }
        }
    }

    #[test]
    fn probabilities_independent_of_input() {
        let ch = SchmidtChannel::<f64>::new(0.5, 0.65, 0.5722761571129799).unwrap();
        let sol = solve_default(&ch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let first = run_teleport(&InputQubit::zero(), &ch, &sol.params).unwrap().probabilities();
        for _ in 0..50 {
            let input = InputQubit::haar_random(&mut rng);
            let p = run_teleport(&input, &ch, &sol.params).unwrap().probabilities();
            for (x, y) in p.iter().zip(&first) {
                assert!((x - y).abs() <= 1e-12);
            }
            assert_abs_diff_eq!(p[0], p[1], epsilon = 1e-12);
            assert_abs_diff_eq!(p[3], p[4], epsilon = 1e-12);
            assert_abs_diff_eq!(p[2], p[5], epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_forms_match_projection() {
        let ch = SchmidtChannel::<f64>::new(0.5, 0.65, 0.5722761571129799).unwrap();
        let sol = solve_default(&ch).unwrap();
        let (_, basis) = assemble_d12(&sol.params).unwrap();
        let input = InputQubit::new(c(0.6, 0.1), c(0.3, -0.7348469228349535)).unwrap();
        let raw = measure_branches(&total_state(&input, &ch), &basis);
        let closed = collapsed_closed_form(&input, &ch, &sol.params);
        let probs = probabilities_closed_form(&ch, &sol.params);
        for ((b, cf), p) in raw.iter().zip(&closed).zip(probs) {
            assert!(b.collapsed.max_abs_diff(cf) <= 1e-12, "{}", b.label);
            assert_abs_diff_eq!(b.probability, p, epsilon = 1e-12);
        }
    }

    #[test]
    fn incapable_channel_refused() {
        let ch = SchmidtChannel::<f64>::new(0.775f64, 0.447, 0.447).unwrap_or_else(|_| {
            SchmidtChannel::normalized_from([0.775, 0.447, 0.447], 5e-3).unwrap()
        });
        let p = special_case_params(SpecialCase::A, 0.0).unwrap();
        assert!(matches!(
            run_teleport(&InputQubit::zero(), &ch, &p),
            Err(TeleportError::Incapable { .. })
        ));
    }

    #[test]
    fn two_qubit_maximally_entangled_run() {
        let h = 0.5f64.sqrt();
        let basis = two_qubit_basis(&two_qubit_rotation(FRAC_PI_4), 0.3, PI);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let input = InputQubit::haar_random(&mut rng);
            let (_, r) = run_protocol(&input, &[h, h], &basis).unwrap();
            assert!(r.min_fidelity >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn two_qubit_unbalanced_channel_not_correctable() {
        let basis = two_qubit_basis(&two_qubit_rotation(FRAC_PI_4), 0.3, PI);
        let r = run_protocol(&InputQubit::zero(), &[0.6, 0.8], &basis);
        assert!(matches!(r, Err(TeleportError::NotCorrectable { .. })));
    }

    #[test]
    fn report_json_shape() {
        let sol = solve_constraints(&sym(), 0.0).unwrap();
        let r = run_teleport(&InputQubit::zero(), &sym(), &sol.params).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let b = &v["branches"][3];
        assert_eq!(b["label"], "1-");
        assert!(b["probability"].is_number() && b["fidelity"].is_number());
        assert_eq!(labels()[0].to_string(), "1+");
    }
}
