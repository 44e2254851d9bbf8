//! Independent reference computations for integration tests. Nothing here
//! calls into the library's linear algebra or projection code.

#![allow(dead_code)]

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use teleportsim::channel::SchmidtChannel;
use teleportsim::scheme::{admissible_range, FreeAngle, Scheme};

pub type C = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Squared Schmidt coefficients uniform on the probability simplex.
pub fn random_simplex(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let e: [f64; 3] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
    let s = e[0] + e[1] + e[2];
    e.map(|x| x / s)
}

fn from_squares(w: [f64; 3]) -> SchmidtChannel<f64> {
    SchmidtChannel::new(w[0].sqrt(), w[1].sqrt(), w[2].sqrt()).expect("normalized")
}

pub fn random_capable(rng: &mut ChaCha8Rng) -> SchmidtChannel<f64> {
    loop {
        let w = random_simplex(rng);
        if w.iter().all(|&x| x <= 0.5) {
            return from_squares(w);
        }
    }
}

/// Capable channel with its largest coefficient at index 1.
pub fn random_canonical(rng: &mut ChaCha8Rng) -> SchmidtChannel<f64> {
    random_capable(rng).canonicalize().0
}

pub fn random_incapable(rng: &mut ChaCha8Rng) -> SchmidtChannel<f64> {
    loop {
        let w = random_simplex(rng);
        if w.iter().any(|&x| x > 0.5 + 1e-6) {
            return from_squares(w);
        }
    }
}

/// A scheme at a uniformly random point of the channel's feasible family.
pub fn random_scheme(ch: &SchmidtChannel<f64>, rng: &mut ChaCha8Rng) -> Scheme<f64> {
    let range = admissible_range(&ch.canonicalize().0).expect("capable channel has a family");
    let (lo, hi) = range.tilt();
    let p = lo + (hi - lo) * rng.random::<f64>();
    Scheme::solve(ch, FreeAngle::Theta2(p.clamp(0.0, 1.0).sqrt().asin())).expect("solvable")
}

pub fn haar(rng: &mut ChaCha8Rng) -> (C, C) {
    let mut g = || {
        // Box-Muller
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let v = [C::new(g(), g()), C::new(g(), g())];
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    (v[0] / n, v[1] / n)
}

/// `(α|0⟩ + β|1⟩) ⊗ Σ aⱼ|jj⟩`, qubit ⊗ Alice ⊗ Bob, for `d = a.len()`.
pub fn joint_state(alpha: C, beta: C, a: &[f64]) -> Vec<C> {
    let d = a.len();
    let mut v = vec![C::new(0.0, 0.0); 2 * d * d];
    for j in 0..d {
        v[j * d + j] += alpha * a[j];
        v[d * d + j * d + j] += beta * a[j];
    }
    v
}

/// Bob's unnormalized state after Alice obtains the outcome `psi`.
pub fn project(psi: &[C], state: &[C]) -> Vec<C> {
    let m = psi.len();
    let d = state.len() / m;
    (0..d)
        .map(|k| (0..m).map(|i| psi[i].conj() * state[i * d + k]).sum())
        .collect()
}

pub fn norm_sqr(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn inner(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `4 det ρ` of the qubit marginal of a qubit ⊗ qudit pure state.
pub fn tangle(psi: &[C]) -> f64 {
    let d = psi.len() / 2;
    let (top, bottom) = psi.split_at(d);
    let r00 = norm_sqr(top);
    let r11 = norm_sqr(bottom);
    let r01 = inner(bottom, top);
    4.0 * (r00 * r11 - r01.norm_sqr())
}

pub fn h2(x: f64) -> f64 {
    let t = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    t(x) + t(1.0 - x)
}

pub fn shannon(p: &[f64]) -> f64 {
    p.iter().map(|&x| if x <= 0.0 { 0.0 } else { -x * x.log2() }).sum()
}

/// Entanglement entropy of a qubit ⊗ qudit pure state from its tangle.
pub fn entanglement(psi: &[C]) -> f64 {
    let c = tangle(psi).clamp(0.0, 1.0);
    h2((1.0 + (1.0 - c).sqrt()) / 2.0)
}

/// Applies a d×d matrix given row-major to a vector.
pub fn apply(m: &[C], v: &[C]) -> Vec<C> {
    let d = v.len();
    (0..d).map(|i| (0..d).map(|j| m[i * d + j] * v[j]).sum()).collect()
}
