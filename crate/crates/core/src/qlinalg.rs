//! Small dense complex linear algebra and the entropy functionals built on it.
//!
//! Everything here works on explicit state vectors and matrices of dimension at
//! most a few dozen; there is no attempt at blocking or sparsity.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use thiserror::Error;

use crate::numeric::{clamp, lit, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("density matrix has eigenvalue {0:e} below the PSD tolerance")]
    NegativeEigenvalue(f64),
    #[error("argument {0} outside the domain [0, 1]")]
    Domain(f64),
}

/// Complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CVec<T> {
    entries: Vec<Complex<T>>,
}

impl<T: Real> CVec<T> {
    pub fn new(entries: Vec<Complex<T>>) -> Self {
        assert!(!entries.is_empty(), "vector must be nonempty");
        Self { entries }
    }

    pub fn from_real(values: &[T]) -> Self {
        Self::new(values.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![Complex::new(T::zero(), T::zero()); dim])
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index] = Complex::new(T::one(), T::zero());
        v
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex<T>> {
        self.entries
    }

    pub fn norm_sqr(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self::new(self.entries.iter().map(|z| z * c).collect())
    }

    pub fn scale_real(&self, c: T) -> Self {
        Self::new(self.entries.iter().map(|z| z * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::new(self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::new(self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect())
    }

    /// Unit vector along `self`, or `None` for a zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n <= T::zero() {
            None
        } else {
            Some(self.scale_real(T::one() / n))
        }
    }

    pub fn is_normalized(&self, tol: T) -> bool {
        (self.norm_sqr() - T::one()).abs() <= tol
    }

    pub fn conj(&self) -> Self {
        Self::new(self.entries.iter().map(|z| z.conj()).collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// Entrywise distance after removing the relative global phase between two
    /// vectors of equal norm.
    pub fn max_abs_diff_up_to_phase(&self, other: &Self) -> T {
        let overlap = self.inner(other);
        let phase = if overlap.norm() > T::zero() {
            overlap / Complex::new(overlap.norm(), T::zero())
        } else {
            Complex::new(T::one(), T::zero())
        };
        self.scale(phase).max_abs_diff(other)
    }
}

impl<T> Index<usize> for CVec<T> {
    type Output = Complex<T>;
    fn index(&self, i: usize) -> &Complex<T> {
        &self.entries[i]
    }
}

impl<T> IndexMut<usize> for CVec<T> {
    fn index_mut(&mut self, i: usize) -> &mut Complex<T> {
        &mut self.entries[i]
    }
}

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be nonempty");
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![Complex::new(T::zero(), T::zero()); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn from_real(rows: usize, cols: usize, values: &[T]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self::from_fn(rows, cols, |i, j| Complex::new(values[i * cols + j], T::zero()))
    }

    /// Matrix whose rows are the given vectors.
    pub fn from_rows(rows: &[CVec<T>]) -> Self {
        let cols = rows[0].dim();
        assert!(rows.iter().all(|r| r.dim() == cols), "ragged rows");
        Self::from_fn(rows.len(), cols, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> CVec<T> {
        CVec::new(self.data[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                acc + self[(i, k)] * rhs[(k, j)]
            })
        })
    }

    pub fn apply(&self, v: &CVec<T>) -> CVec<T> {
        assert_eq!(self.cols, v.dim(), "matrix-vector dimension mismatch");
        CVec::new(
            (0..self.rows)
                .map(|i| {
                    (0..self.cols).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                        acc + self[(i, k)] * v[k]
                    })
                })
                .collect(),
        )
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self[(i, i)])
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// ‖M†M − I‖_max.
    pub fn unitarity_defect(&self) -> T {
        if self.rows != self.cols {
            return T::infinity();
        }
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.rows == self.cols && self.max_abs_diff(&self.adjoint()) <= tol
    }
}

impl<T> Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Tensor (Kronecker) product in lexicographic order, `|ij⟩ = |i⟩ ⊗ |j⟩`.
pub trait Kron {
    fn kron(&self, rhs: &Self) -> Self;
}

impl<T: Real> Kron for CVec<T> {
    fn kron(&self, rhs: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * rhs.dim());
        for a in &self.entries {
            for b in &rhs.entries {
                out.push(a * b);
            }
        }
        CVec::new(out)
    }
}

impl<T: Real> Kron for CMat<T> {
    fn kron(&self, rhs: &Self) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }
}

pub fn kron<K: Kron>(a: &K, b: &K) -> K {
    a.kron(b)
}

/// Which factor of a bipartite system to keep when tracing out the other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Reduced density matrix of a pure state on a `d₁ × d₂` system.
pub fn reduced_density<T: Real>(
    state: &CVec<T>,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<CMat<T>, LinalgError> {
    let (d1, d2) = dims;
    if state.dim() != d1 * d2 {
        return Err(LinalgError::DimensionMismatch {
            expected: d1 * d2,
            found: state.dim(),
        });
    }
    let amp = |i: usize, k: usize| state[i * d2 + k];
    let zero = Complex::new(T::zero(), T::zero());
    Ok(match keep {
        Subsystem::First => CMat::from_fn(d1, d1, |i, j| {
            (0..d2).fold(zero, |acc, k| acc + amp(i, k) * amp(j, k).conj())
        }),
        Subsystem::Second => CMat::from_fn(d2, d2, |k, l| {
            (0..d1).fold(zero, |acc, i| acc + amp(i, k) * amp(i, l).conj())
        }),
    })
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// The matrix is embedded as the real symmetric `[[Re, -Im], [Im, Re]]`, whose
/// spectrum is that of the input with every eigenvalue doubled, and diagonalized
/// by cyclic Jacobi sweeps.
pub fn hermitian_eigenvalues<T: Real>(m: &CMat<T>) -> Vec<T> {
    assert_eq!(m.rows(), m.cols(), "eigenvalues need a square matrix");
    let n = m.rows();
    let size = 2 * n;
    let mut a = vec![T::zero(); size * size];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            // symmetrize to absorb rounding in the Hermitian input
            let w = m[(j, i)].conj();
            let re = (z.re + w.re) / lit(2.0);
            let im = (z.im + w.im) / lit(2.0);
            a[i * size + j] = re;
            a[(i + n) * size + (j + n)] = re;
            a[i * size + (j + n)] = -im;
            a[(i + n) * size + j] = im;
        }
    }
    jacobi_symmetric(&mut a, size);
    let mut diag: Vec<T> = (0..size).map(|i| a[i * size + i]).collect();
    diag.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    diag.chunks(2).map(|p| (p[0] + p[1]) / lit(2.0)).collect()
}

fn jacobi_symmetric<T: Real>(a: &mut [T], n: usize) {
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut scale = T::zero();
        for i in 0..n {
            for j in 0..n {
                let v = a[i * n + j] * a[i * n + j];
                if i == j {
                    scale = scale + v;
                } else {
                    off = off + v;
                }
            }
        }
        if off <= eps * eps * (scale + off) || off == T::zero() {
            return;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (lit::<T>(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
}

/// `-x log₂ x` with the convention `0 log 0 = 0`.
#[inline]
pub fn entropy_term<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        -x * x.log2()
    }
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy<T: Real>(rho: &CMat<T>) -> Result<T, LinalgError> {
    let eig = hermitian_eigenvalues(rho);
    if let Some(&min) = eig.first() {
        if min < -T::TOL.eigenvalue {
            return Err(LinalgError::NegativeEigenvalue(to_f64(min)));
        }
    }
    let s = eig.into_iter().fold(T::zero(), |acc, l| acc + entropy_term(l));
    Ok(s.max(T::zero()))
}

/// Binary entropy `H(x) = -x log₂ x - (1-x) log₂(1-x)`.
pub fn binary_entropy<T: Real>(x: T) -> Result<T, LinalgError> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(LinalgError::Domain(to_f64(x)));
    }
    Ok(entropy_term(x) + entropy_term(T::one() - x))
}

/// Shannon entropy in bits of a probability vector.
pub fn shannon_entropy<T: Real>(probabilities: &[T]) -> T {
    probabilities.iter().fold(T::zero(), |acc, &p| acc + entropy_term(p))
}

/// Tangle `4 det ρ` of the qubit side of a pure `2 × d` state.
pub fn qubit_tangle<T: Real>(state: &CVec<T>) -> Result<T, LinalgError> {
    if !state.dim().is_multiple_of(2) || state.dim() < 4 {
        return Err(LinalgError::DimensionMismatch {
            expected: 2 * (state.dim() / 2).max(2),
            found: state.dim(),
        });
    }
    let rho = reduced_density(state, (2, state.dim() / 2), Subsystem::First)?;
    let det = rho[(0, 0)].re * rho[(1, 1)].re - rho[(0, 1)].norm_sqr();
    Ok(clamp(lit::<T>(4.0) * det, T::zero(), T::one()))
}

/// Tangle of a qubit–qutrit pure state.
pub fn qubit_qutrit_tangle<T: Real>(state: &CVec<T>) -> Result<T, LinalgError> {
    if state.dim() != 6 {
        return Err(LinalgError::DimensionMismatch {
            expected: 6,
            found: state.dim(),
        });
    }
    qubit_tangle(state)
}

/// Entanglement entropy of a qubit–qudit pure state from its tangle,
/// `H((1 + √(1 - C)) / 2)`.
pub fn entanglement_from_tangle<T: Real>(tangle: T) -> T {
    let c = clamp(tangle, T::zero(), T::one());
    let x = (T::one() + (T::one() - c).sqrt()) / lit(2.0);
    binary_entropy(clamp(x, T::zero(), T::one())).unwrap_or(T::zero())
}
