//! Dense complex operators, state vectors and density matrices.
//!
//! Everything is dimensionless with ħ = 1; energies are in units of the
//! clockwork level spacing unless stated otherwise.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Square complex matrix acting on the clockwork Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: Array2<C64>,
}

impl Operator {
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidInput(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("operator has non-finite entries".into()));
        }
        Ok(Self { mat })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: Array2::zeros((dim, dim)) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: Array2::eye(dim) }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut mat = Array2::zeros((diag.len(), diag.len()));
        for (k, z) in diag.iter().enumerate() {
            mat[[k, k]] = *z;
        }
        Self { mat }
    }

    /// Rank-one operator `|ket><bra|`.
    pub fn outer(ket: &StateVector, bra: &StateVector) -> Self {
        let d = ket.dim();
        let mut mat = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                mat[[i, j]] = ket.amplitudes()[i] * bra.amplitudes()[j].conj();
            }
        }
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn dagger(&self) -> Self {
        Self { mat: dagger(&self.mat) }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { mat: &self.mat * z }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { mat: &self.mat + &other.mat }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { mat: &self.mat - &other.mat }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self { mat: self.mat.dot(&other.mat) }
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        for i in 0..d {
            for j in i..d {
                if (self.mat[[i, j]] - self.mat[[j, i]].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Conjugate transpose.
pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

pub fn frobenius_norm(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Commutator `[a, b]`.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Anticommutator `{a, b}`.
pub fn anticommutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) + b.dot(a)
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Array1<C64>,
}

impl StateVector {
    const NORM_TOL: f64 = 1e-12;

    /// Builds a state from amplitudes that must already be normalized.
    pub fn new(amps: Array1<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidInput("state vector must have dim >= 1".into()));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "state vector norm is {norm}, expected 1 within {}",
                Self::NORM_TOL
            )));
        }
        Ok(Self { amps })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(amps: Array1<C64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidInput("cannot normalize zero or non-finite state".into()));
        }
        Ok(Self { amps: amps.mapv(|z| z / norm) })
    }

    /// Computational (energy) basis state `|E_n>`.
    pub fn basis(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::InvalidInput(format!("basis index {n} out of range for dim {dim}")));
        }
        let mut amps = Array1::zeros(dim);
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `<self| op |self>`.
    pub fn expectation(&self, op: &Operator) -> C64 {
        let v = op.matrix().dot(&self.amps);
        self.amps.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Hermitian, positive semidefinite matrix with trace in (0, 1].
///
/// Sub-normalized states are allowed: the no-tick conditioned state loses
/// trace as ticking probability accumulates.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: Array2<C64>,
}

impl DensityMatrix {
    const HERM_TOL: f64 = 1e-10;
    const EIG_TOL: f64 = -1e-10;
    const TRACE_TOL: f64 = 1e-10;

    pub fn new(mat: Array2<C64>) -> Result<Self> {
        use ndarray_linalg::{EighInto, UPLO};
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidInput("density matrix must be square".into()));
        }
        let op = Operator::new(mat.clone())?;
        if !op.is_hermitian(Self::HERM_TOL) {
            return Err(Error::InvalidInput("density matrix is not Hermitian".into()));
        }
        let tr = trace(&mat).re;
        if tr <= 0.0 || tr > 1.0 + Self::TRACE_TOL {
            return Err(Error::InvalidInput(format!("density matrix trace {tr} outside (0, 1]")));
        }
        let (eigs, _) = mat.clone().eigh_into(UPLO::Lower)?;
        if eigs.iter().any(|&w| w < Self::EIG_TOL) {
            return Err(Error::InvalidInput(format!(
                "density matrix has negative eigenvalue {:.3e}",
                eigs.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        Ok(Self { mat })
    }

    /// `|psi><psi|`; skips the spectral check.
    pub fn from_pure(psi: &StateVector) -> Self {
        Self { mat: Operator::outer(psi, psi).into_matrix() }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        trace(&self.mat).re
    }
}

/// Effective non-Hermitian drift `A = iH - V` with `V = (1/2) sum_j J_j^dag J_j`.
///
/// When `V` is positive definite every eigenvalue of `A` has a strictly
/// negative real part, which is what makes the waiting-time moments finite.
#[derive(Debug, Clone)]
pub struct EffectiveGenerator {
    a: Operator,
}

impl EffectiveGenerator {
    /// Builds `A = iH - V` from a Hermitian `H` and the jump-rate operator `V`.
    pub fn new(hamiltonian: &Operator, v_hat: &Operator) -> Result<Self> {
        if hamiltonian.dim() != v_hat.dim() {
            return Err(Error::InvalidInput("H and V dimension mismatch".into()));
        }
        let i = C64::new(0.0, 1.0);
        let a = Operator::new(hamiltonian.matrix() * i - v_hat.matrix())?;
        Ok(Self { a })
    }

    pub fn from_matrix(a: Operator) -> Self {
        Self { a }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.a
    }
}
