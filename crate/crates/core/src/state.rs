//! Two-qubit states and the algebra shared by every other module.
//!
//! The four-dimensional space is ordered `|HH>, |HV>, |VH>, |VV>`, i.e. the
//! basis index is `2 * a + b` where `a` is Alice's qubit and `b` is Bob's
//! (H = 0, V = 1). States always live in `H_Alice ⊗ H_Bob` unless a function
//! takes an explicit [`Subsystem`] or ordering argument. `|H>` and `|V>` are
//! the `+1` and `-1` eigenvectors of `σ₃`, so `σ₁ = σ_x`, `σ₂ = σ_y`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Matrix2c = Matrix2<Complex64>;
pub type Matrix4c = Matrix4<Complex64>;
pub type Vector4c = Vector4<Complex64>;

/// Maximum element-wise deviation from hermiticity accepted for a state.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted before a state is declared non-positive.
pub const PSD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli matrix `σ_i` for `i ∈ {1, 2, 3}`.
pub fn pauli(i: usize) -> Result<Matrix2c> {
    match i {
        1 => Ok(Matrix2::new(ZERO, ONE, ONE, ZERO)),
        2 => Ok(Matrix2::new(ZERO, -I, I, ZERO)),
        3 => Ok(Matrix2::new(ONE, ZERO, ZERO, -ONE)),
        _ => Err(invalid(format!("Pauli index must be 1, 2 or 3, got {i}"))),
    }
}

pub(crate) fn paulis() -> [Matrix2c; 3] {
    [pauli(1).unwrap(), pauli(2).unwrap(), pauli(3).unwrap()]
}

/// Kronecker product `a ⊗ b` in the `|HH>, |HV>, |VH>, |VV>` ordering.
pub fn kron(a: &Matrix2c, b: &Matrix2c) -> Matrix4c {
    Matrix4c::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues clipped at zero.
fn psd_sqrt(m: &Matrix4c) -> Matrix4c {
    let eig = SymmetricEigen::new(*m);
    let sqrt_vals = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    let v = eig.eigenvectors;
    v * Matrix4c::from_diagonal(&sqrt_vals) * v.adjoint()
}

fn hermitian_deviation<const N: usize>(m: &nalgebra::SMatrix<Complex64, N, N>) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A real 3-vector on the Bloch sphere parameterizing a qubit projection.
///
/// The associated projector is `(1 + x·σ) / 2`; its antipode `-x` is the
/// orthogonal state `ψ⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub const H: BlochVector = BlochVector([0.0, 0.0, 1.0]);
    pub const V: BlochVector = BlochVector([0.0, 0.0, -1.0]);
    pub const D: BlochVector = BlochVector([1.0, 0.0, 0.0]);
    pub const A: BlochVector = BlochVector([-1.0, 0.0, 0.0]);
    pub const R: BlochVector = BlochVector([0.0, 1.0, 0.0]);
    pub const L: BlochVector = BlochVector([0.0, -1.0, 0.0]);

    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        BlochVector([x1, x2, x3])
    }

    /// Normalizes `v`; zero vectors have no direction and are rejected.
    pub fn from_direction(v: &Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        let u = v / n;
        Ok(BlochVector([u[0], u[1], u[2]]))
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    pub fn antipode(&self) -> Self {
        BlochVector([-self.0[0], -self.0[1], -self.0[2]])
    }

    /// `x · σ`, the ±1-valued observable of this measurement direction.
    pub fn observable(&self) -> Matrix2c {
        let [s1, s2, s3] = paulis();
        s1 * Complex64::from(self.0[0]) + s2 * Complex64::from(self.0[1]) + s3 * Complex64::from(self.0[2])
    }

    /// Rank-one projector `|ψ><ψ| = (1 + x·σ)/2`.
    pub fn projector(&self) -> Matrix2c {
        (Matrix2c::identity() + self.observable()) * Complex64::from(0.5)
    }
}

/// Which qubit to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// A validated single-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleQubitState(Matrix2c);

impl SingleQubitState {
    pub fn new(m: Matrix2c) -> Result<Self> {
        let herm = hermitian_deviation(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::Unphysical(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Unphysical(format!("trace {tr} is not 1")));
        }
        let min = SymmetricEigen::new(m).eigenvalues.min();
        if min < -PSD_TOL {
            return Err(Error::Unphysical(format!("negative eigenvalue {min:e}")));
        }
        Ok(SingleQubitState(m))
    }

    /// Pure state along a Bloch direction.
    pub fn pure(x: &BlochVector) -> Self {
        SingleQubitState(x.projector())
    }

    pub fn maximally_mixed() -> Self {
        SingleQubitState(Matrix2c::identity() * Complex64::from(0.5))
    }

    pub fn matrix(&self) -> &Matrix2c {
        &self.0
    }

    /// `<ψ|ρ|ψ>` for the pure state along `x`.
    pub fn probability(&self, x: &BlochVector) -> f64 {
        (self.0 * x.projector()).trace().re
    }
}

/// A validated two-qubit density matrix in `H_Alice ⊗ H_Bob`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityMatrixJson", into = "DensityMatrixJson")]
pub struct DensityMatrix(Matrix4c);

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity (to [`PSD_TOL`]).
    pub fn new(m: Matrix4c) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Unphysical("non-finite matrix element".into()));
        }
        let herm = hermitian_deviation(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::Unphysical(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Unphysical(format!("trace {tr} is not 1")));
        }
        let min = SymmetricEigen::new(m).eigenvalues.min();
        if min < -PSD_TOL {
            return Err(Error::Unphysical(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// Hermitizes and trace-normalizes `m` before validating it. Used for
    /// matrices produced by floating-point iterations.
    pub fn from_unnormalized(m: Matrix4c) -> Result<Self> {
        let h = (m + m.adjoint()) * Complex64::from(0.5);
        let tr = h.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::Unphysical(format!("trace {tr} cannot be normalized")));
        }
        Self::new(h / Complex64::from(tr))
    }

    /// `|ψ><ψ|` for a (not necessarily normalized) state vector.
    pub fn from_pure(psi: &Vector4c) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) {
            return Err(invalid("zero state vector"));
        }
        let psi = psi / Complex64::from(n);
        Self::from_unnormalized(psi * psi.adjoint())
    }

    /// `ρ_A ⊗ ρ_B`.
    pub fn product(a: &SingleQubitState, b: &SingleQubitState) -> Self {
        DensityMatrix(kron(a.matrix(), b.matrix()))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Matrix4c::identity() * Complex64::from(0.25))
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.0
    }

    /// Real expectation value `Tr[ρ O]` of a Hermitian operator.
    pub fn expectation(&self, op: &Matrix4c) -> f64 {
        (self.0 * op).trace().re
    }

    /// `<ψ_a ψ_b|ρ|ψ_a ψ_b>` for the product projection along two Bloch directions.
    pub fn projection_probability(&self, a: &BlochVector, b: &BlochVector) -> f64 {
        self.expectation(&kron(&a.projector(), &b.projector()))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2], ev[3]]
    }

    /// Swaps the two qubits (`H_A ⊗ H_B → H_B ⊗ H_A`).
    pub fn swapped(&self) -> Self {
        let perm = [0usize, 2, 1, 3];
        DensityMatrix(Matrix4c::from_fn(|r, c| self.0[(perm[r], perm[c])]))
    }

    /// Conjugation by a local unitary `u_a ⊗ u_b`.
    pub fn local_unitary(&self, u_a: &Matrix2c, u_b: &Matrix2c) -> Self {
        let u = kron(u_a, u_b);
        DensityMatrix(u * self.0 * u.adjoint())
    }
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixJson {
    re: [[f64; 4]; 4],
    im: [[f64; 4]; 4],
}

impl TryFrom<DensityMatrixJson> for DensityMatrix {
    type Error = Error;

    fn try_from(j: DensityMatrixJson) -> Result<Self> {
        DensityMatrix::new(Matrix4c::from_fn(|r, c| Complex64::new(j.re[r][c], j.im[r][c])))
    }
}

impl From<DensityMatrix> for DensityMatrixJson {
    fn from(d: DensityMatrix) -> Self {
        let mut re = [[0.0; 4]; 4];
        let mut im = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                re[r][c] = d.0[(r, c)].re;
                im[r][c] = d.0[(r, c)].im;
            }
        }
        DensityMatrixJson { re, im }
    }
}

/// The four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn vector(&self) -> Vector4c {
        let s = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
        match self {
            BellState::PhiPlus => Vector4c::new(s, ZERO, ZERO, s),
            BellState::PhiMinus => Vector4c::new(s, ZERO, ZERO, -s),
            BellState::PsiPlus => Vector4c::new(ZERO, s, s, ZERO),
            BellState::PsiMinus => Vector4c::new(ZERO, s, -s, ZERO),
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        })
    }
}

impl FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi+" | "phiplus" | "φ+" => Ok(BellState::PhiPlus),
            "phi-" | "phiminus" | "φ-" => Ok(BellState::PhiMinus),
            "psi+" | "psiplus" | "ψ+" => Ok(BellState::PsiPlus),
            "psi-" | "psiminus" | "ψ-" => Ok(BellState::PsiMinus),
            _ => Err(invalid(format!("unknown Bell state label {s:?}"))),
        }
    }
}

pub fn bell_state(kind: BellState) -> DensityMatrix {
    let v = kind.vector();
    DensityMatrix(v * v.adjoint())
}

/// `(1 − κ) ρ + κ 1/4`.
pub fn werner_mix(rho: &DensityMatrix, kappa: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(invalid(format!("white-noise weight must be in [0, 1], got {kappa}")));
    }
    let noise = Matrix4c::identity() * Complex64::from(0.25 * kappa);
    Ok(DensityMatrix(rho.0 * Complex64::from(1.0 - kappa) + noise))
}

/// Reduced state of the kept qubit.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> SingleQubitState {
    let m = &rho.0;
    let reduced = match keep {
        Subsystem::A => Matrix2c::from_fn(|i, k| m[(2 * i, 2 * k)] + m[(2 * i + 1, 2 * k + 1)]),
        Subsystem::B => Matrix2c::from_fn(|j, l| m[(j, l)] + m[(2 + j, 2 + l)]),
    };
    SingleQubitState(reduced)
}

/// `T_ij = Tr[ρ (σ_i ⊗ σ_j)]`; rows index Alice, columns Bob.
pub fn correlation_tensor(rho: &DensityMatrix) -> Matrix3<f64> {
    let s = paulis();
    Matrix3::from_fn(|i, j| rho.expectation(&kron(&s[i], &s[j])))
}

/// Correlation tensor `T`, `U = TᵀT` and the eigenpairs of `U` sorted by
/// descending eigenvalue.
///
/// Each eigenvector is oriented so that its first component with magnitude
/// above `1e-12` is positive. Eigenvalues are clipped at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationAnalysis {
    pub t: Matrix3<f64>,
    pub u: Matrix3<f64>,
    pub eigenvalues: [f64; 3],
    pub eigenvectors: [Vector3<f64>; 3],
}

pub fn correlation_analysis(rho: &DensityMatrix) -> CorrelationAnalysis {
    let t = correlation_tensor(rho);
    let u = t.transpose() * t;
    let eig = SymmetricEigen::new(u);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.map(|k| eig.eigenvalues[k].max(0.0));
    let eigenvectors = order.map(|k| {
        let v: Vector3<f64> = eig.eigenvectors.column(k).into_owned();
        match v.iter().find(|c| c.abs() > 1e-12) {
            Some(c) if *c < 0.0 => -v,
            _ => v,
        }
    });
    CorrelationAnalysis {
        t,
        u,
        eigenvalues,
        eigenvectors,
    }
}

/// Wootters concurrence.
///
/// The square roots of the eigenvalues of `ρ ρ̃` are obtained as the
/// eigenvalues of the Hermitian matrix `√(√ρ ρ̃ √ρ)`, which has the same
/// spectrum and avoids a non-Hermitian eigensolver.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let sy = pauli(2).unwrap();
    let flip = kron(&sy, &sy);
    let tilde = flip * rho.0.conjugate() * flip;
    let sqrt_rho = psd_sqrt(&rho.0);
    let m = sqrt_rho * tilde * sqrt_rho;
    let m = (m + m.adjoint()) * Complex64::from(0.5);
    let mut mu: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    mu.sort_by(|a, b| b.total_cmp(a));
    (mu[0] - mu[1] - mu[2] - mu[3]).clamp(0.0, 1.0)
}

/// Uhlmann root fidelity `F = Tr √(√ρ σ √ρ)` (unsquared convention).
///
/// For a pure `ρ = |ψ><ψ|` this is `√<ψ|σ|ψ>`; e.g. a Bell state against
/// the maximally mixed state gives 0.5.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let s = psd_sqrt(&rho.0);
    let m = s * sigma.0 * s;
    let m = (m + m.adjoint()) * Complex64::from(0.5);
    let f: f64 = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    f.clamp(0.0, 1.0)
}
