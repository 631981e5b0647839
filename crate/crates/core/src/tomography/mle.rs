use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{TomographySettings, GROUPS, SETTINGS};
use crate::error::{invalid, Result};
use crate::numeric::golden_section_max;
use crate::state::{kron, paulis, DensityMatrix, Matrix2c, Matrix4c};

type Vector4c = Vector4<Complex64>;

/// Largest step multiple tried by the line search.
const MAX_OVERRELAXATION: f64 = 1024.0;

/// Iteration control for [`mle_reconstruct`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Largest element change of `ρ` allowed in the final step.
    pub element_tol: f64,
    /// Largest log-likelihood gain allowed in the final step.
    pub likelihood_tol: f64,
    /// Keep the log-likelihood of every accepted iterate.
    pub record_trace: bool,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_iterations: 20_000,
            element_tol: 1e-10,
            likelihood_tol: 1e-12,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix,
    /// `Σ f_k ln p_k` with `f` normalized per complementary group.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub likelihood_trace: Vec<f64>,
}

/// Normalizes each complementary quadruple to unit sum. Groups with no
/// counts carry no information and stay zero.
fn normalize_groups(frequencies: &[f64; SETTINGS]) -> Result<([f64; SETTINGS], usize)> {
    if frequencies.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(invalid("frequencies must be finite and nonnegative"));
    }
    let mut out = [0.0; SETTINGS];
    let mut active = 0;
    for g in 0..GROUPS {
        let sum: f64 = frequencies[4 * g..4 * g + 4].iter().sum();
        if sum > 0.0 {
            active += 1;
            for k in 4 * g..4 * g + 4 {
                out[k] = frequencies[k] / sum;
            }
        }
    }
    if active == 0 {
        return Err(invalid("all frequencies are zero"));
    }
    Ok((out, active))
}

fn projection_vectors(settings: &TomographySettings) -> Vec<Vector4c> {
    settings
        .bloch_pairs()
        .map(|(a, b)| {
            // rank-one projector; its first nonzero column spans the state
            let p = kron(&a.projector(), &b.projector());
            let col = (0..4)
                .map(|c| p.column(c).into_owned())
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .unwrap();
            col / Complex64::from(col.norm())
        })
        .collect()
}

fn probabilities(rho: &Matrix4c, vs: &[Vector4c]) -> Vec<f64> {
    vs.iter().map(|v| (v.adjoint() * rho * v)[(0, 0)].re).collect()
}

fn log_likelihood(f: &[f64; SETTINGS], p: &[f64]) -> f64 {
    f.iter()
        .zip(p)
        .filter(|(fk, _)| **fk > 0.0)
        .map(|(fk, pk)| if *pk > 0.0 { fk * pk.ln() } else { f64::NEG_INFINITY })
        .sum()
}

fn normalized(m: Matrix4c) -> Matrix4c {
    let h = (m + m.adjoint()) * Complex64::from(0.5);
    let tr = h.trace().re;
    h / Complex64::from(tr)
}

/// `Σ f_k ln(1 + Δp_k / p_k)`: the exact log-likelihood change, kept at
/// full relative precision near the optimum where `ln L` itself no longer
/// resolves it.
fn likelihood_gain(f: &[f64; SETTINGS], p: &[f64], dp: &[f64]) -> f64 {
    f.iter()
        .zip(p)
        .zip(dp)
        .filter(|((fk, _), _)| **fk > 0.0)
        .map(|((fk, pk), dpk)| {
            let x = dpk / pk;
            if x > -1.0 {
                fk * x.ln_1p()
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum()
}

/// The 15 traceless operators `σ_a ⊗ σ_b / 4`, `(a, b) ≠ (0, 0)`, `σ_0 = 1`.
fn pauli_basis() -> Vec<Matrix4c> {
    let mut sigma = vec![Matrix2c::identity()];
    sigma.extend(paulis());
    let mut out = Vec::with_capacity(15);
    for a in 0..4 {
        for b in 0..4 {
            if a + b > 0 {
                out.push(kron(&sigma[a], &sigma[b]) * Complex64::from(0.25));
            }
        }
    }
    out
}

const POLISH_ITERATIONS: usize = 30;
const POLISH_HALVINGS: usize = 8;

/// Newton ascent in the Pauli coordinates of `ρ`, where `ln L` is concave
/// with an exact Hessian. Converges quadratically to an interior optimum;
/// stops at the first step that cannot be kept positive semidefinite within
/// a few halvings, which is where a rank-deficient optimum leaves `ρ`.
fn newton_polish(
    rho: &mut Matrix4c,
    p: &mut Vec<f64>,
    f: &[f64; SETTINGS],
    vs: &[Vector4c],
    mut on_accept: impl FnMut(f64),
) -> usize {
    let basis = pauli_basis();
    // a[k][j] = <v_k| G_j |v_k>
    let a: Vec<Vec<f64>> = vs
        .iter()
        .map(|v| basis.iter().map(|g| (v.adjoint() * g * v)[(0, 0)].re).collect())
        .collect();
    let mut steps = 0;
    for _ in 0..POLISH_ITERATIONS {
        let mut grad = DVector::<f64>::zeros(15);
        let mut neg_hess = DMatrix::<f64>::zeros(15, 15);
        for k in 0..SETTINGS {
            if f[k] > 0.0 {
                let w = f[k] / p[k];
                let ak = DVector::from_column_slice(&a[k]);
                grad += &ak * w;
                neg_hess += &ak * ak.transpose() * (w / p[k]);
            }
        }
        let Some(chol) = neg_hess.cholesky() else {
            break;
        };
        let delta = chol.solve(&grad);
        if !(grad.dot(&delta) > 1e-24) {
            break;
        }
        let dm = basis
            .iter()
            .zip(delta.iter())
            .fold(Matrix4c::zeros(), |acc, (g, d)| acc + g * Complex64::from(*d));
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..POLISH_HALVINGS {
            let trial = *rho + dm * Complex64::from(t);
            let min_eig = SymmetricEigen::new(trial).eigenvalues.min();
            if min_eig >= 0.0 {
                let dp = probabilities(&(dm * Complex64::from(t)), vs);
                let gain = likelihood_gain(f, p, &dp);
                if gain >= 0.0 {
                    accepted = Some((trial, gain));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((next, gain)) = accepted else {
            break;
        };
        *rho = normalized(next);
        *p = probabilities(rho, vs);
        steps += 1;
        on_accept(gain);
    }
    steps
}

/// Maximum-likelihood two-qubit state for the 36 projection frequencies.
///
/// Iterates `ρ → MρM / Tr(MρM)` with `M = 1 + ε(R − 1)` and
/// `R = Σ_k (f_k / p_k) Π_k / G`, `G` the number of groups with data.
/// `ε = 1` is the plain `RρR` map. Each iteration doubles `ε` while the
/// likelihood keeps rising and halves it when the likelihood would fall, so
/// every accepted iterate is monotone. Stops when no element of `ρ` moves by
/// more than `element_tol` or the likelihood gain is below `likelihood_tol`.
///
/// The fixed-point map slows down badly near the optimum, so a converged
/// result is finished with a few Newton steps (only accepted when they
/// raise the likelihood and keep `ρ` positive semidefinite). That makes
/// the result reproducible to near machine precision for full-rank optima.
pub fn mle_reconstruct(
    frequencies: &[f64; SETTINGS],
    settings: &TomographySettings,
    options: &MleOptions,
) -> Result<ReconstructionResult> {
    let (f, active) = normalize_groups(frequencies)?;
    let vs = projection_vectors(settings);
    let projectors: Vec<Matrix4c> = vs.iter().map(|v| v * v.adjoint()).collect();
    let identity = Matrix4c::identity();

    let mut rho = identity * Complex64::from(0.25);
    let mut p = probabilities(&rho, &vs);
    let mut ll = log_likelihood(&f, &p);
    let mut trace = Vec::new();
    if options.record_trace {
        trace.push(ll);
    }
    let mut converged = false;
    let mut iterations = 0;

    let step = |rho: &Matrix4c, p: &[f64], d: &Matrix4c, eps: f64| {
        let m = identity + d * Complex64::from(eps);
        let next = normalized(m * rho * m);
        let gain = likelihood_gain(&f, p, &probabilities(&(next - rho), &vs));
        (next, gain)
    };

    while iterations < options.max_iterations {
        iterations += 1;
        let mut r = Matrix4c::zeros();
        for ((fk, pk), proj) in f.iter().zip(&p).zip(&projectors) {
            if *fk > 0.0 {
                r += proj * Complex64::from(fk / pk / active as f64);
            }
        }
        let d = r - identity;

        let mut eps = 1.0;
        let mut best = step(&rho, &p, &d, eps);
        if best.1 >= 0.0 {
            while eps < MAX_OVERRELAXATION {
                let trial = step(&rho, &p, &d, 2.0 * eps);
                if !(trial.1 > best.1) {
                    break;
                }
                eps *= 2.0;
                best = trial;
            }
        } else {
            while !(best.1 >= 0.0) && eps > 1e-12 {
                eps *= 0.5;
                best = step(&rho, &p, &d, eps);
            }
        }
        let (next, gain) = best;
        if !(gain >= 0.0) {
            // no ascent left at working precision
            converged = true;
            break;
        }
        let max_change = (next - rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
        rho = next;
        p = probabilities(&rho, &vs);
        ll += gain;
        if options.record_trace {
            trace.push(ll);
        }
        if max_change < options.element_tol || gain < options.likelihood_tol {
            converged = true;
            break;
        }
    }

    if converged {
        iterations += newton_polish(&mut rho, &mut p, &f, &vs, |gain| {
            ll += gain;
            if options.record_trace {
                trace.push(ll);
            }
        });
    }

    Ok(ReconstructionResult {
        rho: DensityMatrix::from_unnormalized(rho)?,
        log_likelihood: log_likelihood(&f, &p),
        iterations,
        converged,
        likelihood_trace: trace,
    })
}

/// White-noise weight `κ ∈ [0, 1]` of the state `(1 − κ)ρ_B + κ/4` that
/// maximizes `Σ f_k ln C_k(κ)` over the 36 frequencies (normalized per group).
pub fn fit_kappa(frequencies: &[f64; SETTINGS], settings: &TomographySettings, rho_b: &DensityMatrix) -> Result<f64> {
    let (f, _) = normalize_groups(frequencies)?;
    let base: Vec<f64> = settings
        .bloch_pairs()
        .map(|(a, b)| rho_b.projection_probability(&a, &b))
        .collect();
    let objective = |kappa: f64| {
        let p: Vec<f64> = base.iter().map(|c| (1.0 - kappa) * c + 0.25 * kappa).collect();
        log_likelihood(&f, &p)
    };
    let (mut best, mut best_ll) = golden_section_max(objective, 0.0, 1.0, 1e-10);
    for edge in [0.0, 1.0] {
        let ll = objective(edge);
        if ll >= best_ll {
            best = edge;
            best_ll = ll;
        }
    }
    Ok(best)
}
