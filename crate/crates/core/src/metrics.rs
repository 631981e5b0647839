//! Secure-key figures of merit: CHSH maximum, minimal QBER, the
//! Devetak-Winter rate and the key rate per detection window.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::state::{correlation_analysis, DensityMatrix};

/// Tsirelson bound `2√2`.
pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

/// CHSH values above the Tsirelson bound by at most this much are treated as
/// numerical noise and clipped.
pub const S_CLIP_TOL: f64 = 1e-9;

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid(format!("binary entropy argument must be in [0, 1], got {q}")));
    }
    Ok(h(q))
}

fn h(q: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(q) + term(1.0 - q)
}

/// `S_max = 2√(λ₁ + λ₂)`.
pub fn chsh_max(rho: &DensityMatrix) -> f64 {
    let ca = correlation_analysis(rho);
    (2.0 * (ca.eigenvalues[0] + ca.eigenvalues[1]).sqrt()).min(TSIRELSON)
}

/// `Q_min = (1 − √λ₁)/2`.
pub fn qber_min(rho: &DensityMatrix) -> f64 {
    let ca = correlation_analysis(rho);
    ((1.0 - ca.eigenvalues[0].sqrt()) / 2.0).clamp(0.0, 0.5)
}

fn check_s_q(s: f64, q: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&q) {
        return Err(invalid(format!("QBER must be in [0, 0.5], got {q}")));
    }
    if !(s >= 0.0) || s > TSIRELSON + S_CLIP_TOL {
        return Err(invalid(format!("CHSH value must be in [0, 2√2], got {s}")));
    }
    Ok(s.min(TSIRELSON))
}

/// Devetak-Winter rate before clamping: `1 − h(Q) − h((1 + √((S/2)² − 1))/2)`.
///
/// For `S ≤ 2` the square root argument is clipped at zero, so the Holevo
/// term saturates at one bit.
pub fn devetak_winter_raw(s: f64, q: f64) -> Result<f64> {
    let s = check_s_q(s, q)?;
    let root = ((s / 2.0).powi(2) - 1.0).max(0.0).sqrt();
    Ok(1.0 - h(q) - h(((1.0 + root) / 2.0).min(1.0)))
}

/// Devetak-Winter lower bound in bits per detected pair, clamped at zero and
/// exactly zero for `S ≤ 2`.
pub fn devetak_winter(s: f64, q: f64) -> Result<f64> {
    let raw = devetak_winter_raw(s, q)?;
    if s <= 2.0 {
        return Ok(0.0);
    }
    Ok(raw.max(0.0))
}

/// `R_key = r_DW · r_C`, secure bits per detection window.
pub fn key_rate(r_dw: f64, r_c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r_dw) {
        return Err(invalid(format!("r_DW must be in [0, 1], got {r_dw}")));
    }
    if !(r_c >= 0.0) {
        return Err(invalid(format!("coincidence rate must be nonnegative, got {r_c}")));
    }
    Ok(r_dw * r_c)
}

/// `(S, Q)` of a Bell state mixed with white-noise weight `κ`:
/// `S = 2√2 (1 − κ)`, `Q = κ/2`.
pub fn s_q_from_kappa(kappa: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(invalid(format!("white-noise weight must be in [0, 1], got {kappa}")));
    }
    Ok((TSIRELSON * (1.0 - kappa), kappa / 2.0))
}

/// Figures of merit of one source configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QkdMetrics {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub r_dw: f64,
    pub r_c: f64,
    #[serde(rename = "R_key")]
    pub r_key: f64,
}

impl QkdMetrics {
    /// Chains `devetak_winter` and `key_rate` from `(S, Q, r_C)`.
    pub fn from_s_q(s: f64, q: f64, r_c: f64) -> Result<Self> {
        let r_dw = devetak_winter(s, q)?;
        let r_key = key_rate(r_dw, r_c)?;
        Ok(QkdMetrics {
            s: s.min(TSIRELSON),
            q,
            r_dw,
            r_c,
            r_key,
        })
    }

    /// Metrics of a reconstructed state at a measured coincidence rate.
    pub fn from_state(rho: &DensityMatrix, r_c: f64) -> Result<Self> {
        Self::from_s_q(chsh_max(rho), qber_min(rho), r_c)
    }
}
