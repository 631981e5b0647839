//! Optimal measurement directions for the key and CHSH bases, and the
//! waveplate dial settings that realize a projection direction.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{correlation_analysis, BlochVector, DensityMatrix};

/// Which tensor factor of the density matrix belongs to Alice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    /// `ρ ∈ H_Alice ⊗ H_Bob`.
    AliceFirst,
    /// `ρ ∈ H_Bob ⊗ H_Alice`.
    BobFirst,
}

/// Alice's key basis `a0`, her CHSH bases `a1`, `a2` and Bob's `b1`, `b2`.
/// Bob's key basis is `b1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    pub a0: BlochVector,
    pub a1: BlochVector,
    pub a2: BlochVector,
    pub b1: BlochVector,
    pub b2: BlochVector,
    pub ordering: Ordering,
}

/// Below this `λ₂` the CHSH pair collapses onto the key direction.
const DEGENERATE_TOL: f64 = 1e-12;

fn unit(v: Vector3<f64>) -> BlochVector {
    let v = v / v.norm();
    BlochVector([v[0], v[1], v[2]])
}

/// Optimal bases from the eigen-decomposition of `U = TᵀT`.
///
/// With `u_i = T e_i / |T e_i|` and weights `w_i = √(λ_i / (λ₁ + λ₂))`, the
/// party on the row side of `T` measures `u₁` (key) and `w₁u₁ ± w₂u₂` (CHSH),
/// the party on the column side measures `e₁` and `e₂`. For
/// [`Ordering::AliceFirst`] Alice is on the row side, for
/// [`Ordering::BobFirst`] Bob is.
///
/// When `λ₂ = 0` the two mixed directions coincide with the key direction;
/// in the `BobFirst` case `T e₂` vanishes and `b2` is set equal to `b1`
/// (any choice gives the same `S`).
pub fn optimal_bases(rho: &DensityMatrix, ordering: Ordering) -> Result<BasisSet> {
    let ca = correlation_analysis(rho);
    let [l1, l2, _] = ca.eigenvalues;
    if l1 <= 1e-12 {
        return Err(Error::NoSignal(format!(
            "largest correlation eigenvalue {l1:.3e} is zero; no preferred basis"
        )));
    }
    let [e1, e2, _] = ca.eigenvectors;
    let u1 = ca.t * e1 / l1.sqrt();
    let (mix_p, mix_m, u2) = if l2 > DEGENERATE_TOL {
        let u2 = ca.t * e2 / l2.sqrt();
        let (w1, w2) = ((l1 / (l1 + l2)).sqrt(), (l2 / (l1 + l2)).sqrt());
        (w1 * u1 + w2 * u2, w1 * u1 - w2 * u2, Some(u2))
    } else {
        (u1, u1, None)
    };
    let bs = match ordering {
        Ordering::AliceFirst => BasisSet {
            a0: unit(u1),
            a1: unit(mix_p),
            a2: unit(mix_m),
            b1: unit(e1),
            b2: unit(e2),
            ordering,
        },
        Ordering::BobFirst => {
            // the row side is Bob here, so the mixed directions live in
            // Alice's eigenbasis and Bob takes the images
            let (w1, w2) = ((l1 / (l1 + l2)).sqrt(), (l2 / (l1 + l2)).sqrt());
            let (a1, a2) = if u2.is_some() {
                (w1 * e1 + w2 * e2, w1 * e1 - w2 * e2)
            } else {
                (e1, e1)
            };
            BasisSet {
                a0: unit(e1),
                a1: unit(a1),
                a2: unit(a2),
                b1: unit(u1),
                b2: unit(u2.unwrap_or(u1)),
                ordering,
            }
        }
    };
    Ok(bs)
}

/// Correlation tensor with Alice on the rows.
fn alice_bob_tensor(rho: &DensityMatrix, ordering: Ordering) -> Matrix3<f64> {
    let t = correlation_analysis(rho).t;
    match ordering {
        Ordering::AliceFirst => t,
        Ordering::BobFirst => t.transpose(),
    }
}

/// Evaluates `S = a₁ᵀT(b₁ + b₂) + a₂ᵀT(b₁ − b₂)` and `Q = (1 − a₀ᵀT b₁)/2`
/// for the given directions, with `T` oriented Alice × Bob.
pub fn verify_bases(rho: &DensityMatrix, bs: &BasisSet) -> (f64, f64) {
    let t = alice_bob_tensor(rho, bs.ordering);
    let [a0, a1, a2, b1, b2] = [bs.a0, bs.a1, bs.a2, bs.b1, bs.b2].map(|v| v.as_vector());
    let s = a1.dot(&(t * (b1 + b2))) + a2.dot(&(t * (b1 - b2)));
    let q = (1.0 - a0.dot(&(t * b1))) / 2.0;
    (s, q)
}

/// Dial angles in radians, measured from the horizontal. Light passes the
/// half-wave plate first, then the quarter-wave plate, then an H/V
/// polarizing beam splitter whose horizontal port is outcome `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveplateSetting {
    /// In `(−π/2, π/2]`.
    pub theta_q: f64,
    /// In `(−π/4, π/4]`.
    pub theta_h: f64,
}

/// Reduces `x` modulo `period` into `(−period/2, period/2]`.
fn reduce(x: f64, period: f64) -> f64 {
    let r = x - period * (x / period).round();
    if r <= -period / 2.0 {
        r + period
    } else {
        r
    }
}

/// `θ_Q = ½ asin(x₂)`, `θ_H = ¼ [atan2(x₁, x₃) + asin(x₂)]`, reduced by the
/// plate periods (`π` for the QWP, `π/2` for the HWP), which change the
/// projected state only by a global phase.
///
/// Projecting onto `−x` uses the same dials with the outcomes swapped. For
/// circular directions `atan2(0, 0) = 0`.
pub fn waveplate_angles(x: &BlochVector) -> WaveplateSetting {
    let [x1, x2, x3] = x.0;
    let chi = x2.clamp(-1.0, 1.0).asin();
    WaveplateSetting {
        theta_q: reduce(chi / 2.0, PI),
        theta_h: reduce((x1.atan2(x3) + chi) / 4.0, FRAC_PI_2),
    }
}
