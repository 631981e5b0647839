//! Continuous-wave SPDC multi-pair model.
//!
//! A window contains a Poisson-distributed number of independent pairs, each
//! in the state `ρ₀`. Every photon survives its arm with probability `η_A`
//! or `η_B`; a tomographic projection registers a coincidence when both
//! detectors click. Summing the Poisson mixture in closed form gives the
//! coincidence probability, the white-noise weight `κ` of the
//! maximum-likelihood state and the coincidence rate `r_C`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metrics::{devetak_winter, devetak_winter_raw, key_rate, s_q_from_kappa};
use crate::state::{partial_trace, werner_mix, BlochVector, DensityMatrix, Subsystem};

/// Source gain and arm transmittances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Mean photon-pair number per detection window.
    pub n_bar: f64,
    pub eta_a: f64,
    pub eta_b: f64,
}

impl SourceParams {
    pub fn new(n_bar: f64, eta_a: f64, eta_b: f64) -> Result<Self> {
        if !(n_bar >= 0.0) || !n_bar.is_finite() {
            return Err(invalid(format!(
                "mean pair number must be finite and >= 0, got {n_bar}"
            )));
        }
        for (name, eta) in [("eta_A", eta_a), ("eta_B", eta_b)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(invalid(format!("{name} must be in [0, 1], got {eta}")));
            }
        }
        Ok(SourceParams { n_bar, eta_a, eta_b })
    }

    pub fn symmetric(n_bar: f64, eta: f64) -> Result<Self> {
        Self::new(n_bar, eta, eta)
    }
}

/// Detector outcome probabilities for a single pair under one projection
/// setting; `p10` means Alice clicks and Bob does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickProbabilities {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

/// Click probabilities of a single pair `ρ₀` projected on `ψ_i ⊗ ψ_j`.
///
/// A lost photon never clicks; a surviving photon clicks when it passes the
/// projection, so a one-sided loss contributes the reduced-state marginal.
pub fn click_probabilities(
    rho0: &DensityMatrix,
    psi_i: &BlochVector,
    psi_j: &BlochVector,
    params: &SourceParams,
) -> ClickProbabilities {
    let (ea, eb) = (params.eta_a, params.eta_b);
    let (pi, pj) = (psi_i, psi_j);
    let (qi, qj) = (psi_i.antipode(), psi_j.antipode());
    let rho_a = partial_trace(rho0, Subsystem::A);
    let rho_b = partial_trace(rho0, Subsystem::B);
    let both = ea * eb;
    let only_a = ea * (1.0 - eb);
    let only_b = (1.0 - ea) * eb;

    let p11 = both * rho0.projection_probability(pi, pj);
    let p10 = both * rho0.projection_probability(pi, &qj) + only_a * rho_a.probability(pi);
    let p01 = both * rho0.projection_probability(&qi, pj) + only_b * rho_b.probability(pj);
    let p00 = both * rho0.projection_probability(&qi, &qj)
        + only_a * rho_a.probability(&qi)
        + only_b * rho_b.probability(&qj)
        + (1.0 - ea) * (1.0 - eb);
    ClickProbabilities { p11, p10, p01, p00 }
}

/// Probability that a window with Poisson(`n̄`) pairs yields a coincidence:
/// `1 − e^{−n̄(1−A)} − e^{−n̄(1−B)} + e^{−n̄(1−D)}` with `A = p10 + p00`,
/// `B = p01 + p00`, `D = p00`.
pub fn coincidence_probability(cp: &ClickProbabilities, n_bar: f64) -> f64 {
    let not_a = cp.p11 + cp.p01; // 1 - A
    let not_b = cp.p11 + cp.p10; // 1 - B
    let not_d = cp.p11 + cp.p10 + cp.p01; // 1 - D
                                          // 1 - e^{-x} - e^{-y} + e^{-z} = -expm1(-x) + e^{-y} expm1(y - z)
    let c = -(-n_bar * not_a).exp_m1() + (-n_bar * not_b).exp() * (n_bar * (not_b - not_d)).exp_m1();
    c.clamp(0.0, 1.0)
}

/// `ln(expm1(x) / x)` for `x ≥ 0`, with value 0 at `x = 0`.
fn ln_expm1_over_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x < 30.0 {
        (x.exp_m1() / x).ln()
    } else {
        x + (-(-x).exp()).ln_1p() - x.ln()
    }
}

/// White-noise weight `κ` of the maximum-likelihood state for a Bell source.
///
/// With `a = η_A n̄/2`, `b = η_B n̄/2`, `c = η_A η_B n̄/2`,
/// `κ = 2(e^a−1)(e^b−1) / (1 − 2e^a − 2e^b + e^c + 2e^{a+b})`. The
/// denominator simplifies to `expm1(c) + 2 expm1(a) expm1(b)`; dividing by
/// `expm1(a) expm1(b)` and writing `expm1(x) = x ψ(x)` gives
/// `κ = n̄ψ(a)ψ(b) / (n̄ψ(a)ψ(b) + ψ(c))`, free of cancellation for small
/// `η n̄` and evaluated in log space for large arguments.
pub fn kappa_exact(params: &SourceParams) -> Result<f64> {
    let SourceParams { n_bar, eta_a, eta_b } = SourceParams::new(params.n_bar, params.eta_a, params.eta_b)?;
    if eta_a == 0.0 && eta_b == 0.0 {
        return Err(invalid(
            "kappa is undefined for eta_A = eta_B = 0; use kappa_approx for the zero-transmittance limit",
        ));
    }
    if n_bar == 0.0 {
        return Ok(0.0);
    }
    let ln_num = n_bar.ln() + ln_expm1_over_x(eta_a * n_bar / 2.0) + ln_expm1_over_x(eta_b * n_bar / 2.0);
    let ln_den = ln_expm1_over_x(eta_a * eta_b * n_bar / 2.0);
    // κ = 1 / (1 + ψ(c) / (n̄ψ(a)ψ(b)))
    Ok(1.0 / (1.0 + (ln_den - ln_num).exp()))
}

/// Low-gain approximation `κ ≈ n̄/(1 + n̄)`; exact in the zero-transmittance
/// limit.
pub fn kappa_approx(n_bar: f64) -> Result<f64> {
    if !(n_bar >= 0.0) {
        return Err(invalid(format!("mean pair number must be >= 0, got {n_bar}")));
    }
    if n_bar.is_infinite() {
        return Ok(1.0);
    }
    Ok(n_bar / (1.0 + n_bar))
}

/// Pairs detected per window: `1 − e^{−η_A n̄} − e^{−η_B n̄} + e^{−(η_A+η_B−η_Aη_B) n̄}`.
pub fn coincidence_rate_exact(params: &SourceParams) -> f64 {
    let SourceParams { n_bar, eta_a, eta_b } = *params;
    let x = eta_a * n_bar;
    let y = eta_b * n_bar;
    let z = (eta_a + eta_b - eta_a * eta_b) * n_bar;
    (-(-x).exp_m1() + (-y).exp() * (y - z).exp_m1()).max(0.0)
}

/// `werner_mix(ρ_B, κ_exact(params))`.
pub fn effective_state(params: &SourceParams, rho_b: &DensityMatrix) -> Result<DensityMatrix> {
    werner_mix(rho_b, kappa_exact(params)?)
}

/// One point of the model curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub n_bar: f64,
    pub kappa: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub r_dw: f64,
    pub r_c: f64,
    #[serde(rename = "R_key")]
    pub r_key: f64,
}

impl ModelPoint {
    pub const CSV_HEADER: &'static str = "n_bar,kappa,S,Q,r_dw,r_c,R_key";
}

/// Key-rate model at one gain for a Bell-state source.
pub fn model_point(n_bar: f64, eta_a: f64, eta_b: f64) -> Result<ModelPoint> {
    let params = SourceParams::new(n_bar, eta_a, eta_b)?;
    let kappa = kappa_exact(&params)?;
    let (s, q) = s_q_from_kappa(kappa)?;
    let r_dw = devetak_winter(s, q)?;
    let r_c = coincidence_rate_exact(&params);
    Ok(ModelPoint {
        n_bar,
        kappa,
        s,
        q,
        r_dw,
        r_c,
        r_key: key_rate(r_dw, r_c)?,
    })
}

/// Unclamped Devetak-Winter rate of the Bell-source model at one gain.
pub fn model_r_dw_raw(n_bar: f64, eta_a: f64, eta_b: f64) -> Result<f64> {
    let kappa = kappa_exact(&SourceParams::new(n_bar, eta_a, eta_b)?)?;
    let (s, q) = s_q_from_kappa(kappa)?;
    devetak_winter_raw(s, q)
}

/// Evaluates [`model_point`] on every grid value, in grid order.
pub fn model_curve(eta_a: f64, eta_b: f64, n_bar_grid: &[f64]) -> Result<Vec<ModelPoint>> {
    n_bar_grid.par_iter().map(|&n| model_point(n, eta_a, eta_b)).collect()
}

/// Model curve for an arbitrary single-pair state `ρ₀`.
///
/// The Bell-state closed form for `κ` does not apply to a general `ρ₀`, so
/// the effective state is taken as the white-noise mixture of `ρ₀` with the
/// exact `κ`. For a Bell `ρ₀` this is identical to [`model_point`].
pub fn model_curve_for_state(
    rho0: &DensityMatrix,
    eta_a: f64,
    eta_b: f64,
    n_bar_grid: &[f64],
) -> Result<Vec<ModelPoint>> {
    n_bar_grid
        .par_iter()
        .map(|&n_bar| {
            let params = SourceParams::new(n_bar, eta_a, eta_b)?;
            let kappa = kappa_exact(&params)?;
            let rho = werner_mix(rho0, kappa)?;
            let s = crate::metrics::chsh_max(&rho);
            let q = crate::metrics::qber_min(&rho);
            let r_dw = devetak_winter(s, q)?;
            let r_c = coincidence_rate_exact(&params);
            Ok(ModelPoint {
                n_bar,
                kappa,
                s,
                q,
                r_dw,
                r_c,
                r_key: key_rate(r_dw, r_c)?,
            })
        })
        .collect()
}

/// Writes model points as CSV with the [`ModelPoint::CSV_HEADER`] columns.
pub fn write_model_csv<W: std::io::Write>(out: W, points: &[ModelPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(|e| crate::error::Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| crate::error::Error::Parse(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{chsh_max, TSIRELSON};
    use crate::state::{bell_state, BellState};
    use approx::assert_abs_diff_eq;

    fn phi() -> DensityMatrix {
        bell_state(BellState::PhiPlus)
    }

    fn assert_cp(cp: ClickProbabilities, expected: [f64; 4]) {
        let got = [cp.p11, cp.p10, cp.p01, cp.p00];
        for (g, e) in got.iter().zip(expected) {
            assert_abs_diff_eq!(*g, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn click_probability_examples() {
        let p = SourceParams::new(0.1, 1.0, 1.0).unwrap();
        assert_cp(
            click_probabilities(&phi(), &BlochVector::H, &BlochVector::H, &p),
            [0.5, 0.0, 0.0, 0.5],
        );
        let p = SourceParams::new(0.1, 0.0, 0.0).unwrap();
        assert_cp(
            click_probabilities(&phi(), &BlochVector::D, &BlochVector::R, &p),
            [0.0, 0.0, 0.0, 1.0],
        );
        // p10 = ηAηB <HH|ρ|HH> + ηA(1-ηB) <H|ρ_A|H> = 0.25 + 0.25
        let p = SourceParams::new(0.1, 1.0, 0.5).unwrap();
        assert_cp(
            click_probabilities(&phi(), &BlochVector::H, &BlochVector::V, &p),
            [0.0, 0.5, 0.25, 0.25],
        );
    }

    #[test]
    fn coincidence_probability_examples() {
        let cp = click_probabilities(
            &phi(),
            &BlochVector::H,
            &BlochVector::H,
            &SourceParams::new(0.1, 1.0, 1.0).unwrap(),
        );
        assert_eq!(coincidence_probability(&cp, 0.0), 0.0);
        assert_abs_diff_eq!(
            coincidence_probability(&cp, 0.1),
            1.0 - (-0.05f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            coincidence_probability(&cp, 0.1),
            0.048_770_575_499_285_99,
            epsilon = 1e-15
        );
        let small = 1e-6;
        let c = coincidence_probability(&cp, small);
        assert!(((c - small * cp.p11) / c).abs() < 1e-4);
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa_exact(&SourceParams::new(0.0, 1.0, 1.0).unwrap()).unwrap(), 0.0);
        assert!(kappa_exact(&SourceParams::new(1e-12, 1.0, 1.0).unwrap()).unwrap() < 1e-11);
        assert_abs_diff_eq!(
            kappa_exact(&SourceParams::new(0.0737, 1.0, 1.0).unwrap()).unwrap(),
            0.06983,
            epsilon = 1e-4
        );
        assert_abs_diff_eq!(
            kappa_exact(&SourceParams::new(0.1, 1e-6, 1e-6).unwrap()).unwrap(),
            0.1 / 1.1,
            epsilon = 1e-4
        );
        assert!(kappa_exact(&SourceParams::new(0.1, 0.0, 0.0).unwrap()).is_err());
        assert_eq!(kappa_approx(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(kappa_approx(0.166839).unwrap(), 0.142_983_7, epsilon = 1e-7);
        assert_abs_diff_eq!(
            kappa_exact(&SourceParams::new(0.05, 0.01, 0.01).unwrap()).unwrap(),
            kappa_approx(0.05).unwrap(),
            epsilon = 1e-4
        );
    }

    #[test]
    fn kappa_matches_printed_formula_where_it_is_well_conditioned() {
        let printed = |n: f64, ea: f64, eb: f64| {
            let a = (ea * n / 2.0).exp();
            let b = (eb * n / 2.0).exp();
            2.0 * (a - 1.0) * (b - 1.0)
                / (1.0 - 2.0 * a - 2.0 * b + (ea * eb * n / 2.0).exp() + 2.0 * ((ea + eb) * n / 2.0).exp())
        };
        for &(n, ea, eb) in &[(0.0737, 1.0, 1.0), (0.3, 0.5, 0.2), (2.0, 0.9, 0.7), (0.01, 1.0, 0.3)] {
            let k = kappa_exact(&SourceParams::new(n, ea, eb).unwrap()).unwrap();
            assert_abs_diff_eq!(k, printed(n, ea, eb), epsilon = 1e-9);
        }
    }

    #[test]
    fn kappa_large_gain_saturates() {
        let k = kappa_exact(&SourceParams::new(50.0, 1.0, 1.0).unwrap()).unwrap();
        assert!((1.0 - k) < 1e-6);
        let k = kappa_exact(&SourceParams::new(5000.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(k.is_finite() && k <= 1.0);
        let rho = effective_state(&SourceParams::new(50.0, 1.0, 1.0).unwrap(), &phi()).unwrap();
        let d = rho.matrix() - DensityMatrix::maximally_mixed().matrix();
        assert!(d.iter().all(|z| z.norm() < 1e-6));
    }

    #[test]
    fn coincidence_rate_values() {
        assert_eq!(coincidence_rate_exact(&SourceParams::new(0.0, 0.3, 0.4).unwrap()), 0.0);
        assert_abs_diff_eq!(
            coincidence_rate_exact(&SourceParams::new(0.0737, 1.0, 1.0).unwrap()),
            1.0 - (-0.0737f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            coincidence_rate_exact(&SourceParams::new(0.0737, 1.0, 1.0).unwrap()),
            0.071050,
            epsilon = 1e-6
        );
        // first order in n̄, and the η → 0 limit η²n̄(1 + n̄)
        for &(n, eta) in &[(1e-3, 1.0), (1e-3, 0.2)] {
            let rc = coincidence_rate_exact(&SourceParams::new(n, eta, eta).unwrap());
            assert!(((rc - n * eta * eta) / rc).abs() < 0.01, "n={n} eta={eta}");
        }
        for &(n, eta) in &[(0.05, 1e-3), (1.0, 1e-3)] {
            let rc = coincidence_rate_exact(&SourceParams::new(n, eta, eta).unwrap());
            let limit = eta * eta * n * (1.0 + n);
            assert!(((rc - limit) / rc).abs() < 0.01, "n={n} eta={eta}");
        }
    }

    #[test]
    fn effective_state_consistency() {
        assert_eq!(
            effective_state(&SourceParams::new(0.0, 1.0, 1.0).unwrap(), &phi()).unwrap(),
            phi()
        );
        for &(n, ea, eb) in &[(0.0737, 1.0, 1.0), (0.2, 0.3, 0.9), (1.0, 0.1, 0.1)] {
            let p = SourceParams::new(n, ea, eb).unwrap();
            let rho = effective_state(&p, &phi()).unwrap();
            let kappa = kappa_exact(&p).unwrap();
            assert_abs_diff_eq!(chsh_max(&rho), TSIRELSON * (1.0 - kappa), epsilon = 1e-9);
        }
    }

    #[test]
    fn model_curve_points() {
        let pts = model_curve(1.0, 1.0, &[0.0, 0.0737, 0.2]).unwrap();
        assert_eq!(pts[0].r_key, 0.0);
        assert_eq!(pts[0].n_bar, 0.0);
        assert!(pts[1].r_key > 0.028 && pts[1].r_key < 0.030);
        assert_eq!(pts[2].r_key, 0.0);
        let mut buf = Vec::new();
        write_model_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), ModelPoint::CSV_HEADER);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn bell_state_curve_matches_general_curve() {
        let grid = [0.001, 0.05, 0.12];
        let a = model_curve(0.4, 0.7, &grid).unwrap();
        let b = model_curve_for_state(&phi(), 0.4, 0.7, &grid).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x.r_key, y.r_key, epsilon = 1e-12);
            assert_abs_diff_eq!(x.s, y.s, epsilon = 1e-10);
        }
    }
}
