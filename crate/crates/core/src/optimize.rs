//! Optimal and critical source gain, and the coincidence rate a
//! deterministic (quantum-dot) source needs to beat the SPDC bound.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metrics::{chsh_max, devetak_winter, devetak_winter_raw, key_rate, qber_min, s_q_from_kappa};
use crate::numeric::{bisect, golden_section_max};
use crate::spdc::{kappa_approx, model_point, model_r_dw_raw};
use crate::state::{bell_state, werner_mix, BellState, DensityMatrix, Matrix4c};

/// Upper end of the gain search: the zero-transmittance critical gain,
/// above which no transmittance yields a key.
pub const GAIN_SEARCH_MAX: f64 = 0.166_839;

/// Rounded SPDC key-rate bound used for the threshold comparison.
pub const R_KEY_MAX: f64 = 0.029;

const GAIN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainOptimum {
    pub n_bar_opt: f64,
    /// Bits per detection window.
    pub r_key_opt: f64,
    pub eta_a: f64,
    pub eta_b: f64,
}

fn check_eta(eta: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero {
        (0.0..=1.0).contains(&eta)
    } else {
        eta > 0.0 && eta <= 1.0
    };
    if ok {
        Ok(())
    } else {
        Err(invalid(format!(
            "transmittance must be in {}, got {eta}",
            if allow_zero { "[0, 1]" } else { "(0, 1]" }
        )))
    }
}

/// Key rate of the Bell-source model at one gain.
pub fn model_key_rate(n_bar: f64, eta_a: f64, eta_b: f64) -> Result<f64> {
    Ok(model_point(n_bar, eta_a, eta_b)?.r_key)
}

/// Gain maximizing the model key rate, by golden-section search on
/// `(0, 0.166839]`.
pub fn optimize_gain(eta_a: f64, eta_b: f64) -> Result<GainOptimum> {
    check_eta(eta_a, false)?;
    check_eta(eta_b, false)?;
    let objective = |n: f64| model_key_rate(n, eta_a, eta_b).unwrap_or(f64::NEG_INFINITY);
    let (n_bar_opt, r_key_opt) = golden_section_max(objective, 0.0, GAIN_SEARCH_MAX, GAIN_TOL);
    Ok(GainOptimum {
        n_bar_opt,
        r_key_opt,
        eta_a,
        eta_b,
    })
}

/// Unclamped Devetak-Winter rate at gain `n̄`; both transmittances zero
/// selects the `κ = n̄/(1 + n̄)` limit.
fn r_dw_raw(n_bar: f64, eta_a: f64, eta_b: f64) -> Result<f64> {
    if eta_a == 0.0 && eta_b == 0.0 {
        let (s, q) = s_q_from_kappa(kappa_approx(n_bar)?)?;
        devetak_winter_raw(s, q)
    } else {
        model_r_dw_raw(n_bar, eta_a, eta_b)
    }
}

/// Largest gain with a positive Devetak-Winter rate, by bisection on the
/// sign change of the unclamped rate.
pub fn critical_gain(eta_a: f64, eta_b: f64) -> Result<f64> {
    check_eta(eta_a, true)?;
    check_eta(eta_b, true)?;
    // r_DW(0) = 1 and r_DW(1) < 0 for every transmittance
    bisect(|n| r_dw_raw(n, eta_a, eta_b).unwrap_or(f64::NAN), 0.0, 1.0, GAIN_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// Bell coherences scaled by the concurrence.
    Dephasing,
    /// White noise with `κ = 2(1 − C)/3`.
    White,
}

impl std::fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseModel::Dephasing => "dephasing",
            NoiseModel::White => "white",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QdThreshold {
    pub concurrence: f64,
    pub noise_model: NoiseModel,
    pub r_dw: f64,
    /// `R_KEY_MAX / r_DW`.
    pub r_c_threshold: f64,
}

/// `Φ⁺` with concurrence `c` under the given noise model.
pub fn noisy_bell_state(c: f64, model: NoiseModel) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&c) {
        return Err(invalid(format!("concurrence must be in [0, 1], got {c}")));
    }
    let phi = bell_state(BellState::PhiPlus);
    match model {
        NoiseModel::Dephasing => {
            let m = Matrix4c::from_fn(|i, j| {
                let z = phi.matrix()[(i, j)];
                if i == j {
                    z
                } else {
                    z * c
                }
            });
            DensityMatrix::new(m)
        }
        NoiseModel::White => werner_mix(&phi, 2.0 * (1.0 - c) / 3.0),
    }
}

/// Coincidence rate per excitation at which a source of concurrence `c`
/// matches the SPDC key-rate bound [`R_KEY_MAX`].
pub fn qd_threshold(c: f64, model: NoiseModel) -> Result<QdThreshold> {
    if c == 0.0 {
        return Err(Error::NoSecurity("a separable source gives no secure key".into()));
    }
    let rho = noisy_bell_state(c, model)?;
    let r_dw = devetak_winter(chsh_max(&rho), qber_min(&rho))?;
    if r_dw <= 0.0 {
        return Err(Error::NoSecurity(format!(
            "concurrence {c} ({model} noise) gives no secure key"
        )));
    }
    Ok(QdThreshold {
        concurrence: c,
        noise_model: model,
        r_dw,
        r_c_threshold: R_KEY_MAX / r_dw,
    })
}

/// `(r_C, r_DW · r_C)` for each grid point.
pub fn qd_key_line(r_dw: f64, r_c_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(0.0..=1.0).contains(&r_dw) {
        return Err(invalid(format!("r_DW must be in [0, 1], got {r_dw}")));
    }
    r_c_grid.iter().map(|&r_c| Ok((r_c, key_rate(r_dw, r_c)?))).collect()
}
