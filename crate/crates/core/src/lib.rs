//! Secure-key-rate analysis of photonic entanglement sources.
//!
//! The crate reconstructs two-qubit polarization states from 36-setting
//! tomography, evaluates the CHSH value, QBER and Devetak-Winter key rate,
//! models a continuous-wave SPDC source with multi-pair emission, and
//! derives the optimal measurement bases and waveplate settings.
//!
//! ```
//! use spdc_qkd::{bell_state, chsh_max, BellState};
//!
//! let s = chsh_max(&bell_state(BellState::PhiPlus));
//! assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is the NaN-rejecting form of the range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bases;
pub mod error;
pub mod metrics;
pub mod numeric;
pub mod optimize;
pub mod spdc;
pub mod state;
pub mod table;
pub mod tomography;

pub use bases::{optimal_bases, verify_bases, waveplate_angles, BasisSet, Ordering, WaveplateSetting};
pub use error::{Error, Result};
pub use metrics::{
    binary_entropy, chsh_max, devetak_winter, devetak_winter_raw, key_rate, qber_min, s_q_from_kappa, QkdMetrics,
    TSIRELSON,
};
pub use optimize::{
    critical_gain, optimize_gain, qd_key_line, qd_threshold, GainOptimum, NoiseModel, QdThreshold, R_KEY_MAX,
};
pub use spdc::{
    click_probabilities, coincidence_probability, coincidence_rate_exact, kappa_approx, kappa_exact, model_curve,
    model_curve_for_state, ModelPoint, SourceParams,
};
pub use state::{
    bell_state, concurrence, correlation_analysis, correlation_tensor, fidelity, partial_trace, werner_mix, BellState,
    BlochVector, DensityMatrix, Subsystem,
};
pub use tomography::{
    coincidence_rate_from_counts, fit_kappa, mle_reconstruct, monte_carlo_uncertainty, MleOptions, Polarization,
    TomographyDataset, TomographySettings,
};
