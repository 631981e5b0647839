//! Two-qubit tomography from 36 product projections.
//!
//! The settings are the 6 × 6 ordered pairs of the polarization states
//! H, V, D, A, R, L. They form 9 groups (one per pair of Pauli bases), each
//! group holding the 4 complementary projections of one two-qubit basis.
//! The canonical order is group-major: bases run `HV, DA, RL` for Alice
//! (outer) and Bob (inner), and inside a group the outcomes run
//! `(+,+), (+,−), (−,+), (−,−)`. Index `k` therefore decodes as
//! `group = k / 4`, `alice basis = group / 3`, `bob basis = group % 3`.

mod dataset;
mod mle;
mod montecarlo;

pub use dataset::{coincidence_rate_from_counts, Measurement, TomographyDataset};
pub use mle::{fit_kappa, mle_reconstruct, MleOptions, ReconstructionResult};
pub use montecarlo::{monte_carlo_uncertainty, Estimate, UncertaintyReport};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spdc::{click_probabilities, coincidence_probability, SourceParams};
use crate::state::{BlochVector, DensityMatrix};

/// Number of projection settings.
pub const SETTINGS: usize = 36;
/// Number of complementary groups.
pub const GROUPS: usize = 9;

/// One of the six tomographic polarization states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::R,
        Polarization::L,
    ];

    pub fn bloch(&self) -> BlochVector {
        match self {
            Polarization::H => BlochVector::H,
            Polarization::V => BlochVector::V,
            Polarization::D => BlochVector::D,
            Polarization::A => BlochVector::A,
            Polarization::R => BlochVector::R,
            Polarization::L => BlochVector::L,
        }
    }

    /// Basis index (0 = HV, 1 = DA, 2 = RL) and outcome (0 = `+`, 1 = `−`).
    fn basis_outcome(&self) -> (usize, usize) {
        let i = *self as usize;
        (i / 2, i % 2)
    }

    fn from_basis_outcome(basis: usize, outcome: usize) -> Self {
        Self::ALL[2 * basis + outcome]
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(Polarization::H),
            "V" => Ok(Polarization::V),
            "D" => Ok(Polarization::D),
            "A" => Ok(Polarization::A),
            "R" => Ok(Polarization::R),
            "L" => Ok(Polarization::L),
            _ => Err(invalid(format!(
                "unknown polarization {s:?}, expected one of H V D A R L"
            ))),
        }
    }
}

/// The 36 ordered projection pairs in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TomographySettings {
    pairs: Vec<(Polarization, Polarization)>,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self::standard()
    }
}

impl TomographySettings {
    pub fn standard() -> Self {
        let pairs = (0..SETTINGS).map(Self::pair_at).collect();
        TomographySettings { pairs }
    }

    fn pair_at(k: usize) -> (Polarization, Polarization) {
        let group = k / 4;
        let outcome = k % 4;
        (
            Polarization::from_basis_outcome(group / 3, outcome / 2),
            Polarization::from_basis_outcome(group % 3, outcome % 2),
        )
    }

    /// Canonical index of an ordered pair.
    pub fn index_of(a: Polarization, b: Polarization) -> usize {
        let (ba, oa) = a.basis_outcome();
        let (bb, ob) = b.basis_outcome();
        4 * (3 * ba + bb) + 2 * oa + ob
    }

    pub fn pairs(&self) -> &[(Polarization, Polarization)] {
        &self.pairs
    }

    pub fn bloch_pairs(&self) -> impl Iterator<Item = (BlochVector, BlochVector)> + '_ {
        self.pairs.iter().map(|(a, b)| (a.bloch(), b.bloch()))
    }
}

/// Model coincidence probabilities `c_ij` of the multi-pair source for every
/// setting.
pub fn synthesize_frequencies(
    rho0: &DensityMatrix,
    params: &SourceParams,
    settings: &TomographySettings,
) -> [f64; SETTINGS] {
    let mut out = [0.0; SETTINGS];
    for (slot, (a, b)) in out.iter_mut().zip(settings.bloch_pairs()) {
        *slot = coincidence_probability(&click_probabilities(rho0, &a, &b, params), params.n_bar);
    }
    out
}

/// Born-rule probabilities `<ψ_i ψ_j|ρ|ψ_i ψ_j>`.
pub fn born_frequencies(rho: &DensityMatrix, settings: &TomographySettings) -> [f64; SETTINGS] {
    let mut out = [0.0; SETTINGS];
    for (slot, (a, b)) in out.iter_mut().zip(settings.bloch_pairs()) {
        *slot = rho.projection_probability(&a, &b).max(0.0);
    }
    out
}

/// Draws a dataset whose counts are Poisson with mean `N_win · c_ij`,
/// `N_win = duration / τ`.
pub fn simulate_counts<R: Rng + ?Sized>(
    rho0: &DensityMatrix,
    params: &SourceParams,
    tau_s: f64,
    duration_s: f64,
    rng: &mut R,
) -> Result<TomographyDataset> {
    let settings = TomographySettings::standard();
    let n_windows = duration_s / tau_s;
    let freqs = synthesize_frequencies(rho0, params, &settings);
    let mut counts = [0u64; SETTINGS];
    for (c, f) in counts.iter_mut().zip(freqs) {
        let mean = n_windows * f;
        *c = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| invalid(format!("Poisson mean {mean}: {e}")))?
                .sample(rng) as u64
        } else {
            0
        };
    }
    TomographyDataset::new(counts, tau_s, duration_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bell_state, BellState};
    use std::collections::HashSet;

    #[test]
    fn settings_cover_every_pair_once() {
        let s = TomographySettings::standard();
        assert_eq!(s.pairs().len(), 36);
        let set: HashSet<_> = s.pairs().iter().copied().collect();
        assert_eq!(set.len(), 36);
        for (k, &(a, b)) in s.pairs().iter().enumerate() {
            assert_eq!(TomographySettings::index_of(a, b), k);
        }
        assert_eq!(s.pairs()[0], (Polarization::H, Polarization::H));
        assert_eq!(s.pairs()[3], (Polarization::V, Polarization::V));
        assert_eq!(s.pairs()[4], (Polarization::H, Polarization::D));
        assert_eq!(s.pairs()[35], (Polarization::L, Polarization::L));
    }

    #[test]
    fn groups_are_complete_bases() {
        let s = TomographySettings::standard();
        for group in s.pairs().chunks(4) {
            let mut sum = nalgebra::Matrix4::<num_complex::Complex64>::zeros();
            for (a, b) in group {
                sum += crate::state::kron(&a.bloch().projector(), &b.bloch().projector());
            }
            let d = sum - nalgebra::Matrix4::identity();
            assert!(d.iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn polarization_parsing() {
        for p in Polarization::ALL {
            assert_eq!(p.to_string().parse::<Polarization>().unwrap(), p);
        }
        assert!("X".parse::<Polarization>().is_err());
    }

    #[test]
    fn synthesized_frequency_symmetries() {
        let s = TomographySettings::standard();
        let hh = TomographySettings::index_of(Polarization::H, Polarization::H);
        let vv = TomographySettings::index_of(Polarization::V, Polarization::V);
        for &(n, ea, eb) in &[(0.01, 1.0, 1.0), (0.3, 0.2, 0.7), (2.0, 0.5, 0.5)] {
            let p = SourceParams::new(n, ea, eb).unwrap();
            let f = synthesize_frequencies(&bell_state(BellState::PhiPlus), &p, &s);
            assert!((f[hh] - f[vv]).abs() < 1e-15);
            assert!(f.iter().all(|&c| (0.0..=1.0).contains(&c)));
            let iso = synthesize_frequencies(&DensityMatrix::maximally_mixed(), &p, &s);
            assert!(iso.iter().all(|&c| (c - iso[0]).abs() < 1e-15));
        }
    }

    #[test]
    fn low_gain_frequencies_follow_born_rule() {
        let s = TomographySettings::standard();
        let (n, ea, eb) = (1e-6, 0.8, 0.6);
        let phi = bell_state(BellState::PhiPlus);
        let f = synthesize_frequencies(&phi, &SourceParams::new(n, ea, eb).unwrap(), &s);
        let born = born_frequencies(&phi, &s);
        for (c, b) in f.iter().zip(born) {
            let first_order = n * ea * eb * b;
            if b > 1e-12 {
                assert!(((c - first_order) / first_order).abs() < 1e-5);
            } else {
                assert!(*c < 1e-11);
            }
        }
    }
}
