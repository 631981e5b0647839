use serde::{Deserialize, Serialize};

use super::{Polarization, TomographySettings, GROUPS, SETTINGS};
use crate::error::{invalid, Error, Result};

/// One projection setting with its coincidence count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    pub a: Polarization,
    pub b: Polarization,
    pub count: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetJson {
    tau_s: f64,
    duration_s: f64,
    measurements: Vec<Measurement>,
}

/// Coincidence counts of a full 36-setting tomography run.
///
/// Counts are stored in the canonical order of
/// [`TomographySettings::standard`].
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyDataset {
    counts: [u64; SETTINGS],
    /// Coincidence window length in seconds.
    pub tau_s: f64,
    /// Acquisition time per setting in seconds.
    pub duration_s: f64,
}

impl TomographyDataset {
    pub fn new(counts: [u64; SETTINGS], tau_s: f64, duration_s: f64) -> Result<Self> {
        if !(tau_s > 0.0) || !tau_s.is_finite() {
            return Err(invalid(format!("coincidence window must be positive, got {tau_s}")));
        }
        if !(duration_s > 0.0) || !duration_s.is_finite() {
            return Err(invalid(format!("duration must be positive, got {duration_s}")));
        }
        if duration_s < tau_s {
            return Err(invalid(format!(
                "duration {duration_s} s is shorter than one window of {tau_s} s"
            )));
        }
        Ok(TomographyDataset {
            counts,
            tau_s,
            duration_s,
        })
    }

    /// Builds a dataset from measurements in any order; every ordered pair
    /// must occur exactly once.
    pub fn from_measurements(measurements: &[Measurement], tau_s: f64, duration_s: f64) -> Result<Self> {
        if measurements.len() != SETTINGS {
            return Err(Error::Parse(format!(
                "expected {SETTINGS} measurements, found {}",
                measurements.len()
            )));
        }
        let mut counts = [None; SETTINGS];
        for (i, m) in measurements.iter().enumerate() {
            let k = TomographySettings::index_of(m.a, m.b);
            if counts[k].replace(m.count).is_some() {
                return Err(Error::Parse(format!(
                    "measurements[{i}]: duplicate projection pair ({}, {})",
                    m.a, m.b
                )));
            }
        }
        let counts = counts.map(|c| c.expect("36 distinct pairs cover every setting"));
        Self::new(counts, tau_s, duration_s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: DatasetJson = serde_json::from_str(s).map_err(|e| Error::Parse(format!("dataset: {e}")))?;
        Self::from_measurements(&raw.measurements, raw.tau_s, raw.duration_s)
    }

    /// Canonical JSON: measurements in canonical setting order.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&DatasetJson {
            tau_s: self.tau_s,
            duration_s: self.duration_s,
            measurements: self.measurements(),
        })
        .expect("dataset serialization cannot fail")
    }

    pub fn measurements(&self) -> Vec<Measurement> {
        TomographySettings::standard()
            .pairs()
            .iter()
            .zip(self.counts)
            .map(|(&(a, b), count)| Measurement { a, b, count })
            .collect()
    }

    pub fn counts(&self) -> &[u64; SETTINGS] {
        &self.counts
    }

    pub fn frequencies(&self) -> [f64; SETTINGS] {
        self.counts.map(|c| c as f64)
    }

    pub fn settings(&self) -> TomographySettings {
        TomographySettings::standard()
    }

    /// `N_win = T / τ`.
    pub fn windows(&self) -> f64 {
        self.duration_s / self.tau_s
    }

    pub fn with_counts(&self, counts: [u64; SETTINGS]) -> Self {
        TomographyDataset { counts, ..*self }
    }
}

/// Coincidences per window: the 9 complementary quadruple sums are averaged
/// to `N_C`, and `r_C = N_C / (T/τ)`.
pub fn coincidence_rate_from_counts(ds: &TomographyDataset) -> Result<f64> {
    if !(ds.tau_s > 0.0) || !(ds.duration_s > 0.0) {
        return Err(invalid("window length and duration must be positive"));
    }
    let total: f64 = (0..GROUPS)
        .map(|g| ds.counts[4 * g..4 * g + 4].iter().sum::<u64>() as f64)
        .sum();
    let n_c = total / GROUPS as f64;
    Ok(n_c / ds.windows())
}
