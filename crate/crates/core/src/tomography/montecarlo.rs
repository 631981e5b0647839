use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{coincidence_rate_from_counts, mle_reconstruct, MleOptions, TomographyDataset, SETTINGS};
use crate::error::{invalid, Result};
use crate::metrics::QkdMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation (`n − 1` normalization).
    pub std: f64,
}

impl Estimate {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub samples: usize,
    pub seed: u64,
    #[serde(rename = "S")]
    pub s: Estimate,
    #[serde(rename = "Q")]
    pub q: Estimate,
    pub r_dw: Estimate,
    pub r_c: Estimate,
    #[serde(rename = "R_key")]
    pub r_key: Estimate,
    /// Samples whose reconstruction hit the iteration cap.
    pub non_converged: usize,
}

fn resample(counts: &[u64; SETTINGS], rng: &mut ChaCha20Rng) -> Result<[u64; SETTINGS]> {
    let mut out = [0u64; SETTINGS];
    for (o, &c) in out.iter_mut().zip(counts) {
        if c > 0 {
            let d = Poisson::new(c as f64).map_err(|e| invalid(format!("Poisson mean {c}: {e}")))?;
            *o = d.sample(rng) as u64;
        }
    }
    Ok(out)
}

fn sample_metrics(ds: &TomographyDataset, seed: u64, index: u64) -> Result<(QkdMetrics, bool)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let resampled = ds.with_counts(resample(ds.counts(), &mut rng)?);
    let rec = mle_reconstruct(&resampled.frequencies(), &resampled.settings(), &MleOptions::default())?;
    let r_c = coincidence_rate_from_counts(&resampled)?;
    Ok((QkdMetrics::from_state(&rec.rho, r_c)?, rec.converged))
}

/// Propagates Poisson counting noise to `S`, `Q`, `r_DW`, `r_C` and `R_key`.
///
/// Sample `i` draws from a ChaCha20 stream `i` keyed by `seed`, so the report
/// does not depend on how samples are scheduled across threads.
pub fn monte_carlo_uncertainty(ds: &TomographyDataset, samples: usize, seed: u64) -> Result<UncertaintyReport> {
    if samples < 2 {
        return Err(invalid(format!("need at least 2 Monte-Carlo samples, got {samples}")));
    }
    let results: Vec<(QkdMetrics, bool)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| sample_metrics(ds, seed, i))
        .collect::<Result<_>>()?;

    let column = |f: fn(&QkdMetrics) -> f64| -> Estimate {
        let xs: Vec<f64> = results.iter().map(|(m, _)| f(m)).collect();
        Estimate::from_samples(&xs)
    };
    Ok(UncertaintyReport {
        samples,
        seed,
        s: column(|m| m.s),
        q: column(|m| m.q),
        r_dw: column(|m| m.r_dw),
        r_c: column(|m| m.r_c),
        r_key: column(|m| m.r_key),
        non_converged: results.iter().filter(|(_, ok)| !ok).count(),
    })
}
