//! JSON report of a tomography analysis.

use serde::Serialize;
use sha2::{Digest, Sha256};
use spdc_qkd::bases::{optimal_bases, verify_bases, waveplate_angles, Ordering};
use spdc_qkd::metrics::QkdMetrics;
use spdc_qkd::state::{concurrence, BlochVector, DensityMatrix};
use spdc_qkd::tomography::{MleOptions, ReconstructionResult, TomographyDataset, UncertaintyReport};
use spdc_qkd::Error;

#[derive(Debug, Serialize)]
pub struct DatasetIdentity {
    pub path: String,
    /// Of the file bytes as read.
    pub sha256: String,
    pub tau_s: f64,
    pub duration_s: f64,
    pub windows: f64,
    pub total_counts: u64,
}

impl DatasetIdentity {
    pub fn new(path: &str, bytes: &[u8], ds: &TomographyDataset) -> Self {
        let digest = Sha256::digest(bytes);
        DatasetIdentity {
            path: path.to_owned(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            tau_s: ds.tau_s,
            duration_s: ds.duration_s,
            windows: ds.windows(),
            total_counts: ds.counts().iter().sum(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReconstructionSummary {
    pub rho: DensityMatrix,
    /// Ascending.
    pub eigenvalues: [f64; 4],
    pub concurrence: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&ReconstructionResult> for ReconstructionSummary {
    fn from(r: &ReconstructionResult) -> Self {
        ReconstructionSummary {
            rho: r.rho.clone(),
            eigenvalues: r.rho.eigenvalues(),
            concurrence: concurrence(&r.rho),
            log_likelihood: r.log_likelihood,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Direction {
    pub bloch: [f64; 3],
    pub theta_q_deg: f64,
    pub theta_h_deg: f64,
}

impl From<BlochVector> for Direction {
    fn from(x: BlochVector) -> Self {
        let w = waveplate_angles(&x);
        Direction {
            bloch: x.0,
            theta_q_deg: w.theta_q.to_degrees(),
            theta_h_deg: w.theta_h.to_degrees(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BasisRecommendation {
    pub ordering: Ordering,
    pub a0: Direction,
    pub a1: Direction,
    pub a2: Direction,
    pub b1: Direction,
    pub b2: Direction,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

/// Both orderings, or none when the state has no correlations.
pub fn recommend_bases(rho: &DensityMatrix) -> Result<Vec<BasisRecommendation>, Error> {
    let mut out = Vec::new();
    for ordering in [Ordering::AliceFirst, Ordering::BobFirst] {
        let bs = match optimal_bases(rho, ordering) {
            Ok(bs) => bs,
            Err(Error::NoSignal(_)) => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let (s, q) = verify_bases(rho, &bs);
        out.push(BasisRecommendation {
            ordering,
            a0: bs.a0.into(),
            a1: bs.a1.into(),
            a2: bs.a2.into(),
            b1: bs.b1.into(),
            b2: bs.b2.into(),
            s,
            q,
        });
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct MleSettings {
    pub max_iterations: usize,
    pub element_tol: f64,
    pub likelihood_tol: f64,
}

impl From<&MleOptions> for MleSettings {
    fn from(o: &MleOptions) -> Self {
        MleSettings {
            max_iterations: o.max_iterations,
            element_tol: o.element_tol,
            likelihood_tol: o.likelihood_tol,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub mc_samples: Option<usize>,
    pub mle: MleSettings,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub dataset: DatasetIdentity,
    pub reconstruction: ReconstructionSummary,
    pub metrics: QkdMetrics,
    pub uncertainty: Option<UncertaintyReport>,
    pub bases: Vec<BasisRecommendation>,
    /// False when the reconstruction or any Monte-Carlo sample hit the
    /// iteration cap.
    pub complete: bool,
    pub provenance: Provenance,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
