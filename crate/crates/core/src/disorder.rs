//! Seeded Monte-Carlo disorder ensembles: averaged singular spectra and
//! zero-mode splitting statistics versus disorder strength.
//!
//! Randomness is counter-based: every draw is a pure hash of
//! (seed, realization, site), so ensembles parallelize with no sequencing
//! artifacts and are bit-reproducible across platforms and worker counts.

use rayon::prelude::*;

use crate::error::{Result, TwpaError};
use crate::model::{build_dynamical_matrix, Boundary, DisorderOffsets, ModelParams};
use crate::spectral::singular_values;

#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub base_params: ModelParams,
    pub strength: f64,
    pub n_realizations: u32,
    pub seed: u64,
    pub omega: f64,
}

impl EnsembleSpec {
    pub fn new(base_params: ModelParams, strength: f64, seed: u64, omega: f64) -> Self {
        EnsembleSpec {
            base_params,
            strength,
            n_realizations: 100,
            seed,
            omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base_params.validate()?;
        if self.strength < 0.0 || !self.strength.is_finite() {
            return Err(TwpaError::InvalidParameter(format!(
                "disorder strength must be >= 0, got {}",
                self.strength
            )));
        }
        if self.n_realizations < 1 {
            return Err(TwpaError::InvalidParameter(
                "n_realizations must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// splitmix64 finalizer: the avalanche core of the splitmix64 generator.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Uniform draw in [0, 1) from the counter (seed, realization, site).
pub fn counter_uniform(seed: u64, realization: u32, site: u32) -> f64 {
    let counter = ((realization as u64) << 32) | site as u64;
    let z = mix64(
        seed.wrapping_add(mix64(counter).wrapping_add(0x9e3779b97f4a7c15)),
    );
    // top 53 bits -> [0, 1)
    (z >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// N independent uniform offsets in [-w, +w] for one realization.
pub fn sample_offsets(spec: &EnsembleSpec, realization: u32) -> Result<DisorderOffsets> {
    spec.validate()?;
    if realization >= spec.n_realizations {
        return Err(TwpaError::InvalidParameter(format!(
            "realization {realization} >= n_realizations {}",
            spec.n_realizations
        )));
    }
    let n = spec.base_params.n_sites;
    let offsets = (0..n)
        .map(|site| {
            spec.strength * (2.0 * counter_uniform(spec.seed, realization, site as u32) - 1.0)
        })
        .collect();
    Ok(DisorderOffsets {
        offsets,
        seed: spec.seed,
        realization_index: realization,
        strength: spec.strength,
    })
}

#[derive(Debug, Clone)]
pub struct RealizationRecord {
    pub realization: u32,
    pub min_sv: f64,
    pub second_sv: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub spec: EnsembleSpec,
    /// Mean over successful realizations of the sorted singular values, per index.
    pub mean_values: Vec<f64>,
    /// Raw per-realization minima (successful realizations only, index order).
    pub records: Vec<RealizationRecord>,
    pub n_failed: u32,
}

/// Averaged sorted singular spectrum of (ω - H_nh) over the ensemble.
/// Failed realizations are excluded (never resampled) and counted.
pub fn ensemble_spectrum(spec: &EnsembleSpec) -> Result<EnsembleResult> {
    spec.validate()?;
    let per: Vec<Result<Vec<f64>>> = (0..spec.n_realizations)
        .into_par_iter()
        .map(|r| {
            let offsets = sample_offsets(spec, r)?;
            let h = build_dynamical_matrix(&spec.base_params, Boundary::Open, Some(&offsets))?;
            Ok(singular_values(&h, spec.omega)?.to_vec())
        })
        .collect();
    let dim = 2 * spec.base_params.n_sites;
    let mut sums = vec![0.0; dim];
    let mut records = Vec::new();
    let mut n_failed = 0u32;
    for (r, res) in per.into_iter().enumerate() {
        match res {
            Ok(vals) => {
                for (s, v) in sums.iter_mut().zip(&vals) {
                    *s += v;
                }
                records.push(RealizationRecord {
                    realization: r as u32,
                    min_sv: vals[0],
                    second_sv: vals[1],
                });
            }
            Err(_) => n_failed += 1,
        }
    }
    let n_ok = records.len();
    if n_ok == 0 {
        return Err(TwpaError::NonConvergence(
            "every disorder realization failed".into(),
        ));
    }
    let mean_values = sums.into_iter().map(|s| s / n_ok as f64).collect();
    Ok(EnsembleResult {
        spec: spec.clone(),
        mean_values,
        records,
        n_failed,
    })
}

#[derive(Debug, Clone)]
pub struct SplittingCurve {
    pub strengths: Vec<f64>,
    pub lowest_mean: Vec<f64>,
    pub lowest_stderr: Vec<f64>,
    pub second_mean: Vec<f64>,
    pub second_stderr: Vec<f64>,
    pub n_ok: Vec<u32>,
}

/// Mean (and standard error) of the two smallest singular values versus
/// disorder strength.
pub fn splitting_curve(
    base_params: &ModelParams,
    omega: f64,
    strengths: &[f64],
    n_realizations: u32,
    seed: u64,
) -> Result<SplittingCurve> {
    if strengths.windows(2).any(|w| w[0] > w[1]) {
        return Err(TwpaError::InvalidParameter(
            "strengths must be sorted ascending".into(),
        ));
    }
    let mut curve = SplittingCurve {
        strengths: strengths.to_vec(),
        lowest_mean: Vec::new(),
        lowest_stderr: Vec::new(),
        second_mean: Vec::new(),
        second_stderr: Vec::new(),
        n_ok: Vec::new(),
    };
    for &w in strengths {
        let mut spec = EnsembleSpec::new(*base_params, w, seed, omega);
        spec.n_realizations = n_realizations;
        let res = ensemble_spectrum(&spec)?;
        let (m1, e1) = mean_stderr(res.records.iter().map(|r| r.min_sv));
        let (m2, e2) = mean_stderr(res.records.iter().map(|r| r.second_sv));
        curve.lowest_mean.push(m1);
        curve.lowest_stderr.push(e1);
        curve.second_mean.push(m2);
        curve.second_stderr.push(e2);
        curve.n_ok.push(res.records.len() as u32);
    }
    Ok(curve)
}

fn mean_stderr(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let vals: Vec<f64> = it.collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
