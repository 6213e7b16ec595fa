//! Projection-noise error bars by resampling and re-reconstruction.

use rayon::prelude::*;

use super::{mle_reconstruct, sample_dataset, MleConfig};
use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;
use crate::seed::{derive_seed, stream};

/// A named scalar evaluated on every reconstructed state.
pub type Analysis<'a> = (&'a str, &'a (dyn Fn(&DensityMatrix) -> f64 + Sync));

#[derive(Debug, Clone, PartialEq)]
pub struct QuantityStats {
    pub name: String,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub samples: Vec<f64>,
}

impl QuantityStats {
    fn from_samples(name: &str, samples: Vec<f64>) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            name: name.to_string(),
            mean,
            std: var.sqrt(),
            samples,
        }
    }
}

/// Samples `trials` synthetic datasets from `rho`, reconstructs each and
/// evaluates every analysis on the reconstruction. Trial `t` uses the seed
/// derived from `(seed, t)`.
pub fn monte_carlo_resample(
    rho: &DensityMatrix,
    shots: u64,
    trials: usize,
    seed: u64,
    analyses: &[Analysis<'_>],
    config: &MleConfig,
) -> Result<Vec<QuantityStats>> {
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least 2 trials".into()));
    }
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ds = sample_dataset(rho, shots, derive_seed(seed, stream::MONTE_CARLO, t as u64))?;
            let rec = mle_reconstruct(&ds, config)?;
            Ok(analyses.iter().map(|(_, f)| f(&rec.rho)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(analyses
        .iter()
        .enumerate()
        .map(|(i, (name, _))| {
            QuantityStats::from_samples(name, per_trial.iter().map(|v| v[i]).collect())
        })
        .collect())
}
