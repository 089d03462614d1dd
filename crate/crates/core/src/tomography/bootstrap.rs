//! Parametric bootstrap over Poisson-resampled counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{chsh_max, fidelity, linear_entropy, mle_reconstruct, poisson_draw, tangle, validate_records};
use super::{CountRecord, MleOptions};
use crate::density::TwoQubitKet;
use crate::error::{Error, Result};

/// Sample standard deviations of the reported measures.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BootstrapSigmas {
    pub fidelity: Option<f64>,
    pub tangle: f64,
    pub linear_entropy: f64,
    pub chsh_max: f64,
    /// Resamples whose reconstruction hit the iteration cap.
    pub non_converged: usize,
}

struct Sample {
    fidelity: Option<f64>,
    tangle: f64,
    linear_entropy: f64,
    chsh: f64,
    converged: bool,
}

/// Resample each count as Poisson around its observed value, reconstruct, and
/// return the unbiased standard deviation of each measure. Resample `i` draws
/// from its own ChaCha stream `i` under `seed`, so the result does not depend on
/// thread scheduling.
pub fn bootstrap_uncertainty(
    records: &[CountRecord],
    n_resamples: usize,
    seed: u64,
    target: Option<&TwoQubitKet>,
) -> Result<BootstrapSigmas> {
    bootstrap_uncertainty_with(records, n_resamples, seed, target, &MleOptions::default())
}

pub fn bootstrap_uncertainty_with(
    records: &[CountRecord],
    n_resamples: usize,
    seed: u64,
    target: Option<&TwoQubitKet>,
    options: &MleOptions,
) -> Result<BootstrapSigmas> {
    if n_resamples < 2 {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs at least 2 resamples, got {n_resamples}"
        )));
    }
    validate_records(records)?;
    let samples: Vec<Sample> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let resampled = records
                .iter()
                .map(|r| {
                    Ok(CountRecord {
                        setting: r.setting,
                        counts: poisson_draw(r.counts as f64, &mut rng)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let fit = mle_reconstruct(&resampled, options)?;
            Ok(Sample {
                fidelity: target.map(|t| fidelity(&fit.rho, t)),
                tangle: tangle(&fit.rho),
                linear_entropy: linear_entropy(&fit.rho),
                chsh: chsh_max(&fit.rho),
                converged: fit.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fid: Option<Vec<f64>> = samples.iter().map(|s| s.fidelity).collect();
    Ok(BootstrapSigmas {
        fidelity: fid.map(|v| sample_std(&v)),
        tangle: sample_std(&samples.iter().map(|s| s.tangle).collect::<Vec<_>>()),
        linear_entropy: sample_std(&samples.iter().map(|s| s.linear_entropy).collect::<Vec<_>>()),
        chsh_max: sample_std(&samples.iter().map(|s| s.chsh).collect::<Vec<_>>()),
        non_converged: samples.iter().filter(|s| !s.converged).count(),
    })
}

/// Standard deviation with the `n - 1` denominator.
pub(crate) fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sample_std() {
        assert!((sample_std(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sample_std(&[0.5, 0.5, 0.5]), 0.0);
    }
}
