//! Two-qubit state tomography from sixteen joint analyzer settings.

mod bootstrap;
mod measures;
mod mle;

pub use bootstrap::{bootstrap_uncertainty, bootstrap_uncertainty_with, BootstrapSigmas};
pub use measures::{chsh_max, concurrence, fidelity, linear_entropy, state_fidelity, tangle};
pub use mle::{mle_reconstruct, MleOptions, MleResult};

use std::collections::HashSet;

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::analysis::{joint_projector, MeasurementSetting, ProjectorTag};
use crate::density::{DensityMatrix, TwoQubitKet};
use crate::error::{Error, Result};

pub const SETTING_COUNT: usize = 16;

/// A control/target pair of named analyzer settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SettingPair {
    pub control: ProjectorTag,
    pub target: ProjectorTag,
}

impl SettingPair {
    pub fn new(control: ProjectorTag, target: ProjectorTag) -> Self {
        Self { control, target }
    }

    pub fn projector(&self) -> Matrix4<Complex64> {
        joint_projector(
            &MeasurementSetting::Tag(self.control),
            &MeasurementSetting::Tag(self.target),
        )
    }
}

impl std::fmt::Display for SettingPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.control, self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: SettingPair,
    pub counts: u64,
}

/// The sixteen settings: the logical-basis block `HH, HV, VH, VV` followed by
/// the remaining pairs from `{H, V, D, R}` in that tag order.
pub fn tomography_settings() -> Vec<SettingPair> {
    use ProjectorTag::*;
    let tags = [H, V, D, R];
    let mut out: Vec<SettingPair> = [(H, H), (H, V), (V, H), (V, V)]
        .into_iter()
        .map(|(c, t)| SettingPair::new(c, t))
        .collect();
    for c in tags {
        for t in tags {
            let pair = SettingPair::new(c, t);
            if !out.contains(&pair) {
                out.push(pair);
            }
        }
    }
    out
}

/// `Tr[rho Pi_k]` for every setting in order.
pub fn setting_probabilities(rho: &DensityMatrix, settings: &[SettingPair]) -> Vec<f64> {
    settings
        .iter()
        .map(|s| rho.expectation(&s.projector()).max(0.0))
        .collect()
}

/// Rounded expected counts `round(n * Tr[rho Pi_k])` with no sampling noise.
pub fn expected_counts(rho: &DensityMatrix, n_per_setting: u64) -> Vec<CountRecord> {
    let settings = tomography_settings();
    setting_probabilities(rho, &settings)
        .into_iter()
        .zip(settings)
        .map(|(p, setting)| CountRecord {
            setting,
            counts: (p * n_per_setting as f64).round() as u64,
        })
        .collect()
}

/// Poisson counts with mean `n_per_setting * Tr[rho Pi_k]`.
pub fn simulate_counts(rho: &DensityMatrix, n_per_setting: u64, seed: u64) -> Result<Vec<CountRecord>> {
    if n_per_setting == 0 {
        return Err(Error::InvalidArgument("n_per_setting must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let settings = tomography_settings();
    setting_probabilities(rho, &settings)
        .into_iter()
        .zip(settings)
        .map(|(p, setting)| {
            Ok(CountRecord {
                setting,
                counts: poisson_draw(p * n_per_setting as f64, &mut rng)?,
            })
        })
        .collect()
}

pub(crate) fn poisson_draw(mean: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(dist.sample(rng) as u64)
}

/// Check that records form a usable tomography set: sixteen distinct settings
/// whose projectors span the two-qubit operator space.
pub fn validate_records(records: &[CountRecord]) -> Result<()> {
    if records.len() != SETTING_COUNT {
        return Err(Error::Tomography(format!(
            "expected {SETTING_COUNT} settings, got {}",
            records.len()
        )));
    }
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.setting) {
            return Err(Error::Tomography(format!("duplicate setting {}", r.setting)));
        }
    }
    let design = design_matrix(records);
    if design.rank(1e-9) < SETTING_COUNT {
        return Err(Error::Tomography("settings are not informationally complete".into()));
    }
    if records.iter().all(|r| r.counts == 0) {
        return Err(Error::Tomography("all counts are zero".into()));
    }
    Ok(())
}

/// Hermitian operator basis `sigma_i (x) sigma_j / 2`, orthonormal under the
/// Hilbert-Schmidt inner product.
fn operator_basis() -> Vec<Matrix4<Complex64>> {
    let paulis = crate::tomography::measures::paulis_with_identity();
    let mut out = Vec::with_capacity(16);
    for a in &paulis {
        for b in &paulis {
            out.push(a.kronecker(b) * Complex64::new(0.5, 0.0));
        }
    }
    out
}

fn design_matrix(records: &[CountRecord]) -> SMatrix<f64, 16, 16> {
    let basis = operator_basis();
    let mut a = SMatrix::<f64, 16, 16>::zeros();
    for (k, r) in records.iter().enumerate().take(16) {
        let proj = r.setting.projector();
        for (j, b) in basis.iter().enumerate() {
            a[(k, j)] = (proj * b).trace().re;
        }
    }
    a
}

/// Invert the linear map from `rho` to the sixteen count rates. The result is
/// Hermitian with unit trace but need not be positive.
pub fn linear_reconstruct(records: &[CountRecord]) -> Result<Matrix4<Complex64>> {
    validate_records(records)?;
    let a = design_matrix(records);
    let counts = SVector::<f64, 16>::from_iterator(records.iter().map(|r| r.counts as f64));
    let coeffs = a
        .lu()
        .solve(&counts)
        .ok_or_else(|| Error::Tomography("singular design matrix".into()))?;
    let basis = operator_basis();
    let mut rho = Matrix4::<Complex64>::zeros();
    for (c, b) in coeffs.iter().zip(&basis) {
        rho += b * Complex64::new(*c, 0.0);
    }
    let tr = rho.trace().re;
    if tr <= 0.0 {
        return Err(Error::Tomography("reconstructed trace is not positive".into()));
    }
    let rho = rho / Complex64::new(tr, 0.0);
    Ok((rho + rho.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Full reconstruction with the quantities reported per state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomographyResult {
    #[serde(skip)]
    pub rho: DensityMatrix,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub fidelity_vs_target: Option<ValueWithSigma>,
    pub tangle: ValueWithSigma,
    pub linear_entropy: ValueWithSigma,
    pub chsh_max: ValueWithSigma,
    pub bootstrap_failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueWithSigma {
    pub value: f64,
    pub sigma: f64,
}

/// MLE reconstruction, measures, and bootstrap standard deviations.
pub fn analyze(
    records: &[CountRecord],
    target: Option<&TwoQubitKet>,
    n_resamples: usize,
    seed: u64,
) -> Result<TomographyResult> {
    analyze_with(records, target, n_resamples, seed, &MleOptions::default())
}

/// [`analyze`] with explicit optimizer settings. Fewer than two resamples skip
/// the bootstrap and report zero uncertainties.
pub fn analyze_with(
    records: &[CountRecord],
    target: Option<&TwoQubitKet>,
    n_resamples: usize,
    seed: u64,
    options: &MleOptions,
) -> Result<TomographyResult> {
    let fit = mle_reconstruct(records, options)?;
    let sig = if n_resamples >= 2 {
        bootstrap_uncertainty_with(records, n_resamples, seed, target, options)?
    } else {
        BootstrapSigmas::default()
    };
    let rho = fit.rho;
    Ok(TomographyResult {
        fidelity_vs_target: target.map(|t| ValueWithSigma {
            value: fidelity(&rho, t),
            sigma: sig.fidelity.unwrap_or(0.0),
        }),
        tangle: ValueWithSigma {
            value: tangle(&rho),
            sigma: sig.tangle,
        },
        linear_entropy: ValueWithSigma {
            value: linear_entropy(&rho),
            sigma: sig.linear_entropy,
        },
        chsh_max: ValueWithSigma {
            value: chsh_max(&rho),
            sigma: sig.chsh_max,
        },
        log_likelihood: fit.log_likelihood,
        converged: fit.converged,
        iterations: fit.iterations,
        bootstrap_failures: sig.non_converged,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::BellState;

    #[test]
    fn sixteen_complete_settings() {
        let s = tomography_settings();
        assert_eq!(s.len(), 16);
        use ProjectorTag::*;
        assert_eq!(
            &s[..4],
            &[
                SettingPair::new(H, H),
                SettingPair::new(H, V),
                SettingPair::new(V, H),
                SettingPair::new(V, V)
            ]
        );
        // flatten the projectors into real 32-vectors and check rank
        let mut m = nalgebra::DMatrix::<f64>::zeros(16, 32);
        for (k, pair) in s.iter().enumerate() {
            let p = pair.projector();
            for (j, z) in p.iter().enumerate() {
                m[(k, 2 * j)] = z.re;
                m[(k, 2 * j + 1)] = z.im;
            }
        }
        assert_eq!(m.rank(1e-10), 16);
    }

    #[test]
    fn counts_are_reproducible() {
        let rho = DensityMatrix::werner(0.7).unwrap();
        let a = simulate_counts(&rho, 1000, 42).unwrap();
        let b = simulate_counts(&rho, 1000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_counts(&rho, 1000, 43).unwrap();
        assert_ne!(a, c);
        assert!(simulate_counts(&rho, 0, 1).is_err());
    }

    #[test]
    fn impossible_setting_gets_no_counts() {
        let rho = DensityMatrix::pure(&nalgebra::Vector4::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ))
        .unwrap();
        let counts = simulate_counts(&rho, 10_000, 5).unwrap();
        assert_eq!(counts[3].setting.to_string(), "VV");
        assert_eq!(counts[3].counts, 0);
    }

    #[test]
    fn linear_inversion_is_exact() {
        let rho = DensityMatrix::pure(&BellState::PsiMinus.ket()).unwrap();
        let records = expected_counts(&rho, 1_000_000);
        let est = linear_reconstruct(&records).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expected = match (r, c) {
                    (1, 1) | (2, 2) => 0.5,
                    (1, 2) | (2, 1) => -0.5,
                    _ => 0.0,
                };
                assert!((est[(r, c)].re - expected).abs() < 1e-10);
                assert!(est[(r, c)].im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn record_validation() {
        let rho = DensityMatrix::maximally_mixed();
        let mut records = expected_counts(&rho, 100);
        records.pop();
        let err = validate_records(&records).unwrap_err();
        assert!(err.to_string().contains("expected 16 settings"));
        let mut records = expected_counts(&rho, 100);
        records[5] = records[6];
        let err = validate_records(&records).unwrap_err();
        assert!(err
            .to_string()
            .contains(&format!("duplicate setting {}", records[6].setting)));
    }
}
