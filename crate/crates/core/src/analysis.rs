//! Polarization analyzers, coincidence probabilities and fringe visibilities.
//!
//! An analyzer is a HWP followed by a QWP in front of a PBS; the detector sits
//! on the transmitted (H) port. The projected state is `(QWP(q) HWP(h))^† |H>`.
//!
//! Named settings:
//!
//! | tag | HWP | QWP | projects onto |
//! |-----|-----|-----|---------------|
//! | H | 0 | 0 | `|0>` |
//! | V | 45 | 0 | `|1>` |
//! | D | 22.5 | 0 | `(|0> + |1>)/sqrt 2` |
//! | A | -22.5 | 0 | `(|0> - |1>)/sqrt 2` |
//! | R | 0 | 45 | `(|0> + i|1>)/sqrt 2` |
//! | L | 0 | -45 | `(|0> - i|1>)/sqrt 2` |

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::elements::{hwp_unitary, qwp_unitary};
use crate::error::{Error, Result};
use crate::gate::{Circuit, QubitAmplitudes};
use crate::noise::{run_with_mismatch, OverlapParam};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProjectorTag {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl ProjectorTag {
    pub const ALL: [ProjectorTag; 6] = [
        ProjectorTag::H,
        ProjectorTag::V,
        ProjectorTag::D,
        ProjectorTag::A,
        ProjectorTag::R,
        ProjectorTag::L,
    ];

    /// `(hwp_deg, qwp_deg)`
    pub fn angles(self) -> (f64, f64) {
        match self {
            ProjectorTag::H => (0.0, 0.0),
            ProjectorTag::V => (45.0, 0.0),
            ProjectorTag::D => (22.5, 0.0),
            ProjectorTag::A => (-22.5, 0.0),
            ProjectorTag::R => (0.0, 45.0),
            ProjectorTag::L => (0.0, -45.0),
        }
    }
}

impl fmt::Display for ProjectorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ProjectorTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown analyzer tag {s:?}")))
    }
}

/// Analyzer configuration for one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeasurementSetting {
    Tag(ProjectorTag),
    Waveplates { hwp_deg: f64, qwp_deg: f64 },
}

impl MeasurementSetting {
    pub fn angles(&self) -> (f64, f64) {
        match *self {
            MeasurementSetting::Tag(t) => t.angles(),
            MeasurementSetting::Waveplates { hwp_deg, qwp_deg } => (hwp_deg, qwp_deg),
        }
    }

    /// The analyzed state.
    pub fn state(&self) -> Vector2<Complex64> {
        let (h, q) = self.angles();
        let m = qwp_unitary(q) * hwp_unitary(h);
        m.adjoint() * Vector2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }
}

impl From<ProjectorTag> for MeasurementSetting {
    fn from(t: ProjectorTag) -> Self {
        MeasurementSetting::Tag(t)
    }
}

pub fn analyzer_projector(setting: &MeasurementSetting) -> Matrix2<Complex64> {
    let psi = setting.state();
    psi * psi.adjoint()
}

/// `Pi_C (x) Pi_T`.
pub fn joint_projector(control: &MeasurementSetting, target: &MeasurementSetting) -> Matrix4<Complex64> {
    analyzer_projector(control).kronecker(&analyzer_projector(target))
}

pub fn coincidence_probability(rho: &DensityMatrix, control: &MeasurementSetting, target: &MeasurementSetting) -> f64 {
    rho.expectation(&joint_projector(control, target)).clamp(0.0, 1.0)
}

/// `(max - min) / (max + min)`, zero when both vanish.
pub fn visibility(max: f64, min: f64) -> f64 {
    if max + min <= 0.0 {
        return 0.0;
    }
    (max - min) / (max + min)
}

/// A fixed-period fringe: `p(h) = offset + amplitude cos(4 (h - phase))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeData {
    pub angles_deg: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub offset: f64,
    pub amplitude: f64,
    /// Angle of the fitted maximum, in `[0, 90)`.
    pub phase_deg: f64,
    pub period_deg: f64,
    pub visibility: f64,
}

pub const FRINGE_PERIOD_DEG: f64 = 90.0;

/// Linear least-squares fit of `a + b cos(4h) + c sin(4h)`.
pub fn fit_fringe(angles_deg: &[f64], probabilities: &[f64]) -> Result<FringeData> {
    if angles_deg.is_empty() || angles_deg.len() != probabilities.len() {
        return Err(Error::InvalidArgument(format!(
            "fringe needs matching non-empty lists (got {} angles, {} values)",
            angles_deg.len(),
            probabilities.len()
        )));
    }
    let k = 360.0 / FRINGE_PERIOD_DEG;
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for (&h, &p) in angles_deg.iter().zip(probabilities) {
        let x = (k * h).to_radians();
        let row = Vector3::new(1.0, x.cos(), x.sin());
        ata += row * row.transpose();
        atb += row * p;
    }
    let (offset, b, c) = match ata.lu().solve(&atb) {
        Some(sol) if sol.iter().all(|v| v.is_finite()) => (sol[0], sol[1], sol[2]),
        // too few distinct angles to pin the sinusoid: treat as flat
        _ => (probabilities.iter().sum::<f64>() / probabilities.len() as f64, 0.0, 0.0),
    };
    let amplitude = b.hypot(c);
    let phase_deg = (c.atan2(b).to_degrees() / k).rem_euclid(FRINGE_PERIOD_DEG);
    let max = offset + amplitude;
    let min = (offset - amplitude).max(0.0);
    let vis = if amplitude <= 1e-15 * offset.abs().max(1.0) {
        0.0
    } else {
        visibility(max, min).clamp(0.0, 1.0)
    };
    Ok(FringeData {
        angles_deg: angles_deg.to_vec(),
        probabilities: probabilities.to_vec(),
        offset,
        amplitude,
        phase_deg,
        period_deg: FRINGE_PERIOD_DEG,
        visibility: vis,
    })
}

/// Conditional coincidence probabilities with the control analyzer fixed and the
/// target HWP scanned (target QWP at 0).
pub fn fringe_from_rho(
    rho: &DensityMatrix,
    control_setting: &MeasurementSetting,
    target_hwp_angles: &[f64],
) -> Result<FringeData> {
    let probs: Vec<f64> = target_hwp_angles
        .iter()
        .map(|&h| {
            coincidence_probability(
                rho,
                control_setting,
                &MeasurementSetting::Waveplates {
                    hwp_deg: h,
                    qwp_deg: 0.0,
                },
            )
        })
        .collect();
    fit_fringe(target_hwp_angles, &probs)
}

/// Run the gate on a product input and scan the target analyzer.
pub fn fringe_scan(
    circuit: &Circuit,
    control: &QubitAmplitudes,
    target: &QubitAmplitudes,
    control_setting: &MeasurementSetting,
    target_hwp_angles: &[f64],
    xi: OverlapParam,
) -> Result<FringeData> {
    let outcome = run_with_mismatch(control, target, circuit, xi)?;
    let rho = outcome
        .rho
        .ok_or_else(|| Error::InvalidState("no coincidences for this input".into()))?;
    fringe_from_rho(&rho, control_setting, target_hwp_angles)
}

/// Evenly spaced HWP angles covering `[0, 90]` degrees inclusive.
pub fn default_scan_angles(points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| FRINGE_PERIOD_DEG * i as f64 / (n - 1) as f64).collect()
}
