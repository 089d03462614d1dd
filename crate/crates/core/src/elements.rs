//! Beam splitters, wave plates, polarizing beam splitters and phase shifters.
//!
//! Waveplate angles are optic-axis angles in degrees. Two-mode elements act on
//! an ordered pair; for waveplates the pair is `(H, V)`.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{embed, ModeUnitary};

/// Axis angle of the unequal-mixing half-wave plate that realizes a reflectivity
/// of exactly 1/3: `cos^2(2 theta) = 1/3`, i.e. `theta = acos(-1/sqrt 3) / 2`.
pub fn theta_third_exact() -> f64 {
    0.5 * (-1.0 / 3f64.sqrt()).acos().to_degrees()
}

/// The rounded plate angle quoted for the bench setup.
pub const THETA_THIRD_NOMINAL: f64 = 62.5;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `[[sqrt R, sqrt(1-R)], [sqrt(1-R), -sqrt R]]`. The reflection back into the
/// second mode carries the sign flip.
pub fn bs_unitary(reflectivity: f64) -> Result<Matrix2<Complex64>> {
    if !(0.0..=1.0).contains(&reflectivity) || reflectivity.is_nan() {
        return Err(Error::Reflectivity(reflectivity));
    }
    let r = reflectivity.sqrt();
    let t = (1.0 - reflectivity).sqrt();
    Ok(Matrix2::new(re(r), re(t), re(t), re(-r)))
}

pub fn hwp_unitary(theta_deg: f64) -> Matrix2<Complex64> {
    let two = 2.0 * theta_deg.to_radians();
    let (s, c) = two.sin_cos();
    Matrix2::new(re(c), re(s), re(s), re(-c))
}

pub fn qwp_unitary(theta_deg: f64) -> Matrix2<Complex64> {
    let two = 2.0 * theta_deg.to_radians();
    let (s, c) = two.sin_cos();
    let k = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::i();
    Matrix2::new((re(1.0) + i * c) * k, i * s * k, i * s * k, (re(1.0) - i * c) * k)
}

/// Polarizing beam splitter across two rails. Modes are ordered
/// `(railA-H, railA-V, railB-H, railB-V)`: H is transmitted, V swaps rails.
pub fn pbs_unitary() -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    for (input, output) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
        m[(output, input)] = re(1.0);
    }
    m
}

/// One element of a circuit together with the modes it touches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OpticalElement {
    Bs {
        modes: (usize, usize),
        reflectivity: f64,
    },
    Hwp {
        modes: (usize, usize),
        theta_deg: f64,
    },
    Qwp {
        modes: (usize, usize),
        theta_deg: f64,
    },
    Pbs {
        /// `[railA-H, railA-V, railB-H, railB-V]`
        modes: [usize; 4],
    },
    Phase {
        mode: usize,
        phi_rad: f64,
    },
}

impl OpticalElement {
    pub fn bs(a: usize, b: usize, reflectivity: f64) -> Self {
        Self::Bs {
            modes: (a, b),
            reflectivity,
        }
    }

    pub fn hwp(h: usize, v: usize, theta_deg: f64) -> Self {
        Self::Hwp {
            modes: (h, v),
            theta_deg,
        }
    }

    pub fn qwp(h: usize, v: usize, theta_deg: f64) -> Self {
        Self::Qwp {
            modes: (h, v),
            theta_deg,
        }
    }

    pub fn pbs(a_h: usize, a_v: usize, b_h: usize, b_v: usize) -> Self {
        Self::Pbs {
            modes: [a_h, a_v, b_h, b_v],
        }
    }

    pub fn phase(mode: usize, phi_rad: f64) -> Self {
        Self::Phase { mode, phi_rad }
    }

    pub fn modes(&self) -> Vec<usize> {
        match self {
            Self::Bs { modes, .. } | Self::Hwp { modes, .. } | Self::Qwp { modes, .. } => {
                vec![modes.0, modes.1]
            }
            Self::Pbs { modes } => modes.to_vec(),
            Self::Phase { mode, .. } => vec![*mode],
        }
    }

    /// Check parameter ranges and that the referenced modes are distinct and
    /// below `mode_count`.
    pub fn validate(&self, mode_count: usize) -> Result<()> {
        match self {
            Self::Bs { reflectivity, .. } => {
                bs_unitary(*reflectivity)?;
            }
            Self::Hwp { theta_deg, .. } | Self::Qwp { theta_deg, .. } => {
                if !theta_deg.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "waveplate angle {theta_deg} is not finite"
                    )));
                }
            }
            Self::Phase { phi_rad, .. } => {
                if !phi_rad.is_finite() {
                    return Err(Error::InvalidArgument(format!("phase {phi_rad} is not finite")));
                }
            }
            Self::Pbs { .. } => {}
        }
        let modes = self.modes();
        for (k, &m) in modes.iter().enumerate() {
            if m >= mode_count {
                return Err(Error::ModeOutOfRange { mode: m, mode_count });
            }
            if modes[..k].contains(&m) {
                return Err(Error::DuplicateMode(m));
            }
        }
        Ok(())
    }

    /// The element's action on the full `mode_count`-mode space.
    pub fn mode_unitary(&self, mode_count: usize) -> Result<ModeUnitary> {
        self.validate(mode_count)?;
        match self {
            Self::Bs { modes, reflectivity } => embed(&bs_unitary(*reflectivity)?, *modes, mode_count),
            Self::Hwp { modes, theta_deg } => embed(&hwp_unitary(*theta_deg), *modes, mode_count),
            Self::Qwp { modes, theta_deg } => embed(&qwp_unitary(*theta_deg), *modes, mode_count),
            Self::Pbs { modes } => {
                let block = pbs_unitary();
                let mut m = DMatrix::identity(mode_count, mode_count);
                for (r, &row) in modes.iter().enumerate() {
                    for (c, &col) in modes.iter().enumerate() {
                        m[(row, col)] = block[(r, c)];
                    }
                }
                ModeUnitary::new(m)
            }
            Self::Phase { mode, phi_rad } => {
                let mut m = DMatrix::identity(mode_count, mode_count);
                m[(*mode, *mode)] = Complex64::from_polar(1.0, *phi_rad);
                ModeUnitary::new(m)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_unitary, FockState, KetState};
    use proptest::prelude::*;

    fn max_dev(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn is_unitary(u: &Matrix2<Complex64>, tol: f64) -> bool {
        max_dev(&(u * u.adjoint()), &Matrix2::identity()) < tol
    }

    #[test]
    fn bs_conventions() {
        let swap = bs_unitary(0.0).unwrap();
        assert_eq!(swap, Matrix2::new(re(0.0), re(1.0), re(1.0), re(0.0)));
        let h = bs_unitary(0.5).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(max_dev(&h, &Matrix2::new(re(s), re(s), re(s), re(-s))) < 1e-15);
        assert!(h[(1, 1)].re < 0.0);
        assert!(matches!(bs_unitary(1.5), Err(Error::Reflectivity(_))));
        assert!(matches!(bs_unitary(-0.1), Err(Error::Reflectivity(_))));
        assert!(bs_unitary(f64::NAN).is_err());
    }

    #[test]
    fn third_bs_coincidence_amplitude() {
        // Creation-operator expansion for R = 1/3: the two "stay" paths give
        // sqrt(R) * (-sqrt(R)) = -1/3, the two "cross" paths give 1 - R = 2/3.
        let u = embed(&bs_unitary(1.0 / 3.0).unwrap(), (0, 1), 2).unwrap();
        let one_one = FockState::new(vec![1, 1]);
        let amp = u.transition_amplitude(&one_one, &one_one);
        assert!((amp - re(1.0 / 3.0)).norm() < 1e-14);
    }

    #[test]
    fn hwp_conventions() {
        assert!(max_dev(&hwp_unitary(0.0), &Matrix2::new(re(1.0), re(0.0), re(0.0), re(-1.0))) < 1e-15);
        let h = hwp_unitary(22.5);
        for z in h.iter() {
            assert!((z.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
        assert!(h[(1, 1)].re < 0.0);

        let nominal = hwp_unitary(THETA_THIRD_NOMINAL)[(0, 0)].norm_sqr();
        assert!((nominal - 0.328_989_928_337_166).abs() < 1e-12);
        let exact = hwp_unitary(theta_third_exact())[(0, 0)].norm_sqr();
        assert!((exact - 1.0 / 3.0).abs() < 1e-14);
        assert!((theta_third_exact() - 62.632_194_841_377).abs() < 1e-9);
    }

    #[test]
    fn qwp_conventions() {
        let q = qwp_unitary(0.0);
        assert!(q[(0, 1)].norm() < 1e-15 && q[(1, 0)].norm() < 1e-15);
        let rel = q[(1, 1)] / q[(0, 0)];
        assert!((rel - Complex64::new(0.0, -1.0)).norm() < 1e-15);

        let q45 = qwp_unitary(45.0);
        let out = q45 * nalgebra::Vector2::new(re(1.0), re(0.0));
        assert!((out[0].norm_sqr() - 0.5).abs() < 1e-15);
        assert!((out[1].norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quarter_after_half_wave_gives_circular() {
        let h = nalgebra::Vector2::new(re(1.0), re(0.0));
        let k = std::f64::consts::FRAC_1_SQRT_2;
        let left = nalgebra::Vector2::new(re(k), Complex64::new(0.0, -k));
        let right = nalgebra::Vector2::new(re(k), Complex64::new(0.0, k));
        // axis-aligned QWP after the Hadamard-setting HWP: circular output
        let out = qwp_unitary(0.0) * hwp_unitary(22.5) * h;
        assert!((left.dotc(&out).norm_sqr() - 1.0).abs() < 1e-14);
        // a QWP whose axis lies along the diagonal leaves D untouched
        let out = qwp_unitary(45.0) * hwp_unitary(22.5) * h;
        assert!((right.dotc(&out).norm_sqr() - 0.5).abs() < 1e-14);
        let d = nalgebra::Vector2::new(re(k), re(k));
        assert!((d.dotc(&out).norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pbs_routes_by_polarization() {
        let u = OpticalElement::pbs(0, 1, 2, 3).mode_unitary(4).unwrap();
        let run = |occ: Vec<u32>| apply_unitary(&KetState::basis_state(FockState::new(occ)), &u).unwrap();
        assert_eq!(
            run(vec![1, 0, 0, 0]),
            KetState::basis_state(FockState::new(vec![1, 0, 0, 0]))
        );
        assert_eq!(
            run(vec![0, 1, 0, 0]),
            KetState::basis_state(FockState::new(vec![0, 0, 0, 1]))
        );
        // H and V photons sharing rail A leave on different rails
        assert_eq!(
            run(vec![1, 1, 0, 0]),
            KetState::basis_state(FockState::new(vec![1, 0, 0, 1]))
        );
        assert!(matches!(
            OpticalElement::pbs(0, 1, 1, 3).mode_unitary(4),
            Err(Error::DuplicateMode(1))
        ));
    }

    #[test]
    fn phase_element() {
        let u = OpticalElement::phase(1, std::f64::consts::PI).mode_unitary(2).unwrap();
        assert!((u.matrix()[(1, 1)] - re(-1.0)).norm() < 1e-15);
        assert!(OpticalElement::phase(2, 0.1).mode_unitary(2).is_err());
    }

    #[test]
    fn half_bs_hom_after_lift() {
        let u = OpticalElement::bs(0, 1, 0.5).mode_unitary(2).unwrap();
        let one_one = FockState::new(vec![1, 1]);
        assert!(u.transition_amplitude(&one_one, &one_one).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn element_unitaries_are_unitary(r in 0.0f64..=1.0, theta in -360.0f64..360.0) {
            prop_assert!(is_unitary(&bs_unitary(r).unwrap(), 1e-12));
            prop_assert!(is_unitary(&hwp_unitary(theta), 1e-12));
            prop_assert!(is_unitary(&qwp_unitary(theta), 1e-12));
        }

        #[test]
        fn hwp_is_involutive(theta in -360.0f64..360.0) {
            let h = hwp_unitary(theta);
            prop_assert!(max_dev(&(h * h), &Matrix2::identity()) < 1e-12);
        }
    }
}
