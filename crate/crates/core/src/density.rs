//! Two-qubit density matrices in the `|00>, |01>, |10>, |11>` basis
//! (control is the first qubit).

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TwoQubitKet = Vector4<Complex64>;

/// Tolerance used when validating Hermiticity, trace and positivity.
pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix4<Complex64>);

impl DensityMatrix {
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let rho = Self(hermitize(&m));
        let min = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// Normalize a positive semidefinite matrix by its trace without checks.
    pub(crate) fn from_psd_unnormalized(m: Matrix4<Complex64>) -> Self {
        let tr = m.trace().re;
        Self(hermitize(&(m / Complex64::new(tr, 0.0))))
    }

    pub fn pure(psi: &TwoQubitKet) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let psi = psi / Complex64::new(n, 0.0);
        Ok(Self(psi * psi.adjoint()))
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4::identity() * Complex64::new(0.25, 0.0))
    }

    /// `p |Psi-><Psi-| + (1 - p) I / 4`.
    pub fn werner(p: f64) -> Result<Self> {
        if !(-1.0 / 3.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("Werner weight {p} outside [-1/3, 1]")));
        }
        let singlet = BellState::PsiMinus.ket();
        let m = singlet * singlet.adjoint() * Complex64::new(p, 0.0)
            + Matrix4::identity() * Complex64::new((1.0 - p) / 4.0, 0.0);
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix4<Complex64> {
        self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn expectation(&self, op: &Matrix4<Complex64>) -> f64 {
        (self.0 * op).trace().re
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.0[(i, i)].re)
    }
}

fn hermitize(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// The four maximally entangled two-qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellState {
    PsiMinus,
    PsiPlus,
    PhiMinus,
    PhiPlus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PsiMinus,
        BellState::PsiPlus,
        BellState::PhiMinus,
        BellState::PhiPlus,
    ];

    pub fn ket(self) -> TwoQubitKet {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b, c, d) = match self {
            BellState::PsiMinus => (0.0, s, -s, 0.0),
            BellState::PsiPlus => (0.0, s, s, 0.0),
            BellState::PhiMinus => (s, 0.0, 0.0, -s),
            BellState::PhiPlus => (s, 0.0, 0.0, s),
        };
        Vector4::new(a, b, c, d).map(|x| Complex64::new(x, 0.0))
    }

    pub fn name(self) -> &'static str {
        match self {
            BellState::PsiMinus => "psi-minus",
            BellState::PsiPlus => "psi-plus",
            BellState::PhiMinus => "phi-minus",
            BellState::PhiPlus => "phi-plus",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }
}
