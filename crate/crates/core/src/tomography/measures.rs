use nalgebra::{Matrix2, Matrix3, Matrix4};
use num_complex::Complex64;

use crate::density::{DensityMatrix, TwoQubitKet};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `[I, X, Y, Z]`
pub(crate) fn paulis_with_identity() -> [Matrix2<Complex64>; 4] {
    [
        Matrix2::identity(),
        Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
        Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)),
        Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)),
    ]
}

/// `<psi| rho |psi>` for a normalized `psi`.
pub fn fidelity(rho: &DensityMatrix, psi: &TwoQubitKet) -> f64 {
    let psi = psi / Complex64::new(psi.norm(), 0.0);
    (psi.adjoint() * rho.matrix() * psi)[(0, 0)].re.clamp(0.0, 1.0)
}

fn psd_sqrt(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let eig = m.symmetric_eigen();
    let mut out = Matrix4::zeros();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        out += v * v.adjoint() * c(lambda.max(0.0).sqrt(), 0.0);
    }
    out
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2` between two
/// density matrices. Reduces to [`fidelity`] when either state is pure.
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let s = psd_sqrt(rho.matrix());
    let inner = s * sigma.matrix() * s;
    let inner = (inner + inner.adjoint()) * c(0.5, 0.0);
    let root_sum: f64 = inner
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    (root_sum * root_sum).clamp(0.0, 1.0)
}

/// Eigenvalues below this (relative to the largest) are treated as exact zeros
/// when factoring `rho = W W^†`.
const RANK_CUTOFF: f64 = 1e-14;

/// Wootters concurrence. The square roots of the eigenvalues of
/// `rho (Y(x)Y) rho* (Y(x)Y)` are the singular values of `W^T (Y(x)Y) W` for any
/// factorization `rho = W W^†`; working with singular values avoids taking
/// square roots of rounding noise.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let y = paulis_with_identity()[2];
    let yy = y.kronecker(&y);
    let eig = rho.matrix().symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut w = Matrix4::<Complex64>::zeros();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > RANK_CUTOFF * top {
            w.set_column(k, &(eig.eigenvectors.column(k) * c(lambda.sqrt(), 0.0)));
        }
    }
    let tau = w.transpose() * yy * w;
    let mut lambdas: Vec<f64> = tau.singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

pub fn tangle(rho: &DensityMatrix) -> f64 {
    concurrence(rho).powi(2)
}

/// `(4/3) (1 - Tr rho^2)`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    (4.0 / 3.0 * (1.0 - rho.purity())).clamp(0.0, 1.0)
}

/// Maximal CHSH value over all measurement settings (Horodecki criterion).
/// A value above 2 means some CHSH inequality is violated.
pub fn chsh_max(rho: &DensityMatrix) -> f64 {
    let p = paulis_with_identity();
    let mut t = Matrix3::<f64>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            t[(i, j)] = rho.expectation(&p[i + 1].kronecker(&p[j + 1]));
        }
    }
    let mut ev: Vec<f64> = (t.transpose() * t)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    2.0 * (ev[0] + ev[1]).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::BellState;

    #[test]
    fn bell_state_measures() {
        for b in BellState::ALL {
            let rho = DensityMatrix::pure(&b.ket()).unwrap();
            assert!((fidelity(&rho, &b.ket()) - 1.0).abs() < 1e-12);
            assert!((concurrence(&rho) - 1.0).abs() < 1e-9);
            assert!((tangle(&rho) - 1.0).abs() < 1e-9);
            assert!(linear_entropy(&rho) < 1e-12);
            assert!((chsh_max(&rho) - 2.0 * 2f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn maximally_mixed_measures() {
        let rho = DensityMatrix::maximally_mixed();
        for b in BellState::ALL {
            assert!((fidelity(&rho, &b.ket()) - 0.25).abs() < 1e-15);
        }
        assert!(concurrence(&rho) < 1e-12);
        assert!((linear_entropy(&rho) - 1.0).abs() < 1e-12);
        assert!(chsh_max(&rho) < 1e-12);
    }

    #[test]
    fn state_fidelity_limits() {
        let w = DensityMatrix::werner(0.6).unwrap();
        assert!((state_fidelity(&w, &w) - 1.0).abs() < 1e-12);
        let singlet = BellState::PsiMinus.ket();
        let pure = DensityMatrix::pure(&singlet).unwrap();
        assert!((state_fidelity(&w, &pure) - fidelity(&w, &singlet)).abs() < 1e-7);
        let other = DensityMatrix::pure(&BellState::PhiPlus.ket()).unwrap();
        assert!(state_fidelity(&pure, &other) < 1e-12);
    }

    #[test]
    fn product_state_has_no_entanglement() {
        let psi = TwoQubitKet::new(c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0), c(0.0, 0.0));
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert!(concurrence(&rho) < 1e-7);
        assert!(chsh_max(&rho) <= 2.0 + 1e-12);
    }
}
