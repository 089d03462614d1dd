//! Poisson maximum-likelihood reconstruction.
//!
//! The state is parameterized as `rho = T^† T / Tr[T^† T]` with `T` lower
//! triangular: four real diagonal entries and six complex off-diagonal
//! entries, sixteen reals in all. The overall count rate is folded into the
//! scale of `T`, so the expected count for setting `k` is
//! `N * Tr[T^† T Pi_k]` with `N` the total number of recorded counts and the
//! objective below is the Poisson log-likelihood divided by `N`.
//!
//! Each rate is a real quadratic form `p^T A_k p` in the parameters, so the
//! Hessian is cheap and exact. The objective is minimized by damped Newton
//! steps (Levenberg-Marquardt). This matters when the optimum lies on the
//! boundary of the state space: there the `T^† T` parameterization is
//! degenerate and quasi-Newton methods crawl.

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;

use super::{linear_reconstruct, CountRecord};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};

type Params = SVector<f64, 16>;
type Hessian = SMatrix<f64, 16, 16>;

const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Eigenvalue floor applied to the linear-inversion starting point.
    pub start_eigenvalue_floor: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-8,
            max_iterations: 10_000,
            start_eigenvalue_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub rho: DensityMatrix,
    /// `sum_k n_k ln(mu_k) - mu_k` at the optimum, `mu_k` the expected counts.
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn t_matrix(p: &Params) -> Matrix4<Complex64> {
    let mut t = Matrix4::zeros();
    for i in 0..4 {
        t[(i, i)] = Complex64::new(p[i], 0.0);
    }
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        t[(i, j)] = Complex64::new(p[4 + 2 * k], p[5 + 2 * k]);
    }
    t
}

fn params_from_t(t: &Matrix4<Complex64>) -> Params {
    let mut p = Params::zeros();
    for i in 0..4 {
        p[i] = t[(i, i)].re;
    }
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        p[4 + 2 * k] = t[(i, j)].re;
        p[5 + 2 * k] = t[(i, j)].im;
    }
    p
}

/// Lower-triangular `T` with `T^† T = m` for positive definite `m`.
fn reverse_cholesky(m: &Matrix4<Complex64>) -> Option<Matrix4<Complex64>> {
    let mut j = Matrix4::<Complex64>::zeros();
    for i in 0..4 {
        j[(i, 3 - i)] = Complex64::new(1.0, 0.0);
    }
    let l = (j * m * j).cholesky()?.unpack();
    Some((j * l * j).adjoint())
}

fn rate(t: &Matrix4<Complex64>, projector: &Matrix4<Complex64>) -> f64 {
    (t.adjoint() * t * projector).trace().re
}

/// `A` with `Tr[T(p)^† T(p) Pi] = p^T A p`, recovered by polarization.
fn quadratic_form(projector: &Matrix4<Complex64>) -> Hessian {
    let unit = |a: usize| t_matrix(&Params::from_fn(|i, _| if i == a { 1.0 } else { 0.0 }));
    let diag: Vec<f64> = (0..16).map(|a| rate(&unit(a), projector)).collect();
    let mut m = Hessian::zeros();
    for a in 0..16 {
        m[(a, a)] = diag[a];
        for b in 0..a {
            let both = unit(a) + unit(b);
            let v = 0.5 * (rate(&both, projector) - diag[a] - diag[b]);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    m
}

struct Problem {
    forms: Vec<Hessian>,
    freqs: Vec<f64>,
}

impl Problem {
    fn new(projectors: &[Matrix4<Complex64>], freqs: Vec<f64>) -> Self {
        Self {
            forms: projectors.iter().map(quadratic_form).collect(),
            freqs,
        }
    }

    fn rates(&self, p: &Params) -> Vec<f64> {
        self.forms.iter().map(|a| p.dot(&(a * p))).collect()
    }

    /// Negative scaled log-likelihood; `+inf` where a recorded setting has a
    /// non-positive rate.
    fn value(&self, p: &Params) -> f64 {
        let mut v = 0.0;
        for (&f, mu) in self.freqs.iter().zip(self.rates(p)) {
            if f > 0.0 {
                if mu <= 0.0 {
                    return f64::INFINITY;
                }
                v -= f * mu.ln();
            }
            v += mu;
        }
        v
    }

    /// Value, gradient and Hessian. Only called at points with finite value.
    fn derivatives(&self, p: &Params) -> (f64, Params, Hessian) {
        let mut v = 0.0;
        let mut g = Params::zeros();
        let mut h = Hessian::zeros();
        for (&f, a) in self.freqs.iter().zip(&self.forms) {
            let ap = a * p;
            let mu = p.dot(&ap);
            let dmu = ap * 2.0;
            v += mu;
            g += &dmu;
            h += a * 2.0;
            if f > 0.0 {
                v -= f * mu.ln();
                g -= dmu * (f / mu);
                h -= a * (2.0 * f / mu);
                h += dmu * dmu.transpose() * (f / (mu * mu));
            }
        }
        (v, g, h)
    }
}

/// Linear-inversion estimate with eigenvalues clipped at `floor`, normalized.
fn clipped_linear_estimate(records: &[CountRecord], floor: f64) -> Result<Matrix4<Complex64>> {
    let linear = linear_reconstruct(records)?;
    let eig = linear.symmetric_eigen();
    let mut clipped = Matrix4::<Complex64>::zeros();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        clipped += v * v.adjoint() * Complex64::new(lambda.max(floor), 0.0);
    }
    let clipped = (clipped + clipped.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = clipped.trace().re;
    Ok(clipped / Complex64::new(tr, 0.0))
}

/// Basis relabeling for a pivoted reverse Cholesky: position 3 gets the
/// largest diagonal, position 2 the largest remaining Schur-complement
/// diagonal, and so on. Without it a nearly pure state whose last basis
/// component is small has two distant near-optimal parameter points, and
/// the optimizer spends hundreds of steps moving between them.
fn pivot_permutation(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let mut a = *m;
    let mut remaining: Vec<usize> = (0..4).collect();
    let mut perm = Matrix4::zeros();
    for pos in (0..4).rev() {
        let (slot, &k) = remaining
            .iter()
            .enumerate()
            .max_by(|x, y| a[(*x.1, *x.1)].re.total_cmp(&a[(*y.1, *y.1)].re))
            .expect("indices remain");
        remaining.remove(slot);
        perm[(pos, k)] = Complex64::new(1.0, 0.0);
        let pivot = a[(k, k)].re;
        if pivot > 0.0 {
            for &i in &remaining {
                for &j in &remaining {
                    let update = a[(i, k)] * a[(k, j)] / pivot;
                    a[(i, j)] -= update;
                }
            }
        }
    }
    perm
}

fn starting_point(rho0: &Matrix4<Complex64>, projectors: &[Matrix4<Complex64>]) -> Result<Params> {
    let total_rate: f64 = projectors.iter().map(|pi| (rho0 * pi).trace().re).sum();
    let scaled = rho0 / Complex64::new(total_rate, 0.0);
    let t =
        reverse_cholesky(&scaled).ok_or_else(|| Error::Tomography("starting point is not positive definite".into()))?;
    Ok(params_from_t(&t))
}

const MAX_DAMPING: f64 = 1e16;

/// Maximize the Poisson likelihood of `records` over all density matrices.
///
/// Non-convergence is not an error: the best iterate is returned with
/// `converged == false`.
pub fn mle_reconstruct(records: &[CountRecord], options: &MleOptions) -> Result<MleResult> {
    let total: u64 = records.iter().map(|r| r.counts).sum();
    let projectors: Vec<_> = records.iter().map(|r| r.setting.projector()).collect();
    let freqs = records.iter().map(|r| r.counts as f64 / total.max(1) as f64).collect();
    let rho0 = clipped_linear_estimate(records, options.start_eigenvalue_floor)?;
    // work in the pivoted basis: rho' = P rho P^T, Pi' = P Pi P^T
    let perm = pivot_permutation(&rho0);
    let projectors: Vec<_> = projectors.iter().map(|pi| perm * pi * perm.transpose()).collect();
    let problem = Problem::new(&projectors, freqs);
    let mut x = starting_point(&(perm * rho0 * perm.transpose()), &projectors)?;
    let (mut fx, mut gx, mut hx) = problem.derivatives(&x);
    let mut damping = 1e-3;
    let mut iterations = 0;

    'outer: while gx.norm() >= options.gradient_tolerance && iterations < options.max_iterations {
        iterations += 1;
        loop {
            let shifted = hx + Hessian::identity() * damping;
            if let Some(chol) = shifted.cholesky() {
                let trial = x - chol.solve(&gx);
                let ft = problem.value(&trial);
                // near a boundary optimum the remaining decrease can be below
                // rounding; a step that keeps the value and shrinks the gradient
                // still counts as progress
                let slack = 16.0 * f64::EPSILON * fx.abs().max(1.0);
                if ft.is_finite() && ft <= fx + slack {
                    let (f_new, g_new, h_new) = problem.derivatives(&trial);
                    if ft < fx || g_new.norm() < gx.norm() {
                        x = trial;
                        (fx, gx, hx) = (f_new, g_new, h_new);
                        damping = (damping / 3.0).max(1e-12);
                        break;
                    }
                }
            }
            damping *= 4.0;
            if damping > MAX_DAMPING {
                break 'outer;
            }
        }
    }

    let t = t_matrix(&x);
    let rho = DensityMatrix::from_psd_unnormalized(perm.transpose() * t.adjoint() * t * perm);
    let n = total as f64;
    let log_likelihood = records
        .iter()
        .zip(problem.rates(&x))
        .map(|(r, mu)| {
            let expected = n * mu;
            if r.counts > 0 {
                r.counts as f64 * expected.ln() - expected
            } else {
                -expected
            }
        })
        .sum();
    let gradient_norm = gx.norm();
    Ok(MleResult {
        rho,
        log_likelihood,
        converged: gradient_norm < options.gradient_tolerance,
        iterations,
        gradient_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::BellState;
    use crate::tomography::{expected_counts, fidelity};

    #[test]
    fn reverse_cholesky_roundtrip() {
        let rho = DensityMatrix::werner(0.6).unwrap();
        let t = reverse_cholesky(rho.matrix()).unwrap();
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_eq!(t[(i, j)], Complex64::new(0.0, 0.0));
            }
            assert!(t[(i, i)].im == 0.0);
        }
        assert!((t.adjoint() * t - rho.matrix()).norm() < 1e-14);
        let p = params_from_t(&t);
        assert_eq!(t_matrix(&p), t);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let records = expected_counts(&DensityMatrix::werner(0.5).unwrap(), 1000);
        let total: u64 = records.iter().map(|r| r.counts).sum();
        let projectors: Vec<_> = records.iter().map(|r| r.setting.projector()).collect();
        let problem = Problem::new(
            &projectors,
            records.iter().map(|r| r.counts as f64 / total as f64).collect(),
        );
        let p = Params::from_fn(|i, _| 0.3 + 0.05 * i as f64 * if i % 3 == 0 { -1.0 } else { 1.0 });
        let t = t_matrix(&p);
        for (pi, mu) in projectors.iter().zip(problem.rates(&p)) {
            assert!((rate(&t, pi) - mu).abs() < 1e-13);
        }
        let (_, g, hess) = problem.derivatives(&p);
        let h = 1e-6;
        for i in 0..16 {
            let mut up = p;
            up[i] += h;
            let mut down = p;
            down[i] -= h;
            let fd = (problem.value(&up) - problem.value(&down)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "component {i}: {fd} vs {}", g[i]);
            let (_, g_up, _) = problem.derivatives(&up);
            let (_, g_down, _) = problem.derivatives(&down);
            let fd_col = (g_up - g_down) / (2.0 * h);
            assert!((fd_col - hess.column(i)).norm() < 1e-6, "hessian column {i}");
        }
    }

    #[test]
    fn noise_free_singlet() {
        let psi = BellState::PsiMinus.ket();
        let rho = DensityMatrix::pure(&psi).unwrap();
        let fit = mle_reconstruct(&expected_counts(&rho, 1_000_000), &MleOptions::default()).unwrap();
        assert!(fit.converged, "gradient {}", fit.gradient_norm);
        assert!(fidelity(&fit.rho, &psi) >= 1.0 - 1e-6);
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let rho = DensityMatrix::werner(0.9).unwrap();
        let opts = MleOptions {
            max_iterations: 1,
            gradient_tolerance: 1e-30,
            ..Default::default()
        };
        let fit = mle_reconstruct(&expected_counts(&rho, 10_000), &opts).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 1);
    }
}
