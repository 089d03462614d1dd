#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use locnot::density::DensityMatrix;
use locnot::fock::ModeUnitary;
use locnot::gate::{Circuit, QubitAmplitudes};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    c(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// R's diagonal moved into Q.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> ModeUnitary {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = d / d.norm();
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ModeUnitary::new(q).expect("QR factor is unitary")
}

/// Hilbert-Schmidt random two-qubit state `G G^† / Tr`.
pub fn random_density(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = Matrix4::from_fn(|_, _| gaussian(rng));
    let m = g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).expect("HS sample is a state")
}

pub fn random_qubit(rng: &mut ChaCha8Rng) -> QubitAmplitudes {
    let (a, b) = (gaussian(rng), gaussian(rng));
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    QubitAmplitudes::new(a / n, b / n).expect("normalized")
}

/// First-quantized two-photon model. Each photon propagates on its own with
/// single-particle amplitudes `U[:, in]`; an indistinguishable pair adds the
/// exchanged path coherently, a distinguishable pair keeps the "which photon"
/// label and the two assignments add as a mixture. Returns the unnormalized
/// coincidence density matrix in the (control, target) logical basis.
pub fn first_quantized_output(
    circuit: &Circuit,
    control: &QubitAmplitudes,
    target: &QubitAmplitudes,
    xi: f64,
) -> Matrix4<Complex64> {
    let u = circuit.mode_unitary().unwrap();
    let u = u.matrix();
    let single = |pair: [usize; 2], amps: [Complex64; 2]| -> Vec<Complex64> {
        (0..u.nrows())
            .map(|i| u[(i, pair[0])] * amps[0] + u[(i, pair[1])] * amps[1])
            .collect()
    };
    let uc = single(circuit.inputs().control.modes(), control.amplitudes());
    let ut = single(circuit.inputs().target.modes(), target.amplitudes());
    let co = circuit.outputs().control.modes();
    let to = circuit.outputs().target.modes();
    let ket = |f: &dyn Fn(usize, usize) -> Complex64| nalgebra::Vector4::from_fn(|k, _| f(co[k / 2], to[k % 2]));
    let together = ket(&|a, b| uc[a] * ut[b] + uc[b] * ut[a]);
    let direct = ket(&|a, b| uc[a] * ut[b]);
    let swapped = ket(&|a, b| ut[a] * uc[b]);
    let proj = |v: nalgebra::Vector4<Complex64>| v * v.adjoint();
    proj(together) * c(xi, 0.0) + (proj(direct) + proj(swapped)) * c(1.0 - xi, 0.0)
}
