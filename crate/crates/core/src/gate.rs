//! The post-selected CNOT: circuit description, the two builders, dual-rail
//! encoding and coincidence post-selection.
//!
//! Both builders produce a flat list of modes. The conceptual network uses six
//! spatial modes. The polarization network uses four rails with an H and a V
//! mode each; the polarizing beam splitters act as calcite displacers that move
//! the V component of one rail into the neighbouring rail.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::TwoQubitKet;
use crate::elements::{theta_third_exact, OpticalElement};
use crate::error::{Error, Result};
use crate::fock::{apply_unitary, FockState, KetState, ModeUnitary};

/// Tolerance on `|alpha|^2 + |beta|^2 = 1`.
pub const QUBIT_NORM_TOL: f64 = 1e-12;

/// The pair of modes carrying logical `|0>` and `|1>` of one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RailPair {
    pub zero: usize,
    pub one: usize,
}

impl RailPair {
    pub fn new(zero: usize, one: usize) -> Self {
        Self { zero, one }
    }

    pub fn modes(&self) -> [usize; 2] {
        [self.zero, self.one]
    }

    fn contains(&self, mode: usize) -> bool {
        self.zero == mode || self.one == mode
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Qubit {
    Control,
    Target,
}

impl Qubit {
    pub fn name(self) -> &'static str {
        match self {
            Qubit::Control => "control",
            Qubit::Target => "target",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitMap {
    pub control: RailPair,
    pub target: RailPair,
}

impl QubitMap {
    pub fn get(&self, qubit: Qubit) -> RailPair {
        match qubit {
            Qubit::Control => self.control,
            Qubit::Target => self.target,
        }
    }
}

/// A linear-optical network with dual-rail input and output assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    mode_count: usize,
    labels: Vec<String>,
    elements: Vec<OpticalElement>,
    inputs: QubitMap,
    outputs: QubitMap,
}

impl Circuit {
    pub fn new(
        mode_count: usize,
        labels: Vec<String>,
        elements: Vec<OpticalElement>,
        inputs: QubitMap,
        outputs: QubitMap,
    ) -> Result<Self> {
        if mode_count == 0 {
            return Err(Error::InvalidArgument("circuit has no modes".into()));
        }
        if labels.len() != mode_count {
            return Err(Error::DimensionMismatch {
                expected: mode_count,
                got: labels.len(),
            });
        }
        for e in &elements {
            e.validate(mode_count)?;
        }
        for map in [&inputs, &outputs] {
            let modes = [map.control.zero, map.control.one, map.target.zero, map.target.one];
            for (k, &m) in modes.iter().enumerate() {
                if m >= mode_count {
                    return Err(Error::ModeOutOfRange { mode: m, mode_count });
                }
                if modes[..k].contains(&m) {
                    return Err(Error::DuplicateMode(m));
                }
            }
        }
        Ok(Self {
            mode_count,
            labels,
            elements,
            inputs,
            outputs,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn elements(&self) -> &[OpticalElement] {
        &self.elements
    }

    pub fn inputs(&self) -> &QubitMap {
        &self.inputs
    }

    pub fn outputs(&self) -> &QubitMap {
        &self.outputs
    }

    /// Modes outside both output pairs. A photon found here spoils the coincidence.
    pub fn dump_modes(&self) -> Vec<usize> {
        (0..self.mode_count)
            .filter(|&m| !self.outputs.control.contains(m) && !self.outputs.target.contains(m))
            .collect()
    }

    /// Product of all element unitaries, first element applied first.
    pub fn mode_unitary(&self) -> Result<ModeUnitary> {
        let mut total = ModeUnitary::identity(self.mode_count);
        for e in &self.elements {
            total = e.mode_unitary(self.mode_count)?.compose(&total)?;
        }
        Ok(total)
    }

    pub fn evolve(&self, state: &KetState) -> Result<KetState> {
        apply_unitary(state, &self.mode_unitary()?)
    }
}

/// Normalized single-qubit amplitudes `alpha |0> + beta |1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitAmplitudes {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl QubitAmplitudes {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - 1.0).abs() > QUBIT_NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { alpha, beta })
    }

    /// Real amplitudes, normalized on the way in.
    pub fn real(alpha: f64, beta: f64) -> Result<Self> {
        let n = (alpha * alpha + beta * beta).sqrt();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Self::new(Complex64::new(alpha / n, 0.0), Complex64::new(beta / n, 0.0))
    }

    pub fn zero() -> Self {
        Self {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    pub fn one() -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
        }
    }

    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: Complex64::new(s, 0.0),
            beta: Complex64::new(s, 0.0),
        }
    }

    pub fn minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: Complex64::new(s, 0.0),
            beta: Complex64::new(-s, 0.0),
        }
    }

    pub fn logical(bit: bool) -> Self {
        if bit {
            Self::one()
        } else {
            Self::zero()
        }
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [self.alpha, self.beta]
    }
}

/// Outcome of coincidence post-selection on a pure input.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelected {
    /// Normalized two-qubit output; `None` when no coincidence is possible.
    pub state: Option<TwoQubitKet>,
    pub success_probability: f64,
}

impl PostSelected {
    pub fn is_defined(&self) -> bool {
        self.state.is_some()
    }
}

/// The six-mode network: a target Mach-Zehnder of two 1/2 beam splitters with a
/// 1/3 beam splitter in each arm, the central one shared with the control's `|1>`
/// mode and the others leaking into vacuum dump modes.
///
/// Mode order: `C0, C1, T0, T1, dump1, dump2`. Between the two 1/2 splitters
/// modes 2 and 3 carry the `T+` and `T-` components. Every surviving single-photon
/// path meets exactly one 1/3 splitter on its sign-carrying side, so all pass
/// amplitudes are `-1/sqrt 3`; the `C1,T+` coincidence picks up `+1/3` instead
/// of `(-1/sqrt 3)^2` and that relative sign flips the target.
pub fn build_conceptual_cnot() -> Circuit {
    let third = 1.0 / 3.0;
    let labels = ["C0", "C1", "T0", "T1", "dump1", "dump2"].map(String::from).to_vec();
    let elements = vec![
        OpticalElement::bs(2, 3, 0.5),
        OpticalElement::bs(1, 2, third),
        OpticalElement::bs(4, 0, third),
        OpticalElement::bs(5, 3, third),
        OpticalElement::bs(2, 3, 0.5),
    ];
    let map = QubitMap {
        control: RailPair::new(0, 1),
        target: RailPair::new(2, 3),
    };
    Circuit::new(6, labels, elements, map, map).expect("conceptual circuit is well formed")
}

/// Parameters of the polarization-encoded realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentalParams {
    /// Extra phase on the control `|1>` (V) mode, radians.
    pub phi_c: f64,
    /// Axis angle of the unequal-mixing half-wave plate, degrees.
    pub theta_third: f64,
}

impl Default for ExperimentalParams {
    fn default() -> Self {
        Self {
            phi_c: 0.0,
            theta_third: theta_third_exact(),
        }
    }
}

/// Polarization realization with calcite displacers.
///
/// Rails are beam positions; each carries an H and a V mode:
///
/// | rail | position | modes (H, V) |
/// |------|----------|--------------|
/// | control | 0 | 0, 1 |
/// | target | 1 | 2, 3 |
/// | upper | 2 | 4, 5 |
/// | lower dump | -1 | 6, 7 |
///
/// The first displacer moves V one position up: `C1` joins `T+` at position 1
/// and `T-` moves to position 2. One plate at `theta_third` spans all three
/// occupied positions. It mixes `C1` and `T+` (the central 1/3 splitter) and
/// rotates 2/3 of `C0` and of `T-` into the polarization that the second,
/// reversed displacer sends to the dumps (V of the lower dump rail, H of the
/// upper rail). A fixed 0-degree plate on the target rail removes the relative
/// sign that `T+` and `T-` acquire at the mixing plate.
pub fn build_experimental_cnot(params: ExperimentalParams) -> Circuit {
    let theta = params.theta_third;
    let labels = ["C_H", "C_V", "T_H", "T_V", "U_H", "U_V", "D_H", "D_V"]
        .map(String::from)
        .to_vec();
    let elements = vec![
        OpticalElement::phase(1, params.phi_c),
        // target Hadamard: T+ on H, T- on V
        OpticalElement::hwp(2, 3, 22.5),
        // first displacer, V up one position
        OpticalElement::pbs(2, 3, 4, 5),
        OpticalElement::pbs(0, 1, 2, 3),
        // the "1/3" plate across positions 0..2
        OpticalElement::hwp(0, 1, theta),
        OpticalElement::hwp(2, 3, theta),
        OpticalElement::hwp(4, 5, theta),
        // second displacer, V down one position
        OpticalElement::pbs(6, 7, 0, 1),
        OpticalElement::pbs(0, 1, 2, 3),
        OpticalElement::pbs(2, 3, 4, 5),
        OpticalElement::hwp(2, 3, 0.0),
        OpticalElement::hwp(2, 3, 22.5),
    ];
    let map = QubitMap {
        control: RailPair::new(0, 1),
        target: RailPair::new(2, 3),
    };
    Circuit::new(8, labels, elements, map, map).expect("experimental circuit is well formed")
}

/// The product two-photon input: one photon over the control input pair, one
/// over the target input pair.
pub fn encode_input(control: &QubitAmplitudes, target: &QubitAmplitudes, circuit: &Circuit) -> KetState {
    let m = circuit.mode_count();
    let c = circuit.inputs().control.modes();
    let t = circuit.inputs().target.modes();
    let ca = control.amplitudes();
    let ta = target.amplitudes();
    let terms = (0..2).flat_map(|i| (0..2).map(move |j| (FockState::with_photons(m, &[c[i], t[j]]), ca[i] * ta[j])));
    KetState::new(m, 2, terms).expect("normalized product input")
}

/// For an output Fock state, the `(control bit, target bit)` it represents when
/// it holds exactly one photon in each output pair and nothing elsewhere.
pub(crate) fn coincidence_index(state: &FockState, outputs: &QubitMap) -> Option<(usize, usize)> {
    let occ = state.occupations();
    if state.photon_count() != 2 {
        return None;
    }
    let c = outputs.control.modes();
    let t = outputs.target.modes();
    let c_bit = match (occ[c[0]], occ[c[1]]) {
        (1, 0) => 0,
        (0, 1) => 1,
        _ => return None,
    };
    let t_bit = match (occ[t[0]], occ[t[1]]) {
        (1, 0) => 0,
        (0, 1) => 1,
        _ => return None,
    };
    Some((c_bit, t_bit))
}

/// Unnormalized coincidence amplitudes `[00, 01, 10, 11]` of an evolved state.
pub fn coincidence_amplitudes(state: &KetState, circuit: &Circuit) -> TwoQubitKet {
    let mut out = Vector4::zeros();
    for (fock, amp) in state.iter() {
        if let Some((c, t)) = coincidence_index(fock, circuit.outputs()) {
            out[2 * c + t] += amp;
        }
    }
    out
}

/// Project an evolved state onto one photon per output pair.
pub fn post_select(state: &KetState, circuit: &Circuit) -> PostSelected {
    let amps = coincidence_amplitudes(state, circuit);
    let p = amps.norm_squared();
    if p <= 0.0 {
        return PostSelected {
            state: None,
            success_probability: 0.0,
        };
    }
    PostSelected {
        state: Some(amps / Complex64::new(p.sqrt(), 0.0)),
        success_probability: p.min(1.0),
    }
}

/// Encode, evolve and post-select a product input.
pub fn run(circuit: &Circuit, control: &QubitAmplitudes, target: &QubitAmplitudes) -> Result<PostSelected> {
    let out = circuit.evolve(&encode_input(control, target, circuit))?;
    Ok(post_select(&out, circuit))
}

/// Send a lone photon into one qubit's input pair and keep the runs where it
/// leaves through the same qubit's output pair.
pub fn run_single_photon(
    circuit: &Circuit,
    qubit: Qubit,
    amps: &QubitAmplitudes,
) -> Result<(Option<QubitAmplitudes>, f64)> {
    let m = circuit.mode_count();
    let inp = circuit.inputs().get(qubit).modes();
    let outp = circuit.outputs().get(qubit).modes();
    let a = amps.amplitudes();
    let ket = KetState::new(m, 1, (0..2).map(|i| (FockState::with_photons(m, &[inp[i]]), a[i])))?;
    let evolved = circuit.evolve(&ket)?;
    let alpha = evolved.amplitude(&FockState::with_photons(m, &[outp[0]]));
    let beta = evolved.amplitude(&FockState::with_photons(m, &[outp[1]]));
    let p = alpha.norm_sqr() + beta.norm_sqr();
    if p <= 0.0 {
        return Ok((None, 0.0));
    }
    let n = Complex64::new(p.sqrt(), 0.0);
    Ok((Some(QubitAmplitudes::new(alpha / n, beta / n)?), p))
}

/// The post-selected map on the two-qubit space. Column `2c + t` holds the
/// unnormalized coincidence amplitudes for logical input `|c t>`.
pub fn logical_operator(circuit: &Circuit) -> Result<Matrix4<Complex64>> {
    let u = circuit.mode_unitary()?;
    let mut op = Matrix4::zeros();
    for c in 0..2 {
        for t in 0..2 {
            let input = encode_input(
                &QubitAmplitudes::logical(c == 1),
                &QubitAmplitudes::logical(t == 1),
                circuit,
            );
            let out = apply_unitary(&input, &u)?;
            op.set_column(2 * c + t, &coincidence_amplitudes(&out, circuit));
        }
    }
    Ok(op)
}

/// The ideal CNOT with control as the first qubit.
pub fn cnot_matrix() -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    for (col, row) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(row, col)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Largest entrywise difference between `a` and `b` after rotating `b` by the
/// global phase that aligns it with `a` at `a`'s largest-magnitude entry.
pub fn phase_aligned_distance<const R: usize, const C: usize>(
    a: &nalgebra::SMatrix<Complex64, R, C>,
    b: &nalgebra::SMatrix<Complex64, R, C>,
) -> f64 {
    let (k, _) = a.iter().enumerate().fold(
        (0, -1.0),
        |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best },
    );
    let phase = if b[k].norm() > 0.0 && a[k].norm() > 0.0 {
        let r = a[k] / b[k];
        r / r.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y * phase).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::BellState;

    const TOL: f64 = 1e-10;

    fn ninth() -> f64 {
        1.0 / 9.0
    }

    #[test]
    fn conceptual_layout() {
        let c = build_conceptual_cnot();
        assert_eq!(c.mode_count(), 6);
        assert_eq!(c.elements().len(), 5);
        assert!(c.elements().iter().all(|e| matches!(e, OpticalElement::Bs { .. })));
        assert_eq!(c.dump_modes(), vec![4, 5]);
    }

    #[test]
    fn scaled_operator_is_cnot() {
        for circuit in [
            build_conceptual_cnot(),
            build_experimental_cnot(ExperimentalParams::default()),
        ] {
            let op = logical_operator(&circuit).unwrap();
            let scaled = op * Complex64::new(3.0, 0.0);
            assert!(phase_aligned_distance(&cnot_matrix(), &scaled) < TOL);
            let sq = scaled * scaled;
            assert!(phase_aligned_distance(&Matrix4::identity(), &sq) < TOL);
        }
    }

    #[test]
    fn builders_agree() {
        let a = logical_operator(&build_conceptual_cnot()).unwrap();
        let b = logical_operator(&build_experimental_cnot(ExperimentalParams::default())).unwrap();
        assert!(phase_aligned_distance(&a, &b) < TOL);
    }

    #[test]
    fn logical_inputs_succeed_with_one_ninth() {
        let circuit = build_conceptual_cnot();
        for c in [false, true] {
            for t in [false, true] {
                let r = run(&circuit, &QubitAmplitudes::logical(c), &QubitAmplitudes::logical(t)).unwrap();
                assert!((r.success_probability - ninth()).abs() < TOL);
                let out = r.state.unwrap();
                let expected = 2 * usize::from(c) + usize::from(t ^ c);
                assert!((out[expected].norm() - 1.0).abs() < TOL);
            }
        }
    }

    #[test]
    fn singlet_from_minus_one() {
        let r = run(
            &build_conceptual_cnot(),
            &QubitAmplitudes::minus(),
            &QubitAmplitudes::one(),
        )
        .unwrap();
        let fid = BellState::PsiMinus.ket().dotc(&r.state.unwrap()).norm_sqr();
        assert!((fid - 1.0).abs() < TOL);
    }

    #[test]
    fn lone_target_passes_unchanged() {
        let circuit = build_conceptual_cnot();
        let (out, p) = run_single_photon(&circuit, Qubit::Target, &QubitAmplitudes::zero()).unwrap();
        assert!((p - 1.0 / 3.0).abs() < TOL);
        assert!((out.unwrap().alpha.norm() - 1.0).abs() < TOL);

        let input = QubitAmplitudes::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap();
        for circuit in [
            build_conceptual_cnot(),
            build_experimental_cnot(ExperimentalParams::default()),
        ] {
            let (out, _) = run_single_photon(&circuit, Qubit::Target, &input).unwrap();
            let out = out.unwrap();
            let overlap = (input.alpha.conj() * out.alpha + input.beta.conj() * out.beta).norm();
            assert!((overlap - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn identity_circuit_operator() {
        let map = QubitMap {
            control: RailPair::new(0, 1),
            target: RailPair::new(2, 3),
        };
        let labels = (0..4).map(|i| format!("m{i}")).collect();
        let c = Circuit::new(4, labels, vec![], map, map).unwrap();
        let op = logical_operator(&c).unwrap();
        assert!((op - Matrix4::identity()).norm() < 1e-15);
    }

    #[test]
    fn control_phase_contaminates() {
        let params = ExperimentalParams {
            phi_c: std::f64::consts::PI,
            ..Default::default()
        };
        let op = logical_operator(&build_experimental_cnot(params)).unwrap();
        let mut expected = cnot_matrix();
        for col in [2, 3] {
            for row in 0..4 {
                expected[(row, col)] = -expected[(row, col)];
            }
        }
        let scaled = op * Complex64::new(3.0, 0.0);
        assert!(phase_aligned_distance(&expected, &scaled) < TOL);
        assert!(phase_aligned_distance(&cnot_matrix(), &scaled) > 1.0);
    }

    #[test]
    fn rounded_plate_angle() {
        let params = ExperimentalParams {
            theta_third: crate::elements::THETA_THIRD_NOMINAL,
            ..Default::default()
        };
        let circuit = build_experimental_cnot(params);
        for c in [false, true] {
            for t in [false, true] {
                let r = run(&circuit, &QubitAmplitudes::logical(c), &QubitAmplitudes::logical(t)).unwrap();
                assert!((r.success_probability - ninth()).abs() < 0.01);
                assert!((r.success_probability - ninth()).abs() > 1e-4);
            }
        }
    }

    #[test]
    fn zero_norm_projection_is_flagged() {
        // both photons forced into dumps
        let map = QubitMap {
            control: RailPair::new(0, 1),
            target: RailPair::new(2, 3),
        };
        let out_map = QubitMap {
            control: RailPair::new(4, 5),
            target: RailPair::new(2, 3),
        };
        let labels = (0..6).map(|i| format!("m{i}")).collect();
        let c = Circuit::new(6, labels, vec![], map, out_map).unwrap();
        let r = run(&c, &QubitAmplitudes::zero(), &QubitAmplitudes::zero()).unwrap();
        assert!(!r.is_defined());
        assert_eq!(r.success_probability, 0.0);
    }

    #[test]
    fn qubit_amplitudes_checked() {
        assert!(QubitAmplitudes::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).is_err());
        assert!(QubitAmplitudes::real(0.0, 0.0).is_err());
    }

    #[test]
    fn circuit_validation() {
        let map = QubitMap {
            control: RailPair::new(0, 1),
            target: RailPair::new(1, 2),
        };
        let labels = (0..3).map(|i| format!("m{i}")).collect();
        assert!(Circuit::new(3, labels, vec![], map, map).is_err());
    }
}
