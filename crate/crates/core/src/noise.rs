//! Partial distinguishability between the control and target photons.
//!
//! Every optical mode is split into two internal sub-modes `a` and `b` that the
//! optics treat identically. The control photon lives in `a`; the target photon
//! has amplitude `sqrt(xi)` in `a` and `sqrt(1 - xi)` in `b`. After coincidence
//! post-selection the internal label is traced out, leaving a mixed two-qubit
//! state.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::fock::{apply_unitary, FockState, KetState, ModeUnitary};
use crate::gate::{Circuit, QubitAmplitudes};

/// Squared overlap of the two photons' internal wavepackets.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct OverlapParam(f64);

impl OverlapParam {
    pub fn new(xi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::Overlap(xi));
        }
        Ok(Self(xi))
    }

    pub fn perfect() -> Self {
        Self(1.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Post-selected mixed output.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedOutcome {
    /// `None` when the coincidence probability vanishes.
    pub rho: Option<DensityMatrix>,
    pub success_probability: f64,
}

/// The circuit acting identically on both internal sectors: `U (+) U` over
/// `2m` modes, sector `a` first.
fn doubled_unitary(u: &ModeUnitary) -> Result<ModeUnitary> {
    let m = u.dim();
    let mut big = DMatrix::zeros(2 * m, 2 * m);
    big.view_mut((0, 0), (m, m)).copy_from(u.matrix());
    big.view_mut((m, m), (m, m)).copy_from(u.matrix());
    ModeUnitary::new(big)
}

pub fn run_with_mismatch(
    control: &QubitAmplitudes,
    target: &QubitAmplitudes,
    circuit: &Circuit,
    xi: OverlapParam,
) -> Result<MixedOutcome> {
    let m = circuit.mode_count();
    let doubled = doubled_unitary(&circuit.mode_unitary()?)?;

    let c_in = circuit.inputs().control.modes();
    let t_in = circuit.inputs().target.modes();
    let ca = control.amplitudes();
    let ta = target.amplitudes();
    let sector_weight = [xi.0.sqrt(), (1.0 - xi.0).sqrt()];

    let mut terms = Vec::new();
    for (i, &c_mode) in c_in.iter().enumerate() {
        for (j, &t_mode) in t_in.iter().enumerate() {
            for (sector, &w) in sector_weight.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let state = FockState::with_photons(2 * m, &[c_mode, t_mode + sector * m]);
                terms.push((state, ca[i] * ta[j] * w));
            }
        }
    }
    let input = KetState::new(2 * m, 2, terms)?;
    let out = apply_unitary(&input, &doubled)?;

    // psi[(c_sector, t_sector)][2 * c_bit + t_bit]
    let mut psi = [[Complex64::new(0.0, 0.0); 4]; 4];
    let c_out = circuit.outputs().control.modes();
    let t_out = circuit.outputs().target.modes();
    for (fock, amp) in out.iter() {
        if let Some((c_bit, c_sec, t_bit, t_sec)) = locate(fock.occupations(), m, c_out, t_out) {
            psi[2 * c_sec + t_sec][2 * c_bit + t_bit] += amp;
        }
    }

    let mut rho = Matrix4::<Complex64>::zeros();
    for branch in &psi {
        for r in 0..4 {
            for c in 0..4 {
                rho[(r, c)] += branch[r] * branch[c].conj();
            }
        }
    }
    let p = rho.trace().re;
    if p <= 0.0 {
        return Ok(MixedOutcome {
            rho: None,
            success_probability: 0.0,
        });
    }
    Ok(MixedOutcome {
        rho: Some(DensityMatrix::from_psd_unnormalized(rho)),
        success_probability: p.min(1.0),
    })
}

/// Find `(control bit, control sector, target bit, target sector)` for an
/// output occupation list holding exactly one photon in each output pair.
fn locate(occ: &[u32], m: usize, c_out: [usize; 2], t_out: [usize; 2]) -> Option<(usize, usize, usize, usize)> {
    let find_one = |pair: [usize; 2]| -> Option<(usize, usize)> {
        let mut hit = None;
        for (bit, &mode) in pair.iter().enumerate() {
            for sector in 0..2 {
                match occ[mode + sector * m] {
                    0 => {}
                    1 if hit.is_none() => hit = Some((bit, sector)),
                    _ => return None,
                }
            }
        }
        hit
    };
    let (cb, cs) = find_one(c_out)?;
    let (tb, ts) = find_one(t_out)?;
    // two photons total, so nothing else is occupied
    Some((cb, cs, tb, ts))
}

/// `table[input][output]`: probability of logical output `|ct>` given logical
/// input `|ct>`, each row summing to one.
pub fn truth_table(circuit: &Circuit, xi: OverlapParam) -> Result<[[f64; 4]; 4]> {
    let mut table = [[0.0; 4]; 4];
    for (input, row) in table.iter_mut().enumerate() {
        let c = QubitAmplitudes::logical(input >= 2);
        let t = QubitAmplitudes::logical(input % 2 == 1);
        let outcome = run_with_mismatch(&c, &t, circuit, xi)?;
        if let Some(rho) = outcome.rho {
            *row = rho.diagonal();
        }
    }
    Ok(table)
}

/// Probability that the target flips for control `|1>`, target `|0>`.
pub fn flip_probability(circuit: &Circuit, xi: OverlapParam) -> Result<f64> {
    let outcome = run_with_mismatch(&QubitAmplitudes::one(), &QubitAmplitudes::zero(), circuit, xi)?;
    Ok(outcome.rho.map(|r| r.diagonal()[3]).unwrap_or(0.0))
}

/// Solve `P(|11> | |10>)(xi) = target` by bisection. The flip probability is
/// non-decreasing in `xi`, so the root is unique.
pub fn calibrate_overlap(circuit: &Circuit, target_flip_probability: f64) -> Result<OverlapParam> {
    let low = flip_probability(circuit, OverlapParam(0.0))?;
    let high = flip_probability(circuit, OverlapParam(1.0))?;
    let range_err = Error::CalibrationRange {
        target: target_flip_probability,
        low,
        high,
    };
    if !(target_flip_probability > low && target_flip_probability <= high + 1e-12) {
        return Err(range_err);
    }
    if (target_flip_probability - high).abs() <= 1e-12 {
        return Ok(OverlapParam(1.0));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = flip_probability(circuit, OverlapParam(mid))?;
        if p < target_flip_probability {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(OverlapParam(0.5 * (lo + hi)))
}
