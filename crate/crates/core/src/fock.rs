//! Occupation-number states and the lift of mode unitaries to Fock space.
//!
//! A mode unitary `U` acts on creation operators as `a_j^† -> sum_i U[i][j] a_i^†`,
//! so column `j` is the image of input mode `j`. The transition amplitude between
//! occupation lists `n` (input) and `m` (output) is
//!
//! ```text
//! <m| Phi(U) |n> = per(U[m, n]) / sqrt(prod m_i! prod n_j!)
//! ```
//!
//! where `U[m, n]` repeats row `i` `m_i` times and column `j` `n_j` times.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `U U^† = I` when accepting a mode unitary.
pub const UNITARY_TOL: f64 = 1e-12;

/// Amplitudes smaller than this are dropped from sparse kets.
pub const PRUNE_TOL: f64 = 1e-14;

/// One optical mode: its position in the circuit's flat mode list plus a label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub index: usize,
    pub label: String,
}

impl ModeIndex {
    pub fn new(index: usize, label: impl Into<String>) -> Self {
        Self {
            index,
            label: label.into(),
        }
    }
}

/// Photon occupation numbers, one per mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(Vec<u32>);

impl FockState {
    pub fn new(occupations: Vec<u32>) -> Self {
        Self(occupations)
    }

    pub fn vacuum(mode_count: usize) -> Self {
        Self(vec![0; mode_count])
    }

    /// A state with one photon in each listed mode (repeats allowed).
    pub fn with_photons(mode_count: usize, modes: &[usize]) -> Self {
        let mut occ = vec![0; mode_count];
        for &m in modes {
            occ[m] += 1;
        }
        Self(occ)
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn mode_count(&self) -> usize {
        self.0.len()
    }

    pub fn photon_count(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    /// Mode list with mode `i` repeated `n_i` times.
    fn expanded_modes(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat_n(i, n as usize))
            .collect()
    }

    fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&n| factorial(n)).product()
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// All occupation lists of `mode_count` modes holding `photon_count` photons,
/// in lexicographically descending order (`|n,0,..>` first, `|..,0,n>` last).
pub fn fock_basis(mode_count: usize, photon_count: usize) -> Vec<FockState> {
    assert!(mode_count >= 1, "fock_basis needs at least one mode");
    let mut out = Vec::new();
    let mut current = vec![0u32; mode_count];
    fill_basis(&mut current, 0, photon_count, &mut out);
    out
}

fn fill_basis(current: &mut Vec<u32>, mode: usize, remaining: usize, out: &mut Vec<FockState>) {
    if mode == current.len() - 1 {
        current[mode] = remaining as u32;
        out.push(FockState(current.clone()));
        current[mode] = 0;
        return;
    }
    for n in (0..=remaining).rev() {
        current[mode] = n as u32;
        fill_basis(current, mode + 1, remaining - n, out);
    }
    current[mode] = 0;
}

/// Matrix permanent. Direct expansion up to 2x2, Ryser's formula beyond.
pub fn permanent(a: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "permanent of a non-square matrix");
    match n {
        0 => Complex64::new(1.0, 0.0),
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] + a[(0, 1)] * a[(1, 0)],
        _ => ryser(a),
    }
}

fn ryser(a: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut total = Complex64::new(0.0, 0.0);
    for subset in 1u64..(1u64 << n) {
        let mut prod = Complex64::new(1.0, 0.0);
        for i in 0..n {
            let mut row_sum = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if subset & (1 << j) != 0 {
                    row_sum += a[(i, j)];
                }
            }
            prod *= row_sum;
        }
        let sign = if (n - subset.count_ones() as usize).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        total += prod * sign;
    }
    total
}

/// An `m x m` unitary acting on optical modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary(DMatrix<Complex64>);

impl ModeUnitary {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let deviation = unitarity_deviation(&entries);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self(entries))
    }

    pub fn identity(mode_count: usize) -> Self {
        Self(DMatrix::identity(mode_count, mode_count))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &ModeUnitary) -> Result<ModeUnitary> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self(&self.0 * &other.0))
    }

    /// Amplitude `<output| Phi(U) |input>`.
    pub fn transition_amplitude(&self, output: &FockState, input: &FockState) -> Complex64 {
        if output.photon_count() != input.photon_count() {
            return Complex64::new(0.0, 0.0);
        }
        let rows = output.expanded_modes();
        let cols = input.expanded_modes();
        let sub = DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.0[(rows[r], cols[c])]);
        let norm = (output.factorial_product() * input.factorial_product()).sqrt();
        permanent(&sub) / norm
    }
}

/// Largest entry of `|U U^† - I|`.
pub fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    let prod = u * u.adjoint();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// The Fock-space matrix of `u` over `fock_basis(u.dim(), photon_count)`.
pub fn lift_unitary(u: &ModeUnitary, photon_count: usize) -> DMatrix<Complex64> {
    let basis = fock_basis(u.dim(), photon_count);
    let d = basis.len();
    DMatrix::from_fn(d, d, |r, c| u.transition_amplitude(&basis[r], &basis[c]))
}

/// A superposition of Fock states with a common mode and photon count.
#[derive(Debug, Clone, PartialEq)]
pub struct KetState {
    amplitudes: BTreeMap<FockState, Complex64>,
    mode_count: usize,
    photon_count: usize,
}

impl KetState {
    pub fn new(
        mode_count: usize,
        photon_count: usize,
        amplitudes: impl IntoIterator<Item = (FockState, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<FockState, Complex64> = BTreeMap::new();
        for (state, amp) in amplitudes {
            if state.mode_count() != mode_count {
                return Err(Error::DimensionMismatch {
                    expected: mode_count,
                    got: state.mode_count(),
                });
            }
            if state.photon_count() != photon_count {
                return Err(Error::InvalidState(format!(
                    "{state} has {} photons, expected {photon_count}",
                    state.photon_count()
                )));
            }
            *map.entry(state).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        map.retain(|_, a| a.norm() >= PRUNE_TOL);
        let ket = Self {
            amplitudes: map,
            mode_count,
            photon_count,
        };
        let norm_sqr = ket.norm_sqr();
        if norm_sqr <= 0.0 || norm_sqr > 1.0 + 1e-10 {
            return Err(Error::InvalidState(format!("squared norm {norm_sqr} outside (0, 1]")));
        }
        Ok(ket)
    }

    pub fn basis_state(state: FockState) -> Self {
        let mode_count = state.mode_count();
        let photon_count = state.photon_count();
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(state, Complex64::new(1.0, 0.0));
        Self {
            amplitudes,
            mode_count,
            photon_count,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn photon_count(&self) -> usize {
        self.photon_count
    }

    pub fn amplitude(&self, state: &FockState) -> Complex64 {
        self.amplitudes.get(state).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockState, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

/// Evolve `state` through `u`. Output amplitudes are computed per output basis
/// state, so only the occupied input components are visited.
pub fn apply_unitary(state: &KetState, u: &ModeUnitary) -> Result<KetState> {
    if state.mode_count != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: state.mode_count,
        });
    }
    let mut out = BTreeMap::new();
    for target in fock_basis(state.mode_count, state.photon_count) {
        let amp: Complex64 = state
            .amplitudes
            .iter()
            .map(|(input, a)| u.transition_amplitude(&target, input) * a)
            .sum();
        if amp.norm() >= PRUNE_TOL {
            out.insert(target, amp);
        }
    }
    Ok(KetState {
        amplitudes: out,
        mode_count: state.mode_count,
        photon_count: state.photon_count,
    })
}

/// Place a 2x2 block on `modes` inside an identity of size `total_modes`.
/// Row/column 0 of the block maps to `modes.0`.
pub fn embed(u2: &nalgebra::Matrix2<Complex64>, modes: (usize, usize), total_modes: usize) -> Result<ModeUnitary> {
    let (a, b) = modes;
    for m in [a, b] {
        if m >= total_modes {
            return Err(Error::ModeOutOfRange {
                mode: m,
                mode_count: total_modes,
            });
        }
    }
    if a == b {
        return Err(Error::DuplicateMode(a));
    }
    let mut m = DMatrix::identity(total_modes, total_modes);
    m[(a, a)] = u2[(0, 0)];
    m[(a, b)] = u2[(0, 1)];
    m[(b, a)] = u2[(1, 0)];
    m[(b, b)] = u2[(1, 1)];
    ModeUnitary::new(m)
}
