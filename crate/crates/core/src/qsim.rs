//! Pure-state simulation of 1 to 3 qubit registers.
//!
//! Qubit 0 is the leftmost tensor factor: in a 3-qubit register the amplitude
//! at index `i` belongs to the basis ket `|q0 q1 q2⟩` with `q0` the most
//! significant bit of `i`. Everything here is immutable; measurement takes the
//! caller's random stream.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

pub const MAX_QUBITS: usize = 3;
/// Tolerance on state normalization and density-matrix trace.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance on algebraic identities (unitarity, Hermiticity).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Default tolerance for [`equal_up_to_global_phase`].
pub const DEFAULT_PHASE_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Measurement basis. Outcome bit 0 is `|0⟩` (Z) or `|+⟩` (X).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];

    /// The single-qubit eigenstate carrying outcome `bit` in this basis.
    pub fn eigenstate(self, bit: u8) -> Result<PureState> {
        Ok(PureState::single(self.eigenvector(bit)?))
    }

    fn eigenvector(self, bit: u8) -> Result<[Complex64; 2]> {
        let h = c(FRAC_1_SQRT_2);
        match (self, bit) {
            (Basis::Z, 0) => Ok([ONE, ZERO]),
            (Basis::Z, 1) => Ok([ZERO, ONE]),
            (Basis::X, 0) => Ok([h, h]),
            (Basis::X, 1) => Ok([h, -h]),
            (_, b) => Err(Error::InvalidBit(b)),
        }
    }

    pub fn other(self) -> Basis {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Z => f.write_str("Z"),
            Basis::X => f.write_str("X"),
        }
    }
}

/// Single-qubit gates. `Y` is the real matrix `[[0, 1], [-1, 0]]`, equal to `ZX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    I,
    X,
    Y,
    Z,
    H,
}

impl Gate {
    pub const ALL: [Gate; 5] = [Gate::I, Gate::X, Gate::Y, Gate::Z, Gate::H];
    pub const PAULI: [Gate; 4] = [Gate::I, Gate::X, Gate::Y, Gate::Z];

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        match self {
            Gate::I => [[ONE, ZERO], [ZERO, ONE]],
            Gate::X => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Y => [[ZERO, ONE], [-ONE, ZERO]],
            Gate::Z => [[ONE, ZERO], [ZERO, -ONE]],
            Gate::H => {
                let h = c(FRAC_1_SQRT_2);
                [[h, h], [h, -h]]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];
}

/// Unit-norm amplitude vector over 1 to 3 qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amps: [Complex64; 8],
}

impl PureState {
    pub fn new(amps: &[Complex64]) -> Result<Self> {
        let n_qubits = match amps.len() {
            2 => 1,
            4 => 2,
            8 => 3,
            n => return Err(Error::BadDimension(n)),
        };
        let mut buf = [ZERO; 8];
        buf[..amps.len()].copy_from_slice(amps);
        let state = PureState {
            n_qubits,
            amps: buf,
        };
        let norm = state.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        let v: Vec<Complex64> = amps.iter().map(|&x| c(x)).collect();
        Self::new(&v)
    }

    fn single(v: [Complex64; 2]) -> Self {
        let mut amps = [ZERO; 8];
        amps[0] = v[0];
        amps[1] = v[1];
        PureState { n_qubits: 1, amps }
    }

    pub fn zero() -> Self {
        Self::single([ONE, ZERO])
    }

    pub fn one() -> Self {
        Self::single([ZERO, ONE])
    }

    pub fn plus() -> Self {
        let h = c(FRAC_1_SQRT_2);
        Self::single([h, h])
    }

    pub fn minus() -> Self {
        let h = c(FRAC_1_SQRT_2);
        Self::single([h, -h])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps[..self.dim()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: target,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    fn bit_mask(&self, target: usize) -> usize {
        1 << (self.n_qubits - 1 - target)
    }

    pub fn apply_gate(&self, gate: Gate, target: usize) -> Result<Self> {
        self.apply_matrix(&gate.matrix(), target)
    }

    /// Applies an arbitrary 2×2 matrix to one tensor factor. The caller is
    /// responsible for it being unitary.
    pub fn apply_matrix(&self, m: &[[Complex64; 2]; 2], target: usize) -> Result<Self> {
        self.check_target(target)?;
        let mask = self.bit_mask(target);
        let mut out = *self;
        for i in 0..self.dim() {
            if i & mask != 0 {
                continue;
            }
            let (a0, a1) = (self.amps[i], self.amps[i | mask]);
            out.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            out.amps[i | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(out)
    }

    /// Unnormalized projection of `target` onto the eigenstate `bit` of `basis`.
    fn project(&self, basis: Basis, target: usize, bit: u8) -> Result<([Complex64; 8], f64)> {
        self.check_target(target)?;
        let v = basis.eigenvector(bit)?;
        let mask = self.bit_mask(target);
        let mut out = [ZERO; 8];
        let mut prob = 0.0;
        for i in 0..self.dim() {
            if i & mask != 0 {
                continue;
            }
            let overlap = v[0].conj() * self.amps[i] + v[1].conj() * self.amps[i | mask];
            out[i] = v[0] * overlap;
            out[i | mask] = v[1] * overlap;
            prob += overlap.norm_sqr();
        }
        Ok((out, prob))
    }

    /// Born probability of reading `bit` when `target` is measured in `basis`.
    pub fn probability(&self, basis: Basis, target: usize, bit: u8) -> Result<f64> {
        Ok(self.project(basis, target, bit)?.1)
    }

    /// Post-measurement state for a given outcome.
    pub fn collapse(&self, basis: Basis, target: usize, bit: u8) -> Result<Self> {
        let (amps, prob) = self.project(basis, target, bit)?;
        if prob <= 0.0 {
            return Err(Error::ImpossibleOutcome(bit));
        }
        let scale = 1.0 / prob.sqrt();
        let mut out = PureState {
            n_qubits: self.n_qubits,
            amps,
        };
        for a in out.amps.iter_mut() {
            *a *= scale;
        }
        Ok(out)
    }

    pub fn measure<R: Rng + ?Sized>(
        &self,
        basis: Basis,
        target: usize,
        rng: &mut R,
    ) -> Result<(u8, Self)> {
        let p0 = self.probability(basis, target, 0)?;
        let bit = if rng.random::<f64>() < p0 { 0 } else { 1 };
        Ok((bit, self.collapse(basis, target, bit)?))
    }

    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let n = self.n_qubits + other.n_qubits;
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n));
        }
        let mut amps = [ZERO; 8];
        for (i, a) in self.amplitudes().iter().enumerate() {
            for (j, b) in other.amplitudes().iter().enumerate() {
                amps[i * other.dim() + j] = a * b;
            }
        }
        Ok(PureState { n_qubits: n, amps })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .amplitudes()
            .iter()
            .zip(other.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

pub fn apply_gate(state: &PureState, gate: Gate, target: usize) -> Result<PureState> {
    state.apply_gate(gate, target)
}

pub fn measure<R: Rng + ?Sized>(
    state: &PureState,
    basis: Basis,
    target: usize,
    rng: &mut R,
) -> Result<(u8, PureState)> {
    state.measure(basis, target, rng)
}

pub fn tensor(a: &PureState, b: &PureState) -> Result<PureState> {
    a.tensor(b)
}

pub fn make_bell(kind: BellKind) -> PureState {
    let h = c(FRAC_1_SQRT_2);
    let amps = match kind {
        BellKind::PhiPlus => [h, ZERO, ZERO, h],
        BellKind::PhiMinus => [h, ZERO, ZERO, -h],
        BellKind::PsiPlus => [ZERO, h, h, ZERO],
        BellKind::PsiMinus => [ZERO, h, -h, ZERO],
    };
    let mut buf = [ZERO; 8];
    buf[..4].copy_from_slice(&amps);
    PureState {
        n_qubits: 2,
        amps: buf,
    }
}

/// Identifies which Bell state the qubit pair `(first, second)` is in.
///
/// The pair must be within `NORM_TOL` fidelity of one of the four Bell states
/// (and hence unentangled from any remaining qubit).
pub fn bell_measure(state: &PureState, qubits: (usize, usize)) -> Result<BellKind> {
    let rho = density_of(&[(1.0, *state)], &[qubits.0, qubits.1])?;
    for kind in BellKind::ALL {
        let bell = make_bell(kind);
        let b = bell.amplitudes();
        let mut fidelity = ZERO;
        for r in 0..4 {
            for col in 0..4 {
                fidelity += b[r].conj() * rho.get(r, col) * b[col];
            }
        }
        if fidelity.re >= 1.0 - NORM_TOL {
            return Ok(kind);
        }
    }
    Err(Error::NotBellState)
}

pub fn equal_up_to_global_phase(a: &PureState, b: &PureState, tol: f64) -> Result<bool> {
    Ok(a.inner(b)?.norm() >= 1.0 - tol)
}

/// Hermitian, unit-trace, positive semidefinite matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim || dim == 0 {
            return Err(Error::InvalidDensity(format!(
                "{} entries for dimension {dim}",
                entries.len()
            )));
        }
        let rho = DensityMatrix { dim, entries };
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_pure(state: &PureState) -> Self {
        let a = state.amplitudes();
        let dim = a.len();
        let mut entries = vec![ZERO; dim * dim];
        for r in 0..dim {
            for col in 0..dim {
                entries[r * dim + col] = a[r] * a[col].conj();
            }
        }
        DensityMatrix { dim, entries }
    }

    fn validate(&self) -> Result<()> {
        for r in 0..self.dim {
            for col in 0..self.dim {
                if (self.get(r, col) - self.get(col, r).conj()).norm() > ALGEBRA_TOL {
                    return Err(Error::InvalidDensity("not Hermitian".into()));
                }
            }
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        if self.eigenvalues().iter().any(|&e| e < -NORM_TOL) {
            return Err(Error::InvalidDensity("negative eigenvalue".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(self.dim, &self.entries)
    }
}

fn hermitian_eigenvalues(dim: usize, entries: &[Complex64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(dim, dim, entries);
    m.symmetric_eigenvalues().iter().copied().collect()
}

/// `Σ wᵢ |ψᵢ⟩⟨ψᵢ|`, partially traced down to the qubits in `keep` (in that order).
pub fn density_of(states: &[(f64, PureState)], keep: &[usize]) -> Result<DensityMatrix> {
    let first = states
        .first()
        .ok_or_else(|| Error::BadWeights("empty mixture".into()))?;
    let n = first.1.n_qubits();
    if states.iter().any(|(w, _)| !w.is_finite() || *w < 0.0) {
        return Err(Error::BadWeights("negative or non-finite weight".into()));
    }
    let total: f64 = states.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::BadWeights(format!("weights sum to {total}")));
    }
    if let Some((_, s)) = states.iter().find(|(_, s)| s.n_qubits() != n) {
        return Err(Error::DimensionMismatch {
            left: first.1.dim(),
            right: s.dim(),
        });
    }
    if keep.is_empty() {
        return Err(Error::InvalidDensity("no qubits kept".into()));
    }
    for (i, &q) in keep.iter().enumerate() {
        if q >= n {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: n,
            });
        }
        if keep[..i].contains(&q) {
            return Err(Error::InvalidDensity(format!("qubit {q} kept twice")));
        }
    }

    let full = 1usize << n;
    let sub = 1usize << keep.len();
    let kept_mask: usize = keep.iter().map(|&q| 1 << (n - 1 - q)).sum();
    let reduced_index = |i: usize| {
        keep.iter()
            .fold(0, |acc, &q| (acc << 1) | ((i >> (n - 1 - q)) & 1))
    };

    let mut entries = vec![ZERO; sub * sub];
    for (w, psi) in states {
        let a = psi.amplitudes();
        for i in 0..full {
            for j in 0..full {
                if i & !kept_mask != j & !kept_mask {
                    continue;
                }
                entries[reduced_index(i) * sub + reduced_index(j)] += *w * a[i] * a[j].conj();
            }
        }
    }
    Ok(DensityMatrix { dim: sub, entries })
}

/// `½ Σ |λ|` over the eigenvalues of `ρ − σ`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim != sigma.dim {
        return Err(Error::DimensionMismatch {
            left: rho.dim,
            right: sigma.dim,
        });
    }
    let dim = rho.dim;
    let mut diff = vec![ZERO; dim * dim];
    for r in 0..dim {
        for col in r..dim {
            let d = rho.get(r, col) - sigma.get(r, col);
            let d = if r == col { c(d.re) } else { d };
            diff[r * dim + col] = d;
            diff[col * dim + r] = d.conj();
        }
    }
    let sum: f64 = hermitian_eigenvalues(dim, &diff).iter().map(|e| e.abs()).sum();
    Ok((0.5 * sum).clamp(0.0, 1.0))
}
