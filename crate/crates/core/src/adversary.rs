//! Attacks on the transfer: an eavesdropper on the quantum channel and
//! dishonest versions of each party.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{
    decoy_mask, BasisDeclarer, BobPrivate, Choice, DecoyState, MessagePair, Preparation,
    ProtocolConfig, SequenceSlot, SlotRecord, SlotRole,
};
use crate::qsim::{
    bell_measure, make_bell, trace_distance, Basis, BellKind, DensityMatrix, PureState, NORM_TOL,
};
use crate::rng::SimRng;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

type Vec4 = [Complex64; 4];

/// How a measure-and-resend Alice re-prepares the qubits she intercepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ResendPolicy {
    /// Conclusive outcomes resend Bob's state; otherwise guess his basis and
    /// resend `|0⟩` or `|+⟩` at random.
    #[default]
    GuessBasis,
    /// Resend whatever state her measurement collapsed the qubit to.
    Collapsed,
    /// Conclusive outcomes resend Bob's state; otherwise a uniformly random
    /// state from `{|0⟩, |1⟩, |+⟩, |−⟩}`.
    UniformFour,
}

/// Which attack a run is subjected to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackScenario {
    InterceptResend,
    Entangling { params: UeParams },
    BobBellCheat,
    AliceMeasureResend { resend: ResendPolicy },
    AliceMeasureResendDummy { resend: ResendPolicy },
}

impl AttackScenario {
    pub fn name(&self) -> &'static str {
        match self {
            AttackScenario::InterceptResend => "intercept",
            AttackScenario::Entangling { .. } => "entangling",
            AttackScenario::BobBellCheat => "bell-cheat",
            AttackScenario::AliceMeasureResend { .. } => "alice",
            AttackScenario::AliceMeasureResendDummy { .. } => "alice-dummy",
        }
    }
}

/// Each in-flight qubit is measured in a uniformly random basis and replaced
/// by the collapsed state.
pub fn eve_intercept_resend<R: Rng + ?Sized>(slots: &mut [SequenceSlot], rng: &mut R) -> Result<()> {
    for slot in slots.iter_mut() {
        let basis = if rng.random::<bool>() { Basis::X } else { Basis::Z };
        slot.state = slot.state.measure(basis, 0, rng)?.1;
    }
    Ok(())
}

/// Eve's coupling of an in-flight qubit to her ancilla:
///
/// ```text
/// U(|0⟩|E⟩) = a|0⟩|e00⟩ + b|1⟩|e01⟩
/// U(|1⟩|E⟩) = c|0⟩|e10⟩ + d|1⟩|e11⟩
/// ```
///
/// with the ancilla living in a 4-dimensional space (two qubits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UeParamsFile", into = "UeParamsFile")]
pub struct UeParams {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub e00: Vec4,
    pub e01: Vec4,
    pub e10: Vec4,
    pub e11: Vec4,
}

/// Text form of [`UeParams`]: every complex number is a `[re, im]` pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UeParamsFile {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub d: [f64; 2],
    pub e00: [[f64; 2]; 4],
    pub e01: [[f64; 2]; 4],
    pub e10: [[f64; 2]; 4],
    pub e11: [[f64; 2]; 4],
}

fn from_pair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn to_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

impl TryFrom<UeParamsFile> for UeParams {
    type Error = Error;

    fn try_from(f: UeParamsFile) -> Result<Self> {
        let v = |x: [[f64; 2]; 4]| x.map(from_pair);
        UeParams {
            a: from_pair(f.a),
            b: from_pair(f.b),
            c: from_pair(f.c),
            d: from_pair(f.d),
            e00: v(f.e00),
            e01: v(f.e01),
            e10: v(f.e10),
            e11: v(f.e11),
        }
        .validated()
    }
}

impl From<UeParams> for UeParamsFile {
    fn from(p: UeParams) -> Self {
        let v = |x: Vec4| x.map(to_pair);
        UeParamsFile {
            a: to_pair(p.a),
            b: to_pair(p.b),
            c: to_pair(p.c),
            d: to_pair(p.d),
            e00: v(p.e00),
            e01: v(p.e01),
            e10: v(p.e10),
            e11: v(p.e11),
        }
    }
}

fn inner4(x: &Vec4, y: &Vec4) -> Complex64 {
    x.iter().zip(y).map(|(p, q)| p.conj() * q).sum()
}

fn norm4(x: &Vec4) -> f64 {
    inner4(x, x).re.sqrt()
}

fn comb(terms: &[(Complex64, &Vec4)]) -> Vec4 {
    let mut out = [ZERO; 4];
    for (coef, v) in terms {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += coef * x;
        }
    }
    out
}

fn outer(x: &Vec4, y: &Vec4, scale: f64) -> Vec<Complex64> {
    let mut m = vec![ZERO; 16];
    for r in 0..4 {
        for col in 0..4 {
            m[r * 4 + col] = scale * x[r] * y[col].conj();
        }
    }
    m
}

fn add_into(acc: &mut [Complex64], m: &[Complex64]) {
    for (a, b) in acc.iter_mut().zip(m) {
        *a += b;
    }
}

impl UeParams {
    /// The only undetectable coupling: `a = d = 1`, `b = c = 0`, `e00 = e11 = e`.
    pub fn constrained(e: Vec4) -> Result<Self> {
        UeParams {
            a: ONE,
            b: ZERO,
            c: ZERO,
            d: ONE,
            e00: e,
            e01: e,
            e10: e,
            e11: e,
        }
        .validated()
    }

    /// Splits the images `V|0⟩`, `V|1⟩` (8 amplitudes over qubit ⊗ ancilla,
    /// qubit first) into the branch coefficients and ancilla states.
    pub fn from_images(v0: &[Complex64; 8], v1: &[Complex64; 8]) -> Result<Self> {
        fn split(x: &[Complex64]) -> (Complex64, Vec4) {
            let v: Vec4 = [x[0], x[1], x[2], x[3]];
            let n = norm4(&v);
            if n < 1e-300 {
                (ZERO, [ONE, ZERO, ZERO, ZERO])
            } else {
                (Complex64::new(n, 0.0), v.map(|z| z / n))
            }
        }
        let (a, e00) = split(&v0[..4]);
        let (b, e01) = split(&v0[4..]);
        let (c, e10) = split(&v1[..4]);
        let (d, e11) = split(&v1[4..]);
        UeParams {
            a,
            b,
            c,
            d,
            e00,
            e01,
            e10,
            e11,
        }
        .validated()
    }

    /// `V|0⟩` and `V|1⟩` as 8-amplitude vectors, qubit index most significant.
    pub fn images(&self) -> ([Complex64; 8], [Complex64; 8]) {
        let mut v0 = [ZERO; 8];
        let mut v1 = [ZERO; 8];
        for k in 0..4 {
            v0[k] = self.a * self.e00[k];
            v0[4 + k] = self.b * self.e01[k];
            v1[k] = self.c * self.e10[k];
            v1[4 + k] = self.d * self.e11[k];
        }
        (v0, v1)
    }

    pub fn validated(self) -> Result<Self> {
        let bad = |what: String| Err(Error::InvalidUeParams(what));
        let n0 = self.a.norm_sqr() + self.b.norm_sqr();
        let n1 = self.c.norm_sqr() + self.d.norm_sqr();
        if (n0 - 1.0).abs() > NORM_TOL || (n1 - 1.0).abs() > NORM_TOL {
            return bad(format!("|a|²+|b|² = {n0}, |c|²+|d|² = {n1}"));
        }
        for (name, e) in [("e00", &self.e00), ("e01", &self.e01), ("e10", &self.e10), ("e11", &self.e11)] {
            let n = inner4(e, e).re;
            if !n.is_finite() || (n - 1.0).abs() > NORM_TOL {
                return bad(format!("{name} has squared norm {n}"));
            }
        }
        let cross = self.a.conj() * self.c * inner4(&self.e00, &self.e10)
            + self.b.conj() * self.d * inner4(&self.e01, &self.e11);
        if cross.norm() > NORM_TOL {
            return bad(format!("images of |0⟩ and |1⟩ overlap by {cross}"));
        }
        Ok(self)
    }

    /// Extends a single-qubit register with Eve's two-qubit ancilla.
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if state.n_qubits() != 1 {
            return Err(Error::TooManyQubits(state.n_qubits() + 2));
        }
        let psi = state.amplitudes();
        let (v0, v1) = self.images();
        let out: Vec<Complex64> = (0..8).map(|i| psi[0] * v0[i] + psi[1] * v1[i]).collect();
        PureState::new(&out)
    }

    pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R) -> Result<Self> {
        let mut g = || -> [Complex64; 8] {
            std::array::from_fn(|_| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
        };
        let (x, y) = (g(), g());
        let (v0, v1) = orthonormalize(&x, &y);
        Self::from_images(&v0, &v1)
    }
}

fn orthonormalize(x: &[Complex64; 8], y: &[Complex64; 8]) -> ([Complex64; 8], [Complex64; 8]) {
    let ip = |p: &[Complex64; 8], q: &[Complex64; 8]| -> Complex64 {
        p.iter().zip(q).map(|(s, t)| s.conj() * t).sum()
    };
    let nx = ip(x, x).re.sqrt();
    let u = x.map(|z| z / nx);
    let proj = ip(&u, y);
    let mut w = *y;
    for (wi, ui) in w.iter_mut().zip(&u) {
        *wi -= proj * ui;
    }
    let nw = ip(&w, &w).re.sqrt();
    (u, w.map(|z| z / nw))
}

fn random_unit4<R: Rng + ?Sized>(rng: &mut R) -> Vec4 {
    let v: Vec4 = std::array::from_fn(|_| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = norm4(&v);
    v.map(|z| z / n)
}

/// Draws coupling parameters for numerical sweeps, mixing generic isometries
/// with points on and near the zero-detection family `a·e00 = d·e11`,
/// `b = c = 0`. Near points sit at relative distance 1e-1, 1e-2 or 1e-3.
pub fn sample_ue_params<R: Rng + ?Sized>(rng: &mut R) -> Result<UeParams> {
    let class = rng.random_range(0..10);
    if class < 4 {
        return UeParams::random_isometry(rng);
    }
    let e = random_unit4(rng);
    if class == 4 {
        return UeParams::constrained(e);
    }
    let alpha = rng.random_range(0.0..2.0 * PI);
    let delta = rng.random_range(0.0..2.0 * PI);
    let a = Complex64::from_polar(1.0, alpha);
    let d = Complex64::from_polar(1.0, delta);
    let ratio = a / d;
    let on_family = UeParams {
        a,
        b: ZERO,
        c: ZERO,
        d,
        e00: e,
        e01: e,
        e10: e,
        e11: e.map(|z| ratio * z),
    }
    .validated()?;
    if class < 7 {
        return Ok(on_family);
    }
    let eps = [1e-1, 1e-2, 1e-3][rng.random_range(0..3)];
    let (c0, c1) = on_family.images();
    let (r0, r1) = UeParams::random_isometry(rng)?.images();
    let mix = |p: &[Complex64; 8], q: &[Complex64; 8]| -> [Complex64; 8] {
        std::array::from_fn(|i| (1.0 - eps) * p[i] + eps * q[i])
    };
    let (v0, v1) = orthonormalize(&mix(&c0, &r0), &mix(&c1, &r1));
    UeParams::from_images(&v0, &v1)
}

/// Probability that a uniformly drawn decoy, measured in its own basis after
/// the coupling, reads the wrong bit.
pub fn ue_detection_probability(p: &UeParams) -> f64 {
    let flip_zero = p.b.norm_sqr();
    let flip_one = p.c.norm_sqr();
    let norm_sqr = |v: Vec4| inner4(&v, &v).re;
    let flip_plus = 0.25 * norm_sqr(comb(&[(p.a, &p.e00), (-p.b, &p.e01), (p.c, &p.e10), (-p.d, &p.e11)]));
    let flip_minus = 0.25 * norm_sqr(comb(&[(p.a, &p.e00), (p.b, &p.e01), (-p.c, &p.e10), (-p.d, &p.e11)]));
    0.25 * (flip_zero + flip_one + flip_plus + flip_minus)
}

/// Trace distance between Eve's ancilla states when Bob sent `|0⟩` and when
/// he sent `|+⟩`.
pub fn ue_leakage(p: &UeParams) -> Result<f64> {
    let mut rho_zero = outer(&p.e00, &p.e00, p.a.norm_sqr());
    add_into(&mut rho_zero, &outer(&p.e01, &p.e01, p.b.norm_sqr()));
    let u = comb(&[(p.a, &p.e00), (p.c, &p.e10)]);
    let v = comb(&[(p.b, &p.e01), (p.d, &p.e11)]);
    let mut rho_plus = outer(&u, &u, 0.5);
    add_into(&mut rho_plus, &outer(&v, &v, 0.5));
    trace_distance(&DensityMatrix::new(4, rho_zero)?, &DensityMatrix::new(4, rho_plus)?)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EveRecord {
    pub attacked: Vec<usize>,
}

/// Couples every in-flight qubit to a fresh ancilla. Eve's ancillas stay in
/// each slot's register as qubits 1 and 2.
pub fn eve_entangling_attack(slots: &mut [SequenceSlot], params: &UeParams) -> Result<EveRecord> {
    let params = params.validated()?;
    let mut record = EveRecord::default();
    for slot in slots.iter_mut() {
        slot.state = params.apply(&slot.state)?;
        record.attacked.push(slot.tag);
    }
    Ok(record)
}

/// Step 1 for a Bell-cheating Bob: the layout of an honest sequence, but
/// every payload and loyalty slot carries one half of a fresh Φ⁺ whose
/// partner (qubit 1 of the slot register) Bob keeps.
pub fn bob_bell_cheat<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    rng: &mut R,
) -> (Vec<SequenceSlot>, BobPrivate) {
    let total = config.first_leg_len();
    let mask = decoy_mask(total, config.m, rng);
    let mut slots = Vec::with_capacity(total);
    let mut record = BobPrivate::default();
    let mut placed = 0;
    for (tag, is_decoy) in mask.into_iter().enumerate() {
        let (rec, state) = if is_decoy {
            let d = DecoyState::random(rng);
            (
                SlotRecord {
                    role: SlotRole::Decoy,
                    prep: Preparation::Decoy(d),
                },
                d.state(),
            )
        } else {
            let role = if placed < config.n {
                SlotRole::Payload
            } else {
                SlotRole::Loyalty
            };
            placed += 1;
            (
                SlotRecord {
                    role,
                    prep: Preparation::BellHalf,
                },
                make_bell(BellKind::PhiPlus),
            )
        };
        record.slots.push(rec);
        slots.push(SequenceSlot { tag, state });
    }
    (slots, record)
}

/// A cheating Bob's answer to loyalty queries: a uniformly random basis.
pub struct RandomDeclarer {
    rng: SimRng,
}

impl RandomDeclarer {
    pub fn new(rng: SimRng) -> Self {
        RandomDeclarer { rng }
    }
}

impl BasisDeclarer for RandomDeclarer {
    fn declare(&mut self, _tag: usize) -> Basis {
        if self.rng.random::<bool>() {
            Basis::X
        } else {
            Basis::Z
        }
    }
}

/// Dense-coding readout: a Bell measurement on the returned qubit and Bob's
/// kept partner names the Pauli gate Alice applied, hence both her bits.
pub fn bob_bell_cheat_readout(slot: &SequenceSlot) -> Result<MessagePair> {
    let (m0, m1) = match bell_measure(&slot.state, (0, 1))? {
        BellKind::PhiPlus => (0, 0),
        BellKind::PhiMinus => (0, 1),
        BellKind::PsiPlus => (1, 0),
        BellKind::PsiMinus => (1, 1),
    };
    Ok(MessagePair { m0, m1 })
}

/// Dishonest Alice measures each qubit in a random basis. Outcome `|1⟩` rules
/// out `|0⟩` and `|−⟩` rules out `|+⟩`, so those two outcomes reveal Bob's
/// choice; every other outcome is inconclusive. She then resends a qubit
/// according to `policy`.
pub fn alice_measure_resend<R: Rng + ?Sized>(
    slots: &mut [SequenceSlot],
    policy: ResendPolicy,
    rng: &mut R,
) -> Result<Vec<Option<Choice>>> {
    let mut guesses = Vec::with_capacity(slots.len());
    for slot in slots.iter_mut() {
        let basis = if rng.random::<bool>() { Basis::X } else { Basis::Z };
        let (bit, collapsed) = slot.state.measure(basis, 0, rng)?;
        let guess = match (basis, bit) {
            (Basis::Z, 1) => Some(Choice::X),
            (Basis::X, 1) => Some(Choice::Z),
            _ => None,
        };
        slot.state = match (policy, guess) {
            (ResendPolicy::Collapsed, _) => collapsed,
            (_, Some(choice)) => choice.prepared_state(),
            (ResendPolicy::GuessBasis, None) => Choice::random(rng).prepared_state(),
            (ResendPolicy::UniformFour, None) => DecoyState::random(rng).state(),
        };
        guesses.push(guess);
    }
    Ok(guesses)
}
