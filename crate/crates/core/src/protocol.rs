//! Honest-party steps of the oblivious transfer.
//!
//! Bob prepares `N + M + 2K` qubits: `N` payload qubits in `|0⟩` (choice 0)
//! or `|+⟩` (choice 1), `2K` loyalty qubits in the same two states and `M`
//! decoys. Alice checks the channel on the decoys, measures `K` randomly
//! chosen qubits in the bases Bob declares for them, reorders the rest at
//! Bob's request, and encodes her bit pair on each of the first `N` slots with
//! a Pauli gate. Bob reads one bit per slot by measuring in the basis he
//! prepared: a Z slot yields `m0`, an X slot yields `m1`.
//!
//! A slot's register always carries the transmitted qubit as qubit 0; any
//! further qubits belong to whoever is entangled with it (a cheating Bob's
//! kept Bell half, or an eavesdropper's ancilla).

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{Basis, Gate, PureState};

pub use crate::session::{run_honest, Transcript};

/// Bob's choice bit `j`: `Z` prepares `|0⟩` (j = 0), `X` prepares `|+⟩` (j = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    Z,
    X,
}

impl Choice {
    pub fn from_bit(j: u8) -> Result<Self> {
        match j {
            0 => Ok(Choice::Z),
            1 => Ok(Choice::X),
            b => Err(Error::InvalidBit(b)),
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Choice::Z => 0,
            Choice::X => 1,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            Choice::Z => Basis::Z,
            Choice::X => Basis::X,
        }
    }

    pub fn prepared_state(self) -> PureState {
        match self {
            Choice::Z => PureState::zero(),
            Choice::X => PureState::plus(),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Choice::X
        } else {
            Choice::Z
        }
    }
}

/// Alice's two secret bits for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MessagePair {
    pub m0: u8,
    pub m1: u8,
}

impl MessagePair {
    pub fn new(m0: u8, m1: u8) -> Result<Self> {
        for b in [m0, m1] {
            if b > 1 {
                return Err(Error::InvalidBit(b));
            }
        }
        Ok(MessagePair { m0, m1 })
    }

    /// The bit a receiver with choice `j` is entitled to.
    pub fn chosen(self, choice: Choice) -> u8 {
        match choice {
            Choice::Z => self.m0,
            Choice::X => self.m1,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        MessagePair {
            m0: rng.random_range(0..2),
            m1: rng.random_range(0..2),
        }
    }
}

/// Pauli encoding of a bit pair: 00→I, 01→Z, 10→X, 11→Y.
pub struct PauliCode;

impl PauliCode {
    pub fn encode(pair: MessagePair) -> Gate {
        match (pair.m0, pair.m1) {
            (0, 0) => Gate::I,
            (0, _) => Gate::Z,
            (_, 0) => Gate::X,
            _ => Gate::Y,
        }
    }

    pub fn decode(gate: Gate) -> Option<MessagePair> {
        let (m0, m1) = match gate {
            Gate::I => (0, 0),
            Gate::Z => (0, 1),
            Gate::X => (1, 0),
            Gate::Y => (1, 1),
            Gate::H => return None,
        };
        Some(MessagePair { m0, m1 })
    }
}

/// The four channel-checking states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoyState {
    Zero,
    One,
    Plus,
    Minus,
}

impl DecoyState {
    pub const ALL: [DecoyState; 4] = [
        DecoyState::Zero,
        DecoyState::One,
        DecoyState::Plus,
        DecoyState::Minus,
    ];

    pub fn basis(self) -> Basis {
        match self {
            DecoyState::Zero | DecoyState::One => Basis::Z,
            DecoyState::Plus | DecoyState::Minus => Basis::X,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            DecoyState::Zero | DecoyState::Plus => 0,
            DecoyState::One | DecoyState::Minus => 1,
        }
    }

    pub fn state(self) -> PureState {
        match self {
            DecoyState::Zero => PureState::zero(),
            DecoyState::One => PureState::one(),
            DecoyState::Plus => PureState::plus(),
            DecoyState::Minus => PureState::minus(),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.random_range(0..4)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotRole {
    Payload,
    Loyalty,
    Decoy,
}

/// What Bob put into one as-sent position. Never shown to Alice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preparation {
    Choice(Choice),
    Decoy(DecoyState),
    /// Half of a Φ⁺ pair whose partner Bob kept.
    BellHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub role: SlotRole,
    pub prep: Preparation,
}

/// Bob's private bookkeeping, indexed by as-sent position on the first leg.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BobPrivate {
    pub slots: Vec<SlotRecord>,
}

impl BobPrivate {
    pub fn decoy_publication(&self) -> Vec<(usize, DecoyState)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(pos, r)| match r.prep {
                Preparation::Decoy(d) => Some((pos, d)),
                _ => None,
            })
            .collect()
    }

    pub fn choice_of(&self, tag: usize) -> Option<Choice> {
        match self.slots.get(tag)?.prep {
            Preparation::Choice(c) => Some(c),
            _ => None,
        }
    }
}

/// One qubit position in flight. `tag` is the preparer's label for it: the
/// as-sent index on the leg where it was created.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSlot {
    pub tag: usize,
    pub state: PureState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Proceed,
    Abort,
}

/// Parameters of one run. `n` payload slots, `m` decoys from Bob, `k` loyalty
/// tests (with `2k` loyalty slots prepared), `m2` decoys from Alice and the
/// abort threshold `tau` on observed error rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub m2: usize,
    pub tau: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            n: 1,
            m: 0,
            k: 0,
            m2: 0,
            tau: 0.0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::InvalidConfig(format!("tau {} not in [0, 1)", self.tau)));
        }
        Ok(())
    }

    pub fn first_leg_len(&self) -> usize {
        self.n + self.m + 2 * self.k
    }
}

/// Choice string Bob prepares: the `n` intended choices followed by `k`
/// `(Z, X)` loyalty pairs, so any `k` tests leave enough spares of both kinds.
pub fn loyalty_padded_choices(intended: &[Choice], k: usize) -> Vec<Choice> {
    let mut out = intended.to_vec();
    for _ in 0..k {
        out.push(Choice::Z);
        out.push(Choice::X);
    }
    out
}

/// Picks `count` decoy positions uniformly among `total` and returns a mask.
pub(crate) fn decoy_mask<R: Rng + ?Sized>(total: usize, count: usize, rng: &mut R) -> Vec<bool> {
    let mut mask = vec![false; total];
    for p in index::sample(rng, total, count) {
        mask[p] = true;
    }
    mask
}

/// Step 1. `choices` holds the `n` payload choices followed by the `2K`
/// loyalty choices; `m` decoys go to uniformly random positions.
pub fn bob_prepare_sequence<R: Rng + ?Sized>(
    choices: &[Choice],
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<(Vec<SequenceSlot>, BobPrivate)> {
    if choices.len() < n || !(choices.len() - n).is_multiple_of(2) {
        return Err(Error::LengthMismatch {
            expected: n + 2 * (choices.len().saturating_sub(n) / 2),
            got: choices.len(),
        });
    }
    let total = choices.len() + m;
    let mask = decoy_mask(total, m, rng);
    let mut next = choices.iter().enumerate();
    let mut slots = Vec::with_capacity(total);
    let mut record = BobPrivate::default();
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
            let (i, &c) = next.next().expect("mask leaves exactly choices.len() slots");
            let role = if i < n {
                SlotRole::Payload
            } else {
                SlotRole::Loyalty
            };
            (
                SlotRecord {
                    role,
                    prep: Preparation::Choice(c),
                },
                c.prepared_state(),
            )
        };
        record.slots.push(rec);
        slots.push(SequenceSlot { tag, state });
    }
    Ok((slots, record))
}

/// Outcome of a decoy check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelCheck {
    pub published: Vec<(usize, DecoyState)>,
    pub errors: usize,
    pub error_rate: f64,
    pub verdict: Verdict,
}

fn check_decoys<R: Rng + ?Sized>(
    slots: &mut Vec<SequenceSlot>,
    published: &[(usize, DecoyState)],
    tau: f64,
    rng: &mut R,
) -> Result<ChannelCheck> {
    let len = slots.len();
    let mut seen = vec![false; len];
    for &(pos, _) in published {
        if pos >= len {
            return Err(Error::PositionOutOfRange { position: pos, len });
        }
        if std::mem::replace(&mut seen[pos], true) {
            return Err(Error::MalformedPublication(format!(
                "position {pos} published twice"
            )));
        }
    }
    let mut errors = 0;
    for &(pos, decoy) in published {
        let (bit, _) = slots[pos].state.measure(decoy.basis(), 0, rng)?;
        if bit != decoy.bit() {
            errors += 1;
        }
    }
    let mut pos = 0;
    slots.retain(|_| {
        let keep = !seen[pos];
        pos += 1;
        keep
    });
    let error_rate = if published.is_empty() {
        0.0
    } else {
        errors as f64 / published.len() as f64
    };
    Ok(ChannelCheck {
        published: published.to_vec(),
        errors,
        error_rate,
        verdict: if error_rate > tau {
            Verdict::Abort
        } else {
            Verdict::Proceed
        },
    })
}

/// Step 2, first half: Alice measures every published decoy in its published
/// basis and removes it from the sequence.
pub fn alice_check_channel<R: Rng + ?Sized>(
    slots: &mut Vec<SequenceSlot>,
    published: &[(usize, DecoyState)],
    tau: f64,
    rng: &mut R,
) -> Result<ChannelCheck> {
    check_decoys(slots, published, tau, rng)
}

/// Step 6, first half: Bob's check of Alice's decoys.
pub fn bob_check_channel<R: Rng + ?Sized>(
    slots: &mut Vec<SequenceSlot>,
    published: &[(usize, DecoyState)],
    tau: f64,
    rng: &mut R,
) -> Result<ChannelCheck> {
    check_decoys(slots, published, tau, rng)
}

/// Answers Alice's "which basis did you prepare here?" during loyalty tests.
pub trait BasisDeclarer {
    fn declare(&mut self, tag: usize) -> Basis;
}

impl BasisDeclarer for &BobPrivate {
    fn declare(&mut self, tag: usize) -> Basis {
        self.choice_of(tag).map(Choice::basis).unwrap_or(Basis::Z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoyaltyTest {
    pub positions: Vec<usize>,
    pub bases: Vec<Basis>,
    pub outcomes: Vec<u8>,
    pub failures: usize,
    pub failure_rate: f64,
    pub verdict: Verdict,
}

/// Positions Alice asks about: `k` distinct indices, sorted.
pub fn alice_pick_loyalty_positions<R: Rng + ?Sized>(
    len: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k > len {
        return Err(Error::TooManyTests {
            requested: k,
            available: len,
        });
    }
    let mut positions = index::sample(rng, len, k).into_vec();
    positions.sort_unstable();
    Ok(positions)
}

/// Step 2, second half, with the tested positions already chosen. Each
/// tested slot is measured in the declared basis; outcome 1 (`|1⟩` or `|−⟩`)
/// counts as a failure. Tested slots are consumed.
pub fn alice_test_positions<R: Rng + ?Sized, D: BasisDeclarer>(
    slots: &mut Vec<SequenceSlot>,
    positions: &[usize],
    bob: &mut D,
    tau: f64,
    rng: &mut R,
) -> Result<LoyaltyTest> {
    let len = slots.len();
    let mut tested = vec![false; len];
    for &p in positions {
        if p >= len {
            return Err(Error::PositionOutOfRange { position: p, len });
        }
        if std::mem::replace(&mut tested[p], true) {
            return Err(Error::MalformedPublication(format!("position {p} tested twice")));
        }
    }
    let mut bases = Vec::with_capacity(positions.len());
    let mut outcomes = Vec::with_capacity(positions.len());
    for &p in positions {
        let basis = bob.declare(slots[p].tag);
        let (bit, _) = slots[p].state.measure(basis, 0, rng)?;
        bases.push(basis);
        outcomes.push(bit);
    }
    let mut i = 0;
    slots.retain(|_| {
        let keep = !tested[i];
        i += 1;
        keep
    });
    let failures = outcomes.iter().filter(|&&b| b == 1).count();
    let failure_rate = if positions.is_empty() {
        0.0
    } else {
        failures as f64 / positions.len() as f64
    };
    Ok(LoyaltyTest {
        positions: positions.to_vec(),
        bases,
        outcomes,
        failures,
        failure_rate,
        verdict: if failure_rate > tau {
            Verdict::Abort
        } else {
            Verdict::Proceed
        },
    })
}

/// Step 2, second half: `k` uniformly chosen positions are tested.
pub fn alice_test_loyalty<R: Rng + ?Sized, D: BasisDeclarer>(
    slots: &mut Vec<SequenceSlot>,
    k: usize,
    bob: &mut D,
    tau: f64,
    rng: &mut R,
) -> Result<LoyaltyTest> {
    let positions = alice_pick_loyalty_positions(slots.len(), k, rng)?;
    alice_test_positions(slots, &positions, bob, tau, rng)
}

/// Step 3, Bob's side: a permutation of the surviving slots whose first `n`
/// entries carry `intended`. A payload slot keeps its own place when it
/// survived the tests; otherwise a spare loyalty slot with the same choice
/// fills in. `perm[new] = old`.
pub fn bob_plan_reorder(
    remaining: &[SequenceSlot],
    record: &BobPrivate,
    intended: &[Choice],
) -> Result<Vec<usize>> {
    let mut used = vec![false; remaining.len()];
    let mut perm = Vec::with_capacity(remaining.len());
    let payload_tags: Vec<usize> = record
        .slots
        .iter()
        .enumerate()
        .filter(|(_, r)| r.role == SlotRole::Payload)
        .map(|(tag, _)| tag)
        .collect();
    if payload_tags.len() != intended.len() {
        return Err(Error::LengthMismatch {
            expected: payload_tags.len(),
            got: intended.len(),
        });
    }
    for (i, &want) in intended.iter().enumerate() {
        let own = remaining
            .iter()
            .position(|s| s.tag == payload_tags[i])
            .filter(|&p| !used[p] && record.choice_of(remaining[p].tag) == Some(want));
        let spare = || {
            let matches = |p: &usize, role: SlotRole| {
                !used[*p]
                    && record.slots[remaining[*p].tag].role == role
                    && record.choice_of(remaining[*p].tag) == Some(want)
            };
            (0..remaining.len())
                .find(|p| matches(p, SlotRole::Loyalty))
        };
        let pick = own.or_else(spare).ok_or_else(|| {
            Error::ReorderImpossible(format!("no surviving slot with choice {want:?} for position {i}"))
        })?;
        used[pick] = true;
        perm.push(pick);
    }
    perm.extend((0..remaining.len()).filter(|&p| !used[p]));
    Ok(perm)
}

/// Step 3, Alice's side: apply `perm` and keep the first `n` slots.
pub fn bob_reorder(slots: &[SequenceSlot], perm: &[usize], n: usize) -> Result<Vec<SequenceSlot>> {
    let len = slots.len();
    let mut seen = vec![false; len];
    if perm.len() != len {
        return Err(Error::NotAPermutation(len));
    }
    for &p in perm {
        if p >= len || std::mem::replace(&mut seen[p], true) {
            return Err(Error::NotAPermutation(len));
        }
    }
    if n > len {
        return Err(Error::LengthMismatch {
            expected: n,
            got: len,
        });
    }
    Ok(perm[..n].iter().map(|&p| slots[p]).collect())
}

/// Step 4: slot `i` gets `PauliCode(pairs[i])` on its transmitted qubit.
pub fn alice_encode(slots: &mut [SequenceSlot], pairs: &[MessagePair]) -> Result<()> {
    if slots.len() != pairs.len() {
        return Err(Error::LengthMismatch {
            expected: slots.len(),
            got: pairs.len(),
        });
    }
    for (slot, &pair) in slots.iter_mut().zip(pairs) {
        slot.state = slot.state.apply_gate(PauliCode::encode(pair), 0)?;
    }
    Ok(())
}

/// Alice's record of the decoys she inserted, by as-sent position on the
/// second leg.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AliceDecoys {
    pub published: Vec<(usize, DecoyState)>,
}

/// Step 5: `m2` decoys at uniformly random positions among `len + m2`.
pub fn alice_insert_decoys<R: Rng + ?Sized>(
    slots: Vec<SequenceSlot>,
    m2: usize,
    rng: &mut R,
) -> (Vec<SequenceSlot>, AliceDecoys) {
    let total = slots.len() + m2;
    let mask = decoy_mask(total, m2, rng);
    let mut payload = slots.into_iter();
    let mut out = Vec::with_capacity(total);
    let mut record = AliceDecoys::default();
    for (pos, is_decoy) in mask.into_iter().enumerate() {
        if is_decoy {
            let d = DecoyState::random(rng);
            record.published.push((pos, d));
            out.push(SequenceSlot {
                tag: pos,
                state: d.state(),
            });
        } else {
            out.push(payload.next().expect("mask leaves exactly len slots"));
        }
    }
    (out, record)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub check: ChannelCheck,
    pub bases: Vec<Basis>,
    pub bits: Vec<u8>,
}

/// Step 6: check Alice's decoys, then measure each remaining slot in the basis
/// Bob prepared for it. Bits are empty when the check aborts.
pub fn bob_check_and_decode<R: Rng + ?Sized>(
    mut slots: Vec<SequenceSlot>,
    publication: &[(usize, DecoyState)],
    record: &BobPrivate,
    tau: f64,
    rng: &mut R,
) -> Result<Decoded> {
    let check = check_decoys(&mut slots, publication, tau, rng)?;
    if check.verdict == Verdict::Abort {
        return Ok(Decoded {
            check,
            bases: Vec::new(),
            bits: Vec::new(),
        });
    }
    let mut bases = Vec::with_capacity(slots.len());
    let mut bits = Vec::with_capacity(slots.len());
    for slot in &slots {
        let choice = record.choice_of(slot.tag).ok_or_else(|| {
            Error::MalformedPublication(format!("slot {} is not one of Bob's choice slots", slot.tag))
        })?;
        let (bit, _) = slot.state.measure(choice.basis(), 0, rng)?;
        bases.push(choice.basis());
        bits.push(bit);
    }
    Ok(Decoded { check, bases, bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{equal_up_to_global_phase, DEFAULT_PHASE_TOL};
    use crate::rng::stream_rng;

    fn same(a: &PureState, b: &PureState) -> bool {
        equal_up_to_global_phase(a, b, DEFAULT_PHASE_TOL).unwrap()
    }

    #[test]
    fn pauli_code_is_bijective() {
        let mut gates = Vec::new();
        for m0 in 0..2 {
            for m1 in 0..2 {
                let pair = MessagePair::new(m0, m1).unwrap();
                let g = PauliCode::encode(pair);
                assert_eq!(PauliCode::decode(g), Some(pair));
                gates.push(g);
            }
        }
        assert_eq!(gates, vec![Gate::I, Gate::Z, Gate::X, Gate::Y]);
        assert_eq!(PauliCode::decode(Gate::H), None);
        assert_eq!(MessagePair::new(2, 0), Err(Error::InvalidBit(2)));
    }

    #[test]
    fn worked_example_preparation() {
        let mut rng = stream_rng(0, 0);
        let choices = [Choice::Z, Choice::X, Choice::Z, Choice::X];
        let (slots, record) = bob_prepare_sequence(&choices, 2, 0, &mut rng).unwrap();
        let expected = [
            PureState::zero(),
            PureState::plus(),
            PureState::zero(),
            PureState::plus(),
        ];
        for (s, e) in slots.iter().zip(&expected) {
            assert_eq!(s.state, *e);
        }
        let roles: Vec<SlotRole> = record.slots.iter().map(|r| r.role).collect();
        assert_eq!(
            roles,
            [SlotRole::Payload, SlotRole::Payload, SlotRole::Loyalty, SlotRole::Loyalty]
        );
    }

    #[test]
    fn prepared_length_and_states() {
        let mut rng = stream_rng(1, 0);
        let choices = loyalty_padded_choices(&[Choice::X, Choice::Z, Choice::X], 2);
        let (slots, record) = bob_prepare_sequence(&choices, 3, 5, &mut rng).unwrap();
        assert_eq!(slots.len(), 12);
        assert_eq!(record.decoy_publication().len(), 5);
        for (slot, rec) in slots.iter().zip(&record.slots) {
            if let Preparation::Choice(c) = rec.prep {
                assert!(slot.state == PureState::zero() || slot.state == PureState::plus());
                assert_eq!(slot.state, c.prepared_state());
            }
        }
    }

    #[test]
    fn prepare_rejects_odd_loyalty_count() {
        let mut rng = stream_rng(1, 0);
        let r = bob_prepare_sequence(&[Choice::Z, Choice::X, Choice::Z], 2, 0, &mut rng);
        assert!(matches!(r, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn clean_channel_has_no_errors() {
        for seed in 0..20 {
            let mut rng = stream_rng(seed, 0);
            let choices = loyalty_padded_choices(&[Choice::Z; 4], 1);
            let (mut slots, record) = bob_prepare_sequence(&choices, 4, 8, &mut rng).unwrap();
            let check =
                alice_check_channel(&mut slots, &record.decoy_publication(), 0.0, &mut rng).unwrap();
            assert_eq!(check.errors, 0);
            assert_eq!(check.verdict, Verdict::Proceed);
            assert_eq!(slots.len(), 6);
        }
    }

    #[test]
    fn empty_publication_proceeds() {
        let mut rng = stream_rng(2, 0);
        let mut slots = vec![SequenceSlot {
            tag: 0,
            state: PureState::one(),
        }];
        let check = alice_check_channel(&mut slots, &[], 0.0, &mut rng).unwrap();
        assert_eq!(check.error_rate, 0.0);
        assert_eq!(check.verdict, Verdict::Proceed);
    }

    #[test]
    fn publication_out_of_range() {
        let mut rng = stream_rng(2, 0);
        let mut slots = vec![SequenceSlot {
            tag: 0,
            state: PureState::one(),
        }];
        let r = alice_check_channel(&mut slots, &[(3, DecoyState::One)], 0.0, &mut rng);
        assert_eq!(r, Err(Error::PositionOutOfRange { position: 3, len: 1 }));
        let r = alice_check_channel(
            &mut slots,
            &[(0, DecoyState::One), (0, DecoyState::One)],
            0.0,
            &mut rng,
        );
        assert!(matches!(r, Err(Error::MalformedPublication(_))));
    }

    #[test]
    fn wrong_decoy_counts_as_error() {
        let mut rng = stream_rng(3, 0);
        let mut slots = vec![
            SequenceSlot { tag: 0, state: PureState::one() },
            SequenceSlot { tag: 1, state: PureState::plus() },
        ];
        let check = alice_check_channel(
            &mut slots,
            &[(0, DecoyState::Zero), (1, DecoyState::Plus)],
            0.4,
            &mut rng,
        )
        .unwrap();
        assert_eq!(check.errors, 1);
        assert_eq!(check.error_rate, 0.5);
        assert_eq!(check.verdict, Verdict::Abort);
        assert!(slots.is_empty());
    }

    #[test]
    fn honest_loyalty_always_passes() {
        for seed in 0..50 {
            let mut rng = stream_rng(seed, 1);
            let choices = loyalty_padded_choices(&[Choice::X, Choice::Z, Choice::Z], 3);
            let (mut slots, record) = bob_prepare_sequence(&choices, 3, 0, &mut rng).unwrap();
            let test = alice_test_loyalty(&mut slots, 3, &mut &record, 0.0, &mut rng).unwrap();
            assert_eq!(test.failures, 0);
            assert_eq!(test.verdict, Verdict::Proceed);
            assert_eq!(slots.len(), 6);
        }
    }

    #[test]
    fn zero_tests_pass_and_too_many_rejected() {
        let mut rng = stream_rng(4, 0);
        let (mut slots, record) =
            bob_prepare_sequence(&[Choice::Z, Choice::Z, Choice::X], 1, 0, &mut rng).unwrap();
        let t = alice_test_loyalty(&mut slots, 0, &mut &record, 0.0, &mut rng).unwrap();
        assert_eq!(t.verdict, Verdict::Proceed);
        assert_eq!(slots.len(), 3);
        let r = alice_test_loyalty(&mut slots, 4, &mut &record, 0.0, &mut rng);
        assert_eq!(r, Err(Error::TooManyTests { requested: 4, available: 3 }));
    }

    #[test]
    fn reorder_backfills_with_matching_loyalty_slot() {
        let mut rng = stream_rng(5, 0);
        let intended = [Choice::X, Choice::Z];
        let choices = loyalty_padded_choices(&intended, 1);
        let (mut slots, record) = bob_prepare_sequence(&choices, 2, 0, &mut rng).unwrap();
        // Test the first payload slot (|+⟩) so the X loyalty slot must replace it.
        alice_test_positions(&mut slots, &[0], &mut &record, 0.0, &mut rng).unwrap();
        let perm = bob_plan_reorder(&slots, &record, &intended).unwrap();
        let out = bob_reorder(&slots, &perm, 2).unwrap();
        let got: Vec<Choice> = out.iter().map(|s| record.choice_of(s.tag).unwrap()).collect();
        assert_eq!(got, intended);
        assert_eq!(out[0].tag, 3);
        assert_eq!(out[1].tag, 1);
    }

    #[test]
    fn identity_reorder_keeps_choices() {
        let mut rng = stream_rng(6, 0);
        let intended = [Choice::Z, Choice::X, Choice::X];
        let (slots, record) =
            bob_prepare_sequence(&loyalty_padded_choices(&intended, 1), 3, 0, &mut rng).unwrap();
        let perm = bob_plan_reorder(&slots, &record, &intended).unwrap();
        assert_eq!(perm, vec![0, 1, 2, 3, 4]);
        let out = bob_reorder(&slots, &perm, 3).unwrap();
        assert_eq!(out, slots[..3].to_vec());
    }

    #[test]
    fn reorder_rejects_non_permutations() {
        let slots = vec![
            SequenceSlot { tag: 0, state: PureState::zero() },
            SequenceSlot { tag: 1, state: PureState::plus() },
        ];
        assert_eq!(bob_reorder(&slots, &[0, 0], 1), Err(Error::NotAPermutation(2)));
        assert_eq!(bob_reorder(&slots, &[0], 1), Err(Error::NotAPermutation(2)));
        assert_eq!(bob_reorder(&slots, &[0, 2], 1), Err(Error::NotAPermutation(2)));
    }

    #[test]
    fn encode_examples() {
        let mut slots = vec![
            SequenceSlot { tag: 0, state: PureState::plus() },
            SequenceSlot { tag: 1, state: PureState::zero() },
            SequenceSlot { tag: 2, state: PureState::minus() },
        ];
        let pairs = [
            MessagePair::new(0, 1).unwrap(),
            MessagePair::new(1, 0).unwrap(),
            MessagePair::new(0, 0).unwrap(),
        ];
        alice_encode(&mut slots, &pairs).unwrap();
        assert!(same(&slots[0].state, &PureState::minus()));
        assert!(same(&slots[1].state, &PureState::one()));
        assert_eq!(slots[2].state, PureState::minus());
        assert_eq!(
            alice_encode(&mut slots, &pairs[..2]),
            Err(Error::LengthMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn insert_decoys_lengths() {
        let mut rng = stream_rng(7, 0);
        let slots = vec![SequenceSlot { tag: 0, state: PureState::zero() }; 3];
        let (out, rec) = alice_insert_decoys(slots.clone(), 50, &mut rng);
        assert_eq!(out.len(), 53);
        assert_eq!(rec.published.len(), 50);
        let (same_slots, rec) = alice_insert_decoys(slots.clone(), 0, &mut rng);
        assert_eq!(same_slots, slots);
        assert!(rec.published.is_empty());
    }

    #[test]
    fn decoys_are_uniform() {
        // Chi-square goodness of fit against uniform over four states;
        // 16.266 is the 0.999 quantile of chi-square with 3 degrees of freedom.
        let mut rng = stream_rng(8, 0);
        let mut counts = [0usize; 4];
        for _ in 0..2000 {
            let (_, rec) = alice_insert_decoys(Vec::new(), 10, &mut rng);
            for (_, d) in rec.published {
                counts[DecoyState::ALL.iter().position(|&x| x == d).unwrap()] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        let expected = total as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 16.266, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn decode_reads_chosen_bits() {
        let mut rng = stream_rng(9, 0);
        let record = BobPrivate {
            slots: vec![
                SlotRecord { role: SlotRole::Payload, prep: Preparation::Choice(Choice::X) },
                SlotRecord { role: SlotRole::Payload, prep: Preparation::Choice(Choice::Z) },
                SlotRecord { role: SlotRole::Payload, prep: Preparation::Choice(Choice::Z) },
            ],
        };
        let slots = vec![
            SequenceSlot { tag: 0, state: PureState::minus() },
            SequenceSlot { tag: 1, state: PureState::one() },
            SequenceSlot { tag: 2, state: PureState::zero() },
        ];
        let d = bob_check_and_decode(slots, &[], &record, 0.0, &mut rng).unwrap();
        assert_eq!(d.bits, vec![1, 1, 0]);
        assert_eq!(d.bases, vec![Basis::X, Basis::Z, Basis::Z]);
    }
}
