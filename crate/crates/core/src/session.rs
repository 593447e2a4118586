//! A complete run of the transfer, optionally under attack, and its transcript.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    alice_measure_resend, bob_bell_cheat, bob_bell_cheat_readout, eve_entangling_attack,
    eve_intercept_resend, AttackScenario, RandomDeclarer,
};
use crate::error::{Error, Result};
use crate::protocol::{
    alice_check_channel, alice_encode, alice_insert_decoys, alice_test_loyalty,
    bob_check_and_decode, bob_check_channel, bob_plan_reorder, bob_prepare_sequence, bob_reorder,
    loyalty_padded_choices, ChannelCheck, Choice, LoyaltyTest, MessagePair, ProtocolConfig,
    Verdict,
};
use crate::rng::{input_rng, session_rng, stream_rng};

/// Written into every transcript line; replay refuses other versions.
pub const TRANSCRIPT_VERSION: &str = concat!("qotsim-transcript/1 (", env!("CARGO_PKG_VERSION"), ")");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ChannelToAlice,
    Loyalty,
    ChannelToBob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed,
    Aborted { phase: Phase },
}

/// Everything observable about one run. Serialized as one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub version: String,
    pub seed: u64,
    pub stream: u64,
    pub config: ProtocolConfig,
    pub scenario: Option<AttackScenario>,
    pub choices: Vec<Choice>,
    pub pairs: Vec<MessagePair>,
    pub to_alice: Option<ChannelCheck>,
    pub loyalty: Option<LoyaltyTest>,
    pub permutation: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alice_guesses: Vec<Option<Choice>>,
    pub to_bob: Option<ChannelCheck>,
    pub decoded: Vec<u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stolen: Vec<MessagePair>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dummy: Vec<u8>,
    pub qubits_prepared: usize,
    pub outcome: RunOutcome,
}

impl Transcript {
    pub fn aborted(&self) -> bool {
        matches!(self.outcome, RunOutcome::Aborted { .. })
    }

    /// Slots whose decoded bit differs from the bit Bob chose.
    pub fn decode_errors(&self) -> usize {
        self.decoded
            .iter()
            .zip(self.pairs.iter().zip(&self.choices))
            .filter(|(&bit, (pair, &choice))| bit != pair.chosen(choice))
            .count()
    }

    pub fn dummy_errors(&self) -> usize {
        self.dummy
            .iter()
            .zip(self.pairs.iter().zip(&self.choices))
            .filter(|(&bit, (pair, &choice))| bit != pair.chosen(choice))
            .count()
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }

    pub fn from_line(line: &str, line_no: usize) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| Error::CorruptTranscript {
                line: line_no,
                reason: e.to_string(),
            })?;
        match value.get("version").and_then(|v| v.as_str()) {
            Some(v) if v == TRANSCRIPT_VERSION => {}
            Some(v) => {
                return Err(Error::VersionMismatch {
                    line: line_no,
                    found: v.to_string(),
                    expected: TRANSCRIPT_VERSION.to_string(),
                })
            }
            None => {
                return Err(Error::CorruptTranscript {
                    line: line_no,
                    reason: "missing version".into(),
                })
            }
        }
        serde_json::from_value(value).map_err(|e| Error::CorruptTranscript {
            line: line_no,
            reason: e.to_string(),
        })
    }
}

/// Identifies a run: the seed and stream of its random generator, the
/// protocol parameters and the attack, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub seed: u64,
    pub stream: u64,
    pub config: ProtocolConfig,
    pub scenario: Option<AttackScenario>,
}

/// Draws uniform choices and message pairs for trial `stream`.
pub fn draw_inputs(seed: u64, stream: u64, n: usize) -> (Vec<Choice>, Vec<MessagePair>) {
    let mut rng = input_rng(seed, stream);
    let choices = (0..n).map(|_| Choice::random(&mut rng)).collect();
    let pairs = (0..n).map(|_| MessagePair::random(&mut rng)).collect();
    (choices, pairs)
}

/// One run with inputs drawn from the trial's input stream.
pub fn run_trial(spec: &RunSpec) -> Result<Transcript> {
    let (choices, pairs) = draw_inputs(spec.seed, spec.stream, spec.config.n);
    run_session(spec, &choices, &pairs)
}

/// Honest parties, no eavesdropper.
pub fn run_honest(
    config: &ProtocolConfig,
    choices: &[Choice],
    pairs: &[MessagePair],
    seed: u64,
) -> Result<Transcript> {
    let spec = RunSpec {
        seed,
        stream: 0,
        config: *config,
        scenario: None,
    };
    run_session(&spec, choices, pairs)
}

/// Re-executes a run from what its transcript recorded.
pub fn replay(t: &Transcript) -> Result<Transcript> {
    let spec = RunSpec {
        seed: t.seed,
        stream: t.stream,
        config: t.config,
        scenario: t.scenario,
    };
    run_session(&spec, &t.choices, &t.pairs)
}

/// Re-executes the run stored on `line` and compares the result byte for
/// byte. Returns the path of the first differing field, or `None` when the
/// line reproduces exactly.
pub fn verify_line(line: &str, line_no: usize) -> Result<Option<String>> {
    let stored = Transcript::from_line(line, line_no)?;
    let again = replay(&stored)?.to_line();
    if again == line {
        return Ok(None);
    }
    let a: serde_json::Value = serde_json::from_str(line).expect("parsed above");
    let b: serde_json::Value = serde_json::from_str(&again).expect("just serialized");
    Ok(Some(first_divergence(&a, &b, String::new()).unwrap_or_else(|| "formatting".into())))
}

fn first_divergence(a: &serde_json::Value, b: &serde_json::Value, path: String) -> Option<String> {
    use serde_json::Value;
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, v) in x {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match y.get(k) {
                    Some(w) => {
                        if let Some(p) = first_divergence(v, w, sub) {
                            return Some(p);
                        }
                    }
                    None => return Some(sub),
                }
            }
            y.keys().find(|k| !x.contains_key(*k)).map(|k| {
                if path.is_empty() { k.clone() } else { format!("{path}.{k}") }
            })
        }
        (Value::Array(x), Value::Array(y)) => {
            for (i, (v, w)) in x.iter().zip(y).enumerate() {
                if let Some(p) = first_divergence(v, w, format!("{path}[{i}]")) {
                    return Some(p);
                }
            }
            (x.len() != y.len()).then(|| format!("{path}[{}]", x.len().min(y.len())))
        }
        _ => (a != b).then_some(path),
    }
}

pub fn run_session(spec: &RunSpec, choices: &[Choice], pairs: &[MessagePair]) -> Result<Transcript> {
    let cfg = spec.config;
    cfg.validate()?;
    for len in [choices.len(), pairs.len()] {
        if len != cfg.n {
            return Err(Error::LengthMismatch {
                expected: cfg.n,
                got: len,
            });
        }
    }
    let scenario = spec.scenario;
    let bell = matches!(scenario, Some(AttackScenario::BobBellCheat));
    let mut rng = session_rng(spec.seed, spec.stream);
    let mut t = Transcript {
        version: TRANSCRIPT_VERSION.to_string(),
        seed: spec.seed,
        stream: spec.stream,
        config: cfg,
        scenario,
        choices: choices.to_vec(),
        pairs: pairs.to_vec(),
        to_alice: None,
        loyalty: None,
        permutation: Vec::new(),
        alice_guesses: Vec::new(),
        to_bob: None,
        decoded: Vec::new(),
        stolen: Vec::new(),
        dummy: Vec::new(),
        qubits_prepared: 0,
        outcome: RunOutcome::Completed,
    };

    // Step 1
    let (mut slots, record) = if bell {
        bob_bell_cheat(&cfg, &mut rng)
    } else {
        bob_prepare_sequence(&loyalty_padded_choices(choices, cfg.k), cfg.n, cfg.m, &mut rng)?
    };
    t.qubits_prepared = slots.len();

    match &scenario {
        Some(AttackScenario::InterceptResend) => eve_intercept_resend(&mut slots, &mut rng)?,
        Some(AttackScenario::Entangling { params }) => {
            eve_entangling_attack(&mut slots, params)?;
        }
        _ => {}
    }

    // Step 2
    let check = alice_check_channel(&mut slots, &record.decoy_publication(), cfg.tau, &mut rng)?;
    let verdict = check.verdict;
    t.to_alice = Some(check);
    if verdict == Verdict::Abort {
        t.outcome = RunOutcome::Aborted {
            phase: Phase::ChannelToAlice,
        };
        return Ok(t);
    }
    let test = if bell {
        let mut liar = RandomDeclarer::new(stream_rng(rng.random(), 0));
        alice_test_loyalty(&mut slots, cfg.k, &mut liar, cfg.tau, &mut rng)?
    } else {
        alice_test_loyalty(&mut slots, cfg.k, &mut &record, cfg.tau, &mut rng)?
    };
    let verdict = test.verdict;
    t.loyalty = Some(test);
    if verdict == Verdict::Abort {
        t.outcome = RunOutcome::Aborted {
            phase: Phase::Loyalty,
        };
        return Ok(t);
    }

    // Step 3
    let perm = if bell {
        (0..slots.len()).collect()
    } else {
        bob_plan_reorder(&slots, &record, choices)?
    };
    let mut slots = bob_reorder(&slots, &perm, cfg.n)?;
    t.permutation = perm;

    // Step 4
    if let Some(
        AttackScenario::AliceMeasureResend { resend }
        | AttackScenario::AliceMeasureResendDummy { resend },
    ) = scenario
    {
        t.alice_guesses = alice_measure_resend(&mut slots, resend, &mut rng)?;
    }
    alice_encode(&mut slots, pairs)?;

    // Step 5
    let (mut slots, decoys) = alice_insert_decoys(slots, cfg.m2, &mut rng);
    t.qubits_prepared += cfg.m2;
    if let Some(AttackScenario::InterceptResend) = scenario {
        eve_intercept_resend(&mut slots, &mut rng)?;
    }

    // Step 6
    if bell {
        let check = bob_check_channel(&mut slots, &decoys.published, cfg.tau, &mut rng)?;
        let verdict = check.verdict;
        t.to_bob = Some(check);
        if verdict == Verdict::Abort {
            t.outcome = RunOutcome::Aborted {
                phase: Phase::ChannelToBob,
            };
            return Ok(t);
        }
        t.stolen = slots
            .iter()
            .map(bob_bell_cheat_readout)
            .collect::<Result<Vec<_>>>()?;
        t.decoded = t
            .stolen
            .iter()
            .zip(choices)
            .map(|(p, &c)| p.chosen(c))
            .collect();
        return Ok(t);
    }
    let decoded = bob_check_and_decode(slots, &decoys.published, &record, cfg.tau, &mut rng)?;
    let verdict = decoded.check.verdict;
    t.to_bob = Some(decoded.check);
    if verdict == Verdict::Abort {
        t.outcome = RunOutcome::Aborted {
            phase: Phase::ChannelToBob,
        };
        return Ok(t);
    }
    t.decoded = decoded.bits;

    if let Some(AttackScenario::AliceMeasureResendDummy { .. }) = scenario {
        // A wrong carrier bit still yields the right dummy bit half the time.
        t.dummy = t
            .decoded
            .iter()
            .zip(pairs.iter().zip(choices))
            .map(|(&bit, (pair, &choice))| {
                let right = pair.chosen(choice);
                if bit != right && rng.random::<bool>() {
                    right
                } else {
                    bit
                }
            })
            .collect();
    }
    Ok(t)
}
