//! Monte Carlo estimates of detection and attack rates next to their closed forms.
//!
//! Trial `i` of an experiment is [`run_trial`] on stream `i` of the experiment
//! seed, so results do not depend on how rayon schedules the trials.

use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::{ue_detection_probability, AttackScenario, ResendPolicy};
use crate::error::{Error, Result};
use crate::protocol::{Choice, MessagePair, PauliCode, ProtocolConfig};
use crate::qsim::{density_of, trace_distance};
use crate::session::{run_trial, RunSpec};

pub const DEFAULT_TRIALS: u64 = 100_000;

/// Width of the acceptance band, in standard errors.
pub const BAND_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    K,
    M,
    N,
}

impl SweepParam {
    fn set(self, config: &mut ProtocolConfig, value: usize) {
        match self {
            SweepParam::K => config.k = value,
            SweepParam::M => config.m = value,
            SweepParam::N => config.n = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// `None` runs honest parties.
    pub scenario: Option<AttackScenario>,
    pub config: ProtocolConfig,
    pub trials: u64,
    pub seed: u64,
}

/// One CSV row: `parameter,empirical,closed_form,stderr,trials`.
///
/// `stderr` is `sqrt(p(1-p)/trials)` taken at the closed-form `p`, the spread
/// the empirical rate should show if the closed form is right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateRow {
    pub parameter: f64,
    pub empirical: f64,
    pub closed_form: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl EstimateRow {
    pub fn new(parameter: f64, hits: u64, trials: u64, closed_form: f64) -> Self {
        EstimateRow {
            parameter,
            empirical: hits as f64 / trials as f64,
            closed_form,
            stderr: standard_error(closed_form, trials),
            trials,
        }
    }

    pub fn within_band(&self) -> bool {
        (self.empirical - self.closed_form).abs() <= BAND_SIGMAS * self.stderr
    }
}

pub fn standard_error(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `P(X / n > tau)` for `X ~ Binomial(n, p)`; zero when `n = 0`.
pub fn binomial_tail(n: usize, p: f64, tau: f64) -> f64 {
    if n == 0 || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    if tau == 0.0 {
        return 1.0 - (1.0 - p).powi(n as i32);
    }
    let ratio = p / (1.0 - p);
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut pass = 0.0;
    for x in 0..=n {
        if x as f64 / n as f64 > tau {
            break;
        }
        pass += pmf;
        pmf *= (n - x) as f64 / (x + 1) as f64 * ratio;
    }
    (1.0 - pass).clamp(0.0, 1.0)
}

/// Probability that a run under `scenario` aborts at any check.
pub fn detection_closed_form(scenario: Option<&AttackScenario>, config: &ProtocolConfig) -> Result<f64> {
    let c = config;
    let pass = |n: usize, p: f64| 1.0 - binomial_tail(n, p, c.tau);
    match scenario {
        None => Ok(0.0),
        // every checked qubit, decoy or loyalty, is disturbed with probability 1/4
        Some(AttackScenario::InterceptResend) => {
            Ok(1.0 - pass(c.m, 0.25) * pass(c.k, 0.25) * pass(c.m2, 0.25))
        }
        Some(AttackScenario::BobBellCheat) => Ok(binomial_tail(c.k, 0.5, c.tau)),
        Some(AttackScenario::Entangling { params }) => {
            if c.k > 0 {
                return Err(Error::UnsupportedScenario(
                    "entangling closed form needs K = 0".into(),
                ));
            }
            Ok(binomial_tail(c.m, ue_detection_probability(params), c.tau))
        }
        Some(s) => Err(Error::UnsupportedScenario(format!(
            "{} has no detection rate",
            s.name()
        ))),
    }
}

fn default_parameter(spec: &ExperimentSpec) -> f64 {
    match spec.scenario {
        Some(AttackScenario::BobBellCheat) => spec.config.k as f64,
        None => spec.config.n as f64,
        _ => spec.config.m as f64,
    }
}

/// Fraction of `spec.trials` independent runs that abort.
pub fn estimate_detection_rate(spec: &ExperimentSpec) -> Result<EstimateRow> {
    if spec.trials == 0 {
        return Err(Error::NoTrials);
    }
    let closed = detection_closed_form(spec.scenario.as_ref(), &spec.config)?;
    let aborts = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            let t = run_trial(&RunSpec {
                seed: spec.seed,
                stream: i,
                config: spec.config,
                scenario: spec.scenario,
            })?;
            Ok(t.aborted() as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(EstimateRow::new(default_parameter(spec), aborts, spec.trials, closed))
}

/// One row per value of `param`, in the order given.
pub fn sweep_curve(spec: &ExperimentSpec, param: SweepParam, values: &[usize]) -> Result<Vec<EstimateRow>> {
    if values.is_empty() {
        return Err(Error::EmptyRange);
    }
    values
        .iter()
        .map(|&v| {
            let mut point = spec.clone();
            param.set(&mut point.config, v);
            let mut row = estimate_detection_rate(&point)?;
            row.parameter = v as f64;
            Ok(row)
        })
        .collect()
}

/// Trace distance between the two encoded payload states that differ only in
/// the bit Bob did not choose.
pub fn obliviousness_report(choice: Choice, chosen_bit: u8) -> Result<f64> {
    let pair = |other: u8| match choice {
        Choice::Z => MessagePair::new(chosen_bit, other),
        Choice::X => MessagePair::new(other, chosen_bit),
    };
    let prepared = choice.prepared_state();
    let s0 = prepared.apply_gate(PauliCode::encode(pair(0)?), 0)?;
    let s1 = prepared.apply_gate(PauliCode::encode(pair(1)?), 0)?;
    trace_distance(&density_of(&[(1.0, s0)], &[0])?, &density_of(&[(1.0, s1)], &[0])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceVariant {
    Plain,
    Dummy,
}

/// Per-slot rates of a measure-and-resend Alice.
#[derive(Debug, Clone, PartialEq)]
pub struct AliceAttackReport {
    pub conclusive: EstimateRow,
    /// Bob's decode error, or the dummy-bit error for [`AliceVariant::Dummy`].
    pub bit_error: EstimateRow,
    /// Conclusive guesses that disagree with Bob's actual choice.
    pub false_conclusive: u64,
    pub slots: u64,
}

/// Downstream per-bit error of each resend policy.
pub fn resend_error_closed_form(policy: ResendPolicy) -> f64 {
    match policy {
        ResendPolicy::GuessBasis => 0.1875,
        ResendPolicy::Collapsed => 0.25,
        ResendPolicy::UniformFour => 0.375,
    }
}

pub fn alice_attack_report(
    trials: u64,
    variant: AliceVariant,
    resend: ResendPolicy,
    config: &ProtocolConfig,
    seed: u64,
) -> Result<AliceAttackReport> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let scenario = match variant {
        AliceVariant::Plain => AttackScenario::AliceMeasureResend { resend },
        AliceVariant::Dummy => AttackScenario::AliceMeasureResendDummy { resend },
    };
    let counts = (0..trials)
        .into_par_iter()
        .map(|i| {
            let t = run_trial(&RunSpec {
                seed,
                stream: i,
                config: *config,
                scenario: Some(scenario),
            })?;
            let mut conclusive = 0u64;
            let mut wrong = 0u64;
            for (g, &c) in t.alice_guesses.iter().zip(&t.choices) {
                if let Some(g) = g {
                    conclusive += 1;
                    wrong += (*g != c) as u64;
                }
            }
            let errors = match variant {
                AliceVariant::Plain => t.decode_errors(),
                AliceVariant::Dummy => t.dummy_errors(),
            } as u64;
            Ok([conclusive, wrong, errors, t.decoded.len() as u64])
        })
        .try_reduce(|| [0; 4], |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]))?;
    let [conclusive, wrong, errors, slots] = counts;
    let mut err_closed = resend_error_closed_form(resend);
    if variant == AliceVariant::Dummy {
        err_closed /= 2.0;
    }
    Ok(AliceAttackReport {
        conclusive: EstimateRow::new(0.0, conclusive, slots, 0.25),
        bit_error: EstimateRow::new(0.0, errors, slots, err_closed),
        false_conclusive: wrong,
        slots,
    })
}

/// Writes rows as CSV with the standard header.
pub fn write_rows<W: std::io::Write>(out: W, rows: &[EstimateRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(scenario: Option<AttackScenario>, config: ProtocolConfig, trials: u64) -> ExperimentSpec {
        ExperimentSpec { scenario, config, trials, seed: 11 }
    }

    fn cfg(m: usize, k: usize) -> ProtocolConfig {
        ProtocolConfig { m, k, ..Default::default() }
    }

    #[test]
    fn closed_forms() {
        let bell = detection_closed_form(Some(&AttackScenario::BobBellCheat), &cfg(0, 1)).unwrap();
        assert_eq!(bell, 0.5);
        let ir = detection_closed_form(Some(&AttackScenario::InterceptResend), &cfg(50, 0)).unwrap();
        assert!((ir - 0.999_999_43).abs() < 1e-8);
        let ir10 = detection_closed_form(Some(&AttackScenario::InterceptResend), &cfg(10, 0)).unwrap();
        assert!((ir10 - 0.9437).abs() < 1e-4);
        assert_eq!(detection_closed_form(None, &cfg(5, 5)).unwrap(), 0.0);
    }

    #[test]
    fn binomial_tail_against_direct_sum() {
        // n = 4, p = 1/2: P(X/4 > 0.3) = P(X >= 2) = 11/16
        assert!((binomial_tail(4, 0.5, 0.3) - 11.0 / 16.0).abs() < 1e-15);
        assert!((binomial_tail(4, 0.5, 0.0) - 15.0 / 16.0).abs() < 1e-15);
        assert_eq!(binomial_tail(0, 0.5, 0.0), 0.0);
        assert_eq!(binomial_tail(3, 0.5, 0.99), 0.125);
    }

    #[test]
    fn single_trial_is_zero_or_one() {
        for scenario in [Some(AttackScenario::BobBellCheat), Some(AttackScenario::InterceptResend)] {
            let r = estimate_detection_rate(&spec(scenario, cfg(3, 1), 1)).unwrap();
            assert!(r.empirical == 0.0 || r.empirical == 1.0);
        }
    }

    #[test]
    fn zero_trials_rejected() {
        assert_eq!(estimate_detection_rate(&spec(None, cfg(1, 1), 0)), Err(Error::NoTrials));
        assert_eq!(
            alice_attack_report(0, AliceVariant::Plain, ResendPolicy::GuessBasis, &cfg(0, 0), 1),
            Err(Error::NoTrials)
        );
    }

    #[test]
    fn sweeps() {
        let s = spec(Some(AttackScenario::BobBellCheat), cfg(0, 0), 200);
        assert_eq!(sweep_curve(&s, SweepParam::K, &[]), Err(Error::EmptyRange));
        let rows = sweep_curve(&s, SweepParam::K, &[1, 2, 3]).unwrap();
        assert_eq!(rows.iter().map(|r| r.parameter).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
        assert!(rows.windows(2).all(|w| w[0].closed_form < w[1].closed_form));
        assert_eq!(sweep_curve(&s, SweepParam::K, &[4]).unwrap().len(), 1);
    }

    #[test]
    fn obliviousness_all_cases() {
        for choice in [Choice::Z, Choice::X] {
            for bit in 0..2 {
                assert!(obliviousness_report(choice, bit).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn honest_runs_never_abort() {
        let r = estimate_detection_rate(&spec(None, ProtocolConfig { n: 3, m: 4, k: 2, m2: 4, tau: 0.0 }, 500)).unwrap();
        assert_eq!(r.empirical, 0.0);
        assert!(r.within_band());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &[EstimateRow::new(1.0, 1, 2, 0.5)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("parameter,empirical,closed_form,stderr,trials\n"));
    }
}
