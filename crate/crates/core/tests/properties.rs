use num_complex::Complex64;
use proptest::prelude::*;
use qotsim::adversary::{ue_detection_probability, ue_leakage, AttackScenario, ResendPolicy, UeParams};
use qotsim::costmodel::{total_cost, ProtocolCost, ProtocolId};
use qotsim::experiments::detection_closed_form;
use qotsim::protocol::{bob_reorder, ProtocolConfig, SequenceSlot};
use qotsim::qsim::{density_of, trace_distance, Basis, Gate, PureState};
use qotsim::session::{run_trial, verify_line, RunSpec};

fn state(qubits: usize) -> impl Strategy<Value = PureState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << qubits)
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let n = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            let amps: Vec<Complex64> = v.iter().map(|&(a, b)| Complex64::new(a / n, b / n)).collect();
            PureState::new(&amps).unwrap()
        })
}

fn gate() -> impl Strategy<Value = Gate> {
    prop::sample::select(Gate::ALL.to_vec())
}

fn config() -> impl Strategy<Value = ProtocolConfig> {
    (1usize..6, 0usize..6, 0usize..4, 0usize..6).prop_map(|(n, m, k, m2)| ProtocolConfig { n, m, k, m2, tau: 0.0 })
}

fn scenario() -> impl Strategy<Value = Option<AttackScenario>> {
    prop::sample::select(vec![
        None,
        Some(AttackScenario::InterceptResend),
        Some(AttackScenario::BobBellCheat),
        Some(AttackScenario::AliceMeasureResend { resend: ResendPolicy::GuessBasis }),
        Some(AttackScenario::AliceMeasureResendDummy { resend: ResendPolicy::UniformFour }),
    ])
}

proptest! {
    #[test]
    fn gates_preserve_norm(s in state(3), g in gate(), target in 0usize..3) {
        let out = s.apply_gate(g, target).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn born_probabilities_sum_to_one(s in state(2), target in 0usize..2, x in any::<bool>()) {
        let basis = if x { Basis::X } else { Basis::Z };
        let p0 = s.probability(basis, target, 0).unwrap();
        let p1 = s.probability(basis, target, 1).unwrap();
        prop_assert!((p0 + p1 - 1.0).abs() < 1e-10);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p0));
    }

    #[test]
    fn trace_distance_is_a_metric(a in state(1), b in state(1), c in state(1)) {
        let r = |s: &PureState| density_of(&[(1.0, *s)], &[0]).unwrap();
        let (ra, rb, rc) = (r(&a), r(&b), r(&c));
        let ab = trace_distance(&ra, &rb).unwrap();
        let ba = trace_distance(&rb, &ra).unwrap();
        let ac = trace_distance(&ra, &rc).unwrap();
        let cb = trace_distance(&rc, &rb).unwrap();
        prop_assert!((ab - ba).abs() < 1e-10);
        prop_assert!(ab <= ac + cb + 1e-10);
        prop_assert!((0.0..=1.0).contains(&ab));
        // pure states: D = sqrt(1 - |<a|b>|^2)
        let overlap = a.inner(&b).unwrap().norm_sqr();
        prop_assert!((ab - (1.0 - overlap).max(0.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn honest_runs_always_decode(seed in any::<u64>(), stream in 0u64..1000, cfg in config()) {
        let t = run_trial(&RunSpec { seed, stream, config: cfg, scenario: None }).unwrap();
        prop_assert!(!t.aborted());
        prop_assert_eq!(t.decode_errors(), 0);
        prop_assert_eq!(t.qubits_prepared, cfg.n + cfg.m + 2 * cfg.k + cfg.m2);
    }

    #[test]
    fn transcripts_replay(seed in any::<u64>(), stream in 0u64..1000, cfg in config(), sc in scenario()) {
        let a = run_trial(&RunSpec { seed, stream, config: cfg, scenario: sc }).unwrap().to_line();
        let b = run_trial(&RunSpec { seed, stream, config: cfg, scenario: sc }).unwrap().to_line();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(verify_line(&a, 1).unwrap(), None);
    }

    #[test]
    fn conclusive_guesses_are_right(seed in any::<u64>(), n in 1usize..8) {
        let cfg = ProtocolConfig { n, ..Default::default() };
        let sc = Some(AttackScenario::AliceMeasureResend { resend: ResendPolicy::Collapsed });
        let t = run_trial(&RunSpec { seed, stream: 0, config: cfg, scenario: sc }).unwrap();
        for (g, c) in t.alice_guesses.iter().zip(&t.choices) {
            if let Some(g) = g {
                prop_assert_eq!(g, c);
            }
        }
    }

    #[test]
    fn reorder_permutes_slots(perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
        let states = [PureState::zero(), PureState::plus(), PureState::one(), PureState::minus(), PureState::zero(), PureState::plus()];
        let slots: Vec<SequenceSlot> = states.iter().enumerate().map(|(tag, &state)| SequenceSlot { tag, state }).collect();
        let out = bob_reorder(&slots, &perm, 6).unwrap();
        let mut tags: Vec<usize> = out.iter().map(|s| s.tag).collect();
        for (i, s) in out.iter().enumerate() {
            prop_assert_eq!(s.tag, perm[i]);
        }
        tags.sort();
        prop_assert_eq!(tags, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn cost_is_affine(r in 0i64..100_000) {
        for id in ProtocolId::ALL {
            let step = total_cost(id, r + 1).unwrap() - total_cost(id, r).unwrap();
            prop_assert_eq!(step, ProtocolCost::of(id).qubits_per_message);
        }
    }

    #[test]
    fn more_decoys_detect_more(m in 0usize..60) {
        let f = |m| detection_closed_form(Some(&AttackScenario::InterceptResend), &ProtocolConfig { m, ..Default::default() }).unwrap();
        prop_assert!(f(m + 1) > f(m));
    }
}

fn theta_params(theta: f64) -> UeParams {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let e00 = [one, z, z, z];
    let e11 = [Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0), z, z];
    UeParams { a: one, b: z, c: z, d: one, e00, e01: [z, z, one, z], e10: [z, z, z, one], e11 }
        .validated()
        .unwrap()
}

// Leakage is first order in the ancilla angle, detection second order, so a
// tiny detection rate alone does not bound the leakage.
#[test]
fn detection_is_quadratic_and_leakage_linear_near_the_constraint() {
    for theta in [1e-2, 1e-3, 1e-4, 1e-5] {
        let p = theta_params(theta);
        let det = ue_detection_probability(&p);
        let leak = ue_leakage(&p).unwrap();
        assert!((det - (1.0 - f64::cos(theta)) / 4.0).abs() < 1e-15);
        assert!((leak - theta.sin() / 2.0).abs() < 1e-9, "theta {theta}: leak {leak}");
    }
    let p = theta_params(1e-5);
    assert!(ue_detection_probability(&p) < 1e-9);
    assert!(ue_leakage(&p).unwrap() > 1e-6);
}

// Success of guessing Bob's choice from one copy with the two-outcome
// measurement {|phi><phi|, 1 - |phi><phi|}, guessing the likelier preparation.
fn guess_success(phi: &PureState) -> f64 {
    let p = |s: &PureState| phi.inner(s).unwrap().norm_sqr();
    let (z, x) = (p(&PureState::zero()), p(&PureState::plus()));
    0.5 * (z.max(x) + (1.0 - z).max(1.0 - x))
}

#[test]
fn basis_measurements_guess_the_choice_with_three_quarters() {
    for phi in [PureState::zero(), PureState::one(), PureState::plus(), PureState::minus()] {
        assert!((guess_success(&phi) - 0.75).abs() < 1e-12);
    }
    assert!((PureState::zero().inner(&PureState::plus()).unwrap().norm_sqr() - 0.5).abs() < 1e-12);
}

proptest! {
    #[test]
    fn no_measurement_beats_the_helstrom_bound(phi in state(1)) {
        let bound = 0.5 * (1.0 + std::f64::consts::FRAC_1_SQRT_2);
        let s = guess_success(&phi);
        prop_assert!(s <= bound + 1e-12);
        prop_assert!(s < 1.0);
    }
}
