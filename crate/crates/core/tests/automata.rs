use std::sync::Arc;

use hyltl::automata::{
    augment_system, build_automaton, build_automaton_with_atoms, observe, run_automaton, word_arc, AutomatonError,
    Fsa, Transition, ACCEPTING_PROP,
};
use hyltl::hybrid::{PropositionSet, StateSet};
use hyltl::ltl::oracle::brute_force_table;
use hyltl::ltl::parse_formula;
use hyltl::registry::load_builtin;
use hyltl::sim::{simulate, SimOptions};

const LETTERS: [&str; 3] = ["p1", "p2", "p3"];

fn words(max_len: usize) -> Vec<Vec<&'static str>> {
    let mut out: Vec<Vec<&str>> = vec![vec![]];
    let mut all = Vec::new();
    for _ in 0..max_len {
        out = out
            .iter()
            .flat_map(|w| LETTERS.iter().map(move |l| [w.clone(), vec![*l]].concat()))
            .collect();
        all.extend(out.iter().cloned());
    }
    all
}

fn fsa(src: &str) -> Fsa {
    build_automaton_with_atoms(&parse_formula(src).unwrap(), &LETTERS).unwrap()
}

fn accepts(fsa: &Fsa, word: &[&str]) -> bool {
    run_automaton(fsa, word).unwrap().accepted
}

#[test]
fn combined_example_matches_transition_table() {
    let a = build_automaton(&parse_formula("F p3 & (p1 U p2)").unwrap()).unwrap();
    assert_eq!(a.states, vec!["s0", "s1", "s2", "sink"]);
    assert_eq!(a.accepting, vec!["s1"]);
    let step = |s: &str, o: &str| a.step(s, o).unwrap().to_string();
    assert_eq!(step("s0", "p1"), "s0");
    assert_eq!(step("s0", "p2"), "s2");
    assert_eq!(step("s2", "p3"), "s1");
    for o in &a.observations {
        assert_eq!(step("s1", o), "s1");
        if o != "p3" {
            assert_eq!(step("s2", o), "s2");
        }
    }
    assert_eq!(step("s0", "p3"), "sink");

    let r = run_automaton(&a, &["p1", "p1", "p2", "p3"]).unwrap();
    assert_eq!(r.states, vec!["s0", "s0", "s0", "s2", "s1"]);
    assert!(r.accepted);
    let r = run_automaton(&a, &["p2", "p1", "p3"]).unwrap();
    assert_eq!(r.states, vec!["s0", "s2", "s2", "s1"]);
    assert!(r.accepted);
    let r = run_automaton(&a, &["p1", "p3"]).unwrap();
    assert_eq!(r.states.last().unwrap(), "sink");
    assert!(!r.accepted);
    assert_eq!(
        run_automaton(&a, &["q"]),
        Err(AutomatonError::UnknownObservation("q".into()))
    );
}

#[test]
fn eventually_has_two_states() {
    let a = build_automaton(&parse_formula("F p").unwrap()).unwrap();
    assert_eq!(a.states, vec!["s0", "s1"]);
    assert_eq!(a.sink, None);
    assert_eq!(a.accepting, vec!["s1"]);
    assert!(accepts(&a, &["!p", "p"]));
    assert!(!accepts(&a, &["!p", "!p"]));
}

#[test]
fn unsupported_formulas() {
    for src in ["G p", "p W q", "F (p & q)", "!(p U q)", "p | q", "X X p"] {
        let err = build_automaton(&parse_formula(src).unwrap()).unwrap_err();
        assert!(matches!(err, AutomatonError::UnsupportedFormula(_)), "{src}: {err}");
    }
}

#[test]
fn words_agree_with_formula_semantics() {
    let formulas = [
        "p1",
        "!p2",
        "F p1",
        "F !p3",
        "p1 U p2",
        "!p3 U p1",
        "p1 U !p1",
        "X p3",
        "X !p1",
        "F p3 & (p1 U p2)",
        "F p1 & F p2 & X p3",
        "(p1 U p2) & (!p1 U p3)",
        "p1 & X p2",
        "p2 & !p2",
    ];
    let all = words(6);
    assert_eq!(all.iter().filter(|w| w.len() == 6).count(), 729);
    for src in formulas {
        let f = parse_formula(src).unwrap();
        let a = build_automaton_with_atoms(&f, &LETTERS).unwrap();
        for w in &all {
            let (arc, props) = word_arc(w, &LETTERS).unwrap();
            let expected = brute_force_table(&f, &arc, &props).unwrap()[0];
            assert_eq!(accepts(&a, w), expected, "{src} on {w:?}");
        }
    }
}

#[test]
fn product_is_intersection() {
    let parts = ["F p1", "p2 U p3", "X !p2", "!p1"];
    let all = words(5);
    for a in parts {
        for b in parts {
            let both = fsa(&format!("{a} & {b}"));
            let (fa, fb) = (fsa(a), fsa(b));
            for w in &all {
                assert_eq!(accepts(&both, w), accepts(&fa, w) && accepts(&fb, w), "{a} & {b} on {w:?}");
            }
        }
    }
}

#[test]
fn runs_are_deterministic_and_serialization_round_trips() {
    let a = fsa("F p3 & (p1 U p2)");
    let w = ["p1", "p2", "p2", "p3", "p1"];
    assert_eq!(run_automaton(&a, &w).unwrap(), run_automaton(&a, &w).unwrap());
    assert_eq!(Fsa::from_json(&a.to_json()).unwrap(), a);
    let dot = a.to_dot();
    assert!(dot.contains("\"s1\" [shape=doublecircle]"));
    assert!(dot.contains("start -> \"s0\""));
    let mut broken = a.clone();
    broken.transitions.push(Transition {
        from: "s0".into(),
        observation: "zz".into(),
        to: "s1".into(),
    });
    assert!(Fsa::from_json(&broken.to_json()).is_err());
}

#[test]
fn observation_priority() {
    let mut props = PropositionSet::new();
    props.insert("p1", StateSet::new(Arc::new(|x: &[f64]| x[0] > 0.0)));
    props.insert("p2", StateSet::new(Arc::new(|x: &[f64]| x[1] > 0.0)));
    let order = vec!["p1".to_string(), "p2".to_string()];
    assert_eq!(observe(&[1.0, 1.0], &props, &order).unwrap(), "p1");
    assert_eq!(observe(&[0.0, 1.0], &props, &order).unwrap(), "p2");
    assert_eq!(observe(&[0.0, 0.0], &props, &order).unwrap(), "!p1");
    assert_eq!(observe(&[0.0, 0.0], &props, &[]), Err(AutomatonError::EmptyObservationOrder));
    assert!(observe(&[0.0, 0.0], &props, &["zz".to_string()]).is_err());
}

#[test]
fn ball_reaches_accepting_state_at_first_bounce() {
    let ball = load_builtin("bouncing_ball").unwrap();
    let a = build_automaton(&parse_formula("F x2_le_m1").unwrap()).unwrap();
    let order = vec!["x2_le_m1".to_string()];
    let (sys, props) = augment_system(&ball.system, &a, &ball.propositions, &order).unwrap();
    let r = simulate(&sys, &[1.0, 0.0, 0.0], &SimOptions { j_max: 2, ..Default::default() }).unwrap();
    let s1 = a.states.iter().position(|s| s == "s1").unwrap() as f64;
    let first_jump = r.arc.phase_samples(1)[0].x.clone();
    assert_eq!(first_jump[2], s1);
    assert!((first_jump[1] - 2f64.sqrt() / 2.0).abs() <= 1e-6);
    assert!(!props.holds(ACCEPTING_PROP, r.arc.initial_state()).unwrap());
    for s in r.arc.phase_samples(0) {
        assert_eq!(s.x[2], 0.0);
    }
    assert!(props.holds(ACCEPTING_PROP, r.arc.final_point().x).unwrap());
}

#[test]
fn single_accepting_state_never_changes() {
    let timer = load_builtin("timer").unwrap();
    let fsa = Fsa {
        states: vec!["s0".into()],
        initial: "s0".into(),
        observations: vec!["p".into(), "!p".into()],
        transitions: ["p", "!p"]
            .iter()
            .map(|o| Transition {
                from: "s0".into(),
                observation: o.to_string(),
                to: "s0".into(),
            })
            .collect(),
        accepting: vec!["s0".into()],
        sink: None,
    };
    let (sys, props) = augment_system(&timer.system, &fsa, &timer.propositions, &["p".to_string()]).unwrap();
    let r = simulate(&sys, &[0.0, 0.0, 0.0], &SimOptions { t_max: 3.5, ..Default::default() }).unwrap();
    assert_eq!(r.jump_log.len(), 3);
    for p in r.arc.points() {
        assert_eq!(p.x[2], 0.0);
        assert!(props.holds(ACCEPTING_PROP, p.x).unwrap());
    }
}

#[test]
fn sgn_next_is_decided_by_pre_jump_observations() {
    // The automaton moves on the observation before each jump: the first
    // jump consumes the letter at x = 0.3, the second the letter at x = 1,
    // so acceptance shows after two jumps.
    let sgn = load_builtin("sgn_jump").unwrap();
    let a = build_automaton(&parse_formula("X p_unit").unwrap()).unwrap();
    let (sys, props) = augment_system(&sgn.system, &a, &sgn.propositions, &["p_unit".to_string()]).unwrap();
    let r = simulate(&sys, &[0.3, 0.0], &SimOptions { j_max: 3, ..Default::default() }).unwrap();
    let accepting: Vec<bool> = r.arc.points().map(|p| props.holds(ACCEPTING_PROP, p.x).unwrap()).collect();
    assert_eq!(accepting, vec![false, false, true, true]);
    assert_eq!(r.arc.phase_samples(1)[0].x[0], 1.0);
}
