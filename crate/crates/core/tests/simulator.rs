use hyltl::hybrid::HybridTime;
use hyltl::registry::{builtin_names, load_builtin};
use hyltl::sim::{measure_settling_time, simulate, Priority, SimOptions, Termination};
use hyltl::trace_io::TraceFile;

fn opts() -> SimOptions {
    SimOptions::default()
}

#[test]
fn first_bounce_of_ball() {
    let ball = load_builtin("bouncing_ball").unwrap();
    let r = simulate(&ball.system, &[1.0, 0.0], &SimOptions { j_max: 1, ..opts() }).unwrap();
    let first = &r.jump_log[0];
    assert!((first.t - 2f64.sqrt()).abs() <= 1e-6, "{}", first.t);
    assert!((first.x_pre[1] + 2f64.sqrt()).abs() <= 1e-6);
    assert_eq!(first.x_post[0], 0.0);
    assert!((first.x_post[1] - 2f64.sqrt() / 2.0).abs() <= 1e-6);
    assert_eq!(r.termination, Termination::BudgetJ);
}

#[test]
fn ball_bounces_accumulate_at_three_root_two() {
    // Flight times sqrt(2) + sum_k 2 sqrt(2) 2^-k sum to 3 sqrt(2).
    let ball = load_builtin("bouncing_ball").unwrap();
    let o = SimOptions {
        t_max: 10.0,
        j_max: 200,
        ..opts()
    };
    let r = simulate(&ball.system, &[1.0, 0.0], &o).unwrap();
    assert_eq!(r.termination, Termination::ZenoFlagged);
    let t_end = r.arc.final_point().time.t;
    assert!((t_end - 3.0 * 2f64.sqrt()).abs() <= 1e-3, "{t_end}");
}

#[test]
fn energy_is_conserved_along_flows() {
    let ball = load_builtin("bouncing_ball").unwrap();
    let r = simulate(&ball.system, &[1.5, 0.5], &SimOptions { j_max: 3, ..opts() }).unwrap();
    for j in 0..=r.arc.domain().jumps() {
        let samples = r.arc.phase_samples(j);
        let e0 = 2.0 * samples[0].x[0] + samples[0].x[1].powi(2);
        for s in samples {
            let e = 2.0 * s.x[0] + s.x[1].powi(2);
            assert!((e - e0).abs() <= 1e-6, "phase {j}: {e} vs {e0}");
        }
    }
}

#[test]
fn timer_resets_at_integer_times() {
    let timer = load_builtin("timer").unwrap();
    let r = simulate(&timer.system, &[0.0, 0.0], &SimOptions { t_max: 2.5, ..opts() }).unwrap();
    let times: Vec<f64> = r.jump_log.iter().map(|j| j.t).collect();
    assert_eq!(times.len(), 2);
    assert!((times[0] - 1.0).abs() <= 1e-9 && (times[1] - 2.0).abs() <= 1e-9, "{times:?}");
    assert_eq!(r.jump_log[0].x_post, vec![0.0, 1.0]);
    assert_eq!(r.jump_log[1].x_post, vec![0.0, 0.0]);
    assert_eq!(r.termination, Termination::BudgetT);
    assert_eq!(r.arc.final_point().time, HybridTime::new(2.5, 2));
}

#[test]
fn flow_first_still_resets_when_flow_is_blocked() {
    let timer = load_builtin("timer").unwrap();
    let o = SimOptions {
        t_max: 1.5,
        priority: Priority::FlowFirst,
        ..opts()
    };
    // At x1 = T both flowing and jumping are possible; flowing is blocked
    // right away because C ends there, so the jump still happens at 1.
    let r = simulate(&timer.system, &[1.0, 0.0], &o).unwrap();
    assert!(r.jump_log[0].t <= 1e-9);
}

#[test]
fn scalar_fta_reaches_zero_near_two() {
    let fta = load_builtin("fta_scalar").unwrap();
    let r = simulate(&fta.system, &[1.0, 0.0], &SimOptions { t_max: 3.0, ..opts() }).unwrap();
    let hit = measure_settling_time(&r.arc, "z_zero", &fta.propositions, 1e-4)
        .unwrap()
        .unwrap();
    assert!((hit.t - 2.0).abs() <= 0.02, "{hit}");
}

#[test]
fn decrement_settles_after_three_jumps() {
    let cfg = hyltl::config::SystemConfig::from_toml_str(include_str!("data/decrement.toml")).unwrap();
    let sys = cfg.load().unwrap();
    let r = simulate(&sys.system, &[2.5], &SimOptions { j_max: 6, ..opts() }).unwrap();
    let hit = measure_settling_time(&r.arc, "at_zero", &sys.propositions, 0.0)
        .unwrap()
        .unwrap();
    assert_eq!(hit, HybridTime::new(0.0, 3));
}

#[test]
fn simulation_is_deterministic_for_a_seed() {
    let firefly = load_builtin("firefly").unwrap();
    let o = SimOptions {
        priority: Priority::Random,
        selection: hyltl::sim::SelectionPolicy::Random,
        seed: 11,
        ..firefly.simulation.clone()
    };
    let a = simulate(&firefly.system, &[0.2, 0.7], &o).unwrap();
    let b = simulate(&firefly.system, &[0.2, 0.7], &o).unwrap();
    assert_eq!(a, b);
    let ta = TraceFile::from_arc(&a.arc, firefly.trace_meta()).to_json();
    let tb = TraceFile::from_arc(&b.arc, firefly.trace_meta()).to_json();
    assert_eq!(ta, tb);
}

#[test]
fn rejects_initial_state_outside_c_and_d() {
    let ball = load_builtin("bouncing_ball").unwrap();
    assert!(simulate(&ball.system, &[-1.0, 0.0], &opts()).is_err());
    assert!(simulate(&ball.system, &[1.0], &opts()).is_err());
}

#[test]
fn every_builtin_simulates_and_round_trips() {
    let starts: [(&str, &[f64]); 5] = [
        ("bouncing_ball", &[1.0, 0.0]),
        ("timer", &[0.5, 0.0]),
        ("fta_scalar", &[0.5, 0.0]),
        ("firefly", &[0.1, 0.6]),
        ("sgn_jump", &[0.3]),
    ];
    assert_eq!(builtin_names().count(), starts.len());
    for (name, x0) in starts {
        let sys = load_builtin(name).unwrap();
        let o = SimOptions {
            t_max: 1.0,
            ..sys.simulation.clone()
        };
        let r = simulate(&sys.system, x0, &o).unwrap();
        let file = TraceFile::from_arc(&r.arc, sys.trace_meta());
        let back = TraceFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file, "{name}");
        assert_eq!(back.to_arc().unwrap(), r.arc, "{name}");
    }
}
