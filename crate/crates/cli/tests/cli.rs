use std::path::Path;
use std::process::{Command, Output};

use hyltl::trace_io::TraceFile;

fn hyltl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyltl")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_check_ball() {
    let dir = tempfile::tempdir().unwrap();
    let tr = dir.path().join("tr.json");
    let o = hyltl(&["simulate", "--system", "bouncing_ball", "--x0", "1,0", "--jmax", "3", "--out", path_str(&tr)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("termination: budget_j"));
    let arc = TraceFile::from_json(&std::fs::read_to_string(&tr).unwrap()).unwrap().to_arc().unwrap();
    let first = arc.domain().phase(0).unwrap().t_end;
    assert!((first - 2f64.sqrt()).abs() <= 1e-6, "{first}");

    let o = hyltl(&["check", "--trace", path_str(&tr), "--formula", "F x2_le_m1", "--at", "0,0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("true at (0, 0)"), "{out}");
    // The witness is the first sample with x2 <= -1, reached at t = 1.
    assert!(out.contains("witness at (1.0000000000000"), "{out}");

    let o = hyltl(&["check", "--trace", path_str(&tr), "--formula", "G x2_le_0", "--all"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("first counterexample at (0, 0)"));

    let at = format!("{first},0");
    let o = hyltl(&["check", "--trace", path_str(&tr), "--formula", "X x2_ge_0", "--at", &at]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));

    let o = hyltl(&["check", "--trace", path_str(&tr), "--formula", "F x2_le_m1", "--at", "0.5005,0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not a sample point"));

    let csv = dir.path().join("tr.csv");
    let o = hyltl(&["export", "--trace", path_str(&tr), "--csv", path_str(&csv)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("t,j,x1,x2"));
    assert_eq!(text.lines().count(), arc.len() + 1);
}

#[test]
fn certify_exit_codes() {
    let o = hyltl(&["certify", "eventually", "--system", "fta_scalar", "--cert", "V", "--c1", "2^0.75", "--c2", "0.75"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("verdict: passed_on_samples"));

    // 1.6818 rounds 2^0.75 up by about 7e-6 and breaks the decrease
    // inequality by a few 1e-6 where V is largest.
    let o = hyltl(&["certify", "eventually", "--system", "fta_scalar", "--cert", "V", "--c1", "1.6818", "--c2", "0.75", "--json"]);
    assert_eq!(code(&o), 2);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let cond = report["conditions"].as_array().unwrap().iter().find(|c| c["id"] == "fta.1.2a").unwrap();
    assert!(cond["worst_margin"].as_f64().unwrap() < 1e-5);

    let o = hyltl(&["certify", "next", "--system", "sgn_jump", "--prop", "p_unit"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = hyltl(&["certify", "next", "--system", "bouncing_ball", "--prop", "x2_le_0"]);
    assert_eq!(code(&o), 2);

    let o = hyltl(&["certify", "always", "--system", "bouncing_ball", "--cert", "B", "--grid", "40,40"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = hyltl(&["certify", "always", "--system", "bouncing_ball", "--cert", "B", "--grid", "40,40", "--set", "lam=1.2"]);
    assert_eq!(code(&o), 2);

    let o = hyltl(&["certify", "until", "--system", "bouncing_ball", "--cert", "V", "--grid", "40,40"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = hyltl(&["certify", "eventually-always", "--system", "bouncing_ball", "--cert", "W", "--grid", "40,40"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = hyltl(&["certify", "eventually", "--system", "firefly", "--cert", "V"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("nonstrict_jump"), "{}", stdout(&o));

    let o = hyltl(&["certify", "always", "--system", "bouncing_ball", "--cert", "Nope"]);
    assert_eq!(code(&o), 1);
    let o = hyltl(&["certify", "eventually", "--system", "fta_scalar", "--cert", "V", "--c1", "2^q"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn automaton_runs() {
    let dir = tempfile::tempdir().unwrap();
    let fsa = dir.path().join("fsa.json");
    let dot = dir.path().join("fsa.dot");
    let f = "F p3 & (p1 U p2)";
    let o = hyltl(&["automaton", "--formula", f, "--run", "p1,p1,p2,p3", "--out", path_str(&fsa), "--dot", path_str(&dot)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("run: s0 s0 s0 s2 s1"));
    assert!(stdout(&o).contains("s0 --p2--> s2"));
    assert!(hyltl::automata::Fsa::from_json(&std::fs::read_to_string(&fsa).unwrap()).is_ok());
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));

    let o = hyltl(&["automaton", "--formula", f, "--run", "p1,p3"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("accepted: false"));
    let o = hyltl(&["automaton", "--formula", f, "--run", "p1,q"]);
    assert_eq!(code(&o), 1);
    let o = hyltl(&["automaton", "--formula", "G p"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("outside the supported fragment"));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&hyltl(&[])), 1);
    assert_eq!(code(&hyltl(&["--help"])), 0);
    assert_eq!(code(&hyltl(&["frobnicate"])), 1);
    let o = hyltl(&["simulate", "--system", "no_such", "--x0", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("neither a built-in system"));
    let o = hyltl(&["simulate", "--system", "bouncing_ball", "--x0", "1,a"]);
    assert_eq!(code(&o), 1);
    let o = hyltl(&["simulate", "--system", "bouncing_ball", "--x0", "-1,0"]);
    assert_eq!(code(&o), 1);
    let o = hyltl(&["check", "--trace", "/nonexistent.json", "--formula", "p"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn systems_and_custom_files() {
    let o = hyltl(&["systems"]);
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = hyltl(&["systems", "timer"]);
    let src = stdout(&o);
    assert!(src.contains("name = \"timer\""));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("slow_timer.toml");
    std::fs::write(&file, src.replace("T = 1.0", "T = 2.0")).unwrap();
    let o = hyltl(&["simulate", "--system", path_str(&file), "--x0", "0,0", "--tmax", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("jump 0 at t = 2.000000"), "{}", stdout(&o));
}

#[test]
fn seeded_random_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let tr = dir.path().join(format!("tr{k}.json"));
        let o = hyltl(&[
            "simulate", "--system", "firefly", "--x0", "0.2,0.7", "--priority", "random", "--selection", "random",
            "--seed", "5", "--out", path_str(&tr),
        ]);
        assert_eq!(code(&o), 0);
        files.push(std::fs::read(&tr).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn in_process_entry_point() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = hyltl_cli::run_with(["hyltl", "automaton", "--formula", "F p"], &mut out, &mut err);
    assert_eq!(code, 0);
    assert!(String::from_utf8(out).unwrap().contains("states: s0, s1"));
}
