//! Command-line front end. Exit codes: 0 when the command succeeded and the
//! property holds, 1 on usage or data errors, 2 when the property is false or
//! a certificate check is violated.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hyltl::automata::{build_automaton, run_automaton, Fsa};
use hyltl::cert::{
    certify_always, certify_eventually_always, certify_eventually_combined, certify_eventually_flow,
    certify_eventually_jump, certify_next, certify_until_strong, check_barrier_candidate, CertificateReport,
    EventuallyAlwaysMode, FtaMode, Sampler,
};
use hyltl::config::{compile_propositions, eval_param, LoadedCertificate, LoadedSystem, ParamSpec, SetSpec, SystemConfig};
use hyltl::hybrid::{HybridArc, HybridTime, PropositionSet};
use hyltl::ltl::{explain, parse_formula, truth_table};
use hyltl::registry::{builtin_config, builtin_examples};
use hyltl::sim::{simulate, Priority, SelectionPolicy};
use hyltl::trace_io::{to_csv, TraceFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FALSE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hyltl", version, about = "Simulate hybrid systems and check temporal-logic properties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a system from an initial state.
    Simulate(SimulateArgs),
    /// Evaluate an LTL formula on a stored trace.
    Check(CheckArgs),
    /// Check certificate conditions on samples of the state space.
    Certify(CertifyArgs),
    /// Build the automaton of a co-safe formula and optionally run a word.
    Automaton(AutomatonArgs),
    /// Convert a trace file to CSV.
    Export(ExportArgs),
    /// List the built-in systems, or print one as TOML.
    Systems {
        /// Print this system's configuration.
        name: Option<String>,
    },
}

#[derive(Args, Debug)]
struct SystemArgs {
    /// Built-in system name or path to a TOML file.
    #[arg(long)]
    system: String,
    /// Override a constant, e.g. `--set lam=0.8`. Repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Initial state, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    jmax: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    priority: Option<PriorityArg>,
    #[arg(long, value_enum)]
    selection: Option<SelectionArg>,
    /// Write the trace as JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum PriorityArg {
    FlowFirst,
    JumpFirst,
    Random,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SelectionArg {
    First,
    Random,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    formula: String,
    /// Hybrid time `t,j` of a sample point (default 0,0).
    #[arg(long, conflicts_with = "all", allow_hyphen_values = true)]
    at: Option<String>,
    /// Require the formula at every sample point.
    #[arg(long)]
    all: bool,
    /// Take propositions from this system instead of the trace metadata.
    #[arg(long)]
    system: Option<String>,
    /// Relax propositions with a margin function to `margin <= tol`.
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Property {
    Candidate,
    Always,
    Eventually,
    Next,
    Until,
    EventuallyAlways,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Flow,
    Jump,
    Combined,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(value_enum)]
    property: Property,
    #[command(flatten)]
    system: SystemArgs,
    /// Certificate name from the system configuration.
    #[arg(long)]
    cert: Option<String>,
    /// Target proposition (K, or Q for until); defaults to the certificate's.
    #[arg(long)]
    prop: Option<String>,
    /// Proposition that must hold until the target (until only).
    #[arg(long)]
    hold_prop: Option<String>,
    /// Attractivity mode; inferred from the given parameters when omitted.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c3: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    /// Grid sampler with these per-axis counts, e.g. `100,100`.
    #[arg(long, conflicts_with = "random")]
    grid: Option<String>,
    /// Random sampler with this many points.
    #[arg(long)]
    random: Option<usize>,
    /// Sampler box as `lo,hi;lo,hi;...`.
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AutomatonArgs {
    #[arg(long)]
    formula: String,
    /// Observation word, comma separated, e.g. `p1,p1,p2`.
    #[arg(long)]
    run: Option<String>,
    /// Write the automaton as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the automaton in Graphviz format.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    csv: PathBuf,
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run`], writing to the given streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Certify(a) => cmd_certify(a, out),
        Command::Automaton(a) => cmd_automaton(a, out),
        Command::Export(a) => cmd_export(a, out),
        Command::Systems { name } => cmd_systems(name, out),
    }
}

fn config_for(spec: &str) -> Result<SystemConfig> {
    if let Some(cfg) = builtin_config(spec) {
        return Ok(cfg);
    }
    let path = Path::new(spec);
    if !path.exists() {
        let names: Vec<String> = builtin_examples().into_iter().map(|c| c.name).collect();
        bail!("`{spec}` is neither a built-in system ({}) nor a file", names.join(", "));
    }
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SystemConfig::from_toml_str(&src)?)
}

fn load_system(args: &SystemArgs) -> Result<LoadedSystem> {
    let mut cfg = config_for(&args.system)?;
    for s in &args.set {
        let (name, value) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects NAME=VALUE, got `{s}`"))?;
        let value: f64 = value.trim().parse().with_context(|| format!("--set {s}"))?;
        cfg.set_constant(name.trim(), value);
    }
    Ok(cfg.load()?)
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("{what}: `{}` is not a number", v.trim()))
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let sys = load_system(&a.system)?;
    let x0 = parse_floats(&a.x0, "--x0")?;
    let mut opts = sys.simulation.clone();
    if let Some(v) = a.tmax {
        opts.t_max = v;
    }
    if let Some(v) = a.jmax {
        opts.j_max = v;
    }
    if let Some(v) = a.step {
        opts.step = v;
    }
    if let Some(v) = a.seed {
        opts.seed = v;
    }
    if let Some(p) = a.priority {
        opts.priority = match p {
            PriorityArg::FlowFirst => Priority::FlowFirst,
            PriorityArg::JumpFirst => Priority::JumpFirst,
            PriorityArg::Random => Priority::Random,
        };
    }
    if let Some(s) = a.selection {
        opts.selection = match s {
            SelectionArg::First => SelectionPolicy::First,
            SelectionArg::Random => SelectionPolicy::Random,
        };
    }
    let r = simulate(&sys.system, &x0, &opts)?;
    let end = r.arc.final_point();
    writeln!(out, "system: {}", sys.config.name)?;
    writeln!(out, "samples: {}", r.arc.len())?;
    writeln!(out, "jumps: {}", r.jump_log.len())?;
    for jr in r.jump_log.iter().take(10) {
        writeln!(out, "  jump {} at t = {:.6}: {:?} -> {:?}", jr.j, jr.t, jr.x_pre, jr.x_post)?;
    }
    if r.jump_log.len() > 10 {
        writeln!(out, "  ... {} more", r.jump_log.len() - 10)?;
    }
    writeln!(out, "final: ({}, {}) x = {:?}", end.time.t, end.time.j, end.x)?;
    writeln!(out, "termination: {}", r.termination)?;
    if let Some(path) = &a.out {
        write_file(path, &TraceFile::from_arc(&r.arc, sys.trace_meta()).to_json())?;
        writeln!(out, "trace written to {}", path.display())?;
    }
    Ok(EXIT_OK)
}

/// Propositions recorded in the trace metadata by `simulate`.
fn propositions_from_meta(file: &TraceFile) -> Result<PropositionSet> {
    let meta = &file.meta;
    let specs: BTreeMap<String, SetSpec> = serde_json::from_value(meta.get("propositions").cloned().unwrap_or_default())
        .context("trace metadata has no usable `propositions`; pass --system")?;
    let constants: BTreeMap<String, f64> = match meta.get("constants") {
        Some(c) => serde_json::from_value(c.clone()).context("trace metadata `constants`")?,
        None => BTreeMap::new(),
    };
    Ok(compile_propositions(&specs, file.dim, &constants)?)
}

fn parse_time(s: &str) -> Result<HybridTime> {
    let (t, j) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("--at expects `t,j`, got `{s}`"))?;
    let t: f64 = t.trim().parse().with_context(|| format!("--at time `{t}`"))?;
    let j: usize = j.trim().parse().with_context(|| format!("--at jump count `{j}`"))?;
    Ok(HybridTime::new(t, j))
}

/// The stored sample at `at`, allowing for rounding in the printed time.
fn resolve_sample(arc: &HybridArc, at: HybridTime) -> Result<HybridTime> {
    let k = arc
        .sample_index(at)
        .or_else(|| arc.nearest_sample_index(at, 1e-9 * (1.0 + at.t.abs())))
        .ok_or_else(|| anyhow!("({}, {}) is not a sample point of the trace", at.t, at.j))?;
    Ok(arc.points().nth(k).unwrap().time)
}

fn cmd_check(a: CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let src = fs::read_to_string(&a.trace).with_context(|| format!("reading {}", a.trace.display()))?;
    let file = TraceFile::from_json(&src)?;
    let arc = file.to_arc()?;
    let props = match &a.system {
        Some(s) => load_system(&SystemArgs { system: s.clone(), set: vec![] })?.propositions,
        None => propositions_from_meta(&file)?,
    };
    let props = if a.tol > 0.0 { props.with_tolerance(a.tol) } else { props };
    let formula = parse_formula(&a.formula).map_err(|e| anyhow!("formula: {e}"))?;
    writeln!(out, "formula: {formula}")?;
    if a.all {
        let table = truth_table(&formula, &arc, &props)?;
        let times: Vec<HybridTime> = arc.points().map(|p| p.time).collect();
        match table.iter().position(|v| !v) {
            None => {
                writeln!(out, "true at all {} sampled hybrid times", times.len())?;
                Ok(EXIT_OK)
            }
            Some(k) => {
                let bad = table.iter().filter(|v| !**v).count();
                writeln!(
                    out,
                    "false at {bad} of {} sampled hybrid times; first counterexample at ({}, {})",
                    times.len(),
                    times[k].t,
                    times[k].j
                )?;
                Ok(EXIT_FALSE)
            }
        }
    } else {
        let at = match &a.at {
            Some(s) => resolve_sample(&arc, parse_time(s)?)?,
            None => HybridTime::new(0.0, 0),
        };
        let e = explain(&formula, &arc, &props, at)?;
        writeln!(out, "{e}")?;
        Ok(if e.holds { EXIT_OK } else { EXIT_FALSE })
    }
}

fn param(sys: &LoadedSystem, cert: Option<&LoadedCertificate>, flag: &Option<String>, key: &str) -> Result<Option<f64>> {
    if let Some(src) = flag {
        let spec = match src.trim().parse::<f64>() {
            Ok(v) => ParamSpec::Num(v),
            Err(_) => ParamSpec::Expr(src.clone()),
        };
        return Ok(Some(eval_param(&spec, &sys.constants, &format!("--{key}"))?));
    }
    Ok(cert.and_then(|c| c.params.get(key).copied()))
}

fn need(v: Option<f64>, key: &str) -> Result<f64> {
    v.ok_or_else(|| anyhow!("parameter `{key}` is required (pass --{key} or set it in the certificate)"))
}

fn build_sampler(a: &CertifyArgs, sys: &LoadedSystem, cert: Option<&LoadedCertificate>) -> Result<Sampler> {
    let base = cert.and_then(|c| c.sampler.clone()).or_else(|| sys.sampler.clone());
    let bounds = match &a.bounds {
        Some(b) => b
            .split(';')
            .map(|pair| {
                let v = parse_floats(pair, "--bounds")?;
                match v.as_slice() {
                    [lo, hi] => Ok([*lo, *hi]),
                    _ => bail!("--bounds: each axis needs `lo,hi`, got `{pair}`"),
                }
            })
            .collect::<Result<Vec<_>>>()?,
        None => base
            .as_ref()
            .map(|s| s.bounds.clone())
            .ok_or_else(|| anyhow!("no sampler configured; pass --bounds with --grid or --random"))?,
    };
    let mut sampler = match (&a.grid, a.random, base) {
        (Some(g), _, _) => {
            let counts = g
                .split(',')
                .map(|c| c.trim().parse::<usize>().map_err(|_| anyhow!("--grid: `{c}` is not a count")))
                .collect::<Result<Vec<_>>>()?;
            Sampler::grid(bounds, counts)
        }
        (None, Some(n), _) => Sampler::random(bounds, n, 0),
        (None, None, Some(mut s)) => {
            s.bounds = bounds;
            s
        }
        (None, None, None) => bail!("no sampler configured; pass --grid or --random"),
    };
    if let Some(seed) = a.seed {
        sampler.seed = seed;
    }
    sampler.validate(sys.system.dim)?;
    Ok(sampler)
}

fn fta_mode(a: &CertifyArgs, c: Option<f64>, c1: Option<f64>, c2: Option<f64>) -> Result<FtaMode> {
    let mode = a.mode.unwrap_or(if c1.is_some() || c2.is_some() { ModeArg::Flow } else { ModeArg::Jump });
    Ok(match mode {
        ModeArg::Flow => FtaMode::Flow { c1: need(c1, "c1")?, c2: need(c2, "c2")? },
        ModeArg::Jump => FtaMode::Jump { c: need(c, "c")? },
        ModeArg::Combined => bail!("combined mode is only available for `eventually`"),
    })
}

fn cmd_certify(a: CertifyArgs, out: &mut dyn Write) -> Result<i32> {
    let sys = load_system(&a.system)?;
    let cert = a.cert.as_deref().map(|n| sys.certificate(n)).transpose()?;
    let sampler = build_sampler(&a, &sys, cert)?;
    let prop_name = a
        .prop
        .clone()
        .or_else(|| cert.and_then(|c| c.prop.clone()))
        .ok_or_else(|| anyhow!("no target proposition; pass --prop"))?;
    let k = sys.proposition(&prop_name)?;
    let c = param(&sys, cert, &a.c, "c")?;
    let c1 = param(&sys, cert, &a.c1, "c1")?;
    let c2 = param(&sys, cert, &a.c2, "c2")?;
    let c3 = param(&sys, cert, &a.c3, "c3")?;
    let r = param(&sys, cert, &a.r, "r")?;
    let nbhd = cert.and_then(|c| c.neighborhood.as_ref());
    let require_cert = || cert.ok_or_else(|| anyhow!("this property needs --cert"));
    let system = &sys.system;

    let report: CertificateReport = match a.property {
        Property::Candidate => check_barrier_candidate(system, k, &require_cert()?.cert, &sampler)?,
        Property::Always => certify_always(system, k, &require_cert()?.cert, &sampler)?,
        Property::Next => certify_next(system, k, &sampler)?,
        Property::Eventually => {
            let v = &require_cert()?.cert;
            let mode = a.mode.unwrap_or(match (c1.is_some() || c2.is_some(), c.is_some() || c3.is_some()) {
                (true, true) => ModeArg::Combined,
                (true, false) => ModeArg::Flow,
                _ => ModeArg::Jump,
            });
            match mode {
                ModeArg::Flow => certify_eventually_flow(system, k, v, need(c1, "c1")?, need(c2, "c2")?, nbhd, &sampler)?,
                ModeArg::Jump => certify_eventually_jump(system, k, v, need(c, "c")?, nbhd, &sampler)?,
                ModeArg::Combined => {
                    let c3 = need(c3.or(c), "c3")?;
                    certify_eventually_combined(system, k, v, need(c1, "c1")?, need(c2, "c2")?, c3, nbhd, &sampler)?
                }
            }
        }
        Property::Until => {
            let lc = require_cert()?;
            let hold = a
                .hold_prop
                .clone()
                .or_else(|| lc.hold_prop.clone())
                .ok_or_else(|| anyhow!("until needs a hold proposition; pass --hold-prop"))?;
            let hold = sys.proposition(&hold)?;
            let mode = fta_mode(&a, c, c1, c2)?;
            certify_until_strong(system, hold, k, &lc.cert, mode, r.unwrap_or(f64::INFINITY), true, nbhd, &sampler)?
        }
        Property::EventuallyAlways => {
            let lc = require_cert()?;
            let mode = match &lc.barrier {
                Some(b) => EventuallyAlwaysMode::Barrier {
                    b: &sys.certificate(b)?.cert,
                    v: &lc.cert,
                    fta: fta_mode(&a, c, c1, c2)?,
                },
                None => EventuallyAlwaysMode::Strengthened {
                    v: &lc.cert,
                    c1: need(c1, "c1")?,
                    c2: need(c2, "c2")?,
                    c: need(c, "c")?,
                },
            };
            certify_eventually_always(system, k, mode, nbhd, &sampler)?
        }
    };
    let json = report.to_json();
    if a.json {
        writeln!(out, "{json}")?;
    } else {
        write!(out, "{report}")?;
    }
    if let Some(path) = &a.report {
        write_file(path, &json)?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_FALSE })
}

fn cmd_automaton(a: AutomatonArgs, out: &mut dyn Write) -> Result<i32> {
    let formula = parse_formula(&a.formula).map_err(|e| anyhow!("formula: {e}"))?;
    let fsa = build_automaton(&formula)?;
    print_fsa(&fsa, out)?;
    if let Some(path) = &a.out {
        write_file(path, &fsa.to_json())?;
    }
    if let Some(path) = &a.dot {
        write_file(path, &fsa.to_dot())?;
    }
    if let Some(word) = &a.run {
        let letters: Vec<&str> = word.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let run = run_automaton(&fsa, &letters)?;
        writeln!(out, "run: {}", run.states.join(" "))?;
        writeln!(out, "accepted: {}", run.accepted)?;
        return Ok(if run.accepted { EXIT_OK } else { EXIT_FALSE });
    }
    Ok(EXIT_OK)
}

fn print_fsa(fsa: &Fsa, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "states: {}", fsa.states.join(", "))?;
    writeln!(out, "initial: {}", fsa.initial)?;
    writeln!(out, "accepting: {}", fsa.accepting.join(", "))?;
    writeln!(out, "observations: {}", fsa.observations.join(", "))?;
    writeln!(out, "transitions:")?;
    for t in &fsa.transitions {
        writeln!(out, "  {} --{}--> {}", t.from, t.observation, t.to)?;
    }
    if let Some(s) = &fsa.sink {
        writeln!(out, "  (all other pairs go to {s})")?;
    }
    Ok(())
}

fn cmd_export(a: ExportArgs, out: &mut dyn Write) -> Result<i32> {
    let src = fs::read_to_string(&a.trace).with_context(|| format!("reading {}", a.trace.display()))?;
    let arc = TraceFile::from_json(&src)?.to_arc()?;
    write_file(&a.csv, &to_csv(&arc))?;
    writeln!(out, "{} samples written to {}", arc.len(), a.csv.display())?;
    Ok(EXIT_OK)
}

fn cmd_systems(name: Option<String>, out: &mut dyn Write) -> Result<i32> {
    match name {
        Some(n) => {
            let src = hyltl::registry::builtin_source(&n).ok_or_else(|| anyhow!("no built-in system `{n}`"))?;
            write!(out, "{src}")?;
        }
        None => {
            for cfg in builtin_examples() {
                writeln!(out, "{:<14} {}", cfg.name, cfg.description)?;
            }
        }
    }
    Ok(EXIT_OK)
}
