//! Simulation of hybrid systems: fixed-step RK4 flows, bisection event
//! localization, jumps, and termination classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hybrid::{
    ArcError, DomainError, HybridArc, HybridSystem, HybridTime, HybridTimeDomain, Phase,
    PropositionSet, Sample, StateMap,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    FlowFirst,
    JumpFirst,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    First,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub t_max: f64,
    pub j_max: usize,
    pub step: f64,
    pub event_tol: f64,
    pub zeno_gap: f64,
    pub zeno_run: usize,
    pub priority: Priority,
    pub seed: u64,
    pub selection: SelectionPolicy,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            j_max: 100,
            step: 1e-3,
            event_tol: 1e-9,
            zeno_gap: 1e-6,
            zeno_run: 5,
            priority: Priority::JumpFirst,
            seed: 0,
            selection: SelectionPolicy::First,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::BadOptions(m.to_string()));
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return bad("t_max must be positive and finite");
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return bad("step must be positive and finite");
        }
        if !(self.event_tol > 0.0) {
            return bad("event_tol must be positive");
        }
        if !(self.zeno_gap >= 0.0) {
            return bad("zeno_gap must be non-negative");
        }
        if self.zeno_run == 0 {
            return bad("zeno_run must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetT,
    BudgetJ,
    ZenoFlagged,
    DeadEnd,
    LeftStateSpace,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::BudgetT => "budget_t",
            Termination::BudgetJ => "budget_j",
            Termination::ZenoFlagged => "zeno_flagged",
            Termination::DeadEnd => "dead_end",
            Termination::LeftStateSpace => "left_state_space",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub t: f64,
    pub j: usize,
    pub x_pre: Vec<f64>,
    pub x_post: Vec<f64>,
    pub selection: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub arc: HybridArc,
    pub termination: Termination,
    pub jump_log: Vec<JumpRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("initial state is in neither the closure of C nor D")]
    NotInCupD,
    #[error("event bracketing failed; reduce the step size")]
    StepTooLarge,
    #[error("predicate has the same value at both ends of the bracket")]
    NoSignChange,
    #[error("invalid options: {0}")]
    BadOptions(String),
    #[error("initial state has dimension {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error(transparent)]
    Arc(#[from] ArcError),
}

impl From<DomainError> for SimError {
    fn from(e: DomainError) -> Self {
        SimError::Arc(e.into())
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
}

/// One classical fourth-order Runge-Kutta step of size `h`.
pub fn rk4_step(f: &StateMap, x: &[f64], h: f64) -> Vec<f64> {
    let k1 = f(x);
    let k2 = f(&axpy(x, h / 2.0, &k1));
    let k3 = f(&axpy(x, h / 2.0, &k2));
    let k4 = f(&axpy(x, h, &k3));
    x.iter()
        .enumerate()
        .map(|(i, xi)| xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn bisect<F, P>(flow: F, pred: P, bracket: (f64, f64), tol: f64) -> Result<(f64, f64), SimError>
where
    F: Fn(f64) -> Vec<f64>,
    P: Fn(&[f64]) -> bool,
{
    let (mut lo, mut hi) = bracket;
    let p_lo = pred(&flow(lo));
    if p_lo == pred(&flow(hi)) {
        return Err(SimError::NoSignChange);
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(&flow(mid)) == p_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Bisection on `pred(flow(t))` over `bracket` until the bracket is no wider
/// than `tol`; returns the midpoint of the final bracket.
pub fn locate_boundary<F, P>(flow: F, pred: P, bracket: (f64, f64), tol: f64) -> Result<f64, SimError>
where
    F: Fn(f64) -> Vec<f64>,
    P: Fn(&[f64]) -> bool,
{
    let (lo, hi) = bisect(flow, pred, bracket, tol)?;
    Ok(0.5 * (lo + hi))
}

fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// State-space tolerance matching `event_tol` in time: distance covered by
/// the fastest flow selection during `10 * event_tol`.
fn space_tol(system: &HybridSystem, x: &[f64], event_tol: f64) -> f64 {
    let speed = system
        .flow_selections
        .iter()
        .map(|f| f(x).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    10.0 * event_tol * (1.0 + speed)
}

struct ArcBuilder {
    phases: Vec<Vec<Sample>>,
}

impl ArcBuilder {
    fn push(&mut self, t: f64, x: Vec<f64>) {
        self.phases.last_mut().unwrap().push(Sample::new(t, x));
    }

    fn new_phase(&mut self, t: f64, x: Vec<f64>) {
        self.phases.push(vec![Sample::new(t, x)]);
    }

    fn finish(self, dim: usize) -> Result<HybridArc, SimError> {
        let phases: Vec<Phase> = self
            .phases
            .iter()
            .enumerate()
            .map(|(j, s)| Phase::new(j, s[0].t, s[s.len() - 1].t))
            .collect();
        let domain = HybridTimeDomain::validate(phases)?;
        Ok(HybridArc::new(dim, domain, self.phases)?)
    }
}

enum FlowEnd {
    Budget,
    LeftStateSpace,
    Event { advanced: f64 },
}

struct Run<'a> {
    system: &'a HybridSystem,
    opts: &'a SimOptions,
    t: f64,
    x: Vec<f64>,
    arc: ArcBuilder,
}

impl Run<'_> {
    fn flow(&mut self, sel: usize) -> Result<FlowEnd, SimError> {
        let system = self.system;
        let opts = self.opts;
        let f = &system.flow_selections[sel];
        let jump_first = opts.priority == Priority::JumpFirst;
        let stop = |y: &[f64]| {
            !all_finite(y) || !system.flow_set.contains(y) || (jump_first && system.jump_set.contains(y))
        };
        let start = self.t;
        loop {
            if self.t >= opts.t_max {
                return Ok(FlowEnd::Budget);
            }
            let remaining = opts.t_max - self.t;
            let last = remaining <= opts.step * (1.0 + 1e-9);
            let h = if last { remaining } else { opts.step };
            let y = rk4_step(f, &self.x, h);
            if !stop(&y) {
                self.t = if last { opts.t_max } else { self.t + h };
                self.x = y;
                self.arc.push(self.t, self.x.clone());
                if !system.state_space.contains(&self.x) {
                    return Ok(FlowEnd::LeftStateSpace);
                }
                continue;
            }
            let x = self.x.clone();
            let along = |s: f64| rk4_step(f, &x, s);
            let (lo, hi) =
                bisect(along, stop, (0.0, h), opts.event_tol).map_err(|_| SimError::StepTooLarge)?;
            let mut s = 0.5 * (lo + hi);
            let mut y = rk4_step(f, &x, s);
            let tol = space_tol(system, &y, opts.event_tol);
            if !system.jump_set.contains_within(&y, tol) {
                let y_hi = rk4_step(f, &x, hi);
                if all_finite(&y_hi) && system.jump_set.contains_within(&y_hi, tol) {
                    s = hi;
                    y = y_hi;
                }
            }
            self.t += s;
            self.x = y;
            self.arc.push(self.t, self.x.clone());
            if !system.state_space.contains(&self.x) {
                return Ok(FlowEnd::LeftStateSpace);
            }
            return Ok(FlowEnd::Event {
                advanced: self.t - start,
            });
        }
    }
}

fn pick(policy: SelectionPolicy, n: usize, rng: &mut ChaCha8Rng) -> usize {
    match policy {
        SelectionPolicy::First => 0,
        SelectionPolicy::Random => rng.gen_range(0..n),
    }
}

/// Simulates `system` from `x0`. Output is a pure function of the inputs,
/// including `opts.seed`.
pub fn simulate(system: &HybridSystem, x0: &[f64], opts: &SimOptions) -> Result<SimResult, SimError> {
    opts.validate()?;
    if x0.len() != system.dim {
        return Err(SimError::Dimension {
            got: x0.len(),
            expected: system.dim,
        });
    }
    let tol = space_tol(system, x0, opts.event_tol);
    if !all_finite(x0)
        || !(system.flow_set.contains_within(x0, tol) || system.jump_set.contains_within(x0, tol))
    {
        return Err(SimError::NotInCupD);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut run = Run {
        system,
        opts,
        t: 0.0,
        x: x0.to_vec(),
        arc: ArcBuilder {
            phases: vec![vec![Sample::new(0.0, x0.to_vec())]],
        },
    };
    let mut jump_log = Vec::new();
    let mut j = 0;
    let mut phase_start = 0.0;
    let mut short_flows = 0;
    let mut blocked = false;

    let termination = loop {
        let x = &run.x;
        if !all_finite(x) {
            break Termination::DeadEnd;
        }
        if !system.state_space.contains(x) {
            break Termination::LeftStateSpace;
        }
        let tol = space_tol(system, x, opts.event_tol);
        let can_jump = !system.jump_selections.is_empty() && system.jump_set.contains_within(x, tol);
        let can_flow = !blocked && !system.flow_selections.is_empty() && system.flow_set.contains(x);
        let jump = match (can_flow, can_jump) {
            (false, false) => break Termination::DeadEnd,
            (true, false) => false,
            (false, true) => true,
            (true, true) => match opts.priority {
                Priority::JumpFirst => true,
                Priority::FlowFirst => false,
                Priority::Random => rng.gen_bool(0.5),
            },
        };

        if jump {
            if j >= opts.j_max {
                break Termination::BudgetJ;
            }
            short_flows = if run.t - phase_start < opts.zeno_gap {
                short_flows + 1
            } else {
                0
            };
            if short_flows >= opts.zeno_run {
                break Termination::ZenoFlagged;
            }
            let sel = pick(opts.selection, system.jump_selections.len(), &mut rng);
            let x_post = (system.jump_selections[sel])(x);
            jump_log.push(JumpRecord {
                t: run.t,
                j,
                x_pre: x.clone(),
                x_post: x_post.clone(),
                selection: sel,
            });
            j += 1;
            phase_start = run.t;
            blocked = false;
            run.arc.new_phase(run.t, x_post.clone());
            run.x = x_post;
            continue;
        }

        if run.t >= opts.t_max {
            break Termination::BudgetT;
        }
        let sel = pick(opts.selection, system.flow_selections.len(), &mut rng);
        match run.flow(sel)? {
            FlowEnd::Budget => break Termination::BudgetT,
            FlowEnd::LeftStateSpace => break Termination::LeftStateSpace,
            FlowEnd::Event { advanced } => blocked = advanced <= opts.event_tol,
        }
    };

    Ok(SimResult {
        arc: run.arc.finish(system.dim)?,
        termination,
        jump_log,
    })
}

/// First sample point, in hybrid time order, at which the proposition holds:
/// `g(x) <= tol` when the proposition has a margin function, the predicate
/// itself otherwise.
pub fn measure_settling_time(
    arc: &HybridArc,
    prop: &str,
    props: &PropositionSet,
    tol: f64,
) -> Result<Option<HybridTime>, SimError> {
    let set = props
        .get(prop)
        .ok_or_else(|| SimError::UnknownProposition(prop.to_string()))?;
    Ok(arc
        .points()
        .find(|p| match &set.margin {
            Some(g) => g(p.x) <= tol,
            None => set.contains(p.x),
        })
        .map(|p| p.time))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_root_of_parabola() {
        let t = locate_boundary(
            |t| vec![1.0 - t * t / 2.0],
            |x| x[0] <= 0.0,
            (1.0, 2.0),
            1e-9,
        )
        .unwrap();
        assert!((t - 2f64.sqrt()).abs() <= 1e-9);
    }

    #[test]
    fn locate_flip_just_inside_bracket() {
        let tol = 1e-6;
        let t = locate_boundary(|t| vec![t], |x| x[0] >= 0.5 + tol, (0.5, 1.0), tol).unwrap();
        assert!((t - (0.5 + tol)).abs() <= tol);
    }

    #[test]
    fn locate_without_sign_change() {
        let r = locate_boundary(|t| vec![t], |x| x[0] > 5.0, (0.0, 1.0), 1e-9);
        assert_eq!(r, Err(SimError::NoSignChange));
    }

    #[test]
    fn rejects_bad_options() {
        let opts = SimOptions {
            step: 0.0,
            ..Default::default()
        };
        assert!(matches!(opts.validate(), Err(SimError::BadOptions(_))));
    }
}
