//! Deterministic finite state automata for a co-safe LTL fragment, and the
//! hybrid system augmented with an automaton state.
//!
//! Supported formulas: `g ::= l | F l | l U l | X l | g & g`, where `l` is an
//! atom or a negated atom. Each letter of the observation alphabet is a
//! single literal: `p` means `p` holds and no other atom does, `!p` means no
//! atom holds.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hybrid::{
    HybridArc, HybridSystem, HybridTimeDomain, PropositionSet, StateMap, StateSet, SystemError,
};
use crate::ltl::Formula;

pub const ACCEPTING_PROP: &str = "fsa_accepting";
const SINK: &str = "sink";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutomatonError {
    #[error("formula `{0}` is outside the supported fragment (F l, l U l, X l, literals, and their conjunctions)")]
    UnsupportedFormula(String),
    #[error("observation `{0}` is not in the alphabet")]
    UnknownObservation(String),
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("observation order is empty")]
    EmptyObservationOrder,
    #[error("malformed automaton: {0}")]
    Malformed(String),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub observation: String,
    pub to: String,
}

/// `(S, s0, O, delta, S_F)` with an optional reject sink. Transitions into the
/// sink are left implicit: any pair without a listed transition goes there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fsa {
    pub states: Vec<String>,
    pub initial: String,
    pub observations: Vec<String>,
    pub transitions: Vec<Transition>,
    pub accepting: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub states: Vec<String>,
    pub accepted: bool,
}

/// Total DFA over letter indices, used during construction.
#[derive(Debug, Clone)]
struct Dfa {
    init: usize,
    delta: Vec<Vec<usize>>,
    accepting: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
struct Literal<'a> {
    atom: &'a str,
    positive: bool,
}

fn literal(f: &Formula) -> Option<Literal<'_>> {
    match f {
        Formula::Atom(a) => Some(Literal { atom: a, positive: true }),
        Formula::Not(inner) => match &**inner {
            Formula::Atom(a) => Some(Literal { atom: a, positive: false }),
            _ => None,
        },
        _ => None,
    }
}

impl Literal<'_> {
    fn holds(&self, letter: &str) -> bool {
        (letter == self.atom) == self.positive
    }
}

fn alphabet(atoms: &[&str]) -> Vec<String> {
    let atoms: BTreeSet<&str> = atoms.iter().copied().collect();
    let mut out: Vec<String> = atoms.iter().map(|a| a.to_string()).collect();
    out.extend(atoms.iter().map(|a| format!("!{a}")));
    out
}

fn build_dfa(f: &Formula, letters: &[String]) -> Result<Dfa, AutomatonError> {
    let unsupported = || AutomatonError::UnsupportedFormula(f.to_string());
    let table = |n: usize, step: &dyn Fn(usize, &str) -> usize| -> Vec<Vec<usize>> {
        (0..n).map(|s| letters.iter().map(|l| step(s, l)).collect()).collect()
    };
    // State 0 is initial; the accepting state is 1 and the dead state is the last.
    let dfa = match f {
        Formula::And(a, b) => return Ok(product(&build_dfa(a, letters)?, &build_dfa(b, letters)?)),
        Formula::Eventually(a) => {
            let l = literal(a).ok_or_else(unsupported)?;
            Dfa {
                init: 0,
                delta: table(2, &|s, x| if s == 1 || l.holds(x) { 1 } else { 0 }),
                accepting: vec![false, true],
            }
        }
        Formula::UntilStrong(a, b) => {
            let (p, q) = (literal(a).ok_or_else(unsupported)?, literal(b).ok_or_else(unsupported)?);
            Dfa {
                init: 0,
                delta: table(3, &|s, x| match s {
                    0 if q.holds(x) => 1,
                    0 if p.holds(x) => 0,
                    1 => 1,
                    _ => 2,
                }),
                accepting: vec![false, true, false],
            }
        }
        Formula::Next(a) => {
            let l = literal(a).ok_or_else(unsupported)?;
            // 0 -> 2 (one letter consumed) -> 1 if the second letter fits.
            Dfa {
                init: 0,
                delta: table(4, &|s, x| match s {
                    0 => 2,
                    2 if l.holds(x) => 1,
                    1 => 1,
                    _ => 3,
                }),
                accepting: vec![false, true, false, false],
            }
        }
        _ => {
            let l = literal(f).ok_or_else(unsupported)?;
            Dfa {
                init: 0,
                delta: table(3, &|s, x| match s {
                    0 if l.holds(x) => 1,
                    1 => 1,
                    _ => 2,
                }),
                accepting: vec![false, true, false],
            }
        }
    };
    Ok(dfa)
}

fn product(a: &Dfa, b: &Dfa) -> Dfa {
    let letters = a.delta[0].len();
    let mut index = HashMap::new();
    let mut pairs = vec![(a.init, b.init)];
    index.insert((a.init, b.init), 0);
    let mut delta = Vec::new();
    let mut k = 0;
    while k < pairs.len() {
        let (s, t) = pairs[k];
        let row = (0..letters)
            .map(|l| {
                let next = (a.delta[s][l], b.delta[t][l]);
                *index.entry(next).or_insert_with(|| {
                    pairs.push(next);
                    pairs.len() - 1
                })
            })
            .collect();
        delta.push(row);
        k += 1;
    }
    let accepting = pairs.iter().map(|&(s, t)| a.accepting[s] && b.accepting[t]).collect();
    Dfa { init: 0, delta, accepting }
}

/// Moore partition refinement; returns the class of every state.
fn minimize(d: &Dfa) -> Vec<usize> {
    let n = d.delta.len();
    let mut class: Vec<usize> = d.accepting.iter().map(|&a| a as usize).collect();
    loop {
        let mut sigs: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let next: Vec<usize> = (0..n)
            .map(|s| {
                let sig = (class[s], d.delta[s].iter().map(|&t| class[t]).collect());
                let len = sigs.len();
                *sigs.entry(sig).or_insert(len)
            })
            .collect();
        let changed = sigs.len() != class.iter().collect::<BTreeSet<_>>().len();
        class = next;
        if !changed {
            return class;
        }
    }
}

/// Builds the automaton of a supported formula. The result is minimal; states
/// are named `s0` (initial), then the accepting states, then the others, in
/// breadth-first order. A `sink` absorbs all words that can no longer be
/// accepted.
pub fn build_automaton(f: &Formula) -> Result<Fsa, AutomatonError> {
    build_automaton_with_atoms(f, &f.atoms())
}

/// As [`build_automaton`], over the alphabet of a superset `atoms` of the
/// formula's atoms.
pub fn build_automaton_with_atoms(f: &Formula, atoms: &[&str]) -> Result<Fsa, AutomatonError> {
    if let Some(a) = f.atoms().into_iter().find(|a| !atoms.contains(a)) {
        return Err(AutomatonError::UnknownProposition(a.to_string()));
    }
    let letters = alphabet(atoms);
    let dfa = build_dfa(f, &letters)?;
    let class = minimize(&dfa);
    let classes = class.iter().max().unwrap() + 1;
    let mut delta = vec![Vec::new(); classes];
    let mut accepting = vec![false; classes];
    for (s, &c) in class.iter().enumerate() {
        delta[c] = dfa.delta[s].iter().map(|&t| class[t]).collect();
        accepting[c] = dfa.accepting[s];
    }
    // Classes from which no accepting class is reachable.
    let mut live = accepting.clone();
    loop {
        let mut grew = false;
        for c in 0..classes {
            if !live[c] && delta[c].iter().any(|&t| live[t]) {
                live[c] = true;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let init = class[dfa.init];
    let mut order = Vec::new();
    let mut seen = vec![false; classes];
    let mut queue = VecDeque::from([init]);
    seen[init] = true;
    let mut needs_sink = !live[init];
    while let Some(c) = queue.pop_front() {
        if !live[c] {
            continue;
        }
        order.push(c);
        for &t in &delta[c] {
            needs_sink |= !live[t];
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    let mut names: HashMap<usize, String> = HashMap::new();
    let mut states = Vec::new();
    if live[init] {
        names.insert(init, "s0".into());
        states.push("s0".to_string());
    }
    let rest = order.iter().filter(|&&c| c != init);
    let (acc, non): (Vec<&usize>, Vec<&usize>) = rest.partition(|&&c| accepting[c]);
    for &c in acc.into_iter().chain(non) {
        let name = format!("s{}", states.len());
        names.insert(c, name.clone());
        states.push(name);
    }
    let sink = needs_sink.then(|| SINK.to_string());
    if let Some(s) = &sink {
        states.push(s.clone());
    }
    let mut transitions = Vec::new();
    for &c in &order {
        for (l, &t) in delta[c].iter().enumerate() {
            if live[t] {
                transitions.push(Transition {
                    from: names[&c].clone(),
                    observation: letters[l].clone(),
                    to: names[&t].clone(),
                });
            }
        }
    }
    transitions.sort_by(|a, b| {
        let key = |t: &Transition| (states.iter().position(|s| *s == t.from), letters.iter().position(|o| *o == t.observation));
        key(a).cmp(&key(b))
    });
    let accepting = order.iter().filter(|&&c| accepting[c]).map(|c| names[c].clone()).collect::<BTreeSet<_>>();
    Ok(Fsa {
        initial: if live[init] { "s0".into() } else { SINK.into() },
        states,
        observations: letters,
        transitions,
        accepting: accepting.into_iter().collect(),
        sink,
    })
}

impl Fsa {
    pub fn validate(&self) -> Result<(), AutomatonError> {
        let bad = |m: String| Err(AutomatonError::Malformed(m));
        let known = |s: &String| self.states.contains(s);
        if !known(&self.initial) {
            return bad(format!("initial state `{}` is not declared", self.initial));
        }
        if let Some(s) = self.accepting.iter().find(|s| !known(s)) {
            return bad(format!("accepting state `{s}` is not declared"));
        }
        if let Some(s) = self.sink.as_ref().filter(|s| !known(s)) {
            return bad(format!("sink `{s}` is not declared"));
        }
        let mut seen = BTreeSet::new();
        for t in &self.transitions {
            if !known(&t.from) || !known(&t.to) || !self.observations.contains(&t.observation) {
                return bad(format!("transition {} --{}--> {} uses undeclared labels", t.from, t.observation, t.to));
            }
            if !seen.insert((&t.from, &t.observation)) {
                return bad(format!("two transitions from `{}` on `{}`", t.from, t.observation));
            }
        }
        let total = self.states.len() * self.observations.len();
        if self.sink.is_none() && seen.len() < total {
            return bad("transition map is partial and there is no sink".into());
        }
        Ok(())
    }

    pub fn is_accepting(&self, state: &str) -> bool {
        self.accepting.iter().any(|s| s == state)
    }

    /// Successor of `state` on `observation`; missing transitions lead to the sink.
    pub fn step(&self, state: &str, observation: &str) -> Result<&str, AutomatonError> {
        if !self.observations.iter().any(|o| o == observation) {
            return Err(AutomatonError::UnknownObservation(observation.to_string()));
        }
        let found = self
            .transitions
            .iter()
            .find(|t| t.from == state && t.observation == observation);
        match (found, &self.sink) {
            (Some(t), _) => Ok(&t.to),
            (None, Some(s)) => Ok(s),
            (None, None) => Err(AutomatonError::Malformed(format!(
                "no transition from `{state}` on `{observation}`"
            ))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("automaton serializes")
    }

    pub fn from_json(src: &str) -> Result<Self, AutomatonError> {
        let fsa: Fsa = serde_json::from_str(src).map_err(|e| AutomatonError::Malformed(e.to_string()))?;
        fsa.validate()?;
        Ok(fsa)
    }

    /// Graphviz rendering; edges between the same pair of states are merged.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph fsa {\n  rankdir=LR;\n  start [shape=point];\n");
        for s in &self.states {
            let shape = if self.is_accepting(s) { "doublecircle" } else { "circle" };
            writeln!(out, "  \"{s}\" [shape={shape}];").unwrap();
        }
        writeln!(out, "  start -> \"{}\";", self.initial).unwrap();
        let mut edges: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
        let pos = |s: &str| self.states.iter().position(|x| x == s).unwrap();
        for t in &self.transitions {
            edges.entry((pos(&t.from), pos(&t.to))).or_default().push(&t.observation);
        }
        for ((a, b), labels) in edges {
            writeln!(out, "  \"{}\" -> \"{}\" [label=\"{}\"];", self.states[a], self.states[b], labels.join(", ")).unwrap();
        }
        out.push_str("}\n");
        out
    }
}

pub fn run_automaton<S: AsRef<str>>(fsa: &Fsa, word: &[S]) -> Result<Run, AutomatonError> {
    let mut states = vec![fsa.initial.clone()];
    for o in word {
        let next = fsa.step(states.last().unwrap(), o.as_ref())?.to_string();
        states.push(next);
    }
    let accepted = fsa.is_accepting(states.last().unwrap());
    Ok(Run { states, accepted })
}

/// The first proposition of `order` that holds at `x`, or the negation of
/// the first one when none does.
pub fn observe(x: &[f64], props: &PropositionSet, order: &[String]) -> Result<String, AutomatonError> {
    let first = order.first().ok_or(AutomatonError::EmptyObservationOrder)?;
    for name in order {
        let holds = props
            .holds(name, x)
            .ok_or_else(|| AutomatonError::UnknownProposition(name.clone()))?;
        if holds {
            return Ok(name.clone());
        }
    }
    Ok(format!("!{first}"))
}

/// Hybrid system with state `(x, s)`, where `s` is the index of an automaton
/// state in `fsa.states`. Flows leave `s` unchanged; each jump of the base
/// system moves `s` along the transition labelled by the observation at the
/// pre-jump state. The returned propositions are the base ones, read on the
/// `x` part, plus [`ACCEPTING_PROP`].
pub fn augment_system(
    system: &HybridSystem,
    fsa: &Fsa,
    props: &PropositionSet,
    order: &[String],
) -> Result<(HybridSystem, PropositionSet), AutomatonError> {
    fsa.validate()?;
    if order.is_empty() {
        return Err(AutomatonError::EmptyObservationOrder);
    }
    for name in order {
        if !props.contains_name(name) {
            return Err(AutomatonError::UnknownProposition(name.clone()));
        }
        for label in [name.clone(), format!("!{name}")] {
            if !fsa.observations.contains(&label) {
                return Err(AutomatonError::UnknownObservation(label));
            }
        }
    }
    let n = system.dim;
    let count = fsa.states.len();
    let index = |s: &str| fsa.states.iter().position(|x| x == s).unwrap();
    // next[state][observation]
    let table: Vec<Vec<usize>> = fsa
        .states
        .iter()
        .map(|s| {
            fsa.observations
                .iter()
                .map(|o| fsa.step(s, o).map(index))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let table = Arc::new(table);
    let observations = Arc::new(fsa.observations.clone());
    let state_of = move |x: &[f64]| -> Option<usize> {
        let s = x[n];
        (s >= 0.0 && s.fract() == 0.0 && (s as usize) < count).then_some(s as usize)
    };

    let lift = |set: &StateSet| -> StateSet {
        let contains = set.contains.clone();
        let lifted = StateSet::new(Arc::new(move |x: &[f64]| state_of(x).is_some() && contains(&x[..n])));
        match &set.margin {
            Some(g) => {
                let g = g.clone();
                StateSet { margin: Some(Arc::new(move |x: &[f64]| g(&x[..n]))), ..lifted }
            }
            None => lifted,
        }
    };
    let flows: Vec<StateMap> = system
        .flow_selections
        .iter()
        .map(|f| {
            let f = f.clone();
            Arc::new(move |x: &[f64]| {
                let mut v = f(&x[..n]);
                v.push(0.0);
                v
            }) as StateMap
        })
        .collect();
    let jumps: Vec<StateMap> = system
        .jump_selections
        .iter()
        .map(|g| {
            let g = g.clone();
            let props = props.clone();
            let order = order.to_vec();
            let table = table.clone();
            let observations = observations.clone();
            Arc::new(move |x: &[f64]| {
                let mut v = g(&x[..n]);
                let next = state_of(x).and_then(|s| {
                    let o = observe(&x[..n], &props, &order).ok()?;
                    let k = observations.iter().position(|l| *l == o)?;
                    Some(table[s][k] as f64)
                });
                v.push(next.unwrap_or(f64::NAN));
                v
            }) as StateMap
        })
        .collect();
    let augmented = HybridSystem::new(
        format!("{}_x_fsa", system.name),
        n + 1,
        lift(&system.flow_set),
        lift(&system.jump_set),
        flows,
        jumps,
    )?
    .with_state_space(lift(&system.state_space));

    let mut lifted_props = PropositionSet::new();
    for name in props.names() {
        lifted_props.insert(name, lift(props.get(name).unwrap()));
    }
    let accepting: Vec<usize> = fsa.accepting.iter().map(|s| index(s)).collect();
    lifted_props.insert(
        ACCEPTING_PROP,
        StateSet::new(Arc::new(move |x: &[f64]| state_of(x).is_some_and(|s| accepting.contains(&s)))),
    );
    Ok((augmented, lifted_props))
}

/// A word as a discrete trace: one point phase per letter, with coordinate
/// `i` equal to 1 exactly when the letter is `atoms[i]`. The returned
/// propositions name the atoms.
pub fn word_arc<S: AsRef<str>>(word: &[S], atoms: &[&str]) -> Result<(HybridArc, PropositionSet), AutomatonError> {
    if word.is_empty() {
        return Err(AutomatonError::Malformed("empty word".into()));
    }
    let dim = atoms.len().max(1);
    let triples: Vec<(usize, f64, f64)> = (0..word.len()).map(|j| (j, 0.0, 0.0)).collect();
    let domain = HybridTimeDomain::from_triples(&triples).expect("point phases form a domain");
    let samples = word.iter().enumerate().map(|(j, letter)| {
        let x = (0..dim).map(|i| (atoms.get(i) == Some(&letter.as_ref())) as u8 as f64).collect();
        (0.0, j, x)
    });
    let arc = HybridArc::from_flat(dim, domain, samples).expect("word arc is consistent");
    let mut props = PropositionSet::new();
    for (i, a) in atoms.iter().enumerate() {
        props.insert(*a, StateSet::new(Arc::new(move |x: &[f64]| x[i] > 0.5)));
    }
    Ok((arc, props))
}
