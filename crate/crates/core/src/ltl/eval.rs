use std::fmt;

use thiserror::Error;

use super::Formula;
use crate::hybrid::{HybridArc, HybridTime, PropositionSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LtlError {
    #[error("({}, {}) is not a sample point of the arc", .0.t, .0.j)]
    NotASample(HybridTime),
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("arc has no samples")]
    EmptyArc,
}

fn atom_table(name: &str, arc: &HybridArc, props: &PropositionSet) -> Result<Vec<bool>, LtlError> {
    let set = props
        .get(name)
        .ok_or_else(|| LtlError::UnknownProposition(name.to_string()))?;
    Ok(arc.points().map(|p| set.contains(p.x)).collect())
}

/// For each flat index, the index of the first sample of the next phase when
/// the sample is the last one of its phase and a jump follows.
fn jump_successors(arc: &HybridArc) -> Vec<Option<usize>> {
    let mut out = vec![None; arc.len()];
    let jumps = arc.domain().jumps();
    for j in 0..jumps {
        let next = arc.phase_offset(j + 1);
        out[next - 1] = Some(next);
    }
    out
}

/// Truth value of `f` at every sample of `arc`, in domain order.
///
/// Samples are totally ordered by `t + j`, so the temporal operators reduce
/// to backward scans over the flat sample list.
pub fn truth_table(f: &Formula, arc: &HybridArc, props: &PropositionSet) -> Result<Vec<bool>, LtlError> {
    if arc.is_empty() {
        return Err(LtlError::EmptyArc);
    }
    let succ = jump_successors(arc);
    table(f, arc, props, &succ)
}

fn table(
    f: &Formula,
    arc: &HybridArc,
    props: &PropositionSet,
    succ: &[Option<usize>],
) -> Result<Vec<bool>, LtlError> {
    let rec = |g: &Formula| table(g, arc, props, succ);
    let zip = |a: Vec<bool>, b: Vec<bool>, op: fn(bool, bool) -> bool| -> Vec<bool> {
        a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
    };
    Ok(match f {
        Formula::Atom(name) => atom_table(name, arc, props)?,
        Formula::Not(a) => rec(a)?.into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => zip(rec(a)?, rec(b)?, |x, y| x && y),
        Formula::Or(a, b) => zip(rec(a)?, rec(b)?, |x, y| x || y),
        Formula::Implies(a, b) => zip(rec(a)?, rec(b)?, |x, y| !x || y),
        Formula::Iff(a, b) => zip(rec(a)?, rec(b)?, |x, y| x == y),
        Formula::Next(a) => {
            let inner = rec(a)?;
            succ.iter().map(|s| s.is_some_and(|k| inner[k])).collect()
        }
        Formula::Eventually(a) => suffix_scan(rec(a)?, |acc, v| acc || v),
        Formula::Always(a) => suffix_scan(rec(a)?, |acc, v| acc && v),
        Formula::UntilStrong(a, b) => until(&rec(a)?, &rec(b)?),
        Formula::UntilWeak(a, b) => {
            let p = rec(a)?;
            let u = until(&p, &rec(b)?);
            let g = suffix_scan(p, |acc, v| acc && v);
            zip(u, g, |x, y| x || y)
        }
    })
}

fn suffix_scan(mut v: Vec<bool>, op: fn(bool, bool) -> bool) -> Vec<bool> {
    for i in (0..v.len().saturating_sub(1)).rev() {
        v[i] = op(v[i + 1], v[i]);
    }
    v
}

/// `U[i] = q[i] | (p[i] & U[i+1])`; the left operand is not required at the
/// witness itself.
fn until(p: &[bool], q: &[bool]) -> Vec<bool> {
    let n = q.len();
    let mut out = vec![false; n];
    out[n - 1] = q[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = q[i] || (p[i] && out[i + 1]);
    }
    out
}

fn index_of(arc: &HybridArc, at: HybridTime) -> Result<usize, LtlError> {
    arc.sample_index(at).ok_or(LtlError::NotASample(at))
}

pub fn evaluate(f: &Formula, arc: &HybridArc, props: &PropositionSet, at: HybridTime) -> Result<bool, LtlError> {
    let i = index_of(arc, at)?;
    Ok(truth_table(f, arc, props)?[i])
}

/// True iff `f` holds at every sample of the arc.
pub fn holds_for_all_times(f: &Formula, arc: &HybridArc, props: &PropositionSet) -> Result<bool, LtlError> {
    Ok(truth_table(f, arc, props)?.into_iter().all(|v| v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointRole {
    Witness,
    Counterexample,
}

/// Verdict at one sample, with the point that decides the outermost
/// temporal operator when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub holds: bool,
    pub at: HybridTime,
    /// Number of sampled hybrid times the verdict rests on (from `at` on).
    pub samples: usize,
    pub point: Option<(PointRole, HybridTime)>,
}

impl fmt::Display for Explanation {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            out,
            "{} at ({}, {}) on {} sampled hybrid times",
            if self.holds { "true" } else { "false" },
            self.at.t,
            self.at.j,
            self.samples
        )?;
        if let Some((role, p)) = self.point {
            let label = match role {
                PointRole::Witness => "witness",
                PointRole::Counterexample => "counterexample",
            };
            write!(out, "; {label} at ({}, {})", p.t, p.j)?;
        }
        Ok(())
    }
}

pub fn explain(f: &Formula, arc: &HybridArc, props: &PropositionSet, at: HybridTime) -> Result<Explanation, LtlError> {
    let i = index_of(arc, at)?;
    let holds = truth_table(f, arc, props)?[i];
    let times: Vec<HybridTime> = arc.points().map(|p| p.time).collect();
    let first = |v: &[bool], want: bool| (i..v.len()).find(|&k| v[k] == want);
    let pick = |k: Option<usize>, role| k.map(|k| (role, times[k]));
    let point = match f {
        Formula::Eventually(a) if holds => pick(first(&truth_table(a, arc, props)?, true), PointRole::Witness),
        Formula::Always(a) if !holds => pick(first(&truth_table(a, arc, props)?, false), PointRole::Counterexample),
        Formula::Next(_) => {
            let role = if holds { PointRole::Witness } else { PointRole::Counterexample };
            jump_successors(arc)[i].map(|k| (role, times[k]))
        }
        Formula::UntilStrong(a, b) | Formula::UntilWeak(a, b) => {
            let p = truth_table(a, arc, props)?;
            let q = truth_table(b, arc, props)?;
            // The first sample that either satisfies q or breaks p decides.
            let k = (i..p.len()).find(|&k| q[k] || !p[k]);
            match k {
                Some(k) if q[k] => pick(Some(k), PointRole::Witness),
                Some(k) => pick(Some(k), PointRole::Counterexample),
                None => None,
            }
        }
        _ => None,
    };
    Ok(Explanation {
        holds,
        at,
        samples: times.len() - i,
        point,
    })
}
