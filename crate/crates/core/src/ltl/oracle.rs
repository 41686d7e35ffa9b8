//! Brute-force evaluator that follows the quantified definitions literally,
//! enumerating all pairs of sampled hybrid times. Quadratic or worse; meant as
//! a reference for testing the recursive evaluator.

use std::collections::HashMap;

use super::{Formula, LtlError};
use crate::hybrid::{HybridArc, HybridTime, PropositionSet};

struct Oracle<'a> {
    times: Vec<HybridTime>,
    states: Vec<&'a [f64]>,
    props: &'a PropositionSet,
    memo: HashMap<(*const Formula, usize), bool>,
}

impl Oracle<'_> {
    fn total(&self, k: usize) -> f64 {
        self.times[k].t + self.times[k].j as f64
    }

    fn later(&self, i: usize) -> Vec<usize> {
        (0..self.times.len()).filter(|&k| self.total(k) >= self.total(i)).collect()
    }

    fn eval(&mut self, f: &Formula, i: usize) -> Result<bool, LtlError> {
        let key = (f as *const Formula, i);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let v = match f {
            Formula::Atom(name) => self
                .props
                .holds(name, self.states[i])
                .ok_or_else(|| LtlError::UnknownProposition(name.clone()))?,
            Formula::Not(a) => !self.eval(a, i)?,
            Formula::And(a, b) => {
                let (x, y) = (self.eval(a, i)?, self.eval(b, i)?);
                x && y
            }
            Formula::Or(a, b) => {
                let (x, y) = (self.eval(a, i)?, self.eval(b, i)?);
                x || y
            }
            Formula::Implies(a, b) => {
                let (x, y) = (self.eval(a, i)?, self.eval(b, i)?);
                !x || y
            }
            Formula::Iff(a, b) => self.eval(a, i)? == self.eval(b, i)?,
            Formula::Next(a) => {
                // (t, j+1) must itself be a point of the domain.
                let target = HybridTime::new(self.times[i].t, self.times[i].j + 1);
                match self.times.iter().position(|&s| s == target) {
                    Some(k) => self.eval(a, k)?,
                    None => false,
                }
            }
            Formula::Eventually(a) => {
                let mut any = false;
                for k in self.later(i) {
                    any |= self.eval(a, k)?;
                }
                any
            }
            Formula::Always(a) => {
                let mut all = true;
                for k in self.later(i) {
                    all &= self.eval(a, k)?;
                }
                all
            }
            Formula::UntilStrong(a, b) => self.until(a, b, i)?,
            Formula::UntilWeak(a, b) => {
                let mut all = true;
                for k in self.later(i) {
                    all &= self.eval(a, k)?;
                }
                all || self.until(a, b, i)?
            }
        };
        self.memo.insert(key, v);
        Ok(v)
    }

    /// Exists a later k with q at k and p at every m with
    /// `t+j <= t_m+j_m < t_k+j_k`.
    fn until(&mut self, p: &Formula, q: &Formula, i: usize) -> Result<bool, LtlError> {
        for k in self.later(i) {
            if !self.eval(q, k)? {
                continue;
            }
            let mut ok = true;
            for m in 0..self.times.len() {
                if self.total(m) >= self.total(i) && self.total(m) < self.total(k) && !self.eval(p, m)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Truth value of `f` at every sample, computed by direct enumeration.
pub fn brute_force_table(f: &Formula, arc: &HybridArc, props: &PropositionSet) -> Result<Vec<bool>, LtlError> {
    let mut oracle = Oracle {
        times: arc.points().map(|p| p.time).collect(),
        states: arc.points().map(|p| p.x).collect(),
        props,
        memo: HashMap::new(),
    };
    (0..oracle.times.len()).map(|i| oracle.eval(f, i)).collect()
}
