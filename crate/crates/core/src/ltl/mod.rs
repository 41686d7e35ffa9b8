//! Linear temporal logic over sampled hybrid arcs.
//!
//! Formulas are evaluated at sample points; quantifiers over later hybrid
//! times range over the arc's samples ordered by `t + j`.

mod eval;
pub mod oracle;
mod parser;

use std::fmt;

pub use eval::{
    evaluate, explain, holds_for_all_times, truth_table, Explanation, LtlError, PointRole,
};
pub use parser::{parse_formula, FormulaError};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    UntilStrong(Box<Formula>, Box<Formula>),
    UntilWeak(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Atom(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::UntilStrong(Box::new(a), Box::new(b))
    }

    pub fn weak_until(a: Formula, b: Formula) -> Self {
        Formula::UntilWeak(Box::new(a), Box::new(b))
    }

    /// Atom names in order of first appearance.
    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Formula::Atom(a) => {
                if !out.contains(&a.as_str()) {
                    out.push(a);
                }
            }
            Formula::Not(a) | Formula::Next(a) | Formula::Eventually(a) | Formula::Always(a) => {
                a.collect_atoms(out)
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b)
            | Formula::UntilStrong(a, b)
            | Formula::UntilWeak(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(a) | Formula::Next(a) | Formula::Eventually(a) | Formula::Always(a) => {
                1 + a.depth()
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b)
            | Formula::UntilStrong(a, b)
            | Formula::UntilWeak(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            Formula::UntilStrong(..) | Formula::UntilWeak(..) => 5,
            Formula::Not(_) | Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_) => 6,
            Formula::Atom(_) => 7,
        }
    }
}

/// Syntactically co-safe fragment: temporal operators limited to eventually,
/// next and strong until, in positive normal form (negation only on atoms).
pub fn is_sc_fragment(f: &Formula) -> bool {
    match f {
        Formula::Atom(_) => true,
        Formula::Not(a) => matches!(**a, Formula::Atom(_)),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::UntilStrong(a, b) => {
            is_sc_fragment(a) && is_sc_fragment(b)
        }
        Formula::Next(a) | Formula::Eventually(a) => is_sc_fragment(a),
        Formula::Implies(..) | Formula::Iff(..) | Formula::Always(_) | Formula::UntilWeak(..) => false,
    }
}

struct Child<'a> {
    f: &'a Formula,
    parens: bool,
}

impl fmt::Display for Child<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parens {
            write!(out, "({})", self.f)
        } else {
            write!(out, "{}", self.f)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = self.precedence();
        let unary = |out: &mut fmt::Formatter<'_>, op: &str, a: &Formula| {
            write!(out, "{op}{}", Child { f: a, parens: a.precedence() < 6 })
        };
        // `right` marks right-associative operators.
        let binary = |out: &mut fmt::Formatter<'_>, op: &str, a: &Formula, b: &Formula, right: bool| {
            let (lp, rp) = if right {
                (a.precedence() <= prec, b.precedence() < prec)
            } else {
                (a.precedence() < prec, b.precedence() <= prec)
            };
            write!(out, "{} {op} {}", Child { f: a, parens: lp }, Child { f: b, parens: rp })
        };
        match self {
            Formula::Atom(a) => write!(out, "{a}"),
            Formula::Not(a) => unary(out, "!", a),
            Formula::Next(a) => unary(out, "X ", a),
            Formula::Eventually(a) => unary(out, "F ", a),
            Formula::Always(a) => unary(out, "G ", a),
            Formula::And(a, b) => binary(out, "&", a, b, false),
            Formula::Or(a, b) => binary(out, "|", a, b, false),
            Formula::Implies(a, b) => binary(out, "->", a, b, true),
            Formula::Iff(a, b) => binary(out, "<->", a, b, true),
            Formula::UntilStrong(a, b) => binary(out, "U", a, b, true),
            Formula::UntilWeak(a, b) => binary(out, "W", a, b, true),
        }
    }
}
