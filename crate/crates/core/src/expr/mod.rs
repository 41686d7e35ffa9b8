//! A small expression language over the state `x1..xn` and named constants.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! or      := and ("or" and)*
//! and     := not ("and" not)*
//! not     := "not" not | cmp
//! cmp     := sum (("<=" | "<" | "==" | ">=" | ">" | "!=") sum)?
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | pow
//! pow     := atom ("^" unary)?
//! atom    := number | "true" | "false" | x<k> | name | func "(" args ")" | "(" or ")"
//! ```
//!
//! `&&`, `||`, `!` and `=` are accepted as spellings of `and`, `or`, `not`
//! and `==`. Functions: `abs sgn sqrt exp ln ceil` (one argument) and
//! `min max pow` (two arguments). `sgn(0) = 1`.

mod eval;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

pub use eval::{Env, EvalError, Value};
pub use parser::{parse_expression, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Sgn,
    Sqrt,
    Exp,
    Ln,
    Ceil,
}

impl UnaryOp {
    pub(crate) fn function_name(self) -> Option<&'static str> {
        Some(match self {
            UnaryOp::Neg => return None,
            UnaryOp::Abs => "abs",
            UnaryOp::Sgn => "sgn",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Ceil => "ceil",
        })
    }

    pub(crate) const FUNCTIONS: [UnaryOp; 6] = [
        UnaryOp::Abs,
        UnaryOp::Sgn,
        UnaryOp::Sqrt,
        UnaryOp::Exp,
        UnaryOp::Ln,
        UnaryOp::Ceil,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
    Ne,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Eq => "==",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Ne => "!=",
        }
    }

    pub fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Le => a <= b,
            CmpOp::Lt => a < b,
            CmpOp::Eq => a == b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprType {
    Number,
    Boolean,
}

/// Expression tree. Literals produced by the parser are non-negative;
/// a leading minus is a [`UnaryOp::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Bool(bool),
    /// State coordinate, zero-based (`x1` is `Var(0)`).
    Var(usize),
    Const(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Compare(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BindError {
    #[error("variable x{index} exceeds the state dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
}

impl Expr {
    pub fn ty(&self) -> ExprType {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Const(_) | Expr::Unary(..) | Expr::Binary(..) => {
                ExprType::Number
            }
            Expr::Bool(_) | Expr::Compare(..) | Expr::Not(_) | Expr::And(..) | Expr::Or(..) => {
                ExprType::Boolean
            }
        }
    }

    pub fn is_boolean(&self) -> bool {
        self.ty() == ExprType::Boolean
    }

    fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Num(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Const(_) => vec![],
            Expr::Unary(_, a) | Expr::Not(a) => vec![a],
            Expr::Binary(_, a, b) | Expr::Compare(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                vec![a, b]
            }
        }
    }

    /// Largest one-based variable index used, or 0.
    pub fn max_variable(&self) -> usize {
        match self {
            Expr::Var(i) => i + 1,
            _ => self
                .children()
                .into_iter()
                .map(Expr::max_variable)
                .max()
                .unwrap_or(0),
        }
    }

    pub fn constant_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_constants(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_constants<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let Expr::Const(name) = self {
            out.push(name);
        }
        for c in self.children() {
            c.collect_constants(out);
        }
    }

    /// Checks that every variable fits in `dim` and every constant is known.
    pub fn check_bindings(
        &self,
        dim: usize,
        constants: &BTreeMap<String, f64>,
    ) -> Result<(), BindError> {
        let max = self.max_variable();
        if max > dim {
            return Err(BindError::VariableOutOfRange { index: max, dim });
        }
        for name in self.constant_names() {
            if !constants.contains_key(name) {
                return Err(BindError::UnknownConstant(name.to_string()));
            }
        }
        Ok(())
    }

    /// Replaces every known constant by its value.
    pub fn substitute(&self, constants: &BTreeMap<String, f64>) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(constants));
        match self {
            Expr::Const(name) => match constants.get(name) {
                Some(v) => Expr::Num(*v),
                None => self.clone(),
            },
            Expr::Num(_) | Expr::Bool(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => Expr::Unary(*op, sub(a)),
            Expr::Not(a) => Expr::Not(sub(a)),
            Expr::Binary(op, a, b) => Expr::Binary(*op, sub(a), sub(b)),
            Expr::Compare(op, a, b) => Expr::Compare(*op, sub(a), sub(b)),
            Expr::And(a, b) => Expr::And(sub(a), sub(b)),
            Expr::Or(a, b) => Expr::Or(sub(a), sub(b)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(_) => 3,
            Expr::Compare(..) => 4,
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 5,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 6,
            Expr::Unary(UnaryOp::Neg, _) => 7,
            Expr::Binary(BinaryOp::Pow, ..) => 8,
            _ => 9,
        }
    }

    fn write_with(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.write_with(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{})", -v)
            }
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Const(name) => write!(f, "{name}"),
            Expr::Unary(UnaryOp::Neg, a) => {
                write!(f, "-")?;
                a.write_with(f, 7)
            }
            Expr::Unary(op, a) => {
                write!(f, "{}(", op.function_name().unwrap())?;
                a.write_with(f, 0)?;
                write!(f, ")")
            }
            Expr::Binary(op @ (BinaryOp::Min | BinaryOp::Max), a, b) => {
                let name = if *op == BinaryOp::Min { "min" } else { "max" };
                write!(f, "{name}(")?;
                a.write_with(f, 0)?;
                write!(f, ", ")?;
                b.write_with(f, 0)?;
                write!(f, ")")
            }
            Expr::Binary(BinaryOp::Pow, a, b) => {
                a.write_with(f, 9)?;
                write!(f, " ^ ")?;
                b.write_with(f, 7)
            }
            Expr::Binary(op, a, b) => {
                let (sym, lhs, rhs) = match op {
                    BinaryOp::Add => ("+", 5, 6),
                    BinaryOp::Sub => ("-", 5, 6),
                    BinaryOp::Mul => ("*", 6, 7),
                    BinaryOp::Div => ("/", 6, 7),
                    _ => unreachable!(),
                };
                a.write_with(f, lhs)?;
                write!(f, " {sym} ")?;
                b.write_with(f, rhs)
            }
            Expr::Compare(op, a, b) => {
                a.write_with(f, 5)?;
                write!(f, " {} ", op.symbol())?;
                b.write_with(f, 5)
            }
            Expr::Not(a) => {
                write!(f, "not ")?;
                a.write_with(f, 3)
            }
            Expr::And(a, b) => {
                a.write_with(f, 2)?;
                write!(f, " and ")?;
                b.write_with(f, 3)
            }
            Expr::Or(a, b) => {
                a.write_with(f, 1)?;
                write!(f, " or ")?;
                b.write_with(f, 2)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_with(f, 0)
    }
}

#[cfg(test)]
mod tests;
