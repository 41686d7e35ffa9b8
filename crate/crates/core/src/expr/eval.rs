use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("expected a {expected} expression")]
    TypeMismatch { expected: &'static str },
}

/// Evaluation environment: the state vector plus named constants.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub x: &'a [f64],
    pub constants: Option<&'a BTreeMap<String, f64>>,
}

impl<'a> Env<'a> {
    pub fn state(x: &'a [f64]) -> Self {
        Self { x, constants: None }
    }

    pub fn with_constants(x: &'a [f64], constants: &'a BTreeMap<String, f64>) -> Self {
        Self {
            x,
            constants: Some(constants),
        }
    }
}

fn finite(v: f64, what: &str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::DomainError(format!("{what} is not finite")))
    }
}

/// `sgn(x) = 1` for `x >= 0`, `-1` otherwise.
pub fn sgn(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl Expr {
    pub fn eval(&self, env: &Env<'_>) -> Result<Value, EvalError> {
        Ok(match self {
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Compare(op, a, b) => Value::Bool(op.apply(a.eval_num(env)?, b.eval_num(env)?)),
            Expr::Not(a) => Value::Bool(!a.eval_bool(env)?),
            Expr::And(a, b) => Value::Bool(a.eval_bool(env)? && b.eval_bool(env)?),
            Expr::Or(a, b) => Value::Bool(a.eval_bool(env)? || b.eval_bool(env)?),
            _ => Value::Num(self.eval_num(env)?),
        })
    }

    pub fn eval_bool(&self, env: &Env<'_>) -> Result<bool, EvalError> {
        match self.eval(env)? {
            Value::Bool(b) => Ok(b),
            Value::Num(_) => Err(EvalError::TypeMismatch {
                expected: "boolean",
            }),
        }
    }

    pub fn eval_num(&self, env: &Env<'_>) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(i) => env
                .x
                .get(*i)
                .copied()
                .ok_or_else(|| EvalError::UnboundVariable(format!("x{}", i + 1))),
            Expr::Const(name) => env
                .constants
                .and_then(|c| c.get(name))
                .copied()
                .ok_or_else(|| EvalError::UnboundVariable(name.clone())),
            Expr::Unary(op, a) => {
                let v = a.eval_num(env)?;
                match op {
                    UnaryOp::Neg => Ok(-v),
                    UnaryOp::Abs => Ok(v.abs()),
                    UnaryOp::Sgn => Ok(sgn(v)),
                    UnaryOp::Ceil => Ok(v.ceil()),
                    UnaryOp::Sqrt if v < 0.0 => {
                        Err(EvalError::DomainError(format!("sqrt of negative {v}")))
                    }
                    UnaryOp::Sqrt => Ok(v.sqrt()),
                    UnaryOp::Exp => finite(v.exp(), "exp"),
                    UnaryOp::Ln if v <= 0.0 => {
                        Err(EvalError::DomainError(format!("ln of nonpositive {v}")))
                    }
                    UnaryOp::Ln => Ok(v.ln()),
                }
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval_num(env)?, b.eval_num(env)?);
                match op {
                    BinaryOp::Add => finite(a + b, "sum"),
                    BinaryOp::Sub => finite(a - b, "difference"),
                    BinaryOp::Mul => finite(a * b, "product"),
                    BinaryOp::Div if b == 0.0 => {
                        Err(EvalError::DomainError("division by zero".into()))
                    }
                    BinaryOp::Div => finite(a / b, "quotient"),
                    BinaryOp::Pow => finite(a.powf(b), "power"),
                    BinaryOp::Min => Ok(a.min(b)),
                    BinaryOp::Max => Ok(a.max(b)),
                }
            }
            _ => Err(EvalError::TypeMismatch { expected: "numeric" }),
        }
    }
}
