use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;

fn constants() -> BTreeMap<String, f64> {
    [("g", 1.0), ("k", 2.5), ("alpha", 0.5), ("lam", -0.75)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn num(src: &str, x: &[f64]) -> f64 {
    let c = constants();
    parse_expression(src)
        .unwrap()
        .eval_num(&Env::with_constants(x, &c))
        .unwrap()
}

#[test]
fn barrier_value_at_quarter() {
    assert_eq!(num("2*g*x1 + (x2-1)*(x2+1)", &[0.25, 0.0]), -0.5);
}

#[test]
fn boolean_expression_types() {
    let e = parse_expression("max(x1,x2) >= 1").unwrap();
    assert!(e.is_boolean());
    let e = parse_expression("2*g*x1 + (x2-1)*(x2+1)").unwrap();
    assert_eq!(e.ty(), ExprType::Number);
    assert_eq!(e.constant_names(), vec!["g"]);
    assert_eq!(e.max_variable(), 2);
}

#[test]
fn sgn_of_zero_is_one() {
    assert_eq!(num("sgn(x1)", &[0.0]), 1.0);
    assert_eq!(num("sgn(x1)", &[-0.0]), 1.0);
    assert_eq!(num("sgn(x1)", &[-2.0]), -1.0);
}

#[test]
fn domain_errors() {
    for (src, x) in [("sqrt(x1)", -1.0), ("ln(x1)", 0.0), ("1 / x1", 0.0)] {
        let e = parse_expression(src).unwrap();
        let r = e.eval_num(&Env::state(&[x]));
        assert!(matches!(r, Err(EvalError::DomainError(_))), "{src}: {r:?}");
    }
}

#[test]
fn unbound_names() {
    let e = parse_expression("x3 + 1").unwrap();
    assert!(matches!(
        e.eval_num(&Env::state(&[1.0])),
        Err(EvalError::UnboundVariable(_))
    ));
    let e = parse_expression("q * x1").unwrap();
    assert!(matches!(
        e.eval_num(&Env::state(&[1.0])),
        Err(EvalError::UnboundVariable(_))
    ));
    assert_eq!(
        e.check_bindings(1, &constants()),
        Err(BindError::UnknownConstant("q".into()))
    );
    assert!(matches!(
        parse_expression("x3").unwrap().check_bindings(2, &constants()),
        Err(BindError::VariableOutOfRange { index: 3, dim: 2 })
    ));
}

#[test]
fn syntax_errors_carry_positions() {
    let cases = [
        ("x1 + and", 5),
        ("", 0),
        ("(x1 + 1", 7),
        ("x1 $ 2", 3),
        ("x0 + 1", 0),
        ("1 < x1 < 2", 7),
        ("max(x1)", 6),
    ];
    for (src, pos) in cases {
        match parse_expression(src) {
            Err(e @ ParseError::Syntax { .. }) => assert_eq!(e.position(), pos, "{src}: {e}"),
            other => panic!("{src}: expected syntax error, got {other:?}"),
        }
    }
}

#[test]
fn type_errors() {
    for src in ["1 + (x1 <= 0)", "x1 and x2 > 0", "not x1", "(x1 > 0) <= 1", "x1"] {
        let r = parse_expression(src);
        if src == "x1" {
            assert!(r.is_ok());
            continue;
        }
        assert!(matches!(r, Err(ParseError::Type { .. })), "{src}: {r:?}");
    }
}

#[test]
fn precedence() {
    assert_eq!(num("1 + 2 * 3", &[]), 7.0);
    assert_eq!(num("-2 ^ 2", &[]), -4.0);
    assert_eq!(num("2 ^ 3 ^ 2", &[]), 512.0);
    assert_eq!(num("2 ^ -1", &[]), 0.5);
    assert_eq!(num("8 / 4 / 2", &[]), 1.0);
    assert_eq!(num("1 - 2 - 3", &[]), -4.0);
    assert_eq!(num("pow(2, 3) + min(1, k) + max(lam, 0)", &[]), 9.0);
    let c = constants();
    let b = |src: &str| {
        parse_expression(src)
            .unwrap()
            .eval_bool(&Env::with_constants(&[0.0], &c))
            .unwrap()
    };
    assert!(b("true or false and false"));
    assert!(!b("not true or false"));
    assert!(b("x1 == 0 && !(x1 != 0) || false"));
    assert!(b("x1 = 0"));
}

#[test]
fn printer_output() {
    let e = parse_expression("2*g*x1+(x2-1)*(x2+1)").unwrap();
    assert_eq!(e.to_string(), "2 * g * x1 + (x2 - 1) * (x2 + 1)");
    let e = parse_expression("not (x1 >= 0 and x2 <= 0) or x1 != 1").unwrap();
    assert_eq!(e.to_string(), "not (x1 >= 0 and x2 <= 0) or x1 != 1");
    let e = parse_expression("(-x1)^2 - -x2").unwrap();
    assert_eq!(e.to_string(), "(-x1) ^ 2 - -x2");
}

#[test]
fn substitute_replaces_constants() {
    let e = parse_expression("g * x1 + q").unwrap().substitute(&constants());
    assert_eq!(e.to_string(), "1 * x1 + q");
}

// Independent evaluator used as an oracle; `None` marks a domain failure.
fn reference(e: &Expr, x: &[f64], c: &BTreeMap<String, f64>) -> Option<Value> {
    let n = |e: &Expr| match reference(e, x, c)? {
        Value::Num(v) => Some(v),
        Value::Bool(_) => None,
    };
    let b = |e: &Expr| match reference(e, x, c)? {
        Value::Bool(v) => Some(v),
        Value::Num(_) => None,
    };
    let checked = |v: f64| if v.is_finite() { Some(Value::Num(v)) } else { None };
    match e {
        Expr::Num(v) => Some(Value::Num(*v)),
        Expr::Bool(v) => Some(Value::Bool(*v)),
        Expr::Var(i) => x.get(*i).map(|v| Value::Num(*v)),
        Expr::Const(s) => c.get(s).map(|v| Value::Num(*v)),
        Expr::Unary(op, a) => {
            let a = n(a)?;
            match op {
                UnaryOp::Neg => Some(Value::Num(-a)),
                UnaryOp::Abs => Some(Value::Num(a.abs())),
                UnaryOp::Sgn => Some(Value::Num(if a < 0.0 { -1.0 } else { 1.0 })),
                UnaryOp::Sqrt => (a >= 0.0).then(|| Value::Num(a.sqrt())),
                UnaryOp::Exp => checked(a.exp()),
                UnaryOp::Ln => (a > 0.0).then(|| Value::Num(a.ln())),
                UnaryOp::Ceil => Some(Value::Num(a.ceil())),
            }
        }
        Expr::Binary(op, a, bb) => {
            let (a, bb) = (n(a)?, n(bb)?);
            match op {
                BinaryOp::Add => checked(a + bb),
                BinaryOp::Sub => checked(a - bb),
                BinaryOp::Mul => checked(a * bb),
                BinaryOp::Div => (bb != 0.0).then_some(()).and_then(|_| checked(a / bb)),
                BinaryOp::Pow => checked(a.powf(bb)),
                BinaryOp::Min => Some(Value::Num(if a <= bb { a } else { bb })),
                BinaryOp::Max => Some(Value::Num(if a >= bb { a } else { bb })),
            }
        }
        Expr::Compare(op, a, bb) => {
            let (a, bb) = (n(a)?, n(bb)?);
            let r = match op {
                CmpOp::Le => a <= bb,
                CmpOp::Lt => a < bb,
                CmpOp::Eq => a == bb,
                CmpOp::Ge => a >= bb,
                CmpOp::Gt => a > bb,
                CmpOp::Ne => a != bb,
            };
            Some(Value::Bool(r))
        }
        Expr::Not(a) => Some(Value::Bool(!b(a)?)),
        Expr::And(a, bb) => {
            let l = b(a)?;
            if !l {
                return Some(Value::Bool(false));
            }
            Some(Value::Bool(b(bb)?))
        }
        Expr::Or(a, bb) => {
            let l = b(a)?;
            if l {
                return Some(Value::Bool(true));
            }
            Some(Value::Bool(b(bb)?))
        }
    }
}

fn arb_numeric() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|v| Expr::Num(v as f64 / 8.0)),
        (0.0f64..1e3).prop_map(Expr::Num),
        (0usize..3).prop_map(Expr::Var),
        prop::sample::select(vec!["g", "k", "alpha", "lam"]).prop_map(|s| Expr::Const(s.into())),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let unary = prop::sample::select(vec![
            UnaryOp::Neg,
            UnaryOp::Abs,
            UnaryOp::Sgn,
            UnaryOp::Sqrt,
            UnaryOp::Exp,
            UnaryOp::Ln,
            UnaryOp::Ceil,
        ]);
        let binary = prop::sample::select(vec![
            BinaryOp::Add,
            BinaryOp::Sub,
            BinaryOp::Mul,
            BinaryOp::Div,
            BinaryOp::Pow,
            BinaryOp::Min,
            BinaryOp::Max,
        ]);
        prop_oneof![
            (unary, inner.clone()).prop_map(|(op, a)| Expr::Unary(op, Box::new(a))),
            (binary, inner.clone(), inner)
                .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
        ]
    })
}

fn arb_boolean() -> impl Strategy<Value = Expr> {
    let cmp = prop::sample::select(vec![
        CmpOp::Le,
        CmpOp::Lt,
        CmpOp::Eq,
        CmpOp::Ge,
        CmpOp::Gt,
        CmpOp::Ne,
    ]);
    let leaf = prop_oneof![
        any::<bool>().prop_map(Expr::Bool),
        (cmp, arb_numeric(), arb_numeric())
            .prop_map(|(op, a, b)| Expr::Compare(op, Box::new(a), Box::new(b))),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Not(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Or(Box::new(a), Box::new(b))),
        ]
    })
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    prop_oneof![arb_numeric(), arb_boolean()]
}

fn strip(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let text = e.to_string();
        let parsed = parse_expression(&text).unwrap();
        prop_assert_eq!(&parsed, &e, "text: {}", text);
        prop_assert_eq!(strip(&parsed.to_string()), strip(&text));
    }

    #[test]
    fn eval_matches_reference(
        e in arb_expr(),
        x in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let c = constants();
        let got = e.eval(&Env::with_constants(&x, &c));
        match reference(&e, &x, &c) {
            Some(v) => prop_assert_eq!(got, Ok(v)),
            None => prop_assert!(got.is_err()),
        }
    }
}
