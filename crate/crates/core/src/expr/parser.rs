use thiserror::Error;

use super::{BinaryOp, CmpOp, Expr, ExprType, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("type error at {pos}: {message}")]
    Type { pos: usize, message: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::Type { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Cmp(CmpOp),
    AndOp,
    OrOp,
    NotOp,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::End => "end of input".into(),
        other => format!("{other:?}"),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, message: String| ParseError::Syntax { pos, message };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut k = i + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    i = k;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| err(start, format!("malformed number `{text}`")))?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            let tok = match word {
                "and" => Tok::AndOp,
                "or" => Tok::OrOp,
                "not" => Tok::NotOp,
                _ => Tok::Ident(word.to_string()),
            };
            out.push((tok, start));
            continue;
        }
        let two = bytes.get(i + 1).copied();
        let (tok, len) = match (c, two) {
            (b'<', Some(b'=')) => (Tok::Cmp(CmpOp::Le), 2),
            (b'>', Some(b'=')) => (Tok::Cmp(CmpOp::Ge), 2),
            (b'=', Some(b'=')) => (Tok::Cmp(CmpOp::Eq), 2),
            (b'!', Some(b'=')) => (Tok::Cmp(CmpOp::Ne), 2),
            (b'&', Some(b'&')) => (Tok::AndOp, 2),
            (b'|', Some(b'|')) => (Tok::OrOp, 2),
            (b'<', _) => (Tok::Cmp(CmpOp::Lt), 1),
            (b'>', _) => (Tok::Cmp(CmpOp::Gt), 1),
            (b'=', _) => (Tok::Cmp(CmpOp::Eq), 1),
            (b'!', _) => (Tok::NotOp, 1),
            (b'+', _) => (Tok::Plus, 1),
            (b'-', _) => (Tok::Minus, 1),
            (b'*', _) => (Tok::Star, 1),
            (b'/', _) => (Tok::Slash, 1),
            (b'^', _) => (Tok::Caret, 1),
            (b'(', _) => (Tok::LParen, 1),
            (b')', _) => (Tok::RParen, 1),
            (b',', _) => (Tok::Comma, 1),
            _ => {
                let ch = src[i..].chars().next().unwrap();
                return Err(err(i, format!("unexpected character `{ch}`")));
            }
        };
        out.push((tok, start));
        i += len;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

/// Parses and type-checks an expression.
pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.or()?;
    match p.peek() {
        Tok::End => Ok(e),
        t => Err(p.syntax(format!("unexpected {} after expression", describe(t)))),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, message: String) -> ParseError {
        ParseError::Syntax {
            pos: self.at(),
            message,
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.syntax(format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    fn require(e: &Expr, ty: ExprType, pos: usize, ctx: &str) -> Result<(), ParseError> {
        if e.ty() == ty {
            Ok(())
        } else {
            let want = match ty {
                ExprType::Number => "a number",
                ExprType::Boolean => "a boolean",
            };
            Err(ParseError::Type {
                pos,
                message: format!("{ctx} expects {want}, found `{e}`"),
            })
        }
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        let start = self.at();
        let mut lhs = self.and()?;
        while *self.peek() == Tok::OrOp {
            Self::require(&lhs, ExprType::Boolean, start, "`or`")?;
            self.bump();
            let at = self.at();
            let rhs = self.and()?;
            Self::require(&rhs, ExprType::Boolean, at, "`or`")?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let start = self.at();
        let mut lhs = self.not()?;
        while *self.peek() == Tok::AndOp {
            Self::require(&lhs, ExprType::Boolean, start, "`and`")?;
            self.bump();
            let at = self.at();
            let rhs = self.not()?;
            Self::require(&rhs, ExprType::Boolean, at, "`and`")?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::NotOp {
            self.bump();
            let at = self.at();
            let inner = self.not()?;
            Self::require(&inner, ExprType::Boolean, at, "`not`")?;
            return Ok(Expr::Not(Box::new(inner)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, ParseError> {
        let start = self.at();
        let lhs = self.sum()?;
        if let Tok::Cmp(op) = *self.peek() {
            Self::require(&lhs, ExprType::Number, start, "comparison")?;
            self.bump();
            let at = self.at();
            let rhs = self.sum()?;
            Self::require(&rhs, ExprType::Number, at, "comparison")?;
            if let Tok::Cmp(_) = self.peek() {
                return Err(self.syntax("comparisons cannot be chained".into()));
            }
            return Ok(Expr::Compare(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let start = self.at();
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            Self::require(&lhs, ExprType::Number, start, "arithmetic")?;
            self.bump();
            let at = self.at();
            let rhs = self.product()?;
            Self::require(&rhs, ExprType::Number, at, "arithmetic")?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let start = self.at();
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            Self::require(&lhs, ExprType::Number, start, "arithmetic")?;
            self.bump();
            let at = self.at();
            let rhs = self.unary()?;
            Self::require(&rhs, ExprType::Number, at, "arithmetic")?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let at = self.at();
            let inner = self.unary()?;
            Self::require(&inner, ExprType::Number, at, "negation")?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.pow()
    }

    fn pow(&mut self) -> Result<Expr, ParseError> {
        let start = self.at();
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            Self::require(&base, ExprType::Number, start, "`^`")?;
            self.bump();
            let at = self.at();
            let exp = self.unary()?;
            Self::require(&exp, ExprType::Number, at, "`^`")?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn args(&mut self, name: &str, n: usize) -> Result<Vec<Expr>, ParseError> {
        self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                self.expect(Tok::Comma, &format!("`,` in call to `{name}`"))?;
            }
            let at = self.at();
            let e = self.or()?;
            Self::require(&e, ExprType::Number, at, name)?;
            out.push(e);
        }
        self.expect(Tok::RParen, &format!("`)` closing `{name}`"))?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.at();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(name, at),
            t => Err(ParseError::Syntax {
                    pos: at,
                    message: format!("expected an operand, found {}", describe(&t)),
                }),
        }
    }

    fn ident(&mut self, name: String, at: usize) -> Result<Expr, ParseError> {
        if let Some(op) = UnaryOp::FUNCTIONS
            .iter()
            .find(|op| op.function_name() == Some(name.as_str()))
        {
            let mut a = self.args(&name, 1)?;
            return Ok(Expr::Unary(*op, Box::new(a.remove(0))));
        }
        let binary = match name.as_str() {
            "min" => Some(BinaryOp::Min),
            "max" => Some(BinaryOp::Max),
            "pow" => Some(BinaryOp::Pow),
            _ => None,
        };
        if let Some(op) = binary {
            let mut a = self.args(&name, 2)?;
            let b = a.pop().unwrap();
            let a = a.pop().unwrap();
            return Ok(Expr::Binary(op, Box::new(a), Box::new(b)));
        }
        match name.as_str() {
            "true" => return Ok(Expr::Bool(true)),
            "false" => return Ok(Expr::Bool(false)),
            _ => {}
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let k: usize = digits.parse().map_err(|_| ParseError::Syntax {
                    pos: at,
                    message: format!("bad variable `{name}`"),
                })?;
                if k == 0 {
                    return Err(ParseError::Syntax {
                        pos: at,
                        message: "state variables are numbered from x1".into(),
                    });
                }
                return Ok(Expr::Var(k - 1));
            }
        }
        Ok(Expr::Const(name))
    }
}
