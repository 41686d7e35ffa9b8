use thiserror::Error;

use super::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {pos}: {message}")]
pub struct FormulaError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Iff,
    Next,
    Eventually,
    Always,
    Until,
    WeakUntil,
    LParen,
    RParen,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::End => "end of input".into(),
        Tok::Not => "`!`".into(),
        Tok::And => "`&`".into(),
        Tok::Or => "`|`".into(),
        Tok::Implies => "`->`".into(),
        Tok::Iff => "`<->`".into(),
        Tok::Next => "`X`".into(),
        Tok::Eventually => "`F`".into(),
        Tok::Always => "`G`".into(),
        Tok::Until => "`U`".into(),
        Tok::WeakUntil => "`W`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let tok = match &src[start..i] {
                "X" | "next" => Tok::Next,
                "F" | "eventually" => Tok::Eventually,
                "G" | "always" => Tok::Always,
                "U" | "until" => Tok::Until,
                "W" => Tok::WeakUntil,
                w => Tok::Ident(w.to_string()),
            };
            out.push((tok, start));
            continue;
        }
        let (tok, len) = if src[i..].starts_with("<->") {
            (Tok::Iff, 3)
        } else if src[i..].starts_with("->") {
            (Tok::Implies, 2)
        } else {
            match c {
                b'!' => (Tok::Not, 1),
                b'&' => (Tok::And, 1),
                b'|' => (Tok::Or, 1),
                b'(' => (Tok::LParen, 1),
                b')' => (Tok::RParen, 1),
                _ => {
                    let ch = src[i..].chars().next().unwrap();
                    return Err(FormulaError {
                        pos: i,
                        message: format!("unexpected character `{ch}`"),
                    });
                }
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

/// Parses the concrete formula syntax. From loosest to tightest binding:
/// `<->`, `->` (both right-associative), `|`, `&`, `U`/`W`
/// (right-associative), then the prefix operators `!`, `X`, `F`, `G`.
pub fn parse_formula(src: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let f = p.iff()?;
    match p.peek() {
        Tok::End => Ok(f),
        t => Err(p.error(format!("unexpected {} after formula", describe(t)))),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> usize {
        self.toks[self.pos].1
    }

    fn error(&self, message: String) -> FormulaError {
        FormulaError {
            pos: self.here(),
            message,
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<Formula, FormulaError> {
        let a = self.implies()?;
        if self.eat(&Tok::Iff) {
            return Ok(Formula::Iff(Box::new(a), Box::new(self.iff()?)));
        }
        Ok(a)
    }

    fn implies(&mut self) -> Result<Formula, FormulaError> {
        let a = self.or()?;
        if self.eat(&Tok::Implies) {
            return Ok(Formula::Implies(Box::new(a), Box::new(self.implies()?)));
        }
        Ok(a)
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut a = self.and()?;
        while self.eat(&Tok::Or) {
            a = Formula::or(a, self.and()?);
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut a = self.until()?;
        while self.eat(&Tok::And) {
            a = Formula::and(a, self.until()?);
        }
        Ok(a)
    }

    fn until(&mut self) -> Result<Formula, FormulaError> {
        let a = self.unary()?;
        if self.eat(&Tok::Until) {
            return Ok(Formula::until(a, self.until()?));
        }
        if self.eat(&Tok::WeakUntil) {
            return Ok(Formula::weak_until(a, self.until()?));
        }
        Ok(a)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let tok = self.peek().clone();
        let op: Option<fn(Formula) -> Formula> = match tok {
            Tok::Not => Some(Formula::not),
            Tok::Next => Some(Formula::next),
            Tok::Eventually => Some(Formula::eventually),
            Tok::Always => Some(Formula::always),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            return Ok(op(self.unary()?));
        }
        match tok {
            Tok::Ident(name) => {
                self.pos += 1;
                Ok(Formula::Atom(name))
            }
            Tok::LParen => {
                self.pos += 1;
                let f = self.iff()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.error(format!("expected `)`, found {}", describe(self.peek()))));
                }
                Ok(f)
            }
            t => Err(self.error(format!("expected a proposition or `(`, found {}", describe(&t)))),
        }
    }
}
