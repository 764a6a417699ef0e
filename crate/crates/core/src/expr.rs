//! Scalar-field expression language used in scenario files.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'pi' | 'x'<n> | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp' | 'sqrt'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)`. Variables `x1..xn` are the chart coordinates, 1-based.
//! Expressions are only evaluated; any derivative a caller needs is taken by
//! finite differences in the manifold engine.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Sqrt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    /// Zero-based coordinate index; printed as `x{index+1}`.
    Var(usize),
    Pi,
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = lex(text)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            end: text.len(),
        };
        let e = p.expr()?;
        match p.peek() {
            None => Ok(e),
            Some(t) => Err(Error::Syntax {
                offset: t.offset,
                message: format!("unexpected {}", t.kind.describe()),
            }),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = self.eval_raw(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("`{self}` is not finite at {x:?}")))
        }
    }

    fn eval_raw(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Number(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(i) => *x.get(*i).ok_or_else(|| {
                Error::Dimension(format!("x{} used but point has {} coordinates", i + 1, x.len()))
            })?,
            Expr::Unary(op, e) => {
                let v = e.eval_raw(x)?;
                match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Sin => v.sin(),
                    UnaryOp::Cos => v.cos(),
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Sqrt => v.sqrt(),
                }
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval_raw(x)?;
                let b = b.eval_raw(x)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => a / b,
                    BinaryOp::Pow => a.powf(b),
                }
            }
        })
    }

    /// Number of coordinates the expression needs (highest variable index + 1).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Number(_) | Expr::Pi => 0,
            Expr::Var(i) => i + 1,
            Expr::Unary(_, e) => e.arity(),
            Expr::Binary(_, a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn powf(self, exponent: f64) -> Expr {
        Expr::Binary(BinaryOp::Pow, Box::new(self), Box::new(Expr::Number(exponent)))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Binary(BinaryOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Pi => f.write_str("pi"),
            Expr::Unary(UnaryOp::Neg, e) => {
                f.write_str("-")?;
                write_child(f, e, e.precedence() < 3)
            }
            Expr::Unary(op, e) => {
                let name = match op {
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({e})")
            }
            Expr::Binary(BinaryOp::Pow, a, b) => {
                write_child(f, a, a.precedence() <= 4)?;
                f.write_str("^")?;
                write_child(f, b, b.precedence() < 3)
            }
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    BinaryOp::Pow => unreachable!(),
                };
                write_child(f, a, a.precedence() < p)?;
                write!(f, " {sym} ")?;
                write_child(f, b, b.precedence() <= p)
            }
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Expr::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            _ => None,
        };
        if let Some(kind) = single {
            out.push(Token {
                kind,
                offset: start,
            });
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{lit}`"),
            })?;
            out.push(Token {
                kind: TokenKind::Number(v),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Ident(text[start..i].to_string()),
                offset: start,
            });
        } else {
            let ch = text[start..].chars().next().unwrap_or('?');
            return Err(Error::Syntax {
                offset: start,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn expect(&mut self, kind: TokenKind) -> Result<()> {
        let offset = self.offset();
        match self.next() {
            Some(t) if t.kind == kind => Ok(()),
            Some(t) => Err(Error::Syntax {
                offset,
                message: format!("expected {}, found {}", kind.describe(), t.kind.describe()),
            }),
            None => Err(Error::Syntax {
                offset,
                message: format!("expected {}, found end of input", kind.describe()),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_kind() == Some(&TokenKind::Minus) {
            self.pos += 1;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_kind() == Some(&TokenKind::Caret) {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let offset = self.offset();
        let tok = self.next().ok_or_else(|| Error::Syntax {
            offset,
            message: "unexpected end of input".into(),
        })?;
        match tok.kind {
            TokenKind::Number(v) => Ok(Expr::Number(v)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => self.identifier(name, offset),
            other => Err(Error::Syntax {
                offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr> {
        let func = match name.as_str() {
            "pi" => return Ok(Expr::Pi),
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "sqrt" => UnaryOp::Sqrt,
            _ => {
                if let Some(digits) = name.strip_prefix('x') {
                    if let Ok(n) = digits.parse::<usize>() {
                        if n >= 1 && !digits.starts_with('0') {
                            return Ok(Expr::Var(n - 1));
                        }
                    }
                }
                return Err(Error::UnknownIdentifier { name, offset });
            }
        };
        self.expect(TokenKind::LParen)?;
        let arg = self.expr()?;
        self.expect(TokenKind::RParen)?;
        Ok(Expr::Unary(func, Box::new(arg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_examples() {
        let e = Expr::parse("sin(x1)^2 + 1").unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 1.0);
        assert_eq!(
            Expr::parse("2*pi").unwrap().eval(&[]).unwrap(),
            6.283185307179586
        );
    }

    #[test]
    fn reports_offsets() {
        match Expr::parse("sin(") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        match Expr::parse("1 + y2") {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "y2");
                assert_eq!(offset, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        match Expr::parse("(1 + 2") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("unexpected {other:?}"),
        }
        match Expr::parse("1 $ 2") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Expr::parse("x0"),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(Expr::parse("sin 1"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let v = |s: &str| Expr::parse(s).unwrap().eval(&[3.0]).unwrap();
        assert_eq!(v("-x1^2"), -9.0);
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("2^-1"), 0.5);
        assert_eq!(v("8/4/2"), 1.0);
        assert_eq!(v("8-4-2"), 2.0);
        assert_eq!(v("1+2*3"), 7.0);
        assert_eq!(v("-2*3"), -6.0);
        assert_eq!(v("1.5e1 + .5"), 15.5);
    }

    #[test]
    fn evaluation_errors() {
        let e = Expr::parse("x3").unwrap();
        assert_eq!(e.arity(), 3);
        assert!(matches!(e.eval(&[1.0]), Err(Error::Dimension(_))));
        assert!(matches!(
            Expr::parse("sqrt(-1)").unwrap().eval(&[]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn prints_minimal_parentheses() {
        let e = Expr::parse("(1 + x1) * -x2 ^ 2 - (3 - 4)").unwrap();
        assert_eq!(e.to_string(), "(1 + x1) * -x2^2 - (3 - 4)");
        assert_eq!(Expr::parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn serde_as_string() {
        let e: Expr = serde_json::from_str("\"cos(x2) + 1\"").unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), "\"cos(x2) + 1\"");
    }
}
