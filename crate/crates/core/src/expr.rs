//! Closed-form expression grammar for chart formulas.
//!
//! Supports `+ - * /`, unary minus, parentheses, `sin` and `cos`, numeric
//! literals, the constant `pi`, and chart coordinate names. This is the
//! grammar the declarative config files use for section components, metric
//! entries and transition maps.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expression()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::ExprParse {
                pos: parser.tokens[parser.pos].1,
                msg: "unexpected trailing input".into(),
            });
        }
        Ok(expr)
    }

    /// Checks that every variable is one of the given coordinate names.
    pub fn validate(&self, coords: &[String]) -> Result<()> {
        match self {
            Expr::Num(_) => Ok(()),
            Expr::Var(name) => {
                if coords.iter().any(|c| c == name) {
                    Ok(())
                } else {
                    Err(Error::UnknownVariable {
                        name: name.clone(),
                        coords: coords.to_vec(),
                    })
                }
            }
            Expr::Neg(e) | Expr::Sin(e) | Expr::Cos(e) => e.validate(coords),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.validate(coords)?;
                b.validate(coords)
            }
        }
    }

    /// Evaluates with coordinate values positionally matching `coords`.
    ///
    /// Panics on a variable missing from `coords`; run [`Expr::validate`]
    /// when the expression is built.
    pub fn eval(&self, coords: &[String], values: &[f64]) -> f64 {
        match self {
            Expr::Num(x) => *x,
            Expr::Var(name) => {
                let idx = coords
                    .iter()
                    .position(|c| c == name)
                    .unwrap_or_else(|| panic!("unvalidated variable `{name}`"));
                values[idx]
            }
            Expr::Neg(e) => -e.eval(coords, values),
            Expr::Add(a, b) => a.eval(coords, values) + b.eval(coords, values),
            Expr::Sub(a, b) => a.eval(coords, values) - b.eval(coords, values),
            Expr::Mul(a, b) => a.eval(coords, values) * b.eval(coords, values),
            Expr::Div(a, b) => a.eval(coords, values) / b.eval(coords, values),
            Expr::Sin(e) => e.eval(coords, values).sin(),
            Expr::Cos(e) => e.eval(coords, values).cos(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Token, usize)>> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                tokens.push((Token::Plus, i));
                i += 1;
            }
            '-' => {
                tokens.push((Token::Minus, i));
                i += 1;
            }
            '*' => {
                tokens.push((Token::Star, i));
                i += 1;
            }
            '/' => {
                tokens.push((Token::Slash, i));
                i += 1;
            }
            '(' => {
                tokens.push((Token::LParen, i));
                i += 1;
            }
            ')' => {
                tokens.push((Token::RParen, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // optional exponent
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value = text.parse::<f64>().map_err(|_| Error::ExprParse {
                    pos: start,
                    msg: format!("malformed number `{text}`"),
                })?;
                tokens.push((Token::Num(value), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                tokens.push((Token::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(Error::ExprParse {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or(usize::MAX)
    }

    fn expression(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.here();
        match self.peek().cloned() {
            Some(Token::Num(x)) => {
                self.pos += 1;
                Ok(Expr::Num(x))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expression()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "sin" | "cos" => {
                        if !matches!(self.peek(), Some(Token::LParen)) {
                            return Err(Error::ExprParse {
                                pos: self.here().min(pos),
                                msg: format!("`{name}` must be followed by `(`"),
                            });
                        }
                        self.pos += 1;
                        let arg = Box::new(self.expression()?);
                        self.expect_rparen()?;
                        Ok(if name == "sin" {
                            Expr::Sin(arg)
                        } else {
                            Expr::Cos(arg)
                        })
                    }
                    _ => Ok(Expr::Var(name)),
                }
            }
            _ => Err(Error::ExprParse {
                pos,
                msg: "expected a number, name or parenthesized expression".into(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if matches!(self.peek(), Some(Token::RParen)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::ExprParse {
                pos: self.here(),
                msg: "expected `)`".into(),
            })
        }
    }
}
