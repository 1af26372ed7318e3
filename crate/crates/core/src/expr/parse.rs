//! Recursive-descent parser for the infix expression grammar.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | ident | ident '(' sum ')' | '(' sum ')'
//! ```

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use super::ast::{Expr, Func, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownFunction { offset, .. } => {
                *offset
            }
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.product()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.product()?);
            } else if self.eat(b'-') {
                terms.push(-self.product()?);
            } else {
                return Ok(Expr::add(terms));
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.unary()?;
            } else if self.eat(b'/') {
                acc = acc / self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut int_part = BigInt::zero();
        let mut denom = BigInt::one();
        let mut seen_digit = false;
        let mut seen_dot = false;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                int_part = int_part * 10 + BigInt::from(c - b'0');
                if seen_dot {
                    denom *= 10;
                }
                seen_digit = true;
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if !seen_digit {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        Ok(Expr::num(Rational::new(int_part, denom)))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        if self.peek() == Some(b'(') {
            let Some(f) = Func::from_name(name) else {
                return Err(ParseError::UnknownFunction { offset: start, name: name.to_string() });
            };
            self.pos += 1;
            let arg = self.sum()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)` after function argument"));
            }
            return Ok(Expr::func(f, arg));
        }
        if name == "pi" {
            return Ok(Expr::pi());
        }
        Ok(Expr::var(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ast::Node;

    fn v(n: &str) -> Expr {
        Expr::var(n)
    }

    #[test]
    fn power_literal() {
        assert_eq!(parse("v^2").unwrap(), Expr::pow(v("v"), Expr::int(2)));
    }

    #[test]
    fn linear_generator_coefficient() {
        let e = parse("(5*u-v)").unwrap();
        let expected = Expr::add(vec![Expr::int(5) * v("u"), Expr::int(-1) * v("v")]);
        assert_eq!(e, expected);
        assert!(matches!(e.node(), Node::Add(ts) if ts.len() == 2));
    }

    #[test]
    fn exp_of_negated_variable() {
        let e = parse("exp(-u)").unwrap();
        assert_eq!(e, Expr::func(Func::Exp, Expr::int(-1) * v("u")));
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("-x^2").unwrap(), -(v("x").powi(2)));
        assert_eq!(parse("2^3^2").unwrap(), Expr::int(512));
        assert_eq!(parse("x^-1").unwrap(), v("x").powi(-1));
        assert_eq!(parse("1/2*x").unwrap(), Expr::rat(1, 2) * v("x"));
        assert_eq!(parse("1.5").unwrap(), Expr::rat(3, 2));
    }

    #[test]
    fn errors_carry_offsets() {
        let err = parse("x + * y").unwrap_err();
        assert_eq!(err.offset(), 4);
        let err = parse("foo(x)").unwrap_err();
        assert!(matches!(err, ParseError::UnknownFunction { offset: 0, .. }));
        assert!(parse("(x").is_err());
        assert!(parse("x y").is_err());
    }
}
