//! Text form for operators.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := number 'i'? | 'i' | 'q' pow? | 'z' pow? | 's' pow?
//! pow    := '^' ('(' signedRational ')' | signedRational)
//! ```
//!
//! `s` is the dilation `f(z) -> f(qz)`. `q` and `s` take rational powers,
//! `z` only nonnegative integer ones. Numbers are decimal literals; an `i`
//! suffix (or a bare `i`) makes them imaginary.

use super::{QDiffOperator, ZPoly};
use crate::error::{Error, Result};
use crate::scalars::{qrat, qrat_add, QExpScalar, QRat};
use num_complex::Complex64;
use num_traits::Zero;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Int(i64),
    Float(f64),
    ImagUnit,
    Q,
    Z,
    S,
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { pos, msg: msg.into() }
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let ch = bytes[i] as char;
            match ch {
                ' ' | '\t' | '\n' | '\r' => i += 1,
                '+' => lx.push(i, Tok::Plus, &mut i),
                '-' => lx.push(i, Tok::Minus, &mut i),
                '*' => lx.push(i, Tok::Star, &mut i),
                '^' => lx.push(i, Tok::Caret, &mut i),
                '/' => lx.push(i, Tok::Slash, &mut i),
                '(' => lx.push(i, Tok::LParen, &mut i),
                ')' => lx.push(i, Tok::RParen, &mut i),
                'i' => lx.push(i, Tok::ImagUnit, &mut i),
                'q' => lx.push(i, Tok::Q, &mut i),
                'z' => lx.push(i, Tok::Z, &mut i),
                's' => lx.push(i, Tok::S, &mut i),
                '0'..='9' => i = lx.number(i)?,
                other => return Err(syntax(i, format!("unexpected character '{other}'"))),
            }
        }
        Ok(lx.toks)
    }

    fn push(&mut self, pos: usize, tok: Tok, i: &mut usize) {
        self.toks.push((pos, tok));
        *i += 1;
    }

    fn number(&mut self, start: usize) -> Result<usize> {
        let bytes = self.src.as_bytes();
        let mut i = start;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let mut is_float = false;
        if i < bytes.len() && bytes[i] == b'.' {
            is_float = true;
            i += 1;
            let frac_start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i == frac_start {
                return Err(syntax(i, "expected digits after decimal point"));
            }
        }
        let text = &self.src[start..i];
        let tok = if is_float {
            Tok::Float(text.parse::<f64>().map_err(|_| syntax(start, "bad number literal"))?)
        } else {
            Tok::Int(
                text.parse::<i64>()
                    .map_err(|_| syntax(start, "integer literal out of range"))?,
            )
        };
        self.toks.push((start, tok));
        Ok(i)
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).map(|&(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |&(p, _)| p)
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<usize> {
        match self.bump() {
            Some((p, t)) if t == want => Ok(p),
            Some((p, _)) => Err(syntax(p, format!("expected {what}"))),
            None => Err(syntax(self.end, format!("expected {what}"))),
        }
    }

    /// `['+'|'-'] int ['/' int]`
    fn signed_rational(&mut self) -> Result<QRat> {
        let sign = match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                -1
            }
            Some(Tok::Plus) => {
                self.bump();
                1
            }
            _ => 1,
        };
        let num = match self.bump() {
            Some((_, Tok::Int(n))) => n,
            Some((p, _)) => return Err(syntax(p, "expected an integer exponent")),
            None => return Err(syntax(self.end, "expected an integer exponent")),
        };
        let den = if self.peek() == Some(Tok::Slash) {
            self.bump();
            match self.bump() {
                Some((p, Tok::Int(d))) => {
                    if d == 0 {
                        return Err(syntax(p, "zero denominator in exponent"));
                    }
                    d
                }
                Some((p, _)) => return Err(syntax(p, "expected a denominator")),
                None => return Err(syntax(self.end, "expected a denominator")),
            }
        } else {
            1
        };
        qrat(sign * num, den)
    }

    /// `'^' ('(' signedRational ')' | signedRational)`, or 1 if absent.
    fn power(&mut self) -> Result<QRat> {
        if self.peek() != Some(Tok::Caret) {
            return Ok(QRat::from_integer(1));
        }
        self.bump();
        if self.peek() == Some(Tok::LParen) {
            self.bump();
            let r = self.signed_rational()?;
            self.expect(Tok::RParen, "')'")?;
            Ok(r)
        } else {
            self.signed_rational()
        }
    }

    fn factor(&mut self, acc: &mut TermAcc) -> Result<()> {
        match self.bump() {
            Some((_, Tok::Int(n))) => {
                let v = n as f64;
                acc.coeff *= self.maybe_imaginary(v);
                Ok(())
            }
            Some((_, Tok::Float(v))) => {
                acc.coeff *= self.maybe_imaginary(v);
                Ok(())
            }
            Some((_, Tok::ImagUnit)) => {
                acc.coeff *= Complex64::new(0.0, 1.0);
                Ok(())
            }
            Some((_, Tok::Q)) => {
                let e = self.power()?;
                acc.q_exp = qrat_add(acc.q_exp, e)?;
                Ok(())
            }
            Some((p, Tok::Z)) => {
                let e = self.power()?;
                if !e.is_integer() || e < QRat::zero() {
                    return Err(syntax(p, "z powers must be nonnegative integers"));
                }
                acc.z_pow += *e.numer();
                Ok(())
            }
            Some((_, Tok::S)) => {
                let e = self.power()?;
                acc.shift = qrat_add(acc.shift, e)?;
                Ok(())
            }
            Some((p, _)) => Err(syntax(p, "expected a coefficient, q, z, or s")),
            None => Err(syntax(self.end, "expected a coefficient, q, z, or s")),
        }
    }

    fn maybe_imaginary(&mut self, v: f64) -> Complex64 {
        if self.peek() == Some(Tok::ImagUnit) {
            self.bump();
            Complex64::new(0.0, v)
        } else {
            Complex64::new(v, 0.0)
        }
    }

    fn term(&mut self, sign: f64) -> Result<(QRat, ZPoly)> {
        let mut acc = TermAcc {
            coeff: Complex64::new(sign, 0.0),
            q_exp: QRat::zero(),
            z_pow: 0,
            shift: QRat::zero(),
        };
        self.factor(&mut acc)?;
        while self.peek() == Some(Tok::Star) {
            self.bump();
            self.factor(&mut acc)?;
        }
        let scalar = QExpScalar::monomial(acc.coeff, acc.q_exp);
        Ok((acc.shift, ZPoly::monomial(scalar, acc.z_pow as usize)))
    }
}

struct TermAcc {
    coeff: Complex64,
    q_exp: QRat,
    z_pow: i64,
    shift: QRat,
}

/// Parses the operator DSL.
pub fn parse_operator(src: &str) -> Result<QDiffOperator> {
    let toks = Lexer::run(src)?;
    let mut parser = Parser { toks, pos: 0, end: src.len() };
    if parser.peek().is_none() {
        return Err(syntax(0, "empty operator expression"));
    }
    let mut terms = Vec::new();
    let mut sign = match parser.peek() {
        Some(Tok::Minus) => {
            parser.bump();
            -1.0
        }
        Some(Tok::Plus) => {
            parser.bump();
            1.0
        }
        _ => 1.0,
    };
    loop {
        terms.push(parser.term(sign)?);
        match parser.bump() {
            None => break,
            Some((_, Tok::Plus)) => sign = 1.0,
            Some((_, Tok::Minus)) => sign = -1.0,
            Some((p, _)) => return Err(syntax(p, "expected '+', '-', or '*'")),
        }
        if parser.peek().is_none() {
            return Err(syntax(parser.here(), "expected a term after the sign"));
        }
    }
    let op = QDiffOperator::from_terms(terms)?;
    if op.is_zero() {
        return Err(Error::ZeroOperator);
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{euler_op, three_term_op, two_level_op};
    use super::*;

    #[test]
    fn parses_the_running_examples() {
        assert_eq!(parse_operator("z^4*s^4 + z*s^2 + s").unwrap(), three_term_op());
        assert_eq!(parse_operator("z*s + 1").unwrap(), euler_op());
        assert_eq!(
            parse_operator("q^2*z^3*s^2 - z^2*s - z*s + 1").unwrap(),
            two_level_op()
        );
    }

    #[test]
    fn fractional_shifts_set_the_denominator() {
        let op = parse_operator("s^(1/2) - q^(-1/2)*z^2").unwrap();
        assert_eq!(op.denominator(), 2);
        assert_eq!(op.max_shift(), Some(QRat::new(1, 2)));
        let low = op.term(QRat::from_integer(0)).unwrap();
        assert_eq!(
            low.coeff(2),
            QExpScalar::monomial(Complex64::new(-1.0, 0.0), QRat::new(-1, 2))
        );
    }

    #[test]
    fn complex_coefficients_and_merging() {
        // 2i z s + 3 z s merges into one coefficient polynomial.
        let op = parse_operator("2i*z*s + 3*z*s").unwrap();
        assert_eq!(op.term_count(), 1);
        let p = op.term(QRat::from_integer(1)).unwrap();
        assert_eq!(p.coeff(1), QExpScalar::from_complex(Complex64::new(3.0, 2.0)));
        // A bare imaginary unit is a coefficient.
        let op2 = parse_operator("i").unwrap();
        assert_eq!(
            op2.term(QRat::from_integer(0)).unwrap().coeff(0),
            QExpScalar::from_complex(Complex64::new(0.0, 1.0))
        );
    }

    #[test]
    fn rejects_bad_input_with_positions() {
        match parse_operator("z^") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse_operator("z^(1/2)") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 0),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse_operator("z^(-1)*s") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 0),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse_operator("z z") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(parse_operator(""), Err(Error::Syntax { .. })));
        assert!(matches!(parse_operator("s - s"), Err(Error::ZeroOperator)));
    }
}
