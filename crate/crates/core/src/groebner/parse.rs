//! Text format for polynomials: a signed sum of terms, each a product of
//! numbers and variables `x[i1,...,id]^e`, e.g.
//! `1 + 0.5 * x[1,1] - 2 * x[1,2]^2 * x[2,1]`. Whitespace is ignored.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::monomial::Monomial;
use super::polynomial::{Coeff, Polynomial};
use crate::error::{Error, Result};
use crate::tensor::{MultiIndex, Shape};

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.chars().filter(|c| !c.is_whitespace()).collect(), pos: 0, src }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("polynomial {:?}: {what} at position {}", self.src, self.pos))
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
            s.push(c);
            self.pos += 1;
        }
        s
    }

    fn integer(&mut self) -> Result<usize> {
        let d = self.digits();
        d.parse().map_err(|_| self.err("expected an integer"))
    }

    /// Decimal literal with optional fraction, exponent, or `/denominator`,
    /// converted exactly.
    fn number(&mut self) -> Result<Coeff> {
        let int_part = self.digits();
        let mut frac = String::new();
        if self.eat('.') {
            frac = self.digits();
        }
        if int_part.is_empty() && frac.is_empty() {
            return Err(self.err("expected a number"));
        }
        let mantissa: BigInt = format!("{int_part}{frac}").parse().map_err(|_| self.err("bad number"))?;
        let mut exp10: i64 = -(frac.len() as i64);
        if matches!(self.peek(), Some('e') | Some('E')) {
            self.pos += 1;
            let neg = if self.eat('-') {
                true
            } else {
                self.eat('+');
                false
            };
            let e: i64 = self.digits().parse().map_err(|_| self.err("bad exponent"))?;
            exp10 += if neg { -e } else { e };
        }
        let ten = BigInt::from(10);
        let mut value = BigRational::from_integer(mantissa);
        if exp10 >= 0 {
            value *= BigRational::from_integer(num_traits::pow(ten, exp10 as usize));
        } else {
            value /= BigRational::from_integer(num_traits::pow(ten, (-exp10) as usize));
        }
        if self.eat('/') {
            let den: BigInt = self.digits().parse().map_err(|_| self.err("bad denominator"))?;
            if den.is_zero() {
                return Err(self.err("zero denominator"));
            }
            value /= BigRational::from_integer(den);
        }
        Ok(value)
    }
}

/// Parses a polynomial over the variables of `shape`.
pub fn parse_polynomial(src: &str, shape: &Shape) -> Result<Polynomial> {
    let mut cur = Cursor::new(src);
    if cur.chars.is_empty() {
        return Err(cur.err("empty input"));
    }
    let mut poly = Polynomial::zero();
    let mut first = true;
    while cur.peek().is_some() {
        let mut sign = Coeff::one();
        if cur.eat('-') {
            sign = -sign;
        } else if !cur.eat('+') && !first {
            return Err(cur.err("expected '+' or '-'"));
        }
        first = false;
        let mut coeff = sign;
        let mut vars: Vec<(usize, u32)> = Vec::new();
        loop {
            match cur.peek() {
                Some('x') => {
                    cur.bump();
                    cur.expect('[')?;
                    let mut coords = vec![cur.integer()?];
                    while cur.eat(',') {
                        coords.push(cur.integer()?);
                    }
                    cur.expect(']')?;
                    let a = MultiIndex(coords);
                    shape.check(&a).map_err(|e| cur.err(&e.to_string()))?;
                    let e = if cur.eat('^') { cur.integer()? as u32 } else { 1 };
                    vars.push((shape.offset(&a), e));
                }
                Some(c) if c.is_ascii_digit() || c == '.' => coeff *= cur.number()?,
                _ => return Err(cur.err("expected a number or variable")),
            }
            if !cur.eat('*') {
                break;
            }
        }
        poly.add_term(Monomial::from_pairs(vars), coeff);
    }
    Ok(poly)
}
