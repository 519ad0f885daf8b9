//! Text grammar for polynomials:
//!
//! ```text
//! poly   ::= ['+'|'-'] term (('+'|'-') term)*
//! term   ::= factor ('*' factor)*
//! factor ::= real | '(' real ',' real ')' | 'z' index ('^' exp)?
//! ```
//!
//! Variable indices are 1-based. The Unicode minus sign is accepted.

use std::sync::Arc;

use num_complex::Complex64;

use super::HoloPoly;
use crate::error::{Error, Result};
use crate::lie::StratifiedAlgebra;

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    text: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().map(|c| if c == '−' { '-' } else { c }).collect(),
            pos: 0,
            text,
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at position {} in `{}`", self.pos, self.text))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.chars.get(self.pos), Some('+' | '-')) {
            self.pos += 1;
        }
        while let Some(&c) = self.chars.get(self.pos) {
            let exp_sign =
                (c == '-' || c == '+') && self.pos > start + 1 && matches!(self.chars[self.pos - 1], 'e' | 'E');
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse::<f64>().map_err(|_| self.error(&format!("bad number `{s}`")))
    }

    fn integer(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse::<u32>().map_err(|_| self.error("expected an integer"))
    }
}

pub(super) fn parse_poly(alg: &Arc<StratifiedAlgebra>, text: &str) -> Result<HoloPoly> {
    let mut cur = Cursor::new(text);
    let mut out = HoloPoly::zero(alg);
    if cur.peek().is_none() {
        return Err(cur.error("empty polynomial"));
    }
    let mut sign = 1.0;
    if cur.eat('-') {
        sign = -1.0;
    } else {
        cur.eat('+');
    }
    loop {
        let (exps, c) = term(&mut cur, alg.dim())?;
        out.add_term(exps, c * sign);
        match cur.peek() {
            None => break,
            Some('+') => {
                cur.pos += 1;
                sign = 1.0;
            }
            Some('-') => {
                cur.pos += 1;
                sign = -1.0;
            }
            Some(_) => return Err(cur.error("expected `+` or `-`")),
        }
    }
    Ok(out)
}

fn term(cur: &mut Cursor<'_>, dim: usize) -> Result<(Vec<u32>, Complex64)> {
    let mut exps = vec![0u32; dim];
    let mut coeff = Complex64::new(1.0, 0.0);
    loop {
        match cur.peek() {
            Some('(') => {
                cur.pos += 1;
                let re = cur.number()?;
                cur.expect(',')?;
                let im = cur.number()?;
                cur.expect(')')?;
                coeff *= Complex64::new(re, im);
            }
            Some('z') => {
                cur.pos += 1;
                let idx = cur.integer()? as usize;
                if idx == 0 || idx > dim {
                    return Err(cur.error(&format!("variable z{idx} out of range 1..={dim}")));
                }
                let e = if cur.eat('^') { cur.integer()? } else { 1 };
                exps[idx - 1] += e;
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                coeff *= cur.number()?;
            }
            _ => return Err(cur.error("expected a coefficient or a variable")),
        }
        if !cur.eat('*') {
            break;
        }
    }
    Ok((exps, coeff))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h3() -> Arc<StratifiedAlgebra> {
        Arc::new(StratifiedAlgebra::heisenberg_weyl(1).unwrap())
    }

    #[test]
    fn grammar_example() {
        let alg = h3();
        let f = parse_poly(&alg, "z1^2 + (0,1)*z3").unwrap();
        assert_eq!(f.coeff(&[2, 0, 0]), Complex64::new(1.0, 0.0));
        assert_eq!(f.coeff(&[0, 0, 1]), Complex64::new(0.0, 1.0));
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn signs_and_scientific_notation() {
        let alg = h3();
        let f = parse_poly(&alg, "-2.5e-1*z1*z2 − 3 + (1e1,-2)*z2^3").unwrap();
        assert_eq!(f.coeff(&[1, 1, 0]), Complex64::new(-0.25, 0.0));
        assert_eq!(f.coeff(&[0, 0, 0]), Complex64::new(-3.0, 0.0));
        assert_eq!(f.coeff(&[0, 3, 0]), Complex64::new(10.0, -2.0));
    }

    #[test]
    fn repeated_variables_multiply() {
        let alg = h3();
        let f = parse_poly(&alg, "z1*z1^2*z3").unwrap();
        assert_eq!(f.coeff(&[3, 0, 1]), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn errors() {
        let alg = h3();
        for bad in ["", "z4", "z0", "z1 +", "(1,2", "z1 z2", "q"] {
            assert!(matches!(parse_poly(&alg, bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn display_reparses() {
        let alg = h3();
        let f = parse_poly(&alg, "z1^2 + (0.5,-1)*z3 - 2*z1*z2 + 7").unwrap();
        assert_eq!(parse_poly(&alg, &f.to_string()).unwrap(), f);
    }
}
