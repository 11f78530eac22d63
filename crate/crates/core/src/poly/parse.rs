use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{PolyError, Polynomial, MAX_VARS};

/// Exponents beyond this are rejected; they only blow up term counts.
const MAX_EXPONENT: u32 = 64;

/// Parse an expression over the declared variables.
///
/// Grammar (whitespace ignored):
///
/// ```text
/// expr     := ('+'|'-')? term (('+'|'-') term)*
/// term     := factor ('*' factor)*
/// factor   := base ('^' uint)?
/// base     := var | rational | '(' expr ')'
/// rational := int ('/' uint)? | decimal
/// ```
pub fn parse_poly(text: &str, vars: &[&str]) -> Result<Polynomial, PolyError> {
    if vars.len() > MAX_VARS {
        return Err(PolyError::TooManyVariables(vars.len()));
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars,
    };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> PolyError {
        PolyError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
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

    fn n(&self) -> usize {
        self.vars.len()
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let negate = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let mut acc = self.term()?;
        if negate {
            acc = -&acc;
        }
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let at = self.pos;
            let digits = self.digits();
            if digits.is_empty() {
                return Err(self.error("expected unsigned integer exponent"));
            }
            let k: u32 = match digits.parse() {
                Ok(k) if k <= MAX_EXPONENT => k,
                _ => {
                    return Err(PolyError::Syntax {
                        pos: at,
                        msg: format!("exponent exceeds {MAX_EXPONENT}"),
                    })
                }
            };
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn base(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let q = self.rational()?;
                Ok(Polynomial::constant(self.n(), q))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Polynomial::var(self.n(), i)),
                    None => Err(PolyError::UnknownVariable {
                        name: name.to_string(),
                        pos: start,
                    }),
                }
            }
            Some(_) => Err(self.error("expected variable, number or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn rational(&mut self) -> Result<BigRational, PolyError> {
        let start = self.pos;
        let int_part = self.digits();
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let frac = self.digits();
            if int_part.is_empty() && frac.is_empty() {
                return Err(PolyError::Syntax {
                    pos: start,
                    msg: "malformed decimal".into(),
                });
            }
            let num: BigInt = format!("0{int_part}{frac}").parse().expect("digits");
            let den = num_traits::pow(BigInt::from(10), frac.len());
            return Ok(BigRational::new(num, den));
        }
        let num: BigInt = int_part.parse().expect("digits");
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let d = self.digits();
            if d.is_empty() {
                return Err(self.error("expected unsigned integer denominator"));
            }
            let den: BigInt = d.parse().expect("digits");
            if den.is_zero() {
                return Err(self.error("zero denominator"));
            }
            return Ok(BigRational::new(num, den));
        }
        Ok(BigRational::new(num, BigInt::one()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn cusp_terms() {
        let p = parse_poly("x^3 - y^2", &["x", "y"]).unwrap();
        let t: Vec<_> = p.terms().iter().map(|(e, c)| (e.clone(), c.clone())).collect();
        assert_eq!(t, vec![(vec![0, 2], q(-1, 1)), (vec![3, 0], q(1, 1))]);
    }

    #[test]
    fn zero_is_empty() {
        assert!(parse_poly("0", &["x"]).unwrap().is_zero());
    }

    #[test]
    fn expansion_cancels_against_brute_force() {
        let p = parse_poly("(x+y)^2 - x^2 - 2*x*y", &["x", "y"]).unwrap();
        let t: Vec<_> = p.terms().iter().collect();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0], (&vec![0, 2], &q(1, 1)));
    }

    #[test]
    fn decimals_and_fractions_are_exact() {
        let p = parse_poly("0.1 + 1/10", &["x"]).unwrap();
        assert_eq!(p.constant_term(), q(1, 5));
        let p = parse_poly(".25*x", &["x"]).unwrap();
        assert_eq!(p.terms()[&vec![1]], q(1, 4));
    }

    #[test]
    fn leading_sign_and_nested_parens() {
        let v = ["x", "y"];
        let a = parse_poly("-(x - (y))*2", &v).unwrap();
        let b = parse_poly("2*y - 2*x", &v).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_poly("x^^2", &["x"]) {
            Err(PolyError::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("{other:?}"),
        }
        match parse_poly("x + w", &["x", "y"]) {
            Err(PolyError::UnknownVariable { name, pos }) => {
                assert_eq!(name, "w");
                assert_eq!(pos, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_poly("x y", &["x", "y"]), Err(PolyError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_poly("(x", &["x"]), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_poly("1/0", &["x"]), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_poly("", &["x"]), Err(PolyError::Syntax { pos: 0, .. })));
    }

    #[test]
    fn too_many_variables() {
        assert!(matches!(
            parse_poly("a", &["a", "b", "c", "d", "e"]),
            Err(PolyError::TooManyVariables(5))
        ));
    }
}
