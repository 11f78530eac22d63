//! Sparse multivariate polynomials with exact rational coefficients.

mod compiled;
mod frame;
mod interval;
mod parse;

pub use compiled::CompiledPoly;
pub use frame::AffineFrame;
pub use interval::{Interval, IntervalBox};
pub use parse::parse_poly;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Largest ambient dimension accepted for germ polynomials.
pub const MAX_VARS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at offset {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("too many variables: {0} (at most {MAX_VARS})")]
    TooManyVariables(usize),
    #[error("frame directions are not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Exponent = Vec<u32>;

/// A polynomial in `nvars` variables. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponent, BigRational>,
}

/// Exact rational value of a finite float.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Tight enclosure of a rational coefficient; a point when exactly representable.
pub(crate) fn rational_enclosure(q: &BigRational) -> Interval {
    let c = rational_to_f64(q);
    if rational_from_f64(c) == *q {
        Interval::point(c)
    } else {
        Interval::new(c.next_down(), c.next_up())
    }
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Polynomial::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn constant_f64(nvars: usize, c: f64) -> Self {
        Polynomial::constant(nvars, rational_from_f64(c))
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range");
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Polynomial::zero(nvars);
        p.add_term(e, BigRational::one());
        p
    }

    /// Linear form `Σ c_i x_i` with coefficients taken exactly from floats.
    pub fn linear_form(coeffs: &[f64]) -> Self {
        let n = coeffs.len();
        let mut p = Polynomial::zero(n);
        for (i, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, rational_from_f64(c));
        }
        p
    }

    /// `|x - c|^2 - r^2`.
    pub fn sphere(center: &[f64], radius: f64) -> Self {
        let n = center.len();
        let mut p = Polynomial::zero(n);
        p.add_term(vec![0; n], -(rational_from_f64(radius) * rational_from_f64(radius)));
        for (i, &c) in center.iter().enumerate() {
            let xi = &Polynomial::var(n, i) - &Polynomial::constant_f64(n, c);
            p = &p + &(&xi * &xi);
        }
        p
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponent, BigRational)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length must equal nvars");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Exponent, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e);
        match slot {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn constant_term(&self) -> BigRational {
        self.terms
            .get(&vec![0; self.nvars])
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// True when every term has degree ≥ 1, i.e. the polynomial vanishes at 0.
    pub fn vanishes_at_origin(&self) -> bool {
        self.constant_term().is_zero()
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        let mut p = Polynomial::zero(self.nvars);
        for (e, a) in &self.terms {
            p.add_term(e.clone(), a * c);
        }
        p
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.nvars, BigRational::one());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    fn check_dim(&self, got: usize) -> Result<(), PolyError> {
        if got == self.nvars {
            Ok(())
        } else {
            Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                got,
            })
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        self.check_dim(x.len())?;
        let mut s = 0.0;
        for (e, c) in &self.terms {
            let mut t = rational_to_f64(c);
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= xi.powi(k as i32);
                }
            }
            s += t;
        }
        Ok(s)
    }

    pub fn eval_exact(&self, x: &[BigRational]) -> Result<BigRational, PolyError> {
        self.check_dim(x.len())?;
        let mut s = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= num_traits::pow(xi.clone(), k as usize);
                }
            }
            s += t;
        }
        Ok(s)
    }

    /// Enclosure of the range over `bx`: naive extension, tightened by the
    /// mean-value form.
    pub fn eval_interval(&self, bx: &IntervalBox) -> Result<Interval, PolyError> {
        self.check_dim(bx.dim())?;
        Ok(CompiledPoly::new(self).eval_interval(bx))
    }

    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut p = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i] -= 1;
            p.add_term(d, c * BigRational::from_integer(BigInt::from(e[i])));
        }
        p
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    /// Substitute `x_i := subs[i]`; all substitutes share one variable count.
    pub fn compose(&self, subs: &[Polynomial]) -> Polynomial {
        assert_eq!(subs.len(), self.nvars, "one substitute per variable");
        let m = subs.first().map(|s| s.nvars).unwrap_or(0);
        let maxdeg: Vec<u32> = (0..self.nvars)
            .map(|i| self.terms.keys().map(|e| e[i]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<Polynomial>> = subs
            .iter()
            .zip(&maxdeg)
            .map(|(s, &d)| {
                let mut v = vec![Polynomial::constant(m, BigRational::one())];
                for k in 1..=d as usize {
                    let next = &v[k - 1] * s;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Polynomial::zero(m);
        for (e, c) in &self.terms {
            let mut t = Polynomial::constant(m, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &powers[i][k as usize];
                }
            }
            out = &out + &t;
        }
        out
    }

    /// Exact pull-back along `u ↦ q + Σ u_j e_j`, with frame entries read as
    /// exact rationals.
    pub fn restrict_affine(&self, frame: &AffineFrame) -> Result<Polynomial, PolyError> {
        self.check_dim(frame.ambient_dim())?;
        let m = frame.dim();
        let subs: Vec<Polynomial> = (0..self.nvars)
            .map(|i| {
                let mut s = Polynomial::constant_f64(m, frame.base()[i]);
                for (j, d) in frame.directions().iter().enumerate() {
                    let mut e = vec![0; m];
                    e[j] = 1;
                    s.add_term(e, rational_from_f64(d[i]));
                }
                s
            })
            .collect();
        Ok(self.compose(&subs))
    }

    /// Re-embed into `m ≥ nvars` variables; the new variables are unused.
    pub fn extend_vars(&self, m: usize) -> Polynomial {
        assert!(m >= self.nvars);
        let mut p = Polynomial::zero(m);
        for (e, c) in &self.terms {
            let mut f = e.clone();
            f.resize(m, 0);
            p.add_term(f, c.clone());
        }
        p
    }

    /// Write the polynomial in the input grammar using `vars` as names.
    pub fn to_expr(&self, vars: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        // highest degree first reads more naturally
        let mut ts: Vec<_> = self.terms.iter().collect();
        ts.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then(b.0.cmp(a.0))
        });
        for (idx, (e, c)) in ts.into_iter().enumerate() {
            let neg = c.is_negative();
            if idx == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let a = c.abs();
            let mut factors: Vec<String> = Vec::new();
            if !a.is_one() || e.iter().all(|&k| k == 0) {
                factors.push(if a.is_integer() {
                    a.numer().to_string()
                } else {
                    format!("{}/{}", a.numer(), a.denom())
                });
            }
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => factors.push(vars[i].to_string()),
                    _ => factors.push(format!("{}^{}", vars[i], k)),
                }
            }
            let _ = write!(s, "{}", factors.join("*"));
        }
        s
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, o: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, o.nvars);
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, o: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, o.nvars);
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), -c.clone());
        }
        p
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, o: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, o.nvars);
        let mut p = Polynomial::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }
}
