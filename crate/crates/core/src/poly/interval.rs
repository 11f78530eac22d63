//! Closed intervals with outward rounding.
//!
//! Every arithmetic result is widened by one ulp on each side, which keeps
//! enclosures sound under round-to-nearest without touching the FPU mode.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[inline]
fn down(x: f64) -> f64 {
    if x.is_finite() {
        x.next_down()
    } else {
        x
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x.is_finite() {
        x.next_up()
    } else {
        x
    }
}

impl Interval {
    /// Panics in debug builds if `lo > hi`.
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub const fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub const ZERO: Interval = Interval::point(0.0);

    /// Hull of two unordered endpoints.
    pub fn hull_of(a: f64, b: f64) -> Self {
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    /// Symmetric interval `[-r, r]`.
    pub fn symmetric(r: f64) -> Self {
        let r = r.abs();
        Interval { lo: -r, hi: r }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.width()
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value in the interval.
    pub fn mig(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `other` lies in the open interior of `self`.
    pub fn strictly_contains(&self, other: &Interval) -> bool {
        self.lo < other.lo && other.hi < self.hi
    }

    pub fn meets(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn scale(&self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval::new(mul_lo(self.lo, c), mul_hi(self.hi, c))
        } else {
            Interval::new(mul_lo(self.hi, c), mul_hi(self.lo, c))
        }
    }

    pub fn sqr(&self) -> Interval {
        self.powi(2)
    }

    pub fn powi(&self, k: u32) -> Interval {
        match k {
            0 => Interval::point(1.0),
            1 => *self,
            _ => {
                let a = pow_up(self.lo.abs(), k);
                let b = pow_up(self.hi.abs(), k);
                if k % 2 == 0 {
                    let lo = if self.contains(0.0) {
                        0.0
                    } else {
                        pow_down(self.lo.abs().min(self.hi.abs()), k)
                    };
                    Interval::new(lo, a.max(b))
                } else {
                    // odd powers are monotone
                    let lo = if self.lo < 0.0 {
                        -a
                    } else {
                        pow_down(self.lo, k)
                    };
                    let hi = if self.hi < 0.0 {
                        -pow_down(self.hi.abs(), k)
                    } else {
                        b
                    };
                    Interval::new(lo, hi)
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

// |x|^k rounded up / down; repeated multiplication accumulates at most k ulps.
fn pow_up(x: f64, k: u32) -> f64 {
    let mut r = 1.0f64;
    for _ in 0..k {
        r = mul_hi(r, x);
    }
    r
}

fn pow_down(x: f64, k: u32) -> f64 {
    let mut r = 1.0f64;
    for _ in 0..k {
        r = mul_lo(r, x).max(0.0);
    }
    r
}

// Error-free transformations: widen only when the float result is inexact,
// and only on the side where the exact value lies.
#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

#[inline]
fn add_lo(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_finite() && two_sum_err(a, b, s) < 0.0 {
        down(s)
    } else {
        s
    }
}

#[inline]
fn add_hi(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_finite() && two_sum_err(a, b, s) > 0.0 {
        up(s)
    } else {
        s
    }
}

#[inline]
fn mul_lo(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    let e = a.mul_add(b, -p);
    // products in the subnormal range may lose bits that fma cannot report
    if e < 0.0 || (p.abs() < f64::MIN_POSITIVE && p != 0.0) {
        down(p)
    } else {
        p
    }
}

#[inline]
fn mul_hi(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    let e = a.mul_add(b, -p);
    if e > 0.0 || (p.abs() < f64::MIN_POSITIVE && p != 0.0) {
        up(p)
    } else {
        p
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::new(add_lo(self.lo, o.lo), add_hi(self.hi, o.hi))
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval::new(add_lo(self.lo, -o.hi), add_hi(self.hi, -o.lo))
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let pairs = [
            (self.lo, o.lo),
            (self.lo, o.hi),
            (self.hi, o.lo),
            (self.hi, o.hi),
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b) in pairs {
            lo = lo.min(mul_lo(a, b));
            hi = hi.max(mul_hi(a, b));
        }
        Interval::new(lo, hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// An axis-aligned box: one interval per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalBox(pub Vec<Interval>);

impl IntervalBox {
    pub fn new(sides: Vec<Interval>) -> Self {
        IntervalBox(sides)
    }

    /// The cube `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Self {
        IntervalBox(vec![Interval::symmetric(r); n])
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Self {
        IntervalBox(lo.iter().zip(hi).map(|(&a, &b)| Interval::new(a, b)).collect())
    }

    pub fn point(x: &[f64]) -> Self {
        IntervalBox(x.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn mid(&self) -> Vec<f64> {
        self.0.iter().map(Interval::mid).collect()
    }

    pub fn max_width(&self) -> f64 {
        self.0.iter().map(Interval::width).fold(0.0, f64::max)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.0.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    pub fn contains_box(&self, other: &IntervalBox) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .all(|(a, b)| a.contains_interval(b))
    }

    pub fn strictly_contains(&self, other: &IntervalBox) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .all(|(a, b)| a.strictly_contains(b))
    }

    pub fn meets(&self, other: &IntervalBox) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a.meets(b))
    }

    pub fn intersect(&self, other: &IntervalBox) -> Option<IntervalBox> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.intersect(b))
            .collect::<Option<Vec<_>>>()
            .map(IntervalBox)
    }

    /// Split along `axis` at fraction `t` of the side.
    pub fn split(&self, axis: usize, t: f64) -> (IntervalBox, IntervalBox) {
        let side = self.0[axis];
        let cut = side.lo + t * side.width();
        let mut a = self.clone();
        let mut b = self.clone();
        a.0[axis] = Interval::new(side.lo, cut);
        b.0[axis] = Interval::new(cut, side.hi);
        (a, b)
    }
}

impl std::ops::Index<usize> for IntervalBox {
    type Output = Interval;
    fn index(&self, i: usize) -> &Interval {
        &self.0[i]
    }
}
