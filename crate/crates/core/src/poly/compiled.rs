//! Flattened evaluation form for hot loops.

use super::interval::{Interval, IntervalBox};
use super::{rational_enclosure, rational_to_f64, Polynomial};

/// Boxes at most this wide also get the mean-value form.
const CENTERED_WIDTH: f64 = 1.0;
const STACK_VARS: usize = 8;
const STACK_DEG: usize = 12;

#[derive(Clone, Debug)]
struct Flat {
    nvars: usize,
    coeffs: Vec<f64>,
    coeff_iv: Vec<Interval>,
    exps: Vec<u32>,
    maxdeg: Vec<u32>,
}

impl Flat {
    fn new(p: &Polynomial) -> Self {
        let n = p.nvars();
        let mut coeffs = Vec::new();
        let mut coeff_iv = Vec::new();
        let mut exps = Vec::new();
        let mut maxdeg = vec![0; n];
        for (e, c) in p.terms() {
            coeffs.push(rational_to_f64(c));
            coeff_iv.push(rational_enclosure(c));
            for (i, &k) in e.iter().enumerate() {
                maxdeg[i] = maxdeg[i].max(k);
            }
            exps.extend_from_slice(e);
        }
        Flat {
            nvars: n,
            coeffs,
            coeff_iv,
            exps,
            maxdeg,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let n = self.nvars;
        let mut s = 0.0;
        for (t, &c) in self.coeffs.iter().enumerate() {
            let mut v = c;
            for i in 0..n {
                let k = self.exps[t * n + i];
                if k > 0 {
                    v *= x[i].powi(k as i32);
                }
            }
            s += v;
        }
        s
    }

    fn eval_naive(&self, bx: &[Interval]) -> Interval {
        let n = self.nvars;
        if self.coeffs.is_empty() {
            return Interval::ZERO;
        }
        if n <= STACK_VARS && self.maxdeg.iter().all(|&d| (d as usize) < STACK_DEG) {
            // powers[i][k] = X_i^k with tight even powers
            let mut powers = [[Interval::ZERO; STACK_DEG]; STACK_VARS];
            for i in 0..n {
                for k in 0..=self.maxdeg[i] as usize {
                    powers[i][k] = bx[i].powi(k as u32);
                }
            }
            self.sum_terms(|i, k| powers[i][k])
        } else {
            let powers: Vec<Vec<Interval>> = (0..n)
                .map(|i| (0..=self.maxdeg[i]).map(|k| bx[i].powi(k)).collect())
                .collect();
            self.sum_terms(|i, k| powers[i][k])
        }
    }

    fn sum_terms(&self, pow: impl Fn(usize, usize) -> Interval) -> Interval {
        let n = self.nvars;
        let mut s = Interval::ZERO;
        for (t, &c) in self.coeff_iv.iter().enumerate() {
            let mut v = c;
            for i in 0..n {
                let k = self.exps[t * n + i] as usize;
                if k > 0 {
                    v = v * pow(i, k);
                }
            }
            s = s + v;
        }
        s
    }
}

/// A polynomial with its gradient, compiled for float and interval evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    p: Flat,
    grad: Vec<Flat>,
}

impl CompiledPoly {
    pub fn new(p: &Polynomial) -> Self {
        CompiledPoly {
            p: Flat::new(p),
            grad: p.gradient().iter().map(Flat::new).collect(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.p.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.p.coeffs.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.p.nvars);
        self.p.eval(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x)).collect()
    }

    pub fn gradient_interval(&self, bx: &IntervalBox) -> Vec<Interval> {
        self.grad.iter().map(|g| g.eval_naive(&bx.0)).collect()
    }

    pub fn eval_interval_naive(&self, bx: &IntervalBox) -> Interval {
        self.p.eval_naive(&bx.0)
    }

    /// Naive extension, intersected with the mean-value form on small boxes.
    pub fn eval_interval(&self, bx: &IntervalBox) -> Interval {
        let naive = self.p.eval_naive(&bx.0);
        self.tighten(bx, naive)
    }

    /// True when the range over `bx` provably misses 0.
    pub fn excludes_zero(&self, bx: &IntervalBox) -> bool {
        let naive = self.p.eval_naive(&bx.0);
        !naive.contains(0.0) || !self.tighten(bx, naive).contains(0.0)
    }

    /// True when the range over `bx` is provably negative.
    pub fn surely_negative(&self, bx: &IntervalBox) -> bool {
        let naive = self.p.eval_naive(&bx.0);
        naive.hi < 0.0 || self.tighten(bx, naive).hi < 0.0
    }

    /// True when the range over `bx` is provably positive.
    pub fn surely_positive(&self, bx: &IntervalBox) -> bool {
        let naive = self.p.eval_naive(&bx.0);
        naive.lo > 0.0 || self.tighten(bx, naive).lo > 0.0
    }

    fn tighten(&self, bx: &IntervalBox, naive: Interval) -> Interval {
        if bx.max_width() > CENTERED_WIDTH || self.p.coeffs.is_empty() || naive.width() == 0.0 {
            return naive;
        }
        let n = self.p.nvars;
        let mut mbox = [Interval::ZERO; STACK_VARS];
        let mut heap;
        let mbox: &mut [Interval] = if n <= STACK_VARS {
            &mut mbox[..n]
        } else {
            heap = vec![Interval::ZERO; n];
            &mut heap
        };
        for (slot, iv) in mbox.iter_mut().zip(&bx.0) {
            *slot = Interval::point(iv.mid());
        }
        let mut c = self.p.eval_naive(mbox);
        for (i, g) in self.grad.iter().enumerate() {
            if g.coeffs.is_empty() {
                continue;
            }
            let dx = bx.0[i] - mbox[i];
            c = c + g.eval_naive(&bx.0) * dx;
        }
        naive.intersect(&c).unwrap_or(naive)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_poly;
    use super::*;

    #[test]
    fn centered_form_is_tighter_on_small_boxes() {
        let p = parse_poly("x^2 - 2*x*y + y^2", &["x", "y"]).unwrap();
        let c = CompiledPoly::new(&p);
        let bx = IntervalBox::from_bounds(&[0.5, 0.5], &[0.51, 0.51]);
        let naive = c.eval_interval_naive(&bx);
        let tight = c.eval_interval(&bx);
        assert!(tight.width() <= naive.width());
        assert!(tight.contains(0.0));
    }

    #[test]
    fn gradient_matches_symbolic() {
        let p = parse_poly("x^3 - y^2", &["x", "y"]).unwrap();
        let c = CompiledPoly::new(&p);
        assert_eq!(c.gradient(&[2.0, 3.0]), vec![12.0, -6.0]);
    }
}
