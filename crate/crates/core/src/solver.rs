//! Branch-and-prune isolation of the real roots of square polynomial systems,
//! certified with the Krawczyk operator.

use std::cmp::Ordering;

use thiserror::Error;

use crate::linalg;
use crate::poly::{CompiledPoly, Interval, IntervalBox, Polynomial};

/// Bisection point as a fraction of the side; off-center so that roots on
/// symmetric grids do not land on a cut.
const SPLIT_RATIO: f64 = 0.4921875;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("system is not square: {eqs} equations in {vars} variables")]
    NotSquare { eqs: usize, vars: usize },
    #[error("equations disagree on the number of variables")]
    MixedArity,
    #[error("domain has dimension {got}, system has {expected} variables")]
    DomainMismatch { expected: usize, got: usize },
    #[error("root is not certified")]
    NotCertified,
    #[error("contraction stalled at width {achieved:e}")]
    Stalled { achieved: f64, root: Box<CertifiedRoot> },
}

#[derive(Clone, Debug)]
pub struct SquareSystem {
    nvars: usize,
    eqs: Vec<Polynomial>,
    compiled: Vec<CompiledPoly>,
}

impl SquareSystem {
    pub fn new(eqs: Vec<Polynomial>) -> Result<Self, SolverError> {
        let nvars = eqs.first().map_or(0, Polynomial::nvars);
        if eqs.iter().any(|p| p.nvars() != nvars) {
            return Err(SolverError::MixedArity);
        }
        if eqs.len() != nvars {
            return Err(SolverError::NotSquare {
                eqs: eqs.len(),
                vars: nvars,
            });
        }
        let compiled = eqs.iter().map(CompiledPoly::new).collect();
        Ok(SquareSystem {
            nvars,
            eqs,
            compiled,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn equations(&self) -> &[Polynomial] {
        &self.eqs
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.compiled.iter().map(|p| p.eval(x)).collect()
    }

    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.compiled.iter().map(|p| p.gradient(x)).collect()
    }

    fn residual(&self, x: &[f64]) -> f64 {
        linalg::norm(&self.eval(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Halvings along the most-split axis before a box is abandoned.
    pub max_depth: u32,
    pub min_width: f64,
    /// Target width for certified root boxes.
    pub tol: f64,
    pub max_boxes: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_depth: 60,
            min_width: 1e-10,
            tol: 1e-12,
            max_boxes: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedRoot {
    pub bx: IntervalBox,
    pub certified: bool,
    pub residual: f64,
}

impl CertifiedRoot {
    pub fn midpoint(&self) -> Vec<f64> {
        self.bx.mid()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unresolved {
    MinWidth,
    MaxDepth,
    Budget,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnresolvedBox {
    pub bx: IntervalBox,
    pub reason: Unresolved,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub boxes_processed: usize,
    pub max_depth: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub roots: Vec<CertifiedRoot>,
    pub unresolved: Vec<UnresolvedBox>,
    pub stats: SolveStats,
}

impl SolveReport {
    pub fn is_complete(&self) -> bool {
        self.unresolved.is_empty()
    }

    /// Associative merge of two reports over disjoint domains.
    pub fn merge(mut self, other: SolveReport) -> SolveReport {
        self.roots.extend(other.roots);
        self.unresolved.extend(other.unresolved);
        self.stats.boxes_processed += other.stats.boxes_processed;
        self.stats.max_depth = self.stats.max_depth.max(other.stats.max_depth);
        self.roots.sort_by(|a, b| lex(&a.midpoint(), &b.midpoint()));
        self.unresolved.sort_by(|a, b| lex(&a.bx.mid(), &b.bx.mid()));
        self
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

enum Krawczyk {
    Unique(IntervalBox),
    Empty,
    Contract(IntervalBox),
    Fail,
}

fn krawczyk_image(sys: &SquareSystem, x: &IntervalBox) -> Option<IntervalBox> {
    let n = sys.nvars;
    let c = x.mid();
    let jc = sys.jacobian(&c);
    let y = linalg::inverse(&jc)?;
    let cbox = IntervalBox::point(&c);
    let fc: Vec<Interval> = sys
        .compiled
        .iter()
        .map(|p| p.eval_interval_naive(&cbox))
        .collect();
    let jx: Vec<Vec<Interval>> = sys.compiled.iter().map(|p| p.gradient_interval(x)).collect();
    let dx: Vec<Interval> = (0..n).map(|k| x[k] - Interval::point(c[k])).collect();
    let mut k = Vec::with_capacity(n);
    for i in 0..n {
        let mut yf = Interval::ZERO;
        for j in 0..n {
            yf = yf + fc[j].scale(y[(i, j)]);
        }
        let mut acc = Interval::point(c[i]) - yf;
        for kk in 0..n {
            let mut m = if i == kk {
                Interval::point(1.0)
            } else {
                Interval::ZERO
            };
            for j in 0..n {
                m = m - jx[j][kk].scale(y[(i, j)]);
            }
            acc = acc + m * dx[kk];
        }
        if !acc.is_finite() {
            return None;
        }
        k.push(acc);
    }
    Some(IntervalBox(k))
}

/// Slightly enlarged box, so that a root pinned to ulp width can still be
/// shown to lie in the interior.
fn inflate(x: &IntervalBox, widths: &[f64]) -> IntervalBox {
    IntervalBox(
        x.0.iter()
            .zip(widths)
            .map(|(iv, &w)| {
                let m = iv.mid();
                let pad = 0.1 * iv.radius() + 1e-13 * w + 4.0 * f64::EPSILON * m.abs();
                Interval::new((iv.lo - pad).next_down(), (iv.hi + pad).next_up())
            })
            .collect(),
    )
}

fn krawczyk(sys: &SquareSystem, x: &IntervalBox, widths: &[f64]) -> Krawczyk {
    let Some(k) = krawczyk_image(sys, x) else {
        return Krawczyk::Fail;
    };
    if x.strictly_contains(&k) {
        return Krawczyk::Unique(x.clone());
    }
    match k.intersect(x) {
        None => Krawczyk::Empty,
        Some(kx) => {
            let xi = inflate(&kx, widths);
            match krawczyk_image(sys, &xi) {
                Some(ki) if xi.strictly_contains(&ki) => Krawczyk::Unique(xi),
                _ => Krawczyk::Contract(kx),
            }
        }
    }
}

/// Relative size of `b` measured against the reference widths.
fn rel_width(b: &IntervalBox, reference: &[f64]) -> f64 {
    b.0.iter()
        .zip(reference)
        .map(|(iv, &w)| if w > 0.0 { iv.width() / w } else { 0.0 })
        .fold(0.0, f64::max)
}

/// Tighten a box known to satisfy the Krawczyk test. The returned box still
/// satisfies it.
fn tighten(sys: &SquareSystem, x: IntervalBox, tol: f64) -> IntervalBox {
    // K(k) ∩ k keeps the root, so iterate to a fixed point
    let mut k = x.clone();
    for _ in 0..100 {
        if k.max_width() <= 0.5 * tol {
            break;
        }
        let Some(next) = krawczyk_image(sys, &k).and_then(|img| img.intersect(&k)) else {
            break;
        };
        let stalled = next == k;
        k = next;
        if stalled {
            break;
        }
    }
    // re-establish strict containment on a slightly padded box
    for pad in [1e-3 * tol, 0.1 * tol, 0.4 * tol] {
        let xi = IntervalBox(
            k.0.iter()
                .map(|iv| {
                    let p = 0.1 * iv.radius() + 8.0 * f64::EPSILON * iv.mid().abs() + pad;
                    Interval::new((iv.lo - p).next_down(), (iv.hi + p).next_up())
                })
                .collect(),
        );
        if xi.max_width() >= x.max_width() {
            break;
        }
        if let Some(ki) = krawczyk_image(sys, &xi) {
            if xi.strictly_contains(&ki) {
                return xi;
            }
        }
    }
    x
}

/// All roots of `sys` in `domain`, each certified or reported unresolved.
pub fn isolate_roots(sys: &SquareSystem, domain: &IntervalBox, opts: &SolveOptions) -> SolveReport {
    assert_eq!(domain.dim(), sys.nvars, "domain dimension");
    let widths: Vec<f64> = domain.0.iter().map(Interval::width).collect();
    let mut report = SolveReport {
        roots: Vec::new(),
        unresolved: Vec::new(),
        stats: SolveStats::default(),
    };
    let mut stack: Vec<(IntervalBox, Vec<u32>)> = vec![(domain.clone(), vec![0; sys.nvars])];
    while let Some((mut bx, splits)) = stack.pop() {
        if report.stats.boxes_processed >= opts.max_boxes {
            report.unresolved.push(UnresolvedBox {
                bx,
                reason: Unresolved::Budget,
            });
            continue;
        }
        report.stats.boxes_processed += 1;
        let depth = splits.iter().copied().max().unwrap_or(0);
        report.stats.max_depth = report.stats.max_depth.max(depth);

        if sys
            .compiled
            .iter()
            .any(|p| !p.eval_interval(&bx).contains(0.0))
        {
            continue;
        }
        let mut certified = None;
        let mut discard = false;
        for _ in 0..8 {
            match krawczyk(sys, &bx, &widths) {
                Krawczyk::Empty => {
                    discard = true;
                    break;
                }
                Krawczyk::Unique(u) => {
                    certified = Some(u);
                    break;
                }
                Krawczyk::Contract(k) => {
                    let before = rel_width(&bx, &widths);
                    let after = rel_width(&k, &widths);
                    bx = k;
                    if after > 0.7 * before {
                        break;
                    }
                }
                Krawczyk::Fail => break,
            }
        }
        if discard {
            continue;
        }
        if let Some(b) = certified {
            let b = tighten(sys, b, opts.tol);
            if report.roots.iter().any(|r| r.bx.meets(&b)) {
                continue;
            }
            let residual = sys.residual(&b.mid());
            report.roots.push(CertifiedRoot {
                bx: b,
                certified: true,
                residual,
            });
            continue;
        }
        if bx.max_width() <= opts.min_width {
            report.unresolved.push(UnresolvedBox {
                bx,
                reason: Unresolved::MinWidth,
            });
            continue;
        }
        if depth >= opts.max_depth {
            report.unresolved.push(UnresolvedBox {
                bx,
                reason: Unresolved::MaxDepth,
            });
            continue;
        }
        let axis = (0..sys.nvars)
            .max_by(|&a, &b| {
                let ra = if widths[a] > 0.0 { bx[a].width() / widths[a] } else { 0.0 };
                let rb = if widths[b] > 0.0 { bx[b].width() / widths[b] } else { 0.0 };
                ra.total_cmp(&rb).then(b.cmp(&a))
            })
            .unwrap_or(0);
        let (lo, hi) = bx.split(axis, SPLIT_RATIO);
        let mut s = splits;
        s[axis] += 1;
        // push hi first so the lower half is explored first
        stack.push((hi, s.clone()));
        stack.push((lo, s));
    }
    report.roots.sort_by(|a, b| lex(&a.midpoint(), &b.midpoint()));
    report
}

/// Shrink a certified root box to width ≤ `tol`.
pub fn refine_root(root: &CertifiedRoot, sys: &SquareSystem, tol: f64) -> Result<CertifiedRoot, SolverError> {
    if !root.certified {
        return Err(SolverError::NotCertified);
    }
    if root.bx.dim() != sys.nvars {
        return Err(SolverError::DomainMismatch {
            expected: sys.nvars,
            got: root.bx.dim(),
        });
    }
    let bx = if root.bx.max_width() <= tol {
        root.bx.clone()
    } else {
        tighten(sys, root.bx.clone(), tol)
    };
    let out = CertifiedRoot {
        residual: sys.residual(&bx.mid()),
        bx,
        certified: true,
    };
    if out.bx.max_width() > tol {
        let achieved = out.bx.max_width();
        return Err(SolverError::Stalled {
            achieved,
            root: Box::new(out),
        });
    }
    Ok(out)
}

/// Tries to prove that `eqs` (typically more equations than variables) have
/// no common zero in `domain`. Returns the boxes that could not be excluded.
pub fn certify_empty(eqs: &[Polynomial], domain: &IntervalBox, opts: &SolveOptions) -> Vec<UnresolvedBox> {
    let compiled: Vec<CompiledPoly> = eqs.iter().map(CompiledPoly::new).collect();
    let n = domain.dim();
    let widths: Vec<f64> = domain.0.iter().map(Interval::width).collect();
    let mut out = Vec::new();
    let mut processed = 0usize;
    let mut stack = vec![(domain.clone(), 0u32)];
    while let Some((bx, depth)) = stack.pop() {
        if processed >= opts.max_boxes {
            out.push(UnresolvedBox {
                bx,
                reason: Unresolved::Budget,
            });
            continue;
        }
        processed += 1;
        if compiled.iter().any(|p| !p.eval_interval(&bx).contains(0.0)) {
            continue;
        }
        if bx.max_width() <= opts.min_width {
            out.push(UnresolvedBox {
                bx,
                reason: Unresolved::MinWidth,
            });
            continue;
        }
        if depth >= opts.max_depth * n as u32 {
            out.push(UnresolvedBox {
                bx,
                reason: Unresolved::MaxDepth,
            });
            continue;
        }
        let axis = (0..n)
            .max_by(|&a, &b| {
                let ra = if widths[a] > 0.0 { bx[a].width() / widths[a] } else { 0.0 };
                let rb = if widths[b] > 0.0 { bx[b].width() / widths[b] } else { 0.0 };
                ra.total_cmp(&rb).then(b.cmp(&a))
            })
            .unwrap_or(0);
        let (lo, hi) = bx.split(axis, SPLIT_RATIO);
        stack.push((hi, depth + 1));
        stack.push((lo, depth + 1));
    }
    out
}
