//! Germs, Milnor fibres, links, stratified critical points on the fibre and
//! their Morse indices.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg;
use crate::poly::{rational_from_f64, AffineFrame, CompiledPoly, Interval, IntervalBox, PolyError, Polynomial};
use crate::solver::{self, CertifiedRoot, SolveOptions, SquareSystem};
use crate::topo::{self, Conjunction, RegionSpec, Schedule, TopoError};

/// Distance below which a root counts as touching a lower stratum, the
/// sphere, or the boundary of its stratum.
pub const TOL_STRAT: f64 = 1e-7;

/// Ratio between the slice shift and δ for finite fibres; see
/// [`ScaleSchedule::for_slices`]. Much smaller shifts push the fibre
/// features of tangent branches (size δ^{3/2} on a cusp) and the index
/// step η toward the solver and stratification tolerances.
pub const SLICE_SHRINK: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrataError {
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("boundary critical point with g ≈ 0 at {0:?}")]
    BoundaryZero(Vec<f64>),
    #[error("invalid germ: {0}")]
    InvalidGerm(String),
    #[error("no stable link up to the smallest scale tried; traces {0:?}")]
    NoStableScale(Vec<(f64, i64)>),
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

impl StrataError {
    /// Errors the degeneracy policy answers by resampling the direction.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            StrataError::Degenerate(_) | StrataError::BoundaryZero(_) | StrataError::Topo(TopoError::Unstable { .. })
        )
    }
}

/// `equalities = 0`, `inequalities > 0`, of the declared dimension. The
/// origin is implicitly removed from every stratum.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    pub equalities: Vec<Polynomial>,
    pub inequalities: Vec<Polynomial>,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Germ {
    pub n: usize,
    pub strata: Vec<Stratum>,
    pub origin_stratum: bool,
}

impl Germ {
    pub fn new(n: usize, strata: Vec<Stratum>, origin_stratum: bool) -> Result<Germ, StrataError> {
        if strata.is_empty() {
            return Err(StrataError::InvalidGerm("no strata".into()));
        }
        for (i, s) in strata.iter().enumerate() {
            if s.dim > n || s.dim == 0 {
                return Err(StrataError::InvalidGerm(format!(
                    "stratum {i}: dimension {} not in 1..={n}",
                    s.dim
                )));
            }
            for p in s.equalities.iter().chain(&s.inequalities) {
                if p.nvars() != n {
                    return Err(StrataError::InvalidGerm(format!(
                        "stratum {i}: polynomial in {} variables, expected {n}",
                        p.nvars()
                    )));
                }
            }
            if let Some(p) = s.equalities.iter().find(|p| !p.vanishes_at_origin()) {
                return Err(StrataError::InvalidGerm(format!(
                    "stratum {i}: equality {} does not vanish at 0",
                    p.to_expr(&default_names(n))
                )));
            }
        }
        Ok(Germ {
            n,
            strata,
            origin_stratum,
        })
    }

    /// The hypersurface germ `{h = 0}` stratified as its regular part and the
    /// origin.
    pub fn hypersurface(h: Polynomial) -> Result<Germ, StrataError> {
        let n = h.nvars();
        Germ::new(
            n,
            vec![Stratum {
                equalities: vec![h],
                inequalities: vec![],
                dim: n - 1,
            }],
            true,
        )
    }

    /// All of ℝⁿ.
    pub fn ambient(n: usize) -> Germ {
        Germ {
            n,
            strata: vec![Stratum {
                equalities: vec![],
                inequalities: vec![],
                dim: n,
            }],
            origin_stratum: false,
        }
    }

    /// Dimension of X.
    pub fn dim(&self) -> usize {
        self.strata.iter().map(|s| s.dim).max().unwrap_or(0)
    }

    /// Smallest stratum dimension (0 when the origin is a stratum).
    pub fn min_stratum_dim(&self) -> usize {
        if self.origin_stratum {
            0
        } else {
            self.strata.iter().map(|s| s.dim).min().unwrap_or(0)
        }
    }

    /// X as global equalities plus pieces (closures of the strata).
    pub fn region(&self) -> RegionSpec {
        let mut r = RegionSpec::new(self.n);
        if self.strata.is_empty() {
            // a slice that kept no stratum: only the origin can remain
            if self.origin_stratum {
                r.equalities = (0..self.n).map(|i| Polynomial::var(self.n, i)).collect();
            } else {
                r.equalities = vec![Polynomial::constant(self.n, BigRational::one())];
            }
            return r;
        }
        if self.strata.len() == 1 && self.strata[0].inequalities.is_empty() {
            r.equalities = self.strata[0].equalities.clone();
            return r;
        }
        let mut pieces: Vec<Conjunction> = self
            .strata
            .iter()
            .map(|s| Conjunction {
                equalities: s.equalities.clone(),
                inequalities: s.inequalities.clone(),
            })
            .collect();
        let origin_covered = self.strata.iter().any(|s| {
            s.inequalities
                .iter()
                .all(|p| p.constant_term() >= BigRational::zero())
        });
        if self.origin_stratum && !origin_covered {
            pieces.push(Conjunction {
                equalities: (0..self.n).map(|i| Polynomial::var(self.n, i)).collect(),
                inequalities: vec![],
            });
        }
        r.pieces = pieces;
        r
    }

    /// Pull back along a linear or affine frame; stratum dimensions drop by
    /// the codimension of the frame and strata that drop to dimension 0 are
    /// discarded (a generic slice meets them only at the origin).
    pub fn restrict(&self, frame: &AffineFrame) -> Result<Germ, StrataError> {
        let codim = self.n - frame.dim();
        let strata = self
            .strata
            .iter()
            .filter(|s| s.dim > codim)
            .map(|s| {
                Ok(Stratum {
                    equalities: s
                        .equalities
                        .iter()
                        .map(|p| p.restrict_affine(frame))
                        .collect::<Result<_, PolyError>>()?,
                    inequalities: s
                        .inequalities
                        .iter()
                        .map(|p| p.restrict_affine(frame))
                        .collect::<Result<_, PolyError>>()?,
                    dim: s.dim - codim,
                })
            })
            .collect::<Result<Vec<_>, StrataError>>()?;
        Ok(Germ {
            n: frame.dim(),
            strata,
            origin_stratum: self.origin_stratum,
        })
    }

    /// Checks declared stratum dimensions at sampled points: Newton-projected
    /// points must have Jacobian rank `n - dim`. Strata without a usable
    /// sample are skipped.
    pub fn check_dimensions(&self, radius: f64, seed: u64) -> Result<(), StrataError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, s) in self.strata.iter().enumerate() {
            let pts = sample_stratum(self.n, s, radius, 8, &mut rng);
            for x in pts {
                let jac: Vec<Vec<f64>> = s
                    .equalities
                    .iter()
                    .map(|p| CompiledPoly::new(p).gradient(&x))
                    .collect();
                let rank = linalg::rank(&jac, 1e-8);
                if rank != self.n - s.dim {
                    return Err(StrataError::InvalidGerm(format!(
                        "stratum {i}: Jacobian rank {rank} at {x:?}, expected {}",
                        self.n - s.dim
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that sampled points of each stratum satisfy no other stratum.
    pub fn check_disjoint(&self, radius: f64, seed: u64) -> Result<(), StrataError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, s) in self.strata.iter().enumerate() {
            for x in sample_stratum(self.n, s, radius, 8, &mut rng) {
                for (j, t) in self.strata.iter().enumerate() {
                    if i != j && in_stratum(t, &x, 1e-9) {
                        return Err(StrataError::InvalidGerm(format!(
                            "strata {i} and {j} share the point {x:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Index of the stratum containing `x` (within `tol`), if any.
    pub fn stratum_of(&self, x: &[f64], tol: f64) -> Option<usize> {
        if linalg::norm(x) <= tol {
            return None;
        }
        self.strata.iter().position(|s| in_stratum(s, x, tol))
    }
}

pub fn default_names(n: usize) -> Vec<&'static str> {
    ["x", "y", "z", "w", "u", "v", "s", "t"][..n.min(8)].to_vec()
}

fn in_stratum(s: &Stratum, x: &[f64], tol: f64) -> bool {
    s.equalities.iter().all(|p| p.eval(x).map_or(false, |v| v.abs() <= tol))
        && s.inequalities.iter().all(|p| p.eval(x).map_or(false, |v| v > tol))
}

fn sample_stratum(n: usize, s: &Stratum, radius: f64, want: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let eqs: Vec<CompiledPoly> = s.equalities.iter().map(CompiledPoly::new).collect();
    let mut out = Vec::new();
    for _ in 0..want * 20 {
        if out.len() >= want {
            break;
        }
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..radius)).collect();
        let mut ok = eqs.is_empty();
        for _ in 0..60 {
            if eqs.is_empty() {
                break;
            }
            let h: Vec<f64> = eqs.iter().map(|p| p.eval(&x)).collect();
            if linalg::norm(&h) < 1e-13 {
                ok = true;
                break;
            }
            let jac: Vec<Vec<f64>> = eqs.iter().map(|p| p.gradient(&x)).collect();
            // minimum-norm Newton step: J^T (J J^T)^+ h
            let Some(c) = linalg::least_squares(&transpose(&jac), &h) else { break };
            let step = c;
            for (xi, si) in x.iter_mut().zip(&step) {
                *xi -= si;
            }
        }
        let r = linalg::norm(&x);
        if ok && r > 1e-3 * radius && r < radius && in_stratum(s, &x, 1e-9) {
            out.push(x);
        }
    }
    out
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

/// ε (ball radius), δ = `delta_ratio`·ε (signed), η = `eta_ratio`·|δ|, and
/// the local index radius |δ|/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleSchedule {
    pub epsilon: f64,
    pub delta_ratio: f64,
    pub eta_ratio: f64,
}

impl Default for ScaleSchedule {
    fn default() -> Self {
        ScaleSchedule {
            epsilon: 0.25,
            delta_ratio: 0.01,
            eta_ratio: 0.01,
        }
    }
}

impl ScaleSchedule {
    pub fn delta(&self) -> f64 {
        self.delta_ratio * self.epsilon
    }

    pub fn eta(&self) -> f64 {
        self.eta_ratio * self.delta().abs()
    }

    /// Schedule for averages over shifted slices meeting X in a set of
    /// dimension `fibre_dim`. Slices that miss X inside B_ε bias such
    /// averages by O(δ/ε), so for finite fibres, which are counted by root
    /// isolation at a cost independent of δ, the shift is taken
    /// `SLICE_SHRINK` times smaller. Positive-dimensional fibres keep δ:
    /// their cubical χ needs a grid finer than δ.
    pub fn for_slices(&self, fibre_dim: usize) -> ScaleSchedule {
        if fibre_dim > 0 {
            return *self;
        }
        ScaleSchedule {
            delta_ratio: self.delta_ratio * SLICE_SHRINK,
            ..*self
        }
    }

    pub fn index_radius(&self) -> f64 {
        0.5 * self.delta().abs()
    }

    pub fn with_delta_sign(&self, positive: bool) -> ScaleSchedule {
        let mut s = *self;
        s.delta_ratio = if positive {
            self.delta_ratio.abs()
        } else {
            -self.delta_ratio.abs()
        };
        s
    }

    /// Halves ε from 0.25 until χ(Lk X) agrees on two consecutive radii and
    /// keeps the smaller one.
    pub fn select(germ: &Germ, delta_ratio: f64, eta_ratio: f64, schedule: &Schedule) -> Result<ScaleSchedule, StrataError> {
        let mut eps = 0.25;
        let mut seen: Vec<(f64, i64)> = Vec::new();
        for _ in 0..7 {
            let chi = topo::euler(&link(germ, eps), schedule).map(|e| e.value);
            match chi {
                Ok(v) => {
                    if let Some(&(_, prev)) = seen.last() {
                        if prev == v {
                            return Ok(ScaleSchedule {
                                epsilon: eps,
                                delta_ratio,
                                eta_ratio,
                            });
                        }
                    }
                    seen.push((eps, v));
                }
                Err(TopoError::Unstable { .. }) => seen.clear(),
                Err(e) => return Err(e.into()),
            }
            eps /= 2.0;
        }
        Err(StrataError::NoStableScale(seen))
    }
}

/// `X ∩ {f = δ} ∩ B_ε`.
pub fn milnor_fibre(germ: &Germ, f: &Polynomial, sched: &ScaleSchedule) -> RegionSpec {
    fibre_region(germ, f, sched.delta()).ball(vec![0.0; germ.n], sched.epsilon)
}

/// `X ∩ {f = δ} ∩ S_ε`.
pub fn fibre_boundary(germ: &Germ, f: &Polynomial, sched: &ScaleSchedule) -> RegionSpec {
    fibre_region(germ, f, sched.delta()).sphere(vec![0.0; germ.n], sched.epsilon)
}

fn fibre_region(germ: &Germ, f: &Polynomial, delta: f64) -> RegionSpec {
    germ.region()
        .equality(f - &Polynomial::constant_f64(germ.n, delta))
}

/// `X ∩ S_ε`.
pub fn link(germ: &Germ, epsilon: f64) -> RegionSpec {
    germ.region().sphere(vec![0.0; germ.n], epsilon)
}

/// `X ∩ {p_1 = … = 0} ∩ S_ε`.
pub fn link_of_zero_set(germ: &Germ, zeros: &[Polynomial], epsilon: f64) -> RegionSpec {
    let mut r = link(germ, epsilon);
    r.equalities.extend(zeros.iter().cloned());
    r
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryClass {
    /// Multiplier of ∇(|x|² − ε²) in the decomposition of ∇g.
    pub lambda: f64,
    pub outward: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPointRecord {
    /// Isolating box in x-coordinates.
    pub location: CertifiedRoot,
    pub point: Vec<f64>,
    pub stratum: usize,
    pub f_value: f64,
    pub g_value: f64,
    pub index_plus: Option<i64>,
    pub index_minus: Option<i64>,
    pub boundary: Option<BoundaryClass>,
    /// Dimension of the fibre at the point and the Morse data of g there
    /// (interior points only).
    pub morse: Option<MorseData>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MorseData {
    pub fibre_dim: usize,
    /// Negative eigenvalues of the Hessian of g on the fibre.
    pub negative: usize,
    /// Smallest eigenvalue magnitude (infinite on a zero-dimensional fibre).
    pub min_curvature: f64,
}

impl MorseData {
    /// Index predicted by the Morse lemma: (−1)^negative.
    pub fn predicted_index(&self) -> i64 {
        if self.negative % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// The same data for −g.
    pub fn flipped(&self) -> MorseData {
        MorseData {
            negative: self.fibre_dim - self.negative,
            ..*self
        }
    }
}

/// Hessian of g on `{constraints = 0}` at a constrained critical point.
fn morse_data(constraints: &[Polynomial], g: &Polynomial, x: &[f64]) -> Result<MorseData, StrataError> {
    let n = x.len();
    let jac: Vec<Vec<f64>> = constraints.iter().map(|c| CompiledPoly::new(c).gradient(x)).collect();
    let tangent = linalg::null_space(&jac, n, 1e-9);
    let d = tangent.len();
    if d == 0 {
        return Ok(MorseData {
            fibre_dim: 0,
            negative: 0,
            min_curvature: f64::INFINITY,
        });
    }
    let gg = CompiledPoly::new(g).gradient(x);
    let mu = linalg::least_squares(&jac, &gg)
        .ok_or_else(|| StrataError::Degenerate("multiplier decomposition failed".into()))?;
    let hess = |p: &Polynomial| -> Vec<Vec<f64>> {
        let grad = p.gradient();
        grad.iter()
            .map(|gi| {
                let c = CompiledPoly::new(gi);
                c.gradient(x)
            })
            .collect()
    };
    let mut h = hess(g);
    for (c, m) in constraints.iter().zip(&mu) {
        let hc = hess(c);
        for i in 0..n {
            for j in 0..n {
                h[i][j] -= m * hc[i][j];
            }
        }
    }
    let reduced: Vec<Vec<f64>> = tangent
        .iter()
        .map(|a| {
            tangent
                .iter()
                .map(|b| (0..n).map(|i| (0..n).map(|j| a[i] * h[i][j] * b[j]).sum::<f64>()).sum())
                .collect()
        })
        .collect();
    let ev = linalg::symmetric_eigenvalues(&reduced);
    let min_curvature = ev.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let scale = linalg::norm(&gg) + ev.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    if min_curvature <= 1e-9 * scale {
        return Err(StrataError::Degenerate(format!("degenerate critical point at {x:?}")));
    }
    Ok(MorseData {
        fibre_dim: d,
        negative: ev.iter().filter(|v| **v < 0.0).count(),
        min_curvature,
    })
}

fn solve_options() -> SolveOptions {
    SolveOptions {
        max_boxes: 60_000,
        ..SolveOptions::default()
    }
}

/// Critical points of `g` on `{constraints = 0}` (ambient dimension n).
/// Returns x-space roots, or a degeneracy error when the solver cannot
/// resolve the system.
fn constrained_critical_points(
    n: usize,
    constraints: &[Polynomial],
    g: &Polynomial,
    half_width: f64,
) -> Result<Vec<CertifiedRoot>, StrataError> {
    let m = constraints.len();
    let opts = solve_options();
    let xbox = IntervalBox::cube(n, half_width);
    if m > n {
        let left = solver::certify_empty(constraints, &xbox, &opts);
        if left.is_empty() {
            return Ok(Vec::new());
        }
        return Err(StrataError::Degenerate(format!(
            "overdetermined constraint system not excluded in {} boxes",
            left.len()
        )));
    }
    if m == n {
        let sys = SquareSystem::new(constraints.to_vec()).expect("square");
        return finish(solver::isolate_roots(&sys, &xbox, &opts), n);
    }
    if m + 1 == n {
        // rank[∇C; ∇g] < n  ⇔  det = 0
        let mut rows: Vec<Vec<Polynomial>> = constraints.iter().map(Polynomial::gradient).collect();
        rows.push(g.gradient());
        let mut eqs = constraints.to_vec();
        eqs.push(det_poly(&rows));
        let sys = SquareSystem::new(eqs).expect("square");
        return finish(solver::isolate_roots(&sys, &xbox, &opts), n);
    }
    // normalized multipliers: c0 ∇g − Σ c_i ∇C_i = 0, Σ c² = 1, c0 ≥ 0
    let nv = n + m + 1;
    let lift = |p: &Polynomial| p.extend_vars(nv);
    let mut eqs: Vec<Polynomial> = constraints.iter().map(lift).collect();
    let grads_c: Vec<Vec<Polynomial>> = constraints.iter().map(|c| c.gradient().iter().map(lift).collect()).collect();
    let grad_g: Vec<Polynomial> = g.gradient().iter().map(lift).collect();
    let cvar = |i: usize| Polynomial::var(nv, n + i);
    for k in 0..n {
        let mut e = &cvar(0) * &grad_g[k];
        for (i, gc) in grads_c.iter().enumerate() {
            e = &e - &(&cvar(i + 1) * &gc[k]);
        }
        eqs.push(e);
    }
    let mut norm = Polynomial::constant(nv, -BigRational::one());
    for i in 0..=m {
        norm = &norm + &(&cvar(i) * &cvar(i));
    }
    eqs.push(norm);
    let mut dom = vec![Interval::symmetric(half_width); n];
    dom.push(Interval::new(0.0, 1.01));
    dom.extend(std::iter::repeat(Interval::symmetric(1.01)).take(m));
    let sys = SquareSystem::new(eqs).expect("square");
    let rep = solver::isolate_roots(&sys, &IntervalBox(dom), &opts);
    for r in &rep.roots {
        if r.bx[n].lo <= TOL_STRAT {
            return Err(StrataError::Degenerate("critical point with vanishing multiplier of ∇g".into()));
        }
    }
    finish(rep, n)
}

fn finish(rep: solver::SolveReport, n: usize) -> Result<Vec<CertifiedRoot>, StrataError> {
    if !rep.unresolved.is_empty() {
        return Err(StrataError::Degenerate(format!(
            "{} unresolved solver boxes (positive-dimensional or singular critical set)",
            rep.unresolved.len()
        )));
    }
    Ok(rep
        .roots
        .into_iter()
        .map(|r| {
            let bx = IntervalBox(r.bx.0[..n].to_vec());
            CertifiedRoot {
                bx,
                certified: r.certified,
                residual: r.residual,
            }
        })
        .collect())
}

/// Determinant of a square matrix of polynomials by cofactor expansion.
fn det_poly(rows: &[Vec<Polynomial>]) -> Polynomial {
    let k = rows.len();
    let nv = rows[0][0].nvars();
    if k == 1 {
        return rows[0][0].clone();
    }
    let mut acc = Polynomial::zero(nv);
    for j in 0..k {
        if rows[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Polynomial>> = rows[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, p)| p.clone()).collect())
            .collect();
        let term = &rows[0][j] * &det_poly(&minor);
        acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

/// Lower strata: strata of smaller dimension, plus the origin.
fn near_lower_stratum(germ: &Germ, s: usize, x: &[f64]) -> bool {
    if linalg::norm(x) <= TOL_STRAT {
        return true;
    }
    let d = germ.strata[s].dim;
    germ.strata.iter().enumerate().any(|(j, t)| {
        j != s
            && t.dim < d
            && t.equalities.iter().all(|p| {
                let c = CompiledPoly::new(p);
                let g = linalg::norm(&c.gradient(x));
                let v = c.eval(x).abs();
                v <= TOL_STRAT * g.max(1.0)
            })
            && t.inequalities.iter().all(|p| p.eval(x).unwrap_or(0.0) > -TOL_STRAT)
    })
}

fn on_stratum_boundary(s: &Stratum, x: &[f64]) -> bool {
    s.inequalities.iter().any(|p| p.eval(x).unwrap_or(0.0) <= TOL_STRAT)
}

/// Interior stratified critical points of `g` on the Milnor fibre.
pub fn fibre_critical_points(
    germ: &Germ,
    f: &Polynomial,
    g: &Polynomial,
    sched: &ScaleSchedule,
) -> Result<Vec<CriticalPointRecord>, StrataError> {
    let eps = sched.epsilon;
    let fd = f - &Polynomial::constant_f64(germ.n, sched.delta());
    let mut out = Vec::new();
    for (si, s) in germ.strata.iter().enumerate() {
        let mut cons = s.equalities.clone();
        cons.push(fd.clone());
        let roots = constrained_critical_points(germ.n, &cons, g, eps * (1.0 + 1e-3))?;
        for r in roots {
            let x = r.midpoint();
            let rad = linalg::norm(&x);
            if rad > eps + TOL_STRAT {
                continue;
            }
            if s.inequalities.iter().any(|p| p.eval(&x).unwrap_or(0.0) < -TOL_STRAT) {
                continue;
            }
            if rad >= eps - TOL_STRAT {
                return Err(StrataError::Degenerate(format!("critical point on S_ε at {x:?}")));
            }
            if on_stratum_boundary(s, &x) || near_lower_stratum(germ, si, &x) {
                return Err(StrataError::Degenerate(format!("critical point near a lower stratum at {x:?}")));
            }
            let gv = g.eval(&x)?;
            if gv.abs() <= TOL_STRAT * eps {
                return Err(StrataError::Degenerate(format!("interior critical point with g ≈ 0 at {x:?}")));
            }
            let morse = morse_data(&cons, g, &x)?;
            out.push(CriticalPointRecord {
                f_value: f.eval(&x)?,
                g_value: gv,
                point: x,
                location: r,
                stratum: si,
                index_plus: None,
                index_minus: None,
                boundary: None,
                morse: Some(morse),
            });
        }
    }
    Ok(out)
}

/// Critical points of `g` on `X ∩ {f = δ} ∩ S_ε`, classified outward
/// (multiplier of ∇ρ positive) or inward.
pub fn boundary_critical_points(
    germ: &Germ,
    f: &Polynomial,
    g: &Polynomial,
    sched: &ScaleSchedule,
) -> Result<Vec<CriticalPointRecord>, StrataError> {
    let eps = sched.epsilon;
    let n = germ.n;
    let fd = f - &Polynomial::constant_f64(n, sched.delta());
    let rho = Polynomial::sphere(&vec![0.0; n], eps);
    let mut out = Vec::new();
    for (si, s) in germ.strata.iter().enumerate() {
        let mut cons = s.equalities.clone();
        cons.push(fd.clone());
        cons.push(rho.clone());
        let roots = constrained_critical_points(n, &cons, g, eps * (1.0 + 1e-3))?;
        for r in roots {
            let x = r.midpoint();
            if s.inequalities.iter().any(|p| p.eval(&x).unwrap_or(0.0) < -TOL_STRAT) {
                continue;
            }
            if on_stratum_boundary(s, &x) || near_lower_stratum(germ, si, &x) {
                return Err(StrataError::Degenerate(format!("boundary critical point near a lower stratum at {x:?}")));
            }
            let gv = g.eval(&x)?;
            if gv.abs() <= TOL_STRAT * eps {
                return Err(StrataError::BoundaryZero(x));
            }
            let grads: Vec<Vec<f64>> = cons.iter().map(|c| CompiledPoly::new(c).gradient(&x)).collect();
            let gg = CompiledPoly::new(g).gradient(&x);
            let coef = linalg::least_squares(&grads, &gg)
                .ok_or_else(|| StrataError::Degenerate("multiplier decomposition failed".into()))?;
            let lambda = *coef.last().expect("ρ multiplier");
            out.push(CriticalPointRecord {
                f_value: f.eval(&x)?,
                g_value: gv,
                point: x,
                location: r,
                stratum: si,
                index_plus: None,
                index_minus: None,
                boundary: Some(BoundaryClass {
                    lambda,
                    outward: lambda > 0.0,
                }),
                morse: None,
            });
        }
    }
    Ok(out)
}

/// `1 − χ(fibre ∩ {g = g(p) − η} ∩ B_r(p))`. The outer ball of `fibre`
/// stays as a constraint. A linear g is sliced with an affine frame on its
/// level hyperplane, which keeps near-tangent level sets well conditioned.
pub fn index(fibre: &RegionSpec, g: &Polynomial, p: &[f64], eta: f64, r: f64) -> Result<i64, StrataError> {
    let n = p.len();
    let mut region = fibre.clone();
    if let Some(b) = region.ball.take() {
        let s = Polynomial::sphere(&b.center, b.radius);
        match b.kind {
            topo::BallKind::Solid => region.inequalities.push(-&s),
            topo::BallKind::Sphere => region.equalities.push(s),
        }
    }
    let gp = g.eval(p)?;
    if g.degree() <= 1 && region.frame.is_none() {
        let grad = CompiledPoly::new(g).gradient(p);
        let gn = linalg::norm(&grad);
        if gn == 0.0 {
            return Err(StrataError::Degenerate("constant g".into()));
        }
        let u: Vec<f64> = grad.iter().map(|v| v / gn).collect();
        let t = eta / gn;
        if t >= r {
            return Ok(1);
        }
        let base: Vec<f64> = p.iter().zip(&u).map(|(a, b)| a - t * b).collect();
        let dirs = linalg::null_space(&[u], n, 1e-12);
        region.frame = Some(AffineFrame::new(base, dirs)?);
    } else {
        region
            .equalities
            .push(g - &Polynomial::constant(n, rational_from_f64(gp) - rational_from_f64(eta)));
    }
    region.ball = Some(topo::Ball {
        center: p.to_vec(),
        radius: r,
        kind: topo::BallKind::Solid,
    });
    let e = topo::euler(&region, &Schedule::default())?;
    Ok(1 - e.value)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexSums {
    pub plus: i64,
    pub minus: i64,
    pub points: Vec<CriticalPointRecord>,
}

/// Index at `p`, confirmed on η and η/4; on disagreement both are shrunk
/// further before giving up.
fn stable_index(fibre: &RegionSpec, g: &Polynomial, p: &[f64], eta: f64, r: f64) -> Result<i64, StrataError> {
    let mut e = eta;
    let mut prev = index(fibre, g, p, e, r)?;
    for _ in 0..3 {
        e /= 4.0;
        let next = index(fibre, g, p, e, r)?;
        if next == prev {
            return Ok(next);
        }
        prev = next;
    }
    Err(StrataError::Degenerate(format!("index at {p:?} depends on η")))
}

/// I(g) and I(−g): index sums over the interior critical points of g.
pub fn index_sums(germ: &Germ, f: &Polynomial, g: &Polynomial, sched: &ScaleSchedule) -> Result<IndexSums, StrataError> {
    let mut pts = fibre_critical_points(germ, f, g, sched)?;
    let fibre = milnor_fibre(germ, f, sched);
    let boundary = boundary_critical_points(germ, f, g, sched)?;
    let neg = -g;
    let all: Vec<(Vec<f64>, f64)> = pts
        .iter()
        .chain(&boundary)
        .map(|c| (c.point.clone(), c.g_value))
        .collect();
    let (mut plus, mut minus) = (0, 0);
    for (i, c) in pts.iter_mut().enumerate() {
        // keep the local ball and level clear of every other critical point
        let mut r = sched.index_radius();
        let mut eta = sched.eta();
        let morse = c.morse.expect("interior point");
        for (j, (q, gq)) in all.iter().enumerate() {
            if j == i {
                continue;
            }
            let d = linalg::norm(&c.point.iter().zip(q).map(|(a, b)| a - b).collect::<Vec<_>>());
            r = r.min(0.4 * d);
            let gap = (c.g_value - gq).abs();
            if gap > 0.0 {
                eta = eta.min(gap / 16.0);
            }
        }
        // the level set then stays within a quarter of the local radius
        if morse.min_curvature.is_finite() {
            eta = eta.min(morse.min_curvature * r * r / 32.0);
        }
        let ip = stable_index(&fibre, g, &c.point, eta, r)?;
        let im = stable_index(&fibre, &neg, &c.point, eta, r)?;
        c.index_plus = Some(ip);
        c.index_minus = Some(im);
        plus += ip;
        minus += im;
    }
    Ok(IndexSums {
        plus,
        minus,
        points: pts,
    })
}
