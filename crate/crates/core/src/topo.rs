//! Euler characteristics and component counts of compact semialgebraic
//! regions from adaptive cubical covers.
//!
//! A grid cell is kept when interval evaluation cannot exclude the region
//! from it. The union of kept closed cells is a cubical complex whose Euler
//! characteristic is the alternating face count. Each cell is also checked
//! for a local certificate (constraint gradients of full rank on the whole
//! cell); refinement continues until the count is stable and every kept cell
//! is certified on two consecutive levels.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::linalg;
use crate::poly::{AffineFrame, CompiledPoly, Interval, IntervalBox, PolyError, Polynomial};
use crate::solver::{self, SolveOptions, SquareSystem};

const MAXD: usize = 4;
type Cell = [u32; MAXD];

/// Finest level considered: `2^20` cells per side, i.e. h ≈ 2e-6 · radius.
const MAX_LEVEL: u32 = 20;
const MIN_RELATIVE_H: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopoError {
    #[error("region has no ball constraint")]
    Unbounded,
    #[error("resolution {h:e} is below the floor {floor:e}")]
    ResolutionTooFine { h: f64, floor: f64 },
    #[error("Euler characteristic did not stabilize; trace {trace:?}")]
    Unstable { trace: Vec<i64> },
    #[error("component count did not stabilize; trace {trace:?}")]
    UnstableComponents { trace: Vec<usize> },
    #[error("region dimension {0} exceeds {MAXD}")]
    TooManyDimensions(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `equalities = 0` and `inequalities ≥ 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Conjunction {
    pub equalities: Vec<Polynomial>,
    pub inequalities: Vec<Polynomial>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallKind {
    /// `|x - c| ≤ r`
    Solid,
    /// `|x - c| = r`
    Sphere,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    pub kind: BallKind,
}

/// A compact region: global constraints, an optional union of pieces (at
/// least one must hold), a ball, and an optional affine slice.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSpec {
    pub dim: usize,
    pub equalities: Vec<Polynomial>,
    pub inequalities: Vec<Polynomial>,
    pub pieces: Vec<Conjunction>,
    pub ball: Option<Ball>,
    pub frame: Option<AffineFrame>,
}

impl RegionSpec {
    pub fn new(dim: usize) -> Self {
        RegionSpec {
            dim,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            pieces: Vec::new(),
            ball: None,
            frame: None,
        }
    }

    pub fn equality(mut self, p: Polynomial) -> Self {
        self.equalities.push(p);
        self
    }

    pub fn inequality(mut self, p: Polynomial) -> Self {
        self.inequalities.push(p);
        self
    }

    pub fn pieces(mut self, pieces: Vec<Conjunction>) -> Self {
        self.pieces = pieces;
        self
    }

    pub fn ball(mut self, center: Vec<f64>, radius: f64) -> Self {
        self.ball = Some(Ball {
            center,
            radius,
            kind: BallKind::Solid,
        });
        self
    }

    pub fn sphere(mut self, center: Vec<f64>, radius: f64) -> Self {
        self.ball = Some(Ball {
            center,
            radius,
            kind: BallKind::Sphere,
        });
        self
    }

    pub fn frame(mut self, frame: AffineFrame) -> Self {
        self.frame = Some(frame);
        self
    }

    /// Approximate membership of an ambient point, with slack `tol` on
    /// every constraint.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let ev = |p: &Polynomial| p.eval(x).unwrap_or(f64::NAN);
        if let Some(f) = &self.frame {
            let back = f.point(&f.coords(x));
            if linalg::norm(&back.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>()) > tol {
                return false;
            }
        }
        let conj_ok = |eqs: &[Polynomial], ineqs: &[Polynomial]| {
            eqs.iter().all(|p| ev(p).abs() <= tol) && ineqs.iter().all(|p| ev(p) >= -tol)
        };
        if !conj_ok(&self.equalities, &self.inequalities) {
            return false;
        }
        if !self.pieces.is_empty()
            && !self
                .pieces
                .iter()
                .any(|c| conj_ok(&c.equalities, &c.inequalities))
        {
            return false;
        }
        if let Some(b) = &self.ball {
            let d = linalg::norm(&x.iter().zip(&b.center).map(|(a, c)| a - c).collect::<Vec<_>>());
            match b.kind {
                BallKind::Solid => d <= b.radius + tol,
                BallKind::Sphere => (d - b.radius).abs() <= tol,
            }
        } else {
            true
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    /// Initial resolution; `None` means radius / 8.
    pub h0: Option<f64>,
    pub refinements: u32,
    /// Budget on kept cells per level.
    pub max_cells: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            h0: None,
            refinements: 4,
            max_cells: 400_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EulerEstimate {
    pub value: i64,
    /// χ on the last (up to) three levels, coarse to fine.
    pub trace: Vec<i64>,
    pub stable: bool,
    /// Every kept cell passed the local rank test on the last two levels.
    pub certified: bool,
}

/// Kept top-dimensional closed cells at one resolution.
#[derive(Clone, Debug)]
pub struct CubicalApproximation {
    pub h: f64,
    pub level: u32,
    /// Equality thickening; interval inclusion alone is used, so this is 0.
    pub tau: f64,
    dim: usize,
    lo: Vec<f64>,
    cells: Vec<Cell>,
    frame: Option<AffineFrame>,
    /// Set when the region is a single point of a zero-dimensional slice.
    point: Option<bool>,
}

impl CubicalApproximation {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        match self.point {
            Some(p) => p as usize,
            None => self.cells.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell `i` as a box in working coordinates.
    pub fn cell_box(&self, i: usize) -> IntervalBox {
        cell_box(&self.lo, self.h, &self.cells[i], self.dim)
    }

    /// Center of cell `i` in ambient coordinates.
    pub fn cell_center(&self, i: usize) -> Vec<f64> {
        let u = self.cell_box(i).mid();
        match &self.frame {
            Some(f) => f.point(&u),
            None => u,
        }
    }

    pub fn euler(&self) -> i64 {
        match self.point {
            Some(p) => p as i64,
            None => euler_of_cells(&self.cells, self.dim),
        }
    }

    /// Connected components of the union of closed cells, with one cell
    /// center per component.
    pub fn components(&self) -> Vec<Vec<f64>> {
        match self.point {
            Some(true) => vec![self.frame.as_ref().map(|f| f.base().to_vec()).unwrap_or_default()],
            Some(false) => Vec::new(),
            None => component_roots(&self.cells, self.dim)
                .into_iter()
                .map(|i| self.cell_center(i))
                .collect(),
        }
    }
}

struct Piece {
    eqs: Vec<CompiledPoly>,
    ineqs: Vec<CompiledPoly>,
}

/// Region compiled into working coordinates.
struct Prepared {
    m: usize,
    eqs: Vec<CompiledPoly>,
    ineqs: Vec<CompiledPoly>,
    pieces: Vec<Piece>,
    ball: CompiledPoly,
    ball_kind: BallKind,
    lo: Vec<f64>,
    side: f64,
    radius: f64,
    /// Exact answer for a zero-dimensional slice.
    point: Option<bool>,
    frame: Option<AffineFrame>,
    empty: bool,
    /// Pulled-back equalities per alternative (global plus one piece).
    square: Vec<Vec<Polynomial>>,
}

fn exact_sign_ok(p: &Polynomial, eq: bool) -> bool {
    let c = p.constant_term();
    if eq {
        c.is_zero()
    } else {
        !c.is_negative()
    }
}

impl Prepared {
    fn new(region: &RegionSpec) -> Result<Prepared, TopoError> {
        let ball = region.ball.as_ref().ok_or(TopoError::Unbounded)?;
        let pull = |p: &Polynomial| -> Result<Polynomial, TopoError> {
            Ok(match &region.frame {
                Some(f) => p.restrict_affine(f)?,
                None => {
                    if p.nvars() != region.dim {
                        return Err(PolyError::DimensionMismatch {
                            expected: region.dim,
                            got: p.nvars(),
                        }
                        .into());
                    }
                    p.clone()
                }
            })
        };
        let ball_poly = pull(&Polynomial::sphere(&ball.center, ball.radius))?;
        let eqs: Vec<Polynomial> = region.equalities.iter().map(pull).collect::<Result<_, _>>()?;
        let ineqs: Vec<Polynomial> = region.inequalities.iter().map(pull).collect::<Result<_, _>>()?;
        let pieces: Vec<(Vec<Polynomial>, Vec<Polynomial>)> = region
            .pieces
            .iter()
            .map(|c| {
                Ok((
                    c.equalities.iter().map(pull).collect::<Result<Vec<_>, TopoError>>()?,
                    c.inequalities.iter().map(pull).collect::<Result<Vec<_>, TopoError>>()?,
                ))
            })
            .collect::<Result<_, TopoError>>()?;

        let (m, center, r2) = match &region.frame {
            Some(f) => {
                let c = f.coords(&ball.center);
                let foot = f.point(&c);
                let d2: f64 = foot.iter().zip(&ball.center).map(|(a, b)| (a - b).powi(2)).sum();
                (f.dim(), c, ball.radius * ball.radius - d2)
            }
            None => (region.dim, ball.center.clone(), ball.radius * ball.radius),
        };
        if m > MAXD {
            return Err(TopoError::TooManyDimensions(m));
        }

        let mut point = None;
        if m == 0 {
            let inside = match ball.kind {
                BallKind::Solid => exact_sign_ok(&-&ball_poly, false),
                BallKind::Sphere => exact_sign_ok(&ball_poly, true),
            };
            let global = eqs.iter().all(|p| exact_sign_ok(p, true))
                && ineqs.iter().all(|p| exact_sign_ok(p, false));
            let piece = pieces.is_empty()
                || pieces.iter().any(|(e, i)| {
                    e.iter().all(|p| exact_sign_ok(p, true)) && i.iter().all(|p| exact_sign_ok(p, false))
                });
            point = Some(inside && global && piece);
        }

        // every alternative is cut out by exactly m equations: a finite set
        let mut alternatives: Vec<Vec<Polynomial>> = if pieces.is_empty() {
            vec![eqs.clone()]
        } else {
            pieces.iter().map(|(e, _)| eqs.iter().chain(e).cloned().collect()).collect()
        };
        if ball.kind == BallKind::Sphere {
            for a in &mut alternatives {
                a.push(ball_poly.clone());
            }
        }
        let square = if m > 0 && alternatives.iter().all(|a| a.len() == m) {
            alternatives
        } else {
            Vec::new()
        };

        let radius = r2.max(0.0).sqrt();
        // pad so that rounding never pushes region points off the grid
        let half = radius * (1.0 + 1e-9) + 1e-300;
        Ok(Prepared {
            m,
            eqs: eqs.iter().map(CompiledPoly::new).collect(),
            ineqs: ineqs.iter().map(CompiledPoly::new).collect(),
            pieces: pieces
                .iter()
                .map(|(e, i)| Piece {
                    eqs: e.iter().map(CompiledPoly::new).collect(),
                    ineqs: i.iter().map(CompiledPoly::new).collect(),
                })
                .collect(),
            ball: CompiledPoly::new(&ball_poly),
            ball_kind: ball.kind,
            lo: center.iter().map(|c| c - half).collect(),
            side: 2.0 * half,
            radius,
            point,
            frame: region.frame.clone(),
            empty: r2 < 0.0,
            square,
        })
    }

    /// Counts the points of a finite region by certified root isolation.
    /// `None` when some root or box cannot be decided.
    fn count_points(&self) -> Option<i64> {
        if self.empty {
            return Some(0);
        }
        let domain = IntervalBox(self.lo.iter().map(|&a| Interval::new(a, a + self.side)).collect());
        let opts = SolveOptions {
            max_boxes: 50_000,
            ..SolveOptions::default()
        };
        let mut found: Vec<IntervalBox> = Vec::new();
        for (k, eqs) in self.square.iter().enumerate() {
            let sys = SquareSystem::new(eqs.clone()).ok()?;
            let rep = solver::isolate_roots(&sys, &domain, &opts);
            if !rep.unresolved.is_empty() {
                return None;
            }
            for r in rep.roots {
                let bx = r.bx;
                if self.ball_kind == BallKind::Solid {
                    if self.ball.surely_positive(&bx) {
                        continue;
                    }
                    if !self.ball.surely_negative(&bx) {
                        return None;
                    }
                }
                let ineqs = self.ineqs.iter().chain(self.pieces.get(k).map_or(&[][..], |p| &p.ineqs[..]));
                let mut inside = true;
                for p in ineqs {
                    if p.surely_negative(&bx) {
                        inside = false;
                        break;
                    }
                    if !p.surely_positive(&bx) {
                        return None;
                    }
                }
                if inside && !found.iter().any(|b| b.meets(&bx)) {
                    found.push(bx);
                }
            }
        }
        Some(found.len() as i64)
    }

    fn h_at(&self, level: u32) -> f64 {
        self.side / f64::from(1u32 << level)
    }

    fn excluded_by(eqs: &[CompiledPoly], ineqs: &[CompiledPoly], bx: &IntervalBox) -> bool {
        eqs.iter().any(|p| p.excludes_zero(bx)) || ineqs.iter().any(|p| p.surely_negative(bx))
    }

    fn ball_excludes(&self, bx: &IntervalBox) -> bool {
        match self.ball_kind {
            BallKind::Solid => self.ball.surely_positive(bx),
            BallKind::Sphere => self.ball.excludes_zero(bx),
        }
    }

    fn keep(&self, bx: &IntervalBox) -> bool {
        if self.ball_excludes(bx) || Self::excluded_by(&self.eqs, &self.ineqs, bx) {
            return false;
        }
        self.pieces.is_empty()
            || self
                .pieces
                .iter()
                .any(|pc| !Self::excluded_by(&pc.eqs, &pc.ineqs, bx))
    }

    /// Gradients of all constraints that may be active in `bx` have full
    /// rank on the whole cell.
    fn certified(&self, bx: &IntervalBox) -> bool {
        let mut rows: Vec<Vec<Interval>> = Vec::new();
        let mut push_active = |eqs: &[CompiledPoly], ineqs: &[CompiledPoly]| {
            for p in eqs {
                rows.push(p.gradient_interval(bx));
            }
            for p in ineqs {
                if p.eval_interval(bx).lo <= 0.0 {
                    rows.push(p.gradient_interval(bx));
                }
            }
        };
        push_active(&self.eqs, &self.ineqs);
        if !self.pieces.is_empty() {
            let live: Vec<&Piece> = self
                .pieces
                .iter()
                .filter(|pc| !Self::excluded_by(&pc.eqs, &pc.ineqs, bx))
                .collect();
            if live.len() != 1 {
                return false;
            }
            push_active(&live[0].eqs, &live[0].ineqs);
        }
        let b = self.ball.eval_interval(bx);
        let ball_active = match self.ball_kind {
            BallKind::Solid => b.hi >= 0.0,
            BallKind::Sphere => true,
        };
        if ball_active {
            rows.push(self.ball.gradient_interval(bx));
        }
        rows.len() <= self.m && linalg::certify_full_row_rank(&rows)
    }

    fn approximation(&self, level: u32, cells: Vec<Cell>) -> CubicalApproximation {
        CubicalApproximation {
            h: self.h_at(level),
            level,
            tau: 0.0,
            dim: self.m,
            lo: self.lo.clone(),
            cells,
            frame: self.frame.clone(),
            point: self.point,
        }
    }
}

fn cell_box(lo: &[f64], h: f64, c: &Cell, m: usize) -> IntervalBox {
    IntervalBox(
        (0..m)
            .map(|j| {
                let a = lo[j] + f64::from(c[j]) * h;
                let b = lo[j] + f64::from(c[j] + 1) * h;
                Interval::new(a, b)
            })
            .collect(),
    )
}

/// Kept cells level by level; `visit` sees every level from 0 on and may
/// stop the descent by returning false.
fn descend<F>(prep: &Prepared, max_level: u32, max_cells: usize, mut visit: F) -> Result<(), TopoError>
where
    F: FnMut(u32, &[Cell], bool) -> bool,
{
    let m = prep.m;
    let mut cells: Vec<Cell> = Vec::new();
    if !prep.empty {
        let root = [0u32; MAXD];
        if prep.keep(&cell_box(&prep.lo, prep.side, &root, m)) {
            cells.push(root);
        }
    }
    let mut level = 0;
    loop {
        if !visit(level, &cells, false) || level >= max_level {
            return Ok(());
        }
        let h = prep.h_at(level + 1);
        let mut next = Vec::with_capacity(cells.len() * 2);
        for c in &cells {
            for bits in 0..(1u32 << m) {
                let mut child = [0u32; MAXD];
                for j in 0..m {
                    child[j] = 2 * c[j] + ((bits >> (m - 1 - j)) & 1);
                }
                if prep.keep(&cell_box(&prep.lo, h, &child, m)) {
                    next.push(child);
                }
            }
        }
        next.sort_unstable();
        cells = next;
        level += 1;
        if cells.len() > max_cells {
            // one last look at the over-budget level, then stop
            visit(level, &[], true);
            return Ok(());
        }
    }
}

fn level_for(prep: &Prepared, h: f64) -> u32 {
    let mut l = 0;
    while l < MAX_LEVEL && prep.h_at(l) > h {
        l += 1;
    }
    l
}

fn check_resolution(prep: &Prepared, h: f64) -> Result<(), TopoError> {
    let floor = MIN_RELATIVE_H * prep.radius;
    if h < floor {
        return Err(TopoError::ResolutionTooFine { h, floor });
    }
    Ok(())
}

/// Cover at the coarsest grid level with cell size ≤ `h`.
pub fn cover(region: &RegionSpec, h: f64) -> Result<CubicalApproximation, TopoError> {
    let prep = Prepared::new(region)?;
    check_resolution(&prep, h)?;
    let target = level_for(&prep, h);
    let mut out = None;
    descend(&prep, target, usize::MAX, |level, cells, _| {
        if level == target {
            out = Some(cells.to_vec());
            false
        } else {
            true
        }
    })?;
    Ok(prep.approximation(target, out.unwrap_or_default()))
}

/// Stabilized Euler characteristic.
pub fn euler(region: &RegionSpec, schedule: &Schedule) -> Result<EulerEstimate, TopoError> {
    let prep = Prepared::new(region)?;
    if let Some(p) = prep.point {
        let v = p as i64;
        return Ok(EulerEstimate {
            value: v,
            trace: vec![v],
            stable: true,
            certified: true,
        });
    }
    if !prep.square.is_empty() {
        if let Some(v) = prep.count_points() {
            return Ok(EulerEstimate {
                value: v,
                trace: vec![v],
                stable: true,
                certified: true,
            });
        }
    }
    let h0 = schedule.h0.unwrap_or(prep.radius / 8.0);
    check_resolution(&prep, h0)?;
    let l0 = level_for(&prep, h0);
    let min_level = l0 + schedule.refinements;
    let floor = MIN_RELATIVE_H * prep.radius;
    let mut max_level = l0;
    while max_level < MAX_LEVEL && prep.h_at(max_level + 1) >= floor {
        max_level += 1;
    }

    let mut trace: Vec<i64> = Vec::new();
    let mut certs: Vec<bool> = Vec::new();
    let mut done = false;
    descend(&prep, max_level, schedule.max_cells, |level, cells, truncated| {
        if level < l0 || truncated {
            return !truncated;
        }
        trace.push(euler_of_cells(cells, prep.m));
        let h = prep.h_at(level);
        certs.push(
            cells
                .iter()
                .all(|c| prep.certified(&cell_box(&prep.lo, h, c, prep.m))),
        );
        let k = trace.len();
        if level >= min_level
            && k >= 2
            && certs[k - 1]
            && certs[k - 2]
            && trace[k - 1] == trace[k - 2]
        {
            done = true;
            return false;
        }
        true
    })?;
    let k = trace.len();
    let tail: Vec<i64> = trace[k.saturating_sub(3)..].to_vec();
    let stable = k >= 2 && trace[k - 1] == trace[k - 2];
    if !stable {
        return Err(TopoError::Unstable { trace: tail });
    }
    let certified = done || (k >= 2 && certs[k - 1] && certs[k - 2]);
    Ok(EulerEstimate {
        value: trace[k - 1],
        trace: tail,
        stable,
        certified,
    })
}

/// Connected components of the cover at resolution `h`, checked against two
/// further refinements.
pub fn components(region: &RegionSpec, h: f64) -> Result<(usize, Vec<Vec<f64>>), TopoError> {
    let prep = Prepared::new(region)?;
    if prep.point.is_some() {
        let c = cover(region, h)?;
        let pts = c.components();
        return Ok((pts.len(), pts));
    }
    check_resolution(&prep, h)?;
    let target = level_for(&prep, h);
    let last = (target + 2).min(MAX_LEVEL);
    let mut counts = Vec::new();
    let mut finest = Vec::new();
    descend(&prep, last, usize::MAX, |level, cells, _| {
        if level >= target {
            counts.push(component_roots(cells, prep.m).len());
            if level == last {
                finest = cells.to_vec();
            }
        }
        level < last
    })?;
    let k = counts.len();
    if k >= 2 && counts[k - 1] != counts[k - 2] {
        return Err(TopoError::UnstableComponents { trace: counts });
    }
    let approx = prep.approximation(last, finest);
    let pts = approx.components();
    Ok((pts.len(), pts))
}

fn pack(c: &Cell) -> u128 {
    (u128::from(c[0]) << 96) | (u128::from(c[1]) << 64) | (u128::from(c[2]) << 32) | u128::from(c[3])
}

fn offset_index(s: &[i32], m: usize) -> usize {
    (0..m).fold(0, |acc, j| acc * 3 + (s[j] + 1) as usize)
}

/// Occupancy of the 3^m neighbourhood of `c` (bit = offset index).
fn neighbourhood(keys: &[u128], c: &Cell, m: usize) -> u128 {
    let mut mask = 0u128;
    let total = 3usize.pow(m as u32);
    let mut s = [0i32; MAXD];
    for o in 0..total {
        let mut rem = o;
        for j in (0..m).rev() {
            s[j] = (rem % 3) as i32 - 1;
            rem /= 3;
        }
        let mut n = *c;
        let mut ok = true;
        for j in 0..m {
            let v = i64::from(c[j]) + i64::from(s[j]);
            if v < 0 || v > i64::from(u32::MAX) {
                ok = false;
                break;
            }
            n[j] = v as u32;
        }
        if ok && keys.binary_search(&pack(&n)).is_ok() {
            mask |= 1u128 << o;
        }
    }
    mask
}

/// For each face code (digits 0 = lower side, 1 = open, 2 = upper side), the
/// mask of neighbour offsets that contain the face and precede the cell in
/// lexicographic order.
fn face_tables(m: usize) -> Vec<(u128, i64)> {
    let total = 3usize.pow(m as u32);
    let mut out = Vec::with_capacity(total);
    for d in 0..total {
        let mut digits = [0usize; MAXD];
        let mut rem = d;
        for j in (0..m).rev() {
            digits[j] = rem % 3;
            rem /= 3;
        }
        let dim = digits[..m].iter().filter(|&&x| x == 1).count();
        let sign = if dim % 2 == 0 { 1 } else { -1 };
        let mut mask = 0u128;
        // offsets with s_j ∈ {-1,0} for lower side, {0,1} for upper, 0 if open
        let mut s = [0i32; MAXD];
        let choices = |j: usize| -> &'static [i32] {
            match digits[j] {
                0 => &[-1, 0],
                2 => &[0, 1],
                _ => &[0],
            }
        };
        fn rec(
            j: usize,
            m: usize,
            s: &mut [i32; MAXD],
            choices: &dyn Fn(usize) -> &'static [i32],
            mask: &mut u128,
        ) {
            if j == m {
                let first = s[..m].iter().find(|&&v| v != 0);
                if first == Some(&-1) {
                    *mask |= 1u128 << offset_index(&s[..], m);
                }
                return;
            }
            for &v in choices(j) {
                s[j] = v;
                rec(j + 1, m, s, choices, mask);
            }
            s[j] = 0;
        }
        rec(0, m, &mut s, &choices, &mut mask);
        out.push((mask, sign));
    }
    out
}

/// Euler characteristic of a union of closed cells: every face is counted
/// once, by the lexicographically first kept cell containing it.
fn euler_of_cells(cells: &[Cell], m: usize) -> i64 {
    if m == 0 {
        return cells.len().min(1) as i64;
    }
    let keys: Vec<u128> = cells.iter().map(pack).collect();
    debug_assert!(keys.windows(2).all(|w| w[0] < w[1]));
    let tables = face_tables(m);
    let mut chi = 0i64;
    for c in cells {
        let nb = neighbourhood(&keys, c, m);
        for &(mask, sign) in &tables {
            if nb & mask == 0 {
                chi += sign;
            }
        }
    }
    chi
}

/// Index of one representative cell per connected component (closed-cube
/// adjacency), ordered by first appearance.
fn component_roots(cells: &[Cell], m: usize) -> Vec<usize> {
    let keys: Vec<u128> = cells.iter().map(pack).collect();
    let mut parent: Vec<usize> = (0..cells.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let total = 3usize.pow(m as u32);
    for (i, c) in cells.iter().enumerate() {
        let mut s = [0i32; MAXD];
        for o in 0..total {
            let mut rem = o;
            for j in (0..m).rev() {
                s[j] = (rem % 3) as i32 - 1;
                rem /= 3;
            }
            let mut n = *c;
            let mut ok = true;
            for j in 0..m {
                let v = i64::from(c[j]) + i64::from(s[j]);
                if v < 0 {
                    ok = false;
                    break;
                }
                n[j] = v as u32;
            }
            if !ok {
                continue;
            }
            if let Ok(k) = keys.binary_search(&pack(&n)) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, k));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut roots = Vec::new();
    for i in 0..cells.len() {
        if find(&mut parent, i) == i {
            roots.push(i);
        }
    }
    roots
}
