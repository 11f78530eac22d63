use rand::Rng;

use crate::integrate::{constants, rng_for, MCEstimate};
use crate::poly::{CompiledPoly, Polynomial};
use crate::strata::{Germ, ScaleSchedule, Stratum};
use crate::topo::{self, RegionSpec};

use super::VerifyError;

const STREAM_DENSITY: u64 = 80;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityOptions {
    /// Coarsest band half-width as a fraction of ε.
    pub tau: f64,
    /// Monte-Carlo points per band and refinement level.
    pub samples_per_level: usize,
    pub seed: u64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            tau: 0.04,
            samples_per_level: 200_000,
            seed: 0,
        }
    }
}

impl DensityOptions {
    pub fn with_seed(seed: u64) -> Self {
        DensityOptions {
            seed,
            ..Self::default()
        }
    }
}

/// One refinement level: (measure, stderr).
fn band_measure(n: usize, s: &Stratum, eps: f64, t: f64, opts: &DensityOptions, stream: u64) -> Result<(f64, f64), VerifyError> {
    let codim = n - s.dim;
    let mut region = RegionSpec::new(n).ball(vec![0.0; n], eps);
    region.inequalities = s.inequalities.clone();
    // |h| ≤ t|∇h|: first-order distance to {h = 0} at most t
    let band = match codim {
        0 => None,
        1 => {
            let h = &s.equalities[0];
            let mut g2 = Polynomial::zero(n);
            for d in h.gradient() {
                g2 = &g2 + &(&d * &d);
            }
            let tt = Polynomial::constant_f64(n, t * t);
            Some(&(&tt * &g2) - &(h * h))
        }
        _ => unreachable!("checked by caller"),
    };
    if let Some(b) = &band {
        region.inequalities.push(b.clone());
    }
    let cell = if codim == 0 { eps / 16.0 } else { 2.0 * t };
    let cover = topo::cover(&region, cell).map_err(crate::strata::StrataError::from)?;
    if cover.is_empty() {
        return Ok((0.0, 0.0));
    }
    let ineqs: Vec<CompiledPoly> = region.inequalities.iter().map(CompiledPoly::new).collect();
    let mut rng = rng_for(opts.seed, STREAM_DENSITY, stream);
    let m = opts.samples_per_level;
    let mut hits = 0usize;
    let mut x = vec![0.0; n];
    for _ in 0..m {
        let c = rng.gen_range(0..cover.len());
        let bx = cover.cell_box(c);
        for (xi, iv) in x.iter_mut().zip(&bx.0) {
            *xi = rng.gen_range(iv.lo..iv.hi);
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 <= eps * eps && ineqs.iter().all(|p| p.eval(&x) >= 0.0) {
            hits += 1;
        }
    }
    let vol = cover.len() as f64 * cover.h.powi(n as i32);
    let p = hits as f64 / m as f64;
    let se = (p * (1.0 - p) / m as f64).sqrt();
    let norm = if codim == 0 { 1.0 } else { 2.0 * t };
    Ok((vol * p / norm, vol * se / norm))
}

/// Finest level tried before giving up; the band half-width then is
/// τε / 2^MAX_LEVEL.
const MAX_LEVEL: usize = 8;

/// Relative agreement required between consecutive extrapolations, on top
/// of three combined standard errors.
const STABLE_RTOL: f64 = 0.01;

/// Largest accepted ratio between consecutive level differences; closer to
/// 1 the extrapolation amplifies noise too much.
const MAX_RATIO: f64 = 0.85;

/// Extrapolation of a measure sequence A(t), A(t/2), A(t/4) to t → 0 as
/// (value, stderr), assuming A(t) = A + C t^p with p fitted from the
/// data. Smooth strata give p = 1 or 2; tangent branches, as in cusps,
/// give fractional p. Differences within noise mean A is already flat.
fn extrapolate(levels: &[(f64, f64)]) -> Option<(f64, f64)> {
    let [(a0, s0), (a1, s1), (a2, s2)] = [levels[0], levels[1], levels[2]];
    let (d1, d2) = (a1 - a0, a2 - a1);
    let (sd1, sd2) = (s0.hypot(s1), s1.hypot(s2));
    if d2.abs() <= 3.0 * sd2 {
        return (d1.abs() <= 3.0 * sd1 || d2.abs() < 0.25 * d1.abs()).then_some((a2, s2.max(d2.abs())));
    }
    let r = d2 / d1;
    if !(r > 0.0 && r < MAX_RATIO) {
        return None;
    }
    let gain = r / (1.0 - r);
    Some((a2 + d2 * gain, s2 + gain * sd2 + (d2 * gain).abs() * sd1 / d1.abs()))
}

/// d-volume of X ∩ B_ε over b_d ε^d for d = dim X ∈ {1, 2}. The measure of
/// each top stratum {h = 0} is the volume of the band |h| ≤ t|∇h| over 2t,
/// sampled inside the cubical cover of the band. t halves from τε; each
/// three consecutive levels are extrapolated to t → 0, until two
/// consecutive extrapolations agree.
pub fn density(germ: &Germ, sched: &ScaleSchedule, opts: &DensityOptions) -> Result<MCEstimate, VerifyError> {
    let d = germ.dim();
    let n = germ.n;
    if !(1..=2).contains(&d) {
        return Err(VerifyError::Unsupported(format!("density needs dim X in {{1, 2}}, got {d}")));
    }
    let top: Vec<&Stratum> = germ.strata.iter().filter(|s| s.dim == d).collect();
    for s in &top {
        if n - s.dim > 1 || s.equalities.len() != n - s.dim {
            return Err(VerifyError::Unsupported(
                "density needs top strata cut out by at most one equation".into(),
            ));
        }
    }
    let eps = sched.epsilon;
    let norm = constants(d as u32).b * eps.powi(d as i32);
    let mut levels: Vec<(f64, f64)> = Vec::new();
    let mut previous: Option<(f64, f64)> = None;
    for j in 0..=MAX_LEVEL {
        let t = opts.tau * eps / f64::from(1u32 << j);
        let mut lv = (0.0f64, 0.0f64);
        for (i, s) in top.iter().enumerate() {
            let (a, se) = band_measure(n, s, eps, t, opts, (j * 16 + i) as u64)?;
            lv.0 += a / norm;
            lv.1 = lv.1.hypot(se / norm);
        }
        log::debug!("density level {j}: t = {t:e}, ratio {} ± {}", lv.0, lv.1);
        if lv.0 == 0.0 {
            return Err(VerifyError::NonConvergent(format!("empty band at t = {t:e}")));
        }
        levels.push(lv);
        if j < 2 {
            continue;
        }
        let current = extrapolate(&levels[j - 2..]);
        if let (Some((a, se)), Some((pa, pse))) = (current, previous) {
            if (a - pa).abs() <= STABLE_RTOL * a.abs() + 3.0 * se.hypot(pse) {
                log::debug!("density stabilized at level {j}: {a} ± {se}");
                return Ok(MCEstimate {
                    mean: a,
                    stderr: se,
                    n: (j + 1) * top.len() * opts.samples_per_level,
                    seed: opts.seed,
                });
            }
        }
        previous = current;
    }
    let trace: Vec<String> = levels.iter().map(|l| format!("{:.4}", l.0)).collect();
    Err(VerifyError::NonConvergent(format!("band measures {}", trace.join(", "))))
}
