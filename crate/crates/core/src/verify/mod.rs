//! One checker per identity. Each assembles both sides from strata, topo and
//! integrate and returns a [`VerificationReport`].

mod density;
mod identities;
mod measures;

use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::{rng_for, IntegrateError, MCEstimate};
use crate::poly::Polynomial;
use crate::strata::{Germ, ScaleSchedule, StrataError};

pub use density::{density, DensityOptions};
pub use identities::{check_corollary_isolated, check_le_greuel, check_lemma_link, le_greuel_sweep};
pub use measures::{
    beta0, beta0_mean, check_curv_and_link, check_kinematic, check_sigma_relation, estimate_gauss_bonnet, link_mean,
    check_density, check_sigma_k, sigma, slice_germ,
};

/// Resampling attempts per direction before giving up on it.
pub const MAX_ATTEMPTS: u32 = 20;
/// Largest tolerated fraction of resampled directions.
pub const MAX_RESAMPLE_RATE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Strata(#[from] StrataError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("{resampled} of {total} samples were degenerate (limit 5%)")]
    TooManyDegenerate {
        resampled: usize,
        total: usize,
        log: Vec<Resample>,
    },
    #[error("sample {index} stayed degenerate after {attempts} attempts: {reason}")]
    PersistentlyDegenerate { index: usize, attempts: u32, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("density extrapolation did not converge: {0}")]
    NonConvergent(String),
}

/// Germ plus the function f the identities are about.
#[derive(Clone, Debug, PartialEq)]
pub struct Subject {
    pub name: String,
    pub germ: Germ,
    pub f: Polynomial,
}

/// Number of Monte-Carlo samples and the master seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sampling {
    pub n: usize,
    pub seed: u64,
    /// Unstable χ fails the check instead of redrawing the sample.
    pub strict: bool,
}

impl Sampling {
    pub fn new(n: usize, seed: u64) -> Sampling {
        Sampling { n, seed, strict: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resample {
    pub index: usize,
    pub attempt: u32,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Term {
    pub fn exact(name: &str, value: f64) -> Term {
        Term {
            name: name.into(),
            value,
            stderr: 0.0,
            note: String::new(),
        }
    }

    pub fn estimate(name: &str, e: &MCEstimate) -> Term {
        Term {
            name: name.into(),
            value: e.mean,
            stderr: e.stderr,
            note: String::new(),
        }
    }

    pub fn elided(name: &str, why: &str) -> Term {
        Term {
            name: name.into(),
            value: 0.0,
            stderr: 0.0,
            note: why.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Integer identity: equality with no tolerance.
    Exact,
    /// |a − b| ≤ 3·sqrt(sa² + sb²).
    ThreeSigmaCombined,
    /// |a − b| ≤ 3·sa + 3·sb.
    ThreeSigmaEach,
}

impl Rule {
    pub fn holds(self, a: f64, sa: f64, b: f64, sb: f64) -> bool {
        let d = (a - b).abs();
        match self {
            Rule::Exact => a == b,
            Rule::ThreeSigmaCombined => d <= 3.0 * sa.hypot(sb),
            Rule::ThreeSigmaEach => d <= 3.0 * sa + 3.0 * sb,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr_lhs: f64,
    pub stderr_rhs: f64,
    pub rule: Rule,
    pub pass: bool,
}

impl Comparison {
    pub fn new(name: &str, lhs: (f64, f64), rhs: (f64, f64), rule: Rule) -> Comparison {
        Comparison {
            name: name.into(),
            lhs: lhs.0,
            rhs: rhs.0,
            stderr_lhs: lhs.1,
            stderr_rhs: rhs.1,
            rule,
            pass: rule.holds(lhs.0, lhs.1, rhs.0, rhs.1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem: String,
    pub germ: String,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr_lhs: f64,
    pub stderr_rhs: f64,
    pub discrepancy: f64,
    pub rule: Rule,
    pub pass: bool,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub eta: f64,
    pub n_samples: usize,
    pub resampled: Vec<Resample>,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub terms: Vec<Term>,
    pub comparisons: Vec<Comparison>,
}

impl VerificationReport {
    /// Report whose headline is `main`; passes iff every comparison passes.
    fn assemble(
        theorem: &str,
        subject: &Subject,
        sched: &ScaleSchedule,
        seed: u64,
        started: Instant,
        main: Comparison,
        mut comparisons: Vec<Comparison>,
        terms: Vec<Term>,
        n_samples: usize,
        resampled: Vec<Resample>,
    ) -> VerificationReport {
        comparisons.insert(0, main.clone());
        VerificationReport {
            theorem: theorem.into(),
            germ: subject.name.clone(),
            lhs: main.lhs,
            rhs: main.rhs,
            stderr_lhs: main.stderr_lhs,
            stderr_rhs: main.stderr_rhs,
            discrepancy: (main.lhs - main.rhs).abs(),
            rule: main.rule,
            pass: comparisons.iter().all(|c| c.pass),
            seed,
            epsilon: sched.epsilon,
            delta: sched.delta(),
            eta: sched.eta(),
            n_samples,
            resampled,
            wall_ms: started.elapsed().as_millis() as u64,
            error: None,
            terms,
            comparisons,
        }
    }

    /// Failed report carrying the checker error.
    pub fn failed(theorem: &str, germ: &str, sched: &ScaleSchedule, seed: u64, err: &dyn std::fmt::Display) -> Self {
        VerificationReport {
            theorem: theorem.into(),
            germ: germ.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            stderr_lhs: 0.0,
            stderr_rhs: 0.0,
            discrepancy: f64::NAN,
            rule: Rule::Exact,
            pass: false,
            seed,
            epsilon: sched.epsilon,
            delta: sched.delta(),
            eta: sched.eta(),
            n_samples: 0,
            resampled: Vec::new(),
            wall_ms: 0,
            error: Some(err.to_string()),
            terms: Vec::new(),
            comparisons: Vec::new(),
        }
    }
}

/// Evaluates `f` on `count` independent random streams in parallel. A
/// degenerate sample is redrawn from a fresh stream (up to
/// [`MAX_ATTEMPTS`] times) and logged; more than 5% redrawn samples abort.
pub fn sample_with_policy<T, F>(count: usize, seed: u64, stream: u64, strict: bool, f: F) -> Result<(Vec<T>, Vec<Resample>), VerifyError>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T, StrataError> + Sync,
{
    let results: Vec<Result<(T, Vec<Resample>), VerifyError>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut log = Vec::new();
            for attempt in 0..MAX_ATTEMPTS {
                let mut rng = rng_for(seed, stream + (u64::from(attempt) << 32), i as u64);
                match f(&mut rng) {
                    Ok(v) => return Ok((v, log)),
                    Err(e) if e.is_degenerate() && !(strict && matches!(e, StrataError::Topo(_))) => {
                        log::debug!("sample {i} attempt {attempt} degenerate: {e}");
                        log.push(Resample {
                            index: i,
                            attempt,
                            reason: e.to_string(),
                        });
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            Err(VerifyError::PersistentlyDegenerate {
                index: i,
                attempts: MAX_ATTEMPTS,
                reason: log.last().map(|r| r.reason.clone()).unwrap_or_default(),
            })
        })
        .collect();
    let mut values = Vec::with_capacity(count);
    let mut log = Vec::new();
    let mut redrawn = 0;
    for r in results {
        let (v, l) = r?;
        if !l.is_empty() {
            redrawn += 1;
        }
        values.push(v);
        log.extend(l);
    }
    if count > 0 && redrawn as f64 > MAX_RESAMPLE_RATE * count as f64 {
        return Err(VerifyError::TooManyDegenerate {
            resampled: redrawn,
            total: count,
            log,
        });
    }
    Ok((values, log))
}

/// Unit vector `Σ c_i b_i` for a uniform direction `c` in span(basis).
fn direction_in(basis: &[Vec<f64>], n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let c = crate::integrate::random_direction(basis.len(), rng).v;
    let mut v = vec![0.0; n];
    for (ci, b) in c.iter().zip(basis) {
        for (vj, bj) in v.iter_mut().zip(b) {
            *vj += ci * bj;
        }
    }
    // renormalize away rounding so the frame check passes
    let r = crate::linalg::norm(&v);
    v.iter().map(|x| x / r).collect()
}

/// Integer-valued estimate as an exact f64.
fn int(v: i64) -> f64 {
    v as f64
}
