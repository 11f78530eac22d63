use std::time::Instant;

use crate::poly::Polynomial;
use crate::strata::{self, index_sums, ScaleSchedule, StrataError};
use crate::topo::{self, RegionSpec, Schedule};

use super::{direction_in, int, sample_with_policy, Comparison, Rule, Sampling, Subject, Term, VerificationReport, VerifyError};

pub(super) fn chi(region: &RegionSpec) -> Result<i64, StrataError> {
    Ok(topo::euler(region, &Schedule::default())?.value)
}

/// g-dependent part of the identity: I(g), I(−g) and χ(X^g ∩ f⁻¹(δ) ∩ S_ε).
struct GPart {
    plus: i64,
    minus: i64,
    chi_g: Option<i64>,
    points: usize,
}

fn g_part(subject: &Subject, g: &Polynomial, sched: &ScaleSchedule) -> Result<GPart, StrataError> {
    let sums = index_sums(&subject.germ, &subject.f, g, sched)?;
    let chi_g = if subject.germ.dim() == 1 {
        None
    } else {
        let mut r = strata::fibre_boundary(&subject.germ, &subject.f, sched);
        r.equalities.push(g.clone());
        Some(chi(&r)?)
    };
    Ok(GPart {
        plus: sums.plus,
        minus: sums.minus,
        chi_g,
        points: sums.points.len(),
    })
}

const CURVE_NOTE: &str = "dim X = 1: term vanishes";

/// I(g) + I(−g) = 2χ(M) − χ(X ∩ f⁻¹(δ) ∩ S_ε) − χ(X^g ∩ f⁻¹(δ) ∩ S_ε).
pub fn check_le_greuel(subject: &Subject, g: &Polynomial, sched: &ScaleSchedule) -> Result<VerificationReport, VerifyError> {
    let t0 = Instant::now();
    let chi_m = chi(&strata::milnor_fibre(&subject.germ, &subject.f, sched))?;
    let chi_b = chi(&strata::fibre_boundary(&subject.germ, &subject.f, sched))?;
    let gp = g_part(subject, g, sched)?;
    let lhs = gp.plus + gp.minus;
    let rhs = 2 * chi_m - chi_b - gp.chi_g.unwrap_or(0);
    let terms = vec![
        Term::exact("index_sum_g", int(gp.plus)),
        Term::exact("index_sum_minus_g", int(gp.minus)),
        Term::exact("critical_points", gp.points as f64),
        Term::exact("chi_milnor_fibre", int(chi_m)),
        Term::exact("chi_fibre_boundary", int(chi_b)),
        match gp.chi_g {
            Some(v) => Term::exact("chi_fibre_boundary_g_zero", int(v)),
            None => Term::elided("chi_fibre_boundary_g_zero", CURVE_NOTE),
        },
    ];
    let main = Comparison::new("le_greuel", (int(lhs), 0.0), (int(rhs), 0.0), Rule::Exact);
    Ok(VerificationReport::assemble(
        "le-greuel",
        subject,
        sched,
        0,
        t0,
        main,
        Vec::new(),
        terms,
        1,
        Vec::new(),
    ))
}

/// The identity for `sampling.n` random linear forms g = v*, each compared
/// exactly; degenerate directions are redrawn.
pub fn le_greuel_sweep(subject: &Subject, sched: &ScaleSchedule, sampling: &Sampling) -> Result<VerificationReport, VerifyError> {
    let t0 = Instant::now();
    let n = subject.germ.n;
    let chi_m = chi(&strata::milnor_fibre(&subject.germ, &subject.f, sched))?;
    let chi_b = chi(&strata::fibre_boundary(&subject.germ, &subject.f, sched))?;
    let basis: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let (parts, log) = sample_with_policy(sampling.n, sampling.seed, 0, sampling.strict, |rng| {
        let v = direction_in(&basis, n, rng);
        g_part(subject, &Polynomial::linear_form(&v), sched)
    })?;
    let mut comparisons = Vec::new();
    let (mut sl, mut sr) = (0i64, 0i64);
    for (i, p) in parts.iter().enumerate() {
        let lhs = p.plus + p.minus;
        let rhs = 2 * chi_m - chi_b - p.chi_g.unwrap_or(0);
        sl += lhs;
        sr += rhs;
        comparisons.push(Comparison::new(&format!("direction_{i}"), (int(lhs), 0.0), (int(rhs), 0.0), Rule::Exact));
    }
    let k = parts.len().max(1) as f64;
    let terms = vec![
        Term::exact("chi_milnor_fibre", int(chi_m)),
        Term::exact("chi_fibre_boundary", int(chi_b)),
        if subject.germ.dim() == 1 {
            Term::elided("chi_fibre_boundary_g_zero", CURVE_NOTE)
        } else {
            Term::exact(
                "chi_fibre_boundary_g_zero_mean",
                parts.iter().map(|p| int(p.chi_g.unwrap_or(0))).sum::<f64>() / k,
            )
        },
    ];
    let main = Comparison::new("le_greuel_mean", (int(sl) / k, 0.0), (int(sr) / k, 0.0), Rule::Exact);
    Ok(VerificationReport::assemble(
        "le-greuel",
        subject,
        sched,
        sampling.seed,
        t0,
        main,
        comparisons,
        terms,
        sampling.n,
        log,
    ))
}

/// I(g) + I(−g) = 2χ(M) − χ(Lk X^f) − χ(Lk(X^f ∩ X^g)), with the link terms
/// that vanish for dimension reasons elided (both for curves, the last one
/// for surfaces).
pub fn check_corollary_isolated(subject: &Subject, g: &Polynomial, sched: &ScaleSchedule) -> Result<VerificationReport, VerifyError> {
    let t0 = Instant::now();
    let germ = &subject.germ;
    let eps = sched.epsilon;
    let sums = index_sums(germ, &subject.f, g, sched)?;
    let chi_m = chi(&strata::milnor_fibre(germ, &subject.f, sched))?;
    let d = germ.dim();
    let lk_f = if d >= 2 {
        Some(chi(&strata::link_of_zero_set(germ, &[subject.f.clone()], eps))?)
    } else {
        None
    };
    let lk_fg = if d >= 3 {
        Some(chi(&strata::link_of_zero_set(germ, &[subject.f.clone(), g.clone()], eps))?)
    } else {
        None
    };
    let lhs = sums.plus + sums.minus;
    let rhs = 2 * chi_m - lk_f.unwrap_or(0) - lk_fg.unwrap_or(0);
    let term = |name: &str, v: Option<i64>| match v {
        Some(v) => Term::exact(name, int(v)),
        None => Term::elided(name, "vanishes for dimension reasons"),
    };
    let terms = vec![
        Term::exact("index_sum_g", int(sums.plus)),
        Term::exact("index_sum_minus_g", int(sums.minus)),
        Term::exact("chi_milnor_fibre", int(chi_m)),
        term("chi_link_zero_f", lk_f),
        term("chi_link_zero_f_and_g", lk_fg),
    ];
    let main = Comparison::new("corollary", (int(lhs), 0.0), (int(rhs), 0.0), Rule::Exact);
    Ok(VerificationReport::assemble(
        "corollary",
        subject,
        sched,
        0,
        t0,
        main,
        Vec::new(),
        terms,
        1,
        Vec::new(),
    ))
}

/// χ(M^δ) + χ(M^−δ) = χ(Lk X) + χ(Lk X^f).
pub fn check_lemma_link(subject: &Subject, sched: &ScaleSchedule) -> Result<VerificationReport, VerifyError> {
    let t0 = Instant::now();
    let germ = &subject.germ;
    let plus = chi(&strata::milnor_fibre(germ, &subject.f, &sched.with_delta_sign(true)))?;
    let minus = chi(&strata::milnor_fibre(germ, &subject.f, &sched.with_delta_sign(false)))?;
    let lk = chi(&strata::link(germ, sched.epsilon))?;
    let lk_f = chi(&strata::link_of_zero_set(germ, &[subject.f.clone()], sched.epsilon))?;
    let terms = vec![
        Term::exact("chi_milnor_fibre_plus", int(plus)),
        Term::exact("chi_milnor_fibre_minus", int(minus)),
        Term::exact("chi_link", int(lk)),
        Term::exact("chi_link_zero_f", int(lk_f)),
    ];
    let main = Comparison::new("lemma_link", (int(plus + minus), 0.0), (int(lk + lk_f), 0.0), Rule::Exact);
    Ok(VerificationReport::assemble(
        "lemma-link",
        subject,
        sched,
        0,
        t0,
        main,
        Vec::new(),
        terms,
        1,
        Vec::new(),
    ))
}
