use std::time::Instant;

use crate::integrate::{mc_mean, random_direction, random_subspace, MCEstimate, SubspaceSample};
use crate::poly::{AffineFrame, Polynomial};
use crate::strata::{self, index_sums, Germ, ScaleSchedule, StrataError};

use super::density::{density, DensityOptions};
use super::identities::chi;
use super::{direction_in, int, sample_with_policy, Comparison, Resample, Rule, Sampling, Subject, Term, VerificationReport, VerifyError};

const STREAM_GB: u64 = 10;
const STREAM_SIGMA: u64 = 20;
const STREAM_LINK: u64 = 40;
const STREAM_BETA: u64 = 60;

fn basis(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect()
}

/// Gauss-Bonnet: mean over v of ½(I(v*) + I(−v*)) against
/// χ(M) − ½χ(X ∩ f⁻¹(δ) ∩ S_ε) − ½·mean χ(X ∩ f⁻¹(δ) ∩ {v* = 0} ∩ S_ε).
pub fn estimate_gauss_bonnet(subject: &Subject, sched: &ScaleSchedule, sampling: &Sampling) -> Result<VerificationReport, VerifyError> {
    let t0 = Instant::now();
    let germ = &subject.germ;
    let n = germ.n;
    let chi_m = chi(&strata::milnor_fibre(germ, &subject.f, sched))?;
    let chi_b = chi(&strata::fibre_boundary(germ, &subject.f, sched))?;
    let e = basis(n);
    let (pairs, log) = sample_with_policy(sampling.n, sampling.seed, STREAM_GB, sampling.strict, |rng| {
        let v = direction_in(&e, n, rng);
        let g = Polynomial::linear_form(&v);
        let sums = index_sums(germ, &subject.f, &g, sched)?;
        let mut r = strata::fibre_boundary(germ, &subject.f, sched);
        r.equalities.push(g);
        Ok((0.5 * int(sums.plus + sums.minus), int(chi(&r)?)))
    })?;
    let lhs = mc_mean(&pairs.iter().map(|p| p.0).collect::<Vec<_>>(), sampling.seed)?;
    let slice = mc_mean(&pairs.iter().map(|p| p.1).collect::<Vec<_>>(), sampling.seed)?;
    let rhs = MCEstimate::combine(&[
        (1.0, MCEstimate::exact(int(chi_m) - 0.5 * int(chi_b))),
        (-0.5, slice),
    ]);
    let terms = vec![
        Term::estimate("paired_index_mean", &lhs),
        Term::exact("chi_milnor_fibre", int(chi_m)),
        Term::exact("chi_fibre_boundary", int(chi_b)),
        Term::estimate("chi_fibre_boundary_hyperplane_mean", &slice),
    ];
    let main = Comparison::new("gauss_bonnet", (lhs.mean, lhs.stderr), (rhs.mean, rhs.stderr), Rule::ThreeSigmaEach);
    Ok(VerificationReport::assemble(
        "gauss-bonnet",
        subject,
        sched,
        sampling.seed,
        t0,
        main,
        Vec::new(),
        terms,
        sampling.n,
        log,
    ))
}

/// σ_k: mean of χ(X ∩ (H + δv) ∩ B_ε) over H Haar in G^{n−k} and v uniform
/// on the unit sphere of H^⊥; σ_0 = 1.
pub fn sigma(germ: &Germ, k: usize, sched: &ScaleSchedule, sampling: &Sampling) -> Result<(MCEstimate, Vec<Resample>), VerifyError> {
    let n = germ.n;
    if k > n {
        return Err(VerifyError::Unsupported(format!("σ_{k} in dimension {n}")));
    }
    if k == 0 {
        return Ok((MCEstimate::exact(1.0), Vec::new()));
    }
    let delta = sched.for_slices(germ.dim().saturating_sub(k)).delta().abs();
    let (vals, log) = sample_with_policy(sampling.n, sampling.seed, STREAM_SIGMA + k as u64, sampling.strict, |rng| {
        let h = random_subspace(n, n - k, rng);
        let v = direction_in(&h.complement, n, rng);
        let base: Vec<f64> = v.iter().map(|x| delta * x).collect();
        let frame = AffineFrame::new(base, h.frame).map_err(StrataError::from)?;
        let region = germ.region().ball(vec![0.0; n], sched.epsilon).frame(frame);
        Ok(int(chi(&region)?))
    })?;
    Ok((mc_mean(&vals, sampling.seed)?, log))
}

/// Mean of χ(Lk(X ∩ H)) over H Haar in G^j (exact for j = 0 and j = n).
pub fn link_mean(germ: &Germ, j: usize, sched: &ScaleSchedule, sampling: &Sampling) -> Result<(MCEstimate, Vec<Resample>), VerifyError> {
    let n = germ.n;
    if j == 0 {
        return Ok((MCEstimate::exact(0.0), Vec::new()));
    }
    if j >= n {
        return Ok((MCEstimate::exact(int(chi(&strata::link(germ, sched.epsilon))?)), Vec::new()));
    }
    let (vals, log) = sample_with_policy(sampling.n, sampling.seed, STREAM_LINK + j as u64, sampling.strict, |rng| {
        let h = random_subspace(n, j, rng);
        let frame = AffineFrame::new(vec![0.0; n], h.frame).map_err(StrataError::from)?;
        Ok(int(chi(&strata::link(germ, sched.epsilon).frame(frame))?))
    })?;
    Ok((mc_mean(&vals, sampling.seed)?, log))
}

/// X ∩ L_v for L_v = H ⊕ ⟨v⟩ in coordinates of L_v, with f = v* (the last
/// coordinate).
pub fn slice_germ(germ: &Germ, h: &SubspaceSample, v: &[f64]) -> Result<(Germ, Polynomial), StrataError> {
    let n = germ.n;
    let mut dirs = h.frame.clone();
    dirs.push(v.to_vec());
    let frame = AffineFrame::new(vec![0.0; n], dirs)?;
    let sliced = germ.restrict(&frame)?;
    let f = Polynomial::linear_form(v).restrict_affine(&frame)?;
    Ok((sliced, f))
}

fn paired_index(germ: &Germ, f: &Polynomial, w: &[f64], sched: &ScaleSchedule) -> Result<f64, StrataError> {
    let sums = index_sums(germ, f, &Polynomial::linear_form(w), sched)?;
    Ok(0.5 * int(sums.plus + sums.minus))
}

/// β_0(H, v): the Gauss-Bonnet mean ½(I(w*) + I(−w*)) over directions w of
/// L_v, for the sliced germ with f = v*.
pub fn beta0(
    germ: &Germ,
    h: &SubspaceSample,
    v: &[f64],
    sched: &ScaleSchedule,
    sampling: &Sampling,
) -> Result<(MCEstimate, Vec<Resample>), VerifyError> {
    let (sliced, f) = slice_germ(germ, h, v)?;
    let m = sliced.n;
    let sched = &sched.for_slices(sliced.dim().saturating_sub(1));
    let (vals, log) = sample_with_policy(sampling.n, sampling.seed, STREAM_BETA, sampling.strict, |rng| {
        let w = random_direction(m, rng).v;
        paired_index(&sliced, &f, &w, sched)
    })?;
    Ok((mc_mean(&vals, sampling.seed)?, log))
}

/// Mean of β_0 over H Haar in G^{n−k} and v uniform on the sphere of H^⊥,
/// estimated by drawing (H, v, w) jointly.
pub fn beta0_mean(germ: &Germ, k: usize, sched: &ScaleSchedule, sampling: &Sampling) -> Result<(MCEstimate, Vec<Resample>), VerifyError> {
    let n = germ.n;
    if k == 0 || k > n {
        return Err(VerifyError::Unsupported(format!("β_0 average for k = {k} in dimension {n}")));
    }
    let sched = &sched.for_slices(germ.dim().saturating_sub(k));
    let (vals, log) = sample_with_policy(sampling.n, sampling.seed, STREAM_BETA + k as u64, sampling.strict, |rng| {
        let h = random_subspace(n, n - k, rng);
        let v = direction_in(&h.complement, n, rng);
        let (sliced, f) = slice_germ(germ, &h, &v)?;
        let w = random_direction(sliced.n, rng).v;
        paired_index(&sliced, &f, &w, sched)
    })?;
    Ok((mc_mean(&vals, sampling.seed)?, log))
}

fn sigmas(germ: &Germ, sched: &ScaleSchedule, sampling: &Sampling, log: &mut Vec<Resample>) -> Result<Vec<MCEstimate>, VerifyError> {
    (0..=germ.n)
        .map(|k| {
            let (e, l) = sigma(germ, k, sched, sampling)?;
            log.extend(l);
            Ok(e)
        })
        .collect()
}

fn link_means(germ: &Germ, sched: &ScaleSchedule, sampling: &Sampling, log: &mut Vec<Resample>) -> Result<Vec<MCEstimate>, VerifyError> {
    (0..=germ.n)
        .map(|j| {
            let (e, l) = link_mean(germ, j, sched, sampling)?;
            log.extend(l);
            Ok(e)
        })
        .collect()
}

fn difference(s: &[MCEstimate], k: usize) -> MCEstimate {
    match s.get(k + 1) {
        Some(next) => MCEstimate::combine(&[(1.0, s[k]), (-1.0, *next)]),
        None => s[k],
    }
}

fn pair(e: &MCEstimate) -> (f64, f64) {
    (e.mean, e.stderr)
}

/// Kinematic formula at level k: the β_0 average against σ_k − σ_{k+1} and,
/// for k = dim X, against the measured density.
pub fn check_kinematic(subject: &Subject, k: usize, sched: &ScaleSchedule, sampling: &Sampling) -> Result<VerificationReport, VerifyError> {
    let t0 = Instant::now();
    let germ = &subject.germ;
    let mut log = Vec::new();
    let (beta, l) = beta0_mean(germ, k, sched, sampling)?;
    log.extend(l);
    let (sk, l) = sigma(germ, k, sched, sampling)?;
    log.extend(l);
    let sk1 = if k < germ.n {
        let (e, l) = sigma(germ, k + 1, sched, sampling)?;
        log.extend(l);
        e
    } else {
        MCEstimate::exact(0.0)
    };
    let diff = MCEstimate::combine(&[(1.0, sk), (-1.0, sk1)]);
    let mut terms = vec![
        Term::estimate("beta0_mean", &beta),
        Term::estimate(&format!("sigma_{k}"), &sk),
        Term::estimate(&format!("sigma_{}", k + 1), &sk1),
    ];
    let main = Comparison::new("beta0_vs_sigma_difference", pair(&beta), pair(&diff), Rule::ThreeSigmaCombined);
    let mut comparisons = Vec::new();
    if k == germ.dim() {
        let d = density(germ, sched, &DensityOptions::with_seed(sampling.seed))?;
        terms.push(Term::estimate("density", &d));
        comparisons.push(Comparison::new("density_vs_beta0", pair(&d), pair(&beta), Rule::ThreeSigmaCombined));
        comparisons.push(Comparison::new("density_vs_sigma_difference", pair(&d), pair(&diff), Rule::ThreeSigmaCombined));
    }
    let n_samples = 3 * sampling.n;
    Ok(VerificationReport::assemble(
        "kinematic",
        subject,
        sched,
        sampling.seed,
        t0,
        main,
        comparisons,
        terms,
        n_samples,
        log,
    ))
}

/// σ_0..σ_n from slices against their link expression
/// σ_k = ½E χ(Lk(X ∩ L^{n−k+1})) + ½E χ(Lk(X ∩ H^{n−k})), plus σ_k = 1 for k
/// up to the dimension of the stratum through 0.
pub fn check_sigma_relation(subject: &Subject, sched: &ScaleSchedule, sampling: &Sampling) -> Result<VerificationReport, VerifyError> {
    let t0 = Instant::now();
    let germ = &subject.germ;
    let n = germ.n;
    let mut log = Vec::new();
    let s = sigmas(germ, sched, sampling, &mut log)?;
    let l = link_means(germ, sched, sampling, &mut log)?;
    let mut terms = Vec::new();
    for (k, e) in s.iter().enumerate() {
        terms.push(Term::estimate(&format!("sigma_{k}"), e));
    }
    for k in 0..=n {
        terms.push(Term::estimate(&format!("lambda_{k}"), &difference(&s, k)));
    }
    for (j, e) in l.iter().enumerate() {
        terms.push(Term::estimate(&format!("link_mean_{j}"), e));
    }
    let mut comparisons = Vec::new();
    for k in 1..=n {
        let via_links = MCEstimate::combine(&[(0.5, l[n - k + 1]), (0.5, l[n - k])]);
        comparisons.push(Comparison::new(
            &format!("sigma_{k}_slices_vs_links"),
            pair(&s[k]),
            pair(&via_links),
            Rule::ThreeSigmaCombined,
        ));
    }
    for k in 0..=germ.min_stratum_dim().min(n) {
        comparisons.push(Comparison::new(&format!("sigma_{k}_smooth"), pair(&s[k]), (1.0, 0.0), Rule::ThreeSigmaCombined));
    }
    let main = comparisons.remove(0);
    let n_samples = 2 * n * sampling.n;
    Ok(VerificationReport::assemble(
        "sigma",
        subject,
        sched,
        sampling.seed,
        t0,
        main,
        comparisons,
        terms,
        n_samples,
        log,
    ))
}

/// Curvature limits from links for every k against σ_k − σ_{k+1}:
/// k = 0: 1 − ½χ(Lk X) − ½L_{n−1}; 0 < k < n: −½L_{n−k−1} + ½L_{n−k+1};
/// k = n: ½L_1, with L_j the mean link Euler characteristic of X ∩ H^j.
pub fn check_curv_and_link(subject: &Subject, sched: &ScaleSchedule, sampling: &Sampling) -> Result<VerificationReport, VerifyError> {
    let t0 = Instant::now();
    let germ = &subject.germ;
    let n = germ.n;
    let mut log = Vec::new();
    let s = sigmas(germ, sched, sampling, &mut log)?;
    let l = link_means(germ, sched, sampling, &mut log)?;
    let mut terms = Vec::new();
    let mut comparisons = Vec::new();
    for k in 0..=n {
        let formula = if k == 0 {
            MCEstimate::combine(&[(1.0, MCEstimate::exact(1.0)), (-0.5, l[n]), (-0.5, l[n - 1])])
        } else if k < n {
            MCEstimate::combine(&[(-0.5, l[n - k - 1]), (0.5, l[n - k + 1])])
        } else {
            MCEstimate::combine(&[(0.5, l[1])])
        };
        let diff = difference(&s, k);
        terms.push(Term::estimate(&format!("curvature_{k}_from_links"), &formula));
        terms.push(Term::estimate(&format!("lambda_{k}"), &diff));
        comparisons.push(Comparison::new(
            &format!("curvature_{k}"),
            pair(&formula),
            pair(&diff),
            Rule::ThreeSigmaCombined,
        ));
    }
    let main = comparisons.remove(0);
    let n_samples = 2 * n * sampling.n;
    Ok(VerificationReport::assemble(
        "curv-link",
        subject,
        sched,
        sampling.seed,
        t0,
        main,
        comparisons,
        terms,
        n_samples,
        log,
    ))
}

/// σ_k from slices against its link expression at a single k.
pub fn check_sigma_k(subject: &Subject, k: usize, sched: &ScaleSchedule, sampling: &Sampling) -> Result<VerificationReport, VerifyError> {
    let t0 = Instant::now();
    let germ = &subject.germ;
    let n = germ.n;
    if k == 0 || k > n {
        return Err(VerifyError::Unsupported(format!("σ_{k} check needs 1 ≤ k ≤ {n}")));
    }
    let mut log = Vec::new();
    let (s, l) = sigma(germ, k, sched, sampling)?;
    log.extend(l);
    let (upper, l) = link_mean(germ, n - k + 1, sched, sampling)?;
    log.extend(l);
    let (lower, l) = link_mean(germ, n - k, sched, sampling)?;
    log.extend(l);
    let via_links = MCEstimate::combine(&[(0.5, upper), (0.5, lower)]);
    let terms = vec![
        Term::estimate(&format!("sigma_{k}"), &s),
        Term::estimate(&format!("link_mean_{}", n - k + 1), &upper),
        Term::estimate(&format!("link_mean_{}", n - k), &lower),
    ];
    let main = Comparison::new(&format!("sigma_{k}_slices_vs_links"), pair(&s), pair(&via_links), Rule::ThreeSigmaCombined);
    Ok(VerificationReport::assemble(
        "sigma",
        subject,
        sched,
        sampling.seed,
        t0,
        main,
        Vec::new(),
        terms,
        3 * sampling.n,
        log,
    ))
}

/// Measured density of X against σ_d − σ_{d+1}, d = dim X.
pub fn check_density(subject: &Subject, sched: &ScaleSchedule, sampling: &Sampling) -> Result<VerificationReport, VerifyError> {
    let t0 = Instant::now();
    let germ = &subject.germ;
    let d = germ.dim();
    let dens = density(germ, sched, &DensityOptions::with_seed(sampling.seed))?;
    let mut log = Vec::new();
    let (sd, l) = sigma(germ, d, sched, sampling)?;
    log.extend(l);
    let sd1 = if d < germ.n {
        let (e, l) = sigma(germ, d + 1, sched, sampling)?;
        log.extend(l);
        e
    } else {
        MCEstimate::exact(0.0)
    };
    let diff = MCEstimate::combine(&[(1.0, sd), (-1.0, sd1)]);
    let terms = vec![
        Term::estimate("density", &dens),
        Term::estimate(&format!("sigma_{d}"), &sd),
        Term::estimate(&format!("sigma_{}", d + 1), &sd1),
    ];
    let main = Comparison::new("density_vs_sigma_difference", pair(&dens), pair(&diff), Rule::ThreeSigmaCombined);
    Ok(VerificationReport::assemble(
        "density",
        subject,
        sched,
        sampling.seed,
        t0,
        main,
        Vec::new(),
        terms,
        dens.n + 2 * sampling.n,
        log,
    ))
}
