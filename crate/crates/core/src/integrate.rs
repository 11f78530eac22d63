//! Haar sampling of spheres and Grassmannians, Monte-Carlo means, and the
//! unit ball and sphere volumes.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("subspace dimension {k} exceeds ambient dimension {n}")]
    BadDimension { n: usize, k: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSample {
    pub v: Vec<f64>,
}

/// Orthonormal `frame` spanning H and `complement` spanning H^⊥.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceSample {
    pub frame: Vec<Vec<f64>>,
    pub complement: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// A value known without sampling error.
    pub fn exact(value: f64) -> MCEstimate {
        MCEstimate {
            mean: value,
            stderr: 0.0,
            n: 0,
            seed: 0,
        }
    }

    /// Linear combination of independent estimates.
    pub fn combine(parts: &[(f64, MCEstimate)]) -> MCEstimate {
        let mean = parts.iter().map(|(c, e)| c * e.mean).sum();
        let var: f64 = parts.iter().map(|(c, e)| (c * e.stderr).powi(2)).sum();
        MCEstimate {
            mean,
            stderr: var.sqrt(),
            n: parts.iter().map(|(_, e)| e.n).sum(),
            seed: parts.first().map_or(0, |(_, e)| e.seed),
        }
    }

    /// |a − b| ≤ k·sqrt(sa² + sb²).
    pub fn agrees(&self, other: &MCEstimate, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.stderr.hypot(other.stderr)
    }
}

/// SplitMix64 finalizer; turns (seed, stream, index) into independent seeds.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform unit vector in ℝⁿ (normalized Gaussian).
pub fn random_direction(n: usize, rng: &mut ChaCha8Rng) -> DirectionSample {
    loop {
        let g = gaussian_vector(n, rng);
        let r = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-12 {
            return DirectionSample {
                v: g.iter().map(|x| x / r).collect(),
            };
        }
    }
}

/// Haar-uniform k-dimensional subspace: Gram-Schmidt on n Gaussian vectors;
/// the first k span H, the rest span H^⊥.
pub fn random_subspace(n: usize, k: usize, rng: &mut ChaCha8Rng) -> SubspaceSample {
    assert!(k <= n, "subspace dimension exceeds ambient dimension");
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut g = gaussian_vector(n, rng);
        for b in &basis {
            let d: f64 = g.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in g.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        // second pass keeps the frame orthonormal to rounding
        for b in &basis {
            let d: f64 = g.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in g.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let r = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-8 {
            basis.push(g.iter().map(|x| x / r).collect());
        }
    }
    let complement = basis.split_off(k);
    SubspaceSample {
        frame: basis,
        complement,
    }
}

/// N i.i.d. uniform directions; sample i depends only on (seed, i).
pub fn sample_directions(n: usize, count: usize, seed: u64) -> Vec<DirectionSample> {
    (0..count)
        .map(|i| random_direction(n, &mut rng_for(seed, 0, i as u64)))
        .collect()
}

pub fn sample_subspaces(n: usize, k: usize, count: usize, seed: u64) -> Result<Vec<SubspaceSample>, IntegrateError> {
    if k > n {
        return Err(IntegrateError::BadDimension { n, k });
    }
    Ok((0..count)
        .map(|i| random_subspace(n, k, &mut rng_for(seed, 1, i as u64)))
        .collect())
}

/// Unit sphere and unit ball volumes in dimension k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    /// Volume of the k-dimensional unit sphere S^k ⊂ ℝ^{k+1}.
    pub s: f64,
    /// Volume of the k-dimensional unit ball.
    pub b: f64,
}

/// Γ(m/2) for m ≥ 1, by the half-integer recursion.
fn gamma_half(m: u32) -> f64 {
    let (mut g, mut x) = if m % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = f64::from(m) / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

pub fn constants(k: u32) -> Constants {
    Constants {
        s: 2.0 * PI.powf(f64::from(k + 1) / 2.0) / gamma_half(k + 1),
        b: PI.powf(f64::from(k) / 2.0) / gamma_half(k + 2),
    }
}

/// Mean and standard error (sample sd / √N), summed in index order.
pub fn mc_mean(values: &[f64], seed: u64) -> Result<MCEstimate, IntegrateError> {
    let n = values.len();
    if n < 2 {
        return Err(IntegrateError::TooFewSamples(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    Ok(MCEstimate {
        mean,
        stderr: sd / (n as f64).sqrt(),
        n,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn directions_are_unit_and_centered() {
        let n = 10_000;
        let ds = sample_directions(2, n, 3);
        for d in &ds {
            assert!((d.v[0].hypot(d.v[1]) - 1.0).abs() < 1e-12);
        }
        for j in 0..2 {
            let m: f64 = ds.iter().map(|d| d.v[j]).sum::<f64>() / n as f64;
            assert!(m.abs() < 3.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn directions_are_isotropic() {
        let ds = sample_directions(3, 10_000, 5);
        let sq: Vec<f64> = ds.iter().map(|d| d.v[0] * d.v[0]).collect();
        let e = mc_mean(&sq, 5).unwrap();
        assert!((e.mean - 1.0 / 3.0).abs() < 3.0 * e.stderr);
    }

    #[test]
    fn sampling_is_reproducible() {
        assert_eq!(sample_directions(3, 50, 9), sample_directions(3, 50, 9));
        assert_ne!(sample_directions(3, 50, 9), sample_directions(3, 50, 10));
        assert_eq!(sample_subspaces(3, 2, 20, 1).unwrap(), sample_subspaces(3, 2, 20, 1).unwrap());
    }

    #[test]
    fn subspace_extremes() {
        let s = sample_subspaces(3, 0, 1, 1).unwrap();
        assert!(s[0].frame.is_empty());
        assert_eq!(s[0].complement.len(), 3);
        let s = sample_subspaces(3, 3, 1, 1).unwrap();
        assert_eq!(s[0].frame.len(), 3);
        assert!(s[0].complement.is_empty());
        assert!(sample_subspaces(2, 3, 1, 1).is_err());
    }

    #[test]
    fn subspace_frames_are_orthonormal() {
        for s in sample_subspaces(4, 2, 100, 2).unwrap() {
            let all: Vec<&Vec<f64>> = s.frame.iter().chain(&s.complement).collect();
            for (i, a) in all.iter().enumerate() {
                for (j, b) in all.iter().enumerate() {
                    let d: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((d - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn plane_normals_are_uniform_over_octants() {
        // χ² with 7 degrees of freedom; 18.48 is the 99% quantile
        let n = 10_000;
        let mut counts = [0usize; 8];
        for s in sample_subspaces(3, 2, n, 11).unwrap() {
            let u = &s.complement[0];
            let o = usize::from(u[0] > 0.0) | usize::from(u[1] > 0.0) << 1 | usize::from(u[2] > 0.0) << 2;
            counts[o] += 1;
        }
        let e = n as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 18.48, "chi2 = {chi2}");
    }

    #[test]
    fn ball_and_sphere_volumes() {
        let c = |k| constants(k);
        assert!((c(1).s - 2.0 * PI).abs() < 1e-14);
        assert!((c(2).b - PI).abs() < 1e-14);
        assert!((c(1).b - 2.0).abs() < 1e-14);
        assert!((c(2).s - 4.0 * PI).abs() < 1e-13);
        assert_eq!(c(0).b, 1.0);
        assert_eq!(c(0).s, 2.0);
        assert!((c(3).b - 4.0 * PI / 3.0).abs() < 1e-13);
        // s_{k-1} = k b_k
        for k in 1..8 {
            assert!((c(k - 1).s - f64::from(k) * c(k).b).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_and_stderr() {
        let e = mc_mean(&[2.5; 10], 0).unwrap();
        assert_eq!((e.mean, e.stderr), (2.5, 0.0));
        let alt: Vec<f64> = (0..100).map(|i| f64::from(i % 2)).collect();
        assert_eq!(mc_mean(&alt, 0).unwrap().mean, 0.5);
        let mut rng = rng_for(1, 2, 3);
        let u: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        let e = mc_mean(&u, 1).unwrap();
        assert!((e.mean - 0.5).abs() < 3.0 * e.stderr);
        assert!(mc_mean(&[1.0], 0).is_err());
    }

    #[test]
    fn stderr_halves_when_samples_quadruple() {
        let est = |n: usize, s: u64| {
            let mut rng = rng_for(s, 7, 0);
            let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            mc_mean(&u, s).unwrap().stderr
        };
        for s in 0..5 {
            let r = est(1000, s) / est(4000, s + 100);
            assert!((r - 2.0).abs() < 0.4, "ratio {r}");
        }
    }

    #[test]
    fn rotation_leaves_statistics_unchanged() {
        // mean of |v_1| over directions versus over rotated directions
        let ds = sample_directions(3, 4000, 21);
        let rot = random_subspace(3, 3, &mut rng_for(99, 0, 0)).frame;
        let a: Vec<f64> = ds.iter().map(|d| d.v[0].abs()).collect();
        let b: Vec<f64> = ds
            .iter()
            .map(|d| rot[0].iter().zip(&d.v).map(|(r, x)| r * x).sum::<f64>().abs())
            .collect();
        let (ea, eb) = (mc_mean(&a, 0).unwrap(), mc_mean(&b, 0).unwrap());
        assert!((ea.mean - eb.mean).abs() < 3.0 * ea.stderr.hypot(eb.stderr));
    }
}
