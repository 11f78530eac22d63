use num_rational::BigRational;
use proptest::prelude::*;

use singulab::integrate::{mc_mean, random_subspace, rng_for};
use singulab::poly::{parse_poly, Interval, IntervalBox, Polynomial};
use singulab::solver::{isolate_roots, SolveOptions, SquareSystem};

const VARS: [&str; 3] = ["x", "y", "z"];

fn small_rational() -> impl Strategy<Value = BigRational> {
    (-20i64..=20, 1i64..=8).prop_map(|(p, q)| BigRational::new(p.into(), q.into()))
}

fn polynomial(nvars: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..4, nvars), small_rational()), 0..6)
        .prop_map(move |terms| Polynomial::from_terms(nvars, terms))
}

fn interval_box(nvars: usize) -> impl Strategy<Value = IntervalBox> {
    prop::collection::vec((-2.0f64..2.0, 0.0f64..1.5), nvars)
        .prop_map(|sides| IntervalBox::new(sides.into_iter().map(|(lo, w)| Interval::new(lo, lo + w)).collect()))
}

proptest! {
    #[test]
    fn interval_evaluation_encloses_point_values(
        p in polynomial(3),
        bx in interval_box(3),
        t in prop::collection::vec(0.0f64..=1.0, 3),
    ) {
        let x: Vec<f64> = (0..3)
            .map(|i| (bx[i].lo + t[i] * (bx[i].hi - bx[i].lo)).clamp(bx[i].lo, bx[i].hi))
            .collect();
        let enclosure = p.eval_interval(&bx).unwrap();
        let exact = p.eval_exact(&x.iter().map(|&v| BigRational::from_float(v).unwrap()).collect::<Vec<_>>()).unwrap();
        let lo = BigRational::from_float(enclosure.lo).unwrap();
        let hi = BigRational::from_float(enclosure.hi).unwrap();
        prop_assert!(lo <= exact && exact <= hi, "{} not in {}", exact, enclosure);
    }

    #[test]
    fn interval_arithmetic_is_inclusion_monotone(
        a in (-5.0f64..5.0, 0.0f64..3.0),
        b in (-5.0f64..5.0, 0.0f64..3.0),
        s in 0.0f64..=1.0,
        u in 0.0f64..=1.0,
    ) {
        let ia = Interval::new(a.0, a.0 + a.1);
        let ib = Interval::new(b.0, b.0 + b.1);
        let x = a.0 + s * a.1;
        let y = b.0 + u * b.1;
        let (xq, yq) = (BigRational::from_float(x).unwrap(), BigRational::from_float(y).unwrap());
        let inside = |iv: Interval, q: BigRational| {
            BigRational::from_float(iv.lo).unwrap() <= q && q <= BigRational::from_float(iv.hi).unwrap()
        };
        prop_assert!(inside(ia + ib, &xq + &yq));
        prop_assert!(inside(ia - ib, &xq - &yq));
        prop_assert!(inside(ia * ib, &xq * &yq));
        prop_assert!(inside(ia.powi(3), &xq * &xq * &xq));
    }

    #[test]
    fn printed_polynomials_parse_back(p in polynomial(3)) {
        let text = p.to_expr(&VARS);
        prop_assert_eq!(parse_poly(&text, &VARS).unwrap(), p);
    }

    #[test]
    fn solver_finds_exactly_the_planted_roots(
        a in -0.9f64..0.9,
        b in -0.9f64..0.9,
        c in -2.0f64..2.0,
        d in -0.5f64..0.5,
    ) {
        prop_assume!((a - b).abs() > 1e-3);
        // (x - a)(x - b) = 0, y = c x + d: two known roots
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let lin = |k: f64| Polynomial::constant_f64(2, k);
        let f1 = &(&x - &lin(a)) * &(&x - &lin(b));
        let f2 = &(&y - &(&lin(c) * &x)) - &lin(d);
        let sys = SquareSystem::new(vec![f1, f2]).unwrap();
        let domain = IntervalBox::cube(2, 1.0);
        let report = isolate_roots(&sys, &domain, &SolveOptions::default());
        let planted: Vec<[f64; 2]> = [a, b]
            .iter()
            .map(|&r| [r, c * r + d])
            .filter(|p| p[1].abs() < 1.0 - 1e-6)
            .collect();
        for r in report.roots.iter().filter(|r| r.certified) {
            prop_assert!(planted.iter().any(|p| (r.bx.mid()[0] - p[0]).abs() < 1e-6 && (r.bx.mid()[1] - p[1]).abs() < 1e-6),
                "spurious root at {:?}", r.bx.mid());
        }
        if report.is_complete() {
            for p in &planted {
                prop_assert!(report.roots.iter().any(|r| r.bx.contains_point(p) || (r.bx.mid()[0] - p[0]).abs() < 1e-9 && (r.bx.mid()[1] - p[1]).abs() < 1e-9),
                    "missed root {:?}", p);
            }
        }
    }

    #[test]
    fn random_subspaces_are_orthonormal_splittings(n in 2usize..5, seed in any::<u64>(), k_frac in 0.0f64..1.0) {
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let mut rng = rng_for(seed, 3, 0);
        let s = random_subspace(n, k, &mut rng);
        let all: Vec<&Vec<f64>> = s.frame.iter().chain(s.complement.iter()).collect();
        prop_assert_eq!(all.len(), n);
        for (i, u) in all.iter().enumerate() {
            for (j, v) in all.iter().enumerate() {
                let d: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_of_constant_samples_has_zero_error(c in -10.0f64..10.0, n in 2usize..50) {
        let e = mc_mean(&vec![c; n], 0).unwrap();
        prop_assert!((e.mean - c).abs() < 1e-12);
        prop_assert!(e.stderr < 1e-12);
    }
}
