use proptest::prelude::*;

use hball::experiments::{GrowthCombo, Regime};
use hball::{
    besov_norm, dim_spherical_harmonics, gamma_coeff, inclusion_predicate, membership_kernel_atom, shell_grid, zonal,
    Atom, BallPoint, BallQuadrature, BlochProfile, DiffPair, Dimension, HarmonicExpansion, Inclusion, Membership,
    SpaceSpec,
};

fn dim(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

fn point(n: usize, r: f64, theta: f64) -> BallPoint {
    BallPoint::polar(dim(n), r, theta).unwrap()
}

/// A polynomial plus an interior kernel atom.
fn sample_function(n: usize, k: usize, theta: f64, s: f64, rho: f64) -> HarmonicExpansion {
    HarmonicExpansion::new(
        dim(n),
        vec![Atom::zonal(k, point(n, 1.0, theta), 0.75), Atom::kernel(s, point(n, rho, -theta), -0.5)],
    )
    .unwrap()
}

fn layers_close(a: &HarmonicExpansion, b: &HarmonicExpansion, max_k: usize, tol: f64) -> bool {
    (0..=max_k).all(|k| {
        let (la, lb) = (a.homogeneous_coefficient(k), b.homogeneous_coefficient(k));
        la.len() == lb.len()
            && la.iter().zip(&lb).all(|((pa, ca), (pb, cb))| {
                pa == pb && (ca - cb).abs() <= tol * ca.abs().max(cb.abs()).max(f64::MIN_POSITIVE)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coefficients_are_positive(n in 2usize..7, alpha in -10.0f64..10.0, k in 0usize..2000) {
        let v = gamma_coeff(dim(n), alpha, k).value;
        prop_assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn d_has_a_two_sided_inverse(
        n in 2usize..4, s in -3.0f64..3.0, t in -3.0f64..3.0,
        k in 0usize..6, theta in 0.0f64..6.3, rho in 0.0f64..0.9,
    ) {
        let f = sample_function(n, k, theta, s, rho);
        let pair = DiffPair::new(s, t);
        let there_and_back = f.apply_d(pair).apply_d(pair.inverse());
        prop_assert!(layers_close(&f, &there_and_back, 60, 1e-12));
        let back_and_there = f.apply_d(pair.inverse()).apply_d(pair);
        prop_assert!(layers_close(&f, &back_and_there, 60, 1e-12));
    }

    #[test]
    fn d_is_linear(
        n in 2usize..4, s in -2.0f64..2.0, t in -2.0f64..2.0,
        a in -3.0f64..3.0, b in -3.0f64..3.0, r in 0.0f64..0.5, phi in 0.0f64..6.3,
    ) {
        let f = sample_function(n, 2, 0.4, s, 0.3);
        let g = sample_function(n, 3, 1.9, s - 1.0, 0.6);
        let pair = DiffPair::new(s, t);
        let x = point(n, r, phi);
        let lhs = f.scaled(a).plus(&g.scaled(b)).unwrap().apply_d(pair).evaluate(&x, 1e-14).unwrap();
        let rhs = a * f.apply_d(pair).evaluate(&x, 1e-14).unwrap() + b * g.apply_d(pair).evaluate(&x, 1e-14).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn zonal_is_symmetric_and_bounded(
        n in 2usize..5, k in 0usize..40,
        r1 in 0.0f64..1.0, r2 in 0.0f64..1.0, t1 in 0.0f64..6.3, t2 in 0.0f64..6.3,
    ) {
        let (x, y) = (point(n, r1, t1), point(n, r2, t2));
        let (a, b) = (zonal(dim(n), k, &x, &y), zonal(dim(n), k, &y, &x));
        prop_assert_eq!(a, b);
        let h = dim_spherical_harmonics(dim(n), k) as f64;
        prop_assert!(a.abs() <= h * (r1 * r2).powi(k as i32) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn besov_norm_is_homogeneous(
        n in 2usize..4, c in -5.0f64..5.0, k in 0usize..5, theta in 0.0f64..6.3,
    ) {
        let spec = SpaceSpec::besov(2.0, 0.0).unwrap();
        let q = BallQuadrature::new(dim(n), spec.alpha() + 2.0 * spec.pair.t, 30).unwrap();
        let f = HarmonicExpansion::new(dim(n), vec![
            Atom::zonal(k, point(n, 1.0, theta), 1.0),
            Atom::zonal(k + 1, point(n, 1.0, -theta), 0.5),
        ]).unwrap();
        let base = besov_norm(&f, &spec, &q).unwrap();
        let scaled = besov_norm(&f.scaled(c), &spec, &q).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-13 * base.max(1.0));
    }

    #[test]
    fn membership_is_monotone_in_beta(
        n in 2usize..5, p in 1.0f64..4.0, s in -3.0f64..3.0, beta in -5.0f64..5.0, step in 0.0f64..3.0,
    ) {
        if membership_kernel_atom(dim(n), p, s, beta) == Membership::Member {
            prop_assert_eq!(membership_kernel_atom(dim(n), p, s, beta + step), Membership::Member);
        }
    }

    #[test]
    fn besov_embeds_in_bloch(n in 2usize..4, p in 1.0f64..4.0, alpha in -0.5f64..3.0) {
        let from = SpaceSpec::besov(p, p * alpha - n as f64).unwrap();
        let to = SpaceSpec::bloch(alpha).unwrap();
        prop_assert_eq!(inclusion_predicate(dim(n), &from, &to).unwrap(), Inclusion::Included);
    }

    #[test]
    fn growth_regime_follows_the_sign_of_w(
        n in 2usize..4, p in 0.5f64..3.0, alpha in -2.0f64..2.0, d in -0.9f64..2.0,
    ) {
        let c = GrowthCombo { n, p, alpha, d };
        let w = c.w();
        let regime = Regime::from_exponent(w, 0.0);
        prop_assert_eq!(regime == Regime::Power, w > 0.0);
        prop_assert_eq!(regime == Regime::Bounded, w < 0.0);
    }

    #[test]
    fn expansion_json_round_trips(
        n in 2usize..4, k in 0usize..8, theta in 0.0f64..6.3, s in -4.0f64..4.0, rho in 0.0f64..1.0,
    ) {
        let f = sample_function(n, k, theta, s, rho);
        let text = serde_json::to_string(&f).unwrap();
        let back: HarmonicExpansion = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn level_sets_shrink_as_the_level_grows(
        k in 1usize..6, theta in 0.0f64..6.3, lo in 0.01f64..0.9, gap in 0.0f64..0.5,
    ) {
        let n = dim(2);
        let f = HarmonicExpansion::new(n, vec![
            Atom::zonal(k, point(2, 1.0, theta), 1.0),
            Atom::zonal(0, BallPoint::north(n), 0.3),
        ]).unwrap();
        let alpha = 0.5;
        let pair = DiffPair::new(alpha - 2.0, 1.0);
        let profile = BlochProfile::compute(&f, alpha, pair, shell_grid(&f, pair, 8).unwrap()).unwrap();
        let norm = profile.sup();
        let (small, large) = (profile.indicator(lo * norm), profile.indicator((lo + gap) * norm));
        for (a, b) in small.iter().flatten().zip(large.iter().flatten()) {
            prop_assert!(!*b || *a);
        }
    }
}
