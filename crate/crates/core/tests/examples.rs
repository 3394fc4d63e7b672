//! Worked examples across modules: kernels near the pole, quadrature
//! refinement, and the space-level operations on kernel atoms.

use approx::assert_relative_eq;

use hball::quadrature::integrate_ball;
use hball::spaces::{besov_shells, default_besov_pair};
use hball::{
    bloch_norm, inclusion_predicate, kernel_eval, kernel_growth_exponent_probe, level_set, little_bloch_test,
    reproduce, shell_grid, Atom, BallPoint, BallQuadrature, DiffPair, Dimension, HarmonicExpansion, Inclusion,
    LittleBlochVerdict, SpaceSpec, Verdict,
};

fn dim(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

#[test]
fn kernel_is_harmonic_in_its_first_argument() {
    let h = 1e-3;
    for n in [2, 3] {
        let y = BallPoint::polar(dim(n), 0.5, 0.7).unwrap();
        for alpha in [-3.5, -1.0, 0.0, 1.5] {
            for &(r, th) in &[(0.1, 0.0), (0.4, 2.0), (0.6, -1.0)] {
                let x = BallPoint::polar(dim(n), r, th).unwrap();
                let value = |c: &[f64]| kernel_eval(dim(n), alpha, &BallPoint::new(c.to_vec()).unwrap(), &y, 1e-14).unwrap().value;
                let centre = value(x.coords());
                let mut lap = 0.0;
                for i in 0..n {
                    let mut plus = x.coords().to_vec();
                    let mut minus = plus.clone();
                    plus[i] += h;
                    minus[i] -= h;
                    lap += (value(&plus) - 2.0 * centre + value(&minus)) / (h * h);
                }
                assert!(lap.abs() <= 1e-4 * centre.abs().max(1.0), "n={n} alpha={alpha} lap={lap}");
            }
        }
    }
}

#[test]
fn kernel_grows_monotonically_towards_its_pole() {
    for n in [2, 3] {
        let zeta = BallPoint::north(dim(n));
        for alpha in [-0.5, 0.0, 2.0] {
            let radii: Vec<f64> = (0..20).map(|i| 0.5 + 0.49 * i as f64 / 19.0).collect();
            let values = kernel_growth_exponent_probe(dim(n), alpha, &zeta, &radii).unwrap();
            assert!(values.windows(2).all(|w| w[1].1 > w[0].1), "n={n} alpha={alpha}");
        }
    }
}

#[test]
fn ball_quadrature_is_stable_under_refinement() {
    for n in [2, 3] {
        let f = HarmonicExpansion::new(
            dim(n),
            vec![
                Atom::kernel(0.5, BallPoint::polar(dim(n), 0.5, 1.0).unwrap(), 1.0),
                Atom::zonal(4, BallPoint::north(dim(n)), 0.2),
            ],
        )
        .unwrap();
        let g = |x: &[f64]| f.evaluate(&BallPoint::new(x.to_vec()).unwrap(), 1e-14).map(|v| v * v);
        for gamma in [0.0, 1.5] {
            let coarse = integrate_ball(&BallQuadrature::new(dim(n), gamma, 40).unwrap(), g).unwrap();
            let fine = integrate_ball(&BallQuadrature::new(dim(n), gamma, 80).unwrap(), g).unwrap();
            assert!((coarse - fine).abs() < 1e-8, "n={n} gamma={gamma}: {coarse} vs {fine}");
        }
    }
}

#[test]
fn reproducing_formula_returns_constants() {
    for n in [2, 3] {
        let one = HarmonicExpansion::constant(dim(n), 1.0);
        let q = BallQuadrature::with_orders(dim(n), 1.0, 24, 240).unwrap();
        for &(r, th) in &[(0.0, 0.0), (0.5, 1.0), (0.9, 2.5)] {
            let x = BallPoint::polar(dim(n), r, th).unwrap();
            assert_relative_eq!(reproduce(&one, 0.0, 1.0, &x, &q).unwrap(), 1.0, max_relative = 1e-6);
        }
    }
}

#[test]
fn critical_kernel_atom_is_bloch_but_not_little_bloch() {
    let n = dim(2);
    let alpha = 1.0;
    let f = HarmonicExpansion::single(n, Atom::kernel(alpha - 2.0, BallPoint::north(n), 1.0)).unwrap();
    let spec = SpaceSpec::bloch(alpha).unwrap().with_pair(DiffPair::new(alpha - 2.0, 2.0)).unwrap();
    let grid = shell_grid(&f, spec.pair, 20).unwrap();
    let norm = bloch_norm(&f, &spec, &grid).unwrap();
    assert!(norm.is_finite() && norm > 0.0);
    assert_eq!(little_bloch_test(&f, &spec, &grid).unwrap(), LittleBlochVerdict::NonDecaying);
    let report = level_set(&f, alpha, spec.pair, 0.1 * norm, &grid, -2.0).unwrap();
    assert_eq!(report.verdict, Verdict::Divergent);
}

#[test]
fn kernel_atom_in_its_besov_space_has_stable_shells() {
    // n = 2, p = 1: R_s lies in b^1_beta when beta + 2 > 2 + s
    let n = dim(2);
    let (s, beta) = (-1.0, 0.5);
    let f = HarmonicExpansion::single(n, Atom::kernel(s, BallPoint::north(n), 1.0)).unwrap();
    let pair = DiffPair::new(s, default_besov_pair(1.0, beta).t);
    let spec = SpaceSpec::besov(1.0, beta).unwrap().with_pair(pair).unwrap();
    let shallow = besov_shells(&f, &spec, &shell_grid(&f, pair, 6).unwrap()).unwrap();
    let deep = besov_shells(&f, &spec, &shell_grid(&f, pair, 12).unwrap()).unwrap();
    assert_eq!(deep.verdict, Verdict::Finite);
    assert!((deep.total() - shallow.total()).abs() <= 0.05 * deep.total());
}

#[test]
fn besov_inclusion_thresholds() {
    // b^2_0 in b^1_beta exactly for beta > -1/2, and b^1_0 in b^2_beta for beta >= n
    for n in [2, 3] {
        let nf = n as f64;
        for i in -20..=20 {
            let beta = i as f64 * 0.1;
            let a = inclusion_predicate(dim(n), &SpaceSpec::besov(2.0, 0.0).unwrap(), &SpaceSpec::besov(1.0, beta).unwrap());
            assert_eq!(a.unwrap() == Inclusion::Included, beta > -0.5 + 1e-9, "beta={beta}");
            let target = nf + beta;
            let b = inclusion_predicate(dim(n), &SpaceSpec::besov(1.0, 0.0).unwrap(), &SpaceSpec::besov(2.0, target).unwrap());
            assert_eq!(b.unwrap() == Inclusion::Included, target >= nf - 1e-9, "target={target}");
        }
    }
}
