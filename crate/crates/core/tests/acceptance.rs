//! Acceptance gate. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits non-zero if any criterion fails.
//!
//! Expected values come from oracles written here (direct Pochhammer
//! products, closed-form Beta integrals, trigonometric and Legendre
//! harmonics) rather than from the library paths under test.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hball::experiments::{
    coefficient_rows, reproducing_rows, run_distance, run_family, run_kernel_growth, run_membership, DistanceClass,
    DistanceConfig, FamilyConfig, GrowthConfig, HasOutcome, IdentityConfig, LevelsetEntry, MembershipConfig, Outcome,
    Regime, ReproducingConfig,
};
use hball::{
    gamma_coeff, gamma_ratio, gauss_jacobi, weight_constant, zonal, BallPoint, BallQuadrature, Dimension,
    LittleBlochVerdict, Membership, SphereRule, Verdict,
};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

struct Check {
    id: u8,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn dim(n: usize) -> Dimension {
    Dimension::new(n).expect("supported dimension")
}

fn all_pass<R: HasOutcome>(rows: &[R]) -> (usize, usize) {
    (rows.iter().filter(|r| r.outcome() == Outcome::Pass).count(), rows.len())
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `gamma_k(alpha)` as a running product of the two branch formulas.
fn gamma_oracle(n: usize, alpha: f64, k: usize) -> f64 {
    let h = n as f64 / 2.0;
    let mut v = 1.0;
    for j in 0..k {
        let j = j as f64;
        if alpha > -(1.0 + h) {
            v *= (1.0 + h + alpha + j) / (h + j);
        } else {
            v *= (1.0 + j) * (1.0 + j) / ((1.0 - h - alpha + j) * (h + j));
        }
    }
    v
}

/// Limit of `gamma_k(alpha) / k^{alpha + 1}` from the Gamma-function form.
fn stirling_constant(n: usize, alpha: f64) -> f64 {
    let h = n as f64 / 2.0;
    if alpha > -(1.0 + h) {
        (ln_gamma(h) - ln_gamma(1.0 + h + alpha)).exp()
    } else {
        (ln_gamma(1.0 - h - alpha) + ln_gamma(h)).exp()
    }
}

fn kernel_identities() -> (bool, String) {
    let cfg = IdentityConfig::default();
    let rows = match coefficient_rows(&cfg) {
        Ok(r) => r,
        Err(e) => return (false, format!("error: {e}")),
    };
    let (ok, total) = all_pass(&rows);
    let worst = rows.iter().map(|r| r.inverse_error.max(r.shift_error)).fold(0.0, f64::max);

    // independent check of the multiplier against the product oracle
    let mut oracle_err: f64 = 0.0;
    for &n in &cfg.dimensions {
        for pair in cfg.sample_pairs() {
            for k in 0..=cfg.max_layer {
                let expected = gamma_oracle(n, pair.s + pair.t, k) / gamma_oracle(n, pair.s, k);
                oracle_err = oracle_err.max(rel_err(gamma_ratio(dim(n), pair.s, pair.t, k), expected));
            }
        }
    }
    let passed = ok == total && total == cfg.pairs * cfg.dimensions.len() && worst <= 1e-12 && oracle_err <= 1e-12;
    (passed, format!("{ok}/{total} pairs, identity err {worst:.1e}, oracle err {oracle_err:.1e}"))
}

fn reproducing_formula() -> (bool, String) {
    let cfg = ReproducingConfig::default();
    match reproducing_rows(&cfg) {
        Ok(rows) => {
            let (ok, total) = all_pass(&rows);
            let worst = rows.iter().map(|r| r.max_error).fold(0.0, f64::max);
            let expected = (cfg.polynomials + cfg.kernels) * cfg.dimensions.len();
            let passed = ok == total && total == expected && worst <= 1e-6;
            (passed, format!("{ok}/{total} functions x {} probes, max |error| {worst:.1e}", cfg.probes))
        }
        Err(e) => (false, format!("error: {e}")),
    }
}

fn growth_trichotomy() -> (bool, String) {
    let cfg = GrowthConfig::default();
    match run_kernel_growth(&cfg) {
        Ok(report) => {
            let rows = &report.rows;
            let (ok, total) = all_pass(rows);
            let regimes = [Regime::Bounded, Regime::Log, Regime::Power];
            let spans = regimes.iter().all(|g| rows.iter().any(|r| r.expected == *g));
            let slope_dev = rows
                .iter()
                .filter(|r| r.expected == Regime::Power)
                .map(|r| (r.slope - r.w).abs())
                .fold(0.0, f64::max);
            let passed = ok == 9 && total == 9 && spans && slope_dev <= 0.1;
            (passed, format!("{ok}/{total} regimes, max power-slope deviation {slope_dev:.3}"))
        }
        Err(e) => (false, format!("error: {e}")),
    }
}

fn membership_grid() -> (bool, String) {
    let cfg = MembershipConfig::default();
    match run_membership(&cfg) {
        Ok(report) => {
            let rows = &report.rows;
            let (ok, total) = all_pass(rows);
            // predicate re-derived from the integrability exponent
            let n = cfg.n as f64;
            let predicate_ok = rows.iter().all(|r| {
                let member = r.beta + n > r.p * (n + r.s);
                (r.predicate == Membership::Member) == member
            });
            let passed = ok == 27 && total == 27 && predicate_ok;
            (passed, format!("{ok}/{total} cells agree"))
        }
        Err(e) => (false, format!("error: {e}")),
    }
}

struct FamilyChecks {
    inclusion: (bool, String),
    equivalence: (bool, String),
    window: (bool, String),
}

fn family_checks() -> FamilyChecks {
    let cfg = FamilyConfig::default();
    let (inc, lev) = match run_family(&cfg) {
        Ok(r) => r,
        Err(e) => {
            let fail = (false, format!("error: {e}"));
            return FamilyChecks { inclusion: fail.clone(), equivalence: fail.clone(), window: fail };
        }
    };

    let (ok, total) = all_pass(&inc.rows);
    let expected_rows = cfg.dimensions.len() * cfg.exponents.len() * (cfg.manifest().members.len() + 1);
    let verdicts_ok = inc.rows.iter().all(|r| {
        let want = if r.member { LittleBlochVerdict::Decaying } else { LittleBlochVerdict::NonDecaying };
        r.verdict == want
    });
    let inclusion = (
        ok == total && total == expected_rows && verdicts_ok,
        format!("{ok}/{total} (n, p, alpha, function) verdicts"),
    );

    let mut eq = (0, 0);
    let mut critical_divergent = true;
    let mut win = (0, 0);
    for e in &lev.rows {
        match e {
            LevelsetEntry::Equivalence(r) => {
                eq.1 += 1;
                if r.outcome == Outcome::Pass {
                    eq.0 += 1;
                }
                if r.designated_non_member {
                    let smallest = r.levels.iter().min_by(|a, b| a.epsilon.partial_cmp(&b.epsilon).expect("finite"));
                    critical_divergent &= smallest.is_some_and(|s| s.verdict == Verdict::Divergent);
                }
                let members_finite = r.designated_non_member || r.levels.iter().all(|l| l.verdict == Verdict::Finite);
                critical_divergent &= members_finite;
            }
            LevelsetEntry::Window(r) => {
                win.1 += 1;
                let window_finite = r.window.iter().all(|s| s.verdict == Verdict::Finite);
                let hyperbolic_divergent = r.hyperbolic.iter().all(|s| s.verdict == Verdict::Divergent);
                if r.outcome == Outcome::Pass && window_finite && hyperbolic_divergent && !r.window.is_empty() {
                    win.0 += 1;
                }
            }
        }
    }
    let equivalence = (
        eq.0 == eq.1 && eq.1 > 0 && critical_divergent,
        format!("{}/{} functions over {} levels", eq.0, eq.1, cfg.epsilons.len()),
    );
    let window = (
        win.0 == win.1 && win.1 == cfg.dimensions.len() * cfg.exponents.len(),
        format!("{}/{} (n, p, alpha) windows", win.0, win.1),
    );
    FamilyChecks { inclusion, equivalence, window }
}

fn quadrature_exactness() -> (bool, String) {
    // Beta moments of the Jacobi rules
    let mut beta_err: f64 = 0.0;
    for &(a, b) in &[(0.0, 0.0), (0.5, -0.5), (-0.5, 0.0), (2.0, 1.5), (7.25, 0.5), (-0.9, 3.0)] {
        let m = 12;
        let rule = gauss_jacobi(m, a, b).expect("valid rule");
        for j in 0..2 * m {
            let got = rule.integrate(|u| u.powi(j as i32));
            let want = ln_beta(j as f64 + b + 1.0, a + 1.0).exp();
            beta_err = beta_err.max(rel_err(got, want));
        }
    }
    // radial moments of the ball rule and the weight constant
    for n in [2, 3] {
        for gamma in [-0.5, 0.0, 1.0, 2.5] {
            let q = BallQuadrature::new(dim(n), gamma, 30).expect("valid rule");
            for j in 0..=15 {
                let got = q.integrate(|x, _| Ok(x.iter().map(|v| v * v).sum::<f64>().powi(j))).expect("finite");
                let h = n as f64 / 2.0;
                let want = h * ln_beta(h + j as f64, gamma + 1.0).exp();
                beta_err = beta_err.max(rel_err(got, want));
            }
            beta_err = beta_err.max(rel_err(weight_constant(dim(n), gamma).value, q.total_weight()));
        }
    }

    // orthogonality of trigonometric and Legendre harmonics on the sphere
    let mut orth_err: f64 = 0.0;
    let s2 = SphereRule::new(dim(2), 24).expect("valid rule");
    for j in 0..=12 {
        for k in 0..=12 {
            let angle = |x: &[f64]| x[1].atan2(x[0]);
            let cc = s2.integrate(|x| (j as f64 * angle(x)).cos() * (k as f64 * angle(x)).cos());
            let ss = s2.integrate(|x| (j as f64 * angle(x)).sin() * (k as f64 * angle(x)).sin());
            let cs = s2.integrate(|x| (j as f64 * angle(x)).cos() * (k as f64 * angle(x)).sin());
            let want_cc = match (j, k) {
                (0, 0) => 1.0,
                _ if j == k => 0.5,
                _ => 0.0,
            };
            let want_ss = if j == k && j > 0 { 0.5 } else { 0.0 };
            orth_err = orth_err.max((cc - want_cc).abs()).max((ss - want_ss).abs()).max(cs.abs());
        }
    }
    let legendre = |k: usize, z: f64| {
        let (mut p0, mut p1) = (1.0, z);
        if k == 0 {
            return p0;
        }
        for m in 1..k {
            let m = m as f64;
            let p2 = ((2.0 * m + 1.0) * z * p1 - m * p0) / (m + 1.0);
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let s3 = SphereRule::new(dim(3), 24).expect("valid rule");
    for j in 0..=12 {
        for k in 0..=12 {
            let got = s3.integrate(|x| legendre(j, x[2]) * legendre(k, x[2]));
            let want = if j == k { 1.0 / (2.0 * k as f64 + 1.0) } else { 0.0 };
            orth_err = orth_err.max((got - want).abs());
        }
    }
    // reproducing property of the zonal harmonics
    for n in [2, 3] {
        let s = SphereRule::new(dim(n), 24).expect("valid rule");
        let a = BallPoint::polar(dim(n), 1.0, 0.3).expect("on sphere");
        let b = BallPoint::polar(dim(n), 1.0, 2.1).expect("on sphere");
        for j in 0..=12 {
            for k in 0..=12 {
                let got = s.integrate(|y| {
                    let y = BallPoint::new(y.to_vec()).expect("on sphere");
                    zonal(dim(n), j, &a, &y) * zonal(dim(n), k, &b, &y)
                });
                let want = if j == k { zonal(dim(n), k, &a, &b) } else { 0.0 };
                orth_err = orth_err.max((got - want).abs() / (1.0 + want.abs()));
            }
        }
    }
    let passed = beta_err <= 1e-12 && orth_err <= 1e-10;
    (passed, format!("Beta-moment err {beta_err:.1e}, orthogonality err {orth_err:.1e}"))
}

fn stirling_asymptotics() -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut worst_limit: f64 = 0.0;
    let (mut upper, mut lower) = (false, false);
    for n in [2, 3] {
        for alpha in [-5.0, -2.0, 0.0, 3.0] {
            if alpha > -(1.0 + n as f64 / 2.0) {
                upper = true;
            } else {
                lower = true;
            }
            let scaled = |k: usize| gamma_coeff(dim(n), alpha, k).value / (k as f64).powf(alpha + 1.0);
            let (a, b) = (scaled(1000), scaled(4000));
            worst = worst.max(rel_err(a, b));
            worst_limit = worst_limit.max(rel_err(b, stirling_constant(n, alpha)));
        }
    }
    let passed = worst <= 0.05 && upper && lower;
    (passed, format!("max drift 1000 -> 4000 {worst:.2e}, vs limit {worst_limit:.2e}, both branches {}", upper && lower))
}

fn distance_estimator() -> (bool, String) {
    let cfg = DistanceConfig::default();
    match run_distance(&cfg) {
        Ok(report) => {
            let rows = &report.rows;
            let (ok, total) = all_pass(rows);
            let poly_ok = rows
                .iter()
                .filter(|r| r.class == DistanceClass::Polynomial)
                .all(|r| r.p0.estimate == 0.0 && r.p0.width() <= 1e-3 * r.p0.norm);
            let critical: Vec<_> = rows.iter().filter(|r| r.class == DistanceClass::Critical).collect();
            let critical_ok = !critical.is_empty()
                && critical.iter().all(|r| r.p0.estimate > 0.0 && r.p0.estimate == r.p1.estimate);
            let smallest = critical.iter().map(|r| r.p0.estimate / r.p0.norm).fold(f64::INFINITY, f64::min);
            (
                ok == total && poly_ok && critical_ok,
                format!("{ok}/{total} rows, smallest critical distance {smallest:.3} x norm"),
            )
        }
        Err(e) => (false, format!("error: {e}")),
    }
}

fn timed(id: u8, name: &'static str, f: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (passed, detail) = f();
    Check { id, name, passed, detail, elapsed: start.elapsed() }
}

fn main() -> ExitCode {
    let mut checks = vec![
        timed(1, "kernel identities", kernel_identities),
        timed(2, "reproducing formula", reproducing_formula),
        timed(3, "kernel growth trichotomy", growth_trichotomy),
        timed(4, "kernel-atom membership", membership_grid),
    ];

    let start = Instant::now();
    let family = family_checks();
    let shared = start.elapsed();
    checks.push(Check { id: 5, name: "little Bloch inclusion", passed: family.inclusion.0, detail: family.inclusion.1, elapsed: shared });
    checks.push(Check { id: 6, name: "level-set equivalence", passed: family.equivalence.0, detail: family.equivalence.1, elapsed: shared });
    checks.push(Check { id: 7, name: "level-set window", passed: family.window.0, detail: family.window.1, elapsed: shared });

    checks.push(timed(8, "quadrature exactness", quadrature_exactness));
    checks.push(timed(9, "Stirling asymptotics", stirling_asymptotics));
    checks.push(timed(10, "distance estimator", distance_estimator));

    // runtime budgets, where one is set
    let budget = |id: u8| match id {
        1 => Some(10.0),
        2 => Some(120.0),
        3 | 4 => Some(300.0),
        _ => None,
    };
    for c in &mut checks {
        if let Some(limit) = budget(c.id) {
            if c.elapsed.as_secs_f64() > limit {
                c.passed = false;
                c.detail.push_str(&format!(", over the {limit:.0} s budget"));
            }
        }
    }

    checks.sort_by_key(|c| c.id);
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {:>2} {:<26} {} ({:.1} s)", c.id, c.name, c.detail, c.elapsed.as_secs_f64());
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
