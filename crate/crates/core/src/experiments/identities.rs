//! Identity checks.
//!
//! * Coefficient level, on random pairs: `D^{-t}_{s+t} D^t_s = I` and
//!   `D^t_s R_s = R_{s+t}`.
//! * Reproducing formula: for seeded polynomials and interior-pole kernel
//!   atoms, `(1/V_{s+t}) int R_s(x, y) (1 - |y|^2)^{s+t} D^t_s f(y) dnu(y)`
//!   must match `f(x)` at probes with `|x| <= 0.9`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, HasOutcome};
use super::{Experiment, Outcome};
use crate::calculus::{Atom, AtomKind, DiffPair, HarmonicExpansion};
use crate::error::{Error, Result};
use crate::kernel::{gamma_coeff, gamma_ratio, PochhammerRatio};
use crate::quadrature::BallQuadrature;
use crate::spaces::reproduce_batch;
use crate::special::{norm, BallPoint, Dimension};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityConfig {
    pub dimensions: Vec<usize>,
    pub reproducing: ReproducingConfig,
    /// Number of random `(s, t)` pairs per dimension.
    pub pairs: usize,
    /// Pairs are drawn uniformly from `[-range, range]^2`.
    pub range: f64,
    pub max_layer: usize,
    pub seed: u64,
    /// Relative tolerance on every layer.
    pub tol: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            dimensions: vec![2, 3],
            reproducing: ReproducingConfig::default(),
            pairs: 50,
            range: 3.0,
            max_layer: 200,
            seed: 1729,
            tol: 1e-12,
        }
    }
}

impl IdentityConfig {
    pub fn validate(&self) -> Result<()> {
        for &n in &self.dimensions {
            Dimension::new(n)?;
        }
        if !(self.range > 0.0 && self.range.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidInput("range and tol must be positive".into()));
        }
        self.reproducing.validate()
    }

    /// The random pairs, identical for every dimension.
    pub fn sample_pairs(&self) -> Vec<DiffPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.pairs)
            .map(|_| DiffPair::new(rng.gen_range(-self.range..=self.range), rng.gen_range(-self.range..=self.range)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub n: usize,
    pub s: f64,
    pub t: f64,
    /// `max_k |m_k(s, t) m_k(s + t, -t) - 1|`.
    pub inverse_error: f64,
    /// `max_k |gamma_k(s) m_k(s, t) - gamma_k(s + t)| / |gamma_k(s + t)|`.
    pub shift_error: f64,
    /// The symbolic product of the two multipliers cancels to one.
    pub symbolic_inverse: bool,
    /// Differentiating the kernel atom gives the shifted kernel atom.
    pub symbolic_shift: bool,
    pub outcome: Outcome,
}

impl HasOutcome for IdentityRow {
    fn outcome(&self) -> Outcome {
        self.outcome
    }
}

fn check_pair(n: Dimension, pair: DiffPair, max_layer: usize, tol: f64) -> IdentityRow {
    let DiffPair { s, t } = pair;
    let mut inverse_error: f64 = 0.0;
    let mut shift_error: f64 = 0.0;
    for k in 0..=max_layer {
        let round_trip = gamma_ratio(n, s, t, k) * gamma_ratio(n, s + t, -t, k);
        inverse_error = inverse_error.max((round_trip - 1.0).abs());
        let shifted = gamma_coeff(n, s, k).value * gamma_ratio(n, s, t, k);
        let target = gamma_coeff(n, s + t, k).value;
        shift_error = shift_error.max(((shifted - target) / target).abs());
    }
    let product = PochhammerRatio::multiplier(n, s, t).times(&PochhammerRatio::multiplier(n, s + t, -t));
    let symbolic_inverse = product.numer().is_empty() && product.denom().is_empty();
    let atom = HarmonicExpansion::single(n, Atom::kernel(s, BallPoint::north(n), 1.0)).expect("unit pole is valid");
    let symbolic_shift = match &atom.apply_d(pair).atoms()[0].kind {
        AtomKind::Kernel { s: shifted } => (shifted - (s + t)).abs() <= 1e-12 * (s + t).abs().max(1.0),
        _ => false,
    };
    let ok = inverse_error <= tol && shift_error <= tol && symbolic_inverse && symbolic_shift;
    IdentityRow { n: n.get(), s, t, inverse_error, shift_error, symbolic_inverse, symbolic_shift, outcome: Outcome::from_bool(ok) }
}

/// Coefficient identities for every dimension and sampled pair.
pub fn coefficient_rows(cfg: &IdentityConfig) -> Result<Vec<IdentityRow>> {
    cfg.validate()?;
    let pairs = cfg.sample_pairs();
    let jobs: Vec<(Dimension, DiffPair)> = cfg
        .dimensions
        .iter()
        .flat_map(|&n| pairs.iter().map(move |&p| (Dimension::new(n).expect("validated"), p)))
        .collect();
    Ok(jobs.par_iter().map(|&(n, p)| check_pair(n, p, cfg.max_layer, cfg.tol)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproducingConfig {
    pub dimensions: Vec<usize>,
    pub s: f64,
    pub t: f64,
    pub polynomials: usize,
    pub kernels: usize,
    /// Largest polynomial degree.
    pub max_degree: usize,
    /// Largest pole radius of the kernel atoms.
    pub max_pole_radius: f64,
    pub probes: usize,
    pub max_probe_radius: f64,
    pub radial_nodes: usize,
    pub sphere_degree: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for ReproducingConfig {
    fn default() -> Self {
        Self {
            dimensions: vec![2, 3],
            s: 0.0,
            t: 1.0,
            polynomials: 10,
            kernels: 5,
            max_degree: 8,
            max_pole_radius: 0.6,
            probes: 20,
            max_probe_radius: 0.9,
            radial_nodes: 24,
            sphere_degree: 240,
            seed: 4242,
            tol: 1e-6,
        }
    }
}

impl ReproducingConfig {
    pub fn validate(&self) -> Result<()> {
        for &n in &self.dimensions {
            Dimension::new(n)?;
        }
        if !(self.s + self.t > -1.0) {
            return Err(Error::Admissibility(format!("s + t = {} must exceed -1", self.s + self.t)));
        }
        if !(0.0..1.0).contains(&self.max_pole_radius) || !(0.0..1.0).contains(&self.max_probe_radius) {
            return Err(Error::InvalidInput("pole and probe radii must lie in [0, 1)".into()));
        }
        if self.radial_nodes == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidInput("reproducing check needs radial nodes and a positive tolerance".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproducingRow {
    pub n: usize,
    pub s: f64,
    pub t: f64,
    pub function: HarmonicExpansion,
    /// Largest `|reproduced - f|` over the probes.
    pub max_error: f64,
    /// Largest `|f|` over the probes.
    pub max_value: f64,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl HasOutcome for ReproducingRow {
    fn outcome(&self) -> Outcome {
        self.outcome
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let r = norm(&v);
        if r > 0.1 && r <= 1.0 {
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

fn point(rng: &mut ChaCha8Rng, n: Dimension, r: f64) -> BallPoint {
    let mut v = unit_vector(rng, n.get());
    v.iter_mut().for_each(|c| *c *= r);
    BallPoint::new(v).expect("point inside the closed ball")
}

/// Seeded test functions: sums of two or three zonal terms, then single
/// kernel atoms with interior poles.
pub fn reproducing_family(cfg: &ReproducingConfig, n: Dimension) -> Result<Vec<HarmonicExpansion>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ n.get() as u64);
    let mut out = Vec::new();
    for _ in 0..cfg.polynomials {
        let terms = rng.gen_range(2..=3);
        let atoms = (0..terms)
            .map(|_| Atom::zonal(rng.gen_range(0..=cfg.max_degree), point(&mut rng, n, 1.0), rng.gen_range(-1.0..=1.0)))
            .collect();
        out.push(HarmonicExpansion::new(n, atoms)?);
    }
    for _ in 0..cfg.kernels {
        let s = rng.gen_range(-4.0..=3.0);
        let r = rng.gen_range(0.2..=cfg.max_pole_radius.max(0.2));
        out.push(HarmonicExpansion::single(n, Atom::kernel(s, point(&mut rng, n, r), rng.gen_range(0.5..=1.5)))?);
    }
    Ok(out)
}

/// Probe points: the origin, one point at the largest radius, the rest at
/// seeded radii and directions.
pub fn reproducing_probes(cfg: &ReproducingConfig, n: Dimension) -> Vec<BallPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(97) ^ n.get() as u64);
    (0..cfg.probes)
        .map(|i| match i {
            0 => BallPoint::origin(n),
            1 => point(&mut rng, n, cfg.max_probe_radius),
            _ => {
                let r = rng.gen_range(0.0..=cfg.max_probe_radius);
                point(&mut rng, n, r)
            }
        })
        .collect()
}

pub fn reproducing_rows(cfg: &ReproducingConfig) -> Result<Vec<ReproducingRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.dimensions {
        let n = Dimension::new(n)?;
        let fs = reproducing_family(cfg, n)?;
        let probes = reproducing_probes(cfg, n);
        let q = BallQuadrature::with_orders(n, cfg.s + cfg.t, cfg.radial_nodes, cfg.sphere_degree)?;
        let reproduced = reproduce_batch(&fs, cfg.s, cfg.t, &probes, &q);
        for (i, f) in fs.into_iter().enumerate() {
            let mut row = ReproducingRow {
                n: n.get(),
                s: cfg.s,
                t: cfg.t,
                function: f,
                max_error: f64::NAN,
                max_value: f64::NAN,
                outcome: Outcome::Fail,
                error: None,
            };
            let exact = probes.iter().map(|x| row.function.evaluate(x, 1e-14)).collect::<Result<Vec<_>>>();
            match (reproduced.as_ref(), exact.as_ref()) {
                (Ok(values), Ok(exact)) => {
                    row.max_error = values[i].iter().zip(exact.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    row.max_value = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    row.outcome = Outcome::from_bool(row.max_error <= cfg.tol);
                }
                (Err(e), _) | (_, Err(e)) => row.error = Some(e.to_string()),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum IdentityEntry {
    Coefficients(IdentityRow),
    Reproducing(ReproducingRow),
}

impl HasOutcome for IdentityEntry {
    fn outcome(&self) -> Outcome {
        match self {
            IdentityEntry::Coefficients(r) => r.outcome,
            IdentityEntry::Reproducing(r) => r.outcome,
        }
    }
}

pub fn run_identities(cfg: &IdentityConfig) -> Result<ExperimentReport<IdentityConfig, IdentityEntry>> {
    let mut rows: Vec<IdentityEntry> = coefficient_rows(cfg)?.into_iter().map(IdentityEntry::Coefficients).collect();
    rows.extend(reproducing_rows(&cfg.reproducing)?.into_iter().map(IdentityEntry::Reproducing));
    Ok(ExperimentReport::new(Experiment::VerifyIdentities, cfg.clone(), rows))
}
