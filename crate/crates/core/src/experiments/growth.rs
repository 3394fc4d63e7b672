//! Growth of `I(r) = int |R_alpha(r zeta, y)|^p (1 - |y|^2)^d dnu(y)` as
//! `r -> 1`. With `w = p (n + alpha) - (n + d)` the integral stays bounded
//! for `w < 0`, grows like `log 1/(1 - r^2)` for `w = 0` and like
//! `(1 - r^2)^{-w}` for `w > 0`.
//!
//! The radii are `1 - r_j = 2^{-j}`. All radii share one shell grid graded
//! towards `zeta`, so quadrature errors largely cancel in the increments
//! `I(r_j) - I(r_{j-1})`. Against `L = log 1/(1 - r^2)` the log increments
//! have slope `w` for `w > 0`, slope zero for `w = 0`, and a negative slope
//! (`max(w, -1)`, the smooth part of `I` contributes integer powers) for
//! `w < 0`. Only the power regime compares the slope with `w`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, HasOutcome};
use super::{Experiment, Outcome};
use crate::error::{Error, Result};
use crate::kernel::{PochhammerRatio, SeriesTable, SeriesTol};
use crate::quadrature::{ShellDecomposition, ShellOptions, MAX_SHELLS};
use crate::special::{BallPoint, Dimension};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthCombo {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub d: f64,
}

impl GrowthCombo {
    pub fn w(&self) -> f64 {
        let n = self.n as f64;
        self.p * (n + self.alpha) - (n + self.d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub combos: Vec<GrowthCombo>,
    /// First and last radius index `j` in `1 - r = 2^{-j}`.
    pub j_min: usize,
    pub j_max: usize,
    /// Number of trailing radii used in the fit.
    pub fit_points: usize,
    /// Slopes within this distance of zero count as logarithmic.
    pub margin: f64,
    /// Shells beyond `j_max` in the integration grid.
    pub extra_depth: usize,
    /// Relative truncation tolerance for kernel values.
    pub tol: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        let c = |n, p, alpha, d| GrowthCombo { n, p, alpha, d };
        Self {
            combos: vec![
                c(2, 1.0, -0.5, 1.0),
                c(3, 1.0, 0.0, 0.5),
                c(2, 2.0, -1.0, 0.5),
                c(2, 1.0, 0.0, 0.0),
                c(3, 1.0, 0.0, 0.0),
                c(2, 2.0, -1.0, 0.0),
                c(3, 2.0, 0.0, 1.0),
                c(2, 1.0, 1.0, 0.0),
                c(2, 2.0, 0.0, 1.0),
            ],
            j_min: 3,
            j_max: 12,
            fit_points: 8,
            margin: 0.1,
            extra_depth: 3,
            tol: 1e-13,
        }
    }
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<()> {
        for c in &self.combos {
            Dimension::new(c.n)?;
            if !(c.p > 0.0 && c.d > -1.0 && c.alpha.is_finite()) {
                return Err(Error::Admissibility(format!("growth combo needs p > 0 and d > -1, got {c:?}")));
            }
        }
        if self.j_min == 0 || self.j_max < self.j_min || self.j_max + self.extra_depth > MAX_SHELLS {
            return Err(Error::InvalidInput("radius indices must satisfy 1 <= j_min <= j_max".into()));
        }
        if self.fit_points < 3 || self.fit_points > self.j_max - self.j_min {
            return Err(Error::InvalidInput("fit needs at least 3 increments".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Bounded,
    Log,
    Power,
}

impl Regime {
    pub fn from_exponent(w: f64, margin: f64) -> Self {
        if w > margin {
            Regime::Power
        } else if w < -margin {
            Regime::Bounded
        } else {
            Regime::Log
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusPoint {
    pub j: usize,
    pub r: f64,
    /// `log 1/(1 - r^2)`.
    pub l: f64,
    pub integral: f64,
    /// `I(r_j) - I(r_{j-1})`; absent for the first radius.
    pub increment: Option<f64>,
}

/// RMS residuals of `I` on the fitted radii for the three growth models
/// `a`, `a + b L` and `a + b exp(w L)` (the last with the fitted slope).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelResiduals {
    pub bounded: f64,
    pub log: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeFit {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub d: f64,
    pub w: f64,
    pub radii: Vec<RadiusPoint>,
    pub slope: f64,
    /// RMS residual of the log-increment line.
    pub residual: f64,
    pub models: ModelResiduals,
    pub verdict: Regime,
    pub expected: Regime,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl HasOutcome for RegimeFit {
    fn outcome(&self) -> Outcome {
        self.outcome
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b, rms residual)`.
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    (a, b, (rss / m).sqrt())
}

fn integrals(c: &GrowthCombo, cfg: &GrowthConfig) -> Result<Vec<RadiusPoint>> {
    let n = Dimension::new(c.n)?;
    let zeta = BallPoint::north(n);
    let mut opts = ShellOptions::new(cfg.j_max + cfg.extra_depth).focused(zeta.coords().to_vec(), true);
    opts.cap_exponent = Some(c.d);
    let grid = ShellDecomposition::new(n, opts)?;
    let r_max = 1.0 - 0.5f64.powi(cfg.j_max as i32);
    let mut table = SeriesTable::new(n, PochhammerRatio::gamma(n, c.alpha))?;
    let tol = SeriesTol { abs: 0.0, rel: cfg.tol };
    table.prepare(r_max, tol)?;
    let mut out: Vec<RadiusPoint> = Vec::new();
    for j in cfg.j_min..=cfg.j_max {
        let delta = 0.5f64.powi(j as i32);
        let r = 1.0 - delta;
        let x: Vec<f64> = zeta.coords().iter().map(|z| r * z).collect();
        let integral = grid.integrate_shells(|y| Ok(table.eval(&x, y, tol)?.value.abs().powf(c.p)), c.d)?.total();
        let l = -(delta * (1.0 + r)).ln();
        let increment = out.last().map(|prev| integral - prev.integral);
        out.push(RadiusPoint { j, r, l, integral, increment });
    }
    Ok(out)
}

fn fit(c: &GrowthCombo, cfg: &GrowthConfig) -> RegimeFit {
    let w = c.w();
    let expected = Regime::from_exponent(w, 0.0);
    let mut row = RegimeFit {
        n: c.n,
        p: c.p,
        alpha: c.alpha,
        d: c.d,
        w,
        radii: Vec::new(),
        slope: f64::NAN,
        residual: f64::NAN,
        models: ModelResiduals { bounded: f64::NAN, log: f64::NAN, power: f64::NAN },
        verdict: Regime::Log,
        expected,
        outcome: Outcome::Inconclusive,
        error: None,
    };
    match integrals(c, cfg) {
        Ok(radii) => row.radii = radii,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    }
    let tail = &row.radii[row.radii.len() - cfg.fit_points..];
    if tail.iter().any(|p| !matches!(p.increment, Some(v) if v > 0.0)) {
        row.error = Some("non-positive increment; the fit needs monotone integrals".into());
        return row;
    }
    let l: Vec<f64> = tail.iter().map(|p| p.l).collect();
    let log_inc: Vec<f64> = tail.iter().map(|p| p.increment.unwrap_or(f64::NAN).ln()).collect();
    let (_, slope, residual) = fit_line(&l, &log_inc);
    row.slope = slope;
    row.residual = residual;
    let vals: Vec<f64> = tail.iter().map(|p| p.integral).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let bounded = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
    let (_, _, log) = fit_line(&l, &vals);
    let e: Vec<f64> = l.iter().map(|x| (slope * x).exp()).collect();
    let (_, _, power) = fit_line(&e, &vals);
    row.models = ModelResiduals { bounded, log, power };
    row.verdict = Regime::from_exponent(slope, cfg.margin);
    let slope_ok = expected != Regime::Power || (slope - w).abs() <= cfg.margin;
    row.outcome = Outcome::from_bool(row.verdict == expected && slope_ok);
    row
}

pub fn run_kernel_growth(cfg: &GrowthConfig) -> Result<ExperimentReport<GrowthConfig, RegimeFit>> {
    cfg.validate()?;
    let rows = cfg.combos.par_iter().map(|c| fit(c, cfg)).collect();
    Ok(ExperimentReport::new(Experiment::KernelGrowth, cfg.clone(), rows))
}
