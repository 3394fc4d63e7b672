//! Kernel atoms `R_s(., zeta)` against `b^p_beta`: the exact predicate
//! versus the shell verdict of `int |D^t_s R_s|^p (1 - |x|^2)^{beta + p t}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, HasOutcome, ShellReport};
use super::{Experiment, Outcome};
use crate::calculus::{Atom, DiffPair, HarmonicExpansion};
use crate::error::{Error, Result};
use crate::quadrature::Verdict;
use crate::spaces::{besov_shells, membership_kernel_atom, shell_grid, Membership, SpaceKind, SpaceSpec};
use crate::special::{BallPoint, Dimension};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MembershipConfig {
    pub n: usize,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub beta: Vec<f64>,
    /// Cells with `|beta + n - p (n + s)| < margin` are skipped.
    pub margin: f64,
    pub shells: usize,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        Self {
            n: 2,
            p: vec![1.0, 2.0, 3.0],
            s: vec![-1.5, -1.0, -0.5],
            beta: vec![-2.0, 0.5, 1.75],
            margin: 0.1,
            shells: 12,
        }
    }
}

impl MembershipConfig {
    pub fn validate(&self) -> Result<()> {
        Dimension::new(self.n)?;
        if self.p.iter().any(|&p| !(p >= 1.0 && p.is_finite())) {
            return Err(Error::InvalidInput("membership exponents must satisfy p >= 1".into()));
        }
        if self.s.iter().chain(&self.beta).any(|v| !v.is_finite()) || !(self.margin >= 0.0) {
            return Err(Error::InvalidInput("membership parameters must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipRow {
    pub n: usize,
    pub p: f64,
    pub s: f64,
    pub beta: f64,
    /// `beta + n - p (n + s)`; positive exactly for members.
    pub margin: f64,
    pub predicate: Membership,
    pub numerical: Verdict,
    pub report: Option<ShellReport>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl HasOutcome for MembershipRow {
    fn outcome(&self) -> Outcome {
        self.outcome
    }
}

/// Smallest integer order `t >= 1` with `beta + p t > -1`.
pub(crate) fn membership_order(p: f64, beta: f64) -> f64 {
    let mut t = 1.0;
    while beta + p * t <= -1.0 {
        t += 1.0;
    }
    t
}

fn cell(n: Dimension, p: f64, s: f64, beta: f64, shells: usize) -> MembershipRow {
    let nf = n.get() as f64;
    let predicate = membership_kernel_atom(n, p, s, beta);
    let mut row = MembershipRow {
        n: n.get(),
        p,
        s,
        beta,
        margin: beta + nf - p * (nf + s),
        predicate,
        numerical: Verdict::Inconclusive,
        report: None,
        outcome: Outcome::Inconclusive,
        error: None,
    };
    // differentiate at the atom's own subscript so D^t_s R_s = R_{s+t} exactly
    let pair = DiffPair::new(s, membership_order(p, beta));
    let run = || -> Result<ShellReport> {
        let spec = SpaceSpec::new(SpaceKind::BergmanBesov { p, alpha: beta }, pair)?;
        let f = HarmonicExpansion::single(n, Atom::kernel(s, BallPoint::north(n), 1.0))?;
        let grid = shell_grid(&f, pair, shells)?;
        let integral = besov_shells(&f, &spec, &grid)?;
        Ok(ShellReport::from_integral(spec.kind, pair, &integral))
    };
    match run() {
        Ok(report) => {
            row.numerical = report.verdict;
            row.outcome = match (report.verdict, predicate) {
                (Verdict::Inconclusive, _) => Outcome::Inconclusive,
                (Verdict::Finite, Membership::Member) | (Verdict::Divergent, Membership::NonMember) => Outcome::Pass,
                _ => Outcome::Fail,
            };
            row.report = Some(report);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

pub fn run_membership(cfg: &MembershipConfig) -> Result<ExperimentReport<MembershipConfig, MembershipRow>> {
    cfg.validate()?;
    let n = Dimension::new(cfg.n)?;
    let nf = cfg.n as f64;
    let mut cells = Vec::new();
    for &p in &cfg.p {
        for &s in &cfg.s {
            for &beta in &cfg.beta {
                if (beta + nf - p * (nf + s)).abs() >= cfg.margin {
                    cells.push((p, s, beta));
                }
            }
        }
    }
    let rows = cells.par_iter().map(|&(p, s, beta)| cell(n, p, s, beta, cfg.shells)).collect();
    Ok(ExperimentReport::new(Experiment::Membership, cfg.clone(), rows))
}
