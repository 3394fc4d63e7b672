//! Level-set characterisations of the little Bloch space.
//!
//! For each family function and each level `epsilon = c * ||f||` the level
//! set is integrated against `(1 - |x|^2)^{-n} dnu`; a decaying profile must
//! give finite volume at every level, and the critical kernel must give
//! infinite volume at the smallest level. The window check uses a larger
//! order `t0` with `alpha + t0 > n` and the weight `beta - p alpha` with
//! `beta = p alpha - 1`: the critical kernel's level sets must then have
//! finite volume while staying infinite under `(1 - |x|^2)^{-n}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{family_pair, inclusion_rows, FamilyConfig, FamilyProfiles, ProfiledFunction};
use super::report::{ExperimentReport, HasOutcome, ShellReport};
use super::{Experiment, Outcome};
use crate::calculus::DiffPair;
use crate::error::Result;
use crate::quadrature::Verdict;
use crate::spaces::{BlochProfile, LittleBlochVerdict};
use crate::special::Dimension;

pub type LevelsetConfig = FamilyConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelsetRow {
    pub n: usize,
    pub alpha: f64,
    pub name: String,
    pub designated_non_member: bool,
    pub little_bloch: LittleBlochVerdict,
    pub bloch_norm: f64,
    pub levels: Vec<ShellReport>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// The `t0` window check for one `(n, p, alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t0: f64,
    pub bloch_norm: f64,
    /// Level sets against `(1 - |x|^2)^{beta - p alpha}`.
    pub window: Vec<ShellReport>,
    /// Level sets against `(1 - |x|^2)^{-n}`.
    pub hyperbolic: Vec<ShellReport>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Rows of both checks, kept in one report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum LevelsetEntry {
    Equivalence(LevelsetRow),
    Window(WindowRow),
}

impl HasOutcome for LevelsetEntry {
    fn outcome(&self) -> Outcome {
        match self {
            LevelsetEntry::Equivalence(r) => r.outcome,
            LevelsetEntry::Window(r) => r.outcome,
        }
    }
}

fn level_reports(profile: &BlochProfile, fractions: &[f64], weight: f64) -> Result<Vec<ShellReport>> {
    let sup = profile.sup();
    fractions
        .iter()
        .map(|&c| Ok(ShellReport::from_level_set(profile.alpha, &profile.level_set(c * sup, weight)?)))
        .collect()
}

fn smallest_level(reports: &[ShellReport]) -> Option<&ShellReport> {
    reports.iter().min_by(|a, b| a.epsilon.unwrap_or(0.0).total_cmp(&b.epsilon.unwrap_or(0.0)))
}

fn equivalence_row(e: &ProfiledFunction, fractions: &[f64]) -> LevelsetRow {
    let mut row = LevelsetRow {
        n: e.n.get(),
        alpha: e.alpha,
        name: e.name.clone(),
        designated_non_member: e.designated_non_member,
        little_bloch: LittleBlochVerdict::Inconclusive,
        bloch_norm: f64::NAN,
        levels: Vec::new(),
        outcome: Outcome::Inconclusive,
        error: None,
    };
    let profile = match &e.profile {
        Ok(p) => p,
        Err(err) => {
            row.error = Some(err.to_string());
            return row;
        }
    };
    row.little_bloch = profile.little_bloch();
    row.bloch_norm = profile.sup();
    if row.bloch_norm == 0.0 {
        // f = 0: every level set is empty
        row.outcome = Outcome::from_bool(row.little_bloch == LittleBlochVerdict::Decaying);
        return row;
    }
    match level_reports(profile, fractions, -(e.n.get() as f64)) {
        Ok(levels) => row.levels = levels,
        Err(err) => {
            row.error = Some(err.to_string());
            return row;
        }
    }
    let verdicts: Vec<Verdict> = row.levels.iter().map(|r| r.verdict).collect();
    let all_finite = verdicts.iter().all(|&v| v == Verdict::Finite);
    let smallest_divergent = smallest_level(&row.levels).is_some_and(|r| r.verdict == Verdict::Divergent);
    row.outcome = match row.little_bloch {
        LittleBlochVerdict::Inconclusive => Outcome::Inconclusive,
        LittleBlochVerdict::Decaying if all_finite => Outcome::Pass,
        LittleBlochVerdict::NonDecaying if smallest_divergent => Outcome::Pass,
        _ if verdicts.contains(&Verdict::Inconclusive) => Outcome::Inconclusive,
        _ => Outcome::Fail,
    };
    if e.designated_non_member && row.outcome == Outcome::Pass && row.little_bloch != LittleBlochVerdict::NonDecaying {
        row.outcome = Outcome::Fail;
    }
    row
}

/// Smallest integer order with `alpha + t0 > n`.
pub fn window_order(n: Dimension, alpha: f64) -> f64 {
    let nf = n.get() as f64;
    let mut t = 1.0f64.max((nf - alpha).floor());
    while alpha + t <= nf {
        t += 1.0;
    }
    t
}

fn window_rows(cfg: &FamilyConfig, profiles: &FamilyProfiles) -> Vec<WindowRow> {
    let mut jobs = Vec::new();
    for &n in &cfg.dimensions {
        let n = Dimension::new(n).expect("validated");
        for alpha in cfg.alphas() {
            if let Some(e) = profiles.for_exponent(n, alpha).find(|e| e.designated_non_member) {
                jobs.push((n, alpha, e));
            }
        }
    }
    let computed: Vec<Result<BlochProfile>> = jobs
        .par_iter()
        .map(|&(n, alpha, e)| {
            let pair = DiffPair::new(family_pair(n, alpha).s, window_order(n, alpha));
            BlochProfile::for_function(&e.function, alpha, pair, cfg.shells)
        })
        .collect();
    let mut rows = Vec::new();
    for &n in &cfg.dimensions {
        let n = Dimension::new(n).expect("validated");
        for &(p, alpha) in &cfg.exponents {
            let Some(i) = jobs.iter().position(|j| j.0 == n && j.1 == alpha) else {
                continue;
            };
            rows.push(window_row(n, p, alpha, &computed[i], &cfg.epsilons));
        }
    }
    rows
}

fn window_row(n: Dimension, p: f64, alpha: f64, profile: &Result<BlochProfile>, fractions: &[f64]) -> WindowRow {
    let nf = n.get() as f64;
    let beta = p * alpha - 1.0;
    let mut row = WindowRow {
        n: n.get(),
        p,
        alpha,
        beta,
        t0: window_order(n, alpha),
        bloch_norm: f64::NAN,
        window: Vec::new(),
        hyperbolic: Vec::new(),
        outcome: Outcome::Inconclusive,
        error: None,
    };
    let profile = match profile {
        Ok(p) => p,
        Err(err) => {
            row.error = Some(err.to_string());
            return row;
        }
    };
    row.bloch_norm = profile.sup();
    let run = || -> Result<(Vec<ShellReport>, Vec<ShellReport>)> {
        Ok((level_reports(profile, fractions, beta - p * alpha)?, level_reports(profile, fractions, -nf)?))
    };
    match run() {
        Ok((window, hyperbolic)) => {
            row.window = window;
            row.hyperbolic = hyperbolic;
        }
        Err(err) => {
            row.error = Some(err.to_string());
            return row;
        }
    }
    let window_finite = row.window.iter().all(|r| r.verdict == Verdict::Finite);
    let still_divergent = smallest_level(&row.hyperbolic).is_some_and(|r| r.verdict == Verdict::Divergent);
    let any_inconclusive = row.window.iter().chain(&row.hyperbolic).any(|r| r.verdict == Verdict::Inconclusive);
    row.outcome = if window_finite && still_divergent {
        Outcome::Pass
    } else if any_inconclusive {
        Outcome::Inconclusive
    } else {
        Outcome::Fail
    };
    row
}

pub(crate) fn levelset_entries(cfg: &FamilyConfig, profiles: &FamilyProfiles) -> Vec<LevelsetEntry> {
    let mut out: Vec<LevelsetEntry> = profiles
        .entries
        .iter()
        .map(|e| LevelsetEntry::Equivalence(equivalence_row(e, &cfg.epsilons)))
        .collect();
    out.extend(window_rows(cfg, profiles).into_iter().map(LevelsetEntry::Window));
    out
}

pub fn run_levelset(cfg: &LevelsetConfig) -> Result<ExperimentReport<LevelsetConfig, LevelsetEntry>> {
    let profiles = FamilyProfiles::compute(cfg)?;
    Ok(ExperimentReport::new(Experiment::Levelset, cfg.clone(), levelset_entries(cfg, &profiles)))
}

/// Inclusion and level-set reports from one set of profiles.
pub fn run_family(
    cfg: &FamilyConfig,
) -> Result<(
    ExperimentReport<FamilyConfig, super::family::InclusionRow>,
    ExperimentReport<FamilyConfig, LevelsetEntry>,
)> {
    let profiles = FamilyProfiles::compute(cfg)?;
    Ok((
        ExperimentReport::new(Experiment::Inclusion, cfg.clone(), inclusion_rows(cfg, &profiles)),
        ExperimentReport::new(Experiment::Levelset, cfg.clone(), levelset_entries(cfg, &profiles)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_orders() {
        let d = |n| Dimension::new(n).unwrap();
        assert_eq!(window_order(d(2), 0.0), 3.0);
        assert_eq!(window_order(d(2), 1.0), 2.0);
        assert_eq!(window_order(d(3), 0.5), 3.0);
        assert_eq!(window_order(d(3), 5.0), 1.0);
    }
}
