//! The test-function family and the little-Bloch inclusion check.
//!
//! Atoms in the manifest are placed relative to the Bloch exponent: a kernel
//! atom with `s_offset = o` is `R_{alpha - n + o}(., pole)`. Members of
//! `b^p_{p alpha - n}` are the polynomials, interior-pole kernels and
//! boundary kernels with negative offset; the designated non-member is the
//! boundary kernel with offset zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, HasOutcome};
use super::{Experiment, Outcome};
use crate::calculus::{Atom, DiffPair, HarmonicExpansion};
use crate::error::{Error, Result};
use crate::spaces::{default_bloch_pair, membership_kernel_atom, BlochProfile, LittleBlochVerdict, Membership};
use crate::special::{BallPoint, Dimension};

/// The checked-in family.
pub const DEFAULT_MANIFEST: &str = include_str!("../../data/family.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestKind {
    Zonal,
    Kernel,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestAtom {
    pub kind: ManifestKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Absolute kernel parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Kernel parameter relative to `alpha - n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_offset: Option<f64>,
    /// Pole at `radius (cos(angle) e_1 + sin(angle) e_2)`.
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub angle: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

impl ManifestAtom {
    pub fn build(&self, n: Dimension, alpha: f64) -> Result<Atom> {
        let pole = BallPoint::polar(n, self.radius, self.angle)?;
        match self.kind {
            ManifestKind::Zonal => {
                let k = self.k.ok_or_else(|| Error::InvalidInput("zonal manifest atom needs k".into()))?;
                if self.radius != 1.0 {
                    return Err(Error::InvalidInput("zonal manifest atoms live on the sphere".into()));
                }
                Ok(Atom::zonal(k, pole, self.weight))
            }
            ManifestKind::Kernel => {
                let s = match (self.s, self.s_offset) {
                    (Some(s), None) => s,
                    (None, Some(o)) => alpha - n.get() as f64 + o,
                    _ => return Err(Error::InvalidInput("kernel manifest atom needs exactly one of s, s_offset".into())),
                };
                Ok(Atom::kernel(s, pole, self.weight))
            }
        }
    }
}

/// A family function: atoms placed relative to `alpha`, or a literal
/// expansion used only in its own dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyMember {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<ManifestAtom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion: Option<HarmonicExpansion>,
}

impl FamilyMember {
    pub fn build(&self, n: Dimension, alpha: f64) -> Result<HarmonicExpansion> {
        match &self.expansion {
            Some(_) if !self.atoms.is_empty() => {
                Err(Error::InvalidInput(format!("family member {} has both atoms and an expansion", self.name)))
            }
            Some(f) if f.dimension() != n => Err(Error::InvalidInput(format!(
                "family member {} is given in dimension {}, not {}",
                self.name,
                f.dimension().get(),
                n.get()
            ))),
            Some(f) => Ok(f.clone()),
            None => HarmonicExpansion::new(n, self.atoms.iter().map(|a| a.build(n, alpha)).collect::<Result<_>>()?),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        match &self.expansion {
            Some(f) => f.is_polynomial(),
            None => self.atoms.iter().all(|a| a.kind == ManifestKind::Zonal),
        }
    }

    /// Whether the member can be built in dimension `n`.
    pub fn applies_to(&self, n: Dimension) -> bool {
        self.expansion.as_ref().map_or(true, |f| f.dimension() == n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyManifest {
    pub members: Vec<FamilyMember>,
    pub non_member: FamilyMember,
}

impl FamilyManifest {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad family manifest: {e}")))
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_MANIFEST).expect("checked-in manifest parses")
    }
}

/// Membership of `f` in `b^p_{p alpha - n}` by the kernel-atom predicate:
/// polynomials and interior poles are always in; every boundary kernel atom
/// must pass the predicate.
pub fn predicted_member(f: &HarmonicExpansion, p: f64, alpha: f64) -> Result<bool> {
    let n = f.dimension();
    let beta = p * alpha - n.get() as f64;
    for a in f.atoms().iter().filter(|a| a.weight != 0.0 && a.has_boundary_pole()) {
        match a.kind {
            crate::calculus::AtomKind::Kernel { s } => {
                if membership_kernel_atom(n, p, s, beta) == Membership::NonMember {
                    return Ok(false);
                }
            }
            _ => return Err(Error::UnsupportedPair("membership of general series atoms is not decided".into())),
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    pub dimensions: Vec<usize>,
    /// `(p, alpha)` pairs; the space is `b^p_{p alpha - n}` and the Bloch
    /// exponent is `alpha`.
    pub exponents: Vec<(f64, f64)>,
    /// Levels as fractions of the Bloch norm.
    pub epsilons: Vec<f64>,
    pub shells: usize,
    /// Inline manifest; the checked-in family when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<FamilyManifest>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            dimensions: vec![2, 3],
            exponents: vec![(1.0, 0.0), (1.0, 1.0), (2.0, 0.0), (2.0, 1.0)],
            epsilons: vec![0.5, 0.1, 0.02],
            shells: 20,
            manifest: None,
        }
    }
}

impl FamilyConfig {
    pub fn validate(&self) -> Result<()> {
        for &n in &self.dimensions {
            Dimension::new(n)?;
        }
        if self.exponents.iter().any(|&(p, a)| !(p >= 1.0 && p.is_finite() && a.is_finite())) {
            return Err(Error::InvalidInput("family exponents need p >= 1 and finite alpha".into()));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::InvalidInput("level fractions must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn manifest(&self) -> FamilyManifest {
        self.manifest.clone().unwrap_or_else(FamilyManifest::builtin)
    }

    /// Distinct Bloch exponents, in first-seen order.
    pub fn alphas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &(_, a) in &self.exponents {
            if !out.contains(&a) {
                out.push(a);
            }
        }
        out
    }
}

/// Profile pair for the family: `s = alpha - n`, so that the boundary atoms
/// differentiate into kernels exactly, and the default Bloch order.
pub fn family_pair(n: Dimension, alpha: f64) -> DiffPair {
    DiffPair::new(alpha - n.get() as f64, default_bloch_pair(alpha).t)
}

/// One family function with its Bloch profile.
#[derive(Debug, Clone)]
pub struct ProfiledFunction {
    pub n: Dimension,
    pub alpha: f64,
    pub name: String,
    pub designated_non_member: bool,
    pub polynomial: bool,
    pub function: HarmonicExpansion,
    pub profile: Result<BlochProfile>,
}

/// Bloch profiles of every family function for every `(n, alpha)`; they do
/// not depend on `p`.
#[derive(Debug, Clone)]
pub struct FamilyProfiles {
    pub entries: Vec<ProfiledFunction>,
}

impl FamilyProfiles {
    pub fn compute(cfg: &FamilyConfig) -> Result<Self> {
        cfg.validate()?;
        let manifest = cfg.manifest();
        let mut jobs = Vec::new();
        for &n in &cfg.dimensions {
            let n = Dimension::new(n)?;
            for alpha in cfg.alphas() {
                for m in manifest.members.iter().filter(|m| m.applies_to(n)) {
                    jobs.push((n, alpha, m, false));
                }
                jobs.push((n, alpha, &manifest.non_member, true));
            }
        }
        let entries = jobs
            .par_iter()
            .map(|&(n, alpha, m, non)| {
                let function = m.build(n, alpha)?;
                let profile = BlochProfile::for_function(&function, alpha, family_pair(n, alpha), cfg.shells);
                Ok(ProfiledFunction {
                    n,
                    alpha,
                    name: m.name.clone(),
                    designated_non_member: non,
                    polynomial: m.is_polynomial(),
                    function,
                    profile,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn for_exponent(&self, n: Dimension, alpha: f64) -> impl Iterator<Item = &ProfiledFunction> {
        self.entries.iter().filter(move |e| e.n == n && e.alpha == alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionRow {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    /// `p alpha - n`.
    pub beta: f64,
    pub name: String,
    pub member: bool,
    pub pair: DiffPair,
    pub bloch_norm: f64,
    pub shell_maxima: Vec<f64>,
    pub verdict: LittleBlochVerdict,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl HasOutcome for InclusionRow {
    fn outcome(&self) -> Outcome {
        self.outcome
    }
}

pub(crate) fn inclusion_rows(cfg: &FamilyConfig, profiles: &FamilyProfiles) -> Vec<InclusionRow> {
    let mut rows = Vec::new();
    for &n in &cfg.dimensions {
        let n = Dimension::new(n).expect("validated");
        for &(p, alpha) in &cfg.exponents {
            for e in profiles.for_exponent(n, alpha) {
                rows.push(inclusion_row(e, p));
            }
        }
    }
    rows
}

fn inclusion_row(e: &ProfiledFunction, p: f64) -> InclusionRow {
    let mut row = InclusionRow {
        n: e.n.get(),
        p,
        alpha: e.alpha,
        beta: p * e.alpha - e.n.get() as f64,
        name: e.name.clone(),
        member: false,
        pair: family_pair(e.n, e.alpha),
        bloch_norm: f64::NAN,
        shell_maxima: Vec::new(),
        verdict: LittleBlochVerdict::Inconclusive,
        outcome: Outcome::Inconclusive,
        error: None,
    };
    let member = match predicted_member(&e.function, p, e.alpha) {
        Ok(m) => m,
        Err(err) => {
            row.error = Some(err.to_string());
            return row;
        }
    };
    row.member = member;
    let profile = match &e.profile {
        Ok(pr) => pr,
        Err(err) => {
            row.error = Some(err.to_string());
            return row;
        }
    };
    row.bloch_norm = profile.sup();
    row.shell_maxima = profile.shell_maxima().to_vec();
    row.verdict = profile.little_bloch();
    let expected_ok = member != e.designated_non_member;
    row.outcome = match row.verdict {
        LittleBlochVerdict::Inconclusive => Outcome::Inconclusive,
        LittleBlochVerdict::Decaying => Outcome::from_bool(member && expected_ok),
        LittleBlochVerdict::NonDecaying => Outcome::from_bool(!member && expected_ok),
    };
    row
}

pub fn run_inclusion(cfg: &FamilyConfig) -> Result<ExperimentReport<FamilyConfig, InclusionRow>> {
    let profiles = FamilyProfiles::compute(cfg)?;
    Ok(ExperimentReport::new(Experiment::Inclusion, cfg.clone(), inclusion_rows(cfg, &profiles)))
}
