//! Verification experiments. Each experiment reads a config (every field
//! has a default), runs its combos on the rayon pool, and returns a report
//! whose rows are in config order.

mod distance;
mod family;
mod growth;
mod identities;
mod levelset;
mod membership;
pub mod report;

use serde::{Deserialize, Serialize};

pub use distance::{run_distance, DistanceClass, DistanceConfig, DistanceRow};
pub use family::{
    family_pair, predicted_member, run_inclusion, FamilyConfig, FamilyManifest, FamilyMember, FamilyProfiles,
    InclusionRow, ManifestAtom, ManifestKind, ProfiledFunction, DEFAULT_MANIFEST,
};
pub use growth::{run_kernel_growth, GrowthCombo, GrowthConfig, ModelResiduals, RadiusPoint, Regime, RegimeFit};
pub use identities::{
    coefficient_rows, reproducing_family, reproducing_probes, reproducing_rows, run_identities, IdentityConfig,
    IdentityEntry, IdentityRow, ReproducingConfig, ReproducingRow,
};
pub use levelset::{run_family, run_levelset, window_order, LevelsetConfig, LevelsetEntry, LevelsetRow, WindowRow};
pub use membership::{run_membership, MembershipConfig, MembershipRow};
pub use report::{ExperimentReport, HasOutcome, ShellReport, ShellRow, Summary};

/// Pass/fail status of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    /// Worst of two outcomes: a failure beats an inconclusive result.
    pub fn and(self, other: Self) -> Self {
        use Outcome::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

/// Experiment names as used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    KernelGrowth,
    Membership,
    Inclusion,
    Levelset,
    Distance,
    VerifyIdentities,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::KernelGrowth => "kernel-growth",
            Experiment::Membership => "membership",
            Experiment::Inclusion => "inclusion",
            Experiment::Levelset => "levelset",
            Experiment::Distance => "distance",
            Experiment::VerifyIdentities => "verify-identities",
        }
    }
}
