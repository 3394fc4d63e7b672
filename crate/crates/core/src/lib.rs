//! Numerical toolkit for extended reproducing kernels, radial fractional
//! derivatives and weighted harmonic Bergman-Besov and Bloch spaces on the
//! unit ball of R^n.

pub mod calculus;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod quadrature;
pub mod spaces;
pub mod special;

pub use calculus::{Atom, AtomKind, CompiledExpansion, DiffPair, HarmonicExpansion, Symmetry};
pub use error::{Error, Result};
pub use kernel::{
    gamma_coeff, gamma_ratio, kernel_eval, kernel_growth_exponent_probe, KernelCoefficient, KernelEval,
    PochhammerRatio, SeriesTable, SeriesTol,
};
pub use quadrature::{
    gauss_jacobi, gauss_legendre, integrate_ball, sup_norm_probe, BallQuadrature, GaussRule, ShellDecomposition,
    ShellIntegral, ShellOptions, ShellValues, SphereRule, SupProbe, Verdict,
};
pub use spaces::{
    besov_norm, besov_shells, bloch_norm, distance_estimate, inclusion_predicate, level_set, little_bloch_test,
    membership_kernel_atom, reproduce, reproduce_batch, shell_grid, split, BlochProfile, DistanceReport, Inclusion,
    LevelSetReport, LittleBlochVerdict, Membership, SpaceKind, SpaceSpec, SplitResult,
};
pub use special::{
    dim_spherical_harmonics, gegenbauer, pochhammer, weight_constant, zonal, BallPoint, Dimension,
    WeightConstant,
};
