//! Bergman-Besov and weighted Bloch spaces: norms, little-Bloch detection,
//! level sets, membership and inclusion predicates, the reproducing formula,
//! the splitting `f = f1 + f2` and the level-set distance estimate.
//!
//! Norms use `I^t_s f = (1 - |x|^2)^t D^t_s f`:
//! * `b^p_alpha`: `(1/V_alpha int |I^t_s f|^p (1 - |x|^2)^alpha dnu)^{1/p}`, needs `alpha + p t > -1`;
//! * `b^inf_alpha`: `sup (1 - |x|^2)^alpha |I^t_s f|`, needs `alpha + t > 0`.
//!
//! Everything near the boundary is judged on a [`ShellDecomposition`]:
//! the weighted derivative `(1 - |x|^2)^{alpha + t} |D^t_s f|` is sampled once
//! per function (a [`BlochProfile`]) and reused for suprema, level sets and
//! the distance bisection.

use serde::{Deserialize, Serialize};

use crate::calculus::{DiffPair, HarmonicExpansion, Symmetry};
use crate::error::{Error, Result};
use crate::kernel::{PochhammerRatio, SeriesTable, SeriesTol};
use crate::quadrature::{
    fitted_ratio, BallQuadrature, ShellDecomposition, ShellIntegral, ShellOptions, ShellValues, SupProbe, Verdict,
    MAX_SHELLS, VERDICT_WINDOW,
};
use crate::special::{dot, weight_constant, BallPoint, Dimension};

/// Truncation rule for derivatives sampled on shell grids.
pub const GRID_TOL: SeriesTol = SeriesTol { abs: 1e-10, rel: 0.0 };

/// Relative slack in exponent comparisons, so that boundary cases built
/// from rounded arithmetic (`(p alpha - n + n) / p`) land on the boundary.
pub const EXPONENT_SLACK: f64 = 1e-12;

fn slack(a: f64, b: f64) -> f64 {
    EXPONENT_SLACK * a.abs().max(b.abs()).max(1.0)
}

/// `b > a` by more than the slack.
fn clearly_greater(b: f64, a: f64) -> bool {
    b - a > slack(a, b)
}

/// `a <= b` up to the slack.
fn at_most(a: f64, b: f64) -> bool {
    a - b <= slack(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    BergmanBesov { p: f64, alpha: f64 },
    Bloch { alpha: f64 },
    LittleBloch { alpha: f64 },
}

/// A space together with the differentiation pair used for its norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    #[serde(flatten)]
    pub kind: SpaceKind,
    pub pair: DiffPair,
}

/// Smallest nonnegative integer order with `alpha + p t > -1`, subscript `alpha + t`.
pub fn default_besov_pair(p: f64, alpha: f64) -> DiffPair {
    let t = (((-1.0 - alpha) / p).ceil() + 1.0).max(0.0);
    DiffPair::new(alpha + t, t)
}

/// Order `max(1, ceil(-alpha) + 1)`, subscript `alpha + t`.
pub fn default_bloch_pair(alpha: f64) -> DiffPair {
    let t = ((-alpha).ceil() + 1.0).max(1.0);
    DiffPair::new(alpha + t, t)
}

impl SpaceSpec {
    pub fn besov(p: f64, alpha: f64) -> Result<Self> {
        Self::new(SpaceKind::BergmanBesov { p, alpha }, default_besov_pair(p, alpha))
    }

    pub fn bloch(alpha: f64) -> Result<Self> {
        Self::new(SpaceKind::Bloch { alpha }, default_bloch_pair(alpha))
    }

    pub fn little_bloch(alpha: f64) -> Result<Self> {
        Self::new(SpaceKind::LittleBloch { alpha }, default_bloch_pair(alpha))
    }

    pub fn new(kind: SpaceKind, pair: DiffPair) -> Result<Self> {
        let spec = Self { kind, pair };
        spec.check()?;
        Ok(spec)
    }

    pub fn with_pair(self, pair: DiffPair) -> Result<Self> {
        Self::new(self.kind, pair)
    }

    pub fn alpha(&self) -> f64 {
        match self.kind {
            SpaceKind::BergmanBesov { alpha, .. } | SpaceKind::Bloch { alpha } | SpaceKind::LittleBloch { alpha } => alpha,
        }
    }

    /// Admissibility of the pair for this space.
    pub fn check(&self) -> Result<()> {
        let t = self.pair.t;
        match self.kind {
            SpaceKind::BergmanBesov { p, alpha } => {
                if !(p > 0.0 && p.is_finite()) {
                    return Err(Error::InvalidInput(format!("exponent p must be positive and finite, got {p}")));
                }
                if !(alpha + p * t > -1.0) {
                    return Err(Error::Admissibility(format!("alpha + p t = {} must exceed -1", alpha + p * t)));
                }
            }
            SpaceKind::Bloch { alpha } | SpaceKind::LittleBloch { alpha } => {
                if !(alpha + t > 0.0) {
                    return Err(Error::Admissibility(format!("alpha + t = {} must be positive", alpha + t)));
                }
            }
        }
        Ok(())
    }
}

fn check_bloch_pair(alpha: f64, pair: DiffPair) -> Result<()> {
    if !(alpha + pair.t > 0.0) {
        return Err(Error::Admissibility(format!("alpha + t = {} must be positive", alpha + pair.t)));
    }
    Ok(())
}

/// `||f||_{b^p_alpha}` on a ball rule whose weight exponent is `alpha + p t`.
pub fn besov_norm(f: &HarmonicExpansion, spec: &SpaceSpec, q: &BallQuadrature) -> Result<f64> {
    let SpaceKind::BergmanBesov { p, alpha } = spec.kind else {
        return Err(Error::InvalidInput("besov_norm needs a Bergman-Besov space".into()));
    };
    spec.check()?;
    let gamma = alpha + p * spec.pair.t;
    if (q.gamma() - gamma).abs() > 1e-12 * gamma.abs().max(1.0) {
        return Err(Error::InvalidInput(format!("quadrature weight {} does not match alpha + p t = {gamma}", q.gamma())));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let df = f.apply_d(spec.pair).compile(1.0, SeriesTol::absolute(1e-13))?;
    let integral = q.integrate(|x, _| Ok(df.eval(x)?.abs().powf(p)))?;
    Ok((integral / weight_constant(f.dimension(), alpha).value).powf(1.0 / p))
}

/// Shell-wise integrals of `|D^t_s f|^p (1 - |x|^2)^{alpha + p t}`, for
/// functions with boundary singularities; a finite verdict means `f` is in
/// `b^p_alpha`.
pub fn besov_shells(f: &HarmonicExpansion, spec: &SpaceSpec, grid: &ShellDecomposition) -> Result<ShellIntegral> {
    let SpaceKind::BergmanBesov { p, alpha } = spec.kind else {
        return Err(Error::InvalidInput("besov_shells needs a Bergman-Besov space".into()));
    };
    spec.check()?;
    let df = f.apply_d(spec.pair).compile(grid.max_radius(), GRID_TOL)?;
    grid.integrate_shells(|x| Ok(df.eval(x)?.abs().powf(p)), alpha + p * spec.pair.t)
}

/// Deepest shell index (at most `requested`) on which every atom of `f`
/// can be evaluated within the truncation cap. Pass the function that will
/// actually be sampled, usually a derivative.
pub fn certified_depth(f: &HarmonicExpansion, requested: usize) -> Result<usize> {
    let n = f.dimension();
    let mut depth = requested.clamp(1, MAX_SHELLS);
    for a in f.atoms().iter().filter(|a| a.weight != 0.0 && a.has_boundary_pole()) {
        let mut table = SeriesTable::new(n, a.coefficients(n).unwrap_or_else(PochhammerRatio::one))?;
        while depth > 1 && table.degree_needed(1.0 - 0.5f64.powi(depth as i32 + 1), GRID_TOL).is_err() {
            depth -= 1;
        }
    }
    Ok(depth)
}

/// Shell grid for sampling `D^t_s f`: graded towards a boundary pole if
/// there is one, reduced to the polar angle when `f` is axially symmetric,
/// and no deeper than the truncation cap allows.
pub fn shell_grid(f: &HarmonicExpansion, pair: DiffPair, depth: usize) -> Result<ShellDecomposition> {
    let n = f.dimension();
    let depth = certified_depth(&f.apply_d(pair), depth)?;
    let symmetry = f.symmetry();
    let pole = f.atoms().iter().find(|a| a.weight != 0.0 && a.has_boundary_pole()).map(|a| a.pole.coords().to_vec());
    let mut opts = ShellOptions::new(depth);
    match (pole, symmetry) {
        (Some(p), Symmetry::Axial(e)) => opts = opts.focused(p.clone(), (dot(&p, &e).abs() - 1.0).abs() < 1e-12),
        (Some(p), _) => opts = opts.focused(p, false),
        (None, Symmetry::Axial(e)) => opts = opts.axial(e),
        (None, Symmetry::Radial) => opts.axisymmetric = true,
        (None, Symmetry::General) => {}
    }
    ShellDecomposition::new(n, opts)
}

/// Outcome of the little-Bloch test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LittleBlochVerdict {
    Decaying,
    NonDecaying,
    Inconclusive,
}

/// Classify shell maxima of the weighted derivative.
///
/// Decaying: the last maximum is below `1e-6` of the shell-0 maximum, or the
/// trailing maxima decrease monotonically with a fitted geometric ratio of
/// at most 0.9. NonDecaying: the trailing maxima stay above `1e-2` of the
/// shell-0 maximum with fitted ratio at least 0.99.
pub fn little_bloch_verdict(maxima: &[f64]) -> LittleBlochVerdict {
    let Some(&m0) = maxima.first() else {
        return LittleBlochVerdict::Inconclusive;
    };
    let reference = maxima.iter().copied().fold(m0, f64::max);
    if reference == 0.0 {
        return LittleBlochVerdict::Decaying;
    }
    if maxima.len() < VERDICT_WINDOW {
        return LittleBlochVerdict::Inconclusive;
    }
    let tail = &maxima[maxima.len() - VERDICT_WINDOW..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let last = tail[VERDICT_WINDOW - 1];
    if monotone && last <= 1e-6 * reference {
        return LittleBlochVerdict::Decaying;
    }
    let ratio = fitted_ratio(maxima).unwrap_or(1.0);
    if monotone && ratio <= 0.9 {
        return LittleBlochVerdict::Decaying;
    }
    let floor = 1e-2 * m0.max(f64::MIN_POSITIVE);
    if tail.iter().all(|&m| m >= floor) && ratio >= 0.99 {
        return LittleBlochVerdict::NonDecaying;
    }
    LittleBlochVerdict::Inconclusive
}

/// `(1 - |x|^2)^{alpha + t} |D^t_s f(x)|` sampled on a shell grid.
#[derive(Debug, Clone)]
pub struct BlochProfile {
    pub alpha: f64,
    pub pair: DiffPair,
    grid: ShellDecomposition,
    values: ShellValues,
    probe: SupProbe,
}

impl BlochProfile {
    pub fn compute(f: &HarmonicExpansion, alpha: f64, pair: DiffPair, grid: ShellDecomposition) -> Result<Self> {
        check_bloch_pair(alpha, pair)?;
        let a = alpha + pair.t;
        let df = f.apply_d(pair).compile(grid.max_radius(), GRID_TOL)?;
        let raw = grid.evaluate(|x| df.eval(x))?;
        let values = ShellValues {
            values: grid
                .shells()
                .iter()
                .zip(raw.values)
                .map(|(s, v)| v.into_iter().enumerate().map(|(i, d)| s.one_minus_r2[i].powf(a) * d.abs()).collect())
                .collect(),
        };
        let probe = SupProbe::from_values(&grid, &values, 0.0);
        Ok(Self { alpha, pair, grid, values, probe })
    }

    /// Profile of `f` on [`shell_grid`] with the requested depth.
    pub fn for_function(f: &HarmonicExpansion, alpha: f64, pair: DiffPair, depth: usize) -> Result<Self> {
        Self::compute(f, alpha, pair, shell_grid(f, pair, depth)?)
    }

    pub fn grid(&self) -> &ShellDecomposition {
        &self.grid
    }

    pub fn values(&self) -> &ShellValues {
        &self.values
    }

    /// Estimated Bloch norm.
    pub fn sup(&self) -> f64 {
        self.probe.sup
    }

    pub fn shell_maxima(&self) -> &[f64] {
        &self.probe.shell_maxima
    }

    pub fn little_bloch(&self) -> LittleBlochVerdict {
        little_bloch_verdict(&self.probe.shell_maxima)
    }

    /// Level set `{profile >= epsilon}` and its shell integrals against
    /// `(1 - |x|^2)^{weight_exponent} dnu`.
    pub fn level_set(&self, epsilon: f64, weight_exponent: f64) -> Result<LevelSetReport> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidInput(format!("level must be positive, got {epsilon}")));
        }
        let integral = self.grid.integrate_mapped(&self.values, weight_exponent, |v| if v >= epsilon { 1.0 } else { 0.0 });
        let shells = self
            .grid
            .shells()
            .iter()
            .zip(&self.values.values)
            .enumerate()
            .map(|(i, (s, v))| LevelShell {
                j: s.j,
                increment: integral.increments[i],
                partial: integral.partial[i],
                members: v.iter().filter(|&&x| x >= epsilon).count(),
                nodes: v.len(),
            })
            .collect();
        Ok(LevelSetReport {
            epsilon,
            pair: self.pair,
            weight_exponent,
            shells,
            verdict: integral.verdict,
            ratio: integral.ratio,
        })
    }

    /// Node-level membership of the level set, shell by shell.
    pub fn indicator(&self, epsilon: f64) -> Vec<Vec<bool>> {
        self.values.values.iter().map(|v| v.iter().map(|&x| x >= epsilon).collect()).collect()
    }

    /// Bisection for `inf { epsilon : level set has finite hyperbolic volume }`.
    pub fn distance(&self) -> DistanceReport {
        let n = self.grid.dimension().get() as f64;
        let norm = self.sup();
        let mut report = DistanceReport { estimate: 0.0, lower: 0.0, upper: 0.0, norm, steps: Vec::new(), inconclusive: 0 };
        if norm == 0.0 {
            return report;
        }
        let (mut lo, mut hi) = (0.0, norm * (1.0 + 1e-9));
        let target = 1e-3 * norm;
        while hi - lo > target && report.steps.len() < 64 {
            let mid = 0.5 * (lo + hi);
            let verdict = self.level_set(mid, -n).map(|r| r.verdict).unwrap_or(Verdict::Inconclusive);
            report.steps.push(DistanceStep { epsilon: mid, verdict });
            match verdict {
                Verdict::Finite => hi = mid,
                Verdict::Divergent => lo = mid,
                // an undecided level only tells us the threshold is near;
                // keep the bracket honest by not trusting either side
                Verdict::Inconclusive => {
                    report.inconclusive += 1;
                    hi = mid;
                }
            }
        }
        report.lower = lo;
        report.upper = hi;
        report.estimate = if lo == 0.0 && report.inconclusive == 0 { 0.0 } else { 0.5 * (lo + hi) };
        report
    }
}

/// One shell of a level-set report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelShell {
    pub j: usize,
    pub increment: f64,
    pub partial: f64,
    /// Nodes of the shell inside the level set.
    pub members: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub epsilon: f64,
    pub pair: DiffPair,
    pub weight_exponent: f64,
    pub shells: Vec<LevelShell>,
    pub verdict: Verdict,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceStep {
    pub epsilon: f64,
    pub verdict: Verdict,
}

/// Level-set distance estimate with its bisection bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Estimated Bloch norm, the initial bracket.
    pub norm: f64,
    pub steps: Vec<DistanceStep>,
    /// Bisection steps whose verdict was inconclusive (treated as finite).
    pub inconclusive: usize,
}

impl DistanceReport {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `||f||_{b^inf_alpha}` on the given grid.
pub fn bloch_norm(f: &HarmonicExpansion, spec: &SpaceSpec, grid: &ShellDecomposition) -> Result<f64> {
    match spec.kind {
        SpaceKind::Bloch { alpha } | SpaceKind::LittleBloch { alpha } => {
            spec.check()?;
            Ok(BlochProfile::compute(f, alpha, spec.pair, grid.clone())?.sup())
        }
        _ => Err(Error::InvalidInput("bloch_norm needs a Bloch space".into())),
    }
}

pub fn little_bloch_test(f: &HarmonicExpansion, spec: &SpaceSpec, grid: &ShellDecomposition) -> Result<LittleBlochVerdict> {
    match spec.kind {
        SpaceKind::Bloch { alpha } | SpaceKind::LittleBloch { alpha } => {
            spec.check()?;
            Ok(BlochProfile::compute(f, alpha, spec.pair, grid.clone())?.little_bloch())
        }
        _ => Err(Error::InvalidInput("little_bloch_test needs a Bloch space".into())),
    }
}

/// `Omega_epsilon = {(1 - |x|^2)^alpha |I^t_s f(x)| >= epsilon}` on the grid.
pub fn level_set(
    f: &HarmonicExpansion,
    alpha: f64,
    pair: DiffPair,
    epsilon: f64,
    grid: &ShellDecomposition,
    weight_exponent: f64,
) -> Result<LevelSetReport> {
    BlochProfile::compute(f, alpha, pair, grid.clone())?.level_set(epsilon, weight_exponent)
}

/// Level-set distance of `f` to the little Bloch space.
pub fn distance_estimate(f: &HarmonicExpansion, alpha: f64, pair: DiffPair, grid: &ShellDecomposition) -> Result<DistanceReport> {
    if f.is_zero() {
        check_bloch_pair(alpha, pair)?;
        return Ok(DistanceReport { estimate: 0.0, lower: 0.0, upper: 0.0, norm: 0.0, steps: Vec::new(), inconclusive: 0 });
    }
    Ok(BlochProfile::compute(f, alpha, pair, grid.clone())?.distance())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Member,
    NonMember,
}

/// `R_s(., zeta)` lies in `b^p_beta` exactly when `beta + n > p (n + s)`.
pub fn membership_kernel_atom(n: Dimension, p: f64, s: f64, beta: f64) -> Membership {
    let nf = n.get() as f64;
    if clearly_greater(beta + nf, p * (nf + s)) {
        Membership::Member
    } else {
        Membership::NonMember
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inclusion {
    Included,
    NotIncluded,
}

/// Sharp inclusion criteria between Bergman-Besov and Bloch spaces.
/// A little Bloch target is judged like the Bloch space with the same
/// exponent; Bloch-to-Bloch and little-Bloch sources are unsupported.
pub fn inclusion_predicate(n: Dimension, from: &SpaceSpec, to: &SpaceSpec) -> Result<Inclusion> {
    let nf = n.get() as f64;
    let holds = match (from.kind, to.kind) {
        (SpaceKind::BergmanBesov { p, alpha }, SpaceKind::BergmanBesov { p: q, alpha: beta }) => {
            if q < p {
                clearly_greater((beta + 1.0) / q, (alpha + 1.0) / p)
            } else {
                at_most((alpha + nf) / p, (beta + nf) / q)
            }
        }
        (SpaceKind::Bloch { alpha }, SpaceKind::BergmanBesov { p, alpha: beta }) => clearly_greater((beta + 1.0) / p, alpha),
        (SpaceKind::BergmanBesov { p, alpha: beta }, SpaceKind::Bloch { alpha } | SpaceKind::LittleBloch { alpha }) => {
            at_most((beta + nf) / p, alpha)
        }
        _ => {
            return Err(Error::UnsupportedPair(format!("no sharp criterion for {:?} in {:?}", from.kind, to.kind)));
        }
    };
    Ok(if holds { Inclusion::Included } else { Inclusion::NotIncluded })
}

fn check_reproducing(n: Dimension, s: f64, t: f64, q: &BallQuadrature) -> Result<()> {
    if q.dimension() != n {
        return Err(Error::InvalidInput("quadrature dimension does not match the function".into()));
    }
    if !(s + t > -1.0) {
        return Err(Error::Admissibility(format!("s + t = {} must exceed -1", s + t)));
    }
    if (q.gamma() - (s + t)).abs() > 1e-12 * (s + t).abs().max(1.0) {
        return Err(Error::InvalidInput(format!("quadrature weight {} does not match s + t = {}", q.gamma(), s + t)));
    }
    Ok(())
}

/// `(1/V_{s+t}) int R_s(x, y) (1 - |y|^2)^{s+t} D^t_s f(y) dnu(y)` for one probe.
pub fn reproduce(f: &HarmonicExpansion, s: f64, t: f64, x: &BallPoint, q: &BallQuadrature) -> Result<f64> {
    Ok(reproduce_batch(std::slice::from_ref(f), s, t, std::slice::from_ref(x), q)?[0][0])
}

/// [`reproduce`] for several functions and probes sharing one pass over the
/// quadrature nodes; result indexed `[function][probe]`.
pub fn reproduce_batch(
    fs: &[HarmonicExpansion],
    s: f64,
    t: f64,
    probes: &[BallPoint],
    q: &BallQuadrature,
) -> Result<Vec<Vec<f64>>> {
    let n = q.dimension();
    check_reproducing(n, s, t, q)?;
    if fs.iter().any(|f| f.dimension() != n) || probes.iter().any(|p| p.dim() != n.get()) {
        return Err(Error::InvalidInput("dimension mismatch in reproduce".into()));
    }
    let pair = DiffPair::new(s, t);
    let tol = SeriesTol::absolute(1e-13);
    let dfs = fs.iter().map(|f| f.apply_d(pair).compile(1.0, tol)).collect::<Result<Vec<_>>>()?;
    let r_max = probes.iter().map(BallPoint::norm).fold(0.0, f64::max);
    let mut kernel = SeriesTable::new(n, PochhammerRatio::gamma(n, s))?;
    kernel.prepare(r_max, tol)?;
    let (nf, np) = (fs.len(), probes.len());
    let sums = q.integrate_many(nf * np, |y, _, out| {
        let mut kv = Vec::with_capacity(np);
        for p in probes {
            kv.push(kernel.eval(p.coords(), y, tol)?.value);
        }
        for (i, df) in dfs.iter().enumerate() {
            let d = df.eval(y)?;
            for (j, k) in kv.iter().enumerate() {
                out[i * np + j] = k * d;
            }
        }
        Ok(())
    })?;
    let v = weight_constant(n, s + t).value;
    Ok((0..nf).map(|i| (0..np).map(|j| sums[i * np + j] / v).collect()).collect())
}

/// The two halves of the reproducing integral split along a level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub epsilon: f64,
    pub probes: Vec<BallPoint>,
    /// `f` at the probes.
    pub f: Vec<f64>,
    /// Integral over the level set.
    pub f1: Vec<f64>,
    /// Integral over its complement.
    pub f2: Vec<f64>,
    /// `max (1 - |x|^2)^{alpha + t} |D^t_s f2(x)| / epsilon` over the probes.
    pub f2_bound: f64,
}

/// Split the reproducing integral of `f` into the part over the level set
/// `Omega_epsilon` (`f1`) and the rest (`f2`), and measure the weighted
/// derivative of `f2` against `epsilon`.
pub fn split(
    f: &HarmonicExpansion,
    alpha: f64,
    pair: DiffPair,
    epsilon: f64,
    q: &BallQuadrature,
    probes: &[BallPoint],
) -> Result<SplitResult> {
    let n = f.dimension();
    let DiffPair { s, t } = pair;
    check_bloch_pair(alpha, pair)?;
    if !(s > alpha - 1.0) {
        return Err(Error::Admissibility(format!("subscript s = {s} must exceed alpha - 1 = {}", alpha - 1.0)));
    }
    check_reproducing(n, s, t, q)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("level must be positive, got {epsilon}")));
    }
    let tol = SeriesTol::absolute(1e-13);
    let df = f.apply_d(pair).compile(1.0, tol)?;
    let r_max = probes.iter().map(BallPoint::norm).fold(0.0, f64::max);
    let mut kernel = SeriesTable::new(n, PochhammerRatio::gamma(n, s))?;
    kernel.prepare(r_max, tol)?;
    let mut dkernel = SeriesTable::new(n, PochhammerRatio::gamma(n, s + t))?;
    dkernel.prepare(r_max, tol)?;
    let np = probes.len();
    // layout: [f1 | f2 | D f2] per probe
    let sums = q.integrate_many(3 * np, |y, omr2, out| {
        let d = df.eval(y)?;
        let inside = omr2.powf(alpha + t) * d.abs() >= epsilon;
        for (j, p) in probes.iter().enumerate() {
            let k = kernel.eval(p.coords(), y, tol)?.value;
            if inside {
                out[j] = k * d;
            } else {
                out[np + j] = k * d;
                out[2 * np + j] = dkernel.eval(p.coords(), y, tol)?.value * d;
            }
        }
        Ok(())
    })?;
    let v = weight_constant(n, s + t).value;
    let fvals = probes.iter().map(|p| f.evaluate(p, 1e-13)).collect::<Result<Vec<_>>>()?;
    let f2_bound = probes
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let r2 = dot(p.coords(), p.coords());
            (1.0 - r2).powf(alpha + t) * (sums[2 * np + j] / v).abs() / epsilon
        })
        .fold(0.0, f64::max);
    Ok(SplitResult {
        epsilon,
        probes: probes.to_vec(),
        f: fvals,
        f1: sums[..np].iter().map(|x| x / v).collect(),
        f2: sums[np..2 * np].iter().map(|x| x / v).collect(),
        f2_bound,
    })
}
