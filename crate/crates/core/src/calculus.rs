//! Harmonic functions as finite sums of atoms, and the radial operators
//! `D^t_s` and `I^t_s` acting on them.
//!
//! An atom is one of
//! * `weight * R_s(., pole)`, an extended reproducing kernel;
//! * `weight * Z_k(., pole)`, a zonal harmonic (a homogeneous harmonic polynomial);
//! * `weight * sum_k c_k Z_k(., pole)` with `c_k = gamma_k(base) * prod m_k(s_i, t_i)`,
//!   the image of a kernel under operators `D^{t_i}_{s_i}` whose subscripts do
//!   not match the kernel parameter.
//!
//! `D^t_s` multiplies the degree-`k` layer by `gamma_k(s + t) / gamma_k(s)`,
//! so its action on every atom is exact at the coefficient level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_dims, gamma_ratio, same_param, PochhammerRatio, SeriesTable, SeriesTol};
use crate::special::{dot, zonal, zonal_coords, BallPoint, Dimension};

/// Subscript and order `(s, t)` of `D^t_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffPair {
    pub s: f64,
    pub t: f64,
}

impl DiffPair {
    pub fn new(s: f64, t: f64) -> Self {
        Self { s, t }
    }

    /// The pair of the two-sided inverse, `D^{-t}_{s+t}`.
    pub fn inverse(self) -> Self {
        Self { s: self.s + self.t, t: -self.t }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AtomKind {
    /// `R_s(., pole)`
    Kernel { s: f64 },
    /// `Z_k(., pole)`
    Zonal { k: usize },
    /// `D^{t_m}_{s_m} ... D^{t_1}_{s_1} R_base(., pole)` with unmatched subscripts.
    Series { base: f64, pairs: Vec<DiffPair> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AtomRecord", into = "AtomRecord")]
pub struct Atom {
    pub kind: AtomKind,
    pub pole: BallPoint,
    pub weight: f64,
}

/// Flat serialized form of an atom.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomRecord {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<DiffPair>>,
    pole: BallPoint,
    weight: f64,
}

impl TryFrom<AtomRecord> for Atom {
    type Error = Error;

    fn try_from(r: AtomRecord) -> Result<Self> {
        let missing = |field: &str| Error::InvalidInput(format!("{} atom needs field `{field}`", r.kind));
        let kind = match r.kind.as_str() {
            "kernel" => AtomKind::Kernel { s: r.s.ok_or_else(|| missing("s"))? },
            "zonal" => AtomKind::Zonal { k: r.k.ok_or_else(|| missing("k"))? },
            "series" => AtomKind::Series {
                base: r.s.ok_or_else(|| missing("s"))?,
                pairs: r.pairs.clone().ok_or_else(|| missing("pairs"))?,
            },
            other => return Err(Error::InvalidInput(format!("unknown atom kind `{other}`"))),
        };
        let atom = Atom { kind, pole: r.pole, weight: r.weight };
        atom.validate()?;
        Ok(atom)
    }
}

impl From<Atom> for AtomRecord {
    fn from(a: Atom) -> Self {
        let (kind, s, k, pairs) = match a.kind {
            AtomKind::Kernel { s } => ("kernel", Some(s), None, None),
            AtomKind::Zonal { k } => ("zonal", None, Some(k), None),
            AtomKind::Series { base, pairs } => ("series", Some(base), None, Some(pairs)),
        };
        AtomRecord { kind: kind.into(), s, k, pairs, pole: a.pole, weight: a.weight }
    }
}

impl Atom {
    pub fn kernel(s: f64, pole: BallPoint, weight: f64) -> Self {
        Self { kind: AtomKind::Kernel { s }, pole, weight }
    }

    pub fn zonal(k: usize, pole: BallPoint, weight: f64) -> Self {
        Self { kind: AtomKind::Zonal { k }, pole, weight }
    }

    fn validate(&self) -> Result<()> {
        if !self.weight.is_finite() {
            return Err(Error::InvalidInput("atom weight must be finite".into()));
        }
        match &self.kind {
            AtomKind::Zonal { .. } if !self.pole.is_on_sphere() => {
                Err(Error::InvalidInput("zonal term poles must lie on the sphere".into()))
            }
            AtomKind::Kernel { s } if !s.is_finite() => Err(Error::InvalidInput("kernel parameter must be finite".into())),
            AtomKind::Series { base, pairs } => {
                if !base.is_finite() || pairs.iter().any(|p| !p.s.is_finite() || !p.t.is_finite()) {
                    return Err(Error::InvalidInput("series parameters must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Coefficients `c_k` of `sum c_k Z_k(., pole)` for kernel and series atoms
    /// (without the weight); `None` for zonal terms.
    pub fn coefficients(&self, n: Dimension) -> Option<PochhammerRatio> {
        match &self.kind {
            AtomKind::Zonal { .. } => None,
            AtomKind::Kernel { s } => Some(PochhammerRatio::gamma(n, *s)),
            AtomKind::Series { base, pairs } => Some(
                pairs
                    .iter()
                    .fold(PochhammerRatio::gamma(n, *base), |acc, p| acc.times(&PochhammerRatio::multiplier(n, p.s, p.t))),
            ),
        }
    }

    /// True for kernel or series atoms whose pole lies on the sphere, i.e.
    /// atoms that are unbounded near the boundary.
    pub fn has_boundary_pole(&self) -> bool {
        !matches!(self.kind, AtomKind::Zonal { .. }) && self.pole.is_on_sphere()
    }

    /// Constant functions: `Z_0` or any kernel centred at the origin.
    pub fn is_constant(&self) -> bool {
        match self.kind {
            AtomKind::Zonal { k } => k == 0,
            _ => self.pole.norm() == 0.0,
        }
    }

    fn apply_d(&self, n: Dimension, pair: DiffPair) -> Atom {
        if pair.t == 0.0 {
            return self.clone();
        }
        let pole = self.pole.clone();
        match &self.kind {
            AtomKind::Zonal { k } => Atom::zonal(*k, pole, self.weight * gamma_ratio(n, pair.s, pair.t, *k)),
            AtomKind::Kernel { s } if same_param(*s, pair.s) => Atom::kernel(s + pair.t, pole, self.weight),
            AtomKind::Kernel { s } => normalized(*s, vec![pair], pole, self.weight),
            AtomKind::Series { base, pairs } => {
                let mut pairs = pairs.clone();
                match pairs.last_mut() {
                    // D^t_{s'+t'} D^{t'}_{s'} = D^{t+t'}_{s'}
                    Some(last) if same_param(last.s + last.t, pair.s) => last.t += pair.t,
                    _ => pairs.push(pair),
                }
                normalized(*base, pairs, pole, self.weight)
            }
        }
    }
}

/// Drop vanishing orders and absorb leading pairs that match the kernel
/// parameter, returning a kernel atom when nothing is left.
fn normalized(mut base: f64, pairs: Vec<DiffPair>, pole: BallPoint, weight: f64) -> Atom {
    let mut rest: Vec<DiffPair> = pairs.into_iter().filter(|p| !same_param(p.t, 0.0)).collect();
    while let Some(first) = rest.first() {
        if same_param(first.s, base) {
            base += first.t;
            rest.remove(0);
        } else {
            break;
        }
    }
    if rest.is_empty() {
        Atom::kernel(base, pole, weight)
    } else {
        Atom { kind: AtomKind::Series { base, pairs: rest }, pole, weight }
    }
}

/// A finite sum of atoms in a fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpansionRecord", into = "ExpansionRecord")]
pub struct HarmonicExpansion {
    dimension: Dimension,
    atoms: Vec<Atom>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpansionRecord {
    dimension: Dimension,
    atoms: Vec<Atom>,
}

impl TryFrom<ExpansionRecord> for HarmonicExpansion {
    type Error = Error;
    fn try_from(r: ExpansionRecord) -> Result<Self> {
        Self::new(r.dimension, r.atoms)
    }
}

impl From<HarmonicExpansion> for ExpansionRecord {
    fn from(f: HarmonicExpansion) -> Self {
        ExpansionRecord { dimension: f.dimension, atoms: f.atoms }
    }
}

/// How an expansion behaves under rotations.
#[derive(Debug, Clone, PartialEq)]
pub enum Symmetry {
    /// Constant.
    Radial,
    /// Invariant under rotations fixing the unit vector.
    Axial(Vec<f64>),
    /// No symmetry detected.
    General,
}

impl HarmonicExpansion {
    pub fn new(dimension: Dimension, atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            check_dims(dimension, &a.pole)?;
            a.validate()?;
        }
        Ok(Self { dimension, atoms })
    }

    pub fn zero(dimension: Dimension) -> Self {
        Self { dimension, atoms: Vec::new() }
    }

    pub fn constant(dimension: Dimension, c: f64) -> Self {
        Self { dimension, atoms: vec![Atom::zonal(0, BallPoint::north(dimension), c)] }
    }

    pub fn single(dimension: Dimension, atom: Atom) -> Result<Self> {
        Self::new(dimension, vec![atom])
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn scaled(&self, c: f64) -> Self {
        let atoms = self.atoms.iter().map(|a| Atom { weight: a.weight * c, ..a.clone() }).collect();
        Self { dimension: self.dimension, atoms }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.dimension != other.dimension {
            return Err(Error::InvalidInput("cannot add expansions of different dimensions".into()));
        }
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        Ok(Self { dimension: self.dimension, atoms })
    }

    /// True if no atom carries a nonzero weight.
    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.weight == 0.0)
    }

    /// True if every atom is a zonal term, i.e. the function is a polynomial.
    pub fn is_polynomial(&self) -> bool {
        self.atoms.iter().all(|a| matches!(a.kind, AtomKind::Zonal { .. }) || a.is_constant())
    }

    pub fn has_boundary_pole(&self) -> bool {
        self.atoms.iter().any(|a| a.weight != 0.0 && a.has_boundary_pole())
    }

    /// Largest pole modulus among kernel and series atoms.
    pub fn max_pole_radius(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| !matches!(a.kind, AtomKind::Zonal { .. }))
            .map(|a| a.pole.norm())
            .fold(0.0, f64::max)
    }

    /// Axis of rotational symmetry shared by all non-constant atoms.
    pub fn symmetry(&self) -> Symmetry {
        let mut axis: Option<Vec<f64>> = None;
        for a in self.atoms.iter().filter(|a| a.weight != 0.0 && !a.is_constant()) {
            let r = a.pole.norm();
            let dir: Vec<f64> = a.pole.coords().iter().map(|c| c / r).collect();
            match &axis {
                None => axis = Some(dir),
                Some(e) => {
                    if (dot(e, &dir).abs() - 1.0).abs() > 1e-12 {
                        return Symmetry::General;
                    }
                }
            }
        }
        axis.map_or(Symmetry::Radial, Symmetry::Axial)
    }

    /// `f(x)` with total truncation error at most `atoms.len() * tol`.
    pub fn evaluate(&self, x: &BallPoint, tol: f64) -> Result<f64> {
        check_dims(self.dimension, x)?;
        let n = self.dimension;
        let mut acc = 0.0;
        for a in &self.atoms {
            if a.weight == 0.0 {
                continue;
            }
            acc += match &a.kind {
                AtomKind::Zonal { k } => a.weight * zonal(n, *k, x, &a.pole),
                _ => {
                    let coeffs = a.coefficients(n).expect("kernel-type atom");
                    let mut table = SeriesTable::new(n, coeffs)?;
                    let rho = x.norm() * a.pole.norm();
                    let tol = SeriesTol::absolute(tol / a.weight.abs());
                    table.prepare(rho.min(1.0), tol)?;
                    a.weight * table.eval(x.coords(), a.pole.coords(), tol)?.value
                }
            };
        }
        Ok(acc)
    }

    /// `D^t_s f`.
    pub fn apply_d(&self, pair: DiffPair) -> Self {
        let atoms = self.atoms.iter().map(|a| a.apply_d(self.dimension, pair)).collect();
        Self { dimension: self.dimension, atoms }
    }

    /// `I^t_s f(x) = (1 - |x|^2)^t D^t_s f(x)`.
    pub fn apply_i(&self, pair: DiffPair, x: &BallPoint, tol: f64) -> Result<f64> {
        if x.norm() >= 1.0 {
            return Err(Error::InvalidInput("I^t_s is evaluated inside the ball only".into()));
        }
        let r2 = dot(x.coords(), x.coords());
        Ok((1.0 - r2).powf(pair.t) * self.apply_d(pair).evaluate(x, tol)?)
    }

    /// The degree-`k` layer `f_k = sum c Z_k(., pole)` as `(pole, c)` pairs.
    pub fn homogeneous_coefficient(&self, k: usize) -> Vec<(BallPoint, f64)> {
        let n = self.dimension;
        self.atoms
            .iter()
            .filter_map(|a| match &a.kind {
                AtomKind::Zonal { k: j } => (*j == k).then(|| (a.pole.clone(), a.weight)),
                _ => Some((a.pole.clone(), a.weight * a.coefficients(n).expect("kernel-type atom").value(k))),
            })
            .collect()
    }

    /// Compile for repeated evaluation at points `x` with `|x| <= r_max`.
    pub fn compile(&self, r_max: f64, tol: SeriesTol) -> Result<CompiledExpansion> {
        CompiledExpansion::new(self, r_max, tol)
    }
}

enum CompiledAtom {
    Zonal { k: usize, pole: BallPoint, weight: f64 },
    Series { table: SeriesTable, pole: Vec<f64>, weight: f64 },
}

/// An expansion with coefficient tables precomputed for fast evaluation on
/// quadrature grids. Evaluation is thread-safe.
pub struct CompiledExpansion {
    dimension: Dimension,
    atoms: Vec<CompiledAtom>,
    tol: SeriesTol,
}

impl CompiledExpansion {
    pub fn new(f: &HarmonicExpansion, r_max: f64, tol: SeriesTol) -> Result<Self> {
        let n = f.dimension;
        let mut atoms = Vec::new();
        for a in f.atoms.iter().filter(|a| a.weight != 0.0) {
            atoms.push(match &a.kind {
                AtomKind::Zonal { k } => CompiledAtom::Zonal { k: *k, pole: a.pole.clone(), weight: a.weight },
                _ => {
                    let mut table = SeriesTable::new(n, a.coefficients(n).expect("kernel-type atom"))?;
                    let rho = (r_max * a.pole.norm()).min(1.0);
                    // a failure here is reported on evaluation instead, since
                    // the grid may never reach r_max
                    let _ = table.prepare(rho, tol);
                    CompiledAtom::Series { table, pole: a.pole.coords().to_vec(), weight: a.weight }
                }
            });
        }
        Ok(Self { dimension: n, atoms, tol })
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    /// `f(x)` for raw coordinates, which must have length `n` and norm `<= 1`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += match a {
                CompiledAtom::Zonal { k, pole, weight } => weight * zonal_coords(self.dimension, *k, x, pole.coords()),
                CompiledAtom::Series { table, pole, weight } => weight * table.eval(x, pole, self.tol)?.value,
            };
        }
        Ok(acc)
    }
}
