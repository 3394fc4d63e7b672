//! Weighted integration over the ball and sphere.
//!
//! * [`gauss_jacobi`]: Gauss rules for `(1 - u)^a u^b` on `[0, 1]`, built by
//!   Golub-Welsch and polished with Newton steps on the orthonormal recurrence.
//! * [`SphereRule`]: uniform angles for `n = 2`, Gauss-Legendre in the polar
//!   cosine times uniform azimuth for `n = 3`.
//! * [`BallQuadrature`]: product rule for `(1 - |x|^2)^gamma dnu` in the
//!   variable `u = |x|^2`.
//! * [`ShellDecomposition`]: dyadic shells `2^{-j-1} <= 1 - |x| <= 2^{-j}` with
//!   angular panels graded towards a boundary point, used to watch how
//!   integrals and suprema behave as `|x| -> 1`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::special::{dot, norm, Dimension};

/// Verdicts below this increment count as zero.
pub const INCREMENT_FLOOR: f64 = 1e-12;
/// Geometric increment ratio at or below which a shell series is finite.
pub const FINITE_RATIO: f64 = 0.9;
/// Geometric increment ratio at or above which a shell series diverges.
pub const DIVERGENT_RATIO: f64 = 0.99;
/// Number of trailing shells used for verdicts.
pub const VERDICT_WINDOW: usize = 5;
/// Deepest shell ever built.
pub const MAX_SHELLS: usize = 40;

/// A one-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    /// `1 - node`, computed without cancellation.
    pub complements: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Apply the rule to `f` on its own interval.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Three-term recurrence of the monic Jacobi polynomials for the weight
/// `(1 - x)^a (1 + x)^b` on `[-1, 1]`: diagonal `alpha_j`, and `beta_j` for
/// `j >= 1`.
fn jacobi_recurrence(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = a + b;
    let mut alpha = Vec::with_capacity(m);
    let mut beta = vec![0.0; m];
    alpha.push((b - a) / (ab + 2.0));
    for j in 1..m {
        let jf = j as f64;
        let s = 2.0 * jf + ab;
        alpha.push((b * b - a * a) / (s * (s + 2.0)));
    }
    for (j, bj) in beta.iter_mut().enumerate().skip(1) {
        let jf = j as f64;
        let s = 2.0 * jf + ab;
        *bj = if j == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * jf * (jf + a) * (jf + b) * (jf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
    }
    (alpha, beta)
}

/// Gauss-Jacobi rule with `m` nodes for `(1 - u)^a u^b du` on `[0, 1]`.
pub fn gauss_jacobi(m: usize, a: f64, b: f64) -> Result<GaussRule> {
    if m == 0 {
        return Err(Error::InvalidInput("a Gauss rule needs at least one node".into()));
    }
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::InvalidInput(format!("Jacobi exponents must exceed -1, got a = {a}, b = {b}")));
    }
    let (alpha, beta) = jacobi_recurrence(m + 1, a, b);
    let ln_mu0 = (a + b + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0);
    let mu0 = ln_mu0.exp();

    let mut jm = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        jm[(i, i)] = alpha[i];
        if i + 1 < m {
            let off = beta[i + 1].sqrt();
            jm[(i, i + 1)] = off;
            jm[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut xs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    xs.sort_by(f64::total_cmp);

    // orthonormal p_0..p_m and derivative of p_m at x
    let eval = |x: f64| -> (f64, f64, f64) {
        let mut p_prev = 0.0;
        let mut p = 1.0 / mu0.sqrt();
        let mut d_prev = 0.0;
        let mut d = 0.0;
        let mut sum_sq = p * p;
        for j in 0..m {
            let sb_next = beta[j + 1].sqrt();
            let sb = beta[j].sqrt();
            let p_next = ((x - alpha[j]) * p - sb * p_prev) / sb_next;
            let d_next = (p + (x - alpha[j]) * d - sb * d_prev) / sb_next;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
            if j + 1 < m {
                sum_sq += p * p;
            }
        }
        (p, d, sum_sq)
    };

    let mut rule = GaussRule { nodes: Vec::with_capacity(m), complements: Vec::with_capacity(m), weights: Vec::with_capacity(m) };
    let scale = 2f64.powf(-(a + b + 1.0));
    for x0 in xs {
        let mut x = x0;
        for _ in 0..3 {
            let (p, d, _) = eval(x);
            if d == 0.0 {
                break;
            }
            let step = p / d;
            x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1e-300) {
                break;
            }
        }
        let x = x.clamp(-1.0, 1.0);
        let (_, _, sum_sq) = eval(x);
        rule.nodes.push((1.0 + x) / 2.0);
        rule.complements.push((1.0 - x) / 2.0);
        rule.weights.push(scale / sum_sq);
    }
    Ok(rule)
}

/// Gauss-Legendre rule with `m` nodes on `[lo, hi]`.
pub fn gauss_legendre(m: usize, lo: f64, hi: f64) -> Result<GaussRule> {
    let base = gauss_jacobi(m, 0.0, 0.0)?;
    let h = hi - lo;
    Ok(GaussRule {
        nodes: base.nodes.iter().map(|u| lo + h * u).collect(),
        complements: base.nodes.iter().map(|u| hi - h * u).collect(),
        weights: base.weights.iter().map(|w| w * h).collect(),
    })
}

fn check_supported(n: Dimension) -> Result<()> {
    if !(2..=3).contains(&n.get()) {
        return Err(Error::InvalidInput(format!("quadrature supports n = 2 and n = 3, got n = {}", n.get())));
    }
    Ok(())
}

/// Product rule on the unit sphere, normalised to total weight 1.
#[derive(Debug, Clone)]
pub struct SphereRule {
    dimension: Dimension,
    degree: usize,
    /// Flattened points, stride `n`.
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl SphereRule {
    /// Rule exact for spherical polynomials of degree `<= degree`.
    pub fn new(n: Dimension, degree: usize) -> Result<Self> {
        check_supported(n)?;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let m = degree + 1;
        if n.get() == 2 {
            for i in 0..m {
                let th = 2.0 * PI * i as f64 / m as f64;
                points.extend_from_slice(&[th.cos(), th.sin()]);
                weights.push(1.0 / m as f64);
            }
        } else {
            let polar = gauss_legendre((degree + 2) / 2, -1.0, 1.0)?;
            for (&z, &wz) in polar.nodes.iter().zip(&polar.weights) {
                let rho = (1.0 - z * z).max(0.0).sqrt();
                for i in 0..m {
                    let ph = 2.0 * PI * i as f64 / m as f64;
                    points.extend_from_slice(&[z, rho * ph.cos(), rho * ph.sin()]);
                    weights.push(wz / 2.0 / m as f64);
                }
            }
        }
        Ok(Self { dimension: n, degree, points, weights })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.dimension.get();
        &self.points[i * n..(i + 1) * n]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `int_S g dsigma` with `sigma` normalised.
    pub fn integrate(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * g(self.point(i))).sum()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn failure(e: Error) -> Error {
    match e {
        Error::EvaluationFailure(_) => e,
        other => Error::EvaluationFailure(other.to_string()),
    }
}

/// Product quadrature for `int_B g(x) (1 - |x|^2)^gamma dnu(x)`.
#[derive(Debug, Clone)]
pub struct BallQuadrature {
    dimension: Dimension,
    gamma: f64,
    radial: GaussRule,
    sphere: SphereRule,
}

impl BallQuadrature {
    /// Rule exact for `(1 - |x|^2)^gamma` times polynomials of total degree
    /// `<= degree`.
    pub fn new(n: Dimension, gamma: f64, degree: usize) -> Result<Self> {
        let m = ((degree / 2 + 1) + 1) / 2;
        Self::with_orders(n, gamma, m.max(1), degree)
    }

    /// Explicit radial node count and spherical degree.
    pub fn with_orders(n: Dimension, gamma: f64, radial_nodes: usize, sphere_degree: usize) -> Result<Self> {
        check_supported(n)?;
        if !(gamma > -1.0) {
            return Err(Error::Admissibility(format!("ball weight exponent must exceed -1, got {gamma}")));
        }
        let radial = gauss_jacobi(radial_nodes, gamma, n.half() - 1.0)?;
        let sphere = SphereRule::new(n, sphere_degree)?;
        Ok(Self { dimension: n, gamma, radial, sphere })
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.sphere.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of all weights, `V_gamma`.
    pub fn total_weight(&self) -> f64 {
        self.dimension.half() * self.radial.weights.iter().sum::<f64>()
    }

    /// `int_B g(x) (1 - |x|^2)^gamma dnu(x)`; `g` receives the point and
    /// `1 - |x|^2`.
    pub fn integrate<G>(&self, g: G) -> Result<f64>
    where
        G: Fn(&[f64], f64) -> Result<f64> + Sync,
    {
        let v = self.integrate_many(1, |x, w, out| {
            out[0] = g(x, w)?;
            Ok(())
        })?;
        Ok(v[0])
    }

    /// Vector-valued version of [`Self::integrate`]: `g` writes `len`
    /// components into its output slice. The reduction order is fixed, so
    /// results do not depend on the thread count.
    pub fn integrate_many<G>(&self, len: usize, g: G) -> Result<Vec<f64>>
    where
        G: Fn(&[f64], f64, &mut [f64]) -> Result<()> + Sync,
    {
        const CHUNK: usize = 2048;
        let n = self.dimension.get();
        let ns = self.sphere.len();
        let chunks_per_radius = ns.div_ceil(CHUNK);
        let tasks: Vec<(usize, usize)> =
            (0..self.radial.len()).flat_map(|i| (0..chunks_per_radius).map(move |c| (i, c))).collect();
        let partials: Vec<Result<Vec<Accumulator>>> = tasks
            .par_iter()
            .map(|&(i, c)| {
                let u = self.radial.nodes[i];
                let one_minus = self.radial.complements[i];
                let r = u.sqrt();
                let wr = self.dimension.half() * self.radial.weights[i];
                let mut acc = vec![Accumulator::default(); len];
                let mut out = vec![0.0; len];
                let mut x = vec![0.0; n];
                for j in c * CHUNK..((c + 1) * CHUNK).min(ns) {
                    for (xi, p) in x.iter_mut().zip(self.sphere.point(j)) {
                        *xi = r * p;
                    }
                    out.iter_mut().for_each(|o| *o = 0.0);
                    g(&x, one_minus, &mut out).map_err(failure)?;
                    let w = wr * self.sphere.weight(j);
                    for (a, o) in acc.iter_mut().zip(&out) {
                        if !o.is_finite() {
                            return Err(Error::EvaluationFailure(format!("non-finite integrand at {x:?}")));
                        }
                        a.add(w * o);
                    }
                }
                Ok(acc)
            })
            .collect();
        let mut total = vec![Accumulator::default(); len];
        for p in partials {
            for (t, a) in total.iter_mut().zip(p?) {
                t.add(a.value());
            }
        }
        Ok(total.iter().map(Accumulator::value).collect())
    }
}

/// `int_B g (1 - |x|^2)^gamma dnu` for the rule's `gamma`.
pub fn integrate_ball<G>(q: &BallQuadrature, g: G) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<f64> + Sync,
{
    q.integrate(|x, _| g(x))
}

/// Finite/divergent verdict for a sequence of shell increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

/// Least-squares geometric ratio of the positive entries among the last
/// `VERDICT_WINDOW` values, i.e. `exp` of the fitted slope of `ln v_j`
/// against `j`.
pub fn fitted_ratio(values: &[f64]) -> Option<f64> {
    let start = values.len().saturating_sub(VERDICT_WINDOW);
    let pts: Vec<(f64, f64)> =
        values[start..].iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(j, v)| (j as f64, v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some((sxy / sxx).exp())
}

/// Classify a sequence of nonnegative shell increments.
pub fn increment_verdict(increments: &[f64]) -> Verdict {
    if increments.len() < VERDICT_WINDOW {
        return Verdict::Inconclusive;
    }
    let tail = &increments[increments.len() - VERDICT_WINDOW..];
    if tail.iter().all(|&v| v <= INCREMENT_FLOOR) {
        return Verdict::Finite;
    }
    // a set that has stopped reaching the deeper shells
    if tail[VERDICT_WINDOW - 2..].iter().all(|&v| v == 0.0) {
        return Verdict::Finite;
    }
    match fitted_ratio(increments) {
        Some(q) if q <= FINITE_RATIO => Verdict::Finite,
        Some(q) if q >= DIVERGENT_RATIO && tail[VERDICT_WINDOW - 1] >= INCREMENT_FLOOR => Verdict::Divergent,
        _ => Verdict::Inconclusive,
    }
}

/// Options for building a [`ShellDecomposition`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShellOptions {
    /// Deepest shell index `J`.
    pub depth: usize,
    /// Boundary point the angular panels are graded towards, or the symmetry
    /// axis when `graded` is off.
    pub focus: Option<Vec<f64>>,
    /// Grade polar panels towards the focus. Ungraded grids use one fixed
    /// angular rule for every shell.
    pub graded: bool,
    /// The integrands are invariant under rotations about the focus (or the
    /// first axis when there is no focus), so only the polar angle is sampled.
    pub axisymmetric: bool,
    pub radial_nodes: usize,
    pub panel_nodes: usize,
    /// Azimuth count for `n = 3` without axial symmetry.
    pub azimuth: usize,
    /// Spherical degree used when there is no focus.
    pub sphere_degree: usize,
    /// Add a final cap `0 < 1 - |x| <= 2^{-J-1}` integrated by Gauss-Jacobi
    /// with weight `(1 - |x|)^e`.
    pub cap_exponent: Option<f64>,
}

impl ShellOptions {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            focus: None,
            graded: false,
            axisymmetric: false,
            radial_nodes: 8,
            panel_nodes: 8,
            azimuth: 32,
            sphere_degree: 31,
            cap_exponent: None,
        }
    }

    pub fn focused(mut self, focus: Vec<f64>, axisymmetric: bool) -> Self {
        self.focus = Some(focus);
        self.graded = true;
        self.axisymmetric = axisymmetric;
        self
    }

    /// Ungraded grid for integrands invariant under rotations about `axis`.
    pub fn axial(mut self, axis: Vec<f64>) -> Self {
        self.focus = Some(axis);
        self.graded = false;
        self.axisymmetric = true;
        self
    }
}

/// Nodes of one dyadic shell, stored column-wise.
#[derive(Debug, Clone)]
pub struct Shell {
    pub j: usize,
    /// Flattened coordinates, stride `n`.
    pub coords: Vec<f64>,
    pub one_minus_r2: Vec<f64>,
    /// `1 - |x|`.
    pub delta: Vec<f64>,
    pub weights: Vec<f64>,
    /// Weight exponent already absorbed into the cap rule.
    pub cap_exponent: Option<f64>,
}

impl Shell {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Factor turning a node weight into the weight of `(1 - |x|^2)^e dnu`.
    #[inline]
    pub fn weight_factor(&self, i: usize, e: f64) -> f64 {
        let base = if e == 0.0 { 1.0 } else { self.one_minus_r2[i].powf(e) };
        match self.cap_exponent {
            Some(c) if c != 0.0 => base * self.delta[i].powf(-c),
            _ => base,
        }
    }
}

/// Dyadic shells `S_0 = {|x| <= 1/2}`, `S_j = {2^{-j-1} <= 1 - |x| <= 2^{-j}}`
/// for `1 <= j <= J`, optionally followed by the cap.
#[derive(Debug, Clone)]
pub struct ShellDecomposition {
    dimension: Dimension,
    options: ShellOptions,
    shells: Vec<Shell>,
}

/// Angular nodes: unit directions and weights summing to 1.
fn angular_nodes(n: Dimension, opts: &ShellOptions, level: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = n.get();
    let axis = match &opts.focus {
        Some(f) => {
            let r = norm(f);
            f.iter().map(|c| c / r).collect()
        }
        None => {
            let mut e = vec![0.0; nn];
            e[0] = 1.0;
            e
        }
    };
    let (u1, u2) = frame(&axis);
    let mut dirs = Vec::new();
    let mut weights = Vec::new();
    let mut push = |theta: f64, phi: f64, w: f64, dirs: &mut Vec<f64>| {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        for i in 0..nn {
            let mut v = ct * axis[i] + st * cp * u1[i];
            if nn == 3 {
                v += st * sp * u2[i];
            }
            dirs.push(v);
        }
        weights.push(w);
    };

    // polar panels on [0, pi]
    let polar: Vec<(f64, f64)> = if opts.focus.is_some() && opts.graded {
        let levels = level + 5;
        let mut bounds: Vec<f64> = (0..=levels).map(|i| PI * 0.5f64.powi(i as i32)).collect();
        bounds.push(0.0);
        bounds.reverse();
        let mut pts = Vec::new();
        for w in bounds.windows(2) {
            let gl = gauss_legendre(opts.panel_nodes, w[0], w[1])?;
            pts.extend(gl.nodes.into_iter().zip(gl.weights));
        }
        pts
    } else if opts.axisymmetric {
        let gl = gauss_legendre(opts.sphere_degree.div_ceil(2).max(2), 0.0, PI)?;
        gl.nodes.into_iter().zip(gl.weights).collect()
    } else {
        Vec::new()
    };

    if polar.is_empty() {
        let rule = SphereRule::new(n, opts.sphere_degree)?;
        for i in 0..rule.len() {
            dirs.extend_from_slice(rule.point(i));
            weights.push(rule.weight(i));
        }
        return Ok((dirs, weights));
    }

    if nn == 2 {
        for &(th, w) in &polar {
            if opts.axisymmetric {
                push(th, 0.0, w / PI, &mut dirs);
            } else {
                push(th, 0.0, w / (2.0 * PI), &mut dirs);
                push(-th, 0.0, w / (2.0 * PI), &mut dirs);
            }
        }
    } else {
        let m = if opts.axisymmetric { 1 } else { opts.azimuth.max(1) };
        for &(th, w) in &polar {
            for k in 0..m {
                let ph = 2.0 * PI * k as f64 / m as f64;
                push(th, ph, w * th.sin() / 2.0 / m as f64, &mut dirs);
            }
        }
    }
    Ok((dirs, weights))
}

/// Orthonormal vectors completing `axis` (the second is unused for `n = 2`).
fn frame(axis: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = axis.len();
    // Gram-Schmidt on the coordinate vectors least aligned with the axis
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs()));
    let mut basis: Vec<Vec<f64>> = vec![axis.to_vec()];
    for &i in &order {
        if basis.len() == n.min(3) {
            break;
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for b in &basis {
            let d = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let r = norm(&v);
        if r > 1e-8 {
            basis.push(v.iter().map(|x| x / r).collect());
        }
    }
    let u1 = basis[1].clone();
    let u2 = basis.get(2).cloned().unwrap_or_else(|| vec![0.0; n]);
    (u1, u2)
}

impl ShellDecomposition {
    pub fn new(n: Dimension, options: ShellOptions) -> Result<Self> {
        check_supported(n)?;
        if options.depth == 0 || options.depth > MAX_SHELLS {
            return Err(Error::InvalidInput(format!("shell depth must be in 1..={MAX_SHELLS}")));
        }
        if let Some(f) = &options.focus {
            if f.len() != n.get() || norm(f) == 0.0 {
                return Err(Error::InvalidInput("shell focus must be a nonzero vector in R^n".into()));
            }
        }
        let nn = n.get();
        let nf = nn as f64;
        let mut shells = Vec::new();
        let unfocused = if !(options.focus.is_some() && options.graded) { Some(angular_nodes(n, &options, 0)?) } else { None };
        let last = options.depth + usize::from(options.cap_exponent.is_some());
        for j in 0..=last {
            let (dirs, aw) = match &unfocused {
                Some(a) => a.clone(),
                None => angular_nodes(n, &options, j.min(options.depth))?,
            };
            let mut shell = Shell {
                j,
                coords: Vec::new(),
                one_minus_r2: Vec::new(),
                delta: Vec::new(),
                weights: Vec::new(),
                cap_exponent: None,
            };
            // radial nodes as (r, 1 - r, radial weight of n r^{n-1} dr)
            let radial: Vec<(f64, f64, f64)> = if j == 0 {
                let gl = gauss_legendre(options.radial_nodes, 0.0, 0.5)?;
                let mut v: Vec<(f64, f64, f64)> =
                    gl.nodes.iter().zip(&gl.weights).map(|(&r, &w)| (r, 1.0 - r, nf * r.powi(nn as i32 - 1) * w)).collect();
                v.insert(0, (0.0, 1.0, 0.0));
                v
            } else if j <= options.depth {
                let hi = 0.5f64.powi(j as i32);
                let gl = gauss_legendre(options.radial_nodes, hi / 2.0, hi)?;
                gl.nodes.iter().zip(&gl.weights).map(|(&d, &w)| (1.0 - d, d, nf * (1.0 - d).powi(nn as i32 - 1) * w)).collect()
            } else {
                let c = options.cap_exponent.unwrap_or(0.0);
                shell.cap_exponent = Some(c);
                let top = 0.5f64.powi(options.depth as i32 + 1);
                let gj = gauss_jacobi(options.radial_nodes, 0.0, c)?;
                let scale = top.powf(c + 1.0);
                gj.nodes
                    .iter()
                    .zip(&gj.weights)
                    .map(|(&u, &w)| {
                        let d = top * u;
                        (1.0 - d, d, nf * (1.0 - d).powi(nn as i32 - 1) * w * scale)
                    })
                    .collect()
            };
            for &(r, d, wr) in &radial {
                let omr2 = d * (1.0 + r);
                for (i, &wa) in aw.iter().enumerate() {
                    shell.coords.extend(dirs[i * nn..(i + 1) * nn].iter().map(|c| r * c));
                    shell.one_minus_r2.push(omr2);
                    shell.delta.push(d);
                    shell.weights.push(wr * wa);
                }
            }
            shells.push(shell);
        }
        Ok(Self { dimension: n, options, shells })
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn options(&self) -> &ShellOptions {
        &self.options
    }

    pub fn depth(&self) -> usize {
        self.options.depth
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    pub fn node_count(&self) -> usize {
        self.shells.iter().map(Shell::len).sum()
    }

    /// Largest `|x|` over all nodes.
    pub fn max_radius(&self) -> f64 {
        1.0 - self.shells.iter().flat_map(|s| s.delta.iter()).fold(1.0f64, |m, d| m.min(*d))
    }

    /// Evaluate `g` at every node (in parallel, deterministic layout).
    pub fn evaluate<G>(&self, g: G) -> Result<ShellValues>
    where
        G: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let n = self.dimension.get();
        let values = self
            .shells
            .iter()
            .map(|s| {
                (0..s.len())
                    .into_par_iter()
                    .with_min_len(64)
                    .map(|i| {
                        let x = &s.coords[i * n..(i + 1) * n];
                        let v = g(x).map_err(failure)?;
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(Error::EvaluationFailure(format!("non-finite value at {x:?}")))
                        }
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ShellValues { values })
    }

    /// Shell-wise integrals of `g (1 - |x|^2)^e dnu` for precomputed node values.
    pub fn integrate_values(&self, values: &ShellValues, weight_exponent: f64) -> ShellIntegral {
        self.integrate_mapped(values, weight_exponent, |v| v)
    }

    /// Like [`Self::integrate_values`] after applying `map` to each value.
    pub fn integrate_mapped(&self, values: &ShellValues, weight_exponent: f64, map: impl Fn(f64) -> f64) -> ShellIntegral {
        let mut increments = Vec::with_capacity(self.shells.len());
        for (s, vals) in self.shells.iter().zip(&values.values) {
            let mut acc = Accumulator::default();
            for (i, &v) in vals.iter().enumerate() {
                let m = map(v);
                if m != 0.0 {
                    acc.add(s.weights[i] * s.weight_factor(i, weight_exponent) * m);
                }
            }
            increments.push(acc.value());
        }
        ShellIntegral::from_increments(increments, self.options.cap_exponent.is_some())
    }

    /// Shell-wise integrals of `g (1 - |x|^2)^e dnu`.
    pub fn integrate_shells<G>(&self, g: G, weight_exponent: f64) -> Result<ShellIntegral>
    where
        G: Fn(&[f64]) -> Result<f64> + Sync,
    {
        Ok(self.integrate_values(&self.evaluate(g)?, weight_exponent))
    }
}

/// Node values aligned with the shells of a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellValues {
    pub values: Vec<Vec<f64>>,
}

/// Per-shell integrals with running partial sums and a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellIntegral {
    pub increments: Vec<f64>,
    pub partial: Vec<f64>,
    pub verdict: Verdict,
    /// Fitted geometric ratio of the trailing shell increments.
    pub ratio: Option<f64>,
}

impl ShellIntegral {
    /// The verdict ignores the cap, which is not a dyadic shell.
    pub fn from_increments(increments: Vec<f64>, has_cap: bool) -> Self {
        let mut partial = Vec::with_capacity(increments.len());
        let mut acc = Accumulator::default();
        for &v in &increments {
            acc.add(v);
            partial.push(acc.value());
        }
        let dyadic = if has_cap { &increments[..increments.len() - 1] } else { &increments[..] };
        let verdict = increment_verdict(dyadic);
        let ratio = fitted_ratio(dyadic);
        Self { increments, partial, verdict, ratio }
    }

    pub fn total(&self) -> f64 {
        self.partial.last().copied().unwrap_or(0.0)
    }
}

/// Supremum estimate of `(1 - |x|^2)^a |g(x)|` with per-shell maxima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupProbe {
    pub sup: f64,
    pub shell_maxima: Vec<f64>,
}

impl SupProbe {
    pub fn from_values(grid: &ShellDecomposition, values: &ShellValues, exponent: f64) -> Self {
        let shell_maxima: Vec<f64> = grid
            .shells()
            .iter()
            .zip(&values.values)
            .map(|(s, vals)| {
                vals.iter().enumerate().map(|(i, v)| s.one_minus_r2[i].powf(exponent) * v.abs()).fold(0.0, f64::max)
            })
            .collect();
        let sup = shell_maxima.iter().copied().fold(0.0, f64::max);
        Self { sup, shell_maxima }
    }
}

/// `sup (1 - |x|^2)^a |g(x)|` over the grid nodes.
pub fn sup_norm_probe<G>(g: G, alpha_plus_t: f64, grid: &ShellDecomposition) -> Result<SupProbe>
where
    G: Fn(&[f64]) -> Result<f64> + Sync,
{
    Ok(SupProbe::from_values(grid, &grid.evaluate(g)?, alpha_plus_t))
}
