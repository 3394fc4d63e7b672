//! Extended kernel coefficients `gamma_k(alpha)` and certified evaluation of
//! zonal series `sum_k c_k Z_k(x, y)`, in particular the extended
//! reproducing kernels `R_alpha(x, y) = sum_k gamma_k(alpha) Z_k(x, y)`.
//!
//! Every coefficient sequence handled here is a ratio of Pochhammer
//! products, `c_k = prod_i (a_i)_k / prod_i (b_i)_k` with all parameters
//! positive. That structure gives a cheap rigorous tail bound: the ratio
//! `c_{k+1} h_{k+1} / (c_k h_k)` is a product of factors `(k + a)/(k + b)`,
//! each monotone in `k`, so beyond any degree `K` it is bounded by the
//! product of `max(1, (K + a)/(K + b))`. Combined with
//! `|Z_k(x, y)| <= h_k (|x||y|)^k` the remainder after degree `K` is at most
//! a geometric series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{
    cos_and_gap, dim_spherical_harmonics_f64, harmonic_dim_ratio, norm, zonal_recurrence_coeffs,
    BallPoint, Dimension, ZonalRecurrence,
};

/// Hard cap on the truncation degree of any series.
pub const MAX_DEGREE: usize = 200_000;

/// Tolerance used when deciding that two kernel parameters coincide.
pub(crate) const PARAM_EPS: f64 = 1e-12;

#[inline]
pub(crate) fn same_param(a: f64, b: f64) -> bool {
    (a - b).abs() <= PARAM_EPS * a.abs().max(b.abs()).max(1.0)
}

/// A single coefficient `gamma_k(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelCoefficient {
    pub alpha: f64,
    pub k: usize,
    pub value: f64,
}

/// A truncated kernel value with its certified remainder bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub value: f64,
    pub degree_used: usize,
    pub tail_bound: f64,
}

/// Stopping rule for series summation: stop as soon as the certified
/// remainder is below `max(abs, rel * M)`, where `M` is the partial sum of
/// the majorant `sum c_k h_k rho^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTol {
    pub abs: f64,
    pub rel: f64,
}

impl SeriesTol {
    pub fn absolute(tol: f64) -> Self {
        Self { abs: tol, rel: 0.0 }
    }

    pub fn relative(tol: f64) -> Self {
        Self { abs: 0.0, rel: tol }
    }
}

/// Pochhammer-ratio coefficient sequence `prod (a_i)_k / prod (b_i)_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PochhammerRatio {
    numer: Vec<f64>,
    denom: Vec<f64>,
}

impl PochhammerRatio {
    /// The constant sequence `1`.
    pub fn one() -> Self {
        Self { numer: Vec::new(), denom: Vec::new() }
    }

    /// Parameters of `gamma_k(alpha)` in dimension `n`; `alpha` exactly at
    /// the branch point `-(1 + n/2)` takes the lower branch.
    pub fn gamma(n: Dimension, alpha: f64) -> Self {
        let h = n.half();
        if alpha > -(1.0 + h) {
            Self { numer: vec![1.0 + h + alpha], denom: vec![h] }
        } else {
            Self { numer: vec![1.0, 1.0], denom: vec![1.0 - (h + alpha), h] }
        }
        .simplified()
    }

    /// Parameters of the multiplier `gamma_k(s + t) / gamma_k(s)` of `D^t_s`.
    pub fn multiplier(n: Dimension, s: f64, t: f64) -> Self {
        Self::gamma(n, s + t).times(&Self::gamma(n, s).inverse())
    }

    pub fn inverse(&self) -> Self {
        Self { numer: self.denom.clone(), denom: self.numer.clone() }
    }

    pub fn times(&self, other: &Self) -> Self {
        let mut numer = self.numer.clone();
        numer.extend_from_slice(&other.numer);
        let mut denom = self.denom.clone();
        denom.extend_from_slice(&other.denom);
        Self { numer, denom }.simplified()
    }

    /// Cancel matching numerator/denominator parameters and sort.
    fn simplified(mut self) -> Self {
        let mut i = 0;
        while i < self.numer.len() {
            if let Some(j) = self.denom.iter().position(|&b| same_param(self.numer[i], b)) {
                self.numer.swap_remove(i);
                self.denom.swap_remove(j);
            } else {
                i += 1;
            }
        }
        self.numer.sort_by(f64::total_cmp);
        self.denom.sort_by(f64::total_cmp);
        self
    }

    pub fn numer(&self) -> &[f64] {
        &self.numer
    }

    pub fn denom(&self) -> &[f64] {
        &self.denom
    }

    /// True when every parameter is positive, so every coefficient is positive
    /// and the monotone ratio bound applies.
    pub fn is_positive(&self) -> bool {
        self.numer.iter().chain(&self.denom).all(|&p| p > 0.0)
    }

    /// `ln c_k`, summing `ln((a + j)/(b + j))` pairwise so that the terms
    /// stay small. Requires a positive sequence.
    pub fn ln_value(&self, k: usize) -> f64 {
        let paired = self.numer.len().min(self.denom.len());
        let mut acc = 0.0;
        for j in 0..k {
            let jf = j as f64;
            for i in 0..paired {
                let (a, b) = (self.numer[i], self.denom[i]);
                acc += ((a - b) / (b + jf)).ln_1p();
            }
            for &a in &self.numer[paired..] {
                acc += (a + jf).ln();
            }
            for &b in &self.denom[paired..] {
                acc -= (b + jf).ln();
            }
        }
        acc
    }

    /// `c_k`.
    pub fn value(&self, k: usize) -> f64 {
        if self.numer.is_empty() && self.denom.is_empty() {
            return 1.0;
        }
        if k <= 32 {
            let mut v = 1.0;
            for j in 0..k {
                v *= self.ratio(j);
            }
            return v;
        }
        self.ln_value(k).exp()
    }

    /// `c_{k+1} / c_k`.
    #[inline]
    pub fn ratio(&self, k: usize) -> f64 {
        let kf = k as f64;
        let mut r = 1.0;
        let paired = self.numer.len().min(self.denom.len());
        for i in 0..paired {
            r *= (kf + self.numer[i]) / (kf + self.denom[i]);
        }
        for &a in &self.numer[paired..] {
            r *= kf + a;
        }
        for &b in &self.denom[paired..] {
            r /= kf + b;
        }
        r
    }

    /// Upper bound of `c_{j+1} / c_j` over all `j >= k`: pair the sorted
    /// parameter lists and bound each monotone factor `(j + a)/(j + b)` by
    /// its supremum over `j >= k`.
    #[inline]
    pub fn ratio_bound(&self, k: usize) -> f64 {
        if self.numer.len() > self.denom.len() {
            return f64::INFINITY;
        }
        let kf = k as f64;
        let mut r = 1.0;
        for (i, &b) in self.denom.iter().enumerate() {
            let a = self.numer.get(i).copied().unwrap_or(1.0);
            r *= ((kf + a) / (kf + b)).max(1.0);
        }
        r
    }

    /// Asymptotic growth exponent `sum a_i - sum b_i` (`c_k ~ k^e`).
    pub fn growth_exponent(&self) -> f64 {
        self.numer.iter().sum::<f64>() - self.denom.iter().sum::<f64>()
    }
}

/// `gamma_k(alpha)`, both branches.
pub fn gamma_coeff(n: Dimension, alpha: f64, k: usize) -> KernelCoefficient {
    KernelCoefficient { alpha, k, value: PochhammerRatio::gamma(n, alpha).value(k) }
}

/// `gamma_k(s + t) / gamma_k(s)`, the multiplier of `D^t_s` on degree `k`.
pub fn gamma_ratio(n: Dimension, s: f64, t: f64, k: usize) -> f64 {
    if t == 0.0 || k == 0 {
        return 1.0;
    }
    let num = PochhammerRatio::gamma(n, s + t);
    let den = PochhammerRatio::gamma(n, s);
    (num.ln_value(k) - den.ln_value(k)).exp()
}

/// Precomputed `c_k h_k` and zonal recurrence coefficients for one
/// coefficient sequence in one dimension.
#[derive(Debug, Clone)]
pub struct SeriesTable {
    n: Dimension,
    coeffs: PochhammerRatio,
    /// `c_k h_k`
    major: Vec<f64>,
    rec_a: Vec<f64>,
    rec_b: Vec<f64>,
}

impl SeriesTable {
    pub fn new(n: Dimension, coeffs: PochhammerRatio) -> Result<Self> {
        if !coeffs.is_positive() {
            return Err(Error::InvalidInput(format!(
                "coefficient parameters must be positive: {coeffs:?}"
            )));
        }
        let mut table = Self { n, coeffs, major: vec![1.0], rec_a: vec![0.0], rec_b: vec![0.0] };
        table.extend_to(64);
        Ok(table)
    }

    pub fn dimension(&self) -> Dimension {
        self.n
    }

    pub fn coeffs(&self) -> &PochhammerRatio {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.major.len()
    }

    pub fn is_empty(&self) -> bool {
        self.major.is_empty()
    }

    /// Grow the table so that degrees `< len` are precomputed.
    pub fn extend_to(&mut self, len: usize) {
        let len = len.min(MAX_DEGREE + 1);
        let nf = self.n.get() as f64;
        let lambda = self.n.lambda();
        while self.major.len() < len {
            let k = self.major.len();
            let prev = self.major[k - 1];
            let h_ratio = self.h_ratio(nf, k - 1);
            self.major.push(prev * self.coeffs.ratio(k - 1) * h_ratio);
            let (a, b) = zonal_recurrence_coeffs(lambda, k);
            self.rec_a.push(a);
            self.rec_b.push(b);
        }
    }

    #[inline]
    fn h_ratio(&self, nf: f64, k: usize) -> f64 {
        if self.n.get() == 2 {
            if k == 0 {
                2.0
            } else {
                1.0
            }
        } else {
            harmonic_dim_ratio(nf, k)
        }
    }

    /// Bound on `m_{j+1} / m_j` for `j >= k >= 1`, excluding the factor `rho`.
    #[inline]
    fn majorant_ratio_bound(&self, k: usize) -> f64 {
        let c = self.coeffs.ratio_bound(k);
        if self.n.get() == 2 {
            return c;
        }
        let kf = k as f64;
        let nf = self.n.get() as f64;
        let f1 = ((2.0 * kf + nf) / (2.0 * kf + nf - 2.0)).max(1.0);
        let f2 = ((kf + nf - 2.0) / (kf + 1.0)).max(1.0);
        c * f1 * f2
    }

    /// Certified remainder after degree `k` given the current majorant term
    /// `m = c_k h_k rho^k`, or `None` if the geometric bound is not yet valid.
    #[inline]
    fn tail_after(&self, k: usize, m: f64, rho: f64) -> Option<f64> {
        let q = rho * self.majorant_ratio_bound(k);
        (q < 1.0).then(|| m * q / (1.0 - q))
    }

    /// Degree needed for a certified sum at `rho` (independent of the angle).
    pub fn degree_needed(&mut self, rho: f64, tol: SeriesTol) -> Result<usize> {
        if rho == 0.0 {
            return Ok(0);
        }
        check_rho(rho)?;
        let mut pw = 1.0;
        let mut major_sum = 1.0;
        for k in 1..=MAX_DEGREE {
            if k >= self.major.len() {
                self.extend_to((2 * k).max(128));
            }
            pw *= rho;
            let m = self.major[k] * pw;
            major_sum += m;
            if k % 8 == 0 || k < 8 {
                if let Some(tail) = self.tail_after(k, m, rho) {
                    if tail <= tol.abs.max(tol.rel * major_sum) {
                        return Ok(k);
                    }
                }
            }
        }
        Err(non_convergent(rho))
    }

    /// Make sure evaluations up to `rho_max` run entirely from the table.
    pub fn prepare(&mut self, rho_max: f64, tol: SeriesTol) -> Result<usize> {
        let k = self.degree_needed(rho_max, tol)?;
        self.extend_to(k + 16);
        Ok(k)
    }

    /// `sum_k c_k h_k rho^k P_k(u)`, where `rho = |x||y|` and `u`, `gap = 1-u`
    /// describe the angle between `x` and `y`.
    pub fn sum(&self, rho: f64, u: f64, gap: f64, tol: SeriesTol) -> Result<KernelEval> {
        if rho == 0.0 {
            return Ok(KernelEval { value: self.major[0], degree_used: 0, tail_bound: 0.0 });
        }
        check_rho(rho)?;
        let mut rec = ZonalRecurrence::new(u, gap);
        let mut value = self.major[0];
        let mut major_sum = value;
        let mut pw = 1.0;
        let lambda = self.n.lambda();
        let nf = self.n.get() as f64;
        // running c_k h_k, taken from the table while it lasts
        let mut m_coef = self.major[0];
        for k in 1..=MAX_DEGREE {
            pw *= rho;
            let p = if k < self.major.len() {
                m_coef = self.major[k];
                rec.step(k, self.rec_a[k], self.rec_b[k])
            } else {
                m_coef *= self.coeffs.ratio(k - 1) * self.h_ratio(nf, k - 1);
                let (a, b) = zonal_recurrence_coeffs(lambda, k);
                rec.step(k, a, b)
            };
            let m = m_coef * pw;
            value += m * p;
            major_sum += m;
            if k % 8 == 0 || k < 8 {
                if let Some(tail) = self.tail_after(k, m, rho) {
                    if tail <= tol.abs.max(tol.rel * major_sum) {
                        return Ok(KernelEval { value, degree_used: k, tail_bound: tail });
                    }
                }
            }
        }
        Err(non_convergent(rho))
    }

    /// Evaluate at a pair of points.
    pub fn eval(&self, x: &[f64], y: &[f64], tol: SeriesTol) -> Result<KernelEval> {
        let (rx, ry) = (norm(x), norm(y));
        if rx == 0.0 || ry == 0.0 {
            return self.sum(0.0, 1.0, 0.0, tol);
        }
        let (u, gap) = cos_and_gap(x, rx, y, ry);
        self.sum(rx * ry, u, gap, tol)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho < 1.0) || rho.is_nan() {
        return Err(Error::NonConvergent(format!(
            "|x||y| = {rho} >= 1: the series is not certified on the boundary"
        )));
    }
    Ok(())
}

fn non_convergent(rho: f64) -> Error {
    Error::NonConvergent(format!(
        "remainder not certified within degree {MAX_DEGREE} at |x||y| = {rho}"
    ))
}

/// Truncated `R_alpha(x, y)` with `tail_bound <= tol`.
pub fn kernel_eval(n: Dimension, alpha: f64, x: &BallPoint, y: &BallPoint, tol: f64) -> Result<KernelEval> {
    check_dims(n, x)?;
    check_dims(n, y)?;
    let mut table = SeriesTable::new(n, PochhammerRatio::gamma(n, alpha))?;
    let rho = x.norm() * y.norm();
    let tol = SeriesTol::absolute(tol);
    table.prepare(rho, tol)?;
    table.eval(x.coords(), y.coords(), tol)
}

pub(crate) fn check_dims(n: Dimension, x: &BallPoint) -> Result<()> {
    if x.dim() != n.get() {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, dimension is {}",
            x.dim(),
            n.get()
        )));
    }
    Ok(())
}

/// `|R_alpha(r zeta, zeta)|` along the radius ending at the pole `zeta`.
pub fn kernel_growth_exponent_probe(
    n: Dimension,
    alpha: f64,
    zeta: &BallPoint,
    radii: &[f64],
) -> Result<Vec<(f64, f64)>> {
    check_dims(n, zeta)?;
    if !zeta.is_on_sphere() {
        return Err(Error::InvalidInput("probe pole must lie on the sphere".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|&r| !(0.0..1.0).contains(&r)) {
        return Err(Error::InvalidInput("radii must increase strictly inside [0, 1)".into()));
    }
    let mut table = SeriesTable::new(n, PochhammerRatio::gamma(n, alpha))?;
    let tol = SeriesTol::relative(1e-13);
    if let Some(&r_max) = radii.last() {
        table.prepare(r_max, tol)?;
    }
    radii
        .iter()
        .map(|&r| Ok((r, table.sum(r, 1.0, 0.0, tol)?.value.abs())))
        .collect()
}

/// Plain partial sum `sum_{k <= degree} gamma_k(alpha) h_k rho^k`, the value of
/// `R_alpha(rho zeta, zeta)` truncated at a fixed degree. Used as an
/// independent reference for the adaptive evaluator.
pub fn pole_partial_sum(n: Dimension, alpha: f64, rho: f64, degree: usize) -> f64 {
    let coeffs = PochhammerRatio::gamma(n, alpha);
    (0..=degree)
        .map(|k| coeffs.value(k) * dim_spherical_harmonics_f64(n, k) * rho.powi(k as i32))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{pochhammer, zonal};
    use approx::assert_relative_eq;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    /// Independent evaluation straight from the branch definition.
    fn gamma_direct(n: usize, alpha: f64, k: usize) -> f64 {
        let h = n as f64 / 2.0;
        if alpha > -(1.0 + h) {
            pochhammer(1.0 + h + alpha, k) / pochhammer(h, k)
        } else {
            pochhammer(1.0, k).powi(2) / (pochhammer(1.0 - (h + alpha), k) * pochhammer(h, k))
        }
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_coeff(dim(3), 0.7, 0).value, 1.0);
        assert_relative_eq!(gamma_coeff(dim(2), 0.0, 1).value, 2.0, epsilon = 1e-15);
        for k in 0..=20 {
            assert_relative_eq!(gamma_coeff(dim(2), -2.0, k).value, 1.0 / (k as f64 + 1.0), max_relative = 1e-14);
        }
        for n in 2..6 {
            for &alpha in &[-9.5, -4.0, -3.0, -2.5, -1.0, 0.0, 0.3, 4.0] {
                for k in [0, 1, 5, 17, 30] {
                    let expected = gamma_direct(n, alpha, k);
                    assert_relative_eq!(gamma_coeff(dim(n), alpha, k).value, expected, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn branch_point_uses_lower_branch() {
        // n = 2, alpha = -2 is exactly the branch point -(1 + n/2)
        let p = PochhammerRatio::gamma(dim(2), -2.0);
        assert_eq!(p.numer(), &[1.0]);
        assert_eq!(p.denom(), &[2.0]);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(gamma_ratio(dim(3), 1.2, 0.0, 9), 1.0);
        assert_eq!(gamma_ratio(dim(3), 1.2, 2.5, 0), 1.0);
        assert_relative_eq!(gamma_ratio(dim(2), 0.0, 1.0, 1), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn positivity_grid() {
        for n in [2, 3] {
            for a in -10..=10 {
                let p = PochhammerRatio::gamma(dim(n), a as f64);
                assert!(p.is_positive());
                let mut c = 1.0;
                for k in 0..2000 {
                    assert!(c > 0.0);
                    c *= p.ratio(k);
                }
            }
        }
    }

    #[test]
    fn series_matches_zonal_sum() {
        let n = dim(3);
        let x = BallPoint::new(vec![0.3, 0.2, -0.1]).unwrap();
        let y = BallPoint::new(vec![-0.5, 0.4, 0.6]).unwrap();
        let alpha = 0.4;
        let direct: f64 = (0..80).map(|k| gamma_coeff(n, alpha, k).value * zonal(n, k, &x, &y)).sum();
        let eval = kernel_eval(n, alpha, &x, &y, 1e-14).unwrap();
        assert!((eval.value - direct).abs() < 1e-13);
        assert!(eval.tail_bound <= 1e-14);
    }

    #[test]
    fn kernel_eval_examples() {
        let n = dim(3);
        let x = BallPoint::new(vec![0.2, -0.7, 0.1]).unwrap();
        let zero = BallPoint::origin(n);
        assert_eq!(kernel_eval(n, 1.5, &x, &zero, 1e-10).unwrap().value, 1.0);
        let y = BallPoint::new(vec![0.6, 0.3, -0.5]).unwrap();
        let a = kernel_eval(n, -2.7, &x, &y, 1e-12).unwrap().value;
        let b = kernel_eval(n, -2.7, &y, &x, 1e-12).unwrap().value;
        assert!((a - b).abs() <= 2e-12);
        let zeta = BallPoint::north(n);
        assert!(matches!(kernel_eval(n, 0.0, &zeta, &zeta, 1e-8), Err(Error::NonConvergent(_))));
    }

    #[test]
    fn kernel_eval_against_high_degree_partial_sum() {
        let n = dim(3);
        let x = BallPoint::on_axis(n, 0.5).unwrap();
        let zeta = BallPoint::north(n);
        let tol = 1e-12;
        let eval = kernel_eval(n, 0.0, &x, &zeta, tol).unwrap();
        let oracle = pole_partial_sum(n, 0.0, 0.5, 4000);
        assert!((eval.value - oracle).abs() <= tol, "{} vs {}", eval.value, oracle);
    }

    #[test]
    fn doubling_degree_stays_within_tail_bound() {
        let n = dim(2);
        let x = BallPoint::polar(n, 0.95, 0.3).unwrap();
        let y = BallPoint::polar(n, 0.9, -0.2).unwrap();
        let alpha = 1.3;
        let eval = kernel_eval(n, alpha, &x, &y, 1e-9).unwrap();
        let k = eval.degree_used;
        let longer: f64 = (0..=2 * k).map(|j| gamma_coeff(n, alpha, j).value * zonal(n, j, &x, &y)).sum();
        assert!((longer - eval.value).abs() <= eval.tail_bound + 1e-11);
    }

    #[test]
    fn growth_probe() {
        let n = dim(2);
        let zeta = BallPoint::north(n);
        let rows = kernel_growth_exponent_probe(n, 0.0, &zeta, &[0.0, 0.5, 0.9, 0.99, 0.999, 0.9995]).unwrap();
        assert_eq!(rows[0].1, 1.0);
        for w in rows.windows(2).skip(1) {
            assert!(w[1].1 > w[0].1);
        }
        let (r1, v1) = rows[4];
        let (r2, v2) = rows[5];
        let slope = (v2.ln() - v1.ln()) / ((1.0 / (1.0 - r2 * r2)).ln() - (1.0 / (1.0 - r1 * r1)).ln());
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
        assert!(kernel_growth_exponent_probe(n, 0.0, &zeta, &[0.5, 0.4]).is_err());
    }
}
