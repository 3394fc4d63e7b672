//! Scalar special functions on the unit ball of R^n.
//!
//! Pochhammer symbols, Gegenbauer polynomials, zonal harmonics `Z_k(x, y)`,
//! dimensions of spaces of spherical harmonics and the normalising constants
//! `V_alpha` of the weighted measures `(1 - |x|^2)^alpha dnu`.
//!
//! Throughout, `nu` is the normalised Lebesgue measure on the ball, so that
//! `V_0 = 1`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Slack allowed when checking `|x| <= 1`.
pub const BALL_SLACK: f64 = 1e-12;

/// Ambient Euclidean dimension, always at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("dimension must be >= 2, got {n}")));
        }
        Ok(Self(n))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// `n / 2` as a real number.
    #[inline]
    pub fn half(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Gegenbauer index `lambda = (n - 2) / 2` of the zonal harmonics.
    #[inline]
    pub fn lambda(self) -> f64 {
        (self.0 as f64 - 2.0) / 2.0
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

/// A point of the closed unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BallPoint {
    coords: Vec<f64>,
}

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput("points need at least two coordinates".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        let r = norm(&coords);
        if r > 1.0 + BALL_SLACK {
            return Err(Error::InvalidInput(format!("point has norm {r} > 1")));
        }
        Ok(Self { coords })
    }

    /// The origin of R^n.
    pub fn origin(n: Dimension) -> Self {
        Self { coords: vec![0.0; n.get()] }
    }

    /// `r * e_1`.
    pub fn on_axis(n: Dimension, r: f64) -> Result<Self> {
        Self::polar(n, r, 0.0)
    }

    /// `r (cos(theta) e_1 + sin(theta) e_2)`.
    pub fn polar(n: Dimension, r: f64, theta: f64) -> Result<Self> {
        let mut coords = vec![0.0; n.get()];
        coords[0] = r * theta.cos();
        coords[1] = r * theta.sin();
        Self::new(coords)
    }

    /// The north pole `e_1` of the sphere.
    pub fn north(n: Dimension) -> Self {
        let mut coords = vec![0.0; n.get()];
        coords[0] = 1.0;
        Self { coords }
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn is_on_sphere(&self) -> bool {
        (self.norm() - 1.0).abs() <= BALL_SLACK
    }

    /// `x * c`, which must stay in the ball.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.coords.iter().map(|x| x * c).collect())
    }
}

impl TryFrom<Vec<f64>> for BallPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BallPoint> for Vec<f64> {
    fn from(p: BallPoint) -> Vec<f64> {
        p.coords
    }
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Cosine of the angle between `x` and `y` together with `1 - cos`, the
/// latter computed from the chord between the unit directions so that it
/// keeps full relative accuracy for nearly aligned vectors.
///
/// Both norms must be nonzero.
#[inline]
pub(crate) fn cos_and_gap(x: &[f64], rx: f64, y: &[f64], ry: f64) -> (f64, f64) {
    let mut chord2 = 0.0;
    let mut d = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (ua, ub) = (a / rx, b / ry);
        chord2 += (ua - ub) * (ua - ub);
        d += ua * ub;
    }
    let gap = (0.5 * chord2).clamp(0.0, 2.0);
    (d.clamp(-1.0, 1.0), gap)
}

/// Weight constant `V_alpha` of the measure `nu_alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConstant {
    pub alpha: f64,
    pub value: f64,
}

/// Rising factorial `a (a + 1) ... (a + k - 1)`; `(a)_0 = 1`.
///
/// Short products are multiplied out directly; long ones are accumulated in
/// the log domain with the sign tracked separately, so the result only
/// overflows when the true value does.
pub fn pochhammer(a: f64, k: usize) -> f64 {
    if k <= 32 {
        return (0..k).fold(1.0, |acc, j| acc * (a + j as f64));
    }
    let (ln_abs, sign) = ln_pochhammer(a, k);
    if sign == 0.0 {
        0.0
    } else {
        sign * ln_abs.exp()
    }
}

/// `(ln |(a)_k|, sign((a)_k))`. The sign is `0` when a factor vanishes.
pub fn ln_pochhammer(a: f64, k: usize) -> (f64, f64) {
    let mut ln_abs = 0.0;
    let mut sign = 1.0;
    for j in 0..k {
        let f = a + j as f64;
        if f == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        if f < 0.0 {
            sign = -sign;
        }
        ln_abs += f.abs().ln();
    }
    (ln_abs, sign)
}

/// Dimension `h_k` of the space of degree-`k` spherical harmonics on S^{n-1}.
pub fn dim_spherical_harmonics(n: Dimension, k: usize) -> u64 {
    let n = n.get();
    if k == 0 {
        return 1;
    }
    if n == 2 {
        return 2;
    }
    // h_k = (2k + n - 2) * C(k + n - 3, k) / (n - 2)
    let m = (n - 3) as u128;
    let mut binom: u128 = 1;
    for i in 1..=m {
        binom = binom * (k as u128 + i) / i;
    }
    let h = (2 * k as u128 + n as u128 - 2) * binom / (n as u128 - 2);
    h as u64
}

/// `h_k` as a float, via the ratio recurrence (no integer overflow).
pub fn dim_spherical_harmonics_f64(n: Dimension, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if n.get() == 2 {
        return 2.0;
    }
    let nf = n.get() as f64;
    (0..k).fold(1.0, |h, j| h * harmonic_dim_ratio(nf, j))
}

/// `h_{k+1} / h_k` for `n >= 3`.
#[inline]
pub(crate) fn harmonic_dim_ratio(n: f64, k: usize) -> f64 {
    let k = k as f64;
    (2.0 * k + n) / (2.0 * k + n - 2.0) * (k + n - 2.0) / (k + 1.0)
}

/// Gegenbauer polynomial `C_k^lambda(u)` by the three-term recurrence.
pub fn gegenbauer(lambda: f64, k: usize, u: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * lambda * u;
    for j in 2..=k {
        let jf = j as f64;
        let next = (2.0 * u * (jf + lambda - 1.0) * cur - (jf + 2.0 * lambda - 2.0) * prev) / jf;
        prev = cur;
        cur = next;
    }
    cur
}

/// Zonal harmonic `Z_k(x, y)`, the reproducing kernel of the degree-`k`
/// spherical harmonics extended homogeneously to the ball.
pub fn zonal(n: Dimension, k: usize, x: &BallPoint, y: &BallPoint) -> f64 {
    zonal_coords(n, k, x.coords(), y.coords())
}

/// [`zonal`] on raw coordinate slices.
pub(crate) fn zonal_coords(n: Dimension, k: usize, x: &[f64], y: &[f64]) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let (rx, ry) = (norm(x), norm(y));
    if rx == 0.0 || ry == 0.0 {
        return 0.0;
    }
    let scale = (rx * ry).powi(k as i32);
    let u = (dot(x, y) / (rx * ry)).clamp(-1.0, 1.0);
    if n.get() == 2 {
        return 2.0 * scale * (k as f64 * u.acos()).cos();
    }
    let nf = n.get() as f64;
    let kf = k as f64;
    scale * (2.0 * kf + nf - 2.0) / (nf - 2.0) * gegenbauer(n.lambda(), k, u)
}

/// Normalised zonal polynomial `P_k(u) = C_k^lambda(u) / C_k^lambda(1)`
/// (`cos(k theta)` when `n = 2`), so that `Z_k(x, y) = h_k |x|^k |y|^k P_k(u)`.
///
/// `gap = 1 - u` is supplied separately for accuracy near `u = 1`.
#[cfg(test)]
pub(crate) fn normalized_zonal(n: Dimension, k: usize, u: f64, gap: f64) -> f64 {
    let mut rec = ZonalRecurrence::new(u, gap);
    let mut p = 1.0;
    for j in 1..=k {
        let (a, b) = zonal_recurrence_coeffs(n.lambda(), j);
        p = rec.step(j, a, b);
    }
    p
}

/// Recurrence coefficients for the normalised zonal polynomials:
/// `P_k = a_k u P_{k-1} - b_k P_{k-2}` with `a_k - b_k = 1`.
#[inline]
pub(crate) fn zonal_recurrence_coeffs(lambda: f64, k: usize) -> (f64, f64) {
    if k == 1 {
        return (1.0, 0.0);
    }
    let kf = k as f64;
    let den = kf + 2.0 * lambda - 1.0;
    (2.0 * (kf + lambda - 1.0) / den, (kf - 1.0) / den)
}

/// Stepper over `P_1, P_2, ...` at a fixed argument.
///
/// For `|u| > 1/2` the difference form `d_k = P_k - P_{k-1}` is propagated,
/// which keeps the rounding growth linear in `k` near the poles; negative
/// arguments are folded onto `|u|` with the parity `(-1)^k`.
pub(crate) struct ZonalRecurrence {
    u: f64,
    gap: f64,
    flip: bool,
    reinsch: bool,
    prev: f64,
    cur: f64,
    diff: f64,
}

impl ZonalRecurrence {
    pub(crate) fn new(u: f64, gap: f64) -> Self {
        let flip = u < 0.0;
        let (u, gap) = if flip { (-u, 1.0 + u) } else { (u, gap) };
        // for flipped arguments 1 - |u| = 1 + u (exact enough away from u = 0)
        Self {
            u,
            gap,
            flip,
            reinsch: u > 0.5,
            prev: 0.0,
            cur: 1.0,
            diff: 0.0,
        }
    }

    /// Advance to `P_k` given the recurrence coefficients for `k`; must be
    /// called with `k = 1, 2, ...` in order.
    #[inline]
    pub(crate) fn step(&mut self, k: usize, a: f64, b: f64) -> f64 {
        if self.reinsch {
            self.diff = -a * self.gap * self.cur + b * self.diff;
            self.cur += self.diff;
        } else {
            let next = a * self.u * self.cur - b * self.prev;
            self.prev = self.cur;
            self.cur = next;
        }
        if self.flip && k % 2 == 1 {
            -self.cur
        } else {
            self.cur
        }
    }
}

/// `V_alpha = (n/2) B(n/2, alpha + 1)` for `alpha > -1`, else `1`.
pub fn weight_constant(n: Dimension, alpha: f64) -> WeightConstant {
    let value = if alpha > -1.0 {
        let h = n.half();
        h * (ln_gamma(h) + ln_gamma(alpha + 1.0) - ln_gamma(h + alpha + 1.0)).exp()
    } else {
        1.0
    };
    WeightConstant { alpha, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(7.3, 0), 1.0);
        assert_eq!(pochhammer(2.0, 3), 24.0);
        assert_eq!(pochhammer(0.5, 2), 0.75);
        assert_eq!(pochhammer(-2.0, 3), 0.0);
        // log-domain branch agrees with Gamma ratios
        let direct = (ln_gamma(1.5 + 100.0) - ln_gamma(1.5)).exp();
        assert_relative_eq!(pochhammer(1.5, 100), direct, max_relative = 1e-12);
        // sign tracking: (-3.5)_40 has four negative factors
        assert!(pochhammer(-3.5, 40) > 0.0);
        assert!(pochhammer(-2.5, 40) < 0.0);
    }

    #[test]
    fn harmonic_dimensions() {
        assert_eq!(dim_spherical_harmonics(dim(2), 5), 2);
        assert_eq!(dim_spherical_harmonics(dim(3), 4), 9);
        assert_eq!(dim_spherical_harmonics(dim(7), 0), 1);
        // n = 4: (k + 1)^2
        assert_eq!(dim_spherical_harmonics(dim(4), 6), 49);
        for n in 2..7 {
            for k in 0..30 {
                let h = dim_spherical_harmonics(dim(n), k) as f64;
                assert_relative_eq!(dim_spherical_harmonics_f64(dim(n), k), h, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn gegenbauer_examples() {
        assert_eq!(gegenbauer(0.7, 0, 0.3), 1.0);
        assert_relative_eq!(gegenbauer(0.5, 2, 0.5), -0.125, epsilon = 1e-15);
        assert_relative_eq!(gegenbauer(1.0, 2, 0.0), -1.0, epsilon = 1e-15);
        for &lambda in &[0.5, 1.0, 1.5, 2.25] {
            for k in 0..40 {
                let expected = pochhammer(2.0 * lambda, k) / pochhammer(1.0, k);
                assert_relative_eq!(gegenbauer(lambda, k, 1.0), expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn zonal_examples() {
        let n3 = dim(3);
        let x = BallPoint::new(vec![0.3, -0.2, 0.4]).unwrap();
        let y = BallPoint::new(vec![0.1, 0.5, -0.6]).unwrap();
        assert_eq!(zonal(n3, 3, &BallPoint::origin(n3), &y), 0.0);
        assert_relative_eq!(zonal(n3, 1, &x, &y), 3.0 * dot(x.coords(), y.coords()), epsilon = 1e-15);
        for n in 2..6 {
            let zeta = BallPoint::north(dim(n));
            for k in 0..25 {
                let h = dim_spherical_harmonics(dim(n), k) as f64;
                assert_relative_eq!(zonal(dim(n), k, &zeta, &zeta), h, max_relative = 1e-12);
            }
        }
        assert_eq!(zonal(n3, 5, &x, &y), zonal(n3, 5, &y, &x));
    }

    #[test]
    fn normalized_recurrence_matches_gegenbauer() {
        for n in [2usize, 3, 5] {
            let d = dim(n);
            for &u in &[-0.999, -0.7, -0.2, 0.0, 0.4, 0.75, 0.9999] {
                for k in 0..60 {
                    let p = normalized_zonal(d, k, u, 1.0 - u);
                    let expected = if n == 2 {
                        (k as f64 * u.acos()).cos()
                    } else {
                        gegenbauer(d.lambda(), k, u) / gegenbauer(d.lambda(), k, 1.0)
                    };
                    assert!((p - expected).abs() < 1e-11, "n={n} u={u} k={k}: {p} vs {expected}");
                }
            }
        }
    }

    #[test]
    fn weight_constants() {
        assert_relative_eq!(weight_constant(dim(2), 0.0).value, 1.0, epsilon = 1e-14);
        assert_relative_eq!(weight_constant(dim(2), 1.0).value, 0.5, epsilon = 1e-14);
        assert_eq!(weight_constant(dim(5), -3.0).value, 1.0);
        assert_eq!(weight_constant(dim(3), -1.0).value, 1.0);
        // n = 3, alpha = 1: 3 int_0^1 r^2 (1 - r^2) dr = 2/5
        assert_relative_eq!(weight_constant(dim(3), 1.0).value, 0.4, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Dimension::new(1).is_err());
        assert!(BallPoint::new(vec![1.0, 0.5]).is_err());
        assert!(BallPoint::new(vec![0.5]).is_err());
        assert!(BallPoint::new(vec![f64::NAN, 0.0]).is_err());
    }
}
