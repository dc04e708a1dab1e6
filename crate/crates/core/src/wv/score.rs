//! Tukey biweight score for wavelet variance and its Gaussian calibration.
//!
//! The estimating function for a coefficient `W` at candidate variance `nu` is
//!
//! ```text
//! Psi(W, nu) = w_c(W / sqrt(nu))^2 * W^2 / nu - b_c,    b_c = E[w_c(Z)^2 Z^2]
//! ```
//!
//! with `w_c(x) = (1 - (x/c)^2)^2` on `|x| <= c`. At the Gaussian model the
//! root is the true variance; as `c -> inf` it collapses to the mean of squares.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Tukey biweight weight, in `[0, 1]`.
#[inline]
pub fn tukey_weight(x: f64, c: f64) -> f64 {
    if c.is_infinite() {
        return 1.0;
    }
    let u = x / c;
    if u.abs() <= 1.0 {
        let v = 1.0 - u * u;
        v * v
    } else {
        0.0
    }
}

/// `g(z) = w_c(z)^2 z^2`, the bounded replacement for `z^2`.
#[inline]
pub(crate) fn score_kernel(z: f64, c: f64) -> f64 {
    let w = tukey_weight(z, c);
    w * w * z * z
}

/// `z g'(z)`, used for the derivative of the score in `nu`.
#[inline]
pub(crate) fn score_kernel_slope(z: f64, c: f64) -> f64 {
    if c.is_infinite() {
        return 2.0 * z * z;
    }
    let u = (z / c) * (z / c);
    if u > 1.0 {
        return 0.0;
    }
    let v = 1.0 - u;
    2.0 * z * z * v * v * v * (1.0 - 5.0 * u)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Adaptive Simpson quadrature on `[a, b]`.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Gaussian expectation of `f(Z)` restricted to `|Z| <= c` (or a wide
/// window when `c` is infinite).
fn gaussian_expectation(f: impl Fn(f64) -> f64, c: f64) -> f64 {
    let lim = if c.is_finite() { c.min(40.0) } else { 40.0 };
    let h = |z: f64| f(z) * std_normal_pdf(z);
    // integrand is even in all uses; integrate one side and double. Unit
    // panels keep the adaptive rule from stepping over the bulk when the
    // window is wide.
    let mut total = 0.0;
    let mut a = 0.0;
    while a < lim {
        let b = (a + 1.0).min(lim);
        total += integrate(&h, a, b, 1e-16);
        a = b;
    }
    2.0 * total
}

/// Fisher-consistency constant `b_c = E[w_c(Z)^2 Z^2]`, `Z ~ N(0,1)`.
pub fn consistency_constant(c: f64) -> f64 {
    if c.is_infinite() {
        return 1.0;
    }
    assert!(c > 0.0, "tuning constant must be positive");
    gaussian_expectation(|z| score_kernel(z, c), c)
}

/// `E[Z g'(Z)]` under the standard normal.
pub(crate) fn expected_kernel_slope(c: f64) -> f64 {
    if c.is_infinite() {
        return 2.0;
    }
    gaussian_expectation(|z| score_kernel_slope(z, c), c)
}

/// Asymptotic efficiency of the Tukey WV estimator relative to the mean of
/// squares for i.i.d. Gaussian coefficients.
///
/// With `Psi = g(W/sqrt(nu)) - b_c` the M-estimator has asymptotic variance
/// `4 nu^2 Var[g(Z)] / E[Z g'(Z)]^2`, against `2 nu^2` for the classical one.
pub fn gaussian_efficiency(c: f64) -> f64 {
    if c.is_infinite() {
        return 1.0;
    }
    let b = consistency_constant(c);
    let second = gaussian_expectation(|z| score_kernel(z, c).powi(2), c);
    let slope = gaussian_expectation(|z| score_kernel_slope(z, c), c);
    let var = second - b * b;
    if var <= 0.0 || slope <= 0.0 {
        return 0.0;
    }
    slope * slope / (2.0 * var)
}

/// Smallest tuning constant at which the score is increasing in scale at the
/// Gaussian model (`E[Z g'(Z)] = 0`). Below it the Fisher-consistent root
/// switches branch and efficiency is no longer monotone in `c`.
fn monotone_branch_start() -> f64 {
    static START: OnceLock<f64> = OnceLock::new();
    *START.get_or_init(|| {
        let slope = |c: f64| gaussian_expectation(|z| score_kernel_slope(z, c), c);
        let (mut lo, mut hi) = (1.5, 4.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        hi
    })
}

/// Tuning of the robust wavelet-variance estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustScore {
    /// Tukey constant; `f64::INFINITY` means the classical estimator.
    pub c: f64,
    pub b_c: f64,
    pub efficiency: f64,
}

impl RobustScore {
    /// Score with an explicit tuning constant.
    pub fn with_constant(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::invalid(format!("tuning constant must be positive, got {c}")));
        }
        Ok(Self { c, b_c: consistency_constant(c), efficiency: gaussian_efficiency(c) })
    }

    /// The unbounded limit, equivalent to the classical estimator.
    pub fn classical_limit() -> Self {
        Self { c: f64::INFINITY, b_c: 1.0, efficiency: 1.0 }
    }

    pub fn is_classical_limit(&self) -> bool {
        self.c.is_infinite()
    }
}

const CACHED_EFFICIENCIES: [f64; 7] = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99];

fn tuning_cache() -> &'static Mutex<HashMap<u64, RobustScore>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, RobustScore>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Tukey constant achieving the requested Gaussian efficiency.
///
/// Efficiency 1 returns the classical limit. Results are memoized; the
/// common levels 0.5..0.99 are computed together on first use.
pub fn tuning_for_efficiency(efficiency: f64) -> Result<RobustScore> {
    if !(efficiency > 0.05 && efficiency <= 1.0) {
        return Err(Error::invalid(format!("efficiency must lie in (0.05, 1], got {efficiency}")));
    }
    if efficiency == 1.0 {
        return Ok(RobustScore::classical_limit());
    }
    let key = efficiency.to_bits();
    if let Some(s) = tuning_cache().lock().unwrap().get(&key) {
        return Ok(*s);
    }
    if tuning_cache().lock().unwrap().is_empty() {
        let table: Vec<_> = CACHED_EFFICIENCIES.iter().map(|&e| (e.to_bits(), solve_tuning(e))).collect();
        let mut cache = tuning_cache().lock().unwrap();
        for (k, s) in table {
            if let Ok(s) = s {
                cache.insert(k, s);
            }
        }
        if let Some(s) = cache.get(&key) {
            return Ok(*s);
        }
    }
    let score = solve_tuning(efficiency)?;
    tuning_cache().lock().unwrap().insert(key, score);
    Ok(score)
}

fn solve_tuning(efficiency: f64) -> Result<RobustScore> {
    let mut lo = monotone_branch_start();
    let mut hi = 8.0;
    while gaussian_efficiency(hi) < efficiency {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::invalid(format!("efficiency {efficiency} is not attainable")));
        }
    }
    if gaussian_efficiency(lo) >= efficiency {
        return Err(Error::invalid(format!("efficiency {efficiency} is not attainable")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gaussian_efficiency(mid) < efficiency {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let c = 0.5 * (lo + hi);
    Ok(RobustScore { c, b_c: consistency_constant(c), efficiency })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn weight_values() {
        assert_eq!(tukey_weight(0.0, 3.0), 1.0);
        assert_eq!(tukey_weight(3.0, 3.0), 0.0);
        assert_eq!(tukey_weight(-7.0, 3.0), 0.0);
        for c in [0.3, 1.0, 4.4, 100.0] {
            assert!((tukey_weight(c / 2.0, c) - 0.5625).abs() < 1e-15);
        }
    }

    #[test]
    fn consistency_limits() {
        assert!((consistency_constant(1e4) - 1.0).abs() < 1e-6);
        assert!(consistency_constant(1e-3) < 1e-8);
        assert_eq!(consistency_constant(f64::INFINITY), 1.0);
    }

    #[test]
    fn consistency_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(20240601);
        let draws: Vec<f64> = (0..10_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        for c in [1.0, 2.2, 5.0] {
            let mc = draws.iter().map(|&z| score_kernel(z, c)).sum::<f64>() / draws.len() as f64;
            let q = consistency_constant(c);
            // three significant digits
            assert!(((mc - q) / q).abs() < 5e-3, "c={c}: quadrature {q} vs mc {mc}");
        }
    }

    #[test]
    fn efficiency_monotone_on_branch() {
        let start = monotone_branch_start();
        assert!(start > 2.0 && start < 3.0);
        let mut last = 0.0;
        for i in 1..60 {
            let c = start + 0.2 * i as f64;
            let e = gaussian_efficiency(c);
            assert!(e > last);
            last = e;
        }
    }

    #[test]
    fn tuning_table() {
        assert!(tuning_for_efficiency(1.0).unwrap().is_classical_limit());
        let c6 = tuning_for_efficiency(0.6).unwrap();
        let c9 = tuning_for_efficiency(0.9).unwrap();
        assert!(c9.c > c6.c);
        assert!((gaussian_efficiency(c6.c) - 0.6).abs() < 1e-8);
        assert!(tuning_for_efficiency(0.03).is_err());
        assert!(tuning_for_efficiency(1.2).is_err());
        assert!(tuning_for_efficiency(0.06).is_ok());
    }
}
