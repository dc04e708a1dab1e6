//! Classical and robust wavelet-variance estimation.

mod covariance;
mod score;

pub use covariance::{estimate_v, Bandwidth, CovarianceMethod};
pub use score::{consistency_constant, gaussian_efficiency, tukey_weight, tuning_for_efficiency, RobustScore};
pub(crate) use score::{score_kernel, score_kernel_slope};

use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Observations;
use crate::error::{Error, Result};
use crate::wavelet::{self, CoefficientBlock, ScaleLabel};

/// Which wavelet-variance estimator to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WvMethod {
    Classical,
    Robust(RobustScore),
}

impl WvMethod {
    /// Robust method at the given Gaussian efficiency; efficiency 1 is the
    /// classical limit of the Tukey score, not [`WvMethod::Classical`].
    pub fn robust(efficiency: f64) -> Result<Self> {
        Ok(WvMethod::Robust(tuning_for_efficiency(efficiency)?))
    }

    pub fn is_robust(&self) -> bool {
        matches!(self, WvMethod::Robust(_))
    }

    /// Tukey constant, infinite for the classical estimator.
    pub fn tuning_constant(&self) -> f64 {
        match self {
            WvMethod::Classical => f64::INFINITY,
            WvMethod::Robust(s) => s.c,
        }
    }
}

/// Estimated wavelet variance with optional covariance and intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct WvEstimate {
    pub scales: Vec<ScaleLabel>,
    pub nu_hat: Vec<f64>,
    pub counts: Vec<usize>,
    pub method: WvMethod,
    /// Scales whose coefficients were all zero (classical estimate 0).
    pub degenerate: Vec<bool>,
    /// Covariance of `sqrt(N_J) (nu_hat - nu)`, i.e. `Var(nu_hat) ~ V / N_J`.
    pub v_hat: Option<nalgebra::DMatrix<f64>>,
    pub ci: Option<Vec<(f64, f64)>>,
}

impl WvEstimate {
    pub fn num_scales(&self) -> usize {
        self.nu_hat.len()
    }

    /// `N_J`, the smallest per-scale coefficient count.
    pub fn min_count(&self) -> usize {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    /// Approximate standard error of each `nu_hat`, when `V` is present.
    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        let v = self.v_hat.as_ref()?;
        let nj = self.min_count() as f64;
        Some((0..v.nrows()).map(|i| (v[(i, i)] / nj).max(0.0).sqrt()).collect())
    }
}

/// Mean of squared coefficients. Returns `(nu, degenerate)` where
/// `degenerate` flags an all-zero scale.
pub fn wv_classical(coeffs: &[f64]) -> Result<(f64, bool)> {
    if coeffs.is_empty() {
        return Err(Error::invalid("empty coefficient vector"));
    }
    let nu = coeffs.iter().map(|w| w * w).sum::<f64>() / coeffs.len() as f64;
    Ok((nu, nu == 0.0))
}

/// Mean of the robust estimating function at `nu`.
pub(crate) fn robust_equation(coeffs: &[f64], nu: f64, score: &RobustScore) -> f64 {
    let s = 1.0 / nu.sqrt();
    let total: f64 = coeffs.iter().map(|&w| score_kernel(w * s, score.c)).sum();
    total / coeffs.len() as f64 - score.b_c
}

const ROOT_MAX_ITER: usize = 200;
const BRACKET_SPAN: f64 = 1e6;

/// Tukey M-estimate of the wavelet variance of one scale.
///
/// Searches outward from the classical estimate on a log grid (factor 10)
/// for the first sign change, then refines it with Brent's method in
/// `log(nu)`. The root found is the one nearest the classical estimate.
/// When the equation has no root (its maximum is below zero, which happens
/// for strongly non-Gaussian coefficient sets) the maximizer is returned.
pub fn wv_robust(coeffs: &[f64], score: &RobustScore) -> Result<f64> {
    if coeffs.len() < 2 {
        return Err(Error::invalid(format!("robust estimation needs at least 2 coefficients, got {}", coeffs.len())));
    }
    let (nu_cl, degenerate) = wv_classical(coeffs)?;
    if degenerate {
        return Err(Error::invalid("all coefficients are zero"));
    }
    if score.is_classical_limit() {
        return Ok(nu_cl);
    }
    let f = |log_nu: f64| robust_equation(coeffs, log_nu.exp(), score);
    let x0 = nu_cl.ln();
    let f0 = f(x0);
    if f0 == 0.0 {
        return Ok(nu_cl);
    }
    let step = std::f64::consts::LN_10 * if f0 > 0.0 { 1.0 } else { -1.0 };
    let limit = BRACKET_SPAN.ln();
    let (mut a, mut fa) = (x0, f0);
    let mut bracket = None;
    let mut k = 1;
    while (k as f64) * std::f64::consts::LN_10 <= limit + 1e-9 {
        let b = x0 + step * k as f64;
        let fb = f(b);
        if fb == 0.0 {
            return Ok(b.exp());
        }
        if fb.signum() != fa.signum() {
            bracket = Some((a, fa, b, fb));
            break;
        }
        a = b;
        fa = fb;
        k += 1;
    }
    let Some((a, fa, b, fb)) = bracket else {
        return Ok(closest_approach(&f, x0, limit).exp());
    };
    let root = brent(&f, a, fa, b, fb, 1e-10, 1e-9, ROOT_MAX_ITER);
    Ok(root.exp())
}

/// Maximizer of the (everywhere negative) estimating function over
/// `x0 +- span`: a coarse log grid followed by golden-section refinement.
fn closest_approach(f: &dyn Fn(f64) -> f64, x0: f64, span: f64) -> f64 {
    const STEP: f64 = 0.05;
    let n = (span / STEP).ceil() as i64;
    let (mut best, mut fbest) = (x0, f(x0));
    for k in -n..=n {
        let x = x0 + STEP * k as f64;
        let fx = f(x);
        if fx > fbest {
            best = x;
            fbest = fx;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best - STEP, best + STEP);
    for _ in 0..60 {
        let c = hi - g * (hi - lo);
        let d = lo + g * (hi - lo);
        if f(c) > f(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let x = 0.5 * (lo + hi);
    if f(x) >= fbest {
        x
    } else {
        best
    }
}

/// Brent's root finder on a bracket with `fa` and `fb` of opposite sign.
/// Stops when `|f| <= ftol` or the bracket is below `xtol` relative to the
/// nu scale (`x` is `log nu`, so an absolute width in `x` is relative in nu).
fn brent(
    f: &dyn Fn(f64) -> f64,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    ftol: f64,
    xtol: f64,
    max_iter: usize,
) -> f64 {
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.abs() <= ftol || (b - c).abs() <= xtol {
            return b;
        }
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b);
    }
    b
}

/// Per-scale wavelet variance of a set of coefficient blocks.
pub fn estimate_blocks(blocks: &[CoefficientBlock], method: WvMethod) -> Result<WvEstimate> {
    let mut nu_hat = Vec::with_capacity(blocks.len());
    let mut degenerate = Vec::with_capacity(blocks.len());
    for b in blocks {
        match method {
            WvMethod::Classical => {
                let (nu, deg) = wv_classical(&b.values)?;
                nu_hat.push(nu);
                degenerate.push(deg);
            }
            WvMethod::Robust(score) => {
                nu_hat.push(wv_robust(&b.values, &score)?);
                degenerate.push(false);
            }
        }
    }
    Ok(WvEstimate {
        scales: blocks.iter().map(|b| b.label).collect(),
        nu_hat,
        counts: blocks.iter().map(CoefficientBlock::len).collect(),
        method,
        degenerate,
        v_hat: None,
        ci: None,
    })
}

/// Default decomposition of an observation set: all admissible 1D levels,
/// or all isotropic scale pairs of a lattice.
pub fn decompose(data: &Observations) -> Result<Vec<CoefficientBlock>> {
    match data {
        Observations::Series(s) => {
            let j = wavelet::max_scales_1d(s.len())?;
            Ok(wavelet::modwt_haar(s, j)?.into_blocks())
        }
        Observations::Field(f) => {
            let pairs = wavelet::max_scale_pairs_2d(f.rows(), f.cols())?;
            Ok(wavelet::modwt2d_haar(f, &pairs)?.into_blocks())
        }
    }
}

/// Decomposes and estimates the wavelet variance in one step.
pub fn estimate_wv(data: &Observations, method: WvMethod) -> Result<WvEstimate> {
    estimate_blocks(&decompose(data)?, method)
}

/// Per-scale Gaussian intervals `nu_hat +/- z sqrt(Var(nu_hat))`, with the
/// lower end floored at `nu_hat * 1e-6`.
pub fn wv_confidence_intervals(estimate: &WvEstimate, level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("confidence level must be in (0,1), got {level}")));
    }
    let se = estimate
        .standard_errors()
        .ok_or_else(|| Error::invalid("wavelet-variance covariance has not been estimated"))?;
    let z = normal_quantile(0.5 * (1.0 + level));
    Ok(estimate
        .nu_hat
        .iter()
        .zip(se)
        .map(|(&nu, s)| {
            let floor = nu * 1e-6;
            ((nu - z * s).max(floor).min(nu), nu + z * s)
        })
        .collect())
}

pub(crate) fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn classical_mean_of_squares() {
        assert_eq!(wv_classical(&[1.0, -1.0, 2.0]).unwrap(), (2.0, false));
        assert_eq!(wv_classical(&[0.0; 5]).unwrap(), (0.0, true));
        assert!(wv_classical(&[]).is_err());
    }

    #[test]
    fn robust_rejects_degenerate() {
        let s = tuning_for_efficiency(0.6).unwrap();
        assert!(matches!(wv_robust(&[0.0; 10], &s), Err(Error::InvalidInput(_))));
        assert!(wv_robust(&[1.0], &s).is_err());
    }

    #[test]
    fn rootless_equation_uses_maximizer() {
        let s = tuning_for_efficiency(0.6).unwrap();
        // magnitudes spread over 20 decades: at most two fall in the
        // informative band at any nu
        let w: Vec<f64> = (0..40).map(|k| 10f64.powf(k as f64 / 2.0 - 10.0)).collect();
        let nu = wv_robust(&w, &s).unwrap();
        let at = robust_equation(&w, nu, &s);
        assert!(at < 0.0);
        for r in [0.9, 1.1, 0.5, 2.0] {
            assert!(robust_equation(&w, nu * r, &s) <= at + 1e-12);
        }
    }

    #[test]
    fn huge_constant_is_classical() {
        let s = RobustScore::with_constant(1e6).unwrap();
        let w: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64 - 50.0) / 7.0).collect();
        let (cl, _) = wv_classical(&w).unwrap();
        let rb = wv_robust(&w, &s).unwrap();
        assert!(((rb - cl) / cl).abs() <= 1e-6);
    }

    #[test]
    fn intervals() {
        let mut est = WvEstimate {
            scales: vec![ScaleLabel::Level(1), ScaleLabel::Level(2)],
            nu_hat: vec![1.0, 0.5],
            counts: vec![100, 98],
            method: WvMethod::Classical,
            degenerate: vec![false; 2],
            v_hat: None,
            ci: None,
        };
        assert!(wv_confidence_intervals(&est, 0.95).is_err());
        est.v_hat = Some(DMatrix::from_diagonal(&nalgebra::dvector![0.0, 0.98]));
        let ci95 = wv_confidence_intervals(&est, 0.95).unwrap();
        assert_eq!(ci95[0], (1.0, 1.0));
        let ci90 = wv_confidence_intervals(&est, 0.90).unwrap();
        let ci99 = wv_confidence_intervals(&est, 0.99).unwrap();
        assert!(ci99[1].0 < ci90[1].0 && ci99[1].1 > ci90[1].1);
        assert!(ci95[1].0 >= 0.5e-6);
        assert!(wv_confidence_intervals(&est, 1.0).is_err());
    }
}
