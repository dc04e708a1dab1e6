//! Contamination generators, the RMSE* accuracy metric and the Monte Carlo
//! study engine.

mod contaminate;
pub mod designs;
mod study;

pub use contaminate::{contaminate, ContaminationKind, ContaminationSpec, DEFAULT_PATCH_LEN};
pub use designs::Design;
pub use study::{run_study, Estimator, EstimatorSummary, ParamSummary, StudyOptions, StudyReport};

use crate::error::{Error, Result};

/// Normal-consistency factor applied to the median absolute deviation.
pub const MAD_SCALE: f64 = 1.4826;

pub(crate) fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mad(x: &[f64]) -> f64 {
    let m = median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - m).abs()).collect();
    MAD_SCALE * median(&dev)
}

/// Robust relative accuracy of `estimates` around `theta0`:
/// `sqrt(med((t - t0)/t0)^2 + mad(t/t0)^2)`.
pub fn rmse_star(estimates: &[f64], theta0: f64) -> Result<f64> {
    if theta0 == 0.0 || !theta0.is_finite() {
        return Err(Error::invalid("RMSE* is undefined for a zero true value"));
    }
    if estimates.len() < 3 {
        return Err(Error::invalid("RMSE* needs at least 3 estimates"));
    }
    if estimates.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("estimates must be finite"));
    }
    let rel: Vec<f64> = estimates.iter().map(|t| t / theta0).collect();
    let bias = median(&rel) - 1.0;
    Ok(bias.hypot(mad(&rel)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng as _;

    // straight-line recomputation: sort by insertion, explicit midpoints
    fn oracle(est: &[f64], t0: f64) -> f64 {
        fn med(v: &[f64]) -> f64 {
            let mut s: Vec<f64> = Vec::new();
            for &x in v {
                let pos = s.iter().take_while(|&&y| y <= x).count();
                s.insert(pos, x);
            }
            let n = s.len();
            if n % 2 == 1 {
                s[(n - 1) / 2]
            } else {
                (s[n / 2 - 1] + s[n / 2]) / 2.0
            }
        }
        let bias: Vec<f64> = est.iter().map(|t| (t - t0) / t0).collect();
        let ratio: Vec<f64> = est.iter().map(|t| t / t0).collect();
        let m = med(&ratio);
        let abs: Vec<f64> = ratio.iter().map(|r| (r - m).abs()).collect();
        let b = med(&bias);
        let d = 1.4826 * med(&abs);
        (b * b + d * d).sqrt()
    }

    #[test]
    fn known_values() {
        assert_eq!(rmse_star(&[2.0, 2.0, 2.0], 2.0).unwrap(), 0.0);
        let r = rmse_star(&[0.9, 1.0, 1.1], 1.0).unwrap();
        assert!((r - 0.14826).abs() < 1e-12, "{r}");
        assert!(rmse_star(&[1.0, 1.0, 1.0], 0.0).is_err());
        assert!(rmse_star(&[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn matches_oracle() {
        let mut rng = crate::rng::stream(5, 0);
        for _ in 0..100 {
            let n = rng.gen_range(3..60);
            let t0 = rng.gen_range(-5.0..5.0);
            let est: Vec<f64> = (0..n).map(|_| t0 + rng.gen_range(-2.0..2.0)).collect();
            let a = rmse_star(&est, t0).unwrap();
            let b = oracle(&est, t0);
            assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} {b}");
        }
    }

    proptest! {
        #[test]
        fn scale_invariant(est in proptest::collection::vec(0.1f64..10.0, 3..30), t0 in 0.5f64..5.0, c in 0.1f64..10.0) {
            let a = rmse_star(&est, t0).unwrap();
            let scaled: Vec<f64> = est.iter().map(|x| x * c).collect();
            let b = rmse_star(&scaled, t0 * c).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            prop_assert!(a >= 0.0);
        }
    }
}
