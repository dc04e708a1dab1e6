use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{fit, FitOptions, FitResult};
use crate::data::DataShape;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::rng;

/// Sandwich covariance of the minimum-distance estimator,
/// `B V B' / N_J` with `B = (D' Omega D)^-1 D' Omega`.
pub fn param_covariance(
    d: &DMatrix<f64>,
    v_hat: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    n_j: usize,
) -> Result<DMatrix<f64>> {
    let (m, p) = d.shape();
    if v_hat.shape() != (m, m) || omega.shape() != (m, m) {
        return Err(Error::invalid("Jacobian, V and Omega dimensions disagree"));
    }
    if n_j == 0 {
        return Err(Error::invalid("N_J must be positive"));
    }
    let svd = d.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if p > m || !(smax > 0.0) || smin <= smax * 1e-12 {
        return Err(Error::Identifiability("the wavelet-variance Jacobian is rank deficient".into()));
    }
    let h = d.transpose() * omega * d;
    let h_inv = h.try_inverse().ok_or_else(|| Error::Identifiability("D' Omega D is singular".into()))?;
    let b = h_inv * d.transpose() * omega;
    let cov = &b * v_hat * b.transpose() / n_j as f64;
    Ok((&cov + cov.transpose()) * 0.5)
}

/// Outcome of the parametric-bootstrap J-test.
#[derive(Debug, Clone, PartialEq)]
pub struct JTestResult {
    /// `N_J` times the minimized objective.
    pub statistic: f64,
    pub p_value: f64,
    pub replicates: usize,
    /// Statistics of the successful bootstrap refits.
    pub null: Vec<f64>,
    pub failures: usize,
}

pub const MIN_JTEST_REPLICATES: usize = 99;

/// Bootstrap J-test of `fitted` against data of `shape`.
///
/// Simulates `replicates` datasets from the fitted parameters, refits the
/// original `template` (same free structure and options) to each and
/// compares the observed statistic with the bootstrap distribution.
pub fn jtest_bootstrap(
    fitted: &FitResult,
    template: &ModelSpec,
    shape: DataShape,
    replicates: usize,
    options: &FitOptions,
    seed: u64,
) -> Result<JTestResult> {
    if replicates < MIN_JTEST_REPLICATES {
        return Err(Error::invalid(format!(
            "the J-test needs at least {MIN_JTEST_REPLICATES} replicates, got {replicates}"
        )));
    }
    if !fitted.converged {
        return Err(Error::invalid("the J-test needs a converged fit"));
    }
    let statistic = fitted.n_j() as f64 * fitted.objective;
    let truth = fitted.model.fixed()?;
    let opts = FitOptions { inference: false, ..options.clone() };
    let stats: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let data = truth.simulate(shape, rng::derive_seed(seed, b as u64)).ok()?;
            let r = fit(&data, template, &opts).ok()?;
            Some(r.n_j() as f64 * r.objective)
        })
        .collect();
    let null: Vec<f64> = stats.iter().flatten().copied().collect();
    let failures = replicates - null.len();
    if failures * 5 > replicates {
        return Err(Error::numerical(format!("{failures} of {replicates} bootstrap refits failed")));
    }
    let exceed = null.iter().filter(|&&s| s >= statistic).count();
    let p_value = (1 + exceed) as f64 / (null.len() + 1) as f64;
    Ok(JTestResult { statistic, p_value, replicates, null, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficient_weighting_identity() {
        let d = DMatrix::from_row_slice(4, 2, &[1.0, 0.2, 0.5, 0.4, 0.25, 0.9, 0.1, 1.3]);
        let v = DMatrix::from_row_slice(
            4,
            4,
            &[2.0, 0.3, 0.1, 0.0, 0.3, 1.5, 0.2, 0.1, 0.1, 0.2, 1.0, 0.3, 0.0, 0.1, 0.3, 0.8],
        );
        let omega = v.clone().try_inverse().unwrap();
        let cov = param_covariance(&d, &v, &omega, 50).unwrap();
        let direct = (d.transpose() * &omega * &d).try_inverse().unwrap() / 50.0;
        assert!((cov - direct).amax() < 1e-8);
    }

    #[test]
    fn linear_in_v() {
        let d = DMatrix::from_row_slice(3, 1, &[0.5, 0.25, 0.125]);
        let v = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0, 3.0]);
        let w = DMatrix::identity(3, 3);
        let a = param_covariance(&d, &v, &w, 10).unwrap();
        let b = param_covariance(&d, &(&v * 2.0), &w, 10).unwrap();
        assert_eq!(b, a * 2.0);
    }

    #[test]
    fn rank_deficient_jacobian() {
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let v = DMatrix::identity(3, 3);
        assert!(matches!(param_covariance(&d, &v, &v, 10), Err(Error::Identifiability(_))));
    }
}
