use super::*;
use crate::data::DataShape;
use crate::models::{presets, theoretical_wv};

fn levels(j: usize) -> Vec<ScaleLabel> {
    (1..=j).map(ScaleLabel::Level).collect()
}

#[test]
fn objective_basics() {
    let scales = levels(2);
    let m = presets::white_noise(1.0).freed();
    let nu = theoretical_wv(&m, &scales).unwrap().nu;
    let id = WeightingMatrix::identity(2);
    assert_eq!(gmwm_objective(&[1.0], &nu, &scales, &m, &id).unwrap(), 0.0);
    // residual [1, -1] under the identity
    let shifted = [nu[0] + 1.0, nu[1] - 1.0];
    assert_eq!(gmwm_objective(&[1.0], &shifted, &scales, &m, &id).unwrap(), 2.0);
    let a = gmwm_objective(&[1.3], &shifted, &scales, &m, &id).unwrap();
    let b = gmwm_objective(&[1.3], &shifted, &scales, &m, &id.scaled(2.0)).unwrap();
    assert_eq!(b, 2.0 * a);
    assert!(gmwm_objective(&[1.0], &nu[..1], &scales, &m, &id).is_err());
}

#[test]
fn weighting_kinds() {
    let v = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
    let d = WeightingMatrix::build(OmegaKind::InverseDiagonal, 2, Some(&v)).unwrap();
    assert_eq!(d.matrix, DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 0.5]));
    let f = WeightingMatrix::build(OmegaKind::Inverse, 2, Some(&v)).unwrap();
    assert!((&f.matrix * &v - DMatrix::identity(2, 2)).amax() < 1e-12);
    assert_eq!(WeightingMatrix::build(OmegaKind::Identity, 3, None).unwrap().matrix, DMatrix::identity(3, 3));
    assert!(WeightingMatrix::build(OmegaKind::InverseDiagonal, 2, None).is_err());
    // singular V is ridged rather than rejected
    let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert!(WeightingMatrix::build(OmegaKind::Inverse, 2, Some(&s)).is_ok());
}

#[test]
fn oracle_recovery() {
    let truth = presets::ar1(0.9, 1.0);
    let scales = levels(9);
    let nu = theoretical_wv(&truth, &scales).unwrap().nu;
    let m = truth.freed();
    let theta = m.free_values().unwrap();
    let omega = WeightingMatrix::identity(9);
    assert_eq!(gmwm_objective(&theta, &nu, &scales, &m, &omega).unwrap(), 0.0);
    let run = minimize(&m, &nu, &scales, &omega, &theta, &FitOptions::classical(), Instant::now());
    assert!(run.fx <= 1e-12, "{}", run.fx);
}

#[test]
fn white_noise_fit() {
    let data = presets::white_noise(2.0).simulate(DataShape::Series(4096), 1).unwrap();
    let m: ModelSpec = "wn(s2=?)".parse().unwrap();
    let r = fit(&data, &m, &FitOptions::classical()).unwrap();
    assert!(r.converged);
    assert!((r.theta_hat[0] - 2.0).abs() < 0.15, "{:?}", r.theta_hat);
    let (lo, hi) = r.ci.as_ref().unwrap()[0];
    assert!(lo < r.theta_hat[0] && r.theta_hat[0] < hi);
    assert!(r.weights.is_none());
}

#[test]
fn identifiability_error() {
    let data = presets::white_noise(1.0).simulate(DataShape::Series(8), 1).unwrap();
    let m: ModelSpec = "sum(ar1(rho=?,v2=?),wn(s2=?))".parse().unwrap();
    assert!(matches!(fit(&data, &m, &FitOptions::classical()), Err(Error::Identifiability(_))));
}

#[test]
fn model_data_mismatch() {
    let data = presets::white_noise(1.0).simulate(DataShape::Series(64), 1).unwrap();
    let m: ModelSpec = "exp(phi=?,s2=?)".parse().unwrap();
    assert!(matches!(fit(&data, &m, &FitOptions::classical()), Err(Error::InvalidInput(_))));
    let fixed: ModelSpec = "wn(s2=1)".parse().unwrap();
    assert!(fit(&data, &fixed, &FitOptions::classical()).is_err());
}

#[test]
fn ssm_components_are_ordered() {
    let truth = presets::ssm(0.99, 0.1, 0.6, 2.0, 3.0);
    let data = truth.simulate(DataShape::Series(1000), 4).unwrap();
    let r = fit(&data, &truth.freed(), &FitOptions::classical()).unwrap();
    assert!(r.theta_hat[0] >= r.theta_hat[2], "{:?}", r.theta_hat);
    assert_eq!(r.labels[0], "ar1(1).rho");
}

#[test]
fn robust_fit_reports_weights() {
    let data = presets::ar1(0.5, 1.0).simulate(DataShape::Series(512), 2).unwrap();
    let r = fit(&data, &"ar1(rho=?,v2=?)".parse().unwrap(), &FitOptions::default()).unwrap();
    let w = r.weights.as_ref().unwrap();
    assert_eq!(w.weights.len(), 512);
    assert!(w.weights.iter().all(|&x| (0.0..=1.0).contains(&x)));
}

#[test]
fn weights_need_robust_fit() {
    let data = presets::ar1(0.5, 1.0).simulate(DataShape::Series(256), 2).unwrap();
    let r = fit(&data, &"ar1(rho=?,v2=?)".parse().unwrap(), &FitOptions::classical()).unwrap();
    assert!(observation_weights(&data, &r).is_err());
}
