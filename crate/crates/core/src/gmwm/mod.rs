//! Minimum-distance estimation on wavelet variances.
//!
//! `theta_hat = argmin (nu_hat - nu(theta))' Omega (nu_hat - nu(theta))`,
//! with `nu_hat` either the classical or the Tukey M-estimate of the wavelet
//! variance. The robust flavor inherits a bounded influence function from
//! the bounded score.

mod inference;
mod optimize;
mod start;
mod weights;

pub use inference::{jtest_bootstrap, param_covariance, JTestResult};
pub use start::starting_values;
pub use weights::{observation_weights, ObservationWeights, FLAG_THRESHOLD};

use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::data::{DataShape, Observations};
use crate::error::{Error, Result};
use crate::models::{theory, ModelSpec, ParamTransform};
use crate::wavelet::ScaleLabel;
use crate::wv::{self, CovarianceMethod, WvEstimate, WvMethod};
use optimize::{nelder_mead, SimplexOptions};

/// Which weighting matrix `Omega` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaKind {
    Identity,
    /// `diag(V_hat)^-1`.
    #[default]
    InverseDiagonal,
    /// `V_hat^-1`, ridge-regularized when ill-conditioned.
    Inverse,
}

impl fmt::Display for OmegaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OmegaKind::Identity => "identity",
            OmegaKind::InverseDiagonal => "diag",
            OmegaKind::Inverse => "full",
        })
    }
}

impl std::str::FromStr for OmegaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(OmegaKind::Identity),
            "diag" => Ok(OmegaKind::InverseDiagonal),
            "full" => Ok(OmegaKind::Inverse),
            other => Err(Error::invalid(format!("unknown weighting matrix `{other}`"))),
        }
    }
}

const RIDGE_CONDITION: f64 = 1e12;

/// Symmetric positive-definite weighting matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightingMatrix {
    pub kind: OmegaKind,
    pub matrix: DMatrix<f64>,
}

impl WeightingMatrix {
    pub fn identity(dim: usize) -> Self {
        Self { kind: OmegaKind::Identity, matrix: DMatrix::identity(dim, dim) }
    }

    /// Builds `Omega` of `kind` from the WV covariance (ignored for identity).
    pub fn build(kind: OmegaKind, dim: usize, v_hat: Option<&DMatrix<f64>>) -> Result<Self> {
        if kind == OmegaKind::Identity {
            return Ok(Self::identity(dim));
        }
        let v = v_hat.ok_or_else(|| Error::invalid("weighting matrix needs an estimated V"))?;
        if v.nrows() != dim || v.ncols() != dim {
            return Err(Error::invalid("V has the wrong dimension"));
        }
        let matrix = match kind {
            OmegaKind::InverseDiagonal => {
                let d: Vec<f64> = v.diagonal().iter().copied().collect();
                if d.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::numerical("V has a non-positive diagonal entry"));
                }
                DMatrix::from_diagonal(&DVector::from_iterator(dim, d.iter().map(|x| 1.0 / x)))
            }
            OmegaKind::Inverse => {
                let sym = (v + v.transpose()) * 0.5;
                let eig = SymmetricEigen::new(sym.clone());
                let max = eig.eigenvalues.max();
                let min = eig.eigenvalues.min();
                let mut m = sym;
                if !(max > 0.0) {
                    return Err(Error::numerical("V is zero"));
                }
                if min <= max / RIDGE_CONDITION {
                    let lambda = 1e-8 * m.trace() / dim as f64;
                    for i in 0..dim {
                        m[(i, i)] += lambda;
                    }
                }
                let inv = m.cholesky().ok_or_else(|| Error::numerical("V could not be inverted"))?.inverse();
                (&inv + inv.transpose()) * 0.5
            }
            OmegaKind::Identity => unreachable!(),
        };
        let out = Self { kind, matrix };
        out.check()?;
        Ok(out)
    }

    /// Same kind, matrix multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { kind: self.kind, matrix: &self.matrix * factor }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn check(&self) -> Result<()> {
        let m = &self.matrix;
        if (m - m.transpose()).amax() > 1e-12 * m.amax() {
            return Err(Error::numerical("weighting matrix is not symmetric"));
        }
        if SymmetricEigen::new(m.clone()).eigenvalues.min() <= 0.0 {
            return Err(Error::numerical("weighting matrix is not positive definite"));
        }
        Ok(())
    }

    /// `r' Omega r`.
    pub(crate) fn quad(&self, r: &[f64]) -> f64 {
        let m = &self.matrix;
        let n = r.len();
        if self.kind != OmegaKind::Inverse {
            return (0..n).map(|i| m[(i, i)] * r[i] * r[i]).sum();
        }
        let mut total = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += m[(i, j)] * r[j];
            }
            total += r[i] * row;
        }
        total
    }
}

/// The minimum-distance objective at free parameter values `theta`.
pub fn gmwm_objective(
    theta: &[f64],
    nu_hat: &[f64],
    scales: &[ScaleLabel],
    model: &ModelSpec,
    omega: &WeightingMatrix,
) -> Result<f64> {
    if nu_hat.len() != scales.len() || omega.dim() != scales.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} estimates, {} scales, {}x{} weighting matrix",
            nu_hat.len(),
            scales.len(),
            omega.dim(),
            omega.dim()
        )));
    }
    let m = model.with_free_values(theta)?;
    m.validate()?;
    let nu = theory::implied_unchecked(&m, scales)?;
    let r: Vec<f64> = nu_hat.iter().zip(&nu).map(|(a, b)| a - b).collect();
    Ok(omega.quad(&r))
}

/// Which wavelet-variance estimator feeds the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flavor {
    Classical,
    /// Tukey M-estimator calibrated to the given Gaussian efficiency.
    Robust {
        efficiency: f64,
    },
}

impl Flavor {
    pub fn is_robust(&self) -> bool {
        matches!(self, Flavor::Robust { .. })
    }

    pub fn wv_method(&self) -> Result<WvMethod> {
        match *self {
            Flavor::Classical => Ok(WvMethod::Classical),
            Flavor::Robust { efficiency } => WvMethod::robust(efficiency),
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flavor::Classical => f.write_str("GMWM"),
            Flavor::Robust { .. } => f.write_str("RGMWM"),
        }
    }
}

pub const DEFAULT_EFFICIENCY: f64 = 0.6;

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub flavor: Flavor,
    pub omega: OmegaKind,
    pub covariance: CovarianceMethod,
    /// Confidence level for parameter and WV intervals.
    pub level: f64,
    pub num_starts: usize,
    pub restarts: usize,
    pub tolerance: f64,
    pub time_budget: Duration,
    /// Compute the parameter covariance, intervals and observation weights.
    pub inference: bool,
    /// Source of `V` in the parameter covariance.
    pub inference_covariance: InferenceCovariance,
}

/// How `V` is obtained for the parameter covariance once `theta` is estimated.
/// The weighting matrix always uses the plug-in estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferenceCovariance {
    /// The plug-in estimate used for the weighting matrix.
    PlugIn,
    /// Parametric bootstrap from the fitted model. Falls back to the plug-in
    /// estimate when the fitted model cannot be simulated.
    ParametricBootstrap { replicates: usize, seed: u64 },
}

pub const DEFAULT_INFERENCE_REPLICATES: usize = 200;

impl Default for InferenceCovariance {
    fn default() -> Self {
        InferenceCovariance::ParametricBootstrap { replicates: DEFAULT_INFERENCE_REPLICATES, seed: 0x5EED }
    }
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            flavor: Flavor::Robust { efficiency: DEFAULT_EFFICIENCY },
            omega: OmegaKind::InverseDiagonal,
            covariance: CovarianceMethod::default(),
            level: 0.95,
            num_starts: 18,
            restarts: 2,
            tolerance: 1e-9,
            time_budget: Duration::from_secs(60),
            inference: true,
            inference_covariance: InferenceCovariance::default(),
        }
    }
}

impl FitOptions {
    pub fn classical() -> Self {
        Self { flavor: Flavor::Classical, ..Self::default() }
    }

    pub fn robust(efficiency: f64) -> Self {
        Self { flavor: Flavor::Robust { efficiency }, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// The model with its free parameters set to the estimates.
    pub model: ModelSpec,
    pub labels: Vec<String>,
    pub theta_hat: Vec<f64>,
    pub objective: f64,
    pub omega: WeightingMatrix,
    pub wv: WvEstimate,
    pub param_cov: Option<DMatrix<f64>>,
    pub ci: Option<Vec<(f64, f64)>>,
    pub level: f64,
    pub converged: bool,
    pub at_bound: bool,
    pub iterations: usize,
    pub wall_time: Duration,
    pub weights: Option<ObservationWeights>,
    pub flavor: Flavor,
}

impl FitResult {
    /// `N_J`, the smallest per-scale coefficient count.
    pub fn n_j(&self) -> usize {
        self.wv.min_count()
    }

    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        self.param_cov.as_ref().map(|c| (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect())
    }
}

/// Decomposes `data`, estimates the wavelet variance and its covariance,
/// then minimizes the objective over the free parameters of `model`.
///
/// Non-convergence does not raise an error; it is reported through
/// `FitResult::converged`.
pub fn fit(data: &Observations, model: &ModelSpec, options: &FitOptions) -> Result<FitResult> {
    let start = Instant::now();
    check_model_data(data, model)?;
    let blocks = wv::decompose(data)?;
    let method = options.flavor.wv_method()?;
    let mut est = wv::estimate_blocks(&blocks, method)?;
    if est.nu_hat.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::numerical("a wavelet variance estimate is zero"));
    }
    let need_v = options.inference || options.omega != OmegaKind::Identity;
    if need_v {
        let v = wv::estimate_v(&blocks, &est, &options.covariance)?;
        est.v_hat = Some(v);
        est.ci = Some(wv::wv_confidence_intervals(&est, options.level)?);
    }
    let omega = WeightingMatrix::build(options.omega, est.num_scales(), est.v_hat.as_ref())?;
    let mut result = fit_to_estimate(est, model, &omega, options, start)?;
    if let (true, InferenceCovariance::ParametricBootstrap { replicates, seed }) =
        (options.inference, options.inference_covariance)
    {
        let boot = result.model.fixed().and_then(|m| {
            let method = CovarianceMethod::Bootstrap { model: m, shape: DataShape::of(data), replicates, seed };
            wv::estimate_v(&blocks, &result.wv, &method)
        });
        if let Ok(v) = boot {
            result.wv.v_hat = Some(v.clone());
            result.wv.ci = Some(wv::wv_confidence_intervals(&result.wv, options.level)?);
            attach_inference(&mut result, &v);
        }
    }
    if options.inference && options.flavor.is_robust() {
        result.weights = Some(observation_weights(data, &result)?);
    }
    result.wall_time = start.elapsed();
    Ok(result)
}

fn check_model_data(data: &Observations, model: &ModelSpec) -> Result<()> {
    match (data, model.is_spatial()) {
        (Observations::Series(_), true) => Err(Error::invalid("a spatial model cannot be fit to a time series")),
        (Observations::Field(_), false) => Err(Error::invalid("a time-series model cannot be fit to a lattice field")),
        _ if model.num_free() == 0 => Err(Error::invalid("the model has no free parameters")),
        _ => Ok(()),
    }
}

/// Sets the sandwich covariance and Wald intervals of `result` from `v`;
/// leaves them unset when the Jacobian is rank deficient.
fn attach_inference(result: &mut FitResult, v: &DMatrix<f64>) {
    result.param_cov = None;
    result.ci = None;
    let Ok(d) = crate::models::wv_jacobian(&result.model, &result.wv.scales) else { return };
    let Ok(cov) = param_covariance(&d, v, &result.omega.matrix, result.n_j()) else { return };
    let z = wv::normal_quantile(0.5 * (1.0 + result.level));
    result.ci = Some(
        result
            .theta_hat
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let se = cov[(i, i)].max(0.0).sqrt();
                (t - z * se, t + z * se)
            })
            .collect(),
    );
    result.param_cov = Some(cov);
}

/// Fits `model` to an already estimated wavelet variance.
pub fn fit_wv(est: WvEstimate, model: &ModelSpec, omega: &WeightingMatrix, options: &FitOptions) -> Result<FitResult> {
    fit_to_estimate(est, model, omega, options, Instant::now())
}

fn fit_to_estimate(
    est: WvEstimate,
    model: &ModelSpec,
    omega: &WeightingMatrix,
    options: &FitOptions,
    start: Instant,
) -> Result<FitResult> {
    let p = model.num_free();
    if p == 0 {
        return Err(Error::invalid("the model has no free parameters"));
    }
    if est.num_scales() < p {
        return Err(Error::Identifiability(format!(
            "{} wavelet-variance moments cannot identify {p} parameters",
            est.num_scales()
        )));
    }
    let scales = est.scales.clone();
    let nu_hat = est.nu_hat.clone();
    let theta0 = starting_values(&nu_hat, &scales, model, omega, options.num_starts)?;
    let run = minimize(model, &nu_hat, &scales, omega, &theta0, options, start);
    if !run.fx.is_finite() {
        return Err(Error::NoSolution("no admissible parameter value found".into()));
    }
    let iterations = run.iterations;
    let mut fitted = model.with_free_values(&run.x)?;
    canonicalize(&mut fitted);
    let theta_hat = fitted.free_values().expect("all free values set");
    let objective_value = gmwm_objective(&theta_hat, &nu_hat, &scales, &fitted, omega)?;
    let at_bound = at_bound(&fitted, &theta_hat, &nu_hat);
    let converged = run.converged && !at_bound;

    let mut result = FitResult {
        labels: fitted.free_labels(),
        model: fitted,
        theta_hat,
        objective: objective_value,
        omega: omega.clone(),
        wv: est,
        param_cov: None,
        ci: None,
        level: options.level,
        converged,
        at_bound,
        iterations,
        wall_time: start.elapsed(),
        weights: None,
        flavor: options.flavor,
    };
    if options.inference {
        if let Some(v) = result.wv.v_hat.clone() {
            attach_inference(&mut result, &v);
        }
    }
    Ok(result)
}

pub(crate) struct Minimum {
    /// Free parameters in the natural space.
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Simplex search in the transformed space from `theta0`, followed by
/// `options.restarts` restarts from the current optimum.
pub(crate) fn minimize(
    model: &ModelSpec,
    nu_hat: &[f64],
    scales: &[ScaleLabel],
    omega: &WeightingMatrix,
    theta0: &[f64],
    options: &FitOptions,
    start: Instant,
) -> Minimum {
    let transform = ParamTransform::for_model(model);
    let objective = |u: &[f64]| -> f64 {
        let theta = transform.to_natural(u);
        let Ok(m) = model.with_free_values(&theta) else { return f64::INFINITY };
        if !m.in_estimation_space() {
            return f64::INFINITY;
        }
        match theory::implied_unchecked(&m, scales) {
            Ok(nu) => {
                let r: Vec<f64> = nu_hat.iter().zip(&nu).map(|(a, b)| a - b).collect();
                omega.quad(&r)
            }
            Err(_) => f64::INFINITY,
        }
    };
    let simplex = SimplexOptions {
        ftol: options.tolerance,
        deadline: Some(start + options.time_budget),
        ..SimplexOptions::default()
    };
    let mut run = nelder_mead(&objective, &transform.to_unbounded(theta0), &simplex);
    let mut iterations = run.iterations;
    let mut best = (run.fx, run.x.clone());
    for _ in 0..options.restarts {
        if run.timed_out {
            break;
        }
        // fresh, smaller simplex around the current optimum
        let again = nelder_mead(&objective, &best.1, &SimplexOptions { initial_step: 0.1, ..simplex });
        iterations += again.iterations;
        if again.fx <= best.0 {
            best = (again.fx, again.x.clone());
        }
        run = again;
    }
    Minimum { x: transform.to_natural(&best.1), fx: best.0, iterations, converged: run.converged && !run.timed_out }
}

/// Orders exchangeable components so estimates are comparable across fits:
/// repeated AR(1) components by decreasing `rho`, spatial components by
/// decreasing range. Only fully free components are reordered.
fn canonicalize(model: &mut ModelSpec) {
    use crate::models::ComponentKind;
    let comps = model.components_mut();
    let key = |c: &crate::models::Component| -> Option<f64> {
        let free = c.params.iter().all(|p| p.free);
        match c.kind {
            ComponentKind::Ar1 | ComponentKind::SpatialExp | ComponentKind::SpatialGauss if free => c.params[0].value,
            _ => None,
        }
    };
    for kind in [ComponentKind::Ar1, ComponentKind::SpatialExp, ComponentKind::SpatialGauss] {
        let idx: Vec<usize> = (0..comps.len()).filter(|&i| comps[i].kind == kind && key(&comps[i]).is_some()).collect();
        if idx.len() < 2 {
            continue;
        }
        let mut group: Vec<_> = idx.iter().map(|&i| comps[i].clone()).collect();
        group.sort_by(|a, b| key(b).unwrap().total_cmp(&key(a).unwrap()));
        for (&i, c) in idx.iter().zip(group) {
            comps[i] = c;
        }
    }
}

fn at_bound(model: &ModelSpec, theta: &[f64], nu_hat: &[f64]) -> bool {
    use crate::models::ComponentKind;
    let scale = 2.0 * nu_hat.iter().sum::<f64>();
    let slots = model.free_slots();
    for (&(ci, pi), &x) in slots.iter().zip(theta) {
        let kind = model.components()[ci].kind;
        let (lo, hi) = kind.bounds(pi);
        let near = if hi.is_finite() {
            (x - lo).min(hi - x) < 1e-6 * (hi - lo)
        } else if pi == kind.variance_index() {
            x - lo < 1e-7 * scale
        } else {
            x - lo < 1e-6
        };
        if near {
            return true;
        }
    }
    model.components().iter().any(|c| match c.kind {
        ComponentKind::Arma { p, .. } if p > 1 => crate::models::spectral_radius(&c.values()[..p]) > 1.0 - 1e-6,
        _ => false,
    })
}

#[cfg(test)]
mod tests;
