use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::contaminate::contaminate;
use super::designs::Design;
use super::{median, rmse_star};
use crate::data::DataShape;
use crate::error::{Error, Result};
use crate::gmwm::{fit, FitOptions, Flavor, DEFAULT_EFFICIENCY};
use crate::rng::derive_seed;

/// An estimator taking part in a study.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    pub name: String,
    pub flavor: Flavor,
}

impl Estimator {
    pub fn new(flavor: Flavor) -> Self {
        Self { name: flavor.to_string(), flavor }
    }

    pub fn gmwm() -> Self {
        Self::new(Flavor::Classical)
    }

    pub fn rgmwm() -> Self {
        Self::new(Flavor::Robust { efficiency: DEFAULT_EFFICIENCY })
    }

    pub fn defaults() -> Vec<Self> {
        vec![Self::gmwm(), Self::rgmwm()]
    }
}

#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub replicates: usize,
    pub seed: u64,
    pub contaminated: bool,
    /// Run replicates on the worker pool.
    pub parallel: bool,
    pub time_budget: Duration,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { replicates: 100, seed: 1, contaminated: true, parallel: true, time_budget: Duration::from_secs(60) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub label: String,
    pub truth: f64,
    /// Absent with fewer than three converged fits.
    pub rmse_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSummary {
    pub name: String,
    /// Percentage of replicates with a converged fit.
    pub convergence_rate: f64,
    /// Wall time of every fit attempt, in replicate order (seconds).
    pub times: Vec<f64>,
    pub params: Vec<ParamSummary>,
    /// Estimates of the converged fits, in replicate order.
    pub estimates: Vec<Vec<f64>>,
}

impl EstimatorSummary {
    pub fn median_time(&self) -> Option<f64> {
        (!self.times.is_empty()).then(|| median(&self.times))
    }

    pub fn rmse(&self, label: &str) -> Option<f64> {
        self.params.iter().find(|p| p.label == label).and_then(|p| p.rmse_star)
    }

    /// Everything except timings.
    pub fn same_statistics(&self, other: &Self) -> bool {
        self.name == other.name
            && self.convergence_rate == other.convergence_rate
            && self.params == other.params
            && self.estimates == other.estimates
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub design: String,
    pub shape: DataShape,
    pub contaminated: bool,
    pub replicates: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorSummary>,
}

fn shape_label(shape: DataShape) -> String {
    match shape {
        DataShape::Series(n) => n.to_string(),
        DataShape::Field(r, c) => format!("{r}x{c}"),
    }
}

impl StudyReport {
    pub fn estimator(&self, name: &str) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.name == name)
    }

    pub fn same_statistics(&self, other: &Self) -> bool {
        self.design == other.design
            && self.shape == other.shape
            && self.contaminated == other.contaminated
            && self.replicates == other.replicates
            && self.estimators.len() == other.estimators.len()
            && self.estimators.iter().all(|e| other.estimator(&e.name).is_some_and(|o| e.same_statistics(o)))
    }

    pub const CSV_HEADER: &'static str =
        "design,sample_size,contaminated,estimator,parameter,truth,rmse_star,conv_rate,median_time_s,replicates";

    /// One row per estimator and parameter, with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        self.write_csv_rows(&mut out);
        out
    }

    pub fn write_csv_rows(&self, out: &mut String) {
        for e in &self.estimators {
            let time = e.median_time().map(|t| format!("{t:.6}")).unwrap_or_default();
            for p in &e.params {
                let rmse = p.rmse_star.map(|r| format!("{r:.16e}")).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "\"{}\",{},{},{},{},{},{},{:.1},{},{}",
                    self.design,
                    shape_label(self.shape),
                    self.contaminated,
                    e.name,
                    p.label,
                    p.truth,
                    rmse,
                    e.convergence_rate,
                    time,
                    self.replicates
                );
            }
        }
    }

    /// Timing and convergence table: Model, Sample size, Median, Conv. rate (%).
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:<12} {:<10} {:>12} {:>12} {:>15}\n",
            "Model", "Estimator", "Sample size", "Median", "Conv. rate (%)"
        );
        for e in &self.estimators {
            let time = e.median_time().map(|t| format!("{t:.3e}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<12} {:<10} {:>12} {:>12} {:>15.1}",
                self.design,
                e.name,
                shape_label(self.shape),
                time,
                e.convergence_rate
            );
        }
        out
    }

    /// RMSE* per parameter and estimator.
    pub fn rmse_table(&self) -> String {
        let mut out = format!("{:<16} {:>10}", "Parameter", "Truth");
        for e in &self.estimators {
            let _ = write!(out, " {:>12}", e.name);
        }
        out.push('\n');
        let Some(first) = self.estimators.first() else { return out };
        for (k, p) in first.params.iter().enumerate() {
            let _ = write!(out, "{:<16} {:>10}", p.label, p.truth);
            for e in &self.estimators {
                let r = e.params[k].rmse_star.map(|r| format!("{r:.4}")).unwrap_or_else(|| "-".into());
                let _ = write!(out, " {r:>12}");
            }
            out.push('\n');
        }
        out
    }
}

struct Attempt {
    seconds: f64,
    estimate: Option<Vec<f64>>,
}

/// Monte Carlo study of `estimators` on `design`.
///
/// Replicate `r` draws its data and contamination from seeds derived from
/// `(seed, r)` only, so reports are reproducible and do not depend on
/// scheduling or on the order of the estimators.
pub fn run_study(design: &Design, estimators: &[Estimator], options: &StudyOptions) -> Result<StudyReport> {
    if options.replicates == 0 {
        return Err(Error::invalid("a study needs at least one replicate"));
    }
    if estimators.is_empty() {
        return Err(Error::invalid("a study needs at least one estimator"));
    }
    for (i, e) in estimators.iter().enumerate() {
        if estimators[..i].iter().any(|o| o.name == e.name) {
            return Err(Error::invalid(format!("duplicate estimator name `{}`", e.name)));
        }
    }
    design.truth.validate()?;
    design.contamination.validate()?;
    let template = design.template();
    let truth = design.true_values();
    let labels = template.free_labels();

    let replicate = |r: usize| -> Result<Vec<Attempt>> {
        let clean = design.truth.simulate(design.shape, derive_seed(options.seed, 2 * r as u64))?;
        let data = if options.contaminated {
            let spec = design.contamination.with_seed(derive_seed(options.seed, 2 * r as u64 + 1));
            contaminate(&clean, &spec)?.0
        } else {
            clean
        };
        Ok(estimators
            .iter()
            .map(|e| {
                let opts = FitOptions {
                    flavor: e.flavor,
                    omega: design.omega,
                    time_budget: options.time_budget,
                    inference: false,
                    ..FitOptions::default()
                };
                let t0 = Instant::now();
                let res = fit(&data, &template, &opts);
                let seconds = t0.elapsed().as_secs_f64();
                let estimate = match res {
                    Ok(f) if f.converged => Some(f.theta_hat),
                    _ => None,
                };
                Attempt { seconds, estimate }
            })
            .collect())
    };

    let runs: Vec<Vec<Attempt>> = if options.parallel {
        (0..options.replicates).into_par_iter().map(replicate).collect::<Result<_>>()?
    } else {
        (0..options.replicates).map(replicate).collect::<Result<_>>()?
    };

    let summaries = estimators
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let times: Vec<f64> = runs.iter().map(|r| r[k].seconds).collect();
            let estimates: Vec<Vec<f64>> = runs.iter().filter_map(|r| r[k].estimate.clone()).collect();
            let params = labels
                .iter()
                .zip(&truth)
                .enumerate()
                .map(|(i, (label, &t))| {
                    let column: Vec<f64> = estimates.iter().map(|x| x[i]).collect();
                    ParamSummary { label: label.clone(), truth: t, rmse_star: rmse_star(&column, t).ok() }
                })
                .collect();
            EstimatorSummary {
                name: e.name.clone(),
                convergence_rate: 100.0 * estimates.len() as f64 / options.replicates as f64,
                times,
                params,
                estimates,
            }
        })
        .collect();

    Ok(StudyReport {
        design: design.name.to_string(),
        shape: design.shape,
        contaminated: options.contaminated,
        replicates: options.replicates,
        seed: options.seed,
        estimators: summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::designs;

    fn small() -> StudyOptions {
        StudyOptions { replicates: 4, seed: 11, ..StudyOptions::default() }
    }

    #[test]
    fn deterministic_and_order_free() {
        let d = designs::ar1().with_shape(DataShape::Series(256));
        let a = run_study(&d, &Estimator::defaults(), &small()).unwrap();
        let b = run_study(&d, &Estimator::defaults(), &StudyOptions { parallel: false, ..small() }).unwrap();
        assert!(a.same_statistics(&b));
        let rev: Vec<Estimator> = Estimator::defaults().into_iter().rev().collect();
        let c = run_study(&d, &rev, &small()).unwrap();
        assert!(a.same_statistics(&c));
        assert_eq!(c.estimators[0].name, "RGMWM");
    }

    #[test]
    fn report_shape() {
        let d = designs::ar1().with_shape(DataShape::Series(256));
        let r = run_study(&d, &Estimator::defaults(), &small()).unwrap();
        for e in &r.estimators {
            assert!((0.0..=100.0).contains(&e.convergence_rate));
            assert_eq!(e.times.len(), 4);
            assert_eq!(e.params.len(), 2);
            assert!(e.params.iter().all(|p| p.rmse_star.is_none_or(|x| x >= 0.0)));
        }
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 * 2);
        assert!(r.summary_table().contains("Conv. rate (%)"));
    }

    #[test]
    fn invalid_studies() {
        let d = designs::ar1();
        assert!(run_study(&d, &[], &small()).is_err());
        assert!(run_study(&d, &[Estimator::gmwm(), Estimator::gmwm()], &small()).is_err());
        assert!(run_study(&d, &Estimator::defaults(), &StudyOptions { replicates: 0, ..small() }).is_err());
    }
}
