//! The simulation designs of the robustness study.

use super::contaminate::{ContaminationKind, ContaminationSpec};
use crate::data::DataShape;
use crate::error::{Error, Result};
use crate::gmwm::OmegaKind;
use crate::models::{presets, Component, ComponentKind, ModelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub name: &'static str,
    /// Data-generating model with every parameter set.
    pub truth: ModelSpec,
    pub shape: DataShape,
    /// Contamination applied in the contaminated setting (seed replaced per replicate).
    pub contamination: ContaminationSpec,
    /// Weighting matrix used by every estimator on this design.
    pub omega: OmegaKind,
}

impl Design {
    /// Model fitted to each replicate: the true structure, all parameters free.
    pub fn template(&self) -> ModelSpec {
        self.truth.structure()
    }

    /// True values in the order of the template's free parameters.
    pub fn true_values(&self) -> Vec<f64> {
        self.truth.components().iter().flat_map(|c| c.values()).collect()
    }

    pub fn with_shape(&self, shape: DataShape) -> Self {
        Self { shape, ..self.clone() }
    }
}

const N: usize = 1000;
const SIDE: usize = 30;

fn spec(kind: ContaminationKind, epsilon: f64, sigma2: f64) -> ContaminationSpec {
    ContaminationSpec { kind, epsilon, sigma2, seed: 0 }
}

fn level_shift() -> ContaminationSpec {
    spec(ContaminationKind::LevelShift(vec![5.0, -3.0]), 0.05, 0.0)
}

fn isolated(epsilon: f64, sigma2: f64) -> ContaminationSpec {
    spec(ContaminationKind::Isolated { replace: false }, epsilon, sigma2)
}

fn patchy() -> ContaminationSpec {
    spec(ContaminationKind::Patchy { patch_len: super::DEFAULT_PATCH_LEN }, 0.01, 100.0)
}

fn series(name: &'static str, truth: ModelSpec, contamination: ContaminationSpec, omega: OmegaKind) -> Design {
    Design { name, truth, shape: DataShape::Series(N), contamination, omega }
}

fn field(name: &'static str, truth: ModelSpec, contamination: ContaminationSpec) -> Design {
    Design { name, truth, shape: DataShape::Field(SIDE, SIDE), contamination, omega: OmegaKind::InverseDiagonal }
}

fn spatial_pair(kind: ComponentKind) -> ModelSpec {
    ModelSpec::new(vec![Component::new(kind, &[2.0, 1.0]), Component::new(kind, &[1.5, 1.0])]).unwrap()
}

pub fn ar1() -> Design {
    series("AR(1)", presets::ar1(0.9, 1.0), spec(ContaminationKind::Scale(3), 0.01, 100.0), OmegaKind::InverseDiagonal)
}

pub fn ar2() -> Design {
    series("AR(2)", presets::arma(&[0.5, -0.3], &[], 1.0), isolated(0.05, 9.0), OmegaKind::InverseDiagonal)
}

pub fn arma12() -> Design {
    series("ARMA(1,2)", presets::arma(&[0.5], &[-0.1, 0.5], 1.0), level_shift(), OmegaKind::Identity)
}

pub fn arma31() -> Design {
    series("ARMA(3,1)", presets::arma(&[0.7, 0.3, -0.2], &[0.5], 2.0), patchy(), OmegaKind::Identity)
}

pub fn ssm() -> Design {
    series("SSM", presets::ssm(0.99, 0.1, 0.6, 2.0, 3.0), isolated(0.05, 9.0), OmegaKind::Identity)
}

pub fn exp1() -> Design {
    field("Exp(1)", presets::exponential(2.0, 1.0), level_shift())
}

pub fn exp2() -> Design {
    field("Exp(2)", spatial_pair(ComponentKind::SpatialExp), isolated(0.01, 100.0))
}

pub fn gauss1() -> Design {
    field("Gauss(1)", presets::gaussian(2.0, 1.0), patchy())
}

pub fn gauss2() -> Design {
    field("Gauss(2)", spatial_pair(ComponentKind::SpatialGauss), isolated(0.05, 9.0))
}

pub fn time_series() -> Vec<Design> {
    vec![ar1(), ar2(), arma12(), arma31(), ssm()]
}

pub fn spatial() -> Vec<Design> {
    vec![exp1(), exp2(), gauss1(), gauss2()]
}

pub fn all() -> Vec<Design> {
    time_series().into_iter().chain(spatial()).collect()
}

/// Looks a design up by name, ignoring case and punctuation (`arma12`, `ARMA(1,2)`).
pub fn by_name(name: &str) -> Result<Design> {
    let key = |s: &str| s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
    let k = key(name);
    all().into_iter().find(|d| key(d.name) == k).ok_or_else(|| {
        let names: Vec<&str> = all().iter().map(|d| d.name).collect();
        Error::invalid(format!("unknown design `{name}` (known: {})", names.join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn designs_are_valid() {
        for d in all() {
            d.truth.validate().unwrap();
            d.contamination.validate().unwrap();
            assert_eq!(d.template().num_free(), d.true_values().len(), "{}", d.name);
            assert!(d.template().free_values().is_none());
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(by_name("arma12").unwrap().name, "ARMA(1,2)");
        assert_eq!(by_name("Gauss(1)").unwrap().name, "Gauss(1)");
        assert!(by_name("ar7").is_err());
    }
}
