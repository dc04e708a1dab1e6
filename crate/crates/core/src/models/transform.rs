use super::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Map {
    /// `x = lo + exp(u)`
    Log {
        lo: f64,
    },
    /// `x = lo + (hi - lo) / (1 + exp(-u))`
    Logistic {
        lo: f64,
        hi: f64,
    },
    Identity,
}

/// Bijection between the bounded natural parameter space and `R^p`, used
/// so the optimizer can search without constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTransform {
    maps: Vec<Map>,
}

impl ParamTransform {
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Self {
        let maps = bounds
            .iter()
            .map(|&(lo, hi)| match (lo.is_finite(), hi.is_finite()) {
                (true, true) => Map::Logistic { lo, hi },
                (true, false) => Map::Log { lo },
                _ => Map::Identity,
            })
            .collect();
        Self { maps }
    }

    /// Transform for the free parameters of `model`.
    pub fn for_model(model: &ModelSpec) -> Self {
        Self::from_bounds(&model.free_bounds())
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Natural -> unbounded.
    pub fn to_unbounded(&self, theta: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .zip(theta)
            .map(|(m, &x)| match *m {
                Map::Log { lo } => (x - lo).ln(),
                Map::Logistic { lo, hi } => {
                    let p = (x - lo) / (hi - lo);
                    (p / (1.0 - p)).ln()
                }
                Map::Identity => x,
            })
            .collect()
    }

    /// Unbounded -> natural. Results are clamped strictly inside the
    /// bounds, which matters only when `u` saturates.
    pub fn to_natural(&self, u: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .zip(u)
            .map(|(m, &v)| match *m {
                Map::Log { lo } => lo + v.exp().max(f64::MIN_POSITIVE),
                Map::Logistic { lo, hi } => {
                    let p = if v >= 0.0 {
                        1.0 / (1.0 + (-v).exp())
                    } else {
                        let e = v.exp();
                        e / (1.0 + e)
                    };
                    let x = lo + (hi - lo) * p;
                    let eps = (hi - lo) * f64::EPSILON;
                    x.clamp(lo + eps, hi - eps)
                }
                Map::Identity => v,
            })
            .collect()
    }
}
