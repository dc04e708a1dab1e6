use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::theory::spatial_covariance;
use super::{spectral_radius, ComponentKind, ModelSpec};
use crate::data::{DataShape, LatticeField, Observations, TimeSeries};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Largest lattice (in points) simulated with an exact covariance factor.
pub const MAX_EXACT_FIELD_POINTS: usize = 4096;

const FACTOR_CACHE_CAPACITY: usize = 8;

type FactorKey = (usize, usize, Vec<(u8, u64, u64)>);

fn factor_cache() -> &'static Mutex<Vec<(FactorKey, Arc<DMatrix<f64>>)>> {
    static CACHE: OnceLock<Mutex<Vec<(FactorKey, Arc<DMatrix<f64>>)>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

fn normals(rng: &mut Rng, n: usize, sd: f64) -> Vec<f64> {
    (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

impl ModelSpec {
    /// Draws one realization of the model with the given shape.
    ///
    /// Each component uses its own random stream derived from `seed`, so the
    /// output is a deterministic function of `(model, shape, seed)`.
    pub fn simulate(&self, shape: DataShape, seed: u64) -> Result<Observations> {
        self.validate()?;
        match (shape, self.is_spatial()) {
            (DataShape::Series(n), false) => Ok(Observations::Series(self.simulate_series(n, seed)?)),
            (DataShape::Field(k, m), true) => Ok(Observations::Field(self.simulate_field(k, m, seed)?)),
            (DataShape::Series(_), true) => Err(Error::invalid("a spatial model simulates lattice fields")),
            (DataShape::Field(..), false) => Err(Error::invalid("a time-series model simulates series")),
        }
    }

    pub fn simulate_series(&self, n: usize, seed: u64) -> Result<TimeSeries> {
        self.validate()?;
        if self.is_spatial() {
            return Err(Error::invalid("a spatial model simulates lattice fields"));
        }
        if n == 0 {
            return Err(Error::invalid("series length must be positive"));
        }
        let mut total = vec![0.0; n];
        for (i, c) in self.components().iter().enumerate() {
            let mut rng = rng::stream(seed, i as u64);
            let v = c.values();
            let x = match c.kind {
                ComponentKind::WhiteNoise => normals(&mut rng, n, v[0].sqrt()),
                ComponentKind::RandomWalk => {
                    let mut acc = 0.0;
                    normals(&mut rng, n, v[0].sqrt())
                        .into_iter()
                        .map(|e| {
                            acc += e;
                            acc
                        })
                        .collect()
                }
                ComponentKind::Ar1 => {
                    let (rho, v2) = (v[0], v[1]);
                    let e = normals(&mut rng, n, v2.sqrt());
                    let mut x = Vec::with_capacity(n);
                    // stationary start
                    let mut prev = rng.sample::<f64, _>(StandardNormal) * (v2 / (1.0 - rho * rho)).sqrt();
                    for &et in &e {
                        prev = rho * prev + et;
                        x.push(prev);
                    }
                    x
                }
                ComponentKind::Arma { p, q } => simulate_arma(&v[..p], &v[p..p + q], v[p + q], n, &mut rng),
                ComponentKind::SpatialExp | ComponentKind::SpatialGauss => unreachable!(),
            };
            for (t, xi) in total.iter_mut().zip(x) {
                *t += xi;
            }
        }
        TimeSeries::new(total)
    }

    /// Exact simulation of a `rows x cols` field through a Cholesky factor of
    /// its covariance matrix. Factors are cached per parameter set and shape.
    pub fn simulate_field(&self, rows: usize, cols: usize, seed: u64) -> Result<LatticeField> {
        self.validate()?;
        if !self.is_spatial() {
            return Err(Error::invalid("a time-series model simulates series"));
        }
        let n = rows * cols;
        if n > MAX_EXACT_FIELD_POINTS {
            return Err(Error::SizeLimit(format!(
                "exact field simulation is limited to {MAX_EXACT_FIELD_POINTS} points, got {rows}x{cols}"
            )));
        }
        if rows < 2 || cols < 2 {
            return Err(Error::invalid("a lattice field needs at least 2x2 points"));
        }
        let factor = self.field_factor(rows, cols)?;
        let mut rng = rng::stream(seed, 0);
        let z = DVector::from_vec(normals(&mut rng, n, 1.0));
        let x = &*factor * z;
        LatticeField::new(rows, cols, x.as_slice().to_vec())
    }

    fn field_factor(&self, rows: usize, cols: usize) -> Result<Arc<DMatrix<f64>>> {
        let key: FactorKey = (
            rows,
            cols,
            self.components()
                .iter()
                .map(|c| {
                    let v = c.values();
                    let tag = if c.kind == ComponentKind::SpatialExp { 0 } else { 1 };
                    (tag, v[0].to_bits(), v[1].to_bits())
                })
                .collect(),
        );
        if let Some((_, f)) = factor_cache().lock().unwrap().iter().find(|(k, _)| *k == key) {
            return Ok(f.clone());
        }
        let factor = Arc::new(build_factor(self, rows, cols)?);
        let mut cache = factor_cache().lock().unwrap();
        if cache.len() >= FACTOR_CACHE_CAPACITY {
            cache.remove(0);
        }
        cache.push((key, factor.clone()));
        Ok(factor)
    }
}

fn build_factor(model: &ModelSpec, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let n = rows * cols;
    // covariance depends only on the displacement, so tabulate it once
    let mut table: HashMap<(usize, usize), f64> = HashMap::new();
    for dr in 0..rows {
        for dc in 0..cols {
            let d = ((dr * dr + dc * dc) as f64).sqrt();
            let c: f64 = model
                .components()
                .iter()
                .map(|c| {
                    let v = c.values();
                    spatial_covariance(c.kind, v[0], v[1], d)
                })
                .sum();
            table.insert((dr, dc), c);
        }
    }
    let cov = DMatrix::from_fn(n, n, |i, j| {
        let (ri, ci) = (i / cols, i % cols);
        let (rj, cj) = (j / cols, j % cols);
        table[&(ri.abs_diff(rj), ci.abs_diff(cj))]
    });
    let sill = cov[(0, 0)];
    // Smooth covariances (notably the Gaussian) are numerically singular on a
    // unit lattice; add the smallest diagonal jitter that makes the
    // factorization succeed.
    let mut jitter = 0.0;
    for _ in 0..12 {
        let mut m = cov.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = m.cholesky() {
            return Ok(ch.unpack());
        }
        jitter = if jitter == 0.0 { 1e-12 * sill } else { jitter * 10.0 };
    }
    Err(Error::numerical("covariance matrix could not be factorized"))
}

fn simulate_arma(ar: &[f64], ma: &[f64], s2: f64, n: usize, rng: &mut Rng) -> Vec<f64> {
    let r = spectral_radius(ar);
    let burn = 100usize.max(10 * (1.0 / (1.0 - r)).ceil() as usize);
    let total = n + burn;
    let e = normals(rng, total, s2.sqrt());
    let mut x = vec![0.0; total];
    for t in 0..total {
        let mut v = e[t];
        for (i, a) in ar.iter().enumerate() {
            if t > i {
                v += a * x[t - i - 1];
            }
        }
        for (j, b) in ma.iter().enumerate() {
            if t > j {
                v += b * e[t - j - 1];
            }
        }
        x[t] = v;
    }
    x.split_off(burn)
}

#[cfg(test)]
mod tests {
    use super::super::presets;
    use super::*;

    fn mean_var(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn white_noise_variance() {
        let x = presets::white_noise(1.0).simulate_series(100_000, 3).unwrap();
        let (_, v) = mean_var(x.values());
        assert!((0.98..=1.02).contains(&v), "{v}");
    }

    #[test]
    fn ar1_lag_one() {
        let x = presets::ar1(0.9, 1.0).simulate_series(100_000, 5).unwrap();
        let x = x.values();
        let (m, v) = mean_var(x);
        let c1: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (x.len() as f64 - 1.0);
        let r = c1 / v;
        assert!((0.89..=0.91).contains(&r), "{r}");
    }

    #[test]
    fn deterministic() {
        let m = presets::ssm(0.99, 0.1, 0.6, 2.0, 3.0);
        let a = m.simulate(DataShape::Series(500), 11).unwrap();
        let b = m.simulate(DataShape::Series(500), 11).unwrap();
        assert_eq!(a, b);
        let c = m.simulate(DataShape::Series(500), 12).unwrap();
        assert_ne!(a, c);
        let f = presets::exponential(2.0, 1.0);
        assert_eq!(f.simulate(DataShape::Field(8, 9), 1).unwrap(), f.simulate(DataShape::Field(8, 9), 1).unwrap());
    }

    #[test]
    fn arma_acf_matches_theory() {
        let m = presets::arma(&[0.5], &[-0.1, 0.5], 1.0);
        let n = 400_000;
        let x = m.simulate_series(n, 9).unwrap();
        let x = x.values();
        let g = super::super::theoretical_acf(&m, 5).unwrap();
        for (h, &gh) in g.iter().enumerate() {
            let s: f64 = (0..n - h).map(|t| x[t] * x[t + h]).sum::<f64>() / n as f64;
            // long-run variance bound for a lagged product of a short-memory series
            let se = 4.0 * g[0] / (n as f64).sqrt();
            assert!((s - gh).abs() < 3.0 * se, "lag {h}: {s} vs {gh}");
        }
    }

    #[test]
    fn size_limit_and_shape_errors() {
        let f = presets::exponential(2.0, 1.0);
        assert!(matches!(f.simulate(DataShape::Field(65, 64), 1), Err(Error::SizeLimit(_))));
        assert!(f.simulate(DataShape::Series(10), 1).is_err());
        assert!(presets::white_noise(1.0).simulate(DataShape::Field(4, 4), 1).is_err());
    }

    #[test]
    fn gaussian_field_factorizes() {
        let f = presets::gaussian(2.0, 1.0).simulate_field(20, 20, 4).unwrap();
        let (_, v) = mean_var(f.values());
        assert!(v > 0.1 && v < 3.0);
    }
}
