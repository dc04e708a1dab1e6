//! Model-implied wavelet variance `nu(theta)` and its Jacobian.

use nalgebra::DMatrix;

use super::acf::component_acf;
use super::{Component, ComponentKind, ModelSpec};
use crate::error::{Error, Result};
use crate::wavelet::{filter_len, ScaleLabel};

/// Model-implied wavelet variance per scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalWv {
    pub scales: Vec<ScaleLabel>,
    pub nu: Vec<f64>,
}

/// Closed-form autocorrelation of the level-`j` Haar filter at lag `d >= 0`.
#[inline]
pub(crate) fn haar_autocorrelation(j: usize, d: usize) -> f64 {
    let tau = (1usize << (j - 1)) as f64;
    let a2 = 1.0 / (4.0 * tau * tau);
    let d = d as f64;
    if d <= tau {
        a2 * (2.0 * tau - 3.0 * d)
    } else if d < 2.0 * tau {
        -a2 * (2.0 * tau - d)
    } else {
        0.0
    }
}

fn stationary_wv(acf: &[f64], j: usize) -> f64 {
    let len = filter_len(j);
    let mut nu = haar_autocorrelation(j, 0) * acf[0];
    for d in 1..len {
        nu += 2.0 * haar_autocorrelation(j, d) * acf[d];
    }
    nu
}

/// Wavelet variance of a random walk with innovation variance `g2`:
/// `g2 (L^2 + 2) / (12 L)` with `L = 2^j` the filter length.
pub(crate) fn random_walk_wv(g2: f64, j: usize) -> f64 {
    let l = filter_len(j) as f64;
    g2 * (l * l + 2.0) / (12.0 * l)
}

fn component_wv_1d(c: &Component, levels: &[usize]) -> Result<Vec<f64>> {
    if c.kind.is_spatial() {
        return Err(Error::invalid("spatial component in a time-series wavelet variance"));
    }
    if c.kind == ComponentKind::RandomWalk {
        let g2 = c.try_values()?[0];
        return Ok(levels.iter().map(|&j| random_walk_wv(g2, j)).collect());
    }
    let jmax = levels.iter().copied().max().unwrap_or(1);
    let acf = component_acf(c, filter_len(jmax) - 1)?;
    Ok(levels.iter().map(|&j| stationary_wv(&acf, j)).collect())
}

/// Isotropic covariance at distance `d`.
pub(crate) fn spatial_covariance(kind: ComponentKind, phi: f64, s2: f64, d: f64) -> f64 {
    match kind {
        ComponentKind::SpatialExp => s2 * (-d / phi).exp(),
        ComponentKind::SpatialGauss => {
            let r = d / phi;
            s2 * (-r * r).exp()
        }
        _ => unreachable!("not a spatial component"),
    }
}

fn component_wv_2d(c: &Component, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    if !c.kind.is_spatial() {
        return Err(Error::invalid("temporal component in a lattice wavelet variance"));
    }
    let v = c.try_values()?;
    let (phi, s2) = (v[0], v[1]);
    Ok(pairs
        .iter()
        .map(|&(j1, j2)| {
            let (l1, l2) = (filter_len(j1), filter_len(j2));
            // sum over tap displacements of the separable filter's
            // autocorrelation times the covariance at that displacement
            let mut nu = 0.0;
            for du in 0..l1 {
                let r1 = haar_autocorrelation(j1, du) * if du == 0 { 1.0 } else { 2.0 };
                for dv in 0..l2 {
                    let r2 = haar_autocorrelation(j2, dv) * if dv == 0 { 1.0 } else { 2.0 };
                    let d = ((du * du + dv * dv) as f64).sqrt();
                    nu += r1 * r2 * spatial_covariance(c.kind, phi, s2, d);
                }
            }
            nu
        })
        .collect())
}

fn sum_components(model: &ModelSpec, f: impl Fn(&Component) -> Result<Vec<f64>>, n: usize) -> Result<Vec<f64>> {
    let mut total = vec![0.0; n];
    for c in model.components() {
        for (t, x) in total.iter_mut().zip(f(c)?) {
            *t += x;
        }
    }
    Ok(total)
}

/// Implied wavelet variance at levels `1..=num_scales` of a time-series model.
pub fn theoretical_wv_1d(model: &ModelSpec, num_scales: usize) -> Result<TheoreticalWv> {
    let scales: Vec<ScaleLabel> = (1..=num_scales).map(ScaleLabel::Level).collect();
    theoretical_wv(model, &scales)
}

/// Implied wavelet variance of a spatial model at the given scale pairs.
pub fn theoretical_wv_2d(model: &ModelSpec, pairs: &[(usize, usize)]) -> Result<TheoreticalWv> {
    let scales: Vec<ScaleLabel> = pairs.iter().map(|&(a, b)| ScaleLabel::Pair(a, b)).collect();
    theoretical_wv(model, &scales)
}

/// Implied wavelet variance at an arbitrary list of scales. All labels must
/// be of the same kind as the model (levels for time series, pairs for
/// lattice models).
pub fn theoretical_wv(model: &ModelSpec, scales: &[ScaleLabel]) -> Result<TheoreticalWv> {
    model.validate()?;
    let nu = implied_unchecked(model, scales)?;
    Ok(TheoreticalWv { scales: scales.to_vec(), nu })
}

/// `nu(theta)` without validating parameters; callers guarantee validity.
pub(crate) fn implied_unchecked(model: &ModelSpec, scales: &[ScaleLabel]) -> Result<Vec<f64>> {
    let n = scales.len();
    if model.is_spatial() {
        let pairs: Vec<(usize, usize)> = scales
            .iter()
            .map(|s| match *s {
                ScaleLabel::Pair(a, b) => Ok((a, b)),
                ScaleLabel::Level(_) => Err(Error::invalid("spatial model needs scale pairs")),
            })
            .collect::<Result<_>>()?;
        sum_components(model, |c| component_wv_2d(c, &pairs), n)
    } else {
        let levels: Vec<usize> = scales
            .iter()
            .map(|s| match *s {
                ScaleLabel::Level(j) => Ok(j),
                ScaleLabel::Pair(..) => Err(Error::invalid("time-series model needs scale levels")),
            })
            .collect::<Result<_>>()?;
        sum_components(model, |c| component_wv_1d(c, &levels), n)
    }
}

const JACOBIAN_REL_STEP: f64 = 1e-6;

/// Jacobian `d nu / d theta` over the free parameters, by central
/// differences in the natural parameter space.
pub fn wv_jacobian(model: &ModelSpec, scales: &[ScaleLabel]) -> Result<DMatrix<f64>> {
    model.validate()?;
    let theta = model.free_values().ok_or_else(|| Error::invalid("free parameters have no values"))?;
    let bounds = model.free_bounds();
    let mut jac = DMatrix::zeros(scales.len(), theta.len());
    for (k, (&x, &(lo, hi))) in theta.iter().zip(&bounds).enumerate() {
        let mut h = JACOBIAN_REL_STEP.max(JACOBIAN_REL_STEP * x.abs());
        let room = (x - lo).min(hi - x);
        if room <= 2.0 * h {
            h = room / 4.0;
        }
        let mut column = None;
        for _ in 0..8 {
            if !(h > 1e-14 * x.abs().max(1.0)) {
                break;
            }
            let mut up = theta.clone();
            up[k] = x + h;
            let mut down = theta.clone();
            down[k] = x - h;
            let m_up = model.with_free_values(&up)?;
            let m_down = model.with_free_values(&down)?;
            if m_up.validate().is_ok() && m_down.validate().is_ok() {
                let a = implied_unchecked(&m_up, scales)?;
                let b = implied_unchecked(&m_down, scales)?;
                column = Some(a.iter().zip(&b).map(|(u, d)| (u - d) / (2.0 * h)).collect::<Vec<_>>());
                break;
            }
            h /= 10.0;
        }
        let column = column
            .ok_or_else(|| Error::numerical(format!("no admissible finite-difference step for parameter {k}")))?;
        for (i, v) in column.into_iter().enumerate() {
            jac[(i, k)] = v;
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::super::presets;
    use super::*;
    use crate::wavelet::haar_filter_autocorrelation;

    #[test]
    fn closed_form_filter_autocorrelation() {
        for j in 1..8 {
            let brute = haar_filter_autocorrelation(j);
            for (d, &b) in brute.iter().enumerate() {
                assert!((haar_autocorrelation(j, d) - b).abs() < 1e-15);
            }
            assert_eq!(haar_autocorrelation(j, filter_len(j)), 0.0);
        }
    }

    #[test]
    fn white_noise_wv() {
        let t = theoretical_wv_1d(&presets::white_noise(1.0), 8).unwrap();
        for (i, &v) in t.nu.iter().enumerate() {
            assert!((v - 0.5f64.powi(i as i32 + 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn ar1_zero_is_white_noise() {
        let a = theoretical_wv_1d(&presets::ar1(0.0, 1.0), 9).unwrap();
        let w = theoretical_wv_1d(&presets::white_noise(1.0), 9).unwrap();
        assert_eq!(a.nu, w.nu);
    }

    #[test]
    fn additivity() {
        let sum: ModelSpec = "sum(ar1(rho=0.9,v2=1),wn(s2=1))".parse().unwrap();
        let t = theoretical_wv_1d(&sum, 9).unwrap();
        let a = theoretical_wv_1d(&presets::ar1(0.9, 1.0), 9).unwrap();
        let w = theoretical_wv_1d(&presets::white_noise(1.0), 9).unwrap();
        for i in 0..9 {
            assert_eq!(t.nu[i], a.nu[i] + w.nu[i]);
        }
    }

    #[test]
    fn random_walk_matches_filtered_cumsum() {
        // Haar filter applied to a cumulative sum equals a filter g on the
        // innovations with g[m] = sum_{l<=m} h[l]; its variance is sum g^2.
        for j in 1..10 {
            let h = crate::wavelet::haar_filter(j);
            let mut acc = 0.0;
            let var: f64 = h
                .iter()
                .map(|x| {
                    acc += x;
                    acc * acc
                })
                .sum();
            let nu = random_walk_wv(1.0, j);
            assert!(((var - nu) / nu).abs() < 1e-12, "j={j}: {var} vs {nu}");
        }
    }

    #[test]
    fn spatial_white_noise_limit() {
        let t = theoretical_wv_2d(&presets::exponential(1e-4, 2.0), &crate::wavelet::triangular_pairs(4)).unwrap();
        for (s, v) in t.scales.iter().zip(&t.nu) {
            let ScaleLabel::Pair(a, b) = *s else { unreachable!() };
            let expect = 2.0 * 0.5f64.powi((a + b) as i32);
            assert!((v - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn white_noise_jacobian_is_exact() {
        let m = presets::white_noise(3.0).freed();
        let scales: Vec<ScaleLabel> = (1..=6).map(ScaleLabel::Level).collect();
        let d = wv_jacobian(&m, &scales).unwrap();
        for i in 0..6 {
            assert!((d[(i, 0)] - 0.5f64.powi(i as i32 + 1)).abs() < 1e-9);
        }
    }

    #[test]
    fn mixed_labels_rejected() {
        assert!(theoretical_wv(&presets::ar1(0.5, 1.0), &[ScaleLabel::Pair(1, 1)]).is_err());
        assert!(theoretical_wv(&presets::exponential(1.0, 1.0), &[ScaleLabel::Level(1)]).is_err());
    }
}
