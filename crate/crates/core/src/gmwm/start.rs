//! Multi-start seeding for the simplex search.
//!
//! Each candidate fixes the shape parameters (autoregressive coefficients,
//! spatial ranges). Given the shapes, `nu(theta)` is linear in the variance
//! parameters, so those are solved by nonnegative weighted least squares.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use super::WeightingMatrix;
use crate::error::Result;
use crate::models::{theory, Component, ComponentKind, ModelSpec};
use crate::rng;
use crate::wavelet::ScaleLabel;

const CANDIDATE_SEED: u64 = 0x5EED_0F_57A7;

/// Picks the best of `num_starts` seeds (at least two: a peak-based
/// heuristic and a naive seed; the rest are random shape draws).
/// Returns the free parameter values.
pub fn starting_values(
    nu_hat: &[f64],
    scales: &[ScaleLabel],
    model: &ModelSpec,
    omega: &WeightingMatrix,
    num_starts: usize,
) -> Result<Vec<f64>> {
    let num_starts = num_starts.max(2);
    let shapes_free = model.components().iter().any(|c| {
        let vi = c.kind.variance_index();
        c.params.iter().enumerate().any(|(i, p)| p.free && i != vi)
    });
    let mut rng = rng::stream(CANDIDATE_SEED, 0);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..num_starts {
        let shaped = match k {
            0 => with_shapes(model, |c, i| heuristic_shape(c, i, nu_hat, scales)),
            1 => with_shapes(model, |c, _| naive_shape(c)),
            _ => with_shapes(model, |c, _| random_shape(c, scales, &mut rng)),
        };
        let Some(candidate) = solve_variances(&shaped, nu_hat, scales, omega, !shapes_free)? else {
            continue;
        };
        if !candidate.in_estimation_space() {
            continue;
        }
        let nu = theory::implied_unchecked(&candidate, scales)?;
        let r: Vec<f64> = nu_hat.iter().zip(&nu).map(|(a, b)| a - b).collect();
        let value = omega.quad(&r);
        if value.is_finite() && best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, candidate.free_values().expect("candidate fully set")));
        }
        if !shapes_free {
            break;
        }
    }
    Ok(best.map(|(_, t)| t).unwrap_or_else(|| fallback(model, nu_hat)))
}

/// Fills free shape parameters through `f(component, ordinal among same
/// kind)`, returning values for the shape slots only.
fn with_shapes(model: &ModelSpec, mut f: impl FnMut(&Component, usize) -> Vec<f64>) -> ModelSpec {
    let mut out = model.clone();
    let mut seen = std::collections::HashMap::new();
    for c in out.components_mut() {
        let ord = seen.entry(format!("{:?}", c.kind)).or_insert(0usize);
        let shape = f(c, *ord);
        *ord += 1;
        let vi = c.kind.variance_index();
        let mut s = shape.into_iter();
        for (i, p) in c.params.iter_mut().enumerate() {
            if i == vi {
                continue;
            }
            let v = s.next().expect("shape length");
            if p.free {
                p.value = Some(v);
            }
        }
    }
    out
}

fn peak_level(nu_hat: &[f64], scales: &[ScaleLabel]) -> usize {
    // index of the largest estimate among 1D levels or diagonal pairs
    let mut best = (f64::MIN, 1);
    for (s, &v) in scales.iter().zip(nu_hat) {
        let j = match *s {
            ScaleLabel::Level(j) => j,
            ScaleLabel::Pair(a, b) if a == b => a,
            _ => continue,
        };
        if v > best.0 {
            best = (v, j);
        }
    }
    best.1
}

fn heuristic_shape(c: &Component, ordinal: usize, nu_hat: &[f64], scales: &[ScaleLabel]) -> Vec<f64> {
    let peak = peak_level(nu_hat, scales);
    let j = peak.saturating_sub(3 * ordinal).max(1);
    let tau = (1usize << (j - 1)) as f64;
    match c.kind {
        ComponentKind::Ar1 => vec![(1.0 - 1.0 / tau).clamp(0.1, 0.995)],
        ComponentKind::Arma { p, q } => {
            let mut v = vec![0.0; p + q];
            if p > 0 {
                v[0] = (1.0 - 1.0 / tau).clamp(0.1, 0.9);
            }
            v
        }
        ComponentKind::SpatialExp | ComponentKind::SpatialGauss => vec![tau],
        ComponentKind::WhiteNoise | ComponentKind::RandomWalk => vec![],
    }
}

fn naive_shape(c: &Component) -> Vec<f64> {
    match c.kind {
        ComponentKind::Ar1 => vec![0.5],
        ComponentKind::Arma { p, q } => vec![0.0; p + q],
        ComponentKind::SpatialExp | ComponentKind::SpatialGauss => vec![1.0],
        ComponentKind::WhiteNoise | ComponentKind::RandomWalk => vec![],
    }
}

/// Coefficients of a stable polynomial `1 - a_1 z - ... - a_n z^n` from
/// partial autocorrelations in `(-1, 1)` (Durbin-Levinson).
fn from_partials(pacf: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &pk) in pacf.iter().enumerate() {
        let prev = a.clone();
        for j in 0..k {
            a[j] = prev[j] - pk * prev[k - 1 - j];
        }
        a.push(pk);
    }
    a
}

fn random_shape(c: &Component, scales: &[ScaleLabel], rng: &mut rng::Rng) -> Vec<f64> {
    match c.kind {
        ComponentKind::Ar1 => {
            let r: f64 = 1.0 - 10f64.powf(-rng.gen_range(0.1..2.5));
            vec![if rng.gen_bool(0.2) { -r } else { r }]
        }
        ComponentKind::Arma { p, q } => {
            let ar_pacf: Vec<f64> = (0..p).map(|_| rng.gen_range(-0.9..0.9)).collect();
            let ma_pacf: Vec<f64> = (0..q).map(|_| rng.gen_range(-0.9..0.9)).collect();
            let ar = from_partials(&ar_pacf);
            // MA polynomial 1 + b_1 z + ... is invertible when -b is stable
            let ma: Vec<f64> = from_partials(&ma_pacf).into_iter().map(|x| -x).collect();
            ar.into_iter().chain(ma).collect()
        }
        ComponentKind::SpatialExp | ComponentKind::SpatialGauss => {
            let jmax = scales
                .iter()
                .map(|s| match *s {
                    ScaleLabel::Pair(a, b) => a.max(b),
                    ScaleLabel::Level(j) => j,
                })
                .max()
                .unwrap_or(1);
            let hi = ((1usize << jmax) as f64).ln();
            vec![rng.gen_range(0.3f64.ln()..hi).exp()]
        }
        ComponentKind::WhiteNoise | ComponentKind::RandomWalk => vec![],
    }
}

/// Sets the free variance parameters of `model` (whose other parameters are
/// all set) by nonnegative least squares under `omega`. When
/// `match_first_scale` holds and exactly one variance is free, that variance
/// instead matches the first scale exactly.
fn solve_variances(
    model: &ModelSpec,
    nu_hat: &[f64],
    scales: &[ScaleLabel],
    omega: &WeightingMatrix,
    match_first_scale: bool,
) -> Result<Option<ModelSpec>> {
    let comps = model.components();
    let mut offset = vec![0.0; nu_hat.len()];
    let mut columns: Vec<(usize, Vec<f64>)> = Vec::new();
    for (ci, c) in comps.iter().enumerate() {
        let vi = c.kind.variance_index();
        let mut unit = c.clone();
        if c.params[vi].free {
            unit.params[vi].value = Some(1.0);
        }
        let single = ModelSpec::new(vec![unit])?;
        if single.validate().is_err() {
            return Ok(None);
        }
        let nu = theory::implied_unchecked(&single, scales)?;
        if c.params[vi].free {
            columns.push((ci, nu));
        } else {
            offset.iter_mut().zip(&nu).for_each(|(o, v)| *o += v);
        }
    }
    let mut out = model.clone();
    if columns.is_empty() {
        return Ok(Some(out));
    }
    let target: Vec<f64> = nu_hat.iter().zip(&offset).map(|(a, b)| a - b).collect();
    let mut values: Option<Vec<f64>> = None;
    if match_first_scale && columns.len() == 1 && target[0] > 0.0 && columns[0].1[0] > 0.0 {
        values = Some(vec![target[0] / columns[0].1[0]]);
    }
    let values =
        values.unwrap_or_else(|| nnls(&columns.iter().map(|c| c.1.clone()).collect::<Vec<_>>(), &target, omega));
    // variances pinned at zero are moved just inside the admissible region
    let floor = 1e-3 * nu_hat.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for ((ci, col), v) in columns.iter().zip(values) {
        let vi = comps[*ci].kind.variance_index();
        let scale = col.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        out.components_mut()[*ci].params[vi].value = Some(v.max(floor / scale));
    }
    Ok(Some(out))
}

/// `argmin_{s >= 0} (y - A s)' Omega (y - A s)` by enumerating active sets;
/// the number of variance columns is small.
fn nnls(columns: &[Vec<f64>], y: &[f64], omega: &WeightingMatrix) -> Vec<f64> {
    let k = columns.len();
    let n = y.len();
    if k > 12 {
        // too many subsets; plain least squares clipped at zero
        return solve_subset(columns, y, omega, &(0..k).collect::<Vec<_>>())
            .map(|s| s.into_iter().map(|x| x.max(0.0)).collect())
            .unwrap_or_else(|| vec![0.0; k]);
    }
    let mut best = (f64::INFINITY, vec![0.0; k]);
    for mask in 0u32..(1 << k) {
        let subset: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let s_sub = if subset.is_empty() { Some(vec![]) } else { solve_subset(columns, y, omega, &subset) };
        let Some(s_sub) = s_sub else { continue };
        if s_sub.iter().any(|&x| x < 0.0) {
            continue;
        }
        let mut s = vec![0.0; k];
        for (&i, v) in subset.iter().zip(s_sub) {
            s[i] = v;
        }
        let r: Vec<f64> = (0..n).map(|t| y[t] - (0..k).map(|i| columns[i][t] * s[i]).sum::<f64>()).collect();
        let value = omega.quad(&r);
        if value < best.0 {
            best = (value, s);
        }
    }
    best.1
}

fn solve_subset(columns: &[Vec<f64>], y: &[f64], omega: &WeightingMatrix, subset: &[usize]) -> Option<Vec<f64>> {
    let n = y.len();
    let a = DMatrix::from_fn(n, subset.len(), |t, i| columns[subset[i]][t]);
    let w = &omega.matrix;
    let lhs = a.transpose() * w * &a;
    let rhs = a.transpose() * w * DVector::from_column_slice(y);
    lhs.lu().solve(&rhs).map(|s| s.iter().copied().collect())
}

fn fallback(model: &ModelSpec, nu_hat: &[f64]) -> Vec<f64> {
    let total = 2.0 * nu_hat.first().copied().unwrap_or(1.0);
    let naive = with_shapes(model, |c, _| naive_shape(c));
    naive
        .free_slots()
        .into_iter()
        .map(|(ci, pi)| {
            let c = &naive.components()[ci];
            if pi == c.kind.variance_index() {
                total
            } else {
                c.params[pi].value.unwrap_or(0.0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets;

    #[test]
    fn partials_give_stationary_coefficients() {
        for pacf in [vec![0.5], vec![0.8, -0.7], vec![0.9, 0.9, -0.9]] {
            let a = from_partials(&pacf);
            assert!(crate::models::spectral_radius(&a) < 1.0);
        }
        assert_eq!(from_partials(&[0.3]), vec![0.3]);
    }

    #[test]
    fn white_noise_matches_first_scale() {
        let scales: Vec<ScaleLabel> = (1..=5).map(ScaleLabel::Level).collect();
        let nu_hat = [0.7, 0.3, 0.2, 0.1, 0.05];
        let m = presets::white_noise(1.0).freed();
        let theta = starting_values(&nu_hat, &scales, &m, &WeightingMatrix::identity(5), 18).unwrap();
        assert_eq!(theta, vec![1.4]);
    }

    #[test]
    fn nnls_recovers_exact_mixture() {
        let scales: Vec<ScaleLabel> = (1..=8).map(ScaleLabel::Level).collect();
        let truth = presets::ssm(0.9, 0.5, 0.3, 1.0, 2.0);
        let nu = theoretical_nu(&truth, &scales);
        // shapes at truth, variances free
        let mut m = truth.clone();
        for c in m.components_mut() {
            let vi = c.kind.variance_index();
            c.params[vi] = crate::models::Param::free();
        }
        let out = solve_variances(&m, &nu, &scales, &WeightingMatrix::identity(8), false).unwrap().unwrap();
        let got = out.free_values().unwrap();
        for (g, t) in got.iter().zip([0.5, 1.0, 2.0]) {
            assert!((g - t).abs() < 1e-8, "{got:?}");
        }
    }

    fn theoretical_nu(m: &ModelSpec, scales: &[ScaleLabel]) -> Vec<f64> {
        crate::models::theoretical_wv(m, scales).unwrap().nu
    }
}
