use nalgebra::{DMatrix, DVector, Schur};

use super::{Component, ComponentKind, ModelSpec};
use crate::error::{Error, Result};

/// Spectral radius of the companion matrix of `1 - a_1 z - ... - a_p z^p`.
/// Values below one mean all roots lie outside the unit circle.
pub(crate) fn spectral_radius(a: &[f64]) -> f64 {
    match a.len() {
        0 => 0.0,
        1 => a[0].abs(),
        p => {
            let mut m = DMatrix::zeros(p, p);
            for (j, &v) in a.iter().enumerate() {
                m[(0, j)] = v;
            }
            for i in 1..p {
                m[(i, i - 1)] = 1.0;
            }
            // bounded Schur iteration; the unbounded variant can cycle on
            // some companion matrices
            match Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
                Some(s) => s.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
                None => gelfand_radius(m),
            }
        }
    }
}

/// `lim ||A^k||^(1/k)` by repeated normalized squaring.
fn gelfand_radius(mut m: DMatrix<f64>) -> f64 {
    let n0 = m.norm();
    if n0 == 0.0 {
        return 0.0;
    }
    m /= n0;
    let mut log_scale = n0.ln();
    let mut k = 1.0;
    for _ in 0..40 {
        m = &m * &m;
        k *= 2.0;
        let n = m.norm();
        if n == 0.0 {
            return 0.0;
        }
        m /= n;
        log_scale = 2.0 * log_scale + n.ln();
    }
    (log_scale / k).exp()
}

/// Autocovariance `gamma(0..=max_lag)` of a stationary ARMA process
/// `X_t = sum a_i X_{t-i} + e_t + sum b_j e_{t-j}`, `Var(e) = s2`.
///
/// Solves the first `p + 1` Yule-Walker-type equations as a linear system,
/// then extends by the AR recursion.
pub(crate) fn arma_acf(ar: &[f64], ma: &[f64], s2: f64, max_lag: usize) -> Result<Vec<f64>> {
    let p = ar.len();
    let q = ma.len();
    // psi weights of the MA(inf) representation, first q + 1 of them
    let mut psi = vec![0.0; q + 1];
    psi[0] = 1.0;
    for j in 1..=q {
        let mut v = ma[j - 1];
        for i in 1..=j.min(p) {
            v += ar[i - 1] * psi[j - i];
        }
        psi[j] = v;
    }
    let theta = |j: usize| if j == 0 { 1.0 } else { ma[j - 1] };
    let rhs = |k: usize| -> f64 {
        if k > q {
            0.0
        } else {
            s2 * (k..=q).map(|j| theta(j) * psi[j - k]).sum::<f64>()
        }
    };

    let mut gamma = vec![0.0; max_lag.max(p) + 1];
    if p == 0 {
        for (k, g) in gamma.iter_mut().enumerate() {
            *g = rhs(k);
        }
    } else {
        let mut a = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut b = DVector::<f64>::zeros(p + 1);
        for k in 0..=p {
            a[(k, k)] += 1.0;
            for i in 1..=p {
                let lag = (k as isize - i as isize).unsigned_abs();
                a[(k, lag)] -= ar[i - 1];
            }
            b[k] = rhs(k);
        }
        let sol = a.lu().solve(&b).ok_or_else(|| Error::invalid("ARMA autocovariance system is singular"))?;
        gamma[..=p].copy_from_slice(sol.as_slice());
        for k in p + 1..gamma.len() {
            let mut v = rhs(k);
            for i in 1..=p {
                v += ar[i - 1] * gamma[k - i];
            }
            gamma[k] = v;
        }
    }
    gamma.truncate(max_lag + 1);
    Ok(gamma)
}

pub(crate) fn component_acf(c: &Component, max_lag: usize) -> Result<Vec<f64>> {
    let v = c.try_values()?;
    match c.kind {
        ComponentKind::WhiteNoise => {
            let mut g = vec![0.0; max_lag + 1];
            g[0] = v[0];
            Ok(g)
        }
        ComponentKind::Ar1 => {
            let (rho, v2) = (v[0], v[1]);
            let g0 = v2 / (1.0 - rho * rho);
            let mut g = Vec::with_capacity(max_lag + 1);
            let mut cur = g0;
            for _ in 0..=max_lag {
                g.push(cur);
                cur *= rho;
            }
            Ok(g)
        }
        ComponentKind::Arma { p, q } => arma_acf(&v[..p], &v[p..p + q], v[p + q], max_lag),
        ComponentKind::RandomWalk => Err(Error::Unsupported("a random walk has no autocovariance function".into())),
        ComponentKind::SpatialExp | ComponentKind::SpatialGauss => {
            Err(Error::invalid("spatial components have no time-series autocovariance"))
        }
    }
}

/// Autocovariance `gamma(0..=max_lag)` of the sum of the model's components.
pub fn theoretical_acf(model: &ModelSpec, max_lag: usize) -> Result<Vec<f64>> {
    model.validate()?;
    let mut total = vec![0.0; max_lag + 1];
    for c in model.components() {
        for (t, g) in total.iter_mut().zip(component_acf(c, max_lag)?) {
            *t += g;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::super::presets;
    use super::*;

    #[test]
    fn closed_forms() {
        let g = theoretical_acf(&presets::white_noise(2.0), 3).unwrap();
        assert_eq!(g, vec![2.0, 0.0, 0.0, 0.0]);
        let g = theoretical_acf(&presets::ar1(0.9, 1.0), 2).unwrap();
        assert!((g[0] - 1.0 / 0.19).abs() < 1e-12);
        assert!((g[1] - 0.9 * g[0]).abs() < 1e-12);
    }

    #[test]
    fn arma_matches_ar1_and_ma1() {
        let g = theoretical_acf(&presets::arma(&[0.6], &[], 2.0), 5).unwrap();
        let h = theoretical_acf(&presets::ar1(0.6, 2.0), 5).unwrap();
        for (a, b) in g.iter().zip(&h) {
            assert!((a - b).abs() < 1e-12);
        }
        // MA(1): gamma0 = s2 (1 + b^2), gamma1 = s2 b
        let g = theoretical_acf(&presets::arma(&[], &[0.4], 1.5), 3).unwrap();
        assert!((g[0] - 1.5 * 1.16).abs() < 1e-12);
        assert!((g[1] - 1.5 * 0.4).abs() < 1e-12);
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn arma11_closed_form() {
        // gamma0 = s2 (1 + 2ab + b^2) / (1 - a^2)
        let (a, b) = (0.5, 0.3);
        let g = theoretical_acf(&presets::arma(&[a], &[b], 1.0), 2).unwrap();
        let g0 = (1.0 + 2.0 * a * b + b * b) / (1.0 - a * a);
        let g1 = (1.0 + a * b) * (a + b) / (1.0 - a * a);
        assert!((g[0] - g0).abs() < 1e-12);
        assert!((g[1] - g1).abs() < 1e-12);
        assert!((g[2] - a * g1).abs() < 1e-12);
    }

    #[test]
    fn unsupported_components() {
        assert!(matches!(theoretical_acf(&presets::random_walk(1.0), 3), Err(Error::Unsupported(_))));
        assert!(theoretical_acf(&presets::ar1(1.2, 1.0), 3).is_err());
    }

    #[test]
    fn spectral_radius_values() {
        assert!((spectral_radius(&[0.5]) - 0.5).abs() < 1e-15);
        // 1 - 0.7z - 0.3z^2 - (-0.2)z^3
        let r = spectral_radius(&[0.7, 0.3, -0.2]);
        assert!(r < 1.0);
        // unit root
        assert!((spectral_radius(&[0.5, 0.5]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_terminates() {
        use rand::Rng as _;
        let mut rng = crate::rng::stream(8, 0);
        for _ in 0..20_000 {
            let a: Vec<f64> = (0..rng.gen_range(2..6)).map(|_| rng.gen_range(-3.0..3.0)).collect();
            assert!(spectral_radius(&a).is_finite());
        }
    }

    #[test]
    fn gelfand_matches_eigenvalues() {
        // 1 - 0.5z + 0.06z^2 has inverse roots 0.2 and 0.3
        let m = DMatrix::from_row_slice(2, 2, &[0.5, -0.06, 1.0, 0.0]);
        assert!((gelfand_radius(m) - 0.3).abs() < 1e-9);
        // complex pair of modulus sqrt(0.5)
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 1.0, 0.0]);
        assert!((gelfand_radius(m) - 0.5f64.sqrt()).abs() < 1e-9);
    }
}
