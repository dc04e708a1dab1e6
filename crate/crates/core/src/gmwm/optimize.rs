//! Derivative-free simplex search (Nelder-Mead) on an unconstrained space.

use std::time::Instant;

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    /// Relative objective spread at which the simplex counts as converged.
    pub ftol: f64,
    /// Simplex diameter (in optimizer coordinates) required alongside `ftol`.
    pub xtol: f64,
    /// Diameter below which the simplex has collapsed regardless of `ftol`.
    pub collapse: f64,
    pub initial_step: f64,
    pub max_evals: usize,
    pub deadline: Option<Instant>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { ftol: 1e-9, xtol: 1e-4, collapse: 1e-10, initial_step: 0.5, max_evals: 4000, deadline: None }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
    pub timed_out: bool,
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..].iter().flat_map(|v| v.iter().zip(best).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max)
}

/// Minimizes `f` from `x0` with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
pub(crate) fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &SimplexOptions) -> SimplexResult {
    let n = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut timed_out = false;
    loop {
        // order best to worst; stable sort keeps the path deterministic on ties
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diam = diameter(&simplex);
        if (values[0].is_finite() && spread <= opts.ftol * values[0].abs() && diam <= opts.xtol)
            || diam <= opts.collapse
        {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }
        if let Some(d) = opts.deadline {
            if Instant::now() >= d {
                timed_out = true;
                break;
            }
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=n {
            let v: Vec<f64> = simplex[0].iter().zip(&simplex[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            values[i] = eval(&v);
            simplex[i] = v;
        }
    }
    SimplexResult { x: simplex[0].clone(), fx: values[0], iterations, converged, timed_out }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(&f, &[-1.2, 1.0], &SimplexOptions { max_evals: 20_000, ..Default::default() });
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn quadratic_scaling_keeps_path() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 0.5 * x[0] * x[1];
        let g = |x: &[f64]| 4.0 * f(x);
        let o = SimplexOptions::default();
        let a = nelder_mead(&f, &[0.0, 0.0], &o);
        let b = nelder_mead(&g, &[0.0, 0.0], &o);
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn starts_at_minimum() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let r = nelder_mead(&f, &[0.0, 0.0, 0.0], &SimplexOptions::default());
        assert!(r.fx <= 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| if x[0] > 0.3 { f64::INFINITY } else { (x[0] - 1.0).powi(2) };
        let r = nelder_mead(&f, &[0.0], &SimplexOptions::default());
        assert!(r.x[0] <= 0.3 && r.x[0] > 0.29);
    }
}
