//! Covariance matrix `V` of the wavelet-variance estimator.
//!
//! `V = M^-1 S(0) M^-T` where `M` is the mean negative derivative of the
//! score in `nu` (diagonal, one entry per scale) and `S(0)` the long-run
//! covariance of the per-coefficient score vectors. The returned matrix is
//! normalized so that `Var(nu_hat) ~ V / N_J`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::score::expected_kernel_slope;
use super::{estimate_blocks, score_kernel, score_kernel_slope, WvEstimate, WvMethod};
use crate::data::DataShape;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::rng;
use crate::wavelet::CoefficientBlock;

const SLOPE_FLOOR: f64 = 0.1;

/// Truncation lag of the Bartlett window used for `S(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bandwidth {
    /// `floor(N_J^(1/3))` for every pair of scales.
    CubeRoot,
    /// `floor(N_J^(1/3))` plus the longer filter support of the two scales,
    /// per axis. Haar coefficients at level `j` are correlated over at least
    /// `2^j` lags even for white noise input.
    ScaleAdaptive,
    Fixed(usize),
}

/// How to estimate `V`.
#[derive(Debug, Clone)]
pub enum CovarianceMethod {
    PlugIn { bandwidth: Bandwidth, diagonal_only: bool },
    Bootstrap { model: ModelSpec, shape: DataShape, replicates: usize, seed: u64 },
}

impl Default for CovarianceMethod {
    fn default() -> Self {
        CovarianceMethod::PlugIn { bandwidth: Bandwidth::ScaleAdaptive, diagonal_only: false }
    }
}

/// Estimates `V` for `estimate`, which must have been computed from `blocks`.
pub fn estimate_v(
    blocks: &[CoefficientBlock],
    estimate: &WvEstimate,
    method: &CovarianceMethod,
) -> Result<DMatrix<f64>> {
    if blocks.len() != estimate.num_scales() {
        return Err(Error::invalid("coefficient blocks do not match the estimate"));
    }
    match method {
        CovarianceMethod::PlugIn { bandwidth, diagonal_only } => plug_in(blocks, estimate, *bandwidth, *diagonal_only),
        CovarianceMethod::Bootstrap { model, shape, replicates, seed } => {
            bootstrap(estimate, model, *shape, *replicates, *seed)
        }
    }
}

struct ScoreSeries<'a> {
    block: &'a CoefficientBlock,
    scores: Vec<f64>,
    /// mean of -dPsi/dnu at nu_hat
    slope: f64,
}

fn score_series<'a>(block: &'a CoefficientBlock, nu: f64, method: WvMethod) -> Result<ScoreSeries<'a>> {
    if !(nu > 0.0) {
        return Err(Error::numerical(format!("non-positive wavelet variance at scale {}", block.label)));
    }
    let s = 1.0 / nu.sqrt();
    let (c, b) = match method {
        WvMethod::Classical => (f64::INFINITY, 1.0),
        WvMethod::Robust(score) => (score.c, score.b_c),
    };
    let mut scores: Vec<f64> = Vec::with_capacity(block.len());
    let mut slope = 0.0;
    for &w in &block.values {
        let z = w * s;
        scores.push(score_kernel(z, c) - b);
        slope += score_kernel_slope(z, c);
    }
    let n = block.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    scores.iter_mut().for_each(|v| *v -= mean);
    let mut slope = slope / (2.0 * nu * n);
    // A scale whose estimating equation has no root sits at its maximum,
    // where the sample slope vanishes; floor it at a fraction of the
    // Gaussian-model slope so that scale is heavily downweighted instead.
    let floor = SLOPE_FLOOR * expected_kernel_slope(c) / (2.0 * nu);
    if slope.is_finite() && slope < floor {
        slope = floor;
    }
    if !(slope.is_finite() && slope > 0.0) {
        return Err(Error::numerical(format!("singular score derivative at scale {}", block.label)));
    }
    Ok(ScoreSeries { block, scores, slope })
}

/// `sum_x a(x) b(x + h)` over coefficient pairs whose data positions differ
/// by `(h_row, h_col)`.
fn lagged_cross(a: &ScoreSeries, b: &ScoreSeries, h_row: isize, h_col: isize) -> f64 {
    let (pa, pb) = (a.block, b.block);
    let dr = pa.anchor.0 as isize + h_row - pb.anchor.0 as isize;
    let dc = pa.anchor.1 as isize + h_col - pb.anchor.1 as isize;
    let r_lo = 0.max(-dr);
    let r_hi = (pa.rows as isize).min(pb.rows as isize - dr);
    let c_lo = 0.max(-dc);
    let c_hi = (pa.cols as isize).min(pb.cols as isize - dc);
    if r_lo >= r_hi || c_lo >= c_hi {
        return 0.0;
    }
    let width = (c_hi - c_lo) as usize;
    let mut total = 0.0;
    for r in r_lo..r_hi {
        let ia = r as usize * pa.cols + c_lo as usize;
        let ib = (r + dr) as usize * pb.cols + (c_lo + dc) as usize;
        let xa = &a.scores[ia..ia + width];
        let xb = &b.scores[ib..ib + width];
        total += xa.iter().zip(xb).map(|(u, v)| u * v).sum::<f64>();
    }
    total
}

/// Zero-padded spectra of series scores; long enough that circular
/// cross-correlation equals the linear one.
struct Spectra {
    len: usize,
    data: Vec<Vec<Complex<f64>>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Spectra {
    fn new(series: &[ScoreSeries]) -> Self {
        let longest = series.iter().map(|s| s.scores.len()).max().unwrap_or(1);
        let len = (2 * longest).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let data = series
            .iter()
            .map(|s| {
                let mut buf = vec![Complex::new(0.0, 0.0); len];
                for (z, &x) in buf.iter_mut().zip(&s.scores) {
                    z.re = x;
                }
                forward.process(&mut buf);
                buf
            })
            .collect();
        Spectra { len, data, inverse: planner.plan_fft_inverse(len) }
    }

    /// `r[d] = sum_x a(x) b(x + d)`, indexed by `d` modulo the length.
    fn cross(&self, i: usize, j: usize) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = self.data[i].iter().zip(&self.data[j]).map(|(a, b)| a.conj() * b).collect();
        self.inverse.process(&mut buf);
        buf.iter().map(|z| z.re / self.len as f64).collect()
    }
}

/// Bartlett-weighted long-run cross sum of two series blocks.
fn series_long_run(spectra: &Spectra, i: usize, j: usize, a: &ScoreSeries, b: &ScoreSeries, bw: usize) -> f64 {
    let r = spectra.cross(i, j);
    let (la, lb) = (a.scores.len() as isize, b.scores.len() as isize);
    let shift = a.block.anchor.1 as isize - b.block.anchor.1 as isize;
    (-(bw as isize)..=bw as isize)
        .map(|h| {
            let d = shift + h;
            if d <= -la || d >= lb {
                return 0.0;
            }
            bartlett(h, bw) * r[d.rem_euclid(spectra.len as isize) as usize]
        })
        .sum()
}

fn bartlett(h: isize, b: usize) -> f64 {
    1.0 - h.unsigned_abs() as f64 / (b as f64 + 1.0)
}

fn plug_in(
    blocks: &[CoefficientBlock],
    estimate: &WvEstimate,
    bandwidth: Bandwidth,
    diagonal_only: bool,
) -> Result<DMatrix<f64>> {
    let series: Vec<ScoreSeries> = blocks
        .iter()
        .zip(&estimate.nu_hat)
        .map(|(b, &nu)| score_series(b, nu, estimate.method))
        .collect::<Result<_>>()?;
    let p = series.len();
    let nj = estimate.min_count();
    let base = (nj as f64).cbrt().floor() as usize;
    let two_d = blocks.iter().any(|b| b.rows > 1);
    let spectra = (!two_d).then(|| Spectra::new(&series));

    let entry = |i: usize, j: usize| -> f64 {
        let (a, b) = (&series[i], &series[j]);
        let (bw_row, bw_col) = match bandwidth {
            Bandwidth::CubeRoot => (base, base),
            Bandwidth::Fixed(n) => (n, n),
            Bandwidth::ScaleAdaptive => (
                base + a.block.support.0.max(b.block.support.0) - 1,
                base + a.block.support.1.max(b.block.support.1) - 1,
            ),
        };
        let sum = match &spectra {
            Some(sp) => series_long_run(sp, i, j, a, b, bw_col),
            None => {
                let mut sum = 0.0;
                for hr in -(bw_row as isize)..=(bw_row as isize) {
                    let wr = bartlett(hr, bw_row);
                    for hc in -(bw_col as isize)..=(bw_col as isize) {
                        sum += wr * bartlett(hc, bw_col) * lagged_cross(a, b, hr, hc);
                    }
                }
                sum
            }
        };
        nj as f64 * sum / (a.slope * b.slope * a.block.len() as f64 * b.block.len() as f64)
    };

    let pairs: Vec<(usize, usize)> =
        (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).filter(|&(i, j)| !diagonal_only || i == j).collect();
    let values: Vec<f64> = pairs.par_iter().map(|&(i, j)| entry(i, j)).collect();
    let mut v = DMatrix::zeros(p, p);
    for (&(i, j), &x) in pairs.iter().zip(&values) {
        v[(i, j)] = x;
        v[(j, i)] = x;
    }
    if diagonal_only {
        for i in 0..p {
            v[(i, i)] = v[(i, i)].max(0.0);
        }
        return Ok(v);
    }
    Ok(nearest_psd(v))
}

/// Symmetrizes and clips negative eigenvalues to zero.
pub(crate) fn nearest_psd(m: DMatrix<f64>) -> DMatrix<f64> {
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return sym;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    (&out + out.transpose()) * 0.5
}

fn bootstrap(
    estimate: &WvEstimate,
    model: &ModelSpec,
    shape: DataShape,
    replicates: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if replicates < 2 {
        return Err(Error::invalid("bootstrap covariance needs at least 2 replicates"));
    }
    let p = estimate.num_scales();
    let draws: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let data = model.simulate(shape, rng::derive_seed(seed, r as u64))?;
            let blocks = super::decompose(&data)?;
            if blocks.len() != p {
                return Err(Error::invalid("bootstrap sample produced a different scale set"));
            }
            Ok(estimate_blocks(&blocks, estimate.method)?.nu_hat)
        })
        .collect::<Result<_>>()?;
    let n = replicates as f64;
    let mean: Vec<f64> = (0..p).map(|k| draws.iter().map(|d| d[k]).sum::<f64>() / n).collect();
    let mut cov = DMatrix::zeros(p, p);
    for d in &draws {
        for i in 0..p {
            for j in 0..p {
                cov[(i, j)] += (d[i] - mean[i]) * (d[j] - mean[j]);
            }
        }
    }
    let cov = cov * (estimate.min_count() as f64 / (n - 1.0));
    let eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= 1e-12 * max {
        return Err(Error::numerical(format!(
            "bootstrap covariance is rank deficient ({replicates} replicates for {p} scales)"
        )));
    }
    Ok(cov)
}
