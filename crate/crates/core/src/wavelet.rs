//! Haar maximal-overlap discrete wavelet transform.
//!
//! Coefficients use the normalization `1/(2 tau_j)` with `tau_j = 2^(j-1)`:
//!
//! ```text
//! W[j,t] = (1/(2 tau_j)) * ( sum_{l=tau_j}^{2 tau_j - 1} x[t-l] - sum_{l=0}^{tau_j - 1} x[t-l] )
//! ```
//!
//! i.e. the mean of the older half-window minus the mean of the newer one,
//! halved. White noise with variance `s2` then has wavelet variance
//! `s2 / 2^j`. Only boundary-free coefficients are kept, so level `j` of a
//! length-`N` series has `N - 2^j + 1` coefficients.
//!
//! Lattice fields use the separable wavelet x wavelet filter: level `j1`
//! along the row index, level `j2` along the column index.

use std::fmt;

use crate::data::{LatticeField, TimeSeries};
use crate::error::{Error, Result};

/// Identifies one wavelet-variance moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScaleLabel {
    Level(usize),
    Pair(usize, usize),
}

impl fmt::Display for ScaleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleLabel::Level(j) => write!(f, "{j}"),
            ScaleLabel::Pair(a, b) => write!(f, "({a};{b})"),
        }
    }
}

/// Coefficients of one scale laid out on the grid they were computed on.
///
/// `values` is row-major with `rows x cols` entries; 1D scales have a single
/// row. `anchor` is the data index (row, col) of the most recent tap of
/// coefficient (0, 0), which lets coefficients of different scales be
/// aligned to a common time/space index.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBlock {
    pub label: ScaleLabel,
    pub rows: usize,
    pub cols: usize,
    pub anchor: (usize, usize),
    /// Filter extent (rows, cols) in data units.
    pub support: (usize, usize),
    pub values: Vec<f64>,
}

impl CoefficientBlock {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Largest admissible number of 1D scales: the largest `J` with `2^J < N`,
/// so the coarsest scale keeps at least two coefficients.
pub fn max_scales_1d(n: usize) -> Result<usize> {
    if n < 4 {
        return Err(Error::invalid(format!("series length {n} too short: at least 4 observations are required")));
    }
    Ok(floor_log2(n - 1))
}

/// All isotropic scale pairs `1 <= j1 <= j2 <= floor(log2(min(K, M)))`.
pub fn max_scale_pairs_2d(rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
    if rows < 2 || cols < 2 {
        return Err(Error::invalid(format!("lattice must be at least 2x2, got {rows}x{cols}")));
    }
    let jmax = floor_log2(rows.min(cols));
    Ok(triangular_pairs(jmax))
}

/// Pairs `(j1, j2)` with `1 <= j1 <= j2 <= jmax`, ordered by `j1` then `j2`.
pub fn triangular_pairs(jmax: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(jmax * (jmax + 1) / 2);
    for j1 in 1..=jmax {
        for j2 in j1..=jmax {
            pairs.push((j1, j2));
        }
    }
    pairs
}

fn floor_log2(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

/// Haar filter length at level `j`.
#[inline]
pub fn filter_len(j: usize) -> usize {
    1 << j
}

/// Taps `h[l]`, `l = 0..2^j`, such that `W[t] = sum_l h[l] x[t-l]`.
pub fn haar_filter(j: usize) -> Vec<f64> {
    let tau = 1usize << (j - 1);
    let a = 1.0 / (2.0 * tau as f64);
    (0..2 * tau).map(|l| if l < tau { -a } else { a }).collect()
}

/// Filter autocorrelation `R[d] = sum_l h[l] h[l+d]` for `d = 0..2^j`.
pub fn haar_filter_autocorrelation(j: usize) -> Vec<f64> {
    let h = haar_filter(j);
    (0..h.len()).map(|d| h.iter().zip(&h[d..]).map(|(a, b)| a * b).sum()).collect()
}

/// Per-level MODWT coefficients of a time series.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients1D {
    n: usize,
    levels: Vec<Vec<f64>>,
}

impl WaveletCoefficients1D {
    pub fn num_scales(&self) -> usize {
        self.levels.len()
    }

    /// Coefficients of level `j` (1-based).
    pub fn level(&self, j: usize) -> &[f64] {
        &self.levels[j - 1]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    /// `tau_j = 2^(j-1)`.
    pub fn tau(j: usize) -> usize {
        1 << (j - 1)
    }

    /// Smallest per-level count, `N_J`.
    pub fn min_count(&self) -> usize {
        self.levels.last().map_or(0, Vec::len)
    }

    pub fn series_len(&self) -> usize {
        self.n
    }

    pub fn into_blocks(self) -> Vec<CoefficientBlock> {
        self.levels
            .into_iter()
            .enumerate()
            .map(|(i, values)| {
                let j = i + 1;
                CoefficientBlock {
                    label: ScaleLabel::Level(j),
                    rows: 1,
                    cols: values.len(),
                    anchor: (0, filter_len(j) - 1),
                    support: (1, filter_len(j)),
                    values,
                }
            })
            .collect()
    }
}

/// Boundary-free Haar MODWT of `series` for levels `1..=num_scales`.
pub fn modwt_haar(series: &TimeSeries, num_scales: usize) -> Result<WaveletCoefficients1D> {
    let n = series.len();
    let jmax = max_scales_1d(n)?;
    if num_scales == 0 || num_scales > jmax {
        return Err(Error::invalid(format!(
            "requested {num_scales} scales but a series of length {n} admits 1..={jmax}"
        )));
    }
    Ok(WaveletCoefficients1D { n, levels: haar_levels(series.values(), num_scales) })
}

/// Haar MODWT levels `1..=num_scales` of a raw slice. Callers guarantee
/// `2^num_scales <= x.len()`.
///
/// Built from a pyramid of moving averages so each coefficient depends only
/// on the values under its filter support.
pub(crate) fn haar_levels(x: &[f64], num_scales: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut levels = Vec::with_capacity(num_scales);
    // avg[t] = mean of the `tau` values ending at t, valid for t >= tau - 1
    let mut avg = x.to_vec();
    for j in 1..=num_scales {
        let tau = 1usize << (j - 1);
        let len = 2 * tau;
        let mut w = Vec::with_capacity(n + 1 - len);
        let mut next = vec![0.0; n];
        for t in (len - 1)..n {
            let older = avg[t - tau];
            let newer = avg[t];
            w.push(0.5 * (older - newer));
            next[t] = 0.5 * (older + newer);
        }
        levels.push(w);
        avg = next;
    }
    levels
}

/// Coefficient matrix of one scale pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCoefficients {
    pub j1: usize,
    pub j2: usize,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl PairCoefficients {
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }
}

/// Separable 2D Haar MODWT coefficients for a set of scale pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients2D {
    pub pairs: Vec<PairCoefficients>,
}

impl WaveletCoefficients2D {
    pub fn num_scales(&self) -> usize {
        self.pairs.len()
    }

    pub fn min_count(&self) -> usize {
        self.pairs.iter().map(|p| p.values.len()).min().unwrap_or(0)
    }

    pub fn into_blocks(self) -> Vec<CoefficientBlock> {
        self.pairs
            .into_iter()
            .map(|p| CoefficientBlock {
                label: ScaleLabel::Pair(p.j1, p.j2),
                rows: p.rows,
                cols: p.cols,
                anchor: (filter_len(p.j1) - 1, filter_len(p.j2) - 1),
                support: (filter_len(p.j1), filter_len(p.j2)),
                values: p.values,
            })
            .collect()
    }
}

/// Separable 2D Haar MODWT of `field` at the requested scale pairs.
///
/// Pairs need not be ordered; any `(j1, j2)` with both levels within
/// `floor(log2(min(K, M)))` is accepted, so the transposed pair can be
/// computed when checking isotropy.
pub fn modwt2d_haar(field: &LatticeField, pairs: &[(usize, usize)]) -> Result<WaveletCoefficients2D> {
    let (k, m) = (field.rows(), field.cols());
    let jmax = floor_log2(k.min(m));
    for &(j1, j2) in pairs {
        if j1 == 0 || j2 == 0 || j1 > jmax || j2 > jmax {
            return Err(Error::invalid(format!("scale pair ({j1},{j2}) outside 1..={jmax} for a {k}x{m} lattice")));
        }
    }
    let need_rows = pairs.iter().map(|p| p.0).max().unwrap_or(0);
    // filter each column along the row index once for every needed level
    let mut col_levels: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m);
    let mut column = vec![0.0; k];
    for c in 0..m {
        for (r, v) in column.iter_mut().enumerate() {
            *v = field.get(r, c);
        }
        col_levels.push(haar_levels(&column, need_rows));
    }

    let mut out = Vec::with_capacity(pairs.len());
    let mut row_buf = vec![0.0; m];
    for &(j1, j2) in pairs {
        let rows = k + 1 - filter_len(j1);
        let cols = m + 1 - filter_len(j2);
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for (c, v) in row_buf.iter_mut().enumerate() {
                *v = col_levels[c][j1 - 1][r];
            }
            let filtered = haar_levels(&row_buf, j2);
            values.extend_from_slice(&filtered[j2 - 1]);
        }
        out.push(PairCoefficients { j1, j2, rows, cols, values });
    }
    Ok(WaveletCoefficients2D { pairs: out })
}
