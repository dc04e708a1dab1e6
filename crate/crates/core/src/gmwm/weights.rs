use super::FitResult;
use crate::data::Observations;
use crate::error::{Error, Result};
use crate::wavelet::ScaleLabel;
use crate::wv::{self, tukey_weight, WvMethod};

/// Observations with a weight below this are flagged as outlying.
pub const FLAG_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWeights {
    /// One weight in `[0, 1]` per observation (row-major for fields).
    pub weights: Vec<f64>,
    /// Indices with weight below [`FLAG_THRESHOLD`].
    pub flagged: Vec<usize>,
}

fn is_fine_scale(label: ScaleLabel) -> bool {
    match label {
        ScaleLabel::Level(j) => j <= 2,
        ScaleLabel::Pair(a, b) => a <= 2 && b <= 2,
    }
}

/// Per-observation robustness weights of a robust fit.
///
/// Each coefficient at the two finest scales gets the squared Tukey weight
/// of its standardized value. Within a scale an observation keeps the
/// largest weight among the coefficients covering it, so it is downweighted
/// only if every window containing it is; the observation weight is the
/// smallest of these across scales.
pub fn observation_weights(data: &Observations, fit: &FitResult) -> Result<ObservationWeights> {
    let WvMethod::Robust(score) = fit.wv.method else {
        return Err(Error::invalid("observation weights need a robust fit"));
    };
    let blocks = wv::decompose(data)?;
    let (rows, cols) = match data {
        Observations::Series(s) => (1, s.len()),
        Observations::Field(f) => (f.rows(), f.cols()),
    };
    let mut weights = vec![1.0f64; rows * cols];
    for block in blocks.iter().filter(|b| is_fine_scale(b.label)) {
        let k = fit
            .wv
            .scales
            .iter()
            .position(|s| *s == block.label)
            .ok_or_else(|| Error::invalid("data do not match the fitted scales"))?;
        let s = 1.0 / fit.wv.nu_hat[k].sqrt();
        let mut cover = vec![0.0f64; rows * cols];
        let (sr, sc) = block.support;
        for r in 0..block.rows {
            for c in 0..block.cols {
                let w = tukey_weight(block.values[r * block.cols + c] * s, score.c).powi(2);
                // coefficient (r, c) covers data rows r..r+sr and cols c..c+sc
                for dr in 0..sr {
                    let base = (r + dr) * cols + c;
                    for x in &mut cover[base..base + sc] {
                        *x = x.max(w);
                    }
                }
            }
        }
        for (w, cv) in weights.iter_mut().zip(cover) {
            *w = w.min(cv);
        }
    }
    let flagged = weights.iter().enumerate().filter(|(_, &w)| w < FLAG_THRESHOLD).map(|(i, _)| i).collect();
    Ok(ObservationWeights { weights, flagged })
}
