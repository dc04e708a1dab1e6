use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::data::Observations;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::wavelet::{filter_len, haar_filter_autocorrelation};

/// Contamination regime.
#[derive(Debug, Clone, PartialEq)]
pub enum ContaminationKind {
    /// Band-limited noise at wavelet level `j` over one contiguous window.
    Scale(usize),
    /// Scattered outliers, added to (or replacing) the clean values.
    Isolated { replace: bool },
    /// Contiguous blocks of `patch_len` observations with added noise.
    Patchy { patch_len: usize },
    /// Segments shifted in level by the given amounts.
    LevelShift(Vec<f64>),
}

pub const DEFAULT_PATCH_LEN: usize = 10;

impl fmt::Display for ContaminationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContaminationKind::Scale(j) => write!(f, "scale:{j}"),
            ContaminationKind::Isolated { replace: false } => f.write_str("isolated"),
            ContaminationKind::Isolated { replace: true } => f.write_str("replace"),
            ContaminationKind::Patchy { patch_len } => write!(f, "patchy:{patch_len}"),
            ContaminationKind::LevelShift(m) => {
                let s: Vec<String> = m.iter().map(|x| x.to_string()).collect();
                write!(f, "level-shift:{}", s.join(","))
            }
        }
    }
}

impl FromStr for ContaminationKind {
    type Err = Error;

    /// `isolated`, `replace`, `patchy[:len]`, `scale:j`, `level-shift:m1,m2,...`
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a.trim(), Some(b.trim())),
            None => (s.trim(), None),
        };
        let bad = |m: &str| Error::invalid(format!("contamination `{s}`: {m}"));
        match (name, arg) {
            ("isolated", None) => Ok(ContaminationKind::Isolated { replace: false }),
            ("replace", None) => Ok(ContaminationKind::Isolated { replace: true }),
            ("patchy", None) => Ok(ContaminationKind::Patchy { patch_len: DEFAULT_PATCH_LEN }),
            ("patchy", Some(a)) => {
                let n: usize = a.parse().map_err(|_| bad("patch length must be an integer"))?;
                if n == 0 {
                    return Err(bad("patch length must be positive"));
                }
                Ok(ContaminationKind::Patchy { patch_len: n })
            }
            ("scale", Some(a)) => {
                let j: usize = a.parse().map_err(|_| bad("scale must be an integer"))?;
                if j == 0 {
                    return Err(bad("scale must be at least 1"));
                }
                Ok(ContaminationKind::Scale(j))
            }
            ("level-shift", Some(a)) => {
                let m: Vec<f64> = a
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("shifts must be numbers"))?;
                if m.is_empty() || m.iter().any(|x| !x.is_finite()) {
                    return Err(bad("shifts must be finite"));
                }
                Ok(ContaminationKind::LevelShift(m))
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationSpec {
    pub kind: ContaminationKind,
    /// Fraction of contaminated observations, in `[0, 0.5)`.
    pub epsilon: f64,
    /// Variance of the contaminating noise (unused for level shifts).
    pub sigma2: f64,
    pub seed: u64,
}

impl ContaminationSpec {
    pub fn new(kind: ContaminationKind, epsilon: f64, sigma2: f64, seed: u64) -> Result<Self> {
        let spec = Self { kind, epsilon, sigma2, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon < 0.5) {
            return Err(Error::invalid(format!("epsilon must be in [0, 0.5), got {}", self.epsilon)));
        }
        if !matches!(self.kind, ContaminationKind::LevelShift(_)) && !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("contamination variance must be positive"));
        }
        Ok(())
    }
}

/// Grid geometry shared by series (one row) and fields.
struct Grid {
    rows: usize,
    cols: usize,
}

impl Grid {
    fn of(data: &Observations) -> Self {
        match data {
            Observations::Series(s) => Grid { rows: 1, cols: s.len() },
            Observations::Field(f) => Grid { rows: f.rows(), cols: f.cols() },
        }
    }

    fn len(&self) -> usize {
        self.rows * self.cols
    }

    /// Block dimensions holding `n` cells: a run along the series, or a
    /// nearly square rectangle on a field.
    fn block_dims(&self, n: usize) -> (usize, usize) {
        if self.rows == 1 {
            return (1, n.min(self.cols));
        }
        let a = ((n as f64).sqrt().ceil() as usize).clamp(1, self.rows);
        let b = n.div_ceil(a).clamp(1, self.cols);
        (a, b)
    }

    fn block_cells(&self, top: usize, left: usize, dims: (usize, usize), take: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(take);
        'outer: for r in top..top + dims.0 {
            for c in left..left + dims.1 {
                if out.len() == take {
                    break 'outer;
                }
                out.push(r * self.cols + c);
            }
        }
        out
    }

    /// Places blocks of `sizes[i]` cells at random positions without overlap
    /// (falling back to allowing overlap after repeated collisions).
    fn place_blocks(&self, sizes: &[usize], rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
        let mut used = vec![false; self.len()];
        let mut out = Vec::with_capacity(sizes.len());
        for &n in sizes {
            let dims = self.block_dims(n);
            if dims.0 * dims.1 < n || dims.0 > self.rows || dims.1 > self.cols {
                return Err(Error::invalid("contamination block does not fit the data"));
            }
            let mut cells = Vec::new();
            for attempt in 0..1000 {
                let top = rng.gen_range(0..=self.rows - dims.0);
                let left = rng.gen_range(0..=self.cols - dims.1);
                cells = self.block_cells(top, left, dims, n);
                if attempt == 999 || cells.iter().all(|&i| !used[i]) {
                    break;
                }
            }
            for &i in &cells {
                used[i] = true;
            }
            out.push(cells);
        }
        Ok(out)
    }
}

/// Contaminates `data` according to `spec`.
///
/// Returns the contaminated data and the sorted indices (row-major for
/// fields) of affected observations. Values outside the index set are left
/// bitwise unchanged.
pub fn contaminate(data: &Observations, spec: &ContaminationSpec) -> Result<(Observations, Vec<usize>)> {
    spec.validate()?;
    let n = data.len();
    let n_c = (spec.epsilon * n as f64).round() as usize;
    if n_c == 0 {
        return Ok((data.clone(), Vec::new()));
    }
    let grid = Grid::of(data);
    let mut values = data.values().to_vec();
    let mut rng = rng::stream(spec.seed, 0);
    let sd = spec.sigma2.sqrt();
    let mut affected: Vec<usize> = Vec::with_capacity(n_c);
    match &spec.kind {
        ContaminationKind::Isolated { replace } => {
            for i in sample(&mut rng, n, n_c).into_iter() {
                let e = sd * rng.sample::<f64, _>(StandardNormal);
                values[i] = if *replace { e } else { values[i] + e };
                affected.push(i);
            }
        }
        ContaminationKind::Patchy { patch_len } => {
            let blocks = n_c.div_ceil(*patch_len);
            let sizes = vec![*patch_len; blocks];
            for cells in grid.place_blocks(&sizes, &mut rng)? {
                for i in cells {
                    values[i] += sd * rng.sample::<f64, _>(StandardNormal);
                    affected.push(i);
                }
            }
        }
        ContaminationKind::LevelShift(shifts) => {
            let k = shifts.len();
            if n_c < k {
                return Err(Error::invalid("fewer contaminated observations than level shifts"));
            }
            let sizes: Vec<usize> = (0..k).map(|i| n_c / k + usize::from(i < n_c % k)).collect();
            for (cells, mu) in grid.place_blocks(&sizes, &mut rng)?.into_iter().zip(shifts) {
                for i in cells {
                    values[i] += mu;
                    affected.push(i);
                }
            }
        }
        ContaminationKind::Scale(j) => {
            if grid.rows != 1 {
                return Err(Error::Unsupported("scale contamination is defined for time series only".into()));
            }
            let l = filter_len(*j);
            if l > n {
                return Err(Error::invalid(format!("scale {j} is too coarse for {n} observations")));
            }
            // Haar filter followed by its time reverse: a zero-phase band-pass
            // at level j whose impulse response is the filter autocorrelation.
            let acf = haar_filter_autocorrelation(*j);
            let kernel: Vec<f64> = acf.iter().rev().chain(acf.iter().skip(1)).copied().collect();
            let norm = kernel.iter().map(|x| x * x).sum::<f64>().sqrt();
            let noise: Vec<f64> = (0..n_c + kernel.len() - 1).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let start = rng.gen_range(0..=n - n_c);
            for t in 0..n_c {
                let y: f64 = kernel.iter().zip(&noise[t..]).map(|(k, e)| k * e).sum();
                values[start + t] += sd * y / norm;
                affected.push(start + t);
            }
        }
    }
    affected.sort_unstable();
    affected.dedup();
    Ok((data.with_values(values)?, affected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LatticeField, TimeSeries};

    fn series(n: usize) -> Observations {
        TimeSeries::new((0..n).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap().into()
    }

    #[test]
    fn zero_epsilon_is_identity() {
        let x = series(100);
        let spec = ContaminationSpec::new(ContaminationKind::Isolated { replace: false }, 0.0, 9.0, 1).unwrap();
        let (y, idx) = contaminate(&x, &spec).unwrap();
        assert_eq!(x, y);
        assert!(idx.is_empty());
    }

    #[test]
    fn counts_and_untouched_values() {
        let x = series(1000);
        for kind in [
            ContaminationKind::Isolated { replace: false },
            ContaminationKind::Isolated { replace: true },
            ContaminationKind::Patchy { patch_len: 10 },
            ContaminationKind::Scale(3),
            ContaminationKind::LevelShift(vec![5.0, -3.0]),
        ] {
            let spec = ContaminationSpec::new(kind.clone(), 0.01, 100.0, 7).unwrap();
            let (y, idx) = contaminate(&x, &spec).unwrap();
            assert_eq!(idx.len(), 10, "{kind}");
            for i in 0..1000 {
                if idx.binary_search(&i).is_err() {
                    assert_eq!(x.values()[i].to_bits(), y.values()[i].to_bits());
                }
            }
        }
    }

    #[test]
    fn level_shift_segments() {
        let x = series(1000);
        let spec = ContaminationSpec::new(ContaminationKind::LevelShift(vec![5.0, -3.0]), 0.05, 0.0, 3).unwrap();
        let (y, idx) = contaminate(&x, &spec).unwrap();
        assert_eq!(idx.len(), 50);
        let mut shifts: Vec<f64> = idx.iter().map(|&i| y.values()[i] - x.values()[i]).collect();
        shifts.sort_by(f64::total_cmp);
        shifts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(shifts.len(), 2);
        assert!((shifts[0] + 3.0).abs() < 1e-12 && (shifts[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn scale_noise_has_target_variance() {
        let x: Observations = TimeSeries::new(vec![0.0; 200_000]).unwrap().into();
        let spec = ContaminationSpec::new(ContaminationKind::Scale(3), 0.4, 4.0, 9).unwrap();
        let (y, idx) = contaminate(&x, &spec).unwrap();
        let v: f64 = idx.iter().map(|&i| y.values()[i].powi(2)).sum::<f64>() / idx.len() as f64;
        assert!((v - 4.0).abs() < 0.2, "{v}");
    }

    #[test]
    fn field_blocks() {
        let f = LatticeField::from_fn(30, 30, |r, c| (r + c) as f64).unwrap();
        let x: Observations = f.into();
        let spec = ContaminationSpec::new(ContaminationKind::Patchy { patch_len: 10 }, 0.01, 100.0, 1).unwrap();
        let (_, idx) = contaminate(&x, &spec).unwrap();
        assert_eq!(idx.len(), 10);
        let rows: Vec<usize> = idx.iter().map(|i| i / 30).collect();
        assert!(rows.iter().max().unwrap() - rows.iter().min().unwrap() < 4);
        let spec = ContaminationSpec::new(ContaminationKind::Scale(2), 0.01, 1.0, 1).unwrap();
        assert!(matches!(contaminate(&x, &spec), Err(Error::Unsupported(_))));
    }

    #[test]
    fn parse_kinds() {
        for s in ["isolated", "replace", "patchy:5", "scale:3", "level-shift:5,-3"] {
            let k: ContaminationKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert_eq!("patchy".parse::<ContaminationKind>().unwrap(), ContaminationKind::Patchy { patch_len: 10 });
        assert!("level-shift".parse::<ContaminationKind>().is_err());
        assert!("wobble".parse::<ContaminationKind>().is_err());
    }

    #[test]
    fn deterministic() {
        let x = series(500);
        let spec = ContaminationSpec::new(ContaminationKind::Patchy { patch_len: 10 }, 0.05, 9.0, 42).unwrap();
        assert_eq!(contaminate(&x, &spec).unwrap(), contaminate(&x, &spec).unwrap());
    }
}
