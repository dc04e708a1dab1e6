//! Observation containers: 1D time series and 2D lattice fields.

use crate::error::{Error, Result};

/// A univariate, regularly sampled time series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at index {i}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }
}

/// A random field observed on a regular `rows x cols` lattice, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::invalid(format!("lattice must be at least 2x2, got {rows}x{cols}")));
        }
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} values for a {rows}x{cols} lattice, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at ({}, {})", i / cols, i % cols)));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }
}

/// Either kind of observation set accepted by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    Series(TimeSeries),
    Field(LatticeField),
}

impl Observations {
    /// Total number of observations.
    pub fn len(&self) -> usize {
        match self {
            Observations::Series(s) => s.len(),
            Observations::Field(f) => f.values().len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Observations::Series(s) => s.values(),
            Observations::Field(f) => f.values(),
        }
    }

    /// Rebuilds an observation set of the same shape around new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        match self {
            Observations::Series(_) => Ok(Observations::Series(TimeSeries::new(values)?)),
            Observations::Field(f) => Ok(Observations::Field(LatticeField::new(f.rows(), f.cols(), values)?)),
        }
    }
}

impl From<TimeSeries> for Observations {
    fn from(s: TimeSeries) -> Self {
        Observations::Series(s)
    }
}

impl From<LatticeField> for Observations {
    fn from(f: LatticeField) -> Self {
        Observations::Field(f)
    }
}

/// Shape of an observation set, used to simulate data like a given sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataShape {
    Series(usize),
    Field(usize, usize),
}

impl DataShape {
    pub fn of(data: &Observations) -> Self {
        match data {
            Observations::Series(s) => DataShape::Series(s.len()),
            Observations::Field(f) => DataShape::Field(f.rows(), f.cols()),
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            DataShape::Series(n) => n,
            DataShape::Field(k, m) => k * m,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for DataShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataShape::Series(n) => write!(f, "{n}"),
            DataShape::Field(k, m) => write!(f, "{k}x{m}"),
        }
    }
}
