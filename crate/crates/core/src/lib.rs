//! Robust generalized method of wavelet moments.
//!
//! Wavelet-variance based estimation for latent time-series models and
//! isotropic lattice random fields, with a bounded-influence (Tukey) variant
//! of the wavelet-variance estimator.

pub mod bench;
pub mod cli;
pub mod data;
pub mod error;
pub mod gmwm;
pub mod io;
pub mod models;
pub mod rng;
pub mod wavelet;
pub mod wv;

pub use data::{DataShape, LatticeField, Observations, TimeSeries};
pub use error::{Error, Result};
pub use models::ModelSpec;
