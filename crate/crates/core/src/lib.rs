//! Time-varying harmonic regression with penalized B-splines, plus spectral
//! density estimation for irregularly sampled residuals.

pub mod bspline;
pub mod design;
pub mod error;
pub mod fit;
pub mod intervals;
pub mod linalg;
pub mod penalty;
pub mod selection;
pub mod simulate;
pub mod spectral;
pub mod timeseries;

pub use error::{Error, Result};
