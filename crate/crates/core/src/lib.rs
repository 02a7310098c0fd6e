//! Reconstruction of bandlimited stationary random processes from integer
//! samples: optimal and weighted-sinc estimators, their mean-square errors,
//! analytic error bounds and Monte Carlo checks.

// `!(x > 0.0)` is used on purpose to reject NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod kernelmat;
pub mod linalg;
pub mod precision;
pub mod quadrature;
pub mod reconstruct;
pub mod simulate;
pub mod spectra;
pub mod weights;

pub use error::{Error, Result};
pub use precision::{PrecisionConfig, Real, XFloat};
pub use reconstruct::{CoefficientVector, ErrorReport, ReconMethod};
pub use simulate::{PathEnsemble, SimConfig};
pub use spectra::{Autocorrelation, Bandwidth, DensityNorms, DensityShape, SpectralDensity};
pub use weights::{Method, WeightSpec};
