//! Prime-factor spectra of elements of arithmetic sequences, compared with
//! the Poisson-Dirichlet process through exact oracles and Monte Carlo.
//!
//! The crate is organised bottom-up:
//!
//! * [`sequences`]: the four indicator sequences and their counting functions.
//! * [`factor`]: prime sieves, bulk factorization and normalized spectra.
//! * [`arith`]: multiplicative functions and the densities `g(d)`.
//! * [`dickman`]: the Dickman function.
//! * [`pdprocess`]: the Poisson-Dirichlet reference process.
//! * [`stats`]: empirical estimators over sequence members.
//! * [`experiment`]: configs, reports and sweeps.

pub mod arith;
pub mod dickman;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod factor;
pub mod pdprocess;
pub mod poly;
pub mod rng;
pub mod sequences;
pub mod stats;

pub use error::{Error, ErrorClass, Result};
pub use estimate::Estimate;
pub use factor::{Factorization, NormalizedSpectrum, PrimeTable};
pub use pdprocess::{BoxFunction, Interval, PdSample, WeightedBox};
pub use poly::Polynomial;
pub use sequences::{CountPair, SequenceSpec};
pub use stats::SampleSet;
