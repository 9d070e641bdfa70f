//! Long-memory time series meets recurrent networks: fractional-differencing
//! filters, memory-augmented RNN/LSTM cells with exact backpropagation
//! through time, geometric-ergodicity condition checkers, synthetic
//! long-memory data generators, and a reproducible training/forecasting
//! harness.
//!
//! Entry points by task:
//! - [`fracdiff`]: differencing weights w_j(d), their d-derivatives, and the
//!   memory filter built from them.
//! - [`procgen`]: fractionally integrated ARMA series and self-exciting
//!   network processes.
//! - [`diagnostics`]: ACF/periodogram, decay classification, impulse
//!   responses of linearized cells, ergodicity checkers.
//! - [`networks`]: the eight cell kinds with forward/backward passes.
//! - [`training`]: Adam, stopping rules, rolling forecasts, multi-seed
//!   experiments, Welch's t-test.
//! - [`cli`]: the command-line front end over all of the above.
//!
//! The `examples/` directory has one runnable program per capability.

pub mod activations;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod fracdiff;
pub mod mat;
pub mod networks;
pub mod procgen;
pub mod rng;
pub mod series;
pub mod training;

pub use error::{Error, Result};
