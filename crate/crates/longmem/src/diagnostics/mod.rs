//! Memory-property measurement: sample ACF and periodogram, decay
//! classification, impulse-response extraction for linearized cells, and the
//! geometric-ergodicity condition checkers.

pub mod ergodicity;
pub mod impulse;
pub mod memory;

pub use ergodicity::{
    check_linear_ergodicity, check_lstm_ergodicity, check_rnn_ergodicity, spectral_radius,
    CheckedInequality, Conclusion, Verdict, DEFAULT_CONTRACTION, DEFAULT_RADIUS_TOL,
};
pub use impulse::{impulse_response, LinearSpec};
pub use memory::{
    acf, classify_decay, classify_series_memory, linear_fit, periodogram, periodogram_lowfreq,
    AcfResult, DecayClass, DecayKind, MemoryClass, SeriesMemoryReport, SpectrumResult,
};
