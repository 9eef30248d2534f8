//! Markov-source models of CAM (Cooperative Awareness Message) traffic.
//!
//! A trace of `(time, size)` pairs is quantized onto a finite alphabet of
//! sizes and inter-generation intervals, an m-th order transition table is
//! counted from it, and synthetic traces are sampled back out.

pub mod alphabet;
pub mod cli;
pub mod fit;
pub mod generate;
pub mod metrics;
pub mod model;
pub mod model_file;
pub mod presets;
pub mod table;
pub mod trace;

pub use alphabet::{IntervalSet, ProductAlphabet, SizeSet, Symbol};
pub use fit::{detect_size_bins, estimate_jitter_std, fit, fit_separate, CountTable, Fitted};
pub use generate::{generate_separate, generate_stream, Budget, GeneratedStream, Generator};
pub use model::{CamModel, ModelMode, ModelSpec};
pub use model_file::{parse_model, write_model};
pub use presets::Preset;
pub use table::{InitialDistribution, TransitionTable};
pub use trace::{quantize, read_trace, write_trace, CamEvent, QuantizeOptions, QuantizedTrace};
