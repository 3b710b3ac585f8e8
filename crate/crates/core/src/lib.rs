//! Substring-pattern analysis of keystreams and other bit sequences.
//!
//! Sequences are treated as strings over `{0, 1}`. The crate extracts
//! sliding-window pattern frequency tables, counts exact occurrences with
//! naive / KMP / Boyer–Moore matchers, derives entropy and deviation
//! metrics, and runs a distinguishing experiment that estimates how well a
//! threshold adversary tells a generator's output from uniform bits.
//!
//! The statistics layer is generic over a float [`Scalar`] (`f32` or
//! `f64`); the aliases below fix the common choices.
//!
//! ```
//! use sbc_core::{extract_aggregate, generate_corpus, run_distinguisher, GeneratorSpec, PatternLengths};
//!
//! # fn main() -> sbc_core::Result<()> {
//! let biased = generate_corpus(&GeneratorSpec::BiasedBit { seed: 0, p: 0.6 }, 200, 4096, 0)?;
//! let uniform = generate_corpus(&GeneratorSpec::Uniform { seed: 0 }, 200, 4096, 10_000)?;
//!
//! let table = extract_aggregate(&biased, 8)?;
//! let h: f64 = sbc_core::entropy(&table);
//! assert!(h < 8.0);
//!
//! let out = run_distinguisher::<f64>(&biased, &uniform, &PatternLengths::default(), 0.5, 0, 0)?;
//! assert!(out.report.advantage > 0.9);
//! # Ok(())
//! # }
//! ```

pub mod corpus_io;
pub mod distinguish;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod manifest;
pub mod metrics;
pub mod pattern;
pub mod report;
pub mod scalar;
pub mod sequence;

pub use distinguish::{
    estimate_advantage, run_distinguisher, train_threshold, AdvantageReport, Distinguished, Polarity,
    ThresholdClassifier,
};
pub use error::{Result, SbcError};
pub use experiment::{run_experiment, ConfigSettings, ExperimentConfig};
pub use generators::{generate_corpus, generate_keystream, generate_structured, generate_uniform, GeneratorKind, GeneratorSpec};
pub use metrics::{deviation, entropy, feature_vector, uniform_deviation, FeatureVector, PatternLengths, Statistic};
pub use pattern::{
    count_occurrences_bm, count_occurrences_kmp, count_occurrences_naive, extract_aggregate, extract_frequencies,
    merge_tables, recurrence_stats, FrequencyTable, RecurrenceStats, SearchAlgorithm,
};
pub use scalar::Scalar;
pub use sequence::{BitSequence, Corpus, Pattern, MAX_PATTERN_BITS};

pub type FeatureVector64 = FeatureVector<f64>;
pub type FeatureVector32 = FeatureVector<f32>;
pub type ThresholdClassifier64 = ThresholdClassifier<f64>;
pub type ThresholdClassifier32 = ThresholdClassifier<f32>;
pub type AdvantageReport64 = AdvantageReport<f64>;
pub type AdvantageReport32 = AdvantageReport<f32>;
pub type RecurrenceStats64 = RecurrenceStats<f64>;
pub type RecurrenceStats32 = RecurrenceStats<f32>;
