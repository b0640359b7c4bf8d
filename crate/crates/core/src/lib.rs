//! Concordance probabilities for non-life insurance pricing models.
//!
//! Frequency models are scored with exposure-matched contrasts between
//! claim-count groups (0 vs 1+, 0 vs 2+, 1 vs 2+); severity models with
//! claim pairs whose sizes differ by at least a threshold. Three engines
//! evaluate any definition:
//!
//! * [`pairs::exact_concordance`] enumerates every admissible pair,
//! * [`sampling`] draws index observations without replacement and gives a
//!   confidence interval,
//! * [`cluster`] replaces each group's predictions by 1-D k-means centroids.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod dataset;
pub mod error;
pub mod estimate;
pub mod frequency;
pub mod pairs;
pub mod report;
pub mod sampling;
pub mod severity;
pub mod synth;

pub use cluster::{clustered_concordance, kmeans_1d, Cluster, ClusterSummary, KMeansConfig};
pub use dataset::{ingest_csv, ColumnMap, Dataset, DatasetKind, Records};
pub use error::{ConcordError, Result};
pub use estimate::{ConcordanceEstimate, ConfidenceInterval, EstimateMeta, Method, Support};
pub use frequency::{
    global_frequency_concordance, local_frequency_curve, CurvePoint, Engine, LocalCurveConfig,
    PointOutcome,
};
pub use pairs::{
    classify_frequency_pair, classify_severity_pair, exact_concordance, FrequencyContrast,
    FrequencyDefinition, FrequencyRecord, PairClass, PairCounts, PairDefinition,
    SeverityDefinition, SeverityRecord,
};
pub use sampling::{
    confidence_interval, estimate_from_tally, sample_tally, SampleTally, SamplingConfig,
    VarianceComponents,
};
pub use severity::{severity_concordance, severity_curve, SeverityCurveConfig};
pub use synth::{generate_synthetic, Scenario};
