use serde::{Deserialize, Serialize};

use crate::pairs::{FrequencyContrast, PairCounts};

/// Which estimator produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Sampled,
    Clustered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// What the estimate was computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    /// Integer pair tallies (exact enumeration or the sampled subset of pairs).
    Pairs(PairCounts),
    /// Centroid approximation: the number of cross-group pairs represented by
    /// the clustered bins, and how many bins held both groups.
    ClusterMass {
        represented_pairs: u64,
        bins_used: usize,
    },
}

impl Support {
    /// Comparable pairs behind the estimate. For the clustered engine this is
    /// the number of cross-group pairs the centroids stand in for.
    pub fn comparable_pairs(&self) -> u64 {
        match self {
            Support::Pairs(counts) => counts.comparable(),
            Support::ClusterMass {
                represented_pairs, ..
            } => *represented_pairs,
        }
    }
}

/// Parameter echo attached to every estimate. Fields not relevant to the
/// producing definition or engine stay `None` and are omitted from JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast: Option<FrequencyContrast>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exposure_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exposure_window: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exposure_bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reruns: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceEstimate {
    pub value: f64,
    pub method: Method,
    pub support: Support,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<ConfidenceInterval>,
    pub meta: EstimateMeta,
}

impl ConcordanceEstimate {
    pub(crate) fn from_counts(counts: PairCounts, method: Method, meta: EstimateMeta) -> Self {
        let value = counts.concordant() as f64 / counts.comparable() as f64;
        Self {
            value,
            method,
            support: Support::Pairs(counts),
            ci: None,
            meta,
        }
    }

    pub fn counts(&self) -> Option<&PairCounts> {
        match &self.support {
            Support::Pairs(counts) => Some(counts),
            Support::ClusterMass { .. } => None,
        }
    }
}
