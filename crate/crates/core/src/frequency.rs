//! Exposure-matched frequency concordances and local curves over exposure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{clustered_concordance, KMeansConfig};
use crate::error::{ConcordError, Result};
use crate::estimate::ConcordanceEstimate;
use crate::pairs::{exact_concordance, FrequencyContrast, FrequencyDefinition, FrequencyRecord};
use crate::sampling::{sampled_concordance, SamplingConfig};

/// Estimator used to evaluate a concordance definition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum Engine {
    Exact,
    Sampled(SamplingConfig),
    Clustered(KMeansConfig),
}

impl Engine {
    /// Same engine with its seed replaced by `seed ^ index`.
    pub fn for_grid_point(&self, index: usize) -> Engine {
        match *self {
            Engine::Exact => Engine::Exact,
            Engine::Sampled(config) => Engine::Sampled(SamplingConfig {
                seed: config.seed ^ index as u64,
                ..config
            }),
            Engine::Clustered(config) => Engine::Clustered(KMeansConfig {
                seed: config.seed ^ index as u64,
                ..config
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::Sampled(_) => "sample",
            Engine::Clustered(_) => "kmeans",
        }
    }
}

/// Global exposure-matched concordance for one contrast.
///
/// The clustered engine ignores `exposure_tol`: exposure matching comes from
/// its exposure bins instead.
pub fn global_frequency_concordance(
    records: &[FrequencyRecord],
    contrast: FrequencyContrast,
    exposure_tol: f64,
    engine: &Engine,
) -> Result<ConcordanceEstimate> {
    let definition = FrequencyDefinition::new(contrast, exposure_tol)?;
    match engine {
        Engine::Exact => exact_concordance(records, &definition),
        Engine::Sampled(config) => sampled_concordance(records, &definition, config),
        Engine::Clustered(config) => clustered_concordance(records, contrast, config),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalCurveConfig {
    pub lambda_grid: Vec<f64>,
    /// Half-width of the exposure window around each grid point.
    pub window: f64,
    pub min_pairs: u64,
}

impl Default for LocalCurveConfig {
    fn default() -> Self {
        Self {
            lambda_grid: (1..=20).map(|i| i as f64 / 20.0).collect(),
            window: 0.05,
            min_pairs: 100,
        }
    }
}

impl LocalCurveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(ConcordError::InvalidConfig("empty exposure grid".into()));
        }
        if self.lambda_grid.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(ConcordError::InvalidConfig(
                "exposure grid points must lie in (0, 1]".into(),
            ));
        }
        if self.lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConcordError::InvalidConfig(
                "exposure grid must be strictly ascending".into(),
            ));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(ConcordError::InvalidConfig(
                "window must be positive".into(),
            ));
        }
        if self.min_pairs == 0 {
            return Err(ConcordError::InvalidConfig(
                "min_pairs must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum PointOutcome {
    Estimate(ConcordanceEstimate),
    /// Fewer comparable pairs than the configured minimum.
    InsufficientPairs {
        comparable: u64,
    },
    NoComparablePairs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub outcome: PointOutcome,
}

impl CurvePoint {
    pub fn estimate(&self) -> Option<&ConcordanceEstimate> {
        match &self.outcome {
            PointOutcome::Estimate(e) => Some(e),
            _ => None,
        }
    }
}

/// Local concordance at each grid exposure: pairs whose exposures both lie
/// within `lambda +/- window`. Grid points are independent; sampled and
/// clustered engines use seed `seed ^ index` at grid index `index`.
pub fn local_frequency_curve(
    records: &[FrequencyRecord],
    contrast: FrequencyContrast,
    config: &LocalCurveConfig,
    engine: &Engine,
) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    config
        .lambda_grid
        .par_iter()
        .enumerate()
        .map(|(index, &lambda)| {
            let (lo, hi) = (lambda - config.window, lambda + config.window);
            let local: Vec<FrequencyRecord> = records
                .iter()
                .filter(|r| r.exposure >= lo && r.exposure <= hi)
                .copied()
                .collect();
            let engine = engine.for_grid_point(index);
            let outcome =
                match global_frequency_concordance(&local, contrast, f64::INFINITY, &engine) {
                    Ok(mut estimate) => {
                        estimate.meta.exposure_tol = None;
                        estimate.meta.exposure_window = Some((lo, hi));
                        let comparable = estimate.support.comparable_pairs();
                        if comparable < config.min_pairs {
                            PointOutcome::InsufficientPairs { comparable }
                        } else {
                            PointOutcome::Estimate(estimate)
                        }
                    }
                    Err(
                        ConcordError::NoComparablePairs
                        | ConcordError::EmptyInput
                        | ConcordError::EmptyGroup { .. },
                    ) => PointOutcome::InsufficientPairs { comparable: 0 },
                    Err(e) => return Err(e),
                };
            Ok(CurvePoint { x: lambda, outcome })
        })
        .collect()
}
