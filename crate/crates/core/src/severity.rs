//! Severity concordance over claims that differ in size by at least `v`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConcordError, Result};
use crate::estimate::ConcordanceEstimate;
use crate::frequency::{CurvePoint, Engine, PointOutcome};
use crate::pairs::{exact_concordance, SeverityDefinition, SeverityRecord};
use crate::sampling::sampled_concordance;

/// Random claim pairs used to scale the default threshold grid.
pub const GRID_SAMPLE_PAIRS: usize = 10_000;

pub fn severity_concordance(
    records: &[SeverityRecord],
    v: f64,
    engine: &Engine,
) -> Result<ConcordanceEstimate> {
    let definition = SeverityDefinition::new(v)?;
    match engine {
        Engine::Exact => exact_concordance(records, &definition),
        Engine::Sampled(config) => sampled_concordance(records, &definition, config),
        Engine::Clustered(_) => Err(ConcordError::UnsupportedEngine {
            engine: "kmeans",
            definition: "severity",
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeverityCurveConfig {
    pub v_grid: Vec<f64>,
    pub engine: Engine,
}

impl SeverityCurveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.v_grid.is_empty() {
            return Err(ConcordError::InvalidConfig("empty threshold grid".into()));
        }
        if self.v_grid.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(ConcordError::InvalidConfig(
                "thresholds must be finite and non-negative".into(),
            ));
        }
        if self.v_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConcordError::InvalidConfig(
                "threshold grid must be strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

/// Deciles 0%, 10%, ..., 90% of absolute claim-size differences over
/// `GRID_SAMPLE_PAIRS` random pairs; the first point is always 0.
/// Duplicated deciles are dropped so the grid stays strictly ascending.
pub fn default_threshold_grid(records: &[SeverityRecord], seed: u64) -> Vec<f64> {
    if records.len() < 2 {
        return vec![0.0];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = records.len();
    let mut gaps: Vec<f64> = (0..GRID_SAMPLE_PAIRS)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (records[i].claim_size - records[j].claim_size).abs()
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    let mut grid = vec![0.0];
    for decile in 1..10 {
        let q = gaps[decile * gaps.len() / 10];
        if q > *grid.last().unwrap() {
            grid.push(q);
        }
    }
    grid
}

/// One severity concordance per threshold. With the sampled engine each
/// point carries its own pointwise interval and uses seed `seed ^ index`.
pub fn severity_curve(
    records: &[SeverityRecord],
    config: &SeverityCurveConfig,
) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    config
        .v_grid
        .par_iter()
        .enumerate()
        .map(|(index, &v)| {
            let engine = config.engine.for_grid_point(index);
            let outcome = match severity_concordance(records, v, &engine) {
                Ok(estimate) => PointOutcome::Estimate(estimate),
                Err(ConcordError::NoComparablePairs) => PointOutcome::NoComparablePairs,
                Err(e) => return Err(e),
            };
            Ok(CurvePoint { x: v, outcome })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::KMeansConfig;
    use crate::sampling::SamplingConfig;

    fn three() -> Vec<SeverityRecord> {
        [(100.0, 120.0), (150.0, 110.0), (400.0, 300.0)]
            .iter()
            .map(|&(y, p)| SeverityRecord::new(y, p).unwrap())
            .collect()
    }

    #[test]
    fn threshold_examples() {
        let records = three();
        assert_eq!(
            severity_concordance(&records, 100.0, &Engine::Exact)
                .unwrap()
                .value,
            1.0
        );
        assert_eq!(
            severity_concordance(&records, 0.0, &Engine::Exact)
                .unwrap()
                .value,
            2.0 / 3.0
        );
        assert!(matches!(
            severity_concordance(&records, 1e12, &Engine::Exact),
            Err(ConcordError::NoComparablePairs)
        ));
    }

    #[test]
    fn clustered_engine_rejected() {
        assert!(matches!(
            severity_concordance(&three(), 0.0, &Engine::Clustered(KMeansConfig::default())),
            Err(ConcordError::UnsupportedEngine { .. })
        ));
    }

    #[test]
    fn curve_examples() {
        let records = three();
        let single = severity_curve(
            &records,
            &SeverityCurveConfig {
                v_grid: vec![0.0],
                engine: Engine::Exact,
            },
        )
        .unwrap();
        assert_eq!(
            single[0].estimate().unwrap(),
            &severity_concordance(&records, 0.0, &Engine::Exact).unwrap()
        );

        let curve = severity_curve(
            &records,
            &SeverityCurveConfig {
                v_grid: vec![0.0, 100.0, 1e9],
                engine: Engine::Exact,
            },
        )
        .unwrap();
        assert_eq!(curve[0].estimate().unwrap().value, 2.0 / 3.0);
        assert_eq!(curve[1].estimate().unwrap().value, 1.0);
        assert_eq!(curve[2].outcome, PointOutcome::NoComparablePairs);
    }

    #[test]
    fn sampled_curve_carries_intervals() {
        let records: Vec<_> = (1..=300)
            .map(|i| {
                SeverityRecord::new(i as f64 * 7.0, ((i * 53) % 97 + 1) as f64 + i as f64).unwrap()
            })
            .collect();
        let curve = severity_curve(
            &records,
            &SeverityCurveConfig {
                v_grid: vec![0.0, 200.0],
                engine: Engine::Sampled(SamplingConfig::new(100, 3)),
            },
        )
        .unwrap();
        for point in &curve {
            let est = point.estimate().unwrap();
            let ci = est.ci.unwrap();
            assert!(ci.lower <= est.value && est.value <= ci.upper);
            assert_eq!(est.meta.size_threshold, Some(point.x));
        }
    }

    #[test]
    fn default_grid_is_ascending_from_zero() {
        let records: Vec<_> = (1..=500)
            .map(|i| SeverityRecord::new((i as f64).powf(1.5), 10.0).unwrap())
            .collect();
        let grid = default_threshold_grid(&records, 1);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid.len(), 10);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        let constant = vec![SeverityRecord::new(5.0, 1.0).unwrap(); 10];
        assert_eq!(default_threshold_grid(&constant, 1), vec![0.0]);
    }

    #[test]
    fn larger_threshold_never_adds_pairs() {
        let records: Vec<_> = (1..=120)
            .map(|i| {
                SeverityRecord::new(((i * 31) % 200 + 1) as f64, ((i * 17) % 50 + 1) as f64)
                    .unwrap()
            })
            .collect();
        let mut last = u64::MAX;
        for v in [0.0, 5.0, 20.0, 50.0, 120.0] {
            let n = severity_concordance(&records, v, &Engine::Exact)
                .map(|e| e.support.comparable_pairs())
                .unwrap_or(0);
            assert!(n <= last);
            last = n;
        }
    }
}
