//! Sampling estimator with an analytic confidence interval.
//!
//! `S` index observations are drawn without replacement in a seeded order.
//! Each drawn observation is compared against every record that has not been
//! drawn before it, so no pair is ever counted twice and `S = n` reproduces
//! the exact tallies.

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{ConcordError, Result};
use crate::estimate::{ConcordanceEstimate, ConfidenceInterval, EstimateMeta, Method};
use crate::pairs::{KeyWindow, PairCounts, PairDefinition, Role};

pub const DEFAULT_FREQUENCY_SAMPLE_SIZE: usize = 20_000;
pub const DEFAULT_SEVERITY_SAMPLE_SIZE: usize = 5_000;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub sample_size: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl SamplingConfig {
    pub fn new(sample_size: usize, seed: u64) -> Self {
        Self {
            sample_size,
            seed,
            alpha: DEFAULT_ALPHA,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size == 0 {
            return Err(ConcordError::InvalidConfig(
                "sample size must be at least 1".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConcordError::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Pair counts for one drawn observation against the records still in the pool.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyEntry {
    pub concordant: u64,
    pub comparable: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleTally {
    entries: Vec<TallyEntry>,
    total_concordant: u64,
    total_comparable: u64,
    tied: u64,
}

impl SampleTally {
    /// Builds a tally from `(concordant, comparable)` pairs.
    pub fn from_counts(counts: &[(u64, u64)]) -> Result<Self> {
        let entries = counts
            .iter()
            .map(|&(concordant, comparable)| {
                if concordant > comparable {
                    Err(ConcordError::InvalidConfig(format!(
                        "tally entry has {concordant} concordant of {comparable} comparable pairs"
                    )))
                } else {
                    Ok(TallyEntry {
                        concordant,
                        comparable,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_entries(entries, 0))
    }

    fn from_entries(entries: Vec<TallyEntry>, tied: u64) -> Self {
        let total_concordant = entries.iter().map(|e| e.concordant).sum();
        let total_comparable = entries.iter().map(|e| e.comparable).sum();
        Self {
            entries,
            total_concordant,
            total_comparable,
            tied,
        }
    }

    pub fn entries(&self) -> &[TallyEntry] {
        &self.entries
    }

    pub fn total_comparable(&self) -> u64 {
        self.total_comparable
    }

    pub fn total_concordant(&self) -> u64 {
        self.total_concordant
    }

    /// Tied-prediction pairs met while counting (excluded from the tallies).
    pub fn tied(&self) -> u64 {
        self.tied
    }

    pub fn pair_counts(&self) -> PairCounts {
        PairCounts::from_parts(
            self.total_concordant,
            self.total_comparable - self.total_concordant,
            self.tied,
        )
    }

    /// Number of drawn observations with at least one comparable pair.
    pub fn contributing(&self) -> usize {
        self.entries.iter().filter(|e| e.comparable > 0).count()
    }
}

/// Candidate partners grouped by role and sorted by the definition's key.
struct PartnerIndex {
    group_a: Vec<(f64, usize)>,
    group_b: Vec<(f64, usize)>,
    either: Vec<(f64, usize)>,
}

impl PartnerIndex {
    fn build<D: PairDefinition>(records: &[D::Record], definition: &D) -> Self {
        let mut index = PartnerIndex {
            group_a: Vec::new(),
            group_b: Vec::new(),
            either: Vec::new(),
        };
        for (i, record) in records.iter().enumerate() {
            let entry = (definition.sort_key(record), i);
            match definition.role(record) {
                Role::GroupA => index.group_a.push(entry),
                Role::GroupB => index.group_b.push(entry),
                Role::Either => index.either.push(entry),
                Role::Excluded => {}
            }
        }
        for bucket in [&mut index.group_a, &mut index.group_b, &mut index.either] {
            bucket.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        }
        index
    }

    fn partners(&self, role: Role) -> &[(f64, usize)] {
        match role {
            Role::GroupA => &self.group_b,
            Role::GroupB => &self.group_a,
            Role::Either => &self.either,
            Role::Excluded => &[],
        }
    }
}

/// Sorts the windows and merges overlaps so no key is scanned twice.
fn merged_windows(windows: [Option<KeyWindow>; 2]) -> Vec<KeyWindow> {
    let mut list: Vec<KeyWindow> = windows
        .into_iter()
        .flatten()
        .filter(|w| w.lo <= w.hi)
        .collect();
    list.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut merged: Vec<KeyWindow> = Vec::with_capacity(list.len());
    for window in list {
        match merged.last_mut() {
            Some(last) if window.lo <= last.hi => last.hi = last.hi.max(window.hi),
            _ => merged.push(window),
        }
    }
    merged
}

/// Draw order for the first `sample_size` positions of a seeded shuffle.
pub fn draw_order(n: usize, sample_size: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    let (drawn, _) = indices.partial_shuffle(&mut rng, sample_size.min(n));
    drawn.to_vec()
}

/// Runs the draw-and-remove procedure and returns per-draw tallies.
pub fn sample_tally<D: PairDefinition>(
    records: &[D::Record],
    definition: &D,
    config: &SamplingConfig,
) -> Result<SampleTally> {
    if records.is_empty() {
        return Err(ConcordError::EmptyInput);
    }
    config.validate()?;
    let n = records.len();
    let sample_size = if config.sample_size > n {
        warn!(
            "sample size {} exceeds the {} available records; using {}",
            config.sample_size, n, n
        );
        n
    } else {
        config.sample_size
    };

    let order = draw_order(n, sample_size, config.seed);
    // Position in the draw order; undrawn records stay in the pool throughout.
    let mut rank = vec![usize::MAX; n];
    for (position, &i) in order.iter().enumerate() {
        rank[i] = position;
    }
    let index = PartnerIndex::build(records, definition);

    let per_draw: Vec<(TallyEntry, u64)> = order
        .par_iter()
        .enumerate()
        .map(|(position, &i)| {
            let record = &records[i];
            let partners = index.partners(definition.role(record));
            let mut counts = PairCounts::default();
            for window in merged_windows(definition.partner_windows(record)) {
                let start = partners.partition_point(|p| p.0 < window.lo);
                let end = partners.partition_point(|p| p.0 <= window.hi);
                for &(_, j) in &partners[start..end] {
                    if rank[j] > position {
                        counts.record(definition.classify_unordered(record, &records[j]));
                    }
                }
            }
            (
                TallyEntry {
                    concordant: counts.concordant(),
                    comparable: counts.comparable(),
                },
                counts.tied(),
            )
        })
        .collect();

    let tied = per_draw.iter().map(|(_, t)| t).sum();
    let entries = per_draw.into_iter().map(|(e, _)| e).collect();
    Ok(SampleTally::from_entries(entries, tied))
}

/// Ratio of summed concordant to summed comparable counts.
pub fn estimate_from_tally(tally: &SampleTally) -> Result<ConcordanceEstimate> {
    if tally.total_comparable == 0 {
        return Err(ConcordError::NoComparablePairs);
    }
    let meta = EstimateMeta {
        sample_size: Some(tally.entries.len()),
        ..EstimateMeta::default()
    };
    Ok(ConcordanceEstimate::from_counts(
        tally.pair_counts(),
        Method::Sampled,
        meta,
    ))
}

/// Component probabilities feeding the variance of the sampled estimate.
///
/// `pi_cc`, `pi_dd` and `pi_cd` weight each drawn observation's squared
/// (or mixed) counts by `1 / n_t,i` and normalise by the total comparable
/// count. Draws without comparable pairs contribute nothing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    pub pi_c: f64,
    pub pi_d: f64,
    pub pi_cc: f64,
    pub pi_dd: f64,
    pub pi_cd: f64,
}

impl VarianceComponents {
    pub fn from_tally(tally: &SampleTally) -> Result<Self> {
        if tally.total_comparable == 0 {
            return Err(ConcordError::NoComparablePairs);
        }
        let total = tally.total_comparable as f64;
        let (mut cc, mut dd, mut cd) = (0.0, 0.0, 0.0);
        for entry in tally.entries.iter().filter(|e| e.comparable > 0) {
            let t = entry.comparable as f64;
            let c = entry.concordant as f64;
            let d = t - c;
            cc += c * c / t;
            dd += d * d / t;
            cd += d * c / t;
        }
        let pi_c = tally.total_concordant as f64 / total;
        Ok(Self {
            pi_c,
            pi_d: 1.0 - pi_c,
            pi_cc: cc / total,
            pi_dd: dd / total,
            pi_cd: cd / total,
        })
    }

    pub fn variance(&self) -> f64 {
        let Self {
            pi_c,
            pi_d,
            pi_cc,
            pi_dd,
            pi_cd,
        } = *self;
        let numerator =
            4.0 * (pi_d * pi_d * pi_cc - 2.0 * pi_c * pi_d * pi_cd + pi_c * pi_c * pi_dd);
        // Rounding can push a zero-dispersion numerator slightly negative.
        (numerator / (pi_c + pi_d).powi(2)).max(0.0)
    }
}

/// Two-sided normal quantile `z_{alpha/2}`.
pub fn normal_quantile(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

/// `C +/- z * sqrt(var / S)`, clamped to `[0, 1]`, where `S` is the number of
/// drawn observations.
pub fn confidence_interval(tally: &SampleTally, alpha: f64) -> Result<ConfidenceInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConcordError::InvalidConfig(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let components = VarianceComponents::from_tally(tally)?;
    let contributing = tally.contributing();
    if contributing < 2 {
        return Err(ConcordError::DegenerateVariance { contributing });
    }
    let half_width =
        normal_quantile(alpha) * (components.variance() / tally.entries.len() as f64).sqrt();
    let value = components.pi_c;
    Ok(ConfidenceInterval {
        lower: (value - half_width).clamp(0.0, 1.0),
        upper: (value + half_width).clamp(0.0, 1.0),
        alpha,
    })
}

/// Tally, point estimate and confidence interval in one call. A degenerate
/// variance leaves the interval empty rather than failing the estimate.
pub fn sampled_concordance<D: PairDefinition>(
    records: &[D::Record],
    definition: &D,
    config: &SamplingConfig,
) -> Result<ConcordanceEstimate> {
    let tally = sample_tally(records, definition, config)?;
    let mut estimate = estimate_from_tally(&tally)?;
    estimate.ci = match confidence_interval(&tally, config.alpha) {
        Ok(ci) => Some(ci),
        Err(ConcordError::DegenerateVariance { contributing }) => {
            warn!("no confidence interval: only {contributing} draw(s) met a comparable partner");
            None
        }
        Err(e) => return Err(e),
    };
    definition.echo(&mut estimate.meta);
    estimate.meta.seed = Some(config.seed);
    estimate.meta.alpha = Some(config.alpha);
    Ok(estimate)
}
