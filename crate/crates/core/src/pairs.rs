//! Records, pair classification and the exact pair-enumeration estimator.
//!
//! Every approximate engine in this crate is checked against
//! [`exact_concordance`], which looks at every admissible pair.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConcordError, Result};
use crate::estimate::{ConcordanceEstimate, EstimateMeta, Method};

/// Default maximum absolute exposure difference for a frequency pair.
pub const DEFAULT_EXPOSURE_TOL: f64 = 0.05;

/// One policy: observed claim count, exposure in policy-years and the
/// model's predicted claim frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRecord {
    pub claim_count: u32,
    pub exposure: f64,
    pub prediction: f64,
}

impl FrequencyRecord {
    pub fn new(claim_count: u32, exposure: f64, prediction: f64) -> Result<Self> {
        let record = Self {
            claim_count,
            exposure,
            prediction,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exposure > 0.0 && self.exposure <= 1.0) {
            return Err(ConcordError::InvalidRecord(format!(
                "exposure {} outside (0, 1]",
                self.exposure
            )));
        }
        if !(self.prediction > 0.0 && self.prediction.is_finite()) {
            return Err(ConcordError::InvalidRecord(format!(
                "prediction {} is not a positive finite number",
                self.prediction
            )));
        }
        Ok(())
    }
}

/// One claim: observed claim size and the model's predicted claim size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeverityRecord {
    pub claim_size: f64,
    pub prediction: f64,
}

impl SeverityRecord {
    pub fn new(claim_size: f64, prediction: f64) -> Result<Self> {
        let record = Self {
            claim_size,
            prediction,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.claim_size > 0.0 && self.claim_size.is_finite()) {
            return Err(ConcordError::InvalidRecord(format!(
                "claim size {} is not a positive finite number",
                self.claim_size
            )));
        }
        if !(self.prediction > 0.0 && self.prediction.is_finite()) {
            return Err(ConcordError::InvalidRecord(format!(
                "prediction {} is not a positive finite number",
                self.prediction
            )));
        }
        Ok(())
    }
}

/// Which claim-count groups a frequency concordance contrasts. Group A holds
/// the policies expected to carry the lower predictions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrequencyContrast {
    /// 0 claims vs at least 1.
    #[serde(rename = "01+")]
    ZeroVsOnePlus,
    /// 0 claims vs at least 2.
    #[serde(rename = "02+")]
    ZeroVsTwoPlus,
    /// exactly 1 claim vs at least 2.
    #[serde(rename = "12+")]
    OneVsTwoPlus,
}

impl FrequencyContrast {
    pub const ALL: [FrequencyContrast; 3] = [
        FrequencyContrast::ZeroVsOnePlus,
        FrequencyContrast::ZeroVsTwoPlus,
        FrequencyContrast::OneVsTwoPlus,
    ];

    pub fn in_group_a(self, claim_count: u32) -> bool {
        match self {
            FrequencyContrast::ZeroVsOnePlus | FrequencyContrast::ZeroVsTwoPlus => claim_count == 0,
            FrequencyContrast::OneVsTwoPlus => claim_count == 1,
        }
    }

    pub fn in_group_b(self, claim_count: u32) -> bool {
        match self {
            FrequencyContrast::ZeroVsOnePlus => claim_count >= 1,
            FrequencyContrast::ZeroVsTwoPlus | FrequencyContrast::OneVsTwoPlus => claim_count >= 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FrequencyContrast::ZeroVsOnePlus => "01+",
            FrequencyContrast::ZeroVsTwoPlus => "02+",
            FrequencyContrast::OneVsTwoPlus => "12+",
        }
    }
}

impl fmt::Display for FrequencyContrast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FrequencyContrast {
    type Err = ConcordError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "01+" => Ok(FrequencyContrast::ZeroVsOnePlus),
            "02+" => Ok(FrequencyContrast::ZeroVsTwoPlus),
            "12+" => Ok(FrequencyContrast::OneVsTwoPlus),
            other => Err(ConcordError::InvalidConfig(format!(
                "unknown contrast `{other}` (expected 01+, 02+ or 12+)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairClass {
    NotComparable,
    Concordant,
    Discordant,
    TiedPrediction,
}

/// Orders `lower` (the member expected to score lower) against `upper`.
fn order_predictions(lower: f64, upper: f64) -> PairClass {
    if upper > lower {
        PairClass::Concordant
    } else if upper < lower {
        PairClass::Discordant
    } else {
        PairClass::TiedPrediction
    }
}

/// Classifies `a` as the candidate group-A member and `b` as the candidate
/// group-B member of `contrast`.
pub fn classify_frequency_pair(
    a: &FrequencyRecord,
    b: &FrequencyRecord,
    contrast: FrequencyContrast,
    exposure_tol: f64,
) -> PairClass {
    if !contrast.in_group_a(a.claim_count)
        || !contrast.in_group_b(b.claim_count)
        || !((a.exposure - b.exposure).abs() <= exposure_tol)
    {
        return PairClass::NotComparable;
    }
    order_predictions(a.prediction, b.prediction)
}

/// Classifies `a` as the smaller-claim candidate. Equal claim sizes are
/// never comparable.
pub fn classify_severity_pair(a: &SeverityRecord, b: &SeverityRecord, v: f64) -> PairClass {
    if !(a.claim_size < b.claim_size && b.claim_size - a.claim_size >= v) {
        return PairClass::NotComparable;
    }
    order_predictions(a.prediction, b.prediction)
}

/// Integer tallies over a set of pairs. Tied-prediction pairs are counted
/// separately and are not part of `comparable`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    concordant: u64,
    discordant: u64,
    tied: u64,
    comparable: u64,
}

impl PairCounts {
    pub fn from_parts(concordant: u64, discordant: u64, tied: u64) -> Self {
        Self {
            concordant,
            discordant,
            tied,
            comparable: concordant + discordant,
        }
    }

    pub fn record(&mut self, class: PairClass) {
        match class {
            PairClass::NotComparable => {}
            PairClass::Concordant => {
                self.concordant += 1;
                self.comparable += 1;
            }
            PairClass::Discordant => {
                self.discordant += 1;
                self.comparable += 1;
            }
            PairClass::TiedPrediction => self.tied += 1,
        }
    }

    pub fn concordant(&self) -> u64 {
        self.concordant
    }

    pub fn discordant(&self) -> u64 {
        self.discordant
    }

    pub fn tied(&self) -> u64 {
        self.tied
    }

    pub fn comparable(&self) -> u64 {
        self.comparable
    }
}

impl Add for PairCounts {
    type Output = PairCounts;

    fn add(self, rhs: PairCounts) -> PairCounts {
        PairCounts {
            concordant: self.concordant + rhs.concordant,
            discordant: self.discordant + rhs.discordant,
            tied: self.tied + rhs.tied,
            comparable: self.comparable + rhs.comparable,
        }
    }
}

/// Which side of a definition a record can stand on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    GroupA,
    GroupB,
    /// Either side, decided per pair (severity: by claim size).
    Either,
    Excluded,
}

impl Role {
    pub fn pairs_with(self, other: Role) -> bool {
        matches!(
            (self, other),
            (Role::GroupA, Role::GroupB)
                | (Role::GroupB, Role::GroupA)
                | (Role::Either, Role::Either)
        )
    }
}

/// Closed interval of sort keys.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyWindow {
    pub lo: f64,
    pub hi: f64,
}

/// A concordance definition: how two records of one kind form a pair.
///
/// `sort_key` and `partner_windows` let engines skip records that cannot
/// be comparable with a given one. The windows must be a superset of the
/// comparable partners; `classify` has the final word.
pub trait PairDefinition: Sync {
    type Record: Sync;

    /// Ordered classification: `a` plays the lower side, `b` the upper.
    fn classify(&self, a: &Self::Record, b: &Self::Record) -> PairClass;

    /// Classification of an unordered pair. Definitions here have disjoint
    /// sides, so at most one orientation is comparable.
    fn classify_unordered(&self, a: &Self::Record, b: &Self::Record) -> PairClass {
        match self.classify(a, b) {
            PairClass::NotComparable => self.classify(b, a),
            class => class,
        }
    }

    fn role(&self, record: &Self::Record) -> Role;

    fn sort_key(&self, record: &Self::Record) -> f64;

    fn partner_windows(&self, record: &Self::Record) -> [Option<KeyWindow>; 2];

    fn echo(&self, meta: &mut EstimateMeta);

    fn name(&self) -> &'static str;
}

/// Exposure-matched frequency contrast.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyDefinition {
    pub contrast: FrequencyContrast,
    pub exposure_tol: f64,
}

impl FrequencyDefinition {
    pub fn new(contrast: FrequencyContrast, exposure_tol: f64) -> Result<Self> {
        if !(exposure_tol >= 0.0) {
            return Err(ConcordError::InvalidConfig(format!(
                "exposure tolerance must be non-negative, got {exposure_tol}"
            )));
        }
        Ok(Self {
            contrast,
            exposure_tol,
        })
    }
}

// Slack on the key windows so float rounding in `lambda +/- tol` never drops
// a partner that `classify` would admit.
const WINDOW_SLACK: f64 = 1e-9;

impl PairDefinition for FrequencyDefinition {
    type Record = FrequencyRecord;

    fn classify(&self, a: &FrequencyRecord, b: &FrequencyRecord) -> PairClass {
        classify_frequency_pair(a, b, self.contrast, self.exposure_tol)
    }

    fn role(&self, record: &FrequencyRecord) -> Role {
        if self.contrast.in_group_a(record.claim_count) {
            Role::GroupA
        } else if self.contrast.in_group_b(record.claim_count) {
            Role::GroupB
        } else {
            Role::Excluded
        }
    }

    fn sort_key(&self, record: &FrequencyRecord) -> f64 {
        record.exposure
    }

    fn partner_windows(&self, record: &FrequencyRecord) -> [Option<KeyWindow>; 2] {
        let reach = self.exposure_tol + WINDOW_SLACK;
        [
            Some(KeyWindow {
                lo: record.exposure - reach,
                hi: record.exposure + reach,
            }),
            None,
        ]
    }

    fn echo(&self, meta: &mut EstimateMeta) {
        meta.contrast = Some(self.contrast);
        meta.exposure_tol = Some(self.exposure_tol);
    }

    fn name(&self) -> &'static str {
        "frequency"
    }
}

/// Severity concordance over claims whose sizes differ by at least `threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeverityDefinition {
    pub threshold: f64,
}

impl SeverityDefinition {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(ConcordError::InvalidConfig(format!(
                "severity threshold must be non-negative, got {threshold}"
            )));
        }
        Ok(Self { threshold })
    }
}

impl PairDefinition for SeverityDefinition {
    type Record = SeverityRecord;

    fn classify(&self, a: &SeverityRecord, b: &SeverityRecord) -> PairClass {
        classify_severity_pair(a, b, self.threshold)
    }

    fn role(&self, _record: &SeverityRecord) -> Role {
        Role::Either
    }

    fn sort_key(&self, record: &SeverityRecord) -> f64 {
        record.claim_size
    }

    fn partner_windows(&self, record: &SeverityRecord) -> [Option<KeyWindow>; 2] {
        let slack = WINDOW_SLACK * (record.claim_size.abs() + self.threshold);
        [
            Some(KeyWindow {
                lo: f64::NEG_INFINITY,
                hi: record.claim_size - self.threshold + slack,
            }),
            Some(KeyWindow {
                lo: record.claim_size + self.threshold - slack,
                hi: f64::INFINITY,
            }),
        ]
    }

    fn echo(&self, meta: &mut EstimateMeta) {
        meta.size_threshold = Some(self.threshold);
    }

    fn name(&self) -> &'static str {
        "severity"
    }
}

/// Tallies every admissible pair by brute force.
pub fn exact_counts<D: PairDefinition>(records: &[D::Record], definition: &D) -> PairCounts {
    let roles: Vec<Role> = records.iter().map(|r| definition.role(r)).collect();
    (0..records.len())
        .into_par_iter()
        .map(|i| {
            let mut counts = PairCounts::default();
            if roles[i] == Role::Excluded {
                return counts;
            }
            for j in i + 1..records.len() {
                if roles[i].pairs_with(roles[j]) {
                    counts.record(definition.classify_unordered(&records[i], &records[j]));
                }
            }
            counts
        })
        .reduce(PairCounts::default, |a, b| a + b)
}

/// Concordance over every admissible pair: `n_c / n_t`, tied predictions
/// excluded from both.
pub fn exact_concordance<D: PairDefinition>(
    records: &[D::Record],
    definition: &D,
) -> Result<ConcordanceEstimate> {
    if records.is_empty() {
        return Err(ConcordError::EmptyInput);
    }
    let counts = exact_counts(records, definition);
    if counts.comparable() == 0 {
        return Err(ConcordError::NoComparablePairs);
    }
    let mut meta = EstimateMeta::default();
    definition.echo(&mut meta);
    Ok(ConcordanceEstimate::from_counts(
        counts,
        Method::Exact,
        meta,
    ))
}
