//! Seeded synthetic datasets.
//!
//! `poisson-world` is calibrated to a large motor-insurance portfolio:
//! roughly 91.1% of policies without claims, 8.05% with one and 0.85% with
//! two or more, with 27.81% of policies at full exposure.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Records};
use crate::error::ConcordError;
use crate::pairs::{FrequencyRecord, SeverityRecord};

/// Share of policies observed for a full year.
pub const FULL_EXPOSURE_SHARE: f64 = 0.2781;
/// Mean annual claim rate and log-normal spread of the latent risk; solved
/// so the claim-count shares match the calibration targets.
pub const BASE_RATE: f64 = 0.154_24;
pub const RISK_SPREAD: f64 = 0.756_88;

pub const GAMMA_MEAN_CLAIM: f64 = 2_000.0;
pub const GAMMA_SPREAD: f64 = 0.6;
pub const GAMMA_SHAPE: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    PoissonWorld,
    GammaWorld,
    Separable,
    DegenerateTies,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::PoissonWorld => "poisson-world",
            Scenario::GammaWorld => "gamma-world",
            Scenario::Separable => "separable",
            Scenario::DegenerateTies => "degenerate-ties",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = ConcordError;

    fn from_str(s: &str) -> Result<Self, ConcordError> {
        match s {
            "poisson-world" => Ok(Scenario::PoissonWorld),
            "gamma-world" => Ok(Scenario::GammaWorld),
            "separable" => Ok(Scenario::Separable),
            "degenerate-ties" => Ok(Scenario::DegenerateTies),
            other => Err(ConcordError::InvalidConfig(format!(
                "unknown scenario `{other}`"
            ))),
        }
    }
}

fn exposure(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<f64>() < FULL_EXPOSURE_SHARE {
        1.0
    } else {
        // (0, 1]
        1.0 - rng.random::<f64>()
    }
}

fn poisson_world(n: usize, rng: &mut ChaCha8Rng) -> Vec<FrequencyRecord> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let exposure = exposure(rng);
            let rate = BASE_RATE * (RISK_SPREAD * z - 0.5 * RISK_SPREAD * RISK_SPREAD).exp();
            let claims = Poisson::new(exposure * rate)
                .expect("positive Poisson mean")
                .sample(rng) as u32;
            FrequencyRecord {
                claim_count: claims,
                exposure,
                prediction: rate,
            }
        })
        .collect()
}

fn gamma_world(n: usize, rng: &mut ChaCha8Rng) -> Vec<SeverityRecord> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let mean =
                GAMMA_MEAN_CLAIM * (GAMMA_SPREAD * z - 0.5 * GAMMA_SPREAD * GAMMA_SPREAD).exp();
            let size = Gamma::new(GAMMA_SHAPE, mean / GAMMA_SHAPE)
                .expect("positive gamma parameters")
                .sample(rng);
            SeverityRecord {
                claim_size: size.max(0.01),
                prediction: mean,
            }
        })
        .collect()
}

/// Claim counts cycling through 0, 1, 2 in shuffled order, full exposure.
fn balanced_counts(n: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut counts: Vec<u32> = (0..n).map(|i| (i % 3) as u32).collect();
    counts.shuffle(rng);
    counts
}

/// Generates `n` records of `scenario`; identical inputs give identical data.
///
/// * `poisson-world`: frequency data whose predictions are the true rates.
/// * `gamma-world`: severity data whose predictions are the true means.
/// * `separable`: every policy with more claims has a strictly higher
///   prediction, so every contrast has concordance 1.
/// * `degenerate-ties`: all predictions equal, so nothing is comparable.
pub fn generate_synthetic(n: usize, scenario: Scenario, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = match scenario {
        Scenario::PoissonWorld => Records::Frequency(poisson_world(n, &mut rng)),
        Scenario::GammaWorld => Records::Severity(gamma_world(n, &mut rng)),
        Scenario::Separable => {
            let counts = balanced_counts(n, &mut rng);
            Records::Frequency(
                counts
                    .into_iter()
                    .map(|c| FrequencyRecord {
                        claim_count: c,
                        exposure: 1.0,
                        prediction: 0.1 * (c + 1) as f64 + 0.09 * rng.random::<f64>(),
                    })
                    .collect(),
            )
        }
        Scenario::DegenerateTies => Records::Frequency(
            balanced_counts(n, &mut rng)
                .into_iter()
                .map(|c| FrequencyRecord {
                    claim_count: c,
                    exposure: 1.0,
                    prediction: 0.1,
                })
                .collect(),
        ),
    };
    Dataset::from_records(records)
}
