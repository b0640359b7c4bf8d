//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use concord_core::cluster::{kmeans_1d, KMeansConfig};
use concord_core::pairs::{exact_counts, FrequencyContrast, FrequencyDefinition};
use concord_core::sampling::{
    confidence_interval, estimate_from_tally, sample_tally, sampled_concordance, SampleTally,
    SamplingConfig, VarianceComponents,
};
use concord_core::{
    clustered_concordance, exact_concordance, generate_synthetic, severity_concordance, Engine,
    FrequencyRecord, Scenario, SeverityDefinition, SeverityRecord,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn frequency(n: usize, seed: u64) -> Vec<FrequencyRecord> {
    generate_synthetic(n, Scenario::PoissonWorld, seed)
        .frequency()
        .unwrap()
        .to_vec()
}

fn severity(n: usize, seed: u64) -> Vec<SeverityRecord> {
    generate_synthetic(n, Scenario::GammaWorld, seed)
        .severity()
        .unwrap()
        .to_vec()
}

fn def(contrast: FrequencyContrast, tol: f64) -> FrequencyDefinition {
    FrequencyDefinition::new(contrast, tol).unwrap()
}

/// Sampling with S = n reproduces the exact tallies as an integer identity.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut checked = 0;
    for case in 0..60u64 {
        let n = 200 + (case as usize * 97) % 1801;
        let (counts, exact_value, tally) = if case % 4 == 3 {
            let records = severity(n, case);
            let d = SeverityDefinition::new([0.0, 250.0, 1000.0][case as usize % 3]).unwrap();
            let exact = exact_concordance(&records, &d);
            let tally = sample_tally(&records, &d, &SamplingConfig::new(n, case)).unwrap();
            (exact_counts(&records, &d), exact.map(|e| e.value), tally)
        } else {
            let records = frequency(n, case);
            let contrast = FrequencyContrast::ALL[case as usize % 3];
            let d = def(contrast, [0.05, 0.1, 1.0][case as usize % 3]);
            let exact = exact_concordance(&records, &d);
            let tally = sample_tally(&records, &d, &SamplingConfig::new(n, case)).unwrap();
            (exact_counts(&records, &d), exact.map(|e| e.value), tally)
        };
        checked += 1;
        let sampled = estimate_from_tally(&tally).map(|e| e.value);
        let same_counts = tally.pair_counts() == counts;
        let same_value = match (&exact_value, &sampled) {
            (Ok(a), Ok(b)) => a.to_bits() == b.to_bits(),
            (Err(_), Err(_)) => true,
            _ => false,
        };
        if !(same_counts && same_value) {
            failures.push(case);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(10),
        format!(
            "{checked} datasets, mismatches {:?}, {:.2}s (limit 10s)",
            failures,
            elapsed.as_secs_f64()
        ),
    )
}

/// Clustering with k = distinct predictions and one bin equals the exact
/// concordance within 1e-12.
fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut failures = Vec::new();
    for case in 0..60u64 {
        let n = 100 + (case as usize * 131) % 1901;
        let records: Vec<FrequencyRecord> = frequency(n, 500 + case)
            .into_iter()
            .map(|r| FrequencyRecord { exposure: 1.0, ..r })
            .collect();
        let contrast = FrequencyContrast::ALL[case as usize % 3];
        let Ok(exact) = exact_concordance(&records, &def(contrast, 0.05)) else {
            continue;
        };
        let mut distinct: Vec<f64> = records.iter().map(|r| r.prediction).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let config = KMeansConfig {
            k: distinct.len(),
            exposure_bins: 1,
            seed: case,
            ..KMeansConfig::default()
        };
        let clustered = clustered_concordance(&records, contrast, &config).unwrap();
        let diff = (clustered.value - exact.value).abs();
        worst = worst.max(diff);
        checked += 1;
        if diff > 1e-12 {
            failures.push(case);
        }
    }
    outcome(
        checked >= 50 && failures.is_empty(),
        format!("{checked} datasets, max |diff| {worst:.2e} (tol 1e-12), failures {failures:?}"),
    )
}

/// Empirical coverage of the 95% interval against the exhaustive truth.
fn criterion_3() -> Outcome {
    let start = Instant::now();
    let replicates = 500;
    let mut covered = 0;
    let mut widths = 0.0;
    let mut valid = 0;
    for rep in 0..replicates as u64 {
        let records = frequency(5_000, 10_000 + rep);
        let d = def(FrequencyContrast::ZeroVsOnePlus, 0.05);
        let truth = exact_concordance(&records, &d).unwrap().value;
        let estimate = sampled_concordance(&records, &d, &SamplingConfig::new(1_000, rep)).unwrap();
        if let Some(ci) = estimate.ci {
            valid += 1;
            widths += ci.width();
            if ci.contains(truth) {
                covered += 1;
            }
        }
    }
    let coverage = covered as f64 / replicates as f64;
    let elapsed = start.elapsed();
    outcome(
        (0.90..=0.98).contains(&coverage) && elapsed < Duration::from_secs(300),
        format!(
            "coverage {:.3} over {replicates} replicates ({valid} with CI, mean width {:.4}), target [0.90, 0.98], {:.1}s (limit 300s)",
            coverage,
            widths / valid.max(1) as f64,
            elapsed.as_secs_f64()
        ),
    )
}

fn mean_width(records: &[FrequencyRecord], d: &FrequencyDefinition, s: usize, seeds: u64) -> f64 {
    (0..seeds)
        .map(|seed| {
            let tally = sample_tally(records, d, &SamplingConfig::new(s, seed)).unwrap();
            confidence_interval(&tally, 0.05).unwrap().width()
        })
        .sum::<f64>()
        / seeds as f64
}

/// Interval width shrinks with S and reaches the practical band at S = 20,000.
fn criterion_4(big: &[FrequencyRecord]) -> Outcome {
    let fixed = frequency(40_000, 404);
    let d = def(FrequencyContrast::ZeroVsOnePlus, 0.05);
    let widths: Vec<f64> = [500, 2_000, 8_000]
        .iter()
        .map(|&s| mean_width(&fixed, &d, s, 20))
        .collect();
    let decreasing = widths.windows(2).all(|w| w[1] < w[0]);
    let at_scale: Vec<f64> = FrequencyContrast::ALL
        .iter()
        .map(|&c| {
            let tally = sample_tally(big, &def(c, 0.05), &SamplingConfig::new(20_000, 42)).unwrap();
            confidence_interval(&tally, 0.05).unwrap().width()
        })
        .collect();
    outcome(
        decreasing && at_scale[0] <= 0.02,
        format!(
            "mean widths S=500/2000/8000: {:.4}/{:.4}/{:.4}; width at S=20000 on 160k rows: C01+ {:.4} (limit 0.02) [C02+ {:.4}, C12+ {:.4}]",
            widths[0], widths[1], widths[2], at_scale[0], at_scale[1], at_scale[2]
        ),
    )
}

fn brute_force_severity(records: &[SeverityRecord]) -> (u64, u64) {
    let (mut concordant, mut comparable) = (0, 0);
    for a in records {
        for b in records {
            if a.claim_size < b.claim_size && a.prediction != b.prediction {
                comparable += 1;
                if b.prediction > a.prediction {
                    concordant += 1;
                }
            }
        }
    }
    (concordant, comparable)
}

/// C(0) is the concordance over all strictly ordered claim pairs, and the
/// three-claim example gives 2/3 and 1.
fn criterion_5() -> Outcome {
    let mut ok = true;
    for seed in 0..5 {
        let records = severity(1_500, 70 + seed);
        let (c, t) = brute_force_severity(&records);
        let est = severity_concordance(&records, 0.0, &Engine::Exact).unwrap();
        let counts = est.counts().unwrap();
        ok &= counts.concordant() == c && counts.comparable() == t;
        ok &= est.value.to_bits() == (c as f64 / t as f64).to_bits();
    }
    let three: Vec<SeverityRecord> = [(100.0, 120.0), (150.0, 110.0), (400.0, 300.0)]
        .iter()
        .map(|&(y, p)| SeverityRecord::new(y, p).unwrap())
        .collect();
    let at_0 = severity_concordance(&three, 0.0, &Engine::Exact)
        .unwrap()
        .value;
    let at_100 = severity_concordance(&three, 100.0, &Engine::Exact)
        .unwrap()
        .value;
    ok &= at_0 == 2.0 / 3.0 && at_100 == 1.0;
    outcome(
        ok,
        format!("C(0) matches all-ordered-pairs count on 5 datasets; worked example C(0)={at_0:.6}, C(100)={at_100}"),
    )
}

fn best_of<T>(runs: usize, mut f: impl FnMut() -> T) -> (T, Duration) {
    let mut best = Duration::MAX;
    let mut out = None;
    for _ in 0..runs {
        let start = Instant::now();
        let value = f();
        best = best.min(start.elapsed());
        out = Some(value);
    }
    (out.unwrap(), best)
}

/// Sampled and clustered estimates agree at scale and clustering is cheap.
fn criterion_6(big: &[FrequencyRecord]) -> Outcome {
    let contrast = FrequencyContrast::ZeroVsOnePlus;
    let (sampled, sampled_time) = best_of(3, || {
        sampled_concordance(big, &def(contrast, 0.05), &SamplingConfig::new(20_000, 42)).unwrap()
    });
    let config = KMeansConfig {
        k: 50,
        exposure_bins: 15,
        seed: 42,
        ..KMeansConfig::default()
    };
    let (clustered, clustered_time) =
        best_of(3, || clustered_concordance(big, contrast, &config).unwrap());
    let gap = (sampled.value - clustered.value).abs();
    let ratio = clustered_time.as_secs_f64() / sampled_time.as_secs_f64();
    outcome(
        gap <= 0.01 && ratio < 0.10,
        format!(
            "sampled {:.4} ({:.3}s) vs clustered {:.4} ({:.3}s): |gap| {:.4} (limit 0.01), time ratio {:.3} (limit 0.10)",
            sampled.value,
            sampled_time.as_secs_f64(),
            clustered.value,
            clustered_time.as_secs_f64(),
            gap,
            ratio
        ),
    )
}

/// Coarse clustering does not estimate above fine clustering on average.
fn criterion_7(big: &[FrequencyRecord]) -> Outcome {
    let mean_at = |k: usize| {
        (0..20u64)
            .map(|seed| {
                let config = KMeansConfig {
                    k,
                    exposure_bins: 15,
                    reruns: 1,
                    seed,
                    ..KMeansConfig::default()
                };
                clustered_concordance(big, FrequencyContrast::ZeroVsOnePlus, &config)
                    .unwrap()
                    .value
            })
            .sum::<f64>()
            / 20.0
    };
    let coarse = mean_at(10);
    let fine = mean_at(50);
    outcome(
        coarse <= fine,
        format!("mean over 20 seeds: k=10 {coarse:.5}, k=50 {fine:.5}"),
    )
}

fn arb_frequency() -> impl Strategy<Value = Vec<FrequencyRecord>> {
    prop::collection::vec(
        (0u32..4, 1u32..=10, 1u32..=1000).prop_map(|(c, e, p)| FrequencyRecord {
            claim_count: c,
            exposure: e as f64 / 10.0,
            prediction: p as f64 / 1000.0,
        }),
        2..40,
    )
}

fn arb_contrast() -> impl Strategy<Value = FrequencyContrast> {
    prop::sample::select(FrequencyContrast::ALL.to_vec())
}

/// Property suites, 1,000 cases each.
fn criterion_8() -> Outcome {
    let config = Config {
        cases: 1_000,
        failure_persistence: None,
        ..Config::default()
    };
    let mut results: Vec<(&str, Result<(), String>)> = Vec::new();

    let mut runner = TestRunner::new(config.clone());
    results.push((
        "rank invariance",
        runner
            .run(&(arb_frequency(), arb_contrast()), |(records, contrast)| {
                let d = def(contrast, 0.1);
                let moved: Vec<_> = records
                    .iter()
                    .map(|r| FrequencyRecord {
                        prediction: (5.0 * r.prediction).exp() + r.prediction.powi(3),
                        ..*r
                    })
                    .collect();
                let (a, b) = (
                    exact_concordance(&records, &d),
                    exact_concordance(&moved, &d),
                );
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        prop_assert_eq!(a.counts(), b.counts());
                        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
                    }
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "one side failed"),
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    ));

    let mut runner = TestRunner::new(config.clone());
    results.push((
        "label-swap symmetry",
        runner
            .run(&(arb_frequency(), arb_contrast()), |(records, contrast)| {
                let d = def(contrast, 0.1);
                let swapped: Vec<_> = records
                    .iter()
                    .map(|r| FrequencyRecord {
                        prediction: 1.0 / r.prediction,
                        ..*r
                    })
                    .collect();
                let a = exact_counts(&records, &d);
                let b = exact_counts(&swapped, &d);
                prop_assert_eq!(a.concordant(), b.discordant());
                prop_assert_eq!(a.discordant(), b.concordant());
                if a.tied() == 0 && a.comparable() > 0 {
                    let ca = exact_concordance(&records, &d).unwrap().value;
                    let cb = exact_concordance(&swapped, &d).unwrap().value;
                    prop_assert!((cb - (1.0 - ca)).abs() <= f64::EPSILON);
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    ));

    let mut runner = TestRunner::new(config.clone());
    results.push((
        "weight normalization",
        runner
            .run(
                &(
                    prop::collection::vec(1e-4f64..5.0, 1..300),
                    1usize..60,
                    any::<u64>(),
                ),
                |(values, k, seed)| {
                    let cfg = KMeansConfig {
                        seed,
                        ..KMeansConfig::default()
                    };
                    let clusters = kmeans_1d(&values, k, &cfg).unwrap();
                    let total: f64 = clusters.iter().map(|c| c.weight).sum();
                    prop_assert!((total - 1.0).abs() <= 1e-12);
                    Ok(())
                },
            )
            .map_err(|e| e.to_string()),
    ));

    let mut runner = TestRunner::new(config.clone());
    results.push((
        "seed determinism",
        runner
            .run(
                &(arb_frequency(), arb_contrast(), any::<u64>(), 1usize..40),
                |(records, contrast, seed, s)| {
                    let d = def(contrast, 0.2);
                    let cfg = SamplingConfig::new(s, seed);
                    prop_assert_eq!(
                        sample_tally(&records, &d, &cfg).unwrap(),
                        sample_tally(&records, &d, &cfg).unwrap()
                    );
                    let kcfg = KMeansConfig {
                        k: 3,
                        exposure_bins: 2,
                        reruns: 2,
                        seed,
                        ..KMeansConfig::default()
                    };
                    let a = clustered_concordance(&records, contrast, &kcfg).ok();
                    let b = clustered_concordance(&records, contrast, &kcfg).ok();
                    prop_assert_eq!(a.map(|e| e.value.to_bits()), b.map(|e| e.value.to_bits()));
                    Ok(())
                },
            )
            .map_err(|e| e.to_string()),
    ));

    let mut runner = TestRunner::new(config);
    results.push((
        "component identity",
        runner
            .run(
                &prop::collection::vec((0u64..500, 0u64..500), 1..200),
                |raw| {
                    let counts: Vec<(u64, u64)> =
                        raw.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
                    let tally = SampleTally::from_counts(&counts).unwrap();
                    if tally.total_comparable() == 0 {
                        return Ok(());
                    }
                    let v = VarianceComponents::from_tally(&tally).unwrap();
                    let rhs = tally
                        .entries()
                        .iter()
                        .filter(|e| e.comparable > 0)
                        .map(|e| e.comparable)
                        .sum::<u64>() as f64
                        / tally.total_comparable() as f64;
                    prop_assert!((v.pi_cc + 2.0 * v.pi_cd + v.pi_dd - rhs).abs() <= 1e-12);
                    prop_assert!((v.pi_c + v.pi_d - 1.0).abs() <= 1e-15);
                    Ok(())
                },
            )
            .map_err(|e| e.to_string()),
    ));

    let failed: Vec<String> = results
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!(
                "{} suites x 1000 cases passed ({})",
                results.len(),
                results
                    .iter()
                    .map(|(n, _)| *n)
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        } else {
            failed.join("; ")
        },
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let big = std::sync::OnceLock::new();
    let big = || big.get_or_init(|| frequency(160_000, 7)).as_slice();

    let criteria: Vec<Criterion> = vec![
        ("1 oracle equivalence", Box::new(criterion_1)),
        ("2 cluster-exhaustive equivalence", Box::new(criterion_2)),
        ("3 CI coverage", Box::new(criterion_3)),
        ("4 CI width behavior", Box::new(|| criterion_4(big()))),
        ("5 severity identity", Box::new(criterion_5)),
        (
            "6 approximation agreement at scale",
            Box::new(|| criterion_6(big())),
        ),
        ("7 coarseness bias pattern", Box::new(|| criterion_7(big()))),
        ("8 invariant suite", Box::new(criterion_8)),
    ];

    let mut failed = 0;
    for (name, run) in &criteria {
        if let Some(f) = &filter {
            if !name.contains(f.as_str()) {
                continue;
            }
        }
        let start = Instant::now();
        let result = run();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {name}: {} ({:.1}s)",
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
