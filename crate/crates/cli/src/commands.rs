use std::fs;
use std::io::Write;
use std::time::Instant;

use concord_core::dataset::write_csv;
use concord_core::report::{
    BenchCell, BenchTable, CurveRow, InputEcho, ReportBody, RunParameters, RunReport,
};
use concord_core::sampling::{
    SamplingConfig, DEFAULT_FREQUENCY_SAMPLE_SIZE, DEFAULT_SEVERITY_SAMPLE_SIZE,
};
use concord_core::severity::default_threshold_grid;
use concord_core::{
    generate_synthetic, global_frequency_concordance, ingest_csv, local_frequency_curve,
    severity_concordance, severity_curve, ConcordError, ConcordanceEstimate, Dataset, DatasetKind,
    Engine, KMeansConfig, LocalCurveConfig, Result, SeverityCurveConfig,
};

use crate::args::{
    BenchArgs, EngineArgs, FreqArgs, FreqCurveArgs, InputArgs, MethodArg, OutputArgs, OutputFormat,
    SevArgs, SevCurveArgs, SynthArgs,
};

fn load(input: &InputArgs, kind: DatasetKind) -> Result<Dataset> {
    let dataset = ingest_csv(&input.input, kind, &input.columns())?;
    if dataset.source.rejected > 0 {
        log::warn!(
            "{} of {} rows rejected",
            dataset.source.rejected,
            dataset.source.rows
        );
    }
    Ok(dataset)
}

/// Severity has no exposure bins to cluster within; fail before loading.
fn severity_engine(args: &EngineArgs) -> Result<Engine> {
    if args.method == MethodArg::Kmeans {
        return Err(ConcordError::UnsupportedEngine {
            engine: "kmeans",
            definition: "severity",
        });
    }
    build_engine(args, DEFAULT_SEVERITY_SAMPLE_SIZE)
}

fn build_engine(args: &EngineArgs, default_sample: usize) -> Result<Engine> {
    let engine = match args.method {
        MethodArg::Exact => Engine::Exact,
        MethodArg::Sample => {
            let config = SamplingConfig::new(args.sample_size.unwrap_or(default_sample), args.seed)
                .with_alpha(args.alpha);
            config.validate()?;
            Engine::Sampled(config)
        }
        MethodArg::Kmeans => {
            let config = KMeansConfig {
                k: args.k,
                exposure_bins: args.bins,
                reruns: args.reruns,
                max_iter: args.max_iter,
                seed: args.seed,
                algorithm: args.algorithm.into(),
                binning: args.binning(),
                ties: args.ties(),
                ..KMeansConfig::default()
            };
            config.validate()?;
            Engine::Clustered(config)
        }
    };
    Ok(engine)
}

/// A finished run: the report plus how to render it.
pub struct Outcome {
    pub report: RunReport,
    pub output: Option<(OutputFormat, Option<std::path::PathBuf>)>,
}

fn finish(
    command: &str,
    args: Vec<String>,
    parameters: RunParameters,
    dataset: Option<&Dataset>,
    result: ReportBody,
    output: &OutputArgs,
    start: Instant,
) -> Outcome {
    let mut report = RunReport::new(command, args, parameters, result);
    report.input = dataset.map(InputEcho::from_dataset);
    report.duration_seconds = start.elapsed().as_secs_f64();
    Outcome {
        report,
        output: Some((output.output, output.out_file.clone())),
    }
}

pub fn freq(a: &FreqArgs, argv: Vec<String>) -> Result<Outcome> {
    let start = Instant::now();
    let engine = build_engine(&a.engine, DEFAULT_FREQUENCY_SAMPLE_SIZE)?;
    let dataset = load(&a.input, DatasetKind::Frequency)?;
    let records = dataset.frequency().expect("frequency dataset");
    let estimate = global_frequency_concordance(records, a.contrast, a.tol, &engine)?;
    let parameters = RunParameters {
        contrast: Some(a.contrast),
        exposure_tol: Some(a.tol),
        engine: Some(engine),
        ..RunParameters::default()
    };
    Ok(finish(
        "freq",
        argv,
        parameters,
        Some(&dataset),
        ReportBody::Estimate { estimate },
        &a.output,
        start,
    ))
}

pub fn freq_curve(a: &FreqCurveArgs, argv: Vec<String>) -> Result<Outcome> {
    let start = Instant::now();
    let engine = build_engine(&a.engine, DEFAULT_FREQUENCY_SAMPLE_SIZE)?;
    let mut config = LocalCurveConfig {
        window: a.window,
        min_pairs: a.min_pairs,
        ..LocalCurveConfig::default()
    };
    if let Some(grid) = &a.grid {
        config.lambda_grid = grid.clone();
    }
    config.validate()?;
    let dataset = load(&a.input, DatasetKind::Frequency)?;
    let records = dataset.frequency().expect("frequency dataset");
    let points = local_frequency_curve(records, a.contrast, &config, &engine)?;
    let parameters = RunParameters {
        contrast: Some(a.contrast),
        engine: Some(engine),
        grid: Some(config.lambda_grid.clone()),
        window: Some(config.window),
        min_pairs: Some(config.min_pairs),
        ..RunParameters::default()
    };
    Ok(finish(
        "freq-curve",
        argv,
        parameters,
        Some(&dataset),
        ReportBody::Curve {
            points: points.iter().map(CurveRow::from).collect(),
        },
        &a.output,
        start,
    ))
}

pub fn sev(a: &SevArgs, argv: Vec<String>) -> Result<Outcome> {
    let start = Instant::now();
    let engine = severity_engine(&a.engine)?;
    let dataset = load(&a.input, DatasetKind::Severity)?;
    let records = dataset.severity().expect("severity dataset");
    let estimate = severity_concordance(records, a.v, &engine)?;
    let parameters = RunParameters {
        engine: Some(engine),
        v: Some(a.v),
        ..RunParameters::default()
    };
    Ok(finish(
        "sev",
        argv,
        parameters,
        Some(&dataset),
        ReportBody::Estimate { estimate },
        &a.output,
        start,
    ))
}

pub fn sev_curve(a: &SevCurveArgs, argv: Vec<String>) -> Result<Outcome> {
    let start = Instant::now();
    let engine = severity_engine(&a.engine)?;
    let dataset = load(&a.input, DatasetKind::Severity)?;
    let records = dataset.severity().expect("severity dataset");
    let v_grid = match &a.grid {
        Some(grid) => grid.clone(),
        None => default_threshold_grid(records, a.engine.seed),
    };
    let config = SeverityCurveConfig { v_grid, engine };
    let points = severity_curve(records, &config)?;
    let parameters = RunParameters {
        engine: Some(engine),
        grid: Some(config.v_grid),
        ..RunParameters::default()
    };
    Ok(finish(
        "sev-curve",
        argv,
        parameters,
        Some(&dataset),
        ReportBody::Curve {
            points: points.iter().map(CurveRow::from).collect(),
        },
        &a.output,
        start,
    ))
}

fn bench_cell(
    method: &str,
    engine: Engine,
    run: impl FnOnce() -> Result<ConcordanceEstimate>,
) -> BenchCell {
    let start = Instant::now();
    let result = run();
    let seconds = start.elapsed().as_secs_f64();
    let (k, bins, reruns, sample_size) = match engine {
        Engine::Clustered(c) => (Some(c.k), Some(c.exposure_bins), Some(c.reruns), None),
        Engine::Sampled(c) => (None, None, None, Some(c.sample_size)),
        Engine::Exact => (None, None, None, None),
    };
    let (estimate, ci, error) = match result {
        Ok(e) => (Some(e.value), e.ci, None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    BenchCell {
        method: method.to_string(),
        k,
        bins,
        reruns,
        sample_size,
        estimate,
        ci_lower: ci.map(|c| c.lower),
        ci_upper: ci.map(|c| c.upper),
        seconds,
        error,
    }
}

pub fn bench(a: &BenchArgs, argv: Vec<String>) -> Result<Outcome> {
    let start = Instant::now();
    let sampling = SamplingConfig::new(a.sample_size, a.seed).with_alpha(a.alpha);
    sampling.validate()?;
    let dataset = load(&a.input, DatasetKind::Frequency)?;
    let records = dataset.frequency().expect("frequency dataset");

    let mut cells = Vec::new();
    for method in &a.methods {
        match method {
            MethodArg::Kmeans => {
                for &k in &a.k {
                    for &reruns in &a.reruns {
                        for &bins in &a.bins {
                            let config = KMeansConfig {
                                k,
                                exposure_bins: bins,
                                reruns,
                                seed: a.seed,
                                algorithm: a.algorithm.into(),
                                ..KMeansConfig::default()
                            };
                            config.validate()?;
                            let engine = Engine::Clustered(config);
                            cells.push(bench_cell("kmeans", engine, || {
                                global_frequency_concordance(records, a.contrast, a.tol, &engine)
                            }));
                        }
                    }
                }
            }
            MethodArg::Sample | MethodArg::Exact => {
                let engine = if *method == MethodArg::Sample {
                    Engine::Sampled(sampling)
                } else {
                    Engine::Exact
                };
                cells.push(bench_cell(engine.name(), engine, || {
                    global_frequency_concordance(records, a.contrast, a.tol, &engine)
                }));
            }
        }
    }
    for cell in &cells {
        if let Some(err) = &cell.error {
            log::warn!("{} cell failed: {err}", cell.method);
        }
    }
    let parameters = RunParameters {
        contrast: Some(a.contrast),
        exposure_tol: Some(a.tol),
        ..RunParameters::default()
    };
    Ok(finish(
        "bench",
        argv,
        parameters,
        Some(&dataset),
        ReportBody::Bench {
            table: BenchTable {
                contrast: a.contrast,
                cells,
            },
        },
        &a.output,
        start,
    ))
}

pub fn synth(a: &SynthArgs, argv: Vec<String>) -> Result<Outcome> {
    let start = Instant::now();
    if a.n == 0 {
        return Err(ConcordError::InvalidConfig("n must be at least 1".into()));
    }
    let dataset = generate_synthetic(a.n, a.scenario.into(), a.seed);
    let mut report = RunReport::new(
        "synth",
        argv,
        RunParameters::default(),
        ReportBody::Synth {
            scenario: concord_core::Scenario::from(a.scenario).to_string(),
            n: a.n,
            seed: a.seed,
        },
    );
    report.input = Some(InputEcho::from_dataset(&dataset));
    match &a.out_file {
        Some(path) => {
            write_csv(&dataset, fs::File::create(path)?)?;
            report.duration_seconds = start.elapsed().as_secs_f64();
            Ok(Outcome {
                report,
                output: Some((OutputFormat::Json, None)),
            })
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&dataset, &mut lock)?;
            lock.flush()?;
            Ok(Outcome {
                report,
                output: None,
            })
        }
    }
}

/// Plain-text rendering for terminals.
pub fn render_text(report: &RunReport) -> String {
    match &report.result {
        ReportBody::Estimate { estimate } => {
            let label = match report.parameters.contrast {
                Some(c) => format!("C{c}"),
                None => format!("C(v={})", report.parameters.v.unwrap_or(0.0)),
            };
            let ci = estimate
                .ci
                .map(|c| format!(" [{:.4}, {:.4}]", c.lower, c.upper))
                .unwrap_or_default();
            format!(
                "{label} = {:.4}{ci}  ({:?}, {} pairs, {:.2}s)\n",
                estimate.value,
                estimate.method,
                estimate.support.comparable_pairs(),
                report.duration_seconds
            )
        }
        ReportBody::Curve { points } => {
            let mut out = String::from("x          value    lower    upper    pairs\n");
            for p in points {
                let f = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
                out.push_str(&format!(
                    "{:<10.4} {:>6}   {:>6}   {:>6}   {}{}\n",
                    p.x,
                    f(p.value),
                    f(p.ci_lower),
                    f(p.ci_upper),
                    p.n_pairs,
                    if p.status == "ok" {
                        String::new()
                    } else {
                        format!("  ({})", p.status)
                    }
                ));
            }
            out
        }
        ReportBody::Bench { table } => table.render_text(),
        ReportBody::Synth { scenario, n, seed } => {
            format!("{scenario}: {n} records, seed {seed}\n")
        }
    }
}
