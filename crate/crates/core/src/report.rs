//! Versioned run reports and their JSON / CSV renderings.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetKind};
use crate::estimate::ConcordanceEstimate;
use crate::frequency::{CurvePoint, Engine, PointOutcome};
use crate::pairs::FrequencyContrast;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub path: Option<PathBuf>,
    pub kind: DatasetKind,
    pub rows: usize,
    pub rejected: usize,
    pub accepted: usize,
    /// SHA-256 of the accepted records in canonical CSV form.
    pub digest: String,
}

impl InputEcho {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        Self {
            path: dataset.source.path.clone(),
            kind: dataset.kind(),
            rows: dataset.source.rows,
            rejected: dataset.source.rejected,
            accepted: dataset.records.len(),
            digest: dataset.digest(),
        }
    }
}

/// Resolved parameters of a run (defaults filled in).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunParameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast: Option<FrequencyContrast>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exposure_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<Engine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_pairs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
}

/// One curve point in plot-ready form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub x: f64,
    pub value: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub n_pairs: u64,
    pub status: String,
}

impl From<&CurvePoint> for CurveRow {
    fn from(point: &CurvePoint) -> Self {
        match &point.outcome {
            PointOutcome::Estimate(e) => CurveRow {
                x: point.x,
                value: Some(e.value),
                ci_lower: e.ci.map(|c| c.lower),
                ci_upper: e.ci.map(|c| c.upper),
                n_pairs: e.support.comparable_pairs(),
                status: "ok".into(),
            },
            PointOutcome::InsufficientPairs { comparable } => CurveRow {
                x: point.x,
                value: None,
                ci_lower: None,
                ci_upper: None,
                n_pairs: *comparable,
                status: "insufficient-pairs".into(),
            },
            PointOutcome::NoComparablePairs => CurveRow {
                x: point.x,
                value: None,
                ci_lower: None,
                ci_upper: None,
                n_pairs: 0,
                status: "no-comparable-pairs".into(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub method: String,
    pub k: Option<usize>,
    pub bins: Option<usize>,
    pub reruns: Option<usize>,
    pub sample_size: Option<usize>,
    pub estimate: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub seconds: f64,
    pub error: Option<String>,
}

/// Estimates and timings over a grid of engine settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub contrast: FrequencyContrast,
    pub cells: Vec<BenchCell>,
}

impl BenchTable {
    /// Text table: one row per (k, reruns), one column per bin count, each
    /// cell `estimate (seconds)`; sampled runs are listed underneath.
    pub fn render_text(&self) -> String {
        let mut bins: Vec<usize> = self.cells.iter().filter_map(|c| c.bins).collect();
        bins.sort_unstable();
        bins.dedup();
        let mut rows: Vec<(usize, usize)> = self
            .cells
            .iter()
            .filter_map(|c| Some((c.k?, c.reruns?)))
            .collect();
        rows.dedup();

        let fmt_cell = |cell: Option<&BenchCell>| match cell {
            Some(BenchCell {
                estimate: Some(e),
                seconds,
                ..
            }) => format!("{e:.3} ({seconds:.1})"),
            Some(_) => "error".to_string(),
            None => "-".to_string(),
        };

        let mut out = String::new();
        let _ = write!(out, "C{:<12}", self.contrast);
        for b in &bins {
            let _ = write!(out, "{:>16}", format!("bins={b}"));
        }
        out.push('\n');
        for &(k, reruns) in &rows {
            let _ = write!(out, "{:<13}", format!("k={k} ({reruns})"));
            for &b in &bins {
                let cell = self
                    .cells
                    .iter()
                    .find(|c| c.k == Some(k) && c.reruns == Some(reruns) && c.bins == Some(b));
                let _ = write!(out, "{:>16}", fmt_cell(cell));
            }
            out.push('\n');
        }
        for cell in self.cells.iter().filter(|c| c.sample_size.is_some()) {
            let ci = match (cell.ci_lower, cell.ci_upper) {
                (Some(l), Some(u)) => format!(" [{l:.3}, {u:.3}]"),
                _ => String::new(),
            };
            let _ = writeln!(
                out,
                "sample S={}: {}{}",
                cell.sample_size.unwrap_or(0),
                fmt_cell(Some(cell)),
                ci
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ReportBody {
    Estimate {
        estimate: ConcordanceEstimate,
    },
    Curve {
        points: Vec<CurveRow>,
    },
    Bench {
        table: BenchTable,
    },
    Synth {
        scenario: String,
        n: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub library_version: String,
    pub command: String,
    /// Command-line arguments after the program name.
    pub args: Vec<String>,
    pub parameters: RunParameters,
    pub input: Option<InputEcho>,
    pub duration_seconds: f64,
    pub result: ReportBody,
}

impl RunReport {
    pub fn new(
        command: &str,
        args: Vec<String>,
        parameters: RunParameters,
        result: ReportBody,
    ) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            library_version: LIBRARY_VERSION.to_string(),
            command: command.to_string(),
            args,
            parameters,
            input: None,
            duration_seconds: 0.0,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Result rows as CSV; parameters and provenance are only in JSON.
    pub fn to_csv(&self) -> String {
        fn opt(x: Option<f64>) -> String {
            x.map(|v| v.to_string()).unwrap_or_default()
        }
        fn opt_usize(x: Option<usize>) -> String {
            x.map(|v| v.to_string()).unwrap_or_default()
        }
        let mut out = String::new();
        match &self.result {
            ReportBody::Estimate { estimate } => {
                out.push_str("method,value,ci_lower,ci_upper,n_pairs\n");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    serde_json::to_value(estimate.method)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        .unwrap_or_default(),
                    estimate.value,
                    opt(estimate.ci.map(|c| c.lower)),
                    opt(estimate.ci.map(|c| c.upper)),
                    estimate.support.comparable_pairs()
                );
            }
            ReportBody::Curve { points } => {
                out.push_str("x,value,ci_lower,ci_upper,n_pairs\n");
                for p in points {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        p.x,
                        opt(p.value),
                        opt(p.ci_lower),
                        opt(p.ci_upper),
                        p.n_pairs
                    );
                }
            }
            ReportBody::Bench { table } => {
                out.push_str(
                    "method,k,bins,reruns,sample_size,estimate,ci_lower,ci_upper,seconds\n",
                );
                for c in &table.cells {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{}",
                        c.method,
                        opt_usize(c.k),
                        opt_usize(c.bins),
                        opt_usize(c.reruns),
                        opt_usize(c.sample_size),
                        opt(c.estimate),
                        opt(c.ci_lower),
                        opt(c.ci_upper),
                        c.seconds
                    );
                }
            }
            ReportBody::Synth { scenario, n, seed } => {
                out.push_str("scenario,n,seed\n");
                let _ = writeln!(out, "{scenario},{n},{seed}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{ConfidenceInterval, EstimateMeta, Method, Support};
    use crate::pairs::PairCounts;

    fn estimate() -> ConcordanceEstimate {
        ConcordanceEstimate {
            value: 0.6,
            method: Method::Sampled,
            support: Support::Pairs(PairCounts::from_parts(3, 2, 0)),
            ci: Some(ConfidenceInterval {
                lower: 0.5,
                upper: 0.7,
                alpha: 0.05,
            }),
            meta: EstimateMeta::default(),
        }
    }

    #[test]
    fn json_round_trip() {
        let report = RunReport::new(
            "freq",
            vec!["freq".into()],
            RunParameters::default(),
            ReportBody::Estimate {
                estimate: estimate(),
            },
        );
        let back: RunReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(json["result"]["type"], "estimate");
    }

    #[test]
    fn curve_rows() {
        let points = [
            CurvePoint {
                x: 0.5,
                outcome: PointOutcome::Estimate(estimate()),
            },
            CurvePoint {
                x: 1.0,
                outcome: PointOutcome::InsufficientPairs { comparable: 7 },
            },
        ];
        let rows: Vec<CurveRow> = points.iter().map(CurveRow::from).collect();
        assert_eq!(rows[0].n_pairs, 5);
        assert_eq!(rows[1].status, "insufficient-pairs");
        let report = RunReport::new(
            "freq-curve",
            vec![],
            RunParameters::default(),
            ReportBody::Curve { points: rows },
        );
        let csv = report.to_csv();
        assert_eq!(
            csv,
            "x,value,ci_lower,ci_upper,n_pairs\n0.5,0.6,0.5,0.7,5\n1,,,,7\n"
        );
    }

    #[test]
    fn bench_text_layout() {
        let cell = |k, bins, e| BenchCell {
            method: "kmeans".into(),
            k: Some(k),
            bins: Some(bins),
            reruns: Some(1),
            sample_size: None,
            estimate: Some(e),
            ci_lower: None,
            ci_upper: None,
            seconds: 0.25,
            error: None,
        };
        let table = BenchTable {
            contrast: FrequencyContrast::ZeroVsOnePlus,
            cells: vec![cell(10, 8, 0.61), cell(10, 15, 0.62), cell(50, 8, 0.63)],
        };
        let text = table.render_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("bins=8") && lines[0].contains("bins=15"));
        assert!(lines[1].contains("0.610 (0.2)") || lines[1].contains("0.610 (0.3)"));
        assert!(lines[2].trim_end().ends_with('-'));
    }
}
