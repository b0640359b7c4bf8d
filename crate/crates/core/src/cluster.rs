//! Centroid approximation of the frequency concordance.
//!
//! Each group's predictions are summarised by `k` one-dimensional k-means
//! centroids with empirical weights; the concordance then reduces to a
//! weighted comparison of every group-B centroid against every group-A
//! centroid. Exposure matching is handled by splitting the pooled exposure
//! distribution into bins and treating every cross-group pair inside a bin
//! as admissible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConcordError, Result};
use crate::estimate::{ConcordanceEstimate, EstimateMeta, Method, Support};
use crate::pairs::{FrequencyContrast, FrequencyRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KMeansAlgorithm {
    /// Lloyd iterations from k-means++ seeds, best of `reruns`.
    Lloyd,
    /// Globally optimal 1-D partition by dynamic programming. Deterministic,
    /// ignores `reruns`.
    Optimal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinScheme {
    /// Equal-frequency splits of the pooled exposure distribution.
    Quantile,
    EqualWidth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CentroidTies {
    /// Equal centroids add nothing to the concordant mass.
    Strict,
    /// Equal centroids add half their weight.
    HalfCredit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub exposure_bins: usize,
    pub reruns: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub algorithm: KMeansAlgorithm,
    pub binning: BinScheme,
    pub ties: CentroidTies,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 50,
            exposure_bins: 15,
            reruns: 1,
            max_iter: 100,
            tol: 1e-9,
            seed: 0,
            algorithm: KMeansAlgorithm::Lloyd,
            binning: BinScheme::Quantile,
            ties: CentroidTies::Strict,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(ConcordError::InvalidConfig(msg.to_string()));
        if self.k == 0 {
            return fail("k must be at least 1");
        }
        if self.exposure_bins == 0 {
            return fail("exposure_bins must be at least 1");
        }
        if self.reruns == 0 {
            return fail("reruns must be at least 1");
        }
        if self.max_iter == 0 {
            return fail("max_iter must be at least 1");
        }
        if !(self.tol > 0.0) {
            return fail("tol must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub centroid: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub group_a: Vec<Cluster>,
    pub group_b: Vec<Cluster>,
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

impl ClusterSummary {
    /// For each group-B centroid: group-A weight strictly below it and tied
    /// with it. Uses sorted prefix sums, so the cost is O(k log k).
    fn group_a_split(&self) -> (Vec<(f64, f64)>, f64) {
        let mut a = self.group_a.clone();
        a.sort_by(|x, y| x.centroid.total_cmp(&y.centroid));
        let mut prefix = Vec::with_capacity(a.len() + 1);
        let mut acc = CompensatedSum::default();
        prefix.push(0.0);
        for c in &a {
            acc.add(c.weight);
            prefix.push(acc.value());
        }
        let split = self
            .group_b
            .iter()
            .map(|b| {
                let lo = a.partition_point(|c| c.centroid < b.centroid);
                let hi = a.partition_point(|c| c.centroid <= b.centroid);
                (prefix[lo], prefix[hi] - prefix[lo])
            })
            .collect();
        (split, acc.value())
    }

    /// Weighted mass of centroid pairs with the group-B centroid above the
    /// group-A centroid, over all `k_a x k_b` combinations.
    pub fn concordant_mass(&self, ties: CentroidTies) -> f64 {
        let (split, _) = self.group_a_split();
        let mut mass = CompensatedSum::default();
        for (b, (below, tied)) in self.group_b.iter().zip(split) {
            mass.add(b.weight * below);
            if ties == CentroidTies::HalfCredit {
                mass.add(0.5 * b.weight * tied);
            }
        }
        mass.value()
    }

    /// Weighted mass of centroid pairs that are not tied.
    pub fn decisive_mass(&self) -> f64 {
        let (split, total_a) = self.group_a_split();
        let mut mass = CompensatedSum::default();
        for (b, (_, tied)) in self.group_b.iter().zip(split) {
            if tied < total_a {
                mass.add(b.weight * (total_a - tied));
            }
        }
        mass.value()
    }
}

/// One exposure bin of the clustered estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub lower: f64,
    pub upper: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// `None` when the bin lacks one of the groups.
    pub clusters: Option<ClusterSummary>,
}

/// SplitMix64 finaliser applied to `seed + stream`; used to derive
/// independent RNG streams from one master seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sorted distinct values with multiplicities.
struct Points {
    values: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
    // prefix_count[i] / prefix_sum[i] cover values[..i]
    prefix_count: Vec<u64>,
    prefix_sum: Vec<f64>,
}

impl Points {
    fn new(raw: &[f64]) -> Self {
        let mut sorted = raw.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut values = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for x in sorted {
            if values.last() == Some(&x) {
                *counts.last_mut().unwrap() += 1;
            } else {
                values.push(x);
                counts.push(1);
            }
        }
        let mut prefix_count = Vec::with_capacity(values.len() + 1);
        let mut prefix_sum = Vec::with_capacity(values.len() + 1);
        let (mut c, mut s) = (0u64, 0.0f64);
        prefix_count.push(0);
        prefix_sum.push(0.0);
        for (&x, &n) in values.iter().zip(&counts) {
            c += n;
            s += n as f64 * x;
            prefix_count.push(c);
            prefix_sum.push(s);
        }
        Self {
            total: c,
            values,
            counts,
            prefix_count,
            prefix_sum,
        }
    }

    fn len(&self) -> usize {
        self.values.len()
    }

    /// Mean of the segment `values[start..end]`; `None` if empty.
    fn segment_mean(&self, start: usize, end: usize) -> Option<f64> {
        match end - start {
            0 => None,
            1 => Some(self.values[start]),
            _ => {
                let count = (self.prefix_count[end] - self.prefix_count[start]) as f64;
                let mean = (self.prefix_sum[end] - self.prefix_sum[start]) / count;
                // keep the mean inside the segment despite prefix-sum rounding
                Some(mean.clamp(self.values[start], self.values[end - 1]))
            }
        }
    }

    fn segment_count(&self, start: usize, end: usize) -> u64 {
        self.prefix_count[end] - self.prefix_count[start]
    }

    fn segment_sse(&self, start: usize, end: usize, centre: f64) -> f64 {
        (start..end)
            .map(|i| self.counts[i] as f64 * (self.values[i] - centre).powi(2))
            .sum()
    }
}

/// Partition of the sorted distinct values into contiguous segments.
struct Partition {
    /// `(start, end, centroid)` for non-empty segments, ascending.
    segments: Vec<(usize, usize, f64)>,
    wcss: f64,
}

impl Partition {
    fn from_bounds(points: &Points, bounds: &[(usize, usize)]) -> Self {
        let mut segments = Vec::with_capacity(bounds.len());
        let mut wcss = 0.0;
        for &(start, end) in bounds {
            if let Some(mean) = points.segment_mean(start, end) {
                wcss += points.segment_sse(start, end, mean);
                segments.push((start, end, mean));
            }
        }
        Self { segments, wcss }
    }

    fn clusters(&self, points: &Points) -> Vec<Cluster> {
        let total = points.total as f64;
        self.segments
            .iter()
            .map(|&(start, end, centroid)| Cluster {
                centroid,
                weight: points.segment_count(start, end) as f64 / total,
            })
            .collect()
    }
}

/// Nearest-centre assignment; `centres` ascending. Values on a midpoint go
/// to the lower centre.
fn assign(points: &Points, centres: &[f64]) -> Vec<(usize, usize)> {
    let mut bounds = Vec::with_capacity(centres.len());
    let mut start = 0;
    for pair in centres.windows(2) {
        let midpoint = 0.5 * (pair[0] + pair[1]);
        let end = start + points.values[start..].partition_point(|&v| v <= midpoint);
        bounds.push((start, end));
        start = end;
    }
    bounds.push((start, points.len()));
    bounds
}

/// Draws an index with probability proportional to `weight(i)`.
fn pick_weighted(
    rng: &mut ChaCha8Rng,
    len: usize,
    total: f64,
    weight: impl Fn(usize) -> f64,
) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for i in 0..len {
        let w = weight(i);
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if acc > target {
                return i;
            }
        }
    }
    last_positive
}

fn plus_plus_seeds(points: &Points, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = points.len();
    let first = pick_weighted(rng, m, points.total as f64, |i| points.counts[i] as f64);
    let mut centres = vec![points.values[first]];
    let mut d2: Vec<f64> = points
        .values
        .iter()
        .map(|&x| (x - points.values[first]).powi(2))
        .collect();
    while centres.len() < k {
        let total: f64 = (0..m).map(|i| points.counts[i] as f64 * d2[i]).sum();
        if !(total > 0.0) {
            break;
        }
        let next = pick_weighted(rng, m, total, |i| points.counts[i] as f64 * d2[i]);
        let centre = points.values[next];
        centres.push(centre);
        for (d, &x) in d2.iter_mut().zip(&points.values) {
            *d = d.min((x - centre).powi(2));
        }
    }
    centres.sort_by(f64::total_cmp);
    centres.dedup();
    centres
}

fn lloyd_run(points: &Points, k: usize, config: &KMeansConfig, seed: u64) -> Partition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centres = plus_plus_seeds(points, k, &mut rng);
    for _ in 0..config.max_iter {
        let bounds = assign(points, &centres);
        let mut shift: f64 = 0.0;
        let mut updated: Vec<f64> = bounds
            .iter()
            .zip(&centres)
            .map(|(&(start, end), &old)| {
                let new = points.segment_mean(start, end).unwrap_or(old);
                shift = shift.max((new - old).abs());
                new
            })
            .collect();
        updated.sort_by(f64::total_cmp);
        updated.dedup();
        centres = updated;
        if shift <= config.tol {
            break;
        }
    }
    Partition::from_bounds(points, &assign(points, &centres))
}

/// Exact minimum-WCSS partition into at most `k` contiguous segments.
/// Divide-and-conquer over the monotone split points, O(k m log m).
fn optimal_partition(points: &Points, k: usize) -> Partition {
    let m = points.len();
    let k = k.min(m);
    // centred prefix sums for the segment cost
    let shift = points.prefix_sum[m] / points.total as f64;
    let mut pw = vec![0.0; m + 1];
    let mut px = vec![0.0; m + 1];
    let mut pxx = vec![0.0; m + 1];
    for i in 0..m {
        let w = points.counts[i] as f64;
        let x = points.values[i] - shift;
        pw[i + 1] = pw[i] + w;
        px[i + 1] = px[i] + w * x;
        pxx[i + 1] = pxx[i] + w * x * x;
    }
    let cost = |j: usize, i: usize| -> f64 {
        // segment j..=i
        let w = pw[i + 1] - pw[j];
        let s = px[i + 1] - px[j];
        (pxx[i + 1] - pxx[j] - s * s / w).max(0.0)
    };

    let mut prev: Vec<f64> = (0..m).map(|i| cost(0, i)).collect();
    let mut splits: Vec<Vec<u32>> = vec![vec![0; m]];

    struct Layer<'a, F: Fn(usize, usize) -> f64> {
        prev: &'a [f64],
        cur: &'a mut [f64],
        arg: &'a mut [u32],
        cost: &'a F,
    }

    fn solve<F: Fn(usize, usize) -> f64>(
        layer: &mut Layer<'_, F>,
        lo: usize,
        hi: usize,
        opt_lo: usize,
        opt_hi: usize,
    ) {
        if lo > hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let mut best = f64::INFINITY;
        let mut best_j = opt_lo;
        for j in opt_lo..=opt_hi.min(mid) {
            let candidate = layer.prev[j - 1] + (layer.cost)(j, mid);
            if candidate < best {
                best = candidate;
                best_j = j;
            }
        }
        layer.cur[mid] = best;
        layer.arg[mid] = best_j as u32;
        if mid > lo {
            solve(layer, lo, mid - 1, opt_lo, best_j);
        }
        solve(layer, mid + 1, hi, best_j, opt_hi);
    }

    for q in 1..k {
        // q + 1 clusters; the first index that can hold them is q
        let mut cur = vec![f64::INFINITY; m];
        let mut arg = vec![0u32; m];
        {
            let mut layer = Layer {
                prev: &prev,
                cur: &mut cur,
                arg: &mut arg,
                cost: &cost,
            };
            solve(&mut layer, q, m - 1, q, m - 1);
        }
        prev = cur;
        splits.push(arg);
    }

    let mut bounds = Vec::with_capacity(k);
    let mut end = m;
    for q in (0..k).rev() {
        let start = if q == 0 {
            0
        } else {
            splits[q][end - 1] as usize
        };
        bounds.push((start, end));
        end = start;
    }
    bounds.reverse();
    Partition::from_bounds(points, &bounds)
}

fn cluster_points(points: &Points, k: usize, config: &KMeansConfig, seed: u64) -> Vec<Cluster> {
    let k = k.min(points.len());
    let best = match config.algorithm {
        KMeansAlgorithm::Optimal => optimal_partition(points, k),
        KMeansAlgorithm::Lloyd => (0..config.reruns)
            .into_par_iter()
            .map(|run| lloyd_run(points, k, config, derive_seed(seed, run as u64)))
            .collect::<Vec<_>>()
            .into_iter()
            // a later rerun only wins with a strictly lower WCSS
            .fold(None::<Partition>, |best, p| match best {
                Some(b) if b.wcss <= p.wcss => Some(b),
                _ => Some(p),
            })
            .expect("reruns >= 1"),
    };
    best.clusters(points)
}

/// One-dimensional k-means with empirical cluster weights. `k` is clamped
/// to the number of distinct values. `config.seed` drives the Lloyd seeding.
pub fn kmeans_1d(values: &[f64], k: usize, config: &KMeansConfig) -> Result<Vec<Cluster>> {
    if values.is_empty() {
        return Err(ConcordError::EmptyGroup { group: "values" });
    }
    if k == 0 {
        return Err(ConcordError::InvalidConfig("k must be at least 1".into()));
    }
    config.validate()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ConcordError::InvalidConfig(
            "k-means input must be finite".into(),
        ));
    }
    Ok(cluster_points(&Points::new(values), k, config, config.seed))
}

fn bin_edges(exposures: &mut [f64], bins: usize, scheme: BinScheme) -> Vec<f64> {
    exposures.sort_by(f64::total_cmp);
    let n = exposures.len();
    match scheme {
        BinScheme::Quantile => (1..bins)
            .map(|b| exposures[(b * n / bins).saturating_sub(1)])
            .collect(),
        BinScheme::EqualWidth => {
            let (lo, hi) = (exposures[0], exposures[n - 1]);
            (1..bins)
                .map(|b| lo + (hi - lo) * b as f64 / bins as f64)
                .collect()
        }
    }
}

/// Bins the exposure distribution and clusters both groups in every bin.
pub fn cluster_bins(
    records: &[FrequencyRecord],
    contrast: FrequencyContrast,
    config: &KMeansConfig,
) -> Result<Vec<BinSummary>> {
    config.validate()?;
    let members: Vec<(&FrequencyRecord, bool)> = records
        .iter()
        .filter_map(|r| {
            if contrast.in_group_a(r.claim_count) {
                Some((r, false))
            } else if contrast.in_group_b(r.claim_count) {
                Some((r, true))
            } else {
                None
            }
        })
        .collect();
    if !members.iter().any(|(_, is_b)| !is_b) {
        return Err(ConcordError::EmptyGroup { group: "A" });
    }
    if !members.iter().any(|(_, is_b)| *is_b) {
        return Err(ConcordError::EmptyGroup { group: "B" });
    }

    let mut exposures: Vec<f64> = members.iter().map(|(r, _)| r.exposure).collect();
    let edges = bin_edges(&mut exposures, config.exposure_bins, config.binning);
    let mut groups: Vec<[Vec<f64>; 2]> = vec![[Vec::new(), Vec::new()]; config.exposure_bins];
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); config.exposure_bins];
    for (record, is_b) in &members {
        let bin = edges.partition_point(|&e| e < record.exposure);
        groups[bin][*is_b as usize].push(record.prediction);
        let range = &mut ranges[bin];
        range.0 = range.0.min(record.exposure);
        range.1 = range.1.max(record.exposure);
    }

    Ok(groups
        .into_par_iter()
        .zip(ranges)
        .enumerate()
        .map(|(bin, ([a, b], (lower, upper)))| {
            let clusters = (!a.is_empty() && !b.is_empty()).then(|| {
                let seed_a = derive_seed(config.seed, 2 * bin as u64);
                let seed_b = derive_seed(config.seed, 2 * bin as u64 + 1);
                ClusterSummary {
                    group_a: cluster_points(&Points::new(&a), config.k, config, seed_a),
                    group_b: cluster_points(&Points::new(&b), config.k, config, seed_b),
                }
            });
            BinSummary {
                lower,
                upper,
                n_a: a.len(),
                n_b: b.len(),
                clusters,
            }
        })
        .collect())
}

/// Centroid approximation of the frequency concordance. Bin estimates are
/// combined with weights proportional to `n_a * n_b` in each bin.
pub fn clustered_concordance(
    records: &[FrequencyRecord],
    contrast: FrequencyContrast,
    config: &KMeansConfig,
) -> Result<ConcordanceEstimate> {
    if records.is_empty() {
        return Err(ConcordError::EmptyInput);
    }
    let bins = cluster_bins(records, contrast, config)?;
    let (mut pairs, mut weighted, mut decisive, mut used) = (0u64, 0.0, 0.0, 0usize);
    for bin in &bins {
        if let Some(summary) = &bin.clusters {
            let bin_pairs = bin.n_a as u64 * bin.n_b as u64;
            pairs += bin_pairs;
            weighted += bin_pairs as f64 * summary.concordant_mass(config.ties);
            decisive += bin_pairs as f64 * summary.decisive_mass();
            used += 1;
        }
    }
    if pairs == 0 || !(decisive > 0.0) {
        return Err(ConcordError::NoComparablePairs);
    }
    Ok(ConcordanceEstimate {
        value: (weighted / pairs as f64).clamp(0.0, 1.0),
        method: Method::Clustered,
        support: Support::ClusterMass {
            represented_pairs: pairs,
            bins_used: used,
        },
        ci: None,
        meta: EstimateMeta {
            contrast: Some(contrast),
            k: Some(config.k),
            exposure_bins: Some(config.exposure_bins),
            reruns: Some(config.reruns),
            seed: Some(config.seed),
            ..EstimateMeta::default()
        },
    })
}
