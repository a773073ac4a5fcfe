//! Feature-space coverage, rank correlations and the regression dataset.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bench::Algorithm;
use crate::error::Result;
use crate::lon::LonFeatures;

/// Cells per axis of the coverage grid.
pub const GRID_BINS: usize = 30;

fn bin(v: f64, bins: usize) -> usize {
    ((v.clamp(0.0, 1.0) * bins as f64).floor() as usize).min(bins - 1)
}

/// `num_nodes` in `[1, m]` mapped onto `[0, 1]`.
pub fn normalized_nodes(num_nodes: usize, m: usize) -> f64 {
    if m <= 1 {
        0.0
    } else {
        (num_nodes.saturating_sub(1)) as f64 / (m - 1) as f64
    }
}

/// Occupancy of a `bins x bins` grid over `(num_nodes, global_funnel_size)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub bins: usize,
    pub m: usize,
    /// Row-major by node bin, then funnel bin.
    pub counts: Vec<usize>,
}

impl CoverageGrid {
    pub fn new(m: usize) -> Self {
        Self::with_bins(m, GRID_BINS)
    }

    pub fn with_bins(m: usize, bins: usize) -> Self {
        Self {
            bins,
            m,
            counts: vec![0; bins * bins],
        }
    }

    pub fn cell(&self, num_nodes: usize, global_funnel_size: f64) -> (usize, usize) {
        (
            bin(normalized_nodes(num_nodes, self.m), self.bins),
            bin(global_funnel_size, self.bins),
        )
    }

    pub fn add(&mut self, num_nodes: usize, global_funnel_size: f64) {
        let (i, j) = self.cell(num_nodes, global_funnel_size);
        self.counts[i * self.bins + j] += 1;
    }

    pub fn from_features<'a>(m: usize, features: impl IntoIterator<Item = &'a LonFeatures>) -> Self {
        let mut g = Self::new(m);
        for f in features {
            g.add(f.num_nodes, f.global_funnel_size);
        }
        g
    }

    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn coverage(&self) -> f64 {
        self.occupied() as f64 / self.counts.len() as f64
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho; `None` for mismatched or too-short input, or when either
/// side has no rank variance.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// One row of `corpus.csv`: an instance and its LON features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub instance_id: u64,
    pub mode: String,
    pub run_seed: u64,
    pub generation: usize,
    pub parent: Option<u64>,
    pub d: usize,
    pub m: usize,
    pub phenotype_nodes: f64,
    pub phenotype_funnel: f64,
    pub num_nodes: usize,
    pub edge_density: f64,
    pub num_sinks: usize,
    pub avg_path_opt: f64,
    pub avg_path_sinks: f64,
    pub in_strength_opt: f64,
    pub in_strength_sinks: f64,
    pub global_funnel_size: f64,
}

impl CorpusRecord {
    pub fn features(&self) -> LonFeatures {
        LonFeatures {
            num_nodes: self.num_nodes,
            edge_density: self.edge_density,
            num_sinks: self.num_sinks,
            avg_path_opt: self.avg_path_opt,
            avg_path_sinks: self.avg_path_sinks,
            in_strength_opt: self.in_strength_opt,
            in_strength_sinks: self.in_strength_sinks,
            global_funnel_size: self.global_funnel_size,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        instance_id: u64,
        mode: &str,
        run_seed: u64,
        generation: usize,
        parent: Option<u64>,
        d: usize,
        m: usize,
        f: &LonFeatures,
    ) -> Self {
        Self {
            instance_id,
            mode: mode.to_string(),
            run_seed,
            generation,
            parent,
            d,
            m,
            phenotype_nodes: f.num_nodes as f64 / m as f64,
            phenotype_funnel: f.global_funnel_size,
            num_nodes: f.num_nodes,
            edge_density: f.edge_density,
            num_sinks: f.num_sinks,
            avg_path_opt: f.avg_path_opt,
            avg_path_sinks: f.avg_path_sinks,
            in_strength_opt: f.in_strength_opt,
            in_strength_sinks: f.in_strength_sinks,
            global_funnel_size: f.global_funnel_size,
        }
    }
}

/// One row of a performance CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub instance_id: u64,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub success_rate: f64,
    pub conv_time: f64,
}

/// One row of the regression dataset: features plus performance of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub instance_id: u64,
    pub mode: String,
    pub run_seed: u64,
    pub generation: usize,
    pub parent: Option<u64>,
    pub d: usize,
    pub m: usize,
    pub num_nodes: usize,
    pub edge_density: f64,
    pub num_sinks: usize,
    pub avg_path_opt: f64,
    pub avg_path_sinks: f64,
    pub in_strength_opt: f64,
    pub in_strength_sinks: f64,
    pub global_funnel_size: f64,
    pub algorithm: Algorithm,
    pub success_rate: Option<f64>,
    pub conv_time: Option<f64>,
}

/// Column order of the dataset CSV.
pub const DATASET_HEADER: [&str; 18] = [
    "instance_id",
    "mode",
    "run_seed",
    "generation",
    "parent",
    "d",
    "m",
    "num_nodes",
    "edge_density",
    "num_sinks",
    "avg_path_opt",
    "avg_path_sinks",
    "in_strength_opt",
    "in_strength_sinks",
    "global_funnel_size",
    "algorithm",
    "success_rate",
    "conv_time",
];

impl DatasetRecord {
    pub fn features(&self) -> LonFeatures {
        LonFeatures {
            num_nodes: self.num_nodes,
            edge_density: self.edge_density,
            num_sinks: self.num_sinks,
            avg_path_opt: self.avg_path_opt,
            avg_path_sinks: self.avg_path_sinks,
            in_strength_opt: self.in_strength_opt,
            in_strength_sinks: self.in_strength_sinks,
            global_funnel_size: self.global_funnel_size,
        }
    }
}

/// Joins corpus rows with performance rows, one output row per
/// `(instance, algorithm)`. Missing performance leaves the cells empty.
pub fn build_dataset(
    corpus: &[CorpusRecord],
    performance: &[PerformanceRecord],
    algorithms: &[Algorithm],
) -> Vec<DatasetRecord> {
    let perf: BTreeMap<(u64, Algorithm), &PerformanceRecord> = performance
        .iter()
        .map(|p| ((p.instance_id, p.algorithm), p))
        .collect();
    let mut missing = 0;
    let mut out = Vec::with_capacity(corpus.len() * algorithms.len());
    for c in corpus {
        for &alg in algorithms {
            let p = perf.get(&(c.instance_id, alg));
            if p.is_none() {
                missing += 1;
            }
            out.push(DatasetRecord {
                instance_id: c.instance_id,
                mode: c.mode.clone(),
                run_seed: c.run_seed,
                generation: c.generation,
                parent: c.parent,
                d: c.d,
                m: c.m,
                num_nodes: c.num_nodes,
                edge_density: c.edge_density,
                num_sinks: c.num_sinks,
                avg_path_opt: c.avg_path_opt,
                avg_path_sinks: c.avg_path_sinks,
                in_strength_opt: c.in_strength_opt,
                in_strength_sinks: c.in_strength_sinks,
                global_funnel_size: c.global_funnel_size,
                algorithm: alg,
                success_rate: p.map(|p| p.success_rate),
                conv_time: p.map(|p| p.conv_time),
            });
        }
    }
    if missing > 0 {
        log::warn!("{missing} dataset rows have no performance measurements");
    }
    out
}

/// Writes serde records as CSV, always emitting the header.
pub fn write_csv<W: Write, T: Serialize>(w: W, header: &[&str], rows: &[T]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(header)?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|e| crate::error::Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| Ok(row?)).collect()
}

pub const CORPUS_HEADER: [&str; 17] = [
    "instance_id",
    "mode",
    "run_seed",
    "generation",
    "parent",
    "d",
    "m",
    "phenotype_nodes",
    "phenotype_funnel",
    "num_nodes",
    "edge_density",
    "num_sinks",
    "avg_path_opt",
    "avg_path_sinks",
    "in_strength_opt",
    "in_strength_sinks",
    "global_funnel_size",
];

pub const PERFORMANCE_HEADER: [&str; 5] =
    ["instance_id", "algorithm", "trials", "success_rate", "conv_time"];

pub fn write_dataset<W: Write>(w: W, rows: &[DatasetRecord]) -> Result<()> {
    write_csv(w, &DATASET_HEADER, rows)
}

pub fn read_dataset<R: Read>(r: R) -> Result<Vec<DatasetRecord>> {
    read_csv(r)
}

/// Performance measures the correlation table covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SuccessRate,
    ConvTime,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::SuccessRate, Metric::ConvTime];

    fn of(&self, r: &DatasetRecord) -> Option<f64> {
        match self {
            Metric::SuccessRate => r.success_rate,
            Metric::ConvTime => r.conv_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub feature: String,
    pub metric: Metric,
    pub algorithm: Algorithm,
    pub d: usize,
    /// Empty when undefined (constant input or too few rows).
    pub rho: Option<f64>,
    pub n: usize,
}

/// Spearman rho of every feature against every metric, per algorithm and dimension.
pub fn correlation_table(rows: &[DatasetRecord]) -> Vec<CorrelationEntry> {
    let mut groups: BTreeMap<(Algorithm, usize), Vec<&DatasetRecord>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.algorithm, r.d)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((algorithm, d), group) in groups {
        for metric in Metric::ALL {
            let usable: Vec<&&DatasetRecord> =
                group.iter().filter(|r| metric.of(r).is_some()).collect();
            let ys: Vec<f64> = usable.iter().filter_map(|r| metric.of(r)).collect();
            for (fi, name) in LonFeatures::NAMES.iter().enumerate() {
                let xs: Vec<f64> = usable.iter().map(|r| r.features().to_array()[fi]).collect();
                out.push(CorrelationEntry {
                    feature: name.to_string(),
                    metric,
                    algorithm,
                    d,
                    rho: spearman(&xs, &ys),
                    n: xs.len(),
                });
            }
        }
    }
    out
}

pub fn lookup(
    table: &[CorrelationEntry],
    feature: &str,
    metric: Metric,
    algorithm: Algorithm,
    d: usize,
) -> Option<f64> {
    table
        .iter()
        .find(|e| e.feature == feature && e.metric == metric && e.algorithm == algorithm && e.d == d)
        .and_then(|e| e.rho)
}

/// Median success rate of the instances falling into one coverage cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    pub algorithm: Algorithm,
    pub node_bin: usize,
    pub funnel_bin: usize,
    pub count: usize,
    pub median_success: f64,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

pub fn success_heatmap(rows: &[DatasetRecord]) -> Vec<HeatCell> {
    let mut cells: BTreeMap<(Algorithm, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let Some(s) = r.success_rate else { continue };
        let g = CoverageGrid::new(r.m);
        let (i, j) = g.cell(r.num_nodes, r.global_funnel_size);
        cells.entry((r.algorithm, i, j)).or_default().push(s);
    }
    cells
        .into_iter()
        .map(|((algorithm, node_bin, funnel_bin), mut v)| HeatCell {
            algorithm,
            node_bin,
            funnel_bin,
            count: v.len(),
            median_success: median(&mut v).unwrap(),
        })
        .collect()
}
