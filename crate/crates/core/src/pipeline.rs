//! Corpus-level steps shared by the command-line tool and the examples.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    build_dataset, correlation_table, success_heatmap, CorpusRecord, CoverageGrid, DatasetRecord,
    PerformanceRecord,
};
use crate::bench::{measure, Algorithm, BenchProtocol};
use crate::error::{Error, Result};
use crate::gd::{difference_rate, GdConfig};
use crate::io::{self, Corpus};
use crate::lon::{Lon, LonConfig, LonFeatures};
use crate::msg::{default_components, ArchetypeKind, MsgInstance, Provenance};
use crate::rng;

/// Parameters of `generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateParams {
    pub d: usize,
    pub m: Option<usize>,
    pub seed: u64,
    pub archetype: Option<ArchetypeKind>,
}

impl GenerateParams {
    pub fn components(&self) -> usize {
        self.m.unwrap_or_else(|| default_components(self.d))
    }

    /// The instance for `seed` itself.
    pub fn instance(&self) -> Result<MsgInstance> {
        self.instance_with_seed(self.seed)
    }

    fn instance_with_seed(&self, seed: u64) -> Result<MsgInstance> {
        match self.archetype {
            Some(kind) => MsgInstance::archetype(kind, self.d, self.components(), seed),
            None => MsgInstance::random(self.d, self.components(), seed),
        }
    }

    /// Instance `i` of a corpus; its seed is derived from `(seed, "generate", i)`.
    pub fn corpus_instance(&self, i: u64) -> Result<MsgInstance> {
        self.instance_with_seed(rng::derive_seed(self.seed, "generate", i))
    }
}

/// Writes `count` instances to `dir/instances/<id>.json`; returns the paths.
pub fn generate_corpus(dir: &Path, params: &GenerateParams, count: u64) -> Result<Vec<PathBuf>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let path = dir.join(io::INSTANCES_DIR).join(io::instance_file_name(i));
            io::write_instance(&path, &params.corpus_instance(i)?)?;
            Ok(path)
        })
        .collect()
}

/// Overrides for the escape-sampling parameters; unset fields use the defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LonParams {
    pub samples: Option<usize>,
    pub radius: Option<f64>,
    pub seed: u64,
}

impl LonParams {
    pub fn config(&self, instance: &MsgInstance, seed: u64) -> LonConfig {
        let mut c = LonConfig::defaults(instance.dim(), instance.len(), seed);
        if let Some(s) = self.samples {
            c.samples = s;
        }
        if let Some(r) = self.radius {
            c.radius = r;
        }
        c
    }

    /// Per-instance sampling seed inside a corpus.
    pub fn instance_seed(&self, id: u64) -> u64 {
        rng::derive_seed(self.seed, "lon", id)
    }
}

/// Provenance column label: the search mode or archetype name, else the generator kind.
pub fn provenance_label(p: &Provenance) -> String {
    match p {
        Provenance::Manual => "manual".into(),
        Provenance::Uniform => "uniform".into(),
        Provenance::Archetype { archetype, .. } => archetype.as_str().into(),
        Provenance::Search { mode, .. } => mode.clone(),
    }
}

pub fn corpus_record(id: u64, instance: &MsgInstance, features: &LonFeatures) -> CorpusRecord {
    let (run_seed, generation, parent) = match instance.provenance() {
        Provenance::Search {
            run_seed,
            generation,
            parent,
            ..
        } => (*run_seed, *generation, parent.map(|p| p as u64)),
        _ => (instance.seed(), 0, None),
    };
    CorpusRecord::new(
        id,
        &provenance_label(instance.provenance()),
        run_seed,
        generation,
        parent,
        instance.dim(),
        instance.len(),
        features,
    )
}

/// LON features of every instance in a corpus, in id order.
pub fn corpus_features(corpus: &Corpus, params: &LonParams) -> Result<Vec<CorpusRecord>> {
    corpus
        .ids()
        .into_par_iter()
        .map(|id| {
            let inst = corpus.instance(id)?;
            let lon = Lon::build(&inst, &params.config(&inst, params.instance_seed(id)));
            Ok(corpus_record(id, &inst, &LonFeatures::compute(&lon)))
        })
        .collect()
}

/// One row of the `validate-boa` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoaRow {
    pub instance: u64,
    pub instance_seed: u64,
    pub d: usize,
    pub m: usize,
    pub optima: usize,
    pub starts: usize,
    pub disagreements: usize,
    pub difference_rate: f64,
    pub fallbacks: usize,
}

pub const BOA_HEADER: [&str; 9] = [
    "instance",
    "instance_seed",
    "d",
    "m",
    "optima",
    "starts",
    "disagreements",
    "difference_rate",
    "fallbacks",
];

/// Seed of the `i`-th random instance used by basin validation.
pub fn boa_instance_seed(seed: u64, i: u64) -> u64 {
    rng::derive_seed(seed, "validate-boa", i)
}

/// Compares gradient and analytic basins on `count` random instances.
/// Instances run one after another; each comparison is parallel inside.
pub fn validate_boa(d: usize, m: usize, count: u64, seed: u64, config: &GdConfig) -> Result<Vec<BoaRow>> {
    config.validate()?;
    (0..count)
        .map(|i| {
            let instance_seed = boa_instance_seed(seed, i);
            let inst = MsgInstance::random(d, m, instance_seed)?;
            let rep = difference_rate(&inst, config)?;
            log::info!("instance {i}: difference rate {:.5}", rep.rate);
            Ok(BoaRow {
                instance: i,
                instance_seed,
                d,
                m,
                optima: inst.local_optima().len(),
                starts: rep.starts,
                disagreements: rep.disagreements,
                difference_rate: rep.rate,
                fallbacks: rep.fallbacks,
            })
        })
        .collect()
}

/// Per-trial detail of `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub instance_id: u64,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub success: bool,
    pub evals_used: usize,
    pub converged: bool,
    pub best_f: f64,
}

pub const TRIAL_HEADER: [&str; 7] =
    ["instance_id", "algorithm", "trial", "success", "evals_used", "converged", "best_f"];

/// Benchmarks every algorithm on every instance of a corpus.
pub fn bench_corpus(
    corpus: &Corpus,
    algorithms: &[Algorithm],
    protocol: &BenchProtocol,
) -> Result<(Vec<PerformanceRecord>, Vec<TrialRow>)> {
    if protocol.trials == 0 || protocol.budget_per_dim == 0 {
        return Err(Error::invalid("protocol", "trials and budget must be positive"));
    }
    let per_instance: Vec<Vec<(PerformanceRecord, Vec<TrialRow>)>> = corpus
        .ids()
        .into_par_iter()
        .map(|id| {
            let inst = corpus.instance(id)?;
            Ok(algorithms
                .iter()
                .map(|&alg| {
                    let p = measure(&inst, alg, protocol, id);
                    let rows = p
                        .trials
                        .iter()
                        .enumerate()
                        .map(|(trial, t)| TrialRow {
                            instance_id: id,
                            algorithm: alg,
                            trial,
                            success: t.success,
                            evals_used: t.evals_used,
                            converged: t.converged,
                            best_f: t.best_f,
                        })
                        .collect();
                    let rec = PerformanceRecord {
                        instance_id: id,
                        algorithm: alg,
                        trials: p.trials.len(),
                        success_rate: p.success_rate,
                        conv_time: p.conv_time,
                    };
                    (rec, rows)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut perf = Vec::new();
    let mut trials = Vec::new();
    for (rec, rows) in per_instance.into_iter().flatten() {
        perf.push(rec);
        trials.extend(rows);
    }
    Ok((perf, trials))
}

/// Coverage of one group of instances sharing `(d, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub d: usize,
    pub m: usize,
    pub instances: usize,
    pub occupied: usize,
    pub cells: usize,
    pub coverage: f64,
}

pub fn coverage_reports(records: &[CorpusRecord]) -> Vec<CoverageReport> {
    let mut groups = std::collections::BTreeMap::<(usize, usize), Vec<LonFeatures>>::new();
    for r in records {
        groups.entry((r.d, r.m)).or_default().push(r.features());
    }
    groups
        .into_iter()
        .map(|((d, m), fs)| {
            let g = CoverageGrid::from_features(m, &fs);
            CoverageReport {
                d,
                m,
                instances: g.total(),
                occupied: g.occupied(),
                cells: g.counts.len(),
                coverage: g.coverage(),
            }
        })
        .collect()
}

/// File names written by [`write_analysis`].
pub const COVERAGE_JSON: &str = "coverage.json";
pub const CORRELATIONS_CSV: &str = "correlations.csv";
pub const DATASET_CSV: &str = "dataset.csv";
pub const HEATMAP_CSV: &str = "heatmap.csv";

/// Writes the coverage report, and with performance data also the dataset,
/// the correlation table and optionally the heat map. Returns written paths.
pub fn write_analysis(
    out_dir: &Path,
    records: &[CorpusRecord],
    performance: Option<&[PerformanceRecord]>,
    heatmap: bool,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let cov = out_dir.join(COVERAGE_JSON);
    io::write_atomic(&cov, serde_json::to_string_pretty(&coverage_reports(records))?.as_bytes())?;
    written.push(cov);
    if let Some(perf) = performance {
        let mut algorithms: Vec<Algorithm> = perf.iter().map(|p| p.algorithm).collect();
        algorithms.sort();
        algorithms.dedup();
        let dataset: Vec<DatasetRecord> = build_dataset(records, perf, &algorithms);
        let p = out_dir.join(DATASET_CSV);
        io::write_csv_file(&p, &crate::analysis::DATASET_HEADER, &dataset)?;
        written.push(p);
        let p = out_dir.join(CORRELATIONS_CSV);
        io::write_csv_file(
            &p,
            &["feature", "metric", "algorithm", "d", "rho", "n"],
            &correlation_table(&dataset),
        )?;
        written.push(p);
        if heatmap {
            let p = out_dir.join(HEATMAP_CSV);
            io::write_csv_file(
                &p,
                &["algorithm", "node_bin", "funnel_bin", "count", "median_success"],
                &success_heatmap(&dataset),
            )?;
            written.push(p);
        }
    }
    Ok(written)
}
