//! On-disk layout: instance files, corpus directories and run manifests.
//!
//! A corpus directory holds `corpus.csv` plus either `instances/<id>.json`
//! (one file per instance) or `run.json` (a packed search run whose
//! instances are rebuilt from genotypes on demand).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{self, CorpusRecord, PerformanceRecord};
use crate::error::{Error, Result};
use crate::msg::MsgInstance;
use crate::novelty::NsRun;

pub const CORPUS_CSV: &str = "corpus.csv";
pub const INSTANCES_DIR: &str = "instances";
pub const RUN_JSON: &str = "run.json";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_instance(path: &Path, instance: &MsgInstance) -> Result<()> {
    write_atomic(path, instance.to_json()?.as_bytes())
}

pub fn read_instance(path: &Path) -> Result<MsgInstance> {
    MsgInstance::from_json(&read_string(path)?)
}

pub fn write_csv_file<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    analysis::write_csv(&mut buf, header, rows)?;
    write_atomic(path, &buf)
}

pub fn read_csv_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    analysis::read_csv(f)
}

pub fn write_corpus_csv(path: &Path, rows: &[CorpusRecord]) -> Result<()> {
    write_csv_file(path, &analysis::CORPUS_HEADER, rows)
}

pub fn read_corpus_csv(path: &Path) -> Result<Vec<CorpusRecord>> {
    read_csv_file(path)
}

pub fn write_performance_csv(path: &Path, rows: &[PerformanceRecord]) -> Result<()> {
    write_csv_file(path, &analysis::PERFORMANCE_HEADER, rows)
}

pub fn read_performance_csv(path: &Path) -> Result<Vec<PerformanceRecord>> {
    read_csv_file(path)
}

pub fn instance_file_name(id: u64) -> String {
    format!("{id:06}.json")
}

/// Everything needed to re-run a command: its effective arguments and config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, args: Vec<String>, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            config: serde_json::to_value(config)?,
            outputs: Vec::new(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&read_string(path)?)?)
    }
}

enum Source {
    Files(Vec<(u64, PathBuf)>),
    Run(Box<NsRun>),
}

/// A directory of instances, read lazily.
pub struct Corpus {
    dir: PathBuf,
    source: Source,
}

impl Corpus {
    pub fn open(dir: &Path) -> Result<Self> {
        let run = dir.join(RUN_JSON);
        let source = if run.is_file() {
            Source::Run(Box::new(serde_json::from_str(&read_string(&run)?)?))
        } else {
            let inst = dir.join(INSTANCES_DIR);
            let entries = fs::read_dir(&inst).map_err(|e| Error::io(&inst, e))?;
            let mut files = Vec::new();
            for entry in entries {
                let path = entry.map_err(|e| Error::io(&inst, e))?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    let id = path
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .and_then(|s| s.parse::<u64>().ok())
                        .ok_or_else(|| Error::invalid("instance file name", path.display().to_string()))?;
                    files.push((id, path));
                }
            }
            files.sort();
            Source::Files(files)
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            source,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn ids(&self) -> Vec<u64> {
        match &self.source {
            Source::Files(f) => f.iter().map(|(id, _)| *id).collect(),
            Source::Run(r) => (0..r.solutions.len() as u64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match &self.source {
            Source::Files(f) => f.len(),
            Source::Run(r) => r.solutions.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn instance(&self, id: u64) -> Result<MsgInstance> {
        match &self.source {
            Source::Files(f) => {
                let i = f
                    .binary_search_by_key(&id, |(k, _)| *k)
                    .map_err(|_| Error::invalid("instance id", id.to_string()))?;
                read_instance(&f[i].1)
            }
            Source::Run(r) => {
                if id as usize >= r.solutions.len() {
                    return Err(Error::invalid("instance id", id.to_string()));
                }
                r.instance(id as usize)
            }
        }
    }

    pub fn run(&self) -> Option<&NsRun> {
        match &self.source {
            Source::Run(r) => Some(r),
            Source::Files(_) => None,
        }
    }

    /// Rows of `corpus.csv`, if the directory has one.
    pub fn records(&self) -> Result<Option<Vec<CorpusRecord>>> {
        let p = self.dir.join(CORPUS_CSV);
        if p.is_file() {
            read_corpus_csv(&p).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Corpus rows for every solution of a search run.
pub fn run_records(run: &NsRun) -> Vec<CorpusRecord> {
    run.solutions
        .iter()
        .map(|s| {
            CorpusRecord::new(
                s.id as u64,
                run.config.mode.as_str(),
                run.config.seed,
                s.generation,
                s.parent.map(|p| p as u64),
                run.config.d,
                run.config.m,
                &s.features,
            )
        })
        .collect()
}

/// Writes `run.json` and `corpus.csv` for a search run.
pub fn write_run(dir: &Path, run: &NsRun) -> Result<()> {
    write_atomic(&dir.join(RUN_JSON), serde_json::to_string(run)?.as_bytes())?;
    write_corpus_csv(&dir.join(CORPUS_CSV), &run_records(run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::novelty::{ns_run, NsConfig, SearchMode};

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn file_corpus_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for id in [3u64, 1] {
            let inst = MsgInstance::random(2, 20, id).unwrap();
            write_instance(&dir.path().join(INSTANCES_DIR).join(instance_file_name(id)), &inst).unwrap();
        }
        let c = Corpus::open(dir.path()).unwrap();
        assert_eq!(c.ids(), vec![1, 3]);
        assert_eq!(c.instance(3).unwrap(), MsgInstance::random(2, 20, 3).unwrap());
        assert!(c.instance(2).is_err());
        assert!(c.records().unwrap().is_none());
    }

    #[test]
    fn run_corpus_rebuilds_instances() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = NsConfig::new(2, SearchMode::Ns, 5);
        cfg.m = 20;
        cfg.mu = 4;
        cfg.lambda = 4;
        cfg.t_max = 1;
        cfg.lon_samples = 50;
        let run = ns_run(&cfg).unwrap();
        write_run(dir.path(), &run).unwrap();
        let c = Corpus::open(dir.path()).unwrap();
        assert_eq!(c.len(), 8);
        assert_eq!(c.instance(5).unwrap(), run.instance(5).unwrap());
        let rows = c.records().unwrap().unwrap();
        assert_eq!(rows, run_records(&run));
    }

    #[test]
    fn corrupted_instance_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        fs::write(&p, "{\"format\": \"msglon-instance\", \"version\": 1, ").unwrap();
        assert!(matches!(read_instance(&p), Err(Error::Json(_))));
        assert!(matches!(read_instance(&dir.path().join("missing.json")), Err(Error::Io { .. })));
    }
}
