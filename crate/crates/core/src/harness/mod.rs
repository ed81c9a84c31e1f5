//! Replica runs driven by a TOML experiment file.

pub mod config;
pub mod stats;
pub mod summary;

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Diagnostics;
use crate::error::{Error, Result};
use crate::geometry::BoxSpec;

pub use config::{ExperimentConfig, Statistic, OUTPUT_DIR_ENV};
pub use stats::{run_replica, ObservableRecord, ReplicaOutput};
pub use summary::{summarize, Summary};

pub const RECORDS_FORMAT: &str = "fkdyn-records";
pub const RECORDS_VERSION: u32 = 1;

/// First line of `records.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordsHeader {
    pub format: String,
    pub version: u32,
    #[serde(rename = "box")]
    pub box_spec: BoxSpec,
    pub p: f64,
    pub q: f64,
    pub replicas: u32,
    pub seed: u64,
}

/// What a finished (or partially finished) experiment produced.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub records: Vec<ObservableRecord>,
    pub diagnostics: Vec<Diagnostics>,
    pub summary: Summary,
    /// Replicas that failed, with their errors.
    pub failures: Vec<(u32, Error)>,
}

/// Runs all replicas in parallel and writes `records.jsonl`, `config.toml`,
/// `summary.txt` and per-replica checkpoints into the output directory.
/// Results of replicas that succeeded are written even if others failed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let geometry = cfg.validate()?;
    let dir = cfg.output_dir();
    fs::create_dir_all(dir.join("checkpoints"))?;
    fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;

    let results: Vec<(u32, Result<ReplicaOutput>)> = (0..cfg.run.replicas)
        .into_par_iter()
        .map(|r| (r, run_replica(cfg, &geometry, r)))
        .collect();

    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results {
        match res {
            Ok(out) => {
                let path = dir.join("checkpoints").join(format!("replica-{r:03}.ckpt"));
                out.checkpoint.write_to(BufWriter::new(File::create(path)?))?;
                records.extend(out.records);
                diagnostics.push(out.diagnostics);
            }
            Err(e) => failures.push((r, e)),
        }
    }

    let fk = cfg.fk_params()?;
    let header = RecordsHeader {
        format: RECORDS_FORMAT.into(),
        version: RECORDS_VERSION,
        box_spec: geometry.spec().clone(),
        p: fk.p(),
        q: fk.q(),
        replicas: cfg.run.replicas,
        seed: cfg.run.seed,
    };
    write_records(&dir.join("records.jsonl"), &header, &records)?;
    let summary = summarize(cfg, geometry.dim(), &records);
    let mut text = summary.render();
    for (r, e) in &failures {
        text.push_str(&format!("replica {r} failed: {e}\n"));
    }
    fs::write(dir.join("summary.txt"), text)?;
    Ok(ExperimentOutput {
        dir,
        records,
        diagnostics,
        summary,
        failures,
    })
}

pub fn write_records(path: &Path, header: &RecordsHeader, records: &[ObservableRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", to_json(header)?)?;
    for r in records {
        writeln!(w, "{}", to_json(r)?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<(RecordsHeader, Vec<ObservableRecord>)> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty records file".into()))??;
    let header: RecordsHeader = serde_json::from_str(&first).map_err(|e| Error::Parse(e.to_string()))?;
    if header.format != RECORDS_FORMAT || header.version != RECORDS_VERSION {
        return Err(Error::Parse(format!("unsupported records {} v{}", header.format, header.version)));
    }
    let mut records = Vec::new();
    for l in lines {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&l).map_err(|e| Error::Parse(e.to_string()))?);
    }
    Ok((header, records))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Parse(e.to_string()))
}
