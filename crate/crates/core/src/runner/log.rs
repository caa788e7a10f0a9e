//! Newline-delimited JSON event logs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgorithmKind, Individual};
use crate::error::RunError;
use crate::morphology::{Descriptor, MorphologyTree};

use super::RunConfig;

pub const FORMAT_VERSION: u32 = 1;
pub const EVENTS_FILE: &str = "events.ndjson";
pub const FINAL_FILE: &str = "final.json";

/// Where a transition run came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRef {
    pub dir: PathBuf,
    pub algorithm: AlgorithmKind,
    pub env: crate::evaluator::EnvironmentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub config: RunConfig,
    pub seed: u64,
    /// Births forming the seeding batch (random init or transition seeds).
    pub seed_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Birth {
    pub id: u64,
    pub parent_ids: Vec<u64>,
    pub birth_eval: u64,
    pub fitness: f64,
    pub descriptor: Descriptor,
    pub genome: MorphologyTree,
}

impl From<&Individual> for Birth {
    fn from(i: &Individual) -> Self {
        Self {
            id: i.id,
            parent_ids: i.parent_ids.clone(),
            birth_eval: i.birth_eval,
            fitness: i.fitness,
            descriptor: i.descriptor,
            genome: i.genome.clone(),
        }
    }
}

impl From<Birth> for Individual {
    fn from(b: Birth) -> Self {
        Self {
            id: b.id,
            genome: b.genome,
            fitness: b.fitness,
            descriptor: b.descriptor,
            parent_ids: b.parent_ids,
            birth_eval: b.birth_eval,
            curiosity: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub eval: u64,
    pub best_fitness: f64,
    pub coverage: usize,
    pub qd_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Event {
    Header(Header),
    Birth(Birth),
    Death { id: u64, eval: u64 },
    Snapshot(Snapshot),
    Error { eval: u64, message: String },
}

#[derive(Deserialize)]
struct DeathFields {
    id: u64,
    eval: u64,
}

#[derive(Deserialize)]
struct ErrorFields {
    eval: u64,
    message: String,
}

impl Event {
    /// Parse one log line. Goes through `Value` because internally tagged
    /// enums cannot decode the integer map keys used by genomes.
    pub fn parse(line: &str) -> Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let tag = value
            .get("type")
            .and_then(|t| t.as_str())
            .ok_or("record has no type")?
            .to_string();
        let err = |e: serde_json::Error| e.to_string();
        Ok(match tag.as_str() {
            "header" => Event::Header(serde_json::from_value(value).map_err(err)?),
            "birth" => Event::Birth(serde_json::from_value(value).map_err(err)?),
            "death" => {
                let d: DeathFields = serde_json::from_value(value).map_err(err)?;
                Event::Death { id: d.id, eval: d.eval }
            }
            "snapshot" => Event::Snapshot(serde_json::from_value(value).map_err(err)?),
            "error" => {
                let e: ErrorFields = serde_json::from_value(value).map_err(err)?;
                Event::Error {
                    eval: e.eval,
                    message: e.message,
                }
            }
            other => return Err(format!("unknown record type {other:?}")),
        })
    }
}

pub struct EventWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl EventWriter {
    pub fn create(path: &Path) -> Result<Self, RunError> {
        let file = File::create(path).map_err(|e| RunError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn write(&mut self, event: &Event) -> Result<(), RunError> {
        let line = serde_json::to_string(event).expect("events always serialize");
        writeln!(self.out, "{line}").map_err(|e| RunError::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<(), RunError> {
        self.out.flush().map_err(|e| RunError::io(&self.path, e))
    }
}

/// Parsed contents of an event log.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub header: Header,
    pub births: Vec<Birth>,
    pub deaths: Vec<(u64, u64)>,
    pub snapshots: Vec<Snapshot>,
    pub errors: Vec<String>,
}

impl EventLog {
    pub fn read(path: &Path) -> Result<Self, RunError> {
        let file = File::open(path).map_err(|e| RunError::io(path, e))?;
        let bad = |line: usize, reason: String| RunError::Log {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut header = None;
        let mut log = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut last_eval = None;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let n = i + 1;
            let line = line.map_err(|e| RunError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            if header.is_none() {
                let value: serde_json::Value =
                    serde_json::from_str(&line).map_err(|e| bad(n, e.to_string()))?;
                if value.get("type").and_then(|t| t.as_str()) != Some("header") {
                    return Err(bad(n, "first record must be the header".into()));
                }
                match value.get("format_version").and_then(|v| v.as_u64()) {
                    Some(v) if v == FORMAT_VERSION as u64 => {}
                    other => return Err(bad(n, format!("unsupported format_version {other:?}"))),
                }
            }
            let event = Event::parse(&line).map_err(|e| bad(n, e))?;
            match event {
                Event::Header(h) if header.is_none() => header = Some(h),
                Event::Header(_) => return Err(bad(n, "second header".into())),
                Event::Birth(b) => {
                    if last_eval.is_some_and(|e| b.birth_eval <= e) {
                        return Err(bad(n, "births out of order".into()));
                    }
                    last_eval = Some(b.birth_eval);
                    log.0.push(b);
                }
                Event::Death { id, eval } => log.1.push((id, eval)),
                Event::Snapshot(s) => log.2.push(s),
                Event::Error { message, .. } => log.3.push(message),
            }
        }
        let header = header.ok_or_else(|| bad(0, "empty log".into()))?;
        Ok(Self {
            header,
            births: log.0,
            deaths: log.1,
            snapshots: log.2,
            errors: log.3,
        })
    }

    pub fn individuals(&self) -> Vec<Individual> {
        self.births.iter().cloned().map(Individual::from).collect()
    }

    /// Evaluation count at the end of the log.
    pub fn last_eval(&self) -> Option<u64> {
        self.births.last().map(|b| b.birth_eval + 1)
    }

    pub fn next_id(&self) -> u64 {
        self.births.iter().map(|b| b.id + 1).max().unwrap_or(0)
    }
}
