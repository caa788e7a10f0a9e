//! Run orchestration: configs, run directories, event logs, transitions,
//! parameter sweeps, exports and group statistics.

mod compare;
mod export;
mod log;
mod svg;
mod sweep;

pub use compare::{compare_groups, comparisons_csv, Comparison, Metric, ALPHA};
pub use export::{export, ExportKind};
pub use log::{Birth, Event, EventLog, EventWriter, Header, Snapshot, SourceRef, EVENTS_FILE, FINAL_FILE, FORMAT_VERSION};
pub use sweep::{run_sweep, SweepConfig, SweepReport, SweepRow};

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algorithms::{replay, AlgorithmKind, Individual, Population, Search, StepReport, BATCH_SIZE, POPULATION_SIZE};
use crate::error::{EvalError, RunError};
use crate::evaluator::{EnvironmentKind, EnvironmentSpec, Evaluator, ExternalEvaluator, SurrogateEvaluator, DEFAULT_TIMEOUT};
use crate::genealogy::{focal_table, population_age_stats, AgeStats, AncestryDag, BirthRecord, FocalAncestry};
use crate::metrics;
use crate::VariationConfig;

pub const DEFAULT_EVALUATIONS: u64 = 10_000;
pub const DEFAULT_TRANSITION_EVALUATIONS: u64 = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EvaluatorSpec {
    Surrogate,
    External(String),
}

impl fmt::Display for EvaluatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvaluatorSpec::Surrogate => f.write_str("surrogate"),
            EvaluatorSpec::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

impl FromStr for EvaluatorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            _ if s == "surrogate" => Ok(EvaluatorSpec::Surrogate),
            Some(("external", cmd)) if !cmd.trim().is_empty() => Ok(EvaluatorSpec::External(cmd.to_string())),
            _ => Err(format!("unknown evaluator {s:?} (expected surrogate or external:<command>)")),
        }
    }
}

impl TryFrom<String> for EvaluatorSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<EvaluatorSpec> for String {
    fn from(e: EvaluatorSpec) -> Self {
        e.to_string()
    }
}

/// Everything that determines a run's results. Output location and thread
/// count are kept apart in [`RunOptions`] so they never reach the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: AlgorithmKind,
    pub env: EnvironmentKind,
    pub evaluations: u64,
    pub seed: u64,
    pub variation: VariationConfig,
    pub evaluator: EvaluatorSpec,
}

impl RunConfig {
    pub fn new(algorithm: AlgorithmKind, env: EnvironmentKind, evaluations: u64, seed: u64) -> Self {
        Self {
            algorithm,
            env,
            evaluations,
            seed,
            variation: VariationConfig::for_algorithm(algorithm),
            evaluator: EvaluatorSpec::Surrogate,
        }
    }

    /// Budget check for a fresh run, where initialisation counts.
    pub fn validate_fresh(&self) -> Result<(), RunError> {
        let init = self.algorithm.init_size() as u64;
        if self.evaluations < init || !(self.evaluations - init).is_multiple_of(BATCH_SIZE as u64) {
            return Err(RunError::Config(format!(
                "{} budget {} must be {init} + a multiple of {BATCH_SIZE}",
                self.algorithm, self.evaluations
            )));
        }
        self.variation.validate().map_err(RunError::Config)
    }

    /// Budget check for a continuation, where only batches count.
    pub fn validate_continuation(&self) -> Result<(), RunError> {
        if !self.evaluations.is_multiple_of(BATCH_SIZE as u64) {
            return Err(RunError::Config(format!(
                "continuation budget {} must be a multiple of {BATCH_SIZE}",
                self.evaluations
            )));
        }
        self.variation.validate().map_err(RunError::Config)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub out: PathBuf,
    pub threads: usize,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            out: out.into(),
            threads: 1,
        }
    }

    pub fn threads(mut self, n: usize) -> Self {
        self.threads = n.max(1);
        self
    }
}

/// Partial configuration as read from a JSON file or command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub algorithm: Option<AlgorithmKind>,
    pub env: Option<EnvironmentKind>,
    pub evaluations: Option<u64>,
    pub seed: Option<u64>,
    pub p_morph_mut: Option<f64>,
    pub sigma: Option<f64>,
    pub p_crossover: Option<f64>,
    pub evaluator: Option<EvaluatorSpec>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ConfigOverrides {
    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` win.
    pub fn overridden_by(self, top: ConfigOverrides) -> Self {
        Self {
            algorithm: top.algorithm.or(self.algorithm),
            env: top.env.or(self.env),
            evaluations: top.evaluations.or(self.evaluations),
            seed: top.seed.or(self.seed),
            p_morph_mut: top.p_morph_mut.or(self.p_morph_mut),
            sigma: top.sigma.or(self.sigma),
            p_crossover: top.p_crossover.or(self.p_crossover),
            evaluator: top.evaluator.or(self.evaluator),
            out: top.out.or(self.out),
            threads: top.threads.or(self.threads),
        }
    }

    pub fn resolve(self, default_evaluations: u64) -> Result<(RunConfig, RunOptions), RunError> {
        let missing = |what: &str| RunError::Config(format!("missing required setting `{what}`"));
        let algorithm = self.algorithm.ok_or_else(|| missing("algorithm"))?;
        let mut cfg = RunConfig::new(
            algorithm,
            self.env.ok_or_else(|| missing("env"))?,
            self.evaluations.unwrap_or(default_evaluations),
            self.seed.ok_or_else(|| missing("seed"))?,
        );
        if let Some(p) = self.p_morph_mut {
            cfg.variation.p_morph_mut = p;
        }
        if let Some(s) = self.sigma {
            cfg.variation.sigma = s;
        }
        if let Some(p) = self.p_crossover {
            cfg.variation.p_crossover = p;
        }
        if let Some(e) = self.evaluator {
            cfg.evaluator = e;
        }
        let opts = RunOptions::new(self.out.ok_or_else(|| missing("out"))?).threads(self.threads.unwrap_or(1));
        Ok((cfg, opts))
    }
}

/// Headline numbers of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub algorithm: AlgorithmKind,
    pub env: EnvironmentKind,
    pub evaluations: u64,
    pub best_fitness: f64,
    pub coverage: usize,
    pub qd_score: f64,
}

fn make_evaluator(cfg: &RunConfig, opts: &RunOptions) -> Result<Box<dyn Evaluator>, RunError> {
    let env = EnvironmentSpec::of_kind(cfg.env);
    Ok(match &cfg.evaluator {
        EvaluatorSpec::Surrogate => Box::new(SurrogateEvaluator::with_threads(env, opts.threads)),
        EvaluatorSpec::External(cmd) => Box::new(ExternalEvaluator::spawn(cmd, env, DEFAULT_TIMEOUT)?),
    })
}

fn snapshot(search: &Search) -> Snapshot {
    let members = search.members();
    let proj = metrics::project_population(members.iter().copied());
    Snapshot {
        eval: search.eval_count,
        best_fitness: metrics::best_fitness(members.iter().copied()),
        coverage: proj.coverage(),
        qd_score: proj.qd_score(),
    }
}

fn record(log: &mut EventWriter, search: &Search, report: &StepReport) -> Result<(), RunError> {
    for b in &report.births {
        log.write(&Event::Birth(b.into()))?;
    }
    for &id in &report.deaths {
        log.write(&Event::Death {
            id,
            eval: search.eval_count,
        })?;
    }
    log.write(&Event::Snapshot(snapshot(search)))
}

/// Run the seeding batch and then full batches up to `target_eval`, logging
/// as we go. Evaluation failures leave an error record behind.
fn drive(
    search: &mut Search,
    evaluator: &mut dyn Evaluator,
    log: &mut EventWriter,
    seeding: impl FnOnce(&mut Search, &mut dyn Evaluator) -> Result<StepReport, EvalError>,
    target_eval: u64,
) -> Result<(), RunError> {
    let mut outcome = seeding(search, evaluator);
    loop {
        match outcome {
            Ok(report) => record(log, search, &report)?,
            Err(e) => {
                log.write(&Event::Error {
                    eval: search.eval_count,
                    message: e.to_string(),
                })?;
                log.flush()?;
                return Err(e.into());
            }
        }
        if search.eval_count >= target_eval {
            break;
        }
        outcome = search.step(evaluator);
    }
    log.flush()
}

fn write_final(dir: &Path, pop: &Population) -> Result<(), RunError> {
    let path = dir.join(FINAL_FILE);
    let text = final_json(pop);
    fs::write(&path, text).map_err(|e| RunError::io(path, e))
}

fn final_json(pop: &Population) -> String {
    serde_json::to_string_pretty(pop).expect("population serializes") + "\n"
}

fn summarize(dir: &Path, cfg: &RunConfig, search: &Search) -> RunSummary {
    let s = snapshot(search);
    RunSummary {
        dir: dir.to_path_buf(),
        algorithm: cfg.algorithm,
        env: cfg.env,
        evaluations: search.eval_count,
        best_fitness: s.best_fitness,
        coverage: s.coverage,
        qd_score: s.qd_score,
    }
}

fn create_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))
}

/// Evolve from random genomes to the configured budget.
pub fn run_evolve(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    cfg.validate_fresh()?;
    create_dir(&opts.out)?;
    let mut evaluator = make_evaluator(cfg, opts)?;
    let mut search = Search::new(cfg.algorithm, cfg.variation, cfg.seed);
    let mut log = EventWriter::create(&opts.out.join(EVENTS_FILE))?;
    log.write(&Event::Header(Header {
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        seed: cfg.seed,
        seed_count: cfg.algorithm.init_size(),
        source: None,
    }))?;
    drive(&mut search, evaluator.as_mut(), &mut log, |s, ev| s.initialize(ev), cfg.evaluations)?;
    write_final(&opts.out, &search.population)?;
    Ok(summarize(&opts.out, cfg, &search))
}

/// Continue a finished run in a new environment and/or with another
/// algorithm. `cfg.evaluations` counts continuation batches only; the
/// re-evaluation of the seeds comes on top.
pub fn run_transition(from: &Path, cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    cfg.validate_continuation()?;
    let source = RunData::load(from)?;
    let seeds: Vec<_> = source
        .population
        .members()
        .into_iter()
        .map(|m| (m.genome.clone(), vec![m.id]))
        .collect();
    let seed_count = match cfg.algorithm {
        AlgorithmKind::Qdsa => seeds.len(),
        _ => seeds.len().max(POPULATION_SIZE),
    };
    create_dir(&opts.out)?;
    let mut evaluator = make_evaluator(cfg, opts)?;
    let start = source.now_eval();
    let mut search = Search::resume(cfg.algorithm, cfg.variation, cfg.seed, start, source.log.next_id());
    let mut log = EventWriter::create(&opts.out.join(EVENTS_FILE))?;
    let source_dir = fs::canonicalize(from).map_err(|e| RunError::io(from, e))?;
    log.write(&Event::Header(Header {
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        seed: cfg.seed,
        seed_count,
        source: Some(SourceRef {
            dir: source_dir,
            algorithm: source.algorithm(),
            env: source.log.header.config.env,
        }),
    }))?;
    let target = start + seed_count as u64 + cfg.evaluations;
    drive(&mut search, evaluator.as_mut(), &mut log, |s, ev| s.seed_from(seeds, ev), target)?;
    write_final(&opts.out, &search.population)?;
    Ok(summarize(&opts.out, cfg, &search))
}

/// A finished run directory loaded into memory.
#[derive(Debug, Clone)]
pub struct RunData {
    pub dir: PathBuf,
    pub log: EventLog,
    pub population: Population,
}

impl RunData {
    pub fn load(dir: &Path) -> Result<Self, RunError> {
        let log = EventLog::read(&dir.join(EVENTS_FILE))?;
        let final_path = dir.join(FINAL_FILE);
        let text = fs::read_to_string(&final_path).map_err(|e| RunError::io(&final_path, e))?;
        let population: Population = serde_json::from_str(&text).map_err(|e| RunError::Log {
            path: final_path.clone(),
            line: e.line(),
            reason: e.to_string(),
        })?;
        if population.kind() != log.header.config.algorithm {
            return Err(RunError::Log {
                path: final_path,
                line: 0,
                reason: "final state does not match the logged algorithm".into(),
            });
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            log,
            population,
        })
    }

    pub fn algorithm(&self) -> AlgorithmKind {
        self.log.header.config.algorithm
    }

    pub fn run_id(&self) -> String {
        self.dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.dir.display().to_string())
    }

    /// Evaluation count at the end of the run.
    pub fn now_eval(&self) -> u64 {
        self.log.last_eval().unwrap_or(0)
    }

    pub fn members(&self) -> Vec<&Individual> {
        self.population.members()
    }

    pub fn best_fitness(&self) -> f64 {
        metrics::best_fitness(self.members())
    }

    pub fn coverage(&self) -> usize {
        metrics::coverage(self.members())
    }

    pub fn qd_score(&self) -> f64 {
        metrics::qd_score(self.members())
    }

    /// Ancestry of every birth in this run and, through transition headers,
    /// in the runs it was seeded from.
    pub fn ancestry(&self) -> Result<AncestryDag, RunError> {
        let mut dag = match &self.log.header.source {
            Some(src) => RunData::load(&src.dir)?.ancestry()?,
            None => AncestryDag::new(),
        };
        let run_id = self.run_id();
        for b in &self.log.births {
            dag.insert(BirthRecord {
                id: b.id,
                parent_ids: b.parent_ids.clone(),
                birth_eval: b.birth_eval,
                fitness: b.fitness,
                descriptor: b.descriptor,
                algorithm: self.algorithm(),
                run_id: run_id.clone(),
            })?;
        }
        Ok(dag)
    }

    pub fn age_stats(&self, dag: &AncestryDag) -> Result<AgeStats, RunError> {
        let live: HashSet<u64> = self.members().iter().map(|m| m.id).collect();
        Ok(population_age_stats(dag, &live, self.now_eval())?)
    }

    pub fn focal_ancestry(&self, dag: &AncestryDag) -> Result<Vec<FocalAncestry>, RunError> {
        let ids: Vec<u64> = self.members().iter().map(|m| m.id).collect();
        Ok(focal_table(dag, &ids, self.now_eval())?)
    }

    /// Replay the logged births and compare with the stored final state,
    /// byte for byte.
    pub fn verify_replay(&self) -> Result<bool, RunError> {
        let rebuilt = replay(self.algorithm(), &self.log.individuals(), self.log.header.seed_count);
        let path = self.dir.join(FINAL_FILE);
        let stored = fs::read_to_string(&path).map_err(|e| RunError::io(path, e))?;
        Ok(final_json(&rebuilt) == stored)
    }
}
