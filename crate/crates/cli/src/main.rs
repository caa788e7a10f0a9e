//! Command-line front end: evolve, transition, sweep, export, stats.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use morphoqd::runner::{
    compare_groups, comparisons_csv, export, run_evolve, run_sweep, run_transition, ConfigOverrides,
    EvaluatorSpec, ExportKind, Metric, RunData, SweepConfig, DEFAULT_EVALUATIONS, DEFAULT_TRANSITION_EVALUATIONS,
};
use morphoqd::{AlgorithmKind, EnvironmentKind, RunError};

#[derive(Parser)]
#[command(name = "morphoqd", version, about = "Quality-diversity evolution of modular robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve from random genomes.
    Evolve(RunArgs),
    /// Continue a finished run in a new environment or with another algorithm.
    Transition {
        /// Finished source run directory.
        #[arg(long)]
        from: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Grid sweep over p_morph_mut and sigma with a fitted interaction model.
    Sweep(SweepArgs),
    /// Write CSV/SVG exports for one or more runs.
    Export {
        /// Run directory (repeat for multi-run aggregates).
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
        /// heatmap-max, heatmap-mean, heatmap-hits, fitness-curve, qd-curves or ancestry-csv.
        #[arg(long)]
        what: ExportKind,
        /// Output directory; defaults to the run directory for a single run.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise Mann-Whitney tests between labelled groups of runs, Holm-adjusted.
    Stats {
        /// LABEL=DIR[,DIR...]; repeat the flag to add runs to a label.
        #[arg(long = "group", required = true)]
        groups: Vec<String>,
        /// Metrics to compare (best_fitness, coverage, qd_score); all by default.
        #[arg(long = "metric")]
        metrics: Vec<String>,
        /// Also write the table to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a run's event log and compare with its stored final state.
    Verify {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with any RunConfig fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<AlgorithmKind>,
    #[arg(long)]
    env: Option<EnvironmentKind>,
    /// Evaluation budget.
    #[arg(long)]
    evals: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `surrogate` or `external:<command>`.
    #[arg(long)]
    evaluator: Option<EvaluatorSpec>,
    #[arg(long = "p-morph")]
    p_morph: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "p-crossover")]
    p_crossover: Option<f64>,
    /// Worker threads for surrogate evaluation; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn overrides(self) -> Result<ConfigOverrides, RunError> {
        let base = match &self.config {
            Some(path) => ConfigOverrides::from_file(path)?,
            None => ConfigOverrides::default(),
        };
        Ok(base.overridden_by(ConfigOverrides {
            algorithm: self.algorithm,
            env: self.env,
            evaluations: self.evals,
            seed: self.seed,
            p_morph_mut: self.p_morph,
            sigma: self.sigma,
            p_crossover: self.p_crossover,
            evaluator: self.evaluator,
            out: self.out,
            threads: self.threads,
        }))
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    algorithm: AlgorithmKind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "flat")]
    env: EnvironmentKind,
    /// Budget per run.
    #[arg(long, default_value_t = DEFAULT_EVALUATIONS)]
    evals: u64,
    /// Repetitions per grid cell.
    #[arg(long, default_value_t = 2)]
    reps: usize,
    /// First seed; runs use consecutive seeds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated p_morph_mut values (defaults to the 6-value grid).
    #[arg(long = "p-morph-grid", value_delimiter = ',')]
    p_morph_grid: Vec<f64>,
    /// Comma-separated sigma values (defaults to the 5-value grid).
    #[arg(long = "sigma-grid", value_delimiter = ',')]
    sigma_grid: Vec<f64>,
    #[arg(long, default_value = "surrogate")]
    evaluator: EvaluatorSpec,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn parse_groups(raw: &[String]) -> Result<Vec<(String, Vec<PathBuf>)>, RunError> {
    let mut groups: Vec<(String, Vec<PathBuf>)> = Vec::new();
    for g in raw {
        let (label, dirs) = g
            .split_once('=')
            .ok_or_else(|| RunError::Config(format!("group {g:?} is not LABEL=DIR[,DIR...]")))?;
        let dirs = dirs.split(',').filter(|d| !d.is_empty()).map(PathBuf::from);
        match groups.iter_mut().find(|(l, _)| l == label) {
            Some((_, v)) => v.extend(dirs),
            None => groups.push((label.to_string(), dirs.collect())),
        }
    }
    Ok(groups)
}

fn parse_metric(name: &str) -> Result<Metric, RunError> {
    Metric::ALL
        .into_iter()
        .find(|m| m.to_string() == name)
        .ok_or_else(|| RunError::Config(format!("unknown metric {name:?}")))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Evolve(args) => {
            let (cfg, opts) = args.overrides()?.resolve(DEFAULT_EVALUATIONS)?;
            let summary = run_evolve(&cfg, &opts)?;
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::Transition { from, run } => {
            let (cfg, opts) = run.overrides()?.resolve(DEFAULT_TRANSITION_EVALUATIONS)?;
            let summary = run_transition(&from, &cfg, &opts)?;
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::Sweep(a) => {
            let mut cfg = SweepConfig::new(a.algorithm);
            cfg.env = a.env;
            cfg.evaluations = a.evals;
            cfg.repetitions = a.reps;
            cfg.seed = a.seed;
            cfg.evaluator = a.evaluator;
            if !a.p_morph_grid.is_empty() {
                cfg.p_morph_mut = a.p_morph_grid;
            }
            if !a.sigma_grid.is_empty() {
                cfg.sigma = a.sigma_grid;
            }
            let report = run_sweep(&cfg, &a.out, a.threads)?;
            print!("{}", report.to_csv());
            println!(
                "best p_morph_mut={} sigma={}{}",
                report.best_p_morph_mut,
                report.best_sigma,
                report.r_squared.map(|r| format!(" (model R^2 {r:.4})")).unwrap_or_default()
            );
        }
        Command::Export { runs, what, out } => {
            let out = match out {
                Some(o) => o,
                None if runs.len() == 1 => runs[0].clone(),
                None => return Err(RunError::Config("--out is required with several runs".into()).into()),
            };
            for f in export(&runs, what, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Stats { groups, metrics, out } => {
            let groups = parse_groups(&groups)?;
            let metrics = if metrics.is_empty() {
                Metric::ALL.to_vec()
            } else {
                metrics.iter().map(|m| parse_metric(m)).collect::<Result<_, _>>()?
            };
            let csv = comparisons_csv(&compare_groups(&groups, &metrics)?);
            print!("{csv}");
            if let Some(path) = out {
                fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Verify { run } => {
            if RunData::load(&run)?.verify_replay()? {
                println!("replay matches {}", run.display());
            } else {
                anyhow::bail!("replay of {} does not match its final state", run.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.downcast_ref::<RunError>().is_some_and(RunError::is_config);
            ExitCode::from(if config { 1 } else { 2 })
        }
    }
}
