//! Grid sweep over the mutation parameters with a fitted interaction model.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::AlgorithmKind;
use crate::error::{AnalysisError, RunError};
use crate::evaluator::EnvironmentKind;
use crate::genealogy::{ols_fit, OlsFit};
use crate::metrics::median;

use super::{run_evolve, EvaluatorSpec, RunConfig, RunOptions, DEFAULT_EVALUATIONS};

pub const P_MORPH_GRID: [f64; 6] = [0.005, 0.01, 0.05, 0.1, 0.2, 0.4];
pub const SIGMA_GRID: [f64; 5] = [0.005, 0.01, 0.05, 0.1, 0.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub algorithm: AlgorithmKind,
    pub env: EnvironmentKind,
    pub p_morph_mut: Vec<f64>,
    pub sigma: Vec<f64>,
    pub repetitions: usize,
    pub evaluations: u64,
    pub seed: u64,
    pub evaluator: EvaluatorSpec,
}

impl SweepConfig {
    pub fn new(algorithm: AlgorithmKind) -> Self {
        Self {
            algorithm,
            env: EnvironmentKind::Flat,
            p_morph_mut: P_MORPH_GRID.to_vec(),
            sigma: SIGMA_GRID.to_vec(),
            repetitions: 2,
            evaluations: DEFAULT_EVALUATIONS,
            seed: 0,
            evaluator: EvaluatorSpec::Surrogate,
        }
    }

    pub fn runs(&self) -> usize {
        self.p_morph_mut.len() * self.sigma.len() * self.repetitions
    }

    fn run_config(&self, p: f64, sigma: f64, index: usize) -> RunConfig {
        let mut cfg = RunConfig::new(self.algorithm, self.env, self.evaluations, self.seed + index as u64);
        cfg.variation.p_morph_mut = p;
        cfg.variation.sigma = sigma;
        cfg.evaluator = self.evaluator.clone();
        cfg
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.p_morph_mut.is_empty() || self.sigma.is_empty() || self.repetitions == 0 {
            return Err(RunError::Config("sweep grid is empty".into()));
        }
        for (i, &p) in self.p_morph_mut.iter().enumerate() {
            for &s in &self.sigma {
                self.run_config(p, s, i).validate_fresh()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p_morph_mut: f64,
    pub sigma: f64,
    pub best_fitness: Vec<f64>,
    pub median_best_fitness: f64,
    pub predicted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Coefficients of best ~ 1 + p + σ + p·σ, absent when the grid cannot
    /// identify them.
    pub betas: Option<Vec<f64>>,
    pub r_squared: Option<f64>,
    pub model_note: Option<String>,
    pub best_p_morph_mut: f64,
    pub best_sigma: f64,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p_morph_mut,sigma,median_best_fitness,predicted_best_fitness\n");
        for r in &self.rows {
            let pred = r.predicted.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{pred}", r.p_morph_mut, r.sigma, r.median_best_fitness);
        }
        out
    }
}

fn design_row(p: f64, s: f64) -> Vec<f64> {
    vec![1.0, p, s, p * s]
}

/// Fit the interaction model and pick the combination it rates highest.
/// Falls back to the best median when the design is degenerate.
pub fn summarize_sweep(mut rows: Vec<SweepRow>) -> SweepReport {
    let mut design = Vec::new();
    let mut y = Vec::new();
    for r in &rows {
        for &b in &r.best_fitness {
            design.push(design_row(r.p_morph_mut, r.sigma));
            y.push(b);
        }
    }
    let fit: Result<OlsFit, AnalysisError> = ols_fit(&["1", "p_morph_mut", "sigma", "p_morph_mut*sigma"], &design, &y);
    let argmax = |score: &dyn Fn(&SweepRow) -> f64, rows: &[SweepRow]| {
        rows.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, r)| {
                let s = score(r);
                if s > best.1 {
                    (i, s)
                } else {
                    best
                }
            })
            .0
    };
    match fit {
        Ok(fit) => {
            for r in &mut rows {
                r.predicted = Some(fit.predict(&design_row(r.p_morph_mut, r.sigma)));
            }
            let best = argmax(&|r| r.predicted.unwrap_or(f64::NEG_INFINITY), &rows);
            SweepReport {
                best_p_morph_mut: rows[best].p_morph_mut,
                best_sigma: rows[best].sigma,
                betas: Some(fit.betas),
                r_squared: Some(fit.r_squared),
                model_note: None,
                rows,
            }
        }
        Err(e) => {
            let best = argmax(&|r| r.median_best_fitness, &rows);
            SweepReport {
                best_p_morph_mut: rows[best].p_morph_mut,
                best_sigma: rows[best].sigma,
                betas: None,
                r_squared: None,
                model_note: Some(format!("model not fitted ({e}); best combination by median")),
                rows,
            }
        }
    }
}

/// Run every grid combination `repetitions` times below `out`, then write
/// `sweep.csv` and `sweep.json`.
pub fn run_sweep(cfg: &SweepConfig, out: &Path, threads: usize) -> Result<SweepReport, RunError> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| RunError::io(out, e))?;
    let mut rows = Vec::new();
    let mut index = 0;
    for &p in &cfg.p_morph_mut {
        for &s in &cfg.sigma {
            let mut best = Vec::new();
            for rep in 0..cfg.repetitions {
                let run_cfg = cfg.run_config(p, s, index);
                index += 1;
                let dir = out.join(format!("p{p}_s{s}_r{rep}"));
                best.push(run_evolve(&run_cfg, &RunOptions::new(dir).threads(threads))?.best_fitness);
            }
            rows.push(SweepRow {
                p_morph_mut: p,
                sigma: s,
                median_best_fitness: median(&best),
                best_fitness: best,
                predicted: None,
            });
        }
    }
    let report = summarize_sweep(rows);
    let csv = out.join("sweep.csv");
    fs::write(&csv, report.to_csv()).map_err(|e| RunError::io(csv, e))?;
    let json = out.join("sweep.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    fs::write(&json, text).map_err(|e| RunError::io(json, e))?;
    Ok(report)
}
