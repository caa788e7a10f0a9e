//! Pairwise group comparisons with Holm-adjusted Mann-Whitney tests.

use std::fmt::{self, Write as _};
use std::path::PathBuf;

use serde::Serialize;

use crate::error::RunError;
use crate::metrics::{holm_correct, mann_whitney_u};

use super::RunData;

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    BestFitness,
    Coverage,
    QdScore,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::BestFitness, Metric::Coverage, Metric::QdScore];

    fn of(self, run: &RunData) -> f64 {
        match self {
            Metric::BestFitness => run.best_fitness(),
            Metric::Coverage => run.coverage() as f64,
            Metric::QdScore => run.qd_score(),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::BestFitness => "best_fitness",
            Metric::Coverage => "coverage",
            Metric::QdScore => "qd_score",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub metric: Metric,
    pub group_a: String,
    pub group_b: String,
    pub u: f64,
    pub p: f64,
    pub p_holm: f64,
    pub significant: bool,
}

/// Compare every pair of labelled groups on the given metrics. Holm's
/// correction runs over the pairs of each metric separately.
pub fn compare_groups(groups: &[(String, Vec<PathBuf>)], metrics: &[Metric]) -> Result<Vec<Comparison>, RunError> {
    if groups.len() < 2 {
        return Err(RunError::Config("need at least two groups".into()));
    }
    if let Some((label, runs)) = groups.iter().find(|(_, runs)| runs.len() < 2) {
        return Err(RunError::Config(format!("group {label} has {} run(s); need at least 2", runs.len())));
    }
    let loaded: Vec<(String, Vec<RunData>)> = groups
        .iter()
        .map(|(label, dirs)| Ok((label.clone(), dirs.iter().map(|d| RunData::load(d)).collect::<Result<_, RunError>>()?)))
        .collect::<Result<_, RunError>>()?;
    let mut out = Vec::new();
    for &metric in metrics {
        let values: Vec<Vec<f64>> = loaded
            .iter()
            .map(|(_, runs)| runs.iter().map(|r| metric.of(r)).collect())
            .collect();
        let mut rows = Vec::new();
        for i in 0..loaded.len() {
            for j in i + 1..loaded.len() {
                let t = mann_whitney_u(&values[i], &values[j]);
                rows.push(Comparison {
                    metric,
                    group_a: loaded[i].0.clone(),
                    group_b: loaded[j].0.clone(),
                    u: t.u,
                    p: t.p,
                    p_holm: 0.0,
                    significant: false,
                });
            }
        }
        let adjusted = holm_correct(&rows.iter().map(|r| r.p).collect::<Vec<_>>());
        for (r, adj) in rows.iter_mut().zip(adjusted) {
            r.p_holm = adj;
            r.significant = adj < ALPHA;
        }
        out.extend(rows);
    }
    Ok(out)
}

pub fn comparisons_csv(rows: &[Comparison]) -> String {
    let mut out = String::from("metric,group_a,group_b,u,p,p_holm,significant\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.metric, r.group_a, r.group_b, r.u, r.p, r.p_holm, r.significant
        );
    }
    out
}
