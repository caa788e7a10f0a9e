//! CSV and SVG exports of finished runs.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::algorithms::all_cells;
use crate::error::RunError;
use crate::metrics::{bootstrap_median_band, median, project_population, CellStats};
use crate::rng::{stream, Stream};

use super::svg::{self, Curve};
use super::RunData;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    HeatmapMax,
    HeatmapMean,
    HeatmapHits,
    FitnessCurve,
    QdCurves,
    AncestryCsv,
}

impl ExportKind {
    pub const ALL: [ExportKind; 6] = [
        ExportKind::HeatmapMax,
        ExportKind::HeatmapMean,
        ExportKind::HeatmapHits,
        ExportKind::FitnessCurve,
        ExportKind::QdCurves,
        ExportKind::AncestryCsv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExportKind::HeatmapMax => "heatmap-max",
            ExportKind::HeatmapMean => "heatmap-mean",
            ExportKind::HeatmapHits => "heatmap-hits",
            ExportKind::FitnessCurve => "fitness-curve",
            ExportKind::QdCurves => "qd-curves",
            ExportKind::AncestryCsv => "ancestry-csv",
        }
    }
}

impl fmt::Display for ExportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
            format!("unknown export {s:?} (expected one of {})", names.join(", "))
        })
    }
}

struct Sink {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Sink {
    fn put(&mut self, name: &str, text: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

/// Median and 95% bootstrap band of each column of `rows`.
fn bands(columns: &[Vec<f64>]) -> Vec<(f64, f64, f64)> {
    let mut rng = stream(0, Stream::Bootstrap);
    columns
        .iter()
        .map(|c| {
            if c.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                bootstrap_median_band(c, BOOTSTRAP_RESAMPLES, &mut rng)
            }
        })
        .collect()
}

fn fmt_opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Write the requested export for each run into `out`, plus an aggregate
/// across runs when more than one is given. Returns the files written.
pub fn export(runs: &[PathBuf], what: ExportKind, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    if runs.is_empty() {
        return Err(RunError::Config("no runs to export".into()));
    }
    let data: Vec<RunData> = runs.iter().map(|d| RunData::load(d)).collect::<Result<_, _>>()?;
    fs::create_dir_all(out).map_err(|e| RunError::io(out, e))?;
    let mut sink = Sink {
        dir: out.to_path_buf(),
        written: Vec::new(),
    };
    let mut used = HashSet::new();
    let stems: Vec<String> = data
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let base = if data.len() == 1 {
                what.name().to_string()
            } else {
                format!("{}-{what}", r.run_id())
            };
            if used.insert(base.clone()) {
                base
            } else {
                format!("{base}-{i}")
            }
        })
        .collect();
    match what {
        ExportKind::HeatmapMax | ExportKind::HeatmapMean | ExportKind::HeatmapHits => {
            heatmaps(&data, &stems, what, &mut sink)?
        }
        ExportKind::FitnessCurve => fitness_curves(&data, &stems, &mut sink)?,
        ExportKind::QdCurves => qd_curves(&data, &stems, &mut sink)?,
        ExportKind::AncestryCsv => ancestry(&data, &stems, &mut sink)?,
    }
    Ok(sink.written)
}

fn heatmaps(data: &[RunData], stems: &[String], what: ExportKind, sink: &mut Sink) -> Result<(), RunError> {
    let pick = |c: Option<&CellStats>| -> Option<f64> {
        c.map(|c| match what {
            ExportKind::HeatmapMax => c.max_fitness,
            ExportKind::HeatmapMean => c.mean_fitness(),
            _ => c.count as f64,
        })
    };
    let label = match what {
        ExportKind::HeatmapMax => "max fitness",
        ExportKind::HeatmapMean => "mean fitness",
        _ => "individuals",
    };
    let projections: Vec<_> = data.iter().map(|r| project_population(r.members())).collect();
    for ((run, proj), stem) in data.iter().zip(&projections).zip(stems) {
        let mut csv = String::from("m,j,max_fitness,mean_fitness,count\n");
        for (d, c) in proj.all() {
            match c {
                Some(c) => writeln!(csv, "{},{},{},{},{}", d.m, d.j, c.max_fitness, c.mean_fitness(), c.count),
                None => writeln!(csv, "{},{},,,0", d.m, d.j),
            }
            .expect("string write");
        }
        sink.put(&format!("{stem}.csv"), &csv)?;
        let cells: Vec<_> = proj.all().map(|(d, c)| (d, pick(c))).collect();
        let title = format!("{} {} ({})", run.run_id(), label, run.algorithm());
        sink.put(&format!("{stem}.svg"), &svg::heatmap(&cells, &title, label))?;
    }
    if data.len() > 1 {
        let columns: Vec<Vec<f64>> = all_cells()
            .map(|d| {
                projections
                    .iter()
                    .filter_map(|p| match what {
                        ExportKind::HeatmapHits => Some(pick(p.get(d)).unwrap_or(0.0)),
                        _ => pick(p.get(d)),
                    })
                    .collect()
            })
            .collect();
        let stats = bands(&columns);
        let mut csv = String::from("m,j,runs,median,lo,hi\n");
        let mut cells = Vec::new();
        for ((d, col), (m, lo, hi)) in all_cells().zip(&columns).zip(&stats) {
            let occupied = projections.iter().filter(|p| p.get(d).is_some()).count();
            let _ = writeln!(csv, "{},{},{occupied},{},{},{}", d.m, d.j, fmt_opt(*m), fmt_opt(*lo), fmt_opt(*hi));
            cells.push((d, (!col.is_empty() && occupied > 0).then_some(*m)));
        }
        sink.put(&format!("{what}-aggregate.csv"), &csv)?;
        let title = format!("median {label} over {} runs", data.len());
        sink.put(&format!("{what}-aggregate.svg"), &svg::heatmap(&cells, &title, label))?;
    }
    Ok(())
}

fn best_so_far(run: &RunData) -> (Vec<f64>, Vec<f64>) {
    let mut best = f64::NEG_INFINITY;
    run.log
        .snapshots
        .iter()
        .map(|s| {
            best = best.max(s.best_fitness);
            (s.eval as f64, best)
        })
        .unzip()
}

/// Per-index columns across runs, truncated to the shortest run.
fn align(series: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    (0..len).map(|i| series.iter().map(|s| s[i]).collect()).collect()
}

fn banded_curve(label: &str, xs: &[f64], stats: &[(f64, f64, f64)]) -> Curve {
    Curve {
        label: label.to_string(),
        xs: xs[..stats.len()].to_vec(),
        ys: stats.iter().map(|s| s.0).collect(),
        band: Some((stats.iter().map(|s| s.1).collect(), stats.iter().map(|s| s.2).collect())),
    }
}

fn fitness_curves(data: &[RunData], stems: &[String], sink: &mut Sink) -> Result<(), RunError> {
    let curves: Vec<_> = data.iter().map(best_so_far).collect();
    for ((run, (xs, ys)), stem) in data.iter().zip(&curves).zip(stems) {
        let mut csv = String::from("eval,best_fitness\n");
        for (x, y) in xs.iter().zip(ys) {
            let _ = writeln!(csv, "{x},{y}");
        }
        sink.put(&format!("{stem}.csv"), &csv)?;
        let c = Curve {
            label: run.algorithm().to_string(),
            xs: xs.clone(),
            ys: ys.clone(),
            band: None,
        };
        sink.put(&format!("{stem}.svg"), &svg::curves(&[c], &run.run_id(), "evaluations", "best fitness"))?;
    }
    if data.len() > 1 {
        let ys: Vec<Vec<f64>> = curves.iter().map(|c| c.1.clone()).collect();
        let stats = bands(&align(&ys));
        let xs = &curves[0].0;
        let mut csv = String::from("eval,median,lo,hi\n");
        for (x, (m, lo, hi)) in xs.iter().zip(&stats) {
            let _ = writeln!(csv, "{x},{m},{lo},{hi}");
        }
        sink.put("fitness-curve-aggregate.csv", &csv)?;
        let c = banded_curve("median", xs, &stats);
        let title = format!("best fitness over {} runs", data.len());
        sink.put("fitness-curve-aggregate.svg", &svg::curves(&[c], &title, "evaluations", "best fitness"))?;
    }
    Ok(())
}

fn qd_curves(data: &[RunData], stems: &[String], sink: &mut Sink) -> Result<(), RunError> {
    let normalizer = data
        .iter()
        .flat_map(|r| r.log.snapshots.last().map(|s| s.coverage))
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let mut cov_series = Vec::new();
    let mut qd_series = Vec::new();
    for (run, stem) in data.iter().zip(stems) {
        let snaps = &run.log.snapshots;
        let xs: Vec<f64> = snaps.iter().map(|s| s.eval as f64).collect();
        let cov: Vec<f64> = snaps.iter().map(|s| s.coverage as f64 / normalizer).collect();
        let qd: Vec<f64> = snaps.iter().map(|s| s.qd_score).collect();
        let mut csv = String::from("eval,coverage,normalized_coverage,qd_score\n");
        for (s, c) in snaps.iter().zip(&cov) {
            let _ = writeln!(csv, "{},{},{c},{}", s.eval, s.coverage, s.qd_score);
        }
        sink.put(&format!("{stem}.csv"), &csv)?;
        let one = |ys: &Vec<f64>| Curve {
            label: run.algorithm().to_string(),
            xs: xs.clone(),
            ys: ys.clone(),
            band: None,
        };
        sink.put(&format!("{stem}-coverage.svg"), &svg::curves(&[one(&cov)], &run.run_id(), "evaluations", "normalized coverage"))?;
        sink.put(&format!("{stem}-qd_score.svg"), &svg::curves(&[one(&qd)], &run.run_id(), "evaluations", "QD-score"))?;
        cov_series.push((xs, cov));
        qd_series.push(qd);
    }
    if data.len() > 1 {
        let cov = bands(&align(&cov_series.iter().map(|c| c.1.clone()).collect::<Vec<_>>()));
        let qd = bands(&align(&qd_series));
        let xs = &cov_series[0].0;
        let mut csv = String::from(
            "eval,normalized_coverage_median,normalized_coverage_lo,normalized_coverage_hi,qd_score_median,qd_score_lo,qd_score_hi\n",
        );
        for ((x, c), q) in xs.iter().zip(&cov).zip(&qd) {
            let _ = writeln!(csv, "{x},{},{},{},{},{},{}", c.0, c.1, c.2, q.0, q.1, q.2);
        }
        sink.put("qd-curves-aggregate.csv", &csv)?;
        let n = data.len();
        sink.put(
            "qd-curves-aggregate-coverage.svg",
            &svg::curves(&[banded_curve("median", xs, &cov)], &format!("coverage over {n} runs"), "evaluations", "normalized coverage"),
        )?;
        sink.put(
            "qd-curves-aggregate-qd_score.svg",
            &svg::curves(&[banded_curve("median", xs, &qd)], &format!("QD-score over {n} runs"), "evaluations", "QD-score"),
        )?;
    }
    Ok(())
}

fn ancestry(data: &[RunData], stems: &[String], sink: &mut Sink) -> Result<(), RunError> {
    let mut runs_csv = String::from("run_id,algorithm,max_fitness,final_coverage,final_qdscore\n");
    let mut summary = String::from("run_id,n_focal,median_n_ancestors,median_anc_coverage,median_anc_qdscore,mean_age\n");
    for (run, stem) in data.iter().zip(stems) {
        let dag = run.ancestry()?;
        let rows = run.focal_ancestry(&dag)?;
        let mut csv = String::from("focal_id,n_ancestors,anc_coverage,anc_qdscore,age\n");
        for r in &rows {
            let _ = writeln!(csv, "{},{},{},{},{}", r.focal_id, r.n_ancestors, r.anc_coverage, r.anc_qdscore, r.age);
        }
        sink.put(&format!("{stem}.csv"), &csv)?;
        let _ = writeln!(
            runs_csv,
            "{},{},{},{},{}",
            run.run_id(),
            run.algorithm(),
            run.best_fitness(),
            run.coverage(),
            run.qd_score()
        );
        let col = |f: &dyn Fn(&crate::genealogy::FocalAncestry) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
        let ages = col(&|r| r.age as f64);
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{}",
            run.run_id(),
            rows.len(),
            median(&col(&|r| r.n_ancestors as f64)),
            median(&col(&|r| r.anc_coverage as f64)),
            median(&col(&|r| r.anc_qdscore)),
            ages.iter().sum::<f64>() / ages.len() as f64
        );
    }
    sink.put("runs.csv", &runs_csv)?;
    sink.put("ancestry-summary.csv", &summary)
}
