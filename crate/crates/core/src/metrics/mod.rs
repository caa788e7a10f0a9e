//! Quality-diversity metrics over populations and archives.

mod stats;

pub use stats::{
    bootstrap_median_band, holm_correct, mann_whitney_u, median, pearson, percentile, MannWhitney,
    EXACT_MAX_SAMPLE,
};

use std::collections::BTreeMap;

use crate::algorithms::{all_cells, cell_index, Individual};
use crate::error::AnalysisError;
use crate::morphology::Descriptor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub max_fitness: f64,
    pub sum_fitness: f64,
    pub count: usize,
}

impl CellStats {
    pub fn mean_fitness(&self) -> f64 {
        self.sum_fitness / self.count as f64
    }
}

/// Per-niche aggregates on the archive grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Projection {
    cells: BTreeMap<(usize, usize), CellStats>,
}

impl Projection {
    pub fn from_points(points: impl IntoIterator<Item = (Descriptor, f64)>) -> Self {
        let mut cells: BTreeMap<(usize, usize), CellStats> = BTreeMap::new();
        for (d, f) in points {
            cells
                .entry(cell_index(d))
                .and_modify(|c| {
                    c.max_fitness = c.max_fitness.max(f);
                    c.sum_fitness += f;
                    c.count += 1;
                })
                .or_insert(CellStats {
                    max_fitness: f,
                    sum_fitness: f,
                    count: 1,
                });
        }
        Self { cells }
    }

    pub fn get(&self, d: Descriptor) -> Option<&CellStats> {
        self.cells.get(&cell_index(d))
    }

    /// Occupied cells in row-major order.
    pub fn occupied(&self) -> impl Iterator<Item = (Descriptor, &CellStats)> {
        self.cells
            .iter()
            .map(|(&(r, c), s)| (Descriptor::new(r + 1, c), s))
    }

    /// All reachable cells, `None` where nothing landed.
    pub fn all(&self) -> impl Iterator<Item = (Descriptor, Option<&CellStats>)> + '_ {
        all_cells().map(|d| (d, self.cells.get(&cell_index(d))))
    }

    pub fn coverage(&self) -> usize {
        self.cells.len()
    }

    /// Sum of per-cell maxima.
    pub fn qd_score(&self) -> f64 {
        self.cells.values().map(|c| c.max_fitness).sum()
    }

    pub fn total_count(&self) -> usize {
        self.cells.values().map(|c| c.count).sum()
    }
}

pub fn project_population<'a>(pop: impl IntoIterator<Item = &'a Individual>) -> Projection {
    Projection::from_points(pop.into_iter().map(|i| (i.descriptor, i.fitness)))
}

/// Number of occupied niches.
pub fn coverage<'a>(pop: impl IntoIterator<Item = &'a Individual>) -> usize {
    project_population(pop).coverage()
}

/// Raw coverage divided by the largest raw coverage among `runs`.
pub fn normalized_coverage(raw: usize, runs: &[usize]) -> Result<f64, AnalysisError> {
    let normalizer = runs.iter().copied().max().unwrap_or(0);
    if normalizer == 0 {
        return Err(AnalysisError::NoRuns);
    }
    Ok(raw as f64 / normalizer as f64)
}

/// Sum of the best fitness in every occupied niche. For an archive this is
/// the sum of elite fitness.
pub fn qd_score<'a>(pop: impl IntoIterator<Item = &'a Individual>) -> f64 {
    project_population(pop).qd_score()
}

pub fn best_fitness<'a>(pop: impl IntoIterator<Item = &'a Individual>) -> f64 {
    pop.into_iter().map(|i| i.fitness).fold(0.0, f64::max)
}
