//! Structured MAP-Elites archive over `(non-movable, movable)` counts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Individual;
use crate::morphology::{Descriptor, MAX_MODULES};

pub const CURIOSITY_REWARD: f64 = 1.0;
pub const CURIOSITY_PENALTY: f64 = 0.5;

/// Number of reachable cells: `m >= 1`, `j >= 0`, `m + j <= 20`.
pub const REACHABLE_CELLS: usize = MAX_MODULES * (MAX_MODULES + 1) / 2;

const SIDE: usize = MAX_MODULES;

/// Grid index `(m - 1, j)` of a descriptor.
pub fn cell_index(d: Descriptor) -> (usize, usize) {
    assert!(
        d.m >= 1 && d.total() <= MAX_MODULES,
        "descriptor {d:?} outside the archive"
    );
    (d.m - 1, d.j)
}

pub fn is_valid_cell(row: usize, col: usize) -> bool {
    row < SIDE && col < SIDE && row + 1 + col <= MAX_MODULES
}

/// Every reachable descriptor in row-major cell order.
pub fn all_cells() -> impl Iterator<Item = Descriptor> {
    (1..=MAX_MODULES).flat_map(|m| (0..=MAX_MODULES - m).map(move |j| Descriptor::new(m, j)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertOutcome {
    pub inserted: bool,
    pub evicted: Option<Individual>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Individual>", into = "Vec<Individual>")]
pub struct Archive {
    cells: HashMap<(usize, usize), Individual>,
}

impl From<Vec<Individual>> for Archive {
    fn from(elites: Vec<Individual>) -> Self {
        let mut a = Archive::default();
        for e in elites {
            a.cells.insert(cell_index(e.descriptor), e);
        }
        a
    }
}

impl From<Archive> for Vec<Individual> {
    fn from(a: Archive) -> Self {
        a.into_elites()
    }
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, d: Descriptor) -> Option<&Individual> {
        self.cells.get(&cell_index(d))
    }

    /// Elites in row-major cell order.
    pub fn elites(&self) -> Vec<&Individual> {
        let mut out: Vec<&Individual> = self.cells.values().collect();
        out.sort_by_key(|e| cell_index(e.descriptor));
        out
    }

    pub fn into_elites(self) -> Vec<Individual> {
        let mut out: Vec<Individual> = self.cells.into_values().collect();
        out.sort_by_key(|e| cell_index(e.descriptor));
        out
    }

    fn find_mut(&mut self, id: u64) -> Option<&mut Individual> {
        self.cells.values_mut().find(|e| e.id == id)
    }

    /// Insert when the cell is empty or the child is strictly fitter. Parents
    /// still in the archive gain curiosity on success and lose it otherwise.
    pub fn insert(&mut self, child: Individual, parents: &[u64]) -> InsertOutcome {
        let key = cell_index(child.descriptor);
        let accept = self
            .cells
            .get(&key)
            .is_none_or(|incumbent| child.fitness > incumbent.fitness);
        let delta = if accept {
            CURIOSITY_REWARD
        } else {
            -CURIOSITY_PENALTY
        };
        for &pid in parents {
            if let Some(p) = self.find_mut(pid) {
                p.curiosity += delta;
            }
        }
        if accept {
            let evicted = self.cells.insert(key, child);
            InsertOutcome {
                inserted: true,
                evicted,
            }
        } else {
            InsertOutcome {
                inserted: false,
                evicted: None,
            }
        }
    }
}

pub fn qdsa_insert(archive: &mut Archive, child: Individual, parents: &[u64]) -> bool {
    archive.insert(child, parents).inserted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::MorphologyTree;

    fn ind(id: u64, d: (usize, usize), fitness: f64) -> Individual {
        Individual {
            id,
            genome: MorphologyTree::root_only(),
            fitness,
            descriptor: Descriptor::new(d.0, d.1),
            parent_ids: vec![],
            birth_eval: id,
            curiosity: 0.0,
        }
    }

    #[test]
    fn reachable_cell_count() {
        assert_eq!(REACHABLE_CELLS, 210);
        assert_eq!(all_cells().count(), 210);
        let grid = (0..SIDE).flat_map(|r| (0..SIDE).map(move |c| (r, c)));
        assert_eq!(grid.filter(|&(r, c)| is_valid_cell(r, c)).count(), 210);
        assert_eq!(cell_index(Descriptor::new(1, 0)), (0, 0));
    }

    #[test]
    fn empty_cell_accepts_and_rewards_parent() {
        let mut a = Archive::new();
        a.insert(ind(1, (1, 0), 1.0), &[]);
        assert!(qdsa_insert(&mut a, ind(2, (2, 0), 0.1), &[1]));
        assert_eq!(a.get(Descriptor::new(1, 0)).unwrap().curiosity, 1.0);
    }

    #[test]
    fn ties_reject_and_penalize() {
        let mut a = Archive::new();
        a.insert(ind(1, (1, 0), 5.0), &[]);
        a.insert(ind(2, (2, 0), 1.0), &[]);
        assert!(!qdsa_insert(&mut a, ind(3, (1, 0), 5.0), &[2]));
        assert_eq!(a.get(Descriptor::new(1, 0)).unwrap().id, 1);
        assert_eq!(a.get(Descriptor::new(2, 0)).unwrap().curiosity, -0.5);
    }

    #[test]
    fn crossover_child_rewards_both_parents() {
        let mut a = Archive::new();
        a.insert(ind(1, (1, 0), 1.0), &[]);
        a.insert(ind(2, (2, 0), 1.0), &[]);
        let out = a.insert(ind(3, (1, 0), 2.0), &[1, 2]);
        assert!(out.inserted);
        // parent 1 was rewarded before being evicted by its own child
        assert_eq!(out.evicted.unwrap().curiosity, 1.0);
        assert_eq!(a.get(Descriptor::new(2, 0)).unwrap().curiosity, 1.0);
        assert_eq!(a.len(), 2);
    }

    #[test]
    #[should_panic]
    fn unreachable_descriptor_panics() {
        cell_index(Descriptor::new(15, 6));
    }
}
