//! Ancestry reconstruction from birth records and the stepping-stone
//! analyses built on it.

mod ols;

pub use ols::{ols_fit, OlsFit};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgorithmKind, Individual};
use crate::error::AnalysisError;
use crate::metrics::{percentile, Projection};
use crate::morphology::Descriptor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthRecord {
    pub id: u64,
    pub parent_ids: Vec<u64>,
    pub birth_eval: u64,
    pub fitness: f64,
    pub descriptor: Descriptor,
    pub algorithm: AlgorithmKind,
    pub run_id: String,
}

impl BirthRecord {
    pub fn from_individual(ind: &Individual, algorithm: AlgorithmKind, run_id: &str) -> Self {
        Self {
            id: ind.id,
            parent_ids: ind.parent_ids.clone(),
            birth_eval: ind.birth_eval,
            fitness: ind.fitness,
            descriptor: ind.descriptor,
            algorithm,
            run_id: run_id.to_string(),
        }
    }
}

/// Births keyed by id. Parents always precede their children, so the graph
/// is acyclic by construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AncestryDag {
    nodes: BTreeMap<u64, BirthRecord>,
}

impl AncestryDag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: impl IntoIterator<Item = BirthRecord>) -> Result<Self, AnalysisError> {
        let mut dag = Self::new();
        for r in records {
            dag.insert(r)?;
        }
        Ok(dag)
    }

    /// Add one birth. Every parent must already be present and born earlier.
    pub fn insert(&mut self, record: BirthRecord) -> Result<(), AnalysisError> {
        for p in &record.parent_ids {
            let parent = self.nodes.get(p).ok_or(AnalysisError::UnknownId(*p))?;
            if parent.birth_eval >= record.birth_eval {
                return Err(AnalysisError::Invalid(format!(
                    "parent {p} of {} is not born earlier",
                    record.id
                )));
            }
        }
        if self.nodes.contains_key(&record.id) {
            return Err(AnalysisError::Invalid(format!("duplicate id {}", record.id)));
        }
        self.nodes.insert(record.id, record);
        Ok(())
    }

    /// Merge another DAG whose ids do not collide with ours.
    pub fn extend(&mut self, other: AncestryDag) -> Result<(), AnalysisError> {
        let mut records: Vec<BirthRecord> = other.nodes.into_values().collect();
        records.sort_by_key(|r| (r.birth_eval, r.id));
        for r in records {
            self.insert(r)?;
        }
        Ok(())
    }

    pub fn get(&self, id: u64) -> Option<&BirthRecord> {
        self.nodes.get(&id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &BirthRecord> {
        self.nodes.values()
    }

    fn require(&self, id: u64) -> Result<&BirthRecord, AnalysisError> {
        self.nodes.get(&id).ok_or(AnalysisError::UnknownId(id))
    }
}

/// All distinct ancestors of `focal` (focal excluded), ordered by id.
pub fn extract_ancestry(dag: &AncestryDag, focal: u64) -> Result<Vec<&BirthRecord>, AnalysisError> {
    let start = dag.require(focal)?;
    let mut seen = BTreeSet::new();
    let mut stack: Vec<u64> = start.parent_ids.clone();
    while let Some(id) = stack.pop() {
        if seen.insert(id) {
            stack.extend(dag.require(id)?.parent_ids.iter().copied());
        }
    }
    Ok(seen.into_iter().map(|id| &dag.nodes[&id]).collect())
}

/// Coverage and QD-score of the focal individual together with its
/// ancestors, projected onto the descriptor grid.
pub fn ancestry_qd(dag: &AncestryDag, focal: u64) -> Result<(usize, f64), AnalysisError> {
    let me = dag.require(focal)?;
    let ancestors = extract_ancestry(dag, focal)?;
    let proj = Projection::from_points(
        ancestors
            .iter()
            .copied()
            .chain(std::iter::once(me))
            .map(|r| (r.descriptor, r.fitness)),
    );
    Ok((proj.coverage(), proj.qd_score()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

pub fn age(dag: &AncestryDag, id: u64, now_eval: u64) -> Result<u64, AnalysisError> {
    Ok(now_eval.saturating_sub(dag.require(id)?.birth_eval))
}

/// Age summary of the live set, where age is evaluations since birth.
pub fn population_age_stats(
    dag: &AncestryDag,
    live: &HashSet<u64>,
    now_eval: u64,
) -> Result<AgeStats, AnalysisError> {
    if live.is_empty() {
        return Err(AnalysisError::Invalid("empty live set".into()));
    }
    let ages: Vec<f64> = live
        .iter()
        .map(|&id| age(dag, id, now_eval).map(|a| a as f64))
        .collect::<Result<_, _>>()?;
    Ok(AgeStats {
        count: ages.len(),
        mean: ages.iter().sum::<f64>() / ages.len() as f64,
        min: percentile(&ages, 0.0),
        q25: percentile(&ages, 25.0),
        median: percentile(&ages, 50.0),
        q75: percentile(&ages, 75.0),
        max: percentile(&ages, 100.0),
    })
}

/// One row of the per-focal ancestry table.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalAncestry {
    pub focal_id: u64,
    pub n_ancestors: usize,
    pub anc_coverage: usize,
    pub anc_qdscore: f64,
    pub age: u64,
}

pub fn focal_table(dag: &AncestryDag, focal_ids: &[u64], now_eval: u64) -> Result<Vec<FocalAncestry>, AnalysisError> {
    focal_ids
        .iter()
        .map(|&id| {
            let (anc_coverage, anc_qdscore) = ancestry_qd(dag, id)?;
            Ok(FocalAncestry {
                focal_id: id,
                n_ancestors: extract_ancestry(dag, id)?.len(),
                anc_coverage,
                anc_qdscore,
                age: age(dag, id, now_eval)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: u64, parents: &[u64], eval: u64, fitness: f64, m: usize, j: usize) -> BirthRecord {
        BirthRecord {
            id,
            parent_ids: parents.to_vec(),
            birth_eval: eval,
            fitness,
            descriptor: Descriptor::new(m, j),
            algorithm: AlgorithmKind::Qdsa,
            run_id: "t".into(),
        }
    }

    fn ids(v: &[&BirthRecord]) -> Vec<u64> {
        v.iter().map(|r| r.id).collect()
    }

    #[test]
    fn simple_ancestries() {
        let dag = AncestryDag::from_records([
            rec(0, &[], 0, 1.0, 1, 0),
            rec(1, &[0], 1, 1.0, 1, 0),
            rec(2, &[1], 2, 1.0, 1, 0),
        ])
        .unwrap();
        assert!(extract_ancestry(&dag, 0).unwrap().is_empty());
        assert_eq!(ids(&extract_ancestry(&dag, 2).unwrap()), vec![0, 1]);
        assert_eq!(extract_ancestry(&dag, 9), Err(AnalysisError::UnknownId(9)));
        assert_eq!(ancestry_qd(&dag, 2).unwrap(), (1, 1.0));
    }

    #[test]
    fn diamond_counts_grandparent_once() {
        let dag = AncestryDag::from_records([
            rec(0, &[], 0, 1.0, 1, 0),
            rec(1, &[0], 1, 2.0, 2, 0),
            rec(2, &[0], 2, 3.0, 1, 1),
            rec(3, &[1, 2], 3, 4.0, 2, 1),
        ])
        .unwrap();
        assert_eq!(ids(&extract_ancestry(&dag, 3).unwrap()), vec![0, 1, 2]);
        assert_eq!(ancestry_qd(&dag, 3).unwrap(), (4, 10.0));
    }

    #[test]
    fn parentless_focal() {
        let dag = AncestryDag::from_records([rec(5, &[], 0, 3.0, 1, 0)]).unwrap();
        assert_eq!(ancestry_qd(&dag, 5).unwrap(), (1, 3.0));
    }

    #[test]
    fn eight_ancestors_two_cells() {
        // a binary-ish tree of 8 ancestors over two cells with maxes 4 and 6
        let a = (1, 0);
        let b = (2, 1);
        let dag = AncestryDag::from_records([
            rec(0, &[], 0, 1.0, a.0, a.1),
            rec(1, &[], 1, 2.0, a.0, a.1),
            rec(2, &[], 2, 5.0, b.0, b.1),
            rec(3, &[0, 1], 3, 4.0, a.0, a.1),
            rec(4, &[2], 4, 6.0, b.0, b.1),
            rec(5, &[3], 5, 3.0, a.0, a.1),
            rec(6, &[4, 5], 6, 2.5, b.0, b.1),
            rec(7, &[6], 7, 1.5, a.0, a.1),
            rec(8, &[7], 8, 0.5, b.0, b.1),
        ])
        .unwrap();
        assert_eq!(extract_ancestry(&dag, 8).unwrap().len(), 8);
        assert_eq!(ancestry_qd(&dag, 8).unwrap(), (2, 10.0));
    }

    #[test]
    fn rejects_unknown_parent_and_time_travel() {
        let mut dag = AncestryDag::new();
        assert_eq!(dag.insert(rec(1, &[0], 1, 0.0, 1, 0)), Err(AnalysisError::UnknownId(0)));
        dag.insert(rec(0, &[], 3, 0.0, 1, 0)).unwrap();
        assert!(dag.insert(rec(1, &[0], 3, 0.0, 1, 0)).is_err());
        assert!(dag.insert(rec(0, &[], 4, 0.0, 1, 0)).is_err());
    }

    #[test]
    fn ages() {
        let dag = AncestryDag::from_records([rec(0, &[], 200, 0.0, 1, 0), rec(1, &[], 900, 0.0, 1, 0)]).unwrap();
        assert_eq!(age(&dag, 0, 1000).unwrap(), 800);
        let s = population_age_stats(&dag, &HashSet::from([0, 1]), 1000).unwrap();
        assert_eq!(s.mean, 450.0);
        assert_eq!((s.min, s.max, s.count), (100.0, 800.0, 2));
        assert!(population_age_stats(&dag, &HashSet::from([7]), 1000).is_err());
    }

    fn random_dag(spec: &[(Vec<usize>, f64, usize, usize)]) -> AncestryDag {
        let mut dag = AncestryDag::new();
        for (i, (parents, fit, m, j)) in spec.iter().enumerate() {
            let ps: BTreeSet<u64> = if i == 0 {
                BTreeSet::new()
            } else {
                parents.iter().map(|p| (p % i) as u64).collect()
            };
            let ps: Vec<u64> = ps.into_iter().collect();
            dag.insert(rec(i as u64, &ps, i as u64, *fit, *m, *j)).unwrap();
        }
        dag
    }

    proptest! {
        #[test]
        fn ancestry_bounds_and_monotone_extension(
            spec in prop::collection::vec(
                (prop::collection::vec(0usize..1000, 0..3), 0.0f64..10.0, 1usize..4, 0usize..4),
                1..40,
            ),
        ) {
            let dag = random_dag(&spec);
            let half = random_dag(&spec[..spec.len().div_ceil(2)]);
            for r in half.records() {
                let small = ids(&extract_ancestry(&half, r.id).unwrap());
                let big = ids(&extract_ancestry(&dag, r.id).unwrap());
                prop_assert_eq!(small, big);
            }
            for r in dag.records() {
                let anc = extract_ancestry(&dag, r.id).unwrap();
                let (cov, qd) = ancestry_qd(&dag, r.id).unwrap();
                prop_assert!(cov <= anc.len() + 1);
                let total: f64 = anc.iter().map(|a| a.fitness).sum::<f64>() + r.fitness;
                prop_assert!(qd <= total + 1e-12);
                prop_assert!(!anc.iter().any(|a| a.id == r.id));
            }
        }
    }
}
