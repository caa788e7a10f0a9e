//! The three search algorithms and their shared variation pipeline.
//!
//! * SOFO: generational EA on fitness alone with 10 elites.
//! * MOFD: NSGA-II on fitness plus two morphological diversity objectives.
//! * QDSA: MAP-Elites over the morphological descriptor grid with
//!   curiosity-driven parent selection.
//!
//! Every step consumes exactly one batch of evaluations. Random draws happen
//! on the orchestrator in child order, so evaluation parallelism never
//! changes a run.

pub mod archive;
pub mod nsga;

pub use archive::{
    all_cells, cell_index, is_valid_cell, qdsa_insert, Archive, InsertOutcome, CURIOSITY_PENALTY,
    CURIOSITY_REWARD, REACHABLE_CELLS,
};
pub use nsga::{
    crowded_cmp, crowding_distance, diversity, dominates, fronts, mofd_objectives, mofd_survivors,
    morph_distance, nondominated_sort, rank_and_crowding, MAXIMIZE_ALL,
};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::evaluator::{EvaluationResult, Evaluator};
use crate::morphology::{
    crossover_branch_exchange, mutate_morphology, random_morphology, Descriptor, MorphologyTree,
    MAX_MODULES,
};
use crate::rng::Streams;

pub const BATCH_SIZE: usize = 200;
pub const POPULATION_SIZE: usize = 200;
pub const QDSA_INIT_SIZE: usize = 1000;
pub const SOFO_ELITES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Sofo,
    Mofd,
    Qdsa,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 3] = [AlgorithmKind::Sofo, AlgorithmKind::Mofd, AlgorithmKind::Qdsa];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Sofo => "sofo",
            AlgorithmKind::Mofd => "mofd",
            AlgorithmKind::Qdsa => "qdsa",
        }
    }

    /// Random genomes evaluated before the first step.
    pub fn init_size(self) -> usize {
        match self {
            AlgorithmKind::Qdsa => QDSA_INIT_SIZE,
            _ => POPULATION_SIZE,
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sofo" => Ok(AlgorithmKind::Sofo),
            "mofd" => Ok(AlgorithmKind::Mofd),
            "qdsa" => Ok(AlgorithmKind::Qdsa),
            other => Err(format!("unknown algorithm `{other}` (sofo, mofd, qdsa)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: u64,
    pub genome: MorphologyTree,
    pub fitness: f64,
    pub descriptor: Descriptor,
    /// Empty for random genomes, one id for mutation, two for crossover.
    pub parent_ids: Vec<u64>,
    /// Index of the evaluation that produced this individual.
    pub birth_eval: u64,
    #[serde(default)]
    pub curiosity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationConfig {
    pub p_crossover: f64,
    pub p_controller_mut: f64,
    pub p_morph_mut: f64,
    pub sigma: f64,
}

impl VariationConfig {
    pub fn for_algorithm(kind: AlgorithmKind) -> Self {
        let (p_morph_mut, sigma) = match kind {
            AlgorithmKind::Qdsa => (0.4, 0.005),
            _ => (0.2, 0.01),
        };
        Self {
            p_crossover: 0.2,
            p_controller_mut: 1.0,
            p_morph_mut,
            sigma,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [
            ("p_crossover", self.p_crossover),
            ("p_controller_mut", self.p_controller_mut),
            ("p_morph_mut", self.p_morph_mut),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(format!("sigma = {} must be positive", self.sigma));
        }
        Ok(())
    }
}

/// Produce one child genome. Crossover (keeping the first offspring), then
/// structural mutation, then controller mutation on every servo. Returns the
/// genome and whether the second parent contributed.
pub fn variation<R: Rng + ?Sized>(
    parents: &[&Individual],
    cfg: &VariationConfig,
    rng: &mut R,
) -> (MorphologyTree, bool) {
    assert!(matches!(parents.len(), 1 | 2), "variation takes one or two parents");
    let mut genome = parents[0].genome.clone();
    let mut crossed = false;
    if parents.len() == 2 && rng.random_bool(cfg.p_crossover) {
        let out = crossover_branch_exchange(&parents[0].genome, &parents[1].genome, rng);
        if !out.noop {
            genome = out.offspring.0;
            crossed = true;
        }
    }
    if rng.random_bool(cfg.p_morph_mut) {
        genome = mutate_morphology(&genome, rng);
    }
    if rng.random_bool(cfg.p_controller_mut) {
        for c in genome.controllers_mut() {
            *c = c.mutate(cfg.sigma, rng);
        }
    }
    (genome, crossed)
}

/// Binary tournament: two uniform draws with replacement, `better` decides,
/// exact ties go to a coin flip on the tie-break stream.
fn tournament<R: Rng, T: Rng>(
    n: usize,
    selection: &mut R,
    tie_break: &mut T,
    cmp: impl Fn(usize, usize) -> std::cmp::Ordering,
) -> usize {
    let a = selection.random_range(0..n);
    let b = selection.random_range(0..n);
    match cmp(a, b) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if tie_break.random_bool(0.5) {
                a
            } else {
                b
            }
        }
    }
}

/// Stable sort by descending fitness.
fn by_fitness_desc(v: &mut [Individual]) {
    v.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
}

/// Next SOFO generation: the 10 fittest of the old population and the 190
/// fittest children.
pub fn sofo_survivors(mut old: Vec<Individual>, mut children: Vec<Individual>) -> Vec<Individual> {
    by_fitness_desc(&mut old);
    by_fitness_desc(&mut children);
    old.truncate(SOFO_ELITES);
    children.truncate(POPULATION_SIZE - SOFO_ELITES);
    old.extend(children);
    old
}

/// Population built from a seeding batch: fittest first, truncated.
pub fn seed_population(mut births: Vec<Individual>, size: usize) -> Vec<Individual> {
    by_fitness_desc(&mut births);
    births.truncate(size);
    births
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "members", rename_all = "lowercase")]
pub enum Population {
    Sofo(Vec<Individual>),
    Mofd(Vec<Individual>),
    Qdsa(Archive),
}

impl Population {
    pub fn empty(kind: AlgorithmKind) -> Self {
        match kind {
            AlgorithmKind::Sofo => Population::Sofo(Vec::new()),
            AlgorithmKind::Mofd => Population::Mofd(Vec::new()),
            AlgorithmKind::Qdsa => Population::Qdsa(Archive::new()),
        }
    }

    pub fn kind(&self) -> AlgorithmKind {
        match self {
            Population::Sofo(_) => AlgorithmKind::Sofo,
            Population::Mofd(_) => AlgorithmKind::Mofd,
            Population::Qdsa(_) => AlgorithmKind::Qdsa,
        }
    }

    /// Current members; archive elites in cell order.
    pub fn members(&self) -> Vec<&Individual> {
        match self {
            Population::Sofo(v) | Population::Mofd(v) => v.iter().collect(),
            Population::Qdsa(a) => a.elites(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Population::Sofo(v) | Population::Mofd(v) => v.len(),
            Population::Qdsa(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Install the individuals of a seeding batch (random init or transition
    /// seeds). Returns the ids of archive elites displaced along the way.
    pub fn seed(&mut self, births: Vec<Individual>) -> Vec<u64> {
        match self {
            Population::Sofo(v) | Population::Mofd(v) => {
                *v = seed_population(births, POPULATION_SIZE);
                Vec::new()
            }
            Population::Qdsa(a) => births
                .into_iter()
                .filter_map(|b| a.insert(b, &[]).evicted.map(|e| e.id))
                .collect(),
        }
    }

    /// Fold one batch of evaluated children in. Returns displaced archive
    /// elites.
    pub fn absorb(&mut self, children: Vec<Individual>) -> Vec<u64> {
        match self {
            Population::Sofo(v) => {
                let old = std::mem::take(v);
                *v = sofo_survivors(old, children);
                Vec::new()
            }
            Population::Mofd(v) => {
                let mut union = std::mem::take(v);
                union.extend(children);
                *v = mofd_survivors(union, POPULATION_SIZE);
                Vec::new()
            }
            Population::Qdsa(a) => {
                let mut deaths = Vec::new();
                for child in children {
                    let parents = child.parent_ids.clone();
                    if let Some(e) = a.insert(child, &parents).evicted {
                        deaths.push(e.id);
                    }
                }
                deaths
            }
        }
    }
}

/// Everything produced by one batch.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub births: Vec<Individual>,
    pub deaths: Vec<u64>,
}

/// A running search: population state, counters and random streams.
pub struct Search {
    pub kind: AlgorithmKind,
    pub cfg: VariationConfig,
    pub population: Population,
    /// Evaluations performed so far (also the next birth index).
    pub eval_count: u64,
    pub next_id: u64,
    streams: Streams,
}

impl Search {
    pub fn new(kind: AlgorithmKind, cfg: VariationConfig, seed: u64) -> Self {
        Self::resume(kind, cfg, seed, 0, 0)
    }

    /// Start with counters continuing from an earlier run.
    pub fn resume(kind: AlgorithmKind, cfg: VariationConfig, seed: u64, eval_count: u64, next_id: u64) -> Self {
        Self {
            kind,
            cfg,
            population: Population::empty(kind),
            eval_count,
            next_id,
            streams: Streams::new(seed),
        }
    }

    pub fn members(&self) -> Vec<&Individual> {
        self.population.members()
    }

    fn evaluate(
        &mut self,
        genomes: Vec<(MorphologyTree, Vec<u64>)>,
        evaluator: &mut dyn Evaluator,
    ) -> Result<Vec<Individual>, EvalError> {
        let trees: Vec<MorphologyTree> = genomes.iter().map(|(g, _)| g.clone()).collect();
        let results = evaluator.evaluate_batch(&trees)?;
        assert_eq!(results.len(), trees.len(), "evaluator must answer every genome");
        Ok(genomes
            .into_iter()
            .zip(results)
            .map(|((genome, parent_ids), r): (_, EvaluationResult)| {
                let ind = Individual {
                    id: self.next_id,
                    genome,
                    fitness: r.fitness,
                    descriptor: r.descriptor,
                    parent_ids,
                    birth_eval: self.eval_count,
                    curiosity: 0.0,
                };
                self.next_id += 1;
                self.eval_count += 1;
                ind
            })
            .collect())
    }

    /// Evaluate the initial batch of random genomes.
    pub fn initialize(&mut self, evaluator: &mut dyn Evaluator) -> Result<StepReport, EvalError> {
        let genomes = (0..self.kind.init_size())
            .map(|_| (random_morphology(&mut self.streams.init, MAX_MODULES), Vec::new()))
            .collect();
        self.seed_with(genomes, evaluator)
    }

    /// Re-evaluate carried-over genomes (each tagged with its source id) in
    /// this search's environment and install them. SOFO/MOFD targets are
    /// padded with random genomes up to the population size, then truncated
    /// to the fittest.
    pub fn seed_from(
        &mut self,
        mut seeds: Vec<(MorphologyTree, Vec<u64>)>,
        evaluator: &mut dyn Evaluator,
    ) -> Result<StepReport, EvalError> {
        if self.kind != AlgorithmKind::Qdsa {
            while seeds.len() < POPULATION_SIZE {
                seeds.push((random_morphology(&mut self.streams.init, MAX_MODULES), Vec::new()));
            }
        }
        self.seed_with(seeds, evaluator)
    }

    fn seed_with(
        &mut self,
        genomes: Vec<(MorphologyTree, Vec<u64>)>,
        evaluator: &mut dyn Evaluator,
    ) -> Result<StepReport, EvalError> {
        let births = self.evaluate(genomes, evaluator)?;
        let deaths = self.population.seed(births.clone());
        Ok(StepReport { births, deaths })
    }

    /// Parent pairs for one batch.
    fn select_pairs(&mut self) -> Vec<(usize, usize)> {
        let members = self.population.members();
        let n = members.len();
        assert!(n > 0, "cannot select from an empty population");
        let Streams { selection, tie_break, .. } = &mut self.streams;
        let mut pick: Box<dyn FnMut() -> usize + '_> = match self.kind {
            AlgorithmKind::Sofo => Box::new(move || {
                tournament(n, selection, tie_break, |a, b| {
                    members[a].fitness.total_cmp(&members[b].fitness)
                })
            }),
            AlgorithmKind::Mofd => {
                let pop: Vec<Individual> = members.iter().map(|&m| m.clone()).collect();
                let (rank, crowd) = rank_and_crowding(&pop);
                Box::new(move || {
                    tournament(n, selection, tie_break, |a, b| {
                        crowded_cmp(rank[b], crowd[b], rank[a], crowd[a])
                    })
                })
            }
            AlgorithmKind::Qdsa => Box::new(move || {
                tournament(n, selection, tie_break, |a, b| {
                    members[a].curiosity.total_cmp(&members[b].curiosity)
                })
            }),
        };
        (0..BATCH_SIZE).map(|_| (pick(), pick())).collect()
    }

    /// One generation / batch of the configured algorithm.
    pub fn step(&mut self, evaluator: &mut dyn Evaluator) -> Result<StepReport, EvalError> {
        let pairs = self.select_pairs();
        let children: Vec<(MorphologyTree, Vec<u64>)> = {
            let members = self.population.members();
            pairs
                .into_iter()
                .map(|(a, b)| {
                    let (pa, pb) = (members[a], members[b]);
                    let (genome, crossed) = variation(&[pa, pb], &self.cfg, &mut self.streams.variation);
                    let parents = if crossed && pa.id != pb.id {
                        vec![pa.id, pb.id]
                    } else {
                        vec![pa.id]
                    };
                    (genome, parents)
                })
                .collect()
        };
        let births = self.evaluate(children, evaluator)?;
        let deaths = self.population.absorb(births.clone());
        Ok(StepReport { births, deaths })
    }
}

/// Rebuild the final population from a run's birth sequence. The first
/// `seed_count` births form the seeding batch; the rest arrive in batches.
pub fn replay(kind: AlgorithmKind, births: &[Individual], seed_count: usize) -> Population {
    let mut pop = Population::empty(kind);
    let (seed, rest) = births.split_at(seed_count.min(births.len()));
    pop.seed(seed.to_vec());
    for batch in rest.chunks(BATCH_SIZE) {
        pop.absorb(batch.to_vec());
    }
    pop
}

#[cfg(test)]
mod tests;
