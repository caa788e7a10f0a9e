use super::*;
use crate::evaluator::{EnvironmentSpec, SurrogateEvaluator};
use crate::morphology::{MorphNode, Rotation};
use crate::rng::{stream, Stream};
use crate::WaveParams;

/// Wraps a fitness function; descriptors come from the surrogate.
struct FnEvaluator<F: FnMut(&MorphologyTree, f64) -> f64> {
    env: EnvironmentSpec,
    f: F,
}

impl<F: FnMut(&MorphologyTree, f64) -> f64> Evaluator for FnEvaluator<F> {
    fn environment(&self) -> &EnvironmentSpec {
        &self.env
    }

    fn evaluate_batch(&mut self, genomes: &[MorphologyTree]) -> Result<Vec<EvaluationResult>, EvalError> {
        Ok(genomes
            .iter()
            .map(|g| {
                let mut r = crate::evaluator::evaluate(g, &self.env);
                r.fitness = (self.f)(g, r.fitness);
                r
            })
            .collect())
    }
}

fn surrogate() -> SurrogateEvaluator {
    SurrogateEvaluator::new(EnvironmentSpec::flat())
}

fn individual(id: u64, genome: MorphologyTree, fitness: f64) -> Individual {
    Individual {
        id,
        descriptor: crate::morphology::descriptor_of(&genome),
        genome,
        fitness,
        parent_ids: vec![],
        birth_eval: id,
        curiosity: 0.0,
    }
}

fn two_module_genome(amp: f64) -> MorphologyTree {
    let wp = WaveParams { amp, freq: 1.0, phase: 0.5, offset: 0.1 };
    MorphologyTree::new(
        MorphNode::rect(Rotation::default())
            .with_child(0, MorphNode::servo(Rotation::default(), wp))
            .with_child(2, MorphNode::rect(Rotation::default())),
    )
    .unwrap()
}

fn structure(t: &MorphologyTree) -> Vec<(Vec<u8>, crate::ModuleKind, Rotation)> {
    t.nodes().into_iter().map(|(p, n)| (p, n.kind, n.rotation)).collect()
}

#[test]
fn suppressed_variation_copies_parent() {
    let p = individual(0, two_module_genome(0.5), 1.0);
    let q = individual(1, two_module_genome(1.0), 1.0);
    let mut rng = stream(1, Stream::Variation);
    let none = VariationConfig { p_crossover: 0.0, p_controller_mut: 0.0, p_morph_mut: 0.0, sigma: 0.01 };
    for _ in 0..100 {
        let (g, crossed) = variation(&[&p, &q], &none, &mut rng);
        assert_eq!(g, p.genome);
        assert!(!crossed);
    }
    let tiny = VariationConfig { sigma: 1e-12, p_controller_mut: 1.0, ..none };
    let (g, _) = variation(&[&p], &tiny, &mut rng);
    assert_eq!(structure(&g), structure(&p.genome));
}

#[test]
fn qdsa_settings_perturb_every_controller() {
    let cfg = VariationConfig { p_crossover: 0.0, p_morph_mut: 0.0, ..VariationConfig::for_algorithm(AlgorithmKind::Qdsa) };
    assert_eq!(cfg.p_controller_mut, 1.0);
    let mut rng = stream(2, Stream::Variation);
    let mut parent_genome = MorphologyTree::root_only();
    while parent_genome.kind_counts().1 < 4 {
        parent_genome = random_morphology(&mut rng, 20);
    }
    let p = individual(0, parent_genome, 1.0);
    let mut before = p.genome.clone();
    let before: Vec<WaveParams> = before.controllers_mut().into_iter().map(|c| *c).collect();
    for _ in 0..200 {
        let (mut g, _) = variation(&[&p], &cfg, &mut rng);
        let after: Vec<WaveParams> = g.controllers_mut().into_iter().map(|c| *c).collect();
        assert_eq!(after.len(), before.len());
        for (a, b) in after.iter().zip(&before) {
            assert!(a.amp != b.amp && a.freq != b.freq && a.phase != b.phase && a.offset != b.offset);
        }
    }
}

#[test]
fn crossover_branch_probability() {
    let p = individual(0, two_module_genome(0.5), 1.0);
    let q = individual(1, two_module_genome(1.0), 1.0);
    let cfg = VariationConfig::for_algorithm(AlgorithmKind::Sofo);
    let mut rng = stream(3, Stream::Variation);
    let n = 10_000;
    let crossed = (0..n).filter(|_| variation(&[&p, &q], &cfg, &mut rng).1).count();
    let frac = crossed as f64 / n as f64;
    assert!((frac - 0.2).abs() <= 0.02, "{frac}");
}

#[test]
fn tied_tournament_is_uniform() {
    let mut sel = stream(4, Stream::Selection);
    let mut tie = stream(4, Stream::TieBreak);
    let n = 10;
    let draws = 10_000;
    let mut counts = vec![0usize; n];
    for _ in 0..draws {
        counts[tournament(n, &mut sel, &mut tie, |_, _| std::cmp::Ordering::Equal)] += 1;
    }
    let expected = draws as f64 / n as f64;
    let sd = (draws as f64 * 0.1 * 0.9).sqrt();
    for c in counts {
        assert!((c as f64 - expected).abs() <= 3.0 * sd, "{c}");
    }
}

#[test]
fn sofo_elites_persist_when_children_are_worse() {
    let mut calls = 0;
    let mut ev = FnEvaluator {
        env: EnvironmentSpec::flat(),
        f: move |_, f| {
            calls += 1;
            if calls <= POPULATION_SIZE { 1.0 + f } else { 0.0 }
        },
    };
    let mut s = Search::new(AlgorithmKind::Sofo, VariationConfig::for_algorithm(AlgorithmKind::Sofo), 9);
    s.initialize(&mut ev).unwrap();
    let mut top: Vec<&Individual> = s.members();
    top.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
    let top10: Vec<u64> = top[..10].iter().map(|i| i.id).collect();
    s.step(&mut ev).unwrap();
    let now: Vec<u64> = s.members().iter().map(|i| i.id).collect();
    assert_eq!(now.len(), POPULATION_SIZE);
    assert_eq!(&now[..10], &top10[..]);
}

#[test]
fn populations_keep_their_size_and_budget() {
    for kind in AlgorithmKind::ALL {
        let mut ev = surrogate();
        let mut s = Search::new(kind, VariationConfig::for_algorithm(kind), 10);
        s.initialize(&mut ev).unwrap();
        assert_eq!(s.eval_count as usize, kind.init_size());
        let mut occupancy = s.population.len();
        let mut cell_best: std::collections::HashMap<Descriptor, f64> =
            s.members().iter().map(|m| (m.descriptor, m.fitness)).collect();
        for step in 1..=5 {
            let report = s.step(&mut ev).unwrap();
            assert_eq!(report.births.len(), BATCH_SIZE);
            assert_eq!(s.eval_count as usize, kind.init_size() + step * BATCH_SIZE);
            match kind {
                AlgorithmKind::Qdsa => {
                    assert!(s.population.len() >= occupancy);
                    assert!(s.population.len() <= REACHABLE_CELLS);
                    occupancy = s.population.len();
                    for m in s.members() {
                        let prev = cell_best.insert(m.descriptor, m.fitness);
                        assert!(prev.is_none_or(|p| m.fitness >= p));
                    }
                }
                _ => assert_eq!(s.population.len(), POPULATION_SIZE),
            }
        }
    }
}

#[test]
fn single_occupant_parents_every_child() {
    let mut ev = surrogate();
    let mut s = Search::new(AlgorithmKind::Qdsa, VariationConfig::for_algorithm(AlgorithmKind::Qdsa), 11);
    s.population.seed(vec![individual(0, two_module_genome(1.0), 0.5)]);
    s.next_id = 1;
    s.eval_count = 1;
    let report = s.step(&mut ev).unwrap();
    assert!(report.births.iter().all(|b| b.parent_ids == vec![0]));
}

#[test]
fn runs_are_seed_deterministic() {
    for kind in AlgorithmKind::ALL {
        let run = |threads| {
            let mut ev = SurrogateEvaluator::with_threads(EnvironmentSpec::flat(), threads);
            let mut s = Search::new(kind, VariationConfig::for_algorithm(kind), 12);
            let mut births = s.initialize(&mut ev).unwrap().births;
            for _ in 0..3 {
                births.extend(s.step(&mut ev).unwrap().births);
            }
            births
        };
        assert_eq!(run(1), run(4));
    }
}

#[test]
fn selection_depends_only_on_fitness_order() {
    for kind in AlgorithmKind::ALL {
        let run = |scale: f64| {
            let mut ev = FnEvaluator { env: EnvironmentSpec::flat(), f: move |_, f| f * scale };
            let mut s = Search::new(kind, VariationConfig::for_algorithm(kind), 13);
            let mut births = s.initialize(&mut ev).unwrap().births;
            for _ in 0..3 {
                births.extend(s.step(&mut ev).unwrap().births);
            }
            births.into_iter().map(|b| (b.id, b.parent_ids, b.genome)).collect::<Vec<_>>()
        };
        assert_eq!(run(1.0), run(7.5), "{kind}");
    }
}

#[test]
fn replay_rebuilds_final_population() {
    for kind in AlgorithmKind::ALL {
        let mut ev = surrogate();
        let mut s = Search::new(kind, VariationConfig::for_algorithm(kind), 14);
        let mut births = s.initialize(&mut ev).unwrap().births;
        for _ in 0..4 {
            births.extend(s.step(&mut ev).unwrap().births);
        }
        let rebuilt = replay(kind, &births, kind.init_size());
        assert_eq!(rebuilt, s.population, "{kind}");
    }
}

#[test]
fn config_defaults_and_validation() {
    let s = VariationConfig::for_algorithm(AlgorithmKind::Sofo);
    assert_eq!((s.p_crossover, s.p_controller_mut, s.p_morph_mut, s.sigma), (0.2, 1.0, 0.2, 0.01));
    assert_eq!(VariationConfig::for_algorithm(AlgorithmKind::Mofd), s);
    let q = VariationConfig::for_algorithm(AlgorithmKind::Qdsa);
    assert_eq!((q.p_morph_mut, q.sigma), (0.4, 0.005));
    assert!(VariationConfig { sigma: 0.0, ..q }.validate().is_err());
    assert!(VariationConfig { p_morph_mut: 1.5, ..q }.validate().is_err());
    assert_eq!(AlgorithmKind::Qdsa.init_size(), 1000);
    assert_eq!(AlgorithmKind::Sofo.init_size(), 200);
}
