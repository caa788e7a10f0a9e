//! Closed-form locomotion surrogate.
//!
//! Each realized servo pushes the body along the ground projection of its
//! outward heading. The push is weighted by how much of the body the servo
//! moves (its realized subtree size), by the swing that survives the output
//! clamp, and by ground contact. Its velocity is proportional to
//! `freq * cos(freq * t + phase)`, so displacement over `[t0, t1]` integrates
//! exactly to a difference of sines.

use rayon::prelude::*;

use super::{EnvironmentSpec, EvaluationResult, Evaluator};
use crate::error::EvalError;
use crate::morphology::{realize_on_lattice, LatticeRealization, ModuleKind, MorphologyTree};

/// Push weight of a servo whose subtree never touches the ground.
pub const CONTACT_PENALTY: f64 = 0.25;
/// A blocked robot stops this far in front of the wall.
pub const CLAMP_MARGIN: f64 = 0.01;

/// Per-servo terms shared by the closed form and numeric checks:
/// `(weight, direction, freq, phase)` where the servo's velocity is
/// `weight * direction * freq * cos(freq * t + phase)`.
pub(crate) fn servo_terms(real: &LatticeRealization) -> Vec<(f64, [f64; 2], f64, f64)> {
    let total = real.len() as f64;
    let sizes = real.subtree_sizes();
    let grounded = real.grounded();
    real.placements
        .iter()
        .enumerate()
        .filter(|(_, p)| p.kind == ModuleKind::Servo)
        .map(|(i, p)| {
            let ctrl = p.controller.expect("servo placements carry a controller");
            let ground = if grounded[i] { 1.0 } else { CONTACT_PENALTY };
            let planar = [p.heading[0] as f64, p.heading[1] as f64];
            let norm = planar[0].hypot(planar[1]);
            let dir = if norm > 0.0 {
                [planar[0] / norm, planar[1] / norm]
            } else {
                [0.0, 0.0]
            };
            let weight = ground * sizes[i] as f64 * ctrl.effective_amplitude() / total;
            (weight, dir, ctrl.freq, ctrl.phase)
        })
        .collect()
}

/// Planar displacement accumulated between `t0` and `t1`.
pub fn displacement_flat(real: &LatticeRealization, t0: f64, t1: f64) -> [f64; 2] {
    debug_assert!(t1 > t0 && t0 >= 0.0);
    let mut d = [0.0, 0.0];
    for (w, dir, freq, phase) in servo_terms(real) {
        let swing = (freq * t1 + phase).sin() - (freq * t0 + phase).sin();
        d[0] += w * dir[0] * swing;
        d[1] += w * dir[1] * swing;
    }
    d
}

/// Largest summed effective amplitude along any root-to-leaf chain.
pub fn climb_capability(real: &LatticeRealization) -> f64 {
    let mut along = vec![0.0f64; real.len()];
    let mut best = 0.0f64;
    for (i, p) in real.placements.iter().enumerate() {
        let own = match (p.kind, p.controller) {
            (ModuleKind::Servo, Some(c)) => c.effective_amplitude(),
            _ => 0.0,
        };
        along[i] = p.parent.map_or(0.0, |q| along[q]) + own;
        best = best.max(along[i]);
    }
    best
}

pub fn evaluate(genome: &MorphologyTree, env: &EnvironmentSpec) -> EvaluationResult {
    let real = realize_on_lattice(genome);
    let descriptor = real.descriptor();
    let d = displacement_flat(&real, env.warmup, env.warmup + env.eval_time);
    let distance = d[0].hypot(d[1]);
    let mut fitness = distance;
    let mut blocked_at = None;
    if !env.walls.is_empty() {
        let climb = climb_capability(&real);
        for (i, wall) in env.walls.iter().enumerate() {
            if distance <= wall.distance - CLAMP_MARGIN {
                break;
            }
            if climb >= wall.height {
                continue;
            }
            fitness = distance.min(wall.distance - CLAMP_MARGIN);
            blocked_at = Some(i);
            break;
        }
    }
    EvaluationResult {
        fitness,
        descriptor,
        blocked_at,
    }
}

/// In-process surrogate evaluation, optionally fanned out over a thread pool.
pub struct SurrogateEvaluator {
    env: EnvironmentSpec,
    pool: Option<rayon::ThreadPool>,
}

impl SurrogateEvaluator {
    pub fn new(env: EnvironmentSpec) -> Self {
        Self { env, pool: None }
    }

    pub fn with_threads(env: EnvironmentSpec, threads: usize) -> Self {
        let pool = (threads > 1).then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool")
        });
        Self { env, pool }
    }
}

impl Evaluator for SurrogateEvaluator {
    fn environment(&self) -> &EnvironmentSpec {
        &self.env
    }

    fn evaluate_batch(
        &mut self,
        genomes: &[MorphologyTree],
    ) -> Result<Vec<EvaluationResult>, EvalError> {
        let env = &self.env;
        Ok(match &self.pool {
            Some(pool) => pool.install(|| genomes.par_iter().map(|g| evaluate(g, env)).collect()),
            None => genomes.iter().map(|g| evaluate(g, env)).collect(),
        })
    }
}
