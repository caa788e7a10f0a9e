//! Fitness evaluation: environments, the closed-form surrogate and the
//! external-process protocol.

pub mod external;
pub mod surrogate;

pub use external::{ExternalEvaluator, DEFAULT_TIMEOUT};
pub use surrogate::{
    climb_capability, displacement_flat, evaluate, SurrogateEvaluator, CLAMP_MARGIN,
    CONTACT_PENALTY,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::morphology::{Descriptor, MorphologyTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvironmentKind {
    Flat,
    #[serde(rename = "platform")]
    PlatformWall,
    #[serde(rename = "circular")]
    CircularRipple,
}

impl EnvironmentKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvironmentKind::Flat => "flat",
            EnvironmentKind::PlatformWall => "platform",
            EnvironmentKind::CircularRipple => "circular",
        }
    }
}

impl fmt::Display for EnvironmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvironmentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flat" => Ok(EnvironmentKind::Flat),
            "platform" => Ok(EnvironmentKind::PlatformWall),
            "circular" => Ok(EnvironmentKind::CircularRipple),
            other => Err(format!("unknown environment `{other}` (flat, platform, circular)")),
        }
    }
}

/// A wall across the robot's path. For the ripple environment `distance` is
/// a radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub distance: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    pub kind: EnvironmentKind,
    /// Sorted by ascending distance.
    pub walls: Vec<Wall>,
    /// Scored interval length in seconds.
    pub eval_time: f64,
    /// Seconds simulated before the start position is recorded.
    pub warmup: f64,
}

impl EnvironmentSpec {
    pub const EVAL_TIME: f64 = 20.0;
    pub const WARMUP: f64 = 2.0;

    pub fn flat() -> Self {
        Self::with_walls(EnvironmentKind::Flat, Vec::new())
    }

    /// Raised start platform with one wide wall.
    pub fn platform() -> Self {
        Self::with_walls(
            EnvironmentKind::PlatformWall,
            vec![Wall { distance: 3.0, height: 3.0 }],
        )
    }

    /// Concentric walls at radius `5k`, height `1.5k`, `k = 1..=8`.
    pub fn circular() -> Self {
        let walls = (1..=8)
            .map(|k| Wall {
                distance: 5.0 * k as f64,
                height: 1.5 * k as f64,
            })
            .collect();
        Self::with_walls(EnvironmentKind::CircularRipple, walls)
    }

    pub fn of_kind(kind: EnvironmentKind) -> Self {
        match kind {
            EnvironmentKind::Flat => Self::flat(),
            EnvironmentKind::PlatformWall => Self::platform(),
            EnvironmentKind::CircularRipple => Self::circular(),
        }
    }

    pub fn with_walls(kind: EnvironmentKind, mut walls: Vec<Wall>) -> Self {
        walls.sort_by(|a, b| a.distance.total_cmp(&b.distance));
        let spec = Self {
            kind,
            walls,
            eval_time: Self::EVAL_TIME,
            warmup: Self::WARMUP,
        };
        debug_assert!(spec.is_valid());
        spec
    }

    pub fn is_valid(&self) -> bool {
        self.eval_time > 0.0
            && self.warmup >= 0.0
            && self
                .walls
                .iter()
                .all(|w| w.distance > 0.0 && w.height > 0.0)
            && self.walls.windows(2).all(|w| w[0].distance <= w[1].distance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    /// Straight-line distance from start to end.
    pub fitness: f64,
    pub descriptor: Descriptor,
    /// Index of the wall that stopped the robot, if any.
    pub blocked_at: Option<usize>,
}

/// Scores batches of genomes. Results are returned in input order.
pub trait Evaluator {
    fn environment(&self) -> &EnvironmentSpec;

    fn evaluate_batch(
        &mut self,
        genomes: &[MorphologyTree],
    ) -> Result<Vec<EvaluationResult>, EvalError>;
}
