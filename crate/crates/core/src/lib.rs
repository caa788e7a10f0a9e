//! Quality-diversity co-evolution of modular robot bodies and wave
//! controllers.
//!
//! Bodies are trees of rectangular and servo modules
//! ([`morphology`]), each servo driven by a sinusoid ([`controller`]).
//! Candidates are scored by a closed-form locomotion surrogate or an
//! external process ([`evaluator`]) and searched with a generational EA,
//! NSGA-II with morphological diversity objectives, or MAP-Elites with
//! curiosity-driven selection ([`algorithms`]). [`metrics`] and
//! [`genealogy`] analyse the results; [`runner`] ties everything to run
//! directories and event logs.

pub mod algorithms;
pub mod controller;
pub mod error;
pub mod evaluator;
pub mod genealogy;
pub mod metrics;
pub mod morphology;
pub mod rng;
pub mod runner;

pub use algorithms::{AlgorithmKind, Archive, Individual, VariationConfig};
pub use controller::{ParamRange, WaveParams};
pub use error::{AnalysisError, EvalError, GenomeError, RunError};
pub use evaluator::{EnvironmentKind, EnvironmentSpec, EvaluationResult, Evaluator};
pub use morphology::{Descriptor, ModuleKind, MorphNode, MorphologyTree, Rotation};
