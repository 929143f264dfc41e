//! A discrete-time active inference engine with Dirichlet-categorical
//! likelihood learning, plus a simulation harness for continual-learning
//! experiments in non-stationary environments.
//!
//! The library is organized around a small set of pieces:
//!
//! - [`math`]: categorical/Dirichlet primitives (normalization, softmax,
//!   entropies, KL divergences, digamma/log-gamma);
//! - [`model`]: generative-model structures for one hierarchical level, and
//!   the builder for the bundled two-level research-agent model;
//! - [`inference`]: exact joint-space state inference, variational and
//!   expected free energy, and softmax policy selection;
//! - [`learning`]: concentration updates with learning and forgetting rates;
//! - [`agent`]: the two-level agent that ties inference, action, and
//!   learning together per trial;
//! - [`env`]: the generative process with ground-truth outcome tables,
//!   noise-able cues, and scheduled regime shifts;
//! - [`scoring`]: confidence scores of learned concentrations against the
//!   ground truth;
//! - [`config`] and [`runner`]: scenario files, seeded experiment execution,
//!   and CSV/JSON results.
//!
//! The `examples/` directory holds one runnable example per capability; the
//! `aif` binary wraps the runner for scripted use. Every random draw flows
//! through explicit seeded streams, so runs are reproducible byte for byte.

pub mod agent;
pub mod config;
pub mod env;
pub mod error;
pub mod inference;
pub mod learning;
pub mod math;
pub mod model;
pub mod rng;
pub mod runner;
pub mod scoring;

pub use agent::{link_down, HierarchicalAgent, TrialRecord};
pub use config::{load_config, ScenarioConfig, ScopeConfig};
pub use env::{builtin_scenarios, ChangeEvent, EnvironmentState, GroundTruth, ScheduleKind};
pub use error::{Error, Result};
pub use inference::{
    compute_vfe, expected_free_energy, infer_states, predict_for_policy, select_policy,
    BeliefState, EfeBreakdown, Observation, PolicyChoice, VfeBreakdown,
};
pub use learning::{learn_trial, update_concentrations, LearningEvent};
pub use math::{
    entropy, kl_categorical, kl_dirichlet, normalize, softmax, Categorical, DirichletVector,
};
pub use model::{
    build_two_level_model, ConcentrationArray, GenerativeModel, Hyper, LikelihoodArray,
    LikelihoodMode, ModelDims, Policy, TransitionArray,
};
pub use runner::{
    load_carry, run_experiment, run_paper_protocol, write_results, ConcentrationSnapshot,
    RunResult,
};
pub use scoring::{pair_score, total_score, Scope, ScoreReport};
