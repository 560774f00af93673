//! Step-wise verification uncertainty for judge-LM process reward models.
//!
//! The pipeline verifies each step of a multi-step math solution with a
//! generative judge, samples diverse critique-then-verdict generations,
//! derives uncertainty scores from them, and evaluates how well those scores
//! predict verification mistakes via AUROC, AUPRC, and rejection curves.

pub mod estimators;
pub mod ingest;
pub mod io;
pub mod judge;
pub mod metrics;
pub mod simulator;
pub mod types;

pub use types::{
    EstimatorId, EvalReport, JudgeSample, Label, PredictiveDistribution, StepCase,
    StepVerification, UncertaintyRecord,
};
