//! Experiment harness: TOML configs, replicated runs with deterministic
//! seeds, slope fits, Monte Carlo checks of the concentration and test-error
//! bounds, and the command-line front end.

pub mod cli;
pub mod concentration;
pub mod config;
pub mod experiment;
pub mod fit;

use thiserror::Error;

use crate::classes::ClassError;
use crate::estimator::EstimatorError;
use crate::metric::{EntropyError, PackingError};
use crate::rates::RatesError;

pub use concentration::{
    check_norm_concentration, check_test_error, concentration_bound, ConcentrationReport,
    DesignSource, TestErrorReport,
};
pub use config::{
    ClassConfig, ConstantsConfig, EstimatorConfig, ExperimentConfig, ProfileConfig, RiskEval,
    ScheduleConfig, TruthConfig,
};
pub use experiment::{
    run_experiment, run_single, write_outputs, ExperimentResult, Manifest, ReplicateRow,
    SingleRun, SummaryRow,
};
pub use fit::{fit_rate_slope, SlopeFit};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("unbounded class needs a moment constant")]
    UnboundedClassWithoutMomentConstant,
    #[error("truth is not a member of the class")]
    TruthNotMember,
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Rates(#[from] RatesError),
}
