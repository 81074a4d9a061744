//! Multiscale packing estimator, its stage schedules, and the pairwise test.

pub mod algorithm;
pub mod constants;
pub mod noise;
pub mod schedule;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{ClassError, Design, FunctionClass};
use crate::metric::{MetricPoint, PackingError};

pub use algorithm::{
    cauchy_stats, pairwise_test_psi, run_algorithm1, EstimatorOptions, EstimatorTrace, SuffStats,
};
pub use constants::{Exponent, RateConstants};
pub use noise::{NoiseKind, NoiseModel};
pub use schedule::{stage_schedule, ConditionKind, StageSchedule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("empty packing at stage {stage}")]
    EmptyPacking { stage: usize },
    #[error("data has {design} design points but {responses} responses")]
    DataDimensionMismatch { design: usize, responses: usize },
    #[error("need at least one observation and one stage")]
    NoData,
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("test hypotheses coincide")]
    IdenticalHypotheses,
    #[error("entropy argument {arg} is below the profile grid (smallest eps {eps_min})")]
    ProfileTooCoarse { arg: f64, eps_min: f64 },
    #[error("profile constant {got} does not match the schedule constant {expected}")]
    ProfileConstantMismatch { expected: f64, got: f64 },
    #[error("Cauchy bound violated between stages {j} and {k}: {dist} > {bound}")]
    CauchyViolation {
        j: usize,
        k: usize,
        dist: f64,
        bound: f64,
    },
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Class(#[from] ClassError),
}

/// Observations `(X, Y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Data {
    pub design: Design,
    pub y: Vec<f64>,
}

impl Data {
    /// Draws `Y = f̄(X) + ξ` for a given design.
    pub fn observe(
        class: &FunctionClass,
        truth: &MetricPoint,
        design: Design,
        noise: &NoiseModel,
        rng: &mut crate::seed::Rng,
    ) -> Result<Self, ClassError> {
        let mut y = class.evaluate(&truth.coords, &design)?;
        for (yi, e) in y.iter_mut().zip(noise.draw(design.len(), rng)) {
            *yi += e;
        }
        Ok(Self { design, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub(crate) fn check(&self) -> Result<(), EstimatorError> {
        if self.design.len() != self.y.len() {
            return Err(EstimatorError::DataDimensionMismatch {
                design: self.design.len(),
                responses: self.y.len(),
            });
        }
        if self.y.is_empty() {
            return Err(EstimatorError::NoData);
        }
        Ok(())
    }
}
