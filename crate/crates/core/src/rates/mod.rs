//! Fixed-point rate solver, lower-bound certificate, closed-form rates, and
//! Gaussian-width tools.

pub mod eps_star;
pub mod theory;
pub mod width;

use thiserror::Error;

use crate::classes::ClassError;

pub use eps_star::{solve_eps_star, EpsStarOptions, RateCertificate, Regime};
pub use theory::{
    kolmogorov_index, kolmogorov_index_scan, theoretical_rate, KolmogorovIndex, RateExample,
    TheoryRate,
};
pub use width::{
    gaussian_width, gaussian_width_many, l1_cone_sup, sudakov_entropy_bound, InnerBudget,
    WidthEstimate, WidthSet,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatesError {
    #[error("log M is identically zero; eps* = 0")]
    EmptyCrossing,
    #[error("profile needs a {0:.1}% monotone correction, above the allowed slack")]
    NonMonotoneProfile(f64),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("no valid Kolmogorov index")]
    NoValidIndex,
    #[error("inner maximization stalled (last change {0:e})")]
    InnerOptFailure(f64),
    #[error(transparent)]
    Class(#[from] ClassError),
}
