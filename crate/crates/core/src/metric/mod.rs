//! Metric layer: points, balls, greedy and exhaustive packings, and local
//! entropy profiles.

pub mod entropy;
pub mod packing;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use entropy::{
    entropy_sandwich_check, global_log_packing_exact, local_entropy, EntropyBudget, EntropyError,
    EntropyKind, EntropyProfile, EntropySample, SandwichReport, SandwichRow,
};
pub use packing::{
    candidate_pool, exhaustive_max_packing, greedy_from_pool, greedy_max_packing, PackingError,
    PackingSet, PoolSpec, DEFAULT_EXHAUSTIVE_CAP,
};

/// A class member: parameter vector or grid values, tagged with its class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub coords: Vec<f64>,
    pub class_tag: u64,
}

impl MetricPoint {
    /// Stable hex identifier derived from the coordinates.
    pub fn id(&self) -> String {
        format!("{:016x}", crate::seed::coords_hash(&self.coords))
    }
}

/// Closed ball `{f : dist(f, center) ≤ radius}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: MetricPoint,
    pub radius: f64,
}

/// Lexicographic order on coordinate vectors, total via `f64::total_cmp`.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}
