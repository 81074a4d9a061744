//! The multiscale packing estimator and the pairwise least-squares test.
//!
//! Stage `k` packs `B(Υ_k, d/2^{k-1}) ∩ F` at separation `d/(2^k (C+1))` and
//! moves to the least-squares member of the packing. Packing randomness is a
//! pure function of `(seed, k, Υ_k)`, so only the traversed path of the
//! data-independent packing tree is ever built.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{Data, EstimatorError, RateConstants};
use crate::classes::{Design, FunctionClass};
use crate::metric::packing::shrink_into;
use crate::metric::{candidate_pool, greedy_from_pool, lex_cmp, Ball, MetricPoint, PoolSpec};
use crate::seed;

static RUNS: AtomicU64 = AtomicU64::new(0);
static VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// Process-wide `(runs checked, Cauchy violations)` counters.
pub fn cauchy_stats() -> (u64, u64) {
    (RUNS.load(Ordering::Relaxed), VIOLATIONS.load(Ordering::Relaxed))
}

/// Sufficient statistics that give the residual sum of squares of any member
/// in time independent of `n`.
#[derive(Clone, Debug)]
pub enum SuffStats {
    /// `XᵀX` (row-major), `XᵀY`, `YᵀY`.
    Rows { p: usize, gram: Vec<f64>, xty: Vec<f64>, yy: f64 },
    /// Per-node counts and response sums, `YᵀY`.
    Nodes { count: Vec<f64>, sum: Vec<f64>, yy: f64 },
}

impl SuffStats {
    pub fn new(class: &FunctionClass, data: &Data) -> Result<Self, EstimatorError> {
        data.check()?;
        let yy = data.y.iter().map(|y| y * y).sum();
        match &data.design {
            Design::Rows { p, data: x } => {
                let p = *p;
                let mut gram = vec![0.0; p * p];
                let mut xty = vec![0.0; p];
                for (row, &y) in x.chunks_exact(p).zip(&data.y) {
                    for i in 0..p {
                        xty[i] += row[i] * y;
                        let gi = &mut gram[i * p..(i + 1) * p];
                        for (g, xj) in gi.iter_mut().zip(row) {
                            *g += row[i] * xj;
                        }
                    }
                }
                Ok(SuffStats::Rows { p, gram, xty, yy })
            }
            Design::Nodes(idx) => {
                let nodes = class.dim();
                let mut count = vec![0.0; nodes];
                let mut sum = vec![0.0; nodes];
                for (&i, &y) in idx.iter().zip(&data.y) {
                    let c = count.get_mut(i).ok_or(EstimatorError::DataDimensionMismatch {
                        design: i + 1,
                        responses: nodes,
                    })?;
                    *c += 1.0;
                    sum[i] += y;
                }
                Ok(SuffStats::Nodes { count, sum, yy })
            }
        }
    }

    /// `Σ (Y_i - f(X_i))²`.
    pub fn sse(&self, coords: &[f64]) -> f64 {
        match self {
            SuffStats::Rows { p, gram, xty, yy } => {
                let mut quad = 0.0;
                let mut lin = 0.0;
                for i in 0..*p {
                    let gi = &gram[i * p..(i + 1) * p];
                    let gb: f64 = gi.iter().zip(coords).map(|(g, b)| g * b).sum();
                    quad += coords[i] * gb;
                    lin += coords[i] * xty[i];
                }
                yy - 2.0 * lin + quad
            }
            SuffStats::Nodes { count, sum, yy } => {
                let mut s = *yy;
                for ((c, t), f) in count.iter().zip(sum).zip(coords) {
                    s += c * f * f - 2.0 * t * f;
                }
                s
            }
        }
    }
}

/// Pool size and evaluation-only truth for [`run_algorithm1`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub pool_size: usize,
    /// Truth used to record per-stage distances; never seen by the estimator
    /// unless `inject_truth` is set.
    #[serde(default)]
    pub truth: Option<Vec<f64>>,
    /// Adds the truth, pulled into each ball, to every pool. Oracle tests only.
    #[serde(default)]
    pub inject_truth: bool,
}

impl EstimatorOptions {
    pub fn new(pool_size: usize) -> Self {
        Self {
            pool_size,
            truth: None,
            inject_truth: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTrace {
    /// Iterates `Υ_1, …, Υ_J`.
    pub upsilon: Vec<MetricPoint>,
    /// Ball radius `d/2^{k-1}` of each packing stage.
    pub radii: Vec<f64>,
    /// Packing separation `d/(2^k (C+1))` of each stage.
    pub separations: Vec<f64>,
    pub packing_sizes: Vec<usize>,
    /// Index of the selected center within each stage's packing.
    pub chosen_indices: Vec<usize>,
    pub total_stages: usize,
    pub diameter: f64,
    /// `dist(Υ_k, f̄)` per iterate, when a truth was supplied.
    pub truth_distances: Option<Vec<f64>>,
}

impl EstimatorTrace {
    pub fn estimate(&self) -> &MetricPoint {
        self.upsilon.last().expect("trace holds the anchor")
    }

    /// Checks `dist(Υ_j, Υ_k) ≤ d/2^{j-2}` for every `j < k` (1-based).
    pub fn check_cauchy(&self, class: &FunctionClass) -> Result<(), EstimatorError> {
        for j in 0..self.upsilon.len() {
            let bound = self.diameter / 2f64.powi(j as i32 - 1);
            for k in j + 1..self.upsilon.len() {
                let dist = class.dist_coords(&self.upsilon[j].coords, &self.upsilon[k].coords);
                if dist > bound {
                    return Err(EstimatorError::CauchyViolation {
                        j: j + 1,
                        k: k + 1,
                        dist,
                        bound,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Runs `stages` steps: `Υ_1` is the anchor and each further step performs
/// one packing and least-squares selection.
pub fn run_algorithm1(
    class: &FunctionClass,
    data: &Data,
    constants: &RateConstants,
    stages: usize,
    options: &EstimatorOptions,
    seed_value: u64,
) -> Result<EstimatorTrace, EstimatorError> {
    constants.validate()?;
    if stages == 0 {
        return Err(EstimatorError::NoData);
    }
    let stats = SuffStats::new(class, data)?;
    let d = class.diameter();
    let anchor = class.anchor()?;
    let mut trace = EstimatorTrace {
        upsilon: vec![anchor],
        radii: Vec::new(),
        separations: Vec::new(),
        packing_sizes: Vec::new(),
        chosen_indices: Vec::new(),
        total_stages: stages,
        diameter: d,
        truth_distances: None,
    };
    for k in 1..stages {
        let current = trace.upsilon[k - 1].clone();
        let radius = d / 2f64.powi(k as i32 - 1);
        let separation = d / (2f64.powi(k as i32) * (constants.big_c + 1.0));
        let pool_seed = seed::derive(seed_value, &[k as u64, seed::coords_hash(&current.coords)]);
        let ball = Ball {
            center: current.clone(),
            radius,
        };
        let mut pool = candidate_pool(class, &ball, pool_seed, options.pool_size)?;
        if options.inject_truth {
            if let Some(t) = &options.truth {
                pool.push(shrink_into(class, &current.coords, t.clone(), radius));
            }
        }
        pool.push(current.coords.clone());
        let size = pool.len();
        let packing = greedy_from_pool(
            class,
            &ball,
            separation,
            pool,
            PoolSpec::Seeded {
                seed: pool_seed,
                size,
            },
        )
        .map_err(|e| match e {
            crate::metric::PackingError::EmptyPool => EstimatorError::EmptyPacking { stage: k },
            e => e.into(),
        })?;
        let mut best = 0usize;
        let mut best_sse = f64::INFINITY;
        for (i, c) in packing.centers.iter().enumerate() {
            let s = stats.sse(&c.coords);
            let better = s < best_sse
                || (s == best_sse
                    && lex_cmp(&c.coords, &packing.centers[best].coords).is_lt());
            if better {
                best = i;
                best_sse = s;
            }
        }
        trace.radii.push(radius);
        trace.separations.push(separation);
        trace.packing_sizes.push(packing.len());
        trace.chosen_indices.push(best);
        trace.upsilon.push(packing.centers[best].clone());
    }
    if let Some(t) = &options.truth {
        trace.truth_distances = Some(
            trace
                .upsilon
                .iter()
                .map(|u| class.dist_coords(&u.coords, t))
                .collect(),
        );
    }
    RUNS.fetch_add(1, Ordering::Relaxed);
    if let Err(e) = trace.check_cauchy(class) {
        VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        return Err(e);
    }
    Ok(trace)
}

/// `ψ = 1` iff the residual sum of squares at `f` is at least that at `g`.
pub fn pairwise_test_psi(
    class: &FunctionClass,
    f: &MetricPoint,
    g: &MetricPoint,
    data: &Data,
) -> Result<bool, EstimatorError> {
    data.check()?;
    if class.dist(f, g)? == 0.0 {
        return Err(EstimatorError::IdenticalHypotheses);
    }
    let rss = |h: &MetricPoint| -> Result<f64, EstimatorError> {
        let v = class.evaluate(&h.coords, &data.design)?;
        Ok(v.iter().zip(&data.y).map(|(a, y)| (y - a) * (y - a)).sum())
    };
    Ok(rss(f)? >= rss(g)?)
}
