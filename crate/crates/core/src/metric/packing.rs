//! Greedy pool-maximal packings and the exhaustive branch-and-bound oracle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{lex_cmp, Ball, MetricPoint};
use crate::classes::{ClassError, FunctionClass};
use crate::seed;

/// Default candidate cap of the exhaustive oracle.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 24;
/// Hard limit of the bitmask representation.
const BITMASK_LIMIT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PackingError {
    #[error("ball center is not a class member")]
    NonmemberCenter,
    #[error("candidate {0} is not a class member")]
    NonmemberCandidate(usize),
    #[error("no pool candidate lies in the ball")]
    EmptyPool,
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("{count} candidates exceed the exhaustive cap {cap}")]
    CapExceeded { count: usize, cap: usize },
    #[error("separation must be positive and finite, got {0}")]
    InvalidSeparation(f64),
    #[error(transparent)]
    Class(#[from] ClassError),
}

/// Where a packing's candidates came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoolSpec {
    /// Pool regenerated by [`candidate_pool`] from `(seed, size)`.
    Seeded { seed: u64, size: usize },
    /// Caller-supplied candidate list.
    Explicit { size: usize },
}

/// Strictly separated centers inside a ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingSet {
    pub centers: Vec<MetricPoint>,
    pub separation: f64,
    pub ball: Ball,
    pub pool_spec: PoolSpec,
}

impl PackingSet {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Natural log of the number of centers.
    pub fn log_count(&self) -> f64 {
        (self.centers.len() as f64).ln()
    }

    /// True when every pair of centers is strictly farther apart than the
    /// separation.
    pub fn is_separated(&self, class: &FunctionClass) -> bool {
        for i in 0..self.centers.len() {
            for j in i + 1..self.centers.len() {
                let d = class.dist_coords(&self.centers[i].coords, &self.centers[j].coords);
                if d <= self.separation {
                    return false;
                }
            }
        }
        true
    }

    /// True when every center lies in the ball and in the class.
    pub fn is_inside(&self, class: &FunctionClass) -> bool {
        self.centers.iter().all(|c| {
            class.contains(&c.coords)
                && class.dist_coords(&c.coords, &self.ball.center.coords) <= self.ball.radius
        })
    }

    /// True when every candidate is within the separation of some center.
    pub fn covers(&self, class: &FunctionClass, candidates: &[Vec<f64>]) -> bool {
        candidates.iter().all(|x| {
            self.centers
                .iter()
                .any(|c| class.dist_coords(&c.coords, x) <= self.separation)
        })
    }
}

fn check_separation(separation: f64) -> Result<(), PackingError> {
    if separation.is_finite() && separation > 0.0 {
        Ok(())
    } else {
        Err(PackingError::InvalidSeparation(separation))
    }
}

/// Moves `x` radially toward `center` until it lies in the closed ball; the
/// result stays in the class by convexity.
pub(crate) fn shrink_into(
    class: &FunctionClass,
    center: &[f64],
    x: Vec<f64>,
    radius: f64,
) -> Vec<f64> {
    let d = class.dist_coords(center, &x);
    if d <= radius {
        return x;
    }
    let t = radius / d * (1.0 - 1e-12);
    center
        .iter()
        .zip(&x)
        .map(|(c, xi)| c + t * (xi - c))
        .collect()
}

/// Candidate pool for a ball: half global class samples, half local
/// proposals, plus the class's deterministic axis moves, each projected into
/// the class and pulled into the ball.
/// Finite classes return every member inside the ball instead.
pub fn candidate_pool(
    class: &FunctionClass,
    ball: &Ball,
    pool_seed: u64,
    pool_size: usize,
) -> Result<Vec<Vec<f64>>, PackingError> {
    let center = &ball.center.coords;
    if let Some(points) = class.finite_points() {
        return Ok(points
            .iter()
            .filter(|p| class.dist_coords(center, p) <= ball.radius)
            .cloned()
            .collect());
    }
    let mut rng = seed::rng(pool_seed);
    let mut pool = Vec::with_capacity(pool_size);
    for i in 0..pool_size {
        let x = if i % 2 == 0 {
            class.sample_member_rng(&mut rng).coords
        } else {
            let raw = class.local_proposal(center, ball.radius, &mut rng);
            match class.project_coords(&raw) {
                Ok(x) => x,
                Err(_) => continue,
            }
        };
        let x = shrink_into(class, center, x, ball.radius);
        if class.contains(&x) && class.dist_coords(center, &x) <= ball.radius {
            pool.push(x);
        }
    }
    for raw in class.axis_moves(center, ball.radius) {
        if let Ok(x) = class.project_coords(&raw) {
            let x = shrink_into(class, center, x, ball.radius);
            if class.contains(&x) && class.dist_coords(center, &x) <= ball.radius {
                pool.push(x);
            }
        }
    }
    Ok(pool)
}

/// Farthest-point greedy over an explicit pool. The first center is the
/// projected ball center; ties go to the lowest pool index.
pub fn greedy_from_pool(
    class: &FunctionClass,
    ball: &Ball,
    separation: f64,
    pool: Vec<Vec<f64>>,
    pool_spec: PoolSpec,
) -> Result<PackingSet, PackingError> {
    check_separation(separation)?;
    if !class.contains(&ball.center.coords) {
        return Err(PackingError::NonmemberCenter);
    }
    let center = &ball.center.coords;
    let start = class.project_coords(center)?;
    let mut all: Vec<Vec<f64>> = Vec::with_capacity(pool.len() + 1);
    let valid: Vec<Vec<f64>> = pool
        .into_iter()
        .filter(|x| class.contains(x) && class.dist_coords(center, x) <= ball.radius)
        .collect();
    if valid.is_empty() {
        return Err(PackingError::EmptyPool);
    }
    all.push(start);
    all.extend(valid);
    let mut min_d: Vec<f64> = all.iter().map(|x| class.dist_coords(&all[0], x)).collect();
    let mut chosen = vec![0usize];
    loop {
        let mut best = 0usize;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in min_d.iter().enumerate() {
            if d > best_d {
                best = i;
                best_d = d;
            }
        }
        if best_d <= separation {
            break;
        }
        chosen.push(best);
        let new = all[best].clone();
        for (i, x) in all.iter().enumerate() {
            let d = class.dist_coords(&new, x);
            if d < min_d[i] {
                min_d[i] = d;
            }
        }
    }
    let centers = chosen
        .into_iter()
        .map(|i| MetricPoint {
            coords: all[i].clone(),
            class_tag: class.tag(),
        })
        .collect();
    Ok(PackingSet {
        centers,
        separation,
        ball: ball.clone(),
        pool_spec,
    })
}

/// Greedy pool-maximal packing of `ball ∩ class` at strict separation.
pub fn greedy_max_packing(
    class: &FunctionClass,
    ball: &Ball,
    separation: f64,
    pool_seed: u64,
    pool_size: usize,
) -> Result<PackingSet, PackingError> {
    check_separation(separation)?;
    if !class.contains(&ball.center.coords) {
        return Err(PackingError::NonmemberCenter);
    }
    if pool_size == 0 {
        return Err(PackingError::EmptyPool);
    }
    let pool = candidate_pool(class, ball, pool_seed, pool_size)?;
    let size = if class.finite_points().is_some() {
        pool.len()
    } else {
        pool_size
    };
    greedy_from_pool(
        class,
        ball,
        separation,
        pool,
        PoolSpec::Seeded {
            seed: pool_seed,
            size,
        },
    )
}

fn branch_and_bound(adj: &[u64], cand: u64, cur: &mut Vec<usize>, best: &mut Vec<usize>) {
    if cur.len() + cand.count_ones() as usize <= best.len() {
        return;
    }
    if cand == 0 {
        *best = cur.clone();
        return;
    }
    let v = cand.trailing_zeros() as usize;
    let bit = 1u64 << v;
    cur.push(v);
    branch_and_bound(adj, cand & !bit & !adj[v], cur, best);
    cur.pop();
    branch_and_bound(adj, cand & !bit, cur, best);
}

/// Maximum strictly separated subset of `candidates`, by branch-and-bound on
/// the conflict graph. Among maximum subsets the lexicographically smallest
/// (candidates ordered by coordinates) is returned.
pub fn exhaustive_max_packing(
    class: &FunctionClass,
    candidates: &[MetricPoint],
    separation: f64,
    cap: usize,
) -> Result<PackingSet, PackingError> {
    check_separation(separation)?;
    if candidates.is_empty() {
        return Err(PackingError::EmptyCandidates);
    }
    let cap = cap.min(BITMASK_LIMIT);
    if candidates.len() > cap {
        return Err(PackingError::CapExceeded {
            count: candidates.len(),
            cap,
        });
    }
    if let Some(i) = candidates.iter().position(|c| !class.contains(&c.coords)) {
        return Err(PackingError::NonmemberCandidate(i));
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&candidates[a].coords, &candidates[b].coords));
    let pts: Vec<&[f64]> = order.iter().map(|&i| candidates[i].coords.as_slice()).collect();
    let n = pts.len();
    let mut adj = vec![0u64; n];
    for i in 0..n {
        for j in i + 1..n {
            if class.dist_coords(pts[i], pts[j]) <= separation {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = Vec::new();
    branch_and_bound(&adj, all, &mut Vec::new(), &mut best);
    let radius = pts
        .iter()
        .map(|p| class.dist_coords(pts[0], p))
        .fold(0.0, f64::max);
    Ok(PackingSet {
        centers: best
            .into_iter()
            .map(|i| MetricPoint {
                coords: pts[i].to_vec(),
                class_tag: class.tag(),
            })
            .collect(),
        separation,
        ball: Ball {
            center: MetricPoint {
                coords: pts[0].to_vec(),
                class_tag: class.tag(),
            },
            radius,
        },
        pool_spec: PoolSpec::Explicit { size: n },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::ClassSpec;

    fn interval() -> FunctionClass {
        FunctionClass::new(ClassSpec::LinearBox { p: 1, lo: 0.0, hi: 1.0 }).unwrap()
    }

    fn pts(class: &FunctionClass, xs: &[f64]) -> Vec<MetricPoint> {
        xs.iter().map(|&x| class.point(vec![x]).unwrap()).collect()
    }

    fn ball(class: &FunctionClass, c: Vec<f64>, r: f64) -> Ball {
        Ball {
            center: class.point(c).unwrap(),
            radius: r,
        }
    }

    #[test]
    fn exhaustive_examples() {
        let c = interval();
        let p = exhaustive_max_packing(&c, &pts(&c, &[0.0, 0.6, 1.0]), 0.5, 24).unwrap();
        assert_eq!(p.len(), 2);
        let p = exhaustive_max_packing(&c, &pts(&c, &[0.0, 0.4, 0.8]), 0.5, 24).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.centers[0].coords, vec![0.0]);
        assert_eq!(p.centers[1].coords, vec![0.8]);
        let p = exhaustive_max_packing(&c, &pts(&c, &[0.3]), 0.5, 24).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn exhaustive_collinear_all_kept() {
        let c = FunctionClass::new(ClassSpec::LinearBox { p: 1, lo: 0.0, hi: 2.0 }).unwrap();
        let p = exhaustive_max_packing(&c, &pts(&c, &[1.2, 0.0, 0.6]), 0.5, 24).unwrap();
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn exhaustive_cap_and_empty() {
        let c = interval();
        let many: Vec<f64> = (0..25).map(|i| i as f64 / 24.0).collect();
        assert!(matches!(
            exhaustive_max_packing(&c, &pts(&c, &many), 0.1, 24),
            Err(PackingError::CapExceeded { count: 25, cap: 24 })
        ));
        assert_eq!(
            exhaustive_max_packing(&c, &[], 0.1, 24).unwrap_err(),
            PackingError::EmptyCandidates
        );
    }

    #[test]
    fn exhaustive_unit_interval_grid() {
        // Strict 0.5-separated subsets of [0,1] have at most two points.
        let c = interval();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let p = exhaustive_max_packing(&c, &pts(&c, &grid), 0.5, 24).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn greedy_interval_and_square() {
        let c = interval();
        let p = greedy_max_packing(&c, &ball(&c, vec![0.0], 1.0), 0.5, 3, 400).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.is_separated(&c) && p.is_inside(&c));
        let sq = FunctionClass::new(ClassSpec::LinearBox { p: 2, lo: 0.0, hi: 1.0 }).unwrap();
        let b = ball(&sq, vec![0.0, 0.0], 2f64.sqrt());
        let p = greedy_max_packing(&sq, &b, 1.0, 5, 400).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn greedy_single_center_when_separation_exceeds_diameter() {
        let c = interval();
        let p = greedy_max_packing(&c, &ball(&c, vec![0.2], 1.0), 1.0, 9, 50).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.centers[0].coords, vec![0.2]);
    }

    #[test]
    fn greedy_errors() {
        let c = interval();
        let outside = Ball {
            center: MetricPoint {
                coords: vec![2.0],
                class_tag: c.tag(),
            },
            radius: 0.1,
        };
        assert_eq!(
            greedy_max_packing(&c, &outside, 0.1, 0, 10).unwrap_err(),
            PackingError::NonmemberCenter
        );
        assert_eq!(
            greedy_max_packing(&c, &ball(&c, vec![0.5], 0.1), 0.1, 0, 0).unwrap_err(),
            PackingError::EmptyPool
        );
    }

    #[test]
    fn greedy_is_deterministic_and_pool_maximal() {
        let c = FunctionClass::new(ClassSpec::LinearL1 { p: 6, radius: 1.0 }).unwrap();
        let b = ball(&c, vec![0.0; 6], 0.8);
        let p1 = greedy_max_packing(&c, &b, 0.3, 42, 120).unwrap();
        let p2 = greedy_max_packing(&c, &b, 0.3, 42, 120).unwrap();
        assert_eq!(p1, p2);
        let pool = candidate_pool(&c, &b, 42, 120).unwrap();
        assert!(p1.covers(&c, &pool));
    }
}
