//! Local and adaptive metric entropy profiles.
//!
//! At each ε the profile records `log M(ε/c, B(f, ε) ∩ F)`: the adaptive kind
//! fixes `f`, the global kind maximizes over a set of candidate centers. On
//! finite classes small enough for the exhaustive oracle, and on
//! one-dimensional linear bodies (segments), the counts are exact.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::packing::{
    exhaustive_max_packing, greedy_max_packing, PackingError, DEFAULT_EXHAUSTIVE_CAP,
};
use super::{Ball, MetricPoint};
use crate::classes::{ClassError, FunctionClass};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("entropy constant must exceed 1, got {0}")]
    InvalidConstant(f64),
    #[error("invalid epsilon grid: {0}")]
    InvalidGrid(String),
    #[error("global packing value missing at eps = {eps}")]
    GridMismatch { eps: f64 },
    #[error("exact global packing needs a finite class within the exhaustive cap")]
    NotExact,
    #[error("malformed profile CSV: {0}")]
    Parse(String),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Class(#[from] ClassError),
}

/// Global (sup over centers) or adaptive (fixed center) entropy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntropyKind {
    Global,
    Adaptive { center: MetricPoint },
}

impl EntropyKind {
    fn label(&self) -> &'static str {
        match self {
            EntropyKind::Global => "global",
            EntropyKind::Adaptive { .. } => "adaptive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySample {
    pub eps: f64,
    pub log_m: f64,
    /// Identifier of the center attaining the value.
    pub center_id: String,
}

/// Packing sizes and center-sup sample count for [`local_entropy`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyBudget {
    pub pool_size: usize,
    /// Sampled centers added to the heuristic ones in global mode.
    pub center_samples: usize,
    /// Additional centers always included in global mode.
    #[serde(default)]
    pub extra_centers: Vec<MetricPoint>,
    #[serde(default = "default_cap")]
    pub exhaustive_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_EXHAUSTIVE_CAP
}

impl Default for EntropyBudget {
    fn default() -> Self {
        Self {
            pool_size: 256,
            center_samples: 16,
            extra_centers: Vec::new(),
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
        }
    }
}

/// A grid of `(ε, log M)` values with the constant `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub c: f64,
    pub kind: EntropyKind,
    pub samples: Vec<EntropySample>,
    /// True when every count came from the exhaustive oracle or a formula.
    pub exact: bool,
    pub pool_size: usize,
    pub seed: u64,
}

fn check_grid(eps_grid: &[f64]) -> Result<(), EntropyError> {
    if eps_grid.is_empty() {
        return Err(EntropyError::InvalidGrid("empty".into()));
    }
    if eps_grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(EntropyError::InvalidGrid("values must be positive".into()));
    }
    if eps_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EntropyError::InvalidGrid(
            "values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

impl EntropyProfile {
    /// Profile from a closed-form `ε ↦ log M`; marked exact.
    pub fn from_fn(
        eps_grid: &[f64],
        c: f64,
        kind: EntropyKind,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, EntropyError> {
        check_grid(eps_grid)?;
        if !(c > 1.0) {
            return Err(EntropyError::InvalidConstant(c));
        }
        Ok(Self {
            c,
            kind,
            samples: eps_grid
                .iter()
                .map(|&eps| EntropySample {
                    eps,
                    log_m: f(eps).max(0.0),
                    center_id: "formula".into(),
                })
                .collect(),
            exact: true,
            pool_size: 0,
            seed: 0,
        })
    }

    pub fn eps(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.eps).collect()
    }

    pub fn log_m(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.log_m).collect()
    }

    /// Interpolated `log M(ε)`: log-log between positive neighbours, linear
    /// in `log ε` otherwise, constant beyond the grid ends.
    pub fn log_m_at(&self, eps: f64) -> f64 {
        let s = &self.samples;
        if eps <= s[0].eps {
            return s[0].log_m;
        }
        if eps >= s[s.len() - 1].eps {
            return s[s.len() - 1].log_m;
        }
        let i = s.partition_point(|x| x.eps <= eps) - 1;
        let (a, b) = (&s[i], &s[i + 1]);
        let t = (eps / a.eps).ln() / (b.eps / a.eps).ln();
        if a.log_m > 0.0 && b.log_m > 0.0 {
            (a.log_m.ln() + t * (b.log_m.ln() - a.log_m.ln())).exp()
        } else {
            a.log_m + t * (b.log_m - a.log_m)
        }
    }

    /// True when `log M` never increases along the grid.
    pub fn is_non_increasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].log_m <= w[0].log_m)
    }

    /// Running maximum from the right, and the largest relative correction
    /// `(new - old) / new` it made.
    pub fn monotonized(&self) -> (Self, f64) {
        let mut out = self.clone();
        let mut worst: f64 = 0.0;
        let mut running = f64::NEG_INFINITY;
        for s in out.samples.iter_mut().rev() {
            if s.log_m < running {
                worst = worst.max((running - s.log_m) / running);
                s.log_m = running;
            } else {
                running = s.log_m;
            }
        }
        (out, worst)
    }

    /// True when every value is zero.
    pub fn is_identically_zero(&self) -> bool {
        self.samples.iter().all(|s| s.log_m == 0.0)
    }

    /// Pointwise minimum of profiles on a shared grid and constant.
    pub fn pointwise_min(profiles: &[EntropyProfile]) -> Result<Self, EntropyError> {
        let first = profiles
            .first()
            .ok_or_else(|| EntropyError::InvalidGrid("no profiles".into()))?;
        let mut out = first.clone();
        out.kind = EntropyKind::Global;
        for p in &profiles[1..] {
            if p.c != first.c || p.eps() != first.eps() {
                return Err(EntropyError::InvalidGrid(
                    "profiles differ in grid or constant".into(),
                ));
            }
            out.exact &= p.exact;
            for (o, s) in out.samples.iter_mut().zip(&p.samples) {
                if s.log_m < o.log_m {
                    *o = s.clone();
                }
            }
        }
        Ok(out)
    }

    /// CSV with columns `eps,log_m,exact_flag,kind,center_id,c,pool_size,seed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,log_m,exact_flag,kind,center_id,c,pool_size,seed\n");
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.eps,
                s.log_m,
                self.exact,
                self.kind.label(),
                s.center_id,
                self.c,
                self.pool_size,
                self.seed
            )
            .expect("write to string");
        }
        out
    }

    /// Parses [`to_csv`](Self::to_csv) output. Adaptive centers are not part
    /// of the CSV and come back with empty coordinates.
    pub fn from_csv(text: &str) -> Result<Self, EntropyError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| EntropyError::Parse("empty".into()))?;
        if header.trim() != "eps,log_m,exact_flag,kind,center_id,c,pool_size,seed" {
            return Err(EntropyError::Parse(format!("unexpected header {header:?}")));
        }
        let bad = |what: &str, line: &str| EntropyError::Parse(format!("{what} in {line:?}"));
        let mut samples = Vec::new();
        let mut meta = None;
        for line in lines {
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 8 {
                return Err(bad("wrong field count", line));
            }
            let eps: f64 = f[0].parse().map_err(|_| bad("eps", line))?;
            let log_m: f64 = f[1].parse().map_err(|_| bad("log_m", line))?;
            let exact: bool = f[2].parse().map_err(|_| bad("exact_flag", line))?;
            let c: f64 = f[5].parse().map_err(|_| bad("c", line))?;
            let pool: usize = f[6].parse().map_err(|_| bad("pool_size", line))?;
            let seed: u64 = f[7].parse().map_err(|_| bad("seed", line))?;
            let kind = match f[3] {
                "global" => EntropyKind::Global,
                "adaptive" => EntropyKind::Adaptive {
                    center: MetricPoint {
                        coords: Vec::new(),
                        class_tag: 0,
                    },
                },
                _ => return Err(bad("kind", line)),
            };
            meta.get_or_insert((c, kind, exact, pool, seed));
            samples.push(EntropySample {
                eps,
                log_m,
                center_id: f[4].to_string(),
            });
        }
        let (c, kind, exact, pool_size, seed) =
            meta.ok_or_else(|| EntropyError::Parse("no rows".into()))?;
        let eps: Vec<f64> = samples.iter().map(|s| s.eps).collect();
        check_grid(&eps)?;
        Ok(Self {
            c,
            kind,
            samples,
            exact,
            pool_size,
            seed,
        })
    }

    /// SHA-256 of the CSV form.
    pub fn digest(&self) -> String {
        seed::sha256_hex(self.to_csv().as_bytes())
    }
}

/// Endpoints of a one-dimensional linear body, whose packings have a closed
/// form.
fn segment(class: &FunctionClass) -> Option<(f64, f64)> {
    if class.dim() != 1 || class.finite_points().is_some() || !class.is_linear() {
        return None;
    }
    let ends = class.extreme_points();
    let lo = ends.iter().map(|p| p.coords[0]).fold(f64::INFINITY, f64::min);
    let hi = ends.iter().map(|p| p.coords[0]).fold(f64::NEG_INFINITY, f64::max);
    (lo <= hi).then_some((lo, hi))
}

/// Size of the largest strictly `sep`-separated subset of a segment of length
/// `len`: `⌈len/sep⌉`, at least one. The relative nudge keeps exact ratios
/// such as `2ε/(ε/2)` from rounding up.
fn segment_packing(len: f64, sep: f64) -> usize {
    ((len / sep * (1.0 - 1e-12)).ceil() as usize).max(1)
}

/// Packing count of `B(center, eps) ∩ F` at separation `eps / c`, and
/// whether it is exact.
fn local_count(
    class: &FunctionClass,
    center: &MetricPoint,
    eps: f64,
    c: f64,
    budget: &EntropyBudget,
    seed_value: u64,
) -> Result<(usize, bool), EntropyError> {
    let ball = Ball {
        center: center.clone(),
        radius: eps,
    };
    let sep = eps / c;
    if let Some((lo, hi)) = segment(class) {
        let x = center.coords[0];
        let len = (hi.min(x + eps) - lo.max(x - eps)).max(0.0);
        return Ok((segment_packing(len, sep), true));
    }
    if let Some(points) = class.finite_points() {
        let inside: Vec<MetricPoint> = points
            .iter()
            .filter(|p| class.dist_coords(&center.coords, p) <= eps)
            .map(|p| MetricPoint {
                coords: p.clone(),
                class_tag: class.tag(),
            })
            .collect();
        if inside.len() <= budget.exhaustive_cap {
            let p = exhaustive_max_packing(class, &inside, sep, budget.exhaustive_cap)?;
            return Ok((p.len(), true));
        }
    }
    let pool_seed = seed::derive(
        seed_value,
        &[eps.to_bits(), seed::coords_hash(&center.coords)],
    );
    let p = greedy_max_packing(class, &ball, sep, pool_seed, budget.pool_size)?;
    Ok((p.len(), false))
}

/// Candidate centers for the global sup, deduplicated, in a fixed order.
fn global_centers(
    class: &FunctionClass,
    budget: &EntropyBudget,
    seed_value: u64,
) -> Result<Vec<MetricPoint>, EntropyError> {
    let mut centers: Vec<MetricPoint> = Vec::new();
    if let Some((lo, hi)) = segment(class) {
        // The midpoint's ball meets the segment in the longest piece at every ε.
        return Ok(vec![class.point(vec![0.5 * (lo + hi)])?]);
    }
    if let Some(points) = class.finite_points() {
        centers.extend(points.iter().map(|p| MetricPoint {
            coords: p.clone(),
            class_tag: class.tag(),
        }));
    } else {
        centers.push(class.anchor()?);
        centers.extend(class.extreme_points());
        for k in 0..budget.center_samples {
            centers.push(class.sample_member(seed::derive(
                seed_value,
                &[seed::label("center"), k as u64],
            )));
        }
    }
    centers.extend(budget.extra_centers.iter().cloned());
    let mut seen = std::collections::HashSet::new();
    centers.retain(|c| seen.insert(seed::coords_hash(&c.coords)));
    Ok(centers)
}

/// Local (global kind) or adaptive entropy profile on `eps_grid`.
pub fn local_entropy(
    class: &FunctionClass,
    eps_grid: &[f64],
    c: f64,
    kind: EntropyKind,
    budget: &EntropyBudget,
    seed_value: u64,
) -> Result<EntropyProfile, EntropyError> {
    if !(c > 1.0 && c.is_finite()) {
        return Err(EntropyError::InvalidConstant(c));
    }
    check_grid(eps_grid)?;
    let centers = match &kind {
        EntropyKind::Global => global_centers(class, budget, seed_value)?,
        EntropyKind::Adaptive { center } => {
            if !class.contains(&center.coords) {
                return Err(PackingError::NonmemberCenter.into());
            }
            vec![center.clone()]
        }
    };
    let rows: Vec<Result<(EntropySample, bool), EntropyError>> = eps_grid
        .par_iter()
        .map(|&eps| {
            let mut best: Option<(usize, usize)> = None;
            let mut all_exact = true;
            for (i, center) in centers.iter().enumerate() {
                let (count, exact) = local_count(class, center, eps, c, budget, seed_value)?;
                all_exact &= exact;
                if best.is_none_or(|(_, b)| count > b) {
                    best = Some((i, count));
                }
            }
            let (i, count) = best.expect("at least one center");
            Ok((
                EntropySample {
                    eps,
                    log_m: (count as f64).ln(),
                    center_id: centers[i].id(),
                },
                all_exact,
            ))
        })
        .collect();
    let mut samples = Vec::with_capacity(rows.len());
    let mut exact = true;
    for r in rows {
        let (s, e) = r?;
        exact &= e;
        samples.push(s);
    }
    Ok(EntropyProfile {
        c,
        kind,
        samples,
        exact,
        pool_size: budget.pool_size,
        seed: seed_value,
    })
}

/// Exact `log M(sep, F)` of a finite class by the exhaustive oracle, or of a
/// segment in closed form.
pub fn global_log_packing_exact(
    class: &FunctionClass,
    separation: f64,
    cap: usize,
) -> Result<f64, EntropyError> {
    if let Some((lo, hi)) = segment(class) {
        if !(separation > 0.0 && separation.is_finite()) {
            return Err(PackingError::InvalidSeparation(separation).into());
        }
        return Ok((segment_packing(hi - lo, separation) as f64).ln());
    }
    let points = class.finite_points().ok_or(EntropyError::NotExact)?;
    if points.len() > cap {
        return Err(EntropyError::NotExact);
    }
    let cands: Vec<MetricPoint> = points
        .iter()
        .map(|p| MetricPoint {
            coords: p.clone(),
            class_tag: class.tag(),
        })
        .collect();
    Ok(exhaustive_max_packing(class, &cands, separation, cap)?.log_count())
}

/// One grid row of the global/local sandwich.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub eps: f64,
    pub log_m_loc: f64,
    /// `log M(ε/c, F)`.
    pub upper: f64,
    /// `log M(ε/c, F) − log M(ε, F)`.
    pub lower: f64,
    pub upper_holds: bool,
    pub lower_holds: bool,
    pub upper_slack: f64,
    pub lower_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    /// Whether the local counts were exact; greedy rows are informative only.
    pub exact: bool,
}

impl SandwichReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.upper_holds && r.lower_holds)
    }
}

/// Checks `log M(ε/c, F) ≥ log M_loc(ε) ≥ log M(ε/c, F) − log M(ε, F)` at
/// every profile ε. `global` must know both `ε` and `ε/c`.
pub fn entropy_sandwich_check(
    global: impl Fn(f64) -> Option<f64>,
    profile: &EntropyProfile,
) -> Result<SandwichReport, EntropyError> {
    const SLACK: f64 = 1e-12;
    let mut rows = Vec::with_capacity(profile.samples.len());
    for s in &profile.samples {
        let upper = global(s.eps / profile.c).ok_or(EntropyError::GridMismatch {
            eps: s.eps / profile.c,
        })?;
        let whole = global(s.eps).ok_or(EntropyError::GridMismatch { eps: s.eps })?;
        let lower = upper - whole;
        rows.push(SandwichRow {
            eps: s.eps,
            log_m_loc: s.log_m,
            upper,
            lower,
            upper_holds: s.log_m <= upper + SLACK,
            lower_holds: s.log_m >= lower - SLACK,
            upper_slack: upper - s.log_m,
            lower_slack: s.log_m - lower,
        });
    }
    Ok(SandwichReport {
        rows,
        exact: profile.exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::ClassSpec;

    fn interval_grid(k: usize) -> FunctionClass {
        let base = ClassSpec::LinearBox { p: 1, lo: 0.0, hi: 1.0 };
        FunctionClass::new(ClassSpec::Finite {
            base: Box::new(base),
            points: (0..=k).map(|i| vec![i as f64 / k as f64]).collect(),
        })
        .unwrap()
    }

    #[test]
    fn singleton_has_zero_entropy() {
        let base = ClassSpec::LinearBox { p: 2, lo: 0.0, hi: 1.0 };
        let c = FunctionClass::new(ClassSpec::Finite {
            base: Box::new(base),
            points: vec![vec![0.3, 0.3]],
        })
        .unwrap();
        let p = local_entropy(&c, &[0.1, 1.0], 10.0, EntropyKind::Global, &Default::default(), 0)
            .unwrap();
        assert!(p.exact && p.is_identically_zero());
    }

    #[test]
    fn interval_ball_swallowing_class() {
        let c = interval_grid(20);
        let p = local_entropy(&c, &[1.0], 2.0, EntropyKind::Global, &Default::default(), 0)
            .unwrap();
        assert!(p.exact);
        assert!((p.samples[0].log_m - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_log_log_and_clamped() {
        let grid = [0.01, 0.1, 1.0];
        let p = EntropyProfile::from_fn(&grid, 10.0, EntropyKind::Global, |e| 1.0 / e).unwrap();
        assert!((p.log_m_at(0.03) - 1.0 / 0.03).abs() < 1e-9);
        assert_eq!(p.log_m_at(5.0), 1.0);
        assert_eq!(p.log_m_at(0.001), 100.0);
    }

    #[test]
    fn monotonization_reports_correction() {
        let grid = [1.0, 2.0, 3.0];
        let vals = [4.0, 3.0, 3.3];
        let mut p = EntropyProfile::from_fn(&grid, 10.0, EntropyKind::Global, |_| 0.0).unwrap();
        for (s, v) in p.samples.iter_mut().zip(vals) {
            s.log_m = v;
        }
        let (m, worst) = p.monotonized();
        assert_eq!(m.log_m(), vec![4.0, 3.3, 3.3]);
        assert!((worst - 0.3 / 3.3).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let grid = [0.1, 0.2];
        let p = EntropyProfile::from_fn(&grid, 10.0, EntropyKind::Global, |e| 1.0 / e).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("eps,log_m,exact_flag,kind,center_id,c,pool_size,seed\n"));
        assert_eq!(EntropyProfile::from_csv(&csv).unwrap(), p);
    }

    #[test]
    fn sandwich_on_exact_interval() {
        let c = interval_grid(20);
        let grid = [0.2, 0.4, 0.8];
        let p = local_entropy(&c, &grid, 2.0, EntropyKind::Global, &Default::default(), 0)
            .unwrap();
        let report =
            entropy_sandwich_check(|e| global_log_packing_exact(&c, e, 24).ok(), &p).unwrap();
        assert!(report.exact && report.all_hold(), "{report:?}");
    }

    #[test]
    fn segment_profiles_are_exact_and_monotone() {
        let seg = FunctionClass::new(ClassSpec::LinearBox { p: 1, lo: 0.0, hi: 1.0 }).unwrap();
        let grid: Vec<f64> = (1..=40).map(|i| i as f64 * 0.05).collect();
        let p = local_entropy(&seg, &grid, 2.0, EntropyKind::Global, &Default::default(), 0)
            .unwrap();
        assert!(p.exact && p.is_non_increasing());
        let counts: Vec<f64> = p.log_m().iter().map(|l| l.exp().round()).collect();
        assert_eq!(&counts[..10], &[4.0; 10]);
        assert_eq!(counts[19], 2.0);
        // Ball swallows the class at ε = 1, separation 0.5: two points.
        assert!((global_log_packing_exact(&seg, 0.5, 24).unwrap() - 2f64.ln()).abs() < 1e-15);
        let report = entropy_sandwich_check(|e| global_log_packing_exact(&seg, e, 24).ok(), &p)
            .unwrap();
        assert!(report.exact && report.all_hold(), "{report:?}");
    }

    #[test]
    fn finite_grids_break_monotonicity() {
        // A discretized interval is not convex: its exact local entropy can
        // rise with ε, so monotonicity is only checked on convex bodies.
        let c = interval_grid(10);
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
        let p = local_entropy(&c, &grid, 2.0, EntropyKind::Global, &Default::default(), 0)
            .unwrap();
        assert!(p.exact && !p.is_non_increasing());
    }

    #[test]
    fn sandwich_grid_mismatch() {
        let grid = [0.2];
        let p = EntropyProfile::from_fn(&grid, 2.0, EntropyKind::Global, |_| 0.0).unwrap();
        let err = entropy_sandwich_check(|e| (e > 0.15).then_some(0.0), &p).unwrap_err();
        assert!(matches!(err, EntropyError::GridMismatch { .. }));
    }

    #[test]
    fn invalid_inputs() {
        let c = interval_grid(4);
        let b = EntropyBudget::default();
        assert!(matches!(
            local_entropy(&c, &[0.1], 1.0, EntropyKind::Global, &b, 0),
            Err(EntropyError::InvalidConstant(_))
        ));
        assert!(matches!(
            local_entropy(&c, &[0.2, 0.1], 2.0, EntropyKind::Global, &b, 0),
            Err(EntropyError::InvalidGrid(_))
        ));
    }
}
