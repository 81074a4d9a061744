//! Concrete convex function classes: linear bodies, monotone grids and the
//! discretized Hölder body, plus finite restrictions used as exact oracles.
//!
//! Linear classes store the parameter vector and use the Euclidean metric,
//! which equals the L2(P_X) metric under an isotropic design. Grid classes
//! store function values on the `m^p` grid nodes and use the rms metric of a
//! uniform design on those nodes.

pub mod design;
pub mod moment;
pub mod project;

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{lex_cmp, MetricPoint};
use crate::seed::{self, Rng};

pub use design::{Design, DesignDistribution, DesignKind};
pub use moment::{moment_ratio_check, pair_moment_ratios, MomentReport, MomentRow};
use project::HolderOps;

/// Relative tolerance of membership predicates.
pub const MEMBER_TOL: f64 = 1e-9;
/// Largest grid (`m^p`) a grid class may declare.
pub const MAX_GRID_NODES: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid class specification: {0}")]
    InvalidSpec(String),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("design {0:?} is not supported for this class")]
    UnsupportedDesign(DesignKind),
    #[error("operation requires a linear class")]
    NotLinear,
    #[error("degenerate pair: sampled members coincide")]
    Degenerate,
}

/// Declarative description of a class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassSpec {
    /// `{β ∈ R^p : ||β||_1 ≤ radius}`.
    LinearL1 { p: usize, radius: f64 },
    /// `{θ : Σ θ_i² / a_i ≤ 1}` with `a` sorted ascending.
    LinearEllipsoid { a: Vec<f64> },
    /// The box `[lo, hi]^p` of parameter vectors.
    LinearBox { p: usize, lo: f64, hi: f64 },
    /// Functions on `m^p` grid nodes, non-decreasing along each axis, in `[0, 1]`.
    MonotoneGrid { p: usize, m: usize },
    /// One-dimensional Hölder body on `m` bins.
    HolderGrid { alpha: f64, gamma: f64, m: usize },
    /// A finite set of members of `base`.
    Finite {
        base: Box<ClassSpec>,
        points: Vec<Vec<f64>>,
    },
}

impl ClassSpec {
    /// Default ellipsoid axes `a_i = (p - i + 1)^{-2}`, ascending.
    pub fn default_ellipsoid(p: usize) -> Self {
        let a = (1..=p).map(|i| ((p - i + 1) as f64).powi(-2)).collect();
        ClassSpec::LinearEllipsoid { a }
    }

    /// Default grid resolution for sample size `n`: `⌈n^{1/2}⌉` for one axis,
    /// `⌈n^{1/(2p)}⌉` otherwise.
    pub fn default_grid_m(p: usize, n: usize) -> usize {
        let e = if p == 1 { 0.5 } else { 1.0 / (2.0 * p as f64) };
        ((n as f64).powf(e) - 1e-9).ceil().max(1.0) as usize
    }
}

/// A validated, immutable class descriptor. Cheap to clone.
#[derive(Clone, Debug)]
pub struct FunctionClass {
    inner: Arc<Inner>,
}

#[derive(Debug)]
struct Inner {
    spec: ClassSpec,
    tag: u64,
    dim: usize,
    diameter: f64,
    holder: Option<HolderOps>,
    base: Option<FunctionClass>,
}

impl Serialize for FunctionClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.inner.spec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FunctionClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let spec = ClassSpec::deserialize(d)?;
        FunctionClass::new(spec).map_err(serde::de::Error::custom)
    }
}

fn invalid(msg: impl Into<String>) -> ClassError {
    ClassError::InvalidSpec(msg.into())
}

fn grid_nodes(p: usize, m: usize) -> Result<usize, ClassError> {
    if p == 0 || m == 0 {
        return Err(invalid("grid needs p >= 1 and m >= 1"));
    }
    let mut n: usize = 1;
    for _ in 0..p {
        n = n
            .checked_mul(m)
            .filter(|&n| n <= MAX_GRID_NODES)
            .ok_or_else(|| invalid("grid too large"))?;
    }
    Ok(n)
}

impl FunctionClass {
    /// Validates `spec` and builds the descriptor.
    pub fn new(spec: ClassSpec) -> Result<Self, ClassError> {
        let tag = seed::label(&serde_json::to_string(&spec).expect("spec serializes"));
        let mut holder = None;
        let mut base = None;
        let (dim, diameter) = match &spec {
            ClassSpec::LinearL1 { p, radius } => {
                if *p == 0 || !(radius.is_finite() && *radius > 0.0) {
                    return Err(invalid("l1 ball needs p >= 1 and radius > 0"));
                }
                (*p, 2.0 * radius)
            }
            ClassSpec::LinearEllipsoid { a } => {
                if a.is_empty() || a.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(invalid("ellipsoid axes must be positive"));
                }
                if a.windows(2).any(|w| w[0] > w[1]) {
                    return Err(invalid("ellipsoid axes must be sorted ascending"));
                }
                (a.len(), 2.0 * a[a.len() - 1].sqrt())
            }
            ClassSpec::LinearBox { p, lo, hi } => {
                if *p == 0 || !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(invalid("box needs p >= 1 and lo < hi"));
                }
                (*p, (hi - lo) * (*p as f64).sqrt())
            }
            ClassSpec::MonotoneGrid { p, m } => (grid_nodes(*p, *m)?, 1.0),
            ClassSpec::HolderGrid { alpha, gamma, m } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) || !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(invalid("holder needs alpha in (0,1] and gamma > 0"));
                }
                if *m == 0 || *m > 512 {
                    return Err(invalid("holder grid needs 1 <= m <= 512"));
                }
                holder = Some(HolderOps::new(*alpha, *gamma, *m));
                (*m, 2.0 * gamma)
            }
            ClassSpec::Finite { base: b, points } => {
                if matches!(**b, ClassSpec::Finite { .. }) {
                    return Err(invalid("finite restriction of a finite class"));
                }
                if points.is_empty() {
                    return Err(invalid("finite class needs at least one point"));
                }
                let bc = FunctionClass::new((**b).clone())?;
                for pt in points {
                    if pt.len() != bc.dim() {
                        return Err(ClassError::DimensionMismatch {
                            expected: bc.dim(),
                            got: pt.len(),
                        });
                    }
                    if !bc.contains(pt) {
                        return Err(invalid("finite point outside its base class"));
                    }
                }
                let mut diam: f64 = 0.0;
                for i in 0..points.len() {
                    for j in i + 1..points.len() {
                        diam = diam.max(bc.dist_coords(&points[i], &points[j]));
                    }
                }
                let dim = bc.dim();
                base = Some(bc);
                (dim, diam)
            }
        };
        Ok(Self {
            inner: Arc::new(Inner {
                spec,
                tag,
                dim,
                diameter,
                holder,
                base,
            }),
        })
    }

    pub fn spec(&self) -> &ClassSpec {
        &self.inner.spec
    }

    /// Identifier stamped on every member.
    pub fn tag(&self) -> u64 {
        self.inner.tag
    }

    /// Coordinate length.
    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Exact diameter in the class metric.
    pub fn diameter(&self) -> f64 {
        self.inner.diameter
    }

    /// True for parameter-vector classes (and finite restrictions of them).
    pub fn is_linear(&self) -> bool {
        match self.spec() {
            ClassSpec::LinearL1 { .. }
            | ClassSpec::LinearEllipsoid { .. }
            | ClassSpec::LinearBox { .. } => true,
            ClassSpec::Finite { .. } => self.base().is_some_and(|b| b.is_linear()),
            _ => false,
        }
    }

    /// Base class of a finite restriction.
    pub fn base(&self) -> Option<&FunctionClass> {
        self.inner.base.as_ref()
    }

    /// Points of a finite class.
    pub fn finite_points(&self) -> Option<&[Vec<f64>]> {
        match self.spec() {
            ClassSpec::Finite { points, .. } => Some(points),
            _ => None,
        }
    }

    /// Sup-norm bound `B_F` where the class has one.
    pub fn sup_bound(&self) -> Option<f64> {
        match self.spec() {
            ClassSpec::MonotoneGrid { .. } => Some(1.0),
            // rms <= gamma on m nodes bounds every value by gamma * sqrt(m).
            ClassSpec::HolderGrid { gamma, m, .. } => Some(gamma * (*m as f64).sqrt()),
            ClassSpec::Finite { .. } => self.base().and_then(|b| b.sup_bound()),
            _ => None,
        }
    }

    /// Grid shape `(p, m)` of grid classes.
    pub fn grid_shape(&self) -> Option<(usize, usize)> {
        match self.spec() {
            ClassSpec::MonotoneGrid { p, m } => Some((*p, *m)),
            ClassSpec::HolderGrid { m, .. } => Some((1, *m)),
            ClassSpec::Finite { .. } => self.base().and_then(|b| b.grid_shape()),
            _ => None,
        }
    }

    /// Factor `s` with `dist² = s · Σ (a_i - b_i)²`.
    pub fn metric_scale(&self) -> f64 {
        if self.grid_shape().is_some() {
            1.0 / self.dim() as f64
        } else {
            1.0
        }
    }

    /// Wraps coordinates as a member-tagged point after shape checks.
    pub fn point(&self, coords: Vec<f64>) -> Result<MetricPoint, ClassError> {
        self.check_dim(coords.len())?;
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(ClassError::NonFinite);
        }
        Ok(MetricPoint {
            coords,
            class_tag: self.tag(),
        })
    }

    fn check_dim(&self, got: usize) -> Result<(), ClassError> {
        if got != self.dim() {
            return Err(ClassError::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    /// Distance in L2(P_X).
    pub fn dist(&self, f: &MetricPoint, g: &MetricPoint) -> Result<f64, ClassError> {
        self.check_dim(f.coords.len())?;
        self.check_dim(g.coords.len())?;
        Ok(self.dist_coords(&f.coords, &g.coords))
    }

    /// Distance on raw coordinates (no checks).
    pub fn dist_coords(&self, a: &[f64], b: &[f64]) -> f64 {
        let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (ss * self.metric_scale()).sqrt()
    }

    /// Membership predicate with tolerance [`MEMBER_TOL`].
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let tol = MEMBER_TOL;
        match self.spec() {
            ClassSpec::LinearL1 { radius, .. } => {
                x.iter().map(|v| v.abs()).sum::<f64>() <= radius * (1.0 + tol) + tol
            }
            ClassSpec::LinearEllipsoid { a } => {
                x.iter().zip(a).map(|(v, ai)| v * v / ai).sum::<f64>() <= 1.0 + tol
            }
            ClassSpec::LinearBox { lo, hi, .. } => {
                x.iter().all(|v| *v >= lo - tol && *v <= hi + tol)
            }
            ClassSpec::MonotoneGrid { p, m } => {
                if x.iter().any(|v| *v < -tol || *v > 1.0 + tol) {
                    return false;
                }
                let strides = project::grid_strides(*p, *m);
                (0..x.len()).all(|i| {
                    strides.iter().all(|&s| {
                        (i / s) % m == m - 1 || x[i + s] >= x[i] - tol
                    })
                })
            }
            ClassSpec::HolderGrid { .. } => self
                .inner
                .holder
                .as_ref()
                .expect("holder ops")
                .contains(x, tol),
            ClassSpec::Finite { points, .. } => points.iter().any(|p| {
                p.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-12)
            }),
        }
    }

    /// Euclidean projection of raw coordinates onto the class.
    pub fn project(&self, raw: &[f64]) -> Result<MetricPoint, ClassError> {
        let coords = self.project_coords(raw)?;
        Ok(MetricPoint {
            coords,
            class_tag: self.tag(),
        })
    }

    /// Projection on raw coordinate vectors.
    pub fn project_coords(&self, raw: &[f64]) -> Result<Vec<f64>, ClassError> {
        self.check_dim(raw.len())?;
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(ClassError::NonFinite);
        }
        match self.spec() {
            ClassSpec::LinearL1 { radius, .. } => Ok(project::l1_ball(raw, *radius)),
            ClassSpec::LinearEllipsoid { a } => project::ellipsoid(raw, a),
            ClassSpec::LinearBox { lo, hi, .. } => Ok(project::clamp_box(raw, *lo, *hi)),
            ClassSpec::MonotoneGrid { p, m } => project::monotone_grid(raw, *p, *m),
            ClassSpec::HolderGrid { .. } => self
                .inner
                .holder
                .as_ref()
                .expect("holder ops")
                .project(raw),
            ClassSpec::Finite { points, .. } => Ok(self.nearest_finite(points, raw).clone()),
        }
    }

    fn nearest_finite<'a>(&self, points: &'a [Vec<f64>], raw: &[f64]) -> &'a Vec<f64> {
        let mut best = &points[0];
        let mut best_d = self.dist_coords(best, raw);
        for p in &points[1..] {
            let d = self.dist_coords(p, raw);
            if d < best_d || (d == best_d && lex_cmp(p, best).is_lt()) {
                best = p;
                best_d = d;
            }
        }
        best
    }

    /// Deterministic anchor: the projection of the origin.
    pub fn anchor(&self) -> Result<MetricPoint, ClassError> {
        self.project(&vec![0.0; self.dim()])
    }

    /// A member drawn from a full-support proposal followed by projection.
    pub fn sample_member(&self, seed: u64) -> MetricPoint {
        let mut rng = seed::rng(seed);
        self.sample_member_rng(&mut rng)
    }

    /// [`sample_member`](Self::sample_member) on a caller-owned stream.
    pub fn sample_member_rng(&self, rng: &mut Rng) -> MetricPoint {
        let raw = self.global_proposal(rng);
        self.project(&raw)
            .unwrap_or_else(|_| self.anchor().expect("anchor projection"))
    }

    fn gaussian(&self, rng: &mut Rng) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// Raw proposal covering the whole body (and some of its exterior).
    fn global_proposal(&self, rng: &mut Rng) -> Vec<f64> {
        let dim = self.dim();
        match self.spec() {
            ClassSpec::LinearL1 { radius, .. } => {
                let g = self.gaussian(rng);
                let n1: f64 = g.iter().map(|x| x.abs()).sum::<f64>().max(1e-300);
                let s = radius * 2.0 * rng.random::<f64>() / n1;
                g.into_iter().map(|x| x * s).collect()
            }
            ClassSpec::LinearEllipsoid { a } => {
                let g = self.gaussian(rng);
                let n2 = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                let s = 1.5 * rng.random::<f64>().powf(1.0 / dim as f64) / n2;
                g.iter().zip(a).map(|(x, ai)| x * ai.sqrt() * s).collect()
            }
            ClassSpec::LinearBox { lo, hi, .. } => (0..dim)
                .map(|_| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
            ClassSpec::MonotoneGrid { .. } => (0..dim)
                .map(|_| -0.25 + 1.5 * rng.random::<f64>())
                .collect(),
            ClassSpec::HolderGrid { gamma, m, .. } => {
                // Random walk proposals give smooth members; white noise gives rough ones.
                let g = self.gaussian(rng);
                let raw: Vec<f64> = if rng.random::<bool>() {
                    let mut acc = rng.sample::<f64, _>(StandardNormal);
                    g.iter()
                        .map(|x| {
                            acc += x / (*m as f64).sqrt();
                            acc
                        })
                        .collect()
                } else {
                    g
                };
                let rms = (raw.iter().map(|x| x * x).sum::<f64>() / *m as f64)
                    .sqrt()
                    .max(1e-300);
                let s = 1.5 * gamma * rng.random::<f64>() / rms;
                raw.into_iter().map(|x| x * s).collect()
            }
            ClassSpec::Finite { points, .. } => points[rng.random_range(0..points.len())].clone(),
        }
    }

    /// Raw proposal near `center` at scale `r`, used to fill local pools.
    pub fn local_proposal(&self, center: &[f64], r: f64, rng: &mut Rng) -> Vec<f64> {
        let dim = self.dim();
        // Step length in coordinate units for metric length r.
        let coord_r = r / self.metric_scale().sqrt();
        match self.spec() {
            ClassSpec::LinearL1 { .. } => sparse_move(center, coord_r, rng),
            ClassSpec::LinearEllipsoid { a } => {
                let g = self.gaussian(rng);
                let shaped = rng.random::<bool>();
                let dir: Vec<f64> = if shaped {
                    g.iter().zip(a).map(|(x, ai)| x * ai.sqrt()).collect()
                } else {
                    g
                };
                let n2 = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                let len = coord_r * rng.random::<f64>().powf(1.0 / dim as f64);
                center
                    .iter()
                    .zip(&dir)
                    .map(|(c, d)| c + len * d / n2)
                    .collect()
            }
            _ => {
                let g = self.gaussian(rng);
                let n2 = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                let len = coord_r * rng.random::<f64>().powf(1.0 / dim as f64);
                center
                    .iter()
                    .zip(&g)
                    .map(|(c, d)| c + len * d / n2)
                    .collect()
            }
        }
    }

    /// Deterministic raw moves `center ± δ e_i` with `δ ∈ {r/2, r/4, r/8}` for
    /// the ℓ1 and ellipsoid bodies; empty for other kinds. Pools add these to
    /// their random proposals so every coordinate direction is tried.
    pub fn axis_moves(&self, center: &[f64], r: f64) -> Vec<Vec<f64>> {
        if !matches!(
            self.spec(),
            ClassSpec::LinearL1 { .. } | ClassSpec::LinearEllipsoid { .. }
        ) {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(6 * center.len());
        for i in 0..center.len() {
            for delta in [r / 2.0, r / 4.0, r / 8.0] {
                for s in [1.0, -1.0] {
                    let mut v = center.to_vec();
                    v[i] += s * delta;
                    out.push(v);
                }
            }
        }
        out
    }

    /// Structured points used as extra sup-candidates for global entropy:
    /// vertices of polytopes, axis extremes of ellipsoids, step functions for
    /// monotone grids, constants for the Hölder body.
    pub fn extreme_points(&self) -> Vec<MetricPoint> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        let dim = self.dim();
        let unit = |i: usize, v: f64| {
            let mut e = vec![0.0; dim];
            e[i] = v;
            e
        };
        match self.spec() {
            ClassSpec::LinearL1 { radius, .. } => {
                for i in 0..dim.min(16) {
                    out.push(unit(i, *radius));
                    out.push(unit(i, -radius));
                }
            }
            ClassSpec::LinearEllipsoid { a } => {
                for i in (0..dim).rev().take(16) {
                    out.push(unit(i, a[i].sqrt()));
                    out.push(unit(i, -a[i].sqrt()));
                }
            }
            ClassSpec::LinearBox { lo, hi, .. } => {
                out.push(vec![*lo; dim]);
                out.push(vec![*hi; dim]);
                out.push(vec![0.5 * (lo + hi); dim]);
            }
            ClassSpec::MonotoneGrid { p, m } => {
                out.push(vec![0.0; dim]);
                out.push(vec![1.0; dim]);
                out.push(vec![0.5; dim]);
                let strides = project::grid_strides(*p, *m);
                for t in 1..*m {
                    let v: Vec<f64> = (0..dim)
                        .map(|i| if (i / strides[0]) % m >= t { 1.0 } else { 0.0 })
                        .collect();
                    out.push(v);
                    if out.len() >= 16 {
                        break;
                    }
                }
            }
            ClassSpec::HolderGrid { gamma, .. } => {
                out.push(vec![0.0; dim]);
                out.push(vec![*gamma; dim]);
                out.push(vec![-gamma; dim]);
            }
            ClassSpec::Finite { points, .. } => out.extend(points.iter().cloned()),
        }
        out.into_iter()
            .filter_map(|v| self.project(&v).ok())
            .collect()
    }

    /// Draws `n` design points for this class.
    pub fn sample_design(
        &self,
        dist: &DesignDistribution,
        n: usize,
        rng: &mut Rng,
    ) -> Result<Design, ClassError> {
        if let Some(b) = self.base() {
            return b.sample_design(dist, n, rng);
        }
        if self.grid_shape().is_some() {
            if dist.kind != DesignKind::UniformCube {
                return Err(ClassError::UnsupportedDesign(dist.kind));
            }
            let nodes = self.dim();
            return Ok(Design::Nodes(
                (0..n).map(|_| rng.random_range(0..nodes)).collect(),
            ));
        }
        Ok(Design::Rows {
            p: self.dim(),
            data: dist.draw_rows(self.dim(), n, rng),
        })
    }

    /// Function values of member coordinates at the design points.
    pub fn evaluate(&self, coords: &[f64], design: &Design) -> Result<Vec<f64>, ClassError> {
        self.check_dim(coords.len())?;
        match design {
            Design::Rows { p, data } => {
                if self.grid_shape().is_some() {
                    return Err(ClassError::DimensionMismatch {
                        expected: self.dim(),
                        got: *p,
                    });
                }
                self.check_dim(*p)?;
                Ok(data
                    .chunks_exact(*p)
                    .map(|row| row.iter().zip(coords).map(|(x, b)| x * b).sum())
                    .collect())
            }
            Design::Nodes(idx) => {
                if self.grid_shape().is_none() {
                    return Err(ClassError::NotLinear);
                }
                if let Some(&bad) = idx.iter().find(|&&i| i >= self.dim()) {
                    return Err(ClassError::DimensionMismatch {
                        expected: self.dim(),
                        got: bad + 1,
                    });
                }
                Ok(idx.iter().map(|&i| coords[i]).collect())
            }
        }
    }

    /// Grid node locations in `[0,1]^p`, cell midpoints, row-major.
    pub fn grid_locations(&self) -> Option<Vec<Vec<f64>>> {
        let (p, m) = self.grid_shape()?;
        let strides = project::grid_strides(p, m);
        Some(
            (0..self.dim())
                .map(|i| {
                    strides
                        .iter()
                        .map(|s| ((i / s) % m) as f64 / m as f64 + 0.5 / m as f64)
                        .collect()
                })
                .collect(),
        )
    }
}

/// Sparse local move for the ℓ1 body. Mixes single-coordinate steps, mass
/// transfers from the support to a fresh coordinate, and joint moves of the
/// support plus a few fresh coordinates. Step lengths are log-spread over
/// `[r/64, r]`; joint moves sometimes soft-threshold to kill small entries.
fn sparse_move(center: &[f64], r: f64, rng: &mut Rng) -> Vec<f64> {
    let p = center.len();
    let support: Vec<usize> = (0..p).filter(|&i| center[i] != 0.0).collect();
    let len = r * 2f64.powf(-6.0 * rng.random::<f64>());
    let sign = |rng: &mut Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut raw = center.to_vec();
    let u: f64 = rng.random();
    if u < 0.4 {
        let i = if !support.is_empty() && rng.random::<f64>() < 0.3 {
            support[rng.random_range(0..support.len())]
        } else {
            rng.random_range(0..p)
        };
        raw[i] += sign(rng) * len;
    } else if u < 0.6 && !support.is_empty() {
        let i = support[rng.random_range(0..support.len())];
        let j = rng.random_range(0..p);
        let t = len.min(center[i].abs());
        raw[i] -= center[i].signum() * t;
        raw[j] += sign(rng) * t;
    } else {
        let mut coords = support;
        let fresh = rng.random_range(1..=4.min(p));
        for _ in 0..fresh {
            coords.push(rng.random_range(0..p));
        }
        coords.sort_unstable();
        coords.dedup();
        let z: Vec<f64> = coords.iter().map(|_| rng.sample(StandardNormal)).collect();
        let n2 = z.iter().map(|x: &f64| x * x).sum::<f64>().sqrt().max(1e-300);
        for (&i, zi) in coords.iter().zip(&z) {
            raw[i] += len * zi / n2;
        }
        if rng.random::<bool>() {
            let lam = rng.random::<f64>() * 0.3 * len;
            raw.iter_mut()
                .for_each(|x| *x = x.signum() * (x.abs() - lam).max(0.0));
        }
    }
    raw
}
