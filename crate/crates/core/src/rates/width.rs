//! Monte Carlo Gaussian width `w(T) = E sup_{t∈T} ⟨t, g⟩` with common random
//! numbers, and the Sudakov entropy bound.
//!
//! Draw `j` is a pure function of `(seed, j)`, so estimates for different sets
//! of one dimension share their Gaussian vectors. Per-draw suprema are then
//! ordered exactly like the sets, which makes nested-set monotonicity exact.

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RatesError;
use crate::classes::{ClassSpec, FunctionClass};
use crate::seed;

const CHUNK: usize = 256;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WidthSet {
    EuclideanBall { p: usize, radius: f64 },
    L1Ball { p: usize, radius: f64 },
    /// `{θ : Σ θ_i²/a_i ≤ 1}`.
    Ellipsoid { a: Vec<f64> },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Point { x: Vec<f64> },
    Finite { points: Vec<Vec<f64>> },
    /// `factor · set`, `factor ≥ 0`.
    Scaled { factor: f64, set: Box<WidthSet> },
    /// Tangent cone of the ℓ1 norm at `beta`, intersected with the unit ball.
    L1DescentConeBall { beta: Vec<f64> },
    /// A class body in its own metric; maximized by projected ascent unless a
    /// closed form exists.
    ClassBody { class: FunctionClass },
}

impl WidthSet {
    pub fn dim(&self) -> usize {
        match self {
            WidthSet::EuclideanBall { p, .. } | WidthSet::L1Ball { p, .. } => *p,
            WidthSet::Ellipsoid { a } => a.len(),
            WidthSet::Box { lo, .. } => lo.len(),
            WidthSet::Point { x } => x.len(),
            WidthSet::Finite { points } => points.first().map_or(0, |p| p.len()),
            WidthSet::Scaled { set, .. } => set.dim(),
            WidthSet::L1DescentConeBall { beta } => beta.len(),
            WidthSet::ClassBody { class } => class.dim(),
        }
    }

    /// Stable identifier.
    pub fn descriptor(&self) -> String {
        serde_json::to_string(self).expect("width set serializes")
    }

    fn validate(&self) -> Result<(), RatesError> {
        let bad = |m: &str| Err(RatesError::BadParams(m.into()));
        match self {
            WidthSet::EuclideanBall { radius, .. } | WidthSet::L1Ball { radius, .. }
                if !(*radius >= 0.0) =>
            {
                bad("radius must be nonnegative")
            }
            WidthSet::Ellipsoid { a } if a.iter().any(|x| !(*x > 0.0)) => bad("axes must be positive"),
            WidthSet::Box { lo, hi }
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| l > h) =>
            {
                bad("box bounds must match and satisfy lo <= hi")
            }
            WidthSet::Finite { points }
                if points.is_empty() || points.iter().any(|p| p.len() != points[0].len()) =>
            {
                bad("finite set must be nonempty with equal lengths")
            }
            WidthSet::Scaled { factor, set } => {
                if !(*factor >= 0.0 && factor.is_finite()) {
                    return bad("scale factor must be nonnegative");
                }
                set.validate()
            }
            _ if self.dim() == 0 => bad("dimension must be positive"),
            _ => Ok(()),
        }
    }
}

/// Limits for projected ascent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerBudget {
    /// Doublings of the ascent step.
    pub max_iter: usize,
    /// Relative change at which the ascent is declared converged.
    pub tol: f64,
}

impl Default for InnerBudget {
    fn default() -> Self {
        Self {
            max_iter: 60,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub value: f64,
    pub std_error: f64,
    pub draws: usize,
    pub set_descriptor: String,
}

/// Exact `sup ⟨t, g⟩` over the tangent cone of `||·||_1` at `beta` intersected
/// with the unit ball, i.e. the distance from `g` to the normal cone
/// `{λ z : λ ≥ 0, z ∈ ∂||beta||_1}`.
pub fn l1_cone_sup(beta: &[f64], g: &[f64]) -> f64 {
    let mut a = 0.0;
    let mut s = 0usize;
    let mut off: Vec<f64> = Vec::new();
    for (b, gi) in beta.iter().zip(g) {
        if *b != 0.0 {
            a += b.signum() * gi;
            s += 1;
        } else {
            off.push(gi.abs());
        }
    }
    off.sort_by(|x, y| y.total_cmp(x));
    // The objective in λ is convex piecewise quadratic; on the piece where
    // exactly j off-support entries exceed λ its derivative vanishes at
    // (a + U_j)/(s + j), U_j the sum of the j largest.
    let f = |lam: f64| -> f64 {
        let mut v = 0.0;
        for (b, gi) in beta.iter().zip(g) {
            if *b != 0.0 {
                let r = gi - lam * b.signum();
                v += r * r;
            } else {
                let r = (gi.abs() - lam).max(0.0);
                v += r * r;
            }
        }
        v
    };
    let mut best = f(0.0);
    let mut u = 0.0;
    for j in 0..=off.len() {
        if j > 0 {
            u += off[j - 1];
        }
        if s + j == 0 {
            continue;
        }
        let lam = ((a + u) / (s + j) as f64).max(0.0);
        best = best.min(f(lam));
    }
    best.sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-draw supremum of an unscaled set.
fn sup(set: &WidthSet, g: &[f64], budget: &InnerBudget) -> Result<f64, RatesError> {
    Ok(match set {
        WidthSet::EuclideanBall { radius, .. } => radius * dot(g, g).sqrt(),
        WidthSet::L1Ball { radius, .. } => radius * g.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        WidthSet::Ellipsoid { a } => a.iter().zip(g).map(|(ai, x)| ai * x * x).sum::<f64>().sqrt(),
        WidthSet::Box { lo, hi } => lo
            .iter()
            .zip(hi)
            .zip(g)
            .map(|((l, h), x)| (l * x).max(h * x))
            .sum(),
        WidthSet::Point { x } => dot(x, g),
        WidthSet::Finite { points } => points
            .iter()
            .map(|p| dot(p, g))
            .fold(f64::NEG_INFINITY, f64::max),
        WidthSet::Scaled { factor, set } => factor * sup(set, g, budget)?,
        WidthSet::L1DescentConeBall { beta } => l1_cone_sup(beta, g),
        WidthSet::ClassBody { class } => class_sup(class, g, budget)?,
    })
}

/// `sup ⟨√s·t, g⟩` over a class body with metric scale `s`.
fn class_sup(class: &FunctionClass, g: &[f64], budget: &InnerBudget) -> Result<f64, RatesError> {
    let root = class.metric_scale().sqrt();
    let closed = match class.spec() {
        ClassSpec::LinearL1 { p, radius } => Some(WidthSet::L1Ball { p: *p, radius: *radius }),
        ClassSpec::LinearEllipsoid { a } => Some(WidthSet::Ellipsoid { a: a.clone() }),
        ClassSpec::LinearBox { p, lo, hi } => Some(WidthSet::Box {
            lo: vec![*lo; *p],
            hi: vec![*hi; *p],
        }),
        ClassSpec::Finite { points, .. } => Some(WidthSet::Finite {
            points: points.clone(),
        }),
        _ => None,
    };
    if let Some(set) = closed {
        return Ok(root * sup(&set, g, budget)?);
    }
    // Projections of ηg approach the maximizer as η grows, with non-decreasing
    // objective; stop once a doubling changes it by less than the tolerance.
    let mut eta = 1.0;
    let mut prev = f64::NEG_INFINITY;
    let mut change = f64::INFINITY;
    for _ in 0..budget.max_iter {
        let raw: Vec<f64> = g.iter().map(|x| eta * x).collect();
        let t = class.project_coords(&raw)?;
        let v = dot(&t, g);
        change = v - prev;
        if change.abs() <= budget.tol * (1.0 + v.abs()) {
            return Ok(root * v);
        }
        prev = v;
        eta *= 2.0;
    }
    Err(RatesError::InnerOptFailure(change))
}

fn peel(set: &WidthSet) -> (f64, &WidthSet) {
    match set {
        WidthSet::Scaled { factor, set } => {
            let (f, s) = peel(set);
            (factor * f, s)
        }
        s => (1.0, s),
    }
}

fn draw_chunk(seed_value: u64, chunk: usize, count: usize, dim: usize) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive(seed_value, &[chunk as u64, dim as u64]));
    (0..count * dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Width estimate from `draws` Gaussian vectors. Outer scale factors are
/// applied after averaging so `w(αT) = α w(T)` holds bit for bit.
pub fn gaussian_width(
    set: &WidthSet,
    draws: usize,
    budget: &InnerBudget,
    seed_value: u64,
) -> Result<WidthEstimate, RatesError> {
    set.validate()?;
    if draws < 2 {
        return Err(RatesError::BadParams("need at least two draws".into()));
    }
    let (factor, base) = peel(set);
    let dim = set.dim();
    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<Result<(f64, f64), RatesError>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(draws - c * CHUNK);
            let gs = draw_chunk(seed_value, c, count, dim);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for g in gs.chunks_exact(dim) {
                let v = sup(base, g, budget)?;
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect();
    let mut s = 0.0;
    let mut s2 = 0.0;
    for r in partial {
        let (a, b) = r?;
        s += a;
        s2 += b;
    }
    let nf = draws as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(WidthEstimate {
        value: factor * mean,
        std_error: factor * (var / nf).sqrt(),
        draws,
        set_descriptor: set.descriptor(),
    })
}

/// Estimates for several sets on shared draws.
pub fn gaussian_width_many(
    sets: &[WidthSet],
    draws: usize,
    budget: &InnerBudget,
    seed_value: u64,
) -> Result<Vec<WidthEstimate>, RatesError> {
    sets.iter()
        .map(|s| gaussian_width(s, draws, budget, seed_value))
        .collect()
}

/// Sudakov-type entropy bound `2 w² / separation²`; at separation `ε/c` this
/// is `2 c² w² / ε²`.
pub fn sudakov_entropy_bound(width: &WidthEstimate, separation: f64) -> Result<f64, RatesError> {
    if !(separation > 0.0) {
        return Err(RatesError::BadParams("separation must be positive".into()));
    }
    Ok(2.0 * width.value * width.value / (separation * separation))
}
