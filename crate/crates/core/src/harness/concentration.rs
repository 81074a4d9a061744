//! Monte Carlo checks of the empirical-norm concentration event and of the
//! pairwise test's error probability against their closed-form bounds.

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::classes::{Design, DesignDistribution, FunctionClass};
use crate::estimator::{Exponent, NoiseModel, RateConstants};
use crate::metric::MetricPoint;
use crate::seed;

/// Where design points come from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignSource {
    /// Independent draws from a design distribution.
    Random { dist: DesignDistribution },
    /// `P_X` concentrated on one grid node.
    PointMass { node: usize },
}

impl DesignSource {
    fn draw(
        &self,
        class: &FunctionClass,
        n: usize,
        rng: &mut seed::Rng,
    ) -> Result<Design, HarnessError> {
        Ok(match self {
            DesignSource::Random { dist } => class.sample_design(dist, n, rng)?,
            DesignSource::PointMass { node } => Design::point_mass(*node, n),
        })
    }

    /// Squared population `L2(P_X)` distance.
    fn pop_sq(&self, class: &FunctionClass, a: &[f64], b: &[f64]) -> f64 {
        match self {
            DesignSource::Random { .. } => class.dist_coords(a, b).powi(2),
            DesignSource::PointMass { node } => (a[*node] - b[*node]).powi(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    /// Frequency of `{n||f-f̄||²_n ≤ 2δ², n||f-g||²_n ≥ (C²-1)δ²}`.
    pub frequency: f64,
    pub first_frequency: f64,
    pub second_frequency: f64,
    /// Lower bound on the joint probability.
    pub bound: f64,
    pub pass: bool,
    pub trials: usize,
    pub n: usize,
    pub delta: f64,
    pub big_c: f64,
}

fn sq_sum(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Closed-form lower bound for the joint event. Bounded classes use the sup
/// bound; unbounded ones need the moment constant.
pub fn concentration_bound(
    class: &FunctionClass,
    big_c: f64,
    delta: f64,
    moment: Option<Exponent>,
) -> Result<f64, HarnessError> {
    let d2 = delta * delta;
    if let Some(b) = class.sup_bound() {
        let b2 = b * b;
        return Ok(1.0
            - (-3.0 * d2 / (32.0 * b2)).exp()
            - (-3.0 * d2 / (8.0 * b2 * (3.0 * big_c * big_c + 1.0))).exp());
    }
    match moment {
        Some(Exponent::Unbounded { alpha, b }) => {
            let t = 2.0 * alpha * alpha + 1.0;
            let d = class.diameter();
            Ok(1.0 - 2.0 * (-b * d2 / (big_c * big_c * t * t * d * d)).exp())
        }
        _ => Err(HarnessError::UnboundedClassWithoutMomentConstant),
    }
}

/// Estimates the joint concentration event's frequency over `trials` designs.
#[allow(clippy::too_many_arguments)]
pub fn check_norm_concentration(
    class: &FunctionClass,
    f: &MetricPoint,
    g: &MetricPoint,
    f_bar: &MetricPoint,
    n: usize,
    big_c: f64,
    delta: f64,
    trials: usize,
    design: &DesignSource,
    moment: Option<Exponent>,
    seed_value: u64,
) -> Result<ConcentrationReport, HarnessError> {
    if n == 0 || trials == 0 || !(delta > 0.0) {
        return Err(HarnessError::PreconditionViolated(
            "need n, trials and delta positive".into(),
        ));
    }
    let nf = n as f64;
    let d2 = delta * delta;
    if nf * design.pop_sq(class, &f.coords, &g.coords) < big_c * big_c * d2 {
        return Err(HarnessError::PreconditionViolated(
            "n||f-g||² < C²δ²".into(),
        ));
    }
    if nf * design.pop_sq(class, &f.coords, &f_bar.coords) >= d2 {
        return Err(HarnessError::PreconditionViolated(
            "n||f-f̄||² >= δ²".into(),
        ));
    }
    let bound = concentration_bound(class, big_c, delta, moment)?;
    let (mut first, mut second, mut both) = (0usize, 0usize, 0usize);
    for t in 0..trials {
        let mut rng = seed::rng(seed::derive(seed_value, &[t as u64]));
        let x = design.draw(class, n, &mut rng)?;
        let fv = class.evaluate(&f.coords, &x)?;
        let gv = class.evaluate(&g.coords, &x)?;
        let bv = class.evaluate(&f_bar.coords, &x)?;
        let e1 = sq_sum(&fv, &bv) <= 2.0 * d2;
        let e2 = sq_sum(&fv, &gv) >= (big_c * big_c - 1.0) * d2;
        first += e1 as usize;
        second += e2 as usize;
        both += (e1 && e2) as usize;
    }
    let tf = trials as f64;
    let frequency = both as f64 / tf;
    Ok(ConcentrationReport {
        frequency,
        first_frequency: first as f64 / tf,
        second_frequency: second as f64 / tf,
        bound,
        pass: frequency >= bound,
        trials,
        n,
        delta,
        big_c,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestErrorReport {
    /// `P_f̄(ψ = 1)` with the truth near `f`.
    pub error_h0: f64,
    /// `P_ḡ(ψ = 0)` with the truth near `g`.
    pub error_h1: f64,
    /// `3 exp(-L δ²)`.
    pub bound: f64,
    pub l_value: f64,
    pub pass: bool,
    pub trials: usize,
    pub n: usize,
    pub delta: f64,
}

/// Error frequencies of `ψ(Y) = 1(||Y - f(X)||² ≥ ||Y - g(X)||²)` under a
/// truth `f_bar` near `f` and a truth `g_bar` near `g`. Each side's stream is
/// keyed by its truth, so swapping the hypotheses swaps the frequencies.
#[allow(clippy::too_many_arguments)]
pub fn check_test_error(
    class: &FunctionClass,
    f: &MetricPoint,
    g: &MetricPoint,
    f_bar: &MetricPoint,
    g_bar: &MetricPoint,
    noise: &NoiseModel,
    n: usize,
    constants: &RateConstants,
    delta: f64,
    trials: usize,
    design: &DesignSource,
    seed_value: u64,
) -> Result<TestErrorReport, HarnessError> {
    constants.validate()?;
    if n == 0 || trials == 0 || !(delta > 0.0) {
        return Err(HarnessError::PreconditionViolated(
            "need n, trials and delta positive".into(),
        ));
    }
    let nf = n as f64;
    let d2 = delta * delta;
    let c2 = constants.big_c * constants.big_c;
    if nf * design.pop_sq(class, &f.coords, &g.coords) < c2 * d2 {
        return Err(HarnessError::PreconditionViolated("n||f-g||² < C²δ²".into()));
    }
    if nf * design.pop_sq(class, &f.coords, &f_bar.coords) >= d2
        || nf * design.pop_sq(class, &g.coords, &g_bar.coords) >= d2
    {
        return Err(HarnessError::PreconditionViolated(
            "truth not within δ/√n of its hypothesis".into(),
        ));
    }
    let l = constants.l(class.diameter());
    let bound = 3.0 * (-l * d2).exp();
    // Frequency of `ψ = want` under `truth`.
    let side = |truth: &MetricPoint, want: bool| -> Result<f64, HarnessError> {
        let key = seed::coords_hash(&truth.coords);
        let mut hits = 0usize;
        for t in 0..trials {
            let mut rng = seed::rng(seed::derive(seed_value, &[key, t as u64]));
            let x = design.draw(class, n, &mut rng)?;
            let tv = class.evaluate(&truth.coords, &x)?;
            let fv = class.evaluate(&f.coords, &x)?;
            let gv = class.evaluate(&g.coords, &x)?;
            let xi = noise.draw(n, &mut rng);
            let (mut rf, mut rg) = (0.0, 0.0);
            for i in 0..n {
                let y = tv[i] + xi[i];
                rf += (y - fv[i]) * (y - fv[i]);
                rg += (y - gv[i]) * (y - gv[i]);
            }
            hits += ((rf >= rg) == want) as usize;
        }
        Ok(hits as f64 / trials as f64)
    };
    let error_h0 = side(f_bar, true)?;
    let error_h1 = side(g_bar, false)?;
    Ok(TestErrorReport {
        error_h0,
        error_h1,
        bound,
        l_value: l,
        pass: error_h0.max(error_h1) <= bound,
        trials,
        n,
        delta,
    })
}
