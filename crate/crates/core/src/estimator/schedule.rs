//! Stage schedules: the largest `J` whose `ε_J` passes the entropy condition.

use serde::{Deserialize, Serialize};

use super::{EstimatorError, Exponent, RateConstants};
use crate::metric::EntropyProfile;

/// Which stage condition to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// `nε_J² > 2 log M_loc(d/2^{J-2}, c) ∨ log 2` with the bounded `L`.
    Bounded,
    /// Same condition with the unbounded `L̃`.
    Unbounded,
    /// `nε_J² > 2 inf_f log M_adloc(f, 2d/2^{J-2}, 2c) ∨ log 2`; the profile
    /// must already hold the infimum over centers.
    Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    /// `ε_J = d √L / (2^{J-2} c)` for `J = 1, 2, …` up to the first `J` with
    /// `nε_J² ≤ log 2`.
    pub eps_j: Vec<f64>,
    /// Whether each `ε_J` satisfies the condition.
    pub satisfied: Vec<bool>,
    pub j_star: usize,
    pub condition_kind: ConditionKind,
    /// The (scaled) `L` used.
    pub l_value: f64,
}

impl StageSchedule {
    pub fn eps_star_stage(&self) -> f64 {
        self.eps_j[self.j_star - 1]
    }
}

/// Computes `ε_J` and `J*` for `n` observations on a class of diameter `d`.
pub fn stage_schedule(
    profile: &EntropyProfile,
    n: usize,
    constants: &RateConstants,
    d: f64,
    kind: ConditionKind,
) -> Result<StageSchedule, EstimatorError> {
    constants.validate()?;
    if n == 0 {
        return Err(EstimatorError::NoData);
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(EstimatorError::InvalidConstants(format!("diameter {d}")));
    }
    match (kind, constants.exponent) {
        (ConditionKind::Bounded, Exponent::Unbounded { .. })
        | (ConditionKind::Unbounded, Exponent::Bounded { .. }) => {
            return Err(EstimatorError::InvalidConstants(
                "condition kind does not match the exponent constants".into(),
            ))
        }
        _ => {}
    }
    let c = constants.c();
    let (profile_c, scale) = match kind {
        ConditionKind::Adaptive => (2.0 * c, 2.0),
        _ => (c, 1.0),
    };
    if (profile.c - profile_c).abs() > 1e-12 * profile_c {
        return Err(EstimatorError::ProfileConstantMismatch {
            expected: profile_c,
            got: profile.c,
        });
    }
    let l = constants.l_schedule(d);
    let nf = n as f64;
    let log2 = std::f64::consts::LN_2;
    let eps_min = profile.samples[0].eps;
    let mut eps_j = Vec::new();
    let mut satisfied = Vec::new();
    for j in 1..=2048 {
        let eps = d * l.sqrt() / (2f64.powi(j - 2) * c);
        let lhs = nf * eps * eps;
        eps_j.push(eps);
        if lhs <= log2 {
            satisfied.push(false);
            break;
        }
        let arg = scale * d / 2f64.powi(j - 2);
        if arg < eps_min / 2.0 {
            return Err(EstimatorError::ProfileTooCoarse { arg, eps_min });
        }
        satisfied.push(lhs > 2.0 * profile.log_m_at(arg));
    }
    let j_star = satisfied.iter().rposition(|&s| s).map_or(1, |i| i + 1);
    Ok(StageSchedule {
        eps_j,
        satisfied,
        j_star,
        condition_kind: kind,
        l_value: l,
    })
}
