//! Constants `C`, `c = 2(C+1)` and the exponent constant `L`.

use serde::{Deserialize, Serialize};

use super::EstimatorError;

/// Which tail bound feeds `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Exponent {
    /// Sup-norm bounded class with bound `b_f`.
    Bounded { b_f: f64 },
    /// Class satisfying the moment condition with constant `alpha`; `b` is the
    /// unspecified sub-exponential constant.
    Unbounded {
        alpha: f64,
        #[serde(default = "default_b")]
        b: f64,
    },
}

pub fn default_b() -> f64 {
    1.0 / 8.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    /// The constant `C > 3`.
    pub big_c: f64,
    pub sigma: f64,
    pub exponent: Exponent,
    /// Multiplier applied to `L` by the stage schedule.
    #[serde(default = "default_scale")]
    pub practical_scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl RateConstants {
    pub fn new(big_c: f64, sigma: f64, exponent: Exponent) -> Result<Self, EstimatorError> {
        let k = Self {
            big_c,
            sigma,
            exponent,
            practical_scale: 1.0,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |m: &str| Err(EstimatorError::InvalidConstants(m.into()));
        if !(self.big_c > 3.0 && self.big_c.is_finite()) {
            return bad("C must exceed 3");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be finite and nonnegative");
        }
        if !(self.practical_scale > 0.0 && self.practical_scale.is_finite()) {
            return bad("practical_scale must be positive");
        }
        match self.exponent {
            Exponent::Bounded { b_f } if !(b_f > 0.0 && b_f.is_finite()) => bad("B_F must be positive"),
            Exponent::Unbounded { alpha, b }
                if !(alpha > 0.0 && alpha.is_finite() && b > 0.0 && b.is_finite()) =>
            {
                bad("alpha and b must be positive")
            }
            _ => Ok(()),
        }
    }

    /// Entropy constant `c = 2(C+1)`.
    pub fn c(&self) -> f64 {
        2.0 * (self.big_c + 1.0)
    }

    /// Noise term `(√(C²-1) - 2√2)² / (8σ²)`; infinite when `σ = 0`.
    pub fn noise_term(big_c: f64, sigma: f64) -> f64 {
        let g = (big_c * big_c - 1.0).sqrt() - 2.0 * 2f64.sqrt();
        g * g / (8.0 * sigma * sigma)
    }

    /// `L(C', σ, B_F)` or `L̃(C', σ)` at the constant `big_c`, for a class of
    /// diameter `d`.
    pub fn l_at(&self, big_c: f64, d: f64) -> f64 {
        let noise = Self::noise_term(big_c, self.sigma);
        match self.exponent {
            Exponent::Bounded { b_f } => {
                let b2 = b_f * b_f;
                noise
                    .min(3.0 / (64.0 * b2))
                    .min(3.0 / (16.0 * b2 * (3.0 * big_c * big_c + 1.0)))
            }
            Exponent::Unbounded { alpha, b } => {
                let t = 2.0 * alpha * alpha + 1.0;
                noise.min(b / (big_c * big_c * t * t * d * d))
            }
        }
    }

    /// `L` at `C` itself.
    pub fn l(&self, d: f64) -> f64 {
        self.l_at(self.big_c, d)
    }

    /// The schedule's `L(c/2 - 1, ·)` times `practical_scale`.
    pub fn l_schedule(&self, d: f64) -> f64 {
        self.l_at(self.c() / 2.0 - 1.0, d) * self.practical_scale
    }
}
