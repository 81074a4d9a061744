//! TOML experiment configuration.

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::classes::{ClassSpec, DesignDistribution, DesignKind, FunctionClass};
use crate::estimator::{ConditionKind, Exponent, NoiseModel, RateConstants};
use crate::metric::MetricPoint;
use crate::rates::RateExample;

/// Largest default Hölder grid.
const HOLDER_M_CAP: usize = 512;

/// Class description; grid resolutions may be left to the per-`n` default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassConfig {
    LinearL1 {
        p: usize,
        radius: f64,
    },
    /// Axes `a`, or the default decay `a_i = (p-i+1)^{-2}` when only `p` is set.
    LinearEllipsoid {
        #[serde(default)]
        a: Option<Vec<f64>>,
        #[serde(default)]
        p: Option<usize>,
    },
    LinearBox {
        p: usize,
        lo: f64,
        hi: f64,
    },
    MonotoneGrid {
        p: usize,
        #[serde(default)]
        m: Option<usize>,
    },
    HolderGrid {
        alpha: f64,
        gamma: f64,
        #[serde(default)]
        m: Option<usize>,
    },
}

impl ClassConfig {
    /// Concrete class spec at sample size `n`.
    pub fn spec(&self, n: usize) -> Result<ClassSpec, HarnessError> {
        Ok(match self {
            ClassConfig::LinearL1 { p, radius } => ClassSpec::LinearL1 {
                p: *p,
                radius: *radius,
            },
            ClassConfig::LinearEllipsoid { a, p } => match (a, p) {
                (Some(a), _) => ClassSpec::LinearEllipsoid { a: a.clone() },
                (None, Some(p)) => ClassSpec::default_ellipsoid(*p),
                (None, None) => {
                    return Err(HarnessError::Config("ellipsoid needs `a` or `p`".into()))
                }
            },
            ClassConfig::LinearBox { p, lo, hi } => ClassSpec::LinearBox {
                p: *p,
                lo: *lo,
                hi: *hi,
            },
            ClassConfig::MonotoneGrid { p, m } => ClassSpec::MonotoneGrid {
                p: *p,
                m: m.unwrap_or_else(|| ClassSpec::default_grid_m(*p, n)),
            },
            ClassConfig::HolderGrid { alpha, gamma, m } => ClassSpec::HolderGrid {
                alpha: *alpha,
                gamma: *gamma,
                m: m.unwrap_or_else(|| ClassSpec::default_grid_m(1, n).min(HOLDER_M_CAP)),
            },
        })
    }

    pub fn is_linear(&self) -> bool {
        matches!(
            self,
            ClassConfig::LinearL1 { .. }
                | ClassConfig::LinearEllipsoid { .. }
                | ClassConfig::LinearBox { .. }
        )
    }
}

/// The regression function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthConfig {
    /// Explicit coordinates.
    Fixed { coords: Vec<f64> },
    /// A class sample with its own seed.
    Sampled { seed: u64 },
    /// `s` evenly spaced coordinates with alternating signs and equal
    /// magnitude, by default on the boundary of the ℓ1 ball.
    Sparse {
        s: usize,
        #[serde(default)]
        magnitude: Option<f64>,
    },
    /// `identity` (mean of the coordinates of each grid node), `zero`, `step`
    /// (indicator of `x_1 ≥ 1/2`), or `spread` (`θ_i = ±√(a_i/p)` on an
    /// ellipsoid). Named grid functions are projected onto the class.
    Named { name: String },
}

impl TruthConfig {
    /// Resolves the truth on a concrete class.
    pub fn resolve(&self, class: &FunctionClass) -> Result<MetricPoint, HarnessError> {
        let dim = class.dim();
        let coords = match self {
            TruthConfig::Fixed { coords } => coords.clone(),
            TruthConfig::Sampled { seed } => return Ok(class.sample_member(*seed)),
            TruthConfig::Sparse { s, magnitude } => {
                if *s == 0 || *s > dim {
                    return Err(HarnessError::Config(format!("sparse truth needs 1 <= s <= {dim}")));
                }
                let mag = match (magnitude, class.spec()) {
                    (Some(m), _) => *m,
                    (None, ClassSpec::LinearL1 { radius, .. }) => radius / *s as f64,
                    (None, _) => 0.5 / (*s as f64).sqrt(),
                };
                let step = dim / s;
                let mut v = vec![0.0; dim];
                for j in 0..*s {
                    v[j * step] = if j % 2 == 0 { mag } else { -mag };
                }
                v
            }
            TruthConfig::Named { name } => {
                let raw = named_truth(class, name)?;
                return Ok(class.project(&raw)?);
            }
        };
        let point = class.point(coords)?;
        if !class.contains(&point.coords) {
            return Err(HarnessError::TruthNotMember);
        }
        Ok(point)
    }

    pub fn sparsity(&self) -> Option<usize> {
        match self {
            TruthConfig::Sparse { s, .. } => Some(*s),
            _ => None,
        }
    }
}

fn named_truth(class: &FunctionClass, name: &str) -> Result<Vec<f64>, HarnessError> {
    let dim = class.dim();
    let locs = class.grid_locations();
    match (name, locs) {
        ("zero", _) => Ok(vec![0.0; dim]),
        ("identity", Some(locs)) => Ok(locs
            .iter()
            .map(|x| x.iter().sum::<f64>() / x.len() as f64)
            .collect()),
        ("step", Some(locs)) => Ok(locs
            .iter()
            .map(|x| if x[0] >= 0.5 { 1.0 } else { 0.0 })
            .collect()),
        ("spread", None) => match class.spec() {
            ClassSpec::LinearEllipsoid { a } => {
                let p = a.len() as f64;
                Ok(a.iter()
                    .enumerate()
                    .map(|(i, ai)| {
                        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                        s * (ai / p).sqrt()
                    })
                    .collect())
            }
            _ => Err(HarnessError::Config("`spread` needs an ellipsoid".into())),
        },
        _ => Err(HarnessError::Config(format!(
            "unknown truth `{name}` for this class"
        ))),
    }
}

/// How risk is measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RiskEval {
    /// Exact `L2(P_X)` distance: parameter distance for linear classes, grid
    /// rms for grid classes.
    Analytic,
    /// Mean squared difference on `m` fresh design draws shared by all
    /// replicates at one `n`; `m` defaults to `10 · max(n_grid)`.
    FreshSample {
        #[serde(default)]
        m: Option<usize>,
    },
}

/// Source of the entropy profile behind the stage schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    /// Greedy packing estimate of the class's local entropy.
    Greedy {
        #[serde(default = "default_profile_pool")]
        pool_size: usize,
        #[serde(default = "default_center_samples")]
        center_samples: usize,
        #[serde(default = "default_profile_points")]
        points: usize,
    },
    /// `log M(ε) = coef · (ε/d)^{-exponent}`.
    PowerLaw { coef: f64, exponent: f64 },
    /// Skip the schedule and run a fixed number of stages.
    Fixed { stages: usize },
}

fn default_profile_pool() -> usize {
    128
}
fn default_center_samples() -> usize {
    4
}
fn default_profile_points() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub profile: ProfileConfig,
    #[serde(default = "default_condition")]
    pub condition: ConditionKind,
}

fn default_condition() -> ConditionKind {
    ConditionKind::Bounded
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(default = "default_big_c")]
    pub big_c: f64,
    /// Defaults to the class sup bound, or the moment form with `alpha = 1`.
    #[serde(default)]
    pub exponent: Option<Exponent>,
    #[serde(default = "default_scale")]
    pub practical_scale: f64,
}

fn default_big_c() -> f64 {
    4.0
}
fn default_scale() -> f64 {
    1.0
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            big_c: default_big_c(),
            exponent: None,
            practical_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    /// Oracle validation only.
    #[serde(default)]
    pub inject_truth: bool,
}

fn default_pool() -> usize {
    256
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            pool_size: default_pool(),
            inject_truth: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub class: ClassConfig,
    pub design: DesignDistribution,
    pub noise: NoiseModel,
    pub truth: TruthConfig,
    #[serde(default)]
    pub constants: ConstantsConfig,
    /// Defaults to analytic for linear classes and a fresh sample for grids.
    #[serde(default)]
    pub risk_eval: Option<RiskEval>,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    pub schedule: ScheduleConfig,
}

fn default_n_grid() -> Vec<usize> {
    vec![64, 128, 256, 512, 1024, 2048, 4096]
}
fn default_replicates() -> usize {
    50
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return bad("n_grid must be nonempty and positive".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_grid must be strictly increasing".into());
        }
        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            return bad("noise sigma must be finite and nonnegative".into());
        }
        if let Some(s) = self.truth.sparsity() {
            if let ClassConfig::LinearL1 { p, .. } | ClassConfig::LinearBox { p, .. } = self.class {
                if s > p {
                    return bad(format!("sparse truth has s = {s} > p = {p}"));
                }
            }
        }
        if !self.class.is_linear() && self.design.kind != DesignKind::UniformCube {
            return bad("grid classes need the uniform_cube design".into());
        }
        if let ProfileConfig::Fixed { stages: 0 } = self.schedule.profile {
            return bad("fixed schedule needs at least one stage".into());
        }
        self.rate_constants(&FunctionClass::new(self.class.spec(self.n_grid[0])?)?)?;
        Ok(())
    }

    pub fn risk_eval(&self) -> RiskEval {
        match &self.risk_eval {
            Some(r) => r.clone(),
            None if self.class.is_linear() => RiskEval::Analytic,
            None => RiskEval::FreshSample { m: None },
        }
    }

    /// Constants for a concrete class; `sigma` comes from the noise model.
    pub fn rate_constants(&self, class: &FunctionClass) -> Result<RateConstants, HarnessError> {
        let exponent = self.constants.exponent.unwrap_or_else(|| match class.sup_bound() {
            Some(b_f) => Exponent::Bounded { b_f },
            None => Exponent::Unbounded {
                alpha: 1.0,
                b: crate::estimator::constants::default_b(),
            },
        });
        let mut k = RateConstants::new(self.constants.big_c, self.noise.sigma, exponent)?;
        k.practical_scale = self.constants.practical_scale;
        k.validate()?;
        Ok(k)
    }

    /// Worked example whose closed-form rate overlays the results.
    pub fn rate_example(&self, class: &FunctionClass) -> Option<RateExample> {
        match class.spec() {
            ClassSpec::MonotoneGrid { p, .. } => Some(RateExample::Monotone { p: *p }),
            ClassSpec::HolderGrid { alpha, gamma, .. } => Some(RateExample::Holder {
                alpha: *alpha,
                gamma: *gamma,
            }),
            ClassSpec::LinearEllipsoid { a } => Some(RateExample::Ellipsoid { a: a.clone() }),
            ClassSpec::LinearL1 { p, .. } => self
                .truth
                .sparsity()
                .map(|s| RateExample::SparseL1 { s, p: *p }),
            _ => None,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        crate::seed::sha256_hex(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }
}
