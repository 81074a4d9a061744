//! Design distributions and sampled design matrices.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::seed::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// `N(0, I_p)` rows.
    GaussianIsotropic,
    /// Independent ±1 entries.
    RademacherIsotropic,
    /// Uniform entries on `[-√3, √3]` for linear classes (isotropic); uniform
    /// grid nodes for grid classes.
    UniformCube,
}

/// `P_X` with its sub-Gaussian variance proxy `tau`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignDistribution {
    pub kind: DesignKind,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

fn default_tau() -> f64 {
    1.0
}

impl DesignDistribution {
    pub fn new(kind: DesignKind) -> Self {
        Self { kind, tau: 1.0 }
    }

    /// Draws `n` rows of length `p`, row-major.
    pub fn draw_rows(&self, p: usize, n: usize, rng: &mut Rng) -> Vec<f64> {
        let s3 = 3f64.sqrt();
        (0..n * p)
            .map(|_| match self.kind {
                DesignKind::GaussianIsotropic => rng.sample(StandardNormal),
                DesignKind::RademacherIsotropic => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                DesignKind::UniformCube => s3 * (2.0 * rng.random::<f64>() - 1.0),
            })
            .collect()
    }
}

/// Design points: dense rows for linear classes, node indices for grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Design {
    Rows { p: usize, data: Vec<f64> },
    Nodes(Vec<usize>),
}

impl Design {
    /// Number of design points.
    pub fn len(&self) -> usize {
        match self {
            Design::Rows { p, data } => data.len() / (*p).max(1),
            Design::Nodes(idx) => idx.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Design made of a single repeated node, a point-mass `P_X`.
    pub fn point_mass(node: usize, n: usize) -> Self {
        Design::Nodes(vec![node; n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn isotropic_kinds_have_unit_second_moment() {
        for kind in [
            DesignKind::GaussianIsotropic,
            DesignKind::RademacherIsotropic,
            DesignKind::UniformCube,
        ] {
            let mut rng = seed::rng(11);
            let d = DesignDistribution::new(kind);
            let rows = d.draw_rows(2, 100_000, &mut rng);
            let n = 100_000.0;
            let mean0: f64 = rows.iter().step_by(2).sum::<f64>() / n;
            let m00: f64 = rows.iter().step_by(2).map(|x| x * x).sum::<f64>() / n;
            let m01: f64 = rows.chunks(2).map(|r| r[0] * r[1]).sum::<f64>() / n;
            assert!(mean0.abs() < 0.02, "{kind:?} mean {mean0}");
            assert!((m00 - 1.0).abs() < 0.03, "{kind:?} second moment {m00}");
            assert!(m01.abs() < 0.02, "{kind:?} cross moment {m01}");
        }
    }
}
