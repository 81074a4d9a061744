//! Mean-zero sub-Gaussian noise models.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::seed::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `N(0, σ²)`.
    Gaussian,
    /// `±σ` with equal probability.
    ScaledRademacher,
    /// Uniform on `[-σ, σ]`.
    UniformBounded,
}

/// Noise law with variance proxy `sigma²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, sigma: f64) -> Self {
        Self { kind, sigma }
    }

    pub fn draw(&self, n: usize, rng: &mut Rng) -> Vec<f64> {
        let s = self.sigma;
        (0..n)
            .map(|_| match self.kind {
                NoiseKind::Gaussian => s * rng.sample::<f64, _>(StandardNormal),
                NoiseKind::ScaledRademacher => {
                    if rng.random::<bool>() {
                        s
                    } else {
                        -s
                    }
                }
                NoiseKind::UniformBounded => s * (2.0 * rng.random::<f64>() - 1.0),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn kinds_are_centered_with_expected_variance() {
        let n = 200_000;
        for (kind, var) in [
            (NoiseKind::Gaussian, 4.0),
            (NoiseKind::ScaledRademacher, 4.0),
            (NoiseKind::UniformBounded, 4.0 / 3.0),
        ] {
            let xs = NoiseModel::new(kind, 2.0).draw(n, &mut seed::rng(5));
            let mean = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.02, "{kind:?} mean {mean}");
            assert!((v / var - 1.0).abs() < 0.02, "{kind:?} var {v}");
        }
    }

    #[test]
    fn zero_sigma_is_silent() {
        let xs = NoiseModel::new(NoiseKind::Gaussian, 0.0).draw(10, &mut seed::rng(1));
        assert!(xs.iter().all(|&x| x == 0.0));
    }
}
