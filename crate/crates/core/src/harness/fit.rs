//! Least-squares slope of `log risk` against `log n`.

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub points: usize,
}

/// Ordinary least squares on `(ln n, ln risk)`; needs at least three points.
pub fn fit_rate_slope(points: &[(f64, f64)]) -> Result<SlopeFit, HarnessError> {
    if points.len() < 3 {
        return Err(HarnessError::InsufficientData(format!(
            "slope fit needs 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(n, r)| !(n > 0.0 && r > 0.0)) {
        return Err(HarnessError::DegenerateFit("n and risk must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::DegenerateFit("all n are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let s2 = rss / (k - 2.0);
    Ok(SlopeFit {
        slope,
        intercept,
        slope_stderr: (s2 / sxx).sqrt(),
        intercept_stderr: (s2 * (1.0 / k + mx * mx / sxx)).sqrt(),
        points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn exact_power_laws() {
        for (k, e) in [(3.0, -1.0), (0.2, -2.0 / 3.0)] {
            let pts: Vec<(f64, f64)> = [64.0, 256.0, 1024.0, 4096.0]
                .iter()
                .map(|&n: &f64| (n, k * n.powf(e)))
                .collect();
            let f = fit_rate_slope(&pts).unwrap();
            assert!((f.slope - e).abs() < 1e-12);
            assert!((f.intercept - f64::ln(k)).abs() < 1e-10);
        }
    }

    #[test]
    fn noisy_inverse_n() {
        let mut rng = crate::seed::rng(3);
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let n = 100.0 * 1.3f64.powi(i);
                (n, 2.0 / n * (1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0)))
            })
            .collect();
        assert!((fit_rate_slope(&pts).unwrap().slope + 1.0).abs() < 0.1);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_rate_slope(&[(10.0, 1.0); 3]),
            Err(HarnessError::DegenerateFit(_))
        ));
        assert!(matches!(
            fit_rate_slope(&[(10.0, 1.0), (20.0, 0.5)]),
            Err(HarnessError::InsufficientData(_))
        ));
    }
}
