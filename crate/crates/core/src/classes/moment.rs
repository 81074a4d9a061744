//! Monte Carlo check of the sub-Gaussian moment condition
//! `||f - g||_{L_p} ≤ α √p ||f - g||_{L_2}` for linear classes.

use serde::{Deserialize, Serialize};

use super::{ClassError, DesignDistribution, FunctionClass};
use crate::seed;

/// Per-moment summary over the sampled pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub p: u32,
    /// Mean over pairs of `||f-g||_{L_p} / ||f-g||_{L_2}`.
    pub mean_ratio: f64,
    /// Largest ratio over pairs.
    pub max_ratio: f64,
    /// `max_ratio / √p`.
    pub alpha_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
    /// Largest `alpha_hat` over all pairs and moments.
    pub worst_alpha_hat: f64,
    pub pairs: usize,
    pub draws_per_pair: usize,
    pub seed: u64,
}

fn lp_norm(values: &[f64], p: u32) -> f64 {
    let s: f64 = values.iter().map(|v| v.abs().powi(p as i32)).sum();
    (s / values.len() as f64).powf(1.0 / p as f64)
}

/// Ratios `||f-g||_{L_p}/||f-g||_{L_2}` for one pair of parameter vectors.
pub fn pair_moment_ratios(
    f: &[f64],
    g: &[f64],
    design: &DesignDistribution,
    p_values: &[u32],
    draws: usize,
    seed_value: u64,
) -> Result<Vec<f64>, ClassError> {
    let dim = f.len();
    let diff: Vec<f64> = f.iter().zip(g).map(|(a, b)| a - b).collect();
    let mut rng = seed::rng(seed_value);
    let rows = design.draw_rows(dim, draws, &mut rng);
    let vals: Vec<f64> = rows
        .chunks_exact(dim)
        .map(|r| r.iter().zip(&diff).map(|(x, d)| x * d).sum())
        .collect();
    let l2 = lp_norm(&vals, 2);
    if l2 == 0.0 {
        return Err(ClassError::Degenerate);
    }
    Ok(p_values.iter().map(|&p| lp_norm(&vals, p) / l2).collect())
}

/// Estimates `||f-g||_{L_p}/||f-g||_{L_2}` for `pairs` sampled member pairs
/// with `draws` design draws each.
pub fn moment_ratio_check(
    class: &FunctionClass,
    design: &DesignDistribution,
    p_values: &[u32],
    pairs: usize,
    draws: usize,
    seed_value: u64,
) -> Result<MomentReport, ClassError> {
    if !class.is_linear() {
        return Err(ClassError::NotLinear);
    }
    if p_values.iter().any(|&p| p < 2) || pairs == 0 || draws == 0 {
        return Err(ClassError::InvalidSpec(
            "moments must be >= 2 with at least one pair and draw".into(),
        ));
    }
    let mut ratios = vec![Vec::with_capacity(pairs); p_values.len()];
    for k in 0..pairs {
        let f = class.sample_member(seed::derive(seed_value, &[k as u64, 0]));
        let g = class.sample_member(seed::derive(seed_value, &[k as u64, 1]));
        if class.dist(&f, &g)? == 0.0 {
            return Err(ClassError::Degenerate);
        }
        let pair = pair_moment_ratios(
            &f.coords,
            &g.coords,
            design,
            p_values,
            draws,
            seed::derive(seed_value, &[k as u64, 2]),
        )?;
        for (slot, r) in ratios.iter_mut().zip(pair) {
            slot.push(r);
        }
    }
    let rows: Vec<MomentRow> = p_values
        .iter()
        .zip(&ratios)
        .map(|(&p, rs)| {
            let max_ratio = rs.iter().copied().fold(f64::MIN, f64::max);
            MomentRow {
                p,
                mean_ratio: rs.iter().sum::<f64>() / rs.len() as f64,
                max_ratio,
                alpha_hat: max_ratio / (p as f64).sqrt(),
            }
        })
        .collect();
    let worst_alpha_hat = rows.iter().map(|r| r.alpha_hat).fold(f64::MIN, f64::max);
    Ok(MomentReport {
        rows,
        worst_alpha_hat,
        pairs,
        draws_per_pair: draws,
        seed: seed_value,
    })
}
