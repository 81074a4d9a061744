//! Closed-form minimax rates for the worked examples and the ellipsoid
//! Kolmogorov-width index.

use serde::{Deserialize, Serialize};

use super::RatesError;

/// Result of the ellipsoid index search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KolmogorovIndex {
    /// `a_{p-k} ≤ (k+1)/n` and `a_{p-k+1} > k/n`; `width = √a_{p-k}`.
    Index { k: usize, width: f64 },
    /// `a_p ≤ 1/n`: the rate is `a_p`.
    SmallEllipsoid { a_p: f64 },
}

fn check_axes(a: &[f64]) -> Result<(), RatesError> {
    if a.is_empty() || a.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(RatesError::BadParams("axes must be positive".into()));
    }
    if a.windows(2).any(|w| w[0] > w[1]) {
        return Err(RatesError::BadParams("axes must be sorted ascending".into()));
    }
    Ok(())
}

/// `a_i` with the convention `a_0 = 0` (1-based).
fn axis(a: &[f64], i: usize) -> f64 {
    if i == 0 {
        0.0
    } else {
        a[i - 1]
    }
}

/// Whether `k` satisfies both defining inequalities.
pub fn is_valid_index(a: &[f64], n: usize, k: usize) -> bool {
    let p = a.len();
    let nf = n as f64;
    (1..=p).contains(&k)
        && axis(a, p - k) <= (k + 1) as f64 / nf
        && axis(a, p - k + 1) > k as f64 / nf
}

/// Smallest valid `k`, found by a linear scan. A valid index exists whenever
/// `a_p > 1/n`.
pub fn kolmogorov_index(a: &[f64], n: usize) -> Result<KolmogorovIndex, RatesError> {
    check_axes(a)?;
    if n == 0 {
        return Err(RatesError::BadParams("n must be positive".into()));
    }
    let p = a.len();
    if a[p - 1] <= 1.0 / n as f64 {
        return Ok(KolmogorovIndex::SmallEllipsoid { a_p: a[p - 1] });
    }
    (1..=p)
        .find(|&k| is_valid_index(a, n, k))
        .map(|k| KolmogorovIndex::Index {
            k,
            width: axis(a, p - k).sqrt(),
        })
        .ok_or(RatesError::NoValidIndex)
}

/// All valid indices, for cross-checking [`kolmogorov_index`].
pub fn kolmogorov_index_scan(a: &[f64], n: usize) -> Vec<usize> {
    (1..=a.len()).filter(|&k| is_valid_index(a, n, k)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateExample {
    SparseL1 { s: usize, p: usize },
    Ellipsoid { a: Vec<f64> },
    Holder { alpha: f64, gamma: f64 },
    Monotone { p: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryRate {
    /// Squared-error rate (lower end of the bracket when there is one).
    pub value: f64,
    /// `[lower, upper]` when the rate is known only up to a log factor.
    pub bracket: Option<(f64, f64)>,
    /// Set when `log(p/s)` vanishes and `s/n` is returned instead.
    pub degenerate_log: bool,
}

impl TheoryRate {
    fn exact(value: f64) -> Self {
        Self {
            value,
            bracket: None,
            degenerate_log: false,
        }
    }
}

/// Closed-form squared-error rate at sample size `n`, without constants.
pub fn theoretical_rate(example: &RateExample, n: usize) -> Result<TheoryRate, RatesError> {
    if n == 0 {
        return Err(RatesError::BadParams("n must be positive".into()));
    }
    let nf = n as f64;
    match example {
        RateExample::SparseL1 { s, p } => {
            if *s == 0 || s > p {
                return Err(RatesError::BadParams("need 1 <= s <= p".into()));
            }
            if s == p {
                return Ok(TheoryRate {
                    value: *s as f64 / nf,
                    bracket: None,
                    degenerate_log: true,
                });
            }
            let (s, p) = (*s as f64, *p as f64);
            Ok(TheoryRate::exact(s * (p / s).ln() / nf))
        }
        RateExample::Ellipsoid { a } => match kolmogorov_index(a, n)? {
            KolmogorovIndex::Index { k, .. } => {
                Ok(TheoryRate::exact((k as f64 / nf).min(a[a.len() - 1])))
            }
            KolmogorovIndex::SmallEllipsoid { a_p } => Ok(TheoryRate::exact(a_p)),
        },
        RateExample::Holder { alpha, gamma } => {
            if !(*alpha > 0.0 && *alpha <= 1.0 && *gamma > 0.0) {
                return Err(RatesError::BadParams("need alpha in (0,1], gamma > 0".into()));
            }
            let r = nf.powf(-2.0 * alpha / (2.0 * alpha + 1.0));
            Ok(TheoryRate::exact(r.min(gamma * gamma)))
        }
        RateExample::Monotone { p } => match p {
            0 => Err(RatesError::BadParams("p must be positive".into())),
            1 => Ok(TheoryRate::exact(nf.powf(-2.0 / 3.0).min(1.0))),
            2 => {
                let lo = nf.powf(-0.5).min(1.0);
                let hi = (nf.powf(-0.5) * nf.ln()).min(1.0);
                Ok(TheoryRate {
                    value: lo,
                    bracket: Some((lo, hi)),
                    degenerate_log: false,
                })
            }
            p => Ok(TheoryRate::exact(nf.powf(-1.0 / *p as f64).min(1.0))),
        },
    }
}
