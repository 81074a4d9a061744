//! `ε* = sup{ε : nε² ≤ log M_loc(ε, c)}` and the Fano lower-bound check
//! `log M_loc(ε, c) > 4 (nε²/(2σ²) ∨ log 2)`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::RatesError;
use crate::metric::EntropyProfile;

/// Which side of `nε*² > 8 log 2` the instance falls on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `nε*² > 8 log 2`: the lower bound argument applies at `ε*`.
    Separated,
    /// Small `ε*`; the rate is governed by the diameter.
    Small,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsStarOptions {
    /// Noise level for the lower-bound check; `None` skips it.
    pub sigma: Option<f64>,
    /// Class diameter, used for the tolerance and the rate cap.
    pub diameter: Option<f64>,
    /// Largest relative monotone correction accepted.
    pub slack: f64,
}

impl Default for EpsStarOptions {
    fn default() -> Self {
        Self {
            sigma: None,
            diameter: None,
            slack: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub eps_star: f64,
    /// Final bracket `(lo, hi)`: `nlo² ≤ log M(lo)` and `nhi² > log M(hi)`.
    pub bracket: (f64, f64),
    /// Largest ε passing the lower-bound condition.
    pub lower_eps: Option<f64>,
    /// `lower_eps² / (8c²)`.
    pub lower_bound_risk: Option<f64>,
    /// `ε*² ∧ d²` (just `ε*²` without a diameter).
    pub upper_rate: f64,
    pub regime: Regime,
    pub n: usize,
    pub sigma: Option<f64>,
    pub c: f64,
    pub diameter: Option<f64>,
    /// Largest relative correction made when monotonizing.
    pub monotone_correction: f64,
    pub profile_digest: String,
}

const MAX_STEPS: usize = 200;

/// Bisection for the right end of `{ε > 0 : pred(ε)}`, an interval starting
/// at zero. Requires `pred` true near 0 and false at `hi`.
fn bisect(mut hi: f64, tol: f64, pred: impl Fn(f64) -> bool) -> (f64, f64) {
    let mut lo = 0.0;
    for _ in 0..MAX_STEPS {
        if hi - lo <= tol && hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Solves for `ε*` on a (monotonized) profile and fills the certificate.
pub fn solve_eps_star(
    profile: &EntropyProfile,
    n: usize,
    options: &EpsStarOptions,
) -> Result<RateCertificate, RatesError> {
    if n == 0 {
        return Err(RatesError::BadParams("n must be positive".into()));
    }
    if let Some(s) = options.sigma {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(RatesError::BadParams(format!("sigma {s}")));
        }
    }
    let (mono, correction) = profile.monotonized();
    if correction > options.slack {
        return Err(RatesError::NonMonotoneProfile(100.0 * correction));
    }
    if mono.is_identically_zero() {
        return Err(RatesError::EmptyCrossing);
    }
    let nf = n as f64;
    let log_m = |e: f64| mono.log_m_at(e);
    let max_log_m = mono.samples[0].log_m;
    let eps_max = mono.samples[mono.samples.len() - 1].eps;
    let hi0 = 2.0 * eps_max.max((max_log_m / nf).sqrt());
    let scale = options.diameter.unwrap_or(eps_max);
    let tol = 1e-9 * scale;
    let (lo, hi) = bisect(hi0, tol, |e| nf * e * e <= log_m(e));

    let lower_eps = options.sigma.and_then(|sigma| {
        let cond = |e: f64| log_m(e) > 4.0 * (nf * e * e / (2.0 * sigma * sigma)).max(LN_2);
        // The condition holds near zero iff it holds at the smallest grid ε
        // in the limit, where log M is extended as a constant.
        if sigma == 0.0 || max_log_m <= 4.0 * LN_2 {
            return None;
        }
        let (l, _) = bisect(hi0, tol, cond);
        (l > 0.0).then_some(l)
    });
    let c = profile.c;
    let upper_rate = match options.diameter {
        Some(d) => (lo * lo).min(d * d),
        None => lo * lo,
    };
    Ok(RateCertificate {
        eps_star: lo,
        bracket: (lo, hi),
        lower_eps,
        lower_bound_risk: lower_eps.map(|e| e * e / (8.0 * c * c)),
        upper_rate,
        regime: if nf * lo * lo > 8.0 * LN_2 {
            Regime::Separated
        } else {
            Regime::Small
        },
        n,
        sigma: options.sigma,
        c,
        diameter: options.diameter,
        monotone_correction: correction,
        profile_digest: profile.digest(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::EntropyKind;

    fn grid() -> Vec<f64> {
        (0..=400).map(|i| 1e-8 * 1.1f64.powi(i)).collect()
    }

    fn profile(f: impl Fn(f64) -> f64) -> EntropyProfile {
        EntropyProfile::from_fn(&grid(), 10.0, EntropyKind::Global, f).unwrap()
    }

    #[test]
    fn constant_profile() {
        for (k, n) in [(3.0, 100), (0.5, 10_000), (10.0, 7)] {
            let cert = solve_eps_star(&profile(|_| k), n, &Default::default()).unwrap();
            assert!((cert.eps_star - (k / n as f64).sqrt()).abs() <= 1e-9);
            let (lo, hi) = cert.bracket;
            assert!(n as f64 * lo * lo <= k && n as f64 * hi * hi > k);
        }
    }

    #[test]
    fn power_profiles() {
        let alpha: f64 = 0.5;
        let p = profile(|e| e.powf(-1.0 / alpha));
        let n: f64 = 1e6;
        let cert = solve_eps_star(&p, n as usize, &Default::default()).unwrap();
        let expect = n.powf(-alpha / (2.0 * alpha + 1.0));
        assert!((cert.eps_star / expect - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_profile_is_empty_crossing() {
        assert_eq!(
            solve_eps_star(&profile(|_| 0.0), 10, &Default::default()).unwrap_err(),
            RatesError::EmptyCrossing
        );
    }

    #[test]
    fn non_monotone_profile_rejected() {
        let mut p = profile(|_| 1.0);
        let last = p.samples.len() - 1;
        p.samples[last].log_m = 2.0;
        assert!(matches!(
            solve_eps_star(&p, 10, &Default::default()),
            Err(RatesError::NonMonotoneProfile(_))
        ));
    }

    #[test]
    fn lower_certificate_below_upper() {
        let p = profile(|e| e.powf(-2.0));
        let opts = EpsStarOptions {
            sigma: Some(1.0),
            diameter: Some(1.0),
            ..Default::default()
        };
        let cert = solve_eps_star(&p, 1000, &opts).unwrap();
        let le = cert.lower_eps.unwrap();
        assert!(le <= cert.eps_star);
        let m = p.log_m_at(le * 0.999);
        assert!(m > 4.0 * (1000.0 * le * le / 2.0).max(LN_2));
        assert!(cert.lower_bound_risk.unwrap() <= cert.upper_rate);
        assert_eq!(cert.regime, Regime::Separated);
    }
}
