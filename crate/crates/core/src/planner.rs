//! Iteration-complexity planning from kernel eigenvalue decay.
//!
//! For a target accuracy `delta` the critical dimension `r*` is the smallest
//! `r` with `lambda_r <= delta`; the per-edge operation count scales as
//! `r* (sum_{j <= r*} lambda_j^2) (1/delta) log(1/delta)`. The planner
//! reports that bracket with constant 1: an order estimate, not a count.

use serde::{Deserialize, Serialize};

use crate::model::EdgePotential;
use crate::{Error, Result};

/// Upper envelope of the kernel eigenvalues `lambda_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DecayModel {
    /// `lambda_j = c / j^alpha`, `alpha > 1`.
    Polynomial { c: f64, alpha: f64 },
    /// `lambda_j = c exp(-rate j^alpha)`.
    Exponential { c: f64, rate: f64, alpha: f64 },
    /// Listed eigenvalues, non-increasing and non-negative.
    Explicit { eigenvalues: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plan {
    pub delta: f64,
    pub r_star: usize,
    pub sum_lambda_sq: f64,
    /// `r* sum lambda_j^2 (1/delta) log(1/delta)`, order of magnitude only.
    pub ops_estimate: f64,
}

impl DecayModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            DecayModel::Polynomial { c, alpha } => *c > 0.0 && *alpha > 1.0 && c.is_finite() && alpha.is_finite(),
            DecayModel::Exponential { c, rate, alpha } => {
                *c > 0.0 && *rate > 0.0 && *alpha > 0.0 && c.is_finite() && rate.is_finite() && alpha.is_finite()
            }
            DecayModel::Explicit { eigenvalues } => {
                !eigenvalues.is_empty()
                    && eigenvalues.iter().all(|v| v.is_finite() && *v >= 0.0)
                    && eigenvalues.windows(2).all(|w| w[1] <= w[0])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid decay model {self:?}")))
        }
    }

    /// `lambda_j` for 1-based `j` (0 past the end of an explicit list).
    pub fn lambda(&self, j: usize) -> f64 {
        let jf = j as f64;
        match self {
            DecayModel::Polynomial { c, alpha } => c / jf.powf(*alpha),
            DecayModel::Exponential { c, rate, alpha } => c * (-rate * jf.powf(*alpha)).exp(),
            DecayModel::Explicit { eigenvalues } => eigenvalues.get(j - 1).copied().unwrap_or(0.0),
        }
    }
}

/// Smallest `r >= 1` with `lambda_r <= delta`.
pub fn critical_dimension(decay: &DecayModel, delta: f64) -> Result<usize> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Config(format!("delta must be positive, got {delta}")));
    }
    decay.validate()?;
    let guess = match decay {
        DecayModel::Polynomial { c, alpha } => (c / delta).powf(1.0 / alpha).ceil(),
        DecayModel::Exponential { c, rate, alpha } => {
            if *c <= delta {
                1.0
            } else {
                ((c / delta).ln() / rate).powf(1.0 / alpha).ceil()
            }
        }
        DecayModel::Explicit { eigenvalues } => {
            return eigenvalues
                .iter()
                .position(|l| *l <= delta)
                .map(|p| p + 1)
                .ok_or(Error::InsufficientSpectrum {
                    delta,
                    len: eigenvalues.len(),
                });
        }
    };
    if !(guess < 1e15) {
        return Err(Error::TooLarge(format!("critical dimension for delta = {delta} overflows")));
    }
    // the closed form can be off by one through rounding
    let mut r = (guess as usize).max(1);
    while r > 1 && decay.lambda(r - 1) <= delta {
        r -= 1;
    }
    while decay.lambda(r) > delta {
        r += 1;
    }
    Ok(r)
}

pub fn ops_estimate(decay: &DecayModel, delta: f64) -> Result<Plan> {
    let r_star = critical_dimension(decay, delta)?;
    let sum_lambda_sq: f64 = (1..=r_star).map(|j| decay.lambda(j).powi(2)).sum();
    Ok(Plan {
        delta,
        r_star,
        sum_lambda_sq,
        ops_estimate: r_star as f64 * sum_lambda_sq * (1.0 / delta) * (1.0 / delta).ln(),
    })
}

/// Explicit spectrum of a finite kernel expansion.
pub fn spectrum_of_model(potential: &EdgePotential) -> Result<DecayModel> {
    match potential {
        EdgePotential::FiniteKernelExpansion { eigenvalues } => {
            let m = DecayModel::Explicit {
                eigenvalues: eigenvalues.clone(),
            };
            m.validate()?;
            Ok(m)
        }
        other => Err(Error::Config(format!(
            "no explicit spectrum for edge potential {}",
            match other {
                EdgePotential::Uniform => "uniform",
                EdgePotential::GaussianMixtureDiff { .. } => "gaussian_mixture_diff",
                EdgePotential::GaussianKernel { .. } => "gaussian_kernel",
                _ => "grid_table",
            }
        ))),
    }
}

/// `count` logarithmically spaced deltas from `hi` down to `lo`.
pub fn log_delta_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || count == 0 {
        return Err(Error::Config(format!("bad delta range [{lo}, {hi}] x {count}")));
    }
    if count == 1 {
        return Ok(vec![hi]);
    }
    let (a, b) = (hi.ln(), lo.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn closed_forms() {
        let p = DecayModel::Polynomial { c: 1.0, alpha: 2.0 };
        assert_eq!(critical_dimension(&p, 0.01).unwrap(), 10);
        let e = DecayModel::Exponential {
            c: 1.0,
            rate: 1.0,
            alpha: 1.0,
        };
        assert_eq!(critical_dimension(&e, (-5.0f64).exp()).unwrap(), 5);
        let x = DecayModel::Explicit {
            eigenvalues: vec![1.0, 0.5, 0.1],
        };
        assert_eq!(critical_dimension(&x, 0.2).unwrap(), 3);
        assert!(matches!(
            critical_dimension(&x, 0.05),
            Err(Error::InsufficientSpectrum { len: 3, .. })
        ));
        assert!(critical_dimension(&p, 0.0).is_err());
    }

    #[test]
    fn polynomial_plan_sum() {
        let p = DecayModel::Polynomial { c: 1.0, alpha: 2.0 };
        let plan = ops_estimate(&p, 0.01).unwrap();
        let want: f64 = (1..=10).map(|j| (j as f64).powi(-4)).sum();
        assert_eq!(plan.r_star, 10);
        assert!((plan.sum_lambda_sq - want).abs() < 1e-15);
        assert!((plan.ops_estimate - 10.0 * want * 100.0 * 100f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn polynomial_scaling() {
        let alpha = 2.0;
        let p = DecayModel::Polynomial { c: 1.0, alpha };
        let d = 1e-6;
        let got = ops_estimate(&p, d / 2.0).unwrap().ops_estimate / ops_estimate(&p, d).unwrap().ops_estimate;
        let want = 2f64.powf((1.0 + alpha) / alpha) * (2.0 / d).ln() / (1.0 / d).ln();
        assert!((got / want - 1.0).abs() < 0.1, "{got} vs {want}");
    }

    #[test]
    fn exponential_scaling() {
        let alpha = 1.0;
        let e = DecayModel::Exponential { c: 1.0, rate: 0.01, alpha };
        let d = 1e-8;
        let got = ops_estimate(&e, d / 2.0).unwrap().ops_estimate / ops_estimate(&e, d).unwrap().ops_estimate;
        let want = 2.0 * ((2.0 / d).ln() / (1.0 / d).ln()).powf((1.0 + alpha) / alpha);
        assert!((got / want - 1.0).abs() < 0.1, "{got} vs {want}");
    }

    #[test]
    fn kernel_spectrum() {
        let m = spectrum_of_model(&EdgePotential::kernel_expansion(1.0, 1000)).unwrap();
        assert_eq!(m.lambda(1), 1.0);
        assert_eq!(m.lambda(2), 0.5);
        assert!((m.lambda(1000) - 0.001).abs() < 1e-15);
        let rough = spectrum_of_model(&EdgePotential::kernel_expansion(0.1, 1000)).unwrap();
        assert!((rough.lambda(10) - 10f64.powf(-0.1)).abs() < 1e-15);
        assert!(spectrum_of_model(&EdgePotential::Uniform).is_err());
    }

    #[test]
    fn delta_grid_is_logarithmic() {
        let g = log_delta_grid(1e-4, 1e-1, 4).unwrap();
        for (a, b) in g.iter().zip([1e-1, 1e-2, 1e-3, 1e-4]) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }

    fn scan(decay: &DecayModel, delta: f64) -> usize {
        (1..).find(|&r| decay.lambda(r) <= delta).unwrap()
    }

    proptest! {
        #[test]
        fn polynomial_matches_scan(c in 0.1f64..10.0, alpha in 1.01f64..4.0, delta in 1e-4f64..0.5) {
            let p = DecayModel::Polynomial { c, alpha };
            let r = critical_dimension(&p, delta).unwrap();
            prop_assert_eq!(r, scan(&p, delta));
            prop_assert!(r as f64 <= (c / delta).powf(1.0 / alpha).ceil().max(1.0));
        }

        #[test]
        fn exponential_matches_scan(c in 0.1f64..10.0, rate in 0.05f64..3.0, alpha in 0.3f64..3.0, delta in 1e-6f64..0.5) {
            let e = DecayModel::Exponential { c, rate, alpha };
            prop_assert_eq!(critical_dimension(&e, delta).unwrap(), scan(&e, delta));
        }

        #[test]
        fn monotone_in_delta(alpha in 1.01f64..4.0, d1 in 1e-4f64..0.9, d2 in 1e-4f64..0.9) {
            let p = DecayModel::Polynomial { c: 1.0, alpha };
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let a = ops_estimate(&p, lo).unwrap();
            let b = ops_estimate(&p, hi).unwrap();
            prop_assert!(a.r_star >= b.r_star);
            prop_assert!(a.ops_estimate >= b.ops_estimate);
        }
    }
}
