//! Frequentist sample size and the Bayesian goal function it implicitly
//! targets.
//!
//! For a one-sided test of `θ0` against `θ1 = θ0 + δ` with known `σ`, the
//! classical size is `n_F = (z_α + z_β)² (σ/δ)²`. Under a 0-1-K loss with
//! prior mass `π` on the null, the expected utility of an experiment of
//! size `n` is
//!
//! ```text
//! G_B(n) = Kπ Φ(σL/(√n δ) + δ√n/(2σ)) + (1-π) Φ(δ√n/(2σ) - σL/(√n δ)),   L = ln(Kπ/(1-π))
//! ```
//!
//! and `G_B(n_F)` no longer depends on `δ` or `σ`.

use serde::{Deserialize, Serialize};

use crate::dist::{normal_cdf, normal_quantile};
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignInputs {
    /// One-sided type-I error target.
    pub alpha: f64,
    /// Type-II error target (power is `1 - beta`).
    pub beta: f64,
    /// Outcome standard deviation.
    pub sigma: f64,
    /// Target difference `θ1 - θ0`.
    pub delta: f64,
    /// Prior mass on the null hypothesis.
    pub pi0: f64,
    /// Loss for a false rejection (failing to reject costs 1).
    pub k: f64,
}

impl DesignInputs {
    pub fn new(alpha: f64, beta: f64, sigma: f64, delta: f64, pi0: f64, k: f64) -> Result<Self> {
        let inputs = Self { alpha, beta, sigma, delta, pi0, k };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        ErrorRates { alpha: self.alpha, beta: self.beta, pi0: self.pi0, k: self.k }.validate()?;
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return domain(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return domain(format!("delta must be positive, got {}", self.delta));
        }
        Ok(())
    }

    pub fn rates(&self) -> ErrorRates {
        ErrorRates { alpha: self.alpha, beta: self.beta, pi0: self.pi0, k: self.k }
    }
}

/// The `(α, β, π, K)` part of [`DesignInputs`]; all that the constant depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub alpha: f64,
    pub beta: f64,
    pub pi0: f64,
    pub k: f64,
}

impl ErrorRates {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return domain(format!("alpha must lie in (0, 0.5), got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return domain(format!("beta must lie in (0, 0.5), got {}", self.beta));
        }
        if !(self.pi0 > 0.0 && self.pi0 < 1.0) {
            return domain(format!("pi0 must lie in (0, 1), got {}", self.pi0));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return domain(format!("K must be positive, got {}", self.k));
        }
        Ok(())
    }

    fn z_sum(&self) -> Result<f64> {
        Ok(normal_quantile(1.0 - self.alpha)? + normal_quantile(1.0 - self.beta)?)
    }

    fn log_odds_loss(&self) -> f64 {
        (self.k * self.pi0 / (1.0 - self.pi0)).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSize {
    pub n_real: f64,
    /// Smallest integer at least `n_real`.
    pub n_ceil: u64,
}

pub fn freq_n(inputs: &DesignInputs) -> Result<SampleSize> {
    inputs.validate()?;
    let z = inputs.rates().z_sum()?;
    let ratio = inputs.sigma / inputs.delta;
    let n_real = z * z * ratio * ratio;
    Ok(SampleSize { n_real, n_ceil: n_real.ceil() as u64 })
}

/// Expected utility of a fixed experiment with `n` observations.
pub fn goal_gb(n: f64, inputs: &DesignInputs) -> Result<f64> {
    inputs.validate()?;
    if !(n > 0.0 && n.is_finite()) {
        return domain(format!("n must be positive, got {n}"));
    }
    let DesignInputs { sigma, delta, pi0, k, .. } = *inputs;
    let l = inputs.rates().log_odds_loss();
    let shift = sigma * l / (n.sqrt() * delta);
    let half = delta * n.sqrt() / (2.0 * sigma);
    Ok(k * pi0 * normal_cdf(shift + half) + (1.0 - pi0) * normal_cdf(half - shift))
}

/// `G_B(n_F)` written in terms of `(α, β, π, K)` only.
pub fn goal_constant(rates: &ErrorRates) -> Result<f64> {
    rates.validate()?;
    let z = rates.z_sum()?.abs();
    let l = rates.log_odds_loss();
    let (pi0, k) = (rates.pi0, rates.k);
    Ok(k * pi0 * normal_cdf(l / z + z / 2.0) + (1.0 - pi0) * normal_cdf(z / 2.0 - l / z))
}

/// One row of the constancy table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstancyRow {
    pub delta: f64,
    pub sigma: f64,
    pub n_real: f64,
    pub n_ceil: u64,
    pub goal: f64,
    pub constant: f64,
}

/// Evaluates `G_B(n_F(δ, σ))` over a grid of `(δ, σ)`.
pub fn constancy_table(rates: &ErrorRates, deltas: &[f64], sigmas: &[f64]) -> Result<Vec<ConstancyRow>> {
    let constant = goal_constant(rates)?;
    let mut rows = Vec::with_capacity(deltas.len() * sigmas.len());
    for &delta in deltas {
        for &sigma in sigmas {
            let inputs = DesignInputs::new(rates.alpha, rates.beta, sigma, delta, rates.pi0, rates.k)?;
            let n = freq_n(&inputs)?;
            rows.push(ConstancyRow {
                delta,
                sigma,
                n_real: n.n_real,
                n_ceil: n.n_ceil,
                goal: goal_gb(n.n_real, &inputs)?,
                constant,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical(delta: f64) -> DesignInputs {
        DesignInputs::new(0.05, 0.10, 1.0, delta, 0.5, 1.0).unwrap()
    }

    #[test]
    fn reported_sample_sizes() {
        let sizes: Vec<_> = [0.10, 0.05, 0.20].iter().map(|&d| freq_n(&canonical(d)).unwrap()).collect();
        let ceil: Vec<_> = sizes.iter().map(|s| s.n_ceil).collect();
        // n_real = 856.385, 3425.539, 214.096
        assert_eq!(ceil, [857, 3426, 215]);
        assert!((sizes[0].n_real - 856.385).abs() < 1e-3);
    }

    #[test]
    fn doubling_delta_quarters_n() {
        let a = freq_n(&canonical(0.1)).unwrap().n_real;
        let b = freq_n(&canonical(0.2)).unwrap().n_real;
        assert!((b / a - 0.25).abs() < 1e-14);
    }

    #[test]
    fn symmetric_goal_reduces_to_single_phi() {
        let inputs = DesignInputs::new(0.05, 0.10, 2.0, 0.3, 0.5, 1.0).unwrap();
        for &n in &[1.0, 10.0, 123.4] {
            let expect = normal_cdf(0.3 * f64::sqrt(n) / 4.0);
            assert!((goal_gb(n, &inputs).unwrap() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_value() {
        let rates = canonical(0.1).rates();
        let c = goal_constant(&rates).unwrap();
        assert!((c - 0.928).abs() < 5e-4);
        let z = normal_quantile(0.95).unwrap() + normal_quantile(0.90).unwrap();
        assert!((c - normal_cdf(z / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn constancy_holds_with_asymmetric_loss() {
        let rates = ErrorRates { alpha: 0.025, beta: 0.2, pi0: 0.3, k: 4.0 };
        let rows = constancy_table(&rates, &[0.01, 0.05, 0.1, 0.2, 0.5, 1.0], &[0.5, 1.0, 5.0]).unwrap();
        for row in rows {
            assert!((row.goal - row.constant).abs() < 1e-9, "{row:?}");
        }
    }

    #[test]
    fn goal_increasing_in_n() {
        for &(pi0, k) in &[(0.5, 1.0), (0.2, 3.0), (0.8, 0.5)] {
            let inputs = DesignInputs::new(0.05, 0.1, 1.0, 0.2, pi0, k).unwrap();
            let mut n = 1.0;
            let mut prev = goal_gb(n, &inputs).unwrap();
            while n < 5000.0 {
                n *= 1.05;
                let g = goal_gb(n, &inputs).unwrap();
                assert!(g > prev, "pi0={pi0} k={k} n={n}");
                prev = g;
            }
        }
    }

    #[test]
    fn ceiling_does_not_hurt_much() {
        let rates = canonical(0.1).rates();
        let c = goal_constant(&rates).unwrap();
        for &d in &[0.01, 0.05, 0.1, 0.2, 0.5, 1.0] {
            let inputs = canonical(d);
            let n = freq_n(&inputs).unwrap();
            assert!(goal_gb(n.n_ceil as f64, &inputs).unwrap() >= c - 5e-4);
        }
    }

    #[test]
    fn validation() {
        assert!(DesignInputs::new(0.6, 0.1, 1.0, 0.1, 0.5, 1.0).is_err());
        assert!(DesignInputs::new(0.05, 0.1, 0.0, 0.1, 0.5, 1.0).is_err());
        assert!(DesignInputs::new(0.05, 0.1, 1.0, -0.1, 0.5, 1.0).is_err());
        assert!(DesignInputs::new(0.05, 0.1, 1.0, 0.1, 1.0, 1.0).is_err());
        assert!(goal_gb(0.0, &canonical(0.1)).is_err());
    }
}
