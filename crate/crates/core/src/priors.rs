//! Prior construction and diagnosis.
//!
//! Three tools live here: the prior on `δ = θ1 − θ0` implied by independent
//! Beta priors, conditional-means priors for binary regression, and the
//! moment match of Beta priors onto the log-odds scale used by the
//! Pólya-Gamma posterior.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::dist::{digamma, log_normal_cdf, normal_quantile, trigamma, BetaParams, RngStream};
use crate::error::{domain, Error, Result};

/// Default number of histogram bins over `[-1, 1]`.
pub const DEFAULT_BINS: usize = 201;

/// Normalised histogram of `δ` on `[-1, 1]` with equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaHistogram {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
}

impl DeltaHistogram {
    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn bin_width(&self) -> f64 {
        2.0 / self.bins() as f64
    }

    /// Density value (mass / width) per bin.
    pub fn density(&self) -> Vec<f64> {
        let w = self.bin_width();
        self.mass.iter().map(|m| m / w).collect()
    }

    /// Mass on `[lo, hi]`, spreading each bin's mass uniformly over the bin.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let (l, r) = (self.edges[i], self.edges[i + 1]);
                let overlap = (hi.min(r) - lo.max(l)).max(0.0);
                m * overlap / (r - l)
            })
            .sum()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "bin_right", "mass"])?;
        for (i, m) in self.mass.iter().enumerate() {
            w.write_record([format!("{:.6}", self.edges[i]), format!("{:.6}", self.edges[i + 1]), format!("{m:.10e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Histogram of `θ1 − θ0` with `θi` drawn independently from the two priors.
pub fn implied_delta_prior(prior1: &BetaParams, prior0: &BetaParams, draws: usize, bins: usize, rng: &mut RngStream) -> Result<DeltaHistogram> {
    if draws < 1000 {
        return domain(format!("implied prior needs at least 1000 draws, got {draws}"));
    }
    if bins == 0 {
        return domain("bins must be positive");
    }
    let width = 2.0 / bins as f64;
    let mut counts = vec![0u64; bins];
    for _ in 0..draws {
        let d = prior1.sample(rng) - prior0.sample(rng);
        let idx = (((d + 1.0) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        counts[idx] += 1;
    }
    let edges = (0..=bins).map(|i| -1.0 + i as f64 * width).collect();
    let mass = counts.iter().map(|&c| c as f64 / draws as f64).collect();
    Ok(DeltaHistogram { edges, mass })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Logit,
    Probit,
}

impl Link {
    /// `(ln F(η), ln(1 − F(η)), ln f(η))`.
    fn log_terms(self, eta: f64) -> (f64, f64, f64) {
        match self {
            Link::Logit => {
                let ln_f = -softplus(-eta);
                let ln_1mf = -softplus(eta);
                (ln_f, ln_1mf, ln_f + ln_1mf)
            }
            Link::Probit => {
                let ln_pdf = -0.5 * eta * eta - 0.5 * (2.0 * std::f64::consts::PI).ln();
                (log_normal_cdf(eta), log_normal_cdf(-eta), ln_pdf)
            }
        }
    }

    pub fn inverse(self, m: f64) -> Result<f64> {
        match self {
            Link::Logit => Ok((m / (1.0 - m)).ln()),
            Link::Probit => normal_quantile(m),
        }
    }

    pub fn cdf(self, eta: f64) -> f64 {
        self.log_terms(eta).0.exp()
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Conditional-means prior: Beta priors on the response probability at `p`
/// design points induce a prior on the `p` regression coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CmpSpec {
    pub link: Link,
    design: DMatrix<f64>,
    hypers: Vec<(f64, f64)>,
}

impl CmpSpec {
    pub fn new(link: Link, design_points: &[Vec<f64>], beta_hypers: &[(f64, f64)]) -> Result<Self> {
        let p = design_points.len();
        if p == 0 {
            return domain("at least one design point is required");
        }
        if design_points.iter().any(|x| x.len() != p) {
            return domain(format!("each design point must have length {p}"));
        }
        if beta_hypers.len() != p {
            return domain(format!("expected {p} hyperparameter pairs, got {}", beta_hypers.len()));
        }
        if beta_hypers.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite())) {
            return domain("hyperparameters must be positive and finite");
        }
        let design = DMatrix::from_fn(p, p, |i, j| design_points[i][j]);
        let det = design.clone().lu().determinant();
        if !(det.abs() > 1e-12) {
            return domain("design-point matrix is singular");
        }
        Ok(Self { link, design, hypers: beta_hypers.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.hypers.len()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn hypers(&self) -> &[(f64, f64)] {
        &self.hypers
    }

    /// Linear predictors `x̃_i'β` at the design points.
    pub fn linear_predictors(&self, beta: &[f64]) -> Result<DVector<f64>> {
        if beta.len() != self.dim() {
            return domain(format!("beta has length {}, expected {}", beta.len(), self.dim()));
        }
        Ok(&self.design * DVector::from_column_slice(beta))
    }

    /// Exact prior draws of `β`: Beta draws per design point, mapped through
    /// the inverse link and solved for the coefficients.
    pub fn sample_prior(&self, draws: usize, rng: &mut RngStream) -> Result<Vec<DVector<f64>>> {
        let lu = self.design.clone().lu();
        let laws = self
            .hypers
            .iter()
            .map(|&(a, b)| Beta::new(a, b).map_err(|e| Error::Domain(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(draws);
        for _ in 0..draws {
            let eta = laws
                .iter()
                .map(|law| {
                    let m: f64 = law.sample(rng);
                    self.link.inverse(m.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
                })
                .collect::<Result<Vec<_>>>()?;
            let beta = lu
                .solve(&DVector::from_vec(eta))
                .ok_or_else(|| Error::Numerical("design-point system is singular".into()))?;
            out.push(beta);
        }
        Ok(out)
    }
}

/// Log prior density of `β` up to the constant `ln |det X̃| − Σ ln B(a1, a2)`.
pub fn cmp_log_density(spec: &CmpSpec, beta: &[f64]) -> Result<f64> {
    let eta = spec.linear_predictors(beta)?;
    Ok(eta
        .iter()
        .zip(&spec.hypers)
        .map(|(&e, &(a1, a2))| {
            let (ln_f, ln_1mf, ln_pdf) = spec.link.log_terms(e);
            (a1 - 1.0) * ln_f + (a2 - 1.0) * ln_1mf + ln_pdf
        })
        .sum())
}

/// Gaussian prior on `(β0, β1)` where `η_ctrl = β0`, `η_trt = β0 + β1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticPrior {
    pub mean: Vector2<f64>,
    pub covariance: Matrix2<f64>,
}

impl LogisticPrior {
    pub fn new(mean: Vector2<f64>, covariance: Matrix2<f64>) -> Result<Self> {
        if (covariance[(0, 1)] - covariance[(1, 0)]).abs() > 1e-12 {
            return domain("prior covariance is not symmetric");
        }
        if covariance.cholesky().is_none() {
            return domain("prior covariance is not positive definite");
        }
        Ok(Self { mean, covariance })
    }

    pub fn precision(&self) -> Matrix2<f64> {
        self.covariance.try_inverse().expect("positive-definite covariance")
    }
}

/// Log-odds mean and variance of `θ ~ Beta(a, b)`.
pub fn beta_log_odds_moments(prior: &BetaParams) -> (f64, f64) {
    let (a, b) = (prior.alpha(), prior.beta());
    let mean = digamma(a).expect("a > 0") - digamma(b).expect("b > 0");
    let var = trigamma(a).expect("a > 0") + trigamma(b).expect("b > 0");
    (mean, var)
}

pub fn beta_to_logit_prior(prior_ctrl: &BetaParams, prior_trt: &BetaParams) -> LogisticPrior {
    let (mc, vc) = beta_log_odds_moments(prior_ctrl);
    let (mt, vt) = beta_log_odds_moments(prior_trt);
    LogisticPrior { mean: Vector2::new(mc, mt - mc), covariance: Matrix2::new(vc, -vc, -vc, vc + vt) }
}

/// Fraction of prior draws with `F(x̃_i'β) > 0.5` at design point `i`.
pub fn cmp_prob_above_half(spec: &CmpSpec, point: usize, draws: usize, rng: &mut RngStream) -> Result<f64> {
    if point >= spec.dim() {
        return domain(format!("design point {point} out of range"));
    }
    let samples = spec.sample_prior(draws, rng)?;
    let row = spec.design.row(point).transpose();
    let hits = samples.iter().filter(|b| spec.link.cdf(row.dot(b)) > 0.5).count();
    Ok(hits as f64 / draws as f64)
}
