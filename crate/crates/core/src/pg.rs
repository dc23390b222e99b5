//! Pólya-Gamma augmentation for logistic models: the plug-in Laplace solve
//! for two-arm superiority, an exact PG sampler, and a hierarchical
//! multi-centre Gibbs sampler.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Cholesky, Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{log_normal_cdf, normal_cdf, prob_superior_exact, BetaParams, RngStream};
use crate::error::{domain, Error, Result};
use crate::priors::{beta_to_logit_prior, LogisticPrior};

/// `E[ω]` for `ω ~ PG(1, ψ)`, i.e. `tanh(ψ/2) / (2ψ)`.
pub fn pg_mean(psi: f64) -> f64 {
    if psi.abs() < 1e-4 {
        let x2 = psi * psi;
        0.25 - x2 / 48.0 + x2 * x2 / 480.0
    } else {
        (0.5 * psi).tanh() / (2.0 * psi)
    }
}

/// `Var[ω]` for `ω ~ PG(1, ψ)`.
pub fn pg_variance(psi: f64) -> f64 {
    let c = psi.abs();
    if c < 1e-3 {
        1.0 / 24.0 - c * c / 120.0
    } else {
        let ch = (0.5 * c).cosh();
        (c.sinh() - c) / (4.0 * c.powi(3) * ch * ch)
    }
}

// ---------------------------------------------------------------------------
// Laplace solve

pub const LAPLACE_TOLERANCE: f64 = 1e-8;
pub const LAPLACE_MAX_ITERATIONS: usize = 200;
/// Linear predictors beyond this magnitude flag quasi-separation.
pub const SEPARATION_THRESHOLD: f64 = 10.0;

/// Two-arm counts with a Gaussian prior on `(β0, β1)`, where `β0` is the
/// control log-odds and `β0 + β1` the treatment log-odds.
#[derive(Debug, Clone, PartialEq)]
pub struct PgLaplaceProblem {
    pub s1: u32,
    pub n1: u32,
    pub s0: u32,
    pub n0: u32,
    pub prior: LogisticPrior,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl PgLaplaceProblem {
    pub fn new(s1: u32, n1: u32, s0: u32, n0: u32, prior: LogisticPrior) -> Result<Self> {
        let p = Self { s1, n1, s0, n0, prior, tolerance: LAPLACE_TOLERANCE, max_iterations: LAPLACE_MAX_ITERATIONS };
        p.validate()?;
        Ok(p)
    }

    /// Problem with the logistic prior moment-matched to `Beta(1, 1)` on both arms.
    pub fn uniform(s1: u32, n1: u32, s0: u32, n0: u32) -> Result<Self> {
        Self::new(s1, n1, s0, n0, beta_to_logit_prior(&BetaParams::uniform(), &BetaParams::uniform()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.s1 > self.n1 || self.s0 > self.n0 {
            return domain(format!("successes exceed patients: {}/{} and {}/{}", self.s1, self.n1, self.s0, self.n0));
        }
        if !(self.tolerance > 0.0) {
            return domain("tolerance must be positive");
        }
        if self.max_iterations == 0 {
            return domain("max_iterations must be positive");
        }
        LogisticPrior::new(self.prior.mean, self.prior.covariance)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceResult {
    /// Gaussian approximation to `Pr(β1 > 0 | data)`.
    pub prob_superior: f64,
    pub mean: Vector2<f64>,
    pub covariance: Matrix2<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub separated: bool,
}

pub fn pg_laplace_prob_superior(problem: &PgLaplaceProblem) -> Result<LaplaceResult> {
    problem.validate()?;
    let prec0 = problem.prior.precision();
    let rhs0 = prec0 * problem.prior.mean;
    let (n1, n0) = (problem.n1 as f64, problem.n0 as f64);
    let k1 = problem.s1 as f64 - 0.5 * n1;
    let k0 = problem.s0 as f64 - 0.5 * n0;
    let xk = Vector2::new(k0 + k1, k1);
    let rhs = rhs0 + xk;

    let mut m = problem.prior.mean;
    let mut cov = problem.prior.covariance;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < problem.max_iterations {
        iterations += 1;
        let w0 = n0 * pg_mean(m[0]);
        let w1 = n1 * pg_mean(m[0] + m[1]);
        let precision = prec0 + Matrix2::new(w0 + w1, w1, w1, w1);
        let chol = Cholesky::new(precision).ok_or_else(|| Error::Numerical("Laplace precision is not positive definite".into()))?;
        let next = chol.solve(&rhs);
        cov = chol.inverse();
        let shift = (next - m).amax();
        m = next;
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("Laplace iteration diverged".into()));
        }
        if shift < problem.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("PG-Laplace did not converge in {} iterations", problem.max_iterations);
    }
    let separated = m[0].abs() > SEPARATION_THRESHOLD || (m[0] + m[1]).abs() > SEPARATION_THRESHOLD;
    let prob_superior = normal_cdf(m[1] / cov[(1, 1)].sqrt());
    Ok(LaplaceResult { prob_superior, mean: m, covariance: cov, iterations, converged, separated })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationRow {
    pub n: u32,
    pub delta: f64,
    pub datasets: usize,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
}

/// Compares the Laplace solve with the exact Beta superiority probability on
/// random binomial datasets at `p1 = p0 + δ`, `n` patients per arm.
///
/// Cell `i` of the grid (row-major over `ns × deltas`) draws from substream `i`.
pub fn validate_pg_laplace(ns: &[u32], deltas: &[f64], p0: f64, n_datasets: usize, rng: &RngStream) -> Result<Vec<ValidationRow>> {
    if n_datasets == 0 {
        return domain("n_datasets must be positive");
    }
    let cells: Vec<(usize, u32, f64)> = ns.iter().flat_map(|&n| deltas.iter().map(move |&d| (n, d))).enumerate().map(|(i, (n, d))| (i, n, d)).collect();
    cells
        .into_par_iter()
        .map(|(i, n, delta)| {
            let p1 = p0 + delta;
            if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) {
                return domain(format!("response rates ({p1}, {p0}) outside [0, 1]"));
            }
            let mut cell_rng = rng.substream(i as u64);
            let (mut sum, mut max) = (0.0f64, 0.0f64);
            for _ in 0..n_datasets {
                let s1 = binomial(n, p1, &mut cell_rng);
                let s0 = binomial(n, p0, &mut cell_rng);
                let err = (laplace_vs_exact(s1, s0, n)?).abs();
                sum += err;
                max = max.max(err);
            }
            Ok(ValidationRow { n, delta, datasets: n_datasets, mean_abs_error: sum / n_datasets as f64, max_abs_error: max })
        })
        .collect()
}

/// Laplace minus exact superiority probability under `Beta(1, 1)` priors.
pub fn laplace_vs_exact(s1: u32, s0: u32, n: u32) -> Result<f64> {
    let approx = pg_laplace_prob_superior(&PgLaplaceProblem::uniform(s1, n, s0, n)?)?.prob_superior;
    let exact = prob_superior_exact(&BetaParams::uniform().update(s1, n), &BetaParams::uniform().update(s0, n))?;
    Ok(approx - exact)
}

fn binomial(n: u32, p: f64, rng: &mut RngStream) -> u32 {
    (0..n).filter(|_| rng.random::<f64>() < p).count() as u32
}

pub fn write_validation_csv<W: Write>(rows: &[ValidationRow], mut out: W) -> Result<()> {
    writeln!(out, "# PG-Laplace against exact Beta superiority on random datasets")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "delta", "datasets", "mean_abs_error", "max_abs_error"])?;
    for r in rows {
        w.write_record([r.n.to_string(), r.delta.to_string(), r.datasets.to_string(), r.mean_abs_error.to_string(), r.max_abs_error.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Sampler

const PG_TRUNC: f64 = 0.64;

/// Exact draw from `PG(b, c)` as a sum of `b` draws from `PG(1, c)`.
pub fn sample_pg<R: Rng + ?Sized>(b: u32, c: f64, rng: &mut R) -> f64 {
    (0..b).map(|_| sample_pg1(c, rng)).sum()
}

/// `PG(1, c)` by the alternating-series accept/reject scheme for the
/// exponentially tilted Jacobi law `J*(1, c/2)`.
pub fn sample_pg1<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    let z = 0.5 * c.abs();
    let t = PG_TRUNC;
    let k = PI * PI / 8.0 + 0.5 * z * z;
    let p = PI / (2.0 * k) * (-k * t).exp();
    let q = 2.0 * (-z).exp() * inverse_gaussian_cdf(t, z);
    loop {
        let x = if rng.random::<f64>() < p / (p + q) {
            let e: f64 = Exp1.sample(rng);
            t + e / k
        } else {
            truncated_inverse_gaussian(z, t, rng)
        };
        let mut s = jacobi_coef(0, x, t);
        let y = rng.random::<f64>() * s;
        let mut n = 0u32;
        loop {
            n += 1;
            let a = jacobi_coef(n, x, t);
            if n % 2 == 1 {
                s -= a;
                if y <= s {
                    return 0.25 * x;
                }
            } else {
                s += a;
                if y > s {
                    break;
                }
            }
        }
    }
}

fn jacobi_coef(n: u32, x: f64, t: f64) -> f64 {
    let h = n as f64 + 0.5;
    if x > t {
        PI * h * (-0.5 * h * h * PI * PI * x).exp()
    } else {
        PI * h * (2.0 / (PI * x)).powf(1.5) * (-2.0 * h * h / x).exp()
    }
}

/// CDF at `t` of the inverse Gaussian with mean `1/z` and shape 1.
fn inverse_gaussian_cdf(t: f64, z: f64) -> f64 {
    let r = (1.0 / t).sqrt();
    let b = r * (t * z - 1.0);
    let a = -r * (t * z + 1.0);
    normal_cdf(b) + (2.0 * z + log_normal_cdf(a)).exp()
}

/// Inverse Gaussian with mean `1/z`, shape 1, truncated to `(0, t)`.
fn truncated_inverse_gaussian<R: Rng + ?Sized>(z: f64, t: f64, rng: &mut R) -> f64 {
    let mu = if z > 0.0 { 1.0 / z } else { f64::INFINITY };
    if mu > t {
        loop {
            let e1 = loop {
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                if e1 * e1 <= 2.0 * e2 / t {
                    break e1;
                }
            };
            let x = t / (1.0 + e1 * t).powi(2);
            if rng.random::<f64>() <= (-0.5 * z * z * x).exp() {
                return x;
            }
        }
    } else {
        loop {
            let g: f64 = StandardNormal.sample(rng);
            let y = g * g;
            let mu_y = mu * y;
            let mut x = mu + 0.5 * mu * mu_y - 0.5 * mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x < t {
                return x;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Multi-centre Gibbs sampler

/// Synthetic eight-centre data set shipped with the crate.
pub const BUNDLED_CENTRES_CSV: &str = include_str!("../data/multicentre_synthetic.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentreCounts {
    pub centre: String,
    pub y_trt: u32,
    pub n_trt: u32,
    pub y_ctrl: u32,
    pub n_ctrl: u32,
}

impl CentreCounts {
    /// `(y_trt − n_trt/2, y_ctrl − n_ctrl/2)`.
    pub fn kappa(&self) -> Vector2<f64> {
        Vector2::new(self.y_trt as f64 - 0.5 * self.n_trt as f64, self.y_ctrl as f64 - 0.5 * self.n_ctrl as f64)
    }

    /// Empirical log-odds with a half-count correction.
    pub fn empirical_logits(&self) -> Vector2<f64> {
        let lo = |y: u32, n: u32| ((y as f64 + 0.5) / (n as f64 - y as f64 + 0.5)).ln();
        Vector2::new(lo(self.y_trt, self.n_trt), lo(self.y_ctrl, self.n_ctrl))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentreData {
    centres: Vec<CentreCounts>,
}

impl CentreData {
    pub fn new(centres: Vec<CentreCounts>) -> Result<Self> {
        if centres.len() < 2 {
            return domain(format!("need at least 2 centres, got {}", centres.len()));
        }
        for c in &centres {
            if c.y_trt > c.n_trt || c.y_ctrl > c.n_ctrl {
                return domain(format!("centre {}: successes exceed patients", c.centre));
            }
        }
        Ok(Self { centres })
    }

    /// Reads `centre,y_trt,n_trt,y_ctrl,n_ctrl` rows; `#` lines are comments.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
        let centres = rdr.deserialize().collect::<std::result::Result<Vec<CentreCounts>, _>>()?;
        Self::new(centres)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn centres(&self) -> &[CentreCounts] {
        &self.centres
    }

    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GibbsConfig {
    /// Inverse-Wishart degrees of freedom `d`.
    pub iw_df: f64,
    /// Inverse-Wishart scale `B`, row-major.
    pub iw_scale: [[f64; 2]; 2],
    pub n_burn: usize,
    pub n_keep: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { iw_df: 3.0, iw_scale: [[1.0, 0.0], [0.0, 1.0]], n_burn: 2000, n_keep: 8000, thin: 1, seed: 0 }
    }
}

impl GibbsConfig {
    pub fn scale(&self) -> Matrix2<f64> {
        let b = self.iw_scale;
        Matrix2::new(b[0][0], b[0][1], b[1][0], b[1][1])
    }

    pub fn validate(&self, n_centres: usize) -> Result<()> {
        if !(self.iw_df > 1.0) {
            return domain(format!("iw_df must exceed 1, got {}", self.iw_df));
        }
        if self.iw_df + n_centres as f64 <= 3.0 {
            return domain("iw_df + number of centres must exceed 3");
        }
        let b = self.scale();
        if (b[(0, 1)] - b[(1, 0)]).abs() > 1e-12 || Cholesky::new(b).is_none() {
            return domain("iw_scale must be symmetric positive definite");
        }
        if self.n_keep == 0 || self.thin == 0 {
            return domain("n_keep and thin must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsDraw {
    pub iteration: usize,
    /// `(μ_trt, μ_ctrl)`.
    pub mu: Vector2<f64>,
    pub sigma: Matrix2<f64>,
    pub psi: Vec<Vector2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsChain {
    pub draws: Vec<GibbsDraw>,
    /// Monte-Carlo estimate of `Pr(μ1 > μ2 | data)`.
    pub prob_mu1_gt_mu2: f64,
    /// Largest conditional-update residual seen while sampling `ψ`.
    pub max_residual: f64,
}

impl GibbsChain {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# multi-centre Gibbs chain: population log-odds mean and covariance")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "mu1", "mu2", "sigma11", "sigma12", "sigma22"])?;
        for d in &self.draws {
            w.write_record([
                d.iteration.to_string(),
                d.mu[0].to_string(),
                d.mu[1].to_string(),
                d.sigma[(0, 0)].to_string(),
                d.sigma[(0, 1)].to_string(),
                d.sigma[(1, 1)].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn posterior_mean_psi(&self, centre: usize) -> Option<Vector2<f64>> {
        if self.draws.is_empty() || centre >= self.draws[0].psi.len() {
            return None;
        }
        let sum: Vector2<f64> = self.draws.iter().map(|d| d.psi[centre]).sum();
        Some(sum / self.draws.len() as f64)
    }

    /// Equal-tailed credible interval for `μ_j`.
    pub fn mu_interval(&self, j: usize, level: f64) -> (f64, f64) {
        let mut xs: Vec<f64> = self.draws.iter().map(|d| d.mu[j]).collect();
        xs.sort_by(f64::total_cmp);
        let q = |p: f64| xs[((p * (xs.len() - 1) as f64).round() as usize).min(xs.len() - 1)];
        let tail = 0.5 * (1.0 - level);
        (q(tail), q(1.0 - tail))
    }
}

/// Gaussian full conditional of one centre's `ψ_i`: precision
/// `diag(ω_i) + Σ⁻¹`, mean solving `P m = κ_i + Σ⁻¹μ`. Returns the mean, the
/// Cholesky factor of the precision, and the max-norm residual of the solve.
pub fn psi_conditional(omega: Vector2<f64>, kappa: Vector2<f64>, sigma_inv: &Matrix2<f64>, mu: &Vector2<f64>) -> Result<(Vector2<f64>, Cholesky<f64, nalgebra::U2>, f64)> {
    let precision = Matrix2::from_diagonal(&omega) + sigma_inv;
    let rhs = kappa + sigma_inv * mu;
    let chol = cholesky_jittered(precision, "psi precision")?;
    let m = chol.solve(&rhs);
    let residual = (precision * m - rhs).amax();
    Ok((m, chol, residual))
}

fn cholesky_jittered(m: Matrix2<f64>, what: &str) -> Result<Cholesky<f64, nalgebra::U2>> {
    let sym = 0.5 * (m + m.transpose());
    if let Some(c) = Cholesky::new(sym) {
        return Ok(c);
    }
    log::warn!("{what} not numerically positive definite; adding 1e-10 I");
    Cholesky::new(sym + Matrix2::identity() * 1e-10).ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

fn std_normal2<R: Rng + ?Sized>(rng: &mut R) -> Vector2<f64> {
    Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn chi_square<R: Rng + ?Sized>(df: f64, rng: &mut R) -> f64 {
    Gamma::new(0.5 * df, 2.0).expect("positive df").sample(rng)
}

/// `Σ ~ IW(df, S)` via the Bartlett factor of `W ~ Wishart(df, S⁻¹)`.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(df: f64, scale: &Matrix2<f64>, rng: &mut R) -> Result<Matrix2<f64>> {
    let s_chol = cholesky_jittered(*scale, "inverse-Wishart scale")?;
    let s_inv = s_chol.inverse();
    let l = cholesky_jittered(s_inv, "inverse-Wishart scale inverse")?.l();
    let a = Matrix2::new(chi_square(df, rng).sqrt(), 0.0, StandardNormal.sample(rng), chi_square(df - 1.0, rng).sqrt());
    let la = l * a;
    let w = la * la.transpose();
    let sigma = cholesky_jittered(w, "Wishart draw")?.inverse();
    Ok(0.5 * (sigma + sigma.transpose()))
}

/// One chain of the hierarchical model
/// `y_ij ~ Bin(n_ij, logit⁻¹ ψ_ij)`, `ψ_i ~ N(μ, Σ)`, `Σ ~ IW(d, B)`, flat on `μ`.
pub fn gibbs_multicentre(data: &CentreData, config: &GibbsConfig, rng: &mut RngStream) -> Result<GibbsChain> {
    config.validate(data.len())?;
    let n = data.len();
    let nf = n as f64;
    let b = config.scale();
    let kappas: Vec<Vector2<f64>> = data.centres().iter().map(CentreCounts::kappa).collect();
    let mut psi: Vec<Vector2<f64>> = data.centres().iter().map(CentreCounts::empirical_logits).collect();
    let mut mu: Vector2<f64> = psi.iter().sum::<Vector2<f64>>() / nf;
    let mut sigma = b;
    let total = config.n_burn + config.n_keep * config.thin;
    let mut draws = Vec::with_capacity(config.n_keep);
    let mut max_residual = 0.0f64;

    for it in 0..total {
        let sigma_inv = cholesky_jittered(sigma, "Sigma")?.inverse();
        for (i, c) in data.centres().iter().enumerate() {
            let omega = Vector2::new(sample_pg(c.n_trt, psi[i][0], rng), sample_pg(c.n_ctrl, psi[i][1], rng));
            let (m, chol, residual) = psi_conditional(omega, kappas[i], &sigma_inv, &mu)?;
            max_residual = max_residual.max(residual);
            // L L' = P, so m + L'^{-1} z has covariance P^{-1}.
            let z = std_normal2(rng);
            let dev = chol.l().transpose().solve_upper_triangular(&z).ok_or_else(|| Error::Numerical("singular psi factor".into()))?;
            psi[i] = m + dev;
        }
        let mean: Vector2<f64> = psi.iter().sum::<Vector2<f64>>() / nf;
        let l = cholesky_jittered(sigma / nf, "Sigma / N")?.l();
        mu = mean + l * std_normal2(rng);
        let scatter: Matrix2<f64> = psi.iter().map(|p| (p - mu) * (p - mu).transpose()).sum();
        sigma = sample_inverse_wishart(config.iw_df + nf, &(b + scatter), rng)?;
        if !sigma.iter().chain(mu.iter()).all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state at iteration {it}")));
        }
        if it >= config.n_burn && (it - config.n_burn) % config.thin == 0 {
            draws.push(GibbsDraw { iteration: it - config.n_burn, mu, sigma, psi: psi.clone() });
        }
    }
    let prob = draws.iter().filter(|d| d.mu[0] > d.mu[1]).count() as f64 / draws.len() as f64;
    Ok(GibbsChain { draws, prob_mu1_gt_mu2: prob, max_residual })
}

/// Draws centre log-odds `ψ_i ~ N(μ, Σ)` and binomial counts with
/// `n_per_arm` patients on each arm of each centre.
pub fn synthetic_centres(mu: &Vector2<f64>, sigma: &Matrix2<f64>, n_centres: usize, n_per_arm: u32, rng: &mut RngStream) -> Result<CentreData> {
    let l = cholesky_jittered(*sigma, "centre covariance")?.l();
    let expit = |x: f64| 1.0 / (1.0 + (-x).exp());
    let centres = (0..n_centres)
        .map(|i| {
            let psi = mu + l * std_normal2(rng);
            let y_trt = binomial(n_per_arm, expit(psi[0]), rng);
            let y_ctrl = binomial(n_per_arm, expit(psi[1]), rng);
            CentreCounts { centre: format!("centre{}", i + 1), y_trt, n_trt: n_per_arm, y_ctrl, n_ctrl: n_per_arm }
        })
        .collect();
    CentreData::new(centres)
}

/// Independent chains on substreams `0..n_chains` of `config.seed`.
pub fn gibbs_chains(data: &CentreData, config: &GibbsConfig, n_chains: usize) -> Result<Vec<GibbsChain>> {
    let root = RngStream::new(config.seed, 0);
    (0..n_chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = root.substream(c);
            gibbs_multicentre(data, config, &mut rng)
        })
        .collect()
}
