//! Response-adaptive allocation and comparator monitoring designs.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::binary::BinaryPolicyTable;
use crate::dist::{normal_cdf, normal_quantile, prob_superior_exact, BetaParams, RngStream};
use crate::error::{domain, Error, Result};

/// Successes and patients on one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Tally {
    pub successes: u32,
    pub patients: u32,
}

impl Tally {
    pub fn new(successes: u32, patients: u32) -> Result<Self> {
        if successes > patients {
            return domain(format!("{successes} successes out of {patients} patients"));
        }
        Ok(Self { successes, patients })
    }

    fn posterior(&self) -> BetaParams {
        BetaParams::uniform().update(self.successes, self.patients)
    }
}

/// `Pr(p_a > p_b)` under uniform priors. Swapping the arguments gives the
/// complement exactly.
pub fn thompson_prob(a: Tally, b: Tally) -> f64 {
    if a == b {
        return 0.5;
    }
    if a < b {
        prob_superior_exact(&a.posterior(), &b.posterior()).expect("integer posteriors")
    } else {
        1.0 - thompson_prob(b, a)
    }
}

/// Powered-and-normalised allocation probabilities.
pub fn thall_wathen_alloc(probs: &[f64], tau: f64) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return domain("no arms");
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return domain("probabilities must lie in [0, 1]");
    }
    if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return domain("probabilities must sum to 1");
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return domain(format!("tau must be finite and >= 0, got {tau}"));
    }
    if tau == 0.0 {
        return Ok(vec![1.0 / probs.len() as f64; probs.len()]);
    }
    let logs: Vec<f64> = probs.iter().map(|p| tau * p.ln()).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Running proportion of patients allocated to treatment under Thompson's rule.
pub fn simulate_thompson_path(p1: f64, p0: f64, n_patients: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    check_rate(p1)?;
    check_rate(p0)?;
    if n_patients == 0 {
        return domain("need at least one patient");
    }
    let mut trt = Tally { successes: 0, patients: 0 };
    let mut ctl = trt;
    let mut trace = Vec::with_capacity(n_patients);
    for i in 0..n_patients {
        let to_trt = rng.random::<f64>() < thompson_prob(trt, ctl);
        let (arm, p) = if to_trt { (&mut trt, p1) } else { (&mut ctl, p0) };
        arm.patients += 1;
        arm.successes += (rng.random::<f64>() < p) as u32;
        trace.push(trt.patients as f64 / (i + 1) as f64);
    }
    Ok(trace)
}

fn check_rate(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        domain(format!("response rate {p} outside [0, 1]"))
    }
}

/// Predictive probability of final success from an interim one-sided
/// p-value `p_n` at information fraction `r`.
pub fn predictive_probability(p_n: f64, r: f64, alpha: f64) -> Result<f64> {
    if !(p_n > 0.0 && p_n < 1.0) {
        return domain(format!("p-value must lie in (0, 1), got {p_n}"));
    }
    predictive_probability_z(normal_quantile(1.0 - p_n)?, r, alpha)
}

/// As [`predictive_probability`], taking the interim statistic `z` directly.
pub fn predictive_probability_z(z: f64, r: f64, alpha: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return domain(format!("information fraction must lie in (0, 1), got {r}"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    let z_alpha = normal_quantile(1.0 - alpha)?;
    Ok(normal_cdf((z - z_alpha * r.sqrt()) / (1.0 - r).sqrt()))
}

/// Pooled-variance one-sided z for `p1 − p0` with equal arm sizes; 0 when
/// the pooled rate is 0 or 1.
pub fn pooled_z(s1: u32, s0: u32, n_per_arm: u32) -> f64 {
    if n_per_arm == 0 {
        return 0.0;
    }
    let n = n_per_arm as f64;
    let pooled = (s1 + s0) as f64 / (2.0 * n);
    let var = pooled * (1.0 - pooled) * 2.0 / n;
    if var <= 0.0 {
        return 0.0;
    }
    (s1 as f64 - s0 as f64) / n / var.sqrt()
}

/// Unpooled-variance one-sided z; 0 when both arms are degenerate.
pub fn unpooled_z(s1: u32, s0: u32, n_per_arm: u32) -> f64 {
    if n_per_arm == 0 {
        return 0.0;
    }
    let n = n_per_arm as f64;
    let (a, b) = (s1 as f64 / n, s0 as f64 / n);
    let var = (a * (1.0 - a) + b * (1.0 - b)) / n;
    if var <= 0.0 {
        return 0.0;
    }
    (a - b) / var.sqrt()
}

/// How an interim look turns counts into a one-sided statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterimStatistic {
    #[default]
    PooledZ,
    UnpooledZ,
    /// `p = 1 − Pr(p1 > p0 | data)` under uniform priors, `z = Φ⁻¹(1 − p)`.
    Posterior,
}

impl InterimStatistic {
    /// `(z, one-sided p)`.
    pub fn evaluate(self, s1: u32, s0: u32, n_per_arm: u32) -> (f64, f64) {
        match self {
            InterimStatistic::PooledZ => {
                let z = pooled_z(s1, s0, n_per_arm);
                (z, normal_cdf(-z))
            }
            InterimStatistic::UnpooledZ => {
                let z = unpooled_z(s1, s0, n_per_arm);
                (z, normal_cdf(-z))
            }
            InterimStatistic::Posterior => {
                let p = thompson_prob(Tally { successes: s0, patients: n_per_arm }, Tally { successes: s1, patients: n_per_arm });
                let z = if p <= 0.0 {
                    f64::INFINITY
                } else if p >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    -normal_quantile(p).expect("p in (0, 1)")
                };
                (z, p)
            }
        }
    }
}

/// Interim state of a look-based design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterimSnapshot {
    pub n_per_arm: u32,
    pub s1: u32,
    pub s0: u32,
    pub z: f64,
    pub p_one_sided: f64,
    pub info_fraction: f64,
}

impl InterimSnapshot {
    pub fn new(statistic: InterimStatistic, n_per_arm: u32, s1: u32, s0: u32, n_max_per_arm: u32) -> Self {
        let (z, p_one_sided) = statistic.evaluate(s1, s0, n_per_arm);
        Self { n_per_arm, s1, s0, z, p_one_sided, info_fraction: n_per_arm as f64 / n_max_per_arm as f64 }
    }
}

/// O'Brien–Fleming efficacy boundary at look `j` of `k`.
pub fn obf_boundary(alpha: f64, j: u32, k: u32) -> Result<f64> {
    if j == 0 || j > k {
        return domain(format!("look {j} outside 1..={k}"));
    }
    let z = normal_quantile(1.0 - alpha)?;
    if j == k {
        return Ok(z);
    }
    Ok(z * (k as f64 / j as f64).sqrt())
}

#[derive(Debug, Clone)]
pub enum MonitoringDesign {
    PredictiveProbability { n_max_per_arm: u32, n_looks: u32, efficacy_threshold: f64, futility_threshold: f64, final_alpha: f64, statistic: InterimStatistic },
    ObrienFleming { n_max_per_arm: u32, n_looks: u32, alpha: f64, statistic: InterimStatistic },
    FixedSample { n_per_arm: u32, alpha: f64, statistic: InterimStatistic },
    BackwardInduction(Arc<BinaryPolicyTable>),
}

impl MonitoringDesign {
    /// Predictive-probability monitoring with 10 looks over 100 per arm.
    pub fn standard_pp() -> Self {
        Self::PredictiveProbability { n_max_per_arm: 100, n_looks: 10, efficacy_threshold: 0.95, futility_threshold: 0.05, final_alpha: 0.025, statistic: InterimStatistic::PooledZ }
    }

    /// O'Brien–Fleming with 5 looks over 100 per arm.
    pub fn standard_obf() -> Self {
        Self::ObrienFleming { n_max_per_arm: 100, n_looks: 5, alpha: 0.025, statistic: InterimStatistic::PooledZ }
    }

    pub fn standard_fixed() -> Self {
        Self::FixedSample { n_per_arm: 100, alpha: 0.025, statistic: InterimStatistic::PooledZ }
    }

    /// Same design with a different interim statistic; no effect on
    /// backward induction.
    pub fn with_statistic(self, statistic: InterimStatistic) -> Self {
        match self {
            Self::PredictiveProbability { n_max_per_arm, n_looks, efficacy_threshold, futility_threshold, final_alpha, .. } => {
                Self::PredictiveProbability { n_max_per_arm, n_looks, efficacy_threshold, futility_threshold, final_alpha, statistic }
            }
            Self::ObrienFleming { n_max_per_arm, n_looks, alpha, .. } => Self::ObrienFleming { n_max_per_arm, n_looks, alpha, statistic },
            Self::FixedSample { n_per_arm, alpha, .. } => Self::FixedSample { n_per_arm, alpha, statistic },
            bi @ Self::BackwardInduction(_) => bi,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::PredictiveProbability { .. } => "predictive-probability".into(),
            Self::ObrienFleming { .. } => "obrien-fleming".into(),
            Self::FixedSample { .. } => "fixed-sample".into(),
            Self::BackwardInduction(t) => {
                if t.spec().calibrated {
                    "backward-induction-calibrated".into()
                } else {
                    "backward-induction".into()
                }
            }
        }
    }

    pub fn max_per_arm(&self) -> u32 {
        match self {
            Self::PredictiveProbability { n_max_per_arm, .. } | Self::ObrienFleming { n_max_per_arm, .. } => *n_max_per_arm,
            Self::FixedSample { n_per_arm, .. } => *n_per_arm,
            Self::BackwardInduction(t) => t.horizon(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, x: f64| {
            if x > 0.0 && x < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1), got {x}")))
            }
        };
        let looks = |n_max: u32, n_looks: u32| {
            if n_looks == 0 || n_max == 0 || n_max % n_looks != 0 {
                Err(Error::Config(format!("{n_looks} looks do not evenly divide {n_max} patients per arm")))
            } else {
                Ok(())
            }
        };
        match *self {
            Self::PredictiveProbability { n_max_per_arm, n_looks, efficacy_threshold, futility_threshold, final_alpha, .. } => {
                looks(n_max_per_arm, n_looks)?;
                prob("efficacy_threshold", efficacy_threshold)?;
                prob("futility_threshold", futility_threshold)?;
                prob("final_alpha", final_alpha)?;
                if efficacy_threshold <= futility_threshold {
                    return Err(Error::Config("efficacy threshold must exceed futility threshold".into()));
                }
                Ok(())
            }
            Self::ObrienFleming { n_max_per_arm, n_looks, alpha, .. } => {
                looks(n_max_per_arm, n_looks)?;
                prob("alpha", alpha)
            }
            Self::FixedSample { n_per_arm, alpha, .. } => {
                if n_per_arm == 0 {
                    return Err(Error::Config("n_per_arm must be positive".into()));
                }
                prob("alpha", alpha)
            }
            Self::BackwardInduction(ref t) => t.spec().validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub n_used_per_arm: u32,
    pub declared: bool,
}

/// Simulates one trial of `design` with true response rates `(p1, p0)`.
/// Outcomes are drawn one stage (one patient per arm) at a time.
pub fn run_design(design: &MonitoringDesign, p1: f64, p0: f64, rng: &mut RngStream) -> Result<TrialOutcome> {
    check_rate(p1)?;
    check_rate(p0)?;
    let draw = |rng: &mut RngStream| (rng.random::<f64>() < p1, rng.random::<f64>() < p0);
    match *design {
        MonitoringDesign::BackwardInduction(ref table) => {
            let out = table.evaluate_outcomes(std::iter::repeat_with(|| draw(rng)))?;
            Ok(TrialOutcome { n_used_per_arm: out.stop_stage, declared: out.declared })
        }
        MonitoringDesign::FixedSample { n_per_arm, alpha, statistic } => {
            let (mut s1, mut s0) = (0, 0);
            for _ in 0..n_per_arm {
                let (y1, y0) = draw(rng);
                s1 += y1 as u32;
                s0 += y0 as u32;
            }
            let declared = statistic.evaluate(s1, s0, n_per_arm).0 >= normal_quantile(1.0 - alpha)?;
            Ok(TrialOutcome { n_used_per_arm: n_per_arm, declared })
        }
        MonitoringDesign::ObrienFleming { n_max_per_arm, n_looks, alpha, statistic } => {
            let step = n_max_per_arm / n_looks;
            let (mut s1, mut s0) = (0, 0);
            for j in 1..=n_looks {
                for _ in 0..step {
                    let (y1, y0) = draw(rng);
                    s1 += y1 as u32;
                    s0 += y0 as u32;
                }
                let n = j * step;
                if statistic.evaluate(s1, s0, n).0 >= obf_boundary(alpha, j, n_looks)? {
                    return Ok(TrialOutcome { n_used_per_arm: n, declared: true });
                }
            }
            Ok(TrialOutcome { n_used_per_arm: n_max_per_arm, declared: false })
        }
        MonitoringDesign::PredictiveProbability { n_max_per_arm, n_looks, efficacy_threshold, futility_threshold, final_alpha, statistic } => {
            let step = n_max_per_arm / n_looks;
            let (mut s1, mut s0) = (0, 0);
            for j in 1..=n_looks {
                for _ in 0..step {
                    let (y1, y0) = draw(rng);
                    s1 += y1 as u32;
                    s0 += y0 as u32;
                }
                let snap = InterimSnapshot::new(statistic, j * step, s1, s0, n_max_per_arm);
                if j == n_looks {
                    return Ok(TrialOutcome { n_used_per_arm: snap.n_per_arm, declared: snap.p_one_sided <= final_alpha });
                }
                let pp = predictive_probability_z(snap.z, snap.info_fraction, final_alpha)?;
                if pp > efficacy_threshold {
                    return Ok(TrialOutcome { n_used_per_arm: snap.n_per_arm, declared: true });
                }
                if pp < futility_threshold {
                    return Ok(TrialOutcome { n_used_per_arm: snap.n_per_arm, declared: false });
                }
            }
            unreachable!("final look always returns")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::{solve, BinaryDesignSpec};
    use rand_distr::{Distribution, StandardNormal};

    fn t(s: u32, n: u32) -> Tally {
        Tally::new(s, n).unwrap()
    }

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    /// Thompson's binomial-coefficient sum for `Pr(p̃2 > p̃1)`.
    fn thompson_sum(r1: u64, n1: u64, r2: u64, n2: u64) -> f64 {
        let (s1, s2) = (n1 - r1, n2 - r2);
        let num: f64 = (0..=r2).map(|a| binom(r1 + r2 - a, r1) * binom(s1 + s2 + 1 + a, s1)).sum();
        num / binom(n1 + n2 + 2, n1 + 1)
    }

    #[test]
    fn thompson_examples() {
        assert_eq!(thompson_prob(t(0, 0), t(0, 0)), 0.5);
        assert!((thompson_prob(t(11, 11), t(0, 1)) - 90.0 / 91.0).abs() < 1e-14);
        assert!((thompson_sum(0, 1, 11, 11) - 90.0 / 91.0).abs() < 1e-14);
    }

    #[test]
    fn thompson_matches_literal_sum() {
        let mut rng = RngStream::new(10, 0);
        for _ in 0..100 {
            let n1 = rng.random_range(0..25u32);
            let n2 = rng.random_range(0..25u32);
            let r1 = rng.random_range(0..=n1);
            let r2 = rng.random_range(0..=n2);
            let lit = thompson_sum(r1 as u64, n1 as u64, r2 as u64, n2 as u64);
            let got = thompson_prob(t(r2, n2), t(r1, n1));
            assert!((lit - got).abs() < 1e-12, "{r1}/{n1} vs {r2}/{n2}: {lit} vs {got}");
        }
    }

    #[test]
    fn thompson_complement_is_exact() {
        let mut rng = RngStream::new(10, 1);
        for _ in 0..500 {
            let (n1, n2) = (rng.random_range(0..60u32), rng.random_range(0..60u32));
            let a = t(rng.random_range(0..=n1), n1);
            let b = t(rng.random_range(0..=n2), n2);
            assert_eq!(thompson_prob(a, b) + thompson_prob(b, a), 1.0);
        }
    }

    #[test]
    fn thall_wathen_limits() {
        let p = [0.6, 0.3, 0.1];
        assert_eq!(thall_wathen_alloc(&p, 0.0).unwrap(), vec![1.0 / 3.0; 3]);
        let id = thall_wathen_alloc(&p, 1.0).unwrap();
        for (a, b) in id.iter().zip(p) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(thall_wathen_alloc(&p, 1e6).unwrap(), vec![1.0, 0.0, 0.0]);
        let half = thall_wathen_alloc(&[0.8, 0.2], 0.5).unwrap();
        assert!((half[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(thall_wathen_alloc(&[0.5, 0.6], 1.0).is_err());
    }

    #[test]
    fn thompson_path_properties() {
        let mut rng = RngStream::new(4, 0);
        let trace = simulate_thompson_path(0.3, 0.3, 1, &mut rng).unwrap();
        assert_eq!(trace.len(), 1);
        let reps = 10_000;
        let mut mean_eq = 0.0;
        for r in 0..reps {
            let mut rng = RngStream::new(4, r);
            mean_eq += simulate_thompson_path(0.3, 0.3, 30, &mut rng).unwrap()[29];
        }
        mean_eq /= reps as f64;
        // per-path terminal proportions are bounded in [0,1]; sd ≤ 0.5
        assert!((mean_eq - 0.5).abs() < 4.0 * 0.5 / (reps as f64).sqrt(), "{mean_eq}");
        let mut mean = 0.0;
        for r in 0..300 {
            let mut rng = RngStream::new(5, r);
            mean += simulate_thompson_path(0.45, 0.30, 200, &mut rng).unwrap()[199];
        }
        assert!(mean / 300.0 > 0.5);
    }

    #[test]
    fn pp_formula_properties() {
        let a = 0.025;
        assert!((predictive_probability(0.2, 1e-9, a).unwrap() - 0.8).abs() < 1e-4);
        assert!(predictive_probability(0.01, 1.0 - 1e-6, a).unwrap() > 0.999);
        assert!(predictive_probability(0.05, 1.0 - 1e-6, a).unwrap() < 0.001);
        let mut prev = 1.0;
        for i in 1..100 {
            let pp = predictive_probability(i as f64 / 100.0, 0.4, a).unwrap();
            assert!(pp < prev);
            prev = pp;
        }
        assert!(predictive_probability(0.1, 1.0, a).is_err());
        assert!(predictive_probability(0.0, 0.5, a).is_err());
    }

    #[test]
    fn pp_matches_information_process_simulation() {
        // Flat prior on the drift θ of B(t) = θt + W(t): given B(r), the
        // final B(1) is Gaussian; success is B(1) > z_α.
        let (alpha, r, p_n) = (0.025f64, 0.25f64, 0.025f64);
        let z_a = normal_quantile(1.0 - alpha).unwrap();
        let z_r = normal_quantile(1.0 - p_n).unwrap();
        let b_r = z_r * r.sqrt();
        let mut rng = RngStream::new(12, 0);
        let n = 100_000;
        let mut hits = 0;
        for _ in 0..n {
            let e1: f64 = StandardNormal.sample(&mut rng);
            let e2: f64 = StandardNormal.sample(&mut rng);
            let theta = b_r / r + e1 / r.sqrt();
            let b1 = b_r + theta * (1.0 - r) + e2 * (1.0 - r).sqrt();
            hits += (b1 > z_a) as u32;
        }
        let sim = hits as f64 / n as f64;
        let formula = predictive_probability(p_n, r, alpha).unwrap();
        assert!((formula - normal_cdf(z_a * 0.5 / 0.75f64.sqrt())).abs() < 1e-12);
        assert!((sim - formula).abs() < 0.01, "{sim} vs {formula}");
    }

    #[test]
    fn obf_boundaries() {
        assert!((obf_boundary(0.025, 1, 5).unwrap() - 1.959964 * 5f64.sqrt()).abs() < 1e-5);
        assert!((obf_boundary(0.025, 1, 5).unwrap() - 4.383).abs() < 1e-3);
        assert_eq!(obf_boundary(0.025, 5, 5).unwrap(), normal_quantile(0.975).unwrap());
        assert!(obf_boundary(0.025, 0, 5).is_err());
    }

    #[test]
    fn pooled_z_degenerate() {
        assert_eq!(pooled_z(0, 0, 10), 0.0);
        assert_eq!(pooled_z(10, 10, 10), 0.0);
        assert_eq!(pooled_z(0, 0, 0), 0.0);
        assert!(pooled_z(8, 2, 10) > 2.0);
    }

    #[test]
    fn interim_statistics() {
        assert_eq!(unpooled_z(0, 0, 10), 0.0);
        assert_eq!(unpooled_z(10, 0, 10), 0.0);
        // pooled variance is never smaller than unpooled
        for (s1, s0) in [(6, 3), (9, 1), (4, 4), (2, 7)] {
            assert!(unpooled_z(s1, s0, 10).abs() >= pooled_z(s1, s0, 10).abs());
        }
        let (z, p) = InterimStatistic::Posterior.evaluate(11, 0, 11);
        assert!((1.0 - p - thompson_prob(t(11, 11), t(0, 11))).abs() < 1e-15);
        assert!((normal_cdf(-z) - p).abs() < 1e-12);
        let (z, p) = InterimStatistic::Posterior.evaluate(3, 3, 10);
        assert_eq!((z, p), (0.0, 0.5));
        let (z, p) = InterimStatistic::PooledZ.evaluate(7, 3, 10);
        assert_eq!(z, pooled_z(7, 3, 10));
        assert_eq!(p, normal_cdf(-z));
    }

    #[test]
    fn design_validation() {
        assert!(MonitoringDesign::standard_pp().validate().is_ok());
        let bad = MonitoringDesign::PredictiveProbability { n_max_per_arm: 100, n_looks: 7, efficacy_threshold: 0.95, futility_threshold: 0.05, final_alpha: 0.025, statistic: InterimStatistic::PooledZ };
        assert!(bad.validate().is_err());
        let swapped = MonitoringDesign::PredictiveProbability { n_max_per_arm: 100, n_looks: 10, efficacy_threshold: 0.05, futility_threshold: 0.95, final_alpha: 0.025, statistic: InterimStatistic::PooledZ };
        assert!(swapped.validate().is_err());
    }

    #[test]
    fn looks_respect_spacing_and_maximum() {
        let designs = [MonitoringDesign::standard_pp(), MonitoringDesign::standard_obf(), MonitoringDesign::standard_fixed()];
        for d in &designs {
            let step = match d {
                MonitoringDesign::PredictiveProbability { .. } => 10,
                MonitoringDesign::ObrienFleming { .. } => 20,
                _ => 100,
            };
            for r in 0..300 {
                let mut rng = RngStream::new(8, r);
                let out = run_design(d, 0.45, 0.3, &mut rng).unwrap();
                assert!(out.n_used_per_arm <= d.max_per_arm());
                assert_eq!(out.n_used_per_arm % step, 0);
            }
        }
    }

    #[test]
    fn extreme_separation_declares() {
        let spec = BinaryDesignSpec::new(BetaParams::uniform(), BetaParams::uniform(), 0.0005, 60, 0.975, true).unwrap();
        let bi = MonitoringDesign::BackwardInduction(Arc::new(solve(&spec).unwrap()));
        for d in [MonitoringDesign::standard_pp(), MonitoringDesign::standard_obf(), MonitoringDesign::standard_fixed(), bi] {
            let mut rng = RngStream::new(9, 0);
            assert!(run_design(&d, 1.0, 0.0, &mut rng).unwrap().declared, "{}", d.label());
        }
    }
}
