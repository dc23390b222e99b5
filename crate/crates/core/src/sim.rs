//! Operating characteristics by seeded, replication-parallel simulation.
//!
//! Replication `r` of a scenario always draws from stream `r` of the
//! scenario's root seed, and results are collected in replication order
//! before summing, so output is independent of the thread schedule.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binary::{solve, BinaryDesignSpec, BinaryPolicyTable};
use crate::dist::{prob_superior_exact, BetaParams, RngStream};
use crate::error::{Error, Result};
use crate::monitor::{run_design, InterimStatistic, MonitoringDesign, TrialOutcome};

pub const DEFAULT_REPLICATIONS: usize = 10_000;
pub const CALIBRATED_REPLICATIONS: usize = 5_000;
pub const DEFAULT_COST_GRID: [f64; 7] = [1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2];
pub const DEFAULT_DELTAS: [f64; 4] = [0.0, 0.05, 0.15, 0.25];
pub const DEFAULT_P0: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub p0: f64,
    pub p1: f64,
    pub n_replications: usize,
    pub root_seed: u64,
}

impl Scenario {
    pub fn new(p0: f64, p1: f64, n_replications: usize, root_seed: u64) -> Result<Self> {
        let s = Self { p0, p1, n_replications, root_seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.p0, self.p1] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("response rate {p} outside [0, 1]")));
            }
        }
        if self.n_replications == 0 {
            return Err(Error::Config("n_replications must be positive".into()));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        self.p1 - self.p0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingCharacteristics {
    pub design_label: String,
    pub p0: f64,
    pub p1: f64,
    pub replications: usize,
    pub expected_n_per_arm: f64,
    pub se_expected_n: f64,
    pub declare_rate: f64,
    pub mc_se_declare: f64,
    pub median_stop_stage: f64,
}

impl OperatingCharacteristics {
    pub fn delta(&self) -> f64 {
        self.p1 - self.p0
    }
}

/// Per-replication outcomes in replication order.
pub fn replicate(design: &MonitoringDesign, scenario: &Scenario) -> Result<Vec<TrialOutcome>> {
    design.validate()?;
    scenario.validate()?;
    (0..scenario.n_replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(scenario.root_seed, r);
            run_design(design, scenario.p1, scenario.p0, &mut rng)
        })
        .collect()
}

pub fn summarise(label: &str, scenario: &Scenario, outcomes: &[TrialOutcome]) -> OperatingCharacteristics {
    let reps = outcomes.len() as f64;
    let n: Vec<f64> = outcomes.iter().map(|o| o.n_used_per_arm as f64).collect();
    let mean_n = n.iter().sum::<f64>() / reps;
    let var_n = n.iter().map(|x| (x - mean_n).powi(2)).sum::<f64>() / (reps - 1.0).max(1.0);
    let declare = outcomes.iter().filter(|o| o.declared).count() as f64 / reps;
    OperatingCharacteristics {
        design_label: label.to_string(),
        p0: scenario.p0,
        p1: scenario.p1,
        replications: outcomes.len(),
        expected_n_per_arm: mean_n,
        se_expected_n: (var_n / reps).sqrt(),
        declare_rate: declare,
        mc_se_declare: (declare * (1.0 - declare) / reps).sqrt(),
        median_stop_stage: median(n),
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

pub fn run_oc(design: &MonitoringDesign, scenario: &Scenario) -> Result<OperatingCharacteristics> {
    let outcomes = replicate(design, scenario)?;
    Ok(summarise(&design.label(), scenario, &outcomes))
}

/// Solved binary policies keyed by their serialised spec.
#[derive(Debug, Default)]
pub struct PolicyCache {
    tables: Mutex<HashMap<String, Arc<BinaryPolicyTable>>>,
}

impl PolicyCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_solve(&self, spec: &BinaryDesignSpec) -> Result<Arc<BinaryPolicyTable>> {
        let key = serde_json::to_string(spec)?;
        if let Some(t) = self.tables.lock().expect("policy cache").get(&key) {
            return Ok(Arc::clone(t));
        }
        log::info!("solving binary policy: {key}");
        let table = Arc::new(solve(spec)?);
        self.tables.lock().expect("policy cache").insert(key, Arc::clone(&table));
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.tables.lock().expect("policy cache").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Uncalibrated design with uniform priors, `c = 0.0005`, `T = 200`, `γ = 0.975`.
pub fn standard_binary_spec() -> BinaryDesignSpec {
    BinaryDesignSpec { prior1: BetaParams::uniform(), prior0: BetaParams::uniform(), cost_per_stage: 0.0005, horizon: 200, gamma: 0.975, calibrated: false }
}

pub fn standard_calibrated_spec() -> BinaryDesignSpec {
    BinaryDesignSpec { calibrated: true, ..standard_binary_spec() }
}

pub fn scenarios(p0: f64, deltas: &[f64], reps: usize, seed: u64) -> Result<Vec<Scenario>> {
    deltas.iter().map(|d| Scenario::new(p0, p0 + d, reps, seed)).collect()
}

/// Predictive-probability, O'Brien–Fleming and fixed-sample designs over
/// 100 patients per arm. `pp` drives the predictive-probability looks and
/// `gs` the two z-test designs.
pub fn comparators(pp: InterimStatistic, gs: InterimStatistic) -> Vec<MonitoringDesign> {
    vec![
        MonitoringDesign::standard_pp().with_statistic(pp),
        MonitoringDesign::standard_obf().with_statistic(gs),
        MonitoringDesign::standard_fixed().with_statistic(gs),
    ]
}

/// Backward induction followed by `comparators`, for every scenario.
pub fn comparison_table(spec: &BinaryDesignSpec, comparators: &[MonitoringDesign], scenarios: &[Scenario], cache: &PolicyCache) -> Result<Vec<OperatingCharacteristics>> {
    let mut designs = vec![MonitoringDesign::BackwardInduction(cache.get_or_solve(spec)?)];
    designs.extend(comparators.iter().cloned());
    let mut rows = Vec::new();
    for s in scenarios {
        for d in &designs {
            rows.push(run_oc(d, s)?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierRow {
    pub cost: f64,
    pub delta: f64,
    pub expected_n: f64,
    pub se_expected_n: f64,
    pub power: f64,
    pub mc_se: f64,
}

/// Solves the calibrated design at each cost and runs every scenario.
pub fn power_frontier(base: &BinaryDesignSpec, costs: &[f64], scenarios: &[Scenario], cache: &PolicyCache) -> Result<Vec<FrontierRow>> {
    let mut rows = Vec::new();
    for &cost in costs {
        if !(1e-4..=1e-2).contains(&cost) {
            log::warn!("cost {cost} lies outside the usual frontier range [1e-4, 1e-2]");
        }
        let spec = BinaryDesignSpec { cost_per_stage: cost, calibrated: true, ..base.clone() };
        let design = MonitoringDesign::BackwardInduction(cache.get_or_solve(&spec)?);
        for s in scenarios {
            let oc = run_oc(&design, s)?;
            rows.push(FrontierRow { cost, delta: s.delta(), expected_n: oc.expected_n_per_arm, se_expected_n: oc.se_expected_n, power: oc.declare_rate, mc_se: oc.mc_se_declare });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub prior_alpha: f64,
    pub prior_beta: f64,
    pub delta: f64,
    pub expected_n: f64,
    pub power: f64,
    pub mc_se: f64,
}

/// Calibrated design under each symmetric prior (same Beta on both arms).
pub fn prior_sensitivity(priors: &[BetaParams], base: &BinaryDesignSpec, scenarios: &[Scenario], cache: &PolicyCache) -> Result<Vec<SensitivityRow>> {
    let mut rows = Vec::new();
    for prior in priors {
        let spec = BinaryDesignSpec { prior1: *prior, prior0: *prior, ..base.clone() };
        let design = MonitoringDesign::BackwardInduction(cache.get_or_solve(&spec)?);
        for s in scenarios {
            let oc = run_oc(&design, s)?;
            rows.push(SensitivityRow { prior_alpha: prior.alpha(), prior_beta: prior.beta(), delta: s.delta(), expected_n: oc.expected_n_per_arm, power: oc.declare_rate, mc_se: oc.mc_se_declare });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcmoPosteriors {
    /// Treatment 11/11, control 0/1, uniform priors.
    pub treatment_mean: f64,
    pub control_mean: f64,
    pub prob_superior: f64,
    /// Control prior Beta(4,16) updated with 0/1.
    pub informative_control_mean: f64,
    pub informative_prob_superior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcmoReport {
    pub posteriors: EcmoPosteriors,
    pub design: BinaryDesignSpec,
    pub operating_characteristics: Vec<OperatingCharacteristics>,
}

pub fn ecmo_posteriors() -> Result<EcmoPosteriors> {
    let trt = BetaParams::uniform().update(11, 11);
    let ctl = BetaParams::uniform().update(0, 1);
    let informative = BetaParams::new(4.0, 16.0)?.update(0, 1);
    Ok(EcmoPosteriors {
        treatment_mean: trt.mean(),
        control_mean: ctl.mean(),
        prob_superior: prob_superior_exact(&trt, &ctl)?,
        informative_control_mean: informative.mean(),
        informative_prob_superior: prob_superior_exact(&trt, &informative)?,
    })
}

/// Calibrated design with a historical-control prior.
pub fn ecmo_spec() -> BinaryDesignSpec {
    BinaryDesignSpec {
        prior1: BetaParams::uniform(),
        prior0: BetaParams::new(4.0, 16.0).expect("valid"),
        cost_per_stage: 0.001,
        horizon: 100,
        gamma: 0.975,
        calibrated: true,
    }
}

/// Treatment rates of the large-effect, moderate and null scenarios, control at 0.2.
pub const ECMO_SCENARIOS: [(f64, f64); 3] = [(0.8, 0.2), (0.5, 0.2), (0.2, 0.2)];

pub fn ecmo_study(reps: usize, seed: u64, cache: &PolicyCache) -> Result<EcmoReport> {
    let spec = ecmo_spec();
    let design = MonitoringDesign::BackwardInduction(cache.get_or_solve(&spec)?);
    let operating_characteristics = ECMO_SCENARIOS
        .iter()
        .map(|&(p1, p0)| run_oc(&design, &Scenario::new(p0, p1, reps, seed)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(EcmoReport { posteriors: ecmo_posteriors()?, design: spec, operating_characteristics })
}

fn write_comments<W: Write>(out: &mut W, comments: &[&str]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    Ok(())
}

pub fn write_oc_csv<W: Write>(mut out: W, rows: &[OperatingCharacteristics], comments: &[&str]) -> Result<()> {
    write_comments(&mut out, comments)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["design", "p0", "p1", "delta", "reps", "expected_n", "declare_rate", "mc_se", "median_stop"])?;
    for r in rows {
        w.write_record([
            r.design_label.clone(),
            format!("{:.4}", r.p0),
            format!("{:.4}", r.p1),
            format!("{:.4}", r.delta()),
            r.replications.to_string(),
            format!("{:.4}", r.expected_n_per_arm),
            format!("{:.5}", r.declare_rate),
            format!("{:.5}", r.mc_se_declare),
            format!("{}", r.median_stop_stage),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_frontier_csv<W: Write>(mut out: W, rows: &[FrontierRow], comments: &[&str]) -> Result<()> {
    write_comments(&mut out, comments)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cost", "delta", "expected_n", "power"])?;
    for r in rows {
        w.write_record([format!("{}", r.cost), format!("{:.4}", r.delta), format!("{:.4}", r.expected_n), format!("{:.5}", r.power)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sensitivity_csv<W: Write>(mut out: W, rows: &[SensitivityRow], comments: &[&str]) -> Result<()> {
    write_comments(&mut out, comments)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["prior_alpha", "prior_beta", "delta", "expected_n", "power", "mc_se"])?;
    for r in rows {
        w.write_record([
            format!("{}", r.prior_alpha),
            format!("{}", r.prior_beta),
            format!("{:.4}", r.delta),
            format!("{:.4}", r.expected_n),
            format!("{:.5}", r.power),
            format!("{:.5}", r.mc_se),
        ])?;
    }
    w.flush()?;
    Ok(())
}
