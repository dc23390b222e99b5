use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use seqtrial::binary::{stopping_region, BinaryState, PolicyExport};
use seqtrial::normal::simulate_normal_path;
use seqtrial::pg::{gibbs_chains, validate_pg_laplace, write_validation_csv, CentreData, GibbsConfig, BUNDLED_CENTRES_CSV};
use seqtrial::priors::{implied_delta_prior, DEFAULT_BINS};
use seqtrial::samplesize::{constancy_table, freq_n, goal_constant, DesignInputs};
use seqtrial::sim::{
    comparators, comparison_table, ecmo_study, power_frontier, scenarios, standard_binary_spec, write_frontier_csv, write_oc_csv, write_sensitivity_csv, DEFAULT_COST_GRID, DEFAULT_DELTAS, DEFAULT_P0,
    CALIBRATED_REPLICATIONS, DEFAULT_REPLICATIONS,
};
use seqtrial::{solve, solve_normal, BetaParams, BinaryDesignSpec, InterimStatistic, NormalDesignSpec, PolicyCache, RngStream};

use crate::args::*;
use crate::CliError;

fn create(dir: &Path, name: &str, comments: &[String]) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    let mut f = BufWriter::new(File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?);
    for c in comments {
        writeln!(f, "# {c}")?;
    }
    Ok(f)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut f = create(dir, name, &[])?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(path)
}

fn beta_or_uniform(b: Option<BetaArg>) -> Result<BetaParams, CliError> {
    b.map(BetaArg::params).unwrap_or(Ok(BetaParams::uniform()))
}

fn binary_spec(prior1: Option<BetaArg>, prior0: Option<BetaArg>, cost: Option<f64>, horizon: Option<u32>, gamma: Option<f64>, calibrated: Option<bool>) -> Result<BinaryDesignSpec, CliError> {
    let d = standard_binary_spec();
    let spec = BinaryDesignSpec::new(
        beta_or_uniform(prior1)?,
        beta_or_uniform(prior0)?,
        cost.unwrap_or(d.cost_per_stage),
        horizon.unwrap_or(d.horizon),
        gamma.unwrap_or(d.gamma),
        calibrated.unwrap_or(d.calibrated),
    )?;
    Ok(spec)
}

fn describe(spec: &BinaryDesignSpec) -> String {
    format!(
        "Beta({},{}) vs Beta({},{}), c={}, T={}, gamma={}, {}",
        spec.prior1.alpha(),
        spec.prior1.beta(),
        spec.prior0.alpha(),
        spec.prior0.beta(),
        spec.cost_per_stage,
        spec.horizon,
        spec.gamma,
        if spec.calibrated { "calibrated" } else { "uncalibrated" }
    )
}

#[derive(Serialize)]
struct BinarySummary {
    spec: BinaryDesignSpec,
    total_states: usize,
    value_at_origin: f64,
    continuation_at_origin: Option<f64>,
    action_at_origin: String,
}

pub fn design_binary(a: DesignBinaryArgs) -> Result<(), CliError> {
    let spec = binary_spec(a.prior1, a.prior0, a.cost, a.horizon, a.gamma, a.calibrated)?;
    let out = a.out_dir();
    let table = solve(&spec)?;
    let origin = BinaryState::origin();
    write_json(&out, "policy.json", &PolicyExport::from_table(&table))?;
    let mut f = create(&out, "region.csv", &[format!("binary stopping region in posterior-mean difference: {}", describe(&spec))])?;
    stopping_region(&table).write_csv(&mut f)?;
    f.flush()?;
    let summary = BinarySummary {
        spec: spec.clone(),
        total_states: table.num_states(),
        value_at_origin: table.value(origin),
        continuation_at_origin: table.continuation_value(origin),
        action_at_origin: format!("{:?}", table.action(origin)),
    };
    write_json(&out, "summary.json", &summary)?;
    println!("solved {} states; V(0,0,0) = {:.6}; action at origin: {}", summary.total_states, summary.value_at_origin, summary.action_at_origin);
    Ok(())
}

pub fn design_normal(a: DesignNormalArgs) -> Result<(), CliError> {
    let d = NormalDesignSpec::default();
    let spec = NormalDesignSpec {
        sigma2: a.sigma2.unwrap_or(d.sigma2),
        sigma0_2: a.sigma0_2.unwrap_or(d.sigma0_2),
        cost: a.cost.unwrap_or(d.cost),
        horizon: a.horizon.unwrap_or(d.horizon),
        grid_min: a.grid_min.unwrap_or(d.grid_min),
        grid_max: a.grid_max.unwrap_or(d.grid_max),
        grid_points: a.grid_points.unwrap_or(d.grid_points),
    };
    spec.validate()?;
    let out = a.out_dir();
    let policy = solve_normal(&spec)?;
    let header = format!("normal-model stopping boundaries for the posterior mean: sigma2={}, sigma0_2={}, c={}, T={}, G={}", spec.sigma2, spec.sigma0_2, spec.cost, spec.horizon, spec.grid_points);
    let mut f = create(&out, "boundaries.csv", &[header])?;
    policy.write_boundaries_csv(&mut f)?;
    f.flush()?;
    let root = RngStream::new(a.seed(), 0);
    for (i, theta) in a.theta.clone().unwrap_or_default().into_iter().enumerate() {
        let path = simulate_normal_path(&policy, theta, &mut root.substream(i as u64))?;
        let mut f = create(&out, &format!("path_{}.csv", i + 1), &[format!("posterior-mean path at theta={theta}, stopped at n={} for {:?}", path.stop_stage, path.decision)])?;
        path.write_csv(&mut f)?;
        f.flush()?;
        println!("theta={theta}: stop at n={} ({:?})", path.stop_stage, path.decision);
    }
    write_json(&out, "summary.json", &serde_json::json!({ "spec": spec, "value_at_origin": policy.value_at(0, 0.0), "action_at_origin": format!("{:?}", policy.action_at(0, 0.0)) }))?;
    println!("V0(0) = {:.6}", policy.value_at(0, 0.0));
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let spec = binary_spec(a.prior1, a.prior0, a.cost, a.horizon, a.gamma, a.calibrated)?;
    let pp = a.pp_statistic.unwrap_or(InterimStatistic::PooledZ);
    let gs = a.gs_statistic.unwrap_or(InterimStatistic::PooledZ);
    let p0 = a.p0.unwrap_or(DEFAULT_P0);
    let deltas = a.deltas.clone().unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
    let reps = a.reps.unwrap_or(DEFAULT_REPLICATIONS);
    let scen = scenarios(p0, &deltas, reps, a.seed())?;
    let rows = comparison_table(&spec, &comparators(pp, gs), &scen, &PolicyCache::new())?;
    let out = a.out_dir();
    let comments = [
        "operating characteristics: backward induction, predictive probability, O'Brien-Fleming, fixed sample".to_string(),
        format!("backward induction: {}", describe(&spec)),
        format!("interim statistics: predictive probability {pp:?}, z-test designs {gs:?}; reps={reps}, seed={}", a.seed()),
    ];
    let refs: Vec<&str> = comments.iter().map(String::as_str).collect();
    let mut f = create(&out, "oc.csv", &[])?;
    write_oc_csv(&mut f, &rows, &refs)?;
    f.flush()?;
    for r in &rows {
        println!("{:<22} delta={:.2}  E[N]={:>6.2}  declare={:.3}", r.design_label, r.delta(), r.expected_n_per_arm, r.declare_rate);
    }
    Ok(())
}

pub fn frontier(a: FrontierArgs) -> Result<(), CliError> {
    let base = binary_spec(a.prior1, a.prior0, None, a.horizon, a.gamma, Some(true))?;
    let costs = a.costs.clone().unwrap_or_else(|| DEFAULT_COST_GRID.to_vec());
    let deltas = a.deltas.clone().unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
    let reps = a.reps.unwrap_or(CALIBRATED_REPLICATIONS);
    let scen = scenarios(a.p0.unwrap_or(DEFAULT_P0), &deltas, reps, a.seed())?;
    let rows = power_frontier(&base, &costs, &scen, &PolicyCache::new())?;
    let comments = [format!("power frontier of calibrated backward induction over per-stage cost; reps={reps}, seed={}", a.seed())];
    let refs: Vec<&str> = comments.iter().map(String::as_str).collect();
    let mut f = create(&a.out_dir(), "frontier.csv", &[])?;
    write_frontier_csv(&mut f, &rows, &refs)?;
    f.flush()?;
    for r in &rows {
        println!("c={:<8} delta={:.2}  E[N]={:>6.2}  power={:.3}", r.cost, r.delta, r.expected_n, r.power);
    }
    Ok(())
}

pub fn prior_sensitivity(a: PriorSensitivityArgs) -> Result<(), CliError> {
    let priors: Vec<BetaParams> = match &a.prior {
        Some(list) if !list.is_empty() => list.iter().map(|b| b.params()).collect::<Result<_, _>>()?,
        _ => vec![BetaParams::uniform(), BetaParams::jeffreys(), BetaParams::new(3.0, 7.0)?],
    };
    let base = binary_spec(None, None, a.cost, a.horizon, a.gamma, Some(true))?;
    let deltas = a.deltas.clone().unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
    let reps = a.reps.unwrap_or(CALIBRATED_REPLICATIONS);
    let scen = scenarios(a.p0.unwrap_or(DEFAULT_P0), &deltas, reps, a.seed())?;
    let rows = seqtrial::sim::prior_sensitivity(&priors, &base, &scen, &PolicyCache::new())?;
    let comments = [format!("calibrated backward induction under symmetric priors: {}; reps={reps}, seed={}", describe(&base), a.seed())];
    let refs: Vec<&str> = comments.iter().map(String::as_str).collect();
    let mut f = create(&a.out_dir(), "sensitivity.csv", &[])?;
    write_sensitivity_csv(&mut f, &rows, &refs)?;
    f.flush()?;
    for r in &rows {
        println!("Beta({},{}) delta={:.2}  E[N]={:>6.2}  power={:.3}", r.prior_alpha, r.prior_beta, r.delta, r.expected_n, r.power);
    }
    Ok(())
}

pub fn pg_validate(a: PgValidateArgs) -> Result<(), CliError> {
    let ns = a.ns.clone().unwrap_or_else(|| vec![10, 50, 200]);
    let deltas = a.deltas.clone().unwrap_or_else(|| vec![0.0, 0.15, 0.25]);
    let datasets = a.datasets.unwrap_or(50);
    let rows = validate_pg_laplace(&ns, &deltas, a.p0.unwrap_or(DEFAULT_P0), datasets, &RngStream::new(a.seed(), 0))?;
    let f = create(&a.out_dir(), "pg_validation.csv", &[format!("seed={}", a.seed())])?;
    write_validation_csv(&rows, f)?;
    for r in &rows {
        println!("n={:<4} delta={:.2}  mean|err|={:.4}  max|err|={:.4}", r.n, r.delta, r.mean_abs_error, r.max_abs_error);
    }
    Ok(())
}

pub fn ecmo(a: EcmoArgs) -> Result<(), CliError> {
    let reps = a.reps.unwrap_or(DEFAULT_REPLICATIONS);
    if reps == 0 {
        return Err(CliError::Config("reps must be positive".into()));
    }
    let report = ecmo_study(reps, a.seed(), &PolicyCache::new())?;
    let path = write_json(&a.out_dir(), "ecmo.json", &report)?;
    let p = &report.posteriors;
    println!("Pr(p1 > p0 | 11/11 vs 0/1) = {:.6} (90/91 = {:.6})", p.prob_superior, 90.0 / 91.0);
    println!("informative control mean = {:.4}, Pr(p1 > p0) = {:.6}", p.informative_control_mean, p.informative_prob_superior);
    for oc in &report.operating_characteristics {
        println!("p1={:.1} p0={:.1}  E[N]={:.2}  median stop={}  declare={:.3}", oc.p1, oc.p0, oc.expected_n_per_arm, oc.median_stop_stage, oc.declare_rate);
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn samplesize(a: SamplesizeArgs) -> Result<(), CliError> {
    let inputs = DesignInputs::new(a.alpha.unwrap_or(0.05), a.beta.unwrap_or(0.10), a.sigma.unwrap_or(1.0), a.delta.unwrap_or(0.10), a.pi0.unwrap_or(0.5), a.k.unwrap_or(1.0))?;
    let n = freq_n(&inputs)?;
    let constant = goal_constant(&inputs.rates())?;
    let out = a.out_dir();
    write_json(&out, "samplesize.json", &serde_json::json!({ "inputs": inputs, "n_real": n.n_real, "n": n.n_ceil, "goal_constant": constant }))?;
    if a.constancy.unwrap_or(false) {
        let deltas: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        let rows = constancy_table(&inputs.rates(), &deltas, &[0.5, 1.0, 5.0])?;
        let mut f = create(&out, "constancy.csv", &[format!("goal G_B at the classical sample size; alpha={}, beta={}, pi0={}, K={}", inputs.alpha, inputs.beta, inputs.pi0, inputs.k)])?;
        writeln!(f, "delta,sigma,n_real,n_ceil,goal")?;
        for r in rows {
            writeln!(f, "{},{},{:.6},{},{:.12}", r.delta, r.sigma, r.n_real, r.n_ceil, r.goal)?;
        }
        f.flush()?;
    }
    println!("n={} (n_real={:.3})", n.n_ceil, n.n_real);
    println!("r*={constant:.3}");
    Ok(())
}

#[derive(Serialize)]
struct ChainSummary {
    chain: usize,
    draws: usize,
    prob_mu1_gt_mu2: f64,
    mean_mu1: f64,
    mean_mu2: f64,
    interval90_mu1: (f64, f64),
    interval90_mu2: (f64, f64),
}

pub fn gibbs(a: GibbsArgs) -> Result<(), CliError> {
    let data = match &a.data {
        Some(path) => CentreData::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => CentreData::from_csv(BUNDLED_CENTRES_CSV.as_bytes())?,
    };
    let d = GibbsConfig::default();
    let iw_scale = match &a.iw_scale {
        None => d.iw_scale,
        Some(v) if v.len() == 4 => [[v[0], v[1]], [v[2], v[3]]],
        Some(v) => return Err(CliError::Config(format!("iw_scale needs 4 values, got {}", v.len()))),
    };
    let cfg = GibbsConfig { iw_df: a.iw_df.unwrap_or(d.iw_df), iw_scale, n_burn: a.burn.unwrap_or(d.n_burn), n_keep: a.keep.unwrap_or(d.n_keep), thin: a.thin.unwrap_or(d.thin), seed: a.seed() };
    cfg.validate(data.len())?;
    let n_chains = a.chains.unwrap_or(1);
    if n_chains == 0 {
        return Err(CliError::Config("chains must be positive".into()));
    }
    let chains = gibbs_chains(&data, &cfg, n_chains)?;
    let out = a.out_dir();
    let mut summaries = Vec::new();
    for (i, chain) in chains.iter().enumerate() {
        let name = if n_chains == 1 { "chain.csv".to_string() } else { format!("chain_{}.csv", i + 1) };
        let mut f = create(&out, &name, &[])?;
        chain.write_csv(&mut f)?;
        f.flush()?;
        let k = chain.draws.len() as f64;
        summaries.push(ChainSummary {
            chain: i + 1,
            draws: chain.draws.len(),
            prob_mu1_gt_mu2: chain.prob_mu1_gt_mu2,
            mean_mu1: chain.draws.iter().map(|d| d.mu[0]).sum::<f64>() / k,
            mean_mu2: chain.draws.iter().map(|d| d.mu[1]).sum::<f64>() / k,
            interval90_mu1: chain.mu_interval(0, 0.9),
            interval90_mu2: chain.mu_interval(1, 0.9),
        });
    }
    let pooled = summaries.iter().map(|s| s.prob_mu1_gt_mu2).sum::<f64>() / summaries.len() as f64;
    write_json(&out, "gibbs.json", &serde_json::json!({ "config": cfg, "centres": data.len(), "prob_mu1_gt_mu2": pooled, "chains": summaries }))?;
    println!("{} centres, {} chain(s) x {} draws; Pr(mu1 > mu2 | data) = {:.4}", data.len(), n_chains, cfg.n_keep, pooled);
    Ok(())
}

pub fn implied_prior(a: ImpliedPriorArgs) -> Result<(), CliError> {
    let (p1, p0) = (beta_or_uniform(a.prior1)?, beta_or_uniform(a.prior0)?);
    let hist = implied_delta_prior(&p1, &p0, a.draws.unwrap_or(1_000_000), a.bins.unwrap_or(DEFAULT_BINS), &mut RngStream::new(a.seed(), 0))?;
    let header = format!("implied prior on p1 - p0 from Beta({},{}) and Beta({},{})", p1.alpha(), p1.beta(), p0.alpha(), p0.beta());
    let mut f = create(&a.out_dir(), "implied_prior.csv", &[header])?;
    hist.write_csv(&mut f)?;
    f.flush()?;
    println!("Pr(|delta| < 0.1) = {:.4}; Pr(delta > 0) = {:.4}", hist.mass_between(-0.1, 0.1), hist.mass_between(0.0, 1.0));
    Ok(())
}
