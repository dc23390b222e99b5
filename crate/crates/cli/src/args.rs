//! Subcommand arguments. Every parameter is optional on the command line and
//! in the config file; flags override the file, and missing values fall back
//! to the module defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use seqtrial::{BetaParams, InterimStatistic};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "seqtrial", version, about = "Bayesian sequential design for two-arm trials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the binary backward-induction design and export the policy.
    DesignBinary(DesignBinaryArgs),
    /// Solve the normal-outcome design on a grid and export its boundaries.
    DesignNormal(DesignNormalArgs),
    /// Operating characteristics of backward induction and three comparators.
    Simulate(SimulateArgs),
    /// Expected sample size and power of the calibrated design across costs.
    Frontier(FrontierArgs),
    /// Calibrated design under several symmetric Beta priors.
    PriorSensitivity(PriorSensitivityArgs),
    /// Accuracy of the PG-Laplace superiority probability on random data.
    PgValidate(PgValidateArgs),
    /// Posterior summaries and the historical-prior design for the ECMO data.
    Ecmo(EcmoArgs),
    /// Classical sample size and its Bayesian goal constant.
    Samplesize(SamplesizeArgs),
    /// Hierarchical multi-centre Gibbs sampler.
    Gibbs(GibbsArgs),
    /// Prior on the treatment effect implied by two Beta priors.
    ImpliedPrior(ImpliedPriorArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::DesignBinary(_) => "design-binary",
            Command::DesignNormal(_) => "design-normal",
            Command::Simulate(_) => "simulate",
            Command::Frontier(_) => "frontier",
            Command::PriorSensitivity(_) => "prior-sensitivity",
            Command::PgValidate(_) => "pg-validate",
            Command::Ecmo(_) => "ecmo",
            Command::Samplesize(_) => "samplesize",
            Command::Gibbs(_) => "gibbs",
            Command::ImpliedPrior(_) => "implied-prior",
        }
    }
}

/// `Beta(a, b)` written `a,b` on the command line and `[a, b]` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaArg(pub f64, pub f64);

impl FromStr for BetaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(format!("expected `a,b`, got `{s}`"));
        }
        let a = parts[0].parse::<f64>().map_err(|e| format!("{}: {e}", parts[0]))?;
        let b = parts[1].parse::<f64>().map_err(|e| format!("{}: {e}", parts[1]))?;
        Ok(BetaArg(a, b))
    }
}

impl fmt::Display for BetaArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}

impl BetaArg {
    pub fn params(self) -> Result<BetaParams, CliError> {
        BetaParams::new(self.0, self.1).map_err(CliError::from)
    }
}

fn parse_statistic(s: &str) -> Result<InterimStatistic, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown statistic `{s}` (pooled-z, unpooled-z, posterior)"))
}

/// Defines a subcommand's argument struct with the shared `--config`,
/// `--out`, `--seed` and `--threads` options, and `merge_over` which keeps
/// flag values and fills the rest from a config file.
macro_rules! command_args {
    ($name:ident { $( $(#[$m:meta])* $field:ident : $ty:ty ),* $(,)? }) => {
        #[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            /// JSON config with a "command" field; flags override its values.
            #[arg(long, value_name = "FILE")]
            #[serde(skip)]
            pub config: Option<PathBuf>,
            #[arg(skip)]
            #[serde(default, skip_serializing)]
            pub command: Option<String>,
            /// Output directory (created if missing) [default: .].
            #[arg(long, value_name = "DIR")]
            pub out: Option<PathBuf>,
            /// Root seed for every random stream [default: 2025].
            #[arg(long)]
            pub seed: Option<u64>,
            /// Worker threads; falls back to SEQTRIAL_THREADS, then all cores.
            #[arg(long)]
            pub threads: Option<usize>,
            $(
                $(#[$m])*
                #[arg(long)]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            pub fn merge_over(self, file: Self) -> Self {
                Self {
                    config: self.config,
                    command: file.command,
                    out: self.out.or(file.out),
                    seed: self.seed.or(file.seed),
                    threads: self.threads.or(file.threads),
                    $( $field: self.$field.or(file.$field), )*
                }
            }
        }

        impl CommonArgs for $name {
            fn config(&self) -> Option<&Path> {
                self.config.as_deref()
            }
            fn file_command(&self) -> Option<&str> {
                self.command.as_deref()
            }
            fn out_dir(&self) -> PathBuf {
                self.out.clone().unwrap_or_else(|| PathBuf::from("."))
            }
            fn seed(&self) -> u64 {
                self.seed.unwrap_or(DEFAULT_SEED)
            }
            fn threads(&self) -> Option<usize> {
                self.threads
            }
        }
    };
}

pub const DEFAULT_SEED: u64 = 2025;

pub trait CommonArgs {
    fn config(&self) -> Option<&Path>;
    fn file_command(&self) -> Option<&str>;
    fn out_dir(&self) -> PathBuf;
    fn seed(&self) -> u64;
    fn threads(&self) -> Option<usize>;
}

command_args!(DesignBinaryArgs {
    /// Treatment prior Beta(a,b), as `a,b` [default: 1,1].
    prior1: BetaArg,
    /// Control prior Beta(a,b), as `a,b` [default: 1,1].
    prior0: BetaArg,
    /// Loss per stage (one patient per arm), in units of response rate [default: 0.0005].
    cost: f64,
    /// Maximum number of stages (patients per arm) [default: 200].
    horizon: u32,
    /// Posterior-probability threshold for declaring treatment superior [default: 0.975].
    gamma: f64,
    /// Gate the terminal reward on the declaration threshold (true|false) [default: false].
    calibrated: bool,
});

command_args!(DesignNormalArgs {
    /// Observation variance sigma^2 (outcome units squared) [default: 4].
    sigma2: f64,
    /// Prior variance of the mean difference (outcome units squared) [default: 1].
    sigma0_2: f64,
    /// Loss per patient, in outcome units [default: 0.005].
    cost: f64,
    /// Maximum number of patients [default: 50].
    horizon: u32,
    /// Lower end of the posterior-mean grid (outcome units) [default: -6].
    grid_min: f64,
    /// Upper end of the posterior-mean grid (outcome units) [default: 6].
    grid_max: f64,
    /// Number of grid points [default: 4001].
    grid_points: usize,
    /// True effects for which to simulate a sample path (outcome units, comma-separated).
    #[arg(value_delimiter = ',')]
    theta: Vec<f64>,
});

command_args!(SimulateArgs {
    /// Treatment prior Beta(a,b) for backward induction [default: 1,1].
    prior1: BetaArg,
    /// Control prior Beta(a,b) for backward induction [default: 1,1].
    prior0: BetaArg,
    /// Backward-induction loss per stage [default: 0.0005].
    cost: f64,
    /// Backward-induction horizon, stages [default: 200].
    horizon: u32,
    /// Declaration threshold [default: 0.975].
    gamma: f64,
    /// Use the calibrated terminal reward (true|false) [default: false].
    calibrated: bool,
    /// Control response rate, probability [default: 0.30].
    p0: f64,
    /// Treatment effects p1 - p0, comma-separated probabilities [default: 0,0.05,0.15,0.25].
    #[arg(value_delimiter = ',')]
    deltas: Vec<f64>,
    /// Replications per scenario [default: 10000].
    reps: usize,
    /// Interim statistic of the predictive-probability design [default: pooled-z].
    #[arg(value_parser = parse_statistic)]
    pp_statistic: InterimStatistic,
    /// Interim statistic of the O'Brien-Fleming and fixed-sample designs [default: pooled-z].
    #[arg(value_parser = parse_statistic)]
    gs_statistic: InterimStatistic,
});

command_args!(FrontierArgs {
    /// Treatment prior Beta(a,b) [default: 1,1].
    prior1: BetaArg,
    /// Control prior Beta(a,b) [default: 1,1].
    prior0: BetaArg,
    /// Per-stage costs, comma-separated [default: 1e-4,2e-4,5e-4,1e-3,2e-3,5e-3,1e-2].
    #[arg(value_delimiter = ',')]
    costs: Vec<f64>,
    /// Horizon, stages [default: 200].
    horizon: u32,
    /// Declaration threshold [default: 0.975].
    gamma: f64,
    /// Control response rate, probability [default: 0.30].
    p0: f64,
    /// Treatment effects, comma-separated probabilities [default: 0,0.05,0.15,0.25].
    #[arg(value_delimiter = ',')]
    deltas: Vec<f64>,
    /// Replications per scenario [default: 5000].
    reps: usize,
});

command_args!(PriorSensitivityArgs {
    /// Symmetric prior Beta(a,b) as `a,b`; repeat for several [default: 1,1 0.5,0.5 3,7].
    prior: Vec<BetaArg>,
    /// Per-stage cost [default: 0.0005].
    cost: f64,
    /// Horizon, stages [default: 200].
    horizon: u32,
    /// Declaration threshold [default: 0.975].
    gamma: f64,
    /// Control response rate, probability [default: 0.30].
    p0: f64,
    /// Treatment effects, comma-separated probabilities [default: 0,0.05,0.15,0.25].
    #[arg(value_delimiter = ',')]
    deltas: Vec<f64>,
    /// Replications per scenario [default: 5000].
    reps: usize,
});

command_args!(PgValidateArgs {
    /// Patients per arm, comma-separated [default: 10,50,200].
    #[arg(value_delimiter = ',')]
    ns: Vec<u32>,
    /// Treatment effects, comma-separated probabilities [default: 0,0.15,0.25].
    #[arg(value_delimiter = ',')]
    deltas: Vec<f64>,
    /// Control response rate, probability [default: 0.30].
    p0: f64,
    /// Random datasets per cell [default: 50].
    datasets: usize,
});

command_args!(EcmoArgs {
    /// Replications per scenario [default: 10000].
    reps: usize,
});

command_args!(SamplesizeArgs {
    /// One-sided type-I error, probability [default: 0.05].
    alpha: f64,
    /// Type-II error, probability [default: 0.10].
    beta: f64,
    /// Outcome standard deviation, outcome units [default: 1].
    sigma: f64,
    /// Target difference, outcome units [default: 0.10].
    delta: f64,
    /// Prior probability of the null [default: 0.5].
    pi0: f64,
    /// Relative loss of a false rejection [default: 1].
    k: f64,
    /// Also write the constancy table over delta in 0.01..1 and sigma in {0.5,1,5} (true|false) [default: false].
    constancy: bool,
});

command_args!(GibbsArgs {
    /// CSV with columns centre,y_trt,n_trt,y_ctrl,n_ctrl [default: bundled synthetic data].
    data: PathBuf,
    /// Inverse-Wishart degrees of freedom [default: 3].
    iw_df: f64,
    /// Inverse-Wishart scale as b11,b12,b21,b22 [default: 1,0,0,1].
    #[arg(value_delimiter = ',')]
    iw_scale: Vec<f64>,
    /// Burn-in iterations [default: 2000].
    burn: usize,
    /// Retained draws per chain [default: 8000].
    keep: usize,
    /// Thinning interval, iterations [default: 1].
    thin: usize,
    /// Independent chains [default: 1].
    chains: usize,
});

command_args!(ImpliedPriorArgs {
    /// Treatment prior Beta(a,b) [default: 1,1].
    prior1: BetaArg,
    /// Control prior Beta(a,b) [default: 1,1].
    prior0: BetaArg,
    /// Monte-Carlo draws [default: 1000000].
    draws: usize,
    /// Histogram bins on [-1, 1] [default: 201].
    bins: usize,
});
