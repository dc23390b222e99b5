//! Bayesian sequential design for two-arm clinical trials.

pub mod binary;
pub mod dist;
pub mod error;
pub mod monitor;
pub mod normal;
pub mod pg;
pub mod priors;
pub mod samplesize;
pub mod sim;

pub use binary::{solve, BinaryDesignSpec, BinaryPolicyTable, BinaryState};
pub use dist::{BetaParams, RngStream};
pub use error::{Error, Result};
pub use monitor::{InterimStatistic, MonitoringDesign};
pub use normal::{solve_normal, NormalDesignSpec, NormalPolicy};
pub use pg::{CentreData, GibbsConfig, PgLaplaceProblem};
pub use sim::{OperatingCharacteristics, PolicyCache, Scenario};
