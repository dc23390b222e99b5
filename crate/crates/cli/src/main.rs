mod args;
mod commands;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde::de::DeserializeOwned;

use args::{Cli, Command, CommonArgs};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or parameter values (exit 2).
    Config(String),
    /// A numerical routine failed (exit 3).
    Numerical(String),
    /// Reading inputs or writing outputs failed (exit 1).
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<seqtrial::Error> for CliError {
    fn from(e: seqtrial::Error) -> Self {
        use seqtrial::Error as E;
        match e {
            E::Domain(_) | E::Config(_) | E::NonIntegerParameters { .. } => CliError::Config(e.to_string()),
            E::Numerical(_) => CliError::Numerical(e.to_string()),
            E::Io(_) | E::Csv(_) | E::Json(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("seqtrial: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let name = command.name();
    match command {
        Command::DesignBinary(a) => commands::design_binary(resolve(a, name, |f, c| f.merge_over(c))?),
        Command::DesignNormal(a) => commands::design_normal(resolve(a, name, |f, c| f.merge_over(c))?),
        Command::Simulate(a) => commands::simulate(resolve(a, name, |f, c| f.merge_over(c))?),
        Command::Frontier(a) => commands::frontier(resolve(a, name, |f, c| f.merge_over(c))?),
        Command::PriorSensitivity(a) => commands::prior_sensitivity(resolve(a, name, |f, c| f.merge_over(c))?),
        Command::PgValidate(a) => commands::pg_validate(resolve(a, name, |f, c| f.merge_over(c))?),
        Command::Ecmo(a) => commands::ecmo(resolve(a, name, |f, c| f.merge_over(c))?),
        Command::Samplesize(a) => commands::samplesize(resolve(a, name, |f, c| f.merge_over(c))?),
        Command::Gibbs(a) => commands::gibbs(resolve(a, name, |f, c| f.merge_over(c))?),
        Command::ImpliedPrior(a) => commands::implied_prior(resolve(a, name, |f, c| f.merge_over(c))?),
    }
}

/// Merges flags over the config file (if any), sets up the thread pool and
/// the output directory.
fn resolve<A: CommonArgs + DeserializeOwned>(flags: A, name: &str, merge: impl FnOnce(A, A) -> A) -> Result<A, CliError> {
    let args = match flags.config().map(Path::to_path_buf) {
        None => flags,
        Some(path) => {
            let file: A = read_config(&path, name)?;
            match file.file_command() {
                Some(c) if c == name => {}
                Some(c) => return Err(CliError::Config(format!("{}: \"command\" is \"{c}\" but the subcommand is \"{name}\"", path.display()))),
                None => return Err(CliError::Config(format!("{}: missing \"command\" field", path.display()))),
            }
            merge(flags, file)
        }
    };
    let threads = args.threads().or_else(|| std::env::var("SEQTRIAL_THREADS").ok().and_then(|v| v.trim().parse().ok()));
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    std::fs::create_dir_all(args.out_dir())?;
    Ok(args)
}

fn read_config<A: DeserializeOwned>(path: &Path, name: &str) -> Result<A, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    // a config written for another subcommand would otherwise fail on its first foreign key
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str::<serde_json::Value>(&text) {
        if let Some(serde_json::Value::String(c)) = map.get("command") {
            if c != name {
                return Err(CliError::Config(format!("{}: \"command\" is \"{c}\" but the subcommand is \"{name}\"", path.display())));
            }
        }
    }
    serde_json::from_str(&text).map_err(|e| {
        let mut msg = format!("{}: {e}", path.display());
        // serde reports unknown keys at the end of the object; point at the key itself
        if let Some(key) = e.to_string().strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
            let needle = format!("\"{key}\"");
            if let Some(line) = text.lines().position(|l| l.contains(&needle)) {
                msg = format!("{}: line {}: unknown field `{key}`", path.display(), line + 1);
            }
        }
        CliError::Config(msg)
    })
}
