mod commands;
mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use commands::UsageError;
use config::*;
use output::{write_json, Manifest, RunOutput};

#[derive(Parser)]
#[command(name = "tmgrowth", version, about = "Experiments for Trudinger-Moser inequalities with exact growth")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report directory (default runs/<command>)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Witness sequences for the failure clauses
    Witness(WitnessArgs),
    /// Discrete extremal problem and its asymptotic ratio
    Mu(MuArgs),
    /// Radial pointwise bound sweep
    Radtm(RadtmArgs),
    /// Dyadic certificate for one profile
    Certify(CertifyArgs),
    /// Ground states by shooting
    Ground(GroundArgs),
    /// Sup-ratio search over seeded families
    Verify(VerifyArgs),
    /// Holder bridge and moment tables
    Bridge(BridgeArgs),
    /// Summarize run manifests
    Report(ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Witness(_) => "witness",
            Command::Mu(_) => "mu",
            Command::Radtm(_) => "radtm",
            Command::Certify(_) => "certify",
            Command::Ground(_) => "ground",
            Command::Verify(_) => "verify",
            Command::Bridge(_) => "bridge",
            Command::Report(_) => "report",
        }
    }
}

fn resolve<T: Serialize + DeserializeOwned>(flags: &T, cfg: &Option<ConfigFile>, name: &str) -> Result<(T, serde_json::Value), String> {
    let merged = layer(flags, cfg.as_ref().and_then(|c| c.section(name)), name)?;
    let inputs = serde_json::to_value(&merged).map_err(|e| e.to_string())?;
    Ok((merged, inputs))
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| UsageError(format!("--config {}: {e}", p.display())))?;
            Some(ConfigFile::parse(&text).map_err(UsageError)?)
        }
        None => None,
    };
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(UsageError("--threads must be at least 1".into()).into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;

    let name = cli.command.name();
    let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs").join(name));
    macro_rules! dispatch {
        ($args:expr, $f:path) => {{
            let (a, inputs) = resolve($args, &cfg, name).map_err(UsageError)?;
            ($f(&a, &dir)?, inputs)
        }};
    }
    let (out, inputs): (RunOutput, serde_json::Value) = match &cli.command {
        Command::Witness(a) => dispatch!(a, commands::witness),
        Command::Mu(a) => dispatch!(a, commands::mu),
        Command::Radtm(a) => dispatch!(a, commands::radtm),
        Command::Certify(a) => dispatch!(a, commands::certify),
        Command::Ground(a) => dispatch!(a, commands::ground),
        Command::Verify(a) => dispatch!(a, commands::verify_cmd),
        Command::Bridge(a) => dispatch!(a, commands::bridge),
        Command::Report(a) => dispatch!(a, commands::report),
    };

    let failed = out.failed();
    let passed = failed.is_empty();
    for c in &failed {
        eprintln!("check failed: {}{}", c.name, c.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default());
    }
    let manifest = Manifest {
        tool: "tmgrowth".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        config_version: CONFIG_VERSION,
        inputs,
        seed: out.seed,
        threads,
        outputs: out.files.iter().map(|p| p.display().to_string()).collect(),
        checks_total: out.checks.len(),
        failed_checks: failed.into_iter().cloned().collect(),
        passed,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    println!(
        "{name}: {}/{} checks passed, outputs in {}",
        out.checks.len() - manifest.failed_checks.len(),
        out.checks.len(),
        dir.display()
    );
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
