use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wildns::config::{parse_config, RunConfig};
use wildns::construction::schedule::RunMode;
use wildns::driver::{info, output_dir, run_build, run_scaling, run_verify};
use wildns::verify::Outcome;
use wildns::Error;

#[derive(Parser)]
#[command(name = "wildns", version, about = "Convex-integration builds and checks on the periodic box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    mode: Option<ModeArg>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the iteration and write dumps, norm tables and provenance.
    Build,
    /// Build, then evaluate every check and write report.json.
    Verify,
    /// Stationary-phase fits and term decay in `a`.
    Scaling,
    /// Print derived parameters without running.
    Info,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Exploratory,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Resolution(_) => 4,
        _ => 1,
    }
}

fn load(cli: &Cli) -> wildns::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.mode {
        cfg.mode = match m {
            ModeArg::Strict => RunMode::Strict,
            ModeArg::Exploratory => RunMode::Exploratory,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> wildns::Result<u8> {
    let cfg = load(cli)?;
    let out = output_dir(&cfg, cli.out.clone());
    match cli.command {
        Command::Info => {
            println!("{}", serde_json::to_string_pretty(&info(&cfg)?).expect("json"));
            Ok(0)
        }
        Command::Build => {
            let b = run_build(&cfg, Some(&out))?;
            for (name, h) in &b.dump_hashes {
                println!("{name} {h}");
            }
            println!("bundle written to {}", out.display());
            Ok(0)
        }
        Command::Verify => {
            let b = run_build(&cfg, Some(&out))?;
            let report = run_verify(&b)?;
            let hash = report.write(&out)?;
            for c in &report.checks {
                let tag = match c.pass {
                    Outcome::Pass => "pass",
                    Outcome::Fail => "FAIL",
                    Outcome::ReportOnly => "report",
                };
                println!("{tag:>6}  {}  measured {:.4e}  target {:.4e}", c.name, c.measured.max(), c.target);
            }
            println!("report {hash}");
            Ok(if report.any_failed() { 3 } else { 0 })
        }
        Command::Scaling => {
            let report = run_scaling(&cfg, Some(&out))?;
            for c in &report.checks {
                println!("{:?}  {}  {}", c.pass, c.name, c.note);
            }
            Ok(if report.any_failed() { 3 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
