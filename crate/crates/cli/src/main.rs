//! `toric-energy`: config-driven runs of the toric energy experiments.
//!
//! Exit codes: 0 when every check of the run passes, 1 when a check fails,
//! 2 on invalid input or a numerical error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use toric_core::experiments::{
    run_conjugate, run_convergence, run_distortion, run_energy, run_polytope, run_property_suite, ConjugateConfig,
    DistortionConfig, EnergyConfig, ExperimentConfig, PolytopeConfig, SuiteConfig, Tag,
};
use toric_core::par;

#[derive(Parser)]
#[command(name = "toric-energy", version, about = "Energy and ball-volume experiments on toric varieties")]
struct Cli {
    /// Worker threads; overrides the thread count of the config.
    #[arg(long, global = true, env = "TORIC_ENERGY_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Polytope, positivity and lattice points of a divisor.
    Polytope(Io),
    /// Conjugate values of a metric at given points.
    Conjugate(Io),
    /// Energy of a pair of metrics, with the Monge–Ampère identity check.
    Energy(Io),
    /// Convergence table of ball-volume differences toward the energy.
    Converge(Io),
    /// Bergman distortion on a grid and the Bernstein–Markov diagnostic.
    Distortion(Io),
    /// Property suite over the selected tags.
    Check {
        /// JSON config with a `tags` list; every tag when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn pretty(value: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn run(cli: Cli) -> Result<bool> {
    let threads = cli.threads;
    match cli.command {
        Command::Polytope(io) => {
            let config: PolytopeConfig = load(&io.config)?;
            let report = par::with_threads(threads, || run_polytope(&config))?;
            write(&io.out, "polytope.json", &pretty(&report)?)?;
            Ok(true)
        }
        Command::Conjugate(io) => {
            let config: ConjugateConfig = load(&io.config)?;
            let report = par::with_threads(threads, || run_conjugate(&config))?;
            write(&io.out, "conjugate.json", &pretty(&report)?)?;
            Ok(true)
        }
        Command::Energy(io) => {
            let config: EnergyConfig = load(&io.config)?;
            let (report, ok) = par::with_threads(threads, || run_energy(&config))?;
            let body = serde_json::json!({ "report": report, "identity_ok": ok });
            write(&io.out, "energy.json", &pretty(&body)?)?;
            println!("J = {:.16e}, eeq_diff = {:.16e}, identity {}", report.j, report.eeq_diff, verdict(ok));
            Ok(ok)
        }
        Command::Converge(io) => {
            let text = fs::read_to_string(&io.config).with_context(|| format!("reading {}", io.config.display()))?;
            let mut config = ExperimentConfig::from_json(&text)?;
            if threads.is_some() {
                config.threads = threads;
            }
            let run = run_convergence(&config)?;
            write(&io.out, "convergence.csv", &run.csv())?;
            write(&io.out, "summary.json", &run.summary_json())?;
            for (name, ok) in &run.summary.checks {
                println!("{} {name}", verdict(*ok));
            }
            Ok(run.summary.passed)
        }
        Command::Distortion(io) => {
            let config: DistortionConfig = load(&io.config)?;
            let run = par::with_threads(threads, || run_distortion(&config))?;
            write(&io.out, "distortion.csv", &run.csv())?;
            write(&io.out, "distortion.json", &pretty(&run.report)?)?;
            println!("bernstein-markov {}", verdict(run.report.verdict));
            Ok(run.report.verdict)
        }
        Command::Check { config, out } => {
            let config: SuiteConfig = match config {
                Some(path) => load(&path)?,
                None => SuiteConfig { tags: Vec::new() },
            };
            let tags: Vec<Tag> = if config.tags.is_empty() {
                Tag::ALL.to_vec()
            } else {
                config.tags.iter().map(|t| t.parse()).collect::<Result<_, _>>()?
            };
            let report = par::with_threads(threads, || run_property_suite(&tags));
            write(&out, "check.json", &pretty(&report)?)?;
            for c in &report.checks {
                println!("{} {} {}", verdict(c.passed), c.tag, c.name);
            }
            Ok(report.passed)
        }
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
