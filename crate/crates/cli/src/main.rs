use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use idbm_cli::{exit_code, parse_config, run_suites, ExperimentConfig, RunError, Suite};

#[derive(Parser)]
#[command(name = "idbm", version, about = "Run verification suites and export plot-ready data")]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Output directory; each suite writes into a subdirectory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run a single named suite.
    #[arg(long, global = true, value_enum)]
    suite: Option<Suite>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Draw beta and export it.
    SampleBeta,
    /// Laplace transform of beta on the triangle.
    VerifyLaplace,
    /// One-vertex laws and inverse Gaussian marginals.
    VerifyMarginals,
    /// Independence at distance two, restriction and conditioning.
    VerifyDependence,
    /// Markov and strong Markov properties, psi martingale.
    VerifyMarkov,
    /// Bessel bridge mixture and path-density normalization.
    VerifyMixture,
    /// VRJP against its Markov-jump mixture.
    VrjpCompare,
    /// Bessel kernel, bridge sampler and mixture.
    BesselCheck,
    /// Deterministic identities only.
    Algebra,
    /// Every acceptance suite.
    All,
}

impl Command {
    fn suites(self) -> Vec<Suite> {
        match self {
            Command::SampleBeta => vec![Suite::SampleBeta],
            Command::VerifyLaplace => vec![Suite::LaplaceTriangle],
            Command::VerifyMarginals => vec![Suite::OneVertex, Suite::MarginalIg],
            Command::VerifyDependence => vec![Suite::Dependence, Suite::Restriction],
            Command::VerifyMarkov => vec![Suite::Markov, Suite::PsiMartingale],
            Command::VerifyMixture => vec![Suite::Bessel, Suite::RadonNikodym],
            Command::VrjpCompare => vec![Suite::Vrjp],
            Command::BesselCheck => vec![Suite::Bessel],
            Command::Algebra => vec![Suite::Algebra],
            Command::All => Suite::CRITERIA.to_vec(),
        }
    }
}

fn run(cli: Cli) -> Result<i32, RunError> {
    let mut config = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(r) = cli.replicas {
        config.replicas = Some(r);
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    let list = match (cli.command, cli.suite) {
        (Some(c), _) => c.suites(),
        (None, Some(s)) => vec![s],
        (None, None) => vec![config.suite],
    };
    let runs = run_suites(&config, &list, cli.workers.map(|w| w as usize))?;
    // A closed stdout (e.g. piped into `head`) must not change the exit code.
    let mut out = std::io::stdout().lock();
    for run in &runs {
        for r in &run.outcome.reports {
            let verdict = if r.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{verdict} {}: {} [{}]", run.suite.name(), r.name, r.tolerance);
        }
        let dir = run.files.first().and_then(|f| f.parent()).unwrap_or(&config.output_dir);
        let _ = writeln!(out, "{} -> {}", run.suite.name(), dir.display());
    }
    Ok(exit_code(&runs))
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
