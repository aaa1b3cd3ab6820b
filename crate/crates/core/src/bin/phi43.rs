use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phi43::experiments::{run, Experiment, Overrides, Settings};

#[derive(Parser)]
#[command(name = "phi43", version, about = "Regularized Phi^4_3 experiments on the 3-torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bony decomposition, partition of unity and differential identities
    IdentitySuite(Common),
    /// Renormalization constants a, b, c for a list of eps
    RenormTable(Common),
    /// Sample the driving vector and report its regularity norms
    SampleDriver(Common),
    /// Solve the transformed equation by Picard iteration
    Solve(Common),
    /// Distances to the eps = 0 limit for a decreasing eps list
    Convergence(Common),
    /// Compare the transformed solution with a direct solve
    Crosscheck(Common),
    /// Monte-Carlo statistics of the OU field and driving components
    OuStats(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file with a [run] table
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Fourier cutoff
    #[arg(long = "N")]
    n: Option<usize>,
    /// Final time
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::IdentitySuite(c) => (Experiment::IdentitySuite, c),
            Command::RenormTable(c) => (Experiment::RenormTable, c),
            Command::SampleDriver(c) => (Experiment::SampleDriver, c),
            Command::Solve(c) => (Experiment::Solve, c),
            Command::Convergence(c) => (Experiment::Convergence, c),
            Command::Crosscheck(c) => (Experiment::Crosscheck, c),
            Command::OuStats(c) => (Experiment::OuStats, c),
        }
    }
}

fn settings(exp: Experiment, c: Common) -> phi43::Result<Settings> {
    let mut s = Settings::defaults(exp);
    if let Some(path) = &c.config {
        Overrides::from_path(path)?.apply(&mut s);
    }
    Overrides {
        seed: c.seed,
        eps: c.eps,
        n: c.n,
        t_end: c.t_end,
        dt: c.dt,
        kappa: c.kappa,
        out: c.out,
        ..Overrides::default()
    }
    .apply(&mut s);
    Ok(s)
}

fn main() -> ExitCode {
    let (exp, common) = Cli::parse().command.split();
    let report = settings(exp, common).and_then(|s| run(exp, &s));
    match report {
        Ok(r) => {
            for line in &r.summary {
                println!("{line}");
            }
            println!(
                "{}: {} ({:.1} s)",
                r.experiment,
                if r.passed { "PASS" } else { "FAIL" },
                r.runtime_s
            );
            if r.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
