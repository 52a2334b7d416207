use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use fracback_cli::{init_threads, resolve, run};

/// Forward and backward fractional subdiffusion experiments.
#[derive(Parser, Debug)]
#[command(name = "fracback", version)]
struct Args {
    /// roundtrip, illposed, decay, source, mlf-accuracy, residual or all
    scenario: String,
    /// File of key=value lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long = "T")]
    t_end: Option<String>,
    #[arg(long)]
    modes: Option<String>,
    /// dirichlet:L=1, power:c=1,a=2 or file:PATH
    #[arg(long)]
    spectrum: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// a..b, counted from 1
    #[arg(long = "k_range")]
    k_range: Option<String>,
}

fn main() -> ExitCode {
    match try_main(Args::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn try_main(args: Args) -> anyhow::Result<ExitCode> {
    init_threads()?;
    let text = args
        .config
        .as_ref()
        .map(|p| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let flags = [
        ("scenario", Some(&args.scenario)),
        ("out", args.out.as_ref()),
        ("rho", args.rho.as_ref()),
        ("T", args.t_end.as_ref()),
        ("modes", args.modes.as_ref()),
        ("spectrum", args.spectrum.as_ref()),
        ("epsilon", args.epsilon.as_ref()),
        ("tol", args.tol.as_ref()),
        ("seed", args.seed.as_ref()),
        ("k_range", args.k_range.as_ref()),
    ];
    let config = resolve(
        text.as_deref(),
        flags
            .iter()
            .filter_map(|(k, v)| v.map(|v| (*k, v.as_str()))),
    )?;
    let outcome = run(&config)?;
    for r in &outcome.reports {
        println!(
            "{}: {}",
            r.scenario,
            if r.passed() { "pass" } else { "FAIL" }
        );
    }
    match outcome.first_failure() {
        None => Ok(ExitCode::SUCCESS),
        Some((scenario, check)) => {
            eprintln!(
                "{scenario}: assertion `{}` failed (measured {:e})",
                check.name, check.measured
            );
            Ok(ExitCode::from(1))
        }
    }
}
