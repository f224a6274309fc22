//! `homflow`: run one experiment from a TOML config.
//!
//! Exit codes: 0 all checks pass, 1 a check or the run failed, 2 bad
//! configuration (nothing is written in that case).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homflow::experiment::{
    emit_report, run_plan, thread_cap, validate, with_threads, ExperimentConfig, ExperimentKind, OutputFormat,
};
use homflow::Error;

#[derive(Parser)]
#[command(name = "homflow", version, about = "Lie group integrator error-theory harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One-step error ladders and their empirical orders
    LocalOrder(Common),
    /// Global error ladders at fixed horizon
    GlobalOrder(Common),
    /// Exponential separation of nearby exact solutions
    Gronwall(Common),
    /// Global error as a fan of transported local errors
    Windermere(Common),
    /// Comparison-function mechanism behind the local estimate
    Mechanism(Common),
    /// Planar forest enumeration and the coefficient identity
    Trees(Common),
    /// Lie-series truncation defects
    LieSeries(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed (overrides `seed`)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "both")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::LocalOrder(a) => (ExperimentKind::LocalOrder, a),
        Command::GlobalOrder(a) => (ExperimentKind::GlobalOrder, a),
        Command::Gronwall(a) => (ExperimentKind::Gronwall, a),
        Command::Windermere(a) => (ExperimentKind::Windermere, a),
        Command::Mechanism(a) => (ExperimentKind::Mechanism, a),
        Command::Trees(a) => (ExperimentKind::Trees, a),
        Command::LieSeries(a) => (ExperimentKind::LieSeries, a),
    };
    let format = match args.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
        Format::Both => OutputFormat::Both,
    };

    let prepared = thread_cap().and_then(|cap| {
        let mut cfg = ExperimentConfig::load(&args.config)?;
        if let Some(s) = args.seed {
            cfg.seed = Some(s);
        }
        Ok((cap, validate(&cfg, kind)?))
    });
    let (cap, plan) = match prepared {
        Ok(p) => p,
        Err(e) => {
            eprintln!("homflow: {e}");
            return ExitCode::from(2);
        }
    };
    let out_dir = args
        .out
        .or_else(|| plan.config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("homflow-out"));

    let outcome = match with_threads(cap, || run_plan(&plan)).and_then(|r| r) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("homflow: {kind} failed: {e}");
            return ExitCode::from(if matches!(e, Error::Config(_)) { 2 } else { 1 });
        }
    };
    match emit_report(&outcome, &out_dir, format) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("homflow: {e}");
            return ExitCode::from(1);
        }
    }
    for c in &outcome.report.checks {
        println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    for s in &outcome.report.slopes {
        println!(
            "{} slope {}/{} = {:.3}",
            if s.pass { "PASS" } else { "FAIL" },
            s.method,
            s.column,
            s.slope
        );
    }
    if outcome.report.pass {
        println!("{kind}: pass");
        ExitCode::SUCCESS
    } else {
        println!("{kind}: fail");
        ExitCode::from(1)
    }
}
