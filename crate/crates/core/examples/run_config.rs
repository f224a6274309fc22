//! Run an experiment from TOML and write its artifacts, the way the
//! `homflow` binary does.
//!
//! ```bash
//! cargo run -p homflow --example run_config -- crates/core/configs/trees.toml trees
//! ```

use std::path::PathBuf;

use homflow::experiment::{emit_report, run_experiment, ExperimentConfig, ExperimentKind, OutputFormat};

fn main() -> homflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::from_toml("version = 1\nmax_order = 5")?,
    };
    let kind = match args.next().as_deref() {
        None | Some("trees") => ExperimentKind::Trees,
        Some("local-order") => ExperimentKind::LocalOrder,
        Some("global-order") => ExperimentKind::GlobalOrder,
        Some("gronwall") => ExperimentKind::Gronwall,
        Some("windermere") => ExperimentKind::Windermere,
        Some("mechanism") => ExperimentKind::Mechanism,
        Some("lie-series") => ExperimentKind::LieSeries,
        Some(other) => return Err(homflow::Error::Config(format!("unknown experiment `{other}`"))),
    };
    let outcome = run_experiment(&cfg, kind)?;
    let dir = std::env::temp_dir().join("homflow-example");
    for f in emit_report(&outcome, &PathBuf::from(&dir), OutputFormat::Both)? {
        println!("wrote {}", f.display());
    }
    println!("pass = {}", outcome.report.pass);
    Ok(())
}
