//! Runs a job document through every stage and prints the report.
//!
//! cargo run --example pipeline -- crates/core/examples/jobs/bcc.json

use std::path::PathBuf;

use liftile::job::{run_pipeline, JobSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/jobs/hexagon.json"));
    let spec = JobSpec::from_json(&std::fs::read_to_string(&path)?)?;
    let out = run_pipeline(&spec);
    for r in &out.report.stages {
        println!("{:<11} {:?}  {}", r.stage.name(), r.status, r.detail);
    }
    if let Some(q) = &out.report.q {
        println!("Q = {q:?}");
    }
    println!("exit code {}", out.report.exit_code);
    Ok(())
}
