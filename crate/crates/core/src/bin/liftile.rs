use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use liftile::job::{
    export_surface, run_pipeline_until, Artifact, ExportFormat, JobInput, PipelineOutput, Stage,
};
use liftile::tol;

/// Canonical scalings, generatrices and Voronoi reduction of lattice tilings.
///
/// LIFTILE_TOL overrides the geometric tolerance (default 1e-9).
#[derive(Parser)]
#[command(name = "liftile", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JobSpec document or artifact of an earlier stage.
    #[arg(long)]
    spec: PathBuf,
    /// Directory for the artifact, report and exports; report goes to stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the job.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the patch and run the Minkowski and Venkov-Delone checks.
    Generate(Common),
    /// Solve for a canonical scaling and make it translation invariant.
    Scale(Common),
    /// Lift the cells and validate the generatrix.
    Lift(Common),
    /// Recover the quadratic form and the reducing map.
    Reduce(Common),
    /// Compare the reduced tiling with the Voronoi tiling of the image lattice.
    Verify(Common),
    /// Write the lifted surface.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_format, default_value = "table")]
        format: ExportFormat,
    },
    /// Run all stages, or stop after --stage.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_stage)]
        stage: Option<Stage>,
    },
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    ExportFormat::parse(s).ok_or_else(|| format!("unknown format {s:?}; expected mesh, table or snapshot"))
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    Stage::parse(s).ok_or_else(|| {
        let names: Vec<_> = Stage::ALL.iter().map(|s| s.name()).collect();
        format!("unknown stage {s:?}; expected one of {}", names.join(", "))
    })
}

fn main() -> ExitCode {
    tol::apply_env_override();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("liftile: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<i32, String> {
    let (common, last, format) = match &cli.command {
        Command::Generate(c) => (c, Stage::Checks, None),
        Command::Scale(c) => (c, Stage::Invariant, None),
        Command::Lift(c) => (c, Stage::Validate, None),
        Command::Reduce(c) => (c, Stage::Reduce, None),
        Command::Verify(c) => (c, Stage::Verify, None),
        Command::Export { common, format } => (common, Stage::Generatrix, Some(*format)),
        Command::Pipeline { common, stage } => (common, stage.unwrap_or(Stage::Verify), None),
    };
    let text = fs::read_to_string(&common.spec).map_err(|e| format!("{}: {e}", common.spec.display()))?;
    let input = JobInput::parse(&text).map_err(|e| format!("{}: {e}", common.spec.display()))?;
    let mut spec = input.spec().clone();
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    let out = run_pipeline_until(&spec, last, input.weights());
    for r in &out.report.stages {
        eprintln!("{:<11} {:?} {}", r.stage.name(), r.status, r.detail);
    }

    let is_pipeline = matches!(cli.command, Command::Pipeline { .. });
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let artifact = Artifact::from_output(last, &spec, &out);
            write(&dir.join(format!("{}.json", last.name())), artifact.to_json().as_bytes())?;
            write(&dir.join("report.json"), out.report.to_json().as_bytes())?;
        }
        None => println!("{}", out.report.to_json()),
    }

    if let Some(format) = format {
        let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
        export(&out, format, &dir.join(format.file_name()))?;
    }
    if is_pipeline && out.generatrix.is_none() && spec.outputs != Default::default() {
        eprintln!("liftile: outputs skipped, no generatrix was built");
    } else if is_pipeline {
        let base = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
        let targets = [
            (ExportFormat::Mesh, &spec.outputs.mesh),
            (ExportFormat::Table, &spec.outputs.table),
            (ExportFormat::Snapshot, &spec.outputs.snapshot),
        ];
        for (format, target) in targets {
            if let Some(path) = target {
                export(&out, format, &base.join(path))?;
            }
        }
    }
    Ok(out.report.exit_code)
}

fn export(out: &PipelineOutput, format: ExportFormat, path: &Path) -> Result<(), String> {
    let g = out
        .generatrix
        .as_ref()
        .ok_or_else(|| "no generatrix to export; an earlier stage failed".to_string())?;
    let mut buf = Vec::new();
    export_surface(g, format, &mut buf).map_err(|e| e.to_string())?;
    write(path, &buf)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
}
