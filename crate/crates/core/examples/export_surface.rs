//! Writes the lifted hexagonal surface as OBJ, the per-cell table as CSV, and an
//! SVG of the tiling with its facet weights.
//!
//! cargo run --example export_surface -- /tmp/liftile-export

use std::fs::File;
use std::path::PathBuf;

use liftile::job::{export_surface, run_pipeline_until, ExportFormat, JobSpec, Stage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("liftile-export"));
    std::fs::create_dir_all(&dir)?;
    let jobs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/jobs");
    for job in ["hexagon.json", "bcc.json"] {
        let spec = JobSpec::from_json(&std::fs::read_to_string(jobs.join(job))?)?;
        let out = run_pipeline_until(&spec, Stage::Generatrix, None);
        let g = out.generatrix.ok_or("generatrix failed")?;
        for format in [ExportFormat::Mesh, ExportFormat::Table, ExportFormat::Snapshot] {
            let path = dir.join(format!("{}-{}", job.trim_end_matches(".json"), format.file_name()));
            match export_surface(&g, format, File::create(&path)?) {
                Ok(()) => println!("wrote {}", path.display()),
                Err(e) => {
                    std::fs::remove_file(&path)?;
                    println!("skipped {}: {e}", path.display());
                }
            }
        }
    }
    Ok(())
}
