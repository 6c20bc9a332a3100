//! Job descriptions, the staged pipeline, reports, and surface exports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::geom::{mean_point, point_key, Matrix, PointKey, Vector};
use crate::lift::{build_generatrix, LiftError, check_convexity, check_nonnegative, lift_along_chain, random_chain, Generatrix};
use crate::scaling::{is_canonical, ScalingError, make_translation_invariant, max_torsion, solve_canonical, Scaling};
use crate::tiling::{
    check_minkowski, check_venkov_delone, dirichlet_cell, facet_classes, generate_patch_at, Lattice,
    Parallelohedron, TilingError, TilingPatch,
};
use crate::voronoi::{
    check_positive_definite, check_symmetry, check_tangency, facet_system, recover_q, reduce_to_voronoi,
    verify_voronoi, VoronoiError, VoronoiReport,
};

#[derive(Debug, Error)]
pub enum JobError {
    #[error("invalid job: {0}")]
    Invalid(String),
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Pretty JSON with every float written to 17 significant digits.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializable");
    String::from_utf8(buf).expect("utf-8")
}

struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Source of the prototype cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellSpec {
    /// The string `"dirichlet"`.
    Named(String),
    Explicit { vertices: Vec<Vec<f64>> },
}

/// Source of the facet weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalingSpec {
    /// `"solve"` or `"facet-norm"`.
    Named(String),
    /// One weight per facet class in class-id order, or a single weight for all.
    Explicit { weights: Vec<f64> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<String>,
}

fn default_chains() -> usize {
    10
}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub dimension: usize,
    /// Basis matrix in row-major order; its columns generate the lattice.
    pub lattice: Vec<f64>,
    pub cell: CellSpec,
    pub radius: usize,
    pub scaling: ScalingSpec,
    /// Lattice coordinates of the base cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<i64>>,
    #[serde(default)]
    pub seed: u64,
    /// Random alternative chains checked per cell.
    #[serde(default = "default_chains")]
    pub chains_per_cell: usize,
    /// Random samples for midpoint convexity and the paraboloid check.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub report_timing: bool,
    #[serde(default)]
    pub outputs: Outputs,
}

impl JobSpec {
    pub fn from_json(text: &str) -> Result<Self, JobError> {
        let spec: JobSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        to_json_pretty(self)
    }

    pub fn validate(&self) -> Result<(), JobError> {
        let d = self.dimension;
        if !(2..=3).contains(&d) {
            return Err(JobError::Invalid(format!("dimension must be 2 or 3, got {d}")));
        }
        if self.lattice.len() != d * d {
            return Err(JobError::Invalid(format!("lattice needs {} entries, got {}", d * d, self.lattice.len())));
        }
        if self.radius < 1 {
            return Err(JobError::Invalid("radius must be at least 1".into()));
        }
        match &self.cell {
            CellSpec::Named(n) if n == "dirichlet" => {}
            CellSpec::Named(n) => return Err(JobError::Invalid(format!("unknown cell source {n:?}"))),
            CellSpec::Explicit { vertices } => {
                if vertices.iter().any(|v| v.len() != d) {
                    return Err(JobError::Invalid("cell vertex of wrong dimension".into()));
                }
            }
        }
        match &self.scaling {
            ScalingSpec::Named(n) if n == "solve" || n == "facet-norm" => {}
            ScalingSpec::Named(n) => return Err(JobError::Invalid(format!("unknown scaling source {n:?}"))),
            ScalingSpec::Explicit { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(JobError::Invalid("explicit weights must be positive".into()));
                }
            }
        }
        if let Some(b) = &self.base {
            if b.len() != d {
                return Err(JobError::Invalid("base coordinates of wrong dimension".into()));
            }
        }
        Ok(())
    }

    pub fn basis(&self) -> Matrix {
        Matrix::from_row_slice(self.dimension, self.dimension, &self.lattice)
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Generate,
    Checks,
    Solve,
    Invariant,
    Generatrix,
    Validate,
    RecoverQ,
    Tangency,
    Reduce,
    Verify,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Generate,
        Stage::Checks,
        Stage::Solve,
        Stage::Invariant,
        Stage::Generatrix,
        Stage::Validate,
        Stage::RecoverQ,
        Stage::Tangency,
        Stage::Reduce,
        Stage::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Checks => "checks",
            Stage::Solve => "solve",
            Stage::Invariant => "invariant",
            Stage::Generatrix => "generatrix",
            Stage::Validate => "validate",
            Stage::RecoverQ => "recover-q",
            Stage::Tangency => "tangency",
            Stage::Reduce => "reduce",
            Stage::Verify => "verify",
        }
    }

    pub fn parse(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Soft stages record their outcome without stopping the run.
    pub fn is_soft(self) -> bool {
        matches!(self, Stage::Checks | Stage::Validate | Stage::Tangency)
    }

    /// Process exit code when this hard stage fails.
    pub fn exit_code(self) -> i32 {
        10 + Stage::ALL.iter().position(|&s| s == self).unwrap() as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Pass,
    Fail,
    SoftFail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub detail: String,
    /// Offending cell, facet or ridge id; set on every failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<usize>,
    /// Absent only for structural failures that have no numeric measure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<Stage>,
    pub exit_code: i32,
    pub stages: Vec<StageRecord>,
    pub cells: usize,
    pub interior_facets: usize,
    pub facet_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_torsion: Option<f64>,
    /// `(class id, weight)` of the invariant scaling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<Vec<(usize, f64)>>,
    /// Recovered form scaled to trace `d`, row by row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_voronoi: Option<VoronoiReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, f64>>,
}

impl Report {
    pub fn to_json(&self) -> String {
        to_json_pretty(self)
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }
}

/// Everything the pipeline computed, for exports and stage artifacts.
#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    pub report: Report,
    pub patch: Option<TilingPatch>,
    pub scaling: Option<Scaling>,
    pub generatrix: Option<Generatrix>,
    pub q: Option<Matrix>,
    pub a: Option<Matrix>,
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

struct Recorder<'a> {
    out: &'a mut PipelineOutput,
    timing: BTreeMap<String, f64>,
    clock: Instant,
}

impl Recorder<'_> {
    fn record(&mut self, stage: Stage, status: StageStatus, detail: String, entity: Option<usize>, residual: Option<f64>) {
        let ms = self.clock.elapsed().as_secs_f64() * 1e3;
        self.timing.insert(stage.name().into(), ms);
        self.clock = Instant::now();
        self.out.report.stages.push(StageRecord { stage, status, detail, entity, residual });
    }

    fn pass(&mut self, stage: Stage, detail: String) {
        self.record(stage, StageStatus::Pass, detail, None, None);
    }

    /// Records a hard failure; returns `true` so callers can stop.
    fn fail(&mut self, stage: Stage, detail: String, entity: usize, residual: Option<f64>) -> bool {
        self.record(stage, StageStatus::Fail, detail, Some(entity), residual);
        self.out.report.failed_stage = Some(stage);
        self.out.report.exit_code = stage.exit_code();
        true
    }

    fn soft(&mut self, stage: Stage, ok: bool, detail: String, entity: Option<usize>, residual: Option<f64>) {
        let status = if ok { StageStatus::Pass } else { StageStatus::SoftFail };
        self.record(stage, status, detail, entity, residual);
    }
}

/// Runs every stage.
pub fn run_pipeline(spec: &JobSpec) -> PipelineOutput {
    run_pipeline_until(spec, Stage::Verify, None)
}

/// Runs stages up to and including `last`. `weights`, when given, are per-facet
/// weights from an earlier run and replace the solve and invariant stages.
pub fn run_pipeline_until(spec: &JobSpec, last: Stage, weights: Option<&[f64]>) -> PipelineOutput {
    let mut out = PipelineOutput::default();
    let mut rec = Recorder { out: &mut out, timing: BTreeMap::new(), clock: Instant::now() };
    run_stages(spec, last, weights, &mut rec);
    let timing = std::mem::take(&mut rec.timing);
    out.report.passed = out.report.failed_stage.is_none();
    if spec.report_timing {
        out.report.timing_ms = Some(timing);
    }
    out
}

fn run_stages(spec: &JobSpec, last: Stage, weights: Option<&[f64]>, rec: &mut Recorder<'_>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dimension;

    // generate
    let patch = match build_patch(spec) {
        Ok(p) => p,
        Err(e) => {
            let (entity, residual) = tiling_locus(&e);
            rec.fail(Stage::Generate, e.to_string(), entity, residual);
            return;
        }
    };
    rec.out.report.cells = patch.cell_count();
    rec.out.report.interior_facets = patch.complex.facets.len();
    rec.out.report.facet_classes = facet_classes(&patch).len();
    rec.pass(Stage::Generate, format!("{} cells, {} interior facets", patch.cell_count(), patch.complex.facets.len()));
    rec.out.patch = Some(patch.clone());
    if last == Stage::Generate {
        return;
    }

    // checks
    let mk = check_minkowski(&patch.prototype);
    let vd = check_venkov_delone(&patch.prototype);
    let first_bad = mk.asymmetric_facets.first().copied().or_else(|| vd.failures().next().map(|((a, _), _)| *a));
    rec.soft(
        Stage::Checks,
        mk.passed() && vd.passed(),
        format!(
            "minkowski body={} facets={}; venkov-delone {}",
            mk.body_symmetric,
            mk.facets_symmetric,
            if vd.vacuous { "vacuous".to_string() } else { vd.passed().to_string() }
        ),
        first_bad,
        Some(mk.max_residual),
    );
    if last == Stage::Checks {
        return;
    }

    // solve / invariant
    let scaling = match (&spec.scaling, weights) {
        (_, Some(w)) => {
            let s = Scaling { weights: w.to_vec(), invariant: true };
            rec.record(Stage::Solve, StageStatus::Skipped, "weights from artifact".into(), None, None);
            s
        }
        (ScalingSpec::Named(n), None) if n == "solve" => match solve_canonical(&patch) {
            Ok(fam) => {
                rec.out.report.family_dimension = Some(fam.dimension());
                rec.pass(Stage::Solve, format!("cone dimension {}, min weight {}", fam.dimension(), fam.min_weight));
                fam.representative
            }
            Err(e) => {
                let (entity, residual) = scaling_locus(&e);
                rec.fail(Stage::Solve, e.to_string(), entity, residual);
                return;
            }
        },
        (ScalingSpec::Named(_), None) => {
            rec.record(Stage::Solve, StageStatus::Skipped, "facet-norm weights".into(), None, None);
            Scaling::facet_norm(&patch)
        }
        (ScalingSpec::Explicit { weights }, None) => {
            let classes = facet_classes(&patch).len();
            let w = if weights.len() == 1 { vec![weights[0]; classes] } else { weights.clone() };
            match Scaling::from_class_weights(&patch, &w) {
                Ok(s) => {
                    rec.record(Stage::Solve, StageStatus::Skipped, "explicit class weights".into(), None, None);
                    s
                }
                Err(e) => {
                    let (entity, residual) = scaling_locus(&e);
                    rec.fail(Stage::Solve, e.to_string(), entity, residual);
                    return;
                }
            }
        }
    };
    let (ridge, torsion) = max_torsion(&scaling, &patch.complex);
    rec.out.report.max_torsion = Some(torsion);
    if last == Stage::Solve {
        rec.out.scaling = Some(scaling);
        return;
    }

    let scaling = if scaling.invariant {
        let detail = match is_canonical(&scaling, &patch.complex) {
            Ok(()) => "weights already invariant".to_string(),
            Err(_) => format!("weights invariant but torsion {torsion:e} at ridge {}", ridge.unwrap_or(0)),
        };
        rec.record(Stage::Invariant, StageStatus::Skipped, detail, ridge, Some(torsion));
        scaling
    } else {
        match make_translation_invariant(&scaling, &patch) {
            Ok(s) => {
                rec.pass(Stage::Invariant, "translation-invariant canonical scaling".into());
                s
            }
            Err(e) => {
                let (entity, residual) = scaling_locus(&e);
                rec.fail(Stage::Invariant, e.to_string(), entity, residual.or(Some(torsion)));
                return;
            }
        }
    };
    rec.out.report.class_weights = scaling.class_weights(&patch);
    rec.out.scaling = Some(scaling.clone());
    if last == Stage::Invariant {
        return;
    }

    // generatrix
    let generatrix = match build_generatrix(&patch, &scaling, patch.base_cell_index) {
        Ok(g) => g,
        Err(e) => {
            let (entity, residual) = match &e {
                LiftError::InconsistentLift { cell, residual, .. } => (*cell, Some(*residual)),
                LiftError::NotAdjacent(a, _) => (*a, None),
                _ => (patch.base_cell_index, None),
            };
            rec.fail(Stage::Generatrix, e.to_string(), entity, residual);
            return;
        }
    };
    rec.pass(Stage::Generatrix, "single-valued lift".into());
    rec.out.generatrix = Some(generatrix.clone());
    if last == Stage::Generatrix {
        return;
    }

    // validate
    let mut chain_worst = (None, 0.0f64);
    for cell in 0..patch.cell_count() {
        for _ in 0..spec.chains_per_cell {
            let chain = random_chain(&patch, patch.base_cell_index, cell, &mut rng);
            if let Ok(l) = lift_along_chain(&patch, &scaling, &chain) {
                let m = l.mismatch(&generatrix.lifted[cell]);
                if m > chain_worst.1 {
                    chain_worst = (Some(cell), m);
                }
            }
        }
    }
    let conv = check_convexity(&generatrix, spec.samples, &mut rng);
    let nonneg = check_nonnegative(&generatrix);
    let tol = crate::tol::eps_geo();
    let ok = chain_worst.1 <= tol && conv.passed() && nonneg.passed();
    let entity = if !conv.local_passed() {
        conv.facet_failures.first().map(|f| f.facet)
    } else if chain_worst.1 > tol {
        chain_worst.0
    } else if !nonneg.passed() {
        Some(nonneg.argmin_cell)
    } else {
        Some(patch.base_cell_index)
    };
    rec.soft(
        Stage::Validate,
        ok,
        format!(
            "chain mismatch {:e}; facet failures {}; midpoint failures {}/{}; min height {:e}",
            chain_worst.1,
            conv.facet_failures.len(),
            conv.midpoint_failures,
            conv.samples,
            nonneg.min_height
        ),
        if ok { None } else { entity },
        Some(chain_worst.1.max(conv.max_midpoint_violation)),
    );
    if last == Stage::Validate {
        return;
    }

    // recover Q
    let system = match facet_system(&patch, &scaling) {
        Ok(s) => s,
        Err(e) => {
            let (entity, residual) = voronoi_locus(&e, &[], patch.base_cell_index);
            rec.fail(Stage::RecoverQ, e.to_string(), entity, residual);
            return;
        }
    };
    let sym = check_symmetry(&system);
    if !sym.passed() {
        rec.fail(
            Stage::RecoverQ,
            format!("symmetry fails for columns {:?}", sym.worst_pair),
            system.facets[sym.worst_pair.0],
            Some(sym.relative_residual),
        );
        return;
    }
    let q = match recover_q(&system) {
        Ok(q) => q,
        Err(e) => {
            let (entity, residual) = voronoi_locus(&e, &system.facets, patch.base_cell_index);
            rec.fail(Stage::RecoverQ, e.to_string(), entity, residual);
            return;
        }
    };
    rec.out.report.q = Some(rows(&q.trace_normalized()));
    rec.out.q = Some(q.q.clone());
    rec.record(
        Stage::RecoverQ,
        StageStatus::Pass,
        format!("k = {} facet vectors", system.len()),
        None,
        Some(sym.relative_residual),
    );
    if last == Stage::RecoverQ {
        return;
    }

    let tan = check_tangency(&generatrix, &q, &patch, spec.samples, &mut rng);
    rec.soft(
        Stage::Tangency,
        tan.passed(),
        format!(
            "value {:e}, gradient {:e}, above {:e}",
            tan.max_value_residual, tan.max_gradient_residual, tan.max_above_violation
        ),
        None,
        Some(tan.max_value_residual.max(tan.max_gradient_residual)),
    );
    if last == Stage::Tangency {
        return;
    }

    // reduce
    let map = match check_positive_definite(&q).and_then(|(q, _)| reduce_to_voronoi(&q)) {
        Ok(m) => m,
        Err(e) => {
            let (entity, residual) = voronoi_locus(&e, &[], patch.base_cell_index);
            rec.fail(Stage::Reduce, e.to_string(), entity, residual);
            return;
        }
    };
    rec.out.report.a = Some(rows(&map.linear));
    rec.out.a = Some(map.linear.clone());
    rec.pass(Stage::Reduce, format!("factor of a {d}x{d} form"));
    if last == Stage::Reduce {
        return;
    }

    match verify_voronoi(&map, &patch) {
        Ok(v) => {
            let passed = v.passed();
            let detail = format!("hausdorff {:e} of diameter {}", v.hausdorff, v.diameter);
            let residual = Some(v.hausdorff);
            rec.out.report.verify_voronoi = Some(v);
            if passed {
                rec.record(Stage::Verify, StageStatus::Pass, detail, None, residual);
            } else {
                rec.fail(Stage::Verify, detail, patch.base_cell_index, residual);
            }
        }
        Err(e) => {
            let (entity, residual) = voronoi_locus(&e, &[], patch.base_cell_index);
            rec.fail(Stage::Verify, e.to_string(), entity, residual);
        }
    }
}

/// Builds the patch described by a validated job.
pub fn build_patch(spec: &JobSpec) -> Result<TilingPatch, TilingError> {
    let lattice = Lattice::new(spec.basis())?;
    let cell = match &spec.cell {
        CellSpec::Explicit { vertices } => {
            let pts: Vec<Vector> = vertices.iter().map(|v| Vector::from_column_slice(v)).collect();
            Parallelohedron::from_vertices(&pts)?
        }
        CellSpec::Named(_) => dirichlet_cell(&lattice)?,
    };
    generate_patch_at(&cell, &lattice, spec.radius, spec.base.as_deref())
}

// Failures before a patch exists are attributed to cell 0, the base cell slot.
fn tiling_locus(e: &TilingError) -> (usize, Option<f64>) {
    match e {
        TilingError::SingularBasis(det) => (0, Some(*det)),
        TilingError::AnomalousRidge { ridge, valence } => (*ridge, Some(*valence as f64)),
        TilingError::IncompleteStar(r) => (*r, None),
        _ => (0, None),
    }
}

fn scaling_locus(e: &ScalingError) -> (usize, Option<f64>) {
    match e {
        ScalingError::Infeasible { best_min } => (0, Some(*best_min)),
        ScalingError::NotCanonicalInput { ridge, residual }
        | ScalingError::InvariantizationFailed { ridge, residual } => (*ridge, Some(*residual)),
        ScalingError::NonPositiveWeight { index, value } => (*index, Some(*value)),
        ScalingError::LengthMismatch { expected, got } => (0, Some(*got as f64 - *expected as f64)),
        ScalingError::IncompleteStar(r) => (*r, None),
        _ => (0, None),
    }
}

fn voronoi_locus(e: &VoronoiError, facets: &[usize], base: usize) -> (usize, Option<f64>) {
    match e {
        VoronoiError::ResidualTooLarge { column, residual } => {
            (facets.get(*column).copied().unwrap_or(*column), Some(*residual))
        }
        VoronoiError::NotPositiveDefinite { min_eigenvalue } => (base, Some(*min_eigenvalue)),
        _ => (base, None),
    }
}

/// Serialized state passed between CLI stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub stage: Stage,
    pub spec: JobSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellRecord>,
    pub report: Report,
}

/// Per-cell lift data: lattice coordinates, gradient, offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub coords: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
}

impl Artifact {
    pub fn from_output(stage: Stage, spec: &JobSpec, out: &PipelineOutput) -> Self {
        let cells = match (&out.patch, &out.generatrix) {
            (Some(p), g) => (0..p.cell_count())
                .map(|c| CellRecord {
                    coords: p.cell_coords[c].clone(),
                    gradient: g.as_ref().map(|g| g.lifted[c].gradient.iter().copied().collect()),
                    offset: g.as_ref().map(|g| g.lifted[c].offset),
                })
                .collect(),
            _ => Vec::new(),
        };
        Artifact {
            stage,
            spec: spec.clone(),
            weights: out.scaling.as_ref().map(|s| s.weights.clone()),
            cells,
            report: out.report.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        to_json_pretty(self)
    }
}

/// A JobSpec document or an artifact of an earlier stage.
pub enum JobInput {
    Spec(Box<JobSpec>),
    Artifact(Box<Artifact>),
}

impl JobInput {
    pub fn parse(text: &str) -> Result<Self, JobError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("stage").is_some() && value.get("spec").is_some() {
            let art: Artifact = serde_json::from_value(value)?;
            art.spec.validate()?;
            Ok(JobInput::Artifact(Box::new(art)))
        } else {
            let spec: JobSpec = serde_json::from_value(value)?;
            spec.validate()?;
            Ok(JobInput::Spec(Box::new(spec)))
        }
    }

    pub fn spec(&self) -> &JobSpec {
        match self {
            JobInput::Spec(s) => s,
            JobInput::Artifact(a) => &a.spec,
        }
    }

    /// Weights carried over from a stage at or past `invariant`.
    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            JobInput::Artifact(a) if a.stage >= Stage::Invariant => a.weights.as_deref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    /// Wavefront OBJ of the lifted surface (planar tilings only).
    Mesh,
    /// CSV of coordinates, gradient and offset per cell.
    Table,
    /// SVG drawing of the tiling with facet weights.
    Snapshot,
}

impl ExportFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "mesh" => Some(Self::Mesh),
            "table" => Some(Self::Table),
            "snapshot" => Some(Self::Snapshot),
            _ => None,
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Self::Mesh => "surface.obj",
            Self::Table => "cells.csv",
            Self::Snapshot => "tiling.svg",
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{format:?} export needs dimension 2, got {dim}")]
    UnsupportedDim { format: ExportFormat, dim: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn export_surface<W: Write>(generatrix: &Generatrix, format: ExportFormat, out: W) -> Result<(), ExportError> {
    match format {
        ExportFormat::Mesh => export_mesh(generatrix, out),
        ExportFormat::Table => export_table(generatrix, out),
        ExportFormat::Snapshot => export_snapshot(generatrix, out),
    }
}

/// Polygon vertices of a planar cell in counter-clockwise order.
fn ccw_polygon(vertices: &[Vector]) -> Vec<Vector> {
    let c = mean_point(vertices);
    let mut vs = vertices.to_vec();
    vs.sort_by(|a, b| {
        let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
        let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
        ta.total_cmp(&tb)
    });
    vs
}

/// Fan triangulation of every cell about its center; shared vertices are merged.
fn export_mesh<W: Write>(generatrix: &Generatrix, mut out: W) -> Result<(), ExportError> {
    let patch = &generatrix.patch;
    if patch.dim() != 2 {
        return Err(ExportError::UnsupportedDim { format: ExportFormat::Mesh, dim: patch.dim() });
    }
    let mut index: BTreeMap<PointKey, usize> = BTreeMap::new();
    let mut verts: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut vertex_id = |p: &Vector, z: f64, verts: &mut Vec<[f64; 3]>| -> usize {
        *index.entry(point_key(p)).or_insert_with(|| {
            verts.push([p[0], p[1], z]);
            verts.len()
        })
    };
    for (c, cell) in patch.complex.cells.iter().enumerate() {
        let h = &generatrix.lifted[c];
        let center = patch.center(c);
        let apex = vertex_id(&center, h.value(&center), &mut verts);
        let ring: Vec<usize> = ccw_polygon(&cell.vertices).iter().map(|v| vertex_id(v, h.value(v), &mut verts)).collect();
        for i in 0..ring.len() {
            faces.push([apex, ring[i], ring[(i + 1) % ring.len()]]);
        }
    }
    writeln!(out, "# lifted surface: {} cells", patch.cell_count())?;
    for v in &verts {
        writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for f in &faces {
        writeln!(out, "f {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

/// Column names of the per-cell table for dimension `d`.
pub fn table_header(d: usize) -> Vec<String> {
    let mut h = vec!["cell".to_string()];
    h.extend((0..d).map(|i| format!("coord_{i}")));
    h.extend((0..d).map(|i| format!("center_{i}")));
    h.extend((0..d).map(|i| format!("gradient_{i}")));
    h.push("offset".into());
    h
}

fn export_table<W: Write>(generatrix: &Generatrix, out: W) -> Result<(), ExportError> {
    let patch = &generatrix.patch;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table_header(patch.dim()))?;
    for (c, l) in generatrix.lifted.iter().enumerate() {
        let mut row = vec![c.to_string()];
        row.extend(patch.cell_coords[c].iter().map(|x| x.to_string()));
        row.extend(patch.center(c).iter().map(|x| x.to_string()));
        row.extend(l.gradient.iter().map(|x| x.to_string()));
        row.push(l.offset.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Planar drawing; three-dimensional patches show the base cell's facets projected to the first two axes.
fn export_snapshot<W: Write>(generatrix: &Generatrix, mut out: W) -> Result<(), ExportError> {
    let patch = &generatrix.patch;
    let complex = &patch.complex;
    let mut polys: Vec<Vec<Vector>> = Vec::new();
    let mut labels: Vec<(Vector, f64)> = Vec::new();
    if patch.dim() == 2 {
        polys.extend(complex.cells.iter().map(|c| ccw_polygon(&c.vertices)));
        for (f, facet) in complex.facets.iter().enumerate() {
            labels.push((facet.barycenter.clone(), generatrix.scaling.weights[f]));
        }
    } else {
        for f in patch.base_facets() {
            let facet = &complex.facets[f];
            let flat: Vec<Vector> = facet.vertices.iter().map(|v| Vector::from_column_slice(&[v[0], v[1]])).collect();
            polys.push(ccw_polygon(&flat));
            labels.push((Vector::from_column_slice(&[facet.barycenter[0], facet.barycenter[1]]), generatrix.scaling.weights[f]));
        }
    }
    let all: Vec<&Vector> = polys.iter().flatten().collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &all {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let px = |p: &Vector| ((p[0] - lo[0]) / span * 560.0 + 20.0, (hi[1] - p[1]) / span * 560.0 + 20.0);
    let mut svg = String::new();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="600" height="600">"#).unwrap();
    for poly in &polys {
        let pts: Vec<String> = poly.iter().map(|p| { let (x, y) = px(p); format!("{x:.2},{y:.2}") }).collect();
        writeln!(svg, r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1"/>"#, pts.join(" ")).unwrap();
    }
    for (p, w) in &labels {
        let (x, y) = px(p);
        writeln!(svg, r#"<text x="{x:.2}" y="{y:.2}" font-size="9" text-anchor="middle">{w:.3}</text>"#).unwrap();
    }
    svg.push_str("</svg>\n");
    out.write_all(svg.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex_spec() -> JobSpec {
        JobSpec::from_json(
            r#"{"dimension": 2, "lattice": [1, 0.5, 0, 0.8660254037844386], "cell": "dirichlet",
                "radius": 2, "scaling": "solve"}"#,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = hex_spec();
        s.dimension = 4;
        assert!(s.validate().is_err());
        let mut s = hex_spec();
        s.radius = 0;
        assert!(s.validate().is_err());
        let mut s = hex_spec();
        s.scaling = ScalingSpec::Explicit { weights: vec![1.0, -1.0] };
        assert!(s.validate().is_err());
    }

    #[test]
    fn hexagon_pipeline_passes() {
        let out = run_pipeline(&hex_spec());
        assert!(out.report.passed, "{}", out.report.to_json());
        assert_eq!(out.report.exit_code, 0);
        let q = out.report.q.unwrap();
        assert!((q[0][0] - 1.0).abs() < 1e-9 && q[0][1].abs() < 1e-9);
    }

    #[test]
    fn perturbed_weights_fail_at_generatrix() {
        let mut s = hex_spec();
        s.scaling = ScalingSpec::Explicit { weights: vec![1.1, 1.0, 1.0] };
        let out = run_pipeline(&s);
        assert_eq!(out.report.failed_stage, Some(Stage::Generatrix));
        assert_eq!(out.report.exit_code, Stage::Generatrix.exit_code());
        assert!(out.report.stage(Stage::Generatrix).unwrap().entity.is_some());
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_pipeline(&hex_spec()).report.to_json();
        let b = run_pipeline(&hex_spec()).report.to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn artifact_round_trip() {
        let spec = hex_spec();
        let out = run_pipeline_until(&spec, Stage::Invariant, None);
        let art = Artifact::from_output(Stage::Invariant, &spec, &out);
        let input = JobInput::parse(&art.to_json()).unwrap();
        let w = input.weights().unwrap();
        let next = run_pipeline_until(input.spec(), Stage::Verify, Some(w));
        assert!(next.report.passed);
        assert_eq!(next.report.stage(Stage::Solve).unwrap().status, StageStatus::Skipped);
    }

    fn square_spec(radius: usize) -> JobSpec {
        JobSpec::from_json(&format!(
            r#"{{"dimension": 2, "lattice": [1, 0, 0, 1],
                "cell": {{"vertices": [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]}},
                "radius": {radius}, "scaling": {{"weights": [1]}}}}"#
        ))
        .unwrap()
    }

    fn mesh_vertices(obj: &str) -> Vec<[f64; 3]> {
        obj.lines()
            .filter_map(|l| l.strip_prefix("v "))
            .map(|l| {
                let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
                [v[0], v[1], v[2]]
            })
            .collect()
    }

    fn height_at(verts: &[[f64; 3]], x: f64, y: f64) -> f64 {
        verts.iter().find(|v| (v[0] - x).abs() < 1e-9 && (v[1] - y).abs() < 1e-9).expect("vertex")[2]
    }

    #[test]
    fn square_pipeline_recovers_identity() {
        let out = run_pipeline(&square_spec(2));
        assert!(out.report.passed, "{}", out.report.to_json());
        let q = out.report.q.unwrap();
        assert!((q[0][0] - 1.0).abs() < 1e-9 && (q[1][1] - 1.0).abs() < 1e-9 && q[0][1].abs() < 1e-9);
    }

    #[test]
    fn square_mesh_has_unit_corner_apexes() {
        let out = run_pipeline_until(&square_spec(1), Stage::Generatrix, None);
        let g = out.generatrix.unwrap();
        assert_eq!(g.patch.cell_count(), 9);
        let mut buf = Vec::new();
        export_surface(&g, ExportFormat::Mesh, &mut buf).unwrap();
        let obj = String::from_utf8(buf).unwrap();
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 9 * 4);
        let verts = mesh_vertices(&obj);
        for (x, y) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            assert!((height_at(&verts, x, y) - 1.0).abs() < 1e-12);
        }
        assert!((height_at(&verts, 1.0, 0.0) - 0.5).abs() < 1e-12);
        assert!(height_at(&verts, 0.0, 0.0).abs() < 1e-12);
    }

    #[test]
    fn hexagon_mesh_first_shell_is_half() {
        let out = run_pipeline_until(&hex_spec(), Stage::Generatrix, None);
        let g = out.generatrix.unwrap();
        let mut buf = Vec::new();
        export_surface(&g, ExportFormat::Mesh, &mut buf).unwrap();
        let verts = mesh_vertices(&String::from_utf8(buf).unwrap());
        for k in 0..6 {
            let t = std::f64::consts::FRAC_PI_3 * k as f64;
            assert!((height_at(&verts, t.cos(), t.sin()) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn table_has_fixed_header_and_one_row_per_cell() {
        let out = run_pipeline_until(&hex_spec(), Stage::Generatrix, None);
        let g = out.generatrix.unwrap();
        let mut buf = Vec::new();
        export_surface(&g, ExportFormat::Table, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "cell,coord_0,coord_1,center_0,center_1,gradient_0,gradient_1,offset");
        assert_eq!(lines.count(), g.patch.cell_count());
    }

    #[test]
    fn mesh_rejects_three_dimensions() {
        let spec = JobSpec::from_json(
            r#"{"dimension": 3, "lattice": [-1, 1, 1, 1, -1, 1, 1, 1, -1], "cell": "dirichlet",
                "radius": 1, "scaling": "facet-norm"}"#,
        )
        .unwrap();
        let out = run_pipeline_until(&spec, Stage::Generatrix, None);
        let g = out.generatrix.unwrap();
        let err = export_surface(&g, ExportFormat::Mesh, Vec::new()).unwrap_err();
        assert!(matches!(err, ExportError::UnsupportedDim { dim: 3, .. }));
        let mut svg = Vec::new();
        export_surface(&g, ExportFormat::Snapshot, &mut svg).unwrap();
        assert!(String::from_utf8(svg).unwrap().contains("<polygon"));
    }

    #[test]
    fn failed_stages_carry_entity() {
        let mut s = hex_spec();
        s.scaling = ScalingSpec::Explicit { weights: vec![1.1, 1.0, 1.0] };
        let report = run_pipeline(&s).report;
        for r in report.stages.iter().filter(|r| r.status == StageStatus::Fail) {
            assert!(r.entity.is_some() && r.residual.is_some());
        }
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let text = to_json_pretty(&[0.1f64, 1.0 / 3.0, -2.5e-17]);
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("3.3333333333333331e-1"), "{text}");
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0, -2.5e-17]);
    }
}
