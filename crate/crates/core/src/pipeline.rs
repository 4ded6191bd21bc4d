//! Stage orchestration: simulate → sample → landau → quantum → report.
//!
//! Every stage reads its inputs from the files written by the stages before
//! it, so a stage can be re-run alone, resumed after a failure, or fed an
//! external VTK field in place of the solver output. The run manifest in the
//! output directory records which stages completed and the digest of every
//! file they wrote.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{validate_config, SimulationConfig};
use crate::constants::{BOLTZMANN, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::field::Snapshot;
use crate::io::{self, RunManifest};
use crate::landau::{criterion_from_simulation, sweep_critical_velocity, InteractionModel, LandauParams, SimulationCriterion};
use crate::quantum::{build_mode_grid, de_broglie_wavelength, ladder_operators, occupations, solve_chemical_potential};
use crate::solver::run::{self, RunOutputs, RunSummary, CHECKPOINT_FILE, SNAPSHOT_DIR, SUMMARY_FILE};
use crate::trace::{
    detect_vortices, estimate_critical_velocity, pair_count, sample_lines, seed_equidistant, trace_streamline,
    CriticalEstimate, SampleTable, Streamline, VelocityField, VortexCore,
};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const STREAMLINES_CSV: &str = "streamlines.csv";
pub const STREAMLINES_VTK: &str = "streamlines.vtk";
pub const FLOW_FILE: &str = "flow_summary.json";
pub const CRITERION_FILE: &str = "criterion.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const LANDAU_FILE: &str = "landau.json";
pub const QUANTUM_FILE: &str = "quantum.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Simulate,
    Sample,
    Landau,
    Quantum,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Simulate, Stage::Sample, Stage::Landau, Stage::Quantum, Stage::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Sample => "sample",
            Stage::Landau => "landau",
            Stage::Quantum => "quantum",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub out: PathBuf,
    pub stages: Vec<Stage>,
    /// Skip requested stages that already completed with intact outputs,
    /// and continue an interrupted simulation from its checkpoint.
    pub resume: bool,
    /// Velocity field to sample instead of the solver output.
    pub field: Option<PathBuf>,
    /// Row label in the report.
    pub config_id: String,
}

impl PipelineOptions {
    pub fn new(out: impl Into<PathBuf>, stages: &[Stage]) -> Self {
        Self {
            out: out.into(),
            stages: stages.to_vec(),
            resume: false,
            field: None,
            config_id: "config".to_string(),
        }
    }
}

/// Output of the sample stage besides the CSV tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    /// The sampled VTK file: relative to the output directory for solver
    /// output, as given for an external field.
    pub field: String,
    pub external: bool,
    /// Mean speed of the non-solid probes on the outermost parallel lines
    /// [m/s].
    pub boundary_mean_speed: Option<f64>,
    /// Same over the inner parallel lines.
    pub central_mean_speed: Option<f64>,
    pub estimate: CriticalEstimate,
    pub vortex_cores: Vec<VortexCore>,
    pub vortex_pairs: usize,
    pub streamlines: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandauSummary {
    pub criterion: SimulationCriterion,
    pub model: InteractionModel,
    pub params: LandauParams,
    /// `(g, v_c)` with `p_c` from the sampled field.
    pub sweep: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumSummary {
    pub box_length: f64,
    pub mass: f64,
    pub temperature: f64,
    pub particles: f64,
    pub modes: usize,
    /// Lowest distinct levels with their degeneracies.
    pub levels: Vec<(f64, usize)>,
    pub chemical_potential: f64,
    pub ground_gap: f64,
    pub condensate_fraction: f64,
    /// Wavelength at the thermal kinetic energy `k_B T`.
    pub thermal_wavelength: f64,
    pub fock_levels: usize,
    pub fock_commutator_diagonal: Vec<String>,
}

/// One report row per configuration. Missing values are `None` and the
/// reason is given in `note`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub config_id: String,
    pub pore_count: usize,
    /// Common pore diameter [m]; `None` when the pores differ.
    pub diameter_m: Option<f64>,
    pub sigma_m: Vec<f64>,
    pub v_c_estimate_m_per_s: Option<f64>,
    pub q_squared: Option<f64>,
    pub threshold: Option<f64>,
    pub satisfied: Option<bool>,
    pub margin: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub config_id: String,
    /// Relative to the report's directory.
    pub file: String,
    pub points: Vec<(f64, f64)>,
}

/// Least-squares line `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub rows: Vec<ReportRow>,
    pub sweeps: Vec<SweepCurve>,
    /// Sample, histogram and streamline files, relative to the report's
    /// directory.
    pub files: Vec<String>,
    /// Critical-speed estimate against pore count, when at least two pore
    /// counts are present.
    pub pore_count_fit: Option<LinearFit>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub manifest: RunManifest,
    /// Present when the report stage ran or was resumed.
    pub report: Option<ReportBundle>,
    /// Stages skipped because they had already completed.
    pub skipped: Vec<Stage>,
}

pub fn fit_line(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

struct Context<'a> {
    cfg: &'a SimulationConfig,
    opts: &'a PipelineOptions,
    manifest: RunManifest,
}

impl Context<'_> {
    fn root(&self) -> &Path {
        &self.opts.out
    }

    fn path(&self, name: &str) -> PathBuf {
        self.opts.out.join(name)
    }

    fn record(&mut self, stage: Stage, names: &[&str]) -> Result<()> {
        let root = self.opts.out.clone();
        for name in names {
            self.manifest.record(&root, name, stage.as_str())?;
        }
        Ok(())
    }

    /// Completed earlier (possibly in another invocation) with outputs intact.
    fn available(&self, stage: Stage) -> bool {
        self.manifest.is_completed(stage.as_str()) && {
            let root = self.root();
            self.manifest
                .files_of(stage.as_str())
                .all(|f| io::manifest::file_sha256(&root.join(&f.path)).is_ok_and(|d| d == f.sha256))
        }
    }
}

/// Runs the requested stages in pipeline order and returns the manifest,
/// which is also written to the output directory after every stage.
///
/// A failed stage stops the pipeline; files and manifest entries of the
/// stages before it are kept.
pub fn run_pipeline(cfg: &SimulationConfig, opts: &PipelineOptions) -> Result<PipelineOutcome> {
    let report = validate_config(cfg);
    if !report.is_valid() {
        return Err(Error::Validation(report.violations));
    }
    std::fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    let hash = cfg.digest();
    let manifest = match RunManifest::read(&opts.out) {
        Ok(m) if m.config_hash == hash => m,
        Ok(_) if opts.resume => {
            return Err(Error::format(
                "manifest",
                "output directory holds results of a different configuration; cannot resume",
            ))
        }
        _ => RunManifest::new(hash),
    };
    let mut ctx = Context { cfg, opts, manifest };
    ctx.manifest.finished = None;

    let mut stages = opts.stages.clone();
    stages.sort();
    stages.dedup();
    let mut skipped = Vec::new();
    let mut bundle = None;
    for stage in stages {
        if opts.resume && ctx.available(stage) {
            log::info!("{stage}: already complete, skipping");
            skipped.push(stage);
            if stage == Stage::Report {
                bundle = Some(io::read_json(&ctx.path(REPORT_JSON))?);
            }
            continue;
        }
        log::info!("{stage}: running");
        ctx.manifest.forget_stage(stage.as_str());
        let result = match stage {
            Stage::Simulate => simulate(&mut ctx),
            Stage::Sample => sample(&mut ctx),
            Stage::Landau => landau(&mut ctx),
            Stage::Quantum => quantum(&mut ctx),
            Stage::Report => report_stage(&mut ctx).map(|b| bundle = Some(b)),
        };
        if let Err(e) = result {
            ctx.manifest.write(&opts.out)?;
            return Err(Error::Stage {
                stage: stage.to_string(),
                source: Box::new(e),
            });
        }
        ctx.manifest.mark_completed(stage.as_str());
        ctx.manifest.write(&opts.out)?;
    }
    ctx.manifest.finish();
    ctx.manifest.write(&opts.out)?;
    Ok(PipelineOutcome {
        manifest: ctx.manifest,
        report: bundle,
        skipped,
    })
}

fn missing(stage: Stage, needs: &str) -> Error {
    Error::Domain(format!("stage `{stage}` needs {needs}"))
}

fn simulate(ctx: &mut Context) -> Result<()> {
    let outputs = RunOutputs::new(ctx.root());
    let checkpoint = ctx.path(CHECKPOINT_FILE);
    let resumable = ctx.opts.resume && checkpoint.exists();
    let outcome = match resumable.then(|| io::read_checkpoint(&checkpoint)) {
        Some(Ok(ck)) if ck.config_digest == ctx.cfg.evolution_digest() => {
            log::info!("simulate: continuing from step {}", ck.snapshot.state.step);
            run::resume_simulation(ctx.cfg, &ck, Some(&outputs))?
        }
        _ => {
            // a fresh run must not leave snapshots of an older one behind
            let dir = ctx.path(SNAPSHOT_DIR);
            if dir.exists() {
                std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
            run::run_simulation(ctx.cfg, Some(&outputs))?
        }
    };
    log::info!(
        "simulate: {} steps, stopped by {:?}",
        outcome.summary.steps_taken,
        outcome.summary.stop_reason
    );
    let mut names = list_snapshots(ctx.root())?;
    names.push(CHECKPOINT_FILE.to_string());
    names.push(SUMMARY_FILE.to_string());
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    ctx.record(Stage::Simulate, &refs)
}

/// Every snapshot in the output directory, including those of an earlier,
/// interrupted part of a resumed run.
fn list_snapshots(root: &Path) -> Result<Vec<String>> {
    let dir = root.join(SNAPSHOT_DIR);
    let mut names = Vec::new();
    for entry in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        if let Some(name) = entry.file_name().to_str() {
            names.push(format!("{SNAPSHOT_DIR}/{name}"));
        }
    }
    names.sort();
    Ok(names)
}

/// The field the sample stage analyses: the external file if given,
/// otherwise the last snapshot of the simulate stage.
fn field_source(ctx: &Context) -> Result<(String, PathBuf, bool)> {
    if let Some(p) = &ctx.opts.field {
        return Ok((p.display().to_string(), p.clone(), true));
    }
    if !ctx.manifest.is_completed(Stage::Simulate.as_str()) {
        return Err(missing(Stage::Sample, "a completed simulate stage or an external field file"));
    }
    let summary: RunSummary = io::read_json(&ctx.path(SUMMARY_FILE))?;
    let name = summary
        .snapshots
        .iter()
        .rev()
        .find_map(|s| s.file.clone())
        .ok_or_else(|| missing(Stage::Sample, "a written snapshot"))?;
    let path = ctx.path(&name);
    Ok((name, path, false))
}

/// Everything the sample stage derives from one field.
#[derive(Debug, Clone)]
pub struct FlowAnalysis {
    pub tables: Vec<SampleTable>,
    pub streamlines: Vec<Streamline>,
    pub summary: FlowSummary,
}

/// Samples, traces and scans `snap` with the settings of `cfg`.
pub fn analyse_field(cfg: &SimulationConfig, snap: &Snapshot, field: &str, external: bool) -> Result<FlowAnalysis> {
    let domain = cfg.domain_spec();
    let (parallel, perpendicular) = sample_lines(snap, &domain)?;
    let tables = vec![parallel, perpendicular];
    let estimate = estimate_critical_velocity(&tables)?;

    let mean = |lines: Vec<&crate::trace::SampleLine>| {
        let speeds: Vec<f64> = lines
            .iter()
            .flat_map(|l| l.probes.iter())
            .filter(|p| !p.in_solid)
            .map(|p| p.speed)
            .collect();
        (!speeds.is_empty()).then(|| speeds.iter().sum::<f64>() / speeds.len() as f64)
    };
    // lines parallel to the pore wall; the perpendicular ones cross the pores
    let boundary_mean_speed = mean(tables[0].boundary_lines().collect());
    let central_mean_speed = mean(tables[0].central_lines().collect());

    let a = &cfg.analysis;
    let region = domain.liquid_region();
    let pair_distance = a.pair_distance.unwrap_or(0.25 * region.width());
    let vortex_cores = detect_vortices(snap, a.vortex_threshold, pair_distance);
    let vortex_pairs = pair_count(&vortex_cores);

    let g = snap.grid();
    let step = a.streamline_step.unwrap_or(0.5 * g.h_min());
    let max_length = a
        .streamline_max_length
        .unwrap_or(2.0 * (region.width() + region.height()));
    let stagnation = 1e-3 * cfg.fluids.v_ref;
    let mut streamlines = Vec::new();
    for seed in seed_equidistant(&region, a.streamline_seeds) {
        if snap.is_solid(seed[0], seed[1]) {
            continue;
        }
        streamlines.push(trace_streamline(snap, seed, step, max_length, stagnation)?);
    }

    let summary = FlowSummary {
        field: field.to_string(),
        external,
        boundary_mean_speed,
        central_mean_speed,
        estimate,
        vortex_cores,
        vortex_pairs,
        streamlines: streamlines.len(),
    };
    Ok(FlowAnalysis {
        tables,
        streamlines,
        summary,
    })
}

fn sample(ctx: &mut Context) -> Result<()> {
    let (label, path, external) = field_source(ctx)?;
    let snap = io::read_vtk(&path)?;
    let expected = ctx.cfg.grid_spec();
    if external && (snap.grid().nx, snap.grid().ny) != (expected.nx, expected.ny) {
        log::warn!(
            "sample: external field is {}×{}, configuration grid is {}×{}",
            snap.grid().nx,
            snap.grid().ny,
            expected.nx,
            expected.ny
        );
    }
    let flow = analyse_field(ctx.cfg, &snap, &label, external)?;
    io::write_file(&ctx.path(SAMPLES_FILE), |w| io::write_samples(&flow.tables, w))?;
    io::write_file(&ctx.path(HISTOGRAM_FILE), |w| io::write_histogram(&flow.summary.estimate, w))?;
    io::write_file(&ctx.path(STREAMLINES_CSV), |w| io::write_streamlines_csv(&flow.streamlines, w))?;
    let vtk = ctx.path(STREAMLINES_VTK);
    io::write_file(&vtk, |w| io::write_streamlines_vtk(&flow.streamlines, w).map_err(|e| Error::io(&vtk, e)))?;
    io::write_json(&ctx.path(FLOW_FILE), &flow.summary)?;
    ctx.record(
        Stage::Sample,
        &[SAMPLES_FILE, HISTOGRAM_FILE, STREAMLINES_CSV, STREAMLINES_VTK, FLOW_FILE],
    )
}

/// Criterion and interaction sweep for sampled tables.
pub fn evaluate_landau(cfg: &SimulationConfig, tables: &[SampleTable]) -> Result<LandauSummary> {
    let l = &cfg.landau;
    let model = l.model();
    let criterion = criterion_from_simulation(tables, &l.params(0.0), &model, cfg.fluids.v_ref)?;
    let params = l.params(criterion.p_c);
    let sweep = sweep_critical_velocity(&params, &model, &l.sweep_values())?;
    Ok(LandauSummary {
        criterion,
        model,
        params,
        sweep,
    })
}

fn landau(ctx: &mut Context) -> Result<()> {
    if !ctx.manifest.is_completed(Stage::Sample.as_str()) {
        return Err(missing(Stage::Landau, "a completed sample stage"));
    }
    let tables = io::read_samples(io::open(&ctx.path(SAMPLES_FILE))?)?;
    let summary = evaluate_landau(ctx.cfg, &tables)?;
    let row = io::CriterionRow::new(ctx.opts.config_id.clone(), &summary.criterion.result);
    io::write_file(&ctx.path(CRITERION_FILE), |w| io::write_criterion_rows(&[row], w))?;
    io::write_file(&ctx.path(SWEEP_FILE), |w| io::write_sweep(&summary.sweep, w))?;
    io::write_json(&ctx.path(LANDAU_FILE), &summary)?;
    ctx.record(Stage::Landau, &[CRITERION_FILE, SWEEP_FILE, LANDAU_FILE])
}

/// Mode statistics and the truncated Fock check for the configured box.
pub fn evaluate_quantum(cfg: &SimulationConfig) -> Result<QuantumSummary> {
    let q = &cfg.quantum;
    let box_length = q.box_length.unwrap_or(cfg.domain.width);
    let mass = cfg.landau.mass;
    let n_max = u32::try_from(q.n_max).map_err(|_| Error::Domain(format!("n_max {} is too large", q.n_max)))?;
    let grid = build_mode_grid(box_length, n_max, mass)?;
    let mu = solve_chemical_potential(&grid, q.particles, q.temperature)?;
    let n = occupations(&grid, &mu, q.temperature);
    let fock = ladder_operators(q.fock_levels)?;
    let rest = mass * SPEED_OF_LIGHT * SPEED_OF_LIGHT;
    Ok(QuantumSummary {
        box_length,
        mass,
        temperature: q.temperature,
        particles: q.particles,
        modes: grid.modes.len(),
        levels: grid.degeneracies().into_iter().take(5).collect(),
        chemical_potential: mu.value,
        ground_gap: mu.gap,
        condensate_fraction: n[0] / n.iter().sum::<f64>(),
        thermal_wavelength: de_broglie_wavelength(BOLTZMANN * q.temperature, rest)?,
        fock_levels: q.fock_levels,
        fock_commutator_diagonal: fock.commutator().diagonal().iter().map(|s| s.to_string()).collect(),
    })
}

fn quantum(ctx: &mut Context) -> Result<()> {
    let summary = evaluate_quantum(ctx.cfg)?;
    io::write_json(&ctx.path(QUANTUM_FILE), &summary)?;
    ctx.record(Stage::Quantum, &[QUANTUM_FILE])
}

/// The report row of one configuration from whatever stage outputs exist.
fn report_row(cfg: &SimulationConfig, config_id: &str, landau: Option<&LandauSummary>, note: Option<String>) -> ReportRow {
    let d0 = cfg.pores.first().map(|p| p.diameter);
    let diameter_m = d0.filter(|d| cfg.pores.iter().all(|p| p.diameter == *d));
    let r = landau.map(|l| l.criterion.result);
    ReportRow {
        config_id: config_id.to_string(),
        pore_count: cfg.pores.len(),
        diameter_m,
        sigma_m: cfg.pores.iter().map(|p| p.sigma).collect(),
        v_c_estimate_m_per_s: landau.map(|l| l.criterion.critical_speed),
        q_squared: r.map(|r| r.q * r.q),
        threshold: r.map(|r| r.threshold),
        satisfied: r.map(|r| r.satisfied),
        margin: r.map(|r| r.margin),
        note,
    }
}

fn report_stage(ctx: &mut Context) -> Result<ReportBundle> {
    let (landau, note) = if ctx.manifest.is_completed(Stage::Landau.as_str()) {
        let l: LandauSummary = io::read_json(&ctx.path(LANDAU_FILE))?;
        let note = l
            .criterion
            .degenerate
            .then(|| "all probe speeds identical; estimate is that speed".to_string());
        (Some(l), note)
    } else {
        (None, Some("landau stage has not run".to_string()))
    };
    let row = report_row(ctx.cfg, &ctx.opts.config_id, landau.as_ref(), note);
    let sweeps = landau
        .iter()
        .map(|l| SweepCurve {
            config_id: ctx.opts.config_id.clone(),
            file: SWEEP_FILE.to_string(),
            points: l.sweep.clone(),
        })
        .collect();
    let files = if ctx.manifest.is_completed(Stage::Sample.as_str()) {
        [SAMPLES_FILE, HISTOGRAM_FILE, STREAMLINES_CSV, STREAMLINES_VTK]
            .map(String::from)
            .to_vec()
    } else {
        Vec::new()
    };
    let bundle = ReportBundle {
        rows: vec![row],
        sweeps,
        files,
        pore_count_fit: None,
    };
    write_report(&ctx.opts.out, &bundle)?;
    ctx.record(Stage::Report, &[REPORT_JSON, REPORT_CSV])?;
    Ok(bundle)
}

/// Writes `report.json` and the flat `report.csv` (σ list joined by `;`).
pub fn write_report(dir: &Path, bundle: &ReportBundle) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        config_id: &'a str,
        pore_count: usize,
        diameter_m: Option<f64>,
        sigma_m: String,
        v_c_estimate_m_per_s: Option<f64>,
        q_squared: Option<f64>,
        threshold: Option<f64>,
        satisfied: Option<bool>,
        margin: Option<f64>,
        note: &'a str,
    }
    let rows: Vec<Row> = bundle
        .rows
        .iter()
        .map(|r| Row {
            config_id: &r.config_id,
            pore_count: r.pore_count,
            diameter_m: r.diameter_m,
            sigma_m: r.sigma_m.iter().map(|s| format!("{s:e}")).collect::<Vec<_>>().join(";"),
            v_c_estimate_m_per_s: r.v_c_estimate_m_per_s,
            q_squared: r.q_squared,
            threshold: r.threshold,
            satisfied: r.satisfied,
            margin: r.margin,
            note: r.note.as_deref().unwrap_or(""),
        })
        .collect();
    io::write_file(&dir.join(REPORT_CSV), |w| io::tables::write_rows(&rows, w))?;
    io::write_json(&dir.join(REPORT_JSON), bundle)
}

/// A named configuration for [`run_batch`].
#[derive(Debug, Clone)]
pub struct BatchEntry {
    pub id: String,
    pub config: SimulationConfig,
}

#[derive(Debug)]
pub struct BatchOutcome {
    pub report: ReportBundle,
    /// Per-configuration results in input order.
    pub runs: Vec<(String, Result<PipelineOutcome>)>,
}

/// Runs the full pipeline for each entry in `out/<id>/`, at most `workers`
/// at a time, then merges the rows into `out/report.{json,csv}`.
///
/// Each configuration is independent, so the outputs do not depend on the
/// worker count. A failed configuration gets a row with a null reason.
pub fn run_batch(entries: &[BatchEntry], out: &Path, workers: usize, resume: bool) -> Result<BatchOutcome> {
    let mut ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("configuration ids must be unique".into()));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let run_one = |e: &BatchEntry| {
        let mut opts = PipelineOptions::new(out.join(&e.id), &Stage::ALL);
        opts.resume = resume;
        opts.config_id = e.id.clone();
        run_pipeline(&e.config, &opts)
    };
    let workers = workers.clamp(1, entries.len().max(1));
    let mut results: Vec<Option<Result<PipelineOutcome>>> = entries.iter().map(|_| None).collect();
    if workers == 1 {
        for (slot, e) in results.iter_mut().zip(entries) {
            *slot = Some(run_one(e));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let done = std::sync::Mutex::new(&mut results);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some(e) = entries.get(k) else { break };
                    let r = run_one(e);
                    done.lock().unwrap()[k] = Some(r);
                });
            }
        });
    }

    let mut bundle = ReportBundle {
        rows: Vec::new(),
        sweeps: Vec::new(),
        files: Vec::new(),
        pore_count_fit: None,
    };
    let mut runs = Vec::new();
    for (e, r) in entries.iter().zip(results) {
        let r = r.expect("every entry was run");
        match &r {
            Ok(o) => {
                let b = o.report.as_ref().expect("the full pipeline writes a report");
                bundle.rows.extend(b.rows.iter().cloned());
                bundle.sweeps.extend(b.sweeps.iter().map(|s| SweepCurve {
                    file: format!("{}/{}", e.id, s.file),
                    ..s.clone()
                }));
                bundle.files.extend(b.files.iter().map(|f| format!("{}/{f}", e.id)));
            }
            Err(err) => {
                bundle
                    .rows
                    .push(report_row(&e.config, &e.id, None, Some(format!("pipeline failed: {err}"))));
            }
        }
        runs.push((e.id.clone(), r));
    }
    let points: Vec<(f64, f64)> = bundle
        .rows
        .iter()
        .filter_map(|r| r.v_c_estimate_m_per_s.map(|v| (r.pore_count as f64, v)))
        .collect();
    bundle.pore_count_fit = fit_line(&points);
    write_report(out, &bundle)?;
    Ok(BatchOutcome { report: bundle, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PoreSpec;

    fn small(steps: u64) -> SimulationConfig {
        let mut cfg = SimulationConfig::default();
        cfg.domain.width = 1.6e-6;
        cfg.domain.liquid_height = 0.8e-6;
        cfg.grid.nx = 32;
        cfg.grid.ny = 34;
        cfg.pores = vec![PoreSpec::new(0.8e-6, 0.2e-6)];
        cfg.run.steps = steps;
        cfg.run.initial_swirl = 1.0;
        cfg.run.steady_tol = 0.0;
        cfg.quantum.n_max = 3;
        cfg
    }

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.as_str().parse::<Stage>().unwrap(), s);
        }
        assert!("plot".parse::<Stage>().is_err());
    }

    #[test]
    fn line_fit() {
        let f = fit_line(&[(2.0, 5.0), (3.0, 7.0), (4.0, 9.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_line(&[(1.0, 1.0)]).is_none());
        assert!(fit_line(&[(1.0, 1.0), (1.0, 2.0)]).is_none());
    }

    #[test]
    fn zero_step_simulate_writes_snapshot_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_pipeline(&small(0), &PipelineOptions::new(dir.path(), &[Stage::Simulate])).unwrap();
        let names: Vec<&str> = out.manifest.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(names, ["snapshots/snapshot_00000000.vtk", CHECKPOINT_FILE, SUMMARY_FILE]);
        assert!(out.report.is_none());
        assert!(RunManifest::read(dir.path()).unwrap().verify(dir.path()).is_empty());
    }

    #[test]
    fn sample_without_a_field_fails_and_keeps_earlier_output() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_pipeline(&small(0), &PipelineOptions::new(dir.path(), &[Stage::Sample])).unwrap_err();
        assert!(matches!(err, Error::Stage { ref stage, .. } if stage == "sample"), "{err}");
        assert!(RunManifest::read(dir.path()).unwrap().completed_stages.is_empty());
    }

    #[test]
    fn stages_can_be_run_one_invocation_at_a_time() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(2);
        for stage in Stage::ALL {
            run_pipeline(&cfg, &PipelineOptions::new(dir.path(), &[stage])).unwrap();
        }
        let m = RunManifest::read(dir.path()).unwrap();
        assert_eq!(m.completed_stages.len(), 5);
        assert!(m.verify(dir.path()).is_empty());
        let bundle: ReportBundle = io::read_json(&dir.path().join(REPORT_JSON)).unwrap();
        assert_eq!(bundle.rows.len(), 1);
        assert!(bundle.rows[0].satisfied.is_some());
    }

    #[test]
    fn resume_skips_intact_stages_and_reruns_damaged_ones() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(2);
        let mut opts = PipelineOptions::new(dir.path(), &[Stage::Simulate, Stage::Sample]);
        run_pipeline(&cfg, &opts).unwrap();
        opts.resume = true;
        let again = run_pipeline(&cfg, &opts).unwrap();
        assert_eq!(again.skipped, [Stage::Simulate, Stage::Sample]);

        std::fs::write(dir.path().join(SAMPLES_FILE), "tampered").unwrap();
        let again = run_pipeline(&cfg, &opts).unwrap();
        assert_eq!(again.skipped, [Stage::Simulate]);
        assert!(again.manifest.verify(dir.path()).is_empty());

        let mut other = cfg.clone();
        other.grid.nx = 34;
        assert!(run_pipeline(&other, &opts).is_err());
    }

    #[test]
    fn report_without_landau_has_null_reason() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_pipeline(&small(0), &PipelineOptions::new(dir.path(), &[Stage::Report])).unwrap();
        let row = &out.report.unwrap().rows[0];
        assert_eq!(row.satisfied, None);
        assert!(row.note.as_deref().unwrap().contains("landau"));
        assert_eq!(row.diameter_m, Some(0.2e-6));
    }
}
