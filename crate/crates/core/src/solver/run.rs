//! Driving a simulation to completion with snapshot and checkpoint output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Simulation, StepDiagnostics};
use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::field::Snapshot;
use crate::io::{self, Checkpoint};

pub const SNAPSHOT_DIR: &str = "snapshots";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const SUMMARY_FILE: &str = "run_summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    StepLimit,
    EndTime,
    SteadyState,
}

/// Where a run writes its files. Without it a run is purely in memory.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub dir: PathBuf,
}

impl RunOutputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn snapshot_name(step: u64) -> String {
        format!("{SNAPSHOT_DIR}/snapshot_{step:08}.vtk")
    }
}

/// Diagnostics at a written (or, for in-memory runs, scheduled) snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub step: u64,
    pub t: f64,
    /// Relative to the output directory.
    pub file: Option<String>,
    pub diagnostics: Option<StepDiagnostics>,
}

/// JSON run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub stop_reason: Option<StopReason>,
    pub error: Option<String>,
    pub steps_taken: u64,
    pub final_step: u64,
    pub final_time: f64,
    pub initial_liquid_volume: f64,
    pub final_liquid_volume: f64,
    /// Largest `max_divergence / divergence_bound` over all steps.
    pub worst_divergence_ratio: f64,
    pub divergence_violations: u64,
    pub total_clamp: f64,
    pub snapshots: Vec<SnapshotRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_snapshot: Snapshot,
    pub stop_reason: StopReason,
    /// Every step, in order.
    pub diagnostics: Vec<StepDiagnostics>,
    pub summary: RunSummary,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

pub fn run_simulation(cfg: &SimulationConfig, outputs: Option<&RunOutputs>) -> Result<RunOutcome> {
    let sim = Simulation::new(cfg)?;
    drive(sim, cfg, outputs, true)
}

/// Continues from a checkpoint written by an earlier run of the same
/// configuration. The result is bit-identical to an uninterrupted run.
pub fn resume_simulation(cfg: &SimulationConfig, checkpoint: &Checkpoint, outputs: Option<&RunOutputs>) -> Result<RunOutcome> {
    if checkpoint.config_digest != cfg.evolution_digest() {
        return Err(Error::format(
            "checkpoint",
            "checkpoint was written by a different configuration",
        ));
    }
    let mut sim = Simulation::new(cfg)?;
    if checkpoint.snapshot.mask != *sim.mask() || checkpoint.snapshot.state.grid != sim.state().grid {
        return Err(Error::format("checkpoint", "grid or mask does not match the configuration"));
    }
    sim.set_state(checkpoint.snapshot.state.clone());
    drive(sim, cfg, outputs, false)
}

struct Writer<'a> {
    root: &'a Path,
    digest: String,
    files: Vec<String>,
}

impl Writer<'_> {
    fn snapshot(&mut self, snap: &Snapshot) -> Result<String> {
        let name = RunOutputs::snapshot_name(snap.state.step);
        io::write_vtk(snap, &self.root.join(&name))?;
        self.note(&name);
        Ok(name)
    }

    fn checkpoint(&mut self, snap: &Snapshot) -> Result<()> {
        io::write_checkpoint(&self.root.join(CHECKPOINT_FILE), snap, &self.digest)?;
        self.note(CHECKPOINT_FILE);
        Ok(())
    }

    fn note(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }
}

fn drive(mut sim: Simulation, cfg: &SimulationConfig, outputs: Option<&RunOutputs>, fresh: bool) -> Result<RunOutcome> {
    let run = cfg.run.clone();
    let mut writer = match outputs {
        Some(o) => {
            let snaps = o.dir.join(SNAPSHOT_DIR);
            std::fs::create_dir_all(&snaps).map_err(|e| Error::io(&snaps, e))?;
            Some(Writer {
                root: &o.dir,
                digest: cfg.evolution_digest(),
                files: Vec::new(),
            })
        }
        None => None,
    };

    let mut summary = RunSummary {
        config_hash: cfg.digest(),
        stop_reason: None,
        error: None,
        steps_taken: 0,
        final_step: sim.state().step,
        final_time: sim.state().t,
        initial_liquid_volume: sim.state().liquid_volume(),
        final_liquid_volume: sim.state().liquid_volume(),
        worst_divergence_ratio: 0.0,
        divergence_violations: 0,
        total_clamp: 0.0,
        snapshots: Vec::new(),
    };
    if fresh {
        let snap = sim.snapshot();
        let file = writer.as_mut().map(|w| w.snapshot(&snap)).transpose()?;
        summary.snapshots.push(SnapshotRecord {
            step: snap.state.step,
            t: snap.state.t,
            file,
            diagnostics: None,
        });
    }

    let mut diagnostics = Vec::new();
    let result = (|| -> Result<StopReason> {
        loop {
            let s = sim.state();
            if s.step >= run.steps {
                return Ok(StopReason::StepLimit);
            }
            if run.end_time.is_some_and(|end| s.t >= end) {
                return Ok(StopReason::EndTime);
            }
            let d = sim.step()?;
            summary.steps_taken += 1;
            if d.divergence_bound > 0.0 {
                summary.worst_divergence_ratio = summary.worst_divergence_ratio.max(d.max_divergence / d.divergence_bound);
            }
            if !d.divergence_ok() {
                summary.divergence_violations += 1;
                log::warn!(
                    "step {}: divergence {:e} above bound {:e} (roundoff floor)",
                    d.step,
                    d.max_divergence,
                    d.divergence_bound
                );
            }
            summary.total_clamp += d.clamp_amount;
            let steady = d.relative_change < run.steady_tol;
            let step = d.step;
            diagnostics.push(d.clone());
            if steady {
                return Ok(StopReason::SteadyState);
            }
            if let Some(w) = writer.as_mut() {
                if run.snapshot_every > 0 && step % run.snapshot_every == 0 && step < run.steps {
                    let snap = sim.snapshot();
                    let file = w.snapshot(&snap)?;
                    summary.snapshots.push(SnapshotRecord {
                        step,
                        t: snap.state.t,
                        file: Some(file),
                        diagnostics: Some(d),
                    });
                }
                if run.checkpoint_every > 0 && step % run.checkpoint_every == 0 {
                    w.checkpoint(&sim.snapshot())?;
                }
            }
        }
    })();

    let final_snapshot = sim.snapshot();
    summary.final_step = final_snapshot.state.step;
    summary.final_time = final_snapshot.state.t;
    summary.final_liquid_volume = final_snapshot.state.liquid_volume();

    let stop_reason = match result {
        Ok(r) => r,
        Err(e) => {
            summary.error = Some(e.to_string());
            if let Some(o) = outputs {
                // keep whatever was written and record the failure
                let _ = io::write_json(&o.dir.join(SUMMARY_FILE), &summary);
            }
            return Err(e);
        }
    };
    summary.stop_reason = Some(stop_reason);

    let mut files = Vec::new();
    if let Some(mut w) = writer {
        let last_written = summary.snapshots.last().map(|s| s.step);
        if last_written != Some(final_snapshot.state.step) {
            let file = w.snapshot(&final_snapshot)?;
            summary.snapshots.push(SnapshotRecord {
                step: final_snapshot.state.step,
                t: final_snapshot.state.t,
                file: Some(file),
                diagnostics: diagnostics.last().cloned(),
            });
        }
        w.checkpoint(&final_snapshot)?;
        let root = w.root;
        io::write_json(&root.join(SUMMARY_FILE), &summary)?;
        w.note(SUMMARY_FILE);
        files = w.files;
    }
    Ok(RunOutcome {
        final_snapshot,
        stop_reason,
        diagnostics,
        summary,
        files,
    })
}
