//! The gated refinement loop as a resumable state machine.
//!
//! A run directory holds one artifact per stage and iteration plus
//! `trace.json`. Every completed step is appended to the trace right after
//! its artifact is written, so an interrupted run is resumed by replaying the
//! trace: steps already recorded are loaded from disk instead of calling a
//! provider, and the loop continues live from the first unrecorded step.

mod run;
pub mod state;
pub mod store;
pub mod trace;

use std::path::{Path, PathBuf};

use collage_core::{GateConfig, GridLayout, ReturnPolicy, StopReason};
use serde::{Deserialize, Serialize};

use crate::agents::{AgentError, Agents, Canvas};
use crate::picture::ProductInput;

pub use state::{IterationRecord, PipelineState};
pub use store::{persist_state, RunLock, RunStore};
pub use trace::{EventKind, RunTrace, TraceConfig, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Creation,
    Reference,
}

/// Source of trace timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clock {
    #[default]
    Wall,
    /// Timestamp equals the event sequence number, for reproducible traces.
    Logical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Critique rounds allowed after the initial collage.
    pub max_iterations: u32,
    pub gates: GateConfig,
    pub layout: GridLayout,
    pub run_dir: PathBuf,
    pub mode: Mode,
    pub return_policy: ReturnPolicy,
    /// Output size; `None` picks [`Canvas::default_for`] the layout.
    pub canvas: Option<Canvas>,
    pub clock: Clock,
}

pub const DEFAULT_MAX_ITERATIONS: u32 = 3;

impl PipelineConfig {
    pub fn new(run_dir: impl Into<PathBuf>) -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            gates: GateConfig::default(),
            layout: GridLayout::quad(),
            run_dir: run_dir.into(),
            mode: Mode::Creation,
            return_policy: ReturnPolicy::default(),
            canvas: None,
            clock: Clock::Wall,
        }
    }

    /// Settings recorded in an existing run directory's trace.
    pub fn from_run_dir(run_dir: &Path) -> Result<Self, PipelineError> {
        let trace = RunStore::new(run_dir)
            .load_trace()?
            .ok_or_else(|| PipelineError::CorruptRun(format!("{} has no trace", run_dir.display())))?;
        let c = trace.config;
        Ok(Self {
            max_iterations: c.max_iterations,
            gates: c.gates,
            layout: c.layout,
            run_dir: run_dir.to_path_buf(),
            mode: c.mode,
            return_policy: c.return_policy,
            canvas: Some(c.canvas),
            clock: Clock::Wall,
        })
    }

    pub fn canvas(&self) -> Canvas {
        self.canvas.unwrap_or_else(|| Canvas::default_for(&self.layout))
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        if self.max_iterations == 0 {
            return Err(PipelineError::Config("max iterations must be at least 1".into()));
        }
        let c = self.canvas();
        if !c.fits(&self.layout) {
            return Err(PipelineError::Config(format!(
                "canvas {}x{} does not divide into a {} grid",
                c.width, c.height, self.layout
            )));
        }
        Ok(())
    }

    pub fn trace_config(&self) -> TraceConfig {
        TraceConfig {
            max_iterations: self.max_iterations,
            gates: self.gates,
            layout: self.layout.clone(),
            mode: self.mode,
            return_policy: self.return_policy,
            canvas: self.canvas(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("run directory {} is in use by another process", .0.display())]
    Locked(PathBuf),
    #[error("corrupt run directory: {0}")]
    CorruptRun(String),
    #[error("run stopped: {0}")]
    Fatal(#[source] AgentError),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_collage: PathBuf,
    pub selected_iteration: u32,
    pub stop_reason: StopReason,
    pub state: PipelineState,
    pub trace: RunTrace,
}

/// Agents plus loop settings.
#[derive(Clone)]
pub struct Pipeline {
    agents: Agents,
    cfg: PipelineConfig,
}

impl Pipeline {
    pub fn new(agents: Agents, cfg: PipelineConfig) -> Self {
        Self { agents, cfg }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Runs to a stop, continuing whatever the run directory already records.
    pub fn run(&self, input: &ProductInput) -> Result<RunOutcome, PipelineError> {
        run::execute(&self.agents, &self.cfg, input)
    }

    /// Continues the run in `cfg.run_dir` from its own recorded input.
    pub fn resume(&self) -> Result<RunOutcome, PipelineError> {
        let store = RunStore::new(&self.cfg.run_dir);
        if store.load_trace()?.is_none() {
            return Err(PipelineError::CorruptRun(format!("{} has no trace", self.cfg.run_dir.display())));
        }
        let input = store.load_input()?;
        self.run(&input)
    }
}
