//! Machine-readable run trace persisted as `trace.json`.

use collage_core::{GateConfig, GridLayout, ReturnPolicy, StopReason};
use serde::{Deserialize, Serialize};

use super::Mode;
use crate::agents::Canvas;
use crate::providers::CallRecord;

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Reference,
    Stage1,
    Stage2,
    Stage3,
    Generate,
    Gate1,
    Gate2,
    Revision,
    Refinement,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    /// Milliseconds since the Unix epoch, or equal to `seq` under the logical clock.
    pub timestamp: u64,
    pub kind: EventKind,
    pub iteration: u32,
    /// SHA-256 of the artifact the event produced.
    pub digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<StopReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_iteration: Option<u32>,
}

/// Settings a run directory is bound to, recorded so `resume` can rebuild them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub max_iterations: u32,
    pub gates: GateConfig,
    pub layout: GridLayout,
    pub mode: Mode,
    pub return_policy: ReturnPolicy,
    pub canvas: Canvas,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub version: u32,
    pub config: TraceConfig,
    pub events: Vec<TraceEvent>,
    /// Provider calls in order, as request/response digests.
    #[serde(default)]
    pub calls: Vec<CallRecord>,
}

impl RunTrace {
    pub fn new(config: TraceConfig) -> Self {
        Self { version: TRACE_VERSION, config, events: Vec::new(), calls: Vec::new() }
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn terminal(&self) -> Option<&TraceEvent> {
        self.events.last().filter(|e| e.kind == EventKind::Stop)
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.terminal().and_then(|e| e.reason)
    }

    /// Trace invariants: strictly increasing sequence numbers, a single stop
    /// event, and only as the last event.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for w in self.events.windows(2) {
            if w[1].seq <= w[0].seq {
                out.push(format!("event seq {} does not follow {}", w[1].seq, w[0].seq));
            }
        }
        let stops = self.count(EventKind::Stop);
        if stops > 1 {
            out.push(format!("{stops} stop events"));
        }
        if stops == 1 && self.terminal().is_none() {
            out.push("stop event is not the last event".into());
        }
        if let Some(t) = self.terminal() {
            if t.reason.is_none() {
                out.push("stop event has no reason".into());
            }
        }
        out
    }
}
