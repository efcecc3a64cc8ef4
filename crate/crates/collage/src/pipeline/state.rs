//! In-memory state of a run.

use std::path::PathBuf;

use collage_core::{
    CritiqueReport, IterationSummary, PhotographicPlan, ProductNarrativeFramework, PromptSet,
    TransferDirections,
};

/// Everything produced for one collage.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: u32,
    pub framework: ProductNarrativeFramework,
    pub plan: PhotographicPlan,
    pub prompt_set: PromptSet,
    pub collage_path: PathBuf,
    /// Pixel digest of the collage.
    pub collage_digest: String,
    /// Absent for a collage that was never critiqued.
    pub critique: Option<CritiqueReport>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineState {
    pub transfer: Option<TransferDirections>,
    pub reference_analysis: Option<String>,
    pub history: Vec<IterationRecord>,
}

impl PipelineState {
    pub fn current(&self) -> Option<&IterationRecord> {
        self.history.last()
    }

    /// Index of the latest collage, 0 before any generation.
    pub fn iteration(&self) -> u32 {
        self.current().map_or(0, |r| r.iteration)
    }

    pub fn framework(&self) -> Option<&ProductNarrativeFramework> {
        self.current().map(|r| &r.framework)
    }

    pub fn plan(&self) -> Option<&PhotographicPlan> {
        self.current().map(|r| &r.plan)
    }

    pub fn prompt_set(&self) -> Option<&PromptSet> {
        self.current().map(|r| &r.prompt_set)
    }

    pub fn collage_path(&self) -> Option<&PathBuf> {
        self.current().map(|r| &r.collage_path)
    }

    pub fn critique_history(&self) -> Vec<&CritiqueReport> {
        self.history.iter().filter_map(|r| r.critique.as_ref()).collect()
    }

    pub fn record(&self, iteration: u32) -> Option<&IterationRecord> {
        self.history.iter().find(|r| r.iteration == iteration)
    }

    pub fn summaries(&self) -> Vec<IterationSummary> {
        self.history
            .iter()
            .map(|r| IterationSummary::from_report(r.iteration, r.critique.as_ref()))
            .collect()
    }
}
