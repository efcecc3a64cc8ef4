//! Allocation-only core of the campaign collage engine.
//!
//! Holds the plan documents exchanged between agents, their validation and
//! canonical JSON form, the two-gate critique rule, loop control decisions,
//! grid geometry, and the relation-matrix / CKA structural metric. Nothing
//! here performs IO; the `collage` crate supplies providers, persistence and
//! the command line.
#![no_std]

extern crate alloc;

pub mod codec;
pub mod control;
pub mod gate;
pub mod grid;
pub mod layout;
pub mod plan;
pub mod prompt;
pub mod relation;
pub mod rubric;
pub mod validate;

pub use codec::{parse_document, to_canonical_json, CodecError, DocKind, Document};
pub use control::{next_step, select_final, IterationSummary, NextStep, ReturnPolicy, StopReason};
pub use gate::{CritiqueReport, GateConfig, GateOutcome, GateRule, NarrativeScores, PhotoScores};
pub use grid::{Raster, GridError};
pub use layout::{GridLayout, LayoutError, Position};
pub use plan::{
    FrameworkField, GateKind, GlobalVisualStyle, HeroPresence, PanelDecision, PanelPrompts,
    PhotographicPlan, ProductNarrativeFramework, PromptSet, ShotScale, Suggestion,
    TransferDirections,
};
pub use relation::{cka, relation_matrix, MetricError, RelationMatrix};
pub use rubric::{Alignment, RubricScores, ScoredReason, TransferReport, Verdict};
pub use validate::{Context, Validate, ValidationReport};
