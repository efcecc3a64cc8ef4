//! Canonical JSON form of plan documents and tolerant parsing of model output.
//!
//! Parsing distinguishes text that is not JSON at all ([`CodecError::Parse`])
//! from JSON that does not satisfy the document's schema or invariants
//! ([`CodecError::Schema`]). Model responses are often wrapped in prose or
//! markdown fences; [`extract_json_candidate`] strips those first.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::gate::{CritiqueReport, NarrativeScores, PhotoScores};
use crate::plan::{
    PanelPrompts, PhotographicPlan, ProductNarrativeFramework, PromptSet, Suggestion,
    TransferDirections,
};
use crate::rubric::{RubricScores, TransferReport};
use crate::validate::{Context, Validate, ValidationReport};

/// Type tag naming a document kind on the wire and in repair prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DocKind {
    Framework,
    Plan,
    PanelPrompts,
    PromptSet,
    Transfer,
    NarrativeScores,
    PhotoScores,
    Suggestion,
    Critique,
    VisualRubric,
    TransferReport,
}

impl DocKind {
    pub fn name(self) -> &'static str {
        match self {
            DocKind::Framework => "product_narrative_framework",
            DocKind::Plan => "photographic_plan",
            DocKind::PanelPrompts => "panel_prompts",
            DocKind::PromptSet => "prompt_set",
            DocKind::Transfer => "transfer_plan",
            DocKind::NarrativeScores => "narrative_scores",
            DocKind::PhotoScores => "photo_scores",
            DocKind::Suggestion => "suggestion",
            DocKind::Critique => "critique_report",
            DocKind::VisualRubric => "visual_quality_rubric",
            DocKind::TransferReport => "transfer_report",
        }
    }
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A serializable, validatable plan document.
pub trait Document: Serialize + DeserializeOwned + Validate {
    const KIND: DocKind;
    /// Top-level keys that must be present. Checked before deserializing so
    /// every missing key is reported at once.
    const REQUIRED: &'static [&'static str];
}

macro_rules! document {
    ($ty:ty, $kind:expr, [$($key:literal),* $(,)?]) => {
        impl Document for $ty {
            const KIND: DocKind = $kind;
            const REQUIRED: &'static [&'static str] = &[$($key),*];
        }
    };
}

document!(
    ProductNarrativeFramework,
    DocKind::Framework,
    ["product_essence", "product_usage", "usage_context", "target_consumer_profile", "narrative_framework"]
);
document!(PhotographicPlan, DocKind::Plan, ["layout", "panels", "global_visual_style"]);
document!(PanelPrompts, DocKind::PanelPrompts, []);
document!(PromptSet, DocKind::PromptSet, ["prompts", "style_digest", "fidelity_block", "aesthetic_block"]);
document!(
    TransferDirections,
    DocKind::Transfer,
    ["abstract_narrative", "panel_roles", "panel_directives", "global_visual_style"]
);
document!(NarrativeScores, DocKind::NarrativeScores, ["identity", "usage", "context", "consumer"]);
document!(PhotoScores, DocKind::PhotoScores, ["realism", "coherence", "aesthetic"]);
document!(Suggestion, DocKind::Suggestion, ["gate", "what", "where", "how"]);
document!(CritiqueReport, DocKind::Critique, ["iteration", "narrative", "gate1_pass", "gates"]);
document!(RubricScores, DocKind::VisualRubric, ["aesthetics", "richness", "coherence"]);
document!(
    TransferReport,
    DocKind::TransferReport,
    ["grid_plan", "narrative_logic", "product_fit", "per_position", "verdict"]
);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodecError {
    #[error("not valid JSON: {0}")]
    Parse(String),
    #[error("{kind} failed schema: {report}")]
    Schema { kind: DocKind, report: ValidationReport },
}

impl CodecError {
    /// Human-readable list of problems, suitable for quoting back to a model.
    pub fn problems(&self) -> Vec<String> {
        match self {
            CodecError::Parse(msg) => alloc::vec![format!("response is not valid JSON: {msg}")],
            CodecError::Schema { report, .. } => report.violations().to_vec(),
        }
    }
}

/// Canonical serialized form: pretty JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("plan documents always serialize");
    s.push('\n');
    s
}

/// Parses and validates a document of kind `T` from model or file text.
pub fn parse_document<T: Document>(text: &str, ctx: &Context<'_>) -> Result<T, CodecError> {
    let candidate = extract_json_candidate(text);
    let mut value: Value =
        serde_json::from_str(candidate).map_err(|e| CodecError::Parse(e.to_string()))?;
    value = unwrap_envelope(value, T::KIND.name());

    let schema = |report: ValidationReport| CodecError::Schema { kind: T::KIND, report };
    match &value {
        Value::Object(map) => {
            let missing: Vec<String> = T::REQUIRED
                .iter()
                .filter(|k| !map.contains_key(**k))
                .map(|k| format!("missing key {k}"))
                .collect();
            if !missing.is_empty() {
                return Err(schema(missing.into()));
            }
        }
        _ => return Err(schema(alloc::vec![String::from("expected a JSON object")].into())),
    }

    let doc: T = serde_json::from_value(value)
        .map_err(|e| schema(alloc::vec![format!("{e}")].into()))?;
    let report = doc.validate(ctx);
    if report.is_ok() {
        Ok(doc)
    } else {
        Err(schema(report))
    }
}

/// `{"<kind>": {...}}` with a single key is unwrapped to its inner object.
fn unwrap_envelope(value: Value, envelope: &str) -> Value {
    match value {
        Value::Object(mut map) if map.len() == 1 && map.get(envelope).is_some_and(Value::is_object) => {
            map.remove(envelope).expect("checked")
        }
        other => other,
    }
}

/// Narrows a model response to the JSON object it most likely contains:
/// fenced code block content if present, otherwise the first balanced
/// `{ ... }` span. Falls back to the trimmed input.
pub fn extract_json_candidate(text: &str) -> &str {
    let trimmed = text.trim();
    if let Some(inner) = fenced_block(trimmed) {
        return inner;
    }
    if let Some(span) = balanced_object(trimmed) {
        return span;
    }
    trimmed
}

fn fenced_block(text: &str) -> Option<&str> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let end = body.find("```")?;
    Some(body[..end].trim())
}

fn balanced_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in text[start..].char_indices() {
        if in_string {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}
