//! The three creation agents and the reference agent.
//!
//! All agents share one [`Agents`] context holding the providers, prompt
//! templates and sampling settings. Each stage sends one structured chat
//! turn and parses the answer through the repair loop in [`repair`].

pub mod critique;
pub mod generation;
pub mod ideation;
pub mod prompts;
pub mod reference;
pub mod repair;

use std::sync::Arc;

use collage_core::{DocKind, GridLayout};
use serde::{Deserialize, Serialize};

use crate::picture::{InputError, Picture, PictureError, ProductInput};
use crate::protocol::label;
use crate::providers::{ChatProvider, ChatRequest, ImageProvider, ProviderError};

pub use critique::FailingDimensions;
pub use generation::{Canvas, Collage};
pub use ideation::{Refinement, Revision};
pub use prompts::{PromptError, PromptLibrary};
pub use reference::ReferenceExtraction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentSettings {
    /// Sampling temperature for ideation and prompt compilation.
    pub creative_temperature: f32,
    /// Sampling temperature for scoring turns.
    pub scoring_temperature: f32,
    /// Sampling temperature for repair turns.
    pub repair_temperature: f32,
    /// Follow-up turns allowed per malformed response.
    pub repair_budget: u32,
    /// Also condition the generator on the reference grid in reference mode.
    pub attach_reference: bool,
}

impl Default for AgentSettings {
    fn default() -> Self {
        Self {
            creative_temperature: 0.7,
            scoring_temperature: 0.0,
            repair_temperature: 0.0,
            repair_budget: 2,
            attach_reference: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("model output for {kind} still malformed after repair: {}", problems.join("; "))]
    MalformedPlan { kind: DocKind, problems: Vec<String> },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Picture(#[from] PictureError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl From<InputError> for AgentError {
    fn from(e: InputError) -> Self {
        AgentError::Precondition(e.to_string())
    }
}

/// Providers, templates and settings shared by every agent.
#[derive(Clone)]
pub struct Agents {
    pub chat: Arc<dyn ChatProvider>,
    pub image: Arc<dyn ImageProvider>,
    pub prompts: Arc<PromptLibrary>,
    pub settings: AgentSettings,
}

impl Agents {
    pub fn new(chat: Arc<dyn ChatProvider>, image: Arc<dyn ImageProvider>) -> Self {
        Self { chat, image, prompts: Arc::new(PromptLibrary::embedded()), settings: AgentSettings::default() }
    }

    pub fn with_prompts(mut self, prompts: PromptLibrary) -> Self {
        self.prompts = Arc::new(prompts);
        self
    }

    pub fn with_settings(mut self, settings: AgentSettings) -> Self {
        self.settings = settings;
        self
    }
}

/// Comma-separated position labels of a layout.
pub(crate) fn position_list(layout: &GridLayout) -> String {
    layout.positions().iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ")
}

/// Adds a captioned image part.
pub(crate) fn with_image(req: ChatRequest, caption: &str, picture: &Picture) -> ChatRequest {
    req.text(label::IMAGE, caption).image(picture)
}

pub(crate) fn product_parts(req: ChatRequest, input: &ProductInput) -> ChatRequest {
    req.text(label::PRODUCT_NAME, &input.name).text(label::USER_INTENT, input.intent_or_default())
}
