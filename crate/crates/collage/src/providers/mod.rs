//! Interfaces to the three external model capabilities: multimodal chat,
//! image generation and image embedding.
//!
//! Each capability has a live HTTP client ([`http`]) and a deterministic mock
//! ([`mock`]). Agents only see the traits.

pub mod cache;
pub mod http;
pub mod mock;
pub mod record;
pub mod retry;

use serde::{Deserialize, Serialize};

use crate::picture::Picture;

pub use cache::CachedEmbedder;
pub use record::{CallLog, CallRecord, Recorded};
pub use retry::RetryPolicy;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("provider refused the content: {0}")]
    ContentRefusal(String),
    #[error("cannot decode provider output: {0}")]
    Decode(String),
    #[error("provider declared embedding dimension {declared} but returned {got} values")]
    DimensionMismatch { declared: usize, got: usize },
    #[error("invalid request: {0}")]
    Precondition(String),
    #[error("provider not configured: {0}")]
    NotConfigured(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseFormat {
    FreeText,
    StructuredJson,
}

#[derive(Debug, Clone)]
pub enum ChatPart {
    Text(String),
    Image(Picture),
}

impl ChatPart {
    /// A text part starting with a heading line, e.g. `FRAMEWORK_JSON:`.
    pub fn labeled(heading: &str, body: impl AsRef<str>) -> Self {
        ChatPart::Text(format!("{heading}\n{}", body.as_ref()))
    }
}

/// One chat turn sent to a multimodal model.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    /// Short task marker (`STAGE1`, `GATE2`, ...). Used for tracing and by the
    /// mock provider; never sent over the wire.
    pub task: String,
    pub system_prompt: String,
    pub user_parts: Vec<ChatPart>,
    pub response_format: ResponseFormat,
    pub temperature: f32,
}

impl ChatRequest {
    pub fn new(task: impl Into<String>, system_prompt: impl Into<String>) -> Self {
        Self {
            task: task.into(),
            system_prompt: system_prompt.into(),
            user_parts: Vec::new(),
            response_format: ResponseFormat::StructuredJson,
            temperature: 0.0,
        }
    }

    pub fn part(mut self, part: ChatPart) -> Self {
        self.user_parts.push(part);
        self
    }

    pub fn text(self, heading: &str, body: impl AsRef<str>) -> Self {
        self.part(ChatPart::labeled(heading, body))
    }

    pub fn image(self, picture: &Picture) -> Self {
        self.part(ChatPart::Image(picture.clone()))
    }

    pub fn temperature(mut self, t: f32) -> Self {
        self.temperature = t;
        self
    }

    pub fn format(mut self, f: ResponseFormat) -> Self {
        self.response_format = f;
        self
    }

    /// Body of the first text part introduced by `heading`.
    pub fn labeled(&self, heading: &str) -> Option<&str> {
        self.user_parts.iter().find_map(|p| match p {
            ChatPart::Text(t) => t.strip_prefix(heading)?.strip_prefix('\n'),
            ChatPart::Image(_) => None,
        })
    }

    pub fn images(&self) -> impl Iterator<Item = &Picture> {
        self.user_parts.iter().filter_map(|p| match p {
            ChatPart::Image(i) => Some(i),
            ChatPart::Text(_) => None,
        })
    }

    pub fn check(&self) -> Result<(), ProviderError> {
        if self.user_parts.is_empty() {
            return Err(ProviderError::Precondition("chat request has no user parts".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(ProviderError::Precondition("temperature must be non-negative".into()));
        }
        Ok(())
    }

    /// Stable digest of everything that would be sent.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        buf.extend_from_slice(self.task.as_bytes());
        buf.push(0);
        buf.extend_from_slice(self.system_prompt.as_bytes());
        for p in &self.user_parts {
            buf.push(0);
            match p {
                ChatPart::Text(t) => buf.extend_from_slice(t.as_bytes()),
                ChatPart::Image(i) => buf.extend_from_slice(i.digest().as_bytes()),
            }
        }
        buf.extend_from_slice(&self.temperature.to_le_bytes());
        crate::picture::sha256_hex(&buf)
    }
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

/// One joint image generation request.
#[derive(Debug, Clone)]
pub struct ImageGenRequest {
    pub prompt_blocks: Vec<String>,
    /// Packshot first, then the reference grid when attached.
    pub condition_images: Vec<Picture>,
    pub target_width: u32,
    pub target_height: u32,
    pub rows: u32,
    pub cols: u32,
}

impl ImageGenRequest {
    pub fn check(&self) -> Result<(), ProviderError> {
        if self.prompt_blocks.is_empty() {
            return Err(ProviderError::Precondition("image request has no prompt blocks".into()));
        }
        if self.condition_images.is_empty() {
            return Err(ProviderError::Precondition("image request has no condition image".into()));
        }
        if self.rows == 0
            || self.cols == 0
            || self.target_width == 0
            || self.target_height == 0
            || self.target_width % self.cols != 0
            || self.target_height % self.rows != 0
        {
            return Err(ProviderError::Precondition(format!(
                "target {}x{} not divisible into {}x{} grid",
                self.target_width, self.target_height, self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        for b in &self.prompt_blocks {
            buf.extend_from_slice(b.as_bytes());
            buf.push(0);
        }
        for i in &self.condition_images {
            buf.extend_from_slice(i.digest().as_bytes());
        }
        for n in [self.target_width, self.target_height, self.rows, self.cols] {
            buf.extend_from_slice(&n.to_le_bytes());
        }
        crate::picture::sha256_hex(&buf)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMetadata {
    pub provider: String,
    pub resized: bool,
    pub original_width: u32,
    pub original_height: u32,
}

#[derive(Debug, Clone)]
pub struct GeneratedImage {
    pub image: Picture,
    pub metadata: ImageMetadata,
}

pub trait ImageProvider: Send + Sync {
    /// Raw provider call. Use [`generate_image`], which enforces the size contract.
    fn generate(&self, request: &ImageGenRequest) -> Result<GeneratedImage, ProviderError>;
}

/// Generates an image and resizes it to the requested target when the
/// provider returns another size.
pub fn generate_image(
    provider: &dyn ImageProvider,
    request: &ImageGenRequest,
) -> Result<GeneratedImage, ProviderError> {
    request.check()?;
    let mut out = provider.generate(request)?;
    let (w, h) = (out.image.width(), out.image.height());
    out.metadata.original_width = w;
    out.metadata.original_height = h;
    if (w, h) != (request.target_width, request.target_height) {
        out.image = out.image.resized(request.target_width, request.target_height);
        out.metadata.resized = true;
    }
    Ok(out)
}

/// A finite panel embedding with the digest of the image it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub source_digest: String,
}

pub trait EmbeddingProvider: Send + Sync {
    /// Declared output dimension.
    fn dimension(&self) -> usize;
    fn embed(&self, image: &Picture) -> Result<Vec<f64>, ProviderError>;
}

/// Embeds an image and checks the result against the provider's contract.
pub fn embed_image(
    provider: &dyn EmbeddingProvider,
    image: &Picture,
) -> Result<EmbeddingVector, ProviderError> {
    let values = provider.embed(image)?;
    let declared = provider.dimension();
    if values.len() != declared {
        return Err(ProviderError::DimensionMismatch { declared, got: values.len() });
    }
    if declared < 2 {
        return Err(ProviderError::Decode(format!("embedding dimension {declared} is below 2")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ProviderError::Decode("embedding contains non-finite values".into()));
    }
    Ok(EmbeddingVector { values, source_digest: image.digest().to_string() })
}
