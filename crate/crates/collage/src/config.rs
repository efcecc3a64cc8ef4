//! TOML configuration file. Command-line flags override file values, which
//! override built-in defaults.

use std::path::{Path, PathBuf};

use collage_core::{GateRule, ReturnPolicy};
use serde::{Deserialize, Serialize};

use crate::providers::http::EndpointConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub chat: Option<EndpointConfig>,
    pub image: Option<EndpointConfig>,
    pub embed: Option<EmbedConfig>,
    pub pipeline: PipelineSection,
    pub gates: GatesSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    #[serde(flatten)]
    pub endpoint: EndpointConfig,
    pub dimension: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub max_iter: Option<u32>,
    pub layout: Option<String>,
    pub return_policy: Option<ReturnPolicy>,
    pub run_dir: Option<PathBuf>,
    pub repair_budget: Option<u32>,
    pub attach_reference: Option<bool>,
    pub creative_temperature: Option<f32>,
    /// Concurrent items during batch evaluation.
    pub parallelism: Option<usize>,
    /// Directory of prompt templates overriding the built-in ones.
    pub prompts: Option<PathBuf>,
    /// Directory of golden transcripts used with `--mock`.
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatesSection {
    pub tau_narr: Option<u8>,
    pub tau_photo: Option<u8>,
    pub rule: Option<GateRule>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse { path: path.display().to_string(), message })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file_parses() {
        let c = Config::parse(
            r#"
            [chat]
            endpoint = "https://chat.example/v1/chat/completions"
            model = "m"
            [embed]
            endpoint = "https://embed.example/v1/embeddings"
            model = "e"
            dimension = 512
            [pipeline]
            max_iter = 5
            layout = "3x3"
            return_policy = "last"
            [gates]
            tau_narr = 3
            rule = "mean"
            "#,
        )
        .unwrap();
        assert_eq!(c.chat.unwrap().timeout_secs, 120);
        assert_eq!(c.embed.unwrap().dimension, 512);
        assert_eq!(c.pipeline.max_iter, Some(5));
        assert_eq!(c.pipeline.return_policy, Some(ReturnPolicy::Last));
        assert_eq!(c.gates.rule, Some(GateRule::Mean));
        assert!(c.image.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("[pipeline]\nmax_iters = 2\n").is_err());
        assert!(Config::parse("[gate]\n").is_err());
    }
}
