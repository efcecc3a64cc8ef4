//! Prompt templates shipped with the crate, optionally overridden from a
//! directory of `<name>.txt` files.

use std::collections::BTreeMap;
use std::path::Path;

use collage_core::prompt::{Template, TemplateError};

pub const STAGE1: &str = "stage1";
pub const STAGE2: &str = "stage2";
pub const STAGE3: &str = "stage3";
pub const REPAIR: &str = "repair";
pub const REFERENCE_ANALYZE: &str = "reference_analyze";
pub const REFERENCE_EXTRACT: &str = "reference_extract";
pub const GATE1: &str = "gate1";
pub const GATE2: &str = "gate2";
pub const SUGGEST: &str = "suggest";
pub const FIDELITY: &str = "fidelity";
pub const AESTHETIC: &str = "aesthetic";
pub const RUBRIC_VISUAL: &str = "rubric_visual";
pub const RUBRIC_TRANSFER: &str = "rubric_transfer";

const EMBEDDED: [(&str, &str); 13] = [
    (STAGE1, include_str!("../../prompts/stage1.txt")),
    (STAGE2, include_str!("../../prompts/stage2.txt")),
    (STAGE3, include_str!("../../prompts/stage3.txt")),
    (REPAIR, include_str!("../../prompts/repair.txt")),
    (REFERENCE_ANALYZE, include_str!("../../prompts/reference_analyze.txt")),
    (REFERENCE_EXTRACT, include_str!("../../prompts/reference_extract.txt")),
    (GATE1, include_str!("../../prompts/gate1.txt")),
    (GATE2, include_str!("../../prompts/gate2.txt")),
    (SUGGEST, include_str!("../../prompts/suggest.txt")),
    (FIDELITY, include_str!("../../prompts/fidelity.txt")),
    (AESTHETIC, include_str!("../../prompts/aesthetic.txt")),
    (RUBRIC_VISUAL, include_str!("../../prompts/rubric_visual.txt")),
    (RUBRIC_TRANSFER, include_str!("../../prompts/rubric_transfer.txt")),
];

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("cannot read prompt template {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("unknown prompt template {0}")]
    Unknown(String),
}

#[derive(Debug, Clone)]
pub struct PromptLibrary {
    templates: BTreeMap<&'static str, Template>,
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::embedded()
    }
}

impl PromptLibrary {
    pub fn embedded() -> Self {
        Self {
            templates: EMBEDDED.iter().map(|(name, body)| (*name, Template::new(*name, body.trim_end()))).collect(),
        }
    }

    /// Embedded templates, replaced by any `<name>.txt` found in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, PromptError> {
        let mut lib = Self::embedded();
        for (name, _) in EMBEDDED {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                let body = std::fs::read_to_string(&path)
                    .map_err(|source| PromptError::Read { path: path.display().to_string(), source })?;
                let t = Template::new(name, body.trim_end());
                t.placeholders()?;
                lib.templates.insert(name, t);
            }
        }
        Ok(lib)
    }

    pub fn get(&self, name: &str) -> Result<&Template, PromptError> {
        self.templates.get(name).ok_or_else(|| PromptError::Unknown(name.to_string()))
    }

    pub fn render(&self, name: &str, values: &[(&str, &str)]) -> Result<String, PromptError> {
        Ok(self.get(name)?.render(values)?)
    }
}
