//! Prompt templates with `{{name}}` placeholders, and the fixed text
//! fragments the prompt compiler injects.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::layout::Position;
use crate::plan::GlobalVisualStyle;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template {template} has no value for placeholder {name}")]
    MissingValue { template: String, name: String },
    #[error("template {template} has an unterminated placeholder")]
    Unterminated { template: String },
}

/// A named prompt template. Substituted values are inserted verbatim and
/// never rescanned, so braces inside values cannot form placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    name: String,
    body: String,
}

impl Template {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        Self { name: name.into(), body: body.into() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Result<Vec<&str>, TemplateError> {
        let mut out: Vec<&str> = Vec::new();
        let mut rest = self.body.as_str();
        while let Some(start) = rest.find("{{") {
            let after = &rest[start + 2..];
            let end = after
                .find("}}")
                .ok_or_else(|| TemplateError::Unterminated { template: self.name.clone() })?;
            let name = after[..end].trim();
            if !out.contains(&name) {
                out.push(name);
            }
            rest = &after[end + 2..];
        }
        Ok(out)
    }

    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.body.len());
        let mut rest = self.body.as_str();
        while let Some(start) = rest.find("{{") {
            out.push_str(&rest[..start]);
            let after = &rest[start + 2..];
            let end = after
                .find("}}")
                .ok_or_else(|| TemplateError::Unterminated { template: self.name.clone() })?;
            let name = after[..end].trim();
            let value = values.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).ok_or_else(|| {
                TemplateError::MissingValue { template: self.name.clone(), name: name.to_string() }
            })?;
            out.push_str(value);
            rest = &after[end + 2..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

/// Greppable one-line summary of the campaign style, injected into every
/// panel prompt.
pub fn style_digest(style: &GlobalVisualStyle) -> String {
    format!(
        "STYLE: color={}; lighting={}; style={}; mood={}",
        one_line(&style.color),
        one_line(&style.lighting),
        one_line(&style.style),
        one_line(&style.emotion_mood)
    )
}

/// Appends the digest unless the text already carries it.
pub fn with_digest(text: &str, digest: &str) -> String {
    let text = text.trim();
    if text.contains(digest) {
        text.to_string()
    } else {
        format!("{text} {digest}")
    }
}

pub const PANEL_PREFIX: &str = "PANEL ";

/// Prompt block for one panel inside a joint generation request.
pub fn panel_block(position: &Position, prompt: &str) -> String {
    format!("{PANEL_PREFIX}{position}: {prompt}")
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::fixtures;

    #[test]
    fn renders_named_placeholders() {
        let t = Template::new("t", "Product {{ name }} is {{adj}}; again {{name}}.");
        assert_eq!(t.placeholders().unwrap(), ["name", "adj"]);
        let out = t.render(&[("name", "Cream"), ("adj", "rich")]).unwrap();
        assert_eq!(out, "Product Cream is rich; again Cream.");
    }

    #[test]
    fn braces_in_values_stay_literal() {
        let t = Template::new("t", "Name: {{name}} end");
        let out = t.render(&[("name", "Hand {{Cream}} {x}")]).unwrap();
        assert_eq!(out, "Name: Hand {{Cream}} {x} end");
    }

    #[test]
    fn missing_value_and_unterminated() {
        let t = Template::new("t", "{{a}} {{b}}");
        assert!(matches!(t.render(&[("a", "1")]), Err(TemplateError::MissingValue { .. })));
        let t = Template::new("u", "{{a");
        assert!(matches!(t.render(&[("a", "1")]), Err(TemplateError::Unterminated { .. })));
    }

    #[test]
    fn digest_has_fixed_field_order() {
        let mut s = fixtures::style();
        s.lighting = "soft\n window   light".into();
        assert_eq!(
            style_digest(&s),
            "STYLE: color=warm cream and sage; lighting=soft window light; style=photoreal editorial; mood=calm"
        );
        let d = style_digest(&s);
        assert_eq!(with_digest("close shot", &d), format!("close shot {d}"));
        assert_eq!(with_digest(&format!("x {d}"), &d), format!("x {d}"));
    }
}
