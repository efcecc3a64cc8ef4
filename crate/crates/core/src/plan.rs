//! Plan documents exchanged between the ideation, generation and critique
//! stages.
//!
//! Field names are the wire contract: they appear verbatim in the JSON the
//! models are asked to produce and in the files persisted to a run directory.
//! Every struct keeps unrecognised keys in `extra` so a document read from a
//! model response serializes back with nothing dropped.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::layout::{GridLayout, Position};
use crate::validate::{Context, Validate, ValidationReport};

pub type Extra = BTreeMap<String, Value>;

/// The "what to shoot" plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductNarrativeFramework {
    pub product_essence: String,
    pub product_usage: String,
    pub usage_context: String,
    pub target_consumer_profile: String,
    pub narrative_framework: String,
    #[serde(flatten)]
    pub extra: Extra,
}

/// Names of the framework fields, used to route revision suggestions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrameworkField {
    ProductEssence,
    ProductUsage,
    UsageContext,
    TargetConsumerProfile,
    NarrativeFramework,
}

impl FrameworkField {
    pub const ALL: [FrameworkField; 5] = [
        Self::ProductEssence,
        Self::ProductUsage,
        Self::UsageContext,
        Self::TargetConsumerProfile,
        Self::NarrativeFramework,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Self::ProductEssence => "product_essence",
            Self::ProductUsage => "product_usage",
            Self::UsageContext => "usage_context",
            Self::TargetConsumerProfile => "target_consumer_profile",
            Self::NarrativeFramework => "narrative_framework",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.key() == key)
    }
}

impl ProductNarrativeFramework {
    pub fn field(&self, field: FrameworkField) -> &str {
        match field {
            FrameworkField::ProductEssence => &self.product_essence,
            FrameworkField::ProductUsage => &self.product_usage,
            FrameworkField::UsageContext => &self.usage_context,
            FrameworkField::TargetConsumerProfile => &self.target_consumer_profile,
            FrameworkField::NarrativeFramework => &self.narrative_framework,
        }
    }

    pub fn field_mut(&mut self, field: FrameworkField) -> &mut String {
        match field {
            FrameworkField::ProductEssence => &mut self.product_essence,
            FrameworkField::ProductUsage => &mut self.product_usage,
            FrameworkField::UsageContext => &mut self.usage_context,
            FrameworkField::TargetConsumerProfile => &mut self.target_consumer_profile,
            FrameworkField::NarrativeFramework => &mut self.narrative_framework,
        }
    }

    /// Fields whose values differ between `self` and `other`.
    pub fn changed_fields(&self, other: &Self) -> alloc::vec::Vec<FrameworkField> {
        FrameworkField::ALL
            .into_iter()
            .filter(|f| self.field(*f) != other.field(*f))
            .collect()
    }
}

impl Validate for ProductNarrativeFramework {
    fn check(&self, _ctx: &Context<'_>, report: &mut ValidationReport) {
        for f in FrameworkField::ALL {
            report.require_text(f.key(), self.field(f));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShotScale {
    Macro,
    Close,
    Medium,
    Wide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeroPresence {
    Full,
    Partial,
    None,
}

/// Photographic directives for one panel. The panel's position is the key
/// it is stored under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDecision {
    pub shot_scale: ShotScale,
    pub hero_presence: HeroPresence,
    pub hero_number: u32,
    pub subject_emphasis: String,
    pub spatial_composition: String,
    pub interaction: String,
    #[serde(flatten)]
    pub extra: Extra,
}

impl PanelDecision {
    fn check_at(&self, position: &str, report: &mut ValidationReport) {
        match (self.hero_presence, self.hero_number) {
            (HeroPresence::None, n) if n != 0 => report.push(format!(
                "{position}: hero_presence none requires hero_number 0, got {n}"
            )),
            (HeroPresence::Full | HeroPresence::Partial, 0) => report.push(format!(
                "{position}: hero_presence present requires hero_number >= 1"
            )),
            _ => {}
        }
        report.require_text(&format!("{position}.subject_emphasis"), &self.subject_emphasis);
        report.require_text(&format!("{position}.spatial_composition"), &self.spatial_composition);
        report.require_text(&format!("{position}.interaction"), &self.interaction);
    }
}

/// Campaign-wide look shared by every panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalVisualStyle {
    pub color: String,
    pub lighting: String,
    pub style: String,
    pub emotion_mood: String,
    #[serde(flatten)]
    pub extra: Extra,
}

impl GlobalVisualStyle {
    fn check_prefixed(&self, prefix: &str, report: &mut ValidationReport) {
        report.require_text(&format!("{prefix}.color"), &self.color);
        report.require_text(&format!("{prefix}.lighting"), &self.lighting);
        report.require_text(&format!("{prefix}.style"), &self.style);
        report.require_text(&format!("{prefix}.emotion_mood"), &self.emotion_mood);
    }
}

impl Validate for GlobalVisualStyle {
    fn check(&self, _ctx: &Context<'_>, report: &mut ValidationReport) {
        self.check_prefixed("global_visual_style", report);
    }
}

/// The "how to shoot" plan: one decision per panel plus the shared style.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotographicPlan {
    pub layout: GridLayout,
    pub panels: BTreeMap<Position, PanelDecision>,
    pub global_visual_style: GlobalVisualStyle,
    #[serde(flatten)]
    pub extra: Extra,
}

impl PhotographicPlan {
    /// Number of distinct shot scales used across panels.
    pub fn distinct_scales(&self) -> usize {
        let mut seen = alloc::vec::Vec::new();
        for d in self.panels.values() {
            if !seen.contains(&d.shot_scale) {
                seen.push(d.shot_scale);
            }
        }
        seen.len()
    }
}

impl Validate for PhotographicPlan {
    fn check(&self, ctx: &Context<'_>, report: &mut ValidationReport) {
        for v in self.layout.violations() {
            report.push(v);
        }
        if let Some(expected) = ctx.layout {
            if expected != &self.layout {
                report.push(format!("plan layout {} differs from requested {}", self.layout, expected));
            }
        }
        check_coverage(&self.layout, &self.panels, "panel", report);
        for (pos, decision) in &self.panels {
            decision.check_at(pos.as_str(), report);
        }
        self.global_visual_style.check_prefixed("global_visual_style", report);
    }
}

/// Compiled per-panel prompts plus the two global constraint blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSet {
    pub prompts: BTreeMap<Position, String>,
    pub style_digest: String,
    pub fidelity_block: String,
    pub aesthetic_block: String,
    #[serde(flatten)]
    pub extra: Extra,
}

pub const MIN_PROMPT_CHARS: usize = 20;

impl Validate for PromptSet {
    fn check(&self, ctx: &Context<'_>, report: &mut ValidationReport) {
        if let Some(layout) = ctx.layout {
            check_coverage(layout, &self.prompts, "prompt", report);
        }
        report.require_text("style_digest", &self.style_digest);
        report.require_text("fidelity_block", &self.fidelity_block);
        report.require_text("aesthetic_block", &self.aesthetic_block);
        for (pos, text) in &self.prompts {
            if text.chars().count() < MIN_PROMPT_CHARS {
                report.push(format!("prompt {pos} shorter than {MIN_PROMPT_CHARS} characters"));
            }
            if !self.style_digest.is_empty() && !text.contains(&self.style_digest) {
                report.push(format!("prompt {pos} lacks the style digest"));
            }
        }
    }
}

/// Raw prompt-compiler output: position label to prompt text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PanelPrompts {
    pub prompts: BTreeMap<String, String>,
}

impl Validate for PanelPrompts {
    fn check(&self, ctx: &Context<'_>, report: &mut ValidationReport) {
        if let Some(layout) = ctx.layout {
            for pos in layout.positions() {
                if !self.prompts.contains_key(pos.as_str()) {
                    report.push(format!("missing prompt {pos}"));
                }
            }
            for key in self.prompts.keys() {
                if !layout.contains(key) {
                    report.push(format!("unknown position {key}"));
                }
            }
        }
        for (pos, text) in &self.prompts {
            report.require_text(&format!("prompt {pos}"), text);
        }
    }
}

/// Product-agnostic directions distilled from a reference grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferDirections {
    pub abstract_narrative: String,
    pub panel_roles: BTreeMap<Position, String>,
    pub panel_directives: BTreeMap<Position, PanelDecision>,
    pub global_visual_style: GlobalVisualStyle,
    #[serde(flatten)]
    pub extra: Extra,
}

impl Validate for TransferDirections {
    fn check(&self, ctx: &Context<'_>, report: &mut ValidationReport) {
        report.require_text("abstract_narrative", &self.abstract_narrative);
        if let Some(layout) = ctx.layout {
            check_coverage(layout, &self.panel_roles, "panel role", report);
            check_coverage(layout, &self.panel_directives, "panel directive", report);
        }
        for (pos, role) in &self.panel_roles {
            report.require_text(&format!("panel_roles.{pos}"), role);
        }
        for (pos, d) in &self.panel_directives {
            d.check_at(pos.as_str(), report);
        }
        self.global_visual_style.check_prefixed("global_visual_style", report);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Narrative,
    Photography,
}

/// Locus value that addresses the whole collage rather than one field or panel.
pub const GLOBAL_LOCUS: &str = "global";

/// A (what, where, how) diagnostic produced by a failed gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub gate: GateKind,
    pub what: String,
    #[serde(rename = "where")]
    pub locus: String,
    pub how: String,
    #[serde(flatten)]
    pub extra: Extra,
}

impl Suggestion {
    /// Framework fields named by the locus. A comma-separated locus may name
    /// several.
    pub fn framework_fields(&self) -> alloc::vec::Vec<FrameworkField> {
        self.locus
            .split(',')
            .filter_map(|part| FrameworkField::from_key(part.trim()))
            .collect()
    }
}

impl Validate for Suggestion {
    fn check(&self, ctx: &Context<'_>, report: &mut ValidationReport) {
        report.require_text("what", &self.what);
        report.require_text("where", &self.locus);
        report.require_text("how", &self.how);
        if let Some(layout) = ctx.layout {
            for part in self.locus.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let known = part == GLOBAL_LOCUS
                    || FrameworkField::from_key(part).is_some()
                    || layout.contains(part);
                if !known {
                    report.push(format!(
                        "where {part:?} must be a framework field, a panel position or \"global\""
                    ));
                }
            }
        }
    }
}

fn check_coverage<V>(
    layout: &GridLayout,
    map: &BTreeMap<Position, V>,
    what: &str,
    report: &mut ValidationReport,
) {
    for pos in layout.positions() {
        if !map.contains_key(pos) {
            report.push(format!("missing {what} {pos}"));
        }
    }
    for pos in map.keys() {
        if !layout.contains(pos.as_str()) {
            report.push(format!("unknown position {pos} for {what}"));
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn framework() -> ProductNarrativeFramework {
        ProductNarrativeFramework {
            product_essence: "rich shea butter hand cream in a soft tube".into(),
            product_usage: "a pea-sized amount massaged into dry hands".into(),
            usage_context: "winter mornings and desk breaks".into(),
            target_consumer_profile: "busy professionals with dry skin".into(),
            narrative_framework: "from chapped to cared-for in one quiet ritual".into(),
            extra: Extra::new(),
        }
    }

    pub fn decision(scale: ShotScale) -> PanelDecision {
        PanelDecision {
            shot_scale: scale,
            hero_presence: HeroPresence::Full,
            hero_number: 1,
            subject_emphasis: "tube sharp, background soft".into(),
            spatial_composition: "rule of thirds, product left".into(),
            interaction: "resting on linen".into(),
            extra: Extra::new(),
        }
    }

    pub fn style() -> GlobalVisualStyle {
        GlobalVisualStyle {
            color: "warm cream and sage".into(),
            lighting: "soft window light".into(),
            style: "photoreal editorial".into(),
            emotion_mood: "calm".into(),
            extra: Extra::new(),
        }
    }

    pub fn plan(layout: &GridLayout) -> PhotographicPlan {
        let scales = [ShotScale::Macro, ShotScale::Close, ShotScale::Medium, ShotScale::Wide];
        let panels = layout
            .positions()
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), decision(scales[i % 4])))
            .collect();
        PhotographicPlan {
            layout: layout.clone(),
            panels,
            global_visual_style: style(),
            extra: Extra::new(),
        }
    }
}
