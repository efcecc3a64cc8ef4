//! Evaluation rubric schemas: absolute visual quality over three axes and
//! reference-transfer quality between a reference and a generated grid.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::layout::Position;
use crate::plan::Extra;
use crate::validate::{Context, Validate, ValidationReport};

pub const RUBRIC_MIN: u8 = 1;
pub const RUBRIC_MAX: u8 = 10;

pub const AESTHETICS: [&str; 4] =
    ["composition_hierarchy", "lighting_rendering", "color_harmony", "grid_balance"];
pub const RICHNESS: [&str; 3] = ["function_coverage", "information_density", "product_relevance"];
pub const COHERENCE: [&str; 4] = [
    "product_identity_consistency",
    "product_centric_narrative",
    "style_tone_consistency",
    "world_campaign_cohesion",
];

/// Axis names with their fixed sub-dimensions, in reporting order.
pub const AXES: [(&str, &[&str]); 3] =
    [("aesthetics", &AESTHETICS), ("richness", &RICHNESS), ("coherence", &COHERENCE)];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredReason {
    pub score: u8,
    #[serde(default)]
    pub reason: String,
}

fn check_score(label: &str, score: u8, report: &mut ValidationReport) {
    if !(RUBRIC_MIN..=RUBRIC_MAX).contains(&score) {
        report.push(format!("{label} score {score} outside {RUBRIC_MIN}-{RUBRIC_MAX}"));
    }
}

/// Visual-quality scores: axis → sub-dimension → scored reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricScores {
    pub aesthetics: BTreeMap<String, ScoredReason>,
    pub richness: BTreeMap<String, ScoredReason>,
    pub coherence: BTreeMap<String, ScoredReason>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl RubricScores {
    pub fn axis(&self, name: &str) -> Option<&BTreeMap<String, ScoredReason>> {
        match name {
            "aesthetics" => Some(&self.aesthetics),
            "richness" => Some(&self.richness),
            "coherence" => Some(&self.coherence),
            _ => None,
        }
    }

    /// `axis.subdim` → score, in the fixed reporting order.
    pub fn flattened(&self) -> Vec<(String, u8)> {
        let mut out = Vec::new();
        for (axis, subs) in AXES {
            let map = self.axis(axis).expect("fixed axis");
            for sub in subs {
                if let Some(s) = map.get(*sub) {
                    out.push((format!("{axis}.{sub}"), s.score));
                }
            }
        }
        out
    }

    /// Mean of an axis's sub-dimension scores.
    pub fn axis_mean(&self, axis: &str) -> Option<f64> {
        let map = self.axis(axis)?;
        if map.is_empty() {
            return None;
        }
        Some(map.values().map(|s| f64::from(s.score)).sum::<f64>() / map.len() as f64)
    }
}

impl Validate for RubricScores {
    fn check(&self, _ctx: &Context<'_>, report: &mut ValidationReport) {
        for (axis, subs) in AXES {
            let map = self.axis(axis).expect("fixed axis");
            for sub in subs {
                match map.get(*sub) {
                    Some(s) => check_score(&format!("{axis}.{sub}"), s.score, report),
                    None => report.push(format!("missing {axis}.{sub}")),
                }
            }
            for key in map.keys() {
                if !subs.contains(&key.as_str()) {
                    report.push(format!("unknown sub-dimension {axis}.{key}"));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    Strong,
    Partial,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Borderline,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Borderline => "borderline",
            Verdict::Fail => "fail",
        }
    }
}

/// Reference-transfer judgement between a reference grid and a generated grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub grid_plan: ScoredReason,
    pub narrative_logic: ScoredReason,
    pub product_fit: ScoredReason,
    pub per_position: BTreeMap<Position, Alignment>,
    #[serde(default)]
    pub key_matches: Vec<String>,
    #[serde(default)]
    pub key_mismatches: Vec<String>,
    pub verdict: Verdict,
    #[serde(flatten)]
    pub extra: Extra,
}

impl TransferReport {
    pub const SCORES: [&'static str; 3] = ["grid_plan", "narrative_logic", "product_fit"];

    pub fn scores(&self) -> [(&'static str, u8); 3] {
        [
            ("grid_plan", self.grid_plan.score),
            ("narrative_logic", self.narrative_logic.score),
            ("product_fit", self.product_fit.score),
        ]
    }
}

impl Validate for TransferReport {
    fn check(&self, ctx: &Context<'_>, report: &mut ValidationReport) {
        for (name, score) in self.scores() {
            check_score(name, score, report);
        }
        if let Some(layout) = ctx.layout {
            for pos in layout.positions() {
                if !self.per_position.contains_key(pos) {
                    report.push(format!("missing per_position.{pos}"));
                }
            }
            for pos in self.per_position.keys() {
                if !layout.contains(pos.as_str()) {
                    report.push(format!("unknown position {pos} in per_position"));
                }
            }
        }
    }
}
