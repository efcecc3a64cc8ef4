//! Critique scores and the two-gate decision rule.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::plan::{Extra, GateKind, Suggestion};
use crate::validate::{Context, Validate, ValidationReport};

pub const MAX_GATE_SCORE: u8 = 5;
pub const DEFAULT_THRESHOLD: u8 = 4;

/// Gate 1 scores, one integer 0–5 per semantic dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeScores {
    pub identity: u8,
    pub usage: u8,
    pub context: u8,
    pub consumer: u8,
    #[serde(default)]
    pub reasons: BTreeMap<String, String>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl NarrativeScores {
    pub const DIMENSIONS: [&'static str; 4] = ["identity", "usage", "context", "consumer"];

    pub fn new(identity: u8, usage: u8, context: u8, consumer: u8) -> Self {
        Self { identity, usage, context, consumer, reasons: BTreeMap::new(), extra: Extra::new() }
    }

    pub fn values(&self) -> [u8; 4] {
        [self.identity, self.usage, self.context, self.consumer]
    }

    /// (dimension, score) pairs in canonical order.
    pub fn named(&self) -> [(&'static str, u8); 4] {
        let v = self.values();
        [
            (Self::DIMENSIONS[0], v[0]),
            (Self::DIMENSIONS[1], v[1]),
            (Self::DIMENSIONS[2], v[2]),
            (Self::DIMENSIONS[3], v[3]),
        ]
    }
}

/// Gate 2 scores, one integer 0–5 per perceptual criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoScores {
    pub realism: u8,
    pub coherence: u8,
    pub aesthetic: u8,
    #[serde(default)]
    pub reasons: BTreeMap<String, String>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl PhotoScores {
    pub const DIMENSIONS: [&'static str; 3] = ["realism", "coherence", "aesthetic"];

    pub fn new(realism: u8, coherence: u8, aesthetic: u8) -> Self {
        Self { realism, coherence, aesthetic, reasons: BTreeMap::new(), extra: Extra::new() }
    }

    pub fn values(&self) -> [u8; 3] {
        [self.realism, self.coherence, self.aesthetic]
    }

    pub fn named(&self) -> [(&'static str, u8); 3] {
        let v = self.values();
        [
            (Self::DIMENSIONS[0], v[0]),
            (Self::DIMENSIONS[1], v[1]),
            (Self::DIMENSIONS[2], v[2]),
        ]
    }
}

fn check_range(named: &[(&str, u8)], report: &mut ValidationReport) {
    for (dim, score) in named {
        if *score > MAX_GATE_SCORE {
            report.push(format!("{dim} score {score} outside 0-{MAX_GATE_SCORE}"));
        }
    }
}

impl Validate for NarrativeScores {
    fn check(&self, _ctx: &Context<'_>, report: &mut ValidationReport) {
        check_range(&self.named(), report);
    }
}

impl Validate for PhotoScores {
    fn check(&self, _ctx: &Context<'_>, report: &mut ValidationReport) {
        check_range(&self.named(), report);
    }
}

/// How per-dimension scores are reduced before comparing with the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateRule {
    /// Every dimension must reach the threshold.
    #[default]
    Min,
    /// The arithmetic mean must reach the threshold.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("gate threshold {0} outside 0-5")]
pub struct ThresholdError(pub u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateConfig {
    pub tau_narr: u8,
    pub tau_photo: u8,
    #[serde(default)]
    pub rule: GateRule,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self { tau_narr: DEFAULT_THRESHOLD, tau_photo: DEFAULT_THRESHOLD, rule: GateRule::Min }
    }
}

impl GateConfig {
    pub fn new(tau_narr: u8, tau_photo: u8, rule: GateRule) -> Result<Self, ThresholdError> {
        for t in [tau_narr, tau_photo] {
            if t > MAX_GATE_SCORE {
                return Err(ThresholdError(t));
            }
        }
        Ok(Self { tau_narr, tau_photo, rule })
    }

    pub fn narrative_passes(&self, scores: &NarrativeScores) -> bool {
        passes(&scores.values(), self.tau_narr, self.rule)
    }

    pub fn photo_passes(&self, scores: &PhotoScores) -> bool {
        passes(&scores.values(), self.tau_photo, self.rule)
    }
}

pub fn mean(scores: &[u8]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().map(|&s| f64::from(s)).sum::<f64>() / scores.len() as f64
}

/// Gate decision for one set of scores.
pub fn passes(scores: &[u8], tau: u8, rule: GateRule) -> bool {
    match rule {
        GateRule::Min => scores.iter().all(|&s| s >= tau),
        GateRule::Mean => mean(scores) >= f64::from(tau),
    }
}

/// Outcome of critiquing one collage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CritiqueReport {
    pub iteration: u32,
    pub narrative: NarrativeScores,
    pub narrative_mean: f64,
    pub gate1_pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photo: Option<PhotoScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photo_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate2_pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<Suggestion>,
    pub gates: GateConfig,
}

/// Which gate a report failed, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateOutcome {
    NarrativeFailed,
    PhotographyFailed,
    Passed,
}

impl CritiqueReport {
    /// Builds a report whose gate flags are derived from the scores. The
    /// suggestion is attached separately once a gate has failed.
    pub fn from_scores(
        iteration: u32,
        narrative: NarrativeScores,
        photo: Option<PhotoScores>,
        gates: GateConfig,
    ) -> Self {
        let gate1_pass = gates.narrative_passes(&narrative);
        let photo = if gate1_pass { photo } else { None };
        let gate2_pass = photo.as_ref().map(|p| gates.photo_passes(p));
        Self {
            iteration,
            narrative_mean: mean(&narrative.values()),
            photo_mean: photo.as_ref().map(|p| mean(&p.values())),
            narrative,
            gate1_pass,
            photo,
            gate2_pass,
            suggestion: None,
            gates,
        }
    }

    pub fn outcome(&self) -> GateOutcome {
        match (self.gate1_pass, self.gate2_pass) {
            (false, _) => GateOutcome::NarrativeFailed,
            (true, Some(false)) => GateOutcome::PhotographyFailed,
            _ => GateOutcome::Passed,
        }
    }

    /// Gate that needs a suggestion, if any.
    pub fn failed_gate(&self) -> Option<GateKind> {
        match self.outcome() {
            GateOutcome::NarrativeFailed => Some(GateKind::Narrative),
            GateOutcome::PhotographyFailed => Some(GateKind::Photography),
            GateOutcome::Passed => None,
        }
    }

    /// Recomputes both gate flags from the stored scores.
    pub fn recompute_gates(&self) -> (bool, Option<bool>) {
        let g1 = self.gates.narrative_passes(&self.narrative);
        let g2 = self.photo.as_ref().map(|p| self.gates.photo_passes(p));
        (g1, g2)
    }
}

impl Validate for CritiqueReport {
    fn check(&self, ctx: &Context<'_>, report: &mut ValidationReport) {
        self.narrative.check(ctx, report);
        if let Some(p) = &self.photo {
            p.check(ctx, report);
        }
        let (g1, g2) = self.recompute_gates();
        if g1 != self.gate1_pass {
            report.push("gate1_pass inconsistent with narrative scores");
        }
        if self.photo.is_some() != self.gate1_pass {
            report.push("photo scores must be present exactly when gate 1 passes");
        }
        if g2 != self.gate2_pass {
            report.push("gate2_pass inconsistent with photo scores");
        }
        let expected = self.failed_gate();
        match (&self.suggestion, expected) {
            (None, Some(_)) => report.push("failed gate requires a suggestion"),
            (Some(_), None) => report.push("suggestion present although both gates passed"),
            (Some(s), Some(g)) if s.gate != g => {
                report.push(format!("suggestion gate {:?} does not match failed gate {:?}", s.gate, g))
            }
            _ => {}
        }
        if let Some(s) = &self.suggestion {
            s.check(ctx, report);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_rule_on_reference_scores() {
        let n = NarrativeScores::new(5, 3, 4, 5);
        let at4 = GateConfig::new(4, 4, GateRule::Min).unwrap();
        let at3 = GateConfig::new(3, 4, GateRule::Min).unwrap();
        assert!(!at4.narrative_passes(&n));
        assert!(at3.narrative_passes(&n));
        // mean 4.25 clears 4 under the mean rule
        let mean4 = GateConfig::new(4, 4, GateRule::Mean).unwrap();
        assert!(mean4.narrative_passes(&n));
    }

    #[test]
    fn report_flags_follow_scores() {
        let g = GateConfig::default();
        let r = CritiqueReport::from_scores(
            0,
            NarrativeScores::new(5, 4, 4, 5),
            Some(PhotoScores::new(4, 5, 4)),
            g,
        );
        assert_eq!(r.outcome(), GateOutcome::Passed);
        assert!(r.validate(&Context::none()).is_ok());

        let r = CritiqueReport::from_scores(
            1,
            NarrativeScores::new(5, 4, 4, 5),
            Some(PhotoScores::new(3, 5, 5)),
            g,
        );
        assert_eq!(r.failed_gate(), Some(GateKind::Photography));
        // suggestion still missing
        assert!(!r.validate(&Context::none()).is_ok());

        let r = CritiqueReport::from_scores(
            2,
            NarrativeScores::new(5, 3, 4, 5),
            Some(PhotoScores::new(5, 5, 5)),
            g,
        );
        assert!(r.photo.is_none());
        assert_eq!(r.failed_gate(), Some(GateKind::Narrative));
    }

    #[test]
    fn thresholds_are_bounded() {
        assert_eq!(GateConfig::new(6, 4, GateRule::Min), Err(ThresholdError(6)));
    }

    #[test]
    fn out_of_range_scores_are_violations() {
        let n = NarrativeScores::new(7, 4, 4, 9);
        assert_eq!(n.validate(&Context::none()).violations().len(), 2);
    }
}
