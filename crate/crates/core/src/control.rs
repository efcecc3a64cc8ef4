//! Control decisions of the gated refinement loop.

use serde::{Deserialize, Serialize};

use crate::gate::{CritiqueReport, GateOutcome};

/// What the loop does after a critique.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextStep {
    /// Narrative gate failed: rebuild the framework, then plan, prompts, image.
    Revise,
    /// Photography gate failed: re-plan and recompile with the framework frozen.
    Refine,
    /// Both gates passed.
    Stop,
}

pub fn next_step(report: &CritiqueReport) -> NextStep {
    match report.outcome() {
        GateOutcome::NarrativeFailed => NextStep::Revise,
        GateOutcome::PhotographyFailed => NextStep::Refine,
        GateOutcome::Passed => NextStep::Stop,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GatesPassed,
    BudgetExhausted,
    FatalError,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::GatesPassed => "gates_passed",
            StopReason::BudgetExhausted => "budget_exhausted",
            StopReason::FatalError => "fatal_error",
        }
    }
}

/// Which collage a run returns when the budget runs out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnPolicy {
    Last,
    #[default]
    Best,
}

/// What is known about one generated collage when choosing the final one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationSummary {
    pub iteration: u32,
    /// `None` when the collage was never critiqued.
    pub gate1_pass: Option<bool>,
    pub photo_mean: Option<f64>,
}

impl IterationSummary {
    pub fn from_report(iteration: u32, report: Option<&CritiqueReport>) -> Self {
        Self {
            iteration,
            gate1_pass: report.map(|r| r.gate1_pass),
            photo_mean: report.and_then(|r| r.photo_mean),
        }
    }
}

/// Picks the returned iteration. `Best` ranks by narrative gate passed, then
/// highest mean photo score, then latest.
pub fn select_final(summaries: &[IterationSummary], policy: ReturnPolicy) -> Option<u32> {
    match policy {
        ReturnPolicy::Last => summaries.iter().map(|s| s.iteration).max(),
        ReturnPolicy::Best => summaries
            .iter()
            .max_by(|a, b| {
                let key = |s: &IterationSummary| (s.gate1_pass == Some(true), s.photo_mean.unwrap_or(f64::NEG_INFINITY));
                let (ga, pa) = key(a);
                let (gb, pb) = key(b);
                ga.cmp(&gb)
                    .then(pa.partial_cmp(&pb).unwrap_or(core::cmp::Ordering::Equal))
                    .then(a.iteration.cmp(&b.iteration))
            })
            .map(|s| s.iteration),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{GateConfig, NarrativeScores, PhotoScores};

    #[test]
    fn step_follows_gates() {
        let g = GateConfig::default();
        let r = |n: [u8; 4], p: [u8; 3]| {
            CritiqueReport::from_scores(
                0,
                NarrativeScores::new(n[0], n[1], n[2], n[3]),
                Some(PhotoScores::new(p[0], p[1], p[2])),
                g,
            )
        };
        assert_eq!(next_step(&r([5, 4, 4, 5], [4, 5, 4])), NextStep::Stop);
        assert_eq!(next_step(&r([5, 3, 4, 5], [5, 5, 5])), NextStep::Revise);
        assert_eq!(next_step(&r([5, 4, 4, 5], [3, 5, 5])), NextStep::Refine);
    }

    #[test]
    fn best_prefers_gate1_then_photo_then_latest() {
        let s = |iteration, g1, pm| IterationSummary { iteration, gate1_pass: g1, photo_mean: pm };
        let runs = [
            s(0, Some(false), None),
            s(1, Some(true), Some(3.0)),
            s(2, Some(true), Some(4.0)),
            s(3, Some(true), Some(4.0)),
            s(4, None, None),
        ];
        assert_eq!(select_final(&runs, ReturnPolicy::Best), Some(3));
        assert_eq!(select_final(&runs, ReturnPolicy::Last), Some(4));
        // nothing passed gate 1: latest wins
        let runs = [s(0, Some(false), None), s(1, Some(false), None), s(2, None, None)];
        assert_eq!(select_final(&runs, ReturnPolicy::Best), Some(2));
        assert_eq!(select_final(&[], ReturnPolicy::Best), None);
    }
}
