//! Two-gate critique: narrative validity first, photographic quality only
//! when the narrative gate passes, and a (what, where, how) suggestion for
//! whichever gate failed.

use std::collections::BTreeMap;

use collage_core::plan::GLOBAL_LOCUS;
use collage_core::{
    to_canonical_json, Context, CritiqueReport, FrameworkField, GateConfig, GateKind, GridLayout,
    NarrativeScores, PhotoScores, PhotographicPlan, ProductNarrativeFramework, Suggestion,
};

use super::{product_parts, prompts, with_image, AgentError, Agents};
use crate::picture::{Picture, ProductInput};
use crate::protocol::{label, task};
use crate::providers::ChatRequest;

/// Dimension name → score, for the dimensions below threshold.
pub type FailingDimensions = BTreeMap<String, u8>;

impl Agents {
    fn gate_request(&self, task_name: &str, template: &str, collage: &Picture, input: &ProductInput, layout: &GridLayout, iteration: u32) -> Result<ChatRequest, AgentError> {
        let system = self
            .prompts
            .render(template, &[("product_name", &input.name), ("layout", &layout.name())])?;
        let req = ChatRequest::new(task_name, system).temperature(self.settings.scoring_temperature);
        let req = with_image(req, "collage", collage);
        let req = with_image(req, "packshot", &input.packshot);
        Ok(product_parts(req, input)
            .text(label::LAYOUT, layout.name())
            .text(label::ITERATION, iteration.to_string()))
    }

    pub fn score_narrative(
        &self,
        collage: &Picture,
        input: &ProductInput,
        framework: &ProductNarrativeFramework,
        layout: &GridLayout,
        iteration: u32,
    ) -> Result<NarrativeScores, AgentError> {
        let req = self
            .gate_request(task::GATE1, prompts::GATE1, collage, input, layout, iteration)?
            .text(label::FRAMEWORK_JSON, to_canonical_json(framework));
        self.ask(&req, &Context::none(), |_| vec![])
    }

    pub fn score_photography(
        &self,
        collage: &Picture,
        input: &ProductInput,
        plan: &PhotographicPlan,
        iteration: u32,
    ) -> Result<PhotoScores, AgentError> {
        let req = self
            .gate_request(task::GATE2, prompts::GATE2, collage, input, &plan.layout, iteration)?
            .text(label::PLAN_JSON, to_canonical_json(plan));
        self.ask(&req, &Context::none(), |_| vec![])
    }

    /// Asks for one actionable fix for the failing dimensions of `gate`.
    /// Narrative suggestions must name framework fields; photography
    /// suggestions must name panel positions or `global`.
    pub fn suggest(
        &self,
        collage: &Picture,
        input: &ProductInput,
        layout: &GridLayout,
        gate: GateKind,
        failing: &FailingDimensions,
        plan_context: (&str, String),
    ) -> Result<Suggestion, AgentError> {
        let gate_name = gate_name(gate);
        let allowed = allowed_where(gate, layout);
        let system = self.prompts.render(
            prompts::SUGGEST,
            &[("gate", gate_name), ("product_name", &input.name), ("allowed_where", &allowed.join(", "))],
        )?;
        let req = with_image(
            ChatRequest::new(task::SUGGEST, system).temperature(self.settings.scoring_temperature),
            "collage",
            collage,
        );
        let req = product_parts(req, input)
            .text(label::LAYOUT, layout.name())
            .text(label::GATE, gate_name)
            .text(label::FAILING_JSON, serde_json::to_string(failing).expect("map serializes"))
            .text(label::ALLOWED_WHERE, allowed.join(", "))
            .text(plan_context.0, plan_context.1);
        let mut s: Suggestion = self.ask(&req, &Context::with_layout(layout), |s: &Suggestion| {
            let parts: Vec<&str> = s.locus.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
            if parts.iter().all(|p| allowed.iter().any(|a| a == p)) {
                vec![]
            } else {
                vec![format!("where {:?} must be one of: {}", s.locus, allowed.join(", "))]
            }
        })?;
        if s.gate != gate {
            log::warn!("suggestion labeled {:?} for a failed {gate_name} gate; relabeling", s.gate);
            s.gate = gate;
        }
        Ok(s)
    }

    /// Runs gate 1, then gate 2 only if gate 1 passed, then a suggestion turn
    /// if either failed.
    pub fn critique(
        &self,
        collage: &Picture,
        input: &ProductInput,
        framework: &ProductNarrativeFramework,
        plan: &PhotographicPlan,
        cfg: &GateConfig,
        iteration: u32,
    ) -> Result<CritiqueReport, AgentError> {
        let layout = &plan.layout;
        let narrative = self.score_narrative(collage, input, framework, layout, iteration)?;
        let photo = if cfg.narrative_passes(&narrative) {
            Some(self.score_photography(collage, input, plan, iteration)?)
        } else {
            None
        };
        let mut report = CritiqueReport::from_scores(iteration, narrative, photo, *cfg);
        if let Some(gate) = report.failed_gate() {
            let (failing, context) = match gate {
                GateKind::Narrative => (
                    below(&report.narrative.named(), cfg.tau_narr),
                    (label::FRAMEWORK_JSON, to_canonical_json(framework)),
                ),
                GateKind::Photography => (
                    below(&report.photo.as_ref().expect("gate 2 ran").named(), cfg.tau_photo),
                    (label::PLAN_JSON, to_canonical_json(plan)),
                ),
            };
            report.suggestion = Some(self.suggest(collage, input, layout, gate, &failing, context)?);
        }
        Ok(report)
    }
}

fn gate_name(gate: GateKind) -> &'static str {
    match gate {
        GateKind::Narrative => "narrative",
        GateKind::Photography => "photography",
    }
}

fn allowed_where(gate: GateKind, layout: &GridLayout) -> Vec<String> {
    match gate {
        GateKind::Narrative => FrameworkField::ALL
            .iter()
            .filter(|f| **f != FrameworkField::NarrativeFramework)
            .map(|f| f.key().to_string())
            .collect(),
        GateKind::Photography => layout
            .positions()
            .iter()
            .map(|p| p.to_string())
            .chain([GLOBAL_LOCUS.to_string()])
            .collect(),
    }
}

/// Dimensions scoring below `tau`. When none does (possible only under the
/// mean rule with a sub-threshold mean, which implies at least one is
/// below), all dimensions are returned.
fn below<const N: usize>(named: &[(&'static str, u8); N], tau: u8) -> FailingDimensions {
    let failing: FailingDimensions =
        named.iter().filter(|(_, s)| *s < tau).map(|(d, s)| (d.to_string(), *s)).collect();
    if failing.is_empty() {
        named.iter().map(|(d, s)| (d.to_string(), *s)).collect()
    } else {
        failing
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use collage_core::{GateOutcome, GateRule};

    use super::*;
    use crate::picture::testing::packshot;
    use crate::providers::mock::{CriticStep, FnChat, MockChat, MockImage};
    use crate::providers::{CallLog, ChatProvider, Recorded};

    struct Fixture {
        agents: Agents,
        log: CallLog,
        input: ProductInput,
        framework: ProductNarrativeFramework,
        plan: PhotographicPlan,
    }

    fn fixture(script: Vec<CriticStep>) -> Fixture {
        let log = CallLog::new();
        let chat = Recorded::new(Arc::new(MockChat::golden().with_script(script)), log.clone());
        let agents = Agents::new(Arc::new(chat), Arc::new(MockImage));
        let input = ProductInput::new(packshot(64), "Shea Hand Cream").unwrap();
        let layout = GridLayout::quad();
        let framework = agents.plan_what(&input, &layout, None, None).unwrap();
        let plan = agents.plan_how(&input, &framework, &layout, None, None).unwrap();
        Fixture { agents, log, input, framework, plan }
    }

    fn run(f: &Fixture, cfg: GateConfig) -> CritiqueReport {
        f.agents.critique(&packshot(128), &f.input, &f.framework, &f.plan, &cfg, 0).unwrap()
    }

    #[test]
    fn golden_scores_pass_both_gates() {
        let f = fixture(vec![]);
        let r = run(&f, GateConfig::default());
        assert_eq!(r.narrative.values(), [5, 4, 4, 5]);
        assert_eq!(r.photo.as_ref().unwrap().values(), [4, 5, 4]);
        assert_eq!(r.outcome(), GateOutcome::Passed);
        assert!(r.suggestion.is_none());
        assert_eq!(f.log.count_task(task::SUGGEST), 0);
    }

    #[test]
    fn narrative_failure_skips_gate2_and_targets_usage() {
        let f = fixture(vec![CriticStep::NarrativeFail]);
        let r = run(&f, GateConfig::default());
        assert!(!r.gate1_pass);
        assert!(r.photo.is_none());
        let s = r.suggestion.unwrap();
        assert_eq!(s.gate, GateKind::Narrative);
        assert_eq!(s.locus, "product_usage");
        assert_eq!(f.log.count_task(task::GATE2), 0);
    }

    #[test]
    fn lower_threshold_lets_the_same_scores_pass() {
        let f = fixture(vec![CriticStep::NarrativeFail]);
        let r = run(&f, GateConfig::new(3, 4, GateRule::Min).unwrap());
        assert!(r.gate1_pass);
    }

    #[test]
    fn photo_failure_gives_photography_suggestion() {
        let f = fixture(vec![CriticStep::PhotoFail]);
        let r = run(&f, GateConfig::default());
        assert_eq!(r.gate2_pass, Some(false));
        let s = r.suggestion.unwrap();
        assert_eq!(s.gate, GateKind::Photography);
        assert_eq!(s.locus, "top_left");
    }

    fn scores_chat(narrative: &'static str) -> Fixture {
        let mut f = fixture(vec![]);
        let golden = MockChat::golden();
        f.agents.chat = Arc::new(FnChat(move |r: &ChatRequest| {
            let original = r.labeled(label::ORIGINAL_TASK).unwrap_or(&r.task);
            if original == task::GATE1 && r.task != task::REPAIR {
                return Ok(narrative.to_string());
            }
            golden.complete(r)
        }));
        f
    }

    #[test]
    fn fractional_score_is_repaired() {
        let f = scores_chat(r#"{"identity": 5, "usage": 4.5, "context": 4, "consumer": 5}"#);
        let r = run(&f, GateConfig::default());
        assert_eq!(r.narrative.values(), [5, 4, 4, 5]);
    }

    #[test]
    fn out_of_range_score_without_repair_is_malformed() {
        let f = scores_chat(r#"{"identity": 7, "usage": 4, "context": 4, "consumer": 5}"#);
        let err = f
            .agents
            .clone()
            .with_settings(crate::agents::AgentSettings { repair_budget: 0, ..Default::default() })
            .score_narrative(&packshot(128), &f.input, &f.framework, &GridLayout::quad(), 0)
            .unwrap_err();
        assert!(matches!(err, AgentError::MalformedPlan { .. }));
    }
}
