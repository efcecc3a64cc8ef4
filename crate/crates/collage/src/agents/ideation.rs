//! Stage 1 ("what to shoot") and Stage 2 ("how to shoot").

use collage_core::{
    to_canonical_json, Context, FrameworkField, GateKind, GridLayout, PhotographicPlan,
    ProductNarrativeFramework, Suggestion, TransferDirections, Validate,
};

use super::{position_list, product_parts, prompts, with_image, AgentError, Agents};
use crate::picture::ProductInput;
use crate::protocol::{label, task};
use crate::providers::ChatRequest;

/// Narrative re-entry: the framework to revise and the suggestion driving it.
#[derive(Debug, Clone, Copy)]
pub struct Revision<'a> {
    pub prior: &'a ProductNarrativeFramework,
    pub suggestion: &'a Suggestion,
}

/// Photographic re-entry: the plan to refine and the suggestion driving it.
#[derive(Debug, Clone, Copy)]
pub struct Refinement<'a> {
    pub prior: &'a PhotographicPlan,
    pub suggestion: &'a Suggestion,
}

/// Minimum number of distinct shot scales for layouts of three or more panels.
pub const MIN_DISTINCT_SCALES: usize = 2;

impl Agents {
    pub fn plan_what(
        &self,
        input: &ProductInput,
        layout: &GridLayout,
        transfer: Option<&TransferDirections>,
        revision: Option<Revision<'_>>,
    ) -> Result<ProductNarrativeFramework, AgentError> {
        input.validate()?;
        let system = self.prompts.render(
            prompts::STAGE1,
            &[("product_name", &input.name), ("layout", &layout.name())],
        )?;
        let mut req = ChatRequest::new(task::STAGE1, system).temperature(self.settings.creative_temperature);
        req = with_image(req, "packshot", &input.packshot);
        req = product_parts(req, input).text(label::LAYOUT, layout.name());
        if let Some(t) = transfer {
            req = req.text(label::TRANSFER_PLAN_JSON, to_canonical_json(t));
        }
        if let Some(r) = revision {
            if r.suggestion.gate != GateKind::Narrative {
                return Err(AgentError::Precondition("revision requires a narrative suggestion".into()));
            }
            req = req
                .text(label::PRIOR_FRAMEWORK_JSON, to_canonical_json(r.prior))
                .text(label::REVISION_JSON, to_canonical_json(r.suggestion));
        }
        let mut framework: ProductNarrativeFramework = self.ask(&req, &Context::none(), |_| vec![])?;
        if let Some(r) = revision {
            freeze_outside_locus(&mut framework, r);
        }
        Ok(framework)
    }

    pub fn plan_how(
        &self,
        input: &ProductInput,
        framework: &ProductNarrativeFramework,
        layout: &GridLayout,
        transfer: Option<&TransferDirections>,
        refinement: Option<Refinement<'_>>,
    ) -> Result<PhotographicPlan, AgentError> {
        input.validate()?;
        let report = framework.validate(&Context::none());
        if !report.is_ok() {
            return Err(AgentError::Precondition(format!("framework invalid: {report}")));
        }
        let system = self.prompts.render(
            prompts::STAGE2,
            &[("product_name", &input.name), ("layout", &layout.name()), ("positions", &position_list(layout))],
        )?;
        let mut req = ChatRequest::new(task::STAGE2, system).temperature(self.settings.creative_temperature);
        req = with_image(req, "packshot", &input.packshot);
        req = product_parts(req, input)
            .text(label::LAYOUT, layout.name())
            .text(label::FRAMEWORK_JSON, to_canonical_json(framework));
        if let Some(t) = transfer {
            req = req.text(label::TRANSFER_PLAN_JSON, to_canonical_json(t));
        }
        if let Some(r) = refinement {
            if r.suggestion.gate != GateKind::Photography {
                return Err(AgentError::Precondition("refinement requires a photography suggestion".into()));
            }
            req = req
                .text(label::PRIOR_PLAN_JSON, to_canonical_json(r.prior))
                .text(label::REFINEMENT_JSON, to_canonical_json(r.suggestion));
        }
        let panels = layout.panel_count();
        self.ask(&req, &Context::with_layout(layout), |plan: &PhotographicPlan| {
            let distinct = plan.distinct_scales();
            if panels >= 3 && distinct < MIN_DISTINCT_SCALES {
                vec![format!("use at least {MIN_DISTINCT_SCALES} distinct shot scales across panels, got {distinct}")]
            } else {
                vec![]
            }
        })
    }
}

/// Copies every field outside the suggestion's locus back from the prior
/// framework. `narrative_framework` may always change.
fn freeze_outside_locus(framework: &mut ProductNarrativeFramework, revision: Revision<'_>) {
    let open = revision.suggestion.framework_fields();
    for field in FrameworkField::ALL {
        if field == FrameworkField::NarrativeFramework || open.contains(&field) {
            continue;
        }
        let prior = revision.prior.field(field);
        if framework.field(field) != prior {
            log::warn!("revision changed frozen field {}; restoring prior value", field.key());
            *framework.field_mut(field) = prior.to_string();
        }
    }
}
