//! Distilling a reference grid into product-agnostic transfer directions.
//!
//! The first turn sees only the reference image and produces a free-text
//! analysis. The second turn turns that analysis into a structured transfer
//! plan and is the only place the target product is mentioned, by name.
//! Neither turn attaches the target packshot.

use collage_core::{Context, GridLayout, TransferDirections};

use super::{position_list, prompts, with_image, AgentError, Agents};
use crate::picture::{Picture, ProductInput};
use crate::protocol::{label, task};
use crate::providers::{ChatRequest, ResponseFormat};

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceExtraction {
    pub transfer: TransferDirections,
    /// Raw first-turn analysis, kept for evaluation context.
    pub analysis: String,
}

impl Agents {
    pub fn extract_transfer_plan(
        &self,
        reference: &Picture,
        layout: &GridLayout,
        target: &ProductInput,
    ) -> Result<ReferenceExtraction, AgentError> {
        let positions = position_list(layout);
        let system = self.prompts.render(
            prompts::REFERENCE_ANALYZE,
            &[("layout", &layout.name()), ("positions", &positions)],
        )?;
        let analyze = with_image(
            ChatRequest::new(task::REFERENCE_ANALYZE, system)
                .format(ResponseFormat::FreeText)
                .temperature(self.settings.scoring_temperature),
            "reference grid",
            reference,
        )
        .text(label::LAYOUT, layout.name());
        let analysis = self.chat.complete(&analyze)?.trim().to_string();
        if analysis.is_empty() {
            return Err(AgentError::MalformedPlan {
                kind: collage_core::DocKind::Transfer,
                problems: vec!["reference analysis is empty".into()],
            });
        }

        let system = self.prompts.render(
            prompts::REFERENCE_EXTRACT,
            &[("product_name", &target.name), ("layout", &layout.name()), ("positions", &positions)],
        )?;
        let extract = ChatRequest::new(task::REFERENCE_TRANSFER, system)
            .temperature(self.settings.scoring_temperature)
            .text(label::REFERENCE_ANALYSIS, &analysis)
            .text(label::LAYOUT, layout.name())
            .text(label::PRODUCT_NAME, &target.name)
            .text(label::USER_INTENT, target.intent_or_default());
        let transfer = self.ask(&extract, &Context::with_layout(layout), |_| vec![])?;
        Ok(ReferenceExtraction { transfer, analysis })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::{Arc, Mutex};

    use collage_core::{HeroPresence, Position};

    use super::*;
    use crate::picture::testing::packshot;
    use crate::providers::mock::{FnChat, MockChat, MockImage};
    use crate::providers::ChatProvider;

    #[test]
    fn roles_follow_the_reference_progression() {
        let a = Agents::new(Arc::new(MockChat::golden()), Arc::new(MockImage));
        let input = ProductInput::new(packshot(64), "Shea Hand Cream").unwrap();
        let out = a.extract_transfer_plan(&packshot(128), &GridLayout::quad(), &input).unwrap();
        let roles: Vec<&str> = ["top_left", "top_right", "bottom_left", "bottom_right"]
            .iter()
            .map(|p| out.transfer.panel_roles[*p].as_str())
            .collect();
        assert_eq!(roles, ["context", "product essence", "usage/action", "benefit/mood wrap-up"]);
        assert_eq!(
            out.transfer.panel_directives[&Position::from("top_left")].hero_presence,
            HeroPresence::None
        );
        assert!(!out.analysis.is_empty());
    }

    #[test]
    fn packshot_is_never_attached() {
        let seen = Arc::new(Mutex::new(Vec::new()));
        let s = seen.clone();
        let golden = MockChat::golden();
        let a = Agents::new(
            Arc::new(FnChat(move |r: &ChatRequest| {
                s.lock().unwrap().extend(r.images().map(|i| i.digest().to_string()));
                golden.complete(r)
            })),
            Arc::new(MockImage),
        );
        let shot = packshot(64);
        let reference = packshot(96);
        let input = ProductInput::new(shot.clone(), "Cream").unwrap();
        a.extract_transfer_plan(&reference, &GridLayout::quad(), &input).unwrap();
        let seen = seen.lock().unwrap();
        assert_eq!(seen.as_slice(), [reference.digest().to_string()]);
        assert!(!seen.contains(&shot.digest().to_string()));
    }
}
