use collage_core::{Context, GridLayout, RubricScores, TransferReport};

use crate::agents::{prompts, AgentError, Agents};
use crate::picture::{split_grid, Picture};
use crate::protocol::{label, task};
use crate::providers::ChatRequest;

impl Agents {
    /// Scores one collage on aesthetics, richness and coherence. The full
    /// grid is attached first, then each panel in layout order.
    pub fn score_visual_quality(&self, collage: &Picture, layout: &GridLayout) -> Result<RubricScores, AgentError> {
        let panels = split_grid(collage, layout)?;
        let positions = layout.positions().iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ");
        let system = self
            .prompts
            .render(prompts::RUBRIC_VISUAL, &[("layout", &layout.name()), ("positions", &positions)])?;
        let mut req = ChatRequest::new(task::RUBRIC_VISUAL, system)
            .temperature(self.settings.scoring_temperature)
            .text(label::IMAGE, "full grid")
            .image(collage);
        for (pos, panel) in layout.positions().iter().zip(&panels) {
            req = req.text(label::IMAGE, pos.as_str()).image(panel);
        }
        self.ask(&req.text(label::LAYOUT, layout.name()), &Context::none(), |_| vec![])
    }

    /// Compares a generated grid with its reference. Both grids are
    /// attached whole, never cropped.
    pub fn score_reference_transfer(
        &self,
        reference: &Picture,
        generated: &Picture,
        layout: &GridLayout,
    ) -> Result<TransferReport, AgentError> {
        let positions = layout.positions().iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ");
        let system = self
            .prompts
            .render(prompts::RUBRIC_TRANSFER, &[("layout", &layout.name()), ("positions", &positions)])?;
        let req = ChatRequest::new(task::RUBRIC_TRANSFER, system)
            .temperature(self.settings.scoring_temperature)
            .text(label::IMAGE, "reference grid")
            .image(reference)
            .text(label::IMAGE, "generated grid")
            .image(generated)
            .text(label::LAYOUT, layout.name());
        self.ask(&req, &Context::with_layout(layout), |_| vec![])
    }
}
