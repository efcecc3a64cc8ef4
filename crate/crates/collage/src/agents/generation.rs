//! Stage 3 prompt compilation and joint collage synthesis.

use std::path::{Path, PathBuf};

use collage_core::prompt::{panel_block, style_digest, with_digest};
use collage_core::{
    to_canonical_json, Context, GridLayout, PanelPrompts, PhotographicPlan, Position,
    ProductNarrativeFramework, PromptSet, Validate,
};
use serde::{Deserialize, Serialize};

use super::{position_list, product_parts, prompts, AgentError, Agents};
use crate::fsutil::write_atomic;
use crate::picture::{Picture, ProductInput};
use crate::protocol::{label, task};
use crate::providers::{generate_image, ChatRequest, ImageGenRequest, ImageMetadata};

/// Output canvas size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Canvas {
    /// 1024² for 2×2, 1536² for 3×3, 1536×512 for 1×3, otherwise 512 px per panel.
    pub fn default_for(layout: &GridLayout) -> Self {
        match (layout.rows, layout.cols) {
            (2, 2) => Self { width: 1024, height: 1024 },
            (3, 3) => Self { width: 1536, height: 1536 },
            (1, 3) => Self { width: 1536, height: 512 },
            (r, c) => Self { width: 512 * c, height: 512 * r },
        }
    }

    pub fn fits(&self, layout: &GridLayout) -> bool {
        self.width > 0 && self.height > 0 && self.width % layout.cols == 0 && self.height % layout.rows == 0
    }
}

/// A generated collage persisted in the run directory.
#[derive(Debug, Clone)]
pub struct Collage {
    pub path: PathBuf,
    pub image: Picture,
    pub metadata: ImageMetadata,
    /// Blocks sent to the generator, in order.
    pub prompt_blocks: Vec<String>,
}

pub fn collage_file_name(iteration: u32) -> String {
    format!("collage_iter{iteration}.png")
}

impl Agents {
    /// Fidelity and aesthetic blocks. Only the product name and layout vary.
    pub fn build_constraint_blocks(
        &self,
        input: &ProductInput,
        layout: &GridLayout,
    ) -> Result<(String, String), AgentError> {
        let name = input.name.trim();
        let fidelity = self.prompts.render(prompts::FIDELITY, &[("product_name", name)])?;
        let aesthetic = self
            .prompts
            .render(prompts::AESTHETIC, &[("product_name", name), ("layout", &layout.name())])?;
        Ok((fidelity, aesthetic))
    }

    pub fn compile_prompts(
        &self,
        input: &ProductInput,
        plan: &PhotographicPlan,
        framework: &ProductNarrativeFramework,
    ) -> Result<PromptSet, AgentError> {
        let report = plan.validate(&Context::none());
        if !report.is_ok() {
            return Err(AgentError::Precondition(format!("plan invalid: {report}")));
        }
        let layout = &plan.layout;
        let digest = style_digest(&plan.global_visual_style);
        let system = self.prompts.render(
            prompts::STAGE3,
            &[("product_name", &input.name), ("positions", &position_list(layout))],
        )?;
        let req = product_parts(
            ChatRequest::new(task::STAGE3, system).temperature(self.settings.creative_temperature),
            input,
        )
        .text(label::LAYOUT, layout.name())
        .text(label::PLAN_JSON, to_canonical_json(plan))
        .text(label::FRAMEWORK_JSON, to_canonical_json(framework))
        .text(label::STYLE_DIGEST, &digest);
        let raw: PanelPrompts = self.ask(&req, &Context::with_layout(layout), |_| vec![])?;

        let (fidelity_block, aesthetic_block) = self.build_constraint_blocks(input, layout)?;
        let set = PromptSet {
            prompts: raw
                .prompts
                .iter()
                .map(|(pos, text)| (Position::new(pos.as_str()), with_digest(text, &digest)))
                .collect(),
            style_digest: digest,
            fidelity_block,
            aesthetic_block,
            extra: Default::default(),
        };
        let report = set.validate(&Context::with_layout(layout));
        if !report.is_ok() {
            return Err(AgentError::MalformedPlan {
                kind: collage_core::DocKind::PromptSet,
                problems: report.into_violations(),
            });
        }
        Ok(set)
    }

    /// Ordered generator input: fidelity, aesthetic, then one block per panel.
    pub fn prompt_blocks(prompt_set: &PromptSet, layout: &GridLayout) -> Vec<String> {
        let mut blocks = vec![prompt_set.fidelity_block.clone(), prompt_set.aesthetic_block.clone()];
        blocks.extend(
            layout
                .positions()
                .iter()
                .map(|p| panel_block(p, prompt_set.prompts.get(p).map(String::as_str).unwrap_or_default())),
        );
        blocks
    }

    /// One generator call for the whole grid; the result is written to
    /// `run_dir/collage_iter{iteration}.png`.
    pub fn synthesize_collage(
        &self,
        prompt_set: &PromptSet,
        input: &ProductInput,
        layout: &GridLayout,
        canvas: Canvas,
        iteration: u32,
        run_dir: &Path,
    ) -> Result<Collage, AgentError> {
        let report = prompt_set.validate(&Context::with_layout(layout));
        if !report.is_ok() {
            return Err(AgentError::Precondition(format!("prompt set invalid: {report}")));
        }
        if !canvas.fits(layout) {
            return Err(AgentError::Precondition(format!(
                "canvas {}x{} is not divisible into a {} grid",
                canvas.width, canvas.height, layout
            )));
        }
        let mut condition_images = vec![input.packshot.clone()];
        if self.settings.attach_reference {
            condition_images.extend(input.reference.clone());
        }
        let request = ImageGenRequest {
            prompt_blocks: Self::prompt_blocks(prompt_set, layout),
            condition_images,
            target_width: canvas.width,
            target_height: canvas.height,
            rows: layout.rows,
            cols: layout.cols,
        };
        let generated = generate_image(self.image.as_ref(), &request)?;
        let path = run_dir.join(collage_file_name(iteration));
        write_atomic(&path, generated.image.png())
            .map_err(|source| AgentError::Io { path: path.display().to_string(), source })?;
        Ok(Collage { path, image: generated.image, metadata: generated.metadata, prompt_blocks: request.prompt_blocks })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::picture::testing::packshot;
    use crate::providers::mock::{MockChat, MockImage};
    use crate::providers::{CallLog, Recorded};

    fn input() -> ProductInput {
        ProductInput::new(packshot(64), "Shea Hand Cream").unwrap()
    }

    fn setup(layout: &GridLayout) -> (Agents, CallLog, PromptSet) {
        let log = CallLog::new();
        let a = Agents::new(
            Arc::new(MockChat::golden()),
            Arc::new(Recorded::new(Arc::new(MockImage), log.clone())),
        );
        let f = a.plan_what(&input(), layout, None, None).unwrap();
        let p = a.plan_how(&input(), &f, layout, None, None).unwrap();
        let set = a.compile_prompts(&input(), &p, &f).unwrap();
        (a, log, set)
    }

    #[test]
    fn every_prompt_carries_the_digest() {
        let layout = GridLayout::quad();
        let (_, _, set) = setup(&layout);
        assert_eq!(set.prompts.len(), 4);
        assert!(set.style_digest.starts_with("STYLE: color="));
        assert!(set.prompts.values().all(|p| p.contains(&set.style_digest)));
        let layout: GridLayout = "3x3".parse().unwrap();
        assert_eq!(setup(&layout).2.prompts.len(), 9);
    }

    #[test]
    fn fidelity_clauses_present_and_stable() {
        let (a, _, _) = setup(&GridLayout::quad());
        let (fid, aes) = a.build_constraint_blocks(&input(), &GridLayout::quad()).unwrap();
        for clause in
            ["no added/removed parts or invented logos/text", "no floating, clipping, impossible reflections", "fidelity takes priority"]
        {
            assert!(fid.contains(clause), "{clause}");
        }
        assert!(!aes.is_empty());
        assert_eq!(a.build_constraint_blocks(&input(), &GridLayout::quad()).unwrap().0, fid);
        let braces = ProductInput::new(packshot(64), "Cream {{product_name}} }}{").unwrap();
        let (fid, _) = a.build_constraint_blocks(&braces, &GridLayout::quad()).unwrap();
        assert!(fid.contains("Cream {{product_name}} }}{"));
    }

    #[test]
    fn one_call_per_collage_in_fixed_block_order() {
        let dir = tempfile::tempdir().unwrap();
        let layout: GridLayout = "1x3".parse().unwrap();
        let (a, log, set) = setup(&layout);
        let c = a
            .synthesize_collage(&set, &input(), &layout, Canvas::default_for(&layout), 2, dir.path())
            .unwrap();
        assert_eq!(log.count("image"), 1);
        assert_eq!(c.path, dir.path().join("collage_iter2.png"));
        let on_disk = Picture::open(&c.path).unwrap();
        assert_eq!((on_disk.width(), on_disk.height()), (1536, 512));
        assert_eq!(c.prompt_blocks[0], set.fidelity_block);
        assert_eq!(c.prompt_blocks[1], set.aesthetic_block);
        assert!(c.prompt_blocks[2].starts_with("PANEL r1c1: "));
        assert_eq!(c.prompt_blocks.len(), 5);
    }

    #[test]
    fn unwritable_run_dir_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let layout = GridLayout::quad();
        let (a, _, set) = setup(&layout);
        let missing = dir.path().join("absent");
        let err = a
            .synthesize_collage(&set, &input(), &layout, Canvas::default_for(&layout), 0, &missing)
            .unwrap_err();
        assert!(matches!(err, AgentError::Io { .. }));
    }

    #[test]
    fn plan_missing_a_panel_is_rejected() {
        let layout = GridLayout::quad();
        let (a, _, _) = setup(&layout);
        let f = a.plan_what(&input(), &layout, None, None).unwrap();
        let mut p = a.plan_how(&input(), &f, &layout, None, None).unwrap();
        p.panels.remove("bottom_right");
        assert!(matches!(a.compile_prompts(&input(), &p, &f), Err(AgentError::Precondition(_))));
    }
}
