//! Deterministic offline providers.
//!
//! [`MockChat`] answers every agent task from golden fixture documents and
//! the labeled parts of the request, so its output is a pure function of the
//! request content. Follow-up turns echo what they were given: a revision
//! copies the prior framework and rewrites only the named fields, a
//! refinement copies the prior plan and adjusts only the named locus.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use collage_core::grid::{self, Raster};
use collage_core::plan::GLOBAL_LOCUS;
use collage_core::prompt::{style_digest, PANEL_PREFIX};
use collage_core::{
    parse_document, to_canonical_json, Context, Document, FrameworkField, GateKind,
    GridLayout, HeroPresence, NarrativeScores, PanelDecision, PhotoScores, PhotographicPlan,
    Position, ProductNarrativeFramework, RubricScores, Suggestion, TransferDirections,
    TransferReport,
};
use serde::{Deserialize, Serialize};

use super::{
    ChatProvider, ChatRequest, EmbeddingProvider, GeneratedImage, ImageGenRequest, ImageMetadata,
    ImageProvider, ProviderError,
};
use crate::picture::{sha256_hex, Picture};
use crate::protocol::{label, task};

/// Scripted critic outcome for one critiqued iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticStep {
    Pass,
    NarrativeFail,
    PhotoFail,
}

impl CriticStep {
    pub const ALL: [CriticStep; 3] = [CriticStep::Pass, CriticStep::NarrativeFail, CriticStep::PhotoFail];
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("cannot read fixture {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("fixture {name} is invalid: {message}")]
    Invalid { name: String, message: String },
}

/// Golden documents the mock chat answers from.
#[derive(Debug, Clone)]
pub struct Fixtures {
    pub framework: ProductNarrativeFramework,
    pub plan: PhotographicPlan,
    pub reference_analysis: String,
    pub transfer: TransferDirections,
    pub narrative: NarrativeScores,
    pub photo: PhotoScores,
    pub visual_rubric: RubricScores,
    pub transfer_report: TransferReport,
    pub product_absent_report: TransferReport,
    pub critic_script: Vec<CriticStep>,
}

const EMBEDDED: [(&str, &str); 10] = [
    ("stage1_framework.json", include_str!("../../fixtures/mock/stage1_framework.json")),
    ("stage2_plan.json", include_str!("../../fixtures/mock/stage2_plan.json")),
    ("reference_analysis.txt", include_str!("../../fixtures/mock/reference_analysis.txt")),
    ("reference_transfer.json", include_str!("../../fixtures/mock/reference_transfer.json")),
    ("gate1_scores.json", include_str!("../../fixtures/mock/gate1_scores.json")),
    ("gate2_scores.json", include_str!("../../fixtures/mock/gate2_scores.json")),
    ("rubric_visual.json", include_str!("../../fixtures/mock/rubric_visual.json")),
    ("rubric_transfer.json", include_str!("../../fixtures/mock/rubric_transfer.json")),
    (
        "rubric_transfer_product_absent.json",
        include_str!("../../fixtures/mock/rubric_transfer_product_absent.json"),
    ),
    ("critic_script.json", include_str!("../../fixtures/mock/critic_script.json")),
];

impl Fixtures {
    /// Fixtures compiled into the binary.
    pub fn embedded() -> Self {
        Self::from_source(|name| Ok(embedded(name).to_string())).expect("embedded fixtures are valid")
    }

    /// Loads fixtures from `dir`; files absent there fall back to the
    /// embedded copies.
    pub fn load(dir: &Path) -> Result<Self, FixtureError> {
        Self::from_source(|name| {
            let path = dir.join(name);
            if path.exists() {
                std::fs::read_to_string(&path)
                    .map_err(|source| FixtureError::Read { path: path.display().to_string(), source })
            } else {
                Ok(embedded(name).to_string())
            }
        })
    }

    pub fn without_script(mut self) -> Self {
        self.critic_script.clear();
        self
    }

    fn from_source(
        mut read: impl FnMut(&str) -> Result<String, FixtureError>,
    ) -> Result<Self, FixtureError> {
        let mut doc = |name: &str| read(name).map(|text| (name.to_string(), text));
        Ok(Self {
            framework: parse_fixture(doc("stage1_framework.json")?)?,
            plan: parse_fixture(doc("stage2_plan.json")?)?,
            reference_analysis: doc("reference_analysis.txt")?.1.trim().to_string(),
            transfer: parse_fixture(doc("reference_transfer.json")?)?,
            narrative: parse_fixture(doc("gate1_scores.json")?)?,
            photo: parse_fixture(doc("gate2_scores.json")?)?,
            visual_rubric: parse_fixture(doc("rubric_visual.json")?)?,
            transfer_report: parse_fixture(doc("rubric_transfer.json")?)?,
            product_absent_report: parse_fixture(doc("rubric_transfer_product_absent.json")?)?,
            critic_script: {
                let (name, text) = doc("critic_script.json")?;
                serde_json::from_str(&text)
                    .map_err(|e| FixtureError::Invalid { name, message: e.to_string() })?
            },
        })
    }
}

fn embedded(name: &str) -> &'static str {
    EMBEDDED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).expect("known fixture name")
}

fn parse_fixture<T: Document>((name, text): (String, String)) -> Result<T, FixtureError> {
    parse_document(&text, &Context::none())
        .map_err(|e| FixtureError::Invalid { name, message: e.to_string() })
}

/// Deterministic chat provider answering from [`Fixtures`].
#[derive(Debug, Clone)]
pub struct MockChat {
    fixtures: Fixtures,
}

impl MockChat {
    pub fn new(fixtures: Fixtures) -> Self {
        Self { fixtures }
    }

    /// Embedded fixtures with no critic script: every critique passes.
    pub fn golden() -> Self {
        Self::new(Fixtures::embedded().without_script())
    }

    pub fn with_script(mut self, script: Vec<CriticStep>) -> Self {
        self.fixtures.critic_script = script;
        self
    }

    /// Answers reference-transfer scoring with `report` instead of the golden one.
    pub fn with_transfer_report(mut self, report: TransferReport) -> Self {
        self.fixtures.transfer_report = report;
        self
    }

    pub fn fixtures(&self) -> &Fixtures {
        &self.fixtures
    }

    fn respond(&self, task_name: &str, req: &ChatRequest) -> Result<String, ProviderError> {
        let f = &self.fixtures;
        match task_name {
            task::STAGE1 => Ok(to_canonical_json(&self.stage1(req)?)),
            task::STAGE2 => Ok(to_canonical_json(&self.stage2(req)?)),
            task::STAGE3 => stage3(req),
            task::REFERENCE_ANALYZE => Ok(f.reference_analysis.clone()),
            task::REFERENCE_TRANSFER => {
                need(req, label::REFERENCE_ANALYSIS)?;
                let layout = layout_of(req)?;
                let mut t = f.transfer.clone();
                t.panel_roles = cycle(&f.transfer.panel_roles, &layout);
                t.panel_directives = cycle(&f.transfer.panel_directives, &layout);
                Ok(to_canonical_json(&t))
            }
            task::GATE1 => {
                let mut n = f.narrative.clone();
                if self.step(req)? == CriticStep::NarrativeFail {
                    n.usage = 3;
                    n.reasons.insert("usage".into(), "The product is never shown being applied".into());
                }
                Ok(to_canonical_json(&n))
            }
            task::GATE2 => {
                let mut p = f.photo.clone();
                if self.step(req)? == CriticStep::PhotoFail {
                    p = PhotoScores { realism: 3, coherence: 5, aesthetic: 5, ..p };
                    p.reasons.insert("realism".into(), "The product floats above the surface without a contact shadow".into());
                }
                Ok(to_canonical_json(&p))
            }
            task::SUGGEST => Ok(to_canonical_json(&suggest(req)?)),
            task::RUBRIC_VISUAL => Ok(to_canonical_json(&f.visual_rubric)),
            task::RUBRIC_TRANSFER => {
                let layout = layout_of(req)?;
                let mut r = f.transfer_report.clone();
                r.per_position = cycle(&f.transfer_report.per_position, &layout);
                Ok(to_canonical_json(&r))
            }
            task::REPAIR => {
                let original = need(req, label::ORIGINAL_TASK)?.trim();
                if original == task::REPAIR {
                    return Err(ProviderError::Precondition("mock: nested repair".into()));
                }
                self.respond(original, req)
            }
            other => Err(ProviderError::Precondition(format!("mock chat has no transcript for task {other:?}"))),
        }
    }

    fn stage1(&self, req: &ChatRequest) -> Result<ProductNarrativeFramework, ProviderError> {
        need(req, label::PRODUCT_NAME)?;
        if let Some(prior) = req.labeled(label::PRIOR_FRAMEWORK_JSON) {
            let prior: ProductNarrativeFramework = doc(prior, label::PRIOR_FRAMEWORK_JSON)?;
            let revision: Suggestion = doc(need(req, label::REVISION_JSON)?, label::REVISION_JSON)?;
            let mut out = prior.clone();
            let mut fields = revision.framework_fields();
            fields.push(FrameworkField::NarrativeFramework);
            for field in fields {
                *out.field_mut(field) = format!("{} Revised per suggestion: {}", prior.field(field), revision.how);
            }
            return Ok(out);
        }
        let mut out = self.fixtures.framework.clone();
        if let Some(t) = req.labeled(label::TRANSFER_PLAN_JSON) {
            let t: TransferDirections = doc(t, label::TRANSFER_PLAN_JSON)?;
            let roles: Vec<&str> = t.panel_roles.values().map(String::as_str).collect();
            out.narrative_framework = format!("{} Told as: {}.", out.narrative_framework, roles.join(", "));
        }
        Ok(out)
    }

    fn stage2(&self, req: &ChatRequest) -> Result<PhotographicPlan, ProviderError> {
        let layout = layout_of(req)?;
        need(req, label::FRAMEWORK_JSON)?;
        if let Some(prior) = req.labeled(label::PRIOR_PLAN_JSON) {
            let mut plan: PhotographicPlan = doc(prior, label::PRIOR_PLAN_JSON)?;
            let refinement: Suggestion = doc(need(req, label::REFINEMENT_JSON)?, label::REFINEMENT_JSON)?;
            let note = format!(" Refined per suggestion: {}", refinement.how);
            let mut touched_panel = false;
            for part in refinement.locus.split(',').map(str::trim) {
                if let Some(d) = plan.panels.get_mut(part) {
                    d.spatial_composition.push_str(&note);
                    touched_panel = true;
                }
            }
            if !touched_panel || refinement.locus.contains(GLOBAL_LOCUS) {
                plan.global_visual_style.lighting.push_str(&note);
            }
            return Ok(plan);
        }
        let golden = &self.fixtures.plan;
        let mut plan = PhotographicPlan {
            layout: layout.clone(),
            panels: cycle(&golden.panels, &layout),
            global_visual_style: golden.global_visual_style.clone(),
            extra: golden.extra.clone(),
        };
        if let Some(t) = req.labeled(label::TRANSFER_PLAN_JSON) {
            let t: TransferDirections = doc(t, label::TRANSFER_PLAN_JSON)?;
            for (pos, directive) in &t.panel_directives {
                if let Some(d) = plan.panels.get_mut(pos) {
                    d.shot_scale = directive.shot_scale;
                    d.hero_presence = directive.hero_presence;
                    d.hero_number = directive.hero_number;
                    if directive.hero_presence == HeroPresence::None {
                        d.interaction = format!("No product in frame; {}", directive.interaction);
                    }
                }
            }
        }
        Ok(plan)
    }

    fn step(&self, req: &ChatRequest) -> Result<CriticStep, ProviderError> {
        let iteration: usize = need(req, label::ITERATION)?
            .trim()
            .parse()
            .map_err(|_| ProviderError::Precondition("mock: ITERATION is not a number".into()))?;
        Ok(self.fixtures.critic_script.get(iteration).copied().unwrap_or(CriticStep::Pass))
    }
}

impl ChatProvider for MockChat {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        request.check()?;
        self.respond(&request.task, request)
    }
}

fn need<'a>(req: &'a ChatRequest, heading: &str) -> Result<&'a str, ProviderError> {
    req.labeled(heading)
        .ok_or_else(|| ProviderError::Precondition(format!("mock: {} request lacks {heading}", req.task)))
}

fn doc<T: Document>(text: &str, heading: &str) -> Result<T, ProviderError> {
    parse_document(text, &Context::none())
        .map_err(|e| ProviderError::Precondition(format!("mock: {heading} unreadable: {e}")))
}

fn layout_of(req: &ChatRequest) -> Result<GridLayout, ProviderError> {
    GridLayout::from_str(need(req, label::LAYOUT)?)
        .map_err(|e| ProviderError::Precondition(format!("mock: {e}")))
}

/// Spreads the values of a golden per-position map over another layout by
/// repeating them in order.
fn cycle<V: Clone>(golden: &BTreeMap<Position, V>, layout: &GridLayout) -> BTreeMap<Position, V> {
    let ordered: Vec<&V> = match golden.len() {
        4 => collage_core::layout::QUAD_LABELS
            .iter()
            .filter_map(|l| golden.get(*l))
            .collect(),
        _ => golden.values().collect(),
    };
    layout
        .positions()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), ordered[i % ordered.len()].clone()))
        .collect()
}

fn stage3(req: &ChatRequest) -> Result<String, ProviderError> {
    let product = need(req, label::PRODUCT_NAME)?.trim().to_string();
    let plan: PhotographicPlan = doc(need(req, label::PLAN_JSON)?, label::PLAN_JSON)?;
    let framework: ProductNarrativeFramework = doc(need(req, label::FRAMEWORK_JSON)?, label::FRAMEWORK_JSON)?;
    let digest = req
        .labeled(label::STYLE_DIGEST)
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| style_digest(&plan.global_visual_style));
    let prompts: BTreeMap<String, String> = plan
        .panels
        .iter()
        .map(|(pos, d)| (pos.to_string(), panel_prompt(&product, d, &framework, &digest)))
        .collect();
    Ok(serde_json::to_string_pretty(&prompts).expect("string map serializes"))
}

fn panel_prompt(product: &str, d: &PanelDecision, f: &ProductNarrativeFramework, digest: &str) -> String {
    let scale = serde_json::to_value(d.shot_scale).expect("enum serializes");
    let hero = match d.hero_presence {
        HeroPresence::Full if d.hero_number > 1 => format!("{} units of {product} fully visible", d.hero_number),
        HeroPresence::Full => format!("{product} fully visible"),
        HeroPresence::Partial => format!("{product} partly in frame"),
        HeroPresence::None => format!("no product in frame, the scene sets up {product}"),
    };
    format!(
        "{} shot, {hero}. Focus: {}. Composition: {}. Action: {}. Story: {} {digest}",
        scale.as_str().unwrap_or_default(),
        d.subject_emphasis,
        d.spatial_composition,
        d.interaction,
        f.narrative_framework,
    )
}

fn suggest(req: &ChatRequest) -> Result<Suggestion, ProviderError> {
    let gate: GateKind = serde_json::from_value(serde_json::Value::String(need(req, label::GATE)?.trim().into()))
        .map_err(|e| ProviderError::Precondition(format!("mock: GATE unreadable: {e}")))?;
    let failing: BTreeMap<String, u8> = serde_json::from_str(need(req, label::FAILING_JSON)?)
        .map_err(|e| ProviderError::Precondition(format!("mock: FAILING_JSON unreadable: {e}")))?;
    let layout = layout_of(req)?;
    let order: &[&str] = match gate {
        GateKind::Narrative => &NarrativeScores::DIMENSIONS,
        GateKind::Photography => &PhotoScores::DIMENSIONS,
    };
    let (dim, score) = order
        .iter()
        .filter_map(|d| failing.get(*d).map(|s| (*d, *s)))
        .min_by_key(|(_, s)| *s)
        .ok_or_else(|| ProviderError::Precondition("mock: FAILING_JSON names no known dimension".into()))?;
    let (locus, how) = match dim {
        "identity" => ("product_essence".to_string(), "make the product the unmistakable hero of at least one panel"),
        "usage" => ("product_usage".to_string(), "show application on hands, product and hands together in frame"),
        "context" => ("usage_context".to_string(), "anchor every scene in one concrete, recognisable setting"),
        "consumer" => ("target_consumer_profile".to_string(), "cast and style the scenes for the intended consumer"),
        "realism" => (layout.positions()[0].to_string(), "ground the product with a contact shadow and true scale"),
        "coherence" => (GLOBAL_LOCUS.to_string(), "unify warm key light and palette across panels"),
        _ => (GLOBAL_LOCUS.to_string(), "simplify backgrounds and strengthen the focal hierarchy"),
    };
    Ok(Suggestion {
        gate,
        what: format!("{dim} scored {score}, below the threshold"),
        locus,
        how: how.to_string(),
        extra: Default::default(),
    })
}

/// Image generator that paints each panel a flat colour taken from the first
/// three bytes of the SHA-256 of its `PANEL <position>: ...` prompt block.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockImage;

impl MockImage {
    pub fn panel_color(block: &str) -> [u8; 3] {
        let h = hex::decode(sha256_hex(block.as_bytes())).expect("hex digest");
        [h[0], h[1], h[2]]
    }
}

impl ImageProvider for MockImage {
    fn generate(&self, request: &ImageGenRequest) -> Result<GeneratedImage, ProviderError> {
        request.check()?;
        let layout = GridLayout::new(request.rows, request.cols)
            .map_err(|e| ProviderError::Precondition(e.to_string()))?;
        let blocks: BTreeMap<&str, &str> = request
            .prompt_blocks
            .iter()
            .filter_map(|b| {
                let rest = b.strip_prefix(PANEL_PREFIX)?;
                let (pos, _) = rest.split_once(':')?;
                Some((pos, b.as_str()))
            })
            .collect();
        let (pw, ph) = (request.target_width / request.cols, request.target_height / request.rows);
        let panels: Vec<Raster> = layout
            .positions()
            .iter()
            .map(|p| {
                let [r, g, b] = MockImage::panel_color(blocks.get(p.as_str()).copied().unwrap_or(p.as_str()));
                Raster::filled(pw, ph, &[r, g, b, 255])
            })
            .collect();
        let raster = grid::assemble(&panels, &layout).map_err(|e| ProviderError::Decode(e.to_string()))?;
        let image = Picture::from_raster(raster).map_err(|e| ProviderError::Decode(e.to_string()))?;
        Ok(GeneratedImage {
            image,
            metadata: ImageMetadata { provider: "mock".into(), ..Default::default() },
        })
    }
}

/// Embedder returning a fixed pseudo-random projection of per-channel RGB
/// mean and variance.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    projection: [[f64; 6]; MOCK_EMBED_DIM],
}

pub const MOCK_EMBED_DIM: usize = 8;
const PROJECTION_SEED: u64 = 0x00c0_11a6_e5ee_d001;

impl Default for MockEmbedder {
    fn default() -> Self {
        let mut state = PROJECTION_SEED;
        let mut projection = [[0.0; 6]; MOCK_EMBED_DIM];
        for row in &mut projection {
            for v in row.iter_mut() {
                *v = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
            }
        }
        Self { projection }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl MockEmbedder {
    /// Centred channel means and channel variances, scaled to about [-0.5, 0.5].
    pub fn features(image: &Picture) -> [f64; 6] {
        let px = image.pixels();
        let n = f64::from(px.width()) * f64::from(px.height());
        let mut sum = [0.0f64; 3];
        let mut sq = [0.0f64; 3];
        for p in px.pixels() {
            for c in 0..3 {
                let v = f64::from(p[c]) / 255.0;
                sum[c] += v;
                sq[c] += v * v;
            }
        }
        let mut out = [0.0; 6];
        for c in 0..3 {
            let mean = sum[c] / n;
            out[c] = mean - 0.5;
            out[3 + c] = (sq[c] / n - mean * mean).max(0.0);
        }
        out
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn dimension(&self) -> usize {
        MOCK_EMBED_DIM
    }

    fn embed(&self, image: &Picture) -> Result<Vec<f64>, ProviderError> {
        let f = Self::features(image);
        Ok(self.projection.iter().map(|row| row.iter().zip(f).map(|(w, x)| w * x).sum()).collect())
    }
}

/// Chat provider backed by a closure, for tests that need malformed or
/// otherwise hand-crafted responses.
pub struct FnChat<F>(pub F);

impl<F> ChatProvider for FnChat<F>
where
    F: Fn(&ChatRequest) -> Result<String, ProviderError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        request.check()?;
        (self.0)(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::picture::testing::packshot;
    use crate::providers::embed_image;
    use collage_core::Alignment;

    fn stage1_request() -> ChatRequest {
        ChatRequest::new(task::STAGE1, "sys").text(label::PRODUCT_NAME, "Shea Hand Cream")
    }

    #[test]
    fn golden_stage1_mentions_shea_butter() {
        let out = MockChat::golden().complete(&stage1_request()).unwrap();
        let f: ProductNarrativeFramework = parse_document(&out, &Context::none()).unwrap();
        assert!(f.product_essence.contains("shea butter"));
    }

    #[test]
    fn revision_rewrites_named_field_only() {
        let prior = Fixtures::embedded().framework;
        let s = Suggestion {
            gate: GateKind::Narrative,
            what: "usage unclear".into(),
            locus: "product_usage".into(),
            how: "show application on hands".into(),
            extra: Default::default(),
        };
        let req = stage1_request()
            .text(label::PRIOR_FRAMEWORK_JSON, to_canonical_json(&prior))
            .text(label::REVISION_JSON, to_canonical_json(&s));
        let out: ProductNarrativeFramework =
            parse_document(&MockChat::golden().complete(&req).unwrap(), &Context::none()).unwrap();
        assert_eq!(
            prior.changed_fields(&out),
            [FrameworkField::ProductUsage, FrameworkField::NarrativeFramework]
        );
    }

    #[test]
    fn script_drives_gate_scores() {
        let chat = MockChat::golden().with_script(vec![CriticStep::NarrativeFail, CriticStep::PhotoFail]);
        let gate = |t: &str, i: u32| {
            chat.complete(&ChatRequest::new(t, "sys").text(label::ITERATION, i.to_string())).unwrap()
        };
        let n0: NarrativeScores = parse_document(&gate(task::GATE1, 0), &Context::none()).unwrap();
        assert_eq!(n0.values(), [5, 3, 4, 5]);
        let p1: PhotoScores = parse_document(&gate(task::GATE2, 1), &Context::none()).unwrap();
        assert_eq!(p1.values(), [3, 5, 5]);
        let n2: NarrativeScores = parse_document(&gate(task::GATE1, 2), &Context::none()).unwrap();
        assert_eq!(n2.values(), [5, 4, 4, 5]);
    }

    #[test]
    fn image_panels_follow_prompt_hashes() {
        let blocks = vec![
            "fidelity".to_string(),
            "PANEL r1c1: same".to_string(),
            "PANEL r1c2: other".to_string(),
            "PANEL r1c3: same".to_string(),
        ];
        let req = ImageGenRequest {
            prompt_blocks: blocks.clone(),
            condition_images: vec![packshot(64)],
            target_width: 1536,
            target_height: 512,
            rows: 1,
            cols: 3,
        };
        let img = MockImage.generate(&req).unwrap().image;
        assert_eq!((img.width(), img.height()), (1536, 512));
        let c = MockImage::panel_color(&blocks[1]);
        let px = img.pixels().get_pixel(10, 10);
        assert_eq!([px[0], px[1], px[2]], c);
        let again = MockImage.generate(&req).unwrap().image;
        assert_eq!(img.digest(), again.digest());
    }

    #[test]
    fn embedder_is_deterministic() {
        let e = MockEmbedder::default();
        let p = packshot(64);
        let a = embed_image(&e, &p).unwrap();
        let b = embed_image(&MockEmbedder::default(), &Picture::decode(p.png()).unwrap()).unwrap();
        assert_eq!(a.values.len(), MOCK_EMBED_DIM);
        assert_eq!(
            a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn directory_overrides_embedded() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("critic_script.json"), "[\"photo_fail\"]").unwrap();
        let f = Fixtures::load(dir.path()).unwrap();
        assert_eq!(f.critic_script, [CriticStep::PhotoFail]);
        std::fs::write(dir.path().join("gate1_scores.json"), "{\"identity\": 9}").unwrap();
        assert!(matches!(Fixtures::load(dir.path()), Err(FixtureError::Invalid { .. })));
    }

    #[test]
    fn product_absent_fixture_marks_weak_opening() {
        let f = Fixtures::embedded();
        assert_eq!(f.product_absent_report.per_position[&Position::from("top_left")], Alignment::Weak);
        assert!(f.product_absent_report.grid_plan.score < f.transfer_report.grid_plan.score);
        assert_eq!(
            f.transfer.panel_directives[&Position::from("top_left")].hero_presence,
            HeroPresence::None
        );
    }
}
