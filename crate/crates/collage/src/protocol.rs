//! Task markers and labeled request parts shared by the agents and the mock
//! chat provider.
//!
//! Every agent request carries its machine-readable inputs as text parts that
//! start with one of the [`label`] headings, so a live model sees a readable
//! prompt and the mock can answer from the same content.

pub mod task {
    pub const STAGE1: &str = "STAGE1";
    pub const STAGE2: &str = "STAGE2";
    pub const STAGE3: &str = "STAGE3";
    pub const REPAIR: &str = "REPAIR";
    pub const REFERENCE_ANALYZE: &str = "REFERENCE_ANALYZE";
    pub const REFERENCE_TRANSFER: &str = "REFERENCE_TRANSFER";
    pub const GATE1: &str = "GATE1";
    pub const GATE2: &str = "GATE2";
    pub const SUGGEST: &str = "SUGGEST";
    pub const RUBRIC_VISUAL: &str = "RUBRIC_VISUAL";
    pub const RUBRIC_TRANSFER: &str = "RUBRIC_TRANSFER";
}

pub mod label {
    pub const PRODUCT_NAME: &str = "PRODUCT_NAME:";
    pub const USER_INTENT: &str = "USER_INTENT:";
    pub const LAYOUT: &str = "LAYOUT:";
    pub const TRANSFER_PLAN_JSON: &str = "TRANSFER_PLAN_JSON:";
    pub const PRIOR_FRAMEWORK_JSON: &str = "PRIOR_FRAMEWORK_JSON:";
    pub const REVISION_JSON: &str = "REVISION_JSON:";
    pub const FRAMEWORK_JSON: &str = "FRAMEWORK_JSON:";
    pub const PRIOR_PLAN_JSON: &str = "PRIOR_PLAN_JSON:";
    pub const REFINEMENT_JSON: &str = "REFINEMENT_JSON:";
    pub const PLAN_JSON: &str = "PLAN_JSON:";
    pub const STYLE_DIGEST: &str = "STYLE_DIGEST:";
    pub const ITERATION: &str = "ITERATION:";
    pub const GATE: &str = "GATE:";
    pub const FAILING_JSON: &str = "FAILING_JSON:";
    pub const ALLOWED_WHERE: &str = "ALLOWED_WHERE:";
    pub const REFERENCE_ANALYSIS: &str = "REFERENCE_ANALYSIS:";
    pub const ORIGINAL_TASK: &str = "ORIGINAL_TASK:";
    pub const KIND: &str = "KIND:";
    pub const PROBLEMS: &str = "PROBLEMS:";
    pub const PREVIOUS_RESPONSE: &str = "PREVIOUS_RESPONSE:";
    pub const IMAGE: &str = "IMAGE:";
}
