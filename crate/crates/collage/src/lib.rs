//! Campaign collage engine: model providers, the ideation, generation and
//! critique agents, the gated refinement pipeline, evaluation metrics and
//! the `collage` command line.

pub mod picture;
pub mod protocol;
pub mod providers;
pub mod agents;
pub mod cli;
pub mod config;
pub mod fsutil;
pub mod metrics;
pub mod pipeline;
