//! Structural similarity between grids and the two rubric scorers.
//!
//! Structure: each grid is split into panels, panels are embedded, and the
//! relation matrices of two grids are compared with CKA. Judgement: one
//! chat turn scores visual quality over fixed sub-dimensions, another
//! compares a generated grid with its reference.

pub mod batch;
mod scoring;

use collage_core::relation::RelationMatrix;
use collage_core::{GridLayout, MetricError};

use crate::picture::{split_grid, Picture, PictureError};
use crate::providers::{CachedEmbedder, ProviderError};

pub use batch::{batch_evaluate, BatchError, BatchReport, BatchRow, Evaluator, Manifest, ManifestItem};
pub use collage_core::cka;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Picture(#[from] PictureError),
}

/// `R = EEᵀ` over unit-normalized panel embeddings.
pub fn relation_matrix(panels: &[Picture], embedder: &CachedEmbedder) -> Result<RelationMatrix, MetricsError> {
    let vectors = panels.iter().map(|p| embedder.embed(p).map(|v| v.values)).collect::<Result<Vec<_>, _>>()?;
    Ok(collage_core::relation_matrix(&vectors)?)
}

/// Relation matrices of both grids and their CKA.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAlignment {
    pub cka: f64,
    pub reference: RelationMatrix,
    pub generated: RelationMatrix,
}

pub fn grid_cka(
    reference: &Picture,
    generated: &Picture,
    layout: &GridLayout,
    embedder: &CachedEmbedder,
) -> Result<GridAlignment, MetricsError> {
    let r_ref = relation_matrix(&split_grid(reference, layout)?, embedder)?;
    let r_gen = relation_matrix(&split_grid(generated, layout)?, embedder)?;
    Ok(GridAlignment { cka: cka(&r_ref, &r_gen)?, reference: r_ref, generated: r_gen })
}
