#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use collage::agents::Agents;
use collage::picture::{Picture, ProductInput};
use collage::pipeline::{Clock, PipelineConfig};
use collage::providers::mock::{CriticStep, MockChat, MockImage};
use collage::providers::{CallLog, ChatProvider, Recorded};
use image::{Rgba, RgbaImage};

/// Light background with a darker centred block.
pub fn packshot(size: u32) -> Picture {
    Picture::from_rgba(RgbaImage::from_fn(size, size, |x, y| {
        if x > size / 4 && x < 3 * size / 4 && y > size / 5 && y < 4 * size / 5 {
            Rgba([180, 150, 120, 255])
        } else {
            Rgba([250, 250, 250, 255])
        }
    }))
}

/// A reference grid with four distinctly colored quadrants.
pub fn reference_grid(size: u32) -> Picture {
    Picture::from_rgba(RgbaImage::from_fn(size, size, |x, y| {
        match (x * 2 / size, y * 2 / size) {
            (0, 0) => Rgba([200, 40, 40, 255]),
            (1, 0) => Rgba([40, 200, 40, 255]),
            (0, _) => Rgba([40, 40, 200, 255]),
            _ => Rgba([220, 220, 60, 255]),
        }
    }))
}

pub fn input() -> ProductInput {
    ProductInput::new(packshot(96), "Shea Hand Cream").unwrap().with_intent("winter hand care")
}

/// Mock agents whose every provider call lands in the returned log.
pub fn mock_agents(script: Vec<CriticStep>) -> (Agents, CallLog) {
    agents_with(Arc::new(MockChat::golden().with_script(script)))
}

pub fn agents_with(chat: Arc<dyn ChatProvider>) -> (Agents, CallLog) {
    let log = CallLog::new();
    let agents = Agents::new(
        Arc::new(Recorded::new(chat, log.clone())),
        Arc::new(Recorded::new(Arc::new(MockImage), log.clone())),
    );
    (agents, log)
}

pub fn config(dir: &Path, max_iterations: u32) -> PipelineConfig {
    PipelineConfig { max_iterations, clock: Clock::Logical, ..PipelineConfig::new(dir) }
}

/// File name → bytes for every regular file in `dir`.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}
