//! Splitting a collage raster into its panels and assembling panels back.

use alloc::vec;
use alloc::vec::Vec;

use crate::layout::GridLayout;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("{width}x{height} image is not divisible into a {rows}x{cols} grid")]
    NotDivisible { width: u32, height: u32, rows: u32, cols: u32 },
    #[error("raster buffer has {got} bytes, expected {expected}")]
    BufferSize { expected: usize, got: usize },
    #[error("expected {expected} panels, got {got}")]
    PanelCount { expected: usize, got: usize },
    #[error("panels differ in size or channel count")]
    RaggedPanels,
    #[error("position {0} is not part of the layout")]
    UnknownPosition(alloc::string::String),
}

/// Row-major interleaved pixel buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self, GridError> {
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(GridError::BufferSize { expected, got: data.len() });
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: u32, height: u32, pixel: &[u8]) -> Self {
        let data = pixel.repeat(width as usize * height as usize);
        Self { width, height, channels: pixel.len() as u8, data }
    }

    fn row_bytes(&self) -> usize {
        self.width as usize * self.channels as usize
    }
}

/// Pixel rectangle `[x, x + width) × [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PanelRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

/// Panel rectangles in `layout.panel_order`.
pub fn panel_rects(width: u32, height: u32, layout: &GridLayout) -> Result<Vec<PanelRect>, GridError> {
    if width % layout.cols != 0 || height % layout.rows != 0 {
        return Err(GridError::NotDivisible { width, height, rows: layout.rows, cols: layout.cols });
    }
    let pw = width / layout.cols;
    let ph = height / layout.rows;
    layout
        .positions()
        .iter()
        .map(|p| {
            let (r, c) = layout
                .cell_of(p.as_str())
                .ok_or_else(|| GridError::UnknownPosition(p.as_str().into()))?;
            Ok(PanelRect { x: c * pw, y: r * ph, width: pw, height: ph })
        })
        .collect()
}

/// Crops the collage into equal panels ordered as `layout.panel_order`.
pub fn split(collage: &Raster, layout: &GridLayout) -> Result<Vec<Raster>, GridError> {
    let rects = panel_rects(collage.width, collage.height, layout)?;
    let ch = collage.channels as usize;
    let stride = collage.row_bytes();
    Ok(rects
        .into_iter()
        .map(|r| {
            let row_len = r.width as usize * ch;
            let mut data = Vec::with_capacity(row_len * r.height as usize);
            for y in r.y..r.y + r.height {
                let start = y as usize * stride + r.x as usize * ch;
                data.extend_from_slice(&collage.data[start..start + row_len]);
            }
            Raster { width: r.width, height: r.height, channels: collage.channels, data }
        })
        .collect())
}

/// Inverse of [`split`]: panels in `layout.panel_order` into one raster.
pub fn assemble(panels: &[Raster], layout: &GridLayout) -> Result<Raster, GridError> {
    if panels.len() != layout.panel_count() {
        return Err(GridError::PanelCount { expected: layout.panel_count(), got: panels.len() });
    }
    let first = &panels[0];
    if panels
        .iter()
        .any(|p| p.width != first.width || p.height != first.height || p.channels != first.channels)
    {
        return Err(GridError::RaggedPanels);
    }
    let width = first.width * layout.cols;
    let height = first.height * layout.rows;
    let ch = first.channels as usize;
    let stride = width as usize * ch;
    let mut data = vec![0u8; stride * height as usize];
    let rects = panel_rects(width, height, layout)?;
    for (panel, r) in panels.iter().zip(rects) {
        let row_len = panel.row_bytes();
        for y in 0..r.height as usize {
            let dst = (r.y as usize + y) * stride + r.x as usize * ch;
            data[dst..dst + row_len].copy_from_slice(&panel.data[y * row_len..(y + 1) * row_len]);
        }
    }
    Ok(Raster { width, height, channels: first.channels, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> Raster {
        let data = (0..w * h).flat_map(|i| [(i % 251) as u8, (i / 7 % 256) as u8, 9]).collect();
        Raster::new(w, h, 3, data).unwrap()
    }

    #[test]
    fn quad_split_dimensions_and_order() {
        let layout = GridLayout::quad();
        let rects = panel_rects(1024, 1024, &layout).unwrap();
        assert_eq!(rects[1], PanelRect { x: 512, y: 0, width: 512, height: 512 });
        assert_eq!(rects[2], PanelRect { x: 0, y: 512, width: 512, height: 512 });
        let panels = split(&gradient(8, 6), &layout).unwrap();
        assert_eq!(panels.len(), 4);
        assert!(panels.iter().all(|p| p.width == 4 && p.height == 3));
        // top_right starts at pixel (4, 0)
        assert_eq!(&panels[1].data[..3], &gradient(8, 6).data[12..15]);
    }

    #[test]
    fn strip_split() {
        let layout = GridLayout::new(1, 3).unwrap();
        let rects = panel_rects(1536, 512, &layout).unwrap();
        assert!(rects.iter().all(|r| r.width == 512 && r.height == 512));
    }

    #[test]
    fn indivisible_is_rejected() {
        let err = panel_rects(1023, 1024, &GridLayout::quad()).unwrap_err();
        assert_eq!(err, GridError::NotDivisible { width: 1023, height: 1024, rows: 2, cols: 2 });
    }

    #[test]
    fn assemble_inverts_split() {
        let layout = GridLayout::new(3, 3).unwrap();
        let img = gradient(9, 12);
        assert_eq!(assemble(&split(&img, &layout).unwrap(), &layout).unwrap(), img);
    }
}
