//! Decoded images, their content digests, and product inputs.

use std::io::Cursor;
use std::path::Path;
use std::sync::Arc;

use collage_core::grid::{self, Raster};
use collage_core::GridLayout;
use image::{ImageFormat, RgbaImage};
use sha2::{Digest, Sha256};

/// Minimum packshot edge length in pixels.
pub const MIN_PACKSHOT_EDGE: u32 = 64;

#[derive(Debug, thiserror::Error)]
pub enum PictureError {
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error(transparent)]
    Grid(#[from] grid::GridError),
}

/// An RGBA image with its PNG encoding and content digest.
///
/// The digest covers dimensions and raw pixels, so two encodings of the same
/// pixels share a digest.
#[derive(Clone)]
pub struct Picture {
    pixels: Arc<RgbaImage>,
    png: Arc<Vec<u8>>,
    digest: String,
}

impl std::fmt::Debug for Picture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Picture")
            .field("width", &self.width())
            .field("height", &self.height())
            .field("digest", &self.digest)
            .finish()
    }
}

impl PartialEq for Picture {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest
    }
}

impl Picture {
    pub fn from_rgba(pixels: RgbaImage) -> Self {
        let mut png = Vec::new();
        pixels
            .write_to(&mut Cursor::new(&mut png), ImageFormat::Png)
            .expect("PNG encoding into memory does not fail");
        let digest = pixel_digest(&pixels);
        Self { pixels: Arc::new(pixels), png: Arc::new(png), digest }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PictureError> {
        let img = image::load_from_memory(bytes).map_err(|e| PictureError::Decode(e.to_string()))?;
        Ok(Self::from_rgba(img.to_rgba8()))
    }

    pub fn open(path: &Path) -> Result<Self, PictureError> {
        let bytes = std::fs::read(path)
            .map_err(|source| PictureError::Read { path: path.display().to_string(), source })?;
        Self::decode(&bytes)
    }

    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }

    pub fn pixels(&self) -> &RgbaImage {
        &self.pixels
    }

    /// PNG bytes of this picture.
    pub fn png(&self) -> &[u8] {
        &self.png
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            width: self.width(),
            height: self.height(),
            channels: 4,
            data: self.pixels.as_raw().clone(),
        }
    }

    pub fn from_raster(raster: Raster) -> Result<Self, PictureError> {
        if raster.channels != 4 {
            return Err(PictureError::Decode(format!("expected RGBA raster, got {} channels", raster.channels)));
        }
        let img = RgbaImage::from_raw(raster.width, raster.height, raster.data)
            .ok_or_else(|| PictureError::Decode("raster buffer size mismatch".into()))?;
        Ok(Self::from_rgba(img))
    }

    pub fn resized(&self, width: u32, height: u32) -> Self {
        Self::from_rgba(image::imageops::resize(
            self.pixels.as_ref(),
            width,
            height,
            image::imageops::FilterType::Triangle,
        ))
    }
}

pub fn pixel_digest(img: &RgbaImage) -> String {
    let mut h = Sha256::new();
    h.update(img.width().to_le_bytes());
    h.update(img.height().to_le_bytes());
    h.update(img.as_raw());
    hex::encode(h.finalize())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Crops a collage into its panels in layout order.
pub fn split_grid(collage: &Picture, layout: &GridLayout) -> Result<Vec<Picture>, PictureError> {
    grid::split(&collage.to_raster(), layout)?
        .into_iter()
        .map(Picture::from_raster)
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("product name is empty")]
    EmptyName,
    #[error("packshot is {width}x{height}, each edge must be at least {MIN_PACKSHOT_EDGE} px")]
    PackshotTooSmall { width: u32, height: u32 },
}

/// What a run starts from: packshot, product name, optional intent and reference grid.
#[derive(Debug, Clone)]
pub struct ProductInput {
    pub packshot: Picture,
    pub name: String,
    pub user_intent: Option<String>,
    pub reference: Option<Picture>,
}

impl ProductInput {
    pub fn new(packshot: Picture, name: impl Into<String>) -> Result<Self, InputError> {
        let input = Self { packshot, name: name.into(), user_intent: None, reference: None };
        input.validate()?;
        Ok(input)
    }

    pub fn with_intent(mut self, intent: impl Into<String>) -> Self {
        let intent = intent.into();
        self.user_intent = (!intent.trim().is_empty()).then_some(intent);
        self
    }

    pub fn with_reference(mut self, reference: Picture) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn validate(&self) -> Result<(), InputError> {
        if self.name.trim().is_empty() {
            return Err(InputError::EmptyName);
        }
        let (w, h) = (self.packshot.width(), self.packshot.height());
        if w < MIN_PACKSHOT_EDGE || h < MIN_PACKSHOT_EDGE {
            return Err(InputError::PackshotTooSmall { width: w, height: h });
        }
        Ok(())
    }

    pub fn intent_or_default(&self) -> &str {
        self.user_intent.as_deref().unwrap_or("none given")
    }
}


#[cfg(test)]
mod tests {
    use super::testing::packshot;
    use super::*;

    #[test]
    fn digest_ignores_encoding() {
        let p = packshot(64);
        let again = Picture::decode(p.png()).unwrap();
        assert_eq!(p.digest(), again.digest());
    }

    #[test]
    fn input_rules() {
        assert!(matches!(ProductInput::new(packshot(64), "  "), Err(InputError::EmptyName)));
        assert!(matches!(
            ProductInput::new(packshot(63), "Cream"),
            Err(InputError::PackshotTooSmall { .. })
        ));
        let input = ProductInput::new(packshot(64), "Cream").unwrap().with_intent(" ");
        assert!(input.user_intent.is_none());
    }

    #[test]
    fn undecodable_bytes() {
        assert!(matches!(Picture::decode(b"not an image"), Err(PictureError::Decode(_))));
    }

    #[test]
    fn split_returns_layout_order() {
        let p = packshot(128);
        let panels = split_grid(&p, &GridLayout::quad()).unwrap();
        assert_eq!(panels.len(), 4);
        assert!(panels.iter().all(|q| q.width() == 64 && q.height() == 64));
        assert!(split_grid(&packshot(127), &GridLayout::quad()).is_err());
    }
}
