//! Grid layouts and the position labels that address their panels.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Labels used for the four cells of a 2×2 grid, in row-major order.
pub const QUAD_LABELS: [&str; 4] = ["top_left", "top_right", "bottom_left", "bottom_right"];

/// A panel position label such as `top_left` or `r2c3`.
///
/// Positions are plain labels; whether a label is legal is decided by the
/// [`GridLayout`] it is used with.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Position(String);

impl Position {
    pub fn new(label: impl Into<String>) -> Self {
        Self(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Position {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl AsRef<str> for Position {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl core::borrow::Borrow<str> for Position {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("layout must have at least 2 panels, got {rows}x{cols}")]
    TooFewPanels { rows: u32, cols: u32 },
    #[error("layout dimension must be positive")]
    ZeroDimension,
    #[error("cannot parse layout {0:?}, expected RxC such as 2x2")]
    Unparsable(String),
}

/// Rows × columns arrangement of a collage plus the order panels are read in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLayout {
    pub rows: u32,
    pub cols: u32,
    pub panel_order: Vec<Position>,
}

impl GridLayout {
    /// Builds a layout with the canonical row-major labels: the named quadrants
    /// for 2×2 and `r{row}c{col}` (1-based) for everything else.
    pub fn new(rows: u32, cols: u32) -> Result<Self, LayoutError> {
        if rows == 0 || cols == 0 {
            return Err(LayoutError::ZeroDimension);
        }
        if rows * cols < 2 {
            return Err(LayoutError::TooFewPanels { rows, cols });
        }
        let panel_order = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| Position(canonical_label(rows, cols, r, c)))
            .collect();
        Ok(Self { rows, cols, panel_order })
    }

    pub fn quad() -> Self {
        Self::new(2, 2).expect("2x2 is a valid layout")
    }

    pub fn panel_count(&self) -> usize {
        (self.rows * self.cols) as usize
    }

    pub fn positions(&self) -> &[Position] {
        &self.panel_order
    }

    pub fn contains(&self, position: &str) -> bool {
        self.panel_order.iter().any(|p| p.as_str() == position)
    }

    /// Row and column of a label, independent of `panel_order`.
    pub fn cell_of(&self, position: &str) -> Option<(u32, u32)> {
        if self.rows == 2 && self.cols == 2 {
            let idx = QUAD_LABELS.iter().position(|l| *l == position)? as u32;
            return Some((idx / 2, idx % 2));
        }
        let rest = position.strip_prefix('r')?;
        let (r, c) = rest.split_once('c')?;
        let r: u32 = r.parse().ok()?;
        let c: u32 = c.parse().ok()?;
        if r == 0 || c == 0 || r > self.rows || c > self.cols {
            return None;
        }
        Some((r - 1, c - 1))
    }

    /// Short `RxC` name, e.g. `2x2`.
    pub fn name(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.rows == 0 || self.cols == 0 {
            out.push(String::from("layout dimension must be positive"));
        } else if self.rows * self.cols < 2 {
            out.push(format!("layout {} has fewer than 2 panels", self.name()));
        }
        if self.panel_order.len() != self.panel_count() {
            out.push(format!(
                "panel_order has {} labels, layout {} needs {}",
                self.panel_order.len(),
                self.name(),
                self.panel_count()
            ));
        }
        for (i, p) in self.panel_order.iter().enumerate() {
            if self.panel_order[..i].contains(p) {
                out.push(format!("duplicate position {p} in panel_order"));
            }
            if self.cell_of(p.as_str()).is_none() {
                out.push(format!("position {p} is not a cell of layout {}", self.name()));
            }
        }
        if self.rows == 2 && self.cols == 2 {
            let expected = QUAD_LABELS.iter().map(|l| Position::from(*l)).collect::<Vec<_>>();
            if self.panel_order != expected {
                out.push(String::from(
                    "2x2 panel_order must be [top_left, top_right, bottom_left, bottom_right]",
                ));
            }
        }
        out
    }
}

impl fmt::Display for GridLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl FromStr for GridLayout {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (r, c) = lower
            .split_once(['x', '×'])
            .ok_or_else(|| LayoutError::Unparsable(s.to_string()))?;
        let rows = r.trim().parse().map_err(|_| LayoutError::Unparsable(s.to_string()))?;
        let cols = c.trim().parse().map_err(|_| LayoutError::Unparsable(s.to_string()))?;
        Self::new(rows, cols)
    }
}

fn canonical_label(rows: u32, cols: u32, r: u32, c: u32) -> String {
    if rows == 2 && cols == 2 {
        QUAD_LABELS[(r * 2 + c) as usize].to_string()
    } else {
        format!("r{}c{}", r + 1, c + 1)
    }
}
