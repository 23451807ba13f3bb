//! Rectangle family files for `maxlab covering`.
//!
//! Dyadic: `{"side": 16, "rects": [{"x0": 0, "x1": 8, "y0": 0, "y1": 2}, ...]}`
//! with half-open cell bounds that must be dyadic intervals.
//!
//! Directional: `{"side": 32, "N": 16, "rects": [{"cx", "cy", "length",
//! "width", "theta"}, ...]}`.

use anyhow::{bail, Context, Result};
use maxlab_core::dyadic::{DyadicInterval, DyadicRect};
use maxlab_core::geometry::RotatedRect;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellBounds {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DyadicFamilyFile {
    pub side: usize,
    pub rects: Vec<CellBounds>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionalFamilyFile {
    pub side: usize,
    #[serde(rename = "N")]
    pub n_directions: usize,
    pub rects: Vec<RotatedRect>,
}

fn interval(a: usize, b: usize) -> Result<DyadicInterval> {
    let len = b
        .checked_sub(a)
        .filter(|l| *l > 0)
        .with_context(|| format!("empty interval [{a}, {b})"))?;
    if !len.is_power_of_two() || !a.is_multiple_of(len) {
        bail!("[{a}, {b}) is not a dyadic interval");
    }
    Ok(DyadicInterval::new(len.trailing_zeros(), a / len))
}

impl CellBounds {
    pub fn of(r: &DyadicRect) -> Self {
        let a = r.to_axis_rect();
        Self {
            x0: a.x0,
            x1: a.x1,
            y0: a.y0,
            y1: a.y1,
        }
    }

    /// Marked long-side-x1; orientation is checked by the selection.
    pub fn to_dyadic(self) -> Result<DyadicRect> {
        Ok(DyadicRect {
            ix: interval(self.x0, self.x1)?,
            iy: interval(self.y0, self.y1)?,
            long_side_x1: true,
        })
    }
}

pub fn read_dyadic(text: &str) -> Result<(usize, Vec<DyadicRect>)> {
    let file: DyadicFamilyFile = serde_json::from_str(text).context("malformed dyadic family")?;
    let rects = file
        .rects
        .iter()
        .enumerate()
        .map(|(i, b)| b.to_dyadic().with_context(|| format!("rectangle {i}")))
        .collect::<Result<_>>()?;
    Ok((file.side, rects))
}

pub fn read_directional(text: &str) -> Result<DirectionalFamilyFile> {
    serde_json::from_str(text).context("malformed directional family")
}
