//! Dyadic intervals and dyadic rectangles on a grid of side `2^m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{is_power_of_two, AxisRect};

/// `[index * 2^level, (index + 1) * 2^level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub level: u32,
    pub index: usize,
}

impl DyadicInterval {
    pub fn new(level: u32, index: usize) -> Self {
        Self { level, index }
    }

    pub fn len(&self) -> usize {
        1 << self.level
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> usize {
        self.index << self.level
    }

    pub fn end(&self) -> usize {
        (self.index + 1) << self.level
    }

    pub fn fits(&self, side: usize) -> bool {
        self.end() <= side
    }

    pub fn contains(&self, other: &DyadicInterval) -> bool {
        self.level >= other.level && other.index >> (self.level - other.level) == self.index
    }

    pub fn contains_point(&self, cell: usize) -> bool {
        cell >> self.level == self.index
    }

    /// Nested or disjoint: the intersection is the smaller interval or nothing.
    pub fn intersect(&self, other: &DyadicInterval) -> Option<DyadicInterval> {
        if self.contains(other) {
            Some(*other)
        } else if other.contains(self) {
            Some(*self)
        } else {
            None
        }
    }

    /// All dyadic intervals inside `[0, side)`.
    pub fn all(side: usize) -> Vec<DyadicInterval> {
        let levels = side.trailing_zeros();
        (0..=levels)
            .flat_map(|level| (0..side >> level).map(move |index| DyadicInterval { level, index }))
            .collect()
    }
}

/// Product of two dyadic intervals. When `long_side_x1` is set the
/// rectangle is guaranteed to satisfy `|P1| >= |P2|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicRect {
    pub ix: DyadicInterval,
    pub iy: DyadicInterval,
    #[serde(default)]
    pub long_side_x1: bool,
}

impl DyadicRect {
    pub fn new(ix: DyadicInterval, iy: DyadicInterval, long_side_x1: bool) -> Result<Self> {
        if long_side_x1 && ix.len() < iy.len() {
            return Err(Error::Orientation {
                index: 0,
                p1: ix.len(),
                p2: iy.len(),
            });
        }
        Ok(Self { ix, iy, long_side_x1 })
    }

    /// Length of the projection on the x1-axis.
    pub fn p1(&self) -> usize {
        self.ix.len()
    }

    /// Length of the projection on the x2-axis.
    pub fn p2(&self) -> usize {
        self.iy.len()
    }

    pub fn area(&self) -> u64 {
        (self.p1() * self.p2()) as u64
    }

    pub fn fits(&self, side: usize) -> bool {
        self.ix.fits(side) && self.iy.fits(side)
    }

    pub fn contains_cell(&self, x: usize, y: usize) -> bool {
        self.ix.contains_point(x) && self.iy.contains_point(y)
    }

    pub fn intersect(&self, other: &DyadicRect) -> Option<DyadicRect> {
        Some(DyadicRect {
            ix: self.ix.intersect(&other.ix)?,
            iy: self.iy.intersect(&other.iy)?,
            long_side_x1: false,
        })
    }

    pub fn to_axis_rect(&self) -> AxisRect {
        AxisRect {
            x0: self.ix.start(),
            x1: self.ix.end(),
            y0: self.iy.start(),
            y1: self.iy.end(),
        }
    }
}

/// Every dyadic rectangle in a grid of the given side, without duplicates.
pub fn enumerate_dyadic_rects(side: usize, long_side_x1: bool) -> Result<Vec<DyadicRect>> {
    if !is_power_of_two(side) {
        return Err(Error::NotPowerOfTwo(side));
    }
    let intervals = DyadicInterval::all(side);
    let mut out = Vec::new();
    for &ix in &intervals {
        for &iy in &intervals {
            if long_side_x1 && ix.len() < iy.len() {
                continue;
            }
            out.push(DyadicRect { ix, iy, long_side_x1 });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn small_enumerations() {
        assert_eq!(enumerate_dyadic_rects(1, false).unwrap().len(), 1);
        let all = enumerate_dyadic_rects(2, false).unwrap();
        assert_eq!(all.len(), 9);
        let long = enumerate_dyadic_rects(2, true).unwrap();
        // the two 1x2 columns are the only ones with |P1| < |P2|
        assert_eq!(long.len(), 7);
        assert!(long.iter().all(|r| r.p1() >= r.p2()));
        let excluded: Vec<_> = all
            .iter()
            .filter(|r| !long.iter().any(|l| l.ix == r.ix && l.iy == r.iy))
            .collect();
        assert_eq!(excluded.len(), 2);
        assert!(excluded.iter().all(|r| r.p1() < r.p2()));
        assert!(enumerate_dyadic_rects(12, false).is_err());
    }

    #[test]
    fn enumeration_is_complete_and_duplicate_free() {
        for m in 0..=5 {
            let side = 1usize << m;
            let rects = enumerate_dyadic_rects(side, false).unwrap();
            let per_axis = 2 * side - 1;
            assert_eq!(rects.len(), per_axis * per_axis);
            let set: HashSet<_> = rects.iter().map(|r| (r.ix, r.iy)).collect();
            assert_eq!(set.len(), rects.len());
            assert!(rects.iter().all(|r| r.fits(side)));
        }
    }

    #[test]
    fn trichotomy_exhaustive_up_to_64() {
        let all = DyadicInterval::all(64);
        for a in &all {
            for b in &all {
                let inter = (a.start().max(b.start()), a.end().min(b.end()));
                match a.intersect(b) {
                    None => assert!(inter.0 >= inter.1, "{a:?} {b:?}"),
                    Some(c) => {
                        assert!(c == *a || c == *b);
                        assert_eq!((c.start(), c.end()), inter);
                    }
                }
            }
        }
    }

    #[test]
    fn orientation_flag_is_enforced() {
        let ix = DyadicInterval::new(0, 0);
        let iy = DyadicInterval::new(1, 0);
        assert!(DyadicRect::new(ix, iy, true).is_err());
        assert!(DyadicRect::new(ix, iy, false).is_ok());
    }
}
