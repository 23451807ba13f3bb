//! Uniformly spread direction sets and their eight angular sectors.

use std::f64::consts::{FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

pub const SECTORS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    n_directions: usize,
}

impl DirectionSet {
    /// `N` directions at angles `2 pi j / N`; `N` must exceed 10.
    pub fn uniform(n_directions: usize) -> Result<Self> {
        if n_directions <= 10 {
            return Err(Error::Precondition(format!(
                "the number of directions must exceed 10, got {n_directions}"
            )));
        }
        Ok(Self { n_directions })
    }

    pub fn len(&self) -> usize {
        self.n_directions
    }

    pub fn is_empty(&self) -> bool {
        self.n_directions == 0
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_directions as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_directions).map(|j| self.angle(j)).collect()
    }

    pub fn vectors(&self) -> Vec<Point> {
        self.angles()
            .into_iter()
            .map(|a| Point::new(a.cos(), a.sin()))
            .collect()
    }

    /// Sector of direction `j`: consecutive index blocks of near-equal size.
    pub fn sector_of(&self, j: usize) -> usize {
        j * SECTORS / self.n_directions
    }

    pub fn sectors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); SECTORS];
        for j in 0..self.n_directions {
            out[self.sector_of(j)].push(j);
        }
        out
    }

    /// Largest angle between two directions of the sector.
    pub fn sector_diameter(&self, sector: usize) -> f64 {
        let members = &self.sectors()[sector];
        match (members.first(), members.last()) {
            (Some(&a), Some(&b)) => self.angle(b) - self.angle(a),
            _ => 0.0,
        }
    }
}

/// Length of the shortest arc of the circle containing every angle.
pub fn angular_span(angles: &[f64]) -> f64 {
    if angles.len() < 2 {
        return 0.0;
    }
    let mut a: Vec<f64> = angles.iter().map(|t| t.rem_euclid(TAU)).collect();
    a.sort_by(|p, q| p.total_cmp(q));
    let mut max_gap = a[0] + TAU - a[a.len() - 1];
    for w in a.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    TAU - max_gap
}

pub fn within_sector(angles: &[f64]) -> bool {
    angular_span(angles) <= FRAC_PI_4 + 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needs_more_than_ten_directions() {
        assert!(DirectionSet::uniform(10).is_err());
        assert!(DirectionSet::uniform(8).is_err());
        assert!(DirectionSet::uniform(11).is_ok());
    }

    #[test]
    fn unit_vectors_uniformly_spaced() {
        for n in [11, 16, 17, 64, 100] {
            let d = DirectionSet::uniform(n).unwrap();
            let v = d.vectors();
            assert_eq!(v.len(), n);
            for (j, p) in v.iter().enumerate() {
                assert!((p.x.hypot(p.y) - 1.0).abs() < 1e-12);
                let q = v[(j + 1) % n];
                let gap = (p.x * q.x + p.y * q.y).clamp(-1.0, 1.0).acos();
                assert!((gap - TAU / n as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sectors_partition_and_stay_within_quarter_pi() {
        for n in 11..=130 {
            let d = DirectionSet::uniform(n).unwrap();
            let sectors = d.sectors();
            assert_eq!(sectors.len(), SECTORS);
            let mut all: Vec<usize> = sectors.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
            for s in 0..SECTORS {
                assert!(!sectors[s].is_empty());
                assert!(d.sector_diameter(s) <= FRAC_PI_4 + 1e-12, "n={n} s={s}");
                let angles: Vec<f64> = sectors[s].iter().map(|&j| d.angle(j)).collect();
                assert!(within_sector(&angles));
            }
        }
    }

    #[test]
    fn span_wraps_around_zero() {
        assert!((angular_span(&[0.1, TAU - 0.1]) - 0.2).abs() < 1e-12);
        assert!(!within_sector(&[0.0, 1.0]));
    }
}
