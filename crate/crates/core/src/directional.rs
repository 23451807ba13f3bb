//! Directional maximal operator over rectangles whose long side follows a
//! direction of a [`DirectionSet`].
//!
//! The supremum is discretized over explicit grids of directions, scales
//! `(length, width)` and rectangle centres, so the result is a lower bound
//! of the continuous operator. Centres sit on the lattice
//! `(a u + b v) * stride * width` in the rotated frame `(u, v)` of each
//! direction; a rectangle contributes to a
//! cell when it contains the cell centre in its interior. The limit of
//! vanishing rectangles around the centre contributes the cell value itself.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::DirectionSet;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryIntegrator, Point};
use crate::grid::Grid2D;
use crate::maximal::{MaximalField, OperatorTag};

const CONTAIN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pairs: Vec<(f64, f64)>,
}

impl ScaleGrid {
    /// `(length, width)` pairs with `0 < width <= length`.
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidGeometry("empty scale grid".into()));
        }
        for &(l_long, l_short) in &pairs {
            if !(l_long.is_finite() && l_short > 0.0 && l_short <= l_long) {
                return Err(Error::InvalidGeometry(format!(
                    "invalid scale pair (length {l_long}, width {l_short})"
                )));
            }
        }
        Ok(Self { pairs })
    }

    /// Lengths `2, 4, ..., side` and aspect ratios `2, 4, ..., side`,
    /// keeping widths of at least one cell.
    pub fn default_for(side: usize) -> Self {
        let mut pairs = Vec::new();
        let mut length = 2;
        while length <= side {
            let mut aspect = 2;
            while aspect <= side && length / aspect >= 1 {
                pairs.push((length as f64, (length / aspect) as f64));
                aspect *= 2;
            }
            length *= 2;
        }
        if pairs.is_empty() {
            pairs.push((1.0, 0.5));
        }
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalConfig {
    pub scales: ScaleGrid,
    /// Centre spacing on both axes, as a fraction of the width.
    pub stride: f64,
}

impl DirectionalConfig {
    pub fn new(scales: ScaleGrid) -> Self {
        Self { scales, stride: 0.5 }
    }

    pub fn default_for(side: usize) -> Self {
        Self::new(ScaleGrid::default_for(side))
    }

    /// Same scales with the stride divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            scales: self.scales.clone(),
            stride: self.stride / factor,
        }
    }

    fn validate(&self) -> Result<()> {
        ScaleGrid::new(self.scales.pairs.clone())?;
        if !(self.stride > 0.0 && self.stride <= 1.0) {
            return Err(Error::InvalidGeometry(format!(
                "stride fraction {} outside (0, 1]",
                self.stride
            )));
        }
        Ok(())
    }
}

/// One scale on one direction: rectangle half-sizes and lattice strides.
#[derive(Debug, Clone, Copy)]
struct Scale {
    half_long: f64,
    half_short: f64,
    stride_u: f64,
    stride_v: f64,
}

fn scales_of(cfg: &DirectionalConfig) -> Vec<Scale> {
    cfg.scales
        .pairs
        .iter()
        .map(|&(l_long, l_short)| Scale {
            half_long: l_long / 2.0,
            half_short: l_short / 2.0,
            stride_u: l_short * cfg.stride,
            stride_v: l_short * cfg.stride,
        })
        .collect()
}

fn is_multiple(x: f64, h: f64) -> bool {
    let r = x / h;
    (r - r.round()).abs() < 1e-9
}

/// Coarsest dyadic step `2^-q` (q <= 6) on which every corner of every
/// lattice rectangle falls, if any.
fn lattice_step(scales: &[Scale]) -> Option<f64> {
    (0..=6).map(|q| 0.5f64.powi(q)).find(|&h| {
        scales.iter().all(|s| {
            [s.half_long, s.half_short, s.stride_u, s.stride_v]
                .iter()
                .all(|&x| is_multiple(x, h))
        })
    })
}

/// Prefix tables of the boundary integral along lattice lines of one
/// rotated frame. `along_u[m][k]` integrates `G dy` along the line
/// `v = m h` from `k_lo h` to `k h`; `along_v[k][m]` likewise along `u = k h`.
struct LineTables {
    h: f64,
    k_lo: i64,
    m_lo: i64,
    nk: usize,
    nm: usize,
    along_u: Vec<f64>,
    along_v: Vec<f64>,
}

impl LineTables {
    fn build(integ: &BoundaryIntegrator, u: Point, v: Point, h: f64, u_range: (f64, f64), v_range: (f64, f64)) -> Self {
        let k_lo = (u_range.0 / h).floor() as i64 - 1;
        let k_hi = (u_range.1 / h).ceil() as i64 + 1;
        let m_lo = (v_range.0 / h).floor() as i64 - 1;
        let m_hi = (v_range.1 / h).ceil() as i64 + 1;
        let nk = (k_hi - k_lo + 1) as usize;
        let nm = (m_hi - m_lo + 1) as usize;
        let at = |k: i64, m: i64| {
            let (a, b) = (k as f64 * h, m as f64 * h);
            Point::new(a * u.x + b * v.x, a * u.y + b * v.y)
        };
        let (mut line, mut breaks) = (Vec::new(), Vec::new());
        let mut along_u = Vec::with_capacity(nm * nk);
        for mi in 0..nm {
            integ.line_prefix(at(k_lo, m_lo + mi as i64), u, h, nk, &mut line, &mut breaks);
            along_u.extend_from_slice(&line);
        }
        let mut along_v = Vec::with_capacity(nk * nm);
        for ki in 0..nk {
            integ.line_prefix(at(k_lo + ki as i64, m_lo), v, h, nm, &mut line, &mut breaks);
            along_v.extend_from_slice(&line);
        }
        Self {
            h,
            k_lo,
            m_lo,
            nk,
            nm,
            along_u,
            along_v,
        }
    }

    #[inline]
    fn idx_k(&self, u: f64) -> usize {
        ((u / self.h).round() as i64 - self.k_lo) as usize
    }

    #[inline]
    fn idx_m(&self, v: f64) -> usize {
        ((v / self.h).round() as i64 - self.m_lo) as usize
    }

    /// Integral over the rectangle `[u0,u1] x [v0,v1]` of the rotated frame.
    #[inline]
    fn rect_integral(&self, u0: f64, u1: f64, v0: f64, v1: f64) -> f64 {
        let (kl, kr) = (self.idx_k(u0), self.idx_k(u1));
        let (mb, mt) = (self.idx_m(v0), self.idx_m(v1));
        debug_assert!(kr < self.nk && mt < self.nm);
        let u_line = |m: usize, k: usize| self.along_u[m * self.nk + k];
        let v_line = |k: usize, m: usize| self.along_v[k * self.nm + m];
        (u_line(mb, kr) - u_line(mb, kl)) + (v_line(kr, mt) - v_line(kr, mb))
            - (u_line(mt, kr) - u_line(mt, kl))
            - (v_line(kl, mt) - v_line(kl, mb))
    }
}

/// Range maximum over windows of at most `width` consecutive entries:
/// running maxima forward and backward inside aligned blocks of `width`.
struct BlockMax<'a> {
    values: &'a [f64],
    width: usize,
    fwd: Vec<f64>,
    bwd: Vec<f64>,
}

impl<'a> BlockMax<'a> {
    fn new(values: &'a [f64], width: usize) -> Self {
        let mut fwd = values.to_vec();
        let mut bwd = values.to_vec();
        for (i, v) in values.iter().enumerate().skip(1) {
            if i % width != 0 {
                fwd[i] = fwd[i - 1].max(*v);
            }
        }
        for i in (0..values.len().saturating_sub(1)).rev() {
            if (i + 1) % width != 0 {
                bwd[i] = bwd[i + 1].max(bwd[i]);
            }
        }
        Self {
            values,
            width,
            fwd,
            bwd,
        }
    }

    /// Maximum over `lo..=hi`, which must span at most `width` entries.
    #[inline]
    fn query(&self, lo: usize, hi: usize) -> f64 {
        if lo / self.width != hi / self.width {
            self.bwd[lo].max(self.fwd[hi])
        } else if lo.is_multiple_of(self.width) {
            self.fwd[hi]
        } else if (hi + 1).is_multiple_of(self.width) || hi + 1 == self.fwd.len() {
            self.bwd[lo]
        } else {
            self.values[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

/// Lattice indices `i` with `|p - i * stride| < half - eps`.
#[inline]
fn lattice_range(p: f64, half: f64, stride: f64) -> (i64, i64) {
    (
        ((p - half + CONTAIN_EPS) / stride).ceil() as i64,
        ((p + half - CONTAIN_EPS) / stride).floor() as i64,
    )
}

/// Best lattice-rectangle average through each cell centre for one direction.
fn direction_field(
    g: &Grid2D<f64>,
    integ: &BoundaryIntegrator,
    theta: f64,
    scales: &[Scale],
    step: Option<f64>,
) -> Vec<f64> {
    let n = g.side();
    let (s, c) = theta.sin_cos();
    let (u, v) = (Point::new(c, s), Point::new(-s, c));
    let centers: Vec<(f64, f64)> = (0..n * n)
        .map(|i| {
            let p = Point::new((i % n) as f64 + 0.5, (i / n) as f64 + 0.5);
            (p.x * u.x + p.y * u.y, p.x * v.x + p.y * v.y)
        })
        .collect();
    let (mut pu_min, mut pu_max, mut pv_min, mut pv_max) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(pu, pv) in &centers {
        pu_min = pu_min.min(pu);
        pu_max = pu_max.max(pu);
        pv_min = pv_min.min(pv);
        pv_max = pv_max.max(pv);
    }
    let tables = step.map(|h| {
        let reach_u = scales.iter().map(|s| 2.0 * s.half_long).fold(0.0, f64::max);
        let reach_v = scales.iter().map(|s| 2.0 * s.half_short).fold(0.0, f64::max);
        LineTables::build(
            integ,
            u,
            v,
            h,
            (pu_min - reach_u, pu_max + reach_u),
            (pv_min - reach_v, pv_max + reach_v),
        )
    });
    let mut scratch = Vec::with_capacity(16);
    let mut out = vec![0.0; n * n];
    for sc in scales {
        let (a_lo, _) = lattice_range(pu_min, sc.half_long, sc.stride_u);
        let (_, a_hi) = lattice_range(pu_max, sc.half_long, sc.stride_u);
        let (b_lo, _) = lattice_range(pv_min, sc.half_short, sc.stride_v);
        let (_, b_hi) = lattice_range(pv_max, sc.half_short, sc.stride_v);
        if a_hi < a_lo || b_hi < b_lo {
            continue;
        }
        let na = (a_hi - a_lo + 1) as usize;
        let nb = (b_hi - b_lo + 1) as usize;
        let area = 4.0 * sc.half_long * sc.half_short;
        let mut avg = vec![0.0; na * nb];
        for bi in 0..nb {
            let cv = (b_lo + bi as i64) as f64 * sc.stride_v;
            for ai in 0..na {
                let cu = (a_lo + ai as i64) as f64 * sc.stride_u;
                let integral = match &tables {
                    Some(t) => t.rect_integral(
                        cu - sc.half_long,
                        cu + sc.half_long,
                        cv - sc.half_short,
                        cv + sc.half_short,
                    ),
                    None => {
                        let corner = |su: f64, sv: f64| {
                            let (x, y) = (cu + su * sc.half_long, cv + sv * sc.half_short);
                            Point::new(x * u.x + y * v.x, x * u.y + y * v.y)
                        };
                        let poly = [
                            corner(-1.0, -1.0),
                            corner(1.0, -1.0),
                            corner(1.0, 1.0),
                            corner(-1.0, 1.0),
                        ];
                        (0..4)
                            .map(|i| integ.segment_integral(poly[i], poly[(i + 1) % 4], &mut scratch))
                            .sum()
                    }
                };
                avg[bi * na + ai] = (integral / area).max(0.0);
            }
        }
        let width = ((2.0 * sc.half_long) / sc.stride_u).floor() as usize + 1;
        let rows: Vec<BlockMax> = avg.chunks(na).map(|row| BlockMax::new(row, width)).collect();
        for (ci, &(pu, pv)) in centers.iter().enumerate() {
            let (a0, a1) = lattice_range(pu, sc.half_long, sc.stride_u);
            let (b0, b1) = lattice_range(pv, sc.half_short, sc.stride_v);
            if a1 < a0 {
                continue;
            }
            let (a0, a1) = ((a0 - a_lo) as usize, (a1 - a_lo) as usize);
            let mut best = out[ci];
            for b in b0..=b1 {
                let val = rows[(b - b_lo) as usize].query(a0, a1);
                if val > best {
                    best = val;
                }
            }
            out[ci] = best;
        }
    }
    out
}

/// Directional maximal function: per cell, the best average over the
/// discretized family of rectangles aligned with `dirs`.
pub fn directional_maximal(g: &Grid2D<f64>, dirs: &DirectionSet, cfg: &DirectionalConfig) -> Result<MaximalField<f64>> {
    cfg.validate()?;
    let scales = scales_of(cfg);
    let step = lattice_step(&scales);
    let integ = BoundaryIntegrator::new(g);
    // Directions `j` and `j + N/2` carry the same rectangles and lattice.
    let distinct = if dirs.len().is_multiple_of(2) {
        dirs.len() / 2
    } else {
        dirs.len()
    };
    let per_direction: Vec<Vec<f64>> = (0..distinct)
        .into_par_iter()
        .map(|j| direction_field(g, &integ, dirs.angle(j), &scales, step))
        .collect();
    let mut out = g.cells().to_vec();
    for field in per_direction {
        for (o, v) in out.iter_mut().zip(field) {
            if v > *o {
                *o = v;
            }
        }
    }
    Ok(MaximalField {
        operator: OperatorTag::Directional {
            n_directions: dirs.len(),
        },
        values: Grid2D::new(g.side(), out)?,
        directional: Some(cfg.clone()),
    })
}
