//! Weighted measures, weighted norms, the rectangle `A_p*` characteristic
//! and the `L log L` functional.

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicInterval;
use crate::error::{Error, Result};
use crate::grid::{AxisRect, Grid2D, SummedAreaTable};

/// A weight grid viewed as a measure on cell sets.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMeasure {
    weight: Grid2D<f64>,
}

impl WeightedMeasure {
    pub fn new(weight: Grid2D<f64>) -> Self {
        Self { weight }
    }

    pub fn weight(&self) -> &Grid2D<f64> {
        &self.weight
    }

    /// `w(E)` for `E = {(x, y) : pred(x, y)}`.
    pub fn measure(&self, pred: impl Fn(usize, usize) -> bool) -> f64 {
        weighted_measure(&self.weight, pred)
    }
}

pub fn weighted_measure(w: &Grid2D<f64>, pred: impl Fn(usize, usize) -> bool) -> f64 {
    let n = w.side();
    let mut acc = 0.0;
    for y in 0..n {
        for x in 0..n {
            if pred(x, y) {
                acc += w.get(x, y);
            }
        }
    }
    acc
}

/// `w({M > t})` with a strict superlevel set.
pub fn superlevel_measure(m: &Grid2D<f64>, w: &Grid2D<f64>, t: f64) -> f64 {
    m.cells()
        .iter()
        .zip(w.cells())
        .filter(|(v, _)| **v > t)
        .map(|(_, wv)| *wv)
        .sum()
}

/// `(sum f^p w)^(1/p)`.
pub fn lp_norm(f: &Grid2D<f64>, w: &Grid2D<f64>, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::UnsupportedExponent(p));
    }
    let sum: f64 = f
        .cells()
        .iter()
        .zip(w.cells())
        .map(|(fv, wv)| if *wv == 0.0 { 0.0 } else { fv.powf(p) * wv })
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// `sum (f/t) (1 + log+(f/t)) W`, natural logarithm.
pub fn llogl_functional(f: &Grid2D<f64>, big_w: &Grid2D<f64>, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidThreshold(t));
    }
    Ok(f.cells()
        .iter()
        .zip(big_w.cells())
        .map(|(fv, wv)| {
            let s = fv / t;
            s * (1.0 + s.ln().max(0.0)) * wv
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApStarEstimate {
    pub p: f64,
    /// Largest scanned characteristic; `+inf` when some cell of the weight
    /// vanishes.
    #[serde(with = "crate::io::extended_f64")]
    pub value: f64,
    pub basis_scanned: u64,
    pub dyadic: bool,
}

fn rect_list(n: usize, dyadic: bool) -> Vec<AxisRect> {
    if dyadic {
        let ivs = DyadicInterval::all(n);
        let mut out = Vec::with_capacity(ivs.len() * ivs.len());
        for iy in &ivs {
            for ix in &ivs {
                out.push(AxisRect {
                    x0: ix.start(),
                    x1: ix.end(),
                    y0: iy.start(),
                    y1: iy.end(),
                });
            }
        }
        out
    } else {
        let mut out = Vec::with_capacity((n * (n + 1) / 2).pow(2));
        for y0 in 0..n {
            for y1 in y0 + 1..=n {
                for x0 in 0..n {
                    for x1 in x0 + 1..=n {
                        out.push(AxisRect { x0, x1, y0, y1 });
                    }
                }
            }
        }
        out
    }
}

/// `[w]_{A_p*}` over all axis rectangles of the grid, or over products of
/// dyadic intervals when `dyadic` is set. For `p = 1` the dual factor is
/// `1 / min_R w`.
pub fn apstar_constant(w: &Grid2D<f64>, p: f64, dyadic: bool) -> Result<ApStarEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::UnsupportedExponent(p));
    }
    let n = w.side();
    let rects = rect_list(n, dyadic);
    let scanned = rects.len() as u64;
    let estimate = |value| ApStarEstimate {
        p,
        value,
        basis_scanned: scanned,
        dyadic,
    };
    if w.cells().contains(&0.0) {
        return Ok(estimate(f64::INFINITY));
    }
    let sat = SummedAreaTable::new(w);
    let value = if p == 1.0 {
        let mut best = 0.0f64;
        if dyadic {
            for r in &rects {
                let min = r.cells().map(|(x, y)| *w.get(x, y)).fold(f64::INFINITY, f64::min);
                best = best.max(sat.average(r) / min);
            }
        } else {
            // Running column minima over the row band, then over x-intervals.
            let mut colmin = vec![0.0; n];
            for y0 in 0..n {
                colmin.copy_from_slice(&w.cells()[y0 * n..(y0 + 1) * n]);
                for y1 in y0 + 1..=n {
                    if y1 > y0 + 1 {
                        for (x, c) in colmin.iter_mut().enumerate() {
                            *c = c.min(*w.get(x, y1 - 1));
                        }
                    }
                    for x0 in 0..n {
                        let mut min = f64::INFINITY;
                        for x1 in x0 + 1..=n {
                            min = min.min(colmin[x1 - 1]);
                            let avg = sat.average(&AxisRect { x0, x1, y0, y1 });
                            best = best.max(avg / min);
                        }
                    }
                }
            }
        }
        best
    } else {
        let q = -1.0 / (p - 1.0);
        let dual = w.map(|v| v.powf(q))?;
        let dual_sat = SummedAreaTable::new(&dual);
        rects
            .iter()
            .map(|r| sat.average(r) * dual_sat.average(r).powf(p - 1.0))
            .fold(0.0, f64::max)
    };
    Ok(estimate(value))
}
