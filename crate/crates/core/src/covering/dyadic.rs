//! Selection for families of dyadic rectangles whose long side lies along
//! the x1-axis, with exact integer overlap arithmetic.

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::CheckReport;
use crate::dyadic::{DyadicInterval, DyadicRect};
use crate::error::{Error, Result};
use crate::grid::{is_power_of_two, Exact, Grid2D};
use crate::maximal::hl_maximal;

/// Rational overlap threshold `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Threshold {
    pub num: u64,
    pub den: u64,
}

impl Threshold {
    pub const ONE_THIRD: Threshold = Threshold { num: 1, den: 3 };

    /// `overlap < threshold * area`.
    pub fn below(&self, overlap: u64, area: u64) -> bool {
        (overlap as u128) * (self.den as u128) < (self.num as u128) * (area as u128)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Self::ONE_THIRD
    }
}

/// One greedy decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Index into the input family.
    pub index: usize,
    /// Cells of the candidate already covered by the selected rectangles.
    pub overlap: u64,
    pub area: u64,
    /// Number of selected rectangles at decision time.
    pub prefix: usize,
    pub selected: bool,
}

impl TraceEntry {
    pub fn ratio(&self) -> f64 {
        self.overlap as f64 / self.area as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicSelection {
    pub side: usize,
    pub threshold: Threshold,
    /// Family in input order.
    pub input: Vec<DyadicRect>,
    /// Input indices in processing order (`|P1|` nonincreasing, stable).
    pub order: Vec<usize>,
    /// Selected input indices in selection order.
    pub selected: Vec<usize>,
    pub trace: Vec<TraceEntry>,
}

impl DyadicSelection {
    pub fn selected_rects(&self) -> impl Iterator<Item = &DyadicRect> + '_ {
        self.selected.iter().map(|&i| &self.input[i])
    }
}

fn validate_family(family: &[DyadicRect], side: usize) -> Result<()> {
    if !is_power_of_two(side) {
        return Err(Error::NotPowerOfTwo(side));
    }
    if family.is_empty() {
        return Err(Error::Precondition("empty rectangle family".into()));
    }
    for (index, r) in family.iter().enumerate() {
        if r.p1() < r.p2() {
            return Err(Error::Orientation {
                index,
                p1: r.p1(),
                p2: r.p2(),
            });
        }
        if !r.fits(side) {
            let a = r.to_axis_rect();
            return Err(Error::OutOfBounds {
                x0: a.x0,
                x1: a.x1,
                y0: a.y0,
                y1: a.y1,
                side,
            });
        }
    }
    Ok(())
}

/// Greedy selection: a candidate is kept iff the part of it already covered
/// by kept rectangles is below `threshold` times its area.
pub fn select_dyadic(family: &[DyadicRect], side: usize, threshold: Threshold) -> Result<DyadicSelection> {
    validate_family(family, side)?;
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(family[i].p1()));
    let mut covered = vec![false; side * side];
    let mut selected = Vec::new();
    let mut trace = Vec::with_capacity(family.len());
    for &i in &order {
        let r = family[i].to_axis_rect();
        let overlap = r.cells().filter(|&(x, y)| covered[y * side + x]).count() as u64;
        let area = r.area();
        let keep = selected.is_empty() || threshold.below(overlap, area);
        trace.push(TraceEntry {
            index: i,
            overlap,
            area,
            prefix: selected.len(),
            selected: keep,
        });
        if keep {
            for (x, y) in r.cells() {
                covered[y * side + x] = true;
            }
            selected.push(i);
        }
    }
    Ok(DyadicSelection {
        side,
        threshold,
        input: family.to_vec(),
        order,
        selected,
        trace,
    })
}

/// Recomputes every traced overlap by testing each cell against the
/// selected prefix and checks the decision it certifies.
pub fn check_dyadic_certificates(sel: &DyadicSelection) -> CheckReport {
    const NAME: &str = "selection-certificates";
    let mut checked = 0;
    let mut seen = 0;
    for (step, e) in sel.trace.iter().enumerate() {
        let prefix: Vec<&DyadicRect> = sel.selected[..e.prefix].iter().map(|&i| &sel.input[i]).collect();
        let r = sel.input[e.index];
        let overlap = r
            .to_axis_rect()
            .cells()
            .filter(|&(x, y)| prefix.iter().any(|p| p.contains_cell(x, y)))
            .count() as u64;
        checked += 1;
        let ordered = step == 0 || sel.input[sel.trace[step - 1].index].p1() >= r.p1();
        let decision_ok = if e.selected {
            e.prefix == 0 || sel.threshold.below(overlap, r.area())
        } else {
            e.prefix > 0 && !sel.threshold.below(overlap, r.area())
        };
        let consistent =
            overlap == e.overlap && e.prefix == seen && (!e.selected || sel.selected.get(seen) == Some(&e.index));
        if !(ordered && decision_ok && consistent) {
            return CheckReport::fail(
                NAME,
                checked,
                json!({"step": step, "index": e.index, "overlap": overlap, "traced": e.overlap}),
            );
        }
        if e.selected {
            seen += 1;
        }
    }
    if seen != sel.selected.len() {
        return CheckReport::fail(NAME, checked, json!({"selected": sel.selected.len(), "traced": seen}));
    }
    CheckReport::pass(NAME, checked)
}

fn union_indicator(sel: &DyadicSelection) -> Vec<bool> {
    let n = sel.side;
    let mut ind = vec![false; n * n];
    for r in sel.selected_rects() {
        for (x, y) in r.to_axis_rect().cells() {
            ind[y * n + x] = true;
        }
    }
    ind
}

/// Dyadic-square maximal function of the selected union is at least the
/// threshold on every cell of every input rectangle.
pub fn check_covering_inclusion(sel: &DyadicSelection) -> CheckReport {
    const NAME: &str = "covering-inclusion";
    let n = sel.side;
    let ind = union_indicator(sel);
    let g = Grid2D::<Exact>::new(n, ind.iter().map(|&b| Exact::from_integer(b as i128)).collect())
        .expect("valid indicator");
    let m = hl_maximal(&g, true).into_values();
    let bound = Ratio::new(sel.threshold.num as i128, sel.threshold.den as i128);
    let mut checked = 0;
    for (index, r) in sel.input.iter().enumerate() {
        for (x, y) in r.to_axis_rect().cells() {
            checked += 1;
            let v = m.get(x, y);
            if *v < bound {
                return CheckReport::fail(
                    NAME,
                    checked,
                    json!({"rect": index, "x": x, "y": y, "value": format!("{v}")}),
                );
            }
        }
    }
    CheckReport::pass(NAME, checked)
}

/// `|X_{i,n}| <= 3^(1-n) |R_i|` for every selected `R_i` and every level
/// `n`, where `X_{i,n}` is the part of `R_i` covered at least `n` times by
/// `R_1, ..., R_i`.
pub fn multiplicity_bound_check(sel: &DyadicSelection) -> CheckReport {
    const NAME: &str = "multiplicity-decay";
    let n = sel.side;
    let mut count = vec![0u32; n * n];
    let mut checked = 0;
    for (pos, r) in sel.selected_rects().enumerate() {
        let a = r.to_axis_rect();
        for (x, y) in a.cells() {
            count[y * n + x] += 1;
        }
        let mut hist: Vec<u64> = Vec::new();
        for (x, y) in a.cells() {
            let c = count[y * n + x] as usize;
            if hist.len() < c + 1 {
                hist.resize(c + 1, 0);
            }
            hist[c] += 1;
        }
        // |X_{i,n}| = cells with multiplicity >= n.
        let mut at_least = 0u64;
        for level in (1..hist.len()).rev() {
            at_least += hist[level];
            checked += 1;
            let scale = 3u128.checked_pow(level as u32 - 1);
            let ok = match scale {
                Some(s) => s * at_least as u128 <= a.area() as u128,
                None => at_least == 0,
            };
            if !ok {
                return CheckReport::fail(
                    NAME,
                    checked,
                    json!({"selected_position": pos, "n": level, "measure": at_least, "area": a.area()}),
                );
            }
        }
    }
    CheckReport::pass(NAME, checked)
}

/// For selected `k > j` that meet, the intersection is `P1(R_k) x P2(R_j)`
/// and `3 |P2(R_j)| < |P2(R_k)|`.
pub fn check_structure(sel: &DyadicSelection) -> CheckReport {
    const NAME: &str = "nested-structure";
    let rects: Vec<&DyadicRect> = sel.selected_rects().collect();
    let mut checked = 0;
    for k in 0..rects.len() {
        for j in 0..k {
            let Some(inter) = rects[k].intersect(rects[j]) else {
                continue;
            };
            checked += 1;
            let shape = inter.ix == rects[k].ix && inter.iy == rects[j].iy;
            if !(shape && 3 * rects[j].p2() < rects[k].p2()) {
                return CheckReport::fail(NAME, checked, json!({"k": k, "j": j}));
            }
        }
    }
    CheckReport::pass(NAME, checked)
}

/// Weighted multiplicity `mu_U = sum_i U(R_i)/|R_i| 1_{R_i}` of a selection
/// together with the plain covering count.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityField {
    pub base_weight: Grid2D<f64>,
    pub mu: Grid2D<f64>,
    pub plain: Grid2D<f64>,
}

impl MultiplicityField {
    pub fn new(sel: &DyadicSelection, base_weight: &Grid2D<f64>) -> Result<Self> {
        let n = sel.side;
        if base_weight.side() != n {
            return Err(Error::CellCount {
                expected: n * n,
                found: base_weight.side().pow(2),
            });
        }
        let mut mu = vec![0.0; n * n];
        let mut plain = vec![0.0; n * n];
        for r in sel.selected_rects() {
            let a = r.to_axis_rect();
            let density = crate::grid::integrate(base_weight, &a)? / a.area() as f64;
            for (x, y) in a.cells() {
                mu[y * n + x] += density;
                plain[y * n + x] += 1.0;
            }
        }
        Ok(Self {
            base_weight: base_weight.clone(),
            mu: Grid2D::new(n, mu)?,
            plain: Grid2D::new(n, plain)?,
        })
    }
}

fn random_interval(rng: &mut impl Rng, side: usize, level: u32) -> DyadicInterval {
    DyadicInterval::new(level, rng.gen_range(0..side >> level))
}

/// `count` dyadic rectangles with `|P1| >= |P2|`, level pairs drawn uniformly.
pub fn random_dyadic_family(rng: &mut impl Rng, side: usize, count: usize) -> Vec<DyadicRect> {
    let max_level = side.trailing_zeros();
    (0..count)
        .map(|_| {
            let lx = rng.gen_range(0..=max_level);
            let ly = rng.gen_range(0..=lx);
            DyadicRect::new(random_interval(rng, side, lx), random_interval(rng, side, ly), true).expect("lx >= ly")
        })
        .collect()
}

/// Long thin rectangles stacked in nested columns: every level of x-length
/// shares the left edge, heights shrink by four per level and rows are
/// staggered so later rectangles graze earlier ones.
pub fn adversarial_nested_family(side: usize) -> Vec<DyadicRect> {
    let max_level = side.trailing_zeros();
    let mut out = Vec::new();
    for lx in (0..=max_level).rev() {
        let ly = lx.saturating_sub(2);
        let ix = DyadicInterval::new(lx, 0);
        for index in (0..side >> ly).step_by(2) {
            out.push(DyadicRect::new(ix, DyadicInterval::new(ly, index), true).expect("lx >= ly"));
        }
        let ly = lx / 2;
        for index in 0..side >> ly {
            out.push(DyadicRect::new(ix, DyadicInterval::new(ly, index), true).expect("lx >= ly"));
        }
    }
    out
}
