//! Selection for families of rotated rectangles whose long sides point in
//! one angular sector, the counting function `Y` of the expanded selection,
//! and the two-rectangle geometric lemma behind the covering estimate.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::CheckReport;
use crate::directions::{angular_span, within_sector, DirectionSet};
use crate::error::{Error, Result};
use crate::geometry::{rect_intersection_area, Point, RotatedRect};
use crate::grid::Grid2D;
use crate::maximal::hl_maximal;

/// Absolute tolerance on rotated areas.
pub const AREA_TOL: f64 = 1e-9;
pub const EXPANSION: f64 = 5.0;
pub const LEMMA_CONSTANT: f64 = 32.0;
/// Sample points per axis for the arbitrary point of the lemma.
pub const LEMMA_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSelection {
    pub threshold: f64,
    pub input: Vec<RotatedRect>,
    /// Input indices in processing order (length nonincreasing, stable).
    pub order: Vec<usize>,
    /// Selected input indices in selection order.
    pub selected: Vec<usize>,
    /// Per processed candidate: sum of pairwise overlaps with the selected
    /// prefix divided by its area.
    pub overlap_trace: Vec<f64>,
}

impl DirectionalSelection {
    pub fn selected_rects(&self) -> impl Iterator<Item = &RotatedRect> + '_ {
        self.selected.iter().map(|&i| &self.input[i])
    }
}

/// Greedy selection keeping a candidate iff the SUM of its pairwise
/// intersection areas with the kept rectangles is at most `threshold` times
/// its area. Ties within the area tolerance count as rejections.
pub fn select_directional(family: &[RotatedRect], threshold: f64) -> Result<DirectionalSelection> {
    if family.is_empty() {
        return Err(Error::Precondition("empty rectangle family".into()));
    }
    let angles: Vec<f64> = family.iter().map(|r| r.theta()).collect();
    if !within_sector(&angles) {
        return Err(Error::SectorSpan(angular_span(&angles)));
    }
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by(|&a, &b| family[b].length().total_cmp(&family[a].length()));
    let mut selected: Vec<usize> = Vec::new();
    let mut overlap_trace = Vec::with_capacity(family.len());
    for &i in &order {
        let r = &family[i];
        let sum: f64 = selected.iter().map(|&k| rect_intersection_area(&family[k], r)).sum();
        overlap_trace.push(sum / r.area());
        if sum + AREA_TOL <= threshold * r.area() {
            selected.push(i);
        }
    }
    Ok(DirectionalSelection {
        threshold,
        input: family.to_vec(),
        order,
        selected,
        overlap_trace,
    })
}

/// Re-derives every decision from recomputed pairwise areas.
pub fn check_directional_certificates(sel: &DirectionalSelection) -> CheckReport {
    const NAME: &str = "sum-overlap-certificates";
    let mut prefix: Vec<usize> = Vec::new();
    let mut next = 0;
    for (step, &i) in sel.order.iter().enumerate() {
        let r = &sel.input[i];
        let sum: f64 = prefix.iter().map(|&k| rect_intersection_area(&sel.input[k], r)).sum();
        let is_selected = sel.selected.get(next) == Some(&i);
        let ok = if is_selected {
            sum <= sel.threshold * r.area() * (1.0 + 1e-9)
        } else {
            sum + AREA_TOL > sel.threshold * r.area()
        };
        let ordered = step == 0 || sel.input[sel.order[step - 1]].length() >= r.length();
        if !(ok && ordered) {
            return CheckReport::fail(NAME, step as u64 + 1, json!({"step": step, "index": i, "sum": sum}));
        }
        if is_selected {
            prefix.push(i);
            next += 1;
        }
    }
    if next != sel.selected.len() {
        return CheckReport::fail(
            NAME,
            sel.order.len() as u64,
            json!({"unmatched_selected": sel.selected.len() - next}),
        );
    }
    CheckReport::pass(NAME, sel.order.len() as u64)
}

fn cell_center(i: usize, n: usize) -> Point {
    Point::new((i % n) as f64 + 0.5, (i / n) as f64 + 0.5)
}

/// Number of expanded selected rectangles containing each cell centre.
pub fn build_y(sel: &DirectionalSelection, side: usize) -> Result<Grid2D<f64>> {
    let expanded: Vec<RotatedRect> = sel
        .selected_rects()
        .map(|r| r.expand(EXPANSION))
        .collect::<Result<_>>()?;
    let cells = (0..side * side)
        .map(|i| {
            let p = cell_center(i, side);
            expanded.iter().filter(|r| r.contains_strict(p, 0.0)).count() as f64
        })
        .collect();
    Grid2D::new(side, cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalCoveringReport {
    pub n_directions: usize,
    /// Cells whose centre lies in some input rectangle.
    pub cells_checked: u64,
    /// Minimum of `M_Q Y` over those cells (`inf` when there are none).
    #[serde(with = "crate::io::extended_f64")]
    pub min_mq_y: f64,
    /// `min_mq_y * ln N`, the empirical constant.
    #[serde(with = "crate::io::extended_f64")]
    pub empirical_constant: f64,
}

/// Minimum over the input union of the square maximal function of `Y`.
pub fn check_directional_covering(
    sel: &DirectionalSelection,
    side: usize,
    n_directions: usize,
) -> Result<DirectionalCoveringReport> {
    let y = build_y(sel, side)?;
    let m = hl_maximal(&y, false).into_values();
    let mut min = f64::INFINITY;
    let mut checked = 0;
    for i in 0..side * side {
        let p = cell_center(i, side);
        if sel.input.iter().any(|r| r.contains_strict(p, 0.0)) {
            checked += 1;
            min = min.min(m.cells()[i]);
        }
    }
    Ok(DirectionalCoveringReport {
        n_directions,
        cells_checked: checked,
        min_mq_y: min,
        empirical_constant: min * (n_directions as f64).ln(),
    })
}

/// Bucket thresholds `omega_0 = 0`, `omega_k = 2 pi 2^k / N`, and the bucket
/// count `M = floor(log2(N / 8))`.
pub fn lemma31_buckets(n_directions: usize) -> (Vec<f64>, u32) {
    let m = (n_directions / 8).checked_ilog2().unwrap_or(0);
    let omegas = (0..=m + 1)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                TAU * (1u64 << k) as f64 / n_directions as f64
            }
        })
        .collect();
    (omegas, m)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Instance {
    pub n_directions: usize,
    pub alpha: RotatedRect,
    pub beta: RotatedRect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Lemma31Outcome {
    HypothesisNotMet {
        reason: String,
    },
    Checked {
        k: u32,
        s_alpha: f64,
        /// `|R_beta ∩ R_alpha| / |R_alpha|`.
        lhs: f64,
        /// Smallest `|R_beta* ∩ Q| / |Q|` over the sample points.
        min_rhs: f64,
        /// Sample point realising `min_rhs`.
        worst_x: Point,
        passed: bool,
    },
}

impl Lemma31Outcome {
    pub fn failed(&self) -> bool {
        matches!(self, Lemma31Outcome::Checked { passed: false, .. })
    }
}

/// Both sides of the two-rectangle inequality on a 5 x 5 grid of points of
/// `R_alpha`, after checking the angle-bucket and length hypotheses.
pub fn check_lemma31(inst: &Lemma31Instance) -> Lemma31Outcome {
    let (a, b) = (&inst.alpha, &inst.beta);
    let n = inst.n_directions;
    let (omegas, m) = lemma31_buckets(n);
    let not_met = |reason: String| Lemma31Outcome::HypothesisNotMet { reason };
    if b.length() < a.length() {
        return not_met(format!("L_beta {} < L_alpha {}", b.length(), a.length()));
    }
    let gap = angle_gap(a.theta(), b.theta());
    let mut r = gap / (TAU / n as f64);
    if (r - r.round()).abs() < 1e-9 {
        r = r.round();
    }
    let k = if r < 2.0 { 0 } else { r.log2().floor() as u32 };
    if k >= m {
        return not_met(format!("angle gap {gap} falls in bucket {k}, M = {m}"));
    }
    debug_assert!(omegas[k as usize] <= gap + 1e-12 && gap < omegas[k as usize + 1] + 1e-12);
    let s_alpha = 8.0 * a.width().max(omegas[k as usize] * a.length());
    let lhs_area = rect_intersection_area(b, a);
    let b_star = b.expand(EXPANSION).expect("factor >= 1");
    let q_area = s_alpha * s_alpha;
    let mut min_rhs_area = f64::INFINITY;
    let mut worst_x = a.center();
    for i in 0..LEMMA_SAMPLES {
        for j in 0..LEMMA_SAMPLES {
            let frac = |t: usize| (t as f64 + 0.5) / LEMMA_SAMPLES as f64 - 0.5;
            let x = a.point_at(frac(i) * a.length(), frac(j) * a.width());
            let q = RotatedRect::new(x, s_alpha, s_alpha, a.theta()).expect("positive side");
            let rhs_area = rect_intersection_area(&b_star, &q);
            if rhs_area < min_rhs_area {
                min_rhs_area = rhs_area;
                worst_x = x;
            }
        }
    }
    let passed =
        lhs_area * q_area <= LEMMA_CONSTANT * min_rhs_area * a.area() + AREA_TOL * (q_area + LEMMA_CONSTANT * a.area());
    Lemma31Outcome::Checked {
        k,
        s_alpha,
        lhs: lhs_area / a.area(),
        min_rhs: min_rhs_area / q_area,
        worst_x,
        passed,
    }
}

fn random_rect(rng: &mut impl Rng, center: Point, theta: f64, max_length: f64, max_aspect: f64) -> RotatedRect {
    let length = rng.gen_range(1.0..=max_length);
    let aspect = max_aspect.powf(rng.gen::<f64>());
    RotatedRect::new(center, length, length / aspect, theta).expect("positive sides")
}

/// `count` rectangles with directions from one sector of `dirs`, centres
/// uniform in `[0, side)^2`, lengths up to `side / 2` and log-uniform aspect
/// ratios up to 16.
pub fn random_sector_family(
    rng: &mut impl Rng,
    dirs: &DirectionSet,
    sector: usize,
    side: usize,
    count: usize,
) -> Vec<RotatedRect> {
    let members = &dirs.sectors()[sector];
    (0..count)
        .map(|_| {
            let j = members[rng.gen_range(0..members.len())];
            let c = Point::new(rng.gen_range(0.0..side as f64), rng.gen_range(0.0..side as f64));
            random_rect(rng, c, dirs.angle(j), (side as f64 / 2.0).max(1.0), 16.0)
        })
        .collect()
}

/// Two rectangles with directions from one sector, lengths up to 64,
/// log-uniform aspect ratios up to 64, and the longer one labelled beta.
/// The beta centre is uniform in a disc of radius `(L_alpha + L_beta) / 2`
/// around the alpha centre.
pub fn random_lemma31_instance(rng: &mut impl Rng, n_directions: usize) -> Result<Lemma31Instance> {
    let dirs = DirectionSet::uniform(n_directions)?;
    let sectors = dirs.sectors();
    let members = &sectors[rng.gen_range(0..sectors.len())];
    let pick = |rng: &mut dyn rand::RngCore| dirs.angle(members[rng.gen_range(0..members.len())]);
    let (ta, tb) = (pick(rng), pick(rng));
    let mut a = random_rect(rng, Point::new(0.0, 0.0), ta, 64.0, 64.0);
    let mut b = random_rect(rng, Point::new(0.0, 0.0), tb, 64.0, 64.0);
    if b.length() < a.length() {
        let la = a.length();
        let wa = a.width();
        a = RotatedRect::new(a.center(), b.length(), b.width(), ta)?;
        b = RotatedRect::new(b.center(), la, wa, tb)?;
    }
    let radius = (a.length() + b.length()) / 2.0 * rng.gen::<f64>().sqrt();
    let phi = rng.gen_range(0.0..2.0 * PI);
    let beta = RotatedRect::new(
        Point::new(radius * phi.cos(), radius * phi.sin()),
        b.length(),
        b.width(),
        b.theta(),
    )?;
    Ok(Lemma31Instance {
        n_directions,
        alpha: a,
        beta,
    })
}
