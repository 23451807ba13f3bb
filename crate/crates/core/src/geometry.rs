//! Continuous rectangle geometry: rotated rectangles, convex clipping and
//! exact integration of piecewise-constant grids over rotated regions.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

/// Rectangle of length `length` along direction `theta` and width `width`
/// across it, centred at `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RotatedRectRepr", into = "RotatedRectRepr")]
pub struct RotatedRect {
    center: Point,
    length: f64,
    width: f64,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct RotatedRectRepr {
    cx: f64,
    cy: f64,
    length: f64,
    width: f64,
    theta: f64,
}

impl TryFrom<RotatedRectRepr> for RotatedRect {
    type Error = Error;
    fn try_from(r: RotatedRectRepr) -> Result<Self> {
        RotatedRect::new(Point::new(r.cx, r.cy), r.length, r.width, r.theta)
    }
}

impl From<RotatedRect> for RotatedRectRepr {
    fn from(r: RotatedRect) -> Self {
        RotatedRectRepr {
            cx: r.center.x,
            cy: r.center.y,
            length: r.length,
            width: r.width,
            theta: r.theta,
        }
    }
}

impl RotatedRect {
    pub fn new(center: Point, length: f64, width: f64, theta: f64) -> Result<Self> {
        if !(center.x.is_finite() && center.y.is_finite() && theta.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite rectangle parameters".into()));
        }
        if !(length > 0.0 && width > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "side lengths must be positive, got length {length} and width {width}"
            )));
        }
        if width > length {
            return Err(Error::InvalidGeometry(format!("width {width} exceeds length {length}")));
        }
        Ok(Self {
            center,
            length,
            width,
            theta: theta.rem_euclid(TAU),
        })
    }

    /// Axis-parallel rectangle `[x0,x1) x [y0,y1)`, long side chosen as the
    /// direction (x1 on ties).
    pub fn from_axis_bounds(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let (w, h) = (x1 - x0, y1 - y0);
        let c = Point::new((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        if w >= h {
            Self::new(c, w, h, 0.0)
        } else {
            Self::new(c, h, w, std::f64::consts::FRAC_PI_2)
        }
    }

    pub fn center(&self) -> Point {
        self.center
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn width(&self) -> f64 {
        self.width
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    /// Unit vectors along the long and short sides.
    pub fn axes(&self) -> (Point, Point) {
        let (s, c) = self.theta.sin_cos();
        (Point::new(c, s), Point::new(-s, c))
    }

    /// Counter-clockwise corners.
    pub fn corners(&self) -> [Point; 4] {
        let (u, v) = self.axes();
        let (a, b) = (self.length / 2.0, self.width / 2.0);
        let at = |su: f64, sv: f64| {
            Point::new(
                self.center.x + su * a * u.x + sv * b * v.x,
                self.center.y + su * a * u.y + sv * b * v.y,
            )
        };
        [at(-1.0, -1.0), at(1.0, -1.0), at(1.0, 1.0), at(-1.0, 1.0)]
    }

    /// Coordinates of `p` along the long and short axes, relative to the centre.
    pub fn local(&self, p: Point) -> (f64, f64) {
        let (u, v) = self.axes();
        let d = p.sub(self.center);
        (d.dot(u), d.dot(v))
    }

    /// Point of the rectangle with local coordinates `(along, across)`.
    pub fn point_at(&self, along: f64, across: f64) -> Point {
        let (u, v) = self.axes();
        Point::new(
            self.center.x + along * u.x + across * v.x,
            self.center.y + along * u.y + across * v.y,
        )
    }

    /// Membership in the open rectangle, shrunk by `eps`.
    pub fn contains_strict(&self, p: Point, eps: f64) -> bool {
        let (a, b) = self.local(p);
        a.abs() < self.length / 2.0 - eps && b.abs() < self.width / 2.0 - eps
    }

    /// Membership in the closed rectangle, grown by `eps`.
    pub fn contains_closed(&self, p: Point, eps: f64) -> bool {
        let (a, b) = self.local(p);
        a.abs() <= self.length / 2.0 + eps && b.abs() <= self.width / 2.0 + eps
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let c = self.corners();
        let (mut lo, mut hi) = (c[0], c[0]);
        for p in &c[1..] {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    pub fn expand(&self, factor: f64) -> Result<Self> {
        if !(factor >= 1.0 && factor.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "expansion factor must be at least 1, got {factor}"
            )));
        }
        Ok(Self {
            length: self.length * factor,
            width: self.width * factor,
            ..*self
        })
    }
}

/// `r` with both side lengths multiplied by `factor` about its centre.
pub fn expand_rect(r: &RotatedRect, factor: f64) -> Result<RotatedRect> {
    r.expand(factor)
}

/// Shoelace area of a simple polygon (absolute value).
pub fn polygon_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        acc += p.x * q.y - q.x * p.y;
    }
    acc.abs() / 2.0
}

/// Keeps the part of a convex polygon on the left of the directed line `a -> b`.
pub fn clip_halfplane(poly: &[Point], a: Point, b: Point, out: &mut Vec<Point>) {
    out.clear();
    if poly.is_empty() {
        return;
    }
    let side = |p: Point| (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    let mut prev = poly[poly.len() - 1];
    let mut prev_side = side(prev);
    for &cur in poly {
        let cur_side = side(cur);
        if cur_side >= 0.0 {
            if prev_side < 0.0 {
                out.push(prev.lerp(cur, prev_side / (prev_side - cur_side)));
            }
            out.push(cur);
        } else if prev_side >= 0.0 {
            out.push(prev.lerp(cur, prev_side / (prev_side - cur_side)));
        }
        prev = cur;
        prev_side = cur_side;
    }
}

/// Intersection of convex polygon `subject` with the convex CCW polygon `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut cur = subject.to_vec();
    let mut next = Vec::with_capacity(cur.len() + 4);
    for i in 0..clip.len() {
        clip_halfplane(&cur, clip[i], clip[(i + 1) % clip.len()], &mut next);
        std::mem::swap(&mut cur, &mut next);
        if cur.is_empty() {
            break;
        }
    }
    cur
}

pub fn rect_intersection_area(a: &RotatedRect, b: &RotatedRect) -> f64 {
    let (alo, ahi) = a.bounding_box();
    let (blo, bhi) = b.bounding_box();
    if alo.x > bhi.x || blo.x > ahi.x || alo.y > bhi.y || blo.y > ahi.y {
        return 0.0;
    }
    polygon_area(&clip_convex(&a.corners(), &b.corners()))
}

fn clip_to_cell(poly: &[Point], x: f64, y: f64, buf: &mut Vec<Point>, tmp: &mut Vec<Point>) {
    let cell = [
        Point::new(x, y),
        Point::new(x + 1.0, y),
        Point::new(x + 1.0, y + 1.0),
        Point::new(x, y + 1.0),
    ];
    buf.clear();
    buf.extend_from_slice(poly);
    for i in 0..4 {
        clip_halfplane(buf, cell[i], cell[(i + 1) % 4], tmp);
        std::mem::swap(buf, tmp);
        if buf.is_empty() {
            return;
        }
    }
}

/// Exact area-weighted integral of `g` over `r`: the rectangle is clipped
/// against every cell of its bounding box. `g` vanishes outside the grid.
pub fn integrate_rotated(g: &Grid2D<f64>, r: &RotatedRect) -> Result<f64> {
    if !(r.length() > 0.0 && r.width() > 0.0) {
        return Err(Error::InvalidGeometry("degenerate rectangle".into()));
    }
    let n = g.side();
    let (lo, hi) = r.bounding_box();
    let x_lo = lo.x.floor().max(0.0) as usize;
    let y_lo = lo.y.floor().max(0.0) as usize;
    let x_hi = (hi.x.ceil().min(n as f64)).max(0.0) as usize;
    let y_hi = (hi.y.ceil().min(n as f64)).max(0.0) as usize;
    let poly = r.corners();
    let (mut buf, mut tmp) = (Vec::with_capacity(8), Vec::with_capacity(8));
    let mut total = 0.0;
    for y in y_lo..y_hi {
        for x in x_lo..x_hi {
            let v = *g.get(x, y);
            if v == 0.0 {
                continue;
            }
            let (fx, fy) = (x as f64, y as f64);
            let inside = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
                .iter()
                .all(|&(dx, dy)| r.contains_closed(Point::new(fx + dx, fy + dy), 0.0));
            let area = if inside {
                1.0
            } else {
                clip_to_cell(&poly, fx, fy, &mut buf, &mut tmp);
                polygon_area(&buf)
            };
            total += v * area;
        }
    }
    Ok(total)
}

/// Boundary-integral evaluator for polygon integrals of a grid function.
///
/// With `G(x, y) = \int_{-inf}^{x} g(s, y) ds`, Green's theorem gives
/// `\int_P g = \oint_{dP} G dy`. `G` is piecewise linear along any segment
/// once the segment is split at integer grid lines, so each piece is
/// integrated exactly by its midpoint.
#[derive(Debug, Clone)]
pub struct BoundaryIntegrator {
    side: usize,
    cells: Vec<f64>,
    /// `prefix[j * (side + 1) + i]`: sum of row `j` over columns `< i`.
    prefix: Vec<f64>,
}

impl BoundaryIntegrator {
    pub fn new(g: &Grid2D<f64>) -> Self {
        let n = g.side();
        let mut prefix = vec![0.0; n * (n + 1)];
        for j in 0..n {
            for i in 0..n {
                prefix[j * (n + 1) + i + 1] = prefix[j * (n + 1) + i] + g.get(i, j);
            }
        }
        Self {
            side: n,
            cells: g.cells().to_vec(),
            prefix,
        }
    }

    #[inline]
    fn row_primitive(&self, x: f64, row: usize) -> f64 {
        let n = self.side;
        if x <= 0.0 {
            0.0
        } else if x >= n as f64 {
            self.prefix[row * (n + 1) + n]
        } else {
            let i = x as usize;
            self.prefix[row * (n + 1) + i] + self.cells[row * n + i] * (x - i as f64)
        }
    }

    /// `\int G dy` along the directed segment `a -> b`.
    pub fn segment_integral(&self, a: Point, b: Point, scratch: &mut Vec<f64>) -> f64 {
        let dy = b.y - a.y;
        if dy == 0.0 {
            return 0.0;
        }
        let n = self.side as f64;
        if a.y.max(b.y) <= 0.0 || a.y.min(b.y) >= n || a.x.max(b.x) <= 0.0 {
            return 0.0;
        }
        let dx = b.x - a.x;
        scratch.clear();
        scratch.push(0.0);
        scratch.push(1.0);
        if dx != 0.0 {
            // G has kinks at every column boundary, including x = 0 and x = n.
            let lo = (a.x.min(b.x).floor() + 1.0).max(0.0);
            let hi = (a.x.max(b.x).ceil() - 1.0).min(n);
            let mut k = lo;
            while k <= hi {
                let t = (k - a.x) / dx;
                if t > 0.0 && t < 1.0 {
                    scratch.push(t);
                }
                k += 1.0;
            }
        }
        let lo = (a.y.min(b.y).floor() + 1.0).max(0.0);
        let hi = (a.y.max(b.y).ceil() - 1.0).min(n);
        let mut k = lo;
        while k <= hi {
            let t = (k - a.y) / dy;
            if t > 0.0 && t < 1.0 {
                scratch.push(t);
            }
            k += 1.0;
        }
        scratch.sort_by(|p, q| p.total_cmp(q));
        let mut acc = 0.0;
        for w in scratch.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let tm = 0.5 * (t0 + t1);
            let ym = a.y + tm * dy;
            if ym < 0.0 || ym >= n {
                continue;
            }
            let xm = a.x + tm * dx;
            acc += self.row_primitive(xm, ym as usize) * (t1 - t0) * dy;
        }
        acc
    }

    /// Cumulative `\int G dy` along the ray `o + t d`, sampled at
    /// `t = k h` for `k < count`; `out[0] = 0`.
    pub fn line_prefix(&self, o: Point, d: Point, h: f64, count: usize, out: &mut Vec<f64>, breaks: &mut Vec<f64>) {
        out.clear();
        out.resize(count, 0.0);
        let n = self.side as f64;
        if count < 2 || d.y == 0.0 {
            return;
        }
        let t_end = (count - 1) as f64 * h;
        let (ta, tb) = {
            let (t0, t1) = ((0.0 - o.y) / d.y, (n - o.y) / d.y);
            (t0.min(t1).max(0.0), t0.max(t1).min(t_end))
        };
        if ta >= tb {
            return;
        }
        breaks.clear();
        breaks.push(tb);
        if d.x != 0.0 {
            for i in 0..=self.side {
                let t = (i as f64 - o.x) / d.x;
                if t > ta && t < tb {
                    breaks.push(t);
                }
            }
        }
        for j in 1..self.side {
            let t = (j as f64 - o.y) / d.y;
            if t > ta && t < tb {
                breaks.push(t);
            }
        }
        breaks.sort_by(|p, q| p.total_cmp(q));
        let piece = |s0: f64, s1: f64| -> f64 {
            let tm = 0.5 * (s0 + s1);
            let ym = o.y + tm * d.y;
            let row = (ym.max(0.0) as usize).min(self.side - 1);
            self.row_primitive(o.x + tm * d.x, row) * (s1 - s0) * d.y
        };
        let (mut acc, mut cur, mut bi) = (0.0, ta, 0);
        for (k, slot) in out.iter_mut().enumerate() {
            let tk = (k as f64 * h).min(tb);
            if tk > cur {
                while bi < breaks.len() && breaks[bi] < tk {
                    if breaks[bi] > cur {
                        acc += piece(cur, breaks[bi]);
                        cur = breaks[bi];
                    }
                    bi += 1;
                }
                acc += piece(cur, tk);
                cur = tk;
            }
            *slot = acc;
        }
    }

    /// Integral over a counter-clockwise polygon.
    pub fn polygon_integral(&self, poly: &[Point]) -> f64 {
        let mut scratch = Vec::with_capacity(16);
        let mut acc = 0.0;
        for i in 0..poly.len() {
            acc += self.segment_integral(poly[i], poly[(i + 1) % poly.len()], &mut scratch);
        }
        acc
    }

    pub fn rect_integral(&self, r: &RotatedRect) -> f64 {
        self.polygon_integral(&r.corners())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_rect(rng: &mut ChaCha8Rng, side: f64) -> RotatedRect {
        let length = rng.gen_range(0.5..side / 2.0);
        let width = rng.gen_range(0.1..=1.0) * length;
        RotatedRect::new(
            Point::new(rng.gen_range(-2.0..side + 2.0), rng.gen_range(-2.0..side + 2.0)),
            length,
            width,
            rng.gen_range(0.0..TAU),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_rectangles_are_rejected() {
        let c = Point::new(0.0, 0.0);
        assert!(RotatedRect::new(c, 0.0, 0.0, 0.0).is_err());
        assert!(RotatedRect::new(c, 1.0, -1.0, 0.0).is_err());
        assert!(RotatedRect::new(c, 1.0, 2.0, 0.0).is_err());
        assert!(RotatedRect::new(c, 1.0, 1.0, 7.0).unwrap().theta() < TAU);
    }

    #[test]
    fn expansion() {
        let r = RotatedRect::new(Point::new(3.0, 4.0), 1.0, 1.0, 0.3).unwrap();
        assert_eq!(expand_rect(&r, 1.0).unwrap(), r);
        let big = expand_rect(&r, 5.0).unwrap();
        assert_relative_eq!(big.area(), 25.0, max_relative = 1e-12);
        assert_eq!(big.center(), r.center());
        assert_eq!(big.theta(), r.theta());
        assert_relative_eq!(rect_intersection_area(&r, &big), r.area(), max_relative = 1e-9);
        assert!(expand_rect(&r, 0.5).is_err());
    }

    #[test]
    fn axis_aligned_reduces_to_cell_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Grid2D::from_fn(8, |_, _| rng.gen_range(0.0..4.0)).unwrap();
        let r = RotatedRect::from_axis_bounds(1.0, 6.0, 2.0, 4.0).unwrap();
        let expected: f64 = (2..4)
            .flat_map(|y| (1..6).map(move |x| (x, y)))
            .map(|(x, y)| g.get(x, y))
            .sum();
        assert_relative_eq!(integrate_rotated(&g, &r).unwrap(), expected, max_relative = 1e-12);
        let b = BoundaryIntegrator::new(&g);
        assert_relative_eq!(b.rect_integral(&r), expected, max_relative = 1e-12);
    }

    #[test]
    fn constant_grid_gives_area() {
        let g = Grid2D::filled(16, 1.0).unwrap();
        let b = BoundaryIntegrator::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let length = rng.gen_range(0.5..6.0);
            let width = rng.gen_range(0.1..=1.0) * length;
            let r = RotatedRect::new(
                Point::new(rng.gen_range(5.0..11.0), rng.gen_range(5.0..11.0)),
                length,
                width,
                rng.gen_range(0.0..TAU),
            )
            .unwrap();
            assert_relative_eq!(integrate_rotated(&g, &r).unwrap(), r.area(), max_relative = 1e-9);
            assert_relative_eq!(b.rect_integral(&r), r.area(), max_relative = 1e-9);
        }
    }

    #[test]
    fn clipped_cell_areas_sum_to_area_inside_grid() {
        let side = 8usize;
        let g = Grid2D::filled(side, 1.0).unwrap();
        let bbox = RotatedRect::from_axis_bounds(0.0, side as f64, 0.0, side as f64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let r = random_rect(&mut rng, side as f64);
            let inside = rect_intersection_area(&r, &bbox);
            assert!((integrate_rotated(&g, &r).unwrap() - inside).abs() < 1e-9);
        }
    }

    #[test]
    fn two_integration_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let g = Grid2D::from_fn(16, |_, _| rng.gen_range(0.0..5.0)).unwrap();
        let b = BoundaryIntegrator::new(&g);
        for _ in 0..500 {
            let r = random_rect(&mut rng, 16.0);
            let clip = integrate_rotated(&g, &r).unwrap();
            let green = b.rect_integral(&r);
            assert!((clip - green).abs() <= 1e-9 * clip.max(1.0), "{clip} vs {green}");
        }
    }

    #[test]
    fn monte_carlo_agrees_with_clipping() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let g = Grid2D::from_fn(8, |_, _| rng.gen_range(0.0..3.0)).unwrap();
        let r = RotatedRect::new(Point::new(3.7, 4.1), 5.0, 2.2, 0.61).unwrap();
        let exact = integrate_rotated(&g, &r).unwrap();
        let samples = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            let p = r.point_at(
                rng.gen_range(-0.5..0.5) * r.length(),
                rng.gen_range(-0.5..0.5) * r.width(),
            );
            let v = if p.x >= 0.0 && p.y >= 0.0 && p.x < 8.0 && p.y < 8.0 {
                *g.get(p.x as usize, p.y as usize)
            } else {
                0.0
            };
            s += v;
            s2 += v * v;
        }
        let mean = s / samples as f64;
        let se = ((s2 / samples as f64 - mean * mean) / samples as f64).sqrt() * r.area();
        assert!(
            (mean * r.area() - exact).abs() <= 3.0 * se,
            "{exact} vs {}",
            mean * r.area()
        );
    }

    #[test]
    fn overhang_counts_zero() {
        let g = Grid2D::filled(4, 2.0).unwrap();
        // Half of this square lies left of the grid.
        let r = RotatedRect::new(Point::new(0.0, 2.0), 2.0, 2.0, 0.0).unwrap();
        assert_relative_eq!(integrate_rotated(&g, &r).unwrap(), 4.0, max_relative = 1e-12);
        let r45 = RotatedRect::new(Point::new(2.0, 2.0), 1.0, 1.0, PI / 4.0).unwrap();
        assert_relative_eq!(integrate_rotated(&g, &r45).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn line_prefix_matches_segment_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = Grid2D::from_fn(8, |_, _| rng.gen_range(0.0..1.0)).unwrap();
        let integ = BoundaryIntegrator::new(&g);
        let (mut out, mut breaks, mut scratch) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..200 {
            let o = Point::new(rng.gen_range(-4.0..12.0), rng.gen_range(-4.0..12.0));
            let a: f64 = rng.gen_range(0.0..2.0 * PI);
            let d = Point::new(a.cos(), a.sin());
            let h = 0.5;
            integ.line_prefix(o, d, h, 40, &mut out, &mut breaks);
            let mut acc = 0.0;
            for k in 1..40 {
                let p = |k: usize| Point::new(o.x + k as f64 * h * d.x, o.y + k as f64 * h * d.y);
                acc += integ.segment_integral(p(k - 1), p(k), &mut scratch);
                assert!((out[k] - acc).abs() < 1e-10, "{} vs {acc}", out[k]);
            }
        }
    }
}
