//! Brute-force oracles. They enumerate the admissible shapes directly and
//! share no code with the fast paths beyond the grid container itself.

use crate::directional::DirectionalConfig;
use crate::directions::DirectionSet;
use crate::geometry::{integrate_rotated, Point, RotatedRect};
use crate::grid::{Grid2D, Scalar};

fn rect_average<T: Scalar>(g: &Grid2D<T>, x0: usize, x1: usize, y0: usize, y1: usize) -> T {
    let mut sum = T::zero();
    for y in y0..y1 {
        for x in x0..x1 {
            sum = sum + g.get(x, y).clone();
        }
    }
    sum / T::from_count(((x1 - x0) * (y1 - y0)) as u64)
}

fn paint<T: Scalar>(out: &mut [T], n: usize, x0: usize, x1: usize, y0: usize, y1: usize, v: &T) {
    for y in y0..y1 {
        for x in x0..x1 {
            if *v > out[y * n + x] {
                out[y * n + x] = v.clone();
            }
        }
    }
}

/// Every in-grid square (or dyadic square) containing each cell.
pub fn hl_maximal_brute<T: Scalar>(g: &Grid2D<T>, dyadic: bool) -> Grid2D<T> {
    let n = g.side();
    let mut out = g.cells().to_vec();
    for s in 1..=n {
        if dyadic && !s.is_power_of_two() {
            continue;
        }
        let step = if dyadic { s } else { 1 };
        for y0 in (0..=n - s).step_by(step) {
            for x0 in (0..=n - s).step_by(step) {
                let avg = rect_average(g, x0, x0 + s, y0, y0 + s);
                paint(&mut out, n, x0, x0 + s, y0, y0 + s, &avg);
            }
        }
    }
    Grid2D::new(n, out).expect("same shape")
}

/// Every in-grid axis rectangle containing each cell.
pub fn strong_maximal_brute<T: Scalar>(g: &Grid2D<T>) -> Grid2D<T> {
    let n = g.side();
    let mut out = g.cells().to_vec();
    for y0 in 0..n {
        for y1 in y0 + 1..=n {
            for x0 in 0..n {
                for x1 in x0 + 1..=n {
                    let avg = rect_average(g, x0, x1, y0, y1);
                    paint(&mut out, n, x0, x1, y0, y1, &avg);
                }
            }
        }
    }
    Grid2D::new(n, out).expect("same shape")
}

/// Directional maximal function on the same discretized family as the fast
/// path, with every rectangle integrated by polygon clipping and every
/// containment tested point by point.
pub fn directional_maximal_brute(g: &Grid2D<f64>, dirs: &DirectionSet, cfg: &DirectionalConfig) -> Grid2D<f64> {
    let n = g.side();
    let mut out = g.cells().to_vec();
    let reach = n as f64 * std::f64::consts::SQRT_2 + 1.0;
    for j in 0..dirs.len() {
        let theta = dirs.angle(j);
        let (s, c) = theta.sin_cos();
        for &(length, width) in cfg.scales.pairs() {
            let su = width * cfg.stride;
            let sv = width * cfg.stride;
            let a_max = ((reach + length) / su).ceil() as i64;
            let b_max = ((reach + width) / sv).ceil() as i64;
            for a in -a_max..=a_max {
                for b in -b_max..=b_max {
                    let (cu, cv) = (a as f64 * su, b as f64 * sv);
                    let center = Point::new(cu * c - cv * s, cu * s + cv * c);
                    let rect = RotatedRect::new(center, length, width, theta).expect("valid scale");
                    let (lo, hi) = rect.bounding_box();
                    if hi.x < 0.0 || hi.y < 0.0 || lo.x > n as f64 || lo.y > n as f64 {
                        continue;
                    }
                    let mut avg: Option<f64> = None;
                    let (x_lo, x_hi) = (lo.x.floor().max(0.0) as usize, (hi.x.ceil() as usize).min(n));
                    let (y_lo, y_hi) = (lo.y.floor().max(0.0) as usize, (hi.y.ceil() as usize).min(n));
                    for y in y_lo..y_hi {
                        for x in x_lo..x_hi {
                            let p = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                            if !rect.contains_strict(p, 1e-9) {
                                continue;
                            }
                            let v = *avg.get_or_insert_with(|| {
                                (integrate_rotated(g, &rect).expect("valid rect") / rect.area()).max(0.0)
                            });
                            if v > out[y * n + x] {
                                out[y * n + x] = v;
                            }
                        }
                    }
                }
            }
        }
    }
    Grid2D::new(n, out).expect("same shape")
}
