//! Hardy–Littlewood (cube), strong (rectangle) and composed maximal
//! operators on grids.
//!
//! The value of `Mf` on a cell is the supremum of averages over basis
//! elements containing the centre of that cell. For cell-aligned bases this
//! means the cell lies inside the basis element; squares and rectangles
//! reaching outside the grid never beat an in-grid translate, so only
//! in-grid elements are scanned.

use serde::{Deserialize, Serialize};

use crate::directional::{directional_maximal, DirectionalConfig};
use crate::directions::DirectionSet;
use crate::error::Result;
use crate::grid::{pmax, AxisRect, Grid2D, Scalar, SummedAreaTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorTag {
    HlAxis,
    HlDyadic,
    Strong,
    Directional {
        n_directions: usize,
    },
    /// Strong maximal of the axis Hardy–Littlewood maximal.
    ComposedStrong,
    /// Directional maximal of the axis Hardy–Littlewood maximal.
    ComposedDirectional {
        n_directions: usize,
    },
}

impl OperatorTag {
    pub fn name(&self) -> String {
        match self {
            OperatorTag::HlAxis => "hl-axis".into(),
            OperatorTag::HlDyadic => "hl-dyadic".into(),
            OperatorTag::Strong => "strong".into(),
            OperatorTag::Directional { n_directions } => format!("directional({n_directions})"),
            OperatorTag::ComposedStrong => "composed-W(strong)".into(),
            OperatorTag::ComposedDirectional { n_directions } => {
                format!("composed-W(directional({n_directions}))")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalField<T = f64> {
    pub operator: OperatorTag,
    pub values: Grid2D<T>,
    /// Present for directional operators: the discretization actually used.
    pub directional: Option<DirectionalConfig>,
}

impl<T: Scalar> MaximalField<T> {
    fn plain(operator: OperatorTag, values: Grid2D<T>) -> Self {
        Self {
            operator,
            values,
            directional: None,
        }
    }

    pub fn into_values(self) -> Grid2D<T> {
        self.values
    }
}

/// `res[c] = max { val(a, b) : a <= c < b }` over all `0 <= a < b <= n`.
fn interval_cover_max<T: Scalar>(n: usize, res: &mut [T], mut val: impl FnMut(usize, usize) -> T) {
    for a in 0..n {
        let mut suffix: Option<T> = None;
        for b in (a + 1..=n).rev() {
            let v = val(a, b);
            let s = match suffix.take() {
                Some(s) => pmax(s, v),
                None => v,
            };
            if s > res[b - 1] {
                res[b - 1] = s.clone();
            }
            suffix = Some(s);
        }
    }
}

/// Maximal function over axis-parallel squares, or dyadic squares when
/// `dyadic` is set.
pub fn hl_maximal<T: Scalar>(g: &Grid2D<T>, dyadic: bool) -> MaximalField<T> {
    let n = g.side();
    let sat = SummedAreaTable::new(g);
    let mut out = g.cells().to_vec();
    if dyadic {
        let mut s = 2;
        while s <= n {
            for j in 0..n / s {
                for i in 0..n / s {
                    let sq = AxisRect {
                        x0: i * s,
                        x1: (i + 1) * s,
                        y0: j * s,
                        y1: (j + 1) * s,
                    };
                    let avg = sat.average(&sq);
                    for (x, y) in sq.cells() {
                        if avg > out[y * n + x] {
                            out[y * n + x] = avg.clone();
                        }
                    }
                }
            }
            s *= 2;
        }
        return MaximalField::plain(OperatorTag::HlDyadic, Grid2D::from_raw(n, out));
    }
    for s in 2..=n {
        let m = n - s + 1;
        let mut avg = Vec::with_capacity(m * m);
        for y0 in 0..m {
            for x0 in 0..m {
                avg.push(sat.average(&AxisRect {
                    x0,
                    x1: x0 + s,
                    y0,
                    y1: y0 + s,
                }));
            }
        }
        // Window maxima: first along x over square origins, then along y.
        let mut row_max: Vec<T> = Vec::with_capacity(m * n);
        for y0 in 0..m {
            for cx in 0..n {
                let lo = (cx + 1).saturating_sub(s);
                let hi = cx.min(m - 1);
                let best = (lo + 1..=hi).fold(avg[y0 * m + lo].clone(), |acc, x0| pmax(acc, avg[y0 * m + x0].clone()));
                row_max.push(best);
            }
        }
        for cy in 0..n {
            let lo = (cy + 1).saturating_sub(s);
            let hi = cy.min(m - 1);
            for cx in 0..n {
                let best = (lo + 1..=hi).fold(row_max[lo * n + cx].clone(), |acc, y0| {
                    pmax(acc, row_max[y0 * n + cx].clone())
                });
                if best > out[cy * n + cx] {
                    out[cy * n + cx] = best;
                }
            }
        }
    }
    MaximalField::plain(OperatorTag::HlAxis, Grid2D::from_raw(n, out))
}

/// Strong maximal function over all axis-parallel cell rectangles.
///
/// For every row band `[y0, y1)` the best x-interval through each column is
/// found with a suffix/prefix sweep; a second sweep over bands then gives
/// the best rectangle through each cell. `O(n^4)` averages, no
/// approximation.
pub fn strong_maximal<T: Scalar>(g: &Grid2D<T>) -> MaximalField<T> {
    let n = g.side();
    let sat = SummedAreaTable::new(g);
    let bands = n * (n + 1) / 2;
    let band_index = |y0: usize, y1: usize| y0 * n - y0 * (y0.saturating_sub(1)) / 2 + (y1 - y0 - 1);
    // best_by_band[cx * bands + band]
    let mut best_by_band: Vec<T> = vec![T::zero(); n * bands];
    let mut band_best = vec![T::zero(); n];
    for y0 in 0..n {
        for y1 in y0 + 1..=n {
            band_best.iter_mut().for_each(|v| *v = T::zero());
            interval_cover_max(n, &mut band_best, |x0, x1| sat.average(&AxisRect { x0, x1, y0, y1 }));
            let b = band_index(y0, y1);
            for (cx, v) in band_best.iter().enumerate() {
                best_by_band[cx * bands + b] = v.clone();
            }
        }
    }
    let mut out = g.cells().to_vec();
    let mut column = vec![T::zero(); n];
    for cx in 0..n {
        column.iter_mut().for_each(|v| *v = T::zero());
        interval_cover_max(n, &mut column, |y0, y1| {
            best_by_band[cx * bands + band_index(y0, y1)].clone()
        });
        for (cy, v) in column.iter().enumerate() {
            if *v > out[cy * n + cx] {
                out[cy * n + cx] = v.clone();
            }
        }
    }
    MaximalField::plain(OperatorTag::Strong, Grid2D::from_raw(n, out))
}

/// `W = M_R(M_Q w)` with the axis (non-dyadic) cube maximal inside.
pub fn compose_w<T: Scalar>(w: &Grid2D<T>) -> MaximalField<T> {
    let inner = hl_maximal(w, false).into_values();
    MaximalField::plain(OperatorTag::ComposedStrong, strong_maximal(&inner).into_values())
}

/// `W = M_Sigma(M_Q w)` for a direction set.
pub fn compose_w_directional(
    w: &Grid2D<f64>,
    dirs: &DirectionSet,
    cfg: &DirectionalConfig,
) -> Result<MaximalField<f64>> {
    let inner = hl_maximal(w, false).into_values();
    let mut field = directional_maximal(&inner, dirs, cfg)?;
    field.operator = OperatorTag::ComposedDirectional {
        n_directions: dirs.len(),
    };
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Exact;
    use crate::reference;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exact_grid(side: usize, vals: &[i64]) -> Grid2D<Exact> {
        Grid2D::from_integers(side, vals).unwrap()
    }

    fn random_exact(rng: &mut ChaCha8Rng, side: usize) -> Grid2D<Exact> {
        let vals: Vec<i64> = (0..side * side)
            .map(|_| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(0..20) })
            .collect();
        exact_grid(side, &vals)
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = Grid2D::filled(8, Exact::new(3, 2)).unwrap();
        for field in [
            hl_maximal(&g, false),
            hl_maximal(&g, true),
            strong_maximal(&g),
            compose_w(&g),
        ] {
            assert_eq!(field.values, g);
        }
        let one = Grid2D::filled(8, 1.0).unwrap();
        assert_eq!(compose_w(&one).values, one);
    }

    #[test]
    fn dyadic_impulse_far_corner() {
        let mut vals = vec![0; 16];
        vals[0] = 1;
        let m = hl_maximal(&exact_grid(4, &vals), true).values;
        assert_eq!(*m.get(3, 3), Exact::new(1, 16));
        assert_eq!(*m.get(1, 1), Exact::new(1, 4));
        assert_eq!(*m.get(0, 0), Exact::from_integer(1));
    }

    #[test]
    fn bottom_row_indicator_under_strong_maximal() {
        let n = 8;
        let g = Grid2D::from_fn(n, |_, y| {
            if y == 0 {
                Exact::from_integer(1)
            } else {
                Exact::from_integer(0)
            }
        })
        .unwrap();
        let m = strong_maximal(&g).values;
        assert_eq!(m, reference::strong_maximal_brute(&g));
        for y in 0..n {
            for x in 0..n {
                assert_eq!(*m.get(x, y), Exact::new(1, y as i128 + 1));
            }
        }
    }

    #[test]
    fn fast_paths_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for side in [1, 2, 4, 8] {
            for _ in 0..10 {
                let g = random_exact(&mut rng, side);
                assert_eq!(hl_maximal(&g, false).values, reference::hl_maximal_brute(&g, false));
                assert_eq!(hl_maximal(&g, true).values, reference::hl_maximal_brute(&g, true));
                assert_eq!(strong_maximal(&g).values, reference::strong_maximal_brute(&g));
            }
        }
    }

    #[test]
    fn composed_point_mass_matches_brute_composition() {
        let mut vals = vec![0; 64];
        vals[0] = 1;
        let w = exact_grid(8, &vals);
        let fast = compose_w(&w).values;
        let brute = reference::strong_maximal_brute(&reference::hl_maximal_brute(&w, false));
        assert_eq!(fast, brute);
        assert_eq!(*fast.get(7, 7), *brute.get(7, 7));
        assert!(*fast.get(7, 7) > Exact::from_integer(0));
    }

    #[test]
    fn float_fields_dominate_input_and_respect_basis_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let g = Grid2D::from_fn(16, |_, _| rng.gen_range(0.0..1.0f64).powi(3) * 10.0).unwrap();
            let d = hl_maximal(&g, true).values;
            let a = hl_maximal(&g, false).values;
            let s = strong_maximal(&g).values;
            assert!(g.le(&d) && d.le(&a) && a.le(&s));
        }
    }

    #[test]
    fn weak_type_sanity_for_cube_maximal() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let g = Grid2D::from_fn(16, |_, _| {
                if rng.gen_bool(0.1) {
                    rng.gen_range(0.0..5.0)
                } else {
                    0.0
                }
            })
            .unwrap();
            let mass = g.total();
            if mass == 0.0 {
                continue;
            }
            let m = hl_maximal(&g, false).values;
            for t in [0.01, 0.1, 0.5, 1.0, 2.0] {
                let count = m.cells().iter().filter(|&&v| v > t).count() as f64;
                worst = worst.max(t * count / mass);
            }
        }
        assert!(worst.is_finite() && worst > 0.0);
        // Cells are unit squares of a grid: the dyadic-style constant 9 with a
        // margin is far above anything the 2D covering argument permits.
        assert!(worst < 16.0, "observed weak (1,1) constant {worst}");
    }

    fn exact_grid_strategy(max_log: u32) -> impl Strategy<Value = Grid2D<Exact>> {
        (0..=max_log).prop_flat_map(|m| {
            let side = 1usize << m;
            proptest::collection::vec(0i64..12, side * side).prop_map(move |v| Grid2D::from_integers(side, &v).unwrap())
        })
    }

    fn add(a: &Grid2D<Exact>, b: &Grid2D<Exact>) -> Grid2D<Exact> {
        Grid2D::new(a.side(), a.cells().iter().zip(b.cells()).map(|(x, y)| x + y).collect()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn operators_are_monotone_homogeneous_sublinear(
            (f, g, c) in exact_grid_strategy(3).prop_flat_map(|f| {
                let side = f.side();
                (Just(f), proptest::collection::vec(0i64..12, side * side), 0i64..5)
            }).prop_map(|(f, extra, c)| {
                let side = f.side();
                let g = add(&f, &Grid2D::from_integers(side, &extra).unwrap());
                (f, g, c)
            })
        ) {
            let scale = Exact::from_integer(c as i128);
            let cf = f.map(|v| v * scale).unwrap();
            let h = add(&f, &g);
            let ops: [fn(&Grid2D<Exact>) -> Grid2D<Exact>; 3] = [
                |x| hl_maximal(x, false).values,
                |x| hl_maximal(x, true).values,
                |x| strong_maximal(x).values,
            ];
            for op in ops {
                let (mf, mg) = (op(&f), op(&g));
                prop_assert!(f.le(&mf));
                prop_assert!(mf.le(&mg));
                prop_assert_eq!(op(&cf), mf.map(|v| v * scale).unwrap());
                prop_assert!(op(&h).le(&add(&mf, &mg)));
            }
        }

        #[test]
        fn basis_ordering_exact(g in exact_grid_strategy(4)) {
            let d = hl_maximal(&g, true).values;
            let a = hl_maximal(&g, false).values;
            let s = strong_maximal(&g).values;
            prop_assert!(d.le(&a));
            prop_assert!(a.le(&s));
            let w = compose_w(&g).values;
            prop_assert!(g.le(&a) && a.le(&w));
        }
    }
}
