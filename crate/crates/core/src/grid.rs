//! Piecewise-constant functions on a dyadic `side x side` grid of unit cells.
//!
//! Cell `(x, y)` is the unit square `[x, x+1) x [y, y+1)`; storage is row-major
//! with row `y = 0` first. Two numeric backends share the same code paths:
//! `f64` for large harness runs and [`Exact`] (rationals over `i128`) for
//! checks that must hold without rounding.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational cell values.
pub type Exact = Ratio<i128>;

/// Numeric backend for cell values, integrals and averages.
pub trait Scalar:
    Clone
    + PartialOrd
    + Debug
    + Send
    + Sync
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + 'static
{
    fn from_count(n: u64) -> Self;
    fn to_f64(&self) -> f64;
    /// Finite and nonnegative.
    fn is_admissible(&self) -> bool;

    fn average(sum: Self, area: u64) -> Self {
        sum / Self::from_count(area)
    }
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_admissible(&self) -> bool {
        self.is_finite() && *self >= 0.0
    }
}

impl Scalar for Exact {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i128)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_admissible(&self) -> bool {
        *self.denom() != 0 && !(*self < Ratio::zero())
    }
}

/// Larger of two partially ordered values, keeping `a` on ties.
#[inline]
pub(crate) fn pmax<T: PartialOrd>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D<T = f64> {
    side: usize,
    cells: Vec<T>,
}

impl<T: Scalar> Grid2D<T> {
    pub fn new(side: usize, cells: Vec<T>) -> Result<Self> {
        if !is_power_of_two(side) {
            return Err(Error::NotPowerOfTwo(side));
        }
        if cells.len() != side * side {
            return Err(Error::CellCount {
                expected: side * side,
                found: cells.len(),
            });
        }
        if let Some(i) = cells.iter().position(|v| !v.is_admissible()) {
            return Err(Error::InvalidCell {
                x: i % side,
                y: i / side,
            });
        }
        Ok(Self { side, cells })
    }

    pub fn filled(side: usize, value: T) -> Result<Self> {
        Self::new(side, vec![value; side * side])
    }

    pub fn zeros(side: usize) -> Result<Self> {
        Self::filled(side, T::zero())
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut cells = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                cells.push(f(x, y));
            }
        }
        Self::new(side, cells)
    }

    /// Builds a grid from values already known to be admissible.
    pub(crate) fn from_raw(side: usize, cells: Vec<T>) -> Self {
        debug_assert!(is_power_of_two(side) && cells.len() == side * side);
        Self { side, cells }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.cells[y * self.side + x]
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<T> {
        self.cells
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Result<Grid2D<U>> {
        Grid2D::new(self.side, self.cells.iter().map(f).collect())
    }

    pub fn to_f64(&self) -> Grid2D<f64> {
        Grid2D::from_raw(self.side, self.cells.iter().map(Scalar::to_f64).collect())
    }

    pub fn total(&self) -> T {
        self.cells.iter().fold(T::zero(), |acc, v| acc + v.clone())
    }

    pub fn max_value(&self) -> T {
        self.cells.iter().cloned().fold(T::zero(), pmax)
    }

    pub fn min_value(&self) -> T {
        let mut it = self.cells.iter().cloned();
        let first = it.next().unwrap_or_else(T::zero);
        it.fold(first, |a, b| if b < a { b } else { a })
    }

    /// Cellwise `self <= other` (same side assumed).
    pub fn le(&self, other: &Self) -> bool {
        self.side == other.side && self.cells.iter().zip(&other.cells).all(|(a, b)| a <= b)
    }
}

impl Grid2D<f64> {
    pub fn mean(&self) -> f64 {
        self.total() / (self.side * self.side) as f64
    }
}

impl Grid2D<Exact> {
    pub fn from_integers(side: usize, values: &[i64]) -> Result<Self> {
        Self::new(side, values.iter().map(|&v| Ratio::from_integer(v as i128)).collect())
    }
}

/// Half-open axis-parallel cell rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AxisRect {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl AxisRect {
    pub fn new(x0: usize, x1: usize, y0: usize, y1: usize) -> Result<Self> {
        let r = Self { x0, x1, y0, y1 };
        if x0 >= x1 || y0 >= y1 {
            return Err(r.bounds_error(0));
        }
        Ok(r)
    }

    pub fn cell(x: usize, y: usize) -> Self {
        Self {
            x0: x,
            x1: x + 1,
            y0: y,
            y1: y + 1,
        }
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        (self.width() * self.height()) as u64
    }

    pub fn contains_cell(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }

    pub fn fits(&self, side: usize) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1 && self.x1 <= side && self.y1 <= side
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| (x, y)))
    }

    fn bounds_error(&self, side: usize) -> Error {
        Error::OutOfBounds {
            x0: self.x0,
            x1: self.x1,
            y0: self.y0,
            y1: self.y1,
            side,
        }
    }
}

/// Unnormalized integral of `g` over `r` by direct cell summation.
pub fn integrate<T: Scalar>(g: &Grid2D<T>, r: &AxisRect) -> Result<T> {
    if !r.fits(g.side()) {
        return Err(r.bounds_error(g.side()));
    }
    Ok(r.cells().fold(T::zero(), |acc, (x, y)| acc + g.get(x, y).clone()))
}

/// Inclusive 2D prefix sums: `prefix[y][x]` is the integral over `[0,x) x [0,y)`.
#[derive(Debug, Clone)]
pub struct SummedAreaTable<T = f64> {
    side: usize,
    prefix: Vec<T>,
}

impl<T: Scalar> SummedAreaTable<T> {
    pub fn new(g: &Grid2D<T>) -> Self {
        let n = g.side();
        let w = n + 1;
        let mut prefix = vec![T::zero(); w * w];
        for y in 0..n {
            let mut row = T::zero();
            for x in 0..n {
                row = row + g.get(x, y).clone();
                prefix[(y + 1) * w + x + 1] = prefix[y * w + x + 1].clone() + row.clone();
            }
        }
        Self { side: n, prefix }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> &T {
        &self.prefix[y * (self.side + 1) + x]
    }

    /// Four-corner combination; `r` must fit the grid.
    #[inline]
    pub fn sum(&self, r: &AxisRect) -> T {
        self.at(r.x1, r.y1).clone() + self.at(r.x0, r.y0).clone()
            - self.at(r.x0, r.y1).clone()
            - self.at(r.x1, r.y0).clone()
    }

    #[inline]
    pub fn average(&self, r: &AxisRect) -> T {
        T::average(self.sum(r), r.area())
    }

    pub fn integrate(&self, r: &AxisRect) -> Result<T> {
        if !r.fits(self.side) {
            return Err(r.bounds_error(self.side));
        }
        Ok(self.sum(r))
    }
}
