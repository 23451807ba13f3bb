//! Discrete maximal operators on dyadic grids, the covering selections
//! behind their weighted estimates, and a harness that measures both sides
//! of the weighted inequalities on randomized suites.

pub mod covering;
pub mod directional;
pub mod directions;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod maximal;
#[cfg(any(test, feature = "reference"))]
pub mod reference;
pub mod weights;
pub mod zoo;

pub use error::{Error, Result};
pub use grid::{AxisRect, Exact, Grid2D, Scalar};
