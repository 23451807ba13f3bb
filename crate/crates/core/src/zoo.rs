//! Test weights and test functions addressable by short spec strings such as
//! `constant:1`, `spike:0,0` or `lognormal:seed=42,sigma=1.5`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Background value of the spike weight.
pub const SPIKE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum WeightSpec {
    Constant(f64),
    Checkerboard {
        low: f64,
        high: f64,
    },
    /// `|x|^a` at cell centres, `x` measured from the grid origin.
    Power {
        a: f64,
    },
    Spike {
        x: usize,
        y: usize,
    },
    Lognormal {
        seed: u64,
        sigma: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FunctionSpec {
    Constant(f64),
    Spike {
        x: usize,
        y: usize,
        height: f64,
    },
    /// Indicator of row `y` union column `x`.
    Cross {
        x: usize,
        y: usize,
    },
    /// Indicator of cells whose centre lies within `r` of `(cx, cy)`.
    Disc {
        cx: f64,
        cy: f64,
        r: f64,
    },
    Lognormal {
        seed: u64,
        sigma: f64,
    },
    /// Each cell independently nonzero with probability `density`.
    Sparse {
        seed: u64,
        density: f64,
    },
}

/// `kind:a,b,k=v` split into the kind and named arguments; positional
/// arguments take the names in `names` order.
fn split_spec(
    s: &str,
    names: impl Fn(&str) -> Option<&'static [&'static str]>,
) -> Result<(&str, BTreeMap<&'static str, &str>)> {
    let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
    let known = names(kind).ok_or_else(|| Error::UnknownKind(kind.to_string()))?;
    let mut args = BTreeMap::new();
    for (i, part) in rest.split(',').filter(|p| !p.trim().is_empty()).enumerate() {
        let (name, value) = match part.split_once('=') {
            Some((k, v)) => {
                let k = k.trim();
                let name = known
                    .iter()
                    .find(|n| **n == k)
                    .ok_or_else(|| Error::Parse(format!("unknown parameter {k:?} for {kind}")))?;
                (*name, v.trim())
            }
            None => {
                let name = known
                    .get(i)
                    .ok_or_else(|| Error::Parse(format!("too many arguments for {kind}")))?;
                (*name, part.trim())
            }
        };
        args.insert(name, value);
    }
    Ok((kind, args))
}

fn arg<T: FromStr>(args: &BTreeMap<&str, &str>, name: &str, default: Option<T>) -> Result<T> {
    match args.get(name) {
        Some(v) => v
            .parse()
            .map_err(|_| Error::Parse(format!("bad value {v:?} for {name}"))),
        None => default.ok_or_else(|| Error::Parse(format!("missing parameter {name}"))),
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, a) = split_spec(s, |k| match k {
            "constant" => Some(&["value"]),
            "checkerboard" => Some(&["low", "high"]),
            "power" => Some(&["a"]),
            "spike" => Some(&["x", "y"]),
            "lognormal" => Some(&["seed", "sigma"]),
            _ => None,
        })?;
        let spec = match kind {
            "constant" => WeightSpec::Constant(arg(&a, "value", Some(1.0))?),
            "checkerboard" => WeightSpec::Checkerboard {
                low: arg(&a, "low", Some(1.0))?,
                high: arg(&a, "high", Some(4.0))?,
            },
            "power" => WeightSpec::Power { a: arg(&a, "a", None)? },
            "spike" => WeightSpec::Spike {
                x: arg(&a, "x", Some(0))?,
                y: arg(&a, "y", Some(0))?,
            },
            "lognormal" => WeightSpec::Lognormal {
                seed: arg(&a, "seed", None)?,
                sigma: arg(&a, "sigma", Some(1.0))?,
            },
            _ => unreachable!(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Constant(c) => write!(f, "constant:{c}"),
            WeightSpec::Checkerboard { low, high } => write!(f, "checkerboard:{low},{high}"),
            WeightSpec::Power { a } => write!(f, "power:{a}"),
            WeightSpec::Spike { x, y } => write!(f, "spike:{x},{y}"),
            WeightSpec::Lognormal { seed, sigma } => write!(f, "lognormal:seed={seed},sigma={sigma}"),
        }
    }
}

impl From<WeightSpec> for String {
    fn from(s: WeightSpec) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for WeightSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl WeightSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            WeightSpec::Constant(_) => "constant",
            WeightSpec::Checkerboard { .. } => "checkerboard",
            WeightSpec::Power { .. } => "power",
            WeightSpec::Spike { .. } => "spike",
            WeightSpec::Lognormal { .. } => "lognormal",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parse(m));
        match *self {
            WeightSpec::Constant(c) if !(c >= 0.0 && c.is_finite()) => bad(format!("constant weight {c}")),
            WeightSpec::Checkerboard { low, high } if !(low >= 0.0 && high >= 0.0 && high.is_finite()) => {
                bad(format!("checkerboard values {low}, {high}"))
            }
            WeightSpec::Power { a } if !(a > -2.0 && a.is_finite()) => {
                bad(format!("power exponent {a} must exceed -2"))
            }
            WeightSpec::Lognormal { sigma, .. } if !(sigma >= 0.0 && sigma.is_finite()) => {
                bad(format!("sigma {sigma}"))
            }
            _ => Ok(()),
        }
    }
}

fn check_cell(x: usize, y: usize, side: usize) -> Result<()> {
    if x < side && y < side {
        Ok(())
    } else {
        Err(Error::InvalidCell { x, y })
    }
}

fn lognormal_cells(side: usize, seed: u64, sigma: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    (0..side * side).map(|_| normal.sample(&mut rng).exp()).collect()
}

pub fn make_weight(spec: &WeightSpec, side: usize) -> Result<Grid2D<f64>> {
    spec.validate()?;
    match *spec {
        WeightSpec::Constant(c) => Grid2D::filled(side, c),
        WeightSpec::Checkerboard { low, high } => {
            Grid2D::from_fn(side, |x, y| if (x + y) % 2 == 0 { low } else { high })
        }
        WeightSpec::Power { a } => Grid2D::from_fn(side, |x, y| (x as f64 + 0.5).hypot(y as f64 + 0.5).powf(a)),
        WeightSpec::Spike { x, y } => {
            check_cell(x, y, side)?;
            Grid2D::from_fn(side, |i, j| if (i, j) == (x, y) { 1.0 } else { SPIKE_FLOOR })
        }
        WeightSpec::Lognormal { seed, sigma } => Grid2D::new(side, lognormal_cells(side, seed, sigma)),
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, a) = split_spec(s, |k| match k {
            "constant" => Some(&["value"]),
            "spike" => Some(&["x", "y", "height"]),
            "cross" => Some(&["x", "y"]),
            "disc" => Some(&["cx", "cy", "r"]),
            "lognormal" => Some(&["seed", "sigma"]),
            "sparse" => Some(&["seed", "density"]),
            _ => None,
        })?;
        let spec = match kind {
            "constant" => FunctionSpec::Constant(arg(&a, "value", Some(1.0))?),
            "spike" => FunctionSpec::Spike {
                x: arg(&a, "x", Some(0))?,
                y: arg(&a, "y", Some(0))?,
                height: arg(&a, "height", Some(1.0))?,
            },
            "cross" => FunctionSpec::Cross {
                x: arg(&a, "x", Some(0))?,
                y: arg(&a, "y", Some(0))?,
            },
            "disc" => FunctionSpec::Disc {
                cx: arg(&a, "cx", None)?,
                cy: arg(&a, "cy", None)?,
                r: arg(&a, "r", None)?,
            },
            "lognormal" => FunctionSpec::Lognormal {
                seed: arg(&a, "seed", None)?,
                sigma: arg(&a, "sigma", Some(1.0))?,
            },
            "sparse" => FunctionSpec::Sparse {
                seed: arg(&a, "seed", None)?,
                density: arg(&a, "density", Some(0.05))?,
            },
            _ => unreachable!(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Constant(c) => write!(f, "constant:{c}"),
            FunctionSpec::Spike { x, y, height } => write!(f, "spike:{x},{y},{height}"),
            FunctionSpec::Cross { x, y } => write!(f, "cross:{x},{y}"),
            FunctionSpec::Disc { cx, cy, r } => write!(f, "disc:{cx},{cy},{r}"),
            FunctionSpec::Lognormal { seed, sigma } => write!(f, "lognormal:seed={seed},sigma={sigma}"),
            FunctionSpec::Sparse { seed, density } => write!(f, "sparse:seed={seed},density={density}"),
        }
    }
}

impl From<FunctionSpec> for String {
    fn from(s: FunctionSpec) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for FunctionSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FunctionSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            FunctionSpec::Constant(_) => "constant",
            FunctionSpec::Spike { .. } => "spike",
            FunctionSpec::Cross { .. } => "cross",
            FunctionSpec::Disc { .. } => "disc",
            FunctionSpec::Lognormal { .. } => "lognormal",
            FunctionSpec::Sparse { .. } => "sparse",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parse(m));
        match *self {
            FunctionSpec::Constant(c) if !(c >= 0.0 && c.is_finite()) => bad(format!("constant {c}")),
            FunctionSpec::Spike { height, .. } if !(height >= 0.0 && height.is_finite()) => {
                bad(format!("height {height}"))
            }
            FunctionSpec::Disc { r, .. } if !(r >= 0.0 && r.is_finite()) => bad(format!("radius {r}")),
            FunctionSpec::Lognormal { sigma, .. } if !(sigma >= 0.0 && sigma.is_finite()) => {
                bad(format!("sigma {sigma}"))
            }
            FunctionSpec::Sparse { density, .. } if !(0.0..=1.0).contains(&density) => {
                bad(format!("density {density}"))
            }
            _ => Ok(()),
        }
    }
}

pub fn make_function(spec: &FunctionSpec, side: usize) -> Result<Grid2D<f64>> {
    spec.validate()?;
    match *spec {
        FunctionSpec::Constant(c) => Grid2D::filled(side, c),
        FunctionSpec::Spike { x, y, height } => {
            check_cell(x, y, side)?;
            Grid2D::from_fn(side, |i, j| if (i, j) == (x, y) { height } else { 0.0 })
        }
        FunctionSpec::Cross { x, y } => {
            check_cell(x, y, side)?;
            Grid2D::from_fn(side, |i, j| if i == x || j == y { 1.0 } else { 0.0 })
        }
        FunctionSpec::Disc { cx, cy, r } => Grid2D::from_fn(side, |i, j| {
            if (i as f64 + 0.5 - cx).hypot(j as f64 + 0.5 - cy) <= r {
                1.0
            } else {
                0.0
            }
        }),
        FunctionSpec::Lognormal { seed, sigma } => Grid2D::new(side, lognormal_cells(side, seed, sigma)),
        FunctionSpec::Sparse { seed, density } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Grid2D::from_fn(side, |_, _| {
                if rng.gen_bool(density) {
                    1.0 - rng.gen::<f64>()
                } else {
                    0.0
                }
            })
        }
    }
}
