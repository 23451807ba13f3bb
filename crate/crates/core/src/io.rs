//! Grid files and number formatting.
//!
//! CSV grids carry `# key=value` metadata lines followed by one line per
//! row, row `y = 0` first. JSON grids are `{side, cells, operator, params}`
//! with `cells` in row-major order. Every number written is rounded to 12
//! significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::grid::Grid2D;

pub const SIG_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// Shortest decimal for the 12-digit rounding, `inf` / `-inf` / `nan` otherwise.
pub fn format_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        let r = round_sig(x);
        if r == 0.0 {
            "0".into()
        } else if (1e-6..1e16).contains(&r.abs()) {
            format!("{r}")
        } else {
            format!("{r:e}")
        }
    }
}

pub fn parse_num(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| Error::Parse(format!("not a number: {t:?}"))),
    }
}

/// JSON value for a number: rounded, with infinities as the strings
/// `"inf"` / `"-inf"`.
pub fn json_num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
    } else {
        Value::String(format_num(x))
    }
}

/// Serde adapter for fields that may be infinite.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::json_num(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| serde::de::Error::custom("bad number")),
            serde_json::Value::String(s) => super::parse_num(&s).map_err(serde::de::Error::custom),
            other => Err(serde::de::Error::custom(format!("expected a number, got {other}"))),
        }
    }
}

/// Serde adapter for optional fields that may be infinite.
pub mod extended_f64_opt {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        x.map(super::json_num).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<serde_json::Value>::deserialize(d)? {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(serde_json::Value::Number(n)) => Ok(n.as_f64()),
            Some(serde_json::Value::String(s)) => super::parse_num(&s).map(Some).map_err(serde::de::Error::custom),
            Some(other) => Err(serde::de::Error::custom(format!("expected a number, got {other}"))),
        }
    }
}

/// Grid plus free-form metadata as read from or written to a file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub grid: Grid2D<f64>,
    pub operator: Option<String>,
    pub params: BTreeMap<String, String>,
}

impl GridFile {
    pub fn new(grid: Grid2D<f64>) -> Self {
        Self {
            grid,
            operator: None,
            params: BTreeMap::new(),
        }
    }
}

pub fn grid_to_csv(file: &GridFile) -> String {
    let n = file.grid.side();
    let mut out = String::new();
    writeln!(out, "# side={n}").unwrap();
    if let Some(op) = &file.operator {
        writeln!(out, "# operator={op}").unwrap();
    }
    for (k, v) in &file.params {
        writeln!(out, "# {k}={v}").unwrap();
    }
    for y in 0..n {
        let row: Vec<String> = (0..n).map(|x| format_num(*file.grid.get(x, y))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn grid_from_csv(text: &str) -> Result<GridFile> {
    let mut params = BTreeMap::new();
    let mut operator = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.trim().split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "operator" => operator = Some(v.to_string()),
                    "side" => {}
                    _ => {
                        params.insert(k.to_string(), v.to_string());
                    }
                }
            }
            continue;
        }
        let row = line.split(',').map(parse_num).collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if let Some((y, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Parse(format!("row {y} has {} values, expected {n}", r.len())));
    }
    let grid = Grid2D::new(n, rows.into_iter().flatten().collect())?;
    Ok(GridFile { grid, operator, params })
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    side: usize,
    cells: Vec<Value>,
    #[serde(default)]
    operator: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, Value>,
}

pub fn grid_to_json(file: &GridFile) -> String {
    let doc = GridJson {
        side: file.grid.side(),
        cells: file.grid.cells().iter().map(|v| json_num(*v)).collect(),
        operator: file.operator.clone(),
        params: file
            .params
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect(),
    };
    serde_json::to_string(&doc).expect("grid serializes")
}

pub fn grid_from_json(text: &str) -> Result<GridFile> {
    let doc: GridJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let cells = doc
        .cells
        .iter()
        .map(|v| match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse("bad number".into())),
            Value::String(s) => parse_num(s),
            other => Err(Error::Parse(format!("bad cell value {other}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let params = doc
        .params
        .into_iter()
        .map(|(k, v)| {
            let s = match v {
                Value::String(s) => s,
                other => other.to_string(),
            };
            (k, s)
        })
        .collect();
    Ok(GridFile {
        grid: Grid2D::new(doc.side, cells)?,
        operator: doc.operator,
        params,
    })
}
