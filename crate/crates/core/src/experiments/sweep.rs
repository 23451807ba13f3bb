//! Growth of the directional weak-type ratio with the number of directions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::suite::{trial_instance, BASELINE_TOL, T_LEVELS};
use super::{directional_fields, thm14_report};
use crate::directions::DirectionSet;
use crate::error::{Error, Result};
use crate::grid::is_power_of_two;
use crate::io::{format_num, round_sig};
use crate::zoo::{make_function, make_weight};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    #[serde(rename = "N")]
    pub n_directions: usize,
    #[serde(with = "crate::io::extended_f64")]
    pub log_n: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub worst_ratio: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub worst_ratio_sq: f64,
    /// `worst_ratio / (ln N)^(1/2)`.
    #[serde(with = "crate::io::extended_f64")]
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `worst_ratio^2` against `ln N`; absent with
    /// fewer than two points.
    #[serde(with = "crate::io::extended_f64_opt")]
    pub slope: Option<f64>,
    #[serde(with = "crate::io::extended_f64_opt")]
    pub intercept: Option<f64>,
    /// Coefficient of determination; absent when the fit is undefined or
    /// the values are all equal.
    #[serde(with = "crate::io::extended_f64_opt")]
    pub r_squared: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub grid_side: usize,
}

impl SweepResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sweep serializes")
    }

    pub fn max_normalized(&self) -> f64 {
        self.points.iter().map(|p| p.normalized).fold(0.0, f64::max)
    }
}

/// `(slope, intercept, r_squared)` of the least-squares line through
/// `(x, y)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return (None, None, None);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return (None, None, None);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    (Some(slope), Some(intercept), r2)
}

/// Worst Thm 1.4 ratio over `trials` shared trials for each `N` (sorted,
/// deduplicated) and the fit of its square against `ln N`.
pub fn sweep_directions(ns: &[usize], trials: u64, seed: u64, side: usize) -> Result<SweepResult> {
    if ns.is_empty() {
        return Err(Error::Precondition("empty list of direction counts".into()));
    }
    if trials == 0 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    if !is_power_of_two(side) {
        return Err(Error::NotPowerOfTwo(side));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        DirectionSet::uniform(n)?;
    }
    let mut points = Vec::with_capacity(ns.len());
    for &n in &ns {
        let worst = (0..trials)
            .into_par_iter()
            .map(|trial| -> Result<f64> {
                let (wspec, fspec) = trial_instance(seed, trial, side);
                let f = make_function(&fspec, side)?;
                let w = make_weight(&wspec, side)?;
                let (ms_f, big_w) = directional_fields(&f, &w, n)?;
                let top = match f.max_value() {
                    m if m > 0.0 => m,
                    _ => 1.0,
                };
                let mut worst = 0.0f64;
                for k in 1..=T_LEVELS {
                    worst = worst.max(thm14_report(&f, &w, &ms_f, &big_w, top * 2f64.powi(-k), n)?.ratio);
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let log_n = (n as f64).ln();
        points.push(SweepPoint {
            n_directions: n,
            log_n,
            worst_ratio: worst,
            worst_ratio_sq: worst * worst,
            normalized: worst / log_n.sqrt(),
        });
    }
    let x: Vec<f64> = points.iter().map(|p| p.log_n).collect();
    let y: Vec<f64> = points.iter().map(|p| p.worst_ratio_sq).collect();
    let (slope, intercept, r_squared) = least_squares(&x, &y);
    Ok(SweepResult {
        points,
        slope,
        intercept,
        r_squared,
        trials,
        seed,
        grid_side: side,
    })
}

/// Recorded constant bounding `worst_ratio / (ln N)^(1/2)` for a pinned sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBaseline {
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub grid_side: usize,
    #[serde(with = "crate::io::extended_f64")]
    pub normalized_constant: f64,
}

impl SweepBaseline {
    pub fn of(result: &SweepResult) -> Self {
        Self {
            ns: result.points.iter().map(|p| p.n_directions).collect(),
            trials: result.trials,
            seed: result.seed,
            grid_side: result.grid_side,
            normalized_constant: round_sig(result.max_normalized()),
        }
    }

    pub fn matches(&self, result: &SweepResult) -> bool {
        let other = Self::of(result);
        (&self.ns, self.trials, self.seed, self.grid_side) == (&other.ns, other.trials, other.seed, other.grid_side)
    }

    /// A message per point whose normalized ratio exceeds the constant.
    pub fn check(&self, result: &SweepResult) -> Vec<String> {
        result
            .points
            .iter()
            .filter(|p| {
                let v = round_sig(p.normalized);
                v.is_nan() || v > self.normalized_constant + BASELINE_TOL
            })
            .map(|p| {
                format!(
                    "N={}: worst/(ln N)^(1/2) = {} exceeds {}",
                    p.n_directions,
                    format_num(p.normalized),
                    format_num(self.normalized_constant)
                )
            })
            .collect()
    }
}

impl super::Baselines {
    pub fn record_sweep(&mut self, result: &SweepResult) {
        self.sweeps.retain(|b| !b.matches(result));
        self.sweeps.push(SweepBaseline::of(result));
    }

    pub fn sweep_for(&self, result: &SweepResult) -> Option<&SweepBaseline> {
        self.sweeps.iter().find(|b| b.matches(result))
    }
}
