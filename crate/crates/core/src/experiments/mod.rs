//! Two-sided evaluation of the weighted maximal inequalities on grids.
//!
//! Each `verify_*` function computes both sides of one inequality for one
//! `(f, w)` pair and records `lhs / rhs`. Worst ratios over the pinned
//! suites in [`suite`] are empirical lower bounds on the constants; nothing
//! here proves an upper bound.

pub mod search;
pub mod suite;
pub mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::directional::{directional_maximal, DirectionalConfig};
use crate::directions::DirectionSet;
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::maximal::{compose_w, compose_w_directional, hl_maximal, strong_maximal};
use crate::weights::{llogl_functional, lp_norm, superlevel_measure};

pub use search::{problem11_ratio_search, Problem11Form, SearchResult};
pub use suite::{
    run_directional_suites, run_suite, trial_instance, Baselines, SuiteBaseline, SuiteConfig, SuiteOutput, SummaryRow,
};
pub use sweep::{sweep_directions, SweepBaseline, SweepPoint, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "FS-classical")]
    FsClassical,
    #[serde(rename = "Thm1.2")]
    Thm12,
    #[serde(rename = "Cor1.3")]
    Cor13,
    #[serde(rename = "Thm1.4")]
    Thm14,
    #[serde(rename = "Cor1.5")]
    Cor15,
    #[serde(rename = "Problem1.1-ratio")]
    Problem11,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::FsClassical => "FS-classical",
            Tag::Thm12 => "Thm1.2",
            Tag::Cor13 => "Cor1.3",
            Tag::Thm14 => "Thm1.4",
            Tag::Cor15 => "Cor1.5",
            Tag::Problem11 => "Problem1.1-ratio",
        }
    }

    /// Short command-line name.
    pub fn short(self) -> &'static str {
        match self {
            Tag::FsClassical => "fs",
            Tag::Thm12 => "thm12",
            Tag::Cor13 => "cor13",
            Tag::Thm14 => "thm14",
            Tag::Cor15 => "cor15",
            Tag::Problem11 => "p11",
        }
    }

    /// Weak-type reports carry a threshold `t`.
    pub fn is_weak(self) -> bool {
        matches!(self, Tag::FsClassical | Tag::Thm12 | Tag::Thm14)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Tag::FsClassical,
            Tag::Thm12,
            Tag::Cor13,
            Tag::Thm14,
            Tag::Cor15,
            Tag::Problem11,
        ]
        .into_iter()
        .find(|t| t.short() == s || t.as_str() == s)
        .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "crate::io::extended_f64_opt"
    )]
    pub t: Option<f64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "crate::io::extended_f64_opt"
    )]
    pub p: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_directions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    /// `ratio^2 / ln N`, recorded for the directional weak-type report.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "crate::io::extended_f64_opt"
    )]
    pub ratio_sq_over_log_n: Option<f64>,
    /// `strong` or `weak` for Problem 1.1 search reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub tag: Tag,
    pub params: ReportParams,
    #[serde(with = "crate::io::extended_f64")]
    pub lhs: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub rhs: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub ratio: f64,
    pub seed: Option<u64>,
    pub grid_side: usize,
    pub timestamp: Option<String>,
}

impl InequalityReport {
    pub fn new(tag: Tag, params: ReportParams, lhs: f64, rhs: f64, grid_side: usize) -> Self {
        Self {
            tag,
            params,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            seed: None,
            grid_side,
            timestamp: None,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// `lhs / rhs` with `0 / 0 = 0` and `x / 0 = inf` for `x > 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(t))
    }
}

fn check_p(p: f64, min: f64) -> Result<()> {
    if p > min && p.is_finite() {
        Ok(())
    } else {
        Err(Error::UnsupportedExponent(p))
    }
}

fn check_pair(f: &Grid2D<f64>, w: &Grid2D<f64>) -> Result<()> {
    if f.side() == w.side() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "grid sides differ: {} and {}",
            f.side(),
            w.side()
        )))
    }
}

fn params_t(t: f64) -> ReportParams {
    ReportParams {
        t: Some(t),
        ..Default::default()
    }
}

fn params_p(p: f64) -> ReportParams {
    ReportParams {
        p: Some(p),
        ..Default::default()
    }
}

/// `t w({M_Q f > t})` against `sum f M_Q w`, given `M_Q f` and `M_Q w`.
pub(crate) fn fs_report(
    f: &Grid2D<f64>,
    w: &Grid2D<f64>,
    mq_f: &Grid2D<f64>,
    mq_w: &Grid2D<f64>,
    t: f64,
) -> InequalityReport {
    let lhs = t * superlevel_measure(mq_f, w, t);
    let rhs = f.cells().iter().zip(mq_w.cells()).map(|(a, b)| a * b).sum();
    InequalityReport::new(Tag::FsClassical, params_t(t), lhs, rhs, f.side())
}

pub(crate) fn thm12_report(
    f: &Grid2D<f64>,
    w: &Grid2D<f64>,
    mr_f: &Grid2D<f64>,
    big_w: &Grid2D<f64>,
    t: f64,
) -> Result<InequalityReport> {
    let lhs = superlevel_measure(mr_f, w, t);
    let rhs = llogl_functional(f, big_w, t)?;
    Ok(InequalityReport::new(Tag::Thm12, params_t(t), lhs, rhs, f.side()))
}

pub(crate) fn cor13_report(
    f: &Grid2D<f64>,
    w: &Grid2D<f64>,
    mr_f: &Grid2D<f64>,
    big_w: &Grid2D<f64>,
    p: f64,
) -> Result<InequalityReport> {
    check_p(p, 1.0)?;
    let lhs = lp_norm(mr_f, w, p)?;
    let rhs = lp_norm(f, big_w, p)?;
    Ok(InequalityReport::new(Tag::Cor13, params_p(p), lhs, rhs, f.side()))
}

pub(crate) fn thm14_report(
    f: &Grid2D<f64>,
    w: &Grid2D<f64>,
    ms_f: &Grid2D<f64>,
    big_w: &Grid2D<f64>,
    t: f64,
    n: usize,
) -> Result<InequalityReport> {
    let lhs = t * superlevel_measure(ms_f, w, t).sqrt();
    let rhs = lp_norm(f, big_w, 2.0)?;
    let mut params = params_t(t);
    params.n_directions = Some(n);
    let mut rep = InequalityReport::new(Tag::Thm14, params, lhs, rhs, f.side());
    rep.params.ratio_sq_over_log_n = Some(rep.ratio * rep.ratio / (n as f64).ln());
    Ok(rep)
}

pub(crate) fn cor15_report(
    f: &Grid2D<f64>,
    w: &Grid2D<f64>,
    ms_f: &Grid2D<f64>,
    big_w: &Grid2D<f64>,
    p: f64,
    n: usize,
) -> Result<InequalityReport> {
    check_p(p, 2.0)?;
    let lhs = lp_norm(ms_f, w, p)?;
    let rhs = (n as f64).ln().powf(1.0 / p) * lp_norm(f, big_w, p)?;
    let mut params = params_p(p);
    params.n_directions = Some(n);
    Ok(InequalityReport::new(Tag::Cor15, params, lhs, rhs, f.side()))
}

/// Weighted Fefferman–Stein weak-type inequality for the cube maximal
/// operator.
pub fn verify_fs_classical(f: &Grid2D<f64>, w: &Grid2D<f64>, t: f64) -> Result<InequalityReport> {
    check_t(t)?;
    check_pair(f, w)?;
    let mq_f = hl_maximal(f, false).into_values();
    let mq_w = hl_maximal(w, false).into_values();
    Ok(fs_report(f, w, &mq_f, &mq_w, t))
}

/// `w({M_R f > t})` against the `L log L` functional with `W = M_R(M_Q w)`.
pub fn verify_thm12(f: &Grid2D<f64>, w: &Grid2D<f64>, t: f64) -> Result<InequalityReport> {
    check_t(t)?;
    check_pair(f, w)?;
    let mr_f = strong_maximal(f).into_values();
    let big_w = compose_w(w).into_values();
    thm12_report(f, w, &mr_f, &big_w, t)
}

/// `||M_R f||_{L^p(w)}` against `||f||_{L^p(W)}`, `p > 1`.
pub fn verify_cor13(f: &Grid2D<f64>, w: &Grid2D<f64>, p: f64) -> Result<InequalityReport> {
    check_p(p, 1.0)?;
    check_pair(f, w)?;
    let mr_f = strong_maximal(f).into_values();
    let big_w = compose_w(w).into_values();
    cor13_report(f, w, &mr_f, &big_w, p)
}

/// Directional fields `M_Sigma f` and `W = M_Sigma(M_Q w)` with the default
/// discretization for the grid side.
pub(crate) fn directional_fields(f: &Grid2D<f64>, w: &Grid2D<f64>, n: usize) -> Result<(Grid2D<f64>, Grid2D<f64>)> {
    let dirs = DirectionSet::uniform(n)?;
    let cfg = DirectionalConfig::default_for(f.side());
    let ms_f = directional_maximal(f, &dirs, &cfg)?.into_values();
    let big_w = compose_w_directional(w, &dirs, &cfg)?.into_values();
    Ok((ms_f, big_w))
}

/// `t w({M_Sigma f > t})^(1/2)` against `||f||_{L^2(W)}`, `N > 10`.
pub fn verify_thm14(f: &Grid2D<f64>, w: &Grid2D<f64>, t: f64, n: usize) -> Result<InequalityReport> {
    check_t(t)?;
    check_pair(f, w)?;
    let (ms_f, big_w) = directional_fields(f, w, n)?;
    thm14_report(f, w, &ms_f, &big_w, t, n)
}

/// `||M_Sigma f||_{L^p(w)}` against `(ln N)^(1/p) ||f||_{L^p(W)}`, `p > 2`,
/// `N > 10`.
pub fn verify_cor15(f: &Grid2D<f64>, w: &Grid2D<f64>, p: f64, n: usize) -> Result<InequalityReport> {
    check_p(p, 2.0)?;
    check_pair(f, w)?;
    let (ms_f, big_w) = directional_fields(f, w, n)?;
    cor15_report(f, w, &ms_f, &big_w, p, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{make_function, make_weight, FunctionSpec, WeightSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ones(side: usize) -> Grid2D<f64> {
        Grid2D::filled(side, 1.0).unwrap()
    }

    /// Agreement to 12 significant digits.
    fn sig12(a: f64, b: f64) {
        assert_relative_eq!(a, b, max_relative = 5e-12);
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
        assert_eq!(ratio(1.0, 4.0), 0.25);
        let rep = InequalityReport::new(Tag::FsClassical, ReportParams::default(), 1.0, 0.0, 4);
        assert!(rep.to_json_line().contains(r#""ratio":"inf""#));
    }

    #[test]
    fn constant_spot_values() {
        let (f, w) = (ones(8), ones(8));
        let fs = verify_fs_classical(&f, &w, 0.5).unwrap();
        assert_eq!((fs.lhs, fs.rhs, fs.ratio), (32.0, 64.0, 0.5));
        let t12 = verify_thm12(&f, &w, 0.5).unwrap();
        assert_eq!(t12.lhs, 64.0);
        sig12(t12.rhs, 2.0 * (1.0 + 2f64.ln()) * 64.0);
        sig12(t12.ratio, 1.0 / (2.0 * (1.0 + 2f64.ln())));
        for p in [1.5, 2.0, 4.0] {
            sig12(verify_cor13(&f, &w, p).unwrap().ratio, 1.0);
        }
        for n in [16, 64] {
            let t14 = verify_thm14(&f, &w, 0.5, n).unwrap();
            sig12(t14.lhs, 4.0);
            sig12(t14.rhs, 8.0);
            sig12(t14.ratio, 0.5);
            sig12(t14.params.ratio_sq_over_log_n.unwrap(), 0.25 / (n as f64).ln());
            for p in [3.0, 4.0] {
                sig12(
                    verify_cor15(&f, &w, p, n).unwrap().ratio,
                    1.0 / (n as f64).ln().powf(1.0 / p),
                );
            }
        }
    }

    #[test]
    fn zero_function_gives_zero_ratio() {
        let (f, w) = (Grid2D::zeros(8).unwrap(), ones(8));
        assert_eq!(verify_fs_classical(&f, &w, 1.0).unwrap().ratio, 0.0);
        assert_eq!(verify_thm12(&f, &w, 1.0).unwrap().ratio, 0.0);
        assert_eq!(verify_cor13(&f, &w, 2.0).unwrap().ratio, 0.0);
        assert_eq!(verify_thm14(&f, &w, 1.0, 16).unwrap().ratio, 0.0);
        assert_eq!(verify_cor15(&f, &w, 3.0, 16).unwrap().ratio, 0.0);
    }

    #[test]
    fn preconditions() {
        let g = ones(4);
        assert!(matches!(
            verify_fs_classical(&g, &g, 0.0),
            Err(Error::InvalidThreshold(_))
        ));
        assert!(matches!(verify_thm12(&g, &g, -1.0), Err(Error::InvalidThreshold(_))));
        assert!(matches!(verify_cor13(&g, &g, 1.0), Err(Error::UnsupportedExponent(_))));
        assert!(matches!(
            verify_cor15(&g, &g, 2.0, 16),
            Err(Error::UnsupportedExponent(_))
        ));
        assert!(matches!(verify_thm14(&g, &g, 1.0, 8), Err(Error::Precondition(_))));
        assert!(matches!(verify_cor15(&g, &g, 3.0, 10), Err(Error::Precondition(_))));
        assert!(verify_fs_classical(&g, &ones(8), 1.0).is_err());
    }

    #[test]
    fn report_schema() {
        let rep = verify_thm14(&ones(4), &ones(4), 0.5, 16).unwrap();
        let line = rep.to_json_line();
        let positions: Vec<usize> = ["tag", "params", "lhs", "rhs", "ratio", "seed", "grid_side", "timestamp"]
            .iter()
            .map(|k| line.find(&format!("\"{k}\":")).unwrap())
            .collect();
        assert!(positions.windows(2).all(|p| p[0] < p[1]), "{line}");
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["tag"], "Thm1.4");
        assert_eq!(v["params"]["N"], 16);
        assert_eq!(v["params"]["t"], 0.5);
        assert!(v["timestamp"].is_null());
        let back: InequalityReport = serde_json::from_value(v).unwrap();
        assert_eq!(back.params.n_directions, Some(16));
    }

    #[test]
    fn tags_parse_both_spellings() {
        assert_eq!("fs".parse::<Tag>().unwrap(), Tag::FsClassical);
        assert_eq!("Cor1.5".parse::<Tag>().unwrap(), Tag::Cor15);
        assert!("thm99".parse::<Tag>().is_err());
    }

    #[test]
    fn cross_function_with_spike_weight() {
        let f = make_function(&FunctionSpec::Cross { x: 3, y: 5 }, 16).unwrap();
        let w = make_weight(&WeightSpec::Spike { x: 10, y: 10 }, 16).unwrap();
        let t12 = verify_thm12(&f, &w, 0.25).unwrap();
        assert!(t12.ratio.is_finite() && t12.ratio > 0.0);
        // Same lhs against the M_R w right-hand side: the ratio is larger.
        let mr_w = strong_maximal(&w).into_values();
        let p11 = ratio(t12.lhs, llogl_functional(&f, &mr_w, 0.25).unwrap());
        assert!(p11 >= t12.ratio);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn weak_lhs_shrinks_with_t(vals in prop::collection::vec(0.0f64..4.0, 64), ws in prop::collection::vec(0.01f64..4.0, 64), t in 0.05f64..3.0, dt in 0.0f64..1.0) {
            let f = Grid2D::new(8, vals).unwrap();
            let w = Grid2D::new(8, ws).unwrap();
            let (a, b) = (verify_thm12(&f, &w, t).unwrap(), verify_thm12(&f, &w, t + dt).unwrap());
            prop_assert!(b.lhs <= a.lhs);
            let (a, b) = (verify_fs_classical(&f, &w, t).unwrap(), verify_fs_classical(&f, &w, t + dt).unwrap());
            prop_assert!(b.lhs / (t + dt) <= a.lhs / t + 1e-12);
        }

        #[test]
        fn strong_lhs_dominates_cube_lhs(vals in prop::collection::vec(0.0f64..4.0, 64), ws in prop::collection::vec(0.01f64..4.0, 64), t in 0.05f64..3.0) {
            let f = Grid2D::new(8, vals).unwrap();
            let w = Grid2D::new(8, ws).unwrap();
            // Same averages reach the two operators by different float
            // routes, so ties at `t` get a relative slack.
            let mq = hl_maximal(&f, false).into_values();
            let mr = strong_maximal(&f).into_values();
            let fs = verify_fs_classical(&f, &w, t).unwrap();
            prop_assert_eq!(fs.lhs, t * superlevel_measure(&mq, &w, t));
            prop_assert!(superlevel_measure(&mr, &w, t * (1.0 - 1e-12)) >= superlevel_measure(&mq, &w, t));
        }

        #[test]
        fn thm12_ratio_below_problem11_ratio(vals in prop::collection::vec(0.0f64..1.0, 64), ws in prop::collection::vec(0.01f64..4.0, 64), t in 1.0f64..3.0) {
            // f / t <= 1 everywhere.
            let f = Grid2D::new(8, vals).unwrap();
            let w = Grid2D::new(8, ws).unwrap();
            let t12 = verify_thm12(&f, &w, t).unwrap();
            let mr_w = strong_maximal(&w).into_values();
            let rhs: f64 = f.cells().iter().zip(mr_w.cells()).map(|(a, b)| a / t * b).sum();
            prop_assert!(t12.ratio <= ratio(t12.lhs, rhs) + 1e-12);
        }
    }
}
