//! Seed-pinned randomized suites, their summaries and golden baselines.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    cor13_report, cor15_report, directional_fields, fs_report, thm12_report, thm14_report, InequalityReport, Tag,
};
use crate::directions::DirectionSet;
use crate::error::{Error, Result};
use crate::grid::{is_power_of_two, Grid2D};
use crate::io::{format_num, round_sig};
use crate::maximal::{compose_w, hl_maximal, strong_maximal};
use crate::weights::{llogl_functional, superlevel_measure};
use crate::zoo::{make_function, make_weight, FunctionSpec, WeightSpec};

/// Thresholds per weak-type trial: `max(f) 2^-k` for `k = 1..=T_LEVELS`.
pub const T_LEVELS: i32 = 4;
/// Allowed upward drift of a worst ratio against its baseline.
pub const BASELINE_TOL: f64 = 1e-9;

/// Weight and function of one trial, drawn from stream `trial` of the suite
/// seed.
///
/// Float parameters are rounded to 12 significant digits so the spec
/// strings recorded in reports rebuild the same grids.
pub fn trial_instance(seed: u64, trial: u64, side: usize) -> (WeightSpec, FunctionSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let n = side as f64;
    let weight = match rng.gen_range(0..5) {
        0 => WeightSpec::Constant(1.0),
        1 => WeightSpec::Checkerboard {
            low: 1.0,
            high: round_sig(rng.gen_range(1.0..16.0)),
        },
        2 => WeightSpec::Power {
            a: round_sig(rng.gen_range(-1.9..3.0)),
        },
        3 => WeightSpec::Spike {
            x: rng.gen_range(0..side),
            y: rng.gen_range(0..side),
        },
        _ => WeightSpec::Lognormal {
            seed: rng.gen(),
            sigma: round_sig(rng.gen_range(0.5..2.5)),
        },
    };
    let function = match rng.gen_range(0..5) {
        0 => FunctionSpec::Spike {
            x: rng.gen_range(0..side),
            y: rng.gen_range(0..side),
            height: 1.0,
        },
        1 => FunctionSpec::Cross {
            x: rng.gen_range(0..side),
            y: rng.gen_range(0..side),
        },
        2 => FunctionSpec::Disc {
            cx: round_sig(rng.gen_range(0.0..n)),
            cy: round_sig(rng.gen_range(0.0..n)),
            r: round_sig(rng.gen_range(0.5..(n / 4.0).max(1.0))),
        },
        3 => FunctionSpec::Lognormal {
            seed: rng.gen(),
            sigma: round_sig(rng.gen_range(0.5..2.5)),
        },
        _ => FunctionSpec::Sparse {
            seed: rng.gen(),
            density: round_sig(rng.gen_range(0.01..0.3)),
        },
    };
    (weight, function)
}

fn t_levels(f: &Grid2D<f64>) -> Vec<f64> {
    let top = match f.max_value() {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    (1..=T_LEVELS).map(|k| top * 2f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub tag: Tag,
    pub trials: u64,
    pub side: usize,
    pub seed: u64,
    /// Exponents, for the strong-type suites.
    pub ps: Vec<f64>,
    /// Direction counts, for the directional suites.
    pub ns: Vec<usize>,
}

impl SuiteConfig {
    /// Default exponents and direction counts for the tag.
    pub fn new(tag: Tag, trials: u64, side: usize, seed: u64) -> Self {
        let ps = match tag {
            Tag::Cor13 => vec![1.5, 2.0, 4.0],
            Tag::Cor15 => vec![3.0, 4.0],
            _ => vec![],
        };
        let ns = match tag {
            Tag::Thm14 | Tag::Cor15 => vec![16, 64],
            _ => vec![],
        };
        Self {
            tag,
            trials,
            side,
            seed,
            ps,
            ns,
        }
    }

    /// The regression suite: 1000 trials on side 32 with a fixed seed per
    /// tag. The two directional suites share a seed so their fields can be
    /// computed once.
    pub fn pinned(tag: Tag) -> Self {
        let seed = match tag {
            Tag::FsClassical => 1001,
            Tag::Thm12 => 1002,
            Tag::Cor13 => 1003,
            Tag::Thm14 | Tag::Cor15 => 1004,
            Tag::Problem11 => 1011,
        };
        Self::new(tag, 1000, 32, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tag == Tag::Problem11 {
            return Err(Error::Precondition("Problem 1.1 has a search, not a suite".into()));
        }
        if !is_power_of_two(self.side) {
            return Err(Error::NotPowerOfTwo(self.side));
        }
        if self.trials == 0 {
            return Err(Error::Precondition("at least one trial is required".into()));
        }
        let min_p = match self.tag {
            Tag::Cor13 => Some(1.0),
            Tag::Cor15 => Some(2.0),
            _ => None,
        };
        if let Some(min) = min_p {
            if self.ps.is_empty() {
                return Err(Error::Precondition(format!("{} needs at least one exponent", self.tag)));
            }
            if let Some(&p) = self.ps.iter().find(|p| !(**p > min && p.is_finite())) {
                return Err(Error::UnsupportedExponent(p));
            }
        }
        if matches!(self.tag, Tag::Thm14 | Tag::Cor15) {
            if self.ns.is_empty() {
                return Err(Error::Precondition(format!(
                    "{} needs at least one direction count",
                    self.tag
                )));
            }
            for &n in &self.ns {
                DirectionSet::uniform(n)?;
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct TrialOutput {
    reports: Vec<InequalityReport>,
    violations: Vec<String>,
}

impl TrialOutput {
    fn push(&mut self, mut rep: InequalityReport, seed: u64, trial: u64, w: &WeightSpec, f: &FunctionSpec) {
        if !(rep.lhs >= 0.0 && rep.rhs >= 0.0 && rep.lhs.is_finite() && rep.rhs.is_finite() && !rep.ratio.is_nan()) {
            self.violations.push(format!(
                "trial {trial}: {} sides lhs={} rhs={}",
                rep.tag, rep.lhs, rep.rhs
            ));
        }
        rep.seed = Some(seed);
        rep.params.trial = Some(trial);
        rep.params.weight = Some(w.to_string());
        rep.params.function = Some(f.to_string());
        self.reports.push(rep);
    }

    /// Superlevel measures must not grow with `t` (levels in decreasing `t`).
    fn check_monotone(&mut self, trial: u64, what: &str, measures: &[f64]) {
        if measures.windows(2).any(|m| m[0] > m[1]) {
            self.violations.push(format!(
                "trial {trial}: {what} superlevel measure grows with t: {measures:?}"
            ));
        }
    }
}

struct Instance {
    seed: u64,
    trial: u64,
    wspec: WeightSpec,
    fspec: FunctionSpec,
    f: Grid2D<f64>,
    w: Grid2D<f64>,
    levels: Vec<f64>,
}

impl Instance {
    fn new(seed: u64, trial: u64, side: usize) -> Result<Self> {
        let (wspec, fspec) = trial_instance(seed, trial, side);
        let f = make_function(&fspec, side)?;
        let w = make_weight(&wspec, side)?;
        let levels = t_levels(&f);
        Ok(Self {
            seed,
            trial,
            wspec,
            fspec,
            f,
            w,
            levels,
        })
    }

    fn push(&self, out: &mut TrialOutput, rep: InequalityReport) {
        out.push(rep, self.seed, self.trial, &self.wspec, &self.fspec);
    }
}

fn axis_trial(tag: Tag, cfg: &SuiteConfig, trial: u64) -> Result<TrialOutput> {
    let inst = Instance::new(cfg.seed, trial, cfg.side)?;
    let (f, w) = (&inst.f, &inst.w);
    let mut out = TrialOutput::default();
    match tag {
        Tag::FsClassical => {
            let mq_f = hl_maximal(f, false).into_values();
            let mq_w = hl_maximal(w, false).into_values();
            let mut measures = Vec::new();
            for &t in &inst.levels {
                measures.push(superlevel_measure(&mq_f, w, t));
                inst.push(&mut out, fs_report(f, w, &mq_f, &mq_w, t));
            }
            out.check_monotone(trial, "cube", &measures);
        }
        Tag::Thm12 => {
            let mr_f = strong_maximal(f).into_values();
            let mq_f = hl_maximal(f, false).into_values();
            let mr_w = strong_maximal(w).into_values();
            let big_w = compose_w(w).into_values();
            let mut measures = Vec::new();
            for &t in &inst.levels {
                let rep = thm12_report(f, w, &mr_f, &big_w, t)?;
                // Rectangles contain the squares, and W dominates M_R w.
                if superlevel_measure(&mr_f, w, t * (1.0 - 1e-12)) < superlevel_measure(&mq_f, w, t) {
                    out.violations
                        .push(format!("trial {trial}: M_R superlevel below M_Q at t={t}"));
                }
                let p11_rhs = llogl_functional(f, &mr_w, t)?;
                if rep.rhs < p11_rhs * (1.0 - 1e-12) {
                    out.violations.push(format!(
                        "trial {trial}: W right-hand side {} below M_R w one {p11_rhs}",
                        rep.rhs
                    ));
                }
                measures.push(rep.lhs);
                inst.push(&mut out, rep);
            }
            out.check_monotone(trial, "rectangle", &measures);
        }
        Tag::Cor13 => {
            let mr_f = strong_maximal(f).into_values();
            let big_w = compose_w(w).into_values();
            for &p in &cfg.ps {
                inst.push(&mut out, cor13_report(f, w, &mr_f, &big_w, p)?);
            }
        }
        _ => unreachable!("directional tags are handled separately"),
    }
    Ok(out)
}

/// Thm 1.4 reports (when `weak`) and Cor 1.5 reports for `ps` from one pair
/// of directional fields per direction count.
fn directional_trial(cfg: &SuiteConfig, trial: u64, weak: bool, ps: &[f64]) -> Result<(TrialOutput, TrialOutput)> {
    let inst = Instance::new(cfg.seed, trial, cfg.side)?;
    let (f, w) = (&inst.f, &inst.w);
    let (mut t14, mut c15) = (TrialOutput::default(), TrialOutput::default());
    for &n in &cfg.ns {
        let (ms_f, big_w) = directional_fields(f, w, n)?;
        if weak {
            let mut measures = Vec::new();
            for &t in &inst.levels {
                measures.push(superlevel_measure(&ms_f, w, t));
                inst.push(&mut t14, thm14_report(f, w, &ms_f, &big_w, t, n)?);
            }
            t14.check_monotone(trial, &format!("directional({n})"), &measures);
        }
        for &p in ps {
            inst.push(&mut c15, cor15_report(f, w, &ms_f, &big_w, p, n)?);
        }
    }
    Ok((t14, c15))
}

fn collect(config: SuiteConfig, outputs: Vec<TrialOutput>) -> SuiteOutput {
    let mut reports = Vec::new();
    let mut violations = Vec::new();
    for o in outputs {
        reports.extend(o.reports);
        violations.extend(o.violations);
    }
    SuiteOutput {
        config,
        reports,
        violations,
    }
}

/// Runs every trial of one suite in parallel; results are ordered by trial.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutput> {
    cfg.validate()?;
    let outputs = match cfg.tag {
        Tag::Thm14 | Tag::Cor15 => {
            let weak = cfg.tag == Tag::Thm14;
            let ps: &[f64] = if weak { &[] } else { &cfg.ps };
            (0..cfg.trials)
                .into_par_iter()
                .map(|trial| directional_trial(cfg, trial, weak, ps).map(|(a, b)| if weak { a } else { b }))
                .collect::<Result<Vec<_>>>()?
        }
        tag => (0..cfg.trials)
            .into_par_iter()
            .map(|trial| axis_trial(tag, cfg, trial))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(collect(cfg.clone(), outputs))
}

/// Thm 1.4 and Cor 1.5 suites over the same trials, sharing the directional
/// fields. The configs must agree on seed, side, trials and direction
/// counts.
pub fn run_directional_suites(thm14: &SuiteConfig, cor15: &SuiteConfig) -> Result<(SuiteOutput, SuiteOutput)> {
    thm14.validate()?;
    cor15.validate()?;
    if thm14.tag != Tag::Thm14 || cor15.tag != Tag::Cor15 {
        return Err(Error::Precondition("expected a Thm1.4 and a Cor1.5 suite".into()));
    }
    let shared = (thm14.seed, thm14.side, thm14.trials, &thm14.ns) == (cor15.seed, cor15.side, cor15.trials, &cor15.ns);
    if !shared {
        return Err(Error::Precondition(
            "directional suites differ in seed, side, trials or N".into(),
        ));
    }
    let pairs = (0..thm14.trials)
        .into_par_iter()
        .map(|trial| directional_trial(thm14, trial, true, &cor15.ps))
        .collect::<Result<Vec<_>>>()?;
    let (a, b): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok((collect(thm14.clone(), a), collect(cor15.clone(), b)))
}

/// One summary line: running statistics of one `(p, N)` group over trials
/// `0..=trial`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub tag: Tag,
    pub side: usize,
    pub seed: u64,
    pub p: Option<f64>,
    #[serde(rename = "N")]
    pub n_directions: Option<usize>,
    pub trial: u64,
    /// Largest ratio over all reports of trials `0..=trial`.
    pub worst_ratio: f64,
    /// Mean ratio over the same reports.
    pub mean_ratio: f64,
    /// Trials aggregated, `trial + 1`.
    pub trials: u64,
}

pub const SUMMARY_HEADER: &str = "tag,side,seed,p,N,trial,worst_ratio,mean_ratio,trials";

impl SummaryRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.tag,
            self.side,
            self.seed,
            self.p.map(format_num).unwrap_or_default(),
            self.n_directions.map(|n| n.to_string()).unwrap_or_default(),
            self.trial,
            format_num(self.worst_ratio),
            format_num(self.mean_ratio),
            self.trials
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub config: SuiteConfig,
    /// All reports, ordered by trial.
    pub reports: Vec<InequalityReport>,
    /// Suite-internal invariant failures; empty on success.
    pub violations: Vec<String>,
}

fn group_key(r: &InequalityReport) -> (Option<u64>, Option<usize>) {
    (r.params.p.map(f64::to_bits), r.params.n_directions)
}

impl SuiteOutput {
    /// `(p, N)` groups in first-seen order.
    fn groups(&self) -> Vec<(Option<f64>, Option<usize>)> {
        let mut out: Vec<(Option<f64>, Option<usize>)> = Vec::new();
        for r in &self.reports {
            let key = (r.params.p, r.params.n_directions);
            if !out.iter().any(|k| (k.0.map(f64::to_bits), k.1) == group_key(r)) {
                out.push(key);
            }
        }
        out
    }

    /// One row per group and trial, group-major.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let cfg = &self.config;
        let mut rows = Vec::new();
        for (p, n) in self.groups() {
            let key = (p.map(f64::to_bits), n);
            let (mut worst, mut sum, mut count) = (0.0f64, 0.0, 0usize);
            let mut members = self.reports.iter().filter(|r| group_key(r) == key).peekable();
            for trial in 0..cfg.trials {
                while let Some(r) = members.next_if(|r| r.params.trial == Some(trial)) {
                    worst = worst.max(r.ratio);
                    sum += r.ratio;
                    count += 1;
                }
                rows.push(SummaryRow {
                    tag: cfg.tag,
                    side: cfg.side,
                    seed: cfg.seed,
                    p,
                    n_directions: n,
                    trial,
                    worst_ratio: worst,
                    mean_ratio: if count == 0 { 0.0 } else { sum / count as f64 },
                    trials: trial + 1,
                });
            }
        }
        rows
    }

    /// Final summary row of each group.
    pub fn worst(&self) -> Vec<SummaryRow> {
        self.summary()
            .into_iter()
            .filter(|r| r.trials == self.config.trials)
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&r.to_json_line());
            out.push('\n');
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{SUMMARY_HEADER}").unwrap();
        for row in self.summary() {
            writeln!(out, "{}", row.to_csv()).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteBaseline {
    pub tag: Tag,
    pub side: usize,
    pub seed: u64,
    pub trials: u64,
    #[serde(default, with = "crate::io::extended_f64_opt")]
    pub p: Option<f64>,
    #[serde(rename = "N", default)]
    pub n_directions: Option<usize>,
    #[serde(with = "crate::io::extended_f64")]
    pub worst_ratio: f64,
}

impl SuiteBaseline {
    fn matches(&self, row: &SummaryRow) -> bool {
        self.tag == row.tag
            && self.side == row.side
            && self.seed == row.seed
            && self.trials == row.trials
            && self.p.map(f64::to_bits) == row.p.map(f64::to_bits)
            && self.n_directions == row.n_directions
    }
}

/// Recorded worst ratios of pinned runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    #[serde(default)]
    pub suites: Vec<SuiteBaseline>,
    #[serde(default)]
    pub sweeps: Vec<super::SweepBaseline>,
}

impl Baselines {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("baselines: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("baselines serialize");
        s.push('\n');
        s
    }

    /// Replaces or adds the baselines of every group of `out`.
    pub fn record_suite(&mut self, out: &SuiteOutput) {
        for row in out.worst() {
            self.suites.retain(|b| !b.matches(&row));
            self.suites.push(SuiteBaseline {
                tag: row.tag,
                side: row.side,
                seed: row.seed,
                trials: row.trials,
                p: row.p,
                n_directions: row.n_directions,
                worst_ratio: round_sig(row.worst_ratio),
            });
        }
    }

    /// Number of groups with a baseline, and a message per regression.
    pub fn check_suite(&self, out: &SuiteOutput) -> (usize, Vec<String>) {
        let mut matched = 0;
        let mut regressions = Vec::new();
        for row in out.worst() {
            if let Some(b) = self.suites.iter().find(|b| b.matches(&row)) {
                matched += 1;
                let worst = round_sig(row.worst_ratio);
                if worst.is_nan() || worst > b.worst_ratio + BASELINE_TOL {
                    regressions.push(format!(
                        "{} p={:?} N={:?}: worst ratio {} exceeds baseline {}",
                        row.tag,
                        row.p,
                        row.n_directions,
                        format_num(worst),
                        format_num(b.worst_ratio)
                    ));
                }
            }
        }
        (matched, regressions)
    }
}
