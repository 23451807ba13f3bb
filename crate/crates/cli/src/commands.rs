use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use maxlab_core::covering::{
    check_covering_inclusion, check_directional_certificates, check_directional_covering, check_dyadic_certificates,
    check_lemma31, check_structure, multiplicity_bound_check, random_dyadic_family, random_lemma31_instance,
    random_sector_family, select_directional, select_dyadic, CheckReport, Lemma31Instance, Lemma31Outcome, Threshold,
};
use maxlab_core::directional::{directional_maximal, DirectionalConfig};
use maxlab_core::directions::{DirectionSet, SECTORS};
use maxlab_core::experiments::{
    problem11_ratio_search, sweep_directions, Baselines, InequalityReport, Problem11Form, SuiteConfig, SuiteOutput,
    SweepResult, Tag,
};
use maxlab_core::grid::{is_power_of_two, Exact, Grid2D, Scalar};
use maxlab_core::io::{format_num, grid_from_csv, grid_from_json, grid_to_csv, grid_to_json, json_num, GridFile};
use maxlab_core::maximal::{compose_w, compose_w_directional, hl_maximal, strong_maximal, MaximalField};
use maxlab_core::weights::apstar_constant;
use maxlab_core::zoo::{make_function, make_weight as build_weight, FunctionSpec, WeightSpec};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::family::{read_directional, read_dyadic, CellBounds};
use crate::{
    Backend, CheckKind, ComputeArgs, CoveringArgs, CoveringMode, Failure, Form, MakeWeightArgs, Op, SearchArgs,
    SweepArgs, VerifyArgs, VerifyTag,
};

type CmdResult = Result<(), Failure>;

/// Overlap threshold of the directional selection.
const DIRECTIONAL_THRESHOLD: f64 = 0.5;

fn require_seed(seed: Option<u64>, what: &str) -> anyhow::Result<u64> {
    seed.ok_or_else(|| anyhow!("{what} is randomized: --seed is required"))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn read_grid(path: &Path) -> anyhow::Result<GridFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if is_json(path) {
        grid_from_json(&text)
    } else {
        grid_from_csv(&text)
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_grid(path: &Path, file: &GridFile) -> anyhow::Result<()> {
    let text = if is_json(path) {
        grid_to_json(file)
    } else {
        grid_to_csv(file)
    };
    write_text(path, &text)
}

/// Writes to `out`, or to stdout when absent.
fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Every non-integer number rounded to 12 significant digits.
fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json_num(n.as_f64().expect("f64 number")),
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

fn pretty(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_floats(v)).expect("json serializes");
    s.push('\n');
    s
}

/// RFC 3339 time from `SOURCE_DATE_EPOCH`; reports stay timestamp-free
/// otherwise so reruns are byte-identical.
fn timestamp() -> anyhow::Result<Option<String>> {
    let Ok(raw) = std::env::var("SOURCE_DATE_EPOCH") else {
        return Ok(None);
    };
    let secs: i64 = raw
        .trim()
        .parse()
        .with_context(|| format!("SOURCE_DATE_EPOCH {raw:?}"))?;
    let t = chrono::DateTime::from_timestamp(secs, 0).ok_or_else(|| anyhow!("SOURCE_DATE_EPOCH out of range"))?;
    Ok(Some(t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)))
}

fn stamp(reports: &mut [InequalityReport]) -> anyhow::Result<()> {
    let ts = timestamp()?;
    for r in reports {
        r.timestamp.clone_from(&ts);
    }
    Ok(())
}

fn to_exact(g: &Grid2D<f64>) -> anyhow::Result<Grid2D<Exact>> {
    let cells = g
        .cells()
        .iter()
        .map(|&x| Ratio::<i128>::approximate_float(x).ok_or_else(|| anyhow!("{x} has no exact rational form")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(Grid2D::new(g.side(), cells)?)
}

fn field_to_file<T: Scalar>(field: MaximalField<T>) -> GridFile {
    let mut file = GridFile::new(field.values.to_f64());
    file.operator = Some(field.operator.name());
    if let Some(cfg) = &field.directional {
        let scales: Vec<String> = cfg
            .scales
            .pairs()
            .iter()
            .map(|(l, w)| format!("{}x{}", format_num(*l), format_num(*w)))
            .collect();
        file.params.insert("scales".into(), scales.join(" "));
    }
    file
}

pub fn compute(a: &ComputeArgs) -> CmdResult {
    if a.dyadic && a.op != Op::Hl {
        return Err(anyhow!("--dyadic applies to --op hl only").into());
    }
    let input = read_grid(&a.input)?;
    let g = &input.grid;
    let directions = || -> anyhow::Result<DirectionSet> {
        let n = a.n_directions.ok_or_else(|| anyhow!("--op {:?} needs --N", a.op))?;
        Ok(DirectionSet::uniform(n)?)
    };
    let mut out = match (a.backend, a.op) {
        (Backend::Double, Op::Hl) => field_to_file(hl_maximal(g, a.dyadic)),
        (Backend::Double, Op::Strong) => field_to_file(strong_maximal(g)),
        (Backend::Double, Op::W) => field_to_file(compose_w(g)),
        (Backend::Double, Op::Directional) => {
            let cfg = DirectionalConfig::default_for(g.side());
            field_to_file(directional_maximal(g, &directions()?, &cfg)?)
        }
        (Backend::Double, Op::WDirectional) => {
            let cfg = DirectionalConfig::default_for(g.side());
            field_to_file(compose_w_directional(g, &directions()?, &cfg)?)
        }
        (Backend::Exact, Op::Hl) => field_to_file(hl_maximal(&to_exact(g)?, a.dyadic)),
        (Backend::Exact, Op::Strong) => field_to_file(strong_maximal(&to_exact(g)?)),
        (Backend::Exact, Op::W) => field_to_file(compose_w(&to_exact(g)?)),
        (Backend::Exact, op) => return Err(anyhow!("--op {op:?} supports only the double backend").into()),
    };
    let backend = match a.backend {
        Backend::Double => "double",
        Backend::Exact => "exact",
    };
    out.params.insert("backend".into(), backend.into());
    if let Some(n) = a.n_directions {
        out.params.insert("N".into(), n.to_string());
    }
    write_grid(&a.out, &out)?;
    let v = &out.grid;
    println!(
        "{} side={} min={} max={} mean={}",
        out.operator.as_deref().unwrap_or(""),
        v.side(),
        format_num(v.min_value()),
        format_num(v.max_value()),
        format_num(v.mean())
    );
    Ok(())
}

fn wants(checks: &[CheckKind], kind: CheckKind) -> bool {
    checks.contains(&CheckKind::All) || checks.contains(&kind)
}

fn covering_dyadic(a: &CoveringArgs) -> anyhow::Result<(Value, Vec<CheckReport>)> {
    let (side, family) = match (&a.family, a.random) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            read_dyadic(&text)?
        }
        (None, Some(count)) => {
            let seed = require_seed(a.seed, "covering --random")?;
            if !is_power_of_two(a.grid) {
                bail!("--grid {} is not a power of two", a.grid);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (a.grid, random_dyadic_family(&mut rng, a.grid, count))
        }
        _ => bail!("give exactly one of --family or --random"),
    };
    let sel = select_dyadic(&family, side, Threshold::ONE_THIRD)?;
    let mut checks = Vec::new();
    if wants(&a.check, CheckKind::Certificates) {
        checks.push(check_dyadic_certificates(&sel));
    }
    if wants(&a.check, CheckKind::Inclusion) || wants(&a.check, CheckKind::Covering) {
        checks.push(check_covering_inclusion(&sel));
    }
    if wants(&a.check, CheckKind::Multiplicity) {
        checks.push(multiplicity_bound_check(&sel));
    }
    if wants(&a.check, CheckKind::Structure) {
        checks.push(check_structure(&sel));
    }
    let rects: Vec<CellBounds> = sel.input.iter().map(CellBounds::of).collect();
    let selection = json!({
        "side": side,
        "threshold": format!("{}/{}", sel.threshold.num, sel.threshold.den),
        "input": rects,
        "order": sel.order,
        "selected": sel.selected,
        "overlap_ratios": sel.trace.iter().map(|e| e.ratio()).collect::<Vec<_>>(),
        "trace": sel.trace,
    });
    Ok((selection, checks))
}

fn covering_directional(a: &CoveringArgs) -> anyhow::Result<(Value, Vec<CheckReport>, Option<Value>)> {
    let (side, n, family) = match (&a.family, a.random) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let f = read_directional(&text)?;
            (f.side, f.n_directions, f.rects)
        }
        (None, Some(count)) => {
            let seed = require_seed(a.seed, "covering --random")?;
            if !is_power_of_two(a.grid) {
                bail!("--grid {} is not a power of two", a.grid);
            }
            let dirs = DirectionSet::uniform(a.n_directions)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sector = rng.gen_range(0..SECTORS);
            (
                a.grid,
                a.n_directions,
                random_sector_family(&mut rng, &dirs, sector, a.grid, count),
            )
        }
        _ => bail!("give exactly one of --family or --random"),
    };
    if !is_power_of_two(side) {
        bail!("family side {side} is not a power of two");
    }
    DirectionSet::uniform(n)?;
    let sel = select_directional(&family, DIRECTIONAL_THRESHOLD)?;
    let mut checks = Vec::new();
    if wants(&a.check, CheckKind::Certificates) {
        checks.push(check_directional_certificates(&sel));
    }
    for kind in [CheckKind::Inclusion, CheckKind::Multiplicity, CheckKind::Structure] {
        if a.check.contains(&kind) {
            bail!("--check {kind:?} applies to dyadic families only");
        }
    }
    let covering = if wants(&a.check, CheckKind::Covering) {
        Some(serde_json::to_value(check_directional_covering(&sel, side, n)?)?)
    } else {
        None
    };
    let selection = json!({
        "side": side,
        "N": n,
        "threshold": sel.threshold,
        "input": sel.input,
        "order": sel.order,
        "selected": sel.selected,
        "overlap_ratios": sel.overlap_trace,
    });
    Ok((selection, checks, covering))
}

/// Runs the two-rectangle lemma on `count` generated instances.
fn lemma31_block(seed: u64, n: usize, count: usize) -> anyhow::Result<(Value, Vec<String>)> {
    // Separate stream from the family generator.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let (mut checked, mut not_met) = (0u64, 0u64);
    let mut failures: Vec<(Lemma31Instance, Lemma31Outcome)> = Vec::new();
    for _ in 0..count {
        let inst = random_lemma31_instance(&mut rng, n)?;
        let outcome = check_lemma31(&inst);
        match &outcome {
            Lemma31Outcome::HypothesisNotMet { .. } => not_met += 1,
            Lemma31Outcome::Checked { .. } => checked += 1,
        }
        if outcome.failed() {
            failures.push((inst, outcome));
        }
    }
    let messages = failures
        .iter()
        .map(|(inst, o)| match o {
            Lemma31Outcome::Checked { k, lhs, min_rhs, .. } => {
                format!(
                    "lemma31 N={} k={k}: lhs {} > 32 * rhs {}",
                    inst.n_directions,
                    format_num(*lhs),
                    format_num(*min_rhs)
                )
            }
            Lemma31Outcome::HypothesisNotMet { .. } => unreachable!("only checked outcomes fail"),
        })
        .collect();
    let block = json!({
        "instances": count,
        "checked": checked,
        "hypothesis_not_met": not_met,
        "failures": failures.len(),
        "first_failure": failures.first().map(|(i, o)| json!({"instance": i, "outcome": o})),
    });
    Ok((block, messages))
}

pub fn covering(a: &CoveringArgs) -> CmdResult {
    let (mode, selection, checks, covering) = match a.mode {
        CoveringMode::Dyadic => {
            if a.lemma31.is_some() {
                return Err(anyhow!("--lemma31 applies to directional mode").into());
            }
            let (s, c) = covering_dyadic(a)?;
            ("dyadic", s, c, None)
        }
        CoveringMode::Directional => {
            let (s, c, cov) = covering_directional(a)?;
            ("directional", s, c, cov)
        }
    };
    let mut failures: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| {
            format!(
                "{} check failed: {}",
                c.check,
                c.witness.as_ref().map(Value::to_string).unwrap_or_default()
            )
        })
        .collect();
    let lemma = match a.lemma31 {
        Some(count) => {
            let seed = require_seed(a.seed, "covering --lemma31")?;
            let n = selection["N"].as_u64().expect("directional selection records N") as usize;
            let (block, msgs) = lemma31_block(seed, n, count)?;
            failures.extend(msgs);
            Some(block)
        }
        None => None,
    };
    let report = json!({
        "mode": mode,
        "seed": a.seed,
        "selection": selection,
        "checks": checks,
        "covering": covering,
        "lemma31": lemma,
        "passed": failures.is_empty(),
    });
    emit(a.out.as_deref(), &pretty(report))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(failures))
    }
}

fn load_baselines(path: Option<&Path>) -> anyhow::Result<Option<Baselines>> {
    let Some(path) = path else { return Ok(None) };
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(Baselines::from_json(&text)?))
}

fn suite_tag(t: VerifyTag) -> Option<Tag> {
    match t {
        VerifyTag::Fs => Some(Tag::FsClassical),
        VerifyTag::Thm12 => Some(Tag::Thm12),
        VerifyTag::Cor13 => Some(Tag::Cor13),
        VerifyTag::Thm14 => Some(Tag::Thm14),
        VerifyTag::Cor15 => Some(Tag::Cor15),
        VerifyTag::SweepN => None,
    }
}

fn print_worst(out: &SuiteOutput) {
    for row in out.worst() {
        let mut label = String::new();
        if let Some(p) = row.p {
            label.push_str(&format!(" p={}", format_num(p)));
        }
        if let Some(n) = row.n_directions {
            label.push_str(&format!(" N={n}"));
        }
        println!(
            "{}{label}: worst ratio {} over {} trials",
            row.tag,
            format_num(row.worst_ratio),
            row.trials
        );
    }
}

pub fn verify(a: &VerifyArgs) -> CmdResult {
    let Some(tag) = suite_tag(a.tag) else {
        if a.p.is_some() || a.n_directions.is_some() {
            return Err(anyhow!("sweep-n takes --Ns, not --p or --N").into());
        }
        let ns = a.ns.clone().unwrap_or_else(|| vec![16, 32, 64, 128]);
        let result = run_sweep(&ns, a.trials.unwrap_or(50), a.grid, a.seed)?;
        let path = a.out_dir.join("sweep_n.json");
        write_text(&path, &format!("{}\n", result.to_json()))?;
        println!("{}", result.to_json());
        return sweep_baselines(&result, a.baselines.as_deref(), a.write_baselines);
    };
    if a.ns.is_some() {
        return Err(anyhow!("--Ns applies to sweep-n only").into());
    }
    let seed = require_seed(a.seed, "verify")?;
    let mut cfg = SuiteConfig::new(tag, a.trials.unwrap_or(1000), a.grid, seed);
    if let Some(ps) = &a.p {
        if !matches!(tag, Tag::Cor13 | Tag::Cor15) {
            return Err(anyhow!("--p applies to cor13 and cor15 only").into());
        }
        cfg.ps = ps.clone();
    }
    if let Some(ns) = &a.n_directions {
        if !matches!(tag, Tag::Thm14 | Tag::Cor15) {
            return Err(anyhow!("--N applies to thm14 and cor15 only").into());
        }
        cfg.ns = ns.clone();
    }
    cfg.validate()?;
    let baselines = load_baselines(a.baselines.as_deref())?;
    let mut out = maxlab_core::experiments::run_suite(&cfg)?;
    stamp(&mut out.reports)?;
    let short = tag.short();
    write_text(&a.out_dir.join(format!("{short}.jsonl")), &out.to_jsonl())?;
    write_text(&a.out_dir.join(format!("{short}_summary.csv")), &out.summary_csv())?;
    print_worst(&out);

    let mut failures = out.violations.clone();
    if let Some(b) = &baselines {
        let (matched, regressions) = b.check_suite(&out);
        eprintln!("{matched} baseline group(s) checked");
        failures.extend(regressions);
    }
    if a.write_baselines {
        let path = a.baselines.as_deref().expect("clap requires --baselines");
        let mut b = baselines.unwrap_or_default();
        b.record_suite(&out);
        write_text(path, &b.to_json())?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(failures))
    }
}

fn run_sweep(ns: &[usize], trials: u64, grid: usize, seed: Option<u64>) -> anyhow::Result<SweepResult> {
    let seed = require_seed(seed, "sweep-n")?;
    Ok(sweep_directions(ns, trials, seed, grid)?)
}

fn sweep_baselines(result: &SweepResult, path: Option<&Path>, write: bool) -> CmdResult {
    let baselines = load_baselines(path)?;
    let mut failures = Vec::new();
    if let Some(s) = result.slope.filter(|s| *s < 0.0) {
        eprintln!("note: worst ratio^2 decreases with ln N (slope {})", format_num(s));
    }
    if let Some(b) = baselines.as_ref().and_then(|b| b.sweep_for(result)) {
        failures.extend(b.check(result));
    }
    if write {
        let path = path.expect("clap requires --baselines");
        let mut b = baselines.unwrap_or_default();
        b.record_sweep(result);
        write_text(path, &b.to_json())?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(failures))
    }
}

pub fn sweep(a: &SweepArgs) -> CmdResult {
    let result = run_sweep(&a.ns, a.trials, a.grid, a.seed)?;
    emit(a.out.as_deref(), &format!("{}\n", result.to_json()))?;
    sweep_baselines(&result, a.baselines.as_deref(), a.write_baselines)
}

pub fn search(a: &SearchArgs) -> CmdResult {
    let seed = require_seed(a.seed, "search-p11")?;
    let form = match a.form {
        Form::Strong => Problem11Form::Strong,
        Form::Weak => Problem11Form::Weak,
    };
    let mut result = problem11_ratio_search(a.budget, seed, a.grid, form)?;
    stamp(std::slice::from_mut(&mut result.best))?;
    if let Some(dir) = &a.save_grids {
        for (name, g) in [("f.csv", &result.f), ("w.csv", &result.w)] {
            let mut file = GridFile::new(g.clone());
            file.params.insert("seed".into(), seed.to_string());
            file.params.insert("form".into(), form.to_string());
            write_grid(&dir.join(name), &file)?;
        }
    }
    let report = json!({
        "best": serde_json::to_value(&result.best)?,
        "evaluations": result.evaluations,
        "found_at": result.found_at,
    });
    emit(a.out.as_deref(), &pretty(report))?;
    Ok(())
}

pub fn make_weight(a: &MakeWeightArgs) -> CmdResult {
    let mut params = Vec::new();
    let grid = match (&a.weight, &a.function) {
        (Some(spec), None) => {
            let w: WeightSpec = spec.parse()?;
            params.push(("weight", w.to_string()));
            build_weight(&w, a.grid)?
        }
        (None, Some(spec)) => {
            if a.apstar.is_some() {
                return Err(anyhow!("--apstar needs a --weight").into());
            }
            let f: FunctionSpec = spec.parse()?;
            params.push(("function", f.to_string()));
            make_function(&f, a.grid)?
        }
        _ => return Err(anyhow!("give exactly one of --weight or --function").into()),
    };
    if a.dyadic && a.apstar.is_none() {
        return Err(anyhow!("--dyadic applies to --apstar only").into());
    }
    let estimate = a.apstar.map(|p| apstar_constant(&grid, p, a.dyadic)).transpose()?;
    let mut file = GridFile::new(grid);
    for (k, v) in params {
        file.params.insert(k.into(), v);
    }
    write_grid(&a.out, &file)?;
    if let Some(e) = estimate {
        println!("{}", serde_json::to_string(&e).map_err(anyhow::Error::from)?);
    }
    Ok(())
}
