use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use maxlab_core::grid::{Exact, Grid2D, Scalar};
use maxlab_core::io::{grid_from_csv, round_sig};
use maxlab_core::reference::hl_maximal_brute;
use serde_json::Value;

fn maxlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxlab"))
        .args(args)
        .env_remove("SOURCE_DATE_EPOCH")
        .env("MAXLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_fs_writes_one_summary_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxlab(&[
        "verify",
        "fs",
        "--trials",
        "10",
        "--grid",
        "32",
        "--seed",
        "1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("fs_summary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("tag,side,seed,p,N,trial,worst_ratio,mean_ratio,trials")
    );
    assert_eq!(lines.count(), 10);
    let jsonl = fs::read_to_string(dir.path().join("fs.jsonl")).unwrap();
    for line in jsonl.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["tag"], "FS-classical");
        assert_eq!(v["seed"], 1);
        assert!(v["timestamp"].is_null());
    }
}

#[test]
fn source_date_epoch_stamps_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_maxlab"))
        .args([
            "verify",
            "thm12",
            "--trials",
            "1",
            "--grid",
            "8",
            "--seed",
            "4",
            "--out-dir",
            s(dir.path()),
        ])
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let jsonl = fs::read_to_string(dir.path().join("thm12.jsonl")).unwrap();
    let v: Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(v["timestamp"], "2023-11-14T22:13:20Z");
}

#[test]
fn thm14_with_too_few_directions_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxlab(&[
        "verify",
        "thm14",
        "--N",
        "8",
        "--seed",
        "1",
        "--trials",
        "1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceed 10"));
}

#[test]
fn unknown_tag_and_missing_seed_exit_2() {
    assert_eq!(code(&maxlab(&["verify", "thm99", "--seed", "1"])), 2);
    assert_eq!(code(&maxlab(&["verify", "fs", "--trials", "1"])), 2);
    assert_eq!(code(&maxlab(&["sweep-n", "--Ns", "16"])), 2);
    assert_eq!(code(&maxlab(&["search-p11", "--budget", "3"])), 2);
    assert_eq!(code(&maxlab(&["covering", "--mode", "dyadic", "--random", "5"])), 2);
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(code(&maxlab(&["--help"])), 0);
    assert_eq!(code(&maxlab(&["--version"])), 0);
    assert_eq!(code(&maxlab(&[])), 2);
}

#[test]
fn sweep_n_reports_one_point_per_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxlab(&[
        "verify",
        "sweep-n",
        "--Ns",
        "16,32,64,128",
        "--trials",
        "2",
        "--grid",
        "8",
        "--seed",
        "5",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep_n.json")).unwrap()).unwrap();
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 4);
    let ns: Vec<u64> = points.iter().map(|p| p["N"].as_u64().unwrap()).collect();
    assert_eq!(ns, [16, 32, 64, 128]);
    for key in ["slope", "intercept", "r_squared", "trials", "seed", "grid_side"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    // The sweep-n subcommand prints the same document.
    let out2 = maxlab(&[
        "sweep-n",
        "--Ns",
        "16,32,64,128",
        "--trials",
        "2",
        "--grid",
        "8",
        "--seed",
        "5",
    ]);
    let v2: Value = serde_json::from_slice(&out2.stdout).unwrap();
    assert_eq!(v, v2);
}

#[test]
fn baselines_round_trip_and_catch_regressions() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("baselines.json");
    let args = |extra: &[&'static str]| {
        let mut v = vec![
            "verify", "cor13", "--trials", "3", "--grid", "8", "--seed", "6", "--p", "2",
        ];
        v.extend_from_slice(extra);
        v
    };
    let out_dir = dir.path().join("o");
    let mut first = args(&["--write-baselines"]);
    first.extend(["--baselines", s(&base), "--out-dir", s(&out_dir)]);
    assert_eq!(code(&maxlab(&first)), 0);
    let mut again = args(&[]);
    again.extend(["--baselines", s(&base), "--out-dir", s(&out_dir)]);
    assert_eq!(code(&maxlab(&again)), 0);

    // Lower the recorded worst ratio: the rerun now regresses.
    let mut b: Value = serde_json::from_str(&fs::read_to_string(&base).unwrap()).unwrap();
    let worst = b["suites"][0]["worst_ratio"].as_f64().unwrap();
    b["suites"][0]["worst_ratio"] = serde_json::json!(worst - 1e-6);
    fs::write(&base, serde_json::to_string(&b).unwrap()).unwrap();
    let out = maxlab(&again);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds baseline"));
}

#[test]
fn covering_disjoint_family_passes() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    fs::write(
        &fam,
        r#"{"side": 16, "rects": [
            {"x0": 0, "x1": 8, "y0": 0, "y1": 2},
            {"x0": 8, "x1": 16, "y0": 8, "y1": 12},
            {"x0": 0, "x1": 4, "y0": 12, "y1": 16}
        ]}"#,
    )
    .unwrap();
    let out = maxlab(&["covering", "--mode", "dyadic", "--family", s(&fam), "--check", "all"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["selection"]["selected"].as_array().unwrap().len(), 3);
    assert_eq!(v["checks"].as_array().unwrap().len(), 4);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn covering_random_family_is_byte_identical_on_rerun() {
    let run = || {
        maxlab(&[
            "covering", "--mode", "dyadic", "--random", "60", "--grid", "32", "--seed", "7",
        ])
    };
    let (a, b) = (run(), run());
    assert_eq!(code(&a), 0);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let c = maxlab(&[
        "covering", "--mode", "dyadic", "--random", "60", "--grid", "32", "--seed", "8",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn covering_mixed_orientation_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    fs::write(
        &fam,
        r#"{"side": 16, "rects": [{"x0": 0, "x1": 8, "y0": 0, "y1": 2}, {"x0": 8, "x1": 10, "y0": 0, "y1": 8}]}"#,
    )
    .unwrap();
    let out = maxlab(&["covering", "--mode", "dyadic", "--family", s(&fam)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("long side"));
}

#[test]
fn covering_malformed_family_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    fs::write(&fam, "{\"side\": 16, \"rects\": [").unwrap();
    assert_eq!(code(&maxlab(&["covering", "--mode", "dyadic", "--family", s(&fam)])), 2);
    assert_eq!(
        code(&maxlab(&["covering", "--mode", "directional", "--family", s(&fam)])),
        2
    );
}

#[test]
fn covering_directional_family_reports_constant() {
    let out = maxlab(&[
        "covering",
        "--mode",
        "directional",
        "--random",
        "25",
        "--grid",
        "32",
        "--N",
        "16",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mode"], "directional");
    assert!(v["covering"]["min_mq_y"].as_f64().unwrap() > 0.0);
    assert_eq!(v["checks"][0]["check"], "sum-overlap-certificates");

    // Two rectangles more than pi/4 apart fail the sector precondition.
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    fs::write(
        &fam,
        r#"{"side": 32, "N": 16, "rects": [
            {"cx": 8, "cy": 8, "length": 8, "width": 1, "theta": 0},
            {"cx": 20, "cy": 20, "length": 8, "width": 1, "theta": 1.2}
        ]}"#,
    )
    .unwrap();
    assert_eq!(
        code(&maxlab(&["covering", "--mode", "directional", "--family", s(&fam)])),
        2
    );
}

#[test]
fn covering_lemma31_block_counts_instances() {
    let args = [
        "covering",
        "--mode",
        "directional",
        "--random",
        "10",
        "--grid",
        "32",
        "--N",
        "32",
        "--seed",
        "5",
        "--lemma31",
        "40",
    ];
    let out = maxlab(&args);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let block = &v["lemma31"];
    assert_eq!(block["instances"], 40);
    let (checked, not_met) = (
        block["checked"].as_u64().unwrap(),
        block["hypothesis_not_met"].as_u64().unwrap(),
    );
    assert_eq!(checked + not_met, 40);
    let failures = block["failures"].as_u64().unwrap();
    assert_eq!(code(&out), if failures == 0 { 0 } else { 1 });
    assert_eq!(v["passed"], failures == 0);
    assert_eq!(
        code(&maxlab(&[
            "covering",
            "--mode",
            "dyadic",
            "--random",
            "5",
            "--seed",
            "1",
            "--lemma31",
            "3"
        ])),
        2
    );
}

#[test]
fn compute_strong_on_constant_grid_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.csv");
    let m = dir.path().join("m.csv");
    let out = maxlab(&[
        "make-weight",
        "--weight",
        "constant:2.5",
        "--grid",
        "16",
        "--out",
        s(&g),
    ]);
    assert_eq!(code(&out), 0);
    let out = maxlab(&["compute", "--op", "strong", "--input", s(&g), "--out", s(&m)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let field = grid_from_csv(&fs::read_to_string(&m).unwrap()).unwrap();
    assert_eq!(field.operator.as_deref(), Some("strong"));
    assert!(field.grid.cells().iter().all(|&v| v == 2.5));
    assert!(String::from_utf8_lossy(&out.stdout).contains("min=2.5 max=2.5 mean=2.5"));
}

#[test]
fn compute_hl_dyadic_spike_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    let out = maxlab(&[
        "compute",
        "--op",
        "hl",
        "--dyadic",
        "--input",
        s(&golden("spike8.csv")),
        "--out",
        s(&m),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let expected = fs::read_to_string(golden("hl_dyadic_spike8.csv")).unwrap();
    assert_eq!(fs::read_to_string(&m).unwrap(), expected);
}

#[test]
fn golden_hl_dyadic_spike_equals_brute_force() {
    let input = grid_from_csv(&fs::read_to_string(golden("spike8.csv")).unwrap()).unwrap();
    let exact: Grid2D<Exact> =
        Grid2D::from_integers(8, &input.grid.cells().iter().map(|&v| v as i64).collect::<Vec<_>>()).unwrap();
    let brute = hl_maximal_brute(&exact, true);
    let golden = grid_from_csv(&fs::read_to_string(golden("hl_dyadic_spike8.csv")).unwrap()).unwrap();
    for (g, b) in golden.grid.cells().iter().zip(brute.cells()) {
        assert_eq!(*g, round_sig(b.to_f64()));
    }
}

#[test]
fn compute_exact_backend_agrees_with_double() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    assert_eq!(
        code(&maxlab(&[
            "make-weight",
            "--function",
            "disc:5,6,3",
            "--grid",
            "16",
            "--out",
            s(&g)
        ])),
        0
    );
    let read = |p: &Path| grid_from_csv(&fs::read_to_string(p).unwrap()).unwrap().grid;
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(
        code(&maxlab(&["compute", "--op", "w", "--input", s(&g), "--out", s(&a)])),
        0
    );
    assert_eq!(
        code(&maxlab(&[
            "compute",
            "--op",
            "w",
            "--input",
            s(&g),
            "--out",
            s(&b),
            "--backend",
            "exact"
        ])),
        0
    );
    assert_eq!(read(&a), read(&b));
    let c = dir.path().join("c.csv");
    let out = maxlab(&[
        "compute",
        "--op",
        "directional",
        "--input",
        s(&g),
        "--out",
        s(&c),
        "--backend",
        "exact",
        "--N",
        "16",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn compute_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let missing = dir.path().join("missing.csv");
    let r = maxlab(&["compute", "--op", "strong", "--input", s(&missing), "--out", s(&out)]);
    assert_eq!(code(&r), 2);
    assert!(!r.stderr.is_empty());
    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "1,2\n3\n").unwrap();
    assert_eq!(
        code(&maxlab(&[
            "compute",
            "--op",
            "strong",
            "--input",
            s(&ragged),
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(
        code(&maxlab(&[
            "compute",
            "--op",
            "directional",
            "--input",
            s(&golden("spike8.csv")),
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(
        code(&maxlab(&[
            "compute",
            "--op",
            "bogus",
            "--input",
            s(&missing),
            "--out",
            s(&out)
        ])),
        2
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# fs smoke run\ntrials = 4\ngrid = 8\nseed = 1\nout-dir = {}\n",
            s(dir.path())
        ),
    )
    .unwrap();
    let out = maxlab(&["verify", "fs", "--config", s(&cfg), "--trials", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("fs_summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(1).unwrap().starts_with("FS-classical,8,1,"));
    fs::write(&cfg, "trials\n").unwrap();
    assert_eq!(code(&maxlab(&["verify", "fs", "--config", s(&cfg)])), 2);
}

#[test]
fn search_is_reproducible_and_saves_grids() {
    let dir = tempfile::tempdir().unwrap();
    let run = |form: &'static str| {
        maxlab(&[
            "search-p11",
            "--budget",
            "40",
            "--seed",
            "9",
            "--grid",
            "8",
            "--form",
            form,
        ])
    };
    let (a, b) = (run("strong"), run("strong"));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["best"]["tag"], "Problem1.1-ratio");
    assert_eq!(v["best"]["params"]["form"], "strong");
    assert_eq!(v["evaluations"], 40);
    let weak: Value = serde_json::from_slice(&run("weak").stdout).unwrap();
    assert_eq!(weak["best"]["params"]["form"], "weak");

    let grids = dir.path().join("grids");
    let out = maxlab(&[
        "search-p11",
        "--budget",
        "40",
        "--seed",
        "9",
        "--grid",
        "8",
        "--save-grids",
        s(&grids),
    ]);
    assert_eq!(code(&out), 0);
    for name in ["f.csv", "w.csv"] {
        let g = grid_from_csv(&fs::read_to_string(grids.join(name)).unwrap()).unwrap();
        assert_eq!(g.grid.side(), 8);
    }
}

#[test]
fn make_weight_writes_specs_and_apstar() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    let out = maxlab(&[
        "make-weight",
        "--weight",
        "lognormal:seed=42,sigma=1.5",
        "--grid",
        "8",
        "--out",
        s(&w),
        "--apstar",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let est: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(est["p"], 2.0);
    assert!(est["value"].as_f64().unwrap() >= 1.0);
    let file: Value = serde_json::from_str(&fs::read_to_string(&w).unwrap()).unwrap();
    assert_eq!(file["side"], 8);
    assert_eq!(code(&maxlab(&["make-weight", "--weight", "nope:1", "--out", s(&w)])), 2);
    assert_eq!(
        code(&maxlab(&[
            "make-weight",
            "--weight",
            "constant:1",
            "--grid",
            "12",
            "--out",
            s(&w)
        ])),
        2
    );
    assert_eq!(code(&maxlab(&["make-weight", "--out", s(&w)])), 2);
}

#[test]
fn thread_cap_must_be_an_integer() {
    let out = Command::new(env!("CARGO_BIN_EXE_maxlab"))
        .args(["search-p11", "--budget", "2", "--seed", "1", "--grid", "4"])
        .env("MAXLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
