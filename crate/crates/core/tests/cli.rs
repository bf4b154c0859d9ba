use std::process::{Command, Output};

use serde_json::Value;

fn arbor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arbor"))
        .args(args)
        .env("ARBOR_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn capacity_report_has_envelope() {
    let out = arbor(&["capacity", "--tree", "homogeneous:2", "--depth", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["arbor"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["command"], "capacity");
    let c = v["result"]["capacity"].as_f64().unwrap();
    assert!((c - 1024.0 / 2047.0).abs() < 1e-12);
}

#[test]
fn solvers_agree_through_the_cli() {
    let get = |solver: &str| {
        let out = arbor(&[
            "capacity",
            "--tree",
            "spherical:2,3",
            "--depth",
            "5",
            "--p",
            "3",
            "--set",
            "0,1.2",
            "--solver",
            solver,
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        json(&out)["result"]["capacity"].as_f64().unwrap()
    };
    let (a, b) = (get("recursive"), get("barrier"));
    assert!((a - b).abs() <= 1e-9 * a.max(1.0));
}

#[test]
fn runs_are_byte_identical() {
    let args = [
        "walk", "--tree", "dyadic", "--depth", "8", "--n", "20000", "--seed", "5",
    ];
    let a = arbor(&args);
    let b = arbor(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let mut one = Command::new(env!("CARGO_BIN_EXE_arbor"));
    let c = one.args(args).env("ARBOR_THREADS", "1").output().unwrap();
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["capacity", "--p", "1"],
        vec!["capacity", "--tree", "nonsense"],
        vec!["capacity", "--set", "7.7.7"],
        vec!["frobnicate"],
        vec!["dirichlet", "--boundary", "tent:x"],
    ] {
        let out = arbor(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn solver_failure_exits_with_one_and_reports() {
    let out = arbor(&[
        "dirichlet",
        "--tree",
        "dyadic",
        "--depth",
        "2",
        "--p",
        "3",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["status"], "error");
    assert_eq!(v["partial"]["solver"], "gauss-seidel");
    assert!(v["partial"]["upper"].as_f64().unwrap() < 1e-12);
}

#[test]
fn output_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = arbor(&[
        "sweep",
        "--tree",
        "dyadic",
        "--depths",
        "2..5",
        "--quantity",
        "capacity",
        "--format",
        "csv",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# arbor "));
    assert!(lines[1].starts_with("# config "));
    assert!(lines[2].starts_with("depth,"));
    assert_eq!(lines.len(), 3 + 4);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&path)
        .unwrap();
    let caps: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[2].parse().unwrap())
        .collect();
    assert!(caps.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn paper_example_reports_exact_checks() {
    let out = arbor(&["paper-example", "--spine-depth", "5", "--depth", "2"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = &json(&out)["result"];
    assert_eq!(r["forward_additive"], true);
    assert_eq!(r["off_spine_nonzero_potential"], 0);
    assert_eq!(r["partial_sums_increasing"], true);
    assert_eq!(r["gram_zero_is_zero"], true);
}

fn csv_column(out: &Output, name: &str) -> Vec<f64> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(out.stdout.as_slice());
    let col = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == name)
        .unwrap();
    rdr.records()
        .map(|r| r.unwrap()[col].parse().unwrap())
        .collect()
}

#[test]
fn walk_report_carries_the_triple() {
    let out = arbor(&[
        "walk",
        "--tree",
        "homogeneous:2",
        "--depth",
        "10",
        "--n",
        "100000",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    let exact = 1024.0 / 2047.0;
    assert!((r["capacity"].as_f64().unwrap() - exact).abs() < 1e-12);
    assert!((r["exact_escape"].as_f64().unwrap() - exact).abs() < 1e-12);
    let mc = r["mc_estimate"].as_f64().unwrap();
    assert!((mc - exact).abs() <= 3.0 * r["std_error"].as_f64().unwrap());
    assert_eq!(r["seed"], 7);
}

#[test]
fn sweeps_have_the_expected_trends() {
    let caps = csv_column(
        &arbor(&[
            "sweep",
            "--tree",
            "dyadic",
            "--depths",
            "2..12",
            "--quantity",
            "capacity",
            "--format",
            "csv",
        ]),
        "capacity",
    );
    assert_eq!(caps.len(), 11);
    assert!(caps.windows(2).all(|w| w[1] < w[0] && w[1] > 0.5));
    assert!(caps[10] - 0.5 < 1e-3);

    let eps = csv_column(
        &arbor(&[
            "sweep",
            "--tree",
            "dyadic",
            "--depths",
            "4..10",
            "--quantity",
            "deficit",
            "--format",
            "csv",
        ]),
        "epsilon",
    );
    assert!(eps.windows(2).all(|w| w[1] < w[0]));
    assert!(*eps.last().unwrap() < 1e-3);

    let sums = csv_column(
        &arbor(&[
            "sweep",
            "--tree",
            "counterexample",
            "--depths",
            "2..8",
            "--quantity",
            "spine",
            "--format",
            "csv",
        ]),
        "partial_sum",
    );
    assert!(sums.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn paper_example_at_full_size() {
    let out = arbor(&["paper-example", "--spine-depth", "8", "--depth", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    assert_eq!(r["forward_additive"], true);
    assert_eq!(r["off_spine_nonzero_potential"], 0);
    assert_eq!(r["partial_sums_increasing"], true);
}
