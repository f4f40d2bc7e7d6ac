use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use deltacut::formats;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltacut"))
        .args(args)
        .output()
        .unwrap()
}

fn run_g0(args: &[&str]) -> Output {
    let g = fixture("g0.json");
    let mut all = vec!["--geometry", g.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn numbers(s: &str) -> Vec<f64> {
    s.split_whitespace().map(|t| t.parse().unwrap()).collect()
}

#[test]
fn ik_examples() {
    let o = run_g0(&["ik", "0", "0", "-272.2130"]);
    assert_eq!(o.status.code(), Some(0));
    for v in numbers(&stdout(&o)) {
        assert!(v.abs() < 1e-5, "{v}");
    }

    let o = run_g0(&["ik", "0", "0", "-350"]);
    let v = numbers(&stdout(&o));
    assert_eq!(v.len(), 3);
    for t in v {
        assert!((t - 0.456_158_488_402_905_9).abs() < 1e-15);
    }

    let o = run_g0(&["ik", "0", "0", "-1000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
    let msg = stderr(&o);
    assert!(
        msg.contains("Unreachable") && msg.contains("arm 1"),
        "{msg}"
    );
}

#[test]
fn fk_examples() {
    let o = run_g0(&["fk", "0", "0", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let p = numbers(&stdout(&o));
    assert!(p[0].abs() < 1e-9 && p[1].abs() < 1e-9);
    assert!(stdout(&o).trim_end().ends_with(" -272.21315177632397"));

    let t = "0.45615848840290592";
    let p = numbers(&stdout(&run_g0(&["fk", t, t, t])));
    assert!(p[0].abs() < 1e-9 && p[1].abs() < 1e-9 && (p[2] + 350.0).abs() < 1e-9);

    let o = run_g0(&["fk", "0", "0.1x", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).is_empty());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["ik", "0", "0", "-300"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    let bad = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(bad.path(), r#"{"f": 10, "e": 10, "rf": 150, "re": 100}"#).unwrap();
    let o = run(&[
        "--geometry",
        bad.path().to_str().unwrap(),
        "ik",
        "0",
        "0",
        "-300",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("re > |a + rf - b|"), "{}", stderr(&o));
}

#[test]
fn help_documents_units_and_defaults() {
    let top = stdout(&run(&["--help"]));
    assert!(top.contains("mm") && top.contains("rad") && top.contains("s."));
    let plan = stdout(&run(&["plan", "--help"]));
    for d in [
        "mm/s",
        "mm/s²",
        "[default: 1000]",
        "[default: 23000]",
        "[default: 0.0025]",
    ] {
        assert!(plan.contains(d), "missing {d}");
    }
    let ws = stdout(&run(&["workspace", "--help"]));
    assert!(ws.contains("mm") && ws.contains("[default: 10]"));
    let opt = stdout(&run(&["optimize", "--help"]));
    assert!(opt.contains("population_size 50") && opt.contains("seed 42"));
    let sim = stdout(&run(&["simulate", "--help"]));
    assert!(sim.contains("timeout 4 ticks"));
    for c in ["ik", "fk"] {
        let h = stdout(&run(&[c, "--help"]));
        assert!(h.contains("mm") && h.contains("rad"));
    }
}

#[test]
fn workspace_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.txt");
    let o = run_g0(&[
        "workspace",
        "--min=-300,-300,-550",
        "--max=300,300,-50",
        "--resolution=10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let grid = formats::parse_grid(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(grid.occupied_count(), 83_276);
    assert!(stderr(&o).contains("83276 occupied"));

    let text = stdout(&run_g0(&[
        "workspace",
        "--min=-50,-50,50",
        "--max=50,50,100",
    ]));
    assert_eq!(formats::parse_grid(&text).unwrap().occupied_count(), 0);

    let text = stdout(&run_g0(&[
        "workspace",
        "--min=-5,-5,-277.2",
        "--max=5,5,-267.2",
    ]));
    let g = formats::parse_grid(&text).unwrap();
    assert_eq!(g.spec().cell_count(), 1);
    assert_eq!(g.occupied_count(), 1);

    let o = run_g0(&["workspace", "--resolution=0"]);
    assert_eq!(o.status.code(), Some(2));
}

fn optimize(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "optimize".to_string(),
        format!("--bounds={}", fixture("bounds.json").display()),
        format!(
            "--prescribed={}",
            fixture("small_prescribed.json").display()
        ),
        format!("--out={}", out.display()),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&args)
}

#[test]
fn optimize_examples() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert!(
        optimize(&a, &["--generations=5", "--population=12", "--seed=7"])
            .status
            .success()
    );
    assert!(
        optimize(&b, &["--generations=5", "--population=12", "--seed=7"])
            .status
            .success()
    );
    let ra = std::fs::read(&a).unwrap();
    assert_eq!(ra, std::fs::read(&b).unwrap());
    let report = formats::parse_ga_report(std::str::from_utf8(&ra).unwrap()).unwrap();
    assert_eq!(report.config.seed, 7);
    assert_eq!(report.config.population_size, 12);
    assert_eq!(report.history.len(), 6);
    assert_eq!(report.evaluations, 12 + 5 * 11);

    let c = dir.path().join("c.json");
    assert!(optimize(&c, &["--generations=0", "--population=8"])
        .status
        .success());
    let report = formats::parse_ga_report(&std::fs::read_to_string(&c).unwrap()).unwrap();
    assert_eq!(report.history.len(), 1);
    assert_eq!(report.best_fitness, report.history[0].best);
    assert_eq!(report.config.seed, 42);

    // (0, 0, -1000) is in the set and out of reach for every design in the bounds.
    let o = optimize(
        &c,
        &["--generations=0", "--population=8", "--min-coverage=0.99"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("CoverageShortfall"));
    assert!(c.exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"population_size": 6, "generations": 2, "seed": 3}"#,
    )
    .unwrap();
    let out = dir.path().join("r.json");
    let o = optimize(&out, &[&format!("--config={}", cfg.display()), "--seed=9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = formats::parse_ga_report(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(
        (
            r.config.population_size,
            r.config.generations,
            r.config.seed
        ),
        (6, 2, 9)
    );
    assert_eq!(r.config.tournament_size, 3);

    std::fs::write(&cfg, r#"{"population_size": 1}"#).unwrap();
    let o = optimize(&out, &[&format!("--config={}", cfg.display())]);
    assert_eq!(o.status.code(), Some(2));
}

fn plan(program: &str) -> Output {
    run_g0(&["plan", "--program", fixture(program).to_str().unwrap()])
}

#[test]
fn plan_examples() {
    let o = plan("line_100.json");
    assert_eq!(o.status.code(), Some(0));
    let s = formats::parse_stream(&stdout(&o)).unwrap();
    assert_eq!(s.len(), 59);
    let end = s.samples().last().unwrap().pose;
    assert!((end.x - 50.0).abs() < 1e-6 && end.y.abs() < 1e-6 && (end.z + 300.0).abs() < 1e-6);
    assert!(stdout(&o).starts_with("t,x,y,z,theta1,theta2,theta3,laser\n"));
    assert!(!stdout(&o).contains('\r'));

    let o = plan("outside.json");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("UnreachableSample"), "{}", stderr(&o));

    let s = formats::parse_stream(&stdout(&plan("circle_50.json"))).unwrap();
    let (first, last) = (s.samples()[0].pose, s.samples().last().unwrap().pose);
    assert!(first.max_abs_diff(&last) < 1e-6);
}

fn simulate(stream: &str, extra: &[&str]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_deltacut"))
        .arg("simulate")
        .args(extra)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stream.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn simulate_examples() {
    let stream = stdout(&plan("line_100.json"));
    let golden = |name| std::fs::read_to_string(fixture(name)).unwrap();

    let o = simulate(&stream, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("nominal.trace"));

    let faults = fixture("motion_dropout.json");
    let o = simulate(&stream, &["--faults", faults.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), golden("motion_dropout.trace"));

    let faults = fixture("logging_gap.json");
    let cfg = fixture("watchdog.json");
    let o = simulate(
        &stream,
        &[
            "--faults",
            faults.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("nominal.trace"));

    // with timeout 1 the same gap trips the advisory process, and the run still completes
    let o = simulate(
        &stream,
        &["--faults", faults.to_str().unwrap(), "--timeout", "1"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("watchdog_trip\tlogging"));

    let o = simulate("t,x\n", &[]);
    assert_eq!(o.status.code(), Some(2));
}
