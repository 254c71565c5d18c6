use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use decon::formats;
use decon::trace_csv::read_trace_file;

fn decon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decon")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn single_run_with_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = decon(&[
        "run", "--topology", "line", "--n", "10", "--p", "5", "--mi", "1", "--algo", "nids", "--alpha", "0.99*nids",
        "--relax-factor", "0.332", "--certify", "--out", p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("audit pass"), "{}", text(&o.stdout));
    let t = read_trace_file(&out).unwrap();
    assert!(t.audit_columns);
    assert!(t.rows.last().unwrap().residual <= 1e-10);
    assert!(t.rows[1..].iter().all(|r| r.ratio.is_some() && r.slack.unwrap() >= -1e-8));
}

#[test]
fn bound_stepsize_has_no_certificate_but_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = decon(&[
        "run", "--topology", "line", "--n", "10", "--p", "5", "--mi", "1", "--algo", "nids", "--alpha", "nids",
        "--relax-factor", "0.332", "--certify", "--out", p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("no certificate"));
    assert!(!read_trace_file(&out).unwrap().audit_columns);
}

#[test]
fn scenario_output_is_byte_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let o = decon(&["run", "--scenario", "fig1", "--max-iters", "300", "--certify", "--out", p(d.path())]);
        assert_ne!(code(&o), 1, "{}", text(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    assert!(names.iter().any(|n| n == "nids-alpha4.csv"));
    for n in &names {
        let a = fs::read(dirs[0].path().join(n)).unwrap();
        let b = fs::read(dirs[1].path().join(n)).unwrap();
        assert_eq!(a, b, "{n:?} differs between runs");
    }
}

#[test]
fn divergence_exits_two() {
    let o = decon(&["run", "--algo", "dgd", "--alpha", "dgd-large", "--max-iters", "2000"]);
    assert_eq!(code(&o), 2, "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("diverged"));
    // the fig1 preset contains the divergent DGD 1/L curve
    let d = tempfile::tempdir().unwrap();
    let o = decon(&["run", "--scenario", "fig1", "--max-iters", "1000", "--out", p(d.path())]);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stdout).contains("DGD 1/L: diverged"));
}

#[test]
fn validate_mixing_accepts_and_rejects() {
    let d = tempfile::tempdir().unwrap();
    let g = d.path().join("g.txt");
    fs::write(&g, "0 1\n1 2\n2 3\n3 4\n4 0\n0 2\n").unwrap();
    let o = decon(&["validate-mixing", "--graph-file", p(&g), "--relax-factor", "0.333"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stdout));
    assert!(text(&o.stdout).contains("result: valid"));

    // too aggressive a relaxation
    let o = decon(&["validate-mixing", "--graph-file", p(&g), "--relax-factor", "3"]);
    assert_eq!(code(&o), 1);
    assert!(text(&o.stdout).contains("violation"));

    // weights on a non-edge
    let w = d.path().join("w.txt");
    let mut rows = vec![vec![0.0; 5]; 5];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 0.6;
        row[(i + 1) % 5] = 0.2;
        row[(i + 4) % 5] = 0.2;
    }
    rows[1][3] = 0.1;
    rows[3][1] = 0.1;
    rows[1][1] = 0.5;
    rows[3][3] = 0.5;
    fs::write(&w, formats::format_matrix(5, 5, |i, j| rows[i][j])).unwrap();
    let o = decon(&["validate-mixing", "--graph-file", p(&g), "--w-file", p(&w)]);
    assert_eq!(code(&o), 1);
    assert!(text(&o.stdout).contains("decentralized"), "{}", text(&o.stdout));

    // disconnected graph
    fs::write(&g, "0 1\n2 3\n").unwrap();
    let o = decon(&["validate-mixing", "--graph-file", p(&g)]);
    assert_eq!(code(&o), 1);
    assert!(text(&o.stderr).contains("not connected"));
}

#[test]
fn bounds_table() {
    let o = decon(&["bounds", "--scenario", "fig1"]);
    assert_eq!(code(&o), 0);
    let s = text(&o.stdout);
    for name in ["extra-new", "extra-special", "nids", "shi-linear", "shi-convex", "shi-rsc"] {
        assert!(s.lines().any(|l| l.starts_with(name)), "{name} missing:\n{s}");
    }
    let o = decon(&["bounds", "--scenario", "relaxed-line"]);
    assert_eq!(code(&o), 0);
    assert_eq!(text(&o.stdout).matches("instance:").count(), 3);
}

#[test]
fn config_file_with_flag_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    let a = d.path().join("a.csv");
    fs::write(
        &cfg,
        format!(r#"{{"algo": "extra", "alpha": "0.5*extra-new", "max-iters": 25, "out": "{}"}}"#, p(&a)),
    )
    .unwrap();
    let o = decon(&["run", "--config", p(&cfg)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let t = read_trace_file(&a).unwrap();
    assert_eq!(t.rows.len(), 26);
    assert_eq!(t.rows[0].algo.name(), "EXTRA");

    let b = d.path().join("b.csv");
    let o = decon(&["run", "--config", p(&cfg), "--max-iters", "7", "--out", p(&b)]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_trace_file(&b).unwrap().rows.len(), 8);

    fs::write(&cfg, r#"{"iterations": 3}"#).unwrap();
    assert_eq!(code(&decon(&["run", "--config", p(&cfg)])), 1);
}

#[test]
fn saved_problem_replays_exactly() {
    let d = tempfile::tempdir().unwrap();
    let prob = d.path().join("prob.json");
    let (a, b) = (d.path().join("a.csv"), d.path().join("b.csv"));
    let o = decon(&["run", "--seed", "31", "--mi", "3", "--max-iters", "50", "--save-problem", p(&prob), "--out", p(&a)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    // a different seed is ignored once the problem is loaded
    let o = decon(&["run", "--seed", "99", "--max-iters", "50", "--load-problem", p(&prob), "--out", p(&b)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn mixing_dump_reads_back() {
    let d = tempfile::tempdir().unwrap();
    let dump = d.path().join("mix");
    let o = decon(&["run", "--topology", "complete", "--n", "4", "--p", "3", "--max-iters", "3", "--dump-mixing", p(&dump)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let w = formats::read_matrix(&dump.join("W.txt")).unwrap();
    assert_eq!(w.shape(), (4, 4));
    for i in 0..4 {
        let s: f64 = (0..4).map(|j| w.get(i, j)).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }
    for name in ["Wt", "Wbar", "Wbar_inv", "H", "M", "G", "Mtilde"] {
        assert!(dump.join(format!("{name}.txt")).exists());
    }
}

#[test]
fn usage_errors() {
    assert_eq!(code(&decon(&[])), 1);
    assert_eq!(code(&decon(&["run", "--bogus"])), 1);
    assert_eq!(code(&decon(&["--help"])), 0);
    assert_eq!(code(&decon(&["run", "--scenario", "fig1"])), 1);
    assert_eq!(code(&decon(&["run", "--scenario", "fig1", "--algo", "dgd", "--out", "x"])), 1);
}
