use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use divlsh::prob::load_csv;

fn divlsh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divlsh"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = divlsh(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_is_seeded_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a.csv"),
        dir.path().join("b.csv"),
        dir.path().join("c.csv"),
    );
    ok(&["--seed", "9", "gen", "--d", "7", "--n", "40", "--output", p(&a)]);
    ok(&["gen", "--seed", "9", "--d", "7", "--n", "40", "--output", p(&b)]);
    ok(&["--seed", "10", "gen", "--d", "7", "--n", "40", "--output", p(&c)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let points = load_csv(&a, b',').unwrap();
    assert_eq!(points.len(), 40);
    assert!(points.iter().all(|q| q.dim() == 7));
    let text = fs::read_to_string(&a).unwrap();
    for (line, point) in text.lines().zip(&points) {
        for (cell, v) in line.split(',').zip(point.values()) {
            assert!((cell.parse::<f64>().unwrap() - v).abs() <= 1e-12);
        }
    }
}

#[test]
fn bounds_columns() {
    let out = ok(&["bounds", "--lambda", "0.5,0.2,0.8"]);
    let rows: Vec<Vec<f64>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(out.lines().next().unwrap(), "lambda,L,U,argmax_t");
    assert!((rows[0][1] - std::f64::consts::LN_2).abs() < 1e-15);
    assert!((rows[0][2] - 1.0).abs() < 1e-15);
    assert!((rows[1][2] - rows[2][2]).abs() < 1e-14);
    let default_grid = ok(&["bounds"]);
    assert_eq!(default_grid.lines().count(), 100);
}

#[test]
fn bounds_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    ok(&[
        "bounds",
        "--lambda",
        "0.3",
        "--trace",
        "0.3,0.5",
        "--t-points",
        "11",
        "--trace-output",
        p(&trace),
    ]);
    let text = fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 11);
    let out = divlsh(&["bounds", "--trace", "0.3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn div_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    ok(&["gen", "--d", "3", "--n", "5", "--output", p(&a)]);
    let out = ok(&["div", "--input", p(&a), "--kind", "gjs", "--lambda", "0.25"]);
    assert_eq!(out.lines().count(), 1 + 10);
    assert!(out
        .lines()
        .skip(1)
        .all(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap() >= 0.0));

    let j = dir.path().join("j.csv");
    ok(&["gen", "--labels", "3", "--n", "4", "--output", p(&j)]);
    let out = ok(&["div", "--joint", p(&j), "--kind", "mil"]);
    assert_eq!(out.lines().count(), 1 + 6);
    assert!(out.lines().nth(1).unwrap().starts_with("x0,x1,"));
}

#[test]
fn index_then_query_matches_direct_query() {
    let dir = tempfile::tempdir().unwrap();
    let (data, queries, idx) = (
        dir.path().join("d.csv"),
        dir.path().join("q.csv"),
        dir.path().join("i.bin"),
    );
    ok(&["--seed", "1", "gen", "--d", "8", "--n", "300", "--output", p(&data)]);
    ok(&["--seed", "2", "gen", "--d", "8", "--n", "10", "--output", p(&queries)]);
    let flags = [
        "--scheme",
        "gjs-hellinger",
        "--lambda",
        "0.3",
        "--K",
        "2",
        "--L",
        "8",
        "--k",
        "5",
    ];

    let mut index_args = vec!["--seed", "4", "index", "--input", p(&data), "--output", p(&idx)];
    index_args.extend(flags);
    ok(&index_args);
    let loaded = ok(&["query", "--index", p(&idx), "--queries", p(&queries)]);

    let mut direct_args = vec!["--seed", "4", "query", "--input", p(&data), "--queries", p(&queries)];
    direct_args.extend(flags);
    let direct = ok(&direct_args);
    assert_eq!(loaded, direct);
    assert!(loaded.lines().count() > 1);

    // a second build writes the same bytes
    let again = dir.path().join("i2.bin");
    index_args[6] = p(&again);
    ok(&index_args);
    assert_eq!(fs::read(&idx).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn krein_index_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (j, idx) = (dir.path().join("j.csv"), dir.path().join("i.bin"));
    ok(&["gen", "--labels", "2", "--n", "20", "--output", p(&j)]);
    let flags = [
        "--scheme",
        "krein-mil",
        "--epsilon",
        "0.3",
        "--K",
        "2",
        "--L",
        "6",
        "--k",
        "3",
    ];
    let mut args = vec!["index", "--joint", p(&j), "--output", p(&idx)];
    args.extend(flags);
    ok(&args);
    let loaded = ok(&["query", "--index", p(&idx)]);
    let mut args = vec!["query", "--joint", p(&j)];
    args.extend(flags);
    assert_eq!(loaded, ok(&args));
}

#[test]
fn bench_grid_shape() {
    let out = ok(&[
        "bench",
        "--n",
        "400",
        "--d",
        "8",
        "--num-queries",
        "5",
        "--K",
        "2,3",
        "--L",
        "4,8",
        "--seeds",
        "0,1,2",
        "--k",
        "5",
    ]);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,lambda,K,L,r,k,n,seed,precision,speedup,mean_candidates"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 3);
    for row in &rows {
        let precision: f64 = row[8].parse().unwrap();
        assert!((0.0..=1.0).contains(&precision));
        assert_eq!(row[6], "400");
    }
}

#[test]
fn krein_check_within_budget() {
    let dir = tempfile::tempdir().unwrap();
    let j = dir.path().join("j.csv");
    ok(&["gen", "--labels", "2", "--n", "6", "--output", p(&j)]);
    let out = ok(&["krein-check", "--joint", p(&j), "--epsilon", "0.1"]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "15");
    assert_eq!(row[6], "true");
}

#[test]
fn exit_codes() {
    let out = divlsh(&["gen", "--alpha", "not-a-number"]);
    assert_eq!(out.status.code(), Some(1));
    let out = divlsh(&["index", "--input", "x.csv", "--output", "y", "--scheme", "nope"]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "0.5,0.5\n0.1,-0.2\n").unwrap();
    let out = divlsh(&["div", "--input", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error\tdata\t"), "{stderr}");
    assert_eq!(stderr.lines().count(), 1);

    let out = divlsh(&[
        "query",
        "--input",
        p(&bad),
        "--scheme",
        "triangular-hellinger",
        "--lambda",
        "0.2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(divlsh(&["--help"]).status.success());
    assert!(String::from_utf8(divlsh(&["index", "--help"]).stdout)
        .unwrap()
        .contains("[default: 20]"));
}

#[test]
fn schemes_listed() {
    let out = ok(&["schemes"]);
    for name in ["gjs-hellinger", "triangular-hellinger", "krein-mil"] {
        assert!(out.contains(name));
    }
}
