use std::path::Path;
use std::process::Command;

use stretchld::harness::study::{read_csv_file, COLUMNS};

const BIN: &str = env!("CARGO_BIN_EXE_stretchld");

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("study.cfg");
    let text = format!(
        "dist.kappa = 1\ndist.r = 0.5\nfamily.kind = cramer\nn_grid = 4, 16, 64, 256\nx = 3\nestimator = both\nsamples = 5000\nseed = 99\n{extra}"
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

#[test]
fn study_is_reproducible_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    let out3 = dir.path().join("c.csv");
    for (out, workers) in [(&out1, "1"), (&out2, "1"), (&out3, "3")] {
        let o = run(&[
            "study",
            "--config",
            cfg,
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(
            stdout.contains("n=256: max |normalized_rate - predicted_rate|"),
            "{stdout}"
        );
    }
    let a = std::fs::read(&out1).unwrap();
    assert_eq!(a, std::fs::read(&out2).unwrap());
    assert_eq!(a, std::fs::read(&out3).unwrap());
    let rows = read_csv_file(&out1).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| (r.predicted_rate + 1.0).abs() < 1e-12));
    let header = String::from_utf8(a).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, COLUMNS.join(","));
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();
    let a = run(&["estimate", "--config", cfg, "--n", "16", "--seed", "1"]);
    let b = run(&["estimate", "--config", cfg, "--n", "16", "--seed", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn svg_chart_structure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    std::fs::write(
        &cfg,
        std::fs::read_to_string(&cfg)
            .unwrap()
            .replace("estimator = both", "estimator = largest_jump"),
    )
    .unwrap();
    let csv = dir.path().join("s.csv");
    let svg = dir.path().join("s.svg");
    let o = run(&[
        "study",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = run(&["svg", "--csv", csv.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.attribute("version"), Some("1.1"));
    let polylines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(polylines.len(), 2);
    let reference = polylines
        .iter()
        .find(|n| n.attribute("class") == Some("reference"))
        .unwrap();
    let value: f64 = reference
        .children()
        .find(|c| c.has_tag_name("title"))
        .unwrap()
        .text()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(value, -1.0);
    let ys: Vec<&str> = reference
        .attribute("points")
        .unwrap()
        .split(' ')
        .map(|pt| pt.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(ys[0], ys[1]);
    let data = polylines
        .iter()
        .find(|n| n.attribute("class") != Some("reference"))
        .unwrap();
    assert_eq!(data.attribute("points").unwrap().split(' ').count(), 4);
}

#[test]
fn svg_with_one_row_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    std::fs::write(
        &cfg,
        std::fs::read_to_string(&cfg)
            .unwrap()
            .replace("n_grid = 4, 16, 64, 256", "n_grid = 16")
            .replace("estimator = both", "estimator = naive"),
    )
    .unwrap();
    let csv = dir.path().join("one.csv");
    let svg = dir.path().join("one.svg");
    assert!(run(&[
        "study",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap()
    ])
    .status
    .success());
    let o = run(&["svg", "--csv", csv.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipped"));
    assert!(!svg.exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.cfg");
    assert_eq!(
        run(&["study", "--config", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );

    let cfg = write_config(dir.path(), "");
    std::fs::write(&cfg, std::fs::read_to_string(&cfg).unwrap().replace("x = 3", "x = 1.5")).unwrap();
    let o = run(&["study", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("regime"));

    let cfg = write_config(dir.path(), "");
    std::fs::write(
        &cfg,
        std::fs::read_to_string(&cfg).unwrap().replace(
            "family.kind = cramer",
            "family.kind = remainder\nfamily.p = 2\ntruncation_tol = 1e-12",
        ),
    )
    .unwrap();
    assert_eq!(
        run(&["bounds", "--config", cfg.to_str().unwrap()]).status.code(),
        Some(3)
    );

    assert_eq!(run(&["tail", "--", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["study"]).status.code(), Some(2));
}

#[test]
fn tail_and_rate_subcommands() {
    let o = run(&["tail", "4"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    let v: f64 = out.lines().nth(1).unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert!((v - (-2.0f64).exp()).abs() < 1e-15);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = run(&["rate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("I(x) = 1.0000000000000000e0"));
    assert_eq!(out.lines().count(), 6);
}
