//! Black-box tests of the command-line pipeline.

use std::path::Path;
use std::process::Command;

fn passmine(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_passmine"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = passmine(args);
    assert!(
        out.status.success(),
        "passmine {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_cfg(dir: &Path) -> std::path::PathBuf {
    // synth output is already on the normalized pitch
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "field.length_m = 100\nfield.width_m = 100\n").unwrap();
    cfg
}

#[test]
fn staged_pipeline_produces_expected_files() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let out = root.join("out");
    let cfg = write_cfg(root);
    let cfg = cfg.to_str().unwrap();
    let out_s = out.to_str().unwrap();

    ok(&["synth", "--out", out_s, "--seed", "7", "--plant-copies", "3"]);
    assert!(out.join("season.csv").is_file());
    assert!(out.join("ground_truth.json").is_file());

    let season = out.join("season.csv");
    ok(&[
        "ingest", "--config", cfg, "--out", out_s, "--input",
        season.to_str().unwrap(),
    ]);
    assert!(out.join("sequences/team00.json").is_file());
    assert!(out.join("sequences/team01.json").is_file());

    ok(&["discover", "--config", cfg, "--out", out_s]);
    assert!(out.join("results/team00.json").is_file());
    assert!(out.join("results/team01.json").is_file());

    ok(&["analyze", "--config", cfg, "--out", out_s]);
    for f in ["table1.csv", "table2.csv", "clusters.json", "spreads.csv"] {
        assert!(out.join("league").join(f).is_file(), "missing league/{f}");
    }
    assert!(out.join("team00/table1.csv").is_file());

    ok(&["report", "--config", cfg, "--out", out_s]);
    let team00 = out.join("results/team00.json");
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&team00).unwrap()).unwrap();
    let n_matches = result["matches"].as_array().unwrap().len();
    assert!(n_matches >= 3, "expected the planted pairs, got {n_matches}");
    assert!(out.join("team00/matches/match_0000.svg").is_file());
    assert!(out.join("league/spreads.svg").is_file());
}

#[test]
fn run_equals_staged_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let cfg = write_cfg(root);
    let data = root.join("data");
    ok(&["synth", "--out", data.to_str().unwrap(), "--seed", "7", "--plant-copies", "3"]);
    let season = data.join("season.csv");

    let staged = root.join("staged");
    for stage in ["ingest", "discover", "analyze", "report"] {
        let mut args = vec![
            stage,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            staged.to_str().unwrap(),
        ];
        if stage == "ingest" {
            args.extend(["--input", season.to_str().unwrap()]);
        }
        ok(&args);
    }

    let one_shot = root.join("oneshot");
    ok(&[
        "run", "--config", cfg.to_str().unwrap(), "--out",
        one_shot.to_str().unwrap(), "--input", season.to_str().unwrap(),
    ]);

    for rel in ["results/team00.json", "league/table1.csv", "league/table2.csv"] {
        let a = std::fs::read(staged.join(rel)).unwrap();
        let b = std::fs::read(one_shot.join(rel)).unwrap();
        assert_eq!(a, b, "{rel} differs between staged and one-shot runs");
    }
}

#[test]
fn team_filter_restricts_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let cfg = write_cfg(root);
    let out = root.join("out");
    ok(&["synth", "--out", out.to_str().unwrap(), "--seed", "7"]);
    ok(&[
        "ingest", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--input", out.join("season.csv").to_str().unwrap(),
        "--team", "team01",
    ]);
    assert!(out.join("sequences/team01.json").is_file());
    assert!(!out.join("sequences/team00.json").exists());
}

#[test]
fn synth_is_seed_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        ok(&["synth", "--out", dir.to_str().unwrap(), "--seed", "99", "--plant-copies", "2"]);
    }
    assert_eq!(
        std::fs::read(a.join("season.csv")).unwrap(),
        std::fs::read(b.join("season.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(a.join("ground_truth.json")).unwrap(),
        std::fs::read(b.join("ground_truth.json")).unwrap()
    );
}

#[test]
fn input_errors_exit_with_code_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();

    // missing input file
    let r = passmine(&["ingest", "--out", out_s, "--input", "/nonexistent.csv"]);
    assert_eq!(r.status.code(), Some(1));

    // unknown format
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join("x.csv"), "").unwrap();
    let r = passmine(&[
        "ingest", "--out", out_s, "--input",
        out.join("x.csv").to_str().unwrap(), "--format", "xml",
    ]);
    assert_eq!(r.status.code(), Some(1));

    // discover before ingest
    let r = passmine(&["discover", "--out", tmp.path().join("empty").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));

    // malformed config
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let r = passmine(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out_s]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_code_2() {
    let r = passmine(&["no-such-subcommand"]);
    assert_eq!(r.status.code(), Some(2));
}
