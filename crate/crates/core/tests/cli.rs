use std::path::Path;
use std::process::{Command, Output};

use arboreal::expand::tangency_fixture;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arboreal"))
        .args(args)
        .current_dir(dir)
        .env_remove("ARBOREAL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Failure output is exactly one `error[code]: message` line.
fn error_code(o: &Output) -> String {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    let rest = err.strip_prefix("error[").unwrap_or_else(|| panic!("no prefix: {err}"));
    rest[..rest.find("]: ").unwrap()].to_string()
}

#[test]
fn link_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["link", "(a (b))"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("cells: 3×dim0; reduced betti: b0=2"));

    let o = run(&["link", "(a)"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("empty link"));

    let o = run(&["link", "(a (b (c)))", "--homology", "--check-intersection"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("b1=3"));
    assert!(stdout(&o).contains("intersection property: holds"));

    let o = run(&["link", "(a (b)"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "parse");
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["link", "(a (b (c) (d)))", "--check-intersection"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_code(&o), "check-failed");
    assert!(stdout(&o).contains("intersection property: fails"));
}

#[test]
fn functor_check_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["functor-check", "(a (b))"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("7 composable pairs, all multiplicative"));
    assert!(run(&["functor-check", "(a)"], dir.path()).status.success());
    assert!(run(&["functor-check", "(a (b (c)))"], dir.path()).status.success());

    let o = run(&["functor-check", "(a (b) (c) (d) (e) (f) (g))"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "size-guard");
}

#[test]
fn expand_bundled_germs() {
    let dir = tempfile::tempdir().unwrap();
    for (germ, census) in [("line.json", "A2:2 END:2"), ("example15.json", "A2:6 END:2")] {
        let o = run(&["expand", germ, "--out", "g.json", "--svg", "g.svg", "--constants-out", "c.json"], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o).trim(), format!("census: {census}"));
        let svg = std::fs::read_to_string(dir.path().join("g.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

        // replaying the written constants reproduces the graph
        let replay = run(&["expand", germ, "--constants", "c.json", "--out", "h.json"], dir.path());
        assert!(replay.status.success());
        let a = std::fs::read(dir.path().join("g.json")).unwrap();
        let b = std::fs::read(dir.path().join("h.json")).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn expand_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["expand", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "io");

    std::fs::write(dir.path().join("bad.json"), r#"{"branches": [{"name": "x", "points": [[0.1, 0], [1, 0]], "coorient": "left"}]}"#).unwrap();
    let o = run(&["expand", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_code(&o), "invalid-germ");

    let o = run(&["expand", "crossing", "--mode", "intro"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_code(&o), "constants");

    std::fs::write(dir.path().join("c.json"), r#"{"epsilon": 0.5, "corays": [], "arcs": []}"#).unwrap();
    let o = run(&["expand", "line", "--constants", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_code(&o), "constants");
}

#[test]
fn sections_and_tangency_fixture() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["expand", "crossing", "--out", "g.json"], dir.path()).status.success());
    let o = run(&["sections", "g.json"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rank"], 6);
    assert_eq!(v["census"], "A2:4 END:4 X_CROSS:1");

    std::fs::write(dir.path().join("t.json"), tangency_fixture().to_json()).unwrap();
    let o = run(&["sections", "t.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_code(&o), "not-arboreal");
}

#[test]
fn invariance_report_lists_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["invariance", "example15", "--draws", "2"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["draws"].as_array().unwrap().len(), 4);
    assert_eq!(v["full_consistent"], true);
    assert!(v["modes_agree"].is_boolean());

    let o = run(&["invariance", "line", "--draws", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_code(&o), "validation");
}

#[test]
fn config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ok.toml"), "seed = 5\n[profile]\ngrid = 64\n").unwrap();
    std::fs::write(dir.path().join("bad.toml"), "seed = [\n").unwrap();
    std::fs::write(dir.path().join("neg.toml"), "[tolerances]\nmargin = 0.0\n").unwrap();

    let o = run(&["--config", "ok.toml", "models-check", "(a (b))", "--samples", "200"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("compare b: 200 samples"));

    let o = run(&["--config", "bad.toml", "poset", "(a)"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "parse");

    let o = run(&["--config", "neg.toml", "poset", "(a)"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_code(&o), "validation");

    let seeded = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_arboreal"))
            .args(["expand", "star3"])
            .current_dir(dir.path())
            .env("ARBOREAL_SEED", seed)
            .output()
            .unwrap()
    };
    assert_eq!(seeded("3").stdout, seeded("3").stdout);
    assert_ne!(seeded("3").stdout, seeded("4").stdout);
    let o = seeded("x");
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "parse");
}

#[test]
fn usage_errors_are_single_lines() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "usage");
    let o = run(&["poset", "(a (b))", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["size"], 4);
}
