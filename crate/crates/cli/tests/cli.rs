use balconf_cli::document::{SolutionDocument, SolutionKind};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn balconf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_balconf"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const PAIR: &str = "n = 2\nsample_count = 2000\nk_star = 50\nrestricted_sample_count = 5000\n";

fn pair_continuation(dir: &Path) -> SolutionDocument {
    write_config(dir, "pair.conf", PAIR);
    let o = balconf(
        &["continue", "--config", "pair.conf", "--output", "pair.json"],
        dir,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    SolutionDocument::read(&dir.join("pair.json")).unwrap()
}

#[test]
fn pair_continuation_verifies_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let doc = pair_continuation(dir.path());
    assert_eq!(doc.blocks(SolutionKind::Base).count(), 1);
    // two collinear points outside, one between, two triangular points
    assert_eq!(doc.blocks(SolutionKind::Continued).count(), 5);
    assert_eq!(doc.aggregates.n_sol_n1, Some(5));
    assert_eq!(doc.aggregates.n_sol_distinct, Some(3));
    assert!(doc.aggregates.failed_refinements.is_empty());
    for b in doc.blocks(SolutionKind::Continued) {
        assert_eq!(b.accepted, Some(true));
        assert!(b.residual_inf.unwrap() < 1.5e-10);
    }

    let o = balconf(&["verify", "--input", "pair.json"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("6 solutions, 0 failed"));
}

#[test]
fn verify_rejects_a_tampered_document() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = pair_continuation(dir.path());
    let b = doc
        .solutions
        .iter_mut()
        .find(|b| b.kind == SolutionKind::Continued)
        .unwrap();
    b.coordinates[2][0] += 1e-3;
    doc.write(&dir.path().join("bad.json")).unwrap();
    let o = balconf(&["verify", "--input", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("1 failed"));
}

#[test]
fn document_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    pair_continuation(dir.path());
    let text = std::fs::read_to_string(dir.path().join("pair.json")).unwrap();
    let doc = SolutionDocument::from_json(&text, "pair.json").unwrap();
    assert_eq!(doc.to_json(), text);
    assert_eq!(
        SolutionDocument::from_json(&doc.to_json(), "again").unwrap(),
        doc
    );
}

#[test]
fn missing_top_level_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    pair_continuation(dir.path());
    let text = std::fs::read_to_string(dir.path().join("pair.json")).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value.as_object_mut().unwrap().remove("config");
    std::fs::write(dir.path().join("noconfig.json"), value.to_string()).unwrap();

    let err = SolutionDocument::read(&dir.path().join("noconfig.json")).unwrap_err();
    assert!(err.to_string().contains("'config'"), "{err}");
    let o = balconf(
        &["plot", "--input", "noconfig.json", "--output", "x.svg"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config"));
}

#[test]
fn svg_has_one_panel_per_base_and_open_small_masses() {
    let dir = tempfile::tempdir().unwrap();
    pair_continuation(dir.path());
    let o = balconf(
        &["plot", "--input", "pair.json", "--output", "pair.svg"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("pair.svg")).unwrap();
    let svg = roxmltree::Document::parse(&text).expect("well-formed XML");
    let root = svg.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    let with_class = |c: &str| {
        svg.descendants()
            .filter(|n| n.attribute("class") == Some(c))
            .collect::<Vec<_>>()
    };
    assert_eq!(with_class("panel").len(), 1);
    assert_eq!(with_class("primary").len(), 2);
    let small = with_class("small");
    assert_eq!(small.len(), 5);
    assert!(small.iter().all(|n| n.attribute("fill") == Some("none")));
}

#[test]
fn unknown_flag_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = balconf(&["nbody", "--config", "x.conf", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--frobnicate"));
    let o = balconf(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn sigma_contradicting_mode_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "bad.conf", "n = 3\nmode = cc\nsigma_y = 0.3\n");
    let o = balconf(&["nbody", "--config", "bad.conf"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));

    write_config(dir.path(), "cc.conf", "n = 3\nsigma_x = 1\nsigma_y = 1\n");
    let o = balconf(
        &["nbody", "--config", "cc.conf", "--mode", "bc"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_config_key_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "typo.conf", "n = 3\nsampel_count = 10\n");
    let o = balconf(&["nbody", "--config", "typo.conf"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn deterministic_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "tri.conf",
        "n = 3\nsample_count = 20000\nk_star = 100\n",
    );
    let run = |out: &str, extra: &[&str]| {
        let mut args = vec!["nbody", "--config", "tri.conf", "--output", out];
        args.extend_from_slice(extra);
        let o = balconf(&args, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        SolutionDocument::read(&dir.path().join(out))
            .unwrap()
            .solutions
    };
    let a = run("a.json", &["--deterministic"]);
    let b = run("b.json", &["--deterministic"]);
    assert_eq!(a, b);
    assert_eq!(a.len(), 2);
    let c = run("c.json", &["--threads", "4"]);
    assert_eq!(a, c);
}

#[test]
fn seed_changes_only_the_sample_sequence() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "tri.conf",
        "n = 3\nsample_count = 20000\nk_star = 100\n",
    );
    for seed in ["1", "2"] {
        let out = format!("s{seed}.json");
        let o = balconf(
            &[
                "nbody", "--config", "tri.conf", "--seed", seed, "--output", &out,
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        let doc = SolutionDocument::read(&dir.path().join(&out)).unwrap();
        assert_eq!(doc.config.run.seed, seed.parse::<u64>().unwrap());
        assert_eq!(doc.aggregates.n_sol_n, Some(2));
    }
}

#[test]
fn direct_and_continued_pair_solutions_match() {
    let dir = tempfile::tempdir().unwrap();
    pair_continuation(dir.path());
    write_config(
        dir.path(),
        "direct.conf",
        "n = 2\nsample_count = 20000\nk_star = 300\n",
    );
    let o = balconf(
        &[
            "direct",
            "--config",
            "direct.conf",
            "--output",
            "direct.json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = balconf(
        &[
            "compare",
            "--a",
            "direct.json",
            "--b",
            "pair.json",
            "--output",
            "report.json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["counts_agree"], true);
    assert_eq!(report["direct_count"], 3);
    assert!(report["delta_r"].as_f64().unwrap() < 1e-8);
}

#[test]
fn restricted_command_lists_critical_points() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "tri.conf",
        "n = 3\nsample_count = 20000\nk_star = 100\nrestricted_sample_count = 20000\n",
    );
    let o = balconf(
        &["nbody", "--config", "tri.conf", "--output", "tri.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = balconf(
        &["restricted", "--input", "tri.json", "--output", "r.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = SolutionDocument::read(&dir.path().join("r.json")).unwrap();
    let per_base = doc.aggregates.n_sol_per_base.clone().unwrap();
    // Lagrange triangle and Euler collinear configuration of three equal masses
    let mut sorted = per_base.clone();
    sorted.sort();
    assert_eq!(sorted, vec![6, 10]);
    assert_eq!(doc.blocks(SolutionKind::Restricted).count(), 16);
    let o = balconf(&["verify", "--input", "r.json"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn four_body_continuation_counts() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "cc4.conf", "n = 4\nmode = cc\n");
    let o = balconf(
        &["continue", "--config", "cc4.conf", "--output", "cc4.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = SolutionDocument::read(&dir.path().join("cc4.json")).unwrap();
    assert_eq!(doc.aggregates.n_sol_n, Some(4));
    assert_eq!(doc.aggregates.n_sol_n1, Some(38));
    assert_eq!(doc.aggregates.n_sol_distinct, Some(17));
}
