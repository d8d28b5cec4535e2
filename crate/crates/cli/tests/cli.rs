use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/dblp50.xml")
}

fn namesake(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_namesake"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest_lines(dir: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(dir.join("namesake-manifest.jsonl"))
        .unwrap_or_default()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn ingest(dir: &Path) {
    let o = namesake(
        dir,
        &["ingest", "--xml", fixture().to_str().unwrap(), "--out", "corpus.nd"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = namesake(
        dir.path(),
        &["ingest", "--xml", "a.xml", "--out", "b.nd", "--frobnicate"],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = namesake(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ingest_fixture() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path());
    let store = fs::read_to_string(dir.path().join("corpus.nd")).unwrap();
    assert_eq!(store.lines().count(), 51);
    let expected = fs::read_to_string(fixture().with_file_name("dblp50.expected.nd")).unwrap();
    assert_eq!(store, expected);

    let runs = manifest_lines(dir.path());
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0]["command"], "ingest");
    assert_eq!(runs[0]["exit_code"], 0);
    assert_eq!(runs[0]["counters"]["ingest"]["records"], 50);
}

#[test]
fn operational_failure_exits_one_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let o = namesake(dir.path(), &["ingest", "--xml", "missing.xml", "--out", "c.nd"]);
    assert_eq!(o.status.code(), Some(1));
    let runs = manifest_lines(dir.path());
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0]["exit_code"], 1);
    assert!(runs[0]["error"].as_str().unwrap().contains("missing.xml"));
}

#[test]
fn unique_name_needs_no_model() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path());
    let o = namesake(
        dir.path(),
        &[
            "predict",
            "--corpus",
            "corpus.nd",
            "--name",
            "Yan Wang",
            "--models",
            "no-such-dir",
        ],
    );
    assert!(o.status.success());
    assert_eq!(stdout(&o), "UNIQUE\tYan Wang\n");

    let o = namesake(
        dir.path(),
        &["predict", "--corpus", "corpus.nd", "--name", "Nobody Here"],
    );
    assert_eq!(stdout(&o), "NEW\n");

    let o = namesake(dir.path(), &["predict", "--corpus", "corpus.nd", "--name", "Y. Wang"]);
    assert_eq!(stdout(&o), "AMBIGUOUS\tY Wang\t7\n");
}

#[test]
fn block_stats() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path());
    let o = namesake(dir.path(), &["stats", "--corpus", "corpus.nd", "--block", "Y Wang"]);
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["records"], 50);
    assert_eq!(lines[1]["uta"], 7);
    assert_eq!(lines[1]["rcd"], 18);
}

#[test]
fn gen_synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, seed: &str| {
        let o = namesake(
            dir.path(),
            &[
                "gen-synth",
                "--out",
                out,
                "--truth",
                &format!("{out}.truth"),
                "--seed",
                seed,
            ],
        );
        assert!(o.status.success());
        fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("a.nd", "7");
    assert_eq!(a, run("b.nd", "7"));
    assert_ne!(a, run("c.nd", "8"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 801);
    let truth = fs::read_to_string(dir.path().join("a.nd.truth")).unwrap();
    assert_eq!(truth.lines().count(), 800);
}

#[test]
fn config_file_loses_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.conf"),
        "# small corpus\nauthors = 3\nrecords = 5\nseed = 2\n",
    )
    .unwrap();
    let o = namesake(
        dir.path(),
        &["gen-synth", "--config", "run.conf", "--out", "s.nd", "--records", "4"],
    );
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(summary["records"], 12);
    assert_eq!(manifest_lines(dir.path())[0]["seed"], 2);

    fs::write(dir.path().join("bad.conf"), "no-such-flag = 1\n").unwrap();
    let o = namesake(dir.path(), &["gen-synth", "--config", "bad.conf", "--out", "s.nd"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_evaluate_predict() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path());
    let train = |out: &str, parallel: &str| {
        let o = namesake(
            dir.path(),
            &[
                "train",
                "--corpus",
                "corpus.nd",
                "--block",
                "Y Wang,B Li",
                "--out",
                out,
                "--seed",
                "4",
                "--epochs",
                "4",
                "--parallel",
                parallel,
            ],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o).lines().count(), 2);
    };
    train("m1", "1");
    train("m2", "2");
    for name in ["Y_Wang.ndm", "Y_Wang.history.jsonl", "Y_Wang.split.tsv", "B_Li.ndm"] {
        let a = fs::read(dir.path().join("m1").join(name)).unwrap();
        let b = fs::read(dir.path().join("m2").join(name)).unwrap();
        assert_eq!(a, b, "{name} depends on --parallel");
    }

    let o = namesake(
        dir.path(),
        &[
            "evaluate",
            "--corpus",
            "corpus.nd",
            "--block",
            "Y Wang",
            "--models",
            "m1",
            "--out",
            "ev.jsonl",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("MiAF1 (All)"));
    let reports = fs::read_to_string(dir.path().join("ev.jsonl")).unwrap();
    assert_eq!(reports.lines().count(), 2);

    let o = namesake(
        dir.path(),
        &[
            "predict",
            "--corpus",
            "corpus.nd",
            "--name",
            "Y. Wang",
            "--record",
            "journals/jmlr/Wang17",
            "--models",
            "m1",
            "--mode",
            "ANV",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "AMBIGUOUS\tY Wang\t7");
    assert!(lines[1].starts_with("ANV\tY. Wang\t"));
}
