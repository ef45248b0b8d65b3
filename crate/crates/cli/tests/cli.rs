use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "seed = 11\npretrain_count = 40\nsft_count = 16\neval_count = 8\nmax_iter = 2\nchunk_size = 4\nbudget_limit = 1200\n";

fn gsos(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsos"))
        .args(args)
        .current_dir(dir)
        .env_remove("GSOS_BRIDGE_CMD")
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn fake_bridge() -> String {
    format!("python3 {}/../core/tests/fixtures/fake_bridge.py", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn full_pipeline_twice_is_identical() {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            fs::write(dir.path().join("c.toml"), SMALL).unwrap();
            for args in [
                &["split", "--config", "c.toml", "--out", "out"][..],
                &["make-pretrain", "--config", "c.toml", "--out", "out/pre"],
                &["gsos", "--config", "c.toml", "--out", "out/gsos"],
                &["evaluate", "--config", "c.toml", "--out", "out/eval", "--seeds", "1,2"],
            ] {
                ok(&gsos(args, dir.path()));
            }
            dir
        })
        .collect();
    let files = [
        "split.txt",
        "pre/records.jsonl",
        "pre/trajectories.txt",
        "pre/manifest.json",
        "gsos/iter_1/kept.jsonl",
        "gsos/iter_2/dropped.jsonl",
        "gsos/iter_2/stats.json",
        "eval/report.json",
        "eval/eval_unseen_seed2.jsonl",
    ];
    for f in files {
        let a = fs::read(runs[0].path().join("out").join(f)).unwrap();
        let b = fs::read(runs[1].path().join("out").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "max_iter = 0\n").unwrap();
    assert_eq!(gsos(&["split", "--config", "bad.toml", "--out", "o"], dir.path()).status.code(), Some(2));
    assert_eq!(gsos(&["split", "--config", "missing.toml", "--out", "o"], dir.path()).status.code(), Some(2));
    assert_eq!(gsos(&["frobnicate"], dir.path()).status.code(), Some(2));

    fs::write(dir.path().join("bridge.toml"), "endpoint = \"bridge\"\neval_count = 2\n").unwrap();
    assert_eq!(gsos(&["evaluate", "--config", "bridge.toml", "--out", "e"], dir.path()).status.code(), Some(3));
    fs::write(dir.path().join("dead.toml"), "endpoint = \"bridge\"\neval_count = 2\nbridge_command = \"exit 0\"\n")
        .unwrap();
    assert_eq!(gsos(&["evaluate", "--config", "dead.toml", "--out", "e"], dir.path()).status.code(), Some(3));
}

#[test]
fn bridge_command_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("b.toml"), "endpoint = \"bridge\"\npretrain_count = 10\nsft_count = 4\neval_count = 3\n")
        .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gsos"))
        .args(["evaluate", "--config", "b.toml", "--out", "e"])
        .current_dir(dir.path())
        .env("GSOS_BRIDGE_CMD", fake_bridge())
        .output()
        .unwrap();
    ok(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // the canned bridge always gives up
    assert_eq!(report["seen"][0]["accuracy"], 0.0);
    assert_eq!(report["seen"][0]["count"], 3);
}

#[test]
fn stats_and_losses() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    ok(&gsos(&["make-pretrain", "--config", "c.toml", "--out", "pre"], dir.path()));
    let losses: String = (0..40).map(|i| format!("{{\"problem_id\": {i}, \"loss\": {}}}\n", i as f64 / 40.0)).collect();
    fs::write(dir.path().join("losses.jsonl"), &losses).unwrap();
    let out = gsos(
        &["stats", "--config", "c.toml", "--corpus", "pre/records.jsonl", "--losses", "losses.jsonl"],
        dir.path(),
    );
    ok(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["records"], 40);
    assert!(report["loss_deciles"].is_object());
    let deciles: Vec<f64> =
        report["length_deciles"]["kept"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(deciles.windows(2).all(|w| w[0] <= w[1]));

    let short: String = losses.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(dir.path().join("short.jsonl"), short).unwrap();
    let out = gsos(
        &["stats", "--config", "c.toml", "--corpus", "pre/records.jsonl", "--losses", "short.jsonl"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no loss for problem 0"));
}

#[test]
fn advantages_export() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    ok(&gsos(&["make-pretrain", "--config", "c.toml", "--out", "pre"], dir.path()));
    fs::write(dir.path().join("values.jsonl"), "{\"problem_id\": 0, \"values\": [0.5]}\n").unwrap();
    let args = ["advantages", "--config", "c.toml", "--corpus", "pre/records.jsonl", "--out", "adv.jsonl"];
    ok(&gsos(&args, dir.path()));
    let text = fs::read_to_string(dir.path().join("adv.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 40);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["problem_id"], i as u64);
        let n = l["segments"].as_array().unwrap().len();
        for k in ["rewards", "values", "advantages", "returns"] {
            assert_eq!(l[k].as_array().unwrap().len(), n, "{k}");
        }
    }
    // a wrong-length critic series is rejected
    let mut with_values = args.to_vec();
    with_values.extend(["--values", "values.jsonl"]);
    assert_eq!(gsos(&with_values, dir.path()).status.code(), Some(1));
}
