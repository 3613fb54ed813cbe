use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abc-lstm"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn stats_reports_fixture_counts() {
    let v = json(&run(&["stats", p(&fixture("two_tunes.abc"))]));
    assert_eq!(v["tunes"], 2);
    assert!(v["vocab_size"].as_u64().unwrap() > 10);
    assert_eq!(v["segments_at_default_batching"], 0);
}

#[test]
fn stats_missing_file_names_the_path() {
    let out = run(&["stats", "/definitely/not/here.abc"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/not/here.abc"));
}

fn train_small(out: &Path, extra: &[&str]) -> Output {
    let corpus = fixture("overfit_tune.abc");
    let mut args = vec![
        "--seed", "3", "--out", p(out), "train", p(&corpus), "--epochs", "2",
        "--set", "batch_size=2", "--set", "seq_len=16", "--set", "hidden_size=8",
        "--set", "wall_clock=false",
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn train_writes_rows_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = train_small(&a, &[]);
    let v = json(&out);
    assert_eq!(v["epochs_run"], 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("epoch 1/2 loss="), "{stderr}");
    assert!(stderr.contains("epoch 2/2 loss="));
    let metrics = std::fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    assert!(metrics.starts_with("epoch,loss,accuracy,wall_time_s\n"));
    json(&train_small(&b, &[]));
    assert_eq!(metrics, std::fs::read_to_string(b.join("metrics.csv")).unwrap());
    assert_eq!(
        std::fs::read(a.join("epoch_0002.ckpt")).unwrap(),
        std::fs::read(b.join("epoch_0002.ckpt")).unwrap()
    );
}

#[test]
fn generate_is_deterministic_and_sized() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    json(&train_small(&run_dir, &[]));
    let ckpt = run_dir.join("epoch_0002.ckpt");
    let gen = |name: &str, greedy: bool| {
        let mut args = vec![
            "--out", p(tmp.path()), "generate", "--checkpoint", p(&ckpt),
            "--length", "120", "--output", name,
        ];
        if greedy {
            args.push("--greedy");
        }
        let v = json(&run(&args));
        assert!(v["grammar"]["score"].as_f64().is_some());
        std::fs::read_to_string(tmp.path().join(name)).unwrap()
    };
    let a = gen("a.abc", true);
    assert_eq!(a, gen("b.abc", true));
    assert!(a.starts_with("X:1\n"));
    assert_eq!(a.chars().count(), 4 + 120);
    assert_eq!(gen("c.abc", false), gen("d.abc", false));
}

#[test]
fn generate_rejects_mismatched_vocab() {
    let tmp = tempfile::tempdir().unwrap();
    json(&train_small(&tmp.path().join("run"), &[]));
    let vocab = tmp.path().join("small.json");
    std::fs::write(&vocab, r#"{"chars":"ABC"}"#).unwrap();
    let ckpt = tmp.path().join("run/epoch_0001.ckpt");
    let out = run(&["--out", p(tmp.path()), "generate", "--checkpoint", p(&ckpt), "--vocab", p(&vocab)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("symbols"));
}

#[test]
fn render_writes_one_file_per_tune() {
    let tmp = tempfile::tempdir().unwrap();
    let v = json(&run(&["--out", p(tmp.path()), "render", p(&fixture("two_tunes.abc"))]));
    assert_eq!(v["written"].as_array().unwrap().len(), 2);
    for i in 1..=2 {
        let bytes = std::fs::read(tmp.path().join(format!("two_tunes_{i}.mid"))).unwrap();
        assert_eq!(&bytes[..4], b"MThd");
    }
}

#[test]
fn render_golden_and_partial_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("g.abc");
    std::fs::write(&src, "X:1\nL:1/4\nK:C\nCDE|\n").unwrap();
    json(&run(&["--out", p(tmp.path()), "render", p(&src)]));
    assert_eq!(
        std::fs::read(tmp.path().join("g_1.mid")).unwrap(),
        std::fs::read(fixture("golden.mid")).unwrap()
    );

    let mixed = tmp.path().join("mixed.abc");
    std::fs::write(&mixed, "X:1\nK:C\nCDE|\n\nX:2\nT:no key\n").unwrap();
    let out = run(&["--out", p(tmp.path()), "render", p(&mixed)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tune 2 failed"));

    let broken = tmp.path().join("broken.abc");
    std::fs::write(&broken, "X:1\nT:no key\n").unwrap();
    assert_eq!(run(&["--out", p(tmp.path()), "render", p(&broken)]).status.code(), Some(1));
}

#[test]
fn plot_writes_both_charts() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("metrics.csv");
    std::fs::write(
        &csv,
        "epoch,loss,accuracy,wall_time_s\n1,1.400000,0.300000,0.000\n2,1.000000,0.500000,0.000\n3,0.700000,0.600000,0.000\n",
    )
    .unwrap();
    let v = json(&run(&["--out", p(tmp.path()), "plot", p(&csv)]));
    for key in ["loss", "accuracy"] {
        let svg = std::fs::read_to_string(v[key].as_str().unwrap()).unwrap();
        let pts = abc_lstm::plot::polyline_points(&svg).unwrap();
        assert_eq!(pts.len(), 3);
    }

    std::fs::write(&csv, "epoch,loss,accuracy,wall_time_s\n1,1.4,0.3,0\n2,oops,0.5,0\n").unwrap();
    let out = run(&["--out", p(tmp.path()), "plot", p(&csv)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}
