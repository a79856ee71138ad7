//! End-to-end tests of the `pnn` binary.

use std::path::Path;
use std::process::{Command, Output};

use pnn_cli::io::{read_trajectory_csv, FrameIndex, Manifest};
use pnn_cli::recipes::recipe;
use pnn_core::numcore::seeded_rng;
use serde_json::json;

fn pnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnn"))
        .args(args)
        .env_remove("PNN_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = pnn(args);
    assert!(
        out.status.success(),
        "pnn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    pnn(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn recipes_are_listed() {
    let out = ok(&["recipes"]);
    assert_eq!(out.lines().count(), 9);
    assert!(out.lines().any(|l| l == "lorentz_vpnn"));
    let cfg = ok(&["recipes", "twobody"]);
    assert!(cfg.contains("\"refine\": 2"));
}

#[test]
fn gen_lv_defaults_three_trajectories_of_101_states() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("lv");
    ok(&["gen", "--system", "lv", "--out", s(&out)]);
    let m = read_manifest(&out);
    assert_eq!(m.trajectories.len(), 3);
    assert_eq!(m.h, 0.1);
    for (i, t) in m.trajectories.iter().enumerate() {
        let (times, states) = read_trajectory_csv(&out.join(&t.states)).unwrap();
        assert_eq!(states.rows(), 101);
        assert_eq!(states.cols(), 2);
        assert_eq!(times[100], 100.0 * 0.1);
        assert_eq!(states.row(0), [[1.0, 0.8], [1.0, 1.0], [1.0, 1.2]][i]);
    }
}

#[test]
fn gen_al_and_lorentz_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let al = tmp.path().join("al");
    ok(&["gen", "--system", "al", "--out", s(&al)]);
    let m = read_manifest(&al);
    assert_eq!((m.train_steps, m.test_steps, m.h), (500, 100, 0.01));
    let (_, states) = read_trajectory_csv(&al.join(&m.trajectories[0].states)).unwrap();
    assert_eq!((states.rows(), states.cols()), (601, 40));

    let lor = tmp.path().join("lorentz");
    ok(&["gen", "--system", "lorentz", "--out", s(&lor)]);
    let m = read_manifest(&lor);
    assert_eq!((m.train_steps, m.test_steps, m.h), (1500, 300, 0.1));
    assert_eq!(m.trajectories[0].rows, 1801);
}

#[test]
fn gen_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&["gen", "--recipe", "pendulum_ext", "--test-steps", "20", "--out", s(dir)]);
    }
    for i in 0..3 {
        let name = format!("traj_{i}.csv");
        assert_eq!(
            std::fs::read(a.join(&name)).unwrap(),
            std::fs::read(b.join(&name)).unwrap()
        );
    }
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_pnn"))
        .args(["gen", "--recipe", "lv_sympnet1", "--train-steps", "5"])
        .env("PNN_OUTPUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(tmp.path().join("lv_sympnet1/manifest.json").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    // Config errors.
    assert_eq!(code(&["gen", "--recipe", "nope"]), 2);
    assert_eq!(code(&["gen", "--system", "lv", "--train-steps", "0", "--out", "x"]), 2);
    assert_eq!(code(&["train", "--recipe", "lv_pnn", "--lr", "-1", "--out", "x"]), 2);
    assert_eq!(
        code(&["train", "--recipe", "pendulum_ext", "--model", "sympnet", "--out", "x"]),
        2
    );
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": 3}").unwrap();
    assert_eq!(code(&["gen", "--config", s(&bad)]), 2);
    // I/O errors.
    assert_eq!(code(&["gen", "--config", s(&tmp.path().join("missing.json"))]), 4);
    let missing = tmp.path().join("none.json");
    assert_eq!(
        code(&[
            "predict",
            "--checkpoint",
            s(&missing),
            "--x0",
            "1,1",
            "--steps",
            "3",
            "--out",
            "r.csv"
        ]),
        4
    );
    assert_eq!(code(&["eval", "--checkpoint", s(&missing), "--data", s(tmp.path())]), 4);
}

#[test]
fn non_finite_loss_exits_with_numeric_code() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = recipe("lv_sympnet1").unwrap();
    cfg.data.train_steps = 10;
    cfg.train.learning_rate = 1e300;
    cfg.train.iterations = 50;
    let path = tmp.path().join("cfg.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    let out = pnn(&[
        "train",
        "--config",
        s(&path),
        "--out",
        s(&tmp.path().join("run")),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteration"));
}

#[test]
fn identity_checkpoint_predicts_a_constant_rollout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = recipe("lv_pnn").unwrap();
    // Freshly built models are the identity map.
    let model = cfg.model.build(2, &mut seeded_rng(0)).unwrap();
    let ck = tmp.path().join("identity.json");
    model
        .to_checkpoint(json!({"name": "identity", "h": 0.1}))
        .save(&ck)
        .unwrap();
    let out = tmp.path().join("roll.csv");
    ok(&[
        "predict",
        "--checkpoint",
        s(&ck),
        "--x0",
        "1.5,-0.25",
        "--steps",
        "7",
        "--out",
        s(&out),
    ]);
    let (times, states) = read_trajectory_csv(&out).unwrap();
    assert_eq!(states.rows(), 8);
    for (k, t) in times.iter().enumerate() {
        assert_eq!(states.row(k), [1.5, -0.25]);
        assert!((t - 0.1 * k as f64).abs() < 1e-12);
    }
    assert_eq!(
        code(&[
            "predict",
            "--checkpoint",
            s(&ck),
            "--x0",
            "1,2,3",
            "--steps",
            "2",
            "--out",
            s(&out)
        ]),
        2
    );
}

#[test]
fn train_predict_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let args = [
        "train",
        "--recipe",
        "lv_pnn",
        "--iterations",
        "40",
        "--log-interval",
        "10",
        "--quiet",
    ];
    let table = ok(&[&args[..], &["--out", s(&run)]].concat());
    assert!(table.contains("lv_pnn"));
    for f in ["checkpoint.json", "metrics.json", "loss.csv", "data/manifest.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let loss = std::fs::read_to_string(run.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().next(), Some("iter,loss"));
    assert_eq!(loss.lines().count(), 1 + 5);

    // Same config, same bytes.
    let again = tmp.path().join("again");
    ok(&[&args[..], &["--out", s(&again), "--data", s(&run.join("data"))]].concat());
    assert_eq!(
        std::fs::read(run.join("checkpoint.json")).unwrap(),
        std::fs::read(again.join("checkpoint.json")).unwrap()
    );

    let report = tmp.path().join("eval.json");
    let ck = run.join("checkpoint.json");
    let table = ok(&[
        "eval",
        "--checkpoint",
        s(&ck),
        "--checkpoint",
        s(&ck),
        "--data",
        s(&run.join("data")),
        "--out",
        s(&report),
    ]);
    assert_eq!(table.lines().count(), 3);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(doc["lv_pnn"]["train_mse"], metrics["train_mse"]);

    let roll = tmp.path().join("roll.csv");
    ok(&[
        "predict",
        "--checkpoint",
        s(&ck),
        "--data",
        s(&run.join("data")),
        "--trajectory",
        "2",
        "--steps",
        "1000",
        "--out",
        s(&roll),
    ]);
    let (times, states) = read_trajectory_csv(&roll).unwrap();
    assert_eq!(states.rows(), 1001);
    assert!((times[0] - 10.0).abs() < 1e-12);
}

#[test]
fn model_override_trains_a_bare_sympnet() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    ok(&[
        "train",
        "--recipe",
        "lv_pnn",
        "--model",
        "sympnet",
        "--iterations",
        "5",
        "--quiet",
        "--out",
        s(&run),
    ]);
    let ck: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("checkpoint.json")).unwrap()).unwrap();
    assert_eq!(ck["model"], "sympnet");
    assert!(ck.get("theta").is_none());
}

#[test]
fn two_body_substeps_interpolate_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    ok(&[
        "train",
        "--recipe",
        "twobody",
        "--iterations",
        "3",
        "--train-steps",
        "6",
        "--test-steps",
        "4",
        "--quiet",
        "--out",
        s(&run),
    ]);
    let m = read_manifest(&run.join("data"));
    assert_eq!(m.trajectories[0].rows, (6 + 4) * 2 + 1);
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["grid_mse"].is_number() && metrics["midpoint_mse"].is_number());

    let frames = tmp.path().join("frames");
    let ck = run.join("checkpoint.json");
    ok(&[
        "predict",
        "--checkpoint",
        s(&ck),
        "--data",
        s(&run.join("data")),
        "--steps",
        "3",
        "--emit-substeps",
        "--out",
        s(&frames),
    ]);
    let index: FrameIndex = serde_json::from_str(&std::fs::read_to_string(frames.join("index.json")).unwrap()).unwrap();
    assert_eq!(index.frames.len(), 1 + 3 * 2);
    assert!((index.dt - 0.3).abs() < 1e-12);
    assert_eq!((index.width, index.height), (100, 50));
    assert!(frames.join(&index.frames[6]).exists());
}
