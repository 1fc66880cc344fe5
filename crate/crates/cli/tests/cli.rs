use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use refphase::dataio::{read_measurement, read_pgm, write_pgm, PgmDepth};
use refphase::Image;

fn data() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-1k-images-idx3-ubyte.gz")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refphase"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[track_caller]
fn assert_code(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", stderr(out));
}

#[test]
fn simple_reference_is_binary_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.pgm", "b.pgm"] {
        let out = run(
            dir.path(),
            &[
                "make-ref", "--kind", "simple", "--size", "28", "--seed", "7", "--out", name,
            ],
        );
        assert_code(&out, 0);
    }
    let a = std::fs::read(dir.path().join("a.pgm")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.pgm")).unwrap());
    let img = read_pgm(dir.path().join("a.pgm")).unwrap();
    assert!(img.data().iter().all(|&v| v == 0.0 || v == 1.0));
}

#[test]
fn random_reference_spans_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(
        &run(
            dir.path(),
            &["make-ref", "--kind", "random", "--out", "r.pgm"],
        ),
        0,
    );
    let img = read_pgm(dir.path().join("r.pgm")).unwrap();
    let (lo, hi) = img
        .data()
        .iter()
        .fold((1.0f64, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(lo < 0.01 && hi > 0.99, "range [{lo}, {hi}]");
}

#[test]
fn bad_reference_requests_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(
        &run(
            dir.path(),
            &[
                "make-ref", "--kind", "simple", "--size", "2", "--out", "s.pgm",
            ],
        ),
        2,
    );
    assert_code(
        &run(
            dir.path(),
            &["make-ref", "--kind", "fancy", "--out", "s.pgm"],
        ),
        2,
    );
    assert!(!dir.path().join("s.pgm").exists());
}

#[test]
fn zero_image_measures_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_pgm(
        &Image::zeros(8),
        dir.path().join("zero.pgm"),
        PgmDepth::Eight,
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "measure",
            "--image",
            "zero.pgm",
            "--reference",
            "none",
            "--out",
            "y.bin",
        ],
    );
    assert_code(&out, 0);
    let y = read_measurement(dir.path().join("y.bin")).unwrap();
    assert_eq!(y.side(), 16);
    assert!(y.data().iter().all(|&v| v == 0.0));
}

#[test]
fn measure_then_reconstruct_with_reference() {
    let dir = tempfile::tempdir().unwrap();
    let data = data();
    let data = data.to_str().unwrap();
    assert_code(
        &run(
            dir.path(),
            &[
                "make-ref", "--kind", "simple", "--seed", "1", "--out", "u.pgm",
            ],
        ),
        0,
    );
    let images = refphase::dataio::read_idx_images(data).unwrap().items;
    write_pgm(&images[5], dir.path().join("truth.pgm"), PgmDepth::Sixteen).unwrap();
    assert_code(
        &run(
            dir.path(),
            &[
                "measure",
                "--image",
                "truth.pgm",
                "--reference",
                "u.pgm",
                "--oversample",
                "2",
                "--out",
                "y.bin",
            ],
        ),
        0,
    );
    let out = run(
        dir.path(),
        &[
            "reconstruct",
            "--measurement",
            "y.bin",
            "--reference",
            "u.pgm",
            "--truth",
            "truth.pgm",
            "--out",
            "x.pgm",
        ],
    );
    assert_code(&out, 0);
    let mse: f64 = stdout(&out)
        .trim()
        .strip_prefix("registered mse ")
        .expect("mse line")
        .parse()
        .unwrap();
    assert!(mse < 5e-3, "mse {mse}");
    assert!(dir.path().join("x.pgm").exists());
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["measure", "--image", "absent.pgm", "--out", "y.bin"],
    );
    assert_code(&out, 2);
    assert!(stderr(&out).contains("absent.pgm"));
    assert!(!dir.path().join("y.bin").exists());
}

#[test]
fn training_writes_reference_history_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = data();
    let out = run(
        dir.path(),
        &[
            "train-ref",
            "--data",
            data.to_str().unwrap(),
            "--n-train",
            "20",
            "--max-batches",
            "6",
            "--unroll",
            "3",
            "--batch",
            "4",
            "--out",
            "run",
        ],
    );
    assert_code(&out, 0);
    let run_dir = dir.path().join("run");
    for f in [
        "reference.pgm",
        "reference.png",
        "history.csv",
        "checkpoint.json",
    ] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
    let history = std::fs::read_to_string(run_dir.join("history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("step,train_mse,val_mse"));
    let mut prev: Option<usize> = None;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let step: usize = cells[0].parse().unwrap();
        assert!(prev.is_none_or(|p| step > p));
        prev = Some(step);
        for c in &cells[1..] {
            if !c.is_empty() {
                assert!(c.parse::<f64>().unwrap().is_finite());
            }
        }
    }
    assert_eq!(prev, Some(6));

    // the checkpoint is usable as a learned reference
    let ckpt = format!("learned:{}", run_dir.join("checkpoint.json").display());
    let out = run(
        dir.path(),
        &[
            "evaluate",
            "--data",
            data.to_str().unwrap(),
            "--n-test",
            "1",
            "--skip",
            "20",
            "--steps",
            "5",
            "--oversample",
            "2",
            "--methods",
            &ckpt,
            "--out-dir",
            "ev",
        ],
    );
    assert_code(&out, 0);
}

#[test]
fn training_rejects_empty_split() {
    let dir = tempfile::tempdir().unwrap();
    let data = data();
    let out = run(
        dir.path(),
        &[
            "train-ref",
            "--data",
            data.to_str().unwrap(),
            "--n-train",
            "0",
            "--out",
            "run",
        ],
    );
    assert_code(&out, 2);
    let out = run(
        dir.path(),
        &[
            "train-ref",
            "--data",
            data.to_str().unwrap(),
            "--n-train",
            "1",
            "--out",
            "run",
        ],
    );
    assert_code(&out, 2);
    assert!(!dir.path().join("run").exists());
}

#[test]
fn single_image_evaluation_has_zero_stddev_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = data();
    let args = |out: &'static str| {
        vec![
            "evaluate".to_string(),
            "--data".into(),
            data.display().to_string(),
            "--n-test".into(),
            "1".into(),
            "--methods".into(),
            "none,random,binary,simple".into(),
            "--steps".into(),
            "30".into(),
            "--out-dir".into(),
            out.into(),
        ]
    };
    for out_dir in ["a", "b"] {
        let a = args(out_dir);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        assert_code(&run(dir.path(), &a), 0);
    }
    let csv = std::fs::read_to_string(dir.path().join("a/metrics.csv")).unwrap();
    assert_eq!(
        csv,
        std::fs::read_to_string(dir.path().join("b/metrics.csv")).unwrap()
    );
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[4], "0", "{row}");
        assert_eq!(cells[5], "1");
    }
    let pgm = |d: &str| {
        std::fs::read(dir.path().join(d).join("reconstructions/simple_s2_0.pgm")).unwrap()
    };
    assert_eq!(pgm("a"), pgm("b"));
}

#[test]
fn missing_learned_reference_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = data();
    let out = run(
        dir.path(),
        &[
            "evaluate",
            "--data",
            data.to_str().unwrap(),
            "--n-test",
            "1",
            "--methods",
            "learned:missing.pgm",
            "--out-dir",
            "ev",
        ],
    );
    assert_code(&out, 2);
    assert!(stderr(&out).contains("missing.pgm"));
    assert!(!dir.path().join("ev").exists());
    let out = run(
        dir.path(),
        &[
            "evaluate",
            "--data",
            data.to_str().unwrap(),
            "--methods",
            "magic",
            "--out-dir",
            "ev",
        ],
    );
    assert_code(&out, 2);
}

#[test]
fn gradcheck_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["gradcheck"]);
    assert_code(&out, 0);
    assert!(stdout(&out).contains("kink resamples"));
    assert_code(
        &run(dir.path(), &["gradcheck", "--corrupt-vjp", "--trials", "4"]),
        1,
    );
    let out = run(dir.path(), &["gradcheck", "--trials", "0"]);
    assert_code(&out, 0);
    assert!(stderr(&out).contains("vacuous"));
}

#[test]
fn config_file_drives_commands() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.json"),
        r#"{ "make_ref": { "kind": "binary", "size": 12, "seed": 3, "out": "cfg.pgm" },
             "gradcheck": { "trials": 2, "sizes": "4" } }"#,
    )
    .unwrap();
    assert_code(&run(dir.path(), &["--config", "exp.json"]), 0);
    assert_eq!(read_pgm(dir.path().join("cfg.pgm")).unwrap().side(), 12);

    // flags override the file
    assert_code(
        &run(
            dir.path(),
            &["--config", "exp.json", "make-ref", "--size", "9"],
        ),
        0,
    );
    assert_eq!(read_pgm(dir.path().join("cfg.pgm")).unwrap().side(), 9);

    std::fs::write(
        dir.path().join("bad.json"),
        r#"{ "make_ref": { "colour": 1 } }"#,
    )
    .unwrap();
    let out = run(dir.path(), &["--config", "bad.json"]);
    assert_code(&out, 2);
    assert!(stderr(&out).contains("colour"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run(dir.path(), &[]), 2);
    assert_code(&run(dir.path(), &["measure", "--oversample", "x"]), 2);
    assert_code(&run(dir.path(), &["measure", "--image", "a.pgm"]), 2);
}
