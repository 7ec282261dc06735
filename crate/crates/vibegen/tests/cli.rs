//! End-to-end checks of the command-line surface: exit codes, file
//! contracts, determinism.

mod common;

use common::{run, scratch, thin_model};

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("USAGE"));
}

#[test]
fn unknown_command_exits_1() {
    let out = run(&["transmogrify"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_without_data_exits_1() {
    let dir = scratch("train_nodata");
    let out = run(&["train", "--out", dir.join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--data"));
}

#[test]
fn unknown_flag_exits_1() {
    let out = run(&["train", "--learning-rat", "1e-5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_data_is_deterministic_and_sized() {
    let dir = scratch("synth");
    let a = dir.join("a.f32");
    let b = dir.join("b.f32");
    let out = run(&["synth-data", "--samples", "262144", "--seed", "3", "--out", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::metadata(&a).unwrap().len(), 1_048_576);

    run(&["synth-data", "--samples", "262144", "--seed", "3", "--out", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c = dir.join("c.f32");
    let out = run(&["synth-data", "--samples", "100", "--seed", "3", "--out", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    // Valid file, but too short to train on.
    let train = run(&[
        "train",
        "--data",
        c.to_str().unwrap(),
        "--out",
        dir.join("run").to_str().unwrap(),
        "--epochs",
        "1",
    ]);
    assert_eq!(train.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&train.stderr).contains("1024"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn generate_is_deterministic_per_seed_and_rejects_zero_count() {
    let dir = scratch("generate");
    let ckpt = dir.join("model.wdcg");
    let model = thin_model(11);
    vibegen::checkpoint::save(&ckpt, &model, None, [0; 4]).unwrap();

    for sub in ["g1", "g2"] {
        let out = run(&[
            "generate",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--out",
            dir.join(sub).to_str().unwrap(),
            "--count",
            "3",
            "--seed",
            "5",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.join("g1/generated.csv")).unwrap();
    let b = std::fs::read(dir.join("g2/generated.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].split(',').count(), 1024);
    // .f32 twin: 3 windows x 1024 samples x 4 bytes
    assert_eq!(std::fs::metadata(dir.join("g1/generated.f32")).unwrap().len(), 3 * 1024 * 4);

    let out = run(&[
        "generate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        dir.join("g3").to_str().unwrap(),
        "--count",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn evaluate_emits_matrix_of_num_squared_and_self_comparison_hits_zero() {
    let dir = scratch("evaluate");
    let ckpt = dir.join("model.wdcg");
    let model = thin_model(13);
    vibegen::checkpoint::save(&ckpt, &model, None, [0; 4]).unwrap();

    // One generated window becomes the full real record: every sampled
    // window is that window, and the first regenerated fake (same seed)
    // matches it exactly, so the minimum score is exactly zero.
    let out = run(&[
        "generate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        dir.join("gen1").to_str().unwrap(),
        "--count",
        "1",
        "--seed",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&[
        "evaluate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        dir.join("gen1/generated.f32").to_str().unwrap(),
        "--out",
        dir.join("eval_self").to_str().unwrap(),
        "--num",
        "4",
        "--seed",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("min:    0\n"), "stdout was: {stdout}");

    let scores = std::fs::read_to_string(dir.join("eval_self/fid_scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 16);
    for f in ["fid_hist.csv", "exemplars.csv", "box_stats.csv", "resolved_config.txt"] {
        assert!(dir.join("eval_self").join(f).exists(), "{f} missing");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn threaded_generation_is_bit_identical_to_serial() {
    let dir = scratch("threads");
    let ckpt = dir.join("model.wdcg");
    vibegen::checkpoint::save(&ckpt, &thin_model(17), None, [0; 4]).unwrap();

    for (sub, threads) in [("serial", "0"), ("par", "3")] {
        let out = std::process::Command::new(common::bin())
            .args([
                "generate",
                "--checkpoint",
                ckpt.to_str().unwrap(),
                "--out",
                dir.join(sub).to_str().unwrap(),
                "--count",
                "8",
                "--seed",
                "21",
            ])
            .env("VIBEGEN_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(
        std::fs::read(dir.join("serial/generated.f32")).unwrap(),
        std::fs::read(dir.join("par/generated.f32")).unwrap(),
        "thread count changed kernel results"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn gradcheck_command_reports_layers_and_passes() {
    let out = run(&["gradcheck", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["conv1d", "conv_transpose1d", "batchnorm1d", "instancenorm1d", "end_to_end"] {
        assert!(stdout.contains(name), "missing {name} in:\n{stdout}");
    }
    assert!(!stdout.contains("FAIL"));
}
