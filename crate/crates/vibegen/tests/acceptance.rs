//! Acceptance suite: one test per release criterion, each printing a
//! `criterion NN: PASS` line (visible with `--nocapture`).
//!
//! Criteria 8 (full-scale variant) and 9 (external benchmark record) are
//! `#[ignore]` by default; see the README for how to run them.

mod common;

use common::{run, scratch, thin_model};
use std::time::Instant;
use vibegen::data::synth::generate_record;
use vibegen::data::SignalDataset;
use vibegen::eval;
use vibegen::model::{
    critic_forward, for_each_trainable, generator_forward, sample_latent, CriticArch, GanModel,
    GeneratorArch,
};
use vibegen::rng::Rng;
use vibegen::tensor::activation::Activation;
use vibegen::tensor::conv::{conv1d_forward, conv_transpose1d_forward};
use vibegen::tensor::gradcheck;
use vibegen::tensor::oracle::{conv1d_naive, conv_transpose1d_naive};
use vibegen::tensor::{ConvParams, ConvSpec, Mode, Tensor};
use vibegen::train::{
    adamw_step, AdamWState, NoObserver, Session, TrainConfig, TrainObserver,
};

const GRAD_TOL: f64 = 1e-4;
const ORACLE_TOL: f64 = 1e-12;

/// Bundled synthetic record at the canonical test seed, as f32 samples.
fn bundled_record(n: usize) -> SignalDataset<f32> {
    let record: Vec<f32> = generate_record(n, 7).into_iter().map(|v| v as f32).collect();
    SignalDataset::from_samples(record, "synth".into()).unwrap()
}

#[test]
fn criterion_01_gradient_correctness() {
    let started = Instant::now();
    let h = 1e-6;
    let conv = ConvSpec {
        in_channels: 3,
        out_channels: 2,
        kernel: 4,
        stride: 2,
        padding: 1,
        transposed: false,
    };
    let tconv = ConvSpec {
        in_channels: 4,
        out_channels: 3,
        kernel: 4,
        stride: 2,
        padding: 1,
        transposed: true,
    };
    let checks = [
        ("conv1d", gradcheck::check_conv1d(&conv, 2, 16, 101, h)),
        ("conv_transpose1d", gradcheck::check_conv1d(&tconv, 2, 8, 102, h)),
        ("batchnorm1d", gradcheck::check_batchnorm(4, 3, 16, 103, h)),
        ("instancenorm1d", gradcheck::check_instancenorm(2, 3, 32, 104, h)),
        ("relu", gradcheck::check_activation(Activation::Relu, 64, 105, h)),
        (
            "leaky_relu",
            gradcheck::check_activation(Activation::LeakyRelu(0.2), 64, 106, h),
        ),
        ("dropout_fixed_mask", gradcheck::check_dropout(128, 0.3, 107, h)),
        ("end_to_end_chain", vibegen::train::gradcheck_end_to_end(51, h)),
    ];
    let mut worst = 0.0f64;
    for (name, err) in &checks {
        assert!(err < &GRAD_TOL, "{name}: max rel err {err} >= {GRAD_TOL}");
        worst = worst.max(*err);
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "gradient suite took {elapsed:.1}s (budget 60s)");
    println!(
        "criterion 01: PASS — gradients match finite differences, worst rel err {worst:.3e} (< {GRAD_TOL:.0e}), {elapsed:.1}s"
    );
}

#[test]
fn criterion_02_oracle_equivalence() {
    let mut rng = Rng::from_seed(202);
    let mut cases = 0usize;
    let mut worst = 0.0f64;
    while cases < 200 {
        let transposed = cases % 2 == 1;
        let batch = 1 + rng.uniform_below(4) as usize;
        let in_ch = 1 + rng.uniform_below(8) as usize;
        let out_ch = 1 + rng.uniform_below(8) as usize;
        let len = 1 + rng.uniform_below(64) as usize;
        let kernel = 1 + rng.uniform_below(8) as usize;
        let stride = 1 + rng.uniform_below(3) as usize;
        let padding = rng.uniform_below(3) as usize;
        let spec = ConvSpec {
            in_channels: in_ch,
            out_channels: out_ch,
            kernel,
            stride,
            padding,
            transposed,
        };
        if spec.output_length(len).is_err() {
            continue;
        }
        let mut params = ConvParams::<f64>::init(&spec, &mut rng);
        for b in &mut params.bias {
            *b = rng.normal_f64() * 0.1;
        }
        let data = (0..batch * in_ch * len).map(|_| rng.normal_f64()).collect();
        let x = Tensor::from_vec(batch, in_ch, len, data).unwrap();
        let (fast, naive) = if transposed {
            (
                conv_transpose1d_forward(&x, &spec, &params).unwrap(),
                conv_transpose1d_naive(&x, &spec, &params).unwrap(),
            )
        } else {
            (
                conv1d_forward(&x, &spec, &params).unwrap(),
                conv1d_naive(&x, &spec, &params).unwrap(),
            )
        };
        for (a, b) in fast.data().iter().zip(naive.data()) {
            let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-12);
            assert!(rel < ORACLE_TOL, "case {cases} ({spec:?}): {a} vs {b}");
            worst = worst.max(rel);
        }
        cases += 1;
    }
    println!(
        "criterion 02: PASS — 200 random conv/transposed cases match the naive oracles, worst rel err {worst:.3e} (< 1e-12)"
    );
}

#[test]
fn criterion_03_architecture_arithmetic() {
    let gen = GeneratorArch::reference();
    assert_eq!(gen.length_trace().unwrap(), vec![1, 64, 128, 256, 512, 1024]);
    let critic = CriticArch::reference();
    assert_eq!(critic.length_trace().unwrap(), vec![1024, 512, 256, 128, 64, 1]);

    let mut model = GanModel::<f32>::reference(303);
    let mut rng = Rng::from_seed(303);
    for batch in [1usize, 3] {
        let z = sample_latent(batch, 256, 1, &mut rng);
        let out = generator_forward(&mut model, &z, Mode::Infer).unwrap();
        assert_eq!(out.shape(), (batch, 1, 1024));
        let scores = critic_forward(&model, &out, Mode::Infer, 0.0, &mut rng).unwrap();
        assert_eq!(scores.shape(), (batch, 1, 1));
    }
    println!(
        "criterion 03: PASS — generator trace [1,64,128,256,512,1024], critic trace [1024,512,256,128,64,1], exact"
    );
}

#[test]
fn criterion_04_moment_distance_exactness() {
    let mut rng = Rng::from_seed(404);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = 2 + rng.uniform_below(1023) as usize;
        let x: Vec<f64> = (0..n).map(|_| rng.normal_f64() * 3.0).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.normal_f64() * 0.5 + 1.0).collect();

        // Independent scalar-loop oracle.
        let nf = n as f64;
        let (mut sx, mut sy) = (0.0, 0.0);
        for i in 0..n {
            sx += x[i];
            sy += y[i];
        }
        let (mx, my) = (sx / nf, sy / nf);
        let (mut vx, mut vy) = (0.0, 0.0);
        for i in 0..n {
            vx += (x[i] - mx) * (x[i] - mx);
            vy += (y[i] - my) * (y[i] - my);
        }
        let oracle = (mx - my).abs().powi(2) + ((vx / nf).sqrt() - (vy / nf).sqrt()).powi(2);

        let got = eval::fid_score(&x, &y).unwrap();
        let diff = (got - oracle).abs();
        assert!(diff < 1e-12, "{got} vs {oracle}");
        worst = worst.max(diff);

        assert_eq!(eval::fid_score(&x, &x).unwrap(), 0.0);
        assert_eq!(
            eval::fid_score(&x, &y).unwrap().to_bits(),
            eval::fid_score(&y, &x).unwrap().to_bits()
        );
    }
    println!(
        "criterion 04: PASS — 1000 random pairs match the scalar oracle (worst abs diff {worst:.3e}), zero-on-self and symmetry exact"
    );
}

#[test]
fn criterion_05_evaluation_protocol_shape() {
    let dir = scratch("accept_eval");
    let ckpt = dir.join("model.wdcg");
    vibegen::checkpoint::save(&ckpt, &thin_model(505), None, [0; 4]).unwrap();
    let rec = dir.join("rec.f32");
    let out = run(&["synth-data", "--samples", "262144", "--seed", "7", "--out", rec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let eval_dir = dir.join("eval");
    let out = run(&[
        "evaluate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        rec.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
        "--num",
        "256",
        "--seed",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let scores_text = std::fs::read_to_string(eval_dir.join("fid_scores.csv")).unwrap();
    let rows: Vec<&str> = scores_text.lines().collect();
    assert_eq!(rows.len(), 65_536, "expected 65,536 scores");
    for row in [rows[0], rows[32_768], rows[65_535]] {
        let score: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(score >= 0.0);
    }

    // Density integrates to 1 within 1e-9, recomputed from the emitted file.
    let hist_text = std::fs::read_to_string(eval_dir.join("fid_hist.csv")).unwrap();
    let mut integral = 0.0f64;
    for line in hist_text.lines() {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        integral += (cols[1] - cols[0]) * cols[2];
    }
    assert!((integral - 1.0).abs() < 1e-9, "integral {integral}");

    // Exemplar pairs carry valid indices.
    let ex_text = std::fs::read_to_string(eval_dir.join("exemplars.csv")).unwrap();
    let ex_rows: Vec<&str> = ex_text.lines().collect();
    assert_eq!(ex_rows.len(), 6);
    for row in &ex_rows {
        let cols: Vec<&str> = row.split(',').collect();
        let index: usize = cols[2].parse().unwrap();
        assert!(index < 256);
        assert_eq!(cols.len(), 4 + 1024);
    }
    println!(
        "criterion 05: PASS — evaluate --num 256 emitted 65,536 scores, density integral {integral:.12}, low/median/high exemplars valid"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn criterion_06_clipping_invariant() {
    struct ClipSweep {
        clip: f32,
        steps: usize,
        violations: usize,
    }
    impl TrainObserver<f32> for ClipSweep {
        fn after_critic_step(&mut self, model: &GanModel<f32>, _e: usize, _l: f64) {
            self.steps += 1;
            let mut max_abs = 0.0f32;
            let mut critic = model.critic.clone();
            for_each_trainable("critic", &mut critic, |_, p, _| {
                for &w in p.iter() {
                    max_abs = max_abs.max(w.abs());
                }
            });
            if max_abs > self.clip {
                self.violations += 1;
            }
        }
    }

    let ds = bundled_record(2048);
    let cfg = TrainConfig {
        epochs: 3,
        seed: 7,
        ..TrainConfig::default()
    };
    assert_eq!(cfg.clip_value, 0.01);
    let mut session = Session::new(GanModel::<f32>::reference(7));
    let mut sweep = ClipSweep {
        clip: cfg.clip_value as f32,
        steps: 0,
        violations: 0,
    };
    session.train(&ds, &cfg, None, &mut sweep).unwrap();
    assert!(sweep.steps >= 15, "expected at least 15 critic steps, got {}", sweep.steps);
    assert_eq!(sweep.violations, 0, "clip violations detected");
    println!(
        "criterion 06: PASS — max |critic weight| <= 0.01 after every one of {} critic steps in a 3-epoch run",
        sweep.steps
    );
}

#[test]
fn criterion_07_determinism() {
    let dir = scratch("accept_det");
    let rec = dir.join("rec.f32");
    let out = run(&["synth-data", "--samples", "2048", "--seed", "7", "--out", rec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    for sub in ["a", "b"] {
        let out = run(&[
            "train",
            "--data",
            rec.to_str().unwrap(),
            "--out",
            dir.join(sub).to_str().unwrap(),
            "--epochs",
            "3",
            "--seed",
            "7",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut compared = 0;
    for name in [
        "train_log.csv",
        "ckpt_epoch_001.wdcg",
        "ckpt_epoch_002.wdcg",
        "ckpt_epoch_003.wdcg",
    ] {
        let a = std::fs::read(dir.join("a").join(name)).unwrap();
        let b = std::fs::read(dir.join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        compared += 1;
    }
    println!(
        "criterion 07: PASS — two `train --seed 7` runs produced byte-identical logs and checkpoints ({compared} files compared)"
    );
    std::fs::remove_dir_all(&dir).ok();
}

fn moving_average_ratio(fids: &[f64], at_early: usize, at_late: usize) -> (f64, f64, f64) {
    let ma = |end: usize| -> f64 { fids[end - 5..end].iter().sum::<f64>() / 5.0 };
    let early = ma(at_early);
    let late = ma(at_late);
    (early, late, late / early)
}

/// The desk-scale trend configuration: the reference recipe (lr 1e-5,
/// batch 64, 5 critic iterations per generator update) at seed 2, with the
/// canonical 256-window epoch budget pinned explicitly so that an epoch
/// means the same number of optimizer steps regardless of record length.
fn trend_cfg(epochs: usize) -> TrainConfig {
    let cfg = TrainConfig {
        epochs,
        seed: 2,
        windows_per_epoch: 256,
        ..TrainConfig::default()
    };
    assert_eq!(cfg.learning_rate, 1e-5);
    assert_eq!(cfg.batch_size, 64);
    assert_eq!(cfg.critic_iters_per_gen, 5);
    cfg
}

#[test]
fn criterion_08_training_trend_smoke() {
    let started = Instant::now();
    let ds = bundled_record(2048);
    let cfg = trend_cfg(10);
    let mut session = Session::new(GanModel::<f32>::reference(cfg.seed));
    let log = session.train(&ds, &cfg, None, &mut NoObserver).unwrap();
    assert_eq!(log.records.len(), 10);
    for r in &log.records {
        assert!(r.critic_loss.is_finite() && r.gen_loss.is_finite() && r.fid.is_finite());
    }
    let fids: Vec<f64> = log.records.iter().map(|r| r.fid).collect();
    let (early, late, ratio) = moving_average_ratio(&fids, 5, 10);
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        ratio <= 0.8,
        "epoch-FID MA5 ratio {ratio:.3} exceeds 0.8 (early {early:.6}, late {late:.6})"
    );
    println!(
        "criterion 08: PASS (smoke variant) — FID MA5 fell {early:.6} -> {late:.6} (ratio {ratio:.3} <= 0.8) over 10 epochs in {elapsed:.0}s (desktop target 120s)"
    );
}

/// Full-scale variant of criterion 8: the canonical-size record and the
/// complete 45-epoch recipe. Takes tens of minutes; run explicitly with
/// `cargo test -p vibegen --test acceptance -- --ignored criterion_08_full`.
#[test]
#[ignore = "full 45-epoch run; ~25 minutes"]
fn criterion_08_training_trend_full() {
    let started = Instant::now();
    let ds = bundled_record(262_144);
    let cfg = TrainConfig {
        seed: 2,
        ..TrainConfig::default()
    };
    assert_eq!(cfg.epochs, 45);
    let mut session = Session::new(GanModel::<f32>::reference(cfg.seed));
    let log = session.train(&ds, &cfg, None, &mut NoObserver).unwrap();
    let fids: Vec<f64> = log.records.iter().map(|r| r.fid).collect();
    for r in &log.records {
        assert!(r.critic_loss.is_finite() && r.gen_loss.is_finite() && r.fid.is_finite());
    }
    let (early, late, ratio) = moving_average_ratio(&fids, 5, 45);
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        ratio <= 0.5,
        "epoch-FID MA5 ratio {ratio:.3} exceeds 0.5 (early {early:.6}, late {late:.6})"
    );
    println!(
        "criterion 08: PASS (full variant) — FID MA5 fell {early:.6} -> {late:.6} (ratio {ratio:.3} <= 0.5) over 45 epochs in {:.0}s (target 1800s)",
        elapsed
    );
}

/// Best-effort, non-gating comparison against the published reference run.
/// Supply the open benchmark record via VIBEGEN_BENCHMARK_RECORD and run
/// with `--ignored`. Prints a comparison report; never fails on the values.
#[test]
#[ignore]
fn criterion_09_reference_reproduction() {
    let Some(path) = std::env::var_os("VIBEGEN_BENCHMARK_RECORD") else {
        println!(
            "criterion 09: SKIP — set VIBEGEN_BENCHMARK_RECORD to the benchmark record path"
        );
        return;
    };
    let ds: SignalDataset<f32> =
        vibegen::data::load_signal(std::path::Path::new(&path), vibegen::data::SignalFormat::Auto)
            .expect("load benchmark record");
    let cfg = TrainConfig {
        seed: 7,
        ..TrainConfig::default()
    };
    let mut session = Session::new(GanModel::<f32>::reference(cfg.seed));
    let log = session.train(&ds, &cfg, None, &mut NoObserver).unwrap();
    let final_fid = log.records.last().unwrap().fid;

    let mut rng = Rng::from_seed(9);
    let z = sample_latent(256, 256, 1, &mut rng);
    let fake = generator_forward(&mut session.model, &z, Mode::Infer).unwrap();
    let real = vibegen::data::sample_windows(&ds, 256, &mut rng).tensor;
    let report = eval::build_report(&eval::FidInputs { real, fake }, 100).unwrap();

    // Published reference values for this architecture's 45-epoch run on
    // the benchmark record; stochastic reference only, no tolerance.
    let (ref_final, ref_min, ref_max) = (0.0013, 0.00002, 0.00387);
    println!("criterion 09: REPORT (non-gating, stochastic reference)");
    println!("  final pooled FID: {final_fid:.6}   reference {ref_final}");
    println!("  eval matrix min:  {:.6}   reference {ref_min}", report.min);
    println!("  eval matrix max:  {:.6}   reference {ref_max}", report.max);
}

#[test]
fn criterion_10_adamw_correctness() {
    use vibegen::model::BlockParams;
    // Scalar toy problem: one weight, constant gradient.
    let spec = ConvSpec {
        in_channels: 1,
        out_channels: 1,
        kernel: 1,
        stride: 1,
        padding: 0,
        transposed: false,
    };
    let mut blocks = vec![BlockParams::<f64> {
        conv: ConvParams::zeros(&spec),
        norm: None,
    }];
    blocks[0].conv.weight[0] = 0.3;
    let mut state = AdamWState::new_for(&mut blocks);
    let cfg = TrainConfig {
        learning_rate: 1e-3,
        beta1: 0.5,
        beta2: 0.9,
        weight_decay: 0.01,
        epsilon: 1e-8,
        ..TrainConfig::default()
    };

    let g = 0.25f64;
    let mut theta = 0.3f64;
    let (mut m, mut v) = (0.0f64, 0.0f64);
    let mut worst = 0.0f64;
    for t in 1..=5i32 {
        m = 0.5 * m + 0.5 * g;
        v = 0.9 * v + 0.1 * g * g;
        let m_hat = m / (1.0 - 0.5f64.powi(t));
        let v_hat = v / (1.0 - 0.9f64.powi(t));
        theta = theta * (1.0 - 1e-3 * 0.01) - 1e-3 * m_hat / (v_hat.sqrt() + 1e-8);

        blocks[0].conv.grad_weight[0] = g;
        adamw_step("toy", &mut blocks, &mut state, &cfg).unwrap();
        let diff = (blocks[0].conv.weight[0] - theta).abs();
        assert!(diff < 1e-12, "step {t}: {} vs {theta}", blocks[0].conv.weight[0]);
        worst = worst.max(diff);
    }

    // Decoupled decay: zero gradient shrinks multiplicatively.
    let mut blocks = vec![BlockParams::<f64> {
        conv: ConvParams::zeros(&spec),
        norm: None,
    }];
    blocks[0].conv.weight[0] = 2.0;
    let mut state = AdamWState::new_for(&mut blocks);
    adamw_step("toy", &mut blocks, &mut state, &cfg).unwrap();
    let expected = 2.0 * (1.0 - 1e-3 * 0.01);
    assert!((blocks[0].conv.weight[0] - expected).abs() < 1e-15);
    println!(
        "criterion 10: PASS — 5 AdamW steps match the hand-stepped recurrence (worst abs diff {worst:.3e} < 1e-12); zero-gradient decay is a pure multiplicative shrink"
    );
}

#[test]
fn criterion_11_box_statistics() {
    let five = eval::box_stats(&[1.0f64, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert_eq!(
        (five.median, five.q1, five.q3, five.mean),
        (3.0, 2.0, 4.0, 3.0)
    );
    assert_eq!((five.whisker_low, five.whisker_high, five.outliers), (1.0, 5.0, 0));

    let six = eval::box_stats(&[1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    assert_eq!((six.median, six.q1, six.q3, six.mean), (3.5, 2.25, 4.75, 3.5));

    // The evaluate command emits box statistics for all six exemplar
    // signals.
    let dir = scratch("accept_box");
    let ckpt = dir.join("model.wdcg");
    vibegen::checkpoint::save(&ckpt, &thin_model(511), None, [0; 4]).unwrap();
    let rec = dir.join("rec.f32");
    run(&["synth-data", "--samples", "4096", "--seed", "7", "--out", rec.to_str().unwrap()]);
    let out = run(&[
        "evaluate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        rec.to_str().unwrap(),
        "--out",
        dir.join("eval").to_str().unwrap(),
        "--num",
        "8",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let box_text = std::fs::read_to_string(dir.join("eval/box_stats.csv")).unwrap();
    let labels: Vec<String> = box_text
        .lines()
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(
        labels,
        ["low_real", "low_fake", "median_real", "median_fake", "high_real", "high_fake"]
    );
    println!(
        "criterion 11: PASS — box statistics exact on the 5- and 6-element vectors; evaluate emitted stats for all six exemplar signals"
    );
    std::fs::remove_dir_all(&dir).ok();
}
