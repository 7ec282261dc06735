//! Shared helpers for the integration and acceptance suites.
#![allow(dead_code)] // each test binary uses a different subset

use std::path::PathBuf;
use std::process::{Command, Output};
use vibegen::model::{CriticArch, CriticLayer, GanModel, GenLayer, GeneratorArch};
use vibegen::tensor::activation::Activation;
use vibegen::tensor::ConvSpec;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_vibegen")
}

/// Unique scratch directory per test. Not auto-cleaned on panic, so failed
/// runs leave their artifacts behind for inspection.
pub fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vibegen_test_{}_{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("VIBEGEN_THREADS", "0")
        .output()
        .expect("spawn vibegen")
}

fn tconv(i: usize, o: usize, k: usize, s: usize, p: usize) -> ConvSpec {
    ConvSpec {
        in_channels: i,
        out_channels: o,
        kernel: k,
        stride: s,
        padding: p,
        transposed: true,
    }
}

fn conv(i: usize, o: usize, k: usize, s: usize, p: usize) -> ConvSpec {
    ConvSpec {
        in_channels: i,
        out_channels: o,
        kernel: k,
        stride: s,
        padding: p,
        transposed: false,
    }
}

/// A narrow-channel model with the reference length pipeline
/// (1 -> 64 -> ... -> 1024 and back); cheap enough for per-test training.
pub fn thin_model(seed: u64) -> GanModel<f32> {
    let gen_plan = [16usize, 8, 4, 2, 2, 1];
    let mut gen_layers = Vec::new();
    for i in 0..5 {
        let spec = if i == 0 {
            tconv(gen_plan[0], gen_plan[1], 64, 2, 0)
        } else {
            tconv(gen_plan[i], gen_plan[i + 1], 4, 2, 1)
        };
        gen_layers.push(GenLayer {
            conv: spec,
            batch_norm: i < 4,
            activation: if i < 4 { Activation::Relu } else { Activation::Identity },
        });
    }
    let critic_plan = [1usize, 2, 2, 4, 4, 1];
    let mut critic_layers = Vec::new();
    for i in 0..5 {
        let spec = if i == 4 {
            conv(critic_plan[4], critic_plan[5], 64, 2, 0)
        } else {
            conv(critic_plan[i], critic_plan[i + 1], 4, 2, 1)
        };
        critic_layers.push(CriticLayer {
            conv: spec,
            instance_norm: (1..4).contains(&i),
            activation: if i < 4 {
                Activation::LeakyRelu(0.2)
            } else {
                Activation::Identity
            },
            dropout: i < 4,
        });
    }
    GanModel::new(
        GeneratorArch {
            latent_len: 1,
            layers: gen_layers,
        },
        CriticArch {
            input_len: 1024,
            layers: critic_layers,
        },
        seed,
    )
    .unwrap()
}
