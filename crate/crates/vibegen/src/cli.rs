//! Command-line interface: train / generate / evaluate / gradcheck /
//! synth-data.
//!
//! Configuration is a flat key=value space: an optional `--config FILE`
//! (one `key = value` per line, `#` comments) is applied first, then
//! command-line flags override it. Unknown keys are errors, never silently
//! ignored. Exit codes: 0 success, 1 usage/configuration/IO error, 2
//! numerical divergence.
//!
//! All randomness flows from `--seed`; with `VIBEGEN_THREADS=0` (the
//! default) two invocations with identical flags and inputs produce
//! byte-identical outputs.

use crate::checkpoint;
use crate::data::{self, load_signal, sample_windows, SignalDataset, SignalFormat, WINDOW_LEN};
use crate::error::{Error, Result};
use crate::eval;
use crate::model::{generator_forward, sample_latent, GanModel};
use crate::rng::Rng;
use crate::tensor::activation::Activation;
use crate::tensor::gradcheck;
use crate::tensor::{ConvSpec, Mode, Tensor};
use crate::train::{latest_checkpoint, NoObserver, Session, TrainConfig};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Training precision of the CLI.
type P = f32;

const USAGE: &str = "\
vibegen — 1-D Wasserstein DCGAN for vibration-signal synthesis

USAGE:
    vibegen <COMMAND> [--key value]...

COMMANDS:
    train       train a model on a signal record
                  required: --data FILE, --out DIR
                  common: --epochs N --lr X --batch-size N --seed N
                          --resume CKPT (or `latest` to pick up --out)
    generate    synthesize windows from a checkpoint
                  required: --checkpoint FILE, --out DIR
                  common: --count N --seed N
    evaluate    score generated windows against real ones
                  required: --checkpoint FILE, --data FILE, --out DIR
                  common: --num N (default 256) --seed N --bins N
    gradcheck   finite-difference check of every layer kernel and the
                  end-to-end chain (64-bit); exits 0 iff all pass
    synth-data  write a synthetic test record
                  required: --out FILE   common: --samples N --seed N

OPTIONS:
    --config FILE   load key = value lines first; flags override
    Keys mirror flags without the leading dashes (hyphens or underscores).
    --lr is shorthand for --learning-rate.

ENVIRONMENT:
    VIBEGEN_THREADS   0 = deterministic single-thread (default); N = use
                      up to N threads (results are bit-identical either way)
";

/// The merged key=value configuration for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// `latest` resolves to the newest checkpoint under --out.
    pub resume: Option<String>,
    pub count: usize,
    pub num: usize,
    pub samples: usize,
    pub bins: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: TrainConfig::default(),
            data: None,
            out: None,
            checkpoint: None,
            resume: None,
            count: 256,
            num: 256,
            samples: 262_144,
            bins: eval::DEFAULT_HIST_BINS,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    /// Apply one key=value pair. Unknown keys are configuration errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        match key.as_str() {
            "data" => self.data = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            "resume" => self.resume = Some(value.to_string()),
            "count" => self.count = parse_num(&key, value)?,
            "num" => self.num = parse_num(&key, value)?,
            "samples" => self.samples = parse_num(&key, value)?,
            "bins" => self.bins = parse_num(&key, value)?,
            "lr" | "learning_rate" => self.train.learning_rate = parse_num(&key, value)?,
            "epochs" => self.train.epochs = parse_num(&key, value)?,
            "batch_size" => self.train.batch_size = parse_num(&key, value)?,
            "critic_iters_per_gen" => self.train.critic_iters_per_gen = parse_num(&key, value)?,
            "clip_value" => self.train.clip_value = parse_num(&key, value)?,
            "dropout_rate" => self.train.dropout_rate = parse_num(&key, value)?,
            "noise_sigma0_fraction" => {
                self.train.noise_sigma0_fraction = parse_num(&key, value)?
            }
            "beta1" => self.train.beta1 = parse_num(&key, value)?,
            "beta2" => self.train.beta2 = parse_num(&key, value)?,
            "weight_decay" => self.train.weight_decay = parse_num(&key, value)?,
            "epsilon" => self.train.epsilon = parse_num(&key, value)?,
            "eval_samples_per_epoch" => {
                self.train.eval_samples_per_epoch = parse_num(&key, value)?
            }
            "windows_per_epoch" => self.train.windows_per_epoch = parse_num(&key, value)?,
            "seed" => self.train.seed = parse_num(&key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Load a `key = value` config file.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                reason: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// The merged configuration, one key per line.
    pub fn resolved(&self) -> String {
        let t = &self.train;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("data", self.data.as_deref().map_or(String::new(), |p| p.display().to_string()));
        kv("out", self.out.as_deref().map_or(String::new(), |p| p.display().to_string()));
        kv(
            "checkpoint",
            self.checkpoint.as_deref().map_or(String::new(), |p| p.display().to_string()),
        );
        kv("resume", self.resume.clone().unwrap_or_default());
        kv("count", self.count.to_string());
        kv("num", self.num.to_string());
        kv("samples", self.samples.to_string());
        kv("bins", self.bins.to_string());
        kv("learning_rate", t.learning_rate.to_string());
        kv("epochs", t.epochs.to_string());
        kv("batch_size", t.batch_size.to_string());
        kv("critic_iters_per_gen", t.critic_iters_per_gen.to_string());
        kv("clip_value", t.clip_value.to_string());
        kv("dropout_rate", t.dropout_rate.to_string());
        kv("noise_sigma0_fraction", t.noise_sigma0_fraction.to_string());
        kv("beta1", t.beta1.to_string());
        kv("beta2", t.beta2.to_string());
        kv("weight_decay", t.weight_decay.to_string());
        kv("epsilon", t.epsilon.to_string());
        kv("eval_samples_per_epoch", t.eval_samples_per_epoch.to_string());
        kv("windows_per_epoch", t.windows_per_epoch.to_string());
        kv("seed", t.seed.to_string());
        s
    }
}

/// Parse `--key value` flags after the subcommand; `--config` files are
/// applied before any other flag.
fn parse_flags(args: &[String]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut pairs = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let flag = args[i]
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected --flag, got {:?}", args[i])))?;
        let value = args
            .get(i + 1)
            .ok_or_else(|| Error::Config(format!("--{flag} needs a value")))?;
        if flag == "config" {
            cfg.load_file(Path::new(value))?;
        } else {
            pairs.push((flag.to_string(), value.to_string()));
        }
        i += 2;
    }
    for (key, value) in pairs {
        cfg.set(&key, &value)?;
    }
    Ok(cfg)
}

fn require(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.clone()
        .ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

fn write_resolved(cfg: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("resolved_config.txt"), cfg.resolved())?;
    Ok(())
}

/// `train --data FILE --out DIR [...]`
pub fn cmd_train(args: &[String]) -> Result<()> {
    let cfg = parse_flags(args)?;
    cfg.train.validate()?;
    let data_path = require(&cfg.data, "data")?;
    let out = require(&cfg.out, "out")?;
    write_resolved(&cfg, &out)?;

    let ds: SignalDataset<P> = load_signal(&data_path, SignalFormat::Auto)?;
    let mut session = match &cfg.resume {
        Some(spec) => {
            let path = if spec == "latest" {
                latest_checkpoint(&out).ok_or_else(|| {
                    Error::Config(format!("no checkpoint to resume under {}", out.display()))
                })?
            } else {
                PathBuf::from(spec)
            };
            let ckpt = checkpoint::load::<P>(&path)?;
            let mut session = Session::new(ckpt.model);
            if let Some((gen_opt, critic_opt)) = ckpt.optimizer {
                session.gen_opt = gen_opt;
                session.critic_opt = critic_opt;
            }
            session.rng = Rng::from_state(ckpt.rng_state);
            session
        }
        None => Session::new(GanModel::<P>::reference(cfg.train.seed)),
    };

    let log = session.train(&ds, &cfg.train, Some(&out), &mut NoObserver)?;
    if let Some(last) = log.records.last() {
        println!(
            "trained {} epochs: critic_loss {:.6}, gen_loss {:.6}, fid {:.6}",
            session.model.epoch, last.critic_loss, last.gen_loss, last.fid
        );
    }
    Ok(())
}

/// Generate `count` windows in one infer-mode batch.
fn generate_windows(model: &mut GanModel<P>, count: usize, rng: &mut Rng) -> Result<Tensor<P>> {
    let z = sample_latent(
        count,
        model.gen_arch.latent_channels(),
        model.gen_arch.latent_len,
        rng,
    );
    generator_forward(model, &z, Mode::Infer)
}

/// `generate --checkpoint FILE --out DIR [--count N] [--seed N]`
pub fn cmd_generate(args: &[String]) -> Result<()> {
    let cfg = parse_flags(args)?;
    if cfg.count == 0 {
        return Err(Error::Config("--count must be >= 1".into()));
    }
    let ckpt_path = require(&cfg.checkpoint, "checkpoint")?;
    let out = require(&cfg.out, "out")?;
    write_resolved(&cfg, &out)?;

    let mut model = checkpoint::load::<P>(&ckpt_path)?.model;
    let mut rng = Rng::from_seed(cfg.train.seed);
    let windows = generate_windows(&mut model, cfg.count, &mut rng)?;

    let mut csv = std::io::BufWriter::new(std::fs::File::create(out.join("generated.csv"))?);
    for b in 0..cfg.count {
        let row = windows.row(b, 0);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                write!(csv, ",")?;
            }
            write!(csv, "{v}")?;
        }
        writeln!(csv)?;
    }
    csv.flush()?;

    let mut raw = Vec::with_capacity(windows.len() * 4);
    for v in windows.data() {
        raw.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(out.join("generated.f32"), raw)?;
    println!(
        "generated {} windows of {} samples into {}",
        cfg.count,
        WINDOW_LEN,
        out.display()
    );
    Ok(())
}

/// `evaluate --checkpoint FILE --data FILE --out DIR [--num N] [--seed N]`
pub fn cmd_evaluate(args: &[String]) -> Result<()> {
    let cfg = parse_flags(args)?;
    if cfg.num == 0 {
        return Err(Error::Config("--num must be >= 1".into()));
    }
    let ckpt_path = require(&cfg.checkpoint, "checkpoint")?;
    let data_path = require(&cfg.data, "data")?;
    let out = require(&cfg.out, "out")?;
    write_resolved(&cfg, &out)?;

    let mut model = checkpoint::load::<P>(&ckpt_path)?.model;
    let ds: SignalDataset<P> = load_signal(&data_path, SignalFormat::Auto)?;
    let mut rng = Rng::from_seed(cfg.train.seed);
    let fake = generate_windows(&mut model, cfg.num, &mut rng)?;
    let real = sample_windows(&ds, cfg.num, &mut rng).tensor;

    let inputs = eval::FidInputs { real, fake };
    let report = eval::build_report(&inputs, cfg.bins)?;

    let write = |name: &str, f: &dyn Fn(&mut std::io::BufWriter<std::fs::File>) -> Result<()>| -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(out.join(name))?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    };
    write("fid_scores.csv", &|w| eval::write_scores_csv(&report, w))?;
    write("fid_hist.csv", &|w| eval::write_hist_csv(&report, w))?;
    write("exemplars.csv", &|w| eval::write_exemplars_csv(&report, &inputs, w))?;
    write("box_stats.csv", &|w| eval::write_box_stats_csv(&report, w))?;

    println!("scores: {} ({} x {})", report.scores.len(), report.n_real, report.n_fake);
    println!("min:    {}", report.min);
    println!("max:    {}", report.max);
    println!("mean:   {}", report.mean);
    Ok(())
}

/// `gradcheck [--seed N]`: 64-bit finite-difference sweep; exit 0 iff every
/// layer and the end-to-end chain are below 1e-4.
pub fn cmd_gradcheck(args: &[String]) -> Result<()> {
    let cfg = parse_flags(args)?;
    let seed = cfg.train.seed;
    let h = gradcheck::DEFAULT_STEP;
    let tol = 1e-4;

    let conv_spec = ConvSpec {
        in_channels: 3,
        out_channels: 2,
        kernel: 4,
        stride: 2,
        padding: 1,
        transposed: false,
    };
    let tconv_spec = ConvSpec {
        in_channels: 4,
        out_channels: 3,
        kernel: 4,
        stride: 2,
        padding: 1,
        transposed: true,
    };
    let checks: Vec<(&str, f64)> = vec![
        ("conv1d", gradcheck::check_conv1d(&conv_spec, 2, 16, seed ^ 1, h)),
        ("conv_transpose1d", gradcheck::check_conv1d(&tconv_spec, 2, 8, seed ^ 2, h)),
        ("batchnorm1d", gradcheck::check_batchnorm(4, 3, 16, seed ^ 3, h)),
        ("instancenorm1d", gradcheck::check_instancenorm(2, 3, 32, seed ^ 4, h)),
        ("relu", gradcheck::check_activation(Activation::Relu, 64, seed ^ 5, h)),
        (
            "leaky_relu",
            gradcheck::check_activation(Activation::LeakyRelu(0.2), 64, seed ^ 6, h),
        ),
        ("dropout", gradcheck::check_dropout(128, 0.3, seed ^ 7, h)),
        ("end_to_end", crate::train::gradcheck_end_to_end(seed ^ 8, h)),
    ];

    let mut all_ok = true;
    for (name, err) in &checks {
        let ok = *err < tol;
        all_ok &= ok;
        println!("{name:18} max rel err {err:10.3e}  {}", if ok { "ok" } else { "FAIL" });
    }
    if all_ok {
        Ok(())
    } else {
        Err(Error::Config(format!("gradient check exceeded {tol}")))
    }
}

/// `synth-data --out FILE [--samples N] [--seed N]`: seeded
/// sinusoids-plus-noise record in .f32 format.
pub fn cmd_synth_data(args: &[String]) -> Result<()> {
    let cfg = parse_flags(args)?;
    if cfg.samples == 0 {
        return Err(Error::Config("--samples must be >= 1".into()));
    }
    let out = require(&cfg.out, "out")?;
    let record = data::synth::generate_record(cfg.samples, cfg.train.seed);
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&out, data::synth::to_f32_bytes(&record))?;
    println!("wrote {} samples to {}", cfg.samples, out.display());
    Ok(())
}

/// Entry point used by `main`; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    match crate::runtime::threads_from_env() {
        Ok(n) => crate::runtime::set_threads(n),
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    }
    let Some(command) = args.first() else {
        eprint!("{USAGE}");
        return 1;
    };
    let result = match command.as_str() {
        "train" => cmd_train(&args[1..]),
        "generate" => cmd_generate(&args[1..]),
        "evaluate" => cmd_evaluate(&args[1..]),
        "gradcheck" => cmd_gradcheck(&args[1..]),
        "synth-data" => cmd_synth_data(&args[1..]),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            return 0;
        }
        other => {
            eprintln!("error: unknown command {other:?}\n");
            eprint!("{USAGE}");
            return 1;
        }
    };
    match result {
        Ok(()) => 0,
        Err(e @ Error::Divergence { .. }) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprint!("{USAGE}");
            1
        }
    }
}
