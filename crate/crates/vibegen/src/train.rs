//! Wasserstein training loop: alternating critic/generator updates with
//! AdamW, critic weight clipping, and decaying Gaussian noise on the real
//! batches.
//!
//! The critic minimizes `mean(C(G(z))) - mean(C(x + noise))`; the generator
//! minimizes `-mean(C(G(z)))`. Signed values are logged. Every critic
//! update is followed by clipping all critic parameters to
//! `[-clip_value, clip_value]`, and each generator update follows
//! `critic_iters_per_gen` critic updates.
//!
//! An epoch covers `max(1, windows_per_epoch / batch_size)` such groups,
//! where `windows_per_epoch` defaults to `floor(record_len / 1024)` (256
//! groups-of-windows on the canonical record, i.e. 4 generator updates per
//! epoch at batch 64). Real batches are drawn with replacement, so the
//! epoch is a bookkeeping unit, not a partition of the record. At each
//! epoch end, the pooled moment distance between freshly generated and
//! freshly sampled windows is logged as the epoch FID, and a checkpoint
//! (parameters, optimizer state, generator stream position) is written.
//!
//! One seeded stream drives everything — latents, window offsets, dropout,
//! noise, epoch evaluation — in a fixed consumption order, and its state is
//! serialized in checkpoints, so a resumed run replays the uninterrupted
//! run bit for bit.

use crate::data::{sample_windows, SignalDataset, WindowBatch};
use crate::error::{Error, Result};
use crate::eval::pooled_fid;
use crate::model::{
    critic_backward, critic_forward_cached, for_each_trainable, generator_backward,
    generator_forward, generator_forward_cached, sample_latent, zero_grads, GanModel,
};
use crate::rng::Rng;
use crate::runtime;
use crate::tensor::{Mode, Scalar, Tensor};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Training hyperparameters. Defaults are the reference recipe: learning
/// rate 1e-5 and 45 epochs, batch 64, five critic updates per generator
/// update, clip 0.01, dropout 0.3.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub critic_iters_per_gen: usize,
    pub clip_value: f64,
    pub dropout_rate: f64,
    /// Initial real-batch noise sigma, as a fraction of the record's
    /// standard deviation (the input is unnormalized, so absolute sigmas
    /// would not transfer between records).
    pub noise_sigma0_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub epsilon: f64,
    pub eval_samples_per_epoch: usize,
    /// Window budget per epoch; 0 means `floor(record_len / 1024)`.
    pub windows_per_epoch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            epochs: 45,
            batch_size: 64,
            critic_iters_per_gen: 5,
            clip_value: 0.01,
            dropout_rate: 0.3,
            noise_sigma0_fraction: 0.1,
            beta1: 0.5,
            beta2: 0.9,
            weight_decay: 0.01,
            epsilon: 1e-8,
            eval_samples_per_epoch: 64,
            windows_per_epoch: 0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(
                "batch_size must be >= 2 (batch norm needs statistics)".into(),
            ));
        }
        if self.critic_iters_per_gen < 1 {
            return Err(Error::Config("critic_iters_per_gen must be >= 1".into()));
        }
        if self.clip_value <= 0.0 {
            return Err(Error::Config("clip_value must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config("dropout_rate must be in [0, 1)".into()));
        }
        if self.eval_samples_per_epoch < 1 {
            return Err(Error::Config("eval_samples_per_epoch must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("betas must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// First/second moment buffers for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<P: Scalar> {
    pub m: Vec<P>,
    pub v: Vec<P>,
}

/// AdamW state for one network: moment buffers aligned with the trainable
/// visitation order, plus the shared step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState<P: Scalar> {
    pub step: u64,
    pub moments: Vec<Moments<P>>,
}

impl<P: Scalar> AdamWState<P> {
    pub fn new_for(blocks: &mut [crate::model::BlockParams<P>]) -> Self {
        let mut moments = Vec::new();
        for_each_trainable("", blocks, |_, param, _| {
            moments.push(Moments {
                m: vec![P::ZERO; param.len()],
                v: vec![P::ZERO; param.len()],
            });
        });
        AdamWState { step: 0, moments }
    }
}

/// One AdamW step over a parameter list.
///
/// Decoupled weight decay shrinks each parameter by `lr * weight_decay`
/// from its pre-update value, separately from the bias-corrected Adam
/// update `lr * m_hat / (sqrt(v_hat) + eps)`. Gradients are left untouched;
/// the caller zeroes them.
pub fn adamw_step<P: Scalar>(
    prefix: &str,
    blocks: &mut [crate::model::BlockParams<P>],
    state: &mut AdamWState<P>,
    cfg: &TrainConfig,
) -> Result<()> {
    state.step += 1;
    let t = state.step;
    let beta1 = P::from_f64(cfg.beta1);
    let beta2 = P::from_f64(cfg.beta2);
    let one_m_beta1 = P::from_f64(1.0 - cfg.beta1);
    let one_m_beta2 = P::from_f64(1.0 - cfg.beta2);
    let bc1 = P::from_f64(1.0 - cfg.beta1.powi(t as i32));
    let bc2 = P::from_f64(1.0 - cfg.beta2.powi(t as i32));
    let lr = P::from_f64(cfg.learning_rate);
    let eps = P::from_f64(cfg.epsilon);
    let decay = P::from_f64(1.0 - cfg.learning_rate * cfg.weight_decay);

    let mut idx = 0;
    let mut bad: Option<String> = None;
    for_each_trainable(prefix, blocks, |name, param, grad| {
        let mom = &mut state.moments[idx];
        idx += 1;
        if bad.is_some() {
            return;
        }
        if grad.iter().any(|g| !g.is_finite()) {
            bad = Some(name);
            return;
        }
        for i in 0..param.len() {
            let g = grad[i];
            mom.m[i] = beta1 * mom.m[i] + one_m_beta1 * g;
            mom.v[i] = beta2 * mom.v[i] + one_m_beta2 * g * g;
            let m_hat = mom.m[i] / bc1;
            let v_hat = mom.v[i] / bc2;
            param[i] = param[i] * decay - lr * m_hat / (v_hat.sqrt() + eps);
        }
    });
    if let Some(name) = bad {
        return Err(Error::Divergence {
            what: format!("non-finite gradient in {name}"),
            epoch: 0,
            step: t,
        });
    }
    Ok(())
}

/// Clamp every trainable critic scalar to `[-clip, clip]` (the Lipschitz
/// device of the weight-clipped Wasserstein formulation). The generator is
/// untouched.
pub fn clip_weights<P: Scalar>(critic: &mut [crate::model::BlockParams<P>], clip: f64) {
    let c = P::from_f64(clip);
    for_each_trainable("critic", critic, |_, param, _| {
        for w in param.iter_mut() {
            *w = (*w).max(-c).min(c);
        }
    });
}

/// Noise sigma for the given epoch: linear decay from
/// `noise_sigma0_fraction * dataset_std` at epoch 0 to zero at the final
/// epoch.
pub fn noise_sigma(epoch: usize, cfg: &TrainConfig, dataset_std: f64) -> f64 {
    let sigma0 = cfg.noise_sigma0_fraction * dataset_std;
    sigma0 * (1.0 - epoch as f64 / cfg.epochs as f64).max(0.0)
}

/// Per-epoch log record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch index.
    pub epoch: usize,
    pub critic_loss: f64,
    pub gen_loss: f64,
    pub fid: f64,
    pub noise_sigma: f64,
    pub seconds: f64,
    pub critic_steps: usize,
    pub gen_steps: usize,
}

/// Training history: one record per completed epoch.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    /// CSV row: `epoch,critic_loss,gen_loss,fid,noise_sigma,seconds`.
    /// In deterministic mode the seconds column is written as 0 so that
    /// equal runs produce byte-identical logs.
    pub fn write_csv_row(record: &EpochRecord, out: &mut impl Write) -> Result<()> {
        let seconds = if runtime::deterministic() { 0.0 } else { record.seconds };
        writeln!(
            out,
            "{},{},{},{},{},{:.3}",
            record.epoch, record.critic_loss, record.gen_loss, record.fid, record.noise_sigma,
            seconds
        )?;
        Ok(())
    }
}

/// Hooks invoked by [`Session::train`]; default implementations do nothing.
pub trait TrainObserver<P: Scalar> {
    fn after_critic_step(&mut self, _model: &GanModel<P>, _epoch: usize, _loss: f64) {}
    fn after_generator_step(&mut self, _model: &GanModel<P>, _epoch: usize, _loss: f64) {}
    /// Return `false` to stop after this epoch (the epoch's checkpoint and
    /// log row are already written, so the run can be resumed later).
    fn after_epoch(&mut self, _record: &EpochRecord) -> bool {
        true
    }
}

/// The no-op observer.
pub struct NoObserver;
impl<P: Scalar> TrainObserver<P> for NoObserver {}

/// Domain-separation constant: the training stream must not replay the
/// model-init stream, which is seeded with the raw seed.
const TRAIN_STREAM: u64 = 0x7472_6169_6e5f_7374;

/// A training run: model, per-network optimizer state, and the seeded
/// stream that drives all of the run's randomness.
pub struct Session<P: Scalar> {
    pub model: GanModel<P>,
    pub gen_opt: AdamWState<P>,
    pub critic_opt: AdamWState<P>,
    pub rng: Rng,
}

impl<P: Scalar> Session<P> {
    /// Fresh session around a freshly initialized model.
    pub fn new(mut model: GanModel<P>) -> Self {
        let gen_opt = AdamWState::new_for(&mut model.gen);
        let critic_opt = AdamWState::new_for(&mut model.critic);
        let rng = Rng::from_seed(model.seed ^ TRAIN_STREAM);
        Session {
            model,
            gen_opt,
            critic_opt,
            rng,
        }
    }

    /// One critic update on the given real batch.
    ///
    /// Adds `N(0, sigma^2)` noise to the real windows, computes
    /// `L_C = mean(C(G(z))) - mean(C(x + noise))`, backpropagates through
    /// the critic only (the fake batch is a constant input), takes an AdamW
    /// step, and clips the critic. Returns `L_C`.
    pub fn critic_step(
        &mut self,
        real: &WindowBatch<P>,
        sigma: f64,
        cfg: &TrainConfig,
        epoch: usize,
    ) -> Result<f64> {
        zero_grads(&mut self.model.critic);
        let batch = real.tensor.batch;

        let z = sample_latent(
            batch,
            self.model.gen_arch.latent_channels(),
            self.model.gen_arch.latent_len,
            &mut self.rng,
        );
        let fake = generator_forward(&mut self.model, &z, Mode::Train)?;

        let mut noised = real.tensor.clone();
        if sigma > 0.0 {
            for v in noised.data_mut() {
                *v += P::from_f64(sigma * self.rng.normal_f64());
            }
        }

        let inv_b = P::from_f64(1.0 / batch as f64);
        let (fake_scores, fake_caches) = critic_forward_cached(
            &self.model,
            &fake,
            Mode::Train,
            cfg.dropout_rate,
            &mut self.rng,
            true,
        )?;
        let grad_fake = Tensor::from_vec(batch, 1, 1, vec![inv_b; batch]).unwrap();
        critic_backward(&mut self.model, &fake_caches, &grad_fake)?;
        drop(fake_caches);

        let (real_scores, real_caches) = critic_forward_cached(
            &self.model,
            &noised,
            Mode::Train,
            cfg.dropout_rate,
            &mut self.rng,
            true,
        )?;
        let grad_real = Tensor::from_vec(batch, 1, 1, vec![-inv_b; batch]).unwrap();
        critic_backward(&mut self.model, &real_caches, &grad_real)?;

        let mean = |t: &Tensor<P>| t.data().iter().map(|v| v.to_f64()).sum::<f64>() / batch as f64;
        let loss = mean(&fake_scores) - mean(&real_scores);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                what: format!("critic loss {loss}"),
                epoch,
                step: self.model.step,
            });
        }

        adamw_step("critic", &mut self.model.critic, &mut self.critic_opt, cfg)
            .map_err(|e| at_epoch(e, epoch))?;
        clip_weights(&mut self.model.critic, cfg.clip_value);
        self.model.step += 1;
        Ok(loss)
    }

    /// One generator update: `L_G = -mean(C(G(z)))`, backpropagated through
    /// the critic into the generator; only generator parameters move.
    /// Critic gradient buffers are scratch here and are re-zeroed by the
    /// next critic step.
    pub fn generator_step(&mut self, cfg: &TrainConfig, epoch: usize) -> Result<f64> {
        zero_grads(&mut self.model.gen);
        let batch = cfg.batch_size;

        let z = sample_latent(
            batch,
            self.model.gen_arch.latent_channels(),
            self.model.gen_arch.latent_len,
            &mut self.rng,
        );
        let (fake, gen_caches) = generator_forward_cached(&mut self.model, &z, Mode::Train, true)?;
        let (scores, critic_caches) = critic_forward_cached(
            &self.model,
            &fake,
            Mode::Train,
            cfg.dropout_rate,
            &mut self.rng,
            true,
        )?;

        let loss = -scores.data().iter().map(|v| v.to_f64()).sum::<f64>() / batch as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                what: format!("generator loss {loss}"),
                epoch,
                step: self.model.step,
            });
        }

        let grad_scores =
            Tensor::from_vec(batch, 1, 1, vec![P::from_f64(-1.0 / batch as f64); batch]).unwrap();
        let grad_fake = critic_backward(&mut self.model, &critic_caches, &grad_scores)?;
        generator_backward(&mut self.model, &gen_caches, &grad_fake)?;

        adamw_step("gen", &mut self.model.gen, &mut self.gen_opt, cfg)
            .map_err(|e| at_epoch(e, epoch))?;
        self.model.step += 1;
        Ok(loss)
    }

    /// Pooled moment distance between freshly generated samples and freshly
    /// sampled real windows; the per-epoch monitor.
    ///
    /// Generation uses train-mode (batch) statistics: the monitor then
    /// tracks the distribution the critic actually trains against from
    /// epoch 1, instead of spending its first epochs measuring batch-norm
    /// running-statistics warm-up.
    fn epoch_fid(&mut self, ds: &SignalDataset<P>, cfg: &TrainConfig) -> Result<f64> {
        let n = cfg.eval_samples_per_epoch;
        let z = sample_latent(
            n,
            self.model.gen_arch.latent_channels(),
            self.model.gen_arch.latent_len,
            &mut self.rng,
        );
        let fake = generator_forward(&mut self.model, &z, Mode::Train)?;
        let real = sample_windows(ds, n, &mut self.rng);
        pooled_fid(&real.tensor, &fake)
    }

    /// Run the loop from the model's current epoch up to `cfg.epochs`.
    ///
    /// Per epoch: `max(1, windows_per_epoch / batch_size)` groups of
    /// `critic_iters_per_gen` critic steps followed by one generator step,
    /// then the epoch FID, a log record (appended to `train_log.csv` under
    /// `out_dir` when given), and a checkpoint `ckpt_epoch_NNN.wdcg`.
    pub fn train(
        &mut self,
        ds: &SignalDataset<P>,
        cfg: &TrainConfig,
        out_dir: Option<&Path>,
        observer: &mut dyn TrainObserver<P>,
    ) -> Result<TrainLog> {
        cfg.validate()?;
        let (_, dataset_std, _, _) = crate::data::dataset_stats(ds);
        let windows_per_epoch = if cfg.windows_per_epoch > 0 {
            cfg.windows_per_epoch
        } else {
            ds.windows_per_epoch()
        };
        let groups_per_epoch = (windows_per_epoch / cfg.batch_size).max(1);

        let mut log = TrainLog::default();
        let mut log_file = match out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join("train_log.csv");
                // Resumed runs append to the existing log.
                Some(std::fs::OpenOptions::new().create(true).append(true).open(path)?)
            }
            None => None,
        };

        for epoch in self.model.epoch..cfg.epochs {
            let started = Instant::now();
            let sigma = noise_sigma(epoch, cfg, dataset_std);
            let mut critic_loss_sum = 0.0;
            let mut gen_loss_sum = 0.0;
            let mut critic_steps = 0usize;
            let mut gen_steps = 0usize;

            for _ in 0..groups_per_epoch {
                for _ in 0..cfg.critic_iters_per_gen {
                    let real = sample_windows(ds, cfg.batch_size, &mut self.rng);
                    let loss = self
                        .critic_step(&real, sigma, cfg, epoch)
                        .map_err(|e| at_epoch(e, epoch))?;
                    critic_loss_sum += loss;
                    critic_steps += 1;
                    observer.after_critic_step(&self.model, epoch, loss);
                }
                let loss = self
                    .generator_step(cfg, epoch)
                    .map_err(|e| at_epoch(e, epoch))?;
                gen_loss_sum += loss;
                gen_steps += 1;
                observer.after_generator_step(&self.model, epoch, loss);
            }

            let fid = self.epoch_fid(ds, cfg)?;
            if !fid.is_finite() {
                return Err(Error::Divergence {
                    what: format!("epoch FID {fid}"),
                    epoch,
                    step: self.model.step,
                });
            }
            self.model.epoch = epoch + 1;

            let record = EpochRecord {
                epoch: epoch + 1,
                critic_loss: critic_loss_sum / critic_steps as f64,
                gen_loss: gen_loss_sum / gen_steps as f64,
                fid,
                noise_sigma: sigma,
                seconds: started.elapsed().as_secs_f64(),
                critic_steps,
                gen_steps,
            };
            if let Some(f) = log_file.as_mut() {
                TrainLog::write_csv_row(&record, f)?;
            }
            if let Some(dir) = out_dir {
                let path = dir.join(format!("ckpt_epoch_{:03}.wdcg", epoch + 1));
                crate::checkpoint::save(&path, &self.model, Some((&self.gen_opt, &self.critic_opt)), self.rng.state())?;
            }
            let keep_going = observer.after_epoch(&record);
            log.records.push(record);
            if !keep_going {
                break;
            }
        }
        Ok(log)
    }
}

fn at_epoch(e: Error, epoch: usize) -> Error {
    match e {
        Error::Divergence { what, step, .. } => Error::Divergence { what, epoch, step },
        other => other,
    }
}

/// Latest checkpoint path under an output directory, if any.
pub fn latest_checkpoint(dir: &Path) -> Option<PathBuf> {
    let mut best: Option<(u32, PathBuf)> = None;
    let entries = std::fs::read_dir(dir).ok()?;
    for entry in entries.flatten() {
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(num) = name
            .strip_prefix("ckpt_epoch_")
            .and_then(|s| s.strip_suffix(".wdcg"))
            .and_then(|s| s.parse::<u32>().ok())
        {
            if best.as_ref().is_none_or(|(b, _)| num > *b) {
                best = Some((num, entry.path()));
            }
        }
    }
    best.map(|(_, p)| p)
}

/// Finite-difference check of the full chain on a shrunken model:
/// `L_G = -mean(C(G(z)))` differentiated with respect to every trainable
/// parameter of both networks, with frozen dropout masks. Returns the max
/// relative error.
pub fn gradcheck_end_to_end(seed: u64, h: f64) -> f64 {
    use crate::model::{CriticArch, CriticLayer, GenLayer, GeneratorArch};
    use crate::tensor::activation::Activation;
    use crate::tensor::ConvSpec;

    let tconv = |i, o, k, s, p| ConvSpec {
        in_channels: i,
        out_channels: o,
        kernel: k,
        stride: s,
        padding: p,
        transposed: true,
    };
    let conv = |i, o, k, s, p| ConvSpec {
        in_channels: i,
        out_channels: o,
        kernel: k,
        stride: s,
        padding: p,
        transposed: false,
    };
    // latent 8 channels, lengths 1 -> 4 -> 8 -> 16; critic 16 -> 8 -> 4 -> 1
    let gen_arch = GeneratorArch {
        latent_len: 1,
        layers: vec![
            GenLayer {
                conv: tconv(8, 4, 4, 2, 0),
                batch_norm: true,
                activation: Activation::Relu,
            },
            GenLayer {
                conv: tconv(4, 4, 4, 2, 1),
                batch_norm: true,
                activation: Activation::Relu,
            },
            GenLayer {
                conv: tconv(4, 1, 4, 2, 1),
                batch_norm: false,
                activation: Activation::Identity,
            },
        ],
    };
    let critic_arch = CriticArch {
        input_len: 16,
        layers: vec![
            CriticLayer {
                conv: conv(1, 4, 4, 2, 1),
                instance_norm: false,
                activation: Activation::LeakyRelu(0.2),
                dropout: true,
            },
            CriticLayer {
                conv: conv(4, 4, 4, 2, 1),
                instance_norm: true,
                activation: Activation::LeakyRelu(0.2),
                dropout: true,
            },
            CriticLayer {
                conv: conv(4, 1, 4, 2, 0),
                instance_norm: false,
                activation: Activation::Identity,
                dropout: false,
            },
        ],
    };

    let batch = 4;
    let dropout_rate = 0.3;
    let mask_seed = seed ^ 0x6d61_736b;
    let mut model = GanModel::<f64>::new(gen_arch, critic_arch, seed).unwrap();
    let z: Tensor<f64> = sample_latent(batch, 8, 1, &mut Rng::from_seed(seed ^ 0x7a));

    // Flatten all trainable parameters of both nets into one vector.
    let mut point = Vec::new();
    for_each_trainable("gen", &mut model.gen, |_, p, _| point.extend_from_slice(p));
    for_each_trainable("critic", &mut model.critic, |_, p, _| {
        point.extend_from_slice(p)
    });

    let loss = |coords: &[f64]| -> f64 {
        let mut m = model.clone();
        let mut offset = 0;
        for_each_trainable("gen", &mut m.gen, |_, p, _| {
            let n = p.len();
            p.copy_from_slice(&coords[offset..offset + n]);
            offset += n;
        });
        for_each_trainable("critic", &mut m.critic, |_, p, _| {
            let n = p.len();
            p.copy_from_slice(&coords[offset..offset + n]);
            offset += n;
        });
        // Frozen dropout: the same mask stream every evaluation.
        let mut mask_rng = Rng::from_seed(mask_seed);
        let fake = generator_forward(&mut m, &z, Mode::Train).unwrap();
        let scores =
            crate::model::critic_forward(&m, &fake, Mode::Train, dropout_rate, &mut mask_rng)
                .unwrap();
        -scores.data().iter().sum::<f64>() / batch as f64
    };

    // Analytic gradient through the real backward path.
    let mut m = model.clone();
    zero_grads(&mut m.gen);
    zero_grads(&mut m.critic);
    let mut mask_rng = Rng::from_seed(mask_seed);
    let (fake, gen_caches) = generator_forward_cached(&mut m, &z, Mode::Train, true).unwrap();
    let (_, critic_caches) =
        critic_forward_cached(&m, &fake, Mode::Train, dropout_rate, &mut mask_rng, true).unwrap();
    let grad_scores =
        Tensor::from_vec(batch, 1, 1, vec![-1.0 / batch as f64; batch]).unwrap();
    let grad_fake = critic_backward(&mut m, &critic_caches, &grad_scores).unwrap();
    generator_backward(&mut m, &gen_caches, &grad_fake).unwrap();

    let mut analytic = Vec::new();
    for_each_trainable("gen", &mut m.gen, |_, _, g| analytic.extend_from_slice(g));
    for_each_trainable("critic", &mut m.critic, |_, _, g| {
        analytic.extend_from_slice(g)
    });

    crate::tensor::gradcheck::max_rel_error(loss, &point, &analytic, h)
}
