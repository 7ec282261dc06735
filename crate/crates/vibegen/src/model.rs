//! Generator and critic assembly.
//!
//! The generator maps a `(B, 256, 1)` standard-normal latent tensor through
//! five transposed convolutions to a `(B, 1, 1024)` signal; the critic maps
//! a `(B, 1, 1024)` signal through five convolutions to one unbounded score
//! per sample. Layer order inside a block is conv, then normalization, then
//! activation, then (critic only) dropout.
//!
//! The latent is 256 channels of length 1: the first transposed conv
//! (kernel 64, stride 2, padding 0) takes length 1 to 64, and the four
//! following (kernel 4, stride 2, padding 1) layers double it to 1024. With
//! a length-256 single-channel reading of the latent the stated layer
//! hyperparameters cannot reach 1024, so the channel reading is the one this
//! crate implements. Channel widths halve per generator layer
//! (256 -> 128 -> 64 -> 32 -> 16 -> 1) and mirror in the critic; both plans
//! are plain fields on the arch descriptors so other plans can be tried.
//!
//! The generator's final layer is linear (no norm, no activation): the
//! training signal is unnormalized, so outputs must span raw amplitudes
//! rather than a squashed range.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::activation::Activation;
use crate::tensor::conv::{
    conv1d_backward, conv1d_forward, conv_transpose1d_backward, conv_transpose1d_forward,
};
use crate::tensor::dropout::DropoutMask;
use crate::tensor::norm::{
    batchnorm1d, batchnorm1d_backward, instancenorm1d, instancenorm1d_backward, NormCache,
};
use crate::tensor::{ConvParams, ConvSpec, Mode, NormParams, Scalar, Tensor};

/// One generator block: transposed conv + optional batch norm + activation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenLayer {
    pub conv: ConvSpec,
    pub batch_norm: bool,
    pub activation: Activation,
}

/// One critic block: conv + optional instance norm + activation + optional
/// dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticLayer {
    pub conv: ConvSpec,
    pub instance_norm: bool,
    pub activation: Activation,
    pub dropout: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorArch {
    /// Length of the latent tensor (channels are `layers[0].conv.in_channels`).
    pub latent_len: usize,
    pub layers: Vec<GenLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticArch {
    /// Expected signal length at the critic input.
    pub input_len: usize,
    pub layers: Vec<CriticLayer>,
}

fn tconv(in_ch: usize, out_ch: usize, k: usize, s: usize, p: usize) -> ConvSpec {
    ConvSpec {
        in_channels: in_ch,
        out_channels: out_ch,
        kernel: k,
        stride: s,
        padding: p,
        transposed: true,
    }
}

fn conv(in_ch: usize, out_ch: usize, k: usize, s: usize, p: usize) -> ConvSpec {
    ConvSpec {
        in_channels: in_ch,
        out_channels: out_ch,
        kernel: k,
        stride: s,
        padding: p,
        transposed: false,
    }
}

impl GeneratorArch {
    /// The reference five-layer generator: (64,2,0) then four (4,2,1)
    /// transposed convolutions, channels 256 -> 128 -> 64 -> 32 -> 16 -> 1,
    /// batch norm + ReLU on all but the linear final layer.
    pub fn reference() -> Self {
        let plan = [256usize, 128, 64, 32, 16, 1];
        let mut layers = Vec::new();
        for i in 0..5 {
            let spec = if i == 0 {
                tconv(plan[0], plan[1], 64, 2, 0)
            } else {
                tconv(plan[i], plan[i + 1], 4, 2, 1)
            };
            layers.push(GenLayer {
                conv: spec,
                batch_norm: i < 4,
                activation: if i < 4 { Activation::Relu } else { Activation::Identity },
            });
        }
        GeneratorArch {
            latent_len: 1,
            layers,
        }
    }

    pub fn latent_channels(&self) -> usize {
        self.layers[0].conv.in_channels
    }

    /// Lengths through the stack, starting at the latent length.
    pub fn length_trace(&self) -> Result<Vec<usize>> {
        let mut trace = vec![self.latent_len];
        for layer in &self.layers {
            trace.push(layer.conv.output_length(*trace.last().unwrap())?);
        }
        Ok(trace)
    }

    pub fn output_length(&self) -> Result<usize> {
        Ok(*self.length_trace()?.last().unwrap())
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("generator needs at least one layer".into()));
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].conv.out_channels != pair[1].conv.in_channels {
                return Err(Error::Config(format!(
                    "generator layer {} emits {} channels but layer {} expects {}",
                    i,
                    pair[0].conv.out_channels,
                    i + 1,
                    pair[1].conv.in_channels
                )));
            }
        }
        for layer in &self.layers {
            if !layer.conv.transposed {
                return Err(Error::Config("generator layers must be transposed convs".into()));
            }
        }
        self.length_trace()?;
        Ok(())
    }
}

impl CriticArch {
    /// The reference five-layer critic: four (4,2,1) convolutions then
    /// (64,2,0), channels 1 -> 16 -> 32 -> 64 -> 128 -> 1, LeakyReLU(0.2) +
    /// dropout on layers 1-4, instance norm on layers 2-4, linear scalar
    /// output.
    pub fn reference() -> Self {
        let plan = [1usize, 16, 32, 64, 128, 1];
        let mut layers = Vec::new();
        for i in 0..5 {
            let spec = if i == 4 {
                conv(plan[4], plan[5], 64, 2, 0)
            } else {
                conv(plan[i], plan[i + 1], 4, 2, 1)
            };
            layers.push(CriticLayer {
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
        CriticArch {
            input_len: 1024,
            layers,
        }
    }

    pub fn length_trace(&self) -> Result<Vec<usize>> {
        let mut trace = vec![self.input_len];
        for layer in &self.layers {
            trace.push(layer.conv.output_length(*trace.last().unwrap())?);
        }
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("critic needs at least one layer".into()));
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].conv.out_channels != pair[1].conv.in_channels {
                return Err(Error::Config(format!(
                    "critic layer {} emits {} channels but layer {} expects {}",
                    i,
                    pair[0].conv.out_channels,
                    i + 1,
                    pair[1].conv.in_channels
                )));
            }
        }
        for layer in &self.layers {
            if layer.conv.transposed {
                return Err(Error::Config("critic layers must be forward convs".into()));
            }
        }
        let trace = self.length_trace()?;
        let last = self.layers.last().unwrap();
        if *trace.last().unwrap() != 1 || last.conv.out_channels != 1 {
            return Err(Error::Config(
                "critic must reduce to one channel of length 1 (a scalar score)".into(),
            ));
        }
        Ok(())
    }
}

/// Trainable state of one block: conv params plus optional norm params.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams<P: Scalar> {
    pub conv: ConvParams<P>,
    pub norm: Option<NormParams<P>>,
}

/// Generator + critic parameters, their arch descriptors, and run metadata.
#[derive(Debug, Clone)]
pub struct GanModel<P: Scalar> {
    pub gen_arch: GeneratorArch,
    pub critic_arch: CriticArch,
    pub gen: Vec<BlockParams<P>>,
    pub critic: Vec<BlockParams<P>>,
    pub seed: u64,
    /// Completed training epochs.
    pub epoch: usize,
    /// Total optimizer steps taken (critic and generator combined).
    pub step: u64,
}

impl<P: Scalar> GanModel<P> {
    /// Build a model with DCGAN-style init: conv weights ~ N(0, 0.02),
    /// biases zero, norm gain 1 / shift 0. All draws come from `seed`.
    pub fn new(gen_arch: GeneratorArch, critic_arch: CriticArch, seed: u64) -> Result<Self> {
        gen_arch.validate()?;
        critic_arch.validate()?;
        let mut rng = Rng::from_seed(seed);
        let gen = gen_arch
            .layers
            .iter()
            .map(|l| BlockParams {
                conv: ConvParams::init(&l.conv, &mut rng),
                norm: l
                    .batch_norm
                    .then(|| NormParams::init(l.conv.out_channels, true)),
            })
            .collect();
        let critic = critic_arch
            .layers
            .iter()
            .map(|l| BlockParams {
                conv: ConvParams::init(&l.conv, &mut rng),
                norm: l
                    .instance_norm
                    .then(|| NormParams::init(l.conv.out_channels, false)),
            })
            .collect();
        Ok(GanModel {
            gen_arch,
            critic_arch,
            gen,
            critic,
            seed,
            epoch: 0,
            step: 0,
        })
    }

    /// The reference architecture at the given seed.
    pub fn reference(seed: u64) -> Self {
        Self::new(GeneratorArch::reference(), CriticArch::reference(), seed)
            .expect("reference arch is valid")
    }

    /// A model with all parameters zero (checkpoint loading overwrites them).
    pub fn zeroed(gen_arch: GeneratorArch, critic_arch: CriticArch, seed: u64) -> Result<Self> {
        gen_arch.validate()?;
        critic_arch.validate()?;
        let gen = gen_arch
            .layers
            .iter()
            .map(|l| BlockParams {
                conv: ConvParams::zeros(&l.conv),
                norm: l
                    .batch_norm
                    .then(|| NormParams::init(l.conv.out_channels, true)),
            })
            .collect();
        let critic = critic_arch
            .layers
            .iter()
            .map(|l| BlockParams {
                conv: ConvParams::zeros(&l.conv),
                norm: l
                    .instance_norm
                    .then(|| NormParams::init(l.conv.out_channels, false)),
            })
            .collect();
        Ok(GanModel {
            gen_arch,
            critic_arch,
            gen,
            critic,
            seed,
            epoch: 0,
            step: 0,
        })
    }

    /// Number of trainable scalars (running statistics excluded).
    pub fn param_count(&self) -> usize {
        let count = |blocks: &[BlockParams<P>]| {
            blocks
                .iter()
                .map(|b| {
                    b.conv.weight.len()
                        + b.conv.bias.len()
                        + b.norm.as_ref().map_or(0, |n| n.gain.len() + n.shift.len())
                })
                .sum::<usize>()
        };
        count(&self.gen) + count(&self.critic)
    }
}

/// Visit every trainable tensor of a parameter list in a fixed order,
/// passing `(name, values, gradient)`. AdamW state and checkpoints rely on
/// this order being stable.
pub fn for_each_trainable<P: Scalar>(
    prefix: &str,
    blocks: &mut [BlockParams<P>],
    mut f: impl FnMut(String, &mut Vec<P>, &Vec<P>),
) {
    for (i, b) in blocks.iter_mut().enumerate() {
        f(format!("{prefix}.{i}.weight"), &mut b.conv.weight, &b.conv.grad_weight);
        f(format!("{prefix}.{i}.bias"), &mut b.conv.bias, &b.conv.grad_bias);
        if let Some(n) = b.norm.as_mut() {
            f(format!("{prefix}.{i}.gain"), &mut n.gain, &n.grad_gain);
            f(format!("{prefix}.{i}.shift"), &mut n.shift, &n.grad_shift);
        }
    }
}

/// Names in the exact order [`for_each_trainable`] visits them.
pub fn trainable_names<P: Scalar>(prefix: &str, blocks: &[BlockParams<P>]) -> Vec<String> {
    let mut names = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        names.push(format!("{prefix}.{i}.weight"));
        names.push(format!("{prefix}.{i}.bias"));
        if b.norm.is_some() {
            names.push(format!("{prefix}.{i}.gain"));
            names.push(format!("{prefix}.{i}.shift"));
        }
    }
    names
}

/// Zero every gradient buffer in a parameter list.
pub fn zero_grads<P: Scalar>(blocks: &mut [BlockParams<P>]) {
    for b in blocks {
        b.conv.zero_grad();
        if let Some(n) = b.norm.as_mut() {
            n.zero_grad();
        }
    }
}

/// FNV-1a over the raw bits of every trainable scalar; running statistics
/// are excluded (they are state, not parameters). Used to assert update
/// isolation between the two networks.
pub fn trainable_hash<P: Scalar>(blocks: &[BlockParams<P>]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    let mut feed = |values: &[P]| {
        for v in values {
            hash ^= v.to_bits_u64();
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for b in blocks {
        feed(&b.conv.weight);
        feed(&b.conv.bias);
        if let Some(n) = &b.norm {
            feed(&n.gain);
            feed(&n.shift);
        }
    }
    hash
}

/// Draw a `(batch, latent_channels, latent_len)` tensor of i.i.d. standard
/// normals.
pub fn sample_latent<P: Scalar>(
    batch: usize,
    channels: usize,
    latent_len: usize,
    rng: &mut Rng,
) -> Tensor<P> {
    let data = (0..batch * channels * latent_len)
        .map(|_| P::from_f64(rng.normal_f64()))
        .collect();
    Tensor::from_vec(batch, channels, latent_len, data).unwrap()
}

/// Per-layer state saved by a cached forward pass.
#[derive(Debug)]
pub struct LayerCache<P: Scalar> {
    conv_input: Tensor<P>,
    norm: Option<NormCache<P>>,
    act_input: Option<Tensor<P>>,
    mask: Option<DropoutMask<P>>,
}

/// Forward through the generator.
///
/// Train mode uses batch statistics and updates running statistics; infer
/// mode uses running statistics and is a deterministic function of
/// `(parameters, z)`.
pub fn generator_forward<P: Scalar>(
    model: &mut GanModel<P>,
    z: &Tensor<P>,
    mode: Mode,
) -> Result<Tensor<P>> {
    let (out, _) = generator_forward_cached(model, z, mode, false)?;
    Ok(out)
}

/// Forward through the generator, optionally keeping per-layer caches for a
/// following [`generator_backward`].
pub fn generator_forward_cached<P: Scalar>(
    model: &mut GanModel<P>,
    z: &Tensor<P>,
    mode: Mode,
    keep_caches: bool,
) -> Result<(Tensor<P>, Vec<LayerCache<P>>)> {
    if z.channels != model.gen_arch.latent_channels() {
        return Err(Error::Dimension {
            op: "generator_forward",
            axis: "channels",
            expected: model.gen_arch.latent_channels(),
            got: z.channels,
        });
    }
    if z.length != model.gen_arch.latent_len {
        return Err(Error::Dimension {
            op: "generator_forward",
            axis: "length",
            expected: model.gen_arch.latent_len,
            got: z.length,
        });
    }
    let mut caches = Vec::new();
    let mut x = z.clone();
    for (layer, block) in model.gen_arch.layers.iter().zip(model.gen.iter_mut()) {
        let conv_out = conv_transpose1d_forward(&x, &layer.conv, &block.conv)?;
        let conv_input = std::mem::replace(&mut x, conv_out);

        let norm_cache = if let Some(norm) = block.norm.as_mut() {
            let (y, cache) = batchnorm1d(&x, norm, mode)?;
            x = y;
            cache
        } else {
            None
        };

        let act_input = if layer.activation == Activation::Identity {
            None
        } else {
            let y = layer.activation.forward(&x);
            Some(std::mem::replace(&mut x, y))
        };

        if keep_caches {
            caches.push(LayerCache {
                conv_input,
                norm: norm_cache,
                act_input,
                mask: None,
            });
        }
    }
    Ok((x, caches))
}

/// Backward through the generator, accumulating parameter gradients. The
/// gradient with respect to the latent is discarded.
pub fn generator_backward<P: Scalar>(
    model: &mut GanModel<P>,
    caches: &[LayerCache<P>],
    grad_out: &Tensor<P>,
) -> Result<()> {
    let mut g = grad_out.clone();
    for ((layer, block), cache) in model
        .gen_arch
        .layers
        .iter()
        .zip(model.gen.iter_mut())
        .zip(caches.iter())
        .rev()
    {
        if let Some(act_input) = &cache.act_input {
            g = layer.activation.backward(act_input, &g);
        }
        if let Some(norm) = block.norm.as_mut() {
            let cache = cache.norm.as_ref().ok_or_else(|| {
                Error::Config("generator backward requires a train-mode forward".into())
            })?;
            g = batchnorm1d_backward(cache, &g, norm)?;
        }
        g = conv_transpose1d_backward(&cache.conv_input, &g, &layer.conv, &mut block.conv)?;
    }
    Ok(())
}

/// Forward through the critic: `(B, 1, input_len)` in, `(B, 1, 1)` scores
/// out. Train mode applies dropout at `dropout_rate` using `rng`.
pub fn critic_forward<P: Scalar>(
    model: &GanModel<P>,
    x: &Tensor<P>,
    mode: Mode,
    dropout_rate: f64,
    rng: &mut Rng,
) -> Result<Tensor<P>> {
    let (out, _) = critic_forward_cached(model, x, mode, dropout_rate, rng, false)?;
    Ok(out)
}

/// Forward through the critic, optionally keeping caches for
/// [`critic_backward`].
pub fn critic_forward_cached<P: Scalar>(
    model: &GanModel<P>,
    x: &Tensor<P>,
    mode: Mode,
    dropout_rate: f64,
    rng: &mut Rng,
    keep_caches: bool,
) -> Result<(Tensor<P>, Vec<LayerCache<P>>)> {
    if x.channels != model.critic_arch.layers[0].conv.in_channels {
        return Err(Error::Dimension {
            op: "critic_forward",
            axis: "channels",
            expected: model.critic_arch.layers[0].conv.in_channels,
            got: x.channels,
        });
    }
    if x.length != model.critic_arch.input_len {
        return Err(Error::Dimension {
            op: "critic_forward",
            axis: "length",
            expected: model.critic_arch.input_len,
            got: x.length,
        });
    }
    let mut caches = Vec::new();
    let mut t = x.clone();
    for (layer, block) in model.critic_arch.layers.iter().zip(model.critic.iter()) {
        let conv_out = conv1d_forward(&t, &layer.conv, &block.conv)?;
        let conv_input = std::mem::replace(&mut t, conv_out);

        let norm_cache = if let Some(norm) = block.norm.as_ref() {
            let (y, cache) = instancenorm1d(&t, norm)?;
            t = y;
            Some(cache)
        } else {
            None
        };

        let act_input = if layer.activation == Activation::Identity {
            None
        } else {
            let y = layer.activation.forward(&t);
            Some(std::mem::replace(&mut t, y))
        };

        let mask = if layer.dropout && mode == Mode::Train {
            let (y, mask) = crate::tensor::dropout::dropout(&t, dropout_rate, rng, mode)?;
            t = y;
            Some(mask)
        } else {
            None
        };

        if keep_caches {
            caches.push(LayerCache {
                conv_input,
                norm: norm_cache,
                act_input,
                mask,
            });
        }
    }
    Ok((t, caches))
}

/// Backward through the critic, accumulating parameter gradients; returns
/// the gradient with respect to the critic input (consumed by generator
/// updates).
pub fn critic_backward<P: Scalar>(
    model: &mut GanModel<P>,
    caches: &[LayerCache<P>],
    grad_out: &Tensor<P>,
) -> Result<Tensor<P>> {
    let mut g = grad_out.clone();
    for ((layer, block), cache) in model
        .critic_arch
        .layers
        .iter()
        .zip(model.critic.iter_mut())
        .zip(caches.iter())
        .rev()
    {
        if let Some(mask) = &cache.mask {
            g = mask.apply(&g);
        }
        if let Some(act_input) = &cache.act_input {
            g = layer.activation.backward(act_input, &g);
        }
        if let Some(norm) = block.norm.as_mut() {
            g = instancenorm1d_backward(cache.norm.as_ref().unwrap(), &g, norm)?;
        }
        g = conv1d_backward(&cache.conv_input, &g, &layer.conv, &mut block.conv)?;
    }
    Ok(g)
}
