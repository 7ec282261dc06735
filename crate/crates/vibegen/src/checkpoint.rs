//! Checkpoint serialization.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! magic            4 bytes  "WDCG"
//! version          u32      currently 1
//! precision tag    u8       4 = f32 elements, 8 = f64 elements
//! epoch            u64      completed epochs
//! step             u64      total optimizer steps
//! seed             u64      model seed
//! rng state        4 x u64  training-stream position
//! generator arch   latent_len u32, layer count u32, then per layer:
//!                  in u32, out u32, kernel u32, stride u32, padding u32,
//!                  transposed u8, norm u8, act tag u8, act alpha f64,
//!                  dropout u8
//! critic arch      input_len u32, layer count u32, then per layer as above
//! param records    count u32, then per record: name_len u32, UTF-8 name,
//!                  rank u32, dims u32 x rank, raw IEEE-754 data
//! optimizer flag   u8       0 = absent, 1 = present
//! optimizer block  gen step u64, critic step u64, count u32, records as
//!                  above (names suffixed .m / .v)
//! crc32            u32      IEEE CRC-32 of every preceding byte
//! ```
//!
//! Saving the result of a load reproduces the file byte for byte. A
//! 32-bit-precision file loads into a 64-bit build by widening; narrowing
//! is rejected.

use crate::error::{Error, Result};
use crate::model::{
    BlockParams, CriticArch, CriticLayer, GanModel, GenLayer, GeneratorArch,
};
use crate::tensor::activation::Activation;
use crate::tensor::{ConvSpec, Scalar};
use crate::train::{AdamWState, Moments};
use std::path::Path;

const MAGIC: &[u8; 4] = b"WDCG";
const VERSION: u32 = 1;

/// Everything a checkpoint restores.
#[derive(Debug)]
pub struct Checkpoint<P: Scalar> {
    pub model: GanModel<P>,
    pub optimizer: Option<(AdamWState<P>, AdamWState<P>)>,
    pub rng_state: [u64; 4],
}

// --- CRC-32 (IEEE, reflected) ----------------------------------------------

fn crc32_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut k = 0;
        while k < 8 {
            c = if c & 1 != 0 { 0xedb8_8320 ^ (c >> 1) } else { c >> 1 };
            k += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
}

fn crc32(data: &[u8]) -> u32 {
    let table = crc32_table();
    let mut c = 0xffff_ffffu32;
    for &b in data {
        c = table[((c ^ b as u32) & 0xff) as usize] ^ (c >> 8);
    }
    !c
}

// --- writing ----------------------------------------------------------------

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_layer(out: &mut Vec<u8>, conv: &ConvSpec, norm: bool, act: Activation, dropout: bool) {
    put_u32(out, conv.in_channels as u32);
    put_u32(out, conv.out_channels as u32);
    put_u32(out, conv.kernel as u32);
    put_u32(out, conv.stride as u32);
    put_u32(out, conv.padding as u32);
    out.push(conv.transposed as u8);
    out.push(norm as u8);
    let (tag, alpha) = match act {
        Activation::Identity => (0u8, 0.0f64),
        Activation::Relu => (1, 0.0),
        Activation::LeakyRelu(a) => (2, a),
    };
    out.push(tag);
    out.extend_from_slice(&alpha.to_le_bytes());
    out.push(dropout as u8);
}

fn put_record<P: Scalar>(out: &mut Vec<u8>, name: &str, dims: &[usize], data: &[P]) {
    debug_assert_eq!(dims.iter().product::<usize>(), data.len());
    put_u32(out, name.len() as u32);
    out.extend_from_slice(name.as_bytes());
    put_u32(out, dims.len() as u32);
    for &d in dims {
        put_u32(out, d as u32);
    }
    for &v in data {
        v.write_le(out);
    }
}

fn param_records<P: Scalar>(
    prefix: &str,
    layers_norm: &[bool],
    specs: &[ConvSpec],
    blocks: &[BlockParams<P>],
    out: &mut Vec<(String, Vec<usize>, Vec<P>)>,
) {
    for (i, block) in blocks.iter().enumerate() {
        let spec = &specs[i];
        let wdims = if spec.transposed {
            vec![spec.in_channels, spec.out_channels, spec.kernel]
        } else {
            vec![spec.out_channels, spec.in_channels, spec.kernel]
        };
        out.push((format!("{prefix}.{i}.weight"), wdims, block.conv.weight.clone()));
        out.push((
            format!("{prefix}.{i}.bias"),
            vec![spec.out_channels],
            block.conv.bias.clone(),
        ));
        if layers_norm[i] {
            let n = block.norm.as_ref().expect("arch says norm");
            let c = n.channels();
            out.push((format!("{prefix}.{i}.gain"), vec![c], n.gain.clone()));
            out.push((format!("{prefix}.{i}.shift"), vec![c], n.shift.clone()));
            if let Some(run) = &n.running {
                out.push((format!("{prefix}.{i}.running_mean"), vec![c], run.mean.clone()));
                out.push((format!("{prefix}.{i}.running_var"), vec![c], run.var.clone()));
            }
        }
    }
}

/// Serialize a model (and optionally optimizer state) to `path`.
pub fn save<P: Scalar>(
    path: &Path,
    model: &GanModel<P>,
    optimizer: Option<(&AdamWState<P>, &AdamWState<P>)>,
    rng_state: [u64; 4],
) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    out.push(P::PRECISION_TAG);
    put_u64(&mut out, model.epoch as u64);
    put_u64(&mut out, model.step);
    put_u64(&mut out, model.seed);
    for w in rng_state {
        put_u64(&mut out, w);
    }

    put_u32(&mut out, model.gen_arch.latent_len as u32);
    put_u32(&mut out, model.gen_arch.layers.len() as u32);
    for l in &model.gen_arch.layers {
        put_layer(&mut out, &l.conv, l.batch_norm, l.activation, false);
    }
    put_u32(&mut out, model.critic_arch.input_len as u32);
    put_u32(&mut out, model.critic_arch.layers.len() as u32);
    for l in &model.critic_arch.layers {
        put_layer(&mut out, &l.conv, l.instance_norm, l.activation, l.dropout);
    }

    let mut records = Vec::new();
    let gen_norm: Vec<bool> = model.gen_arch.layers.iter().map(|l| l.batch_norm).collect();
    let gen_specs: Vec<ConvSpec> = model.gen_arch.layers.iter().map(|l| l.conv).collect();
    param_records("gen", &gen_norm, &gen_specs, &model.gen, &mut records);
    let critic_norm: Vec<bool> = model.critic_arch.layers.iter().map(|l| l.instance_norm).collect();
    let critic_specs: Vec<ConvSpec> = model.critic_arch.layers.iter().map(|l| l.conv).collect();
    param_records("critic", &critic_norm, &critic_specs, &model.critic, &mut records);
    put_u32(&mut out, records.len() as u32);
    for (name, dims, data) in &records {
        put_record(&mut out, name, dims, data);
    }

    match optimizer {
        Some((gen_opt, critic_opt)) => {
            out.push(1);
            put_u64(&mut out, gen_opt.step);
            put_u64(&mut out, critic_opt.step);
            let gen_names = crate::model::trainable_names("gen", &model.gen);
            let critic_names = crate::model::trainable_names("critic", &model.critic);
            put_u32(&mut out, 2 * (gen_names.len() + critic_names.len()) as u32);
            for (names, state) in [(&gen_names, gen_opt), (&critic_names, critic_opt)] {
                for (name, mom) in names.iter().zip(&state.moments) {
                    put_record(&mut out, &format!("opt.{name}.m"), &[mom.m.len()], &mom.m);
                    put_record(&mut out, &format!("opt.{name}.v"), &[mom.v.len()], &mom.v);
                }
            }
        }
        None => out.push(0),
    }

    let crc = crc32(&out);
    put_u32(&mut out, crc);
    std::fs::write(path, out)?;
    Ok(())
}

// --- reading ----------------------------------------------------------------

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::Format {
            offset: self.pos as u64,
            reason: reason.into(),
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return self.fail(format!(
                "truncated: needed {n} bytes, {} remain",
                self.bytes.len() - self.pos
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn layer(&mut self) -> Result<(ConvSpec, bool, Activation, bool)> {
        let in_channels = self.u32()? as usize;
        let out_channels = self.u32()? as usize;
        let kernel = self.u32()? as usize;
        let stride = self.u32()? as usize;
        let padding = self.u32()? as usize;
        let transposed = self.u8()? != 0;
        let norm = self.u8()? != 0;
        let tag = self.u8()?;
        let alpha = self.f64()?;
        let act = match tag {
            0 => Activation::Identity,
            1 => Activation::Relu,
            2 => Activation::LeakyRelu(alpha),
            t => return self.fail(format!("unknown activation tag {t}")),
        };
        let dropout = self.u8()? != 0;
        Ok((
            ConvSpec {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                transposed,
            },
            norm,
            act,
            dropout,
        ))
    }

    /// Read one record's payload into `P`, widening from the file's element
    /// width when necessary.
    fn record<P: Scalar>(&mut self, file_tag: u8) -> Result<(String, Vec<usize>, Vec<P>)> {
        let name_len = self.u32()? as usize;
        if name_len > 4096 {
            return self.fail(format!("implausible record name length {name_len}"));
        }
        let name_bytes = self.take(name_len)?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| Error::Format {
                offset: (self.pos - name_len) as u64,
                reason: "record name is not UTF-8".into(),
            })?
            .to_string();
        let rank = self.u32()? as usize;
        if rank > 8 {
            return self.fail(format!("implausible rank {rank}"));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(self.u32()? as usize);
        }
        let count: usize = dims.iter().product();
        let width = file_tag as usize;
        let raw = self.take(count * width)?;
        let data = if file_tag == P::PRECISION_TAG {
            raw.chunks_exact(width).map(P::read_le).collect()
        } else {
            // widening f32 -> f64
            raw.chunks_exact(4)
                .map(|b| P::from_f64(f32::from_le_bytes(b.try_into().unwrap()) as f64))
                .collect()
        };
        Ok((name, dims, data))
    }
}

/// Deserialize a checkpoint. Fails with a byte offset on malformed input.
pub fn load<P: Scalar>(path: &Path) -> Result<Checkpoint<P>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 8 {
        return Err(Error::Format {
            offset: 0,
            reason: format!("file is only {} bytes", bytes.len()),
        });
    }
    let body = &bytes[..bytes.len() - 4];
    let stored_crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let actual_crc = crc32(body);
    if stored_crc != actual_crc {
        return Err(Error::Format {
            offset: (bytes.len() - 4) as u64,
            reason: format!("CRC mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}"),
        });
    }

    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: "bad magic (expected \"WDCG\")".into(),
        });
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let file_tag = r.u8()?;
    if file_tag != 4 && file_tag != 8 {
        return Err(Error::Format {
            offset: 8,
            reason: format!("unknown precision tag {file_tag}"),
        });
    }
    if file_tag > P::PRECISION_TAG {
        return Err(Error::Format {
            offset: 8,
            reason: "cannot narrow a 64-bit checkpoint into a 32-bit build".into(),
        });
    }
    let epoch = r.u64()? as usize;
    let step = r.u64()?;
    let seed = r.u64()?;
    let mut rng_state = [0u64; 4];
    for w in &mut rng_state {
        *w = r.u64()?;
    }

    let latent_len = r.u32()? as usize;
    let gen_layers = r.u32()? as usize;
    if gen_layers > 1024 {
        return r.fail(format!("implausible generator layer count {gen_layers}"));
    }
    let mut gen_arch = GeneratorArch {
        latent_len,
        layers: Vec::with_capacity(gen_layers),
    };
    for _ in 0..gen_layers {
        let (conv, norm, act, _) = r.layer()?;
        gen_arch.layers.push(GenLayer {
            conv,
            batch_norm: norm,
            activation: act,
        });
    }
    let input_len = r.u32()? as usize;
    let critic_layers = r.u32()? as usize;
    if critic_layers > 1024 {
        return r.fail(format!("implausible critic layer count {critic_layers}"));
    }
    let mut critic_arch = CriticArch {
        input_len,
        layers: Vec::with_capacity(critic_layers),
    };
    for _ in 0..critic_layers {
        let (conv, norm, act, dropout) = r.layer()?;
        critic_arch.layers.push(CriticLayer {
            conv,
            instance_norm: norm,
            activation: act,
            dropout,
        });
    }

    let mut model = GanModel::<P>::zeroed(gen_arch, critic_arch, seed).map_err(|e| match e {
        Error::Config(reason) => Error::Format {
            offset: r.pos as u64,
            reason: format!("invalid architecture: {reason}"),
        },
        other => other,
    })?;
    model.epoch = epoch;
    model.step = step;

    let record_count = r.u32()? as usize;
    for _ in 0..record_count {
        let record_offset = r.pos as u64;
        let (name, _, data) = r.record::<P>(file_tag)?;
        if !apply_record(&mut model, &name, data) {
            return Err(Error::Format {
                offset: record_offset,
                reason: format!("record {name:?} does not match the architecture"),
            });
        }
    }

    let optimizer = if r.u8()? == 1 {
        let gen_step = r.u64()?;
        let critic_step = r.u64()?;
        let mut gen_opt = AdamWState::new_for(&mut model.gen);
        gen_opt.step = gen_step;
        let mut critic_opt = AdamWState::new_for(&mut model.critic);
        critic_opt.step = critic_step;

        // Map visitation order to moment indices per network.
        let mut names: Vec<(String, usize, usize)> = Vec::new(); // (name, net, idx)
        for (i, name) in crate::model::trainable_names("gen", &model.gen).into_iter().enumerate() {
            names.push((name, 0, i));
        }
        for (i, name) in crate::model::trainable_names("critic", &model.critic)
            .into_iter()
            .enumerate()
        {
            names.push((name, 1, i));
        }

        let opt_count = r.u32()? as usize;
        for _ in 0..opt_count {
            let record_offset = r.pos as u64;
            let (name, _, data) = r.record::<P>(file_tag)?;
            let bad = || Error::Format {
                offset: record_offset,
                reason: format!("optimizer record {name:?} does not match the architecture"),
            };
            let rest = name.strip_prefix("opt.").ok_or_else(bad)?;
            let (param_name, which) = rest
                .strip_suffix(".m")
                .map(|p| (p, true))
                .or_else(|| rest.strip_suffix(".v").map(|p| (p, false)))
                .ok_or_else(bad)?;
            let (_, net, idx) = names
                .iter()
                .find(|(n, _, _)| n == param_name)
                .ok_or_else(bad)?;
            let state = if *net == 0 { &mut gen_opt } else { &mut critic_opt };
            let mom: &mut Moments<P> = &mut state.moments[*idx];
            let target = if which { &mut mom.m } else { &mut mom.v };
            if target.len() != data.len() {
                return Err(bad());
            }
            *target = data;
        }
        Some((gen_opt, critic_opt))
    } else {
        None
    };

    if r.pos != body.len() {
        return Err(Error::Format {
            offset: r.pos as u64,
            reason: format!("{} trailing bytes before CRC", body.len() - r.pos),
        });
    }

    Ok(Checkpoint {
        model,
        optimizer,
        rng_state,
    })
}

fn apply_record<P: Scalar>(model: &mut GanModel<P>, name: &str, data: Vec<P>) -> bool {
    let mut parts = name.splitn(3, '.');
    let (Some(net), Some(idx), Some(field)) = (parts.next(), parts.next(), parts.next()) else {
        return false;
    };
    let Ok(idx) = idx.parse::<usize>() else {
        return false;
    };
    let blocks = match net {
        "gen" => &mut model.gen,
        "critic" => &mut model.critic,
        _ => return false,
    };
    let Some(block) = blocks.get_mut(idx) else {
        return false;
    };
    let slot: &mut Vec<P> = match field {
        "weight" => &mut block.conv.weight,
        "bias" => &mut block.conv.bias,
        "gain" => match block.norm.as_mut() {
            Some(n) => &mut n.gain,
            None => return false,
        },
        "shift" => match block.norm.as_mut() {
            Some(n) => &mut n.shift,
            None => return false,
        },
        "running_mean" => match block.norm.as_mut().and_then(|n| n.running.as_mut()) {
            Some(run) => &mut run.mean,
            None => return false,
        },
        "running_var" => match block.norm.as_mut().and_then(|n| n.running.as_mut()) {
            Some(run) => &mut run.var,
            None => return false,
        },
        _ => return false,
    };
    if slot.len() != data.len() {
        return false;
    }
    *slot = data;
    true
}
