//! Batch and instance normalization with hand-written backward passes.
//!
//! Both use `(x - mean) / sqrt(var + EPS) * gain + shift` with the biased
//! (population) variance. Batch norm computes statistics per channel over
//! the `(batch, length)` axes and maintains running statistics (momentum
//! 0.1, updated from the same biased batch variance it normalizes with);
//! instance norm computes statistics per `(batch, channel)` over the length
//! axis only and keeps no running state.

use super::{Mode, NormParams, Scalar, Tensor};
use crate::error::{Error, Result};

pub const EPS: f64 = 1e-5;
pub const MOMENTUM: f64 = 0.1;

/// Saved forward quantities needed by the backward passes.
///
/// `group_size` is the number of elements each mean/var was computed over:
/// `batch * length` for batch norm, `length` for instance norm.
#[derive(Debug, Clone)]
pub struct NormCache<P: Scalar> {
    pub xhat: Tensor<P>,
    pub inv_std: Vec<P>,
    pub group_size: usize,
}

fn check_channels<P: Scalar>(op: &'static str, input: &Tensor<P>, params: &NormParams<P>) -> Result<()> {
    if input.channels != params.channels() {
        return Err(Error::Dimension {
            op,
            axis: "channels",
            expected: params.channels(),
            got: input.channels,
        });
    }
    Ok(())
}

/// Per-channel normalization over the `(batch, length)` axes.
///
/// Train mode normalizes with batch statistics and updates the running
/// statistics; infer mode normalizes with the running statistics. Returns
/// the cache only in train mode.
pub fn batchnorm1d<P: Scalar>(
    input: &Tensor<P>,
    params: &mut NormParams<P>,
    mode: Mode,
) -> Result<(Tensor<P>, Option<NormCache<P>>)> {
    check_channels("batchnorm1d", input, params)?;
    let (batch, channels, length) = input.shape();
    let group = batch * length;

    match mode {
        Mode::Train => {
            if group < 2 {
                return Err(Error::DegenerateStats(format!(
                    "batch norm needs more than one element per channel, got {group}"
                )));
            }
            let mut out = Tensor::zeros(batch, channels, length);
            let mut xhat = Tensor::zeros(batch, channels, length);
            let mut inv_std = vec![P::ZERO; channels];
            let eps = P::from_f64(EPS);
            for c in 0..channels {
                let mut sum = P::ZERO;
                for b in 0..batch {
                    for &v in input.row(b, c) {
                        sum += v;
                    }
                }
                let n = P::from_f64(group as f64);
                let mean = sum / n;
                let mut var_sum = P::ZERO;
                for b in 0..batch {
                    for &v in input.row(b, c) {
                        let d = v - mean;
                        var_sum += d * d;
                    }
                }
                let var = var_sum / n;
                let istd = P::ONE / (var + eps).sqrt();
                inv_std[c] = istd;
                let (gain, shift) = (params.gain[c], params.shift[c]);
                for b in 0..batch {
                    let xr = input.row(b, c);
                    let xh = xhat.row_mut(b, c);
                    for (x, h) in xr.iter().zip(xh.iter_mut()) {
                        *h = (*x - mean) * istd;
                    }
                }
                for b in 0..batch {
                    let xh = xhat.row(b, c);
                    let yr = out.row_mut(b, c);
                    for (h, y) in xh.iter().zip(yr.iter_mut()) {
                        *y = *h * gain + shift;
                    }
                }
                if let Some(run) = params.running.as_mut() {
                    let m = P::from_f64(MOMENTUM);
                    run.mean[c] = (P::ONE - m) * run.mean[c] + m * mean;
                    run.var[c] = (P::ONE - m) * run.var[c] + m * var;
                }
            }
            Ok((
                out,
                Some(NormCache {
                    xhat,
                    inv_std,
                    group_size: group,
                }),
            ))
        }
        Mode::Infer => {
            let run = params.running.as_ref().ok_or_else(|| {
                Error::Config("batch norm inference requires running statistics".into())
            })?;
            let mut out = Tensor::zeros(batch, channels, length);
            let eps = P::from_f64(EPS);
            for c in 0..channels {
                let istd = P::ONE / (run.var[c] + eps).sqrt();
                let (mean, gain, shift) = (run.mean[c], params.gain[c], params.shift[c]);
                for b in 0..batch {
                    let xr = input.row(b, c);
                    let yr = out.row_mut(b, c);
                    for (x, y) in xr.iter().zip(yr.iter_mut()) {
                        *y = (*x - mean) * istd * gain + shift;
                    }
                }
            }
            Ok((out, None))
        }
    }
}

/// Backward pass of train-mode batch norm.
///
/// Accumulates gain/shift gradients into `params` and returns the input
/// gradient: `dx = gain * inv_std * (dy - mean(dy) - xhat * mean(dy*xhat))`
/// with the means taken over each channel's normalization group.
pub fn batchnorm1d_backward<P: Scalar>(
    cache: &NormCache<P>,
    grad_out: &Tensor<P>,
    params: &mut NormParams<P>,
) -> Result<Tensor<P>> {
    check_channels("batchnorm1d_backward", grad_out, params)?;
    let (batch, channels, length) = grad_out.shape();
    if cache.xhat.shape() != grad_out.shape() {
        return Err(Error::Dimension {
            op: "batchnorm1d_backward",
            axis: "length",
            expected: cache.xhat.length,
            got: length,
        });
    }
    let n = P::from_f64(cache.group_size as f64);
    let mut grad_in = Tensor::zeros(batch, channels, length);
    for c in 0..channels {
        let mut sum_dy = P::ZERO;
        let mut sum_dy_xhat = P::ZERO;
        for b in 0..batch {
            let gr = grad_out.row(b, c);
            let hr = cache.xhat.row(b, c);
            for (g, h) in gr.iter().zip(hr) {
                sum_dy += *g;
                sum_dy_xhat += *g * *h;
            }
        }
        params.grad_shift[c] += sum_dy;
        params.grad_gain[c] += sum_dy_xhat;
        let mean_dy = sum_dy / n;
        let mean_dy_xhat = sum_dy_xhat / n;
        let scale = params.gain[c] * cache.inv_std[c];
        for b in 0..batch {
            let gr = grad_out.row(b, c);
            let hr = cache.xhat.row(b, c);
            let out_row = grad_in.row_mut(b, c);
            for ((g, h), gi) in gr.iter().zip(hr).zip(out_row.iter_mut()) {
                *gi = scale * (*g - mean_dy - *h * mean_dy_xhat);
            }
        }
    }
    Ok(grad_in)
}

/// Per-`(batch, channel)` normalization over the length axis. Always uses
/// current statistics, so train and infer behave identically.
pub fn instancenorm1d<P: Scalar>(
    input: &Tensor<P>,
    params: &NormParams<P>,
) -> Result<(Tensor<P>, NormCache<P>)> {
    check_channels("instancenorm1d", input, params)?;
    let (batch, channels, length) = input.shape();
    if length < 2 {
        return Err(Error::DegenerateStats(format!(
            "instance norm needs length > 1, got {length}"
        )));
    }
    let mut out = Tensor::zeros(batch, channels, length);
    let mut xhat = Tensor::zeros(batch, channels, length);
    let mut inv_std = vec![P::ZERO; batch * channels];
    let eps = P::from_f64(EPS);
    let n = P::from_f64(length as f64);
    for b in 0..batch {
        for c in 0..channels {
            let xr = input.row(b, c);
            let mut sum = P::ZERO;
            for &v in xr {
                sum += v;
            }
            let mean = sum / n;
            let mut var_sum = P::ZERO;
            for &v in xr {
                let d = v - mean;
                var_sum += d * d;
            }
            let istd = P::ONE / (var_sum / n + eps).sqrt();
            inv_std[b * channels + c] = istd;
            let (gain, shift) = (params.gain[c], params.shift[c]);
            let hr = xhat.row_mut(b, c);
            for (x, h) in xr.iter().zip(hr.iter_mut()) {
                *h = (*x - mean) * istd;
            }
            let hr = xhat.row(b, c);
            let yr = out.row_mut(b, c);
            for (h, y) in hr.iter().zip(yr.iter_mut()) {
                *y = *h * gain + shift;
            }
        }
    }
    Ok((
        out,
        NormCache {
            xhat,
            inv_std,
            group_size: length,
        },
    ))
}

/// Backward pass of instance norm; same formula as batch norm but per
/// `(batch, channel)` group, with gain/shift gradients reduced per channel.
pub fn instancenorm1d_backward<P: Scalar>(
    cache: &NormCache<P>,
    grad_out: &Tensor<P>,
    params: &mut NormParams<P>,
) -> Result<Tensor<P>> {
    check_channels("instancenorm1d_backward", grad_out, params)?;
    let (batch, channels, length) = grad_out.shape();
    if cache.xhat.shape() != grad_out.shape() {
        return Err(Error::Dimension {
            op: "instancenorm1d_backward",
            axis: "length",
            expected: cache.xhat.length,
            got: length,
        });
    }
    let n = P::from_f64(length as f64);
    let mut grad_in = Tensor::zeros(batch, channels, length);
    for b in 0..batch {
        for c in 0..channels {
            let gr = grad_out.row(b, c);
            let hr = cache.xhat.row(b, c);
            let mut sum_dy = P::ZERO;
            let mut sum_dy_xhat = P::ZERO;
            for (g, h) in gr.iter().zip(hr) {
                sum_dy += *g;
                sum_dy_xhat += *g * *h;
            }
            params.grad_shift[c] += sum_dy;
            params.grad_gain[c] += sum_dy_xhat;
            let mean_dy = sum_dy / n;
            let mean_dy_xhat = sum_dy_xhat / n;
            let scale = params.gain[c] * cache.inv_std[b * channels + c];
            let out_row = grad_in.row_mut(b, c);
            for ((g, h), gi) in gr.iter().zip(hr).zip(out_row.iter_mut()) {
                *gi = scale * (*g - mean_dy - *h * mean_dy_xhat);
            }
        }
    }
    Ok(grad_in)
}
