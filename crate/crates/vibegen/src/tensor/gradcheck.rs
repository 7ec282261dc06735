//! Central finite-difference gradient checks.
//!
//! Every backward kernel in this module tree is validated against
//! `(f(x+h) - f(x-h)) / 2h` in 64-bit, coordinate by coordinate, over the
//! concatenation of layer input and parameters. The relative error uses a
//! `max(|analytic|, |numeric|, 1e-12)` denominator. The checks live in the
//! library (not test code) because the `gradcheck` CLI command runs them too.

use super::activation::Activation;
use super::conv::{conv1d_backward, conv1d_forward, conv_transpose1d_backward, conv_transpose1d_forward};
use super::dropout::DropoutMask;
use super::norm::{batchnorm1d, batchnorm1d_backward, instancenorm1d, instancenorm1d_backward};
use super::{ConvParams, ConvSpec, Mode, NormParams, Tensor};
use crate::rng::Rng;

pub const DEFAULT_STEP: f64 = 1e-6;

/// Coordinates where both sides sit below this are counted as agreeing.
///
/// A central difference of an O(1) loss at `h = 1e-6` carries cancellation
/// noise of roughly `eps * |L| / 2h ~ 1e-11`, so a structurally-zero
/// gradient (e.g. a conv bias that feeds a normalization layer, which
/// subtracts any constant shift exactly) measures as dust on both sides;
/// comparing dust against dust over the 1e-12 denominator would report
/// noise as error.
pub const ZERO_NOISE_FLOOR: f64 = 1e-9;

/// Max relative error between `analytic` and the central difference of
/// `loss` at `point`, perturbing one coordinate at a time by `±h`. The
/// relative error uses a `max(|analytic|, |numeric|, 1e-12)` denominator.
pub fn max_rel_error(
    mut loss: impl FnMut(&[f64]) -> f64,
    point: &[f64],
    analytic: &[f64],
    h: f64,
) -> f64 {
    assert_eq!(point.len(), analytic.len());
    let mut coords = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..coords.len() {
        let saved = coords[i];
        coords[i] = saved + h;
        let up = loss(&coords);
        coords[i] = saved - h;
        let down = loss(&coords);
        coords[i] = saved;
        let numeric = (up - down) / (2.0 * h);
        if numeric.abs() < ZERO_NOISE_FLOOR && analytic[i].abs() < ZERO_NOISE_FLOOR {
            continue;
        }
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-12);
        worst = worst.max((numeric - analytic[i]).abs() / denom);
    }
    worst
}

fn random_vec(n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| rng.normal_f64()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss is `<layer(input), cotangent>` with a fixed random cotangent; the
/// coordinate vector is `[input, weight, bias]`.
pub fn check_conv1d(spec: &ConvSpec, batch: usize, len: usize, seed: u64, h: f64) -> f64 {
    let mut rng = Rng::from_seed(seed);
    let out_len = spec.output_length(len).unwrap();
    let input = random_vec(batch * spec.in_channels * len, &mut rng);
    let weight = random_vec(spec.weight_len(), &mut rng);
    let bias = random_vec(spec.out_channels, &mut rng);
    let cot = random_vec(batch * spec.out_channels * out_len, &mut rng);

    let run = |coords: &[f64]| -> f64 {
        let (x, rest) = coords.split_at(input.len());
        let (w, b) = rest.split_at(weight.len());
        let x = Tensor::from_vec(batch, spec.in_channels, len, x.to_vec()).unwrap();
        let mut params = ConvParams::<f64>::zeros(spec);
        params.weight.copy_from_slice(w);
        params.bias.copy_from_slice(b);
        let y = if spec.transposed {
            conv_transpose1d_forward(&x, spec, &params).unwrap()
        } else {
            conv1d_forward(&x, spec, &params).unwrap()
        };
        dot(y.data(), &cot)
    };

    let mut point = input.clone();
    point.extend_from_slice(&weight);
    point.extend_from_slice(&bias);

    // Analytic gradient via the backward kernel.
    let x = Tensor::from_vec(batch, spec.in_channels, len, input.clone()).unwrap();
    let mut params = ConvParams::<f64>::zeros(spec);
    params.weight.copy_from_slice(&weight);
    params.bias.copy_from_slice(&bias);
    let go = Tensor::from_vec(batch, spec.out_channels, out_len, cot.clone()).unwrap();
    let gi = if spec.transposed {
        conv_transpose1d_backward(&x, &go, spec, &mut params).unwrap()
    } else {
        conv1d_backward(&x, &go, spec, &mut params).unwrap()
    };
    let mut analytic = gi.into_vec();
    analytic.extend_from_slice(&params.grad_weight);
    analytic.extend_from_slice(&params.grad_bias);

    max_rel_error(run, &point, &analytic, h)
}

/// Coordinate vector is `[input, gain, shift]`; train-mode statistics.
pub fn check_batchnorm(batch: usize, channels: usize, len: usize, seed: u64, h: f64) -> f64 {
    let mut rng = Rng::from_seed(seed);
    let input = random_vec(batch * channels * len, &mut rng);
    let gain: Vec<f64> = (0..channels).map(|_| 1.0 + 0.2 * rng.normal_f64()).collect();
    let shift = random_vec(channels, &mut rng);
    let cot = random_vec(batch * channels * len, &mut rng);

    let run = |coords: &[f64]| -> f64 {
        let (x, rest) = coords.split_at(input.len());
        let (g, s) = rest.split_at(channels);
        let x = Tensor::from_vec(batch, channels, len, x.to_vec()).unwrap();
        let mut params = NormParams::<f64>::init(channels, true);
        params.gain.copy_from_slice(g);
        params.shift.copy_from_slice(s);
        let (y, _) = batchnorm1d(&x, &mut params, Mode::Train).unwrap();
        dot(y.data(), &cot)
    };

    let mut point = input.clone();
    point.extend_from_slice(&gain);
    point.extend_from_slice(&shift);

    let x = Tensor::from_vec(batch, channels, len, input.clone()).unwrap();
    let mut params = NormParams::<f64>::init(channels, true);
    params.gain.copy_from_slice(&gain);
    params.shift.copy_from_slice(&shift);
    let (_, cache) = batchnorm1d(&x, &mut params, Mode::Train).unwrap();
    let go = Tensor::from_vec(batch, channels, len, cot.clone()).unwrap();
    let gi = batchnorm1d_backward(&cache.unwrap(), &go, &mut params).unwrap();
    let mut analytic = gi.into_vec();
    analytic.extend_from_slice(&params.grad_gain);
    analytic.extend_from_slice(&params.grad_shift);

    max_rel_error(run, &point, &analytic, h)
}

pub fn check_instancenorm(batch: usize, channels: usize, len: usize, seed: u64, h: f64) -> f64 {
    let mut rng = Rng::from_seed(seed);
    let input = random_vec(batch * channels * len, &mut rng);
    let gain: Vec<f64> = (0..channels).map(|_| 1.0 + 0.2 * rng.normal_f64()).collect();
    let shift = random_vec(channels, &mut rng);
    let cot = random_vec(batch * channels * len, &mut rng);

    let run = |coords: &[f64]| -> f64 {
        let (x, rest) = coords.split_at(input.len());
        let (g, s) = rest.split_at(channels);
        let x = Tensor::from_vec(batch, channels, len, x.to_vec()).unwrap();
        let mut params = NormParams::<f64>::init(channels, false);
        params.gain.copy_from_slice(g);
        params.shift.copy_from_slice(s);
        let (y, _) = instancenorm1d(&x, &params).unwrap();
        dot(y.data(), &cot)
    };

    let mut point = input.clone();
    point.extend_from_slice(&gain);
    point.extend_from_slice(&shift);

    let x = Tensor::from_vec(batch, channels, len, input.clone()).unwrap();
    let mut params = NormParams::<f64>::init(channels, false);
    params.gain.copy_from_slice(&gain);
    params.shift.copy_from_slice(&shift);
    let (_, cache) = instancenorm1d(&x, &params).unwrap();
    let go = Tensor::from_vec(batch, channels, len, cot.clone()).unwrap();
    let gi = instancenorm1d_backward(&cache, &go, &mut params).unwrap();
    let mut analytic = gi.into_vec();
    analytic.extend_from_slice(&params.grad_gain);
    analytic.extend_from_slice(&params.grad_shift);

    max_rel_error(run, &point, &analytic, h)
}

/// Checks leaky-relu (and plain relu via `alpha = 0`) on inputs kept away
/// from the kink at zero.
pub fn check_activation(act: Activation, n: usize, seed: u64, h: f64) -> f64 {
    let mut rng = Rng::from_seed(seed);
    // |x| >= 0.1 so the ±h probe never crosses the kink.
    let input: Vec<f64> = (0..n)
        .map(|_| {
            let v = rng.normal_f64();
            if v.abs() < 0.1 {
                0.1 + v.abs()
            } else {
                v
            }
        })
        .collect();
    let cot = random_vec(n, &mut rng);

    let run = |coords: &[f64]| -> f64 {
        let x = Tensor::from_vec(1, 1, n, coords.to_vec()).unwrap();
        dot(act.forward(&x).data(), &cot)
    };

    let x = Tensor::from_vec(1, 1, n, input.clone()).unwrap();
    let go = Tensor::from_vec(1, 1, n, cot.clone()).unwrap();
    let analytic = act.backward(&x, &go).into_vec();
    max_rel_error(run, &input, &analytic, h)
}

/// Dropout with a frozen mask is a fixed diagonal map; the check exercises
/// the mask-application path used by the real backward pass.
pub fn check_dropout(n: usize, rate: f64, seed: u64, h: f64) -> f64 {
    let mut rng = Rng::from_seed(seed);
    let mask = DropoutMask::<f64>::sample(n, rate, &mut rng).unwrap();
    let input = random_vec(n, &mut rng);
    let cot = random_vec(n, &mut rng);

    let run = |coords: &[f64]| -> f64 {
        let x = Tensor::from_vec(1, 1, n, coords.to_vec()).unwrap();
        dot(mask.apply(&x).data(), &cot)
    };

    let go = Tensor::from_vec(1, 1, n, cot.clone()).unwrap();
    let analytic = mask.apply(&go).into_vec();
    max_rel_error(run, &input, &analytic, h)
}

/// Tolerances: per-layer checks in 64-bit sit far below 1e-5; the end-to-end
/// chain check (in the training module) uses 1e-4.
pub const LAYER_TOLERANCE: f64 = 1e-5;
