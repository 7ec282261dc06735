//! Dense tensors and hand-written layer kernels.
//!
//! Everything operates on a contiguous `(batch, channels, length)` buffer in
//! row-major order. Precision is selected by instantiating the module at
//! `f32` (training) or `f64` (gradient checks); the [`Scalar`] trait carries
//! the small amount of float surface the kernels need.
//!
//! Backward passes are written per layer; there is no computation graph. The
//! model is a fixed chain, and explicit kernels are straightforward to verify
//! against central finite differences (see [`gradcheck`]).

pub mod activation;
pub mod conv;
pub mod dropout;
pub mod gradcheck;
pub mod norm;
pub mod oracle;
mod par;

use crate::error::{Error, Result};

/// Element type for tensors: `f32` for training speed, `f64` for checks.
pub trait Scalar:
    Copy
    + PartialOrd
    + std::fmt::Debug
    + std::fmt::Display
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + Send
    + Sync
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    /// Byte width written into checkpoint headers (4 or 8).
    const PRECISION_TAG: u8;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn is_finite(self) -> bool;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn min(self, other: Self) -> Self;
    fn max(self, other: Self) -> Self;
    /// Raw bits widened to u64, for hashing parameter states in tests.
    fn to_bits_u64(self) -> u64;
    fn write_le(self, out: &mut Vec<u8>);
    /// Reads `PRECISION_TAG` bytes.
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const PRECISION_TAG: u8 = 4;

    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
    fn abs(self) -> Self {
        f32::abs(self)
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn min(self, other: Self) -> Self {
        f32::min(self, other)
    }
    fn max(self, other: Self) -> Self {
        f32::max(self, other)
    }
    fn to_bits_u64(self) -> u64 {
        self.to_bits() as u64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().unwrap())
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const PRECISION_TAG: u8 = 8;

    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn min(self, other: Self) -> Self {
        f64::min(self, other)
    }
    fn max(self, other: Self) -> Self {
        f64::max(self, other)
    }
    fn to_bits_u64(self) -> u64 {
        self.to_bits()
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().unwrap())
    }
}

/// Dense 3-axis tensor: `(batch, channels, length)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<P: Scalar> {
    pub batch: usize,
    pub channels: usize,
    pub length: usize,
    data: Vec<P>,
}

impl<P: Scalar> Tensor<P> {
    pub fn zeros(batch: usize, channels: usize, length: usize) -> Self {
        Tensor {
            batch,
            channels,
            length,
            data: vec![P::ZERO; batch * channels * length],
        }
    }

    /// Wrap a buffer; `data.len()` must equal `batch * channels * length`.
    pub fn from_vec(batch: usize, channels: usize, length: usize, data: Vec<P>) -> Result<Self> {
        if data.len() != batch * channels * length {
            return Err(Error::Dimension {
                op: "Tensor::from_vec",
                axis: "data",
                expected: batch * channels * length,
                got: data.len(),
            });
        }
        Ok(Tensor {
            batch,
            channels,
            length,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.channels, self.length)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[P] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [P] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<P> {
        self.data
    }

    /// One `(batch, channel)` row of length `length`.
    #[inline]
    pub fn row(&self, b: usize, c: usize) -> &[P] {
        let start = (b * self.channels + c) * self.length;
        &self.data[start..start + self.length]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [P] {
        let start = (b * self.channels + c) * self.length;
        &mut self.data[start..start + self.length]
    }

    /// All channels of one batch element, `channels * length` values.
    #[inline]
    pub fn sample(&self, b: usize) -> &[P] {
        let per = self.channels * self.length;
        &self.data[b * per..(b + 1) * per]
    }

    /// Explicit non-finite scan; returns the flat index of the first bad value.
    pub fn check_finite(&self) -> Result<()> {
        for (i, v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Data {
                    index: i,
                    reason: format!("non-finite value {v}"),
                });
            }
        }
        Ok(())
    }

    /// Widen or narrow the element type (exact when widening f32 -> f64).
    pub fn convert<Q: Scalar>(&self) -> Tensor<Q> {
        Tensor {
            batch: self.batch,
            channels: self.channels,
            length: self.length,
            data: self.data.iter().map(|v| Q::from_f64(v.to_f64())).collect(),
        }
    }
}

/// Hyperparameters of one (possibly transposed) 1-D convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub transposed: bool,
}

impl ConvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kernel < 1 {
            return Err(Error::Config("kernel must be >= 1".into()));
        }
        if self.stride < 1 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        if self.in_channels < 1 || self.out_channels < 1 {
            return Err(Error::Config("channel counts must be >= 1".into()));
        }
        Ok(())
    }

    /// Output length for the given input length.
    ///
    /// Forward conv: `floor((L + 2p - k) / s) + 1`; transposed conv:
    /// `(L - 1) * s - 2p + k`. Errors when the result would not be positive.
    pub fn output_length(&self, input_len: usize) -> Result<usize> {
        self.validate()?;
        if self.transposed {
            let raw = (input_len - 1) * self.stride + self.kernel;
            if raw <= 2 * self.padding {
                return Err(Error::Config(format!(
                    "transposed conv output length {} - {} not positive",
                    raw,
                    2 * self.padding
                )));
            }
            Ok(raw - 2 * self.padding)
        } else {
            let padded = input_len + 2 * self.padding;
            if padded < self.kernel {
                return Err(Error::Config(format!(
                    "conv kernel {} exceeds padded input {padded}",
                    self.kernel
                )));
            }
            Ok((padded - self.kernel) / self.stride + 1)
        }
    }

    /// Weight element count. Layout is `[out][in][k]` for forward convs and
    /// `[in][out][k]` for transposed convs.
    pub fn weight_len(&self) -> usize {
        self.in_channels * self.out_channels * self.kernel
    }
}

/// Weights, biases, and paired gradient buffers for one convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<P: Scalar> {
    pub weight: Vec<P>,
    pub bias: Vec<P>,
    pub grad_weight: Vec<P>,
    pub grad_bias: Vec<P>,
}

impl<P: Scalar> ConvParams<P> {
    pub fn zeros(spec: &ConvSpec) -> Self {
        ConvParams {
            weight: vec![P::ZERO; spec.weight_len()],
            bias: vec![P::ZERO; spec.out_channels],
            grad_weight: vec![P::ZERO; spec.weight_len()],
            grad_bias: vec![P::ZERO; spec.out_channels],
        }
    }

    /// DCGAN-style init: weights ~ N(0, 0.02), biases zero.
    pub fn init(spec: &ConvSpec, rng: &mut crate::rng::Rng) -> Self {
        let mut p = Self::zeros(spec);
        for w in &mut p.weight {
            *w = P::from_f64(rng.normal_f64() * 0.02);
        }
        p
    }

    pub fn zero_grad(&mut self) {
        self.grad_weight.fill(P::ZERO);
        self.grad_bias.fill(P::ZERO);
    }
}

/// Per-channel gain/shift plus optional running statistics.
///
/// Batch norm layers keep running statistics for inference; instance norm
/// layers always use current statistics and set `running` to `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormParams<P: Scalar> {
    pub gain: Vec<P>,
    pub shift: Vec<P>,
    pub grad_gain: Vec<P>,
    pub grad_shift: Vec<P>,
    pub running: Option<RunningStats<P>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats<P: Scalar> {
    pub mean: Vec<P>,
    pub var: Vec<P>,
}

impl<P: Scalar> NormParams<P> {
    /// gain = 1, shift = 0; running mean 0 / var 1 when tracked.
    pub fn init(channels: usize, track_running: bool) -> Self {
        NormParams {
            gain: vec![P::ONE; channels],
            shift: vec![P::ZERO; channels],
            grad_gain: vec![P::ZERO; channels],
            grad_shift: vec![P::ZERO; channels],
            running: track_running.then(|| RunningStats {
                mean: vec![P::ZERO; channels],
                var: vec![P::ONE; channels],
            }),
        }
    }

    pub fn channels(&self) -> usize {
        self.gain.len()
    }

    pub fn zero_grad(&mut self) {
        self.grad_gain.fill(P::ZERO);
        self.grad_shift.fill(P::ZERO);
    }
}

/// Train/inference switch for layers whose behavior differs between the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_wrong_length() {
        let err = Tensor::<f32>::from_vec(2, 3, 4, vec![0.0; 23]).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 24, got: 23, .. }));
    }

    #[test]
    fn check_finite_reports_index() {
        let mut t = Tensor::<f64>::zeros(1, 1, 4);
        t.data_mut()[2] = f64::NAN;
        let err = t.check_finite().unwrap_err();
        assert!(matches!(err, Error::Data { index: 2, .. }));
    }

    #[test]
    fn output_length_formulas() {
        let conv = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel: 4,
            stride: 2,
            padding: 1,
            transposed: false,
        };
        assert_eq!(conv.output_length(1024).unwrap(), 512);

        let last = ConvSpec {
            in_channels: 128,
            out_channels: 1,
            kernel: 64,
            stride: 2,
            padding: 0,
            transposed: false,
        };
        assert_eq!(last.output_length(64).unwrap(), 1);

        let tconv = ConvSpec {
            in_channels: 256,
            out_channels: 128,
            kernel: 64,
            stride: 2,
            padding: 0,
            transposed: true,
        };
        assert_eq!(tconv.output_length(1).unwrap(), 64);

        let tconv_last = ConvSpec {
            in_channels: 16,
            out_channels: 1,
            kernel: 4,
            stride: 2,
            padding: 1,
            transposed: true,
        };
        assert_eq!(tconv_last.output_length(512).unwrap(), 1024);
    }

    #[test]
    fn output_length_rejects_too_small_input() {
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel: 8,
            stride: 1,
            padding: 0,
            transposed: false,
        };
        assert!(spec.output_length(4).is_err());
    }

    #[test]
    fn zero_grad_clears_buffers() {
        let spec = ConvSpec {
            in_channels: 2,
            out_channels: 3,
            kernel: 4,
            stride: 1,
            padding: 0,
            transposed: false,
        };
        let mut p = ConvParams::<f64>::zeros(&spec);
        p.grad_weight.fill(1.5);
        p.grad_bias.fill(-2.0);
        p.zero_grad();
        assert!(p.grad_weight.iter().all(|&g| g == 0.0));
        assert!(p.grad_bias.iter().all(|&g| g == 0.0));
    }
}
