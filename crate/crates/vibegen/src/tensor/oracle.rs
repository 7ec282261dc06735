//! Deliberately naive reference kernels.
//!
//! Scalar nested loops, one output element at a time, no reuse, no
//! parallelism, strict left-to-right accumulation in ascending
//! `(channel, tap)` order. These exist only to check the production
//! kernels, which visit terms in the same order but fold reductions over
//! fixed lanes; the two paths agree to a few ulps (asserted at 1e-12
//! relative). Kept in the library rather than test code because the
//! gradcheck command and the acceptance suite both call them.

use super::{ConvParams, ConvSpec, Scalar, Tensor};
use crate::error::Result;

/// One output element at a time sliding-window convolution.
pub fn conv1d_naive<P: Scalar>(
    input: &Tensor<P>,
    spec: &ConvSpec,
    params: &ConvParams<P>,
) -> Result<Tensor<P>> {
    let out_len = spec.output_length(input.length)?;
    let (batch, in_ch, len) = input.shape();
    let k = spec.kernel;
    let mut out = Tensor::zeros(batch, spec.out_channels, out_len);
    for b in 0..batch {
        for o in 0..spec.out_channels {
            for t in 0..out_len {
                let mut acc = params.bias[o];
                for c in 0..in_ch {
                    for j in 0..k {
                        let pos = t * spec.stride + j;
                        if pos >= spec.padding && pos - spec.padding < len {
                            acc += params.weight[(o * in_ch + c) * k + j]
                                * input.row(b, c)[pos - spec.padding];
                        }
                    }
                }
                out.row_mut(b, o)[t] = acc;
            }
        }
    }
    Ok(out)
}

/// One output element at a time transposed convolution (gather form).
pub fn conv_transpose1d_naive<P: Scalar>(
    input: &Tensor<P>,
    spec: &ConvSpec,
    params: &ConvParams<P>,
) -> Result<Tensor<P>> {
    let out_len = spec.output_length(input.length)?;
    let (batch, in_ch, len) = input.shape();
    let k = spec.kernel;
    let mut out = Tensor::zeros(batch, spec.out_channels, out_len);
    for b in 0..batch {
        for o in 0..spec.out_channels {
            for t in 0..out_len {
                let mut acc = params.bias[o];
                for c in 0..in_ch {
                    for j in 0..k {
                        // contribution if i*s + j - p == t for some position i
                        let tp = t + spec.padding;
                        if tp >= j && (tp - j) % spec.stride == 0 {
                            let i = (tp - j) / spec.stride;
                            if i < len {
                                acc += params.weight[(c * spec.out_channels + o) * k + j]
                                    * input.row(b, c)[i];
                            }
                        }
                    }
                }
                out.row_mut(b, o)[t] = acc;
            }
        }
    }
    Ok(out)
}
