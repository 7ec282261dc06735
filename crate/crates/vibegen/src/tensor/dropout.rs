//! Inverted dropout.
//!
//! Train mode zeroes each element independently with probability `rate` and
//! scales survivors by `1 / (1 - rate)`, so inference needs no rescaling and
//! is a plain identity.

use super::{Mode, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Multiplier per element: `0` or `1/(1-rate)`. Reused by the backward pass
/// and by gradient checks that need a frozen mask.
#[derive(Debug, Clone)]
pub struct DropoutMask<P: Scalar> {
    scale: Vec<P>,
}

impl<P: Scalar> DropoutMask<P> {
    /// Identity mask (used in infer mode and for rate 0).
    pub fn identity(len: usize) -> Self {
        DropoutMask {
            scale: vec![P::ONE; len],
        }
    }

    pub fn sample(len: usize, rate: f64, rng: &mut Rng) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        if rate == 0.0 {
            return Ok(Self::identity(len));
        }
        let keep_scale = P::from_f64(1.0 / (1.0 - rate));
        let scale = (0..len)
            .map(|_| {
                if rng.next_f64() < rate {
                    P::ZERO
                } else {
                    keep_scale
                }
            })
            .collect();
        Ok(DropoutMask { scale })
    }

    pub fn apply(&self, t: &Tensor<P>) -> Tensor<P> {
        debug_assert_eq!(self.scale.len(), t.len());
        let data = t.data().iter().zip(&self.scale).map(|(&x, &s)| x * s).collect();
        Tensor::from_vec(t.batch, t.channels, t.length, data).unwrap()
    }
}

/// Forward dropout; returns the output and the mask used (identity in infer
/// mode). The backward pass is `mask.apply(grad_out)`.
pub fn dropout<P: Scalar>(
    input: &Tensor<P>,
    rate: f64,
    rng: &mut Rng,
    mode: Mode,
) -> Result<(Tensor<P>, DropoutMask<P>)> {
    let mask = match mode {
        Mode::Train => DropoutMask::sample(input.len(), rate, rng)?,
        Mode::Infer => {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Config(format!(
                    "dropout rate must be in [0, 1), got {rate}"
                )));
            }
            DropoutMask::identity(input.len())
        }
    };
    Ok((mask.apply(input), mask))
}
