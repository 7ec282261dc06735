//! Elementwise activations.

use super::{Scalar, Tensor};

/// Activation applied after a layer. The backward pass keys off the
/// forward-pass input sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    /// `x` for `x >= 0`, `alpha * x` otherwise.
    LeakyRelu(f64),
}

impl Activation {
    pub fn forward<P: Scalar>(&self, input: &Tensor<P>) -> Tensor<P> {
        match self {
            Activation::Identity => input.clone(),
            Activation::Relu => map(input, |x| if x >= P::ZERO { x } else { P::ZERO }),
            Activation::LeakyRelu(alpha) => {
                let a = P::from_f64(*alpha);
                map(input, |x| if x >= P::ZERO { x } else { a * x })
            }
        }
    }

    /// `grad_in = grad_out * f'(input)` using the saved forward input.
    pub fn backward<P: Scalar>(&self, input: &Tensor<P>, grad_out: &Tensor<P>) -> Tensor<P> {
        debug_assert_eq!(input.shape(), grad_out.shape());
        match self {
            Activation::Identity => grad_out.clone(),
            Activation::Relu => zip_map(input, grad_out, |x, g| {
                if x >= P::ZERO {
                    g
                } else {
                    P::ZERO
                }
            }),
            Activation::LeakyRelu(alpha) => {
                let a = P::from_f64(*alpha);
                zip_map(input, grad_out, |x, g| if x >= P::ZERO { g } else { a * g })
            }
        }
    }
}

fn map<P: Scalar>(t: &Tensor<P>, f: impl Fn(P) -> P) -> Tensor<P> {
    let data = t.data().iter().map(|&x| f(x)).collect();
    Tensor::from_vec(t.batch, t.channels, t.length, data).unwrap()
}

fn zip_map<P: Scalar>(a: &Tensor<P>, b: &Tensor<P>, f: impl Fn(P, P) -> P) -> Tensor<P> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::from_vec(a.batch, a.channels, a.length, data).unwrap()
}
