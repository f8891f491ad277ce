//! Differentiation machinery for the reconstruction pipeline.
//!
//! Three layers cooperate:
//!
//! * [`Jet2`] carries a value with its first two derivatives in the single
//!   spatial variable `x`, so the surface surrogate yields `h`, `h'`, `h''` in
//!   one forward pass.
//! * [`Tape`] records scalar operations and replays them backwards to get the
//!   gradient of a real loss. Complex quantities enter as `(re, im)` pairs of
//!   real nodes.
//! * Large linear-algebra blocks (the network layers, the MOM assembly, the
//!   dense solve) register hand-written reverse rules instead of one tape node
//!   per flop; see [`mlp`] and [`solve_adjoint`].
//!
//! [`Dual`] is a small forward-mode number used to obtain the local partials
//! of each MOM matrix entry through the same generic kernel code that the
//! forward simulation runs with `f64`.

mod adjoint;
mod dual;
mod jet;
pub mod mlp;
mod tape;

pub use adjoint::{solve_adjoint, SolveAdjoint};
pub use dual::Dual;
pub use jet::Jet2;
pub use mlp::{read_checkpoint, write_checkpoint, InitScheme, Layer, MlpCache, MlpParams, NetShape};
pub use tape::{Gradients, Tape, Var, VarId};

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Real scalar usable by the generic kernels: plain `f64`, [`Dual`], or a
/// tape-tracked [`Var`].
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant living in the same context as `self`.
    fn constant_like(&self, v: f64) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn sigmoid(self) -> Self;
    /// `[J0, Y0, J1, Y1]`; argument must be positive.
    fn bessel01(self) -> [Self; 4];

    fn square(self) -> Self {
        self * self
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivatives of `[J0, Y0, J1, Y1]` given their values at `x`.
pub(crate) fn bessel01_derivatives(x: f64, b: [f64; 4]) -> [f64; 4] {
    let [j0, y0, j1, y1] = b;
    [-j1, -y1, j0 - j1 / x, y0 - y1 / x]
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn constant_like(&self, v: f64) -> Self {
        v
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sigmoid(self) -> Self {
        sigmoid(self)
    }
    fn bessel01(self) -> [Self; 4] {
        crate::specfun::bessel01(self)
    }
}
