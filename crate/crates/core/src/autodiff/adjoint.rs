use crate::error::Result;
use crate::mom::{ComplexMatrix, ComplexVector, LuFactor};
use num_complex::Complex64;

/// Cotangents of `y = A⁻¹ b` for a real loss, in the convention
/// `z̄ = ∂L/∂Re z + i ∂L/∂Im z`.
///
/// `Ā = -b̄ yᴴ` is rank one and is only materialised on request.
#[derive(Debug, Clone)]
pub struct SolveAdjoint {
    pub b_bar: ComplexVector,
    y: ComplexVector,
}

impl SolveAdjoint {
    pub fn a_bar(&self, i: usize, j: usize) -> Complex64 {
        -self.b_bar[i] * self.y[j].conj()
    }

    pub fn a_bar_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.b_bar.len(), self.y.len(), |i, j| self.a_bar(i, j))
    }
}

/// Reverse rule for the dense solve, reusing the forward factorisation:
/// `b̄ = A⁻ᴴ ȳ`, `Ā = -b̄ yᴴ`.
pub fn solve_adjoint(lu: &LuFactor, y: &[Complex64], y_bar: &[Complex64]) -> Result<SolveAdjoint> {
    Ok(SolveAdjoint {
        b_bar: lu.solve_adjoint(y_bar)?,
        y: y.to_vec(),
    })
}
