//! Triple-norm weights (a, b, c) and the splitting parameter epsilon.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Weights of the hypocoercive norm
/// `|||f|||^2 = ||f||^2 + a ||grad_x f||^2 + b ||grad_v f||^2 + 2c <grad_x f, grad_v f>`
/// together with the interpolation parameter epsilon used by the recipe.
///
/// Validity requires c^2 < ab, which makes the norm equivalent to the
/// weighted H^1 norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypoCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub eps: f64,
}

impl HypoCoeffs {
    pub fn new(a: f64, b: f64, c: f64, eps: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c > 0.0 && eps > 0.0) {
            return Err(Error::Domain(format!(
                "coefficients must be positive: a={a}, b={b}, c={c}, eps={eps}"
            )));
        }
        if c * c >= a * b {
            return Err(Error::Domain(format!(
                "norm equivalence requires c^2 < ab: c^2 = {}, ab = {}",
                c * c,
                a * b
            )));
        }
        Ok(Self { a, b, c, eps })
    }

    /// Eigenvalues of the gradient block [[a, c], [c, b]]; both positive
    /// when c^2 < ab.
    pub fn gradient_block_eigenvalues(&self) -> (f64, f64) {
        let tr = self.a + self.b;
        let disc = ((self.a - self.b) * (self.a - self.b) + 4.0 * self.c * self.c).sqrt();
        ((tr - disc) / 2.0, (tr + disc) / 2.0)
    }

    /// Equivalence factors (m, M) with m ||f||_H1^2 <= |||f|||^2 <= M ||f||_H1^2.
    pub fn equivalence_factors(&self) -> (f64, f64) {
        let (lo, hi) = self.gradient_block_eigenvalues();
        (lo.min(1.0), hi.max(1.0))
    }
}
