//! Stability exponent and dimension parameters.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Stability exponent alpha in (0, 2) and spatial/velocity dimension.
///
/// Only dim = 1 is exercised by the test suite; the data model permits
/// larger dimensions for the closed-form constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaParams {
    alpha: f64,
    dim: u32,
}

impl AlphaParams {
    pub fn new(alpha: f64, dim: u32) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!(
                "alpha must lie strictly inside (0, 2), got {alpha}"
            )));
        }
        if dim < 1 {
            return Err(Error::Domain("dim must be >= 1".into()));
        }
        Ok(Self { alpha, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Amplitude of the equilibrium tail: mu_alpha(v) ~ A |v|^{-d-alpha}
    /// (d = 1), from the Fourier-side expansion of the profile at xi = 0.
    pub fn tail_amplitude(&self) -> f64 {
        let a = self.alpha;
        crate::specfun::gamma(1.0 + a) * (std::f64::consts::PI * a / 2.0).sin()
            / (std::f64::consts::PI * a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_boundary_alpha() {
        assert!(AlphaParams::new(0.0, 1).is_err());
        assert!(AlphaParams::new(2.0, 1).is_err());
        assert!(AlphaParams::new(-0.3, 1).is_err());
        assert!(AlphaParams::new(2.5, 1).is_err());
        assert!(AlphaParams::new(f64::NAN, 1).is_err());
        assert!(AlphaParams::new(1.0, 0).is_err());
        assert!(AlphaParams::new(1.0, 1).is_ok());
        assert!(AlphaParams::new(1.99, 3).is_ok());
    }

    #[test]
    fn tail_amplitude_cauchy() {
        // alpha = 1: mu is the Cauchy density, tail 1/(pi v^2)
        let p = AlphaParams::new(1.0, 1).unwrap();
        assert!((p.tail_amplitude() - 1.0 / PI).abs() < 1e-14);
    }
}
