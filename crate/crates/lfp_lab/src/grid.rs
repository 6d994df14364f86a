//! Uniform truncated velocity lattice and sampled velocity fields.

use crate::error::{Error, Result};

/// Uniform velocity grid on [-V, V) with its discrete Fourier dual.
///
/// Nodes are v_j = -V + j h with h = 2V/n; the dual frequencies are the
/// standard DFT frequencies xi_k = pi k / V in FFT index order (k = 0..n/2-1,
/// then -n/2..-1).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    extent: f64,
    n: usize,
    nodes: Vec<f64>,
    dual_modes: Vec<f64>,
}

impl VelocityGrid {
    pub fn new(extent: f64, n: usize) -> Result<Self> {
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::Grid(format!(
                "extent must be positive, got {extent}"
            )));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::Grid(format!(
                "node count must be even and >= 8, got {n}"
            )));
        }
        let h = 2.0 * extent / n as f64;
        let nodes = (0..n).map(|j| -extent + j as f64 * h).collect();
        let dual_modes = (0..n)
            .map(|k| {
                let k_signed = if k < n / 2 {
                    k as i64
                } else {
                    k as i64 - n as i64
                };
                std::f64::consts::PI * k_signed as f64 / extent
            })
            .collect();
        Ok(Self {
            extent,
            n,
            nodes,
            dual_modes,
        })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing h = 2V/n.
    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    /// Dual-grid spacing pi/V.
    pub fn dual_spacing(&self) -> f64 {
        std::f64::consts::PI / self.extent
    }

    /// Largest resolved frequency pi n / (2V).
    pub fn xi_max(&self) -> f64 {
        std::f64::consts::PI * (self.n as f64 / 2.0) / self.extent
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// DFT frequencies in FFT index order (0, .., n/2-1, -n/2, .., -1) * pi/V.
    pub fn dual_modes(&self) -> &[f64] {
        &self.dual_modes
    }

    /// Quadrature weight of each node (uniform spacing; the periodic
    /// trapezoid rule on [-V, V) has equal weights h).
    pub fn weight(&self) -> f64 {
        self.spacing()
    }

    /// Index of the node closest to v, if v lies within the grid.
    pub fn index_of(&self, v: f64) -> Option<usize> {
        if v < -self.extent || v >= self.extent {
            return None;
        }
        let j = ((v + self.extent) / self.spacing()).round() as usize;
        Some(j.min(self.n - 1))
    }

    pub fn same_layout(&self, other: &VelocityGrid) -> bool {
        self.extent == other.extent && self.n == other.n
    }
}

/// Real-valued function sampled on a [`VelocityGrid`].
#[derive(Debug, Clone)]
pub struct VelocityField {
    grid: VelocityGrid,
    values: Vec<f64>,
    /// Set when the field is known to represent a non-negative density.
    pub is_density: bool,
}

impl VelocityField {
    pub fn new(grid: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid("field contains non-finite values".into()));
        }
        Ok(Self {
            grid,
            values,
            is_density: false,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &VelocityGrid, f: F) -> Result<Self> {
        let values = grid.nodes().iter().map(|&v| f(v)).collect();
        Self::new(grid.clone(), values)
    }

    pub fn zeros(grid: &VelocityGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            is_density: false,
        }
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Trapezoidal (equal-weight) integral over [-V, V).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.weight()
    }

    /// Unweighted L2 norm over [-V, V).
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.weight()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Rescale so the discrete integral is exactly one.
    pub fn normalized(&self) -> VelocityField {
        let mass = self.integral();
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v /= mass;
        }
        out
    }

    pub fn check_same_grid(&self, other: &VelocityField) -> Result<()> {
        if !self.grid.same_layout(other.grid()) {
            return Err(Error::Grid("grid mismatch between fields".into()));
        }
        Ok(())
    }
}
