//! Distribution functions on the torus x velocity lattice.
//!
//! The position variable lives on [0, 2 pi) with m uniform samples and the
//! normalized measure dx/2pi, so the global mass of f equals the x-average
//! of the velocity integrals and the global equilibrium is <f> mu. Solvers
//! and norms work on the x-Fourier side (`ModeState`); the physical array
//! (`PhaseField`) is the exchange format.

use crate::coeffs::HypoCoeffs;
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{VelocityField, VelocityGrid};
use rustfft::num_complex::Complex64;

/// f(x, v) sampled on the m x n lattice, row-major in x.
#[derive(Debug, Clone)]
pub struct PhaseField {
    x_modes: usize,
    grid: VelocityGrid,
    values: Vec<f64>,
    mass: f64,
}

impl PhaseField {
    pub fn new(x_modes: usize, grid: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if x_modes < 2 || x_modes % 2 != 0 {
            return Err(Error::Grid(format!(
                "x sample count must be even and >= 2, got {x_modes}"
            )));
        }
        if values.len() != x_modes * grid.len() {
            return Err(Error::Grid(format!(
                "value count {} does not match {} x {}",
                values.len(),
                x_modes,
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid("phase field contains non-finite values".into()));
        }
        let mass = values.iter().sum::<f64>() * grid.weight() / x_modes as f64;
        Ok(Self {
            x_modes,
            grid,
            values,
            mass,
        })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(
        x_modes: usize,
        grid: &VelocityGrid,
        f: F,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(x_modes * grid.len());
        for ix in 0..x_modes {
            let x = 2.0 * std::f64::consts::PI * ix as f64 / x_modes as f64;
            for &v in grid.nodes() {
                values.push(f(x, v));
            }
        }
        Self::new(x_modes, grid.clone(), values)
    }

    pub fn x_modes(&self) -> usize {
        self.x_modes
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Global mass <f> = (1/2pi) iint f dx dv.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn to_modes(&self) -> ModeState {
        ModeState::from_phase(self)
    }
}

/// x-Fourier representation: rows are x-modes (FFT index order), columns are
/// velocity nodes. Mode 0 carries the x-average.
#[derive(Debug, Clone)]
pub struct ModeState {
    x_modes: usize,
    grid: VelocityGrid,
    data: Vec<Complex64>,
}

impl ModeState {
    pub fn from_phase(f: &PhaseField) -> Self {
        let m = f.x_modes;
        let n = f.grid.len();
        let mut data = vec![Complex64::new(0.0, 0.0); m * n];
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for iv in 0..n {
            for ix in 0..m {
                col[ix] = Complex64::new(f.values[ix * n + iv], 0.0);
            }
            fft::fft_forward(&mut col);
            let scale = 1.0 / m as f64;
            for k in 0..m {
                data[k * n + iv] = col[k] * scale;
            }
        }
        Self {
            x_modes: m,
            grid: f.grid.clone(),
            data,
        }
    }

    pub fn to_phase(&self) -> Result<PhaseField> {
        let m = self.x_modes;
        let n = self.grid.len();
        let mut values = vec![0.0; m * n];
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for iv in 0..n {
            for k in 0..m {
                col[k] = self.data[k * n + iv];
            }
            // inverse of the mean-convention forward: plain inverse DFT sum
            fft::fft_inverse(&mut col);
            for ix in 0..m {
                values[ix * n + iv] = col[ix].re * m as f64;
            }
        }
        PhaseField::new(m, self.grid.clone(), values)
    }

    pub fn x_modes(&self) -> usize {
        self.x_modes
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.grid.len()..(k + 1) * self.grid.len()]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.data[k * n..(k + 1) * n]
    }

    /// Signed x-wavenumber of FFT row k (Nyquist reported as 0 for
    /// derivative purposes).
    pub fn wavenumber(&self, k: usize) -> f64 {
        let m = self.x_modes;
        if k == m / 2 {
            return 0.0;
        }
        if k < m / 2 {
            k as f64
        } else {
            k as f64 - m as f64
        }
    }

    /// Global mass from the zero mode.
    pub fn mass(&self) -> f64 {
        self.row(0).iter().map(|z| z.re).sum::<f64>() * self.grid.weight()
    }

    /// Subtract the global equilibrium <f> mu_hat from the zero mode
    /// (mu_hat must be grid-normalized to unit discrete mass).
    pub fn subtract_global_equilibrium(&mut self, mu_hat: &[f64]) {
        let mass = self.mass();
        let n = self.grid.len();
        for iv in 0..n {
            self.data[iv] -= mass * mu_hat[iv];
        }
    }

    /// Local (per-x) projection onto the equilibrium direction:
    /// per mode k, (Pi f)_k = (int f_k dv) mu_hat.
    pub fn project_local(&self, mu_hat: &[f64]) -> ModeState {
        let m = self.x_modes;
        let n = self.grid.len();
        let h = self.grid.weight();
        let mut out = self.clone();
        for k in 0..m {
            let rho: Complex64 = self.row(k).iter().sum::<Complex64>() * h;
            for iv in 0..n {
                out.data[k * n + iv] = rho * mu_hat[iv];
            }
        }
        out
    }

    /// Weighted norm pieces in L^2_{x,v}(mu^{-1}).
    pub fn norm_bundle(&self, mu: &VelocityField) -> PhaseNorms {
        let m = self.x_modes;
        let n = self.grid.len();
        let h = self.grid.weight();
        let inv_mu: Vec<f64> = mu.values().iter().map(|&x| 1.0 / x).collect();
        let mut l2 = 0.0;
        let mut gx = 0.0;
        let mut gv = 0.0;
        let mut cross = 0.0;
        let mut row = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..m {
            let kw = self.wavenumber(k);
            row.copy_from_slice(self.row(k));
            let mut drow = row.clone();
            fft::spectral_derivative_complex(&mut drow, &self.grid);
            for iv in 0..n {
                let w = inv_mu[iv] * h;
                let f2 = row[iv].norm_sqr();
                l2 += f2 * w;
                gx += kw * kw * f2 * w;
                gv += drow[iv].norm_sqr() * w;
                // <grad_x f, grad_v f>: Re[(i k f) conj(dv f)]
                let ikf = Complex64::new(-kw * row[iv].im, kw * row[iv].re);
                cross += (ikf * drow[iv].conj()).re * w;
            }
        }
        PhaseNorms { l2, gx, gv, cross }
    }
}

/// Squared weighted norm components of a phase-space field.
#[derive(Debug, Clone, Copy)]
pub struct PhaseNorms {
    pub l2: f64,
    pub gx: f64,
    pub gv: f64,
    pub cross: f64,
}

impl PhaseNorms {
    pub fn h1_sq(&self) -> f64 {
        self.l2 + self.gx + self.gv
    }

    pub fn triple_sq(&self, c: &HypoCoeffs) -> f64 {
        self.l2 + c.a * self.gx + c.b * self.gv + 2.0 * c.c * self.cross
    }
}

/// Triple norm squared of a phase field (composite over the norm bundle).
pub fn triple_norm_sq(f: &PhaseField, coeffs: &HypoCoeffs, mu: &VelocityField) -> Result<f64> {
    if !f.grid().same_layout(mu.grid()) {
        return Err(Error::Grid("grid mismatch".into()));
    }
    Ok(f.to_modes().norm_bundle(mu).triple_sq(coeffs))
}
