//! Thin FFT layer: spectral derivatives, Fourier multipliers, and the
//! mapping between DFT output and the continuum transform convention
//! F g(xi) = int e^{-i v xi} g(v) dv (inverse carries 1/(2 pi)).

use crate::grid::{VelocityField, VelocityGrid};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut map = cell.borrow_mut();
        map.entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// In-place unnormalized forward DFT.
pub fn fft_forward(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

/// In-place inverse DFT including the 1/n normalization.
pub fn fft_inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, true).process(buf);
    let scale = 1.0 / n as f64;
    for z in buf.iter_mut() {
        *z *= scale;
    }
}

pub fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

pub fn real_parts(buf: &[Complex64]) -> Vec<f64> {
    buf.iter().map(|z| z.re).collect()
}

/// Apply a real Fourier multiplier m(xi) to a real field: IDFT(m . DFT(g)).
///
/// The phase factors from the grid offset cancel, so the plain DFT index
/// pairing with the grid's dual modes is exact.
pub fn apply_multiplier(field: &[f64], grid: &VelocityGrid, m: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut buf = to_complex(field);
    fft_forward(&mut buf);
    for (z, &xi) in buf.iter_mut().zip(grid.dual_modes()) {
        *z *= m(xi);
    }
    fft_inverse(&mut buf);
    real_parts(&buf)
}

/// Spectral derivative d/dv of a real field; the Nyquist mode is zeroed to
/// keep the operator real and exactly skew-symmetric.
pub fn spectral_derivative(field: &[f64], grid: &VelocityGrid) -> Vec<f64> {
    let n = field.len();
    let mut buf = to_complex(field);
    fft_forward(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        if k == n / 2 {
            *z = Complex64::new(0.0, 0.0);
        } else {
            let xi = grid.dual_modes()[k];
            *z *= Complex64::new(0.0, xi);
        }
    }
    fft_inverse(&mut buf);
    real_parts(&buf)
}

/// Same as [`spectral_derivative`] for a complex-valued sample row.
pub fn spectral_derivative_complex(row: &mut [Complex64], grid: &VelocityGrid) {
    let n = row.len();
    fft_forward(row);
    for (k, z) in row.iter_mut().enumerate() {
        if k == n / 2 {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z *= Complex64::new(0.0, grid.dual_modes()[k]);
        }
    }
    fft_inverse(row);
}

/// Continuum-convention transform samples: ghat(xi_k) = h sum_j g_j e^{-i xi_k v_j}.
///
/// With v_j = -V + j h and xi_k = pi k / V this equals h (-1)^k DFT_k(g).
pub fn continuum_ft(field: &[f64], grid: &VelocityGrid) -> Vec<Complex64> {
    let mut buf = to_complex(field);
    continuum_ft_complex(&mut buf, grid);
    buf
}

/// In-place continuum-convention transform of a complex sample row.
pub fn continuum_ft_complex(buf: &mut [Complex64], grid: &VelocityGrid) {
    fft_forward(buf);
    let h = grid.spacing();
    for (k, z) in buf.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *z *= h * sign;
    }
}

/// Inverse of [`continuum_ft_complex`].
pub fn continuum_ift_complex(buf: &mut [Complex64], grid: &VelocityGrid) {
    let h = grid.spacing();
    for (k, z) in buf.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *z *= sign / h;
    }
    fft_inverse(buf);
}

/// Convenience wrapper returning a [`VelocityField`] for multiplier application.
pub fn multiplier_field(
    f: &VelocityField,
    m: impl Fn(f64) -> f64,
) -> crate::error::Result<VelocityField> {
    let out = apply_multiplier(f.values(), f.grid(), m);
    VelocityField::new(f.grid().clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityGrid;

    #[test]
    fn roundtrip_identity() {
        let g = VelocityGrid::new(4.0, 64).unwrap();
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|v| (-v * v).exp() + 0.1 * v.sin())
            .collect();
        let out = apply_multiplier(&f, &g, |_| 1.0);
        for (a, b) in f.iter().zip(out.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = VelocityGrid::new(8.0, 128).unwrap();
        let xi3 = g.dual_modes()[3];
        let f: Vec<f64> = g.nodes().iter().map(|v| (xi3 * v).sin()).collect();
        let d = spectral_derivative(&f, &g);
        for (j, &v) in g.nodes().iter().enumerate() {
            let exact = xi3 * (xi3 * v).cos();
            assert!((d[j] - exact).abs() < 1e-9, "node {j}: {} vs {exact}", d[j]);
        }
    }

    #[test]
    fn derivative_is_skew_symmetric() {
        // <Df, g> = -<f, Dg> to round-off for arbitrary samples
        let g = VelocityGrid::new(4.0, 32).unwrap();
        let f: Vec<f64> = (0..32).map(|j| ((j * 7 + 3) % 13) as f64 / 13.0).collect();
        let w: Vec<f64> = (0..32).map(|j| ((j * 5 + 1) % 11) as f64 / 11.0).collect();
        let df = spectral_derivative(&f, &g);
        let dw = spectral_derivative(&w, &g);
        let a: f64 = df.iter().zip(&w).map(|(x, y)| x * y).sum();
        let b: f64 = f.iter().zip(&dw).map(|(x, y)| x * y).sum();
        assert!((a + b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn continuum_ft_gaussian() {
        // F(e^{-v^2/2}) = sqrt(2 pi) e^{-xi^2/2}
        let g = VelocityGrid::new(16.0, 512).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|v| (-v * v / 2.0).exp()).collect();
        let hat = continuum_ft(&f, &g);
        let s = (2.0 * std::f64::consts::PI).sqrt();
        for (k, &xi) in g.dual_modes().iter().enumerate() {
            if xi.abs() < 5.0 {
                let exact = s * (-xi * xi / 2.0).exp();
                assert!(
                    (hat[k].re - exact).abs() < 1e-10 && hat[k].im.abs() < 1e-10,
                    "xi={xi}: {} vs {exact}",
                    hat[k].re
                );
            }
        }
        // roundtrip
        let mut buf = hat;
        continuum_ift_complex(&mut buf, &g);
        for (a, b) in f.iter().zip(buf.iter()) {
            assert!((a - b.re).abs() < 1e-12);
        }
    }
}
