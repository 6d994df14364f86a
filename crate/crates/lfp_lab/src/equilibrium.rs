//! Heavy-tailed equilibrium construction and tail certification.
//!
//! The equilibrium is defined through its Fourier profile exp(-|xi|^alpha / alpha)
//! (under the convention F g(xi) = int e^{-i v xi} g(v) dv the normalization
//! constant is exactly one). Profiles are recovered in velocity space by
//! adaptive panel quadrature of the half-line cosine integral
//! `mu(v) = (1/pi) int_0^inf cos(v xi) exp(-xi^alpha / alpha) dxi`,
//! with panels graded geometrically toward xi = 0 (where the profile has an
//! algebraic kink for non-even alpha) and capped in width so that no panel
//! spans more than a fraction of an oscillation period of cos(v xi).

use crate::error::{Error, Result};
use crate::grid::{VelocityField, VelocityGrid};
use crate::params::AlphaParams;
use crate::specfun::{GL10_NODES, GL10_WEIGHTS};
use rayon::prelude::*;
use serde::Serialize;

/// Default floor for the resolved-profile precondition.
pub const DEFAULT_PROFILE_FLOOR: f64 = 1e-12;

/// Check that the grid resolves the Fourier profile: the profile at the
/// largest resolved frequency must sit below `floor`.
pub fn check_resolution(p: &AlphaParams, grid: &VelocityGrid, floor: f64) -> Result<()> {
    let tail = profile(p.alpha(), grid.xi_max());
    if tail > floor {
        return Err(Error::Resolution(format!(
            "Fourier profile at xi_max = {:.3} is {:.3e}, above the floor {:.1e}; \
             increase the node count (needs xi_max >= {:.1})",
            grid.xi_max(),
            tail,
            floor,
            (p.alpha() * (1.0 / floor).ln()).powf(1.0 / p.alpha()),
        )));
    }
    Ok(())
}

/// Smallest even node count that satisfies the resolution precondition.
pub fn required_nodes(p: &AlphaParams, extent: f64, floor: f64) -> usize {
    let xi_need = (p.alpha() * (1.0 / floor).ln()).powf(1.0 / p.alpha());
    let n = (2.0 * extent * xi_need / std::f64::consts::PI).ceil() as usize;
    (n + 1).next_power_of_two().max(8)
}

fn profile(alpha: f64, xi: f64) -> f64 {
    (-(xi.abs().powf(alpha)) / alpha).exp()
}

/// Quadrature panels shared by every node evaluation: geometric grading near
/// the kink at xi = 0, then uniform panels capped against the fastest
/// oscillation cos(V xi).
fn build_panels(alpha: f64, v_max: f64) -> Vec<(f64, f64)> {
    // Resolve the profile until it is below 1e-18.
    let xi_end = (alpha * 41.5f64).powf(1.0 / alpha);
    let cap = (4.0 / (v_max + 1.0)).min(0.5);
    let mut panels = Vec::new();
    // graded region [2^-42, 1): dyadic panels, subdivided to honor the cap
    let mut lo = 2f64.powi(-42);
    while lo < 1.0 && lo < xi_end {
        let hi = (2.0 * lo).min(xi_end.min(1.0));
        let width = hi - lo;
        let pieces = (width / cap).ceil().max(1.0) as usize;
        let dw = width / pieces as f64;
        for i in 0..pieces {
            panels.push((lo + i as f64 * dw, lo + (i + 1) as f64 * dw));
        }
        lo = hi;
    }
    // uniform region [1, xi_end)
    if xi_end > 1.0 {
        let width = xi_end - 1.0;
        let pieces = (width / cap).ceil().max(1.0) as usize;
        let dw = width / pieces as f64;
        for i in 0..pieces {
            panels.push((1.0 + i as f64 * dw, 1.0 + (i + 1) as f64 * dw));
        }
    }
    panels
}

/// Evaluate mu (and optionally its derivative) at arbitrary points by panel
/// quadrature. Returns (mu, dmu).
fn quadrature_eval(alpha: f64, points: &[f64], v_max: f64) -> (Vec<f64>, Vec<f64>) {
    let panels = build_panels(alpha, v_max);
    // Precompute profile values at all panel Gauss nodes once.
    let mut xi_nodes = Vec::with_capacity(panels.len() * 10);
    let mut wprof = Vec::with_capacity(panels.len() * 10);
    for &(a, b) in &panels {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for (x, w) in GL10_NODES.iter().zip(GL10_WEIGHTS.iter()) {
            let xi = mid + half * x;
            xi_nodes.push(xi);
            wprof.push(w * half * profile(alpha, xi));
        }
    }
    let inv_pi = 1.0 / std::f64::consts::PI;
    let results: Vec<(f64, f64)> = points
        .par_iter()
        .map(|&v| {
            let mut mu = 0.0;
            let mut dmu = 0.0;
            for (xi, wp) in xi_nodes.iter().zip(wprof.iter()) {
                let (s, c) = (v * xi).sin_cos();
                mu += wp * c;
                dmu -= wp * xi * s;
            }
            (mu * inv_pi, dmu * inv_pi)
        })
        .collect();
    let mu = results.iter().map(|r| r.0).collect();
    let dmu = results.iter().map(|r| r.1).collect();
    (mu, dmu)
}

/// Equilibrium density mu_alpha sampled on the grid.
pub fn equilibrium_density(p: &AlphaParams, grid: &VelocityGrid) -> Result<VelocityField> {
    equilibrium_density_with_floor(p, grid, DEFAULT_PROFILE_FLOOR)
}

pub fn equilibrium_density_with_floor(
    p: &AlphaParams,
    grid: &VelocityGrid,
    floor: f64,
) -> Result<VelocityField> {
    check_resolution(p, grid, floor)?;
    let (mu, _) = sampled_pair(p, grid)?;
    Ok(mu)
}

/// Equilibrium density and its derivative, both from the xi-side quadrature.
pub fn equilibrium_pair(
    p: &AlphaParams,
    grid: &VelocityGrid,
) -> Result<(VelocityField, VelocityField)> {
    check_resolution(p, grid, DEFAULT_PROFILE_FLOOR)?;
    sampled_pair(p, grid)
}

fn sampled_pair(p: &AlphaParams, grid: &VelocityGrid) -> Result<(VelocityField, VelocityField)> {
    if p.dim() != 1 {
        return Err(Error::Domain(
            "equilibrium sampling is implemented for dim = 1".into(),
        ));
    }
    // Exploit evenness: evaluate on |v| values once.
    let n = grid.len();
    let half: Vec<f64> = grid.nodes()[..=n / 2].iter().map(|v| v.abs()).collect();
    let (mu_half, dmu_half) = quadrature_eval(p.alpha(), &half, grid.extent());
    let mut mu = vec![0.0; n];
    let mut dmu = vec![0.0; n];
    for j in 0..n {
        // node j <-> |v| index: nodes 0..n/2 descend from V, n/2.. ascend
        let idx = if j <= n / 2 { j } else { n - j };
        let sign = if grid.nodes()[j] < 0.0 { -1.0 } else { 1.0 };
        mu[j] = mu_half[idx].max(f64::MIN_POSITIVE);
        dmu[j] = sign * dmu_half[idx];
    }
    let mut mu = VelocityField::new(grid.clone(), mu)?;
    mu.is_density = true;
    let dmu = VelocityField::new(grid.clone(), dmu)?;
    if mu.values().iter().any(|&x| x <= 0.0) {
        return Err(Error::Contract(
            "equilibrium produced a non-positive value".into(),
        ));
    }
    Ok((mu, dmu))
}

/// Least-squares slope p of log mu against log |v| on the window, returned
/// with the sign convention mu ~ |v|^{-p}.
pub fn tail_exponent_fit(mu: &VelocityField, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let grid = mu.grid();
    if !(lo > 0.0 && hi > lo && hi < grid.extent()) {
        return Err(Error::Domain(format!(
            "window ({lo}, {hi}) must satisfy 0 < lo < hi < V = {}",
            grid.extent()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (j, &v) in grid.nodes().iter().enumerate() {
        if v >= lo && v <= hi {
            let m = mu.values()[j];
            if m <= 0.0 {
                return Err(Error::Domain("mu must be positive on the window".into()));
            }
            xs.push(v.ln());
            ys.push(m.ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::Domain(format!(
            "window contains only {} sample points; need at least 8",
            xs.len()
        )));
    }
    let nf = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    Ok(-slope)
}

/// Default tail-fit window [V/4, V/2].
pub fn default_tail_window(grid: &VelocityGrid) -> (f64, f64) {
    (grid.extent() / 4.0, grid.extent() / 2.0)
}

/// Empirical envelopes for the two-sided tail bounds: the density envelope
/// (|v|^{d+alpha} + 1) mu(v) over the whole grid and the gradient envelope
/// (|v|^{2+d+alpha} + 1) |mu'(v)| / |v| away from the origin (|v| >= 1,
/// where the lower bound does not degenerate).
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub density_max: f64,
    pub density_min: f64,
    pub density_ratio: f64,
    pub gradient_max: f64,
    pub gradient_min: f64,
    pub gradient_ratio: f64,
}

pub fn tail_bound_check(
    p: &AlphaParams,
    mu: &VelocityField,
    grad_mu: &VelocityField,
) -> Result<EnvelopeReport> {
    mu.check_same_grid(grad_mu)?;
    let d = p.dim() as f64;
    let a = p.alpha();
    let mut dmax = f64::MIN;
    let mut dmin = f64::MAX;
    let mut gmax = f64::MIN;
    let mut gmin = f64::MAX;
    for (j, &v) in mu.grid().nodes().iter().enumerate() {
        let av = v.abs();
        let e1 = (av.powf(d + a) + 1.0) * mu.values()[j];
        dmax = dmax.max(e1);
        dmin = dmin.min(e1);
        if av >= 1.0 {
            let e2 = (av.powf(2.0 + d + a) + 1.0) * grad_mu.values()[j].abs() / av;
            gmax = gmax.max(e2);
            gmin = gmin.min(e2);
        }
    }
    if dmin <= 0.0 || gmin < 0.0 {
        return Err(Error::Contract(
            "envelope lower bound is not positive".into(),
        ));
    }
    Ok(EnvelopeReport {
        density_max: dmax,
        density_min: dmin,
        density_ratio: dmax / dmin,
        gradient_max: gmax,
        gradient_min: gmin,
        gradient_ratio: if gmin > 0.0 {
            gmax / gmin
        } else {
            f64::INFINITY
        },
    })
}
