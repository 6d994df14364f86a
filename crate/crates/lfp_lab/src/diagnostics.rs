//! Decay-rate fitting, the coefficient-selection recipe, and numerical
//! verification of the entropy-dissipation inequality.

use crate::coeffs::HypoCoeffs;
use crate::error::{Error, Result};
use crate::fft;
use crate::forms::ConstantsReport;
use crate::grid::VelocityField;
use crate::params::AlphaParams;
use crate::phase::ModeState;
use crate::solver_lfp::SimTrace;
use rustfft::num_complex::Complex64;
use serde::Serialize;

/// Safety margin applied to every strict inequality of the recipe.
pub const RECIPE_MARGIN: f64 = 1.1;

/// Coefficients selected by the closing recipe, with the dissipation
/// prefactors they certify.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSelection {
    pub coeffs: HypoCoeffs,
    /// The four dissipation prefactors (S(f,f), S(grad_x), S(grad_v),
    /// ||grad_x||^2 terms), all strictly positive by construction.
    pub dissipation_prefactors: [f64; 4],
    /// Certified decay rate implied by the margins.
    pub lambda_cert: f64,
}

/// Choose (eps, b, c, a) consecutively from the estimated constants:
/// eps < 1/(4 C_F), b < 1/(2 K(eps)), c > 2 b Ct_P K(eps),
/// a > c^2 (2 + C_P/2)/b + b C_P / 2, each bound taken with the margin.
pub fn coefficient_search(report: &ConstantsReport) -> Result<CoefficientSelection> {
    report.validate()?;
    let c_p = report.c_p;
    let c_f = report.c_f;
    let ct_p = report.torus_poincare;
    // largest stored eps below the bound
    let eps_bound = 1.0 / (4.0 * c_f) / RECIPE_MARGIN;
    let mut chosen: Option<(f64, f64)> = None;
    for &(eps, k) in &report.k_of_eps {
        if eps <= eps_bound && chosen.map_or(true, |(e, _)| eps > e) {
            chosen = Some((eps, k));
        }
    }
    let (eps, k_eps) = chosen.ok_or_else(|| {
        Error::Infeasible(format!(
            "no stored eps satisfies eps <= 1/(4 C_F)/margin = {eps_bound:.4}; \
             the binding constraint is the eps grid (C_F = {c_f:.3})"
        ))
    })?;
    if k_eps <= 0.0 {
        return Err(Error::Infeasible("K(eps) must be positive".into()));
    }
    let b = 1.0 / (2.0 * k_eps) / RECIPE_MARGIN;
    let c = 2.0 * b * ct_p * k_eps * RECIPE_MARGIN;
    let a = (c * c * (2.0 + c_p / 2.0) / b + b * c_p / 2.0) * RECIPE_MARGIN;
    let coeffs = HypoCoeffs::new(a, b, c, eps)?;
    let pre = dissipation_prefactors(&coeffs, report);
    if pre.iter().any(|&d| d <= 0.0) {
        return Err(Error::Infeasible(format!(
            "recipe produced a non-positive dissipation prefactor: {pre:?}"
        )));
    }
    let lambda_cert = certified_lambda(&coeffs, report, &pre);
    Ok(CoefficientSelection {
        coeffs,
        dissipation_prefactors: pre,
        lambda_cert,
    })
}

/// The four prefactors of the dissipation functional
/// D = d1 S(f,f) + d2 S(gx,gx) + d3 S(gv,gv) + d4 ||gx||^2.
pub fn dissipation_prefactors(coeffs: &HypoCoeffs, report: &ConstantsReport) -> [f64; 4] {
    let k_eps = report.k_at(coeffs.eps).unwrap_or(f64::INFINITY);
    let d1 = 1.0 - 2.0 * coeffs.b * k_eps;
    let d2 = coeffs.a
        - coeffs.c * coeffs.c / coeffs.b * (2.0 + report.c_p / 2.0)
        - coeffs.b * report.c_p / 2.0;
    let d3 = coeffs.b / 2.0 - 2.0 * coeffs.b * coeffs.eps * report.c_f;
    let d4 = coeffs.c - 2.0 * coeffs.b * report.torus_poincare * k_eps;
    [d1, d2, d3, d4]
}

/// Certified lower bound on the decay rate: D >= lambda |||f|||^2 follows
/// from bounding the triple norm by the dissipation pieces through the
/// Poincare, torus-Poincare and interpolation inequalities with the
/// estimated constants. The derivation Young-splits the cross term with
/// weight sqrt(b/a).
pub fn certified_lambda(
    coeffs: &HypoCoeffs,
    report: &ConstantsReport,
    prefactors: &[f64; 4],
) -> f64 {
    let (a, b, c) = (coeffs.a, coeffs.b, coeffs.c);
    let k_eps = report.k_at(coeffs.eps).unwrap_or(f64::INFINITY);
    let t = (b / a).sqrt();
    let coef_gv = b + c / t; // multiplies ||grad_v f||^2
    let coef_gx_direct = a + c * t;
    // ||f||^2 <= C_P S(f,f) + Ct_P ||grad_x f||^2 (mean-free in x)
    // ||grad_v f||^2 <= K (S + Ct_P ||grad_x||^2) + eps C_F S(grad_v)
    let a1 = report.c_p + coef_gv * k_eps; // multiplies S(f,f)
    let a3 = coef_gv * coeffs.eps * report.c_f; // multiplies S(grad_v)
    let a4 = report.torus_poincare * (1.0 + coef_gv * k_eps) + coef_gx_direct;
    let mut lambda = f64::INFINITY;
    if a1 > 0.0 {
        lambda = lambda.min(prefactors[0] / a1);
    }
    if a3 > 0.0 {
        lambda = lambda.min(prefactors[2] / a3);
    }
    if a4 > 0.0 {
        lambda = lambda.min(prefactors[3] / a4);
    }
    lambda
}

/// Exponential-decay fit of a trace window.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub lambda: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub log_range: f64,
    pub samples: usize,
    pub truncated: bool,
}

/// Least-squares fit of log(norm) against t on the window; lambda > 0 means
/// decay. Non-positive norm samples truncate the window with a notice flag.
pub fn decay_fit(times: &[f64], norms: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (t0, t1) = window;
    if t1 <= t0 {
        return Err(Error::Domain("decay window must be increasing".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut truncated = false;
    for (&t, &n) in times.iter().zip(norms) {
        if t < t0 || t > t1 {
            continue;
        }
        if n <= 0.0 || !n.is_finite() {
            truncated = true;
            break;
        }
        xs.push(t);
        ys.push(n.ln());
    }
    if xs.len() < 10 {
        return Err(Error::Domain(format!(
            "window holds only {} positive samples; need at least 10",
            xs.len()
        )));
    }
    let nf = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    let intercept = (sy - slope * sx) / nf;
    let mut ss = 0.0;
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for (x, y) in xs.iter().zip(&ys) {
        let r = y - (slope * x + intercept);
        ss += r * r;
        lo = lo.min(*y);
        hi = hi.max(*y);
    }
    Ok(DecayFit {
        lambda: -slope,
        prefactor: intercept.exp(),
        window: (xs[0], *xs.last().unwrap()),
        residual: (ss / nf).sqrt(),
        log_range: hi - lo,
        samples: xs.len(),
        truncated,
    })
}

pub fn decay_fit_trace(trace: &SimTrace, window: (f64, f64)) -> Result<DecayFit> {
    decay_fit(&trace.times, &trace.triple_norm, window)
}

/// Evaluator of the dissipation functional D(f, f) on mode states, with
/// S_{x,v}(g, g) obtained from the operator pairing
/// S(g,g) = -<L_alpha g, g>_{L^2(mu^{-1})} evaluated mode by mode with the
/// Fourier-symbol fractional Laplacian and the spectral drift.
pub struct DissipationEvaluator {
    p: AlphaParams,
    mu: VelocityField,
    inv_mu: Vec<f64>,
    prefactors: [f64; 4],
}

impl DissipationEvaluator {
    pub fn new(
        p: &AlphaParams,
        mu: &VelocityField,
        coeffs: &HypoCoeffs,
        report: &ConstantsReport,
    ) -> Self {
        Self {
            p: *p,
            mu: mu.clone(),
            inv_mu: mu.values().iter().map(|&m| 1.0 / m).collect(),
            prefactors: dissipation_prefactors(coeffs, report),
        }
    }

    /// S_{x,v}(g, g) for the deviation field: sum over modes of the pairing
    /// Re <-L g, g>_{mu^{-1}} of each complex row.
    fn s_xv(&self, state: &ModeState) -> f64 {
        use rayon::prelude::*;
        let n = state.grid().len();
        let h = state.grid().weight();
        let nodes: Vec<f64> = state.grid().nodes().to_vec();
        let alpha = self.p.alpha();
        let grid = state.grid().clone();
        let rows: Vec<f64> = (0..state.x_modes())
            .into_par_iter()
            .map(|k| {
                let row = state.row(k);
                // fractional part: multiplier |xi|^alpha on the complex row
                let mut frac = row.to_vec();
                fft::fft_forward(&mut frac);
                for (i, z) in frac.iter_mut().enumerate() {
                    *z *= grid.dual_modes()[i].abs().powf(alpha);
                }
                fft::fft_inverse(&mut frac);
                let mut drow = row.to_vec();
                fft::spectral_derivative_complex(&mut drow, &grid);
                let mut acc = 0.0;
                for j in 0..n {
                    let drift = nodes[j] * drow[j] + row[j];
                    acc += ((frac[j] - drift) * row[j].conj()).re * self.inv_mu[j];
                }
                acc * h
            })
            .collect();
        rows.iter().sum()
    }

    /// All four dissipation pieces of the deviation state.
    pub fn dissipation(&self, dev: &ModeState) -> DissipationValue {
        // grad_x: multiply mode k by i k; grad_v: spectral derivative per row
        let m = dev.x_modes();
        let n = dev.grid().len();
        let mut grad_x = dev.clone();
        for k in 0..m {
            let kw = grad_x.wavenumber(k);
            for z in grad_x.row_mut(k) {
                *z *= Complex64::new(0.0, kw);
            }
        }
        let mut grad_v = dev.clone();
        for k in 0..m {
            fft::spectral_derivative_complex(grad_v.row_mut(k), dev.grid());
        }
        let s_f = self.s_xv(dev);
        let s_gx = self.s_xv(&grad_x);
        let s_gv = self.s_xv(&grad_v);
        let gx_norm_sq = grad_x.norm_bundle(&self.mu).l2;
        let [d1, d2, d3, d4] = self.prefactors;
        let _ = n;
        DissipationValue {
            s_f,
            s_gx,
            s_gv,
            gx_norm_sq,
            value: d1 * s_f + d2 * s_gx + d3 * s_gv + d4 * gx_norm_sq,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DissipationValue {
    pub s_f: f64,
    pub s_gx: f64,
    pub s_gv: f64,
    pub gx_norm_sq: f64,
    pub value: f64,
}

/// One interior snapshot of the entropy-dissipation audit.
#[derive(Debug, Clone, Serialize)]
pub struct DissipationSample {
    pub t: f64,
    /// Centered finite difference of (1/2) |||f|||^2.
    pub derivative_half_triple_sq: f64,
    pub dissipation: f64,
    pub triple_sq: f64,
    /// d/dt (1/2)|||f|||^2 + D(f,f), which the estimate bounds by zero.
    pub defect: f64,
    pub within_tolerance: bool,
    pub lambda_bound_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipationReport {
    pub samples: Vec<DissipationSample>,
    pub tolerance_factor: f64,
    pub lambda_cert: f64,
    pub all_within_tolerance: bool,
    pub lambda_bound_violations: usize,
}

/// Audit a sequence of (t, triple_sq, dissipation) samples at uniform
/// spacing: at each interior snapshot the centered difference of
/// (1/2)|||f|||^2 plus D(f,f) must not exceed tol * |||f|||^2, and
/// D >= lambda_cert |||f|||^2 must hold.
pub fn audit_dissipation(
    times: &[f64],
    triple_sq: &[f64],
    dissipation: &[f64],
    lambda_cert: f64,
    tolerance_factor: f64,
) -> Result<DissipationReport> {
    if times.len() < 3 {
        return Err(Error::Domain("need at least 3 snapshots".into()));
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 || dt > 0.05 + 1e-12 {
        return Err(Error::Domain(format!(
            "snapshot spacing {dt} must be positive and at most 0.05 for the \
             centered difference"
        )));
    }
    let mut samples = Vec::new();
    let mut all_ok = true;
    let mut lambda_viol = 0;
    for i in 1..times.len() - 1 {
        let deriv = (0.5 * triple_sq[i + 1] - 0.5 * triple_sq[i - 1]) / (2.0 * dt);
        let defect = deriv + dissipation[i];
        let tol = tolerance_factor * triple_sq[i];
        let within = defect <= tol;
        let lambda_ok = dissipation[i] + 1e-12 >= lambda_cert * triple_sq[i];
        if !within {
            all_ok = false;
        }
        if !lambda_ok {
            lambda_viol += 1;
        }
        samples.push(DissipationSample {
            t: times[i],
            derivative_half_triple_sq: deriv,
            dissipation: dissipation[i],
            triple_sq: triple_sq[i],
            defect,
            within_tolerance: within,
            lambda_bound_holds: lambda_ok,
        });
    }
    Ok(DissipationReport {
        samples,
        tolerance_factor,
        lambda_cert,
        all_within_tolerance: all_ok,
        lambda_bound_violations: lambda_viol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_report() -> ConstantsReport {
        // the worked example: C_F = 1, K(0.1) = 10, C_P = 1, Ct_P = 1
        ConstantsReport {
            alpha: 1.0,
            tail_mass_budget: 1.0 / 64.0,
            c_p: 1.0,
            c_r: 1.0,
            c_f: 1.0,
            k_of_eps: vec![(0.1, 10.0)],
            torus_poincare: 1.0,
            test_family: "toy".into(),
        }
    }

    #[test]
    fn recipe_prefers_largest_admissible_eps() {
        let mut report = toy_report();
        report.k_of_eps = vec![(0.05, 12.0), (0.1, 10.0), (0.2, 9.0)];
        let sel = coefficient_search(&report).unwrap();
        // bound is 1/(4 C_F)/margin = 0.227: eps = 0.2 is admissible and
        // carries the smallest K
        assert!((sel.coeffs.eps - 0.2).abs() < 1e-12);
    }

    #[test]
    fn recipe_reproduces_worked_example() {
        // C_F = 1, K(0.1) = 10, C_P = 1, Ct_P = 1: eps = 0.1 < 0.25,
        // b = 1/(2 K)/1.1, c = 2 b K * 1.1, a bound ~ 54.5 with margin.
        // Oracle: direct substitution into the four inequalities.
        let sel = coefficient_search(&toy_report()).unwrap();
        let c = &sel.coeffs;
        assert!((c.eps - 0.1).abs() < 1e-12, "eps = {}", c.eps);
        assert!(c.eps < 0.25);
        assert!((c.b - 1.0 / 22.0).abs() < 1e-12);
        assert!(c.b < 0.05);
        assert!((c.c - 1.0).abs() < 1e-9, "c = {}", c.c);
        assert!(c.c > 2.0 * c.b * 10.0);
        // the worked example rounds b to 0.045 and quotes a ~ 54.5; the
        // exact-margin arithmetic gives 55.0
        let a_bound = c.c * c.c * 2.5 / c.b + c.b * 0.5;
        assert!((a_bound - 54.75).abs() < 1.0, "bound {a_bound}");
        assert!(c.a > a_bound);
        // implied but asserted independently
        assert!(c.c * c.c < c.a * c.b);
        // all four dissipation prefactors strictly positive
        for d in sel.dissipation_prefactors {
            assert!(d > 0.0, "{:?}", sel.dissipation_prefactors);
        }
        assert!(sel.lambda_cert > 0.0 && sel.lambda_cert.is_finite());
    }

    #[test]
    fn recipe_rejects_unsuitable_eps_grid() {
        let mut report = toy_report();
        // C_F so large that no stored eps satisfies the bound
        report.c_f = 10.0;
        report.k_of_eps = vec![(0.1, 10.0), (0.2, 9.0)];
        let err = coefficient_search(&report);
        match err {
            Err(Error::Infeasible(msg)) => {
                assert!(
                    msg.contains("eps"),
                    "message should name the constraint: {msg}"
                )
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn decay_fit_exact_exponential() {
        let times: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let norms: Vec<f64> = times.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let fit = decay_fit(&times, &norms, (0.0, 6.0)).unwrap();
        assert!((fit.lambda - 0.7).abs() < 1e-12, "{}", fit.lambda);
        assert!((fit.prefactor - 3.0).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
        assert!(!fit.truncated);
    }

    #[test]
    fn decay_fit_scale_equivariance() {
        let times: Vec<f64> = (0..40).map(|i| 0.25 + i as f64 * 0.05).collect();
        let norms: Vec<f64> = times
            .iter()
            .map(|t| 2.0 * (-0.4 * t).exp() * (1.0 + 0.01 * (20.0 * t).sin()))
            .collect();
        let f1 = decay_fit(&times, &norms, (0.25, 2.2)).unwrap();
        let scaled: Vec<f64> = norms.iter().map(|n| 5.0 * n).collect();
        let f2 = decay_fit(&times, &scaled, (0.25, 2.2)).unwrap();
        assert!((f1.lambda - f2.lambda).abs() < 1e-12);
        assert!((f2.prefactor / f1.prefactor - 5.0).abs() < 1e-9);
        assert!((f1.residual - f2.residual).abs() < 1e-12);
    }

    #[test]
    fn decay_fit_truncates_at_nonpositive_values() {
        let times: Vec<f64> = (0..30).map(|i| i as f64 * 0.05).collect();
        let mut norms: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        for n in norms.iter_mut().skip(20) {
            *n = 0.0;
        }
        let fit = decay_fit(&times, &norms, (0.0, 1.5)).unwrap();
        assert!(fit.truncated);
        assert!((fit.lambda - 2.0).abs() < 1e-9);
    }

    #[test]
    fn decay_fit_window_validation() {
        let times: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let norms = vec![1.0; 5];
        assert!(decay_fit(&times, &norms, (3.0, 1.0)).is_err());
        assert!(decay_fit(&times, &norms, (0.0, 4.0)).is_err()); // < 10 samples
    }

    #[test]
    fn audit_flags_spacing_and_counts() {
        let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.01).collect();
        let tn: Vec<f64> = times.iter().map(|t| (1.0f64 - t).max(0.5)).collect();
        let d: Vec<f64> = vec![1.0; 10];
        let rep = audit_dissipation(&times, &tn, &d, 0.1, 1e-3).unwrap();
        assert_eq!(rep.samples.len(), 8);
        // coarse spacing rejected
        let times2: Vec<f64> = (0..10).map(|i| i as f64 * 0.2).collect();
        assert!(audit_dissipation(&times2, &tn, &d, 0.1, 1e-3).is_err());
    }
}
