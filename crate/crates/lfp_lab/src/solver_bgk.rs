//! Heavy-tailed BGK relaxation model: hypothesis checks on the local
//! equilibrium, the exact relaxation substep, and the Strang solver.
//!
//! The collision flow d_t f = Pi_M f - f is solved exactly: the local mass
//! is invariant, so f(dt) = e^{-dt} f0 + (1 - e^{-dt}) Pi_M f0 (substituting
//! back gives d_t f = e^{-dt}(Pi_M f0 - f0) = Pi_M f(t) - f(t)).

use crate::coeffs::HypoCoeffs;
use crate::error::{Error, Result};
use crate::fft;
use crate::forms::TORUS_POINCARE;
use crate::grid::VelocityField;
use crate::phase::{ModeState, PhaseField};
use crate::solver_lfp::{transport_step, SimOptions, SimTrace};
use serde::Serialize;

/// Default cap on ||grad ln M||_inf; a Gaussian on the default grid sits
/// far above it, heavy-tailed profiles far below.
pub const DEFAULT_LOG_GRAD_CAP: f64 = 20.0;

/// Default tolerance on |int M - 1| (the velocity-truncation budget of
/// heavy-tailed profiles at the default extent).
pub const DEFAULT_MASS_TOL: f64 = 0.02;

/// Validated BGK local equilibrium.
#[derive(Debug, Clone)]
pub struct BgkEquilibrium {
    /// Grid-normalized profile (unit discrete mass, so the projection is
    /// exactly mass-preserving).
    m_field: VelocityField,
    pub log_grad_bound: f64,
    pub c_m: f64,
}

impl BgkEquilibrium {
    pub fn profile(&self) -> &VelocityField {
        &self.m_field
    }
}

/// Validate the hypotheses on M: positivity, unit mass, bounded log
/// gradient. The gradient is computed spectrally and its sup taken over
/// |v| <= V/2 (the boundary zone is contaminated by the periodic wrap).
pub fn check_hypotheses(m: &VelocityField) -> Result<BgkEquilibrium> {
    check_hypotheses_with(m, DEFAULT_LOG_GRAD_CAP, DEFAULT_MASS_TOL)
}

pub fn check_hypotheses_with(
    m: &VelocityField,
    log_grad_cap: f64,
    mass_tol: f64,
) -> Result<BgkEquilibrium> {
    if m.values().iter().any(|&x| x <= 0.0) {
        return Err(Error::Hypothesis("M must be strictly positive".into()));
    }
    let mass = m.integral();
    if (mass - 1.0).abs() > mass_tol {
        return Err(Error::Hypothesis(format!(
            "M is not normalized: int M = {mass:.6} (tolerance {mass_tol})"
        )));
    }
    let grad = fft::spectral_derivative(m.values(), m.grid());
    let half = m.grid().extent() / 2.0;
    let mut bound = 0.0f64;
    for (j, &v) in m.grid().nodes().iter().enumerate() {
        if v.abs() <= half {
            bound = bound.max((grad[j] / m.values()[j]).abs());
        }
    }
    if bound > log_grad_cap {
        return Err(Error::Hypothesis(format!(
            "||grad ln M||_inf = {bound:.3} exceeds the cap {log_grad_cap} \
             (unbounded log gradient)"
        )));
    }
    Ok(BgkEquilibrium {
        m_field: m.normalized(),
        log_grad_bound: bound,
        c_m: bound * bound * TORUS_POINCARE * TORUS_POINCARE,
    })
}

/// Local projection Pi_M f = M(v) int f dw, per x-mode.
pub fn bgk_project(state: &ModeState, eq: &BgkEquilibrium) -> Result<ModeState> {
    if !state.grid().same_layout(eq.m_field.grid()) {
        return Err(Error::Grid("grid mismatch".into()));
    }
    Ok(state.project_local(eq.m_field.values()))
}

/// Exact relaxation substep f <- e^{-dt} f + (1 - e^{-dt}) Pi_M f.
pub fn bgk_collision_step(state: &mut ModeState, eq: &BgkEquilibrium, dt: f64) {
    debug_assert!(dt >= 0.0);
    let n = state.grid().len();
    let h = state.grid().weight();
    let decay = (-dt).exp();
    let blend = 1.0 - decay;
    let mv = eq.m_field.values();
    for k in 0..state.x_modes() {
        let row = state.row_mut(k);
        let rho = row.iter().sum::<rustfft::num_complex::Complex64>() * h;
        for iv in 0..n {
            row[iv] = decay * row[iv] + blend * rho * mv[iv];
        }
    }
}

/// Strang composition for the BGK equation.
pub fn strang_step_bgk(state: &mut ModeState, eq: &BgkEquilibrium, dt: f64) {
    transport_step(state, dt / 2.0);
    bgk_collision_step(state, eq, dt);
    transport_step(state, dt / 2.0);
}

/// Coefficients from the closing recipe: any b > 0, c > 2 b C_M, then
/// a > 4c^2/b + b + C_M c / 2, each strict bound taken with a 1.1 margin.
pub fn bgk_coefficients(eq: &BgkEquilibrium, b: f64) -> Result<HypoCoeffs> {
    if b <= 0.0 {
        return Err(Error::Domain("b must be positive".into()));
    }
    let margin = 1.1;
    // C_M = 0 (flat log-gradient) still needs a positive c
    let c = (2.0 * b * eq.c_m).max(0.05 * b) * margin;
    let a = (4.0 * c * c / b + b + eq.c_m * c / 2.0) * margin;
    HypoCoeffs::new(a, b, c, 0.1)
}

/// Advance the BGK equation, tracking the deviation from the global
/// equilibrium <f> M in the M-weighted triple norm.
pub fn simulate_bgk(
    f0: &PhaseField,
    eq: &BgkEquilibrium,
    coeffs: &HypoCoeffs,
    opts: &SimOptions,
    mut observer: Option<&mut dyn FnMut(f64, &ModeState)>,
) -> Result<SimTrace> {
    opts.validate()?;
    if !f0.grid().same_layout(eq.m_field.grid()) {
        return Err(Error::Grid("f0 and M grids differ".into()));
    }
    let mut state = f0.to_modes();
    let steps = (opts.t_end / opts.dt).round() as usize;
    let mut trace = SimTrace {
        times: Vec::new(),
        mass: Vec::new(),
        triple_norm: Vec::new(),
        h1_norm: Vec::new(),
        l2_norm: Vec::new(),
        dissipation_estimate: Vec::new(),
    };
    let f_scale = state.norm_bundle(&eq.m_field).l2.sqrt();
    let mut initial_triple = None;
    for step in 0..=steps {
        let t = step as f64 * opts.dt;
        if step % opts.sample_every == 0 || step == steps {
            let mut dev = state.clone();
            dev.subtract_global_equilibrium(eq.m_field.values());
            let b = dev.norm_bundle(&eq.m_field);
            let tn = b.triple_sq(coeffs).max(0.0).sqrt();
            trace.times.push(t);
            trace.mass.push(state.mass());
            trace.triple_norm.push(tn);
            trace.h1_norm.push(b.h1_sq().max(0.0).sqrt());
            trace.l2_norm.push(b.l2.max(0.0).sqrt());
            trace.dissipation_estimate.push(f64::NAN);
            let t0 = *initial_triple.get_or_insert(tn);
            if tn > 1e6 * t0.max(1e-12 * f_scale).max(1e-300) {
                return Err(Error::Contract(format!("norm blow-up at t = {t}")));
            }
            if let Some(obs) = observer.as_deref_mut() {
                obs(t, &state);
            }
        }
        if step < steps {
            strang_step_bgk(&mut state, eq, opts.dt);
        }
    }
    let drift = trace.mass_drift();
    if drift > 1e-10 {
        return Err(Error::Contract(format!(
            "mass drift {drift:.3e} exceeds the 1e-10 budget"
        )));
    }
    Ok(trace)
}

/// Report of the hypothesis check, serialized by the CLI.
#[derive(Debug, Serialize)]
pub struct BgkHypothesisReport {
    pub log_grad_bound: f64,
    pub c_m: f64,
    pub mass: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{equilibrium_density, required_nodes};
    use crate::grid::VelocityGrid;
    use crate::params::AlphaParams;

    fn cauchy_equilibrium() -> (VelocityGrid, BgkEquilibrium) {
        let p = AlphaParams::new(1.0, 1).unwrap();
        let g = VelocityGrid::new(64.0, 2048).unwrap();
        let mu = equilibrium_density(&p, &g).unwrap();
        let eq = check_hypotheses(&mu).unwrap();
        (g, eq)
    }

    #[test]
    fn cauchy_log_gradient_bound_is_one() {
        // |d/dv ln(1/(pi(1+v^2)))| = 2|v|/(1+v^2), maximized at |v| = 1
        let (_, eq) = cauchy_equilibrium();
        assert!(
            (eq.log_grad_bound - 1.0).abs() < 1e-4,
            "bound {}",
            eq.log_grad_bound
        );
        assert!((eq.c_m - 1.0).abs() < 2e-4, "C_M = {}", eq.c_m);
    }

    #[test]
    fn heavy_tails_pass_for_other_alphas() {
        // the mass tolerance is a truncation budget ~ 2A/alpha V^-alpha:
        // at V=64 it is 0.01 for alpha=1 but 0.199 for alpha=0.5
        for &(alpha, n_override, tol) in &[(0.5f64, true, 0.25), (1.5, false, 0.02)] {
            let p = AlphaParams::new(alpha, 1).unwrap();
            let n = if n_override {
                required_nodes(&p, 64.0, crate::equilibrium::DEFAULT_PROFILE_FLOOR)
            } else {
                2048
            };
            let g = VelocityGrid::new(64.0, n).unwrap();
            let mu = equilibrium_density(&p, &g).unwrap();
            let eq = check_hypotheses_with(&mu, DEFAULT_LOG_GRAD_CAP, tol).unwrap();
            assert!(eq.log_grad_bound.is_finite() && eq.log_grad_bound > 0.0);
        }
    }

    #[test]
    fn gaussian_rejected_on_large_domain() {
        // grad ln M = -v grows linearly: the sup over |v| <= V/2 = 32
        // breaches the cap
        let g = VelocityGrid::new(64.0, 2048).unwrap();
        let gauss = VelocityField::from_fn(&g, |v| {
            ((-v * v / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()).max(1e-280)
        })
        .unwrap();
        let err = check_hypotheses(&gauss);
        assert!(
            matches!(err, Err(Error::Hypothesis(_))),
            "Gaussian must be rejected: {err:?}"
        );
    }

    #[test]
    fn negative_and_unnormalized_profiles_rejected() {
        let g = VelocityGrid::new(16.0, 256).unwrap();
        let neg = VelocityField::from_fn(&g, |v| v.cos()).unwrap();
        assert!(matches!(check_hypotheses(&neg), Err(Error::Hypothesis(_))));
        let p = AlphaParams::new(1.0, 1).unwrap();
        let g2 = VelocityGrid::new(64.0, 2048).unwrap();
        let mu = equilibrium_density(&p, &g2).unwrap();
        let doubled =
            VelocityField::new(g2.clone(), mu.values().iter().map(|&x| 2.0 * x).collect()).unwrap();
        assert!(matches!(
            check_hypotheses(&doubled),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn projection_fixed_point_odd_and_mass() {
        let (g, eq) = cauchy_equilibrium();
        let n = g.len();
        // rho(x) M(v) is a fixed point
        let f = PhaseField::from_fn(8, &g, |x, v| {
            (1.0 + 0.3 * x.cos()) * eq.profile().values()[g.index_of(v).unwrap()]
        })
        .unwrap();
        let st = f.to_modes();
        let proj = bgk_project(&st, &eq).unwrap();
        for k in 0..8 {
            for iv in 0..n {
                assert!((proj.row(k)[iv] - st.row(k)[iv]).norm() < 1e-12);
            }
        }
        // odd-in-v data projects to (near) zero and mass is preserved
        let odd =
            PhaseField::from_fn(8, &g, |x, v| (1.0 + 0.2 * x.sin()) * v * (-v * v).exp()).unwrap();
        let ost = odd.to_modes();
        let oproj = bgk_project(&ost, &eq).unwrap();
        let mut max_abs = 0.0f64;
        for k in 0..8 {
            for iv in 0..n {
                max_abs = max_abs.max(oproj.row(k)[iv].norm());
            }
        }
        assert!(max_abs < 1e-12, "odd projection {max_abs}");
        assert!((oproj.mass() - ost.mass()).abs() < 1e-12);
        // idempotence
        let pp = bgk_project(&proj, &eq).unwrap();
        for k in 0..8 {
            for iv in 0..n {
                assert!((pp.row(k)[iv] - proj.row(k)[iv]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn collision_step_limits_and_exact_rate() {
        let (g, eq) = cauchy_equilibrium();
        let f = PhaseField::from_fn(8, &g, |x, v| {
            (1.0 + 0.4 * x.cos()) * (-(v - 0.5) * (v - 0.5) / 3.0).exp() * 0.2
        })
        .unwrap();
        // dt = 0 identity
        let mut st = f.to_modes();
        bgk_collision_step(&mut st, &eq, 0.0);
        for (a, b) in st.row(1).iter().zip(f.to_modes().row(1)) {
            assert!((a - b).norm() < 1e-14);
        }
        // dt -> infinity: projection
        let mut st = f.to_modes();
        bgk_collision_step(&mut st, &eq, 60.0);
        let proj = bgk_project(&f.to_modes(), &eq).unwrap();
        for k in 0..8 {
            for (a, b) in st.row(k).iter().zip(proj.row(k)) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        // deviation from the projection contracts at rate exactly e^{-dt}
        // in L^2(M^{-1})
        let dt = 0.37;
        let mut st = f.to_modes();
        bgk_collision_step(&mut st, &eq, dt);
        let dev_before = diff_norm(&f.to_modes(), &proj, &eq);
        let dev_after = diff_norm(&st, &proj, &eq);
        let measured = dev_after / dev_before;
        assert!(
            (measured - (-dt).exp()).abs() < 1e-12,
            "contraction {measured} vs {}",
            (-dt).exp()
        );
    }

    fn diff_norm(a: &ModeState, b: &ModeState, eq: &BgkEquilibrium) -> f64 {
        let n = a.grid().len();
        let h = a.grid().weight();
        let mut acc = 0.0;
        for k in 0..a.x_modes() {
            for iv in 0..n {
                let d = a.row(k)[iv] - b.row(k)[iv];
                acc += d.norm_sqr() / eq.profile().values()[iv] * h;
            }
        }
        acc.sqrt()
    }

    #[test]
    fn commutator_identity() {
        // grad_v(Pi_M f) - Pi_M(grad_v f) = grad_v(ln M) Pi_M f; the second
        // term vanishes because int grad_v f dv = 0 spectrally, so the
        // identity reduces to the product rule on M int f.
        let (g, eq) = cauchy_equilibrium();
        let f = PhaseField::from_fn(8, &g, |x, v| {
            (1.0 + 0.3 * x.cos()) * (-(v - 0.7) * (v - 0.7) / 2.5).exp()
        })
        .unwrap();
        let st = f.to_modes();
        let proj = bgk_project(&st, &eq).unwrap();
        let mv = eq.profile().values();
        let grad_ln_m: Vec<f64> = {
            let grad = fft::spectral_derivative(mv, &g);
            grad.iter().zip(mv).map(|(&d, &m)| d / m).collect()
        };
        let n = g.len();
        let half = g.extent() / 2.0;
        for k in 0..4 {
            // grad_v (Pi f)
            let mut gp: Vec<rustfft::num_complex::Complex64> = proj.row(k).to_vec();
            fft::spectral_derivative_complex(&mut gp, &g);
            // Pi (grad_v f)
            let mut gf: Vec<rustfft::num_complex::Complex64> = st.row(k).to_vec();
            fft::spectral_derivative_complex(&mut gf, &g);
            let rho_grad: rustfft::num_complex::Complex64 =
                gf.iter().sum::<rustfft::num_complex::Complex64>() * g.weight();
            for (iv, &v) in g.nodes().iter().enumerate() {
                if v.abs() > half {
                    continue;
                }
                let pi_grad = rho_grad * mv[iv];
                let rhs = grad_ln_m[iv] * proj.row(k)[iv];
                let lhs = gp[iv] - pi_grad;
                assert!(
                    (lhs - rhs).norm() < 1e-8,
                    "mode {k} node {iv}: {lhs} vs {rhs}"
                );
            }
            let _ = n;
        }
    }

    #[test]
    fn recipe_coefficients_satisfy_inequalities() {
        let (_, eq) = cauchy_equilibrium();
        let coeffs = bgk_coefficients(&eq, 1.0).unwrap();
        assert!(coeffs.c > 2.0 * coeffs.b * eq.c_m);
        assert!(
            coeffs.a > 4.0 * coeffs.c * coeffs.c / coeffs.b + coeffs.b + eq.c_m * coeffs.c / 2.0
        );
        assert!(coeffs.c * coeffs.c < coeffs.a * coeffs.b);
    }

    #[test]
    fn homogeneous_relaxation_rate_is_exactly_one() {
        let (g, eq) = cauchy_equilibrium();
        // x-independent start away from equilibrium
        let f0 = PhaseField::from_fn(4, &g, |_, v| {
            0.7 * (-(v - 1.0) * (v - 1.0) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
        })
        .unwrap();
        let coeffs = bgk_coefficients(&eq, 1.0).unwrap();
        let opts = SimOptions {
            dt: 0.05,
            t_end: 3.0,
            sample_every: 4,
        };
        let trace = simulate_bgk(&f0, &eq, &coeffs, &opts, None).unwrap();
        // log-linear fit of the triple norm: slope must be 1 to 1e-6
        let mut rate_min = f64::MAX;
        let mut rate_max = f64::MIN;
        for i in 1..trace.len() {
            let r = (trace.triple_norm[i - 1] / trace.triple_norm[i]).ln()
                / (trace.times[i] - trace.times[i - 1]);
            rate_min = rate_min.min(r);
            rate_max = rate_max.max(r);
        }
        assert!(
            (rate_min - 1.0).abs() < 1e-6 && (rate_max - 1.0).abs() < 1e-6,
            "rates in [{rate_min}, {rate_max}]"
        );
        assert!(trace.mass_drift() <= 1e-10);
    }

    #[test]
    fn inhomogeneous_run_decays_monotonically() {
        let (g, eq) = cauchy_equilibrium();
        let f0 = PhaseField::from_fn(16, &g, |x, v| {
            (1.0 + 0.5 * x.cos()) * eq.profile().values()[g.index_of(v).unwrap()]
        })
        .unwrap();
        let coeffs = bgk_coefficients(&eq, 1.0).unwrap();
        let opts = SimOptions {
            dt: 0.05,
            t_end: 6.0,
            sample_every: 2,
        };
        let trace = simulate_bgk(&f0, &eq, &coeffs, &opts, None).unwrap();
        for w in trace.triple_norm.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "increase {} -> {}", w[0], w[1]);
        }
        assert!(
            trace.triple_norm.last().unwrap() < &(0.2 * trace.triple_norm[0]),
            "too little decay: {:?}",
            trace.triple_norm.last()
        );
        assert!(trace.mass_drift() <= 1e-10);
    }

    #[test]
    fn equilibrium_start_stays_flat() {
        let (g, eq) = cauchy_equilibrium();
        let n = g.len();
        let f0 = PhaseField::new(
            4,
            g.clone(),
            (0..4 * n).map(|i| eq.profile().values()[i % n]).collect(),
        )
        .unwrap();
        let coeffs = bgk_coefficients(&eq, 1.0).unwrap();
        let opts = SimOptions {
            dt: 0.05,
            t_end: 1.0,
            sample_every: 4,
        };
        let trace = simulate_bgk(&f0, &eq, &coeffs, &opts, None).unwrap();
        for &tn in &trace.triple_norm {
            assert!(tn <= 1e-8, "flat trace violated: {tn}");
        }
    }
}
