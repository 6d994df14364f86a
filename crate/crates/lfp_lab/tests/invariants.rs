//! Property tests for the structural invariants: Gram-form exactness of the
//! symmetric form, skewness of its companion, transport isometry, collision
//! mass conservation, projection idempotence, triple-norm equivalence, and
//! config round-trips.

use lfp_lab::coeffs::HypoCoeffs;
use lfp_lab::config::SimConfig;
use lfp_lab::equilibrium::equilibrium_density;
use lfp_lab::forms::{project_equilibrium, weighted_inner, DirichletForm};
use lfp_lab::grid::{VelocityField, VelocityGrid};
use lfp_lab::params::AlphaParams;
use lfp_lab::phase::PhaseField;
use lfp_lab::solver_lfp::{transport_step, CollisionPlan};
use proptest::prelude::*;
use std::sync::OnceLock;

fn setup() -> &'static (AlphaParams, VelocityGrid, VelocityField, DirichletForm) {
    static CELL: OnceLock<(AlphaParams, VelocityGrid, VelocityField, DirichletForm)> =
        OnceLock::new();
    CELL.get_or_init(|| {
        let p = AlphaParams::new(1.0, 1).unwrap();
        let g = VelocityGrid::new(8.0, 256).unwrap();
        let mu = equilibrium_density(&p, &g).unwrap();
        let form = DirichletForm::new(&p, &mu).unwrap();
        (p, g, mu, form)
    })
}

/// Bounded smooth envelope from low grid harmonics times the equilibrium.
fn probe_from(coeffs: &[(f64, f64)]) -> VelocityField {
    let (_, g, mu, _) = setup();
    let base = std::f64::consts::PI / g.extent();
    VelocityField::new(
        g.clone(),
        g.nodes()
            .iter()
            .zip(mu.values())
            .map(|(&v, &m)| {
                let mut e = 0.0;
                for (i, &(ac, as_)) in coeffs.iter().enumerate() {
                    let xi = base * (i + 1) as f64;
                    e += ac * (xi * v).cos() + as_ * (xi * v).sin();
                }
                e * m
            })
            .collect(),
    )
    .unwrap()
}

fn envelope_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn s_form_gram_properties(ea in envelope_strategy(), eb in envelope_strategy()) {
        let (_, _, _, form) = setup();
        let f = probe_from(&ea);
        let g = probe_from(&eb);
        let sfg = form.s_form(&f, &g).unwrap();
        let sgf = form.s_form(&g, &f).unwrap();
        prop_assert_eq!(sfg, sgf);
        let sff = form.s_form(&f, &f).unwrap();
        let sgg = form.s_form(&g, &g).unwrap();
        prop_assert!(sff >= 0.0 && sgg >= 0.0);
        prop_assert!(sfg.abs() <= (sff * sgg).sqrt() + 1e-10);
    }

    #[test]
    fn a_form_skew_properties(ea in envelope_strategy(), eb in envelope_strategy()) {
        let (_, _, _, form) = setup();
        let f = probe_from(&ea);
        let g = probe_from(&eb);
        let afg = form.a_form(&f, &g).unwrap();
        let agf = form.a_form(&g, &f).unwrap();
        prop_assert_eq!(afg, -agf);
        prop_assert_eq!(form.a_form(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn projection_idempotent_and_self_adjoint(
        ea in envelope_strategy(),
        eb in envelope_strategy(),
    ) {
        let (_, _, mu, _) = setup();
        let f = probe_from(&ea);
        let g = probe_from(&eb);
        let pf = project_equilibrium(&f, mu).unwrap();
        let ppf = project_equilibrium(&pf, mu).unwrap();
        for (a, b) in pf.values().iter().zip(ppf.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-6));
        }
        let pg = project_equilibrium(&g, mu).unwrap();
        let lhs = weighted_inner(&pf, &g, mu);
        let rhs = weighted_inner(&f, &pg, mu);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1e-9));
    }

    #[test]
    fn transport_is_weighted_isometry(
        amp in 0.1f64..1.0,
        phase in 0.0f64..6.28,
        dt in 0.0f64..1.5,
    ) {
        let (_, g, mu, _) = setup();
        let f = PhaseField::from_fn(8, g, |x, v| {
            (1.0 + amp * (x + phase).cos()) * (-v * v / 3.0).exp()
        }).unwrap();
        let mut st = f.to_modes();
        let before = st.norm_bundle(mu);
        transport_step(&mut st, dt);
        let after = st.norm_bundle(mu);
        prop_assert!((before.l2 - after.l2).abs() <= 1e-11 * before.l2.max(1e-12));
        prop_assert!((before.gx - after.gx).abs() <= 1e-11 * before.gx.max(1e-12));
        prop_assert!((st.mass() - f.mass()).abs() <= 1e-12 * f.mass().abs().max(1e-12));
    }

    #[test]
    fn collision_conserves_mass(
        shift in -2.0f64..2.0,
        width in 0.5f64..2.0,
        dt in 0.0f64..2.0,
    ) {
        let (p, g, _, _) = setup();
        let plan = CollisionPlan::new(p, g);
        let f = VelocityField::from_fn(g, |v| {
            (-(v - shift) * (v - shift) / (2.0 * width)).exp()
        }).unwrap();
        let mut row: Vec<rustfft::num_complex::Complex64> = f
            .values()
            .iter()
            .map(|&x| rustfft::num_complex::Complex64::new(x, 0.0))
            .collect();
        plan.step_row(&mut row, dt);
        let mass_after: f64 = row.iter().map(|z| z.re).sum::<f64>() * g.weight();
        prop_assert!((mass_after - f.integral()).abs() <= 1e-11 * f.integral().abs());
    }

    #[test]
    fn triple_norm_equivalence(
        a in 0.5f64..20.0,
        b in 0.1f64..5.0,
        frac in 0.05f64..0.95,
        amp in 0.1f64..0.9,
    ) {
        let (_, g, mu, _) = setup();
        let c = frac * (a * b).sqrt();
        let coeffs = HypoCoeffs::new(a, b, c, 0.1).unwrap();
        let (lo, hi) = coeffs.equivalence_factors();
        let f = PhaseField::from_fn(8, g, |x, v| {
            (1.0 + amp * x.cos()) * (-(v - 0.3) * (v - 0.3) / 2.0).exp()
        }).unwrap();
        let bundle = f.to_modes().norm_bundle(mu);
        let tn = bundle.triple_sq(&coeffs);
        let h1 = bundle.h1_sq();
        prop_assert!(tn >= lo * h1 - 1e-9 * h1.abs());
        prop_assert!(tn <= hi * h1 + 1e-9 * h1.abs());
    }

    #[test]
    fn config_roundtrip(
        alpha in 0.3f64..1.9,
        nodes_pow in 4u32..8,
        dt in 0.01f64..0.2,
        seed in 0u64..1000,
    ) {
        let text = format!(
            "seed = {seed}\n[params]\nalpha = {alpha}\nextent = 16.0\nnodes = {}\n[time]\ndt = {dt}\n",
            1usize << nodes_pow
        );
        if let Ok(cfg) = SimConfig::from_toml(&text) {
            let back = SimConfig::from_toml(&cfg.to_toml()).unwrap();
            prop_assert_eq!(cfg.clone(), back);
            prop_assert_eq!(cfg.hash(), cfg.clone().hash());
        }
    }
}
