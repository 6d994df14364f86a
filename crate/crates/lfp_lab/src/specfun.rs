//! Special functions: Gamma, Riemann/Hurwitz zeta, Gauss-Legendre nodes.
//!
//! The zeta values drive the endpoint correction of the singular kernel
//! quadrature; they are evaluated by Euler-Maclaurin with Bernoulli tail,
//! which is accurate to near machine precision for the arguments used
//! here (s in (-1, 1) for the Riemann values, s in (1, 3) for Hurwitz).

/// Gamma function (libm, ~1 ulp for the arguments used here).
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

// Bernoulli numbers B_2, B_4, ..., B_12.
const BERNOULLI_EVEN: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];

/// Hurwitz zeta zeta(s, q) = sum_{k>=0} (q+k)^{-s} by Euler-Maclaurin.
///
/// Valid for s != 1 (analytic continuation for s < 1) and q > 0.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    assert!(q > 0.0, "hurwitz_zeta requires q > 0");
    assert!((s - 1.0).abs() > 1e-9, "hurwitz_zeta pole at s = 1");
    let n = 16usize;
    let mut sum = 0.0;
    for k in 0..n {
        sum += (q + k as f64).powf(-s);
    }
    let a = q + n as f64;
    sum += a.powf(1.0 - s) / (s - 1.0);
    sum += 0.5 * a.powf(-s);
    // Bernoulli tail: B_{2j}/(2j)! * (s)_{2j-1} * a^{-s-2j+1}
    let mut poch = s; // rising factorial (s)(s+1)...(s+2j-2)
    let mut fact = 2.0; // (2j)!
    let mut apow = a.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        sum += b / fact * poch * apow;
        // advance to next j: multiply pochhammer by (s+2j-1)(s+2j), factorial, a^-2
        let two_j = 2.0 * (j + 1) as f64;
        poch *= (s + two_j - 1.0) * (s + two_j);
        fact *= (two_j + 1.0) * (two_j + 2.0);
        apow /= a * a;
    }
    sum
}

/// Riemann zeta for real s < 1 (and s in (1,3) works too), via Hurwitz at q=1.
pub fn riemann_zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// 10-point Gauss-Legendre nodes on [-1, 1].
pub const GL10_NODES: [f64; 10] = [
    -0.9739065285171717,
    -0.8650633666889845,
    -0.6794095682990244,
    -0.4333953941292472,
    -0.1488743389816312,
    0.1488743389816312,
    0.4333953941292472,
    0.6794095682990244,
    0.8650633666889845,
    0.9739065285171717,
];

/// 10-point Gauss-Legendre weights matching [`GL10_NODES`].
pub const GL10_WEIGHTS: [f64; 10] = [
    0.0666713443086881,
    0.1494513491505806,
    0.2190863625159820,
    0.2692667193099963,
    0.2955242247147529,
    0.2955242247147529,
    0.2692667193099963,
    0.2190863625159820,
    0.1494513491505806,
    0.0666713443086881,
];

/// Integrate f over [a, b] with composite 10-point Gauss-Legendre on one panel.
pub fn gl10<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL10_NODES.iter().zip(GL10_WEIGHTS.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_reference_values() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.0) - 1.0).abs() < 1e-15);
        assert!((gamma(1.5) - 0.5 * PI.sqrt()).abs() < 1e-14);
        // Gamma(-1/2) = -2 sqrt(pi)
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn riemann_zeta_reference_values() {
        // zeta(2) = pi^2/6
        assert!((riemann_zeta(2.0) - PI * PI / 6.0).abs() < 1e-13);
        // zeta(0) = -1/2
        assert!((riemann_zeta(0.0) + 0.5).abs() < 1e-13);
        // zeta(1/2), zeta(-1/2): standard tabulated values
        assert!((riemann_zeta(0.5) + 1.4603545088095868).abs() < 1e-12);
        assert!((riemann_zeta(-0.5) + 0.2078862249773545).abs() < 1e-12);
    }

    #[test]
    fn hurwitz_zeta_halves_relation() {
        // zeta(s, 1/2) = (2^s - 1) zeta(s)
        for &s in &[1.5, 2.0, 2.5] {
            let lhs = hurwitz_zeta(s, 0.5);
            let rhs = (2f64.powf(s) - 1.0) * riemann_zeta(s);
            assert!(
                (lhs - rhs).abs() < 1e-12 * rhs.abs(),
                "s={s}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn hurwitz_zeta_matches_direct_sum() {
        // s large enough that the direct sum converges fast
        let s = 3.0;
        let q = 0.7;
        let direct: f64 = (0..400_000).map(|k| (q + k as f64).powf(-s)).sum();
        assert!((hurwitz_zeta(s, q) - direct).abs() < 1e-10);
    }

    #[test]
    fn gl10_exact_on_polynomials() {
        // degree 19 is integrated exactly
        let exact = 2.0 / 20.0 * 1.0; // int_{-1}^{1} x^18 dx = 2/19... use x^18
        let val = gl10(-1.0, 1.0, |x| x.powi(18));
        assert!((val - 2.0 / 19.0).abs() < 1e-14, "{val} vs {}", 2.0 / 19.0);
        let _ = exact;
        let val = gl10(0.0, 2.0, |x| 5.0 * x.powi(4));
        assert!((val - 32.0).abs() < 1e-12);
    }
}
