//! Cubic spline on a uniform knot grid, complex-valued, with natural or
//! not-a-knot boundary conditions.

use rustfft::num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplineBoundary {
    /// Zero second derivative at the ends.
    Natural,
    /// Third-derivative continuity across the second and second-to-last
    /// knots; keeps O(dx^4) accuracy up to the ends.
    NotAKnot,
}

/// Cubic spline through (x0 + i dx, y_i).
pub struct UniformCubicSpline {
    x0: f64,
    dx: f64,
    y: Vec<Complex64>,
    second: Vec<Complex64>,
}

impl UniformCubicSpline {
    pub fn new(x0: f64, dx: f64, y: Vec<Complex64>) -> Self {
        Self::with_boundary(x0, dx, y, SplineBoundary::Natural)
    }

    pub fn with_boundary(x0: f64, dx: f64, y: Vec<Complex64>, bc: SplineBoundary) -> Self {
        let n = y.len();
        assert!(n >= 4, "spline needs at least 4 knots");
        assert!(dx > 0.0);
        // Thomas solve for the second derivatives M_i.
        // Interior rows: (1/6) M_{i-1} + (2/3) M_i + (1/6) M_{i+1} = d_i
        // with d_i the scaled second difference. For not-a-knot the end
        // conditions M_0 = 2 M_1 - M_2 (and mirrored) collapse the first and
        // last interior rows to M = d.
        let mut second = vec![Complex64::new(0.0, 0.0); n];
        let m = n - 2;
        let mut diag = vec![2.0 / 3.0; m];
        let mut lower = vec![1.0 / 6.0; m];
        let mut upper = vec![1.0 / 6.0; m];
        let mut rhs = vec![Complex64::new(0.0, 0.0); m];
        let inv_dx2 = 1.0 / (dx * dx);
        for i in 0..m {
            rhs[i] = (y[i + 2] - 2.0 * y[i + 1] + y[i]) * inv_dx2;
        }
        if bc == SplineBoundary::NotAKnot {
            diag[0] = 1.0;
            upper[0] = 0.0;
            diag[m - 1] = 1.0;
            lower[m - 1] = 0.0;
        }
        for i in 1..m {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            let prev = rhs[i - 1];
            rhs[i] -= prev * w;
        }
        let mut sol = vec![Complex64::new(0.0, 0.0); m];
        sol[m - 1] = rhs[m - 1] / diag[m - 1];
        for i in (0..m - 1).rev() {
            sol[i] = (rhs[i] - sol[i + 1] * upper[i]) / diag[i];
        }
        second[1..(m + 1)].copy_from_slice(&sol);
        if bc == SplineBoundary::NotAKnot {
            second[0] = 2.0 * second[1] - second[2];
            second[n - 1] = 2.0 * second[n - 2] - second[n - 3];
        }
        Self { x0, dx, y, second }
    }

    /// Number of knots.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Evaluate at x; x must lie within the knot range.
    pub fn eval(&self, x: f64) -> Complex64 {
        let n = self.y.len();
        let pos = (x - self.x0) / self.dx;
        debug_assert!(
            pos > -1e-9 && pos < (n - 1) as f64 + 1e-9,
            "spline evaluation outside knot range: {x}"
        );
        let i = (pos.floor() as isize).clamp(0, n as isize - 2) as usize;
        let t = pos - i as f64;
        let u = 1.0 - t;
        let dx2 = self.dx * self.dx / 6.0;
        self.y[i] * u
            + self.y[i + 1] * t
            + (self.second[i] * (u * u * u - u) + self.second[i + 1] * (t * t * t - t)) * dx2
    }
}
