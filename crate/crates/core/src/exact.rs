//! Closed-form KP solutions used as initial data and as references.
//!
//! * Zaitsev's solution of KP I: localized in x, periodic in y, travelling in x.
//! * A genus-two theta-function solution of KP II: doubly periodic, travelling in x.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{forward_transform, Grid2D, PhysicalField};
use crate::integrators::Semilinear;
use crate::models::{KpSystem, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZaitsevParams {
    pub alpha: f64,
    pub beta: f64,
    /// x-position of the crest at t = 0
    pub x0: f64,
}

impl ZaitsevParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(beta.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Zaitsev parameters need alpha > 0 and |beta| < 1, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta, x0: 0.0 })
    }

    pub fn with_center(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    /// Propagation speed in x.
    pub fn speed(&self) -> f64 {
        let b2 = self.beta * self.beta;
        self.alpha * self.alpha * (4.0 - b2) / (1.0 - b2)
    }

    /// y-wavenumber of the periodic modulation.
    pub fn delta(&self) -> f64 {
        (3.0 / (1.0 - self.beta * self.beta)).sqrt() * self.alpha * self.alpha
    }
}

/// `2α² (1 - β cosh(αξ) cos(δy)) / (cosh(αξ) - β cos(δy))²`, `ξ = x - x0 - c t`.
pub fn zaitsev(x: f64, y: f64, t: f64, p: &ZaitsevParams) -> f64 {
    let xi = x - p.x0 - p.speed() * t;
    // divide through by cosh² so the tails cannot overflow
    let s = 1.0 / (p.alpha * xi).cosh();
    let bc = p.beta * (p.delta() * y).cos();
    let den = 1.0 - bc * s;
    2.0 * p.alpha * p.alpha * s * (s - bc) / (den * den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaParams {
    pub b: f64,
    pub lambda_b: f64,
    pub d: f64,
    pub mu: [f64; 2],
    pub nu: [f64; 2],
    pub omega: [f64; 2],
    pub phase0: [f64; 2],
    /// minimum series truncation `|m_j| ≤ M`
    pub truncation: usize,
}

impl ThetaParams {
    /// Doubly periodic KP II solution for `u_t + 6uu_x + u_xxx + ∂x⁻¹u_yy = 0`.
    ///
    /// The tabulated y-frequency belongs to the equation with `3 u_yy`; it is
    /// rescaled by √3 for the unit coefficient used here.
    pub fn kp2_reference() -> Self {
        let nu = 0.25269207053125 * 3f64.sqrt();
        let omega = -1.5429032317052;
        Self {
            b: -1.0,
            lambda_b: 0.15,
            d: -0.9775,
            mu: [0.25, 0.25],
            nu: [nu, -nu],
            omega: [omega, omega],
            phase0: [0.0, 0.0],
            truncation: 8,
        }
    }

    /// Riemann matrix `[[b, bλ], [bλ, bλ² + d]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let bl = self.b * self.lambda_b;
        [[self.b, bl], [bl, bl * self.lambda_b + self.d]]
    }

    pub fn check(&self) -> Result<()> {
        let m = self.matrix();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if m[0][0] < 0.0 && det > 0.0 {
            Ok(())
        } else {
            Err(Error::ThetaNotConvergent)
        }
    }

    /// Smallest truncation (at least the configured one) whose first dropped shell is negligible.
    pub fn effective_truncation(&self) -> usize {
        let b = self.matrix();
        let q = |m1: f64, m2: f64| 0.5 * (b[0][0] * m1 * m1 + 2.0 * b[0][1] * m1 * m2 + b[1][1] * m2 * m2);
        let mut m = self.truncation.max(1);
        loop {
            let edge = (m + 1) as f64;
            let mut largest = f64::NEG_INFINITY;
            for j in -(m as i64 + 1)..=(m as i64 + 1) {
                let j = j as f64;
                largest = largest.max(q(edge, j)).max(q(-edge, j)).max(q(j, edge)).max(q(j, -edge));
            }
            if largest < (1e-18f64).ln() || m >= 64 {
                return m;
            }
            m += 1;
        }
    }

    /// x-velocity of the pattern, valid when both phases share the same `ω/μ`.
    pub fn speed(&self) -> f64 {
        -self.omega[0] / self.mu[0]
    }

    /// Periods `(2π lx, 2π ly)` of the pattern when `μ₁ = μ₂` and `ν₁ = -ν₂`.
    pub fn periods(&self) -> (f64, f64) {
        (1.0 / self.mu[0], 1.0 / self.nu[0].abs())
    }
}

struct ThetaSums {
    theta: f64,
    theta_x: f64,
    theta_xx: f64,
}

fn theta_sums(phi: [f64; 2], p: &ThetaParams, dphi_dx: [f64; 2]) -> ThetaSums {
    let b = p.matrix();
    let m_max = p.effective_truncation() as i64;
    let mut s = ThetaSums {
        theta: 0.0,
        theta_x: 0.0,
        theta_xx: 0.0,
    };
    for m1 in -m_max..=m_max {
        for m2 in -m_max..=m_max {
            let (a, c) = (m1 as f64, m2 as f64);
            let q = 0.5 * (b[0][0] * a * a + 2.0 * b[0][1] * a * c + b[1][1] * c * c);
            let w = q.exp();
            let arg = a * phi[0] + c * phi[1];
            let k = a * dphi_dx[0] + c * dphi_dx[1];
            let (sn, cs) = arg.sin_cos();
            s.theta += w * cs;
            s.theta_x -= w * k * sn;
            s.theta_xx -= w * k * k * cs;
        }
    }
    s
}

/// `Σ_m exp(½ mᵀBm + i mᵀφ)`; real by the `m → -m` symmetry.
pub fn theta(phi1: f64, phi2: f64, p: &ThetaParams) -> Result<f64> {
    p.check()?;
    Ok(theta_sums([phi1, phi2], p, [0.0, 0.0]).theta)
}

/// `u = 2 ∂x² ln θ` with `φ_j = μ_j x + ν_j y + ω_j t + φ_{j,0}`.
pub fn kp2_doubly_periodic(x: f64, y: f64, t: f64, p: &ThetaParams) -> Result<f64> {
    p.check()?;
    let phi = [0, 1].map(|j| p.mu[j] * x + p.nu[j] * y + p.omega[j] * t + p.phase0[j]);
    let s = theta_sums(phi, p, p.mu);
    if s.theta.abs() <= 1e-12 {
        return Err(Error::ThetaDegenerate { value: s.theta });
    }
    Ok(2.0 * (s.theta * s.theta_xx - s.theta_x * s.theta_x) / (s.theta * s.theta))
}

/// Samples the theta solution on a grid.
pub fn kp2_field(grid: &Grid2D, t: f64, p: &ThetaParams) -> Result<PhysicalField> {
    let mut values = Vec::with_capacity(grid.len());
    for ix in 0..grid.nx {
        for iy in 0..grid.ny {
            values.push(Complex64::new(kp2_doubly_periodic(grid.x(ix), grid.y(iy), t, p)?, 0.0));
        }
    }
    PhysicalField::new(*grid, values)
}

pub fn zaitsev_field(grid: &Grid2D, t: f64, p: &ZaitsevParams) -> PhysicalField {
    PhysicalField::from_fn(*grid, |x, y| zaitsev(x, y, t, p))
}

/// Relative residual `‖u_t - (L v + N(v))‖₂ / ‖u‖₂` of a field travelling with
/// speed `c` in x, evaluated in Fourier space.
///
/// The kx = 0 column is left out: there the regularized antiderivative is not
/// an inverse of ∂x, and a travelling wave has no dynamics.
pub fn kp_travelling_residual(u: &PhysicalField, speed: f64, model: &ModelSpec) -> Result<f64> {
    let grid = u.grid;
    let v = forward_transform(u);
    let mut sys = KpSystem::new(*model, grid)?;
    let mut rhs = vec![Complex64::new(0.0, 0.0); grid.len()];
    sys.nonlinear(0.0, &v.coeffs, &mut rhs);
    let symbol = sys.symbol();
    let mut num = 0.0;
    let mut den = 0.0;
    for ix in 0..grid.nx {
        for iy in 0..grid.ny {
            let i = grid.idx(ix, iy);
            den += v.coeffs[i].norm_sqr();
            if ix == 0 || grid.is_nyquist_x(ix) {
                continue;
            }
            let ut = Complex64::new(0.0, -speed * grid.kx(ix)) * v.coeffs[i];
            num += (ut - rhs[i] - symbol[i] * v.coeffs[i]).norm_sqr();
        }
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn zp() -> ZaitsevParams {
        ZaitsevParams::new(1.0, 0.5).unwrap()
    }

    #[test]
    fn zaitsev_values() {
        let p = zp();
        assert!((zaitsev(0.0, 0.0, 0.0, &p) - 4.0).abs() < 1e-14);
        assert!((p.speed() - 5.0).abs() < 1e-14);
        assert!((p.delta() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zaitsev_is_y_periodic_and_finite_far_away() {
        let p = zp();
        let per = 2.0 * PI / p.delta();
        for &(x, y) in &[(0.3, 0.1), (-1.2, 2.0), (4.0, -0.7)] {
            let a = zaitsev(x, y, 0.2, &p);
            let b = zaitsev(x, y + per, 0.2, &p);
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
        assert!(zaitsev(1e4, 0.0, 0.0, &p) == 0.0);
        assert!(zaitsev(-800.0, 0.3, 0.0, &p).is_finite());
    }

    #[test]
    fn zaitsev_travels() {
        let p = zp();
        let q = p.with_center(2.0);
        assert!((zaitsev(2.4, 0.3, 0.0, &q) - zaitsev(0.4, 0.3, 0.0, &p)).abs() < 1e-15);
        assert!((zaitsev(1.0, 0.3, 0.2, &p) - zaitsev(0.0, 0.3, 0.0, &p)).abs() < 1e-14);
    }

    #[test]
    fn invalid_parameters() {
        assert!(ZaitsevParams::new(1.0, 1.0).is_err());
        assert!(ZaitsevParams::new(-1.0, 0.5).is_err());
        let mut t = ThetaParams::kp2_reference();
        t.b = 1.0;
        assert!(matches!(theta(0.0, 0.0, &t), Err(Error::ThetaNotConvergent)));
    }

    #[test]
    fn diagonal_theta_matches_three_terms() {
        let p = ThetaParams {
            b: -60.0,
            lambda_b: 0.0,
            d: -70.0,
            mu: [1.0, 1.0],
            nu: [0.0, 0.0],
            omega: [0.0, 0.0],
            phase0: [0.0, 0.0],
            truncation: 1,
        };
        for &(a, c) in &[(0.0, 0.0), (0.7, -1.1), (2.0, 3.0)] {
            let want = 1.0 + 2.0 * (-30.0f64).exp() * f64::cos(a) + 2.0 * (-35.0f64).exp() * f64::cos(c);
            assert!((theta(a, c, &p).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn theta_symmetries() {
        let p = ThetaParams::kp2_reference();
        for &(a, c) in &[(0.1, 0.2), (1.3, -2.2), (-3.0, 0.5)] {
            let t0 = theta(a, c, &p).unwrap();
            assert!((theta(a + 2.0 * PI, c, &p).unwrap() - t0).abs() < 1e-14);
            assert!((theta(-a, -c, &p).unwrap() - t0).abs() < 1e-14);
        }
    }

    #[test]
    fn theta_truncation_is_converged() {
        let p = ThetaParams::kp2_reference();
        let mut q = p;
        q.truncation = 2 * p.effective_truncation();
        for &(x, y) in &[(0.0, 0.0), (3.0, 1.0), (-7.0, 4.0)] {
            let a = kp2_doubly_periodic(x, y, 0.1, &p).unwrap();
            let b = kp2_doubly_periodic(x, y, 0.1, &q).unwrap();
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn theta_solution_matches_finite_difference() {
        let p = ThetaParams::kp2_reference();
        let h = 1e-3;
        for &(x, y) in &[(0.2, 0.4), (-2.5, 1.0), (5.0, -3.0)] {
            let f = |s: f64| {
                let phi = [0, 1].map(|j| p.mu[j] * s + p.nu[j] * y + p.phase0[j]);
                2.0 * theta(phi[0], phi[1], &p).unwrap().ln()
            };
            let fd = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
                / (12.0 * h * h);
            let u = kp2_doubly_periodic(x, y, 0.0, &p).unwrap();
            assert!((u - fd).abs() <= 1e-8, "u={u} fd={fd}");
        }
    }

    #[test]
    fn theta_solution_is_a_travelling_wave() {
        let p = ThetaParams::kp2_reference();
        let t = 0.3;
        let shift = p.speed() * t;
        for &(x, y) in &[(0.0, 0.0), (1.5, -0.5), (-4.0, 2.0)] {
            let a = kp2_doubly_periodic(x, y, t, &p).unwrap();
            let b = kp2_doubly_periodic(x - shift, y, 0.0, &p).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_solution_fits_its_periods() {
        let p = ThetaParams::kp2_reference();
        let (lx, ly) = p.periods();
        let a = kp2_doubly_periodic(0.4, 0.9, 0.0, &p).unwrap();
        let b = kp2_doubly_periodic(0.4 + 2.0 * PI * lx, 0.9 + 2.0 * PI * ly, 0.0, &p).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
