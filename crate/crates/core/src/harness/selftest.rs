//! Self-checks of the φ-function paths and the closed-form solutions.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::exact::{kp2_field, kp_travelling_residual, zaitsev_field, ThetaParams, ZaitsevParams};
use crate::grid::{forward_transform, Grid2D};
use crate::models::ModelSpec;
use crate::phi::{contour_eval, phi_eval};

pub const PHI_TOLERANCE: f64 = 5e-15;
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;
pub const PHASE_SHIFT_TOLERANCE: f64 = 5e-8;

/// Deterministic sample of the region the schemes use: the imaginary axis, a
/// disc around the origin and a wedge of the left half-plane.
pub fn phi_sample_points(n: usize) -> Vec<Complex64> {
    let third = n / 3;
    let mut pts = Vec::with_capacity(n);
    for k in 0..third {
        let s = (k as f64 + 0.5) / third as f64;
        // log-spaced magnitudes from 1e-3 to 1e3 on both half axes
        let y = 10f64.powf(-3.0 + 6.0 * s);
        pts.push(Complex64::new(0.0, if k % 2 == 0 { y } else { -y }));
    }
    for k in 0..third {
        let s = (k as f64 + 0.5) / third as f64;
        pts.push(Complex64::from_polar(0.5 * s.sqrt(), 2.0 * PI * 7.0 * s));
    }
    let rest = n - pts.len();
    for k in 0..rest {
        let s = (k as f64 + 0.5) / rest as f64;
        let r = 10f64.powf(-0.3 + 2.3 * s);
        let th = PI / 2.0 + PI * (0.05 + 0.9 * ((k * 37 % rest) as f64 / rest as f64));
        pts.push(Complex64::from_polar(r, th));
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSelftest {
    pub points: usize,
    pub max_deviation: f64,
    pub worst_z: Complex64,
}

impl PhiSelftest {
    pub fn passed(&self) -> bool {
        self.max_deviation <= PHI_TOLERANCE
    }
}

/// Compares the direct evaluation with the 16-node contour average.
pub fn phi_selftest(points: usize) -> PhiSelftest {
    let mut out = PhiSelftest {
        points,
        max_deviation: 0.0,
        worst_z: Complex64::new(0.0, 0.0),
    };
    for z in phi_sample_points(points) {
        let d = phi_eval(z).max_deviation(&contour_eval(z, 16));
        if !(d <= out.max_deviation) {
            out.max_deviation = d;
            out.worst_z = z;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSelftest {
    pub zaitsev_residual: f64,
    pub theta_residual: f64,
    pub theta_phase_shift: f64,
}

impl ExactSelftest {
    pub fn residuals_pass(&self) -> bool {
        self.zaitsev_residual <= RESIDUAL_TOLERANCE && self.theta_residual <= RESIDUAL_TOLERANCE
    }

    pub fn phase_shift_passes(&self) -> bool {
        self.theta_phase_shift <= PHASE_SHIFT_TOLERANCE
    }
}

/// Box for the Zaitsev residual: one y period, and an x extent that keeps the
/// tail at the boundary near rounding level for 2⁸ points.
pub fn zaitsev_residual_grid(n: usize) -> Result<(Grid2D, ZaitsevParams)> {
    let p = ZaitsevParams::new(1.0, 0.5)?;
    let ly = 1.0 / p.delta();
    Ok((Grid2D::new(n, n, 5.75, ly)?, p))
}

/// Residuals of both closed forms in the discrete KP right-hand side on an
/// `n × n` grid, and the travelling-wave check of the theta solution.
pub fn exact_selftest(n: usize) -> Result<ExactSelftest> {
    let (zg, zp) = zaitsev_residual_grid(n)?;
    let zaitsev_residual = kp_travelling_residual(&zaitsev_field(&zg, 0.0, &zp), zp.speed(), &ModelSpec::kp1(1.0))?;

    let tp = ThetaParams::kp2_reference();
    let (lx, ly) = tp.periods();
    let tg = Grid2D::new(n, n, lx, ly)?;
    let kp2 = ModelSpec::kp2(1.0);
    let theta_residual = kp_travelling_residual(&kp2_field(&tg, 0.0, &tp)?, tp.speed(), &kp2)?;

    // the state at t is the state at 0 shifted by c t in x
    let t = 0.37;
    let v0 = forward_transform(&kp2_field(&tg, 0.0, &tp)?);
    let vt = forward_transform(&kp2_field(&tg, t, &tp)?);
    let shift = tp.speed() * t;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for ix in 0..tg.nx {
        let rot = Complex64::from_polar(1.0, -tg.kx(ix) * shift);
        for iy in 0..tg.ny {
            let i = tg.idx(ix, iy);
            let shifted = if tg.is_nyquist_x(ix) { vt.coeffs[i] } else { v0.coeffs[i] * rot };
            num = num.max((vt.coeffs[i] - shifted).norm());
            den = den.max(vt.coeffs[i].norm());
        }
    }
    Ok(ExactSelftest {
        zaitsev_residual,
        theta_residual,
        theta_phase_shift: num / den,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_covers_requested_count() {
        let pts = phi_sample_points(400);
        assert_eq!(pts.len(), 400);
        assert!(pts.iter().all(|z| z.re <= 0.5));
        assert!(pts.iter().any(|z| z.im.abs() > 900.0));
    }

    #[test]
    fn phi_paths_agree_on_sample() {
        let r = phi_selftest(400);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn theta_phase_shift_is_tight() {
        let r = exact_selftest(256).unwrap();
        assert!(r.phase_shift_passes(), "{r:?}");
        assert!(r.theta_residual <= RESIDUAL_TOLERANCE, "{r:?}");
        assert!(r.zaitsev_residual < 1e-5, "{r:?}");
    }
}
