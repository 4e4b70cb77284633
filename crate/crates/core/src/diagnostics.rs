//! Mass, energies, error norms and spectral resolution checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{inv_dx_symbol, Grid2D, SpectralField, Transform2D};
use crate::integrators::Observer;
use crate::models::{mean_field, Equation, ModelSpec};

fn parseval_mass(grid: &Grid2D, coeffs: &[Complex64]) -> f64 {
    grid.cell_area() / grid.len() as f64 * coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
}

/// `∫|u|² dx dy`, evaluated from the Fourier coefficients.
pub fn mass(v: &SpectralField) -> f64 {
    parseval_mass(&v.grid, &v.coeffs)
}

/// Relative mass change `M(t)/M(0) - 1` along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MassTrace {
    grid: Grid2D,
    m0: f64,
    pub times: Vec<f64>,
    pub test_values: Vec<f64>,
}

impl MassTrace {
    pub fn new(v0: &SpectralField, t0: f64) -> Self {
        Self {
            grid: v0.grid,
            m0: mass(v0),
            times: vec![t0],
            test_values: vec![0.0],
        }
    }

    pub fn initial_mass(&self) -> f64 {
        self.m0
    }

    pub fn record(&mut self, t: f64, coeffs: &[Complex64]) {
        self.times.push(t);
        self.test_values.push(parseval_mass(&self.grid, coeffs) / self.m0 - 1.0);
    }

    pub fn last(&self) -> f64 {
        *self.test_values.last().expect("trace holds its initial entry")
    }
}

impl Observer for MassTrace {
    fn observe(&mut self, _step: usize, t: f64, v: &[Complex64]) -> Result<()> {
        self.grid.check_len(v.len())?;
        self.record(t, v);
        Ok(())
    }
}

fn to_physical(fft: &mut Transform2D, mut c: Vec<Complex64>) -> Vec<Complex64> {
    fft.inverse(&mut c);
    c
}

/// `½ ∫ (∂x u)² - λ (∂x⁻¹ ∂y u)² - 2ε² u³`.
pub fn energy_kp(v: &SpectralField, model: &ModelSpec) -> f64 {
    let grid = v.grid;
    let mut fft = Transform2D::new(grid);
    let mut dx = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut ay = dx.clone();
    for ix in 0..grid.nx {
        let kx = grid.kx(ix);
        let inv = inv_dx_symbol(kx, if model.lambda == 0.0 { 1.0 } else { model.lambda });
        for iy in 0..grid.ny {
            let i = grid.idx(ix, iy);
            if !grid.is_nyquist_x(ix) {
                dx[i] = Complex64::new(0.0, kx) * v.coeffs[i];
            }
            if !grid.is_nyquist_y(iy) {
                ay[i] = inv * Complex64::new(0.0, grid.ky(iy)) * v.coeffs[i];
            }
        }
    }
    let u = to_physical(&mut fft, v.coeffs.clone());
    let dx = to_physical(&mut fft, dx);
    let ay = to_physical(&mut fft, ay);
    let e2 = model.epsilon * model.epsilon;
    let sum: f64 = (0..grid.len())
        .map(|i| dx[i].re.powi(2) - model.lambda * ay[i].re.powi(2) - 2.0 * e2 * u[i].re.powi(3))
        .sum();
    0.5 * grid.cell_area() * sum
}

/// `½ ∫ ε²|u_x|² - ε²|u_y|² - ρ (|u|⁴ - ½ (Φ² + (∂x⁻¹∂y Φ)²))`.
pub fn energy_ds(v: &SpectralField, model: &ModelSpec) -> f64 {
    let grid = v.grid;
    let mut fft = Transform2D::new(grid);
    let phi = mean_field(v);
    let mut phi_hat = phi.values.clone();
    fft.forward(&mut phi_hat);
    let zero = Complex64::new(0.0, 0.0);
    let (mut ux, mut uy, mut aphi) = (vec![zero; grid.len()], vec![zero; grid.len()], vec![zero; grid.len()]);
    for ix in 0..grid.nx {
        let kx = grid.kx(ix);
        let inv = inv_dx_symbol(kx, 1.0);
        for iy in 0..grid.ny {
            let i = grid.idx(ix, iy);
            let ky = grid.ky(iy);
            if !grid.is_nyquist_x(ix) {
                ux[i] = Complex64::new(0.0, kx) * v.coeffs[i];
            }
            if !grid.is_nyquist_y(iy) {
                uy[i] = Complex64::new(0.0, ky) * v.coeffs[i];
                aphi[i] = inv * Complex64::new(0.0, ky) * phi_hat[i];
            }
        }
    }
    let u = to_physical(&mut fft, v.coeffs.clone());
    let ux = to_physical(&mut fft, ux);
    let uy = to_physical(&mut fft, uy);
    let aphi = to_physical(&mut fft, aphi);
    let e2 = model.epsilon * model.epsilon;
    let sum: f64 = (0..grid.len())
        .map(|i| {
            let quartic = u[i].norm_sqr().powi(2) - 0.5 * (phi.values[i].re.powi(2) + aphi[i].re.powi(2));
            e2 * ux[i].norm_sqr() - e2 * uy[i].norm_sqr() - model.rho * quartic
        })
        .sum();
    0.5 * grid.cell_area() * sum
}

/// Energy functional matching the model's equation.
pub fn energy(v: &SpectralField, model: &ModelSpec) -> f64 {
    match model.equation {
        Equation::Ds2 => energy_ds(v, model),
        _ => energy_kp(v, model),
    }
}

/// `Δ₂ = ‖u_num - u_ref‖₂ / ‖u₀‖₂`; by Parseval the ratio is taken on coefficients.
pub fn error_norm(v_num: &[Complex64], v_ref: &[Complex64], v0: &[Complex64]) -> Result<f64> {
    if v_num.len() != v_ref.len() || v0.len() != v_ref.len() {
        return Err(Error::DimensionMismatch {
            expected: v_ref.len(),
            got: if v_num.len() != v_ref.len() { v_num.len() } else { v0.len() },
        });
    }
    let num: f64 = v_num.iter().zip(v_ref).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = v0.iter().map(|a| a.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::InvalidParameter("initial data has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

/// Largest coefficient per wavenumber shell, normalized by the overall maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumProfile {
    /// `(|kx|, log10 max)` for each x shell
    pub kx: Vec<(f64, f64)>,
    /// `(|ky|, log10 max)` for each y shell
    pub ky: Vec<(f64, f64)>,
    /// log10 of the largest value over the outer eighth of shells in either direction
    pub tail_log10: f64,
    pub floor: f64,
}

impl SpectrumProfile {
    pub fn resolved(&self) -> bool {
        self.tail_log10 <= self.floor.log10()
    }
}

fn shells(n: usize, len: f64, value: impl Fn(usize) -> f64) -> Vec<(f64, f64)> {
    // shell m collects DFT indices m and n - m
    let mut max = vec![0.0f64; n / 2 + 1];
    for i in 0..n {
        let m = if i <= n / 2 { i } else { n - i };
        max[m] = max[m].max(value(i));
    }
    max.into_iter()
        .enumerate()
        .map(|(m, v)| (m as f64 / len, v.log10()))
        .collect()
}

/// Shell maxima of `|v|` and whether the outer shells fall below `floor`.
pub fn spectrum_profile(v: &SpectralField, floor: f64) -> SpectrumProfile {
    let grid = v.grid;
    let peak = v.max_abs();
    let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    let kx = shells(grid.nx, grid.lx, |ix| {
        (0..grid.ny).map(|iy| v.at(ix, iy).norm()).fold(0.0, f64::max) * scale
    });
    let ky = shells(grid.ny, grid.ly, |iy| {
        (0..grid.nx).map(|ix| v.at(ix, iy).norm()).fold(0.0, f64::max) * scale
    });
    let tail = |s: &[(f64, f64)]| {
        let width = (s.len() / 8).max(1);
        s[s.len() - width..].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    };
    SpectrumProfile {
        tail_log10: tail(&kx).max(tail(&ky)),
        kx,
        ky,
        floor,
    }
}
