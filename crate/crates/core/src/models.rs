//! KP and DS II written as `v_t = L v + N(v)` in Fourier space.
//!
//! KP in evolutionary form: `u_t + 6 u u_x + ε² u_xxx + λ ∂x⁻¹ u_yy = 0`
//! (λ = -1 is KP I, λ = +1 is KP II).
//!
//! DS II after eliminating the mean field:
//! `i ε u_t + ε² (u_xx - u_yy) + 2ρ (Φ + |u|²) u = 0`, `Φ = -2 ∂x² Δ⁻¹ |u|²`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{
    forward_transform, inv_dx_symbol, Grid2D, MultiplierTable, PhysicalField, SpectralField, Transform2D,
};
use crate::integrators::Semilinear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Equation {
    Kp1,
    Kp2,
    Ds2,
}

impl Equation {
    pub fn is_kp(self) -> bool {
        matches!(self, Equation::Kp1 | Equation::Kp2)
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::Kp1 => "KP I",
            Equation::Kp2 => "KP II",
            Equation::Ds2 => "DS II",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub equation: Equation,
    pub epsilon: f64,
    /// KP only: -1 for KP I, +1 for KP II.
    pub lambda: f64,
    /// DS only: -1 focusing, +1 defocusing.
    pub rho: f64,
    /// DS initial-data anisotropy.
    pub eta: f64,
}

impl ModelSpec {
    pub fn kp1(epsilon: f64) -> Self {
        Self {
            equation: Equation::Kp1,
            epsilon,
            lambda: -1.0,
            rho: 0.0,
            eta: 1.0,
        }
    }

    pub fn kp2(epsilon: f64) -> Self {
        Self {
            equation: Equation::Kp2,
            epsilon,
            lambda: 1.0,
            rho: 0.0,
            eta: 1.0,
        }
    }

    pub fn ds2(epsilon: f64, rho: f64, eta: f64) -> Self {
        Self {
            equation: Equation::Ds2,
            epsilon,
            lambda: 0.0,
            rho,
            eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        match self.equation {
            Equation::Kp1 if self.lambda != -1.0 => {
                Err(Error::InvalidParameter("KP I requires lambda = -1".into()))
            }
            Equation::Kp2 if self.lambda != 1.0 => {
                Err(Error::InvalidParameter("KP II requires lambda = +1".into()))
            }
            Equation::Ds2 if self.rho.abs() != 1.0 => {
                Err(Error::InvalidParameter(format!("rho must be +1 or -1, got {}", self.rho)))
            }
            Equation::Ds2 if !(self.eta > 0.0) => {
                Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)))
            }
            _ => Ok(()),
        }
    }

    /// Stable textual key for coefficient caching.
    pub fn key(&self) -> String {
        format!(
            "{:?}:{:x}:{:x}:{:x}",
            self.equation,
            self.epsilon.to_bits(),
            self.lambda.to_bits(),
            self.rho.to_bits()
        )
    }
}

impl FromStr for Equation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kp1" => Ok(Equation::Kp1),
            "kp2" => Ok(Equation::Kp2),
            "ds2" | "ds2-foc" | "ds2-def" => Ok(Equation::Ds2),
            other => Err(Error::InvalidParameter(format!("unknown equation `{other}`"))),
        }
    }
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Linear part `L` of the model on the given grid.
///
/// The KP symbol is odd in `kx` and is zeroed on the x-Nyquist column.
pub fn linear_symbol(model: &ModelSpec, grid: &Grid2D) -> MultiplierTable {
    match model.equation {
        Equation::Kp1 | Equation::Kp2 => {
            let e2 = model.epsilon * model.epsilon;
            let lambda = model.lambda;
            MultiplierTable::from_fn(grid, "kp-linear", |ix, iy| {
                if grid.is_nyquist_x(ix) {
                    return zero();
                }
                let kx = grid.kx(ix);
                let ky = grid.ky(iy);
                // -ε²(i kx)³ - λ (-ky²) ∂x⁻¹
                Complex64::new(0.0, e2 * kx * kx * kx) + inv_dx_symbol(kx, lambda) * (lambda * ky * ky)
            })
        }
        Equation::Ds2 => {
            let eps = model.epsilon;
            MultiplierTable::from_fn(grid, "ds-linear", |ix, iy| {
                let kx = grid.kx(ix);
                let ky = grid.ky(iy);
                Complex64::new(0.0, eps * (ky * ky - kx * kx))
            })
        }
    }
}

/// `(ky² - kx²)/(kx² + ky²)`, the symbol taking `|u|²` to `Φ + |u|²`; 1 at the origin.
fn ds_potential_symbol(grid: &Grid2D) -> Vec<Complex64> {
    MultiplierTable::from_fn(grid, "ds-potential", |ix, iy| {
        let kx2 = grid.kx(ix).powi(2);
        let ky2 = grid.ky(iy).powi(2);
        if ix == 0 && iy == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new((ky2 - kx2) / (kx2 + ky2), 0.0)
        }
    })
    .values
}

/// Evaluates the KP right-hand side; owns its transform and work buffers.
#[derive(Debug)]
pub struct KpSystem {
    model: ModelSpec,
    grid: Grid2D,
    symbol: Vec<Complex64>,
    /// `-3 i kx`, x-Nyquist zeroed
    nl_factor: Vec<Complex64>,
    fft: Transform2D,
    work: Vec<Complex64>,
}

impl KpSystem {
    pub fn new(model: ModelSpec, grid: Grid2D) -> Result<Self> {
        model.validate()?;
        if !model.equation.is_kp() {
            return Err(Error::InvalidParameter(format!("{} is not a KP model", model.equation)));
        }
        let symbol = linear_symbol(&model, &grid).values;
        let nl_factor = MultiplierTable::from_fn(&grid, "kp-nonlinear", |ix, _| {
            if grid.is_nyquist_x(ix) {
                zero()
            } else {
                Complex64::new(0.0, -3.0 * grid.kx(ix))
            }
        })
        .values;
        Ok(Self {
            model,
            grid,
            symbol,
            nl_factor,
            fft: Transform2D::new(grid),
            work: vec![zero(); grid.len()],
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn transforms(&self) -> u64 {
        self.fft.count()
    }
}

impl Semilinear for KpSystem {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    fn nonlinear(&mut self, _t: f64, v: &[Complex64], out: &mut [Complex64]) {
        self.work.copy_from_slice(v);
        self.fft.inverse(&mut self.work);
        for (o, u) in out.iter_mut().zip(&self.work) {
            *o = Complex64::new(u.re * u.re, 0.0);
        }
        self.fft.forward(out);
        for (o, f) in out.iter_mut().zip(&self.nl_factor) {
            *o *= f;
        }
    }

    fn label(&self) -> String {
        self.model.equation.to_string()
    }
}

/// Evaluates the DS II right-hand side and its exactly integrable split flows.
#[derive(Debug)]
pub struct DsSystem {
    model: ModelSpec,
    grid: Grid2D,
    symbol: Vec<Complex64>,
    potential: Vec<Complex64>,
    fft: Transform2D,
    u: Vec<Complex64>,
    w: Vec<Complex64>,
}

impl DsSystem {
    pub fn new(model: ModelSpec, grid: Grid2D) -> Result<Self> {
        model.validate()?;
        if model.equation != Equation::Ds2 {
            return Err(Error::InvalidParameter(format!("{} is not a DS model", model.equation)));
        }
        Ok(Self {
            model,
            grid,
            symbol: linear_symbol(&model, &grid).values,
            potential: ds_potential_symbol(&grid),
            fft: Transform2D::new(grid),
            u: vec![zero(); grid.len()],
            w: vec![zero(); grid.len()],
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn transforms(&self) -> u64 {
        self.fft.count()
    }

    /// Leaves `u` in physical space in `self.u` and the real potential `Φ + |u|²` in `self.w`.
    fn potential_from(&mut self, v: &[Complex64]) {
        self.u.copy_from_slice(v);
        self.fft.inverse(&mut self.u);
        self.physical_potential();
    }

    fn physical_potential(&mut self) {
        for (w, u) in self.w.iter_mut().zip(&self.u) {
            *w = Complex64::new(u.norm_sqr(), 0.0);
        }
        self.fft.forward(&mut self.w);
        for (w, q) in self.w.iter_mut().zip(&self.potential) {
            *w *= q;
        }
        self.fft.inverse(&mut self.w);
    }

    /// `u ← u exp((2iρ/ε)(Φ + |u|²) h)` on physical values, potential frozen at the start.
    pub fn nonlinear_flow_physical(&mut self, u: &mut [Complex64], h: f64) {
        self.u.copy_from_slice(u);
        self.physical_potential();
        let rate = 2.0 * self.model.rho / self.model.epsilon * h;
        for (x, w) in u.iter_mut().zip(&self.w) {
            *x *= Complex64::from_polar(1.0, rate * w.re);
        }
    }
}

impl Semilinear for DsSystem {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    fn nonlinear(&mut self, _t: f64, v: &[Complex64], out: &mut [Complex64]) {
        self.potential_from(v);
        for ((o, u), w) in out.iter_mut().zip(&self.u).zip(&self.w) {
            *o = u * w.re;
        }
        self.fft.forward(out);
        let factor = Complex64::new(0.0, 2.0 * self.model.rho / self.model.epsilon);
        for o in out.iter_mut() {
            *o *= factor;
        }
    }

    fn supports_splitting(&self) -> bool {
        true
    }

    fn nonlinear_flow(&mut self, _t: f64, h: f64, v: &mut [Complex64]) -> Result<()> {
        self.potential_from(v);
        let rate = 2.0 * self.model.rho / self.model.epsilon * h;
        for ((x, u), w) in v.iter_mut().zip(&self.u).zip(&self.w) {
            *x = u * Complex64::from_polar(1.0, rate * w.re);
        }
        self.fft.forward(v);
        Ok(())
    }

    fn label(&self) -> String {
        self.model.equation.to_string()
    }
}

/// `-3 i kx F[u²]` for the state `v`.
pub fn nonlinear_kp(v: &SpectralField, model: &ModelSpec) -> Result<SpectralField> {
    let mut sys = KpSystem::new(*model, v.grid)?;
    let mut out = vec![zero(); v.grid.len()];
    sys.nonlinear(0.0, &v.coeffs, &mut out);
    SpectralField::new(v.grid, out)
}

/// `(2iρ/ε) F[(Φ + |u|²) u]` for the state `v`.
pub fn nonlinear_ds(v: &SpectralField, model: &ModelSpec) -> Result<SpectralField> {
    let mut sys = DsSystem::new(*model, v.grid)?;
    let mut out = vec![zero(); v.grid.len()];
    sys.nonlinear(0.0, &v.coeffs, &mut out);
    SpectralField::new(v.grid, out)
}

/// Mean field `Φ = -2 F⁻¹[kx²/(kx²+ky²) F|u|²]`, zero-mean gauge.
pub fn mean_field(v: &SpectralField) -> PhysicalField {
    let grid = v.grid;
    let mut fft = Transform2D::new(grid);
    let mut w = v.coeffs.clone();
    fft.inverse(&mut w);
    for x in w.iter_mut() {
        *x = Complex64::new(x.norm_sqr(), 0.0);
    }
    fft.forward(&mut w);
    for ix in 0..grid.nx {
        let kx2 = grid.kx(ix).powi(2);
        for iy in 0..grid.ny {
            let k2 = kx2 + grid.ky(iy).powi(2);
            let q = if k2 == 0.0 { 0.0 } else { -2.0 * kx2 / k2 };
            w[grid.idx(ix, iy)] *= q;
        }
    }
    fft.inverse(&mut w);
    PhysicalField { grid, values: w }
}

/// `v ← e^{L h} v`.
pub fn ds_split_linear_flow(v: &SpectralField, h: f64, model: &ModelSpec) -> SpectralField {
    let symbol = linear_symbol(model, &v.grid);
    SpectralField {
        grid: v.grid,
        coeffs: v
            .coeffs
            .iter()
            .zip(&symbol.values)
            .map(|(c, l)| c * (l * h).exp())
            .collect(),
    }
}

/// Exact flow of `i ε u_t = -2ρ (Φ + |u|²) u` over time `h`.
pub fn ds_split_nonlinear_flow(u: &PhysicalField, h: f64, model: &ModelSpec) -> Result<PhysicalField> {
    let mut sys = DsSystem::new(*model, u.grid)?;
    let mut values = u.values.clone();
    sys.nonlinear_flow_physical(&mut values, h);
    Ok(PhysicalField { grid: u.grid, values })
}

/// `u₀ = -∂x sech²(R) = 2 sech²(R) tanh(R) x / R`, `R = √(x² + y²)`.
///
/// The column at `x = -π lx` is its own mirror image, so the odd periodic
/// extension vanishes there; it is set to zero rather than to the tiny
/// truncated tail value.
pub fn initial_data_kp(grid: &Grid2D) -> PhysicalField {
    let lx = grid.lx;
    PhysicalField::from_fn(*grid, |x, y| {
        let r = x.hypot(y);
        if r == 0.0 || x <= -std::f64::consts::PI * lx {
            return 0.0;
        }
        let s = 1.0 / r.cosh();
        2.0 * s * s * r.tanh() * x / r
    })
}

/// `u₀ = exp(-(x² + η y²))`.
pub fn initial_data_ds(grid: &Grid2D, eta: f64) -> Result<PhysicalField> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    Ok(PhysicalField::from_fn(*grid, |x, y| (-(x * x + eta * y * y)).exp()))
}

/// `max_ky |v(0, ky)|`: how far the state is from zero mean in x.
pub fn check_constraint(v: &SpectralField) -> f64 {
    (0..v.grid.ny).map(|iy| v.at(0, iy).norm()).fold(0.0, f64::max)
}

/// Smallness threshold for the focusing DS global-existence condition.
pub fn sung_threshold() -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    g * g / 8.0
}

/// `1/(ε² η)` and whether it sits below the threshold.
pub fn sung_ratio(model: &ModelSpec) -> (f64, bool) {
    let value = 1.0 / (model.epsilon * model.epsilon * model.eta);
    (value, value <= sung_threshold())
}

/// Convenience: Fourier coefficients of initial data.
pub fn spectral(u: &PhysicalField) -> SpectralField {
    forward_transform(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inverse_transform;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Grid2D {
        Grid2D::new(nx, ny, lx, ly).unwrap()
    }

    fn symbol_at(model: &ModelSpec, g: &Grid2D, mx: usize, my: usize) -> Complex64 {
        linear_symbol(model, g).values[g.idx(mx, my)]
    }

    #[test]
    fn kp_symbol_examples() {
        let g = grid(8, 8, 1.0, 1.0);
        let l = symbol_at(&ModelSpec::kp2(1.0), &g, 1, 0);
        assert!((l - c(0.0, 1.0)).norm() < 1e-15);
        let l = symbol_at(&ModelSpec::kp1(1.0), &g, 1, 1);
        assert!((l - c(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn ds_symbol_example() {
        let g = grid(8, 8, 1.0, 1.0);
        let l = symbol_at(&ModelSpec::ds2(0.1, 1.0, 1.0), &g, 2, 0);
        assert!((l - c(0.0, -0.4)).norm() < 1e-15);
    }

    #[test]
    fn ds_symbol_is_imaginary() {
        let g = grid(16, 8, 2.0, 1.5);
        let t = linear_symbol(&ModelSpec::ds2(0.1, -1.0, 1.0), &g);
        assert!(t.values.iter().all(|l| l.re == 0.0));
    }

    #[test]
    fn kp_symbol_damping_only_from_regularization() {
        let g = grid(16, 8, 2.0, 1.5);
        for model in [ModelSpec::kp1(0.1), ModelSpec::kp2(1.0)] {
            let t = linear_symbol(&model, &g);
            for ix in 0..g.nx {
                for iy in 0..g.ny {
                    let l = t.values[g.idx(ix, iy)];
                    assert!(l.re <= 0.0);
                    if ix != 0 {
                        // |e^{hL}| = 1 to rounding for any moderate h
                        assert!(((l * 0.01).exp().norm() - 1.0).abs() < 1e-15);
                    } else if iy != 0 {
                        assert!((l * 1e-3).exp().norm() == 0.0);
                    }
                }
            }
            assert_eq!(t.values[0], c(0.0, 0.0));
            assert!(t.values[g.idx(8, 3)] == c(0.0, 0.0));
        }
    }

    #[test]
    fn kp_nonlinearity_of_constant_and_zero() {
        let g = grid(16, 16, 1.0, 1.0);
        let m = ModelSpec::kp2(1.0);
        let z = SpectralField::zeros(g);
        assert_eq!(nonlinear_kp(&z, &m).unwrap().max_abs(), 0.0);
        let v = spectral(&PhysicalField::from_fn(g, |_, _| 3.0));
        assert!(nonlinear_kp(&v, &m).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn kp_nonlinearity_of_sine() {
        let g = grid(32, 16, 1.0, 1.0);
        let m = ModelSpec::kp1(1.0);
        let v = spectral(&PhysicalField::from_fn(g, |x, _| x.sin()));
        let n = inverse_transform(&nonlinear_kp(&v, &m).unwrap());
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                let want = -3.0 * (2.0 * g.x(ix)).sin();
                assert!((n.at(ix, iy) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kp_nonlinearity_keeps_hermitian_symmetry() {
        let g = grid(32, 32, 5.0, 5.0);
        let v = spectral(&initial_data_kp(&g));
        let n = nonlinear_kp(&v, &ModelSpec::kp2(0.1)).unwrap();
        assert!(n.hermitian_defect() <= 1e-13 * n.max_abs());
    }

    #[test]
    fn mean_field_examples() {
        let g = grid(16, 16, 1.0, 1.0);
        assert_eq!(mean_field(&SpectralField::zeros(g)).max_abs(), 0.0);
        // |u|² = 1 + cos x with u = sqrt(1 + cos x) is awkward; use u = e^{..} with |u|² = cos x + 2
        let u = PhysicalField::from_fn(g, |x, _| (2.0 + x.cos()).sqrt());
        let phi = mean_field(&spectral(&u));
        for ix in 0..g.nx {
            let want = -2.0 * g.x(ix).cos();
            assert!((phi.at(ix, 3) - want).norm() < 1e-12);
        }
        let u = PhysicalField::from_fn(g, |_, y| (2.0 + y.cos()).sqrt());
        assert!(mean_field(&spectral(&u)).max_abs() < 1e-12);
    }

    #[test]
    fn mean_field_is_real_and_phase_invariant() {
        let g = grid(32, 32, 5.0, 5.0);
        let u = PhysicalField::from_fn_complex(g, |x, y| {
            Complex64::from_polar((-(x * x + 0.5 * y * y) / 4.0).exp(), 0.3 * x - 0.1 * y)
        });
        let phi = mean_field(&spectral(&u));
        assert!(phi.max_imag() <= 1e-12 * phi.max_abs());
        let rotated = PhysicalField {
            grid: g,
            values: u.values.iter().map(|v| v * Complex64::from_polar(1.0, 0.7)).collect(),
        };
        let phi2 = mean_field(&spectral(&rotated));
        let diff = phi
            .values
            .iter()
            .zip(&phi2.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-13);
    }

    #[test]
    fn ds_nonlinearity_of_constant() {
        let g = grid(8, 8, 1.0, 1.0);
        let m = ModelSpec::ds2(0.1, -1.0, 1.0);
        let cval = c(0.6, -0.3);
        let v = spectral(&PhysicalField::from_fn_complex(g, |_, _| cval));
        let n = nonlinear_ds(&v, &m).unwrap();
        let n_len = g.len() as f64;
        let want = c(0.0, 2.0 * -1.0 / 0.1) * cval.norm_sqr() * cval * n_len;
        assert!((n.at(0, 0) - want).norm() < 1e-12 * want.norm());
        let rest = n.coeffs.iter().skip(1).map(|z| z.norm()).fold(0.0, f64::max);
        assert!(rest < 1e-12);
    }

    #[test]
    fn ds_nonlinearity_is_mass_neutral() {
        let g = grid(64, 64, 5.0, 5.0);
        let m = ModelSpec::ds2(0.1, -1.0, 0.5);
        let u = PhysicalField::from_fn_complex(g, |x, y| {
            Complex64::from_polar(1.3 * (-(x * x + 0.5 * y * y)).exp(), 0.2 * x * y.sin())
        });
        let v = spectral(&u);
        let n = nonlinear_ds(&v, &m).unwrap();
        // d/dt Σ|v|² = 2 Re Σ conj(v) N
        let rate: f64 = v.coeffs.iter().zip(&n.coeffs).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * 2.0;
        let norm: f64 = v.coeffs.iter().map(|a| a.norm_sqr()).sum();
        assert!(rate.abs() <= 1e-11 * norm, "rate {rate:e}");
    }

    #[test]
    fn ds_flows() {
        let g = grid(32, 32, 2.0, 2.0);
        let m = ModelSpec::ds2(0.1, 1.0, 1.0);
        let u = initial_data_ds(&g, 1.0).unwrap();
        let same = ds_split_nonlinear_flow(&u, 0.0, &m).unwrap();
        assert_eq!(same.values, u.values);
        let moved = ds_split_nonlinear_flow(&u, 0.37, &m).unwrap();
        for (a, b) in u.values.iter().zip(&moved.values) {
            assert!((a.norm() - b.norm()).abs() <= 1e-14);
        }
        let v = spectral(&u);
        let once = ds_split_linear_flow(&v, 0.2, &m);
        let twice = ds_split_linear_flow(&ds_split_linear_flow(&v, 0.1, &m), 0.1, &m);
        for (a, b) in once.coeffs.iter().zip(&twice.coeffs) {
            assert!((a - b).norm() <= 1e-14 * v.max_abs());
        }
        assert_eq!(ds_split_linear_flow(&v, 0.0, &m).coeffs, v.coeffs);
    }

    #[test]
    fn kp_initial_data_properties() {
        let g = grid(64, 64, 5.0, 5.0);
        let u = initial_data_kp(&g);
        for iy in 0..g.ny {
            assert_eq!(u.at(g.nx / 2, iy).re, 0.0);
            for ix in 1..g.nx {
                let (mx, _) = g.mirror(ix, iy);
                assert!((u.at(ix, iy).re + u.at(mx, iy).re).abs() <= 1e-14);
            }
        }
        let v = spectral(&u);
        assert!(check_constraint(&v) <= 1e-14 * v.max_abs(), "{} {}", check_constraint(&v), v.max_abs());
    }

    #[test]
    fn constraint_violation_without_derivative() {
        let g = grid(64, 64, 5.0, 5.0);
        let v = spectral(&PhysicalField::from_fn(g, |x, y| (1.0 / x.hypot(y).cosh()).powi(2)));
        assert!(check_constraint(&v) > 0.1 * v.max_abs());
        assert_eq!(check_constraint(&SpectralField::zeros(g)), 0.0);
    }

    #[test]
    fn ds_initial_data() {
        let g = grid(128, 128, 5.0, 5.0);
        let u = initial_data_ds(&g, 1.0).unwrap();
        assert_eq!(u.at(g.nx / 2, g.ny / 2).re, 1.0);
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                assert_eq!(u.at(ix, iy), u.at(iy, ix));
            }
        }
        let norm: f64 = u.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.cell_area();
        assert!((norm - PI / 2.0).abs() < 1e-10);
        let g2 = grid(128, 256, 5.0, 5.0);
        let u = initial_data_ds(&g2, 0.1).unwrap();
        let norm: f64 = u.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * g2.cell_area();
        assert!((norm - PI / (2.0 * 0.1f64.sqrt())).abs() < 1e-10);
        assert!(u.values[0].norm() < 1e-16);
        assert!(initial_data_ds(&g, 0.0).is_err());
    }

    #[test]
    fn sung_examples() {
        let (v, ok) = sung_ratio(&ModelSpec::ds2(0.1, -1.0, 0.1));
        assert!((v - 1000.0).abs() < 1e-9 && !ok);
        let th = sung_threshold();
        assert!((th - 0.0477).abs() < 1e-4);
        let m = ModelSpec {
            epsilon: 1.0,
            eta: 1.0 / th,
            ..ModelSpec::ds2(1.0, -1.0, 1.0)
        };
        assert!(sung_ratio(&m).1);
        let big = ModelSpec {
            epsilon: 10.0,
            ..ModelSpec::ds2(1.0, -1.0, 1.0)
        };
        let (v, ok) = sung_ratio(&big);
        assert!((v - 0.01).abs() < 1e-15 && ok);
    }

    #[test]
    fn validation() {
        assert!(ModelSpec::kp1(0.1).validate().is_ok());
        assert!(ModelSpec::kp1(2.0).validate().is_err());
        assert!(ModelSpec::ds2(0.1, 0.5, 1.0).validate().is_err());
        assert!(KpSystem::new(ModelSpec::ds2(0.1, 1.0, 1.0), grid(4, 4, 1.0, 1.0)).is_err());
        assert!(DsSystem::new(ModelSpec::kp2(0.1), grid(4, 4, 1.0, 1.0)).is_err());
    }

    #[test]
    fn transform_counts_per_evaluation() {
        let g = grid(16, 16, 1.0, 1.0);
        let mut kp = KpSystem::new(ModelSpec::kp2(1.0), g).unwrap();
        let v = vec![c(0.0, 0.0); g.len()];
        let mut out = v.clone();
        kp.nonlinear(0.0, &v, &mut out);
        assert_eq!(kp.transforms(), 2);
        let mut ds = DsSystem::new(ModelSpec::ds2(0.5, 1.0, 1.0), g).unwrap();
        ds.nonlinear(0.0, &v, &mut out);
        assert_eq!(ds.transforms(), 4);
    }
}
