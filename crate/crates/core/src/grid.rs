//! Periodic rectangle, wavenumber lattices, the 2D transform and Fourier multipliers.
//!
//! Lattices are stored x-major: entry `(ix, iy)` lives at `ix * ny + iy`. Spectral
//! coefficients use the standard DFT ordering in both directions (non-negative
//! frequencies first, then `-n/2 .. -1`), so every multiplier table is a plain
//! elementwise product with the coefficient array.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Regularization of the antiderivative symbol, `-i / (kx + i λ δ)`.
pub const INV_DX_DELTA: f64 = f64::EPSILON; // 2^-52

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    /// x-period is `2π lx`.
    pub lx: f64,
    /// y-period is `2π ly`.
    pub ly: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if !nx.is_power_of_two() || !ny.is_power_of_two() || nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "mode counts must be powers of two >= 2, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "periods must be positive, got lx={lx}, ly={ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI * self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * PI * self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn area(&self) -> f64 {
        4.0 * PI * PI * self.lx * self.ly
    }

    pub fn x(&self, ix: usize) -> f64 {
        -PI * self.lx + ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        -PI * self.ly + iy as f64 * self.dy()
    }

    /// Signed x mode index `m ∈ {-nx/2, …, nx/2-1}` of storage position `ix`.
    #[inline]
    pub fn mode_x(&self, ix: usize) -> i64 {
        signed_mode(ix, self.nx)
    }

    #[inline]
    pub fn mode_y(&self, iy: usize) -> i64 {
        signed_mode(iy, self.ny)
    }

    #[inline]
    pub fn kx(&self, ix: usize) -> f64 {
        self.mode_x(ix) as f64 / self.lx
    }

    #[inline]
    pub fn ky(&self, iy: usize) -> f64 {
        self.mode_y(iy) as f64 / self.ly
    }

    #[inline]
    pub fn is_nyquist_x(&self, ix: usize) -> bool {
        ix == self.nx / 2
    }

    #[inline]
    pub fn is_nyquist_y(&self, iy: usize) -> bool {
        iy == self.ny / 2
    }

    /// Storage position of the mode `-k` for the mode at `(ix, iy)`.
    #[inline]
    pub fn mirror(&self, ix: usize, iy: usize) -> (usize, usize) {
        ((self.nx - ix) % self.nx, (self.ny - iy) % self.ny)
    }

    pub fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

#[inline]
fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Values of a field on the physical nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub grid: Grid2D,
    pub values: Vec<Complex64>,
}

impl PhysicalField {
    pub fn new(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: Grid2D, values: &[f64]) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self {
            grid,
            values: values.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
        })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn_complex(grid, |x, y| Complex64::new(f(x, y), 0.0))
    }

    pub fn from_fn_complex(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx {
            let x = grid.x(ix);
            for iy in 0..grid.ny {
                values.push(f(x, grid.y(iy)));
            }
        }
        Self { grid, values }
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[self.grid.idx(ix, iy)]
    }
}

/// Fourier coefficients of a 2D field; the state advanced in time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid2D,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn new(grid: Grid2D, coeffs: Vec<Complex64>) -> Result<Self> {
        grid.check_len(coeffs.len())?;
        Ok(Self { grid, coeffs })
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.coeffs[self.grid.idx(ix, iy)]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of `c(-k) = conj(c(k))`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                let (mx, my) = g.mirror(ix, iy);
                let d = (self.at(ix, iy) - self.at(mx, my).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Elementwise Fourier multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierTable {
    pub values: Vec<Complex64>,
    pub description: String,
}

impl MultiplierTable {
    pub fn from_fn(
        grid: &Grid2D,
        description: impl Into<String>,
        f: impl Fn(usize, usize) -> Complex64,
    ) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx {
            for iy in 0..grid.ny {
                values.push(f(ix, iy));
            }
        }
        Self {
            values,
            description: description.into(),
        }
    }

    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField> {
        v.grid.check_len(self.values.len())?;
        let coeffs = v
            .coeffs
            .iter()
            .zip(&self.values)
            .map(|(c, m)| c * m)
            .collect();
        Ok(SpectralField {
            grid: v.grid,
            coeffs,
        })
    }

    pub fn product(&self, other: &MultiplierTable) -> MultiplierTable {
        MultiplierTable {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
            description: format!("{}*{}", self.description, other.description),
        }
    }
}

/// `i kx`, with the x-Nyquist column zeroed.
pub fn multiplier_dx(grid: &Grid2D) -> MultiplierTable {
    MultiplierTable::from_fn(grid, "d/dx", |ix, _| {
        if grid.is_nyquist_x(ix) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, grid.kx(ix))
        }
    })
}

/// `i ky`, with the y-Nyquist row zeroed.
pub fn multiplier_dy(grid: &Grid2D) -> MultiplierTable {
    MultiplierTable::from_fn(grid, "d/dy", |_, iy| {
        if grid.is_nyquist_y(iy) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, grid.ky(iy))
        }
    })
}

/// Regularized antiderivative symbol `-i / (kx + i λ δ)`, `δ = 2^-52`.
pub fn multiplier_inv_dx(grid: &Grid2D, lambda: f64) -> MultiplierTable {
    MultiplierTable::from_fn(grid, "inv-dx", |ix, _| inv_dx_symbol(grid.kx(ix), lambda))
}

#[inline]
pub(crate) fn inv_dx_symbol(kx: f64, lambda: f64) -> Complex64 {
    // -i (kx - i λ δ) / (kx² + δ²)
    let d = INV_DX_DELTA;
    let den = kx * kx + d * d;
    Complex64::new(-lambda * d / den, -kx / den)
}

/// Rectangle-rule integral over the periodic cell.
pub fn quadrature(u: &[f64], grid: &Grid2D) -> Result<f64> {
    grid.check_len(u.len())?;
    Ok(grid.cell_area() * u.iter().sum::<f64>())
}

/// Planned 2D FFT over a fixed grid. Forward is unnormalized; inverse carries `1/(nx ny)`.
pub struct Transform2D {
    grid: Grid2D,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    transposed: Vec<Complex64>,
    scratch: Vec<Complex64>,
    count: u64,
}

impl fmt::Debug for Transform2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transform2D")
            .field("grid", &self.grid)
            .field("count", &self.count)
            .finish()
    }
}

impl Transform2D {
    pub fn new(grid: Grid2D) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(grid.nx);
        let inv_x = planner.plan_fft_inverse(grid.nx);
        let fwd_y = planner.plan_fft_forward(grid.ny);
        let inv_y = planner.plan_fft_inverse(grid.ny);
        let scratch_len = [&fwd_x, &inv_x, &fwd_y, &inv_y]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            grid,
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
            transposed: vec![Complex64::new(0.0, 0.0); grid.len()],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            count: 0,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Number of 2D transforms performed so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.run(data, false);
        let scale = 1.0 / self.grid.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    fn run(&mut self, data: &mut [Complex64], forward: bool) {
        assert_eq!(data.len(), self.grid.len(), "transform length mismatch");
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let (fx, fy) = if forward {
            (&self.fwd_x, &self.fwd_y)
        } else {
            (&self.inv_x, &self.inv_y)
        };
        // y is contiguous: nx transforms of length ny
        fy.process_with_scratch(data, &mut self.scratch);
        transpose::transpose(data, &mut self.transposed, ny, nx);
        fx.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose::transpose(&self.transposed, data, nx, ny);
        self.count += 1;
    }
}

pub fn forward_transform(u: &PhysicalField) -> SpectralField {
    let mut coeffs = u.values.clone();
    Transform2D::new(u.grid).forward(&mut coeffs);
    SpectralField {
        grid: u.grid,
        coeffs,
    }
}

pub fn inverse_transform(v: &SpectralField) -> PhysicalField {
    let mut values = v.coeffs.clone();
    Transform2D::new(v.grid).inverse(&mut values);
    PhysicalField {
        grid: v.grid,
        values,
    }
}
