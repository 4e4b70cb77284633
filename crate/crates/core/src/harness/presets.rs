//! Named experiment configurations.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exact::{kp2_field, zaitsev_field, ThetaParams, ZaitsevParams};
use crate::grid::{forward_transform, Grid2D, SpectralField};
use crate::integrators::Scheme;
use crate::models::{initial_data_ds, initial_data_kp, Equation, ModelSpec};
use crate::phi::DEFAULT_DCRK_TAU;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zaitsev(ZaitsevParams),
    Theta(ThetaParams),
    /// `-∂x sech²(√(x²+y²))`
    KpPulse,
    /// `exp(-(x² + η y²))`
    DsGaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferencePolicy {
    /// closed-form solution sampled at `t_max`
    Exact,
    Single { scheme: Scheme, nt: usize },
    /// elementwise mean of several high-resolution runs
    Mean { schemes: Vec<Scheme>, nt: usize },
}

/// Restricts which legs enter a slope fit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitWindow {
    pub nt_min: Option<usize>,
    pub nt_max: Option<usize>,
    /// legs with smaller errors are left out (reference or rounding floor)
    pub delta_min: Option<f64>,
    /// legs with larger errors are left out (pre-asymptotic)
    pub delta_max: Option<f64>,
}

impl FitWindow {
    pub fn contains(&self, nt: usize, delta: f64) -> bool {
        self.nt_min.is_none_or(|m| nt >= m)
            && self.nt_max.is_none_or(|m| nt <= m)
            && self.delta_min.is_none_or(|m| delta >= m)
            && self.delta_max.is_none_or(|m| delta <= m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub model: ModelSpec,
    pub grid: Grid2D,
    pub initial: InitialData,
    pub t_max: f64,
    pub nt_list: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub reference: ReferencePolicy,
    pub fit_window: FitWindow,
    pub dcrk_tau: f64,
    pub description: String,
}

pub const PRESET_NAMES: [&str; 6] = [
    "zaitsev-kp1",
    "theta-kp2",
    "kp1-smalldisp",
    "kp2-smalldisp",
    "ds2-defoc",
    "ds2-foc",
];

const PAPER_L: f64 = 5.0;

fn kp_schemes() -> Vec<Scheme> {
    vec![
        Scheme::Ifrk4,
        Scheme::Dcrk,
        Scheme::EtdCm,
        Scheme::EtdKrogstad,
        Scheme::EtdHo,
    ]
}

fn ds_schemes() -> Vec<Scheme> {
    let mut s = kp_schemes();
    s.extend([Scheme::Strang2, Scheme::Yoshida4]);
    s
}

/// Looks up a preset; `paper_scale` selects the published grid sizes.
pub fn preset(name: &str, paper_scale: bool) -> Result<ExperimentPreset> {
    let grid = |nx: usize, ny: usize, lx: f64, ly: f64| Grid2D::new(nx, ny, lx, ly);
    let p = match name {
        "zaitsev-kp1" => {
            // crest starts at -Lx/2 and travels to +Lx/2 by t = 1
            let z = ZaitsevParams::new(1.0, 0.5)?.with_center(-PAPER_L / 2.0);
            // one y period is π/δ·2 = π; three periods fill ly = 1.5
            let (nx, ny, ly) = if paper_scale { (2048, 512, PAPER_L) } else { (512, 128, 1.5) };
            ExperimentPreset {
                name: name.into(),
                model: ModelSpec::kp1(1.0),
                grid: grid(nx, ny, PAPER_L, ly)?,
                initial: InitialData::Zaitsev(z),
                t_max: 1.0,
                nt_list: vec![200, 400, 800, 1600],
                schemes: kp_schemes(),
                reference: ReferencePolicy::Exact,
                // the truncated x-tail of the solution puts a floor near 1e-6 under every scheme
                fit_window: FitWindow {
                    delta_min: Some(2e-6),
                    ..FitWindow::default()
                },
                dcrk_tau: DEFAULT_DCRK_TAU,
                description: "KP I, Zaitsev solution (alpha=1, beta=0.5), exact reference".into(),
            }
        }
        "theta-kp2" => {
            let t = ThetaParams::kp2_reference();
            let (lx, ly) = t.periods();
            let mut schemes = kp_schemes();
            schemes.push(Scheme::Irk4);
            ExperimentPreset {
                name: name.into(),
                model: ModelSpec::kp2(1.0),
                grid: grid(256, 256, lx, ly)?,
                initial: InitialData::Theta(t),
                t_max: 1.0,
                // below 800 steps IRK4 needs more than three sweeps per step
                nt_list: vec![800, 1200, 1600, 2400, 3200],
                schemes,
                reference: ReferencePolicy::Exact,
                // the sampled solution is not a discrete solution; Δ₂ levels off near 1e-11
                fit_window: FitWindow {
                    delta_min: Some(1e-10),
                    ..FitWindow::default()
                },
                dcrk_tau: DEFAULT_DCRK_TAU,
                description: "KP II, doubly periodic genus-2 solution, exact reference".into(),
            }
        }
        "kp1-smalldisp" | "kp2-smalldisp" => {
            let (nx, ny) = if paper_scale { (2048, 512) } else { (1024, 256) };
            let model = if name == "kp1-smalldisp" {
                ModelSpec::kp1(0.1)
            } else {
                ModelSpec::kp2(0.1)
            };
            ExperimentPreset {
                name: name.into(),
                model,
                grid: grid(nx, ny, PAPER_L, PAPER_L)?,
                initial: InitialData::KpPulse,
                t_max: 0.4,
                // Δ₂ falls below 1e-4 by nt ≈ 150; the stiff window lies below that
                nt_list: vec![25, 35, 50, 70, 100, 140, 200],
                schemes: kp_schemes(),
                reference: ReferencePolicy::Single {
                    scheme: Scheme::EtdHo,
                    nt: 5000,
                },
                fit_window: FitWindow {
                    delta_min: Some(1e-4),
                    ..FitWindow::default()
                },
                dcrk_tau: DEFAULT_DCRK_TAU,
                description: format!("{}, small dispersion eps=0.1, HO reference", model.equation),
            }
        }
        "ds2-defoc" => {
            let n = if paper_scale { 1024 } else { 512 };
            ExperimentPreset {
                name: name.into(),
                model: ModelSpec::ds2(0.1, 1.0, 1.0),
                grid: grid(n, n, PAPER_L, PAPER_L)?,
                initial: InitialData::DsGaussian,
                t_max: 0.8,
                nt_list: vec![200, 400, 800, 1600],
                schemes: ds_schemes(),
                reference: ReferencePolicy::Mean {
                    schemes: vec![Scheme::EtdKrogstad, Scheme::Dcrk, Scheme::Ifrk4],
                    nt: if paper_scale { 6000 } else { 4000 },
                },
                fit_window: FitWindow::default(),
                dcrk_tau: DEFAULT_DCRK_TAU,
                description: "defocusing DS II, Gaussian data eps=0.1, mean-of-three reference".into(),
            }
        }
        "ds2-foc" => {
            let (nx, ny, t_max) = if paper_scale { (4096, 2048, 0.6) } else { (1024, 512, 0.3) };
            ExperimentPreset {
                name: name.into(),
                model: ModelSpec::ds2(0.1, -1.0, 0.1),
                grid: grid(nx, ny, PAPER_L, PAPER_L)?,
                initial: InitialData::DsGaussian,
                t_max,
                nt_list: vec![200, 400, 800, 1600],
                schemes: ds_schemes(),
                reference: ReferencePolicy::Mean {
                    schemes: vec![Scheme::EtdKrogstad, Scheme::Dcrk, Scheme::Ifrk4],
                    nt: if paper_scale { 6000 } else { 4000 },
                },
                fit_window: FitWindow::default(),
                dcrk_tau: DEFAULT_DCRK_TAU,
                description: "focusing DS II, anisotropic Gaussian eta=0.1, eps=0.1, mean-of-three reference"
                    .into(),
            }
        }
        other => return Err(Error::UnknownPreset(other.into())),
    };
    Ok(p)
}

/// Zeroes the kx = 0, ky ≠ 0 column, where a KP state must have no content.
pub fn enforce_kp_constraint(v: &mut SpectralField) {
    let g = v.grid;
    for iy in 1..g.ny {
        v.coeffs[g.idx(0, iy)] = Complex64::new(0.0, 0.0);
    }
}

impl ExperimentPreset {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.nt_list.is_empty() || self.nt_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("nt list must be non-empty and strictly increasing".into()));
        }
        if self.nt_list[0] == 0 {
            return Err(Error::InvalidParameter("nt must be at least 1".into()));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {}", self.t_max)));
        }
        let largest = *self.nt_list.last().unwrap_or(&0);
        match &self.reference {
            ReferencePolicy::Single { nt, .. } | ReferencePolicy::Mean { nt, .. } if *nt <= 2 * largest => {
                Err(Error::InvalidParameter(format!(
                    "reference nt {nt} must exceed twice the largest leg ({largest})"
                )))
            }
            ReferencePolicy::Exact if matches!(self.initial, InitialData::KpPulse | InitialData::DsGaussian) => {
                Err(Error::InvalidParameter("no closed-form solution for this initial data".into()))
            }
            _ => Ok(()),
        }?;
        let ds = self.model.equation == Equation::Ds2;
        if ds != matches!(self.initial, InitialData::DsGaussian) {
            return Err(Error::InvalidParameter("initial data does not match the equation".into()));
        }
        if !ds {
            if let Some(s) = self.schemes.iter().find(|s| s.is_splitting()) {
                return Err(Error::UnsupportedScheme {
                    scheme: s.to_string(),
                    equation: self.model.equation.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Fourier coefficients of the state at time `t`, when a closed form exists.
    pub fn exact_state(&self, t: f64) -> Result<Option<SpectralField>> {
        let mut v = match &self.initial {
            InitialData::Zaitsev(z) => forward_transform(&zaitsev_field(&self.grid, t, z)),
            InitialData::Theta(p) => forward_transform(&kp2_field(&self.grid, t, p)?),
            _ => return Ok(None),
        };
        enforce_kp_constraint(&mut v);
        Ok(Some(v))
    }

    pub fn initial_state(&self) -> Result<SpectralField> {
        match &self.initial {
            InitialData::KpPulse => {
                let mut v = forward_transform(&initial_data_kp(&self.grid));
                enforce_kp_constraint(&mut v);
                Ok(v)
            }
            InitialData::DsGaussian => Ok(forward_transform(&initial_data_ds(&self.grid, self.model.eta)?)),
            _ => Ok(self.exact_state(0.0)?.expect("closed-form initial data")),
        }
    }

    /// Half-widths of the periodic cell, `(π lx, π ly)`.
    pub fn half_widths(&self) -> (f64, f64) {
        (PI * self.grid.lx, PI * self.grid.ly)
    }
}
