//! Fixed-step integrators for `v_t = L v + N(v, t)` with diagonal `L`.
//!
//! A [`Semilinear`] system supplies the symbol `L` and the nonlinear term; a
//! [`Stepper`] owns the per-mode coefficient tables for one step size plus its
//! work buffers, and [`evolve`] drives it over a time interval.

mod dcrk;
mod exponential;
mod irk4;
mod splitting;
pub mod toy;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phi::{build_coeffs_with, CoeffTables, SchemeCoeffs, DEFAULT_DCRK_TAU};

pub use irk4::IrkSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Ifrk4,
    EtdCm,
    EtdKrogstad,
    EtdHo,
    Dcrk,
    Irk4,
    Strang2,
    Yoshida4,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::Ifrk4,
        Scheme::EtdCm,
        Scheme::EtdKrogstad,
        Scheme::EtdHo,
        Scheme::Dcrk,
        Scheme::Irk4,
        Scheme::Strang2,
        Scheme::Yoshida4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ifrk4 => "ifrk4",
            Scheme::EtdCm => "etd-cm",
            Scheme::EtdKrogstad => "etd-k",
            Scheme::EtdHo => "etd-ho",
            Scheme::Dcrk => "dcrk",
            Scheme::Irk4 => "irk4",
            Scheme::Strang2 => "strang2",
            Scheme::Yoshida4 => "yoshida4",
        }
    }

    pub fn is_splitting(self) -> bool {
        matches!(self, Scheme::Strang2 | Scheme::Yoshida4)
    }

    pub fn is_etd(self) -> bool {
        matches!(self, Scheme::EtdCm | Scheme::EtdKrogstad | Scheme::EtdHo)
    }

    /// Nominal order of accuracy.
    pub fn order(self) -> u32 {
        match self {
            Scheme::Strang2 => 2,
            _ => 4,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let alias = match lower.as_str() {
            "if" | "ifrk4" => Scheme::Ifrk4,
            "etd-cm" | "cm" | "etdrk4" => Scheme::EtdCm,
            "etd-k" | "etd-krogstad" | "krogstad" => Scheme::EtdKrogstad,
            "etd-ho" | "ho" => Scheme::EtdHo,
            "dcrk" => Scheme::Dcrk,
            "irk4" | "gauss" => Scheme::Irk4,
            "strang2" | "strang" | "split2" => Scheme::Strang2,
            "yoshida4" | "split4" => Scheme::Yoshida4,
            other => return Err(Error::InvalidParameter(format!("unknown scheme `{other}`"))),
        };
        Ok(alias)
    }
}

/// A system `v_t = L v + N(v, t)` with diagonal linear part.
pub trait Semilinear {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Diagonal of `L`.
    fn symbol(&self) -> &[Complex64];

    /// Writes `N(v, t)` into `out`.
    fn nonlinear(&mut self, t: f64, v: &[Complex64], out: &mut [Complex64]);

    /// Whether [`Semilinear::nonlinear_flow`] is available.
    fn supports_splitting(&self) -> bool {
        false
    }

    /// Exact flow of `v_t = N(v, t)` over `[t, t + h]`, in place.
    fn nonlinear_flow(&mut self, _t: f64, _h: f64, _v: &mut [Complex64]) -> Result<()> {
        Err(Error::UnsupportedScheme {
            scheme: "splitting".into(),
            equation: self.label(),
        })
    }

    fn label(&self) -> String {
        "system".into()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub steps: usize,
    pub nonlinear_evals: usize,
    /// fixed-point sweeps per IRK4 step
    pub irk_iterations: Vec<usize>,
    /// largest re-evaluated IRK4 stage residual, when residual checking is on
    pub irk_max_residual: f64,
}

impl StepStats {
    pub fn mean_irk_iterations(&self) -> Option<f64> {
        if self.irk_iterations.is_empty() {
            None
        } else {
            Some(self.irk_iterations.iter().sum::<usize>() as f64 / self.irk_iterations.len() as f64)
        }
    }
}

/// One scheme at one step size, with its work space.
#[derive(Debug)]
pub struct Stepper {
    coeffs: Arc<SchemeCoeffs>,
    bufs: Vec<Vec<Complex64>>,
    irk: IrkSettings,
    /// the IRK4 buffers hold the stages that ended in the current state
    irk_history: bool,
    stats: StepStats,
}

fn buffers_needed(scheme: Scheme) -> usize {
    match scheme {
        Scheme::Ifrk4 | Scheme::EtdKrogstad => 5,
        Scheme::EtdCm => 6,
        Scheme::EtdHo => 7,
        Scheme::Dcrk => 9,
        Scheme::Irk4 => 6,
        Scheme::Strang2 | Scheme::Yoshida4 => 0,
    }
}

impl Stepper {
    pub fn new(coeffs: Arc<SchemeCoeffs>) -> Self {
        let n = coeffs.len();
        let bufs = (0..buffers_needed(coeffs.scheme))
            .map(|_| vec![Complex64::new(0.0, 0.0); n])
            .collect();
        Self {
            coeffs,
            bufs,
            irk: IrkSettings::default(),
            irk_history: false,
            stats: StepStats::default(),
        }
    }

    /// Builds coefficients for `sys` and step `h`, refusing splitting on systems without split flows.
    pub fn for_system<S: Semilinear + ?Sized>(scheme: Scheme, sys: &S, h: f64) -> Result<Self> {
        Self::for_system_with(scheme, sys, h, DEFAULT_DCRK_TAU)
    }

    pub fn for_system_with<S: Semilinear + ?Sized>(scheme: Scheme, sys: &S, h: f64, dcrk_tau: f64) -> Result<Self> {
        if scheme.is_splitting() && !sys.supports_splitting() {
            return Err(Error::UnsupportedScheme {
                scheme: scheme.to_string(),
                equation: sys.label(),
            });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {h}")));
        }
        Ok(Self::new(Arc::new(build_coeffs_with(scheme, sys.symbol(), h, dcrk_tau))))
    }

    pub fn with_irk_settings(mut self, irk: IrkSettings) -> Self {
        self.irk = irk;
        self
    }

    pub fn scheme(&self) -> Scheme {
        self.coeffs.scheme
    }

    pub fn h(&self) -> f64 {
        self.coeffs.h
    }

    pub fn coeffs(&self) -> &Arc<SchemeCoeffs> {
        &self.coeffs
    }

    pub fn stats(&self) -> &StepStats {
        &self.stats
    }

    /// Advances `v` from `t` to `t + h` in place.
    pub fn step<S: Semilinear + ?Sized>(&mut self, sys: &mut S, v: &mut [Complex64], t: f64) -> Result<()> {
        if v.len() != self.coeffs.len() || sys.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coeffs.len(),
                got: v.len(),
            });
        }
        let h = self.coeffs.h;
        let evals = match &self.coeffs.tables {
            CoeffTables::Lawson { .. }
            | CoeffTables::CoxMatthews { .. }
            | CoeffTables::Krogstad { .. }
            | CoeffTables::HochbruckOstermann { .. } => {
                exponential::step(&self.coeffs.tables, sys, &mut self.bufs, v, t, h)
            }
            CoeffTables::Composite { l_slow, l_fast, solve, .. } => {
                dcrk::step(l_slow, l_fast, solve, sys, &mut self.bufs, v, t, h)
            }
            CoeffTables::Gauss { solve, guess } => {
                let out = irk4::step(solve, guess, &mut self.irk_history, sys, &mut self.bufs, v, t, h, &self.irk)?;
                self.stats.irk_iterations.push(out.iterations);
                self.stats.irk_max_residual = self.stats.irk_max_residual.max(out.residual);
                out.evals
            }
            CoeffTables::Strang { e_half } => splitting::strang(e_half, sys, v, t, h)?,
            CoeffTables::Yoshida { e_outer, e_inner } => splitting::yoshida(e_outer, e_inner, sys, v, t, h)?,
        };
        self.stats.steps += 1;
        self.stats.nonlinear_evals += evals;
        Ok(())
    }
}

/// Receives the state at selected steps of [`evolve`].
pub trait Observer {
    fn observe(&mut self, step: usize, t: f64, v: &[Complex64]) -> Result<()>;
}

impl<F: FnMut(usize, f64, &[Complex64]) -> Result<()>> Observer for F {
    fn observe(&mut self, step: usize, t: f64, v: &[Complex64]) -> Result<()> {
        self(step, t, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveConfig {
    pub t0: f64,
    pub t_max: f64,
    pub nt: usize,
    /// observers run after every `stride`-th step
    pub stride: usize,
}

impl EvolveConfig {
    pub fn new(t_max: f64, nt: usize) -> Self {
        Self {
            t0: 0.0,
            t_max,
            nt,
            stride: nt.max(1),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn h(&self) -> f64 {
        (self.t_max - self.t0) / self.nt as f64
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: Vec<Complex64>,
    pub t: f64,
    pub stats: StepStats,
    /// wall time inside the stepping loop
    pub elapsed: Duration,
}

/// Runs `nt` equal steps from `v0`; aborts on the first non-finite state.
pub fn evolve<S: Semilinear + ?Sized>(
    sys: &mut S,
    stepper: &mut Stepper,
    v0: &[Complex64],
    cfg: &EvolveConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Evolution> {
    if cfg.nt == 0 {
        return Err(Error::InvalidParameter("nt must be at least 1".into()));
    }
    if cfg.stride == 0 {
        return Err(Error::InvalidParameter("observer stride must be at least 1".into()));
    }
    let h = cfg.h();
    if ((h - stepper.h()) / h).abs() > 1e-14 {
        return Err(Error::InvalidParameter(format!(
            "stepper built for h = {} but the run needs h = {h}",
            stepper.h()
        )));
    }
    let mut v = v0.to_vec();
    let start = Instant::now();
    let mut t = cfg.t0;
    for k in 1..=cfg.nt {
        stepper.step(sys, &mut v, t)?;
        t = cfg.t0 + k as f64 * h;
        if !v.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFinite { step: k, t });
        }
        if k % cfg.stride == 0 {
            for obs in observers.iter_mut() {
                obs.observe(k, t, &v)?;
            }
        }
    }
    Ok(Evolution {
        state: v,
        t,
        stats: stepper.stats().clone(),
        elapsed: start.elapsed(),
    })
}
