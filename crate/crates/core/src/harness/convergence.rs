//! Convergence sweeps: reference construction, legs, slope fits.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, Weak};
use std::thread;

use num_complex::Complex64;

use crate::diagnostics::{error_norm, mass};
use crate::error::{Error, Result};
use crate::grid::{Grid2D, SpectralField};
use crate::integrators::{evolve, EvolveConfig, Scheme, Semilinear, Stepper};
use crate::models::{DsSystem, Equation, KpSystem, ModelSpec};
use crate::phi::{build_coeffs_with, CoeffKey, SchemeCoeffs};

use super::presets::{enforce_kp_constraint, ExperimentPreset, FitWindow, ReferencePolicy};

/// Environment variable holding the number of concurrent legs.
pub const WORKERS_ENV: &str = "KPDS_WORKERS";

/// Legs within this factor of the reference spread are floor-limited.
pub const FLOOR_FACTOR: f64 = 10.0;

pub type SharedSystem = Box<dyn Semilinear + Send>;

pub fn make_system(model: &ModelSpec, grid: &Grid2D) -> Result<SharedSystem> {
    Ok(match model.equation {
        Equation::Ds2 => Box::new(DsSystem::new(*model, *grid)?),
        _ => Box::new(KpSystem::new(*model, *grid)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegResult {
    pub scheme: Scheme,
    pub nt: usize,
    /// Δ₂ at `t_max`; NaN if the leg failed
    pub delta: f64,
    pub cpu_seconds: f64,
    pub mass_test: f64,
    pub irk_mean_iterations: Option<f64>,
    pub floor_limited: bool,
    pub failure: Option<String>,
}

impl LegResult {
    pub fn failed(&self) -> bool {
        self.failure.is_some() || !self.delta.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeFit {
    pub scheme: Scheme,
    /// `a` in `log10 Δ₂ = -a log10 nt + b`
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub points: usize,
    /// slope of `|test(t_max)|` against nt over the same nt range
    pub mass_slope: Option<f64>,
    /// some leg produced a non-finite state
    pub diverged: bool,
    /// Δ₂ fails to decrease between consecutive legs, or exceeds 1
    pub non_convergent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub preset: String,
    pub reference_spread: f64,
    pub window: FitWindow,
    pub rows: Vec<LegResult>,
    pub fits: Vec<SchemeFit>,
}

/// Least squares fit of `log10 Δ = -a log10 nt + b`; returns `(a, b)`.
pub fn fit_slope(points: &[(usize, f64)], window: &FitWindow) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(nt, d)| nt > 0 && d.is_finite() && d > 0.0 && window.contains(nt, d))
        .map(|&(nt, d)| ((nt as f64).log10(), d.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            have: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("fit needs at least two distinct nt".into()));
    }
    let slope = sxy / sxx;
    Ok((-slope, my - slope * mx))
}

fn fit_scheme(scheme: Scheme, rows: &[LegResult], window: &FitWindow) -> SchemeFit {
    let mut legs: Vec<&LegResult> = rows.iter().filter(|r| r.scheme == scheme).collect();
    legs.sort_by_key(|r| r.nt);
    let usable: Vec<(usize, f64)> = legs
        .iter()
        .filter(|r| !r.failed() && !r.floor_limited)
        .map(|r| (r.nt, r.delta))
        .collect();
    let fit = fit_slope(&usable, window).ok();
    let points = usable
        .iter()
        .filter(|&&(nt, d)| d > 0.0 && window.contains(nt, d))
        .count();
    // the mass test has its own floor; only the nt bounds of the window apply
    let nt_window = FitWindow {
        delta_min: Some(1e-14),
        delta_max: None,
        ..*window
    };
    let mass_pts: Vec<(usize, f64)> = legs
        .iter()
        .filter(|r| !r.failed())
        .map(|r| (r.nt, r.mass_test.abs()))
        .collect();
    let mass_slope = fit_slope(&mass_pts, &nt_window).ok().map(|f| f.0);
    let diverged = legs.iter().any(|r| r.failed());
    let finite: Vec<&&LegResult> = legs.iter().filter(|r| !r.failed() && !r.floor_limited).collect();
    let non_convergent = diverged
        || finite.iter().any(|r| r.delta >= 1.0)
        || finite.windows(2).any(|w| w[1].delta >= w[0].delta);
    SchemeFit {
        scheme,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        points,
        mass_slope,
        diverged,
        non_convergent,
    }
}

impl ConvergenceReport {
    /// Rebuilds the fits from leg rows; rows are sorted by (scheme, nt).
    pub fn from_rows(preset: &str, reference_spread: f64, window: FitWindow, mut rows: Vec<LegResult>) -> Self {
        rows.sort_by_key(|r| (r.scheme, r.nt));
        let mut schemes: Vec<Scheme> = rows.iter().map(|r| r.scheme).collect();
        schemes.dedup();
        let fits = schemes.into_iter().map(|s| fit_scheme(s, &rows, &window)).collect();
        Self {
            preset: preset.into(),
            reference_spread,
            window,
            rows,
            fits,
        }
    }

    pub fn fit(&self, scheme: Scheme) -> Option<&SchemeFit> {
        self.fits.iter().find(|f| f.scheme == scheme)
    }

    pub fn legs(&self, scheme: Scheme) -> impl Iterator<Item = &LegResult> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }
}

/// Knobs for a sweep that are not part of the experiment itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub workers: usize,
    /// print one line per finished leg on stderr
    pub verbose: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            verbose: false,
        }
    }
}

impl RunOptions {
    /// Worker count from the environment, defaulting to one.
    pub fn from_env() -> Self {
        let workers = std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&w| w > 0)
            .unwrap_or(1);
        Self {
            workers,
            verbose: false,
        }
    }
}

/// Coefficient tables shared between concurrent legs of a sweep.
///
/// Entries are held weakly: a table lives as long as some stepper uses it, so a
/// long sweep does not accumulate one table set per leg.
#[derive(Debug, Default)]
pub struct SharedCoeffs {
    map: Mutex<HashMap<CoeffKey, Weak<SchemeCoeffs>>>,
    builds: AtomicUsize,
}

impl SharedCoeffs {
    pub fn get(&self, scheme: Scheme, preset: &ExperimentPreset, symbol: &[Complex64], h: f64) -> Arc<SchemeCoeffs> {
        let g = &preset.grid;
        let key = CoeffKey {
            scheme,
            model: preset.model.key(),
            nx: g.nx,
            ny: g.ny,
            lx_bits: g.lx.to_bits(),
            ly_bits: g.ly.to_bits(),
            h_bits: h.to_bits(),
            tau_bits: preset.dcrk_tau.to_bits(),
        };
        let mut map = self.map.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(c) = map.get(&key).and_then(Weak::upgrade) {
            return c;
        }
        map.retain(|_, w| w.strong_count() > 0);
        self.builds.fetch_add(1, Ordering::Relaxed);
        let c = Arc::new(build_coeffs_with(scheme, symbol, h, preset.dcrk_tau));
        map.insert(key, Arc::downgrade(&c));
        c
    }

    pub fn builds(&self) -> usize {
        self.builds.load(Ordering::Relaxed)
    }
}

/// One run of `scheme` with `nt` steps from the preset's initial state.
pub fn run_single(
    preset: &ExperimentPreset,
    scheme: Scheme,
    nt: usize,
    v0: &SpectralField,
    cache: &SharedCoeffs,
) -> Result<(SpectralField, f64, Option<f64>)> {
    let mut sys = make_system(&preset.model, &preset.grid)?;
    if scheme.is_splitting() && !sys.supports_splitting() {
        return Err(Error::UnsupportedScheme {
            scheme: scheme.to_string(),
            equation: preset.model.equation.to_string(),
        });
    }
    let cfg = EvolveConfig::new(preset.t_max, nt);
    let coeffs = cache.get(scheme, preset, sys.symbol(), cfg.h());
    let mut stepper = Stepper::new(coeffs);
    let out = evolve(sys.as_mut(), &mut stepper, &v0.coeffs, &cfg, &mut [])?;
    let mut v = SpectralField::new(preset.grid, out.state)?;
    if preset.model.equation.is_kp() {
        enforce_kp_constraint(&mut v);
    }
    Ok((v, out.elapsed.as_secs_f64(), out.stats.mean_irk_iterations()))
}

/// Reference state at `t_max` and its uncertainty (largest pairwise Δ₂ of the averaged runs).
pub fn build_reference(preset: &ExperimentPreset, v0: &SpectralField, cache: &SharedCoeffs) -> Result<(SpectralField, f64)> {
    match &preset.reference {
        ReferencePolicy::Exact => {
            let v = preset
                .exact_state(preset.t_max)?
                .ok_or_else(|| Error::Reference("preset has no closed-form solution".into()))?;
            Ok((v, 0.0))
        }
        ReferencePolicy::Single { scheme, nt } => {
            let (v, _, _) = run_single(preset, *scheme, *nt, v0, cache)
                .map_err(|e| Error::Reference(format!("{scheme} with nt={nt}: {e}")))?;
            Ok((v, 0.0))
        }
        ReferencePolicy::Mean { schemes, nt } => {
            let runs = schemes
                .iter()
                .map(|&s| {
                    run_single(preset, s, *nt, v0, cache)
                        .map(|r| r.0)
                        .map_err(|e| Error::Reference(format!("member {s} with nt={nt}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            mean_reference(&runs, v0)
        }
    }
}

/// Elementwise mean and largest pairwise Δ₂ between members.
pub fn mean_reference(runs: &[SpectralField], v0: &SpectralField) -> Result<(SpectralField, f64)> {
    let first = runs.first().ok_or_else(|| Error::Reference("no reference members".into()))?;
    if let Some(bad) = runs.iter().position(|r| !r.is_finite()) {
        return Err(Error::Reference(format!("reference member {bad} is not finite")));
    }
    let mut mean = SpectralField::zeros(first.grid);
    let w = 1.0 / runs.len() as f64;
    for r in runs {
        first.grid.check_len(r.coeffs.len())?;
        for (m, c) in mean.coeffs.iter_mut().zip(&r.coeffs) {
            *m += c * w;
        }
    }
    let mut spread = 0.0f64;
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            spread = spread.max(error_norm(&a.coeffs, &b.coeffs, &v0.coeffs)?);
        }
    }
    Ok((mean, spread))
}

/// Runs every (scheme, nt) leg of the preset against its reference.
pub fn run_convergence(preset: &ExperimentPreset, opts: &RunOptions) -> Result<ConvergenceReport> {
    preset.validate()?;
    let v0 = preset.initial_state()?;
    let cache = SharedCoeffs::default();
    let (reference, spread) = build_reference(preset, &v0, &cache)?;
    if opts.verbose {
        eprintln!("{}: reference ready (spread {spread:.3e})", preset.name);
    }
    let m0 = mass(&v0);
    let jobs: Vec<(Scheme, usize)> = preset
        .schemes
        .iter()
        .flat_map(|&s| preset.nt_list.iter().map(move |&nt| (s, nt)))
        .collect();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(jobs.len()));
    let leg = |scheme: Scheme, nt: usize| -> LegResult {
        match run_single(preset, scheme, nt, &v0, &cache) {
            Ok((v, secs, irk)) => {
                let delta = error_norm(&v.coeffs, &reference.coeffs, &v0.coeffs).unwrap_or(f64::NAN);
                LegResult {
                    scheme,
                    nt,
                    delta,
                    cpu_seconds: secs,
                    mass_test: mass(&v) / m0 - 1.0,
                    irk_mean_iterations: irk,
                    floor_limited: delta < FLOOR_FACTOR * spread,
                    failure: None,
                }
            }
            Err(e) => LegResult {
                scheme,
                nt,
                delta: f64::NAN,
                cpu_seconds: 0.0,
                mass_test: f64::NAN,
                irk_mean_iterations: None,
                floor_limited: false,
                failure: Some(e.to_string()),
            },
        }
    };
    thread::scope(|s| {
        for _ in 0..opts.workers.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(scheme, nt)) = jobs.get(i) else { break };
                let r = leg(scheme, nt);
                if opts.verbose {
                    eprintln!(
                        "{}: {:<8} nt={:<6} delta={:.3e} test={:.3e} {:.1}s{}",
                        preset.name,
                        scheme.name(),
                        nt,
                        r.delta,
                        r.mass_test,
                        r.cpu_seconds,
                        r.failure.as_deref().map(|f| format!(" FAILED: {f}")).unwrap_or_default()
                    );
                }
                results.lock().unwrap_or_else(|e| e.into_inner()).push(r);
            });
        }
    });
    let rows = results.into_inner().unwrap_or_else(|e| e.into_inner());
    Ok(ConvergenceReport::from_rows(&preset.name, spread, preset.fit_window, rows))
}
