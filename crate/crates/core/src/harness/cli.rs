//! Command-line surface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::diagnostics::{error_norm, spectrum_profile, MassTrace};
use crate::error::{Error, Result};
use crate::grid::{inverse_transform, Grid2D, SpectralField};
use crate::integrators::{evolve, EvolveConfig, Observer, Scheme, Stepper};
use crate::models::{Equation, ModelSpec};

use super::convergence::{make_system, run_convergence, ConvergenceReport, RunOptions};
use super::io::{create, write_fits, write_mass_trace, write_report, write_snapshot, write_spectrum, Snapshot};
use super::presets::{enforce_kp_constraint, preset, ExperimentPreset, InitialData, ReferencePolicy, PRESET_NAMES};
use super::selftest::{exact_selftest, phi_selftest, PHASE_SHIFT_TOLERANCE, PHI_TOLERANCE, RESIDUAL_TOLERANCE};

#[derive(Debug, Parser)]
#[command(name = "kpds", version, about = "Spectral KP / DS II solver and time-integrator benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One simulation; writes snapshots, a mass trace and the final spectrum
    Run(Overrides),
    /// Convergence sweep of a preset; writes report.csv and fits.csv
    Converge(Overrides),
    /// Cross-checks the two φ-function evaluation paths
    PhiSelftest {
        #[arg(long, default_value_t = 400)]
        points: usize,
    },
    /// Residuals of the closed-form KP solutions in the discrete equation
    ExactSelftest {
        #[arg(long, default_value_t = 256)]
        n: usize,
    },
    /// Registered experiments at their desk-scale settings
    ListPresets,
}

/// Flags that override preset fields; a TOML file given by `--config` may set
/// the same keys, and explicit flags win over it.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct Overrides {
    #[arg(long)]
    pub seed_preset: Option<String>,
    /// kp1, kp2, ds2-foc or ds2-def
    #[arg(long)]
    pub equation: Option<String>,
    /// one scheme for `run`, a comma list for `converge`
    #[arg(long, value_delimiter = ',')]
    pub scheme: Option<Vec<String>>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub lx: Option<f64>,
    #[arg(long)]
    pub ly: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub nt_list: Option<Vec<usize>>,
    /// `exact`, `<scheme>:<nt>` or `mean:<s1>+<s2>+...:<nt>`
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub snapshot_stride: Option<usize>,
    #[arg(long)]
    pub dcrk_tau: Option<f64>,
    /// published grid sizes instead of the reduced defaults (long runtimes)
    #[arg(long)]
    pub paper_scale: bool,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// no per-leg progress on stderr
    #[arg(long)]
    pub quiet: bool,
}

impl Overrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))
    }

    /// Fields unset here are taken from `file`.
    pub fn or(self, file: Overrides) -> Overrides {
        Overrides {
            seed_preset: self.seed_preset.or(file.seed_preset),
            equation: self.equation.or(file.equation),
            scheme: self.scheme.or(file.scheme),
            nx: self.nx.or(file.nx),
            ny: self.ny.or(file.ny),
            lx: self.lx.or(file.lx),
            ly: self.ly.or(file.ly),
            epsilon: self.epsilon.or(file.epsilon),
            eta: self.eta.or(file.eta),
            tmax: self.tmax.or(file.tmax),
            nt: self.nt.or(file.nt),
            nt_list: self.nt_list.or(file.nt_list),
            reference: self.reference.or(file.reference),
            out_dir: self.out_dir.or(file.out_dir),
            snapshot_stride: self.snapshot_stride.or(file.snapshot_stride),
            dcrk_tau: self.dcrk_tau.or(file.dcrk_tau),
            paper_scale: self.paper_scale || file.paper_scale,
            config: self.config,
            quiet: self.quiet || file.quiet,
        }
    }

    /// Merges in the config file, if one was named.
    pub fn load(self) -> Result<Overrides> {
        match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(self.or(Overrides::from_toml(&text)?))
            }
            None => Ok(self),
        }
    }

    pub fn schemes(&self) -> Result<Option<Vec<Scheme>>> {
        self.scheme
            .as_ref()
            .map(|list| list.iter().map(|s| s.trim().parse()).collect())
            .transpose()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// The seed preset with every override applied.
    pub fn resolve(&self) -> Result<ExperimentPreset> {
        let equation = self.equation.as_deref().map(parse_equation).transpose()?;
        let name = match (&self.seed_preset, equation) {
            (Some(n), _) => n.clone(),
            (None, Some((Equation::Kp1, _))) => "kp1-smalldisp".into(),
            (None, Some((Equation::Kp2, _))) => "kp2-smalldisp".into(),
            (None, Some((Equation::Ds2, rho))) if rho < 0.0 => "ds2-foc".into(),
            (None, Some((Equation::Ds2, _))) => "ds2-defoc".into(),
            (None, None) => {
                return Err(Error::InvalidParameter("give --seed-preset or --equation".into()));
            }
        };
        let mut p = preset(&name, self.paper_scale)?;
        let original = p.model;
        if let Some((eq, rho)) = equation {
            p.model = match eq {
                Equation::Kp1 => ModelSpec::kp1(p.model.epsilon),
                Equation::Kp2 => ModelSpec::kp2(p.model.epsilon),
                Equation::Ds2 => {
                    let eta = if p.model.equation == Equation::Ds2 && p.model.rho == rho {
                        p.model.eta
                    } else if rho < 0.0 {
                        0.1
                    } else {
                        1.0
                    };
                    ModelSpec::ds2(p.model.epsilon, rho, eta)
                }
            };
        }
        if let Some(e) = self.epsilon {
            p.model.epsilon = e;
        }
        if let Some(eta) = self.eta {
            p.model.eta = eta;
        }
        if p.model != original {
            detach_closed_form(&mut p);
        }
        if self.nx.is_some() || self.ny.is_some() || self.lx.is_some() || self.ly.is_some() {
            let g = p.grid;
            p.grid = Grid2D::new(
                self.nx.unwrap_or(g.nx),
                self.ny.unwrap_or(g.ny),
                self.lx.unwrap_or(g.lx),
                self.ly.unwrap_or(g.ly),
            )?;
        }
        if let Some(t) = self.tmax {
            p.t_max = t;
        }
        if let Some(list) = &self.nt_list {
            p.nt_list = list.clone();
        }
        if let Some(s) = self.schemes()? {
            p.schemes = s;
        }
        if let Some(r) = &self.reference {
            p.reference = parse_reference(r)?;
        }
        if let Some(tau) = self.dcrk_tau {
            p.dcrk_tau = tau;
        }
        Ok(p)
    }
}

/// Drops closed-form data once the model no longer matches it.
fn detach_closed_form(p: &mut ExperimentPreset) {
    let generic = if p.model.equation == Equation::Ds2 {
        InitialData::DsGaussian
    } else {
        InitialData::KpPulse
    };
    let closed = matches!(p.initial, InitialData::Zaitsev(_) | InitialData::Theta(_));
    let ds_mismatch = matches!(p.initial, InitialData::DsGaussian) != (p.model.equation == Equation::Ds2);
    if closed || ds_mismatch {
        p.initial = generic;
    }
    if p.reference == ReferencePolicy::Exact {
        let top = p.nt_list.last().copied().unwrap_or(1000);
        p.reference = ReferencePolicy::Single {
            scheme: Scheme::EtdHo,
            nt: (4 * top).max(5000),
        };
    }
    if p.model.equation != Equation::Ds2 {
        p.schemes.retain(|s| !s.is_splitting());
    }
}

/// Equation and DS sign from `kp1`, `kp2`, `ds2-foc`, `ds2-def`.
fn parse_equation(s: &str) -> Result<(Equation, f64)> {
    let eq: Equation = s.parse()?;
    let rho = match s.to_ascii_lowercase().as_str() {
        "ds2-foc" => -1.0,
        _ => 1.0,
    };
    Ok((eq, rho))
}

pub fn parse_reference(s: &str) -> Result<ReferencePolicy> {
    let bad = || Error::InvalidParameter(format!("bad reference `{s}`; use exact, <scheme>:<nt> or mean:<a>+<b>:<nt>"));
    if s.eq_ignore_ascii_case("exact") {
        return Ok(ReferencePolicy::Exact);
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["mean", list, nt] => Ok(ReferencePolicy::Mean {
            schemes: list.split('+').map(|x| x.trim().parse()).collect::<Result<_>>()?,
            nt: nt.parse().map_err(|_| bad())?,
        }),
        [scheme, nt] => Ok(ReferencePolicy::Single {
            scheme: scheme.parse()?,
            nt: nt.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

fn reference_label(r: &ReferencePolicy) -> String {
    match r {
        ReferencePolicy::Exact => "exact".into(),
        ReferencePolicy::Single { scheme, nt } => format!("{scheme}:{nt}"),
        ReferencePolicy::Mean { schemes, nt } => {
            let names: Vec<&str> = schemes.iter().map(|s| s.name()).collect();
            format!("mean:{}:{nt}", names.join("+"))
        }
    }
}

/// Runs a parsed command; `Ok(false)` means a self-test failed.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<bool> {
    match cli.command {
        Command::ListPresets => {
            for name in PRESET_NAMES {
                let p = preset(name, false)?;
                writeln!(
                    out,
                    "{name:<14} {}x{} t<={} nt={:?} ref={}  {}",
                    p.grid.nx,
                    p.grid.ny,
                    p.t_max,
                    p.nt_list,
                    reference_label(&p.reference),
                    p.description
                )?;
            }
            Ok(true)
        }
        Command::PhiSelftest { points } => {
            let r = phi_selftest(points);
            writeln!(
                out,
                "phi-selftest: {} points, max deviation {:.3e} at z = {:.6e} (tolerance {PHI_TOLERANCE:e})",
                r.points, r.max_deviation, r.worst_z
            )?;
            Ok(r.passed())
        }
        Command::ExactSelftest { n } => {
            let r = exact_selftest(n)?;
            writeln!(out, "zaitsev residual      {:.3e} (tolerance {RESIDUAL_TOLERANCE:e})", r.zaitsev_residual)?;
            writeln!(out, "theta residual        {:.3e} (tolerance {RESIDUAL_TOLERANCE:e})", r.theta_residual)?;
            writeln!(out, "theta phase shift     {:.3e} (tolerance {PHASE_SHIFT_TOLERANCE:e})", r.theta_phase_shift)?;
            Ok(r.residuals_pass() && r.phase_shift_passes())
        }
        Command::Run(o) => {
            let o = o.load()?;
            run_one(&o, out)?;
            Ok(true)
        }
        Command::Converge(o) => {
            let o = o.load()?;
            if o.nt.is_some() {
                return Err(Error::InvalidParameter("converge takes --nt-list, not --nt".into()));
            }
            let p = o.resolve()?;
            let mut opts = RunOptions::from_env();
            opts.verbose = !o.quiet;
            let report = run_convergence(&p, &opts)?;
            let dir = o.out_dir();
            write_report(&report, create(&dir.join("report.csv"))?)?;
            write_fits(&report, create(&dir.join("fits.csv"))?)?;
            print_report(&report, out)?;
            writeln!(out, "wrote {}", dir.join("report.csv").display())?;
            Ok(true)
        }
    }
}

pub fn print_report(r: &ConvergenceReport, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{} (reference spread {:.2e})", r.preset, r.reference_spread)?;
    writeln!(out, "{:<9} {:>7} {:>6} {:>10} {:>9}  flags", "scheme", "slope", "pts", "mass-slope", "min-delta")?;
    for f in &r.fits {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
        let min = r
            .legs(f.scheme)
            .filter(|l| !l.failed())
            .map(|l| l.delta)
            .fold(f64::INFINITY, f64::min);
        let mut flags = Vec::new();
        if f.diverged {
            flags.push("diverged");
        }
        if f.non_convergent {
            flags.push("non-convergent");
        }
        writeln!(
            out,
            "{:<9} {:>7} {:>6} {:>10} {:>9.2e}  {}",
            f.scheme.name(),
            fmt(f.slope),
            f.points,
            fmt(f.mass_slope),
            min,
            flags.join(",")
        )?;
    }
    Ok(())
}

fn snapshot_of(v: &[num_complex::Complex64], grid: Grid2D, t: f64, complex: bool) -> Result<Snapshot> {
    let field = inverse_transform(&SpectralField::new(grid, v.to_vec())?);
    Ok(Snapshot::new(&field, t, complex))
}

fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:06}.spf"))
}

/// Writes snapshots every `stride` steps.
struct SnapshotWriter {
    dir: PathBuf,
    grid: Grid2D,
    complex: bool,
    written: usize,
}

impl Observer for SnapshotWriter {
    fn observe(&mut self, step: usize, t: f64, v: &[num_complex::Complex64]) -> Result<()> {
        let snap = snapshot_of(v, self.grid, t, self.complex)?;
        write_snapshot(&snap, create(&snapshot_path(&self.dir, step))?)?;
        self.written += 1;
        Ok(())
    }
}

fn run_one(o: &Overrides, out: &mut dyn Write) -> Result<()> {
    let p = o.resolve()?;
    p.model.validate()?;
    let scheme = match o.schemes()?.as_deref() {
        Some([s]) => *s,
        Some(_) => return Err(Error::InvalidParameter("run takes exactly one --scheme".into())),
        None => Scheme::EtdHo,
    };
    let nt = o.nt.unwrap_or(p.nt_list[p.nt_list.len() / 2]);
    let dir = o.out_dir();
    let complex = p.model.equation == Equation::Ds2;
    let v0 = p.initial_state()?;
    let mut sys = make_system(&p.model, &p.grid)?;
    let cfg = EvolveConfig::new(p.t_max, nt);
    let mut stepper = Stepper::for_system_with(scheme, sys.as_ref(), cfg.h(), p.dcrk_tau)?;
    let mut trace = MassTrace::new(&v0, 0.0);
    write_snapshot(&snapshot_of(&v0.coeffs, p.grid, 0.0, complex)?, create(&snapshot_path(&dir, 0))?)?;
    let mut snaps = SnapshotWriter {
        dir: dir.clone(),
        grid: p.grid,
        complex,
        written: 1,
    };
    let stride = o.snapshot_stride.unwrap_or(nt);
    let result = {
        let mut every_step = |step: usize, t: f64, v: &[num_complex::Complex64]| -> Result<()> {
            trace.observe(step, t, v)?;
            if step % stride == 0 || step == nt {
                snaps.observe(step, t, v)?;
            }
            Ok(())
        };
        evolve(sys.as_mut(), &mut stepper, &v0.coeffs, &cfg.with_stride(1), &mut [&mut every_step as &mut dyn Observer])?
    };
    let mut v = SpectralField::new(p.grid, result.state)?;
    if p.model.equation.is_kp() {
        enforce_kp_constraint(&mut v);
    }
    write_mass_trace(&trace, create(&dir.join("mass_trace.csv"))?)?;
    write_spectrum(&spectrum_profile(&v, 1e-10), create(&dir.join("spectrum.csv"))?)?;

    writeln!(out, "preset     {}", p.name)?;
    writeln!(out, "model      {} eps={} grid {}x{} lx={} ly={}", p.model.equation, p.model.epsilon, p.grid.nx, p.grid.ny, p.grid.lx, p.grid.ly)?;
    writeln!(out, "scheme     {scheme} nt={nt} h={:.3e} t={}", cfg.h(), result.t)?;
    writeln!(out, "mass test  {:.3e}", trace.last())?;
    if let Some(exact) = p.exact_state(p.t_max)? {
        writeln!(out, "delta2     {:.3e} (exact)", error_norm(&v.coeffs, &exact.coeffs, &v0.coeffs)?)?;
    }
    if let Some(k) = result.stats.mean_irk_iterations() {
        writeln!(out, "irk iters  {k:.2} (mean)")?;
    }
    let profile = spectrum_profile(&v, 1e-10);
    writeln!(out, "tail       {:.2} (log10, resolved: {})", profile.tail_log10, profile.resolved())?;
    writeln!(out, "wall       {:.2}s", result.elapsed.as_secs_f64())?;
    writeln!(out, "snapshots  {} in {}", snaps.written, dir.display())?;
    Ok(())
}
