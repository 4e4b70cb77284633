//! Report CSVs, mass traces, spectra and SPF1 snapshots.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{MassTrace, SpectrumProfile};
use crate::error::{Error, Result};
use crate::grid::{Grid2D, PhysicalField};
use crate::integrators::Scheme;

use super::convergence::{ConvergenceReport, LegResult};
use super::presets::FitWindow;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"SPF1";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct LegRow {
    preset: String,
    scheme: String,
    nt: usize,
    delta: f64,
    cpu_seconds: f64,
    mass_test: f64,
    irk_mean_iterations: Option<f64>,
    floor_limited: bool,
    reference_spread: f64,
    failure: Option<String>,
}

#[derive(Debug, Serialize)]
struct FitRow<'a> {
    preset: &'a str,
    scheme: &'a str,
    slope: Option<f64>,
    intercept: Option<f64>,
    points: usize,
    mass_slope: Option<f64>,
    diverged: bool,
    non_convergent: bool,
}

pub fn write_report<W: Write>(report: &ConvergenceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.rows {
        w.serialize(LegRow {
            preset: report.preset.clone(),
            scheme: r.scheme.name().into(),
            nt: r.nt,
            delta: r.delta,
            cpu_seconds: r.cpu_seconds,
            mass_test: r.mass_test,
            irk_mean_iterations: r.irk_mean_iterations,
            floor_limited: r.floor_limited,
            reference_spread: report.reference_spread,
            failure: r.failure.clone(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads leg rows back and refits them with `window`.
pub fn read_report<R: Read>(input: R, window: FitWindow) -> Result<ConvergenceReport> {
    let mut rd = csv::Reader::from_reader(input);
    let mut preset = String::new();
    let mut spread = 0.0;
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        let row: LegRow = rec?;
        preset = row.preset;
        spread = row.reference_spread;
        rows.push(LegResult {
            scheme: row.scheme.parse::<Scheme>()?,
            nt: row.nt,
            delta: row.delta,
            cpu_seconds: row.cpu_seconds,
            mass_test: row.mass_test,
            irk_mean_iterations: row.irk_mean_iterations,
            floor_limited: row.floor_limited,
            failure: row.failure.filter(|f| !f.is_empty()),
        });
    }
    if rows.is_empty() {
        return Err(Error::Format("report has no rows".into()));
    }
    Ok(ConvergenceReport::from_rows(&preset, spread, window, rows))
}

pub fn write_fits<W: Write>(report: &ConvergenceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for f in &report.fits {
        w.serialize(FitRow {
            preset: &report.preset,
            scheme: f.scheme.name(),
            slope: f.slope,
            intercept: f.intercept,
            points: f.points,
            mass_slope: f.mass_slope,
            diverged: f.diverged,
            non_convergent: f.non_convergent,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mass_trace<W: Write>(trace: &MassTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "test"])?;
    for (t, v) in trace.times.iter().zip(&trace.test_values) {
        w.write_record([t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum<W: Write>(profile: &SpectrumProfile, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "shell_k", "log10_max"])?;
    for (axis, shells) in [("x", &profile.kx), ("y", &profile.ky)] {
        for (k, v) in shells.iter() {
            w.write_record([axis.to_string(), k.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid2D,
    pub t: f64,
    pub is_complex: bool,
    pub values: Vec<Complex64>,
}

impl Snapshot {
    pub fn new(field: &PhysicalField, t: f64, is_complex: bool) -> Self {
        let values = if is_complex {
            field.values.clone()
        } else {
            field.values.iter().map(|c| Complex64::new(c.re, 0.0)).collect()
        };
        Self {
            grid: field.grid,
            t,
            is_complex,
            values,
        }
    }
}

fn u32_of(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(format!("{what} = {n} does not fit in u32")))
}

pub fn write_snapshot<W: Write>(snap: &Snapshot, out: W) -> Result<()> {
    let g = &snap.grid;
    let mut w = BufWriter::new(out);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&u32_of(g.nx, "nx")?.to_le_bytes())?;
    w.write_all(&u32_of(g.ny, "ny")?.to_le_bytes())?;
    for f in [g.lx, g.ly, snap.t] {
        w.write_all(&f.to_le_bytes())?;
    }
    w.write_all(&[snap.is_complex as u8])?;
    for c in &snap.values {
        w.write_all(&c.re.to_le_bytes())?;
        if snap.is_complex {
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated snapshot: {e}")))?;
    Ok(b)
}

pub fn read_snapshot<R: Read>(input: R) -> Result<Snapshot> {
    let mut r = BufReader::new(input);
    if &take::<4>(&mut r)? != SNAPSHOT_MAGIC {
        return Err(Error::Format("not an SPF1 snapshot".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let nx = u32::from_le_bytes(take(&mut r)?) as usize;
    let ny = u32::from_le_bytes(take(&mut r)?) as usize;
    let lx = f64::from_le_bytes(take(&mut r)?);
    let ly = f64::from_le_bytes(take(&mut r)?);
    let t = f64::from_le_bytes(take(&mut r)?);
    let is_complex = match take::<1>(&mut r)?[0] {
        0 => false,
        1 => true,
        b => return Err(Error::Format(format!("bad complex flag {b}"))),
    };
    let grid = Grid2D::new(nx, ny, lx, ly)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = f64::from_le_bytes(take(&mut r)?);
        let im = if is_complex { f64::from_le_bytes(take(&mut r)?) } else { 0.0 };
        values.push(Complex64::new(re, im));
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after snapshot payload".into()));
    }
    Ok(Snapshot {
        grid,
        t,
        is_complex,
        values,
    })
}

pub fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(File::create(path)?)
}
