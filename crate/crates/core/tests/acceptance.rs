//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs everything (the PDE sweeps take well over
//! an hour on one core); `cargo test --test acceptance -- 1 2 10` runs a subset.
//! The process exits non-zero on a FAIL only when `KPDS_ACCEPTANCE_STRICT` is set.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;

use kpds::diagnostics::mass;
use kpds::grid::{forward_transform, inverse_transform};
use kpds::harness::convergence::{run_convergence, ConvergenceReport, RunOptions};
use kpds::harness::presets::preset;
use kpds::harness::selftest::{exact_selftest, phi_selftest};
use kpds::integrators::toy::{FnSystem, ScalarForced};
use kpds::models::{initial_data_ds, linear_symbol, DsSystem};
use kpds::{evolve, EvolveConfig, Grid2D, ModelSpec, Scheme, Semilinear, Stepper};

type C = Complex64;

const PHI_TOL: f64 = 5e-15;
const LINEAR_TOL: f64 = 1e-15;
const RK4_TOL: f64 = 1e-14;
const SCALAR_ORDER4: (f64, f64) = (3.8, 4.2);
const SCALAR_ORDER2: (f64, f64) = (1.9, 2.1);
const KP_SLOPE: (f64, f64) = (3.6, 4.6);
const IRK_MAX_MEAN_ITERATIONS: f64 = 3.0;
const STIFF_IF_MAX_SLOPE: f64 = 2.5;
const STIFF_ETD_MIN_SLOPE: f64 = 3.0;
const DS_SLOPE: (f64, f64) = (3.5, 4.5);
const DS_SPLIT4_MIN_SLOPE: f64 = 3.5;
const MODULUS_TOL: f64 = 1e-14;
const SPLIT_MASS_TOL: f64 = 1e-13;
const MASS_PROXY_MIN_SLOPE: f64 = 3.5;
const RESIDUAL_TOL: f64 = 1e-6;
const PHASE_TOL: f64 = 5e-8;

const EXPLICIT: [Scheme; 5] = [Scheme::Ifrk4, Scheme::Dcrk, Scheme::EtdCm, Scheme::EtdKrogstad, Scheme::EtdHo];
const ETD: [Scheme; 3] = [Scheme::EtdCm, Scheme::EtdKrogstad, Scheme::EtdHo];

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }
}

fn within(x: Option<f64>, (lo, hi): (f64, f64)) -> bool {
    x.is_some_and(|x| (lo..=hi).contains(&x))
}

fn show(x: Option<f64>) -> String {
    x.map_or("none".into(), |x| format!("{x:.2}"))
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn sweep(name: &str) -> ConvergenceReport {
    let p = preset(name, false).expect("preset");
    let mut opts = RunOptions::from_env();
    opts.verbose = true;
    run_convergence(&p, &opts).expect("sweep")
}

fn slope_lines(out: &mut Outcome, r: &ConvergenceReport, schemes: &[Scheme], band: (f64, f64)) {
    for &s in schemes {
        let Some(f) = r.fit(s) else {
            out.check(false, format!("{s}: no fit"));
            continue;
        };
        let deltas: Vec<String> = r.legs(s).map(|l| format!("{}:{:.2e}", l.nt, l.delta)).collect();
        out.check(
            within(f.slope, band),
            format!(
                "{s:<8} slope {} in [{}, {}] ({} pts) {}",
                show(f.slope),
                band.0,
                band.1,
                f.points,
                deltas.join(" ")
            ),
        );
    }
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let r = phi_selftest(400);
    out.check(
        r.max_deviation <= PHI_TOL,
        format!("400 points, max deviation {:.2e} at z = {:.4e} (tol {PHI_TOL:e})", r.max_deviation, r.worst_z),
    );
    out
}

fn rk4_step(sys: &mut FnSystem, v: &mut [C], t: f64, h: f64) {
    let n = v.len();
    let mut rhs = |t: f64, y: &[C]| {
        let mut k = vec![c(0.0, 0.0); n];
        sys.nonlinear(t, y, &mut k);
        k
    };
    let k1 = rhs(t, v);
    let y: Vec<C> = (0..n).map(|i| v[i] + 0.5 * h * k1[i]).collect();
    let k2 = rhs(t + 0.5 * h, &y);
    let y: Vec<C> = (0..n).map(|i| v[i] + 0.5 * h * k2[i]).collect();
    let k3 = rhs(t + 0.5 * h, &y);
    let y: Vec<C> = (0..n).map(|i| v[i] + h * k3[i]).collect();
    let k4 = rhs(t + h, &y);
    for i in 0..n {
        v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    // a real KP symbol, stiff at the edges of the spectrum
    let grid = Grid2D::new(32, 16, 5.0, 5.0).unwrap();
    let symbol = linear_symbol(&ModelSpec::kp1(1.0), &grid).values;
    let v0: Vec<C> = (0..symbol.len())
        .map(|i| c((0.37 * i as f64).sin(), (0.11 * i as f64).cos()))
        .collect();
    let h = 0.05;
    for scheme in [Scheme::Ifrk4, Scheme::EtdCm, Scheme::EtdKrogstad, Scheme::EtdHo] {
        let mut sys = FnSystem::linear(symbol.clone());
        let mut st = Stepper::for_system(scheme, &sys, h).unwrap();
        let mut v = v0.clone();
        st.step(&mut sys, &mut v, 0.0).unwrap();
        let err = v
            .iter()
            .zip(&v0)
            .zip(&symbol)
            .map(|((a, b), l)| (a - (l * h).exp() * b).norm() / b.norm())
            .fold(0.0, f64::max);
        out.check(err <= LINEAR_TOL, format!("N=0  {scheme:<8} vs exp(Lh): {err:.1e}"));
    }

    let riccati = |symbol: Vec<C>| {
        FnSystem::new(symbol, |t, v, o| {
            for (o, x) in o.iter_mut().zip(v) {
                *o = c(0.0, 0.7) * x * x + 0.3 * t.cos();
            }
        })
    };
    let zero = vec![c(0.0, 0.0); 3];
    let v0 = vec![c(0.5, 0.1), c(-0.2, 0.3), c(0.05, -0.4)];
    let h = 0.05;
    let mut reference = v0.clone();
    rk4_step(&mut riccati(zero.clone()), &mut reference, 0.2, h);
    for scheme in [Scheme::EtdCm, Scheme::EtdKrogstad, Scheme::Ifrk4, Scheme::Dcrk] {
        let mut sys = riccati(zero.clone());
        // τ = ∞ puts every mode in the slow set
        let mut st = Stepper::for_system_with(scheme, &sys, h, f64::INFINITY).unwrap();
        let mut v = v0.clone();
        st.step(&mut sys, &mut v, 0.2).unwrap();
        let err = max_diff(&v, &reference);
        out.check(err <= RK4_TOL, format!("L=0  {scheme:<8} vs RK4: {err:.1e}"));
    }
    out
}

fn scalar_slope(scheme: Scheme, sys: &ScalarForced) -> f64 {
    let nts = [10usize, 20, 40, 80];
    let v0 = c(1.0, 0.0);
    let pts: Vec<(f64, f64)> = nts
        .iter()
        .map(|&nt| {
            let mut s = sys.clone();
            let cfg = EvolveConfig::new(1.0, nt);
            let mut st = Stepper::for_system(scheme, &s, cfg.h()).unwrap();
            let run = evolve(&mut s, &mut st, &[v0], &cfg, &mut []).unwrap();
            ((nt as f64).ln(), (run.state[0] - sys.exact(v0, 1.0)).norm().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    let sys = ScalarForced::sine(-1.0);
    for scheme in Scheme::ALL {
        let band = if scheme == Scheme::Strang2 { SCALAR_ORDER2 } else { SCALAR_ORDER4 };
        let a = scalar_slope(scheme, &sys);
        out.check(
            within(Some(a), band),
            format!("{scheme:<8} slope {a:.3} in [{}, {}]", band.0, band.1),
        );
    }
    out
}

fn report_cache() -> &'static std::sync::Mutex<BTreeMap<&'static str, ConvergenceReport>> {
    static CACHE: std::sync::OnceLock<std::sync::Mutex<BTreeMap<&'static str, ConvergenceReport>>> =
        std::sync::OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn cached_sweep(name: &'static str) -> ConvergenceReport {
    let r = sweep(name);
    report_cache().lock().unwrap().insert(name, r.clone());
    r
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let r = cached_sweep("zaitsev-kp1");
    slope_lines(&mut out, &r, &EXPLICIT, KP_SLOPE);
    out
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let r = cached_sweep("theta-kp2");
    slope_lines(&mut out, &r, &EXPLICIT, KP_SLOPE);
    let coarse = r.legs(Scheme::Irk4).next();
    match coarse.and_then(|l| l.irk_mean_iterations.map(|k| (l.nt, k))) {
        Some((nt, k)) => out.check(
            k <= IRK_MAX_MEAN_ITERATIONS,
            format!("irk4 mean iterations {k:.2} at the coarsest leg nt={nt} (max {IRK_MAX_MEAN_ITERATIONS})"),
        ),
        None => out.check(false, "irk4 coarsest leg has no iteration count".into()),
    }
    for l in r.legs(Scheme::Irk4) {
        out.note(format!(
            "irk4 nt={} delta {:.2e} iterations {}",
            l.nt,
            l.delta,
            show(l.irk_mean_iterations)
        ));
    }
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let r = cached_sweep("kp1-smalldisp");
    let slope = |s| r.fit(s).and_then(|f| f.slope);
    for s in EXPLICIT {
        let deltas: Vec<String> = r.legs(s).map(|l| format!("{}:{:.2e}", l.nt, l.delta)).collect();
        out.note(format!("{s:<8} {}", deltas.join(" ")));
    }
    let if_slope = slope(Scheme::Ifrk4);
    out.check(
        if_slope.is_some_and(|a| a <= STIFF_IF_MAX_SLOPE),
        format!("ifrk4 slope {} <= {STIFF_IF_MAX_SLOPE}", show(if_slope)),
    );
    for s in ETD {
        out.check(
            slope(s).is_some_and(|a| a >= STIFF_ETD_MIN_SLOPE),
            format!("{s:<8} slope {} >= {STIFF_ETD_MIN_SLOPE}", show(slope(s))),
        );
    }
    let etd_min = ETD.iter().filter_map(|&s| slope(s)).fold(f64::INFINITY, f64::min);
    out.check(
        if_slope.is_some_and(|a| a < etd_min),
        format!("ifrk4 slope {} below every ETD slope (min {etd_min:.2})", show(if_slope)),
    );
    let dcrk = r.fit(Scheme::Dcrk);
    out.check(
        dcrk.is_some_and(|f| f.non_convergent),
        format!(
            "dcrk flagged non-convergent: {}",
            dcrk.map_or("no fit".into(), |f| format!("{} (diverged {})", f.non_convergent, f.diverged))
        ),
    );
    out
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let r = cached_sweep("ds2-defoc");
    out.note(format!("reference spread {:.2e}", r.reference_spread));
    slope_lines(&mut out, &r, &EXPLICIT, DS_SLOPE);
    let y = r.fit(Scheme::Yoshida4).and_then(|f| f.slope);
    out.check(
        y.is_some_and(|a| a >= DS_SPLIT4_MIN_SLOPE),
        format!("yoshida4 slope {} >= {DS_SPLIT4_MIN_SLOPE}", show(y)),
    );
    for s in [Scheme::Strang2, Scheme::Yoshida4] {
        let deltas: Vec<String> = r.legs(s).map(|l| format!("{}:{:.2e}", l.nt, l.delta)).collect();
        let floor = r.legs(s).map(|l| l.delta).fold(f64::INFINITY, f64::min);
        out.note(format!("{s:<8} smallest delta {floor:.2e}; {}", deltas.join(" ")));
    }
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let grid = Grid2D::new(128, 128, 2.0, 2.0).unwrap();
    for (label, model) in [("defocusing", ModelSpec::ds2(0.1, 1.0, 1.0)), ("focusing", ModelSpec::ds2(0.1, -1.0, 0.1))] {
        let mut sys = DsSystem::new(model, grid).unwrap();
        let v0 = forward_transform(&initial_data_ds(&grid, model.eta).unwrap());
        let h = 0.8 / 200.0;

        let mut worst_modulus = 0.0f64;
        let mut u = inverse_transform(&v0).values;
        for _ in 0..20 {
            let before: Vec<f64> = u.iter().map(|z| z.norm()).collect();
            sys.nonlinear_flow_physical(&mut u, h);
            for (a, z) in before.iter().zip(&u) {
                worst_modulus = worst_modulus.max((a - z.norm()).abs());
            }
        }
        out.check(
            worst_modulus <= MODULUS_TOL,
            format!("{label}: nonlinear flow |u| change per step {worst_modulus:.1e} (tol {MODULUS_TOL:e})"),
        );

        for scheme in [Scheme::Strang2, Scheme::Yoshida4] {
            let mut st = Stepper::for_system(scheme, &sys, h).unwrap();
            let mut v = v0.coeffs.clone();
            let mut worst = 0.0f64;
            for n in 0..20 {
                let m0 = mass(&kpds::SpectralField::new(grid, v.clone()).unwrap());
                st.step(&mut sys, &mut v, n as f64 * h).unwrap();
                let m1 = mass(&kpds::SpectralField::new(grid, v.clone()).unwrap());
                worst = worst.max(((m1 - m0) / m0).abs());
            }
            out.check(
                worst <= SPLIT_MASS_TOL,
                format!("{label}: {scheme} relative mass change per step {worst:.1e} (tol {SPLIT_MASS_TOL:e})"),
            );
        }
    }
    out
}

fn criterion_9() -> Outcome {
    let mut out = Outcome::new();
    let cache = report_cache().lock().unwrap();
    if cache.is_empty() {
        // run the cheapest sweep so the criterion is never vacuous
        drop(cache);
        cached_sweep("zaitsev-kp1");
        return criterion_9();
    }
    for (name, r) in cache.iter() {
        for s in ETD {
            let m = r.fit(s).and_then(|f| f.mass_slope);
            out.check(
                m.is_some_and(|a| a >= MASS_PROXY_MIN_SLOPE),
                format!("{name:<13} {s:<8} mass-test slope {} >= {MASS_PROXY_MIN_SLOPE}", show(m)),
            );
        }
        for s in [Scheme::Strang2, Scheme::Yoshida4] {
            let drift: Vec<String> = r.legs(s).map(|l| format!("{}:{:.1e}", l.nt, l.mass_test)).collect();
            if !drift.is_empty() {
                out.note(format!("{name:<13} {s:<8} mass drift (not an error proxy) {}", drift.join(" ")));
            }
        }
    }
    out
}

fn criterion_10() -> Outcome {
    let mut out = Outcome::new();
    let r = exact_selftest(256).unwrap();
    out.check(
        r.zaitsev_residual <= RESIDUAL_TOL,
        format!("zaitsev residual {:.2e} (tol {RESIDUAL_TOL:e})", r.zaitsev_residual),
    );
    out.check(
        r.theta_residual <= RESIDUAL_TOL,
        format!("theta residual {:.2e} (tol {RESIDUAL_TOL:e})", r.theta_residual),
    );
    out.check(
        r.theta_phase_shift <= PHASE_TOL,
        format!("theta phase shift {:.2e} (tol {PHASE_TOL:e})", r.theta_phase_shift),
    );
    out
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "phi-function cross-validation", criterion_1),
    (2, "scheme reductions", criterion_2),
    (3, "scalar order suite", criterion_3),
    (4, "Zaitsev KP I convergence", criterion_4),
    (5, "doubly periodic KP II convergence", criterion_5),
    (6, "KP I small-dispersion stiff regime", criterion_6),
    (7, "DS II defocusing convergence", criterion_7),
    (8, "DS split flow invariants", criterion_8),
    (9, "mass test as error proxy", criterion_9),
    (10, "exact-solution oracles", criterion_10),
];

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, title, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        ran += 1;
        failed += usize::from(!out.pass);
        println!(
            "{} criterion {id}: {title} ({:.1}s)",
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for l in &out.lines {
            println!("    {l}");
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 && std::env::var_os("KPDS_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
