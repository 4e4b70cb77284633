//! φ-functions of exponential integrators and per-mode coefficient tables.
//!
//! `φ_i(z) = 1/(i-1)! ∫_0^1 e^{(1-τ)z} τ^{i-1} dτ`, so `φ_0 = e^z`,
//! `φ_{i+1}(z) = (φ_i(z) - 1/i!) / z` and `φ_i(0) = 1/i!`.
//!
//! The production path ([`phi_eval`]) uses a truncated Taylor series inside
//! `|z| < 1/2` and the closed form with upward recurrence outside. The
//! Cauchy-integral path ([`contour_eval`]) averages values on a circle of
//! radius one around `z`; it is kept as an independent check of the former.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::integrators::Scheme;

const TAYLOR_RADIUS: f64 = 0.5;
const TAYLOR_TERMS: usize = 30;

const fn inverse_factorials() -> [f64; 40] {
    let mut out = [0.0; 40];
    let mut f = 1.0;
    let mut n = 0;
    while n < 40 {
        if n > 0 {
            f *= n as f64;
        }
        out[n] = 1.0 / f;
        n += 1;
    }
    out
}

static INV_FACT: [f64; 40] = inverse_factorials();

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiValue {
    pub z: Complex64,
    pub exp_z: Complex64,
    /// `phi[i]` holds `φ_{i+1}(z)`.
    pub phi: [Complex64; 4],
}

impl PhiValue {
    pub fn phi1(&self) -> Complex64 {
        self.phi[0]
    }
    pub fn phi2(&self) -> Complex64 {
        self.phi[1]
    }
    pub fn phi3(&self) -> Complex64 {
        self.phi[2]
    }
    pub fn phi4(&self) -> Complex64 {
        self.phi[3]
    }

    /// Largest componentwise deviation `|a_i - b_i| / (1 + |a_i|)` over φ₁..φ₄.
    pub fn max_deviation(&self, other: &PhiValue) -> f64 {
        self.phi
            .iter()
            .zip(&other.phi)
            .map(|(a, b)| (a - b).norm() / (1.0 + a.norm()))
            .fold(0.0, f64::max)
    }
}

fn taylor(z: Complex64) -> [Complex64; 4] {
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let order = i + 1;
        let mut acc = Complex64::new(0.0, 0.0);
        for n in (0..TAYLOR_TERMS).rev() {
            acc = acc * z + INV_FACT[n + order];
        }
        *slot = acc;
    }
    out
}

fn closed_form(z: Complex64, exp_z: Complex64) -> [Complex64; 4] {
    let inv_z = 1.0 / z;
    let p1 = (exp_z - 1.0) * inv_z;
    let p2 = (p1 - 1.0) * inv_z;
    let p3 = (p2 - 0.5) * inv_z;
    let p4 = (p3 - INV_FACT[3]) * inv_z;
    [p1, p2, p3, p4]
}

fn hybrid(z: Complex64) -> (Complex64, [Complex64; 4]) {
    let exp_z = z.exp();
    let phi = if z.norm() < TAYLOR_RADIUS {
        taylor(z)
    } else {
        closed_form(z, exp_z)
    };
    (exp_z, phi)
}

/// `e^z` and `φ₁..φ₄(z)` without cancellation near the removable singularity.
pub fn phi_eval(z: Complex64) -> PhiValue {
    let (exp_z, phi) = hybrid(z);
    PhiValue { z, exp_z, phi }
}

/// Trapezoid-rule Cauchy integral over `n_nodes` points on the unit circle about `z`.
///
/// Nodes sit at half-offset angles `2π(j + 1/2)/n`; each node value uses the
/// closed form, falling back to the series only for nodes inside `|s| < 1/2`.
pub fn contour_eval(z: Complex64, n_nodes: usize) -> PhiValue {
    assert!(n_nodes >= 8, "contour_eval needs at least 8 nodes");
    let mut acc = [Complex64::new(0.0, 0.0); 4];
    for j in 0..n_nodes {
        let theta = 2.0 * PI * (j as f64 + 0.5) / n_nodes as f64;
        let s = z + Complex64::from_polar(1.0, theta);
        let (_, vals) = hybrid(s);
        for (a, v) in acc.iter_mut().zip(vals) {
            *a += v;
        }
    }
    let inv_n = 1.0 / n_nodes as f64;
    PhiValue {
        z,
        exp_z: z.exp(),
        phi: acc.map(|a| a * inv_n),
    }
}

/// Per-mode tables a scheme needs for one step size. Entries that multiply the
/// nonlinear term are pre-scaled by `h`.
#[derive(Debug, Clone)]
pub enum CoeffTables {
    Lawson {
        e_half: Vec<Complex64>,
        e_full: Vec<Complex64>,
    },
    CoxMatthews {
        e_half: Vec<Complex64>,
        e_full: Vec<Complex64>,
        /// `(h/2) φ₁(hL/2)`
        q_half: Vec<Complex64>,
        /// `h(φ₁ - 3φ₂ + 4φ₃)`
        f_alpha: Vec<Complex64>,
        /// `2h(φ₂ - 2φ₃)`
        f_beta: Vec<Complex64>,
        /// `h(-φ₂ + 4φ₃)`
        f_gamma: Vec<Complex64>,
    },
    Krogstad {
        e_half: Vec<Complex64>,
        e_full: Vec<Complex64>,
        /// `(h/2) φ₁(hL/2)`
        q_half: Vec<Complex64>,
        /// `h φ₂(hL/2)`
        p2_half: Vec<Complex64>,
        /// `h φ_j(hL)` for j = 1, 2, 3
        p1: Vec<Complex64>,
        p2: Vec<Complex64>,
        p3: Vec<Complex64>,
    },
    HochbruckOstermann {
        e_half: Vec<Complex64>,
        e_full: Vec<Complex64>,
        /// stage weights, all pre-scaled by h
        a21: Vec<Complex64>,
        a31: Vec<Complex64>,
        a32: Vec<Complex64>,
        a41: Vec<Complex64>,
        a42: Vec<Complex64>,
        a51: Vec<Complex64>,
        a52: Vec<Complex64>,
        a54: Vec<Complex64>,
        b1: Vec<Complex64>,
        b4: Vec<Complex64>,
        b5: Vec<Complex64>,
    },
    Composite {
        fast: Vec<bool>,
        /// linear symbol on slow modes (zero on fast ones)
        l_slow: Vec<Complex64>,
        /// linear symbol on fast modes (zero on slow ones)
        l_fast: Vec<Complex64>,
        /// `1 / (1 - h γ L_fast)`
        solve: Vec<Complex64>,
    },
    Gauss {
        /// `(I - h L A)^{-1}` per mode, row-major 2x2
        solve: Vec<[Complex64; 4]>,
        /// `e^{c_i h L}`, stage guesses for a first step
        guess: [Vec<Complex64>; 2],
    },
    Strang {
        e_half: Vec<Complex64>,
    },
    Yoshida {
        /// `e^{w₁ h L / 2}`
        e_outer: Vec<Complex64>,
        /// `e^{(w₁ + w₀) h L / 2}`
        e_inner: Vec<Complex64>,
    },
}

#[derive(Debug, Clone)]
pub struct SchemeCoeffs {
    pub scheme: Scheme,
    pub h: f64,
    pub dcrk_tau: f64,
    pub tables: CoeffTables,
}

impl SchemeCoeffs {
    pub fn len(&self) -> usize {
        match &self.tables {
            CoeffTables::Lawson { e_full, .. }
            | CoeffTables::CoxMatthews { e_full, .. }
            | CoeffTables::Krogstad { e_full, .. }
            | CoeffTables::HochbruckOstermann { e_full, .. } => e_full.len(),
            CoeffTables::Composite { fast, .. } => fast.len(),
            CoeffTables::Gauss { solve, .. } => solve.len(),
            CoeffTables::Strang { e_half } => e_half.len(),
            CoeffTables::Yoshida { e_outer, .. } => e_outer.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Full-step propagator `e^{hL}` where the scheme stores it.
    pub fn exp_full(&self) -> Option<&[Complex64]> {
        match &self.tables {
            CoeffTables::Lawson { e_full, .. }
            | CoeffTables::CoxMatthews { e_full, .. }
            | CoeffTables::Krogstad { e_full, .. }
            | CoeffTables::HochbruckOstermann { e_full, .. } => Some(e_full),
            _ => None,
        }
    }
}

/// Default DCRK stiffness cutoff on `|h L_k|`.
pub const DEFAULT_DCRK_TAU: f64 = 1.0;

/// Triple-jump weights `(w₁, w₀)` of the fourth-order composition.
pub fn yoshida_weights() -> (f64, f64) {
    let cbrt2 = 2f64.cbrt();
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 / (2.0 - cbrt2);
    (w1, w0)
}

/// Implicit diagonal of the composite RK4/RK3 pair.
pub const DCRK_GAMMA: f64 = 0.5;

/// Gauss-Legendre 2-stage coefficients.
pub fn gauss2_tableau() -> ([f64; 2], [[f64; 2]; 2], [f64; 2]) {
    let s = 3f64.sqrt() / 6.0;
    (
        [0.5 - s, 0.5 + s],
        [[0.25, 0.25 - s], [0.25 + s, 0.25]],
        [0.5, 0.5],
    )
}

pub fn build_coeffs(scheme: Scheme, symbol: &[Complex64], h: f64) -> SchemeCoeffs {
    build_coeffs_with(scheme, symbol, h, DEFAULT_DCRK_TAU)
}

pub fn build_coeffs_with(scheme: Scheme, symbol: &[Complex64], h: f64, dcrk_tau: f64) -> SchemeCoeffs {
    assert!(h > 0.0 && h.is_finite(), "step size must be positive");
    let exp_scaled = |s: f64| -> Vec<Complex64> { symbol.iter().map(|l| (l * (s * h)).exp()).collect() };
    let tables = match scheme {
        Scheme::Ifrk4 => CoeffTables::Lawson {
            e_half: exp_scaled(0.5),
            e_full: exp_scaled(1.0),
        },
        Scheme::EtdCm => {
            let n = symbol.len();
            let mut t = (
                Vec::with_capacity(n),
                Vec::with_capacity(n),
                Vec::with_capacity(n),
                Vec::with_capacity(n),
                Vec::with_capacity(n),
                Vec::with_capacity(n),
            );
            for l in symbol {
                let full = phi_eval(l * h);
                let half = phi_eval(l * (0.5 * h));
                let (p1, p2, p3) = (full.phi1(), full.phi2(), full.phi3());
                t.0.push(half.exp_z);
                t.1.push(full.exp_z);
                t.2.push(half.phi1() * (0.5 * h));
                t.3.push((p1 - 3.0 * p2 + 4.0 * p3) * h);
                t.4.push((p2 - 2.0 * p3) * (2.0 * h));
                t.5.push((-p2 + 4.0 * p3) * h);
            }
            CoeffTables::CoxMatthews {
                e_half: t.0,
                e_full: t.1,
                q_half: t.2,
                f_alpha: t.3,
                f_beta: t.4,
                f_gamma: t.5,
            }
        }
        Scheme::EtdKrogstad => {
            let n = symbol.len();
            let mut e_half = Vec::with_capacity(n);
            let mut e_full = Vec::with_capacity(n);
            let mut q_half = Vec::with_capacity(n);
            let mut p2_half = Vec::with_capacity(n);
            let mut p1 = Vec::with_capacity(n);
            let mut p2 = Vec::with_capacity(n);
            let mut p3 = Vec::with_capacity(n);
            for l in symbol {
                let full = phi_eval(l * h);
                let half = phi_eval(l * (0.5 * h));
                e_half.push(half.exp_z);
                e_full.push(full.exp_z);
                q_half.push(half.phi1() * (0.5 * h));
                p2_half.push(half.phi2() * h);
                p1.push(full.phi1() * h);
                p2.push(full.phi2() * h);
                p3.push(full.phi3() * h);
            }
            CoeffTables::Krogstad {
                e_half,
                e_full,
                q_half,
                p2_half,
                p1,
                p2,
                p3,
            }
        }
        Scheme::EtdHo => {
            let n = symbol.len();
            let mut cols: [Vec<Complex64>; 13] = std::array::from_fn(|_| Vec::with_capacity(n));
            for l in symbol {
                let f = phi_eval(l * h);
                let hf = phi_eval(l * (0.5 * h));
                let (p1, p2, p3) = (f.phi1(), f.phi2(), f.phi3());
                let (q1, q2, q3) = (hf.phi1(), hf.phi2(), hf.phi3());
                let a52 = 0.5 * q2 - p3 + 0.25 * p2 - 0.5 * q3;
                let a54 = 0.25 * q2 - a52;
                let a51 = 0.5 * q1 - 2.0 * a52 - a54;
                let row = [
                    hf.exp_z,
                    f.exp_z,
                    0.5 * q1 * h,
                    (0.5 * q1 - q2) * h,
                    q2 * h,
                    (p1 - 2.0 * p2) * h,
                    p2 * h,
                    a51 * h,
                    a52 * h,
                    a54 * h,
                    (p1 - 3.0 * p2 + 4.0 * p3) * h,
                    (-p2 + 4.0 * p3) * h,
                    (4.0 * p2 - 8.0 * p3) * h,
                ];
                for (c, v) in cols.iter_mut().zip(row) {
                    c.push(v);
                }
            }
            let [e_half, e_full, a21, a31, a32, a41, a42, a51, a52, a54, b1, b4, b5] = cols;
            CoeffTables::HochbruckOstermann {
                e_half,
                e_full,
                a21,
                a31,
                a32,
                a41,
                a42,
                a51,
                a52,
                a54,
                b1,
                b4,
                b5,
            }
        }
        Scheme::Dcrk => {
            let zero = Complex64::new(0.0, 0.0);
            let fast: Vec<bool> = symbol.iter().map(|l| (l * h).norm() > dcrk_tau).collect();
            let l_slow = symbol
                .iter()
                .zip(&fast)
                .map(|(l, &f)| if f { zero } else { *l })
                .collect();
            let l_fast: Vec<Complex64> = symbol
                .iter()
                .zip(&fast)
                .map(|(l, &f)| if f { *l } else { zero })
                .collect();
            let solve = l_fast.iter().map(|l| 1.0 / (1.0 - l * (h * DCRK_GAMMA))).collect();
            CoeffTables::Composite {
                fast,
                l_slow,
                l_fast,
                solve,
            }
        }
        Scheme::Irk4 => {
            let (c, a, _) = gauss2_tableau();
            let solve = symbol
                .iter()
                .map(|l| {
                    let z = l * h;
                    // M = I - z A
                    let m11 = 1.0 - z * a[0][0];
                    let m12 = -z * a[0][1];
                    let m21 = -z * a[1][0];
                    let m22 = 1.0 - z * a[1][1];
                    let det = m11 * m22 - m12 * m21;
                    let inv = 1.0 / det;
                    [m22 * inv, -m12 * inv, -m21 * inv, m11 * inv]
                })
                .collect();
            CoeffTables::Gauss {
                solve,
                guess: [exp_scaled(c[0]), exp_scaled(c[1])],
            }
        }
        Scheme::Strang2 => CoeffTables::Strang {
            e_half: exp_scaled(0.5),
        },
        Scheme::Yoshida4 => {
            let (w1, w0) = yoshida_weights();
            CoeffTables::Yoshida {
                e_outer: exp_scaled(0.5 * w1),
                e_inner: exp_scaled(0.5 * (w1 + w0)),
            }
        }
    };
    SchemeCoeffs {
        scheme,
        h,
        dcrk_tau,
        tables,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoeffKey {
    pub scheme: Scheme,
    pub model: String,
    pub nx: usize,
    pub ny: usize,
    pub lx_bits: u64,
    pub ly_bits: u64,
    pub h_bits: u64,
    pub tau_bits: u64,
}

/// Memoizes coefficient tables so each (scheme, model, grid, h) is built once.
#[derive(Debug, Default)]
pub struct CoeffCache {
    map: HashMap<CoeffKey, Arc<SchemeCoeffs>>,
    builds: usize,
}

impl CoeffCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(
        &mut self,
        key: CoeffKey,
        build: impl FnOnce() -> SchemeCoeffs,
    ) -> Arc<SchemeCoeffs> {
        if let Some(c) = self.map.get(&key) {
            return Arc::clone(c);
        }
        self.builds += 1;
        let c = Arc::new(build());
        self.map.insert(key, Arc::clone(&c));
        c
    }

    pub fn builds(&self) -> usize {
        self.builds
    }
}
