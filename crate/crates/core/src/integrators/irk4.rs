//! Two-stage Gauss collocation with the stiff linear coupling solved exactly per mode.
//!
//! The stage system `Y = v𝟙 + h A (L Y + N(Y))` is rewritten as
//! `Y = (I - h L A)⁻¹ (v𝟙 + h A N(Y))` and iterated in `Y` only through `N`.

use num_complex::Complex64;

use super::Semilinear;
use crate::error::{Error, Result};
use crate::phi::gauss2_tableau;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrkSettings {
    /// bound on the max-norm change of the stage values, in units of `coefficient / len`
    pub tolerance: f64,
    pub max_iterations: usize,
    /// re-evaluate the stage equations after convergence (two extra `N` evaluations)
    pub check_residual: bool,
}

impl Default for IrkSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
            check_residual: false,
        }
    }
}

pub(super) struct IrkOutcome {
    pub iterations: usize,
    pub evals: usize,
    pub residual: f64,
}

/// Lagrange weights of the nodes `(c₁, c₂, 1)` at `1 + c₁` and `1 + c₂`.
fn extrapolation_weights(c: [f64; 2]) -> [[f64; 3]; 2] {
    let nodes = [c[0], c[1], 1.0];
    let at = |x: f64| {
        let mut w = [1.0; 3];
        for (j, wj) in w.iter_mut().enumerate() {
            for (k, &xk) in nodes.iter().enumerate() {
                if k != j {
                    *wj *= (x - xk) / (nodes[j] - xk);
                }
            }
        }
        w
    };
    [at(1.0 + c[0]), at(1.0 + c[1])]
}

#[allow(clippy::too_many_arguments)]
pub(super) fn step<S: Semilinear + ?Sized>(
    solve: &[[C; 4]],
    guess: &[Vec<C>; 2],
    history: &mut bool,
    sys: &mut S,
    bufs: &mut [Vec<C>],
    v: &mut [C],
    t: f64,
    h: f64,
    settings: &IrkSettings,
) -> Result<IrkOutcome> {
    let [y1, y2, n1, n2, last, ..] = bufs else {
        unreachable!("work buffers sized per scheme")
    };
    let (c, a, _) = gauss2_tableau();
    let n = v.len();
    let scale = 1.0 / n as f64;
    if *history && last.as_slice() == &*v {
        // continue the previous step's collocation polynomial through (c₁, c₂, 1)
        let w = extrapolation_weights(c);
        for i in 0..n {
            let (p1, p2, pv) = (y1[i], y2[i], v[i]);
            y1[i] = w[0][0] * p1 + w[0][1] * p2 + w[0][2] * pv;
            y2[i] = w[1][0] * p1 + w[1][1] * p2 + w[1][2] * pv;
        }
    } else {
        for i in 0..n {
            y1[i] = guess[0][i] * v[i];
            y2[i] = guess[1][i] * v[i];
        }
    }
    *history = false;
    let mut evals = 0;
    let mut iterations = 0;
    loop {
        sys.nonlinear(t + c[0] * h, y1, n1);
        sys.nonlinear(t + c[1] * h, y2, n2);
        evals += 2;
        iterations += 1;
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let r1 = v[i] + h * (a[0][0] * n1[i] + a[0][1] * n2[i]);
            let r2 = v[i] + h * (a[1][0] * n1[i] + a[1][1] * n2[i]);
            let m = &solve[i];
            let z1 = m[0] * r1 + m[1] * r2;
            let z2 = m[2] * r1 + m[3] * r2;
            delta = delta.max((z1 - y1[i]).norm()).max((z2 - y2[i]).norm());
            y1[i] = z1;
            y2[i] = z2;
        }
        let delta = delta * scale;
        if delta.is_nan() {
            return Err(Error::NoConvergence {
                iterations,
                last_delta: delta,
            });
        }
        if delta < settings.tolerance {
            break;
        }
        if iterations >= settings.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                last_delta: delta,
            });
        }
    }
    let mut residual = 0.0;
    if settings.check_residual {
        sys.nonlinear(t + c[0] * h, y1, n1);
        sys.nonlinear(t + c[1] * h, y2, n2);
        evals += 2;
        let l = sys.symbol();
        for i in 0..n {
            let f1 = l[i] * y1[i] + n1[i];
            let f2 = l[i] * y2[i] + n2[i];
            let e1 = y1[i] - v[i] - h * (a[0][0] * f1 + a[0][1] * f2);
            let e2 = y2[i] - v[i] - h * (a[1][0] * f1 + a[1][1] * f2);
            residual = f64::max(residual, e1.norm().max(e2.norm()));
        }
        residual *= scale;
    }
    // v' = v + bᵀA⁻¹(Y - v𝟙), and bᵀA⁻¹ = (-√3, √3)
    let s3 = 3f64.sqrt();
    for i in 0..n {
        v[i] += s3 * (y2[i] - y1[i]);
    }
    last.copy_from_slice(v);
    *history = true;
    Ok(IrkOutcome {
        iterations,
        evals,
        residual,
    })
}
