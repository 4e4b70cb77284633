//! Strang splitting and its fourth-order triple-jump composition.

use num_complex::Complex64;

use super::Semilinear;
use crate::error::Result;
use crate::phi::yoshida_weights;

fn linear(e: &[Complex64], v: &mut [Complex64]) {
    for (x, f) in v.iter_mut().zip(e) {
        *x *= f;
    }
}

pub(super) fn strang<S: Semilinear + ?Sized>(
    e_half: &[Complex64],
    sys: &mut S,
    v: &mut [Complex64],
    t: f64,
    h: f64,
) -> Result<usize> {
    linear(e_half, v);
    sys.nonlinear_flow(t, h, v)?;
    linear(e_half, v);
    Ok(1)
}

/// Three Strang steps of lengths `w₁h, w₀h, w₁h`, adjacent linear half-steps merged.
pub(super) fn yoshida<S: Semilinear + ?Sized>(
    e_outer: &[Complex64],
    e_inner: &[Complex64],
    sys: &mut S,
    v: &mut [Complex64],
    t: f64,
    h: f64,
) -> Result<usize> {
    let (w1, w0) = yoshida_weights();
    linear(e_outer, v);
    sys.nonlinear_flow(t, w1 * h, v)?;
    linear(e_inner, v);
    sys.nonlinear_flow(t + w1 * h, w0 * h, v)?;
    linear(e_inner, v);
    sys.nonlinear_flow(t + (w1 + w0) * h, w1 * h, v)?;
    linear(e_outer, v);
    Ok(3)
}
