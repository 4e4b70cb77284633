//! Integrating-factor RK4 and the three exponential time-differencing schemes.

use num_complex::Complex64;

use super::Semilinear;
use crate::phi::CoeffTables;

type C = Complex64;

/// Returns the number of nonlinear evaluations.
pub(super) fn step<S: Semilinear + ?Sized>(
    tables: &CoeffTables,
    sys: &mut S,
    bufs: &mut [Vec<C>],
    v: &mut [C],
    t: f64,
    h: f64,
) -> usize {
    match tables {
        CoeffTables::Lawson { e_half, e_full } => lawson(e_half, e_full, sys, bufs, v, t, h),
        CoeffTables::CoxMatthews {
            e_half,
            e_full,
            q_half,
            f_alpha,
            f_beta,
            f_gamma,
        } => {
            let [na, nb, nc, nv, u, w, ..] = bufs else {
                unreachable!("work buffers sized per scheme")
            };
            let n = v.len();
            sys.nonlinear(t, v, nv);
            for i in 0..n {
                u[i] = e_half[i] * v[i] + q_half[i] * nv[i];
            }
            sys.nonlinear(t + 0.5 * h, u, na);
            for i in 0..n {
                w[i] = e_half[i] * v[i] + q_half[i] * na[i];
            }
            sys.nonlinear(t + 0.5 * h, w, nb);
            for i in 0..n {
                u[i] = e_half[i] * u[i] + q_half[i] * (2.0 * nb[i] - nv[i]);
            }
            sys.nonlinear(t + h, u, nc);
            for i in 0..n {
                v[i] = e_full[i] * v[i] + f_alpha[i] * nv[i] + f_beta[i] * (na[i] + nb[i]) + f_gamma[i] * nc[i];
            }
            4
        }
        CoeffTables::Krogstad {
            e_half,
            e_full,
            q_half,
            p2_half,
            p1,
            p2,
            p3,
        } => {
            let [k1, k2, k3, k4, u, ..] = bufs else {
                unreachable!("work buffers sized per scheme")
            };
            let n = v.len();
            sys.nonlinear(t, v, k1);
            for i in 0..n {
                u[i] = e_half[i] * v[i] + q_half[i] * k1[i];
            }
            sys.nonlinear(t + 0.5 * h, u, k2);
            for i in 0..n {
                u[i] += p2_half[i] * (k2[i] - k1[i]);
            }
            sys.nonlinear(t + 0.5 * h, u, k3);
            for i in 0..n {
                u[i] = e_full[i] * v[i] + p1[i] * k1[i] + 2.0 * p2[i] * (k3[i] - k1[i]);
            }
            sys.nonlinear(t + h, u, k4);
            for i in 0..n {
                v[i] = e_full[i] * v[i]
                    + p1[i] * k1[i]
                    + p2[i] * (-3.0 * k1[i] + 2.0 * k2[i] + 2.0 * k3[i] - k4[i])
                    + 4.0 * p3[i] * (k1[i] - k2[i] - k3[i] + k4[i]);
            }
            4
        }
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
        } => {
            let [n1, n2, n3, n4, n5, u, ..] = bufs else {
                unreachable!("work buffers sized per scheme")
            };
            let n = v.len();
            sys.nonlinear(t, v, n1);
            for i in 0..n {
                u[i] = e_half[i] * v[i] + a21[i] * n1[i];
            }
            sys.nonlinear(t + 0.5 * h, u, n2);
            for i in 0..n {
                u[i] = e_half[i] * v[i] + a31[i] * n1[i] + a32[i] * n2[i];
            }
            sys.nonlinear(t + 0.5 * h, u, n3);
            for i in 0..n {
                u[i] = e_full[i] * v[i] + a41[i] * n1[i] + a42[i] * (n2[i] + n3[i]);
            }
            sys.nonlinear(t + h, u, n4);
            for i in 0..n {
                u[i] = e_half[i] * v[i] + a51[i] * n1[i] + a52[i] * (n2[i] + n3[i]) + a54[i] * n4[i];
            }
            sys.nonlinear(t + 0.5 * h, u, n5);
            for i in 0..n {
                v[i] = e_full[i] * v[i] + b1[i] * n1[i] + b4[i] * n4[i] + b5[i] * n5[i];
            }
            5
        }
        _ => unreachable!("not an exponential scheme"),
    }
}

/// RK4 in the frame of the linear flow, re-anchored each step.
fn lawson<S: Semilinear + ?Sized>(
    e_half: &[C],
    e_full: &[C],
    sys: &mut S,
    bufs: &mut [Vec<C>],
    v: &mut [C],
    t: f64,
    h: f64,
) -> usize {
    let [k1, k2, k3, k4, u, ..] = bufs else {
        unreachable!("work buffers sized per scheme")
    };
    let n = v.len();
    let hh = 0.5 * h;
    sys.nonlinear(t, v, k1);
    for i in 0..n {
        u[i] = e_half[i] * (v[i] + hh * k1[i]);
    }
    sys.nonlinear(t + hh, u, k2);
    for i in 0..n {
        u[i] = e_half[i] * v[i] + hh * k2[i];
    }
    sys.nonlinear(t + hh, u, k3);
    for i in 0..n {
        u[i] = e_full[i] * v[i] + h * e_half[i] * k3[i];
    }
    sys.nonlinear(t + h, u, k4);
    let w = h / 6.0;
    for i in 0..n {
        v[i] = e_full[i] * (v[i] + w * k1[i]) + w * (2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i]);
    }
    4
}
