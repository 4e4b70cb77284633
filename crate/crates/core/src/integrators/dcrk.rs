//! Composite RK4 / linearly implicit RK3 pair.
//!
//! Modes with `|h L_k| ≤ τ` travel with the nonlinear term through classical
//! RK4. The stiff remainder of `L` uses a diagonally implicit tableau sharing
//! the RK4 nodes and weights:
//!
//! ```text
//!  0  |  0                      0  |  0
//! 1/2 | 1/2                    1/2 |  0   1/2
//! 1/2 |  0  1/2                1/2 | 1/2 -1/2  1/2
//!  1  |  0   0   1              1  | 1/2 -1    1   1/2
//! ----+----------------        ----+--------------------
//!     | 1/6 1/3 1/3 1/6            | 1/6  1/3  1/3 1/6
//! ```
//!
//! The implicit half is A-stable with `R(∞) = 1/3` and third order; the pair
//! satisfies the order-three coupling conditions.

use num_complex::Complex64;

use super::Semilinear;

type C = Complex64;

const A_EXPLICIT: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]];
const A_IMPLICIT: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.5, -0.5, 0.0], [0.5, -1.0, 1.0]];
const NODES: [f64; 4] = [0.0, 0.5, 0.5, 1.0];
const WEIGHTS: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

#[allow(clippy::too_many_arguments)]
pub(super) fn step<S: Semilinear + ?Sized>(
    l_slow: &[C],
    l_fast: &[C],
    solve: &[C],
    sys: &mut S,
    bufs: &mut [Vec<C>],
    v: &mut [C],
    t: f64,
    h: f64,
) -> usize {
    let (explicit, rest) = bufs.split_at_mut(4);
    let (implicit, rest) = rest.split_at_mut(4);
    let y = &mut rest[0];
    let n = v.len();
    for s in 0..4 {
        if s == 0 {
            y.copy_from_slice(v);
        } else {
            for i in 0..n {
                let mut acc = C::new(0.0, 0.0);
                for j in 0..s {
                    let (ae, ai) = (A_EXPLICIT[s][j], A_IMPLICIT[s][j]);
                    if ae != 0.0 {
                        acc += ae * explicit[j][i];
                    }
                    if ai != 0.0 {
                        acc += ai * implicit[j][i];
                    }
                }
                y[i] = (v[i] + h * acc) * solve[i];
            }
        }
        let (ks, kn) = (&mut explicit[s], &mut implicit[s]);
        sys.nonlinear(t + NODES[s] * h, y, ks);
        for i in 0..n {
            ks[i] += l_slow[i] * y[i];
            kn[i] = l_fast[i] * y[i];
        }
    }
    for i in 0..n {
        let mut acc = C::new(0.0, 0.0);
        for s in 0..4 {
            acc += WEIGHTS[s] * (explicit[s][i] + implicit[s][i]);
        }
        v[i] += h * acc;
    }
    4
}
