//! Small systems with known behaviour, used to check the integrators in isolation.

use num_complex::Complex64;

use super::Semilinear;
use crate::error::Result;

type C = Complex64;

/// `v' = λ v + Σ a_k e^{i ω_k t}`, one mode.
///
/// The forcing part is also exactly integrable, so splitting schemes apply.
#[derive(Debug, Clone)]
pub struct ScalarForced {
    symbol: [C; 1],
    terms: Vec<(C, f64)>,
}

impl ScalarForced {
    pub fn new(lambda: C, terms: Vec<(C, f64)>) -> Self {
        Self {
            symbol: [lambda],
            terms,
        }
    }

    /// `v' = λ v + sin t`.
    pub fn sine(lambda: f64) -> Self {
        let half_i = C::new(0.0, -0.5);
        Self::new(C::new(lambda, 0.0), vec![(half_i, 1.0), (-half_i, -1.0)])
    }

    /// `v' = λ v + cos t`.
    pub fn cosine(lambda: f64) -> Self {
        Self::new(C::new(lambda, 0.0), vec![(C::new(0.5, 0.0), 1.0), (C::new(0.5, 0.0), -1.0)])
    }

    pub fn lambda(&self) -> C {
        self.symbol[0]
    }

    pub fn forcing(&self, t: f64) -> C {
        self.terms.iter().map(|(a, w)| a * C::new(0.0, w * t).exp()).sum()
    }

    fn antiderivative(&self, t: f64) -> C {
        self.terms
            .iter()
            .map(|(a, w)| {
                if *w == 0.0 {
                    a * t
                } else {
                    a * C::new(0.0, w * t).exp() / C::new(0.0, *w)
                }
            })
            .sum()
    }

    /// Closed-form solution through `(0, v0)`; requires `iω_k ≠ λ`.
    pub fn exact(&self, v0: C, t: f64) -> C {
        let l = self.lambda();
        let mut particular0 = C::new(0.0, 0.0);
        let mut particular = C::new(0.0, 0.0);
        for (a, w) in &self.terms {
            let d = C::new(0.0, *w) - l;
            particular0 += a / d;
            particular += a * C::new(0.0, w * t).exp() / d;
        }
        (l * t).exp() * (v0 - particular0) + particular
    }
}

impl Semilinear for ScalarForced {
    fn len(&self) -> usize {
        1
    }

    fn symbol(&self) -> &[C] {
        &self.symbol
    }

    fn nonlinear(&mut self, t: f64, _v: &[C], out: &mut [C]) {
        out[0] = self.forcing(t);
    }

    fn supports_splitting(&self) -> bool {
        true
    }

    fn nonlinear_flow(&mut self, t: f64, h: f64, v: &mut [C]) -> Result<()> {
        v[0] += self.antiderivative(t + h) - self.antiderivative(t);
        Ok(())
    }

    fn label(&self) -> String {
        "scalar".into()
    }
}

type NonlinearFn = Box<dyn FnMut(f64, &[C], &mut [C]) + Send>;
type FlowFn = Box<dyn FnMut(f64, f64, &mut [C]) + Send>;

/// Arbitrary diagonal `L` with a user-supplied nonlinear term.
pub struct FnSystem {
    symbol: Vec<C>,
    f: NonlinearFn,
    flow: Option<FlowFn>,
}

impl FnSystem {
    pub fn new(symbol: Vec<C>, f: impl FnMut(f64, &[C], &mut [C]) + Send + 'static) -> Self {
        Self {
            symbol,
            f: Box::new(f),
            flow: None,
        }
    }

    /// Supplies the exact flow of `v' = N(v, t)`, enabling splitting schemes.
    pub fn with_flow(mut self, flow: impl FnMut(f64, f64, &mut [C]) + Send + 'static) -> Self {
        self.flow = Some(Box::new(flow));
        self
    }

    /// `N ≡ 0`.
    pub fn linear(symbol: Vec<C>) -> Self {
        Self::new(symbol, |_, _, out| out.fill(C::new(0.0, 0.0)))
    }
}

impl std::fmt::Debug for FnSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnSystem").field("symbol", &self.symbol).finish()
    }
}

impl Semilinear for FnSystem {
    fn len(&self) -> usize {
        self.symbol.len()
    }

    fn symbol(&self) -> &[C] {
        &self.symbol
    }

    fn nonlinear(&mut self, t: f64, v: &[C], out: &mut [C]) {
        (self.f)(t, v, out)
    }

    fn supports_splitting(&self) -> bool {
        self.flow.is_some()
    }

    fn nonlinear_flow(&mut self, t: f64, h: f64, v: &mut [C]) -> Result<()> {
        match self.flow.as_mut() {
            Some(flow) => {
                flow(t, h, v);
                Ok(())
            }
            None => Err(crate::error::Error::UnsupportedScheme {
                scheme: "splitting".into(),
                equation: "system without exact nonlinear flow".into(),
            }),
        }
    }
}
