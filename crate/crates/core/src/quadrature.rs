//! Adaptive Simpson quadrature with interval bisection.

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_DEPTH: u32 = 40;
/// Depth cap for envelope integrals, whose integrands have min/max kinks.
pub const ENVELOPE_MAX_DEPTH: u32 = 48;

/// Panels are always bisected this many times before the error estimate is trusted, so that
/// periodic integrands sampled only at their zeros are not accepted on the first pass.
const MIN_DEPTH: u32 = 4;

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSimpson {
    tol: f64,
    max_depth: u32,
}

impl AdaptiveSimpson {
    pub fn new(tol: f64, max_depth: u32) -> Result<Self> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::InvalidArgument(format!("quadrature tolerance must be > 0, got {tol}")));
        }
        Ok(Self { tol, max_depth: max_depth.max(MIN_DEPTH) })
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Integrates `f` over `[a, b]`. Every breakpoint strictly inside `(a, b)` becomes a panel
    /// boundary and the absolute tolerance is shared between panels by length.
    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64, breakpoints: &[f64]) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        if !(a <= b) {
            return Err(Error::InvalidArgument(format!("bad integration range [{a}, {b}]")));
        }
        if a == b {
            return Ok(0.0);
        }
        let mut nodes = vec![a];
        nodes.extend(breakpoints.iter().copied().filter(|&s| s > a && s < b));
        nodes.push(b);
        let len = b - a;
        let mut total = 0.0;
        for w in nodes.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            // The right end of a panel that stops at a breakpoint is evaluated as a left limit.
            let hi_eval = if breakpoints.contains(&hi) { left_limit(hi) } else { hi };
            let tol = self.tol * (hi - lo) / len;
            total += self.panel(&mut f, lo, hi, hi_eval, tol)?;
        }
        Ok(total)
    }

    fn panel<F>(&self, f: &mut F, a: f64, b: f64, b_eval: f64, tol: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let fa = finite(f(a)?, a)?;
        let fb = finite(f(b_eval)?, b)?;
        let m = 0.5 * (a + b);
        let fm = finite(f(m)?, m)?;
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.recurse(f, a, b, fa, fm, fb, whole, tol, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F>(
        &self,
        f: &mut F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = finite(f(lm)?, lm)?;
        let frm = finite(f(rm)?, rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= self.max_depth {
            return Err(Error::QuadratureDepth { a, b, depth: self.max_depth });
        }
        Ok(self.recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
            + self.recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
    }
}

/// The largest float below `x`; used to sample a left-closed piece at its right end.
pub(crate) fn left_limit(x: f64) -> f64 {
    if x > 0.0 {
        f64::from_bits(x.to_bits() - 1)
    } else {
        x
    }
}

fn finite(v: f64, t: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { t, value: v })
    }
}
