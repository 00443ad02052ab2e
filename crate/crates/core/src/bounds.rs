//! Exponential bound envelopes `U(t) = exp(−∫β*)`, `L(t) = exp(−∫β₊)` and a finite-horizon
//! ergodicity diagnosis.

use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature::{AdaptiveSimpson, ENVELOPE_MAX_DEPTH};
use crate::rate::RateExpr;
use crate::weighting::{AlphaProfile, WeightMatrix};

/// Anything that provides the pair of decay rates `β*(t) ≤ β₊(t)`.
pub trait DecayRates: Sync {
    fn beta_star(&self, t: f64) -> Result<f64>;
    fn beta_lower(&self, t: f64) -> Result<f64>;
    /// Times where the rates may jump.
    fn breakpoints(&self) -> Vec<f64>;
}

impl DecayRates for AlphaProfile<'_> {
    fn beta_star(&self, t: f64) -> Result<f64> {
        AlphaProfile::beta_star(self, t)
    }

    fn beta_lower(&self, t: f64) -> Result<f64> {
        AlphaProfile::beta_lower(self, t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        AlphaProfile::breakpoints(self)
    }
}

/// Decay rates given directly as expressions.
#[derive(Debug, Clone)]
pub struct ExplicitRates {
    pub beta_star: RateExpr,
    pub beta_lower: RateExpr,
}

impl ExplicitRates {
    pub fn sharp(beta: RateExpr) -> Self {
        Self { beta_star: beta.clone(), beta_lower: beta }
    }
}

impl DecayRates for ExplicitRates {
    fn beta_star(&self, t: f64) -> Result<f64> {
        self.beta_star.eval(t)
    }

    fn beta_lower(&self, t: f64) -> Result<f64> {
        self.beta_lower.eval(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.beta_star.breakpoints();
        b.extend(self.beta_lower.breakpoints());
        crate::rate::normalize_breakpoints(&mut b);
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeRow {
    pub t: f64,
    pub beta_star: f64,
    pub beta_lower: f64,
    /// `exp(−∫_0^t β*)`
    pub upper: f64,
    /// `exp(−∫_0^t β₊)`
    pub lower: f64,
}

pub struct RateEnvelope<'r, R: DecayRates + ?Sized> {
    rates: &'r R,
    quad: AdaptiveSimpson,
    breakpoints: Vec<f64>,
}

pub fn envelopes<R: DecayRates + ?Sized>(rates: &R, tol: f64) -> Result<RateEnvelope<'_, R>> {
    Ok(RateEnvelope {
        rates,
        quad: AdaptiveSimpson::new(tol, ENVELOPE_MAX_DEPTH)?,
        breakpoints: rates.breakpoints(),
    })
}

impl<R: DecayRates + ?Sized> RateEnvelope<'_, R> {
    pub fn tol(&self) -> f64 {
        self.quad.tol()
    }

    pub fn integral_beta_star(&self, t0: f64, t1: f64) -> Result<f64> {
        check_range(t0, t1)?;
        self.quad.integrate(|t| self.rates.beta_star(t), t0, t1, &self.breakpoints)
    }

    pub fn integral_beta_lower(&self, t0: f64, t1: f64) -> Result<f64> {
        check_range(t0, t1)?;
        self.quad.integrate(|t| self.rates.beta_lower(t), t0, t1, &self.breakpoints)
    }

    /// `U(t)`.
    pub fn upper(&self, t: f64) -> Result<f64> {
        Ok((-self.integral_beta_star(0.0, t)?).exp())
    }

    /// `L(t)`.
    pub fn lower(&self, t: f64) -> Result<f64> {
        Ok((-self.integral_beta_lower(0.0, t)?).exp())
    }

    /// Envelope values on an increasing grid, integrating cumulatively between grid points.
    pub fn sample(&self, grid: &[f64]) -> Result<Vec<EnvelopeRow>> {
        if grid.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidArgument("envelope grid must be nondecreasing".into()));
        }
        let mut rows = Vec::with_capacity(grid.len());
        let (mut prev, mut int_star, mut int_lower) = (0.0, 0.0, 0.0);
        for &t in grid {
            int_star += self.integral_beta_star(prev, t)?;
            int_lower += self.integral_beta_lower(prev, t)?;
            prev = t;
            rows.push(EnvelopeRow {
                t,
                beta_star: self.rates.beta_star(t)?,
                beta_lower: self.rates.beta_lower(t)?,
                upper: (-int_star).exp(),
                lower: (-int_lower).exp(),
            });
        }
        Ok(rows)
    }
}

fn check_range(t0: f64, t1: f64) -> Result<()> {
    if !(0.0 <= t0 && t0 <= t1) {
        return Err(Error::InvalidArgument(format!("bad range [{t0}, {t1}]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgodicityVerdict {
    /// Positive time-average of `β*` over the horizon.
    WeaklyErgodicEvidence,
    NoEvidence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityReport {
    pub horizon: f64,
    pub integral: f64,
    pub average: f64,
    /// Average of `β*` over the second half of the horizon.
    pub tail_average: f64,
    pub verdict: ErgodicityVerdict,
    /// Set when the whole-horizon and tail averages disagree in sign, i.e. a longer horizon
    /// could change the verdict.
    pub horizon_dependent: bool,
}

impl fmt::Display for ErgodicityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.verdict {
            ErgodicityVerdict::WeaklyErgodicEvidence => "weakly-ergodic-evidence",
            ErgodicityVerdict::NoEvidence => "negative-evidence",
        };
        write!(
            f,
            "integral of beta* over [0, {}] = {:.12e}, average = {:.12e}, verdict: {verdict}{}; \
             divergence of the infinite-horizon integral cannot be decided from finite data",
            self.horizon,
            self.integral,
            self.average,
            if self.horizon_dependent { " (horizon-dependent)" } else { "" }
        )
    }
}

pub fn ergodicity_diagnosis<R: DecayRates + ?Sized>(rates: &R, horizon: f64, tol: f64) -> Result<ErgodicityReport> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let env = envelopes(rates, tol)?;
    let first = env.integral_beta_star(0.0, 0.5 * horizon)?;
    let second = env.integral_beta_star(0.5 * horizon, horizon)?;
    let integral = first + second;
    let average = integral / horizon;
    let tail_average = second / (0.5 * horizon);
    let verdict = if average > 0.0 {
        ErgodicityVerdict::WeaklyErgodicEvidence
    } else {
        ErgodicityVerdict::NoEvidence
    };
    Ok(ErgodicityReport {
        horizon,
        integral,
        average,
        tail_average,
        verdict,
        horizon_dependent: (average > 0.0) != (tail_average > 0.0),
    })
}

/// Converts a bound on `‖z* − z**‖_{1D}` into a bound on the l1 distance of the full
/// distributions: `‖p* − p**‖ ≤ 2‖z* − z**‖ ≤ (2/d) · bound`.
pub fn to_total_variation(bound: f64, weights: &WeightMatrix) -> Result<f64> {
    if !(bound >= 0.0) {
        return Err(Error::InvalidArgument(format!("bound must be >= 0, got {bound}")));
    }
    Ok(2.0 * bound / weights.norm_constant())
}
