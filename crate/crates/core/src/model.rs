//! Chain structures and the transposed intensity matrix `A(t)`.
//!
//! States are `0..=S`. All rate tables use the usual 1-based indices in labels and reports
//! (`lambda_0`, `mu_1`, ...), while the storage is plain `Vec`s:
//!
//! | kind      | table    | `vec[i]` holds |
//! |-----------|----------|----------------|
//! | BDPC      | `lambda` | `λ_i`, i = 0..S−1 |
//! | BDPC      | `mu`     | `μ_{i+1}`      |
//! | BDPC      | `xi`     | `ξ_{i+1}`      |
//! | SZK       | `lambda` | `λ_{i+1}` (batch size i+1) |
//! | SZK       | `mu`     | `μ_{i+1}`      |

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rate::{normalize_breakpoints, RateExpr};

pub const DEFAULT_VALIDATION_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Birth-death process with catastrophes (jumps to state 0).
    Bdpc,
    /// State-independent batch arrivals and group services.
    Szk,
    /// Absorbing at state 0.
    Absorbing,
    General,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Bdpc => "bdpc",
            ModelKind::Szk => "szk",
            ModelKind::Absorbing => "absorbing",
            ModelKind::General => "general",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Intensity of the jump `from → to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: RateExpr,
}

impl Transition {
    pub fn new(from: usize, to: usize, rate: impl Into<RateExpr>) -> Self {
        Self { from, to, rate: rate.into() }
    }
}

#[derive(Debug, Clone)]
enum Rates {
    Bdpc { lambda: Vec<RateExpr>, mu: Vec<RateExpr>, xi: Vec<RateExpr> },
    Szk { lambda: Vec<RateExpr>, mu: Vec<RateExpr> },
    Sparse(Vec<Transition>),
}

#[derive(Debug, Clone)]
pub struct ChainModel {
    s: usize,
    kind: ModelKind,
    rates: Rates,
}

fn check_len(name: &str, v: &[RateExpr], s: usize) -> Result<()> {
    if v.len() != s {
        return Err(Error::Dimension(format!("{name} has {} entries, expected S = {s}", v.len())));
    }
    Ok(())
}

fn check_s(s: usize) -> Result<()> {
    if s == 0 {
        return Err(Error::Model("S must be at least 1".into()));
    }
    Ok(())
}

impl ChainModel {
    /// Birth-death-catastrophe process. `lambda` holds `λ_0..λ_{S−1}`, `mu` and `xi` hold
    /// `μ_1..μ_S` and `ξ_1..ξ_S`.
    pub fn bdpc(s: usize, lambda: Vec<RateExpr>, mu: Vec<RateExpr>, xi: Vec<RateExpr>) -> Result<Self> {
        check_s(s)?;
        check_len("lambda", &lambda, s)?;
        check_len("mu", &mu, s)?;
        check_len("xi", &xi, s)?;
        Ok(Self { s, kind: ModelKind::Bdpc, rates: Rates::Bdpc { lambda, mu, xi } })
    }

    /// Batch-arrival / group-service chain: `q_{i,i+k} = λ_k`, `q_{i,i−k} = μ_k`.
    pub fn szk(s: usize, lambda: Vec<RateExpr>, mu: Vec<RateExpr>) -> Result<Self> {
        check_s(s)?;
        check_len("lambda", &lambda, s)?;
        check_len("mu", &mu, s)?;
        Ok(Self { s, kind: ModelKind::Szk, rates: Rates::Szk { lambda, mu } })
    }

    /// Chain absorbed at 0: no transition may leave state 0.
    pub fn absorbing(s: usize, q: Vec<Transition>) -> Result<Self> {
        check_s(s)?;
        check_transitions(s, &q)?;
        if let Some(tr) = q.iter().find(|tr| tr.from == 0) {
            return Err(Error::Model(format!(
                "absorbing chain cannot have a transition out of state 0 (0 -> {})",
                tr.to
            )));
        }
        Ok(Self { s, kind: ModelKind::Absorbing, rates: Rates::Sparse(q) })
    }

    pub fn general(s: usize, q: Vec<Transition>) -> Result<Self> {
        check_s(s)?;
        check_transitions(s, &q)?;
        Ok(Self { s, kind: ModelKind::General, rates: Rates::Sparse(q) })
    }

    /// Largest state index `S`.
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n_states(&self) -> usize {
        self.s + 1
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// BDPC rate tables `(λ, μ, ξ)`, if this is a BDPC model.
    pub fn bdpc_rates(&self) -> Option<(&[RateExpr], &[RateExpr], &[RateExpr])> {
        match &self.rates {
            Rates::Bdpc { lambda, mu, xi } => Some((lambda, mu, xi)),
            _ => None,
        }
    }

    /// Every rate expression with its report label.
    pub fn labeled_rates(&self) -> Vec<(String, &RateExpr)> {
        match &self.rates {
            Rates::Bdpc { lambda, mu, xi } => {
                let mut out: Vec<_> =
                    lambda.iter().enumerate().map(|(k, r)| (format!("lambda_{k}"), r)).collect();
                out.extend(mu.iter().enumerate().map(|(k, r)| (format!("mu_{}", k + 1), r)));
                out.extend(xi.iter().enumerate().map(|(k, r)| (format!("xi_{}", k + 1), r)));
                out
            }
            Rates::Szk { lambda, mu } => {
                let mut out: Vec<_> = lambda
                    .iter()
                    .enumerate()
                    .map(|(k, r)| (format!("lambda_{}", k + 1), r))
                    .collect();
                out.extend(mu.iter().enumerate().map(|(k, r)| (format!("mu_{}", k + 1), r)));
                out
            }
            Rates::Sparse(q) => {
                q.iter().map(|tr| (format!("q_{},{}", tr.from, tr.to), &tr.rate)).collect()
            }
        }
    }

    /// Union of all rate breakpoints (positive, sorted, unique).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> =
            self.labeled_rates().into_iter().flat_map(|(_, r)| r.breakpoints()).collect();
        normalize_breakpoints(&mut out);
        out
    }

    /// True when no rate expression depends on `t`.
    pub fn is_time_invariant(&self) -> bool {
        self.labeled_rates().iter().all(|(_, r)| r.is_time_invariant())
    }

    /// Evaluated jump intensities `(from, to, q)` at `t`, zero entries omitted.
    pub fn transitions_at(&self, t: f64) -> Result<Vec<(usize, usize, f64)>> {
        let s = self.s;
        let mut out = Vec::new();
        match &self.rates {
            Rates::Bdpc { lambda, mu, xi } => {
                for i in 0..s {
                    out.push((i, i + 1, lambda[i].eval(t)?));
                }
                for i in 1..=s {
                    out.push((i, i - 1, mu[i - 1].eval(t)?));
                    out.push((i, 0, xi[i - 1].eval(t)?));
                }
            }
            Rates::Szk { lambda, mu } => {
                let lam: Vec<f64> = lambda.iter().map(|r| r.eval(t)).collect::<Result<_>>()?;
                let m: Vec<f64> = mu.iter().map(|r| r.eval(t)).collect::<Result<_>>()?;
                for i in 0..=s {
                    for k in 1..=s {
                        if i + k <= s {
                            out.push((i, i + k, lam[k - 1]));
                        }
                        if k <= i {
                            out.push((i, i - k, m[k - 1]));
                        }
                    }
                }
            }
            Rates::Sparse(q) => {
                for tr in q {
                    out.push((tr.from, tr.to, tr.rate.eval(t)?));
                }
            }
        }
        out.retain(|&(_, _, v)| v != 0.0);
        Ok(out)
    }

    /// The transposed intensity matrix `A(t)`: `a_ij = q_ji` for `i ≠ j` and zero column
    /// sums. Fails if any intensity is negative at `t`.
    pub fn eval_a(&self, t: f64) -> Result<DMatrix<f64>> {
        let n = self.n_states();
        let mut a = DMatrix::zeros(n, n);
        for (from, to, q) in self.transitions_at(t)? {
            if q < 0.0 {
                return Err(Error::Model(format!(
                    "negative intensity {q} for transition {from} -> {to} at t = {t}"
                )));
            }
            a[(to, from)] += q;
        }
        for j in 0..n {
            let out: f64 = (0..n).filter(|&i| i != j).map(|i| a[(i, j)]).sum();
            a[(j, j)] = -out;
        }
        Ok(a)
    }

    /// Samples the model on an equispaced grid over `[0, horizon]` and reports every
    /// violated invariant (nonnegativity, SZK monotonicity, absorption at 0).
    pub fn validate(&self, horizon: f64, samples: usize) -> Result<ValidationReport> {
        if !(horizon > 0.0) || samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "validation needs horizon > 0 and at least 2 samples (got {horizon}, {samples})"
            )));
        }
        let grid: Vec<f64> =
            (0..samples).map(|i| horizon * i as f64 / (samples - 1) as f64).collect();
        let mut report = ValidationReport { kind: self.kind, horizon, samples, ..Default::default() };

        for (label, rate) in self.labeled_rates() {
            let mut worst: Option<(f64, f64)> = None;
            for &t in &grid {
                match rate.eval(t) {
                    Ok(v) if v < 0.0 => {
                        if worst.map_or(true, |(_, w)| v < w) {
                            worst = Some((t, v));
                        }
                    }
                    Ok(_) => {}
                    Err(e) => {
                        report.violations.push(Violation::Evaluation {
                            rate: label.clone(),
                            t,
                            message: e.to_string(),
                        });
                        break;
                    }
                }
            }
            if let Some((t, value)) = worst {
                report.violations.push(Violation::Negative { rate: label, t, value });
            }
        }

        if let Rates::Szk { lambda, mu } = &self.rates {
            for (family, table) in [("lambda", lambda), ("mu", mu)] {
                for k in 1..self.s {
                    let mut worst: Option<(f64, f64)> = None;
                    for &t in &grid {
                        let (Ok(lo), Ok(hi)) = (table[k - 1].eval(t), table[k].eval(t)) else {
                            continue;
                        };
                        let excess = hi - lo;
                        if excess > 0.0 && worst.map_or(true, |(_, w)| excess > w) {
                            worst = Some((t, excess));
                        }
                    }
                    if let Some((t, excess)) = worst {
                        report.violations.push(Violation::Monotonicity {
                            family: family.to_string(),
                            k,
                            t,
                            excess,
                        });
                    }
                }
            }
            report.checks.push(("szk-monotone".into(), report.violations.iter().all(|v| !matches!(v, Violation::Monotonicity { .. }))));
        }

        if self.kind == ModelKind::Absorbing {
            let row_zero = match &self.rates {
                Rates::Sparse(q) => q.iter().all(|tr| tr.from != 0),
                _ => true,
            };
            report.checks.push(("absorbing-row-zero".into(), row_zero));
            if !row_zero {
                report.violations.push(Violation::Structure("transition out of state 0".into()));
            }
        }
        report.checks.insert(
            0,
            (
                "nonnegative".into(),
                !report.violations.iter().any(|v| matches!(v, Violation::Negative { .. })),
            ),
        );
        Ok(report)
    }

    /// Runs [`validate`](Self::validate) and fails on any violation.
    pub fn into_validated(self, horizon: f64, samples: usize) -> Result<Self> {
        let report = self.validate(horizon, samples)?;
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::Validation(report))
        }
    }
}

fn check_transitions(s: usize, q: &[Transition]) -> Result<()> {
    for tr in q {
        if tr.from > s || tr.to > s {
            return Err(Error::Dimension(format!(
                "transition {} -> {} outside states 0..={s}",
                tr.from, tr.to
            )));
        }
        if tr.from == tr.to {
            return Err(Error::Model(format!("self-transition {} -> {}", tr.from, tr.to)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Most negative sampled value of a rate.
    Negative { rate: String, t: f64, value: f64 },
    /// Largest sampled increase `rate_{k+1} − rate_k` of an SZK family.
    Monotonicity { family: String, k: usize, t: f64, excess: f64 },
    Evaluation { rate: String, t: f64, message: String },
    Structure(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Negative { rate, t, value } => {
                write!(f, "negativity: {rate} = {value} at t = {t}")
            }
            Violation::Monotonicity { family, k, t, excess } => write!(
                f,
                "monotonicity: {family}_{} exceeds {family}_{k} by {excess} at k = {k}, t = {t}",
                k + 1
            ),
            Violation::Evaluation { rate, t, message } => {
                write!(f, "evaluation: {rate} at t = {t}: {message}")
            }
            Violation::Structure(msg) => write!(f, "structure: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub kind: ModelKind,
    pub horizon: f64,
    pub samples: usize,
    pub violations: Vec<Violation>,
    /// Named invariant checks and whether they held.
    pub checks: Vec<(String, bool)>,
}

impl Default for ValidationReport {
    fn default() -> Self {
        Self { kind: ModelKind::General, horizon: 0.0, samples: 0, violations: vec![], checks: vec![] }
    }
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "kind = {}, horizon = {}, samples = {}",
            self.kind, self.horizon, self.samples
        )?;
        for (name, ok) in &self.checks {
            writeln!(f, "check {name}: {}", if *ok { "PASS" } else { "FAIL" })?;
        }
        if self.violations.is_empty() {
            writeln!(f, "no violations")?;
        }
        for v in &self.violations {
            writeln!(f, "violation {v}")?;
        }
        Ok(())
    }
}
