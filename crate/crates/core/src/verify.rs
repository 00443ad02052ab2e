//! Empirical checks of the two-sided bounds against direct integration, the spectral-gap
//! bracket, and positivity preservation of the weighted difference system.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bounds::{envelopes, DecayRates};
use crate::error::{Error, Result};
use crate::model::ChainModel;
use crate::ode::{checkpoints, solve_p, solve_x, SolverOptions};
use crate::reduction::{p_to_z, reduce};
use crate::system::TimeMatrix;
use crate::weighting::{
    check_condition_ii, weighted_norm, AlphaProfile, ConditionIiReport, WeightMatrix,
};

/// Default relative slack on top of the composed numerical tolerances.
pub const BASE_VERIFY_TOL: f64 = 1e-6;
/// Threshold for the initial-ordering condition `D (z*(0) − z**(0)) ≥ 0`.
pub const ORDERING_TOL: f64 = 1e-14;
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const BRACKET_TOL: f64 = 1e-8;

/// Tolerance bookkeeping for bound checks:
///
/// `relative = base + 10 · (rtol + qtol + ε)`, applied multiplicatively to the envelopes, and
/// `absolute = 10 · ‖D‖₁ · (rtol + S · atol)`: each solve carries an error of about
/// `rtol · |z| + atol` per entry, which does not shrink with the difference being measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyTolerance {
    pub base: f64,
    pub rtol: f64,
    pub atol: f64,
    pub qtol: f64,
}

impl VerifyTolerance {
    pub fn new(solver: &SolverOptions, qtol: f64) -> Self {
        Self { base: BASE_VERIFY_TOL, rtol: solver.rtol, atol: solver.atol, qtol }
    }

    pub fn relative(&self) -> f64 {
        self.base + 10.0 * (self.rtol + self.qtol + f64::EPSILON)
    }

    pub fn absolute(&self, weights: &WeightMatrix) -> f64 {
        let d_norm = weights.matrix().column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
        10.0 * d_norm * (self.rtol + weights.dim() as f64 * self.atol)
    }
}

impl fmt::Display for VerifyTolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tol_rel = base {:e} + 10*(rtol {:e} + qtol {:e} + eps) = {:e}; tol_abs = 10*||D||_1*(rtol + S*atol) (atol {:e})",
            self.base,
            self.rtol,
            self.qtol,
            self.relative(),
            self.atol
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichConfig {
    pub t_end: f64,
    pub checkpoints: usize,
    pub solver: SolverOptions,
    pub qtol: f64,
    pub base_tol: f64,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        Self {
            t_end: 2.0,
            checkpoints: 40,
            solver: SolverOptions::default(),
            qtol: 1e-10,
            base_tol: BASE_VERIFY_TOL,
        }
    }
}

impl SandwichConfig {
    pub fn tolerance(&self) -> VerifyTolerance {
        VerifyTolerance { base: self.base_tol, ..VerifyTolerance::new(&self.solver, self.qtol) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichRecord {
    pub t: f64,
    /// `‖z*(t) − z**(t)‖_{1D}`
    pub measured: f64,
    /// `U(t) · m0`
    pub upper: f64,
    /// `L(t) · m0`
    pub lower: f64,
    /// Allowed upper value minus measured; negative means a violation.
    pub margin_upper: f64,
    /// Measured minus allowed lower value; negative means a violation when the lower bound
    /// applies.
    pub margin_lower: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundViolation {
    pub t: f64,
    pub side: BoundSide,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub records: Vec<SandwichRecord>,
    /// Initial D-norm `m0`.
    pub initial_norm: f64,
    pub lower_applicable: bool,
    pub condition_ii: ConditionIiReport,
    pub violations: Vec<BoundViolation>,
    pub tolerance: VerifyTolerance,
    /// Worst `|Σp − 1|` and smallest probability over both trajectories.
    pub max_simplex_drift: f64,
    pub min_probability: f64,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest `|measured/upper − 1|`, used to judge sharpness.
    pub fn max_upper_ratio_deviation(&self) -> f64 {
        self.records
            .iter()
            .filter(|r| r.upper > 0.0)
            .map(|r| (r.measured / r.upper - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn upper_violations(&self) -> usize {
        self.violations.iter().filter(|v| v.side == BoundSide::Upper).count()
    }

    pub fn lower_violations(&self) -> usize {
        self.violations.iter().filter(|v| v.side == BoundSide::Lower).count()
    }
}

/// Integrates the chain from two initial distributions and compares the weighted distance
/// with the envelopes at `cfg.checkpoints` equispaced times in `(0, t_end]`.
pub fn run_sandwich(
    model: &ChainModel,
    weights: &WeightMatrix,
    p0_a: &DVector<f64>,
    p0_b: &DVector<f64>,
    cfg: &SandwichConfig,
) -> Result<SandwichReport> {
    let profile = AlphaProfile::for_model(model, weights)?;
    let condition_ii = check_condition_ii(profile.generator(), cfg.t_end.max(f64::MIN_POSITIVE), 200)?;
    let grid = checkpoints(cfg.t_end, cfg.checkpoints);

    let za0 = p_to_z(p0_a)?;
    let zb0 = p_to_z(p0_b)?;
    let x0 = weights.apply(&(&za0 - &zb0))?;
    let lower_applicable = x0.iter().all(|&v| v >= -ORDERING_TOL);
    let initial_norm = x0.lp_norm(1);

    let ta = solve_p(model, p0_a, cfg.t_end, &grid, &cfg.solver)?;
    let tb = solve_p(model, p0_b, cfg.t_end, &grid, &cfg.solver)?;
    let env = envelopes(&profile, cfg.qtol)?.sample(&grid)?;

    let tolerance = cfg.tolerance();
    let rel = tolerance.relative();
    let abs = tolerance.absolute(weights);
    let mut records = Vec::with_capacity(grid.len());
    let mut violations = Vec::new();
    for ((pa, pb), row) in ta.states.iter().zip(&tb.states).zip(&env) {
        let dz = p_to_z_unchecked(pa) - p_to_z_unchecked(pb);
        let measured = weighted_norm(&dz, weights)?;
        let upper = row.upper * initial_norm;
        let lower = row.lower * initial_norm;
        let margin_upper = upper * (1.0 + rel) + abs - measured;
        let margin_lower = measured - (lower * (1.0 - rel) - abs);
        if margin_upper < 0.0 {
            violations.push(BoundViolation { t: row.t, side: BoundSide::Upper, margin: margin_upper });
        }
        if lower_applicable && margin_lower < 0.0 {
            violations.push(BoundViolation { t: row.t, side: BoundSide::Lower, margin: margin_lower });
        }
        records.push(SandwichRecord { t: row.t, measured, upper, lower, margin_upper, margin_lower });
    }

    Ok(SandwichReport {
        records,
        initial_norm,
        lower_applicable,
        condition_ii,
        violations,
        tolerance,
        max_simplex_drift: ta.stats.max_simplex_drift.max(tb.stats.max_simplex_drift),
        min_probability: ta.stats.min_entry.min(tb.stats.min_entry),
    })
}

/// Runs independent sandwiches in parallel; results keep the input order.
pub fn run_sandwich_batch(
    model: &ChainModel,
    weights: &WeightMatrix,
    pairs: &[(DVector<f64>, DVector<f64>)],
    cfg: &SandwichConfig,
) -> Vec<Result<SandwichReport>> {
    pairs.par_iter().map(|(a, b)| run_sandwich(model, weights, a, b, cfg)).collect()
}

fn p_to_z_unchecked(p: &DVector<f64>) -> DVector<f64> {
    p.rows(1, p.len() - 1).into_owned()
}

/// Spectral gap of a constant generator: the smallest real part among eigenvalues of `−B`.
/// Independent of the weighting machinery.
pub fn spectral_gap_oracle(b: &DMatrix<f64>) -> Result<f64> {
    let schur = nalgebra::Schur::try_new(b.clone(), 1e-15, 100_000).ok_or(Error::EigenNonConvergence)?;
    let eig = schur.complex_eigenvalues();
    Ok(eig.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBracket {
    pub beta_star: f64,
    pub beta_lower: f64,
    pub gap: f64,
}

impl GapBracket {
    /// `gap − β*`
    pub fn lower_margin(&self) -> f64 {
        self.gap - self.beta_star
    }

    /// `β₊ − gap`
    pub fn upper_margin(&self) -> f64 {
        self.beta_lower - self.gap
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.lower_margin() >= -tol && self.upper_margin() >= -tol
    }
}

impl fmt::Display for GapBracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "beta* = {:.9}, gap = {:.9}, beta+ = {:.9}; margins {:.3e} / {:.3e}: {}",
            self.beta_star,
            self.gap,
            self.beta_lower,
            self.lower_margin(),
            self.upper_margin(),
            if self.holds(BRACKET_TOL) { "bracket holds" } else { "BRACKET VIOLATED" }
        )
    }
}

/// Samples every rate on `[0, 10]` and fails unless all are constant.
pub fn check_homogeneous(model: &ChainModel) -> Result<()> {
    for (label, r) in model.labeled_rates() {
        let v0 = r.eval(0.0)?;
        for i in 1..=50 {
            let t = 0.2 * i as f64;
            let v = r.eval(t)?;
            if v != v0 {
                return Err(Error::NotHomogeneous(format!("{label} changes from {v0} to {v} at t = {t}")));
            }
        }
    }
    Ok(())
}

/// `β* ≤ gap ≤ β₊` for a time-homogeneous model with admissible weights.
pub fn spectral_gap_bracket(model: &ChainModel, weights: &WeightMatrix) -> Result<GapBracket> {
    check_homogeneous(model)?;
    let profile = AlphaProfile::for_model(model, weights)?;
    let cond = check_condition_ii(profile.generator(), 1.0, 1)?;
    if !cond.passed {
        return Err(cond.into_error());
    }
    let sample = profile.eval(0.0)?;
    let gap = spectral_gap_oracle(&reduce(model).b(0.0)?)?;
    Ok(GapBracket { beta_star: sample.beta_star(), beta_lower: sample.beta_lower(), gap })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityReport {
    pub min_entry: f64,
    pub at_t: f64,
    pub passed: bool,
}

/// Integrates `dx/dt = H(t) x` from `x0 ≥ 0` and reports the most negative entry seen on a
/// fine output grid.
pub fn positivity_check(
    h: &impl TimeMatrix,
    x0: &DVector<f64>,
    t_end: f64,
    solver: &SolverOptions,
) -> Result<PositivityReport> {
    if x0.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("positivity check needs x0 >= 0".into()));
    }
    let grid = checkpoints(t_end, 400);
    let tr = solve_x(h, x0, t_end, &grid, solver)?;
    let (mut min_entry, mut at_t) = (x0.min(), 0.0);
    for (t, x) in tr.iter() {
        let m = x.min();
        if m < min_entry {
            min_entry = m;
            at_t = t;
        }
    }
    Ok(PositivityReport { min_entry, at_t, passed: min_entry >= -POSITIVITY_TOL })
}

/// Evaluates `β*` and `β₊` on a grid: the largest gap `β₊ − β*` decides whether a sandwich
/// is expected to be sharp.
pub fn max_rate_spread<R: DecayRates + ?Sized>(rates: &R, grid: &[f64]) -> Result<f64> {
    let mut spread: f64 = 0.0;
    for &t in grid {
        spread = spread.max(rates.beta_lower(t)? - rates.beta_star(t)?);
    }
    Ok(spread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Transition;
    use crate::rate::RateExpr;
    use crate::system::ConstMatrix;
    use crate::weighting::{make_h, WeightShape};

    fn c(x: f64) -> RateExpr {
        RateExpr::constant(x)
    }

    fn delta(n: usize, k: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        v
    }

    #[test]
    fn identical_initial_conditions() {
        let m = ChainModel::bdpc(3, vec![c(1.0); 3], vec![c(2.0); 3], vec![c(0.5); 3]).unwrap();
        let w = WeightMatrix::uniform(WeightShape::CumulativeUpper, 3);
        let p = DVector::from_vec(vec![0.25; 4]);
        let rep = run_sandwich(&m, &w, &p, &p, &SandwichConfig::default()).unwrap();
        assert!(rep.passed());
        assert!(rep.records.iter().all(|r| r.measured == 0.0));
    }

    #[test]
    fn constant_bd_gap_closed_form() {
        let (a, b, s) = (1.0, 2.0, 5usize);
        let m = ChainModel::bdpc(s, vec![c(a); s], vec![c(b); s], vec![c(0.0); s]).unwrap();
        let gap = spectral_gap_oracle(&reduce(&m).b(0.0).unwrap()).unwrap();
        let exact = a + b - 2.0 * (a * b as f64).sqrt() * (std::f64::consts::PI / (s as f64 + 1.0)).cos();
        assert!((gap - exact).abs() < 1e-12);
        assert!((gap - (3.0 - 6f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn bracket_requires_homogeneity() {
        let m = ChainModel::bdpc(1, vec![RateExpr::time() + 1.0], vec![c(1.0)], vec![c(0.0)]).unwrap();
        let w = WeightMatrix::uniform(WeightShape::CumulativeUpper, 1);
        assert!(matches!(spectral_gap_bracket(&m, &w), Err(Error::NotHomogeneous(_))));
    }

    #[test]
    fn bracket_refuses_failed_condition() {
        let m = ChainModel::szk(2, vec![c(1.0), c(2.0)], vec![c(1.0), c(0.5)]).unwrap();
        let w = WeightMatrix::uniform(WeightShape::CumulativeUpper, 2);
        assert!(matches!(spectral_gap_bracket(&m, &w), Err(Error::ConditionFailed { .. })));
    }

    #[test]
    fn positivity_cases() {
        let o = SolverOptions::default();
        let h = ConstMatrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let rep = positivity_check(&h, &delta(2, 0), 1.0, &o).unwrap();
        assert!(rep.passed);

        let h = ConstMatrix(DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, -1.0, -1.0]));
        let rep = positivity_check(&h, &delta(2, 0), 1.0, &o).unwrap();
        assert!(!rep.passed);
        assert!(rep.min_entry < -0.1);

        let m = ChainModel::absorbing(
            3,
            vec![
                Transition::new(1, 0, 1.0),
                Transition::new(1, 2, 2.0),
                Transition::new(2, 1, 1.0),
                Transition::new(3, 2, 4.0),
                Transition::new(2, 3, 0.5),
            ],
        )
        .unwrap();
        let w = WeightMatrix::new(WeightShape::Diagonal, vec![1.0, 3.0, 0.2]).unwrap();
        let h = make_h(reduce(&m), &w).unwrap();
        assert!(positivity_check(&h, &delta(3, 0), 3.0, &o).unwrap().passed);
        assert!(positivity_check(&h, &-delta(3, 0), 3.0, &o).is_err());
    }

    #[test]
    fn tolerance_composition() {
        let t = VerifyTolerance::new(&SolverOptions::new(1e-9, 1e-12), 1e-10);
        assert!((t.relative() - (1e-6 + 10.0 * (1e-9 + 1e-10 + f64::EPSILON))).abs() < 1e-20);
        let w = WeightMatrix::uniform(WeightShape::CumulativeUpper, 4);
        assert!((t.absolute(&w) - 10.0 * 4.0 * (1e-9 + 4.0 * 1e-12)).abs() < 1e-20);
    }
}
