//! Weight matrices `D`, the conjugated generator `H(t) = D B(t) D⁻¹`, the two admissibility
//! conditions on `D`, and the column-sum decay rates `α_k(t)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ChainModel, ModelKind};
use crate::reduction::{reduce, ReducedSystem};
use crate::system::{min_off_diagonal, TimeMatrix};

/// Tolerance on off-diagonal entries of `H` when testing essential nonnegativity.
pub const CONDITION_II_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightShape {
    /// Row `i` holds `d_i` in every column `j ≥ i`.
    CumulativeUpper,
    Diagonal,
}

impl WeightShape {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightShape::CumulativeUpper => "cumulative-upper",
            WeightShape::Diagonal => "diagonal",
        }
    }
}

impl fmt::Display for WeightShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cumulative-upper" => Ok(WeightShape::CumulativeUpper),
            "diagonal" => Ok(WeightShape::Diagonal),
            _ => Err(Error::Config(format!(
                "unknown weight shape `{s}` (expected cumulative-upper or diagonal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    shape: WeightShape,
    d: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(shape: WeightShape, d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidArgument("weights must be non-empty".into()));
        }
        if let Some((i, &v)) = d.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("weight d_{} = {v} is not positive", i + 1)));
        }
        Ok(Self { shape, d })
    }

    pub fn uniform(shape: WeightShape, s: usize) -> Self {
        Self { shape, d: vec![1.0; s] }
    }

    /// `d_k = ratio^{k−1}`.
    pub fn geometric(shape: WeightShape, s: usize, ratio: f64) -> Result<Self> {
        Self::new(shape, (0..s).map(|k| ratio.powi(k as i32)).collect())
    }

    pub fn shape(&self) -> WeightShape {
        self.shape
    }

    pub fn weights(&self) -> &[f64] {
        &self.d
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.shape, self.d.iter().map(|v| v * c).collect())
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        match self.shape {
            WeightShape::Diagonal => DMatrix::from_diagonal(&DVector::from_column_slice(&self.d)),
            WeightShape::CumulativeUpper => {
                DMatrix::from_fn(n, n, |i, j| if j >= i { self.d[i] } else { 0.0 })
            }
        }
    }

    /// Closed-form inverse. For the cumulative shape it is upper bidiagonal with `1/d_j` on
    /// the diagonal and `−1/d_j` at `(j−1, j)`.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        match self.shape {
            WeightShape::Diagonal => {
                DMatrix::from_diagonal(&DVector::from_iterator(n, self.d.iter().map(|v| 1.0 / v)))
            }
            WeightShape::CumulativeUpper => DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    1.0 / self.d[j]
                } else if j == i + 1 {
                    -1.0 / self.d[j]
                } else {
                    0.0
                }
            }),
        }
    }

    /// `D z`, computed with tail sums for the cumulative shape.
    pub fn apply(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(z.len())?;
        let n = z.len();
        Ok(match self.shape {
            WeightShape::Diagonal => DVector::from_fn(n, |i, _| self.d[i] * z[i]),
            WeightShape::CumulativeUpper => {
                let mut out = DVector::zeros(n);
                let mut tail = 0.0;
                for i in (0..n).rev() {
                    tail += z[i];
                    out[i] = self.d[i] * tail;
                }
                out
            }
        })
    }

    /// Largest `d` with `‖D z‖ ≥ d ‖z‖` for all `z`: `1 / ‖D⁻¹‖` in the l1-induced norm.
    pub fn norm_constant(&self) -> f64 {
        let inv = self.inverse();
        let col_max = (0..inv.ncols())
            .map(|j| inv.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        1.0 / col_max
    }

    /// `D B D⁻¹` using the structure of `D` (O(S²)); the reference route is the dense triple
    /// product in [`WeightedGenerator`].
    pub fn conjugate(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(b.nrows())?;
        let n = b.nrows();
        let d = &self.d;
        Ok(match self.shape {
            WeightShape::Diagonal => DMatrix::from_fn(n, n, |i, j| d[i] * b[(i, j)] / d[j]),
            WeightShape::CumulativeUpper => {
                // U B: row i is the sum of rows i..n of B
                let mut ub = b.clone();
                for i in (0..n.saturating_sub(1)).rev() {
                    for j in 0..n {
                        ub[(i, j)] += ub[(i + 1, j)];
                    }
                }
                // (U B) U⁻¹: column j minus column j−1
                let mut h = ub.clone();
                for j in 1..n {
                    for i in 0..n {
                        h[(i, j)] = ub[(i, j)] - ub[(i, j - 1)];
                    }
                }
                DMatrix::from_fn(n, n, |i, j| d[i] * h[(i, j)] / d[j])
            }
        })
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Dimension(format!(
                "weights have length {}, system has dimension {n}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// `‖z‖_{1D} = ‖D z‖₁`.
pub fn weighted_norm(z: &DVector<f64>, d: &WeightMatrix) -> Result<f64> {
    Ok(d.apply(z)?.lp_norm(1))
}

/// `H(t) = D B(t) D⁻¹`, formed by an explicit dense triple product.
#[derive(Debug, Clone)]
pub struct WeightedGenerator<'a> {
    reduced: ReducedSystem<'a>,
    weights: WeightMatrix,
    d: DMatrix<f64>,
    d_inv: DMatrix<f64>,
}

pub fn make_h<'a>(reduced: ReducedSystem<'a>, weights: &WeightMatrix) -> Result<WeightedGenerator<'a>> {
    weights.check_dim(reduced.dim())?;
    Ok(WeightedGenerator {
        reduced,
        weights: weights.clone(),
        d: weights.matrix(),
        d_inv: weights.inverse(),
    })
}

impl<'a> WeightedGenerator<'a> {
    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn reduced(&self) -> ReducedSystem<'a> {
        self.reduced
    }
}

impl TimeMatrix for WeightedGenerator<'_> {
    fn dim(&self) -> usize {
        self.reduced.dim()
    }

    fn at(&self, t: f64) -> Result<DMatrix<f64>> {
        Ok(&self.d * self.reduced.b(t)? * &self.d_inv)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.reduced.model().breakpoints()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionIiReport {
    /// Smallest sampled off-diagonal entry, with its time and 1-based position.
    pub worst: Option<(f64, f64, usize, usize)>,
    pub horizon: f64,
    pub samples: usize,
    pub passed: bool,
}

impl ConditionIiReport {
    pub fn min_off_diagonal(&self) -> f64 {
        self.worst.map_or(f64::INFINITY, |w| w.0)
    }

    pub fn into_error(self) -> Error {
        let (min_offdiag, t, i, j) = self.worst.unwrap_or((f64::INFINITY, 0.0, 0, 0));
        Error::ConditionFailed { min_offdiag, t, i, j }
    }
}

impl fmt::Display for ConditionIiReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        match self.worst {
            Some((v, t, i, j)) => write!(
                f,
                "condition (ii) {verdict}: min off-diagonal of H = {v:e} at t = {t}, entry ({i}, {j}); {} samples on [0, {}]",
                self.samples, self.horizon
            ),
            None => write!(f, "condition (ii) {verdict}: 1x1 system, no off-diagonal entries"),
        }
    }
}

/// Samples `H` on an equispaced grid over `[0, horizon]`; PASS iff every off-diagonal entry is
/// at least `−1e−12`.
pub fn check_condition_ii(h: &impl TimeMatrix, horizon: f64, samples: usize) -> Result<ConditionIiReport> {
    if !(horizon > 0.0) || samples < 1 {
        return Err(Error::InvalidArgument("condition (ii) check needs horizon > 0".into()));
    }
    let mut worst: Option<(f64, f64, usize, usize)> = None;
    for k in 0..samples {
        let t = if samples == 1 { 0.0 } else { horizon * k as f64 / (samples - 1) as f64 };
        if let Some((v, i, j)) = min_off_diagonal(&h.at(t)?) {
            if worst.map_or(true, |w| v < w.0) {
                worst = Some((v, t, i + 1, j + 1));
            }
        }
    }
    let passed = worst.map_or(true, |w| w.0 >= -CONDITION_II_TOL);
    Ok(ConditionIiReport { worst, horizon, samples, passed })
}

/// `α_k(t)` at one time. `alpha[c]` is the negative sum of column `c` of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSample {
    pub t: f64,
    pub alpha: Vec<f64>,
}

impl AlphaSample {
    /// `β*(t) = min_k α_k(t)`, the guaranteed decay rate.
    pub fn beta_star(&self) -> f64 {
        self.alpha.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `β₊(t) = max_k α_k(t)`, the rate of the lower envelope.
    pub fn beta_lower(&self) -> f64 {
        self.alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn h_star(&self) -> f64 {
        -self.beta_star()
    }

    pub fn h_lower(&self) -> f64 {
        -self.beta_lower()
    }
}

/// The weight shape each model kind is designed for: cumulative for BDPC and SZK, diagonal
/// otherwise.
pub fn default_shape(kind: ModelKind) -> WeightShape {
    match kind {
        ModelKind::Bdpc | ModelKind::Szk => WeightShape::CumulativeUpper,
        ModelKind::Absorbing | ModelKind::General => WeightShape::Diagonal,
    }
}

/// The first index of `α`: BDPC counts `α_0..α_{S−1}`, other kinds `α_1..α_S`.
pub fn alpha_first_index(kind: ModelKind) -> usize {
    match kind {
        ModelKind::Bdpc => 0,
        _ => 1,
    }
}

#[derive(Debug, Clone)]
pub struct AlphaProfile<'a> {
    h: WeightedGenerator<'a>,
}

pub fn alpha_profile<'a>(reduced: ReducedSystem<'a>, weights: &WeightMatrix) -> Result<AlphaProfile<'a>> {
    Ok(AlphaProfile { h: make_h(reduced, weights)? })
}

impl<'a> AlphaProfile<'a> {
    pub fn for_model(model: &'a ChainModel, weights: &WeightMatrix) -> Result<Self> {
        alpha_profile(reduce(model), weights)
    }

    pub fn generator(&self) -> &WeightedGenerator<'a> {
        &self.h
    }

    pub fn model(&self) -> &'a ChainModel {
        self.h.reduced.model()
    }

    pub fn first_index(&self) -> usize {
        alpha_first_index(self.model().kind())
    }

    pub fn eval(&self, t: f64) -> Result<AlphaSample> {
        let h = self.h.at(t)?;
        let alpha = (0..h.ncols()).map(|j| -h.column(j).sum()).collect();
        Ok(AlphaSample { t, alpha })
    }

    pub fn beta_star(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.beta_star())
    }

    pub fn beta_lower(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.beta_lower())
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.h.breakpoints()
    }
}

/// Closed-form column sums for the two model/shape pairs that admit one.
#[derive(Debug, Clone)]
pub struct ClosedFormAlpha<'a> {
    model: &'a ChainModel,
    weights: WeightMatrix,
}

/// Closed-form `α_k`:
///
/// * BDPC with cumulative weights, `k = 0..S−1` (column `k+1`):
///   `α_k = λ_k + μ_{k+1} + ξ_{k+1} − (d_{k+2}/d_{k+1}) λ_{k+1} − (d_k/d_{k+1}) μ_k
///          + (ξ_{k+1} − ξ_k) Σ_{i≤k} d_i/d_{k+1}`
///   with `λ_S = μ_0 = 0`. The last term vanishes for state-independent catastrophes.
/// * Absorbing with diagonal weights, `k = 1..S`:
///   `α_k = −a_kk − Σ_{i≠k, i≥1} (d_i/d_k) a_ik`.
pub fn alpha_closed_form<'a>(model: &'a ChainModel, weights: &WeightMatrix) -> Result<ClosedFormAlpha<'a>> {
    match (model.kind(), weights.shape()) {
        (ModelKind::Bdpc, WeightShape::CumulativeUpper)
        | (ModelKind::Absorbing, WeightShape::Diagonal) => {}
        (k, s) => return Err(Error::Unsupported(format!("no closed form for {k} with {s} weights"))),
    }
    weights.check_dim(model.s())?;
    Ok(ClosedFormAlpha { model, weights: weights.clone() })
}

impl ClosedFormAlpha<'_> {
    pub fn eval(&self, t: f64) -> Result<AlphaSample> {
        let s = self.model.s();
        let d = self.weights.weights();
        let alpha = match self.model.bdpc_rates() {
            Some((lambda, mu, xi)) => {
                let lam = |k: usize| if k < s { lambda[k].eval(t) } else { Ok(0.0) };
                let mu_ = |k: usize| if k >= 1 { mu[k - 1].eval(t) } else { Ok(0.0) };
                let xi_ = |k: usize| xi[k - 1].eval(t);
                // d_j for 1-based j
                let dw = |j: usize| d[j - 1];
                let mut out = Vec::with_capacity(s);
                let mut prefix = 0.0; // Σ_{i≤k} d_i
                for k in 0..s {
                    let mut a = lam(k)? + mu_(k + 1)? + xi_(k + 1)?;
                    if k + 1 < s {
                        a -= dw(k + 2) / dw(k + 1) * lam(k + 1)?;
                    }
                    if k >= 1 {
                        a -= dw(k) / dw(k + 1) * mu_(k)?;
                        a += (xi_(k + 1)? - xi_(k)?) * prefix / dw(k + 1);
                    }
                    prefix += dw(k + 1);
                    out.push(a);
                }
                out
            }
            None => {
                let a = self.model.eval_a(t)?;
                (1..=s)
                    .map(|k| {
                        let off: f64 =
                            (1..=s).filter(|&i| i != k).map(|i| d[i - 1] / d[k - 1] * a[(i, k)]).sum();
                        -a[(k, k)] - off
                    })
                    .collect()
            }
        };
        Ok(AlphaSample { t, alpha })
    }
}
