//! Elimination of `p_0 = 1 − Σ z_i`: the reduced affine system `dz/dt = B(t) z + f(t)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::ChainModel;
use crate::system::TimeMatrix;

/// Slack allowed on the probability constraints of `z`.
pub const Z_EPS: f64 = 1e-10;

/// `B(t)` and `f(t)` of a model. Evaluators only; nothing is precomputed.
#[derive(Debug, Clone, Copy)]
pub struct ReducedSystem<'a> {
    model: &'a ChainModel,
}

pub fn reduce(model: &ChainModel) -> ReducedSystem<'_> {
    ReducedSystem { model }
}

impl<'a> ReducedSystem<'a> {
    pub fn model(&self) -> &'a ChainModel {
        self.model
    }

    /// Dimension `S` of the reduced state.
    pub fn dim(&self) -> usize {
        self.model.s()
    }

    /// `b_ij = a_ij − a_i0` for `i, j ∈ 1..=S` (stored 0-based).
    pub fn b(&self, t: f64) -> Result<DMatrix<f64>> {
        Ok(b_from_a(&self.model.eval_a(t)?))
    }

    /// `f_i = a_i0`.
    pub fn f(&self, t: f64) -> Result<DVector<f64>> {
        let a = self.model.eval_a(t)?;
        Ok(f_from_a(&a))
    }

    pub fn b_and_f(&self, t: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let a = self.model.eval_a(t)?;
        Ok((b_from_a(&a), f_from_a(&a)))
    }
}

pub(crate) fn b_from_a(a: &DMatrix<f64>) -> DMatrix<f64> {
    let s = a.nrows() - 1;
    DMatrix::from_fn(s, s, |i, j| a[(i + 1, j + 1)] - a[(i + 1, 0)])
}

fn f_from_a(a: &DMatrix<f64>) -> DVector<f64> {
    let s = a.nrows() - 1;
    DVector::from_fn(s, |i, _| a[(i + 1, 0)])
}

impl TimeMatrix for ReducedSystem<'_> {
    fn dim(&self) -> usize {
        self.model.s()
    }

    fn at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.b(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.model.breakpoints()
    }
}

/// Drops `p_0`. `p` must be stochastic to within [`Z_EPS`].
pub fn p_to_z(p: &DVector<f64>) -> Result<DVector<f64>> {
    if p.len() < 2 {
        return Err(Error::Dimension("probability vector needs at least 2 states".into()));
    }
    if let Some((i, &v)) = p.iter().enumerate().find(|(_, &v)| !(v >= -Z_EPS)) {
        return Err(Error::InvalidArgument(format!("p_{i} = {v} is negative")));
    }
    let total = p.sum();
    if (total - 1.0).abs() > Z_EPS {
        return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
    }
    Ok(p.rows(1, p.len() - 1).into_owned())
}

/// Restores `p_0 = 1 − Σ z_i`. Entries of `z` in `[−ε, 0)` are clamped to 0; only `p_0`
/// absorbs the remaining slack.
pub fn z_to_p(z: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some((i, &v)) = z.iter().enumerate().find(|(_, &v)| !(v >= -Z_EPS)) {
        return Err(Error::InvalidArgument(format!("z_{} = {v} is below -{Z_EPS:e}", i + 1)));
    }
    let clamped = z.map(|v| v.max(0.0));
    let total = clamped.sum();
    if total > 1.0 + Z_EPS {
        return Err(Error::InvalidArgument(format!("z sums to {total} > 1")));
    }
    let mut p = DVector::zeros(z.len() + 1);
    p[0] = (1.0 - total).max(0.0);
    p.rows_mut(1, z.len()).copy_from(&clamped);
    Ok(p)
}
