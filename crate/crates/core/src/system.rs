//! Time-dependent square matrices, the common currency of the reduction, weighting and ODE
//! modules.

use nalgebra::DMatrix;

use crate::error::Result;

pub trait TimeMatrix: Sync {
    fn dim(&self) -> usize;

    fn at(&self, t: f64) -> Result<DMatrix<f64>>;

    /// Times where the matrix may jump. Solvers step exactly onto these.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<T: TimeMatrix + ?Sized> TimeMatrix for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn at(&self, t: f64) -> Result<DMatrix<f64>> {
        (**self).at(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

/// A matrix that does not depend on time.
#[derive(Debug, Clone)]
pub struct ConstMatrix(pub DMatrix<f64>);

impl TimeMatrix for ConstMatrix {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn at(&self, _t: f64) -> Result<DMatrix<f64>> {
        Ok(self.0.clone())
    }
}

/// Wraps a closure.
pub struct FnMatrix<F> {
    dim: usize,
    f: F,
    breakpoints: Vec<f64>,
}

impl<F> FnMatrix<F>
where
    F: Fn(f64) -> Result<DMatrix<f64>> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, breakpoints: Vec::new() }
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }
}

impl<F> TimeMatrix for FnMatrix<F>
where
    F: Fn(f64) -> Result<DMatrix<f64>> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, t: f64) -> Result<DMatrix<f64>> {
        (self.f)(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// Smallest off-diagonal entry and its position, or `None` for 1×1 matrices.
pub fn min_off_diagonal(m: &DMatrix<f64>) -> Option<(f64, usize, usize)> {
    let n = m.nrows();
    let mut best: Option<(f64, usize, usize)> = None;
    for j in 0..n {
        for i in 0..n {
            if i != j && best.map_or(true, |(v, _, _)| m[(i, j)] < v) {
                best = Some((m[(i, j)], i, j));
            }
        }
    }
    best
}
