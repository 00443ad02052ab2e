//! Derivative-free search for weights that maximize the guaranteed decay rate `β*`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ChainModel;
use crate::reduction::reduce;
use crate::system::min_off_diagonal;
use crate::weighting::{AlphaProfile, WeightMatrix, WeightShape, CONDITION_II_TOL};

pub const DEFAULT_BUDGET: usize = 2000;
pub const DEFAULT_GRID_POINTS: usize = 64;
pub const PENALTY: f64 = 1e3;
const RESTARTS: usize = 5;
const INITIAL_STEP: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct OptimizationProblem<'a> {
    pub model: &'a ChainModel,
    pub shape: WeightShape,
    pub horizon: f64,
    /// Number of sample times for time-varying models.
    pub grid_points: usize,
    pub feasibility_tol: f64,
    /// Objective evaluations per restart.
    pub budget: usize,
}

impl<'a> OptimizationProblem<'a> {
    pub fn new(model: &'a ChainModel, shape: WeightShape) -> Self {
        Self {
            model,
            shape,
            horizon: 1.0,
            grid_points: DEFAULT_GRID_POINTS,
            feasibility_tol: CONDITION_II_TOL,
            budget: DEFAULT_BUDGET,
        }
    }

    /// A single point for time-homogeneous models, otherwise `grid_points` equispaced times
    /// on `[0, horizon]`.
    pub fn time_grid(&self) -> Vec<f64> {
        if self.model.is_time_invariant() || self.grid_points <= 1 {
            return vec![0.0];
        }
        let n = self.grid_points - 1;
        (0..=n).map(|i| self.horizon * i as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub weights: WeightMatrix,
    /// `min_t min_k α_k(t)` on the time grid.
    pub j: f64,
    pub feasible: bool,
    /// Smallest off-diagonal entry of `H` on the grid.
    pub min_offdiag: f64,
    /// Total objective evaluations over all restarts.
    pub iterations: usize,
    /// False for time-varying models: `j` is only certified on the sampled grid.
    pub exact_time: bool,
    pub best_restart: usize,
}

struct Objective {
    shape: WeightShape,
    bs: Vec<DMatrix<f64>>,
    tol: f64,
}

#[derive(Debug, Clone, Copy)]
struct Eval {
    j: f64,
    min_off: f64,
}

impl Eval {
    fn violation(&self, tol: f64) -> f64 {
        (-tol - self.min_off).max(0.0)
    }
}

impl Objective {
    fn weights(&self, phi: &[f64]) -> Result<WeightMatrix> {
        let d = std::iter::once(1.0).chain(phi.iter().map(|p| p.exp())).collect();
        WeightMatrix::new(self.shape, d)
    }

    fn eval(&self, phi: &[f64]) -> Result<Eval> {
        let w = self.weights(phi)?;
        let mut j = f64::INFINITY;
        let mut min_off = f64::INFINITY;
        for b in &self.bs {
            let h = w.conjugate(b)?;
            for c in 0..h.ncols() {
                j = j.min(-h.column(c).sum());
            }
            if let Some((v, _, _)) = min_off_diagonal(&h) {
                min_off = min_off.min(v);
            }
        }
        if !j.is_finite() {
            return Err(Error::NonFinite { t: 0.0, value: j });
        }
        Ok(Eval { j, min_off })
    }

    /// Value to maximize.
    fn merit(&self, phi: &[f64]) -> f64 {
        match self.eval(phi) {
            Ok(e) => e.j - PENALTY * e.violation(self.tol),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Maximizes `J(d)` over log-weights with `d_1 = 1` by Nelder–Mead from five starts: uniform,
/// geometric with ratios 2 and 1/2, and two random starts drawn from `seed`.
pub fn optimize_weights(prob: &OptimizationProblem<'_>, seed: u64) -> Result<OptimizationResult> {
    if prob.budget < 1 {
        return Err(Error::InvalidArgument("iteration budget must be >= 1".into()));
    }
    if !(prob.horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let s = prob.model.s();
    let grid = prob.time_grid();
    let reduced = reduce(prob.model);
    let bs = grid.iter().map(|&t| reduced.b(t)).collect::<Result<Vec<_>>>()?;
    let obj = Objective { shape: prob.shape, bs, tol: prob.feasibility_tol };

    let dim = s - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<f64>> = vec![
        vec![0.0; dim],
        (1..=dim).map(|k| k as f64 * 2f64.ln()).collect(),
        (1..=dim).map(|k| -(k as f64) * 2f64.ln()).collect(),
    ];
    for _ in 3..RESTARTS {
        starts.push((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect());
    }

    let runs: Vec<(Vec<f64>, usize)> = starts
        .par_iter()
        .map(|x0| nelder_mead(|x| obj.merit(x), x0, prob.budget))
        .collect();

    let mut best: Option<(usize, Vec<f64>, Eval)> = None;
    let mut iterations = 0;
    for (idx, (x, evals)) in runs.into_iter().enumerate() {
        iterations += evals;
        let e = obj.eval(&x)?;
        let better = match &best {
            None => true,
            Some((_, _, b)) => {
                let (fe, fb) = (e.violation(obj.tol) == 0.0, b.violation(obj.tol) == 0.0);
                match (fe, fb) {
                    (true, false) => true,
                    (false, true) => false,
                    (true, true) => e.j > b.j,
                    (false, false) => e.violation(obj.tol) < b.violation(obj.tol),
                }
            }
        };
        if better {
            best = Some((idx, x, e));
        }
    }
    let (best_restart, x, _) = best.expect("at least one restart");
    let weights = obj.weights(&x)?;

    // Reported values come from the reference profile, not the fast objective.
    let profile = AlphaProfile::for_model(prob.model, &weights)?;
    let mut j = f64::INFINITY;
    let mut min_off = f64::INFINITY;
    for &t in &grid {
        j = j.min(profile.eval(t)?.beta_star());
        if let Some((v, _, _)) = min_off_diagonal(&crate::system::TimeMatrix::at(profile.generator(), t)?) {
            min_off = min_off.min(v);
        }
    }
    Ok(OptimizationResult {
        weights,
        j,
        feasible: min_off >= -prob.feasibility_tol,
        min_offdiag: min_off,
        iterations,
        exact_time: grid.len() == 1,
        best_restart,
    })
}

/// Maximizes `f` from `x0` within `budget` evaluations. The simplex is rebuilt around the best
/// vertex whenever it collapses, while budget remains. Returns the best point and the number
/// of evaluations used.
fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], budget: usize) -> (Vec<f64>, usize) {
    let n = x0.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        -f(x)
    };
    if n == 0 {
        eval(x0, &mut evals);
        return (Vec::new(), evals);
    }

    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0, &mut evals);
    let mut step = INITIAL_STEP;
    while evals < budget {
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_x.clone(), best_f)];
        for i in 0..n {
            if evals >= budget {
                break;
            }
            let mut x = best_x.clone();
            x[i] += step;
            let fx = eval(&x, &mut evals);
            simplex.push((x, fx));
        }
        if simplex.len() < n + 1 {
            break;
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            let size = simplex
                .iter()
                .skip(1)
                .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if evals >= budget || (spread.abs() < 1e-14 && size < 1e-9) || size < 1e-12 {
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
                .collect();
            let along = |c: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n].0).map(|(m, w)| m + c * (m - w)).collect()
            };
            let xr = along(1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(2.0);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = along(0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(-0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for v in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> = v.0.iter().zip(&x0).map(|(a, b)| b + 0.5 * (a - b)).collect();
                        let fx = eval(&x, &mut evals);
                        *v = (x, fx);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improved = simplex[0].1 < best_f - 1e-15;
        if simplex[0].1 < best_f {
            best_x = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        step = if improved { (step * 0.5).max(1e-3) } else { step * 0.1 };
        if step < 1e-8 {
            break;
        }
    }
    (best_x, evals)
}
