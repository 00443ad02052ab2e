//! Adaptive Dormand–Prince 5(4) integration of the linear systems `dp/dt = A(t) p`,
//! `dz/dt = B(t) z + f(t)` and `dx/dt = H(t) x`, with 4th-order dense output.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::ChainModel;
use crate::quadrature::left_limit;
use crate::reduction::ReducedSystem;
use crate::system::TimeMatrix;

/// Outputs of probability trajectories must stay this close to the simplex.
pub const SIMPLEX_TOL: f64 = 1e-10;
/// Beyond this the solve is aborted.
pub const SIMPLEX_HARD_LIMIT: f64 = 1e-8;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const H_MIN: f64 = 1e-12;
const H0_FRACTION: f64 = 1e-4;
const MAX_REJECT_RATIO: f64 = 0.9;
const MIN_ATTEMPTS_FOR_STIFFNESS: usize = 50;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order minus embedded 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense output
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-13, max_steps: 1_000_000 }
    }
}

impl SolverOptions {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Default::default() }
    }

    fn check(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    pub steps: usize,
    pub rejections: usize,
    pub rhs_evals: usize,
    /// Largest `|Σ y − 1|` over outputs; only filled for probability trajectories.
    pub max_simplex_drift: f64,
    /// Smallest output entry; only meaningful for probability trajectories.
    pub min_entry: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub stats: SolverStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &DVector<f64>)> {
        self.times.last().copied().zip(self.states.last())
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &DVector<f64>)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// `0, step, 2·step, …` up to `t_end`.
pub fn uniform_grid(t_end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad grid: t_end = {t_end}, step = {step}")));
    }
    let n = ((t_end / step) * (1.0 + 1e-12)).floor() as usize;
    Ok((0..=n).map(|k| (k as f64 * step).min(t_end)).collect())
}

/// `n` equispaced checkpoints `t_end·i/n`, `i = 1..=n`.
pub fn checkpoints(t_end: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

/// Integrates `y' = rhs(t, y)` from `0` to `t_end`, reporting `y` on `out_grid`.
///
/// Every breakpoint in `(0, t_end)` is a mandatory step boundary; right-hand-side
/// evaluations at the end of a step that stops on a breakpoint use the left limit.
pub fn integrate<F>(
    mut rhs: F,
    y0: &DVector<f64>,
    t_end: f64,
    out_grid: &[f64],
    breakpoints: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    opts.check()?;
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    if out_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("output grid must be strictly increasing".into()));
    }
    if out_grid.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
        return Err(Error::InvalidArgument(format!("output grid must lie in [0, {t_end}]")));
    }

    let mut stats = SolverStats { min_entry: f64::INFINITY, ..Default::default() };
    let mut times = Vec::with_capacity(out_grid.len());
    let mut states = Vec::with_capacity(out_grid.len());

    if t_end == 0.0 {
        times.push(0.0);
        states.push(y0.clone());
        return Ok(Trajectory { times, states, stats });
    }

    let mut next_out = 0;
    while next_out < out_grid.len() && out_grid[next_out] == 0.0 {
        times.push(0.0);
        states.push(y0.clone());
        next_out += 1;
    }

    let mut stops: Vec<(f64, bool)> =
        breakpoints.iter().filter(|&&b| b > 0.0 && b < t_end).map(|&b| (b, true)).collect();
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    stops.dedup_by(|a, b| a.0 == b.0);
    stops.push((t_end, false));
    let mut stop_idx = 0;

    let h_max = t_end / 10.0;
    let mut h = (H0_FRACTION * t_end).clamp(H_MIN.min(h_max), h_max);
    let mut t = 0.0;
    let mut y = y0.clone();
    let mut k: Vec<DVector<f64>> = vec![DVector::zeros(y0.len()); 7];
    k[0] = rhs(t, &y)?;
    stats.rhs_evals += 1;
    let mut last_rejected = false;
    let mut attempts = 0usize;

    while t < t_end {
        while stops[stop_idx].0 <= t {
            stop_idx += 1;
        }
        let (stop, is_break) = stops[stop_idx];
        let remaining = stop - t;
        let hits_stop = t + 1.01 * h >= stop;
        let h_step = if hits_stop { remaining } else { h };
        let t_new = if hits_stop { stop } else { t + h_step };

        let mut y_new = DVector::zeros(0);
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    ys.axpy(h_step * a, kj, 1.0);
                }
            }
            let ts = if C[s] == 1.0 {
                if hits_stop && is_break { left_limit(t_new) } else { t_new }
            } else {
                t + C[s] * h_step
            };
            k[s] = rhs(ts, &ys)?;
            stats.rhs_evals += 1;
            if s == 6 {
                // the last stage is evaluated at the 5th-order solution (FSAL)
                y_new = ys;
            }
        }
        let mut err_vec = DVector::zeros(y.len());
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err_vec.axpy(h_step * E[j], kj, 1.0);
            }
        }
        let n = y.len().max(1) as f64;
        let err = (err_vec
            .iter()
            .zip(y.iter().zip(y_new.iter()))
            .map(|(e, (a, b))| {
                let sk = opts.atol + opts.rtol * a.abs().max(b.abs());
                (e / sk).powi(2)
            })
            .sum::<f64>()
            / n)
            .sqrt();

        attempts += 1;
        stats.steps += 1;
        if stats.steps > opts.max_steps {
            return Err(Error::ToleranceUnreachable(format!(
                "exceeded {} steps at t = {t}",
                opts.max_steps
            )));
        }

        if err <= 1.0 {
            // dense output on (t, t_new]
            if next_out < out_grid.len() && out_grid[next_out] <= t_new {
                let ydiff = &y_new - &y;
                let bspl = &k[0] * h_step - &ydiff;
                let r4 = &ydiff - &k[6] * h_step - &bspl;
                let mut r5 = DVector::zeros(y.len());
                for (j, kj) in k.iter().enumerate() {
                    if D[j] != 0.0 {
                        r5.axpy(h_step * D[j], kj, 1.0);
                    }
                }
                while next_out < out_grid.len() && out_grid[next_out] <= t_new {
                    let to = out_grid[next_out];
                    let value = if to == t_new {
                        y_new.clone()
                    } else {
                        let th = (to - t) / h_step;
                        let th1 = 1.0 - th;
                        &y + (&ydiff + (&bspl + (&r4 + &r5 * th1) * th) * th1) * th
                    };
                    times.push(to);
                    states.push(value);
                    next_out += 1;
                }
            }

            let fac = if err == 0.0 { FAC_MAX } else { (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX) };
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            h = if hits_stop && h_step < h { h.max(h_step * fac) } else { h_step * fac };
            h = h.min(h_max);
            t = t_new;
            y = y_new;
            if hits_stop && is_break {
                k[0] = rhs(t, &y)?;
                stats.rhs_evals += 1;
            } else {
                k[0] = k[6].clone();
            }
            last_rejected = false;
        } else {
            stats.rejections += 1;
            last_rejected = true;
            let fac = (SAFETY * err.powf(-0.2)).max(FAC_MIN);
            h = h_step * fac.min(1.0);
            if !h.is_finite() || h < H_MIN {
                return Err(Error::StepUnderflow { t, h });
            }
            if attempts >= MIN_ATTEMPTS_FOR_STIFFNESS
                && stats.rejections as f64 > MAX_REJECT_RATIO * attempts as f64
            {
                return Err(Error::ToleranceUnreachable(format!(
                    "{} of {attempts} steps rejected by t = {t}; the system is likely stiff",
                    stats.rejections
                )));
            }
        }
    }

    Ok(Trajectory { times, states, stats })
}

fn check_stochastic(p: &DVector<f64>) -> Result<()> {
    if p.iter().any(|&v| !(v >= -SIMPLEX_TOL)) || (p.sum() - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidArgument(format!(
            "initial vector is not a probability distribution (sum = {})",
            p.sum()
        )));
    }
    Ok(())
}

/// Forward Kolmogorov system `dp/dt = A(t) p`. Fails if an output leaves the simplex by more
/// than [`SIMPLEX_HARD_LIMIT`].
pub fn solve_p(
    model: &ChainModel,
    p0: &DVector<f64>,
    t_end: f64,
    out_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if p0.len() != model.n_states() {
        return Err(Error::Dimension(format!(
            "initial vector has {} entries, model has {} states",
            p0.len(),
            model.n_states()
        )));
    }
    check_stochastic(p0)?;
    let mut traj = integrate(
        |t, p| Ok(model.eval_a(t)? * p),
        p0,
        t_end,
        out_grid,
        &model.breakpoints(),
        opts,
    )?;
    let mut drift_max: f64 = 0.0;
    let mut min_entry = f64::INFINITY;
    for (t, p) in traj.iter() {
        let drift = (p.sum() - 1.0).abs();
        let low = p.min();
        if drift > SIMPLEX_HARD_LIMIT || low < -SIMPLEX_HARD_LIMIT {
            return Err(Error::SimplexDrift { t, drift: drift.max(-low) });
        }
        drift_max = drift_max.max(drift);
        min_entry = min_entry.min(low);
    }
    traj.stats.max_simplex_drift = drift_max;
    traj.stats.min_entry = min_entry;
    Ok(traj)
}

/// Reduced system `dz/dt = B(t) z + f(t)`.
pub fn solve_z(
    reduced: &ReducedSystem<'_>,
    z0: &DVector<f64>,
    t_end: f64,
    out_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if z0.len() != reduced.dim() {
        return Err(Error::Dimension("z0 length must equal S".into()));
    }
    integrate(
        |t, z| {
            let (b, f) = reduced.b_and_f(t)?;
            Ok(b * z + f)
        },
        z0,
        t_end,
        out_grid,
        &reduced.model().breakpoints(),
        opts,
    )
}

/// Homogeneous linear system `dx/dt = H(t) x` (e.g. the weighted difference system).
pub fn solve_x(
    h: &impl TimeMatrix,
    x0: &DVector<f64>,
    t_end: f64,
    out_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if x0.len() != h.dim() {
        return Err(Error::Dimension(format!(
            "x0 has {} entries, system has dimension {}",
            x0.len(),
            h.dim()
        )));
    }
    let mut traj = integrate(|t, x| Ok(h.at(t)? * x), x0, t_end, out_grid, &h.breakpoints(), opts)?;
    traj.stats.min_entry = traj.states.iter().map(|x| x.min()).fold(f64::INFINITY, f64::min);
    Ok(traj)
}

/// Convenience for constant matrices.
pub fn solve_linear_const(
    m: &DMatrix<f64>,
    x0: &DVector<f64>,
    t_end: f64,
    out_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    integrate(|_, x| Ok(m * x), x0, t_end, out_grid, &[], opts)
}
