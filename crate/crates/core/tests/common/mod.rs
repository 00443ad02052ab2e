//! Random models, weights and initial distributions shared by the integration tests.
#![allow(dead_code)]

use ctmc_bounds::weighting::check_condition_ii;
use ctmc_bounds::weighting::make_h;
use ctmc_bounds::reduction::reduce;
use ctmc_bounds::{parse_rate, ChainModel, ModelKind, RateExpr, Transition, WeightMatrix, WeightShape};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TWO_PI: f64 = std::f64::consts::TAU;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(x: f64) -> RateExpr {
    RateExpr::constant(x)
}

/// `a + b·sin(ω t + φ)` with `0 ≤ b ≤ a`.
pub fn sinusoid(r: &mut ChaCha8Rng, scale: f64) -> RateExpr {
    let a = scale * r.random_range(0.5..2.0);
    let b = a * r.random_range(0.0..1.0);
    let w = TWO_PI * [0.5, 1.0, 2.0][r.random_range(0..3)];
    let phase = r.random_range(0.0..TWO_PI);
    parse_rate(&format!("{a:?} + {b:?}*sin({w:?}*t + {phase:?})")).unwrap()
}

/// Nonnegative piecewise-constant rate with one to three jumps inside `(0, horizon)`.
pub fn piecewise(r: &mut ChaCha8Rng, scale: f64, horizon: f64) -> RateExpr {
    let n = r.random_range(1..=3);
    let mut cuts: Vec<f64> = (0..n).map(|_| r.random_range(0.05..0.95) * horizon).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut segs = vec![(0.0, scale * r.random_range(0.2..2.0))];
    segs.extend(cuts.into_iter().map(|s| (s, scale * r.random_range(0.2..2.0))));
    RateExpr::piecewise(segs).unwrap()
}

/// Constant, sinusoidal or piecewise-constant rate. A nonpositive `horizon` asks for constant
/// rates only.
pub fn random_base(r: &mut ChaCha8Rng, scale: f64, horizon: f64) -> RateExpr {
    if horizon <= 0.0 {
        return c(scale * r.random_range(0.2..2.0));
    }
    match r.random_range(0..3) {
        0 => c(scale * r.random_range(0.2..2.0)),
        1 => sinusoid(r, scale),
        _ => piecewise(r, scale, horizon),
    }
}

fn nonincreasing(r: &mut ChaCha8Rng, n: usize, lo: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| r.random_range(lo..1.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn random_bdpc(r: &mut ChaCha8Rng, s: usize, horizon: f64) -> ChainModel {
    let lambda = (0..s).map(|_| random_base(r, 1.0, horizon)).collect();
    let mu = (0..s).map(|_| random_base(r, 1.0, horizon)).collect();
    // condition (ii) under cumulative weights needs nonincreasing catastrophe rates
    let xi_base = random_base(r, 0.5, horizon);
    let xi = nonincreasing(r, s, 0.0).into_iter().map(|k| xi_base.clone() * k).collect();
    ChainModel::bdpc(s, lambda, mu, xi).unwrap()
}

pub fn random_szk(r: &mut ChaCha8Rng, s: usize, horizon: f64) -> ChainModel {
    let lb = random_base(r, 1.0, horizon);
    let mb = random_base(r, 1.0, horizon);
    let lambda = nonincreasing(r, s, 0.0).into_iter().map(|k| lb.clone() * k).collect();
    let mu = nonincreasing(r, s, 0.0).into_iter().map(|k| mb.clone() * k).collect();
    ChainModel::szk(s, lambda, mu).unwrap()
}

pub fn random_absorbing(r: &mut ChaCha8Rng, s: usize, horizon: f64) -> ChainModel {
    let mut q = Vec::new();
    for i in 1..=s {
        for j in 0..=s {
            if i != j && (j + 1 == i || i + 1 == j || r.random_bool(0.25)) {
                q.push(Transition::new(i, j, random_base(r, 1.0, horizon)));
            }
        }
    }
    ChainModel::absorbing(s, q).unwrap()
}

/// Dense general chain whose exits from state 0 never exceed the floor of the other rates,
/// so the reduced generator is essentially nonnegative.
pub fn random_general(r: &mut ChaCha8Rng, s: usize, horizon: f64) -> ChainModel {
    let floor = r.random_range(0.2..0.6);
    let mut q = Vec::new();
    for i in 0..=s {
        for j in 0..=s {
            if i == j {
                continue;
            }
            if i == 0 {
                q.push(Transition::new(0, j, c(floor * r.random_range(0.0..1.0))));
            } else {
                q.push(Transition::new(i, j, random_base(r, 1.0, horizon) + floor));
            }
        }
    }
    ChainModel::general(s, q).unwrap()
}

pub fn random_weights(r: &mut ChaCha8Rng, shape: WeightShape, s: usize, spread: f64) -> WeightMatrix {
    WeightMatrix::new(shape, (0..s).map(|_| r.random_range(-spread..spread).exp()).collect()).unwrap()
}

pub fn natural_shape(kind: ModelKind) -> WeightShape {
    match kind {
        ModelKind::Bdpc | ModelKind::Szk => WeightShape::CumulativeUpper,
        ModelKind::Absorbing | ModelKind::General => WeightShape::Diagonal,
    }
}

/// A validated model of the given kind (cycling through all four kinds by `idx`) together with
/// weights that pass condition (ii) on `[0, horizon]`.
pub fn random_case(r: &mut ChaCha8Rng, idx: usize, s: usize, horizon: f64) -> (ChainModel, WeightMatrix) {
    random_case_with(r, idx, s, horizon, horizon)
}

/// Same as [`random_case`] with time-homogeneous rates.
pub fn random_constant_case(r: &mut ChaCha8Rng, idx: usize, s: usize) -> (ChainModel, WeightMatrix) {
    random_case_with(r, idx, s, 0.0, 1.0)
}

fn random_case_with(
    r: &mut ChaCha8Rng,
    idx: usize,
    s: usize,
    rate_horizon: f64,
    horizon: f64,
) -> (ChainModel, WeightMatrix) {
    loop {
        let m = match idx % 4 {
            0 => random_bdpc(r, s, rate_horizon),
            1 => random_szk(r, s, rate_horizon),
            2 => random_absorbing(r, s, rate_horizon),
            _ => random_general(r, s, rate_horizon),
        };
        let m = m.into_validated(horizon, 400).expect("generated model is valid");
        let w = random_weights(r, natural_shape(m.kind()), s, 1.0);
        let h = make_h(reduce(&m), &w).unwrap();
        if check_condition_ii(&h, horizon, 200).unwrap().passed {
            return (m, w);
        }
    }
}

pub fn delta(n: usize, k: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[k] = 1.0;
    v
}

/// Random stochastic vector; a third of the time a point mass.
pub fn random_p(r: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    if r.random_bool(1.0 / 3.0) {
        return delta(n, r.random_range(0..n));
    }
    let v = DVector::from_fn(n, |_, _| -r.random_range(1e-12..1.0f64).ln());
    let s = v.sum();
    v / s
}

/// `(p_a, p_b)` with `z_b = c·z_a`, so that `z_a − z_b ≥ 0` entrywise (ordered for both weight
/// shapes).
pub fn ordered_pair(r: &mut ChaCha8Rng, n: usize) -> (DVector<f64>, DVector<f64>) {
    let pa = random_p(r, n);
    let cf = r.random_range(0.0..0.9);
    let mut pb = &pa * cf;
    pb[0] += 1.0 - cf;
    (pa, pb)
}
