use ctmc_bounds::bounds::{envelopes, ergodicity_diagnosis};
use ctmc_bounds::config::{load_model, load_weights, weights_to_json};
use ctmc_bounds::model::DEFAULT_VALIDATION_SAMPLES;
use ctmc_bounds::ode::{solve_p, SolverOptions};
use ctmc_bounds::optimize::{optimize_weights, OptimizationProblem};
use ctmc_bounds::verify::{run_sandwich, spectral_gap_bracket, SandwichConfig, BRACKET_TOL};
use ctmc_bounds::weighting::{check_condition_ii, default_shape, AlphaProfile};
use ctmc_bounds::{ChainModel, WeightMatrix, WeightShape};

use crate::output::{checkpoints, emit, initial_vector, num, Csv};
use crate::{Common, Failure};

const DEFAULT_STEP: f64 = 0.05;
const CONDITION_SAMPLES: usize = 1000;

fn solver(c: &Common) -> Result<SolverOptions, Failure> {
    for (name, v) in [("rtol", c.rtol), ("atol", c.atol), ("qtol", c.qtol)] {
        if !(v > 0.0) {
            return Err(Failure::Io(format!("--{name} must be positive, got {v}")));
        }
    }
    Ok(SolverOptions::new(c.rtol, c.atol))
}

fn step(c: &Common) -> f64 {
    c.grid.unwrap_or(DEFAULT_STEP)
}

/// Loads the model and rejects it if any sampled invariant fails on `[0, horizon]`.
fn valid_model(c: &Common) -> Result<ChainModel, Failure> {
    if !(c.horizon > 0.0) {
        return Err(Failure::Io(format!("--horizon must be positive, got {}", c.horizon)));
    }
    let model = load_model(&c.model)?;
    let report = model.validate(c.horizon, DEFAULT_VALIDATION_SAMPLES)?;
    if !report.is_valid() {
        return Err(Failure::Domain(format!("model failed validation:\n{report}")));
    }
    Ok(model)
}

fn weights_for(c: &Common, model: &ChainModel) -> Result<WeightMatrix, Failure> {
    let w = match &c.weights {
        Some(path) => load_weights(path)?,
        None => WeightMatrix::uniform(default_shape(model.kind()), model.s()),
    };
    if w.dim() != model.s() {
        return Err(Failure::Core(ctmc_bounds::Error::Dimension(format!(
            "weights have length {}, model has S = {}",
            w.dim(),
            model.s()
        ))));
    }
    Ok(w)
}

fn echo(csv: &mut Csv, command: &str, c: &Common, model: &ChainModel) {
    csv.comment(format!("ctmc-bounds {command}"));
    csv.comment(format!("model = {} (kind {}, S = {})", c.model.display(), model.kind(), model.s()));
    csv.comment(format!(
        "horizon = {}, grid = {}, rtol = {:e}, atol = {:e}, qtol = {:e}, seed = {}",
        c.horizon,
        step(c),
        c.rtol,
        c.atol,
        c.qtol,
        c.seed
    ));
}

fn echo_weights(csv: &mut Csv, w: &WeightMatrix) {
    csv.comment(format!("weights: shape = {}, d = {:?}", w.shape(), w.weights()));
    csv.comment(format!("condition (i): d = {:e}", w.norm_constant()));
}

pub fn validate(c: &Common, samples: usize) -> Result<(), Failure> {
    let model = load_model(&c.model)?;
    let report = model.validate(c.horizon, samples)?;
    print!("{report}");
    if report.is_valid() {
        Ok(())
    } else {
        Err(Failure::Domain(format!("{} violation(s)", report.violations.len())))
    }
}

pub fn bounds(c: &Common) -> Result<(), Failure> {
    let model = valid_model(c)?;
    let w = weights_for(c, &model)?;
    let profile = AlphaProfile::for_model(&model, &w)?;
    let cond = check_condition_ii(profile.generator(), c.horizon, CONDITION_SAMPLES)?;
    let mut grid = vec![0.0];
    grid.extend(checkpoints(c.horizon, step(c))?);
    let rows = envelopes(&profile, c.qtol)?.sample(&grid)?;
    let erg = ergodicity_diagnosis(&profile, c.horizon, c.qtol)?;

    let mut csv = Csv::new(["t", "beta_star", "beta_lower", "U", "L"]);
    echo(&mut csv, "bounds", c, &model);
    echo_weights(&mut csv, &w);
    csv.comment(cond.to_string());
    if !cond.passed {
        csv.comment("WARNING: condition (ii) failed; the envelopes are not guaranteed bounds");
    }
    csv.comment(format!("ergodicity: {erg}"));
    csv.comment(format!(
        "total variation: ||p* - p**|| <= {:e} * ||z*(0) - z**(0)||_1D * U(t)",
        2.0 / w.norm_constant()
    ));
    for r in &rows {
        csv.row(&[num(r.t), num(r.beta_star), num(r.beta_lower), num(r.upper), num(r.lower)]);
    }
    let last = rows.last().expect("grid is non-empty");
    let summary = format!(
        "{cond}\nU({t}) = {:e}, L({t}) = {:e}\nergodicity: {erg}\n",
        last.upper,
        last.lower,
        t = last.t
    );
    emit(c.out.as_ref(), &csv.render(), &summary)
}

pub fn simulate(c: &Common, init: &str) -> Result<(), Failure> {
    let model = valid_model(c)?;
    let opts = solver(c)?;
    let p0 = initial_vector(init, model.n_states())?;
    let grid = checkpoints(c.horizon, step(c))?;
    let tr = solve_p(&model, &p0, c.horizon, &grid, &opts)?;

    let mut header = vec!["t".to_string()];
    header.extend((0..model.n_states()).map(|i| format!("p_{i}")));
    let mut csv = Csv::new(header);
    echo(&mut csv, "simulate", c, &model);
    csv.comment(format!("initial distribution = {init}"));
    csv.comment(format!(
        "steps = {}, rejections = {}, max |sum p - 1| = {:e}, min entry = {:e}",
        tr.stats.steps, tr.stats.rejections, tr.stats.max_simplex_drift, tr.stats.min_entry
    ));
    let rows: Vec<_> = tr.iter().filter(|(t, _)| *t > 0.0).collect();
    for &(t, p) in &rows {
        let mut row = vec![num(t)];
        row.extend(p.iter().map(|&v| num(v)));
        csv.row(&row);
    }
    let summary = format!(
        "simulated {} checkpoints on [0, {}] in {} steps ({} rejected); max |sum p - 1| = {:e}\n",
        rows.len(),
        c.horizon,
        tr.stats.steps,
        tr.stats.rejections,
        tr.stats.max_simplex_drift
    );
    emit(c.out.as_ref(), &csv.render(), &summary)
}

pub fn verify(c: &Common, init_a: &str, init_b: &str) -> Result<(), Failure> {
    let model = valid_model(c)?;
    let w = weights_for(c, &model)?;
    let opts = solver(c)?;
    let (pa, pb) = (initial_vector(init_a, model.n_states())?, initial_vector(init_b, model.n_states())?);
    let n = ((c.horizon / step(c)) - 1e-9).ceil().max(1.0) as usize;
    let cfg = SandwichConfig { t_end: c.horizon, checkpoints: n, solver: opts, qtol: c.qtol, ..Default::default() };
    let rep = run_sandwich(&model, &w, &pa, &pb, &cfg)?;

    let mut csv = Csv::new(["t", "measured", "upper", "lower", "lower_applicable", "margin_upper", "margin_lower"]);
    echo(&mut csv, "verify", c, &model);
    echo_weights(&mut csv, &w);
    csv.comment(format!("initial pair: {init_a} vs {init_b}, initial D-norm m0 = {:e}", rep.initial_norm));
    csv.comment(format!("checkpoints: horizon * i / {n}"));
    csv.comment(rep.tolerance.to_string());
    csv.comment(rep.condition_ii.to_string());
    csv.comment(format!("lower_applicable = {}", rep.lower_applicable));
    csv.comment(format!(
        "max |sum p - 1| = {:e}, min probability = {:e}",
        rep.max_simplex_drift, rep.min_probability
    ));
    for r in &rep.records {
        csv.row(&[
            num(r.t),
            num(r.measured),
            num(r.upper),
            num(r.lower),
            rep.lower_applicable.to_string(),
            num(r.margin_upper),
            num(r.margin_lower),
        ]);
    }
    let mut summary = format!(
        "{} checkpoints, {} upper and {} lower violations; max |measured/upper - 1| = {:e}\n{}\n",
        rep.records.len(),
        rep.upper_violations(),
        rep.lower_violations(),
        rep.max_upper_ratio_deviation(),
        rep.condition_ii
    );
    for v in &rep.violations {
        summary.push_str(&format!("violation: {:?} bound at t = {} (margin {:e})\n", v.side, v.t, v.margin));
    }
    emit(c.out.as_ref(), &csv.render(), &summary)?;
    if !rep.condition_ii.passed {
        return Err(Failure::Domain("condition (ii) failed; the bounds do not apply".into()));
    }
    if !rep.passed() {
        return Err(Failure::Domain(format!("{} bound violation(s)", rep.violations.len())));
    }
    Ok(())
}

pub fn optimize(c: &Common, shape: Option<&str>, budget: usize) -> Result<(), Failure> {
    let model = valid_model(c)?;
    let shape: WeightShape = match shape {
        Some(s) => s.parse()?,
        None => default_shape(model.kind()),
    };
    let mut prob = OptimizationProblem::new(&model, shape);
    prob.horizon = c.horizon;
    prob.budget = budget;
    if let Some(step) = c.grid {
        if !(step > 0.0) {
            return Err(Failure::Io(format!("--grid must be positive, got {step}")));
        }
        prob.grid_points = ((c.horizon / step).round() as usize).max(1) + 1;
    }
    let res = optimize_weights(&prob, c.seed)?;
    let summary = format!(
        "J* = {:.12} ({}), feasible = {}, min off-diagonal = {:e}, evaluations = {}, best restart = {}\n",
        res.j,
        if res.exact_time { "time-homogeneous" } else { "grid-certified" },
        res.feasible,
        res.min_offdiag,
        res.iterations,
        res.best_restart
    );
    emit(c.out.as_ref(), &weights_to_json(&res.weights), &summary)?;
    if !res.feasible {
        return Err(Failure::Domain("no feasible weights found within the budget".into()));
    }
    Ok(())
}

pub fn spectral_gap(c: &Common) -> Result<(), Failure> {
    let model = valid_model(c)?;
    let w = weights_for(c, &model)?;
    let b = spectral_gap_bracket(&model, &w)?;
    let mut csv = Csv::new(["beta_star", "gap", "beta_lower", "lower_margin", "upper_margin", "bracket"]);
    echo(&mut csv, "spectral-gap", c, &model);
    echo_weights(&mut csv, &w);
    let holds = b.holds(BRACKET_TOL);
    csv.row(&[
        num(b.beta_star),
        num(b.gap),
        num(b.beta_lower),
        num(b.lower_margin()),
        num(b.upper_margin()),
        if holds { "holds" } else { "violated" }.to_string(),
    ]);
    let summary = format!("gap = {:.12}\n{b}\n", b.gap);
    emit(c.out.as_ref(), &csv.render(), &summary)?;
    if !holds {
        return Err(Failure::Domain("spectral-gap bracket violated".into()));
    }
    Ok(())
}
