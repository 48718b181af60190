//! Browser bindings: 1-D sampler histograms, Hit-and-Run traces and a small
//! annealing run on a perturbed quadratic over the unit disc.

use hranneal::annealing::{anneal, make_plan, AnnealOptions, PlanOverrides};
use hranneal::hit_and_run::{walk, FnDensity, WalkParams};
use hranneal::problems::{registry_1d, ConvexBase, ObjectiveSpec, Perturbation};
use hranneal::reference::{histogram, quadrature_density, tv_masses, Lattice};
use hranneal::rng::stream;
use hranneal::sampler1d::{sample_chord, ChordFunction, SamplerParams};
use hranneal::{ConvexBody, FnObjective};
use wasm_bindgen::prelude::*;

type LogDensity = Box<dyn Fn(&[f64]) -> f64 + Sync>;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Names of the registered 1-D targets.
#[wasm_bindgen]
pub fn targets() -> Vec<String> {
    registry_1d().into_iter().map(|t| t.name).collect()
}

#[wasm_bindgen]
pub struct Histogram {
    empirical: Vec<f64>,
    exact: Vec<f64>,
    lo: f64,
    hi: f64,
    tv: f64,
    acceptance: f64,
}

#[wasm_bindgen]
impl Histogram {
    pub fn empirical(&self) -> Vec<f64> {
        self.empirical.clone()
    }
    pub fn exact(&self) -> Vec<f64> {
        self.exact.clone()
    }
    pub fn lo(&self) -> f64 {
        self.lo
    }
    pub fn hi(&self) -> f64 {
        self.hi
    }
    pub fn tv(&self) -> f64 {
        self.tv
    }
    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }
}

/// Samples `count` points from a registered target and bins them next to
/// the quadrature masses.
#[wasm_bindgen]
pub fn sample_histogram(
    target: &str,
    count: usize,
    bins: usize,
    eps_tilde: f64,
    seed: u64,
) -> Result<Histogram, JsError> {
    let t = registry_1d()
        .into_iter()
        .find(|t| t.name == target)
        .ok_or_else(|| js_err(format!("unknown target {target}")))?;
    let mut g = ChordFunction::new(|x| t.log_g(x), t.beta(), t.lo, t.hi).map_err(js_err)?;
    let params = SamplerParams::with_eps(eps_tilde);
    let mut rng = stream(seed, &[]);
    let mut samples = Vec::with_capacity(count);
    let mut attempts = 0;
    for _ in 0..count {
        let s = sample_chord(&mut g, &params, &mut rng).map_err(js_err)?;
        attempts += s.attempts;
        samples.push(vec![s.offset]);
    }
    let lattice = Lattice::line(t.lo, t.hi, 100 * bins + 1).map_err(js_err)?;
    let exact = quadrature_density(|x| t.log_g(x[0]), &lattice)
        .and_then(|d| d.bin_masses(bins))
        .map_err(js_err)?;
    let empirical = histogram(&samples, &lattice, bins).map_err(js_err)?;
    let tv = tv_masses(&empirical, &exact).map_err(js_err)?;
    Ok(Histogram {
        empirical,
        exact,
        lo: t.lo,
        hi: t.hi,
        tv,
        acceptance: count as f64 / attempts.max(1) as f64,
    })
}

/// Hit-and-Run on the square `[-1, 1]²`; returns the trace as `x0, y0, x1, ...`.
///
/// `target`: `"uniform"`, `"l1"` (`exp(-5‖x‖₁)`) or `"gibbs"`
/// (`exp(-F/T)` for a wiggly quadratic `F`).
#[wasm_bindgen]
pub fn walk_trace(target: &str, temperature: f64, steps: u64, seed: u64) -> Result<Vec<f64>, JsError> {
    let body = ConvexBody::cube(2, 1.0).map_err(js_err)?;
    let t = temperature.max(1e-3);
    let (log_g, beta): (LogDensity, f64) = match target {
        "uniform" => (Box::new(|_: &[f64]| 0.0), 0.0),
        "l1" => (Box::new(|x: &[f64]| -5.0 * (x[0].abs() + x[1].abs())), 0.0),
        "gibbs" => (
            Box::new(move |x: &[f64]| {
                let f = (x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2)
                    + 0.05 * (20.0 * x[0]).sin() * (20.0 * x[1]).sin();
                -f / t
            }),
            0.2 / t,
        ),
        other => return Err(js_err(format!("unknown walk target {other}"))),
    };
    let mut params = WalkParams::new(2, steps);
    params.beta = beta;
    params.record_trace = true;
    let mut rng = stream(seed, &[]);
    let res = walk(&FnDensity(|x: &[f64]| log_g(x)), &body, &[0.0, 0.0], &params, &mut rng)
        .map_err(js_err)?;
    let mut out = vec![0.0, 0.0];
    for row in res.trace.unwrap_or_default() {
        out.extend_from_slice(&row.point);
    }
    Ok(out)
}

#[wasm_bindgen]
pub struct AnnealRun {
    best_point: Vec<f64>,
    best_value: f64,
    temperatures: Vec<f64>,
    epoch_best: Vec<f64>,
    points: Vec<f64>,
    queries: u64,
}

#[wasm_bindgen]
impl AnnealRun {
    pub fn best_point(&self) -> Vec<f64> {
        self.best_point.clone()
    }
    pub fn best_value(&self) -> f64 {
        self.best_value
    }
    /// Temperature of each logged epoch.
    pub fn temperatures(&self) -> Vec<f64> {
        self.temperatures.clone()
    }
    /// Best objective value after each epoch.
    pub fn epoch_best(&self) -> Vec<f64> {
        self.epoch_best.clone()
    }
    /// Final strand points as `x0, y0, x1, ...`.
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }
    pub fn queries(&self) -> u64 {
        self.queries
    }
}

/// Anneals `‖x - (0.3, -0.2)‖² + a sin(ωx₁) sin(ωx₂)` over the unit disc.
#[wasm_bindgen]
pub fn anneal_disc(
    amplitude: f64,
    freq: f64,
    epsilon: f64,
    steps: u64,
    seed: u64,
) -> Result<AnnealRun, JsError> {
    let spec = ObjectiveSpec {
        dim: 2,
        base: ConvexBase::Quadratic {
            center: Some(vec![0.3, -0.2]),
            scale: 1.0,
        },
        perturbation: Perturbation::Sine { freq },
        amplitude,
    };
    let body = ConvexBody::ball(vec![0.0, 0.0], 1.0).map_err(js_err)?;
    let rho = amplitude.abs().max(1e-9);
    let s = spec.clone();
    let objective = FnObjective::new(2, move |x: &[f64]| s.value(x)).with_rho(rho);
    let overrides = PlanOverrides {
        steps: Some(steps),
        ..PlanOverrides::default()
    };
    let plan = make_plan(2, epsilon, &body, rho, &overrides).map_err(js_err)?;
    let res = anneal(&objective, &body, &plan, seed, AnnealOptions::default()).map_err(js_err)?;
    if let Some(e) = &res.failure {
        return Err(js_err(e));
    }
    Ok(AnnealRun {
        best_value: res.best_value,
        temperatures: res.epoch_log.iter().map(|r| r.temperature).collect(),
        epoch_best: res.epoch_log.iter().map(|r| r.best_value).collect(),
        points: res.state.points.concat(),
        queries: res.queries().billed,
        best_point: res.best_point,
    })
}
