//! Hit-and-Run over a convex body with the 1-D rejection sampler on each chord.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{find_chord, sample_direction_into, ConvexBody, RoundingMap};
use crate::sampler1d::{sample_chord, ChordFunction, SamplerParams};

/// Log-density evaluated by the walk. Each evaluation bills
/// `cost_per_eval()` underlying oracle calls.
pub trait LogDensity: Sync {
    fn log_density(&self, x: &[f64]) -> f64;

    fn cost_per_eval(&self) -> u64 {
        1
    }

    /// Whether evaluations consume objective queries at all (the uniform
    /// target does not).
    fn queries_objective(&self) -> bool {
        true
    }
}

/// Uniform target: `log g ≡ 0`, no objective queries.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform;

impl LogDensity for Uniform {
    fn log_density(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn queries_objective(&self) -> bool {
        false
    }
}

/// Wraps a closure as a log-density billed at one query per evaluation.
pub struct FnDensity<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> LogDensity for FnDensity<F> {
    fn log_density(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// Evaluation counts: raw calls and billed underlying queries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCount {
    pub calls: u64,
    pub billed: u64,
}

impl QueryCount {
    pub fn merge(&mut self, other: QueryCount) {
        self.calls += other.calls;
        self.billed += other.billed;
    }

    pub fn record(&mut self, calls: u64, cost: u64) {
        self.calls += calls;
        self.billed += calls * cost;
    }
}

/// Acceptance statistics of the rejection sampler over a walk.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RejectionStats {
    pub samples: u64,
    pub attempts: u64,
    /// Most proposals spent on a single step.
    pub max_attempts: u64,
}

impl RejectionStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            1.0
        } else {
            self.samples as f64 / self.attempts as f64
        }
    }

    pub fn merge(&mut self, other: &RejectionStats) {
        self.samples += other.samples;
        self.attempts += other.attempts;
        self.max_attempts = self.max_attempts.max(other.max_attempts);
    }
}

#[derive(Debug, Clone)]
pub struct WalkParams {
    pub steps: u64,
    pub rounding: RoundingMap,
    pub sampler: SamplerParams,
    /// β handed to the 1-D sampler on every chord.
    pub beta: f64,
    pub record_trace: bool,
    /// Re-check membership of every iterate.
    pub check_membership: bool,
    /// Chord boundary tolerance; `None` uses the body's default.
    pub boundary_tolerance: Option<f64>,
}

impl WalkParams {
    pub fn new(dim: usize, steps: u64) -> Self {
        WalkParams {
            steps,
            rounding: RoundingMap::identity(dim),
            sampler: SamplerParams::default(),
            beta: 0.0,
            record_trace: false,
            check_membership: cfg!(debug_assertions),
            boundary_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub point: Vec<f64>,
    pub log_g: f64,
    pub cumulative_queries: u64,
}

#[derive(Debug, Clone)]
pub struct WalkResult {
    pub final_point: Vec<f64>,
    /// `log g` at `final_point`; `None` when no step was taken.
    pub final_log_g: Option<f64>,
    pub trace: Option<Vec<TraceRow>>,
    pub oracle_queries: QueryCount,
    pub rejection_stats: RejectionStats,
}

/// Outcome of one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub point: Vec<f64>,
    pub log_g: f64,
    pub evaluations: u64,
    pub attempts: u64,
}

/// One Hit-and-Run step from `x`.
pub fn step<D: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &D,
    body: &ConvexBody,
    x: &[f64],
    params: &WalkParams,
    rng: &mut R,
) -> Result<StepOutcome> {
    let n = body.dim();
    if params.rounding.dim() != n {
        return Err(Error::InvalidInput("rounding map has wrong dimension".into()));
    }
    let mut u = vec![0.0; n];
    sample_direction_into(&params.rounding, rng, &mut u)?;
    let tol = params
        .boundary_tolerance
        .unwrap_or_else(|| body.default_tolerance());
    let chord = find_chord(body, x, &u, tol)?;

    let mut scratch = vec![0.0; n];
    let mut g = ChordFunction::new(
        |t: f64| {
            chord.point_into(t, &mut scratch);
            target.log_density(&scratch)
        },
        params.beta,
        chord.lo,
        chord.hi,
    )?;
    let s = sample_chord(&mut g, &params.sampler, rng)?;
    let evaluations = g.evaluations();
    let point = chord.point_at(s.offset);
    if params.check_membership && !body.contains_unchecked(&point) {
        return Err(Error::Geometry("walk iterate left the body".into()));
    }
    Ok(StepOutcome {
        point,
        log_g: s.log_g,
        evaluations,
        attempts: s.attempts,
    })
}

/// `params.steps` composed Hit-and-Run steps from `x0`.
pub fn walk<D: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &D,
    body: &ConvexBody,
    x0: &[f64],
    params: &WalkParams,
    rng: &mut R,
) -> Result<WalkResult> {
    if params.steps == 0 {
        return Err(Error::InvalidInput("walk needs at least one step".into()));
    }
    if !body.contains(x0)? {
        return Err(Error::Precondition("walk start is outside the body".into()));
    }
    let cost = if target.queries_objective() {
        target.cost_per_eval()
    } else {
        0
    };
    let mut x = x0.to_vec();
    let mut queries = QueryCount::default();
    let mut stats = RejectionStats::default();
    let mut trace = params.record_trace.then(Vec::new);
    let mut last = None;
    for i in 1..=params.steps {
        let out = step(target, body, &x, params, rng).map_err(|e| e.at_step(i))?;
        if cost > 0 {
            queries.record(out.evaluations, cost);
        }
        stats.samples += 1;
        stats.attempts += out.attempts;
        stats.max_attempts = stats.max_attempts.max(out.attempts);
        x = out.point;
        last = Some(out.log_g);
        if let Some(t) = trace.as_mut() {
            t.push(TraceRow {
                step: i,
                point: x.clone(),
                log_g: out.log_g,
                cumulative_queries: queries.billed,
            });
        }
    }
    Ok(WalkResult {
        final_point: x,
        final_log_g: last,
        trace,
        oracle_queries: queries,
        rejection_stats: stats,
    })
}

/// Step count sufficient for `γ`-mixing from an `M`-warm start:
/// `⌈C n² e^{6β} (R/r)² log⁴(e^β M n R / (r γ²)) log(M/γ)⌉`.
#[allow(clippy::too_many_arguments)]
pub fn mixing_steps(
    n: usize,
    outer_radius: f64,
    inner_radius: f64,
    beta: f64,
    warm_norm: f64,
    gamma: f64,
    constant: f64,
) -> Result<u64> {
    if n == 0
        || !(outer_radius > 0.0)
        || !(inner_radius > 0.0)
        || !(beta >= 0.0)
        || !(warm_norm > 0.0)
        || !(constant > 0.0)
    {
        return Err(Error::InvalidInput("mixing_steps inputs must be positive".into()));
    }
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::InvalidInput("gamma must lie in (0, 1/2)".into()));
    }
    let n = n as f64;
    let ratio = outer_radius / inner_radius;
    let inner_log = (beta + warm_norm.ln() + n.ln() + ratio.ln() - 2.0 * gamma.ln()).powi(4);
    let m = constant * n * n * (6.0 * beta).exp() * ratio * ratio * inner_log * (warm_norm / gamma).ln();
    // Saturating conversion; guard against log-term roundoff just above an integer.
    Ok((m * (1.0 - 1e-14)).ceil().max(1.0) as u64)
}

/// Per-step 1-D sampler precision `γ e^{-2β} / (12 m)`.
pub fn sampler_precision(gamma: f64, beta: f64, steps: u64) -> Result<f64> {
    if !(gamma > 0.0) || !(beta >= 0.0) || steps == 0 {
        return Err(Error::InvalidInput("sampler_precision inputs must be positive".into()));
    }
    Ok(gamma * (-2.0 * beta).exp() / (12.0 * steps as f64))
}

/// Total 1-D truncation budget of an `m`-step walk: `m · 3e^{2β} ε̃`.
pub fn truncation_budget(beta: f64, eps_tilde: f64, steps: u64) -> f64 {
    steps as f64 * 3.0 * (2.0 * beta).exp() * eps_tilde
}

/// Writes a trace as CSV: `step_index,x1..xn,log_g,cumulative_queries`.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[TraceRow]) -> std::io::Result<()> {
    let n = trace.first().map_or(0, |r| r.point.len());
    write!(out, "step_index")?;
    for k in 1..=n {
        write!(out, ",x{k}")?;
    }
    writeln!(out, ",log_g,cumulative_queries")?;
    for row in trace {
        write!(out, "{}", row.step)?;
        for v in &row.point {
            write!(out, ",{v:?}")?;
        }
        writeln!(out, ",{:?},{}", row.log_g, row.cumulative_queries)?;
    }
    Ok(())
}
