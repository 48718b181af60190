//! Staged optimization for non-convexity that shrinks near the optimum.
//!
//! With `Δ(r)` bounding `|F - f|` on balls of radius `r` around the
//! minimizer, each stage anneals on `B(x_{t-1}, 2 r_t)` and then shrinks the
//! radius to `r_{t+1} = √(2 C n Δ(3 r_t) / α)`. The recursion's fixed point
//! `r*` is the limit below which no further progress is certified.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::annealing::{anneal, make_plan, AnnealOptions, PlanOverrides};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::objective::Objective;

pub const DEFAULT_STAGE_CONSTANT: f64 = 4.0;
pub const DEFAULT_MAX_STAGES: usize = 64;

#[derive(Clone)]
pub enum DecayKind {
    /// `Δ(r) = c r^p`, `0 < p < 2`.
    Polynomial { c: f64, p: f64 },
    /// `Δ(r) = c log(1 + d r)`.
    Logarithmic { c: f64, d: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for DecayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayKind::Polynomial { c, p } => write!(f, "Polynomial {{ c: {c}, p: {p} }}"),
            DecayKind::Logarithmic { c, d } => write!(f, "Logarithmic {{ c: {c}, d: {d} }}"),
            DecayKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecayModel {
    pub kind: DecayKind,
    /// Strong convexity of `f`.
    pub alpha: f64,
    /// Per-stage gap constant: `f(x_t) - f(x*) ≤ C n Δ(3 r_t)`.
    pub constant: f64,
}

impl DecayModel {
    pub fn polynomial(c: f64, p: f64, alpha: f64, constant: f64) -> Result<Self> {
        Self::checked(DecayKind::Polynomial { c, p }, alpha, constant)
    }

    pub fn logarithmic(c: f64, d: f64, alpha: f64, constant: f64) -> Result<Self> {
        Self::checked(DecayKind::Logarithmic { c, d }, alpha, constant)
    }

    pub fn custom(
        delta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        alpha: f64,
        constant: f64,
    ) -> Result<Self> {
        Self::checked(DecayKind::Custom(Arc::new(delta)), alpha, constant)
    }

    fn checked(kind: DecayKind, alpha: f64, constant: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(constant > 0.0) {
            return Err(Error::Model("alpha and C must be positive".into()));
        }
        match kind {
            DecayKind::Polynomial { c, p } if !(c >= 0.0) || !(p > 0.0 && p < 2.0) => {
                return Err(Error::Model("polynomial decay needs c >= 0 and 0 < p < 2".into()))
            }
            DecayKind::Logarithmic { c, d } if !(c >= 0.0) || !(d > 0.0) => {
                return Err(Error::Model("logarithmic decay needs c >= 0 and d > 0".into()))
            }
            _ => {}
        }
        Ok(DecayModel {
            kind,
            alpha,
            constant,
        })
    }

    /// `Δ(r)`.
    pub fn delta(&self, r: f64) -> Result<f64> {
        let v = match &self.kind {
            DecayKind::Polynomial { c, p } => c * r.powf(*p),
            DecayKind::Logarithmic { c, d } => c * (d * r).ln_1p(),
            DecayKind::Custom(f) => f(r),
        };
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(Error::Model(format!("Delta({r}) = {v} is not a finite non-negative value")))
        }
    }

    /// `(α / 2Cn) r² - Δ(3r)`; its positive root is `r*`.
    pub fn residual(&self, n: usize, r: f64) -> Result<f64> {
        Ok(self.alpha / (2.0 * self.constant * n as f64) * r * r - self.delta(3.0 * r)?)
    }
}

pub fn next_radius(model: &DecayModel, n: usize, r_t: f64) -> Result<f64> {
    if !(r_t > 0.0) {
        return Err(Error::InvalidInput("radius must be positive".into()));
    }
    let d = model.delta(3.0 * r_t)?;
    Ok((2.0 * model.constant * n as f64 * d / model.alpha).sqrt())
}

/// Fixed point `r*` of the radius recursion.
pub fn critical_radius(model: &DecayModel, n: usize) -> Result<f64> {
    if let DecayKind::Polynomial { c, p } = model.kind {
        if c == 0.0 {
            return Ok(0.0);
        }
        let base = 2.0 * 3f64.powf(p) * c * model.constant * n as f64 / model.alpha;
        return Ok(base.powf(1.0 / (2.0 - p)));
    }
    if let DecayKind::Logarithmic { c, .. } = model.kind {
        if c == 0.0 {
            return Ok(0.0);
        }
    }
    bisect_root(model, n)
}

fn bisect_root(model: &DecayModel, n: usize) -> Result<f64> {
    let phi = |r: f64| model.residual(n, r);
    // Upper end: φ > 0 once the quadratic dominates.
    let mut hi = 1.0;
    let mut tries = 0;
    while phi(hi)? <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::Solver("residual never turns positive: no sign change".into()));
        }
    }
    // Lower end: φ < 0 just above the origin (φ(0) = -Δ(0)).
    let mut lo = if phi(0.0)? < 0.0 { 0.0 } else { hi };
    tries = 0;
    while lo > 0.0 && phi(lo)? >= 0.0 {
        lo *= 0.5;
        tries += 1;
        if tries > 1100 || lo == 0.0 {
            return Err(Error::Solver("residual never turns negative: no sign change".into()));
        }
    }
    if lo >= hi {
        return Err(Error::Solver("empty bracket".into()));
    }
    // Largest sign change below `hi`: walk the upper end down so the root
    // found is the outermost one.
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        if phi(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `(log log(r₀/r*) + log(1/ε_rel)) / log(2/p) + 1`: stage bound for
/// polynomial decay.
pub fn stage_bound(p: f64, r0: f64, r_star: f64, eps_rel: f64) -> f64 {
    ((r0 / r_star).ln().ln() + (1.0 / eps_rel).ln()) / (2.0 / p).ln() + 1.0
}

#[derive(Debug, Clone)]
pub struct StagedConfig {
    /// Target accuracy for each inner run; raised to `n ρ_t` when the stage's
    /// non-convexity is larger.
    pub inner_epsilon: f64,
    pub inner: PlanOverrides,
    pub eps_rel: f64,
    pub max_stages: usize,
    pub options: AnnealOptions,
}

impl StagedConfig {
    pub fn new(inner_epsilon: f64, eps_rel: f64) -> Self {
        StagedConfig {
            inner_epsilon,
            inner: PlanOverrides::default(),
            eps_rel,
            max_stages: DEFAULT_MAX_STAGES,
            options: AnnealOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    /// Center of this stage's ball.
    pub center: Vec<f64>,
    pub radius: f64,
    /// `Δ(3 r_t)`.
    pub rho: f64,
    pub best_point: Vec<f64>,
    pub best_value: f64,
    /// Billed queries of this stage's inner run.
    pub queries: u64,
    pub next_radius: f64,
    /// The center stayed inside the previous stage's ball.
    pub nested: bool,
}

#[derive(Debug, Clone)]
pub struct StagedResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub critical_radius: f64,
    pub stages: Vec<StageRecord>,
    pub total_queries: u64,
    /// Why the loop stopped.
    pub stop_reason: String,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Runs annealing on shrinking balls `B(x_{t-1}, 2 r_t) ∩ K`.
pub fn staged_optimize<O: Objective + ?Sized>(
    objective: &O,
    model: &DecayModel,
    body: &ConvexBody,
    x0: &[f64],
    r0: f64,
    cfg: &StagedConfig,
    seed: u64,
) -> Result<StagedResult> {
    let n = body.dim();
    if objective.dim() != n || x0.len() != n {
        return Err(Error::InvalidInput("objective, body and start point dimensions differ".into()));
    }
    if !(cfg.eps_rel > 0.0) {
        return Err(Error::Config("eps_rel must be positive".into()));
    }
    if !(r0 > 0.0) {
        return Err(Error::InvalidInput("initial radius must be positive".into()));
    }
    if !body.contains(x0)? {
        return Err(Error::Precondition("start point is outside the body".into()));
    }
    let r_star = critical_radius(model, n)?;
    if r0 <= r_star {
        return Ok(StagedResult {
            point: x0.to_vec(),
            value: objective.value(x0),
            critical_radius: r_star,
            stages: Vec::new(),
            total_queries: objective.cost_per_call(),
            stop_reason: format!(
                "r0 = {r0} is not above the critical radius r* = {r_star}; no stage can certify progress"
            ),
        });
    }
    if let Some(d) = body.boundary_distance(x0) {
        if d < 2.0 * r0 * (1.0 - 1e-12) {
            log::warn!("B(x0, 2 r0) is not inside the body; stages are clipped to it");
        }
    }

    let mut center = x0.to_vec();
    let mut radius = r0;
    let mut stages: Vec<StageRecord> = Vec::new();
    let mut total = 0u64;
    let stop_reason;
    loop {
        let stage = stages.len() + 1;
        let wrap = |e: Error| Error::Stage {
            stage,
            source: Box::new(e),
        };
        let rho = model.delta(3.0 * radius).map_err(wrap)?;
        let ball = body.intersect_ball(&center, 2.0 * radius).map_err(wrap)?;
        let eps = (n as f64 * rho).max(cfg.inner_epsilon);
        let plan = make_plan(n, eps, &ball, rho, &cfg.inner).map_err(wrap)?;
        let res = anneal(
            objective,
            &ball,
            &plan,
            crate::rng::derive_key(seed, &[stage as u64]),
            cfg.options,
        )
        .map_err(wrap)?;
        if let Some(e) = res.failure.clone() {
            return Err(wrap(e));
        }
        let queries = res.queries().billed;
        total += queries;
        let next = next_radius(model, n, radius).map_err(wrap)?;
        let nested = match stages.last() {
            Some(prev) => distance(&center, &prev.center) <= 2.0 * prev.radius * (1.0 + 1e-12),
            None => true,
        };
        stages.push(StageRecord {
            stage,
            center: center.clone(),
            radius,
            rho,
            best_point: res.best_point.clone(),
            best_value: res.best_value,
            queries,
            next_radius: next,
            nested,
        });
        center = res.best_point;
        if next >= radius / (1.0 + cfg.eps_rel) {
            stop_reason = format!("radius stagnated: r_next = {next} >= r_t / (1 + eps_rel)");
            break;
        }
        if next <= (1.0 + cfg.eps_rel) * r_star {
            stop_reason = format!("reached the critical radius: r_next = {next}, r* = {r_star}");
            break;
        }
        if stages.len() >= cfg.max_stages {
            stop_reason = format!("stage cap {} reached", cfg.max_stages);
            break;
        }
        radius = next;
    }
    let last = stages.last().expect("at least one stage ran");
    Ok(StagedResult {
        point: last.best_point.clone(),
        value: last.best_value,
        critical_radius: r_star,
        stages,
        total_queries: total,
        stop_reason,
    })
}

/// `stage,c1..cn,radius,rho,inner_best,queries`
pub fn write_stage_log_csv<W: Write>(mut out: W, stages: &[StageRecord]) -> std::io::Result<()> {
    let n = stages.first().map_or(0, |s| s.center.len());
    let mut header = String::from("stage");
    for k in 1..=n {
        header.push_str(&format!(",c{k}"));
    }
    header.push_str(",radius,rho,inner_best,queries");
    writeln!(out, "{header}")?;
    for s in stages {
        let mut row = s.stage.to_string();
        for c in &s.center {
            row.push_str(&format!(",{c:?}"));
        }
        row.push_str(&format!(",{:?},{:?},{:?},{}", s.radius, s.rho, s.best_value, s.queries));
        writeln!(out, "{row}")?;
    }
    Ok(())
}
