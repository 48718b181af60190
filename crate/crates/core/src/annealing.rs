//! Simulated annealing over Hit-and-Run strands.
//!
//! Temperatures fall geometrically, `T_{i+1} = T_i (1 - 1/√n)`, from `T_0 = 1`
//! to at most `ε/n`. Each epoch re-rounds the direction map on the previous
//! epoch's points and advances every strand by a warm-started walk against
//! `exp(-F/T_i)`. The output is the best point seen over all epochs.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{condition_number, sorted_eigen, ConvexBody, RoundingMap, MAX_CONDITION};
use crate::hit_and_run::{
    mixing_steps, sampler_precision, walk, QueryCount, Uniform, WalkParams,
    WalkResult,
};
use crate::objective::{Objective, Tempered};
use crate::rng::strand_stream;
use crate::sampler1d::SamplerParams;

pub const DEFAULT_C_STRAND: f64 = 4.0;
pub const DEFAULT_C_MIX: f64 = 1.0;
pub const DEFAULT_GAMMA: f64 = 0.1;
pub const DEFAULT_BURN_IN_BASE: u64 = 100;
pub const DEFAULT_RHO_CAP: f64 = 4.0;

/// Knobs for [`make_plan`]; `Default` gives practice mode.
#[derive(Debug, Clone)]
pub struct PlanOverrides {
    pub c_strand: f64,
    pub c_mix: f64,
    /// Target TV accuracy per epoch.
    pub gamma: f64,
    /// Fixed steps per epoch (practice mode only).
    pub steps: Option<u64>,
    pub theory_mode: bool,
    /// `m₀` in the uniform burn-in length `10 n m₀`.
    pub burn_in_base: u64,
    pub epochs: Option<usize>,
    pub strands: Option<usize>,
    /// Warn when `ρ n / ε` exceeds this.
    pub rho_cap: f64,
    /// Refuse plans whose total step count exceeds this.
    pub step_budget: Option<u64>,
    pub sampler: SamplerParams,
}

impl Default for PlanOverrides {
    fn default() -> Self {
        PlanOverrides {
            c_strand: DEFAULT_C_STRAND,
            c_mix: DEFAULT_C_MIX,
            gamma: DEFAULT_GAMMA,
            steps: None,
            theory_mode: false,
            burn_in_base: DEFAULT_BURN_IN_BASE,
            epochs: None,
            strands: None,
            rho_cap: DEFAULT_RHO_CAP,
            step_budget: None,
            sampler: SamplerParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnnealingPlan {
    pub dim: usize,
    pub epsilon: f64,
    /// Declared `|F - f|∞` bound.
    pub rho: f64,
    /// `T_0 .. T_K`.
    pub temperatures: Vec<f64>,
    pub epochs: usize,
    pub strands: usize,
    /// Steps for epochs `1..=K` (index `i - 1`).
    pub steps: Vec<u64>,
    /// 1-D sampler precision for epochs `1..=K`.
    pub precisions: Vec<f64>,
    /// β handed to the sampler for epochs `1..=K`: `2ρ / T_i`, with `T_i`
    /// floored at `ε/n` outside theory mode.
    pub betas: Vec<f64>,
    pub burn_in: u64,
    pub c_mix: f64,
    pub c_strand: f64,
    pub gamma: f64,
    pub theory_mode: bool,
    pub sampler: SamplerParams,
    pub warnings: Vec<String>,
}

impl AnnealingPlan {
    /// Walk steps summed over strands, burn-in included.
    pub fn total_steps(&self) -> u128 {
        let per_strand = self.burn_in as u128 + self.steps.iter().map(|&m| m as u128).sum::<u128>();
        per_strand * self.strands as u128
    }

    pub fn schedule_ratio(&self) -> f64 {
        1.0 - 1.0 / (self.dim as f64).sqrt()
    }
}

/// `K = ⌈√n log(n/ε)⌉`.
pub fn epoch_count(n: usize, epsilon: f64) -> usize {
    let n = n as f64;
    (n.sqrt() * (n / epsilon).ln()).ceil().max(0.0) as usize
}

/// `N = ⌈c n log n⌉`.
pub fn strand_count(n: usize, c_strand: f64) -> usize {
    let n = n as f64;
    (c_strand * n * n.ln()).ceil().max(1.0) as usize
}

/// `T_i = (1 - 1/√n)^i` for `i = 0..=epochs`, by repeated multiplication.
pub fn temperature_schedule(n: usize, epochs: usize) -> Vec<f64> {
    let q = 1.0 - 1.0 / (n as f64).sqrt();
    let mut t = Vec::with_capacity(epochs + 1);
    t.push(1.0);
    for i in 0..epochs {
        t.push(t[i] * q);
    }
    t
}

/// Practice-mode steps per epoch: `max(50, 10 n²)`.
pub fn practice_steps(n: usize) -> u64 {
    (10 * n * n).max(50) as u64
}

pub fn make_plan(
    n: usize,
    epsilon: f64,
    body: &ConvexBody,
    rho: f64,
    overrides: &PlanOverrides,
) -> Result<AnnealingPlan> {
    if n != body.dim() {
        return Err(Error::Config(format!(
            "plan dimension {n} does not match body dimension {}",
            body.dim()
        )));
    }
    if n < 2 {
        return Err(Error::Config(
            "annealing needs n >= 2 (the schedule ratio 1 - 1/sqrt(n) vanishes at n = 1)".into(),
        ));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::Config("rho must be non-negative".into()));
    }
    if !(overrides.gamma > 0.0 && overrides.gamma < 0.5) {
        return Err(Error::Config("gamma must lie in (0, 1/2)".into()));
    }
    if !(overrides.c_strand > 0.0) || !(overrides.c_mix > 0.0) {
        return Err(Error::Config("plan constants must be positive".into()));
    }
    let mut warnings = Vec::new();
    let excess = rho * n as f64 / epsilon;
    if excess > overrides.rho_cap {
        let msg = format!(
            "rho*n/eps = {excess:.3} exceeds {}: the exp(2 rho / T_K) factor degrades the guarantee",
            overrides.rho_cap
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let epochs = overrides.epochs.unwrap_or_else(|| epoch_count(n, epsilon));
    let strands = overrides
        .strands
        .unwrap_or_else(|| strand_count(n, overrides.c_strand));
    if strands == 0 {
        return Err(Error::Config("need at least one strand".into()));
    }
    let temperatures = temperature_schedule(n, epochs);
    if temperatures[epochs] > epsilon / n as f64 {
        let msg = format!(
            "final temperature {:e} is above eps/n = {:e}",
            temperatures[epochs],
            epsilon / n as f64
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut steps = Vec::with_capacity(epochs);
    let mut precisions = Vec::with_capacity(epochs);
    let mut betas = Vec::with_capacity(epochs);
    // For small n the ceiling in K pushes T_K far below ε/n, where 2ρ/T
    // makes the rejection envelope hopeless. Practice mode saturates the
    // sampler's β at its value at T = ε/n; the target keeps the true T_i.
    let floor_t = if overrides.theory_mode { 0.0 } else { epsilon / n as f64 };
    for &t in &temperatures[1..] {
        let beta = 2.0 * rho / t.max(floor_t);
        let m = if overrides.theory_mode {
            let warm = 5.0 * (2.0 * beta).exp();
            mixing_steps(
                n,
                body.outer_radius(),
                body.inner_radius(),
                beta,
                warm,
                overrides.gamma,
                overrides.c_mix,
            )?
        } else {
            overrides.steps.unwrap_or_else(|| practice_steps(n))
        };
        if m == 0 {
            return Err(Error::Config("steps per epoch must be positive".into()));
        }
        let eps = sampler_precision(overrides.gamma, beta, m)?;
        steps.push(m);
        precisions.push(eps);
        betas.push(beta);
    }

    let plan = AnnealingPlan {
        dim: n,
        epsilon,
        rho,
        temperatures,
        epochs,
        strands,
        steps,
        precisions,
        betas,
        burn_in: 10 * n as u64 * overrides.burn_in_base,
        c_mix: overrides.c_mix,
        c_strand: overrides.c_strand,
        gamma: overrides.gamma,
        theory_mode: overrides.theory_mode,
        sampler: overrides.sampler,
        warnings,
    };
    if let Some(budget) = overrides.step_budget {
        let total = plan.total_steps();
        if total > budget as u128 {
            let largest = plan.steps.iter().max().copied().unwrap_or(0);
            return Err(Error::Config(format!(
                "plan needs {total} walk steps (largest per-epoch m = {largest}), over the budget of {budget}; use practice mode or raise the budget"
            )));
        }
    }
    Ok(plan)
}

/// `(n + 1) T e^{2ρ/T}`: bound on `E f(X) - min f` for `X ∝ exp(-F/T)`.
pub fn gibbs_gap_bound(n: usize, temperature: f64, rho: f64) -> Result<f64> {
    if !(temperature > 0.0) || !(rho >= 0.0) {
        return Err(Error::InvalidInput("need T > 0 and rho >= 0".into()));
    }
    Ok((n as f64 + 1.0) * temperature * (2.0 * rho / temperature).exp())
}

/// Centered empirical covariance `(1/N) Σ (x - x̄)(x - x̄)ᵀ`.
pub fn empirical_covariance(points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n_pts = points.len();
    let dim = points.first().map_or(0, |p| p.len());
    if n_pts == 0 || dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("points must be non-empty with equal dimension".into()));
    }
    let mut mean = DVector::zeros(dim);
    for p in points {
        mean += DVector::from_column_slice(p);
    }
    mean /= n_pts as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for p in points {
        let d = DVector::from_column_slice(p) - &mean;
        cov += &d * d.transpose();
    }
    Ok(cov / n_pts as f64)
}

/// Eigenvalues (ascending) of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    sorted_eigen(m.clone()).0.iter().copied().collect()
}

/// New rounding map `T ∘ previous`, where `T` is the symmetric inverse square
/// root of the covariance of the points after applying `previous`.
pub fn update_rounding(
    points: &[Vec<f64>],
    previous: &RoundingMap,
    epoch: usize,
) -> Result<RoundingMap> {
    let dim = previous.dim();
    if points.len() < dim + 1 {
        return Err(Error::Rounding(format!(
            "{} points cannot span dimension {dim}",
            points.len()
        )));
    }
    let mapped: Vec<Vec<f64>> = points.iter().map(|p| previous.whiten(p)).collect();
    let cov = empirical_covariance(&mapped)?;
    let (values, vectors) = sorted_eigen(cov);
    let top = values[dim - 1];
    if !(values[0] > 1e-12 * top) || !top.is_finite() {
        return Err(Error::Rounding(format!(
            "covariance is rank-deficient (eigenvalues {:e} .. {:e})",
            values[0], top
        )));
    }
    let inv_sqrt = DMatrix::from_diagonal(&values.map(|v| 1.0 / v.sqrt()));
    let sqrt = DMatrix::from_diagonal(&values.map(f64::sqrt));
    let t = &vectors * inv_sqrt * vectors.transpose();
    let t_inv = &vectors * sqrt * vectors.transpose();
    let whitening = t * previous.whitening();
    let matrix = previous.matrix() * t_inv;
    let cond = condition_number(&matrix);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Rounding(format!("rounding condition number {cond:e} exceeds cap")));
    }
    Ok(RoundingMap::from_parts(matrix, whitening, epoch))
}

#[derive(Debug, Clone, Copy)]
pub struct AnnealOptions {
    /// Run strands on the rayon pool (no effect without the `parallel` feature).
    pub parallel: bool,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        AnnealOptions { parallel: true }
    }
}

/// Snapshot at the end of an epoch.
#[derive(Debug, Clone)]
pub struct EpochState {
    pub epoch: usize,
    pub points: Vec<Vec<f64>>,
    pub rounding: RoundingMap,
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub cumulative_queries: QueryCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub temperature: f64,
    pub best_value: f64,
    /// Billed queries spent in this epoch.
    pub queries: u64,
    pub min_acceptance: f64,
    pub median_acceptance: f64,
    /// Eigenvalue range of the covariance of the points entering the epoch.
    pub cov_eig_min: f64,
    pub cov_eig_max: f64,
    /// The rounding update failed and the previous map was kept.
    pub rounding_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct AnnealResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub epoch_log: Vec<EpochRecord>,
    pub state: EpochState,
    /// Set when an epoch aborted; the rest of the result is what was
    /// completed before it.
    pub failure: Option<Error>,
}

impl AnnealResult {
    pub fn queries(&self) -> QueryCount {
        self.state.cumulative_queries
    }
}

fn run_strands<F>(strands: usize, parallel: bool, job: F) -> Vec<Result<WalkResult>>
where
    F: Fn(usize) -> Result<WalkResult> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..strands).into_par_iter().map(job).collect();
    }
    let _ = parallel;
    (0..strands).map(job).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn eig_range(points: &[Vec<f64>]) -> (f64, f64) {
    match empirical_covariance(points) {
        Ok(c) => {
            let e = symmetric_eigenvalues(&c);
            (e[0], e[e.len() - 1])
        }
        Err(_) => (f64::NAN, f64::NAN),
    }
}

/// Runs the annealing schedule of `plan` on `objective` over `body`.
///
/// Strand `j` of epoch `i` draws from the stream derived from
/// `(seed, i, j)`, so serial and parallel runs agree bit for bit.
pub fn anneal<O: Objective + ?Sized>(
    objective: &O,
    body: &ConvexBody,
    plan: &AnnealingPlan,
    seed: u64,
    options: AnnealOptions,
) -> Result<AnnealResult> {
    let n = body.dim();
    if objective.dim() != n || plan.dim != n {
        return Err(Error::InvalidInput("objective, body and plan dimensions differ".into()));
    }
    let cost = objective.cost_per_call();
    let strands = plan.strands;

    // Epoch 0: uniform burn-in from the interior point.
    let mut init = WalkParams::new(n, plan.burn_in.max(1));
    init.sampler = plan.sampler;
    let start = body.interior_point().to_vec();
    let results = run_strands(strands, options.parallel, |j| {
        let mut rng = strand_stream(seed, 0, j as u64);
        walk(&Uniform, body, &start, &init, &mut rng)
    });
    let mut points = Vec::with_capacity(strands);
    for (j, r) in results.into_iter().enumerate() {
        let r = r.map_err(|e| Error::Strand {
            epoch: 0,
            strand: j,
            source: Box::new(e),
        })?;
        points.push(r.final_point);
    }

    let mut queries = QueryCount::default();
    let mut best_value = f64::INFINITY;
    let mut best_point = points[0].clone();
    for p in &points {
        let v = objective.value(p);
        if v < best_value {
            best_value = v;
            best_point = p.clone();
        }
    }
    queries.record(strands as u64, cost);
    let (e0, e1) = eig_range(&points);
    let mut log = vec![EpochRecord {
        epoch: 0,
        temperature: plan.temperatures[0],
        best_value,
        queries: queries.billed,
        min_acceptance: 1.0,
        median_acceptance: 1.0,
        cov_eig_min: e0,
        cov_eig_max: e1,
        rounding_fallback: false,
    }];
    let mut rounding = RoundingMap::identity(n);
    let mut failure = None;
    let mut completed = 0;

    for i in 1..=plan.epochs {
        let (cov_min, cov_max) = eig_range(&points);
        let mut fallback = false;
        match update_rounding(&points, &rounding, i) {
            Ok(map) => rounding = map,
            Err(e) => {
                log::warn!("epoch {i}: keeping previous rounding map: {e}");
                fallback = true;
            }
        }
        let temperature = plan.temperatures[i];
        let target = Tempered {
            objective,
            temperature,
        };
        let mut params = WalkParams::new(n, plan.steps[i - 1]);
        params.rounding = rounding.clone();
        params.beta = plan.betas[i - 1];
        params.sampler = SamplerParams {
            eps_tilde: plan.precisions[i - 1],
            ..plan.sampler
        };
        let results = run_strands(strands, options.parallel, |j| {
            let mut rng = strand_stream(seed, i as u64, j as u64);
            walk(&target, body, &points[j], &params, &mut rng)
        });

        let mut epoch_queries = QueryCount::default();
        let mut next = Vec::with_capacity(strands);
        let mut rates = Vec::with_capacity(strands);
        let mut err = None;
        for (j, r) in results.into_iter().enumerate() {
            match r {
                Ok(w) => {
                    epoch_queries.merge(w.oracle_queries);
                    rates.push(w.rejection_stats.acceptance_rate());
                    next.push(w.final_point);
                }
                Err(e) => {
                    err = Some(Error::Strand {
                        epoch: i,
                        strand: j,
                        source: Box::new(e),
                    });
                    break;
                }
            }
        }
        if let Some(e) = err {
            log::error!("annealing aborted: {e}");
            failure = Some(e);
            break;
        }
        for p in &next {
            let v = objective.value(p);
            if v < best_value {
                best_value = v;
                best_point = p.clone();
            }
        }
        epoch_queries.record(strands as u64, cost);
        queries.merge(epoch_queries);
        points = next;
        completed = i;
        log.push(EpochRecord {
            epoch: i,
            temperature,
            best_value,
            queries: epoch_queries.billed,
            min_acceptance: rates.iter().copied().fold(f64::INFINITY, f64::min),
            median_acceptance: median(rates),
            cov_eig_min: cov_min,
            cov_eig_max: cov_max,
            rounding_fallback: fallback,
        });
    }

    Ok(AnnealResult {
        best_point: best_point.clone(),
        best_value,
        epoch_log: log,
        state: EpochState {
            epoch: completed,
            points,
            rounding,
            best_value,
            best_point,
            cumulative_queries: queries,
        },
        failure,
    })
}

/// `epoch,temperature,best_value,queries_this_epoch,min_acceptance,median_acceptance,cov_eig_min,cov_eig_max`
pub fn write_epoch_log_csv<W: Write>(mut out: W, log: &[EpochRecord]) -> std::io::Result<()> {
    writeln!(
        out,
        "epoch,temperature,best_value,queries_this_epoch,min_acceptance,median_acceptance,cov_eig_min,cov_eig_max"
    )?;
    for r in log {
        writeln!(
            out,
            "{},{:?},{:?},{},{:?},{:?},{:?},{:?}",
            r.epoch,
            r.temperature,
            r.best_value,
            r.queries,
            r.min_acceptance,
            r.median_acceptance,
            r.cov_eig_min,
            r.cov_eig_max
        )?;
    }
    Ok(())
}
