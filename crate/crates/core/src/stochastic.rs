//! Noisy zeroth-order oracles reduced to approximately convex ones.
//!
//! Queries are snapped to an ℓ∞ grid of pitch `α`; each grid cell carries a
//! fixed Gaussian noise draw of standard deviation `σ/√τ`, generated from
//! `(seed, cell)` so the same cell always answers the same value. One call is
//! billed as `τ` underlying oracle calls.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::objective::Objective;
use crate::rng::{derive_key, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticOracleConfig {
    pub sigma: f64,
    pub alpha: f64,
    pub tau: u64,
    pub master_seed: u64,
    /// Half-width of the enclosing box `[-R∞, R∞]^n` carrying the grid.
    pub box_radius: f64,
    /// Target accuracy the parameters were solved for.
    pub epsilon: f64,
}

impl StochasticOracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || self.tau == 0 || !(self.sigma >= 0.0) || !(self.box_radius > 0.0) {
            return Err(Error::Config(
                "stochastic oracle needs alpha > 0, tau >= 1, sigma >= 0, R > 0".into(),
            ));
        }
        Ok(())
    }

    /// Standard deviation of one cell's noise, `σ/√τ`.
    pub fn cell_sd(&self) -> f64 {
        self.sigma / (self.tau as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridCell {
    pub index: Vec<i64>,
}

impl GridCell {
    pub fn point(&self, alpha: f64) -> Vec<f64> {
        self.index.iter().map(|&k| alpha * k as f64).collect()
    }
}

/// Per-coordinate nearest multiple of `alpha`, ties toward `-∞`.
pub fn grid_snap(x: &[f64], alpha: f64) -> Result<GridCell> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput("grid pitch must be positive".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("cannot snap a non-finite point".into()));
    }
    Ok(GridCell {
        index: x.iter().map(|v| (v / alpha - 0.5).ceil() as i64).collect(),
    })
}

/// Oracle solving `α = ε/(2Ln)` and
/// `τ = ⌈σ² n² (8n log(R/α) + 8 log(1/δ)) / ε²⌉`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticParams {
    pub tau: u64,
    pub alpha: f64,
}

pub fn stochastic_params(
    n: usize,
    epsilon: f64,
    sigma: f64,
    lipschitz: f64,
    box_radius: f64,
    delta: f64,
) -> Result<StochasticParams> {
    if n == 0 || !(epsilon > 0.0) || !(sigma >= 0.0) || !(lipschitz > 0.0) || !(box_radius > 0.0) {
        return Err(Error::Config("stochastic parameters must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config("delta must lie in (0, 1)".into()));
    }
    let nf = n as f64;
    let alpha = epsilon / (2.0 * lipschitz * nf);
    let ratio = box_radius / alpha;
    if !(ratio > 1.0) {
        return Err(Error::Config(format!(
            "R/alpha = {ratio} <= 1: the grid degenerates to a single cell"
        )));
    }
    let tau = if sigma == 0.0 {
        1
    } else {
        let raw = sigma * sigma * nf * nf * (8.0 * nf * ratio.ln() + 8.0 * (1.0 / delta).ln())
            / (epsilon * epsilon);
        (raw.ceil() as u64).max(1)
    };
    Ok(StochasticParams { tau, alpha })
}

/// High-probability bound on the largest cell noise,
/// `σ √((2n log(R/α) + 2 log(1/δ)) / τ)`.
pub fn noise_bound(n: usize, cfg: &StochasticOracleConfig, delta: f64) -> f64 {
    let nf = n as f64;
    cfg.sigma
        * ((2.0 * nf * (cfg.box_radius / cfg.alpha).ln() + 2.0 * (1.0 / delta).ln())
            / cfg.tau as f64)
            .sqrt()
}

/// Grid-snapped oracle with deterministic per-cell noise.
pub struct StochasticOracle<F> {
    f: F,
    dim: usize,
    cfg: StochasticOracleConfig,
    body: Option<ConvexBody>,
    calls: AtomicU64,
}

impl<F: Fn(&[f64]) -> f64 + Sync> StochasticOracle<F> {
    pub fn new(dim: usize, f: F, cfg: StochasticOracleConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(StochasticOracle {
            f,
            dim,
            cfg,
            body: None,
            calls: AtomicU64::new(0),
        })
    }

    /// Restricts queries to `body`; points outside it become domain errors.
    pub fn with_body(mut self, body: ConvexBody) -> Self {
        self.body = Some(body);
        self
    }

    pub fn config(&self) -> &StochasticOracleConfig {
        &self.cfg
    }

    /// Nearest grid cell inside the enclosing box.
    pub fn cell(&self, x: &[f64]) -> Result<GridCell> {
        let mut cell = grid_snap(x, self.cfg.alpha)?;
        let k_max = (self.cfg.box_radius / self.cfg.alpha).floor() as i64;
        let k_min = (-self.cfg.box_radius / self.cfg.alpha).ceil() as i64;
        for k in cell.index.iter_mut() {
            *k = (*k).clamp(k_min, k_max);
        }
        Ok(cell)
    }

    /// Noise attached to `cell`.
    pub fn cell_noise(&self, cell: &GridCell) -> f64 {
        let sd = self.cfg.cell_sd();
        if sd == 0.0 {
            return 0.0;
        }
        let words: Vec<u64> = cell.index.iter().map(|&k| k as u64).collect();
        let mut rng = stream(derive_key(self.cfg.master_seed, &[0x004e_4f49_5345]), &words);
        let z: f64 = rng.sample(StandardNormal);
        sd * z
    }

    /// `f(snap(x)) + noise(snap(x))`, billed as `τ` calls.
    pub fn query(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput("query point has wrong dimension".into()));
        }
        if let Some(body) = &self.body {
            if !body.contains(x)? {
                return Err(Error::Domain("query point is outside the body".into()));
            }
        }
        let cell = self.cell(x)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok((self.f)(&cell.point(self.cfg.alpha)) + self.cell_noise(&cell))
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Underlying oracle calls billed so far: `τ × calls`.
    pub fn billed(&self) -> u64 {
        self.calls() * self.cfg.tau
    }

    /// The hidden function, for validation only.
    pub fn true_value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for StochasticOracle<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.query(x) {
            Ok(v) => v,
            // Points handed over by the walk are always inside the body.
            Err(e) => panic!("stochastic oracle queried outside its domain: {e}"),
        }
    }

    fn cost_per_call(&self) -> u64 {
        self.cfg.tau
    }

    fn declared_rho(&self) -> Option<f64> {
        Some(self.cfg.epsilon / self.dim as f64)
    }
}

/// Wraps `f` behind the snapped noisy oracle; the result declares
/// `ρ = ε/n`, valid on the event that all cell noises stay below
/// [`noise_bound`].
pub fn wrap_as_approx_convex<F: Fn(&[f64]) -> f64 + Sync>(
    dim: usize,
    f: F,
    cfg: StochasticOracleConfig,
) -> Result<StochasticOracle<F>> {
    StochasticOracle::new(dim, f, cfg)
}
