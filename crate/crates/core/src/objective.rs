//! Objective oracles and the tempered log-densities built from them.

use crate::hit_and_run::LogDensity;

/// Zeroth-order oracle for an objective `F` on `K`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Underlying oracle calls billed per `value` call.
    fn cost_per_call(&self) -> u64 {
        1
    }

    /// Declared bound `ρ` on `|F - f|∞` for the hidden convex `f`, if known.
    fn declared_rho(&self) -> Option<f64> {
        None
    }
}

/// Exact objective from a closure.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
    rho: Option<f64>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { dim, f, rho: None }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn declared_rho(&self) -> Option<f64> {
        self.rho
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn cost_per_call(&self) -> u64 {
        (**self).cost_per_call()
    }
    fn declared_rho(&self) -> Option<f64> {
        (**self).declared_rho()
    }
}

/// `log g = -F / T`.
pub struct Tempered<'a, O: ?Sized> {
    pub objective: &'a O,
    pub temperature: f64,
}

impl<O: Objective + ?Sized> LogDensity for Tempered<'_, O> {
    fn log_density(&self, x: &[f64]) -> f64 {
        -self.objective.value(x) / self.temperature
    }

    fn cost_per_eval(&self) -> u64 {
        self.objective.cost_per_call()
    }
}
