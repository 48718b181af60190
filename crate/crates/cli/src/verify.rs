//! Quadrature-backed checks behind the `verify` subcommand.

use hranneal::annealing::{epoch_count, temperature_schedule};
use hranneal::problems::{ObjectiveSpec, Target1d};
use hranneal::reference::{certify_beta_log_concave, gibbs_mean_gap, warm_start_norm, Axis, Lattice};
use hranneal::rng::stream;
use hranneal::BodySpec;

use crate::CliError;

/// Slack reserved for quadrature error in the strict inequalities.
pub const QUADRATURE_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: &'static str,
    pub subject: String,
    pub parameter: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Trapezoid lattice over a box body (the only bodies where the lattice
/// and the domain coincide).
pub fn box_lattice(body: &BodySpec, points: usize) -> Result<Lattice, CliError> {
    let BodySpec::Box {
        dim,
        lo,
        hi,
        half_width,
    } = body
    else {
        return Err(CliError::Config("verify needs a box body".into()));
    };
    if *dim > 2 {
        return Err(CliError::Config("quadrature checks are limited to n <= 2".into()));
    }
    let h = half_width.unwrap_or(1.0);
    let axes = (0..*dim)
        .map(|k| {
            let a = lo.as_ref().map_or(-h, |v| v[k]);
            let b = hi.as_ref().map_or(h, |v| v[k]);
            Axis::new(a, b, points)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Lattice::new(axes)?)
}

fn max_deviation(spec: &ObjectiveSpec, lattice: &Lattice) -> f64 {
    (0..lattice.len())
        .map(|k| {
            let x = lattice.node(k);
            (spec.value(&x) - spec.convex(&x)).abs()
        })
        .fold(0.0, f64::max)
}

/// `‖μ_i/μ_{i+1}‖ < 5 e^{2ρ/T_i}` along the schedule with ratio
/// `1 - 1/√schedule_dim` down to `ε/schedule_dim`.
pub fn warm_start_checks(
    name: &str,
    spec: &ObjectiveSpec,
    lattice: &Lattice,
    schedule_dim: usize,
    epsilon: f64,
) -> Result<Vec<CheckRow>, CliError> {
    if schedule_dim < 2 {
        return Err(CliError::Config("schedule_dim must be >= 2".into()));
    }
    let rho = max_deviation(spec, lattice);
    let temps = temperature_schedule(schedule_dim, epoch_count(schedule_dim, epsilon));
    temps
        .windows(2)
        .map(|w| {
            let norm = warm_start_norm(|x| spec.value(x), w[0], w[1], lattice)?;
            let bound = 5.0 * (2.0 * rho / w[0]).exp();
            Ok(CheckRow {
                check: "warm_start",
                subject: name.to_string(),
                parameter: format!("T={:?}", w[0]),
                value: norm,
                bound,
                pass: norm + QUADRATURE_MARGIN < bound,
            })
        })
        .collect()
}

/// `E f(X) - min f < (n + 1) T e^{2ρ/T}` for `X ∝ exp(-F/T)`.
pub fn gibbs_checks(
    name: &str,
    spec: &ObjectiveSpec,
    lattice: &Lattice,
    temperatures: &[f64],
) -> Result<Vec<CheckRow>, CliError> {
    temperatures
        .iter()
        .map(|&t| {
            let g = gibbs_mean_gap(|x| spec.convex(x), |x| spec.value(x), t, lattice)?;
            Ok(CheckRow {
                check: "gibbs_gap",
                subject: name.to_string(),
                parameter: format!("T={t:?}"),
                value: g.gap,
                bound: g.bound,
                pass: g.gap + QUADRATURE_MARGIN < g.bound,
            })
        })
        .collect()
}

/// Randomized β-log-concavity certificate for each 1-D target.
pub fn certify_checks(targets: &[Target1d], trials: usize, seed: u64) -> Result<Vec<CheckRow>, CliError> {
    targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut rng = stream(seed, &[0x4345_5254, i as u64]);
            let c = certify_beta_log_concave(|x| t.log_g(x[0]), &[t.lo], &[t.hi], t.beta(), trials, &mut rng)?;
            Ok(CheckRow {
                check: "beta_log_concave",
                subject: t.name.clone(),
                parameter: format!("beta={:?}", t.beta()),
                value: c.worst_violation,
                bound: 0.0,
                pass: c.pass,
            })
        })
        .collect()
}

pub fn write_rows<W: std::io::Write>(w: &mut csv::Writer<W>, rows: &[CheckRow]) -> Result<(), CliError> {
    w.write_record(["check", "subject", "parameter", "value", "bound", "pass"])?;
    for r in rows {
        w.write_record([
            r.check.to_string(),
            r.subject.clone(),
            r.parameter.clone(),
            format!("{:?}", r.value),
            format!("{:?}", r.bound),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
