//! One function per subcommand. Each reads the config, runs, and writes its
//! CSVs plus `manifest.csv` into the output directory.

use std::io::Write;

use hranneal::annealing::write_epoch_log_csv;
use hranneal::hit_and_run::{walk, write_trace_csv, Uniform, WalkResult};
use hranneal::objective::Tempered;
use hranneal::problems::registry_1d;
use hranneal::reference::{histogram, quadrature_density, tv_masses, Lattice};
use hranneal::rng::{stream, strand_stream};
use hranneal::sampler1d::{sample_chord, tv_bound, ChordFunction, SamplerParams};
use hranneal::staged::{critical_radius, stage_bound, write_stage_log_csv, StagedConfig};
use hranneal::stochastic::{stochastic_params, StochasticOracleConfig};
use hranneal::{
    anneal, make_plan, staged_optimize, AnnealOptions, AnnealResult, AnnealingPlan, ConvexBody,
    FnObjective, Objective, StochasticOracle, WalkParams,
};
use rayon::prelude::*;

use crate::config::{DecaySpec, OracleSpec, ProblemConfig, RunConfig, VerifyConfig};
use crate::output::{join, num, Manifest, OutDir};
use crate::verify;
use crate::CliError;

/// Execution settings that must not change any output byte.
#[derive(Debug, Clone, Copy)]
pub struct Exec {
    pub threads: usize,
}

impl Exec {
    fn options(&self) -> AnnealOptions {
        AnnealOptions {
            parallel: self.threads > 1,
        }
    }
}

pub fn sample1d(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let sc = cfg.section(&cfg.sample1d, "sample1d")?;
    let target = sc.target.resolve()?;
    let beta = target.beta();
    let params = SamplerParams::with_eps(sc.eps_tilde);
    params.validate(beta)?;
    let mut g = ChordFunction::new(|x| target.log_g(x), beta, target.lo, target.hi)?;
    let mut rng = stream(cfg.seed, &[0x0053_3144]);

    let mut w = out.file("samples.csv")?;
    writeln!(w, "index,x,attempts")?;
    let mut samples = Vec::with_capacity(sc.samples);
    let mut attempts = 0u64;
    for i in 0..sc.samples {
        let s = sample_chord(&mut g, &params, &mut rng)?;
        attempts += s.attempts;
        writeln!(w, "{i},{},{}", num(s.offset), s.attempts)?;
        samples.push(vec![s.offset]);
    }
    w.flush()?;

    let rate = sc.samples as f64 / attempts.max(1) as f64;
    let tv = if sc.tv_bins > 0 && !samples.is_empty() {
        let lattice = Lattice::line(target.lo, target.hi, sc.tv_bins * 100 + 1)?;
        let exact = quadrature_density(|x| target.log_g(x[0]), &lattice)?.bin_masses(sc.tv_bins)?;
        Some(tv_masses(&histogram(&samples, &lattice, sc.tv_bins)?, &exact)?)
    } else {
        None
    };
    let mut s = out.csv("summary.csv")?;
    s.write_record(["target", "beta", "samples", "attempts", "acceptance_rate", "evaluations", "tv", "tv_bound"])?;
    s.write_record([
        target.name.clone(),
        num(beta),
        sc.samples.to_string(),
        attempts.to_string(),
        num(rate),
        g.evaluations().to_string(),
        tv.map_or(String::new(), num),
        num(tv_bound(beta, sc.eps_tilde)),
    ])?;
    s.flush()?;

    let mut m = Manifest::new("sample1d", cfg)?;
    m.derived("beta", num(beta));
    m.derived("eps_tilde", num(sc.eps_tilde));
    m.write(out)
}

fn build_body(p: &ProblemConfig) -> Result<ConvexBody, CliError> {
    Ok(p.body.build()?)
}

/// Declared `|F - f|∞`: config value, else the objective's own bound, else `ε/n`.
fn declared_rho(p: &ProblemConfig, explicit: Option<f64>, epsilon: f64) -> f64 {
    explicit
        .or_else(|| p.objective.non_convexity())
        .unwrap_or(epsilon / p.objective.dim as f64)
}

pub fn walk_cmd(cfg: &RunConfig, out: &OutDir, exec: Exec) -> Result<(), CliError> {
    let wc = cfg.section(&cfg.walk, "walk")?;
    let p = cfg.problem()?;
    let body = build_body(p)?;
    let n = body.dim();
    let start = wc.start.clone().unwrap_or_else(|| body.interior_point().to_vec());
    if start.len() != n {
        return Err(CliError::Config("walk start has the wrong dimension".into()));
    }
    if wc.replicas == 0 {
        return Err(CliError::Config("walk needs at least one replica".into()));
    }
    let spec = p.objective.clone();
    let objective = FnObjective::new(n, move |x: &[f64]| spec.value(x));
    let mut params = WalkParams::new(n, wc.steps);
    params.sampler = SamplerParams::with_eps(wc.eps_tilde);
    params.record_trace = wc.replicas == 1;
    let beta = match wc.temperature {
        Some(t) if t.is_nan() || t <= 0.0 => return Err(CliError::Config("temperature must be positive".into())),
        Some(t) => wc
            .beta
            .unwrap_or_else(|| 2.0 * p.objective.non_convexity().unwrap_or(0.0) / t),
        None => 0.0,
    };
    params.beta = beta;
    params.sampler.validate(beta)?;

    let run = |j: u64| -> hranneal::Result<WalkResult> {
        let mut rng = strand_stream(cfg.seed, 0, j);
        match wc.temperature {
            Some(t) => {
                let target = Tempered {
                    objective: &objective,
                    temperature: t,
                };
                walk(&target, &body, &start, &params, &mut rng)
            }
            None => walk(&Uniform, &body, &start, &params, &mut rng),
        }
    };
    let results: Vec<WalkResult> = if exec.threads > 1 {
        (0..wc.replicas).into_par_iter().map(run).collect::<hranneal::Result<_>>()?
    } else {
        (0..wc.replicas).map(run).collect::<hranneal::Result<_>>()?
    };

    if let Some(trace) = results[0].trace.as_ref() {
        write_trace_csv(out.file("trace.csv")?, trace)?;
    }
    let mut w = out.file("final_points.csv")?;
    write!(w, "replica")?;
    for k in 1..=n {
        write!(w, ",x{k}")?;
    }
    writeln!(w, ",log_g,queries,acceptance_rate")?;
    for (j, r) in results.iter().enumerate() {
        write!(w, "{j}")?;
        for v in &r.final_point {
            write!(w, ",{}", num(*v))?;
        }
        writeln!(
            w,
            ",{},{},{}",
            r.final_log_g.map_or(String::new(), num),
            r.oracle_queries.billed,
            num(r.rejection_stats.acceptance_rate())
        )?;
    }
    w.flush()?;

    let mut m = Manifest::new("walk", cfg)?;
    m.derived("beta", num(beta));
    m.derived("eps_tilde", num(wc.eps_tilde));
    m.derived("m", wc.steps);
    m.write(out)
}

fn plan_manifest(m: &mut Manifest, plan: &AnnealingPlan) {
    m.derived("K", plan.epochs);
    m.derived("N", plan.strands);
    m.derived("m", join(plan.steps.iter().map(|s| s.to_string())));
    m.derived("eps_tilde", join(plan.precisions.iter().map(|v| num(*v))));
    m.derived("rho", num(plan.rho));
    m.derived("T_K", num(*plan.temperatures.last().expect("T_0 always present")));
    m.derived("burn_in", plan.burn_in);
    m.derived("total_steps", plan.total_steps());
    for w in &plan.warnings {
        m.derived("warning", w);
    }
}

fn write_best(
    out: &OutDir,
    point: &[f64],
    value: f64,
    hidden: f64,
    calls: u64,
    billed: u64,
    failure: Option<String>,
) -> Result<(), CliError> {
    let mut w = out.csv("best.csv")?;
    let mut header: Vec<String> = (1..=point.len()).map(|k| format!("x{k}")).collect();
    header.extend(["F", "f", "calls", "billed_queries", "failure"].map(String::from));
    w.write_record(&header)?;
    let mut row: Vec<String> = point.iter().map(|v| num(*v)).collect();
    row.extend([num(value), num(hidden), calls.to_string(), billed.to_string(), failure.unwrap_or_default()]);
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

fn finish_anneal(
    out: &OutDir,
    res: &AnnealResult,
    hidden: f64,
) -> Result<(), CliError> {
    write_epoch_log_csv(out.file("epoch_log.csv")?, &res.epoch_log)?;
    let q = res.queries();
    write_best(
        out,
        &res.best_point,
        res.best_value,
        hidden,
        q.calls,
        q.billed,
        res.failure.as_ref().map(|e| e.to_string()),
    )
}

/// Prints the theory-mode step count and turns a budget overrun into a
/// refusal that points at practice mode.
fn plan_or_refuse(
    n: usize,
    epsilon: f64,
    body: &ConvexBody,
    rho: f64,
    ac: &crate::config::AnnealConfig,
) -> Result<AnnealingPlan, CliError> {
    let overrides = ac.overrides();
    if ac.theory_mode {
        let unbounded = hranneal::PlanOverrides {
            step_budget: None,
            ..overrides.clone()
        };
        let probe = make_plan(n, epsilon, body, rho, &unbounded)?;
        let largest = probe.steps.iter().max().copied().unwrap_or(0);
        eprintln!(
            "theory mode: m = {largest} steps per strand in the last epoch ({} walk steps in total)",
            probe.total_steps()
        );
        if probe.total_steps() > ac.step_budget as u128 {
            return Err(CliError::Config(format!(
                "theory-mode plan needs {} walk steps (m = {largest}), over the step budget of {}; \
                 rerun without theory_mode (practice mode, m = max(50, 10 n^2)) or raise step_budget",
                probe.total_steps(),
                ac.step_budget
            )));
        }
    }
    Ok(make_plan(n, epsilon, body, rho, &overrides)?)
}

pub fn anneal_cmd(cfg: &RunConfig, out: &OutDir, exec: Exec, require_stochastic: bool) -> Result<(), CliError> {
    let ac = cfg.section(&cfg.anneal, "anneal")?;
    let p = cfg.problem()?;
    let body = build_body(p)?;
    let n = body.dim();
    let spec = p.objective.clone();
    let name = if require_stochastic { "stoch-opt" } else { "anneal" };
    let mut m = Manifest::new(name, cfg)?;

    match &p.oracle {
        OracleSpec::Exact => {
            if require_stochastic {
                return Err(CliError::Config("stoch-opt needs problem.oracle.kind = \"stochastic\"".into()));
            }
            let rho = declared_rho(p, ac.rho, ac.epsilon);
            let plan = plan_or_refuse(n, ac.epsilon, &body, rho, ac)?;
            plan_manifest(&mut m, &plan);
            let s = spec.clone();
            let objective = FnObjective::new(n, move |x: &[f64]| s.value(x)).with_rho(rho);
            let res = anneal(&objective, &body, &plan, cfg.seed, exec.options())?;
            finish_anneal(out, &res, spec.convex(&res.best_point))?;
            m.write(out)?;
            failure_to_error(&res)
        }
        OracleSpec::Stochastic {
            sigma,
            delta,
            lipschitz,
            box_radius,
            epsilon,
        } => {
            let eps = epsilon.unwrap_or(ac.epsilon);
            let r_inf = box_radius.unwrap_or_else(|| {
                body.outer_radius() + body.interior_point().iter().fold(0.0f64, |a, v| a.max(v.abs()))
            });
            let sp = stochastic_params(n, eps, *sigma, *lipschitz, r_inf, *delta)?;
            let oc = StochasticOracleConfig {
                sigma: *sigma,
                alpha: sp.alpha,
                tau: sp.tau,
                master_seed: hranneal::rng::derive_key(cfg.seed, &[0x4f52_4143_4c45]),
                box_radius: r_inf,
                epsilon: eps,
            };
            let s = spec.clone();
            let oracle = StochasticOracle::new(n, move |x: &[f64]| s.value(x), oc)?;
            let rho = ac.rho.unwrap_or_else(|| oracle.declared_rho().unwrap_or(eps / n as f64));
            let plan = plan_or_refuse(n, ac.epsilon, &body, rho, ac)?;
            m.derived("alpha", num(sp.alpha));
            m.derived("tau", sp.tau);
            m.derived("box_radius", num(r_inf));
            plan_manifest(&mut m, &plan);
            let res = anneal(&oracle, &body, &plan, cfg.seed, exec.options())?;
            finish_anneal(out, &res, spec.convex(&res.best_point))?;
            m.derived("oracle_calls", oracle.calls());
            m.derived("oracle_billed", oracle.billed());
            m.write(out)?;
            failure_to_error(&res)
        }
    }
}

fn failure_to_error(res: &AnnealResult) -> Result<(), CliError> {
    match &res.failure {
        Some(e) => Err(CliError::Algorithm(format!("annealing stopped early: {e}"))),
        None => Ok(()),
    }
}

pub fn staged_cmd(cfg: &RunConfig, out: &OutDir, exec: Exec) -> Result<(), CliError> {
    let sc = cfg.section(&cfg.staged, "staged")?;
    let p = cfg.problem()?;
    let body = build_body(p)?;
    let n = body.dim();
    let model = sc.model.build()?;
    let spec = p.objective.clone();
    let s = spec.clone();
    let objective = FnObjective::new(n, move |x: &[f64]| s.value(x));
    let mut staged = StagedConfig::new(sc.inner_epsilon, sc.eps_rel);
    staged.inner.steps = sc.steps;
    staged.options = exec.options();
    if let Some(k) = sc.max_stages {
        staged.max_stages = k;
    }
    let r_star = critical_radius(&model, n)?;
    let res = staged_optimize(&objective, &model, &body, &sc.x0, sc.r0, &staged, cfg.seed)?;
    write_stage_log_csv(out.file("stage_log.csv")?, &res.stages)?;
    write_best(out, &res.point, res.value, spec.convex(&res.point), 0, res.total_queries, None)?;

    let mut m = Manifest::new("staged", cfg)?;
    m.derived("r_star", num(r_star));
    if let DecaySpec::Polynomial { p, .. } = sc.model {
        if sc.r0 > r_star {
            m.derived("stage_bound", num(stage_bound(p, sc.r0, r_star, sc.eps_rel)));
        }
    }
    m.derived("stages", res.stages.len());
    m.derived("stop_reason", &res.stop_reason);
    m.write(out)
}

pub fn verify_cmd(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let default = VerifyConfig::default();
    let vc = cfg.verify.as_ref().unwrap_or(&default);
    let mut rows = Vec::new();
    if let Some(p) = &cfg.problem {
        let lattice = verify::box_lattice(&p.body, vc.lattice_points)?;
        rows.extend(verify::warm_start_checks("objective", &p.objective, &lattice, vc.schedule_dim, vc.epsilon)?);
        rows.extend(verify::gibbs_checks("objective", &p.objective, &lattice, &vc.temperatures)?);
    }
    let all = registry_1d();
    let targets: Vec<_> = if vc.targets.is_empty() {
        all
    } else {
        vc.targets
            .iter()
            .map(|t| crate::config::TargetRef::Named(t.clone()).resolve())
            .collect::<Result<_, _>>()?
    };
    rows.extend(verify::certify_checks(&targets, vc.certify_trials, cfg.seed)?);
    verify::write_rows(&mut out.csv("verify.csv")?, &rows)?;
    let mut m = Manifest::new("verify", cfg)?;
    m.derived("checks", rows.len());
    m.write(out)?;
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} {} {}", r.check, r.subject, r.parameter))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}
