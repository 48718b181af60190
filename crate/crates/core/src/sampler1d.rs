//! One-dimensional sampler for β-log-concave functions on a bounded segment.
//!
//! Three stages: a three-point interval search for a near-maximizer `p`, a
//! bisection for tail points `e₋₁ ≤ p ≤ e₁` where the function has dropped to
//! roughly `ε̃ g(p)`, and uniform-proposal rejection on `[e₋₁, e₁]` with
//! envelope `g(p) e^{3β}`. Everything works on `log g`.

use rand::Rng;

use crate::error::{Error, Result};

/// Default lower bound on the β used by the near-max search.
pub const DEFAULT_BETA_FLOOR: f64 = 1e-6;
pub const DEFAULT_MAX_BISECTION_ITERS: usize = 200;
pub const DEFAULT_MAX_REJECTIONS: u64 = 1_000_000;

/// Restriction of a log-density to a segment `[lo, hi]`, counting evaluations.
pub struct ChordFunction<F: FnMut(f64) -> f64> {
    log_g: F,
    beta: f64,
    lo: f64,
    hi: f64,
    evals: u64,
}

impl<F: FnMut(f64) -> f64> ChordFunction<F> {
    pub fn new(log_g: F, beta: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!("beta must be >= 0, got {beta}")));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "segment must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(ChordFunction {
            log_g,
            beta,
            lo,
            hi,
            evals: 0,
        })
    }

    #[inline]
    pub fn eval(&mut self, t: f64) -> f64 {
        self.evals += 1;
        (self.log_g)(t)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn evaluations(&self) -> u64 {
        self.evals
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerParams {
    pub eps_tilde: f64,
    pub beta_floor: f64,
    pub max_rejections: u64,
    pub max_bisection_iters: usize,
}

impl Default for SamplerParams {
    fn default() -> Self {
        SamplerParams {
            eps_tilde: 1e-3,
            beta_floor: DEFAULT_BETA_FLOOR,
            max_rejections: DEFAULT_MAX_REJECTIONS,
            max_bisection_iters: DEFAULT_MAX_BISECTION_ITERS,
        }
    }
}

impl SamplerParams {
    pub fn with_eps(eps_tilde: f64) -> Self {
        SamplerParams {
            eps_tilde,
            ..Default::default()
        }
    }

    pub fn effective_beta(&self, beta: f64) -> f64 {
        beta.max(self.beta_floor)
    }

    /// Checks `0 < ε̃ < e^{-2β}/2` and the caps.
    pub fn validate(&self, beta: f64) -> Result<()> {
        let limit = 0.5 * (-2.0 * beta).exp();
        if !(self.eps_tilde > 0.0 && self.eps_tilde < limit) {
            return Err(Error::InvalidInput(format!(
                "eps_tilde = {} must lie in (0, e^(-2β)/2 = {limit})",
                self.eps_tilde
            )));
        }
        if !(self.beta_floor > 0.0) {
            return Err(Error::InvalidInput("beta_floor must be positive".into()));
        }
        if self.max_rejections == 0 || self.max_bisection_iters == 0 {
            return Err(Error::InvalidInput("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// `|a - b|`, with equal infinities treated as equal.
#[inline]
fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Near-maximizer of `g` on its domain: `log g(p) >= max log g - 3β_eff`.
///
/// Returns `(p, log g(p))`.
pub fn find_near_max<F: FnMut(f64) -> f64>(
    g: &mut ChordFunction<F>,
    params: &SamplerParams,
) -> Result<(f64, f64)> {
    let beta = params.effective_beta(g.beta);
    let (mut lo, mut hi) = (g.lo, g.hi);
    let mut best: Option<(f64, f64)> = None;
    let track = |t: f64, v: f64, best: &mut Option<(f64, f64)>| {
        if v.is_nan() {
            return;
        }
        if best.is_none_or(|(_, bv)| v > bv) {
            *best = Some((t, v));
        }
    };

    for _ in 0..params.max_bisection_iters {
        let xl = 0.75 * lo + 0.25 * hi;
        let xc = 0.5 * lo + 0.5 * hi;
        let xr = 0.25 * lo + 0.75 * hi;
        let (gl, gc, gr) = (g.eval(xl), g.eval(xc), g.eval(xr));
        if gl.is_nan() || gc.is_nan() || gr.is_nan() {
            return Err(Error::InvalidInput("log g returned NaN".into()));
        }
        track(xl, gl, &mut best);
        track(xc, gc, &mut best);
        track(xr, gr, &mut best);

        if gap(gl, gr) > beta {
            if gl < gr {
                lo = xl;
            } else {
                hi = xr;
            }
        } else if gap(gl, gc) > beta {
            if gl < gc {
                lo = xl;
            } else {
                hi = xc;
            }
        } else if gap(gr, gc) > beta {
            if gr < gc {
                hi = xr;
            } else {
                lo = xc;
            }
        } else {
            // Flat: the best of the three probes is within 3β of the maximum.
            let mut p = (xl, gl);
            for cand in [(xc, gc), (xr, gr)] {
                if cand.1 > p.1 {
                    p = cand;
                }
            }
            if p.1 == f64::NEG_INFINITY {
                return Err(Error::Degenerate(
                    "g vanishes at every probe of the flat interval".into(),
                ));
            }
            return Ok(p);
        }
        if !(hi > lo) {
            break;
        }
    }
    Err(Error::Sampler {
        message: "near-max search exceeded its iteration cap".into(),
        best: best.map(|(t, _)| t),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Tail point on `side` of `p`: the domain endpoint if `g` there is still at
/// least `½e^{-β}ε̃ g(p)`, otherwise a point with
/// `½e^{-β}ε̃ g(p) <= g(e) <= ε̃ g(p)` found by bisection.
///
/// Returns `(e, log g(e))`.
pub fn find_tail_point<F: FnMut(f64) -> f64>(
    g: &mut ChordFunction<F>,
    side: Side,
    p: f64,
    log_gp: f64,
    params: &SamplerParams,
) -> Result<(f64, f64)> {
    if !(g.lo <= p && p <= g.hi) {
        return Err(Error::Precondition(format!("p = {p} is outside the domain")));
    }
    if !log_gp.is_finite() {
        return Err(Error::Degenerate("g(p) must be positive and finite".into()));
    }
    let (upper, lower) = tail_thresholds(log_gp, g.beta, params.eps_tilde);
    let endpoint = match side {
        Side::Left => g.lo,
        Side::Right => g.hi,
    };
    let at_end = g.eval(endpoint);
    if at_end >= lower {
        return Ok((endpoint, at_end));
    }
    // Invariant: g(near) > ε̃ g(p) (or near == p), g(far) < ½e^{-β}ε̃ g(p).
    let (mut near, mut far) = (p, endpoint);
    for _ in 0..params.max_bisection_iters {
        let mid = 0.5 * (near + far);
        if mid == near || mid == far {
            // The bracket collapsed onto a jump of g that skips the whole
            // window (g is less regular than its declared β). Keep the far
            // side: a wider chord only truncates less.
            log::debug!("tail bracket collapsed on a discontinuity at {far}");
            let v = g.eval(far);
            return Ok((far, v));
        }
        let v = g.eval(mid);
        if v.is_nan() {
            return Err(Error::InvalidInput("log g returned NaN".into()));
        }
        if v > upper {
            near = mid;
        } else if v < lower {
            far = mid;
        } else {
            return Ok((mid, v));
        }
    }
    Err(Error::sampler("tail-point bisection exceeded its iteration cap"))
}

/// `(log(ε̃ g(p)), log(½e^{-β}ε̃ g(p)))`.
pub fn tail_thresholds(log_gp: f64, beta: f64, eps_tilde: f64) -> (f64, f64) {
    let upper = log_gp + eps_tilde.ln();
    let lower = upper - beta - std::f64::consts::LN_2;
    (upper, lower)
}

/// Result of one rejection-sampling call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordSample {
    pub offset: f64,
    pub log_g: f64,
    /// Proposals drawn, including the accepted one.
    pub attempts: u64,
    pub p: f64,
    pub log_gp: f64,
    pub left: f64,
    pub right: f64,
}

impl ChordSample {
    pub fn acceptance_rate(&self) -> f64 {
        1.0 / self.attempts as f64
    }
}

/// Draws one point from (a truncation of) the density proportional to `g`.
pub fn sample_chord<F: FnMut(f64) -> f64, R: Rng + ?Sized>(
    g: &mut ChordFunction<F>,
    params: &SamplerParams,
    rng: &mut R,
) -> Result<ChordSample> {
    params.validate(g.beta)?;
    let (p, log_gp) = find_near_max(g, params)?;
    let (left, _) = find_tail_point(g, Side::Left, p, log_gp, params)?;
    let (right, _) = find_tail_point(g, Side::Right, p, log_gp, params)?;
    let envelope = log_gp + 3.0 * params.effective_beta(g.beta);
    let width = right - left;

    for attempt in 1..=params.max_rejections {
        let x = left + width * rng.random::<f64>();
        let r: f64 = rng.random();
        let lx = g.eval(x);
        if r.ln() <= lx - envelope {
            return Ok(ChordSample {
                offset: x,
                log_g: lx,
                attempts: attempt,
                p,
                log_gp,
                left,
                right,
            });
        }
    }
    Err(Error::sampler(format!(
        "rejection sampler exceeded {} proposals (acceptance rate < {:e})",
        params.max_rejections,
        1.0 / params.max_rejections as f64
    )))
}

/// Lower bound on the acceptance probability from the sampler analysis:
/// `e^{-5β} log 2 / (2 log(2/ε̃))`.
pub fn acceptance_lower_bound(beta: f64, eps_tilde: f64) -> f64 {
    (-5.0 * beta).exp() * std::f64::consts::LN_2 / (2.0 * (2.0 / eps_tilde).ln())
}

/// TV bound between the sampler's law and the exact restriction: `3e^{2β}ε̃`.
pub fn tv_bound(beta: f64, eps_tilde: f64) -> f64 {
    3.0 * (2.0 * beta).exp() * eps_tilde
}
