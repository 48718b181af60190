//! Brute-force quadrature references for 1-D and 2-D targets.
//!
//! Everything here is a trapezoid rule on a uniform lattice, evaluated in log
//! space with the maximum subtracted, so targets spanning hundreds of
//! log-units normalize without underflow.

use rand::Rng;

use crate::annealing::gibbs_gap_bound;
use crate::error::{Error, Result};

/// Uniform grid on `[lo, hi]` with `points` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || points < 2 {
            return Err(Error::InvalidInput("axis needs lo < hi and at least 2 points".into()));
        }
        Ok(Axis { lo, hi, points })
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.points {
            0.5
        } else {
            1.0
        }
    }
}

/// 1-D or 2-D tensor lattice; node `(i, j)` is stored at `i * points_y + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    axes: Vec<Axis>,
}

impl Lattice {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidInput("quadrature supports 1-D and 2-D lattices".into()));
        }
        Ok(Lattice { axes })
    }

    pub fn line(lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(vec![Axis::new(lo, hi, points)?])
    }

    pub fn square(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let a = Axis::new(lo, hi, points)?;
        Self::new(vec![a, a])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn cell_measure(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        match self.axes.as_slice() {
            [a] => vec![a.node(k)],
            [a, b] => vec![a.node(k / b.points), b.node(k % b.points)],
            _ => unreachable!(),
        }
    }

    /// Trapezoid weight of node `k`, in units of the cell measure.
    fn weight(&self, k: usize) -> f64 {
        match self.axes.as_slice() {
            [a] => a.trapezoid_weight(k),
            [a, b] => a.trapezoid_weight(k / b.points) * b.trapezoid_weight(k % b.points),
            _ => unreachable!(),
        }
    }

    /// `log ∫ exp(h)` by the trapezoid rule, given `h` at every node.
    fn log_integral(&self, h: &[f64]) -> f64 {
        let m = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY || m.is_nan() {
            return m;
        }
        let s: f64 = h
            .iter()
            .enumerate()
            .map(|(k, v)| self.weight(k) * (v - m).exp())
            .sum();
        m + (s * self.cell_measure()).ln()
    }

    fn evaluate(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|k| f(&self.node(k))).collect()
    }
}

/// Normalized density on a lattice: `weights` are trapezoid masses of the
/// nodes and sum to one; `density` holds the normalized values `g(x)/Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub lattice: Lattice,
    pub weights: Vec<f64>,
    pub density: Vec<f64>,
}

impl GridDensity {
    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// `Σ w_k φ(x_k)`.
    pub fn expectation(&self, phi: impl Fn(&[f64]) -> f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * phi(&self.lattice.node(k)))
            .sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|d| self.expectation(|x| x[d]))
            .collect()
    }

    /// Masses of `bins` equal bins per axis, integrating the trapezoid
    /// interpolant cell by cell. Each axis must have `(points - 1)` divisible
    /// by `bins`.
    pub fn bin_masses(&self, bins: usize) -> Result<Vec<f64>> {
        for a in self.lattice.axes() {
            if bins == 0 || (a.points - 1) % bins != 0 {
                return Err(Error::InvalidInput(format!(
                    "{} nodes do not split into {bins} bins",
                    a.points
                )));
            }
        }
        let h = self.lattice.cell_measure();
        match self.lattice.axes() {
            [a] => {
                let per = (a.points - 1) / bins;
                let mut out = vec![0.0; bins];
                for i in 0..a.points - 1 {
                    out[i / per] += 0.5 * h * (self.density[i] + self.density[i + 1]);
                }
                Ok(out)
            }
            [a, b] => {
                let (px, py) = ((a.points - 1) / bins, (b.points - 1) / bins);
                let mut out = vec![0.0; bins * bins];
                let at = |i: usize, j: usize| self.density[i * b.points + j];
                for i in 0..a.points - 1 {
                    for j in 0..b.points - 1 {
                        let cell = 0.25 * h * (at(i, j) + at(i + 1, j) + at(i, j + 1) + at(i + 1, j + 1));
                        out[(i / px) * bins + j / py] += cell;
                    }
                }
                Ok(out)
            }
            _ => unreachable!(),
        }
    }
}

/// Trapezoid-normalized density of `exp(log_g)` on `lattice`.
pub fn quadrature_density(log_g: impl Fn(&[f64]) -> f64, lattice: &Lattice) -> Result<GridDensity> {
    let values = lattice.evaluate(log_g);
    if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::InvalidInput("log density must be bounded above and not NaN".into()));
    }
    let log_z = lattice.log_integral(&values);
    if !log_z.is_finite() {
        return Err(Error::Degenerate("log density is -inf on the whole lattice".into()));
    }
    let h = lattice.cell_measure();
    let density: Vec<f64> = values.iter().map(|v| (v - log_z).exp()).collect();
    let weights = density
        .iter()
        .enumerate()
        .map(|(k, d)| d * h * lattice.weight(k))
        .collect();
    Ok(GridDensity {
        lattice: lattice.clone(),
        weights,
        density,
    })
}

/// `½ Σ |p_k - q_k|` over node masses.
pub fn tv_distance(p: &GridDensity, q: &GridDensity) -> Result<f64> {
    if p.lattice != q.lattice {
        return Err(Error::InvalidInput("densities live on different lattices".into()));
    }
    tv_masses(&p.weights, &q.weights)
}

/// `½ Σ |p_k - q_k|` for two mass vectors of equal length.
pub fn tv_masses(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidInput("mass vectors differ in length".into()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Normalized histogram of `samples` on `bins` equal bins per axis of
/// `lattice`'s box. Samples on or past an edge land in the edge bin.
pub fn histogram(samples: &[Vec<f64>], lattice: &Lattice, bins: usize) -> Result<Vec<f64>> {
    if samples.is_empty() || bins == 0 {
        return Err(Error::InvalidInput("need samples and at least one bin".into()));
    }
    let axes = lattice.axes();
    let index = |a: &Axis, v: f64| -> usize {
        let t = ((v - a.lo) / (a.hi - a.lo) * bins as f64).floor();
        t.clamp(0.0, (bins - 1) as f64) as usize
    };
    let mut out = vec![0.0; bins.pow(axes.len() as u32)];
    for s in samples {
        if s.len() != axes.len() {
            return Err(Error::InvalidInput("sample dimension does not match lattice".into()));
        }
        let k = match axes {
            [a] => index(a, s[0]),
            [a, b] => index(a, s[0]) * bins + index(b, s[1]),
            _ => unreachable!(),
        };
        out[k] += 1.0;
    }
    let total = samples.len() as f64;
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

/// `log Y(a)` with `Y(a) = ∫ exp(-a F)`.
fn log_partition(values: &[f64], a: f64, lattice: &Lattice) -> f64 {
    let h: Vec<f64> = values.iter().map(|f| -a * f).collect();
    lattice.log_integral(&h)
}

/// `Y(2/T_i - 1/T_{i+1}) Y(1/T_{i+1}) / Y(1/T_i)²`, the L2 ratio norm of
/// consecutive annealing distributions.
pub fn warm_start_norm(
    objective: impl Fn(&[f64]) -> f64,
    t_i: f64,
    t_next: f64,
    lattice: &Lattice,
) -> Result<f64> {
    if !(t_i > 0.0) || !(t_next > 0.0) {
        return Err(Error::InvalidInput("temperatures must be positive".into()));
    }
    let values = lattice.evaluate(objective);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("objective must be finite on the lattice".into()));
    }
    let a = log_partition(&values, 2.0 / t_i - 1.0 / t_next, lattice);
    let b = log_partition(&values, 1.0 / t_next, lattice);
    let c = log_partition(&values, 1.0 / t_i, lattice);
    let log_ratio = a + b - 2.0 * c;
    if !log_ratio.is_finite() {
        return Err(Error::Precision(format!(
            "partition functions under- or overflowed (log Y terms {a}, {b}, {c})"
        )));
    }
    Ok(log_ratio.exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsGap {
    /// `E f(X) - min f` with `X ∝ exp(-F/T)`.
    pub gap: f64,
    /// `(n + 1) T e^{2ρ/T}`.
    pub bound: f64,
    /// `max |F - f|` on the lattice.
    pub rho: f64,
}

pub fn gibbs_mean_gap(
    f: impl Fn(&[f64]) -> f64,
    big_f: impl Fn(&[f64]) -> f64,
    temperature: f64,
    lattice: &Lattice,
) -> Result<GibbsGap> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidInput("temperature must be positive".into()));
    }
    let fv = lattice.evaluate(&f);
    let bf = lattice.evaluate(&big_f);
    let rho = fv
        .iter()
        .zip(&bf)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let pi = quadrature_density(|x| -big_f(x) / temperature, lattice)?;
    let mean: f64 = pi.weights.iter().zip(&fv).map(|(w, v)| w * v).sum();
    let min = fv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GibbsGap {
        gap: mean - min,
        bound: gibbs_gap_bound(lattice.dim(), temperature, rho)?,
        rho,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub pass: bool,
    /// Largest `-β + α log g(x) + (1-α) log g(y) - log g(αx + (1-α)y)` seen.
    pub worst_violation: f64,
    pub trials: usize,
}

/// Randomized check of `log g(αx + (1-α)y) ≥ -β + α log g(x) + (1-α) log g(y)`
/// with `x, y` uniform in the box `[lo, hi]`.
pub fn certify_beta_log_concave<R: Rng + ?Sized>(
    log_g: impl Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    beta: f64,
    trials: usize,
    rng: &mut R,
) -> Result<Certificate> {
    if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
        return Err(Error::InvalidInput("certification box needs lo < hi".into()));
    }
    let draw = |rng: &mut R| -> Vec<f64> {
        lo.iter()
            .zip(hi)
            .map(|(a, b)| rng.random_range(*a..*b))
            .collect()
    };
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let x = draw(rng);
        let y = draw(rng);
        let t: f64 = rng.random();
        let gx = log_g(&x);
        let gy = log_g(&y);
        if gx == f64::NEG_INFINITY || gy == f64::NEG_INFINITY {
            continue;
        }
        let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let v = -beta + t * gx + (1.0 - t) * gy - log_g(&z);
        worst = worst.max(v);
    }
    Ok(Certificate {
        pass: worst <= 1e-12,
        worst_violation: worst,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn exp_mean(a: f64) -> f64 {
        1.0 / a - (-a).exp() / (1.0 - (-a).exp())
    }

    #[test]
    fn constant_target_trapezoid_weights() {
        let l = Lattice::line(0.0, 1.0, 1001).unwrap();
        let d = quadrature_density(|_| 0.0, &l).unwrap();
        assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(d.weights[1..1000].iter().all(|w| (w - 1e-3).abs() < 1e-15));
        assert!((d.weights[0] - 5e-4).abs() < 1e-15);
        assert!(d.density.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn exponential_mean() {
        let l = Lattice::line(0.0, 1.0, 10_001).unwrap();
        let d = quadrature_density(|x| -5.0 * x[0], &l).unwrap();
        assert!((d.mean()[0] - exp_mean(5.0)).abs() < 1e-4);
        assert!((exp_mean(5.0) - 0.1933).abs() < 1e-4);
    }

    #[test]
    fn refinement_is_stable() {
        let target = |x: &[f64]| -5.0 * x[0] + 0.3 * (3.0 * x[0]).sin();
        let coarse = quadrature_density(target, &Lattice::line(0.0, 1.0, 1001).unwrap()).unwrap();
        let fine = quadrature_density(target, &Lattice::line(0.0, 1.0, 2001).unwrap()).unwrap();
        // Compare on a common partition: masses of 100 equal bins.
        let (bc, bf) = (coarse.bin_masses(100).unwrap(), fine.bin_masses(100).unwrap());
        for (c, f) in bc.iter().zip(&bf) {
            assert!((c - f).abs() < 1e-6, "{c} {f}");
        }
        // Interior node masses agree with the full-weighted fine masses.
        for i in 1..1000 {
            let r = fine.weights[2 * i] + 0.5 * (fine.weights[2 * i - 1] + fine.weights[2 * i + 1]);
            assert!((coarse.weights[i] - r).abs() < 1e-6);
        }
    }

    #[test]
    fn large_log_range_normalizes() {
        let l = Lattice::line(0.0, 1.0, 1001).unwrap();
        let d = quadrature_density(|x| -800.0 * x[0] - 1e4, &l).unwrap();
        assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(
            quadrature_density(|_| f64::NEG_INFINITY, &l),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn tv_examples() {
        let l = Lattice::line(0.0, 1.0, 10_000).unwrap();
        let u = quadrature_density(|_| 0.0, &l).unwrap();
        let e = quadrature_density(|x| -5.0 * x[0], &l).unwrap();
        assert_eq!(tv_distance(&u, &u).unwrap(), 0.0);
        let z = 1.0 - (-5f64).exp();
        let x0 = -((z / 5.0).ln()) / 5.0;
        let closed = (1.0 - (-5.0 * x0).exp()) / z - x0;
        assert!((tv_distance(&u, &e).unwrap() - closed).abs() < 1e-4);

        let left = quadrature_density(|x| if x[0] < 0.5 { 0.0 } else { f64::NEG_INFINITY }, &l).unwrap();
        let right = quadrature_density(|x| if x[0] >= 0.5 { 0.0 } else { f64::NEG_INFINITY }, &l).unwrap();
        assert!((tv_distance(&left, &right).unwrap() - 1.0).abs() < 1e-12);

        let other = quadrature_density(|_| 0.0, &Lattice::line(0.0, 1.0, 101).unwrap()).unwrap();
        assert!(tv_distance(&u, &other).is_err());
    }

    #[test]
    fn tv_is_a_metric_on_random_triples() {
        let mut rng = stream(8, &[]);
        let l = Lattice::line(0.0, 1.0, 201).unwrap();
        for _ in 0..50 {
            let mut make = || {
                let (a, b): (f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(0.0..20.0));
                quadrature_density(move |x| a * x[0] + (b * x[0]).sin(), &l).unwrap()
            };
            let (p, q, r) = (make(), make(), make());
            let pq = tv_distance(&p, &q).unwrap();
            assert_eq!(pq, tv_distance(&q, &p).unwrap());
            assert!(pq <= tv_distance(&p, &r).unwrap() + tv_distance(&r, &q).unwrap() + 1e-15);
            assert!((0.0..=1.0).contains(&pq));
        }
    }

    #[test]
    fn bin_masses_sum_to_one() {
        let l = Lattice::square(-1.0, 1.0, 101).unwrap();
        let d = quadrature_density(|x| -x[0].abs() - 2.0 * x[1] * x[1], &l).unwrap();
        let bins = d.bin_masses(10).unwrap();
        assert_eq!(bins.len(), 100);
        assert!((bins.iter().sum::<f64>() - 1.0).abs() < 1e-3);
        assert!(d.bin_masses(7).is_err());
    }

    #[test]
    fn histogram_counts() {
        let l = Lattice::line(0.0, 1.0, 11).unwrap();
        let s = vec![vec![0.05], vec![0.95], vec![1.0], vec![-0.1]];
        let h = histogram(&s, &l, 2).unwrap();
        assert_eq!(h, vec![0.5, 0.5]);
    }

    #[test]
    fn warm_start_examples() {
        let l = Lattice::line(0.0, 1.0, 4001).unwrap();
        let r = warm_start_norm(|_| 3.0, 1.0, 0.5, &l).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let r = warm_start_norm(|x| x[0], 1.0, 0.5, &l).unwrap();
        // Closed form with Y(a) = (1 - e^{-a}) / a: Y(0) Y(2) / Y(1)².
        let y = |a: f64| if a == 0.0 { 1.0 } else { (1.0 - (-a).exp()) / a };
        assert!((r - y(0.0) * y(2.0) / (y(1.0) * y(1.0))).abs() < 1e-6);
        assert!(r <= 5.0);
        let pert = |x: &[f64]| 2.0 * (x[0] - 0.4).powi(2) + 0.1 * (25.0 * x[0]).sin();
        let r = warm_start_norm(pert, 1.0, 0.5, &l).unwrap();
        assert!(r <= 5.0 * 0.4f64.exp());
    }

    #[test]
    fn warm_start_underflow_is_precision_error() {
        let l = Lattice::line(0.0, 1.0, 101).unwrap();
        assert!(matches!(
            warm_start_norm(|x| 1e300 * x[0], 1e-10, 1e-11, &l),
            Err(Error::Precision(_))
        ));
    }

    #[test]
    fn gibbs_gap_examples() {
        let l = Lattice::line(0.0, 1.0, 20_001).unwrap();
        let g = gibbs_mean_gap(|x| x[0], |x| x[0], 0.01, &l).unwrap();
        assert!((g.gap - exp_mean(100.0) ).abs() < 1e-6);
        assert!(g.gap <= g.bound && (g.bound - 0.02).abs() < 1e-15);
        let g = gibbs_mean_gap(|x| x[0], |x| x[0], 1e4, &l).unwrap();
        assert!((g.gap - 0.5).abs() < 1e-4);
        let g = gibbs_mean_gap(|x| x[0], |x| x[0] + 0.05 * (30.0 * x[0]).sin(), 0.05, &l).unwrap();
        assert!(g.rho <= 0.05 + 1e-15);
        assert!(g.gap <= g.bound && g.bound <= 0.1 * 2f64.exp() + 1e-12);
    }

    #[test]
    fn certification_examples() {
        let mut rng = stream(3, &[]);
        let c = certify_beta_log_concave(|x| -x[0] * x[0], &[-2.0], &[2.0], 0.0, 2000, &mut rng).unwrap();
        assert!(c.pass);
        let g = |x: &[f64]| -x[0] * x[0] + 0.1 * (100.0 * x[0]).sin().signum();
        let c = certify_beta_log_concave(g, &[-2.0], &[2.0], 0.2, 5000, &mut rng).unwrap();
        assert!(c.pass, "{c:?}");
        let c = certify_beta_log_concave(g, &[-2.0], &[2.0], 0.05, 5000, &mut rng).unwrap();
        assert!(!c.pass && c.worst_violation > 0.0);
    }
}
