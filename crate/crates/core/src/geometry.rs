//! Convex bodies given by membership oracles, chord extraction along lines,
//! and the linear maps used to shape Hit-and-Run directions.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default constant `c` in the well-roundedness test `R/r <= c * sqrt(n)`.
pub const DEFAULT_ROUNDNESS: f64 = 2.0;

/// Relative boundary tolerance used when callers do not pick one.
pub const DEFAULT_TOL_REL: f64 = 1e-9;

/// Largest condition number a rounding map may have.
pub const MAX_CONDITION: f64 = 1e12;

type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `a_i . x <= b_i` for every row.
    Polytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    Custom(Membership),
}

/// A closed convex body `K` described by a membership oracle.
///
/// `inner_radius` and `outer_radius` are measured from `interior_point`:
/// `B(interior_point, r) ⊆ K ⊆ B(interior_point, R)`.
#[derive(Clone)]
pub struct ConvexBody {
    shape: Shape,
    dim: usize,
    inner_radius: f64,
    outer_radius: f64,
    interior_point: Vec<f64>,
    well_rounded: bool,
}

impl fmt::Debug for ConvexBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.shape {
            Shape::Ball { .. } => "ball",
            Shape::Box { .. } => "box",
            Shape::Polytope { .. } => "polytope",
            Shape::Custom(_) => "custom",
        };
        f.debug_struct("ConvexBody")
            .field("kind", &kind)
            .field("dim", &self.dim)
            .field("inner_radius", &self.inner_radius)
            .field("outer_radius", &self.outer_radius)
            .field("interior_point", &self.interior_point)
            .finish()
    }
}

fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite coordinates")))
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl ConvexBody {
    /// Euclidean ball.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_finite(&center, "ball center")?;
        if center.is_empty() || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(
                "ball needs a non-empty center and a positive radius".into(),
            ));
        }
        let dim = center.len();
        Self::assemble(
            Shape::Ball {
                center: center.clone(),
                radius,
            },
            dim,
            radius,
            radius,
            center,
        )
    }

    /// Unit ball centered at the origin.
    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::ball(vec![0.0; dim], 1.0)
    }

    /// Axis-aligned box `[lo_k, hi_k]`.
    pub fn axis_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_finite(&lo, "box lower corner")?;
        check_finite(&hi, "box upper corner")?;
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::InvalidInput(
                "box corners must have equal, non-zero length with lo < hi".into(),
            ));
        }
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let half: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).collect();
        let r = half.iter().cloned().fold(f64::INFINITY, f64::min);
        let big_r = norm(&half);
        let dim = lo.len();
        Self::assemble(Shape::Box { lo, hi }, dim, r, big_r, center)
    }

    /// Symmetric cube `[-half, half]^dim`.
    pub fn cube(dim: usize, half: f64) -> Result<Self> {
        Self::axis_box(vec![-half; dim], vec![half; dim])
    }

    /// Polytope `{x : normals[i] . x <= offsets[i]}`. The caller supplies an
    /// interior point and an outer radius about it; the inner radius is the
    /// distance from the interior point to the nearest facet.
    pub fn polytope(
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        interior_point: Vec<f64>,
        outer_radius: f64,
    ) -> Result<Self> {
        check_finite(&interior_point, "polytope interior point")?;
        let dim = interior_point.len();
        if normals.is_empty() || normals.len() != offsets.len() || dim == 0 {
            return Err(Error::InvalidInput(
                "polytope needs matching, non-empty normal and offset lists".into(),
            ));
        }
        let mut r = f64::INFINITY;
        for (a, b) in normals.iter().zip(&offsets) {
            if a.len() != dim {
                return Err(Error::InvalidInput("polytope normal has wrong dimension".into()));
            }
            check_finite(a, "polytope normal")?;
            let an = norm(a);
            if an == 0.0 || !b.is_finite() {
                return Err(Error::InvalidInput("degenerate polytope halfspace".into()));
            }
            let slack = b - dot(a, &interior_point);
            r = r.min(slack / an);
        }
        if !(r > 0.0) {
            return Err(Error::Precondition(
                "polytope interior point is not strictly inside".into(),
            ));
        }
        Self::assemble(
            Shape::Polytope { normals, offsets },
            dim,
            r,
            outer_radius,
            interior_point,
        )
    }

    /// Body defined by an arbitrary membership predicate. The caller certifies
    /// the radii.
    pub fn custom(
        dim: usize,
        membership: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        interior_point: Vec<f64>,
        inner_radius: f64,
        outer_radius: f64,
    ) -> Result<Self> {
        check_finite(&interior_point, "interior point")?;
        if interior_point.len() != dim {
            return Err(Error::InvalidInput("interior point has wrong dimension".into()));
        }
        Self::assemble(
            Shape::Custom(Arc::new(membership)),
            dim,
            inner_radius,
            outer_radius,
            interior_point,
        )
    }

    fn assemble(
        shape: Shape,
        dim: usize,
        inner_radius: f64,
        outer_radius: f64,
        interior_point: Vec<f64>,
    ) -> Result<Self> {
        if !(inner_radius > 0.0) || !(inner_radius <= outer_radius) || !outer_radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "radii must satisfy 0 < r <= R < inf (r = {inner_radius}, R = {outer_radius})"
            )));
        }
        let mut body = ConvexBody {
            shape,
            dim,
            inner_radius,
            outer_radius,
            interior_point,
            well_rounded: false,
        };
        if !body.contains_unchecked(&body.interior_point) {
            return Err(Error::Precondition("interior point is not in the body".into()));
        }
        body.well_rounded = outer_radius / inner_radius <= DEFAULT_ROUNDNESS * (dim as f64).sqrt();
        Ok(body)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn interior_point(&self) -> &[f64] {
        &self.interior_point
    }

    pub fn is_well_rounded(&self) -> bool {
        self.well_rounded
    }

    /// Re-evaluates the well-roundedness flag against a different constant.
    pub fn well_rounded_with(&self, c: f64) -> bool {
        self.outer_radius / self.inner_radius <= c * (self.dim as f64).sqrt()
    }

    /// Membership with input validation. Bodies are closed.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, body has {}",
                x.len(),
                self.dim
            )));
        }
        check_finite(x, "point")?;
        Ok(self.contains_unchecked(x))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 <= radius * radius
            }
            Shape::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *a <= *v && *v <= *b),
            Shape::Polytope { normals, offsets } => normals
                .iter()
                .zip(offsets)
                .all(|(a, b)| dot(a, x) <= *b),
            Shape::Custom(m) => m(x),
        }
    }

    /// Distance from an interior `x` to the boundary, where the shape makes
    /// it computable in closed form.
    pub fn boundary_distance(&self, x: &[f64]) -> Option<f64> {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                Some(radius - norm(&d))
            }
            Shape::Box { lo, hi } => Some(
                x.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(v, (a, b))| (v - a).min(b - v))
                    .fold(f64::INFINITY, f64::min),
            ),
            Shape::Polytope { normals, offsets } => Some(
                normals
                    .iter()
                    .zip(offsets)
                    .map(|(a, b)| (b - dot(a, x)) / norm(a))
                    .fold(f64::INFINITY, f64::min),
            ),
            Shape::Custom(_) => None,
        }
    }

    /// `K ∩ B(center, radius)`. `center` must lie in `K`; the inner radius
    /// is exact for built-in shapes and estimated from axis chords otherwise.
    pub fn intersect_ball(&self, center: &[f64], radius: f64) -> Result<ConvexBody> {
        if !self.contains(center)? {
            return Err(Error::Precondition("ball center is outside the body".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput("ball radius must be positive".into()));
        }
        let depth = match self.boundary_distance(center) {
            Some(d) => d,
            None => {
                let tol = self.default_tolerance();
                let mut best = f64::INFINITY;
                let mut e = vec![0.0; self.dim];
                for k in 0..self.dim {
                    e[k] = 1.0;
                    let c = find_chord(self, center, &e, tol)?;
                    best = best.min(-c.lo).min(c.hi);
                    e[k] = 0.0;
                }
                best
            }
        };
        let inner = radius.min(depth);
        if !(inner > 0.0) {
            return Err(Error::Precondition("ball center lies on the boundary".into()));
        }
        let outer_body = self.outer_radius + norm(
            &center
                .iter()
                .zip(&self.interior_point)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        let outer = radius.min(outer_body);
        let parent = self.clone();
        let c = center.to_vec();
        let r2 = radius * radius;
        Self::assemble(
            Shape::Custom(Arc::new(move |x: &[f64]| {
                let d2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= r2 && parent.contains_unchecked(x)
            })),
            self.dim,
            inner,
            outer.max(inner),
            center.to_vec(),
        )
    }

    /// Default boundary tolerance, `1e-9 * R`.
    pub fn default_tolerance(&self) -> f64 {
        DEFAULT_TOL_REL * self.outer_radius
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Intersection of the line `origin + t * direction` with the body.
#[derive(Debug, Clone, PartialEq)]
pub struct Chord {
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub boundary_tolerance: f64,
}

impl Chord {
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.direction)
            .map(|(x, u)| x + t * u)
            .collect()
    }

    pub(crate) fn point_into(&self, t: f64, out: &mut [f64]) {
        for ((o, x), u) in out.iter_mut().zip(&self.origin).zip(&self.direction) {
            *o = x + t * u;
        }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Iteration cap for one chord end: `ceil(log2(4R / tol)) + 64`.
fn chord_iteration_cap(outer_radius: f64, tol: f64) -> usize {
    (4.0 * outer_radius / tol).log2().ceil().max(0.0) as usize + 64
}

/// Distance along `dir` from `x` to the last point inside the body, to within
/// `tol`. Exponential search (doubling, capped at `2R`) then bisection.
fn ray_extent(body: &ConvexBody, x: &[f64], dir: &[f64], sign: f64, tol: f64) -> Result<f64> {
    let cap = chord_iteration_cap(body.outer_radius, tol);
    let max_step = 2.0 * body.outer_radius;
    let mut probe = vec![0.0; x.len()];
    let inside_at = |t: f64, probe: &mut Vec<f64>| {
        for ((p, a), u) in probe.iter_mut().zip(x).zip(dir) {
            *p = a + sign * t * u;
        }
        body.contains_unchecked(probe)
    };

    let mut iters = 0usize;
    let mut inside = 0.0_f64;
    let mut step = body.inner_radius.min(max_step);
    let mut outside;
    loop {
        iters += 1;
        if iters > cap {
            return Err(Error::Geometry("chord search exceeded its iteration cap".into()));
        }
        if inside_at(step, &mut probe) {
            inside = step;
            if step >= max_step {
                return Err(Error::Geometry(format!(
                    "body extends past 2R = {max_step} along the search direction"
                )));
            }
            step = (2.0 * step).min(max_step);
        } else {
            outside = step;
            break;
        }
    }
    while outside - inside > tol {
        iters += 1;
        if iters > cap {
            return Err(Error::Geometry("chord bisection exceeded its iteration cap".into()));
        }
        let mid = 0.5 * (inside + outside);
        if inside_at(mid, &mut probe) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(inside)
}

/// Chord through `x` along the unit vector `u`, with endpoints resolved to
/// within `tol` of the boundary.
pub fn find_chord(body: &ConvexBody, x: &[f64], u: &[f64], tol: f64) -> Result<Chord> {
    if u.len() != body.dim {
        return Err(Error::InvalidInput("direction has wrong dimension".into()));
    }
    check_finite(u, "direction")?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if (norm(u) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("direction must have unit norm".into()));
    }
    if !body.contains(x)? {
        return Err(Error::Precondition("chord origin is outside the body".into()));
    }
    let hi = ray_extent(body, x, u, 1.0, tol)?;
    let lo = -ray_extent(body, x, u, -1.0, tol)?;
    if hi < tol || -lo < tol {
        return Err(Error::Precondition(
            "chord origin lies on the boundary within tolerance".into(),
        ));
    }
    Ok(Chord {
        origin: x.to_vec(),
        direction: u.to_vec(),
        lo,
        hi,
        boundary_tolerance: tol,
    })
}

/// Invertible linear map shaping Hit-and-Run directions.
///
/// `matrix` sends the unit sphere to the direction ellipsoid; `whitening` is
/// its inverse and sends the current point cloud to near-isotropic position.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingMap {
    matrix: DMatrix<f64>,
    whitening: DMatrix<f64>,
    epoch: usize,
}

impl RoundingMap {
    pub fn identity(dim: usize) -> Self {
        RoundingMap {
            matrix: DMatrix::identity(dim, dim),
            whitening: DMatrix::identity(dim, dim),
            epoch: 0,
        }
    }

    /// Map from an explicit direction-shaping matrix.
    pub fn from_matrix(matrix: DMatrix<f64>, epoch: usize) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidInput("rounding matrix must be square".into()));
        }
        let cond = condition_number(&matrix);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::Geometry(format!(
                "rounding matrix condition number {cond:e} exceeds cap"
            )));
        }
        let whitening = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Geometry("rounding matrix is singular".into()))?;
        Ok(RoundingMap {
            matrix,
            whitening,
            epoch,
        })
    }

    pub(crate) fn from_parts(matrix: DMatrix<f64>, whitening: DMatrix<f64>, epoch: usize) -> Self {
        RoundingMap {
            matrix,
            whitening,
            epoch,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn whitening(&self) -> &DMatrix<f64> {
        &self.whitening
    }

    /// Epoch that produced this map (0 for the identity).
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == DMatrix::identity(self.dim(), self.dim())
    }

    /// Applies the whitening map to a point.
    pub fn whiten(&self, x: &[f64]) -> Vec<f64> {
        (&self.whitening * DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }
}

pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Direction `Σu / |Σu|` with `u` uniform on the sphere.
pub fn sample_direction<R: Rng + ?Sized>(map: &RoundingMap, rng: &mut R) -> Result<Vec<f64>> {
    let n = map.dim();
    let mut out = vec![0.0; n];
    sample_direction_into(map, rng, &mut out)?;
    Ok(out)
}

pub(crate) fn sample_direction_into<R: Rng + ?Sized>(
    map: &RoundingMap,
    rng: &mut R,
    out: &mut [f64],
) -> Result<()> {
    let n = map.dim();
    let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..n).map(|j| map.matrix[(i, j)] * g[j]).sum();
    }
    let len = norm(out);
    if !(len > f64::MIN_POSITIVE) || !len.is_finite() {
        return Err(Error::Geometry("direction normalization underflowed".into()));
    }
    for o in out.iter_mut() {
        *o /= len;
    }
    Ok(())
}

/// Symmetric eigendecomposition with ascending eigenvalues.
pub(crate) fn sorted_eigen(m: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (values, vectors)
}

/// Serializable description of a built-in body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BodySpec {
    Ball {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    Box {
        dim: usize,
        #[serde(default)]
        lo: Option<Vec<f64>>,
        #[serde(default)]
        hi: Option<Vec<f64>>,
        #[serde(default)]
        half_width: Option<f64>,
    },
    Polytope {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        interior_point: Vec<f64>,
        outer_radius: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl BodySpec {
    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            BodySpec::Ball {
                dim,
                radius,
                center,
            } => {
                let c = center.clone().unwrap_or_else(|| vec![0.0; *dim]);
                if c.len() != *dim {
                    return Err(Error::Config("ball center has wrong dimension".into()));
                }
                ConvexBody::ball(c, *radius)
            }
            BodySpec::Box {
                dim,
                lo,
                hi,
                half_width,
            } => {
                let h = half_width.unwrap_or(1.0);
                let lo = lo.clone().unwrap_or_else(|| vec![-h; *dim]);
                let hi = hi.clone().unwrap_or_else(|| vec![h; *dim]);
                if lo.len() != *dim || hi.len() != *dim {
                    return Err(Error::Config("box corners have wrong dimension".into()));
                }
                ConvexBody::axis_box(lo, hi)
            }
            BodySpec::Polytope {
                normals,
                offsets,
                interior_point,
                outer_radius,
            } => ConvexBody::polytope(
                normals.clone(),
                offsets.clone(),
                interior_point.clone(),
                *outer_radius,
            ),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BodySpec::Ball { dim, .. } | BodySpec::Box { dim, .. } => *dim,
            BodySpec::Polytope { interior_point, .. } => interior_point.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn membership_examples() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        assert!(ball.contains(&[0.0, 0.0]).unwrap());
        assert!(!ball.contains(&[1.5, 0.0]).unwrap());
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        assert!(cube.contains(&[1.0, 1.0]).unwrap());
    }

    #[test]
    fn non_finite_point_is_rejected() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        assert!(matches!(
            ball.contains(&[f64::NAN, 0.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(ball.contains(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn box_radii_and_roundness() {
        let cube = ConvexBody::cube(4, 1.0).unwrap();
        assert_eq!(cube.inner_radius(), 1.0);
        assert!((cube.outer_radius() - 2.0).abs() < 1e-15);
        assert!(cube.is_well_rounded());
        let slab = ConvexBody::axis_box(vec![-100.0, -0.01], vec![100.0, 0.01]).unwrap();
        assert!(!slab.is_well_rounded());
    }

    #[test]
    fn chord_of_unit_ball() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        let c = find_chord(&ball, &[0.0, 0.0], &[1.0, 0.0], 1e-9).unwrap();
        assert!((c.lo + 1.0).abs() < 1e-8);
        assert!((c.hi - 1.0).abs() < 1e-8);
    }

    #[test]
    fn chord_of_box_has_affine_offsets() {
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        let c = find_chord(&cube, &[0.5, 0.0], &[1.0, 0.0], 1e-9).unwrap();
        assert!((c.lo + 1.5).abs() < 1e-8);
        assert!((c.hi - 0.5).abs() < 1e-8);
    }

    #[test]
    fn chord_rejects_outside_and_boundary_points() {
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        assert!(matches!(
            find_chord(&cube, &[2.0, 0.0], &[1.0, 0.0], 1e-9),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            find_chord(&cube, &[1.0, 0.0], &[1.0, 0.0], 1e-9),
            Err(Error::Precondition(_))
        ));
        assert!(find_chord(&cube, &[0.0, 0.0], &[2.0, 0.0], 1e-9).is_err());
    }

    #[test]
    fn unbounded_custom_body_hits_iteration_guard() {
        // A halfplane misdeclared as bounded.
        let body = ConvexBody::custom(2, |x| x[0] <= 1.0, vec![0.0, 0.0], 1.0, 2.0).unwrap();
        let err = find_chord(&body, &[0.0, 0.0], &[-1.0, 0.0], 1e-9).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn chord_endpoints_bracket_boundary() {
        let ball = ConvexBody::unit_ball(3).unwrap();
        let mut rng = stream(3, &[]);
        let tol = 1e-9;
        for _ in 0..200 {
            let u = sample_direction(&RoundingMap::identity(3), &mut rng).unwrap();
            let x = [0.2, -0.1, 0.3];
            let c = find_chord(&ball, &x, &u, tol).unwrap();
            assert!(c.lo < 0.0 && 0.0 < c.hi);
            assert!(ball.contains(&c.point_at(c.hi - tol)).unwrap());
            assert!(!ball.contains(&c.point_at(c.hi + tol)).unwrap());
            assert!(ball.contains(&c.point_at(c.lo + tol)).unwrap());
            assert!(!ball.contains(&c.point_at(c.lo - tol)).unwrap());
        }
    }

    #[test]
    fn chord_is_deterministic() {
        let cube = ConvexBody::cube(3, 1.0).unwrap();
        let u = [0.6, 0.0, 0.8];
        let a = find_chord(&cube, &[0.1, 0.2, 0.3], &u, 1e-9).unwrap();
        let b = find_chord(&cube, &[0.1, 0.2, 0.3], &u, 1e-9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identity_directions_are_isotropic() {
        let map = RoundingMap::identity(3);
        let mut rng = stream(11, &[]);
        let draws = 100_000;
        let mut mean = [0.0; 3];
        let mut sq = 0.0;
        let mut cov = [[0.0; 3]; 3];
        for _ in 0..draws {
            let u = sample_direction(&map, &mut rng).unwrap();
            let len2: f64 = u.iter().map(|v| v * v).sum();
            assert!((len2.sqrt() - 1.0).abs() < 1e-12);
            sq += len2;
            for i in 0..3 {
                mean[i] += u[i];
                for j in 0..3 {
                    cov[i][j] += u[i] * u[j];
                }
            }
        }
        assert!((sq / draws as f64 - 1.0).abs() < 1e-12);
        for i in 0..3 {
            assert!((mean[i] / draws as f64).abs() < 0.02);
            for (j, c) in cov[i].iter().enumerate() {
                let target = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!((c / draws as f64 - target).abs() < 0.05);
            }
        }
    }

    #[test]
    fn stretched_directions_match_angular_quadrature() {
        // Oracle: the pushed-forward direction is (2 cos θ, sin θ)/|.| with θ
        // uniform; integrate the indicator |2 cos θ| > |sin θ| over θ.
        let steps = 1_000_000;
        let mut hit = 0.0;
        for k in 0..steps {
            let th = (k as f64 + 0.5) / steps as f64 * std::f64::consts::TAU;
            if (2.0 * th.cos()).abs() > th.sin().abs() {
                hit += 1.0;
            }
        }
        let expected = hit / steps as f64;

        let map =
            RoundingMap::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0])), 1)
                .unwrap();
        let mut rng = stream(5, &[]);
        let draws = 100_000;
        let mut count = 0usize;
        for _ in 0..draws {
            let u = sample_direction(&map, &mut rng).unwrap();
            if u[0].abs() > u[1].abs() {
                count += 1;
            }
        }
        let frac = count as f64 / draws as f64;
        assert!((frac - expected).abs() < 0.02, "{frac} vs {expected}");
    }

    #[test]
    fn singular_rounding_matrix_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(RoundingMap::from_matrix(m, 1).is_err());
    }

    #[test]
    fn body_spec_round_trips_through_toml_shape() {
        let spec = BodySpec::Box {
            dim: 2,
            lo: None,
            hi: None,
            half_width: Some(2.0),
        };
        let body = spec.build().unwrap();
        assert!(body.contains(&[2.0, -2.0]).unwrap());
        assert!(!body.contains(&[2.1, 0.0]).unwrap());
    }
}
