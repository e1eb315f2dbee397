use serde::{Deserialize, Serialize};

use super::certificate::{check_proximal_subgradient, ProximalCertificate};
use super::field::{FieldKind, ScalarField};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, TangentVector, Vector};
use crate::sampling::{directions, SamplerConfig};

/// Directions and ray radii used to estimate lower directional derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionGrid {
    pub directions: usize,
    /// Largest ray radius; the others shrink by factors of 4.
    pub max_radius: f64,
    pub levels: usize,
    pub sampler: SamplerConfig,
}

impl Default for DirectionGrid {
    fn default() -> Self {
        DirectionGrid {
            directions: 512,
            max_radius: 1e-4,
            levels: 6,
            sampler: SamplerConfig::default(),
        }
    }
}

impl DirectionGrid {
    pub fn with_directions(directions: usize) -> Self {
        DirectionGrid {
            directions,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetShape {
    Empty,
    Singleton,
    Interval,
    Polygon,
    /// Dimension ≥ 3: a spanning sample, not the extreme points.
    Spanning,
}

/// Sampled estimate of ∂_P f(p): verified extreme candidates plus, when
/// the set is unbounded, verified unit recession directions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubdifferentialEstimate {
    pub point: Point,
    pub shape: SetShape,
    pub candidates: Vec<ProximalCertificate>,
    pub rays: Vec<ProximalCertificate>,
    pub bounded: bool,
    /// Candidates dropped because no verified point was found along the
    /// segment to the centroid.
    pub rejected: usize,
    pub directions: usize,
}

impl SubdifferentialEstimate {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn vectors(&self) -> Vec<TangentVector> {
        self.candidates.iter().map(|c| c.zeta.clone()).collect()
    }

    /// Candidate of smallest norm.
    pub fn min_norm(&self) -> Option<&ProximalCertificate> {
        self.candidates
            .iter()
            .min_by(|a, b| a.zeta.norm().total_cmp(&b.zeta.norm()))
    }
}

const BOX: f64 = 1e6;
const MERGE_TOL: f64 = 1e-9;
const SINGLETON_DIAMETER: f64 = 1e-6;
const INDICATOR_SLACK: f64 = 1e-6;
const BISECTION_STEPS: usize = 24;
const CLIP_SLACK: f64 = 1e-7;

/// Half-space ⟨ζ, u⟩ ≤ b in frame coordinates.
#[derive(Debug, Clone)]
struct Constraint {
    u: Vector,
    b: f64,
}

/// Lower directional derivative along frame direction u, from a
/// least-squares fit of g(r)/r = D + c r on geometrically shrinking radii.
fn directional_slope(f: &ScalarField, p: &Point, fp: f64, frame: &nalgebra::DMatrix<f64>, u: &Vector, grid: &DirectionGrid) -> f64 {
    let m = f.manifold;
    let v = frame * u;
    let mut pts = Vec::with_capacity(grid.levels);
    for k in 0..grid.levels.max(2) {
        let r = grid.max_radius * 0.25f64.powi(k as i32);
        let Ok(q) = m.exp_unchecked(p, &(&v * r)) else {
            continue;
        };
        let g = f.value(&q) - fp;
        if g.is_nan() {
            continue;
        }
        if g == f64::INFINITY {
            return f64::INFINITY;
        }
        pts.push((r, g / r));
    }
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    my - slope * mx
}

fn constraints(f: &ScalarField, p: &Point, fp: f64, grid: &DirectionGrid) -> Result<Vec<Constraint>> {
    let m = f.manifold;
    let frame = m.tangent_frame(p);
    let dim = m.dim();
    if let FieldKind::Indicator(set) = &f.kind {
        // Limiting tangent directions of S from its nearest members.
        let members = set.members_near(&m, p, super::default_eta(&m), 64)?;
        let mut out = Vec::new();
        for q in members.into_iter().take(16) {
            let v = m.log_unchecked(p, &q)?.components;
            let u = frame.transpose() * v;
            let n = u.norm();
            if n > 0.0 {
                // Secants bend away from the tangent by O(d).
                out.push(Constraint {
                    u: u / n,
                    b: INDICATOR_SLACK.max(n),
                });
            }
        }
        return Ok(out);
    }
    Ok(directions(dim, grid.directions, grid.sampler.seed)
        .into_iter()
        .filter_map(|u| {
            let b = directional_slope(f, p, fp, &frame, &u, grid);
            b.is_finite().then_some(Constraint { u, b })
        })
        .collect())
}

fn clip(poly: &[[f64; 2]], a: [f64; 2], b: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let inside = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] <= b;
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (ci, ni) = (inside(&cur), inside(&next));
        if ci {
            out.push(cur);
        }
        if ci != ni {
            let fc = a[0] * cur[0] + a[1] * cur[1] - b;
            let fnx = a[0] * next[0] + a[1] * next[1] - b;
            let t = fc / (fc - fnx);
            out.push([cur[0] + t * (next[0] - cur[0]), cur[1] + t * (next[1] - cur[1])]);
        }
    }
    out
}

fn clip_all(half_width: f64, cs: &[Constraint]) -> Vec<[f64; 2]> {
    let h = half_width;
    let mut poly = vec![[-h, -h], [h, -h], [h, h], [-h, h]];
    for c in cs {
        poly = clip(&poly, [c.u[0], c.u[1]], c.b);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Points of the planar set exposed by each grid direction. Where the two
/// neighbouring directions expose the same point (checked against the
/// middle one), that point is recovered exactly from the two supporting
/// lines. Directions with no such exact vertex nearby (curved parts of the
/// boundary) fall back to the angular derivative of the support function.
fn support_points(cs: &[Constraint]) -> Vec<Vector> {
    use std::f64::consts::TAU;
    let mut sorted: Vec<(f64, &Constraint)> = cs.iter().map(|c| (c.u[1].atan2(c.u[0]), c)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    if n < 5 {
        return Vec::new();
    }
    let step = TAU / n as f64;
    let exact: Vec<Option<Vector>> = (0..n)
        .map(|k| {
            let (ta, a) = sorted[(k + n - 1) % n];
            let mid = sorted[k].1;
            let (tb, b) = sorted[(k + 1) % n];
            if (tb - ta).rem_euclid(TAU) > 3.0 * step {
                return None;
            }
            let m = nalgebra::Matrix2::new(a.u[0], a.u[1], b.u[0], b.u[1]);
            let z = m.try_inverse()? * nalgebra::Vector2::new(a.b, b.b);
            let z = Vector::from_column_slice(&[z[0], z[1]]);
            ((z.dot(&mid.u) - mid.b).abs() <= 1e-10 * (1.0 + mid.b.abs())).then_some(z)
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        if let Some(z) = &exact[k] {
            out.push(z.clone());
            continue;
        }
        let near_exact = [n - 2, n - 1, 1, 2]
            .iter()
            .any(|&o| exact[(k + o) % n].is_some());
        if near_exact {
            continue;
        }
        let (ta, a) = sorted[(k + n - 1) % n];
        let mid = sorted[k].1;
        let (tb, b) = sorted[(k + 1) % n];
        let span = (tb - ta).rem_euclid(TAU);
        if span > 3.0 * step {
            continue;
        }
        let slope = (b.b - a.b) / span;
        let perp = Vector::from_column_slice(&[-mid.u[1], mid.u[0]]);
        out.push(&mid.u * mid.b + perp * slope);
    }
    merge(out, MERGE_TOL)
}

fn merge(points: Vec<Vector>, tol: f64) -> Vec<Vector> {
    let mut kept: Vec<Vector> = Vec::new();
    for p in points {
        if !kept
            .iter()
            .any(|k| (k - &p).norm() <= tol * (1.0 + p.norm()))
        {
            kept.push(p);
        }
    }
    kept
}

fn cross(o: &Vector, a: &Vector, b: &Vector) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Extreme points of a planar point set (monotone chain, collinear points
/// dropped).
fn hull(mut pts: Vec<Vector>) -> Vec<Vector> {
    if pts.len() <= 2 {
        return pts;
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let scale = pts.iter().map(|p| p.amax()).fold(1.0, f64::max);
    let tol = 1e-12 * scale * scale;
    let mut lower: Vec<Vector> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= tol {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Vector> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= tol {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn min_norm_point(poly: &[[f64; 2]]) -> Vector {
    let n = poly.len();
    let inside = (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        (b[0] - a[0]) * (-a[1]) - (b[1] - a[1]) * (-a[0]) >= 0.0
    });
    if inside {
        return Vector::zeros(2);
    }
    let mut best = Vector::from_column_slice(&poly[0]);
    for i in 0..n {
        let a = Vector::from_column_slice(&poly[i]);
        let b = Vector::from_column_slice(&poly[(i + 1) % n]);
        let d = &b - &a;
        let t = if d.norm_squared() > 0.0 {
            (-a.dot(&d) / d.norm_squared()).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = &a + d * t;
        if q.norm() < best.norm() {
            best = q;
        }
    }
    best
}

struct Verifier<'a> {
    f: &'a ScalarField,
    p: &'a Point,
    frame: nalgebra::DMatrix<f64>,
    sampler: SamplerConfig,
}

impl Verifier<'_> {
    fn check(&self, u: &Vector) -> Result<ProximalCertificate> {
        let zeta = TangentVector::new(self.p.clone(), &self.frame * u);
        check_proximal_subgradient(self.f, self.p, &zeta, None, None, &self.sampler)
    }

    /// Verifies `u`, or the verified point closest to it on the segment
    /// towards `anchor` (assumed verified).
    fn verify_or_shrink(&self, u: &Vector, anchor: Option<&Vector>) -> Result<Option<ProximalCertificate>> {
        let c = self.check(u)?;
        if c.is_verified() {
            return Ok(Some(c));
        }
        let Some(anchor) = anchor else {
            return Ok(None);
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut best = None;
        for _ in 0..BISECTION_STEPS {
            let s = 0.5 * (lo + hi);
            let c = self.check(&(anchor + (u - anchor) * s))?;
            if c.is_verified() {
                lo = s;
                best = Some(c);
            } else {
                hi = s;
            }
        }
        Ok(best)
    }
}

fn frame_coords(m: &Manifold, c: &ProximalCertificate) -> Vector {
    m.to_frame(&c.point, &c.zeta.components)
}

/// Estimates ∂_P f(p) = ∂_P(f ∘ exp_p)(0) from directional slopes along a
/// grid of rays, then keeps only candidates that pass
/// [`check_proximal_subgradient`].
pub fn probe_subdifferential(f: &ScalarField, p: &Point, grid: &DirectionGrid) -> Result<SubdifferentialEstimate> {
    let m = f.manifold;
    m.validate_point(p)?;
    let fp = f.value(p);
    if !fp.is_finite() {
        return Err(Error::OutsideDomain);
    }
    let dim = m.dim();
    let cs = constraints(f, p, fp, grid)?;
    let verifier = Verifier {
        f,
        p,
        frame: m.tangent_frame(p),
        sampler: grid.sampler,
    };
    let mut rejected = 0usize;
    let mut rays = Vec::new();

    let (shape, raw, bounded, centroid): (SetShape, Vec<Vector>, bool, Option<Vector>) = match dim {
        1 => {
            let hi = cs.iter().filter(|c| c.u[0] > 0.0).map(|c| c.b).fold(f64::INFINITY, f64::min);
            let lo = cs.iter().filter(|c| c.u[0] < 0.0).map(|c| -c.b).fold(f64::NEG_INFINITY, f64::max);
            if lo > hi + 1e-7 {
                (SetShape::Empty, vec![], true, None)
            } else {
                let (lo, hi) = if lo > hi { (hi, hi) } else { (lo, hi) };
                for (end, dir) in [(hi, 1.0), (lo, -1.0)] {
                    if end.is_infinite() {
                        if let Some(c) = verifier.verify_or_shrink(&Vector::from_element(1, dir), None)? {
                            rays.push(c);
                        }
                    }
                }
                let bounded = lo.is_finite() && hi.is_finite();
                if !bounded {
                    let z = if lo <= 0.0 && hi >= 0.0 { 0.0 } else if lo > 0.0 { lo } else { hi };
                    (SetShape::Interval, vec![Vector::from_element(1, z)], false, None)
                } else if hi - lo < SINGLETON_DIAMETER {
                    (SetShape::Singleton, vec![Vector::from_element(1, 0.5 * (lo + hi))], true, None)
                } else {
                    let mid = Vector::from_element(1, 0.5 * (lo + hi));
                    (
                        SetShape::Interval,
                        vec![Vector::from_element(1, lo), Vector::from_element(1, hi)],
                        true,
                        Some(mid),
                    )
                }
            }
        }
        2 => {
            let relaxed: Vec<Constraint> = cs
                .iter()
                .map(|c| Constraint {
                    u: c.u.clone(),
                    b: c.b + CLIP_SLACK * (1.0 + c.b.abs()),
                })
                .collect();
            let poly = clip_all(BOX, &relaxed);
            if poly.is_empty() {
                (SetShape::Empty, vec![], true, None)
            } else {
                let bounded = poly.iter().all(|v| v[0].abs() < BOX * 0.999 && v[1].abs() < BOX * 0.999);
                if !bounded {
                    // Recession cone {w : ⟨w, u⟩ ≤ 0}, clipped to the unit box.
                    let homog: Vec<Constraint> = cs
                        .iter()
                        .map(|c| Constraint {
                            u: c.u.clone(),
                            b: if f.is_indicator() { c.b } else { 0.0 },
                        })
                        .collect();
                    let cone = clip_all(1.0, &homog);
                    let dirs: Vec<Vector> = cone
                        .iter()
                        .filter(|v| v[0].abs().max(v[1].abs()) > 0.999)
                        .map(|v| Vector::from_column_slice(v).normalize())
                        .collect();
                    for d in merge(dirs, 1e-5) {
                        if let Some(c) = verifier.verify_or_shrink(&d, None)? {
                            rays.push(c);
                        }
                    }
                    (SetShape::Polygon, vec![min_norm_point(&poly)], false, None)
                } else {
                    let verts = merge(poly.iter().map(|v| Vector::from_column_slice(v)).collect(), MERGE_TOL);
                    let n = verts.len() as f64;
                    let centroid = verts.iter().fold(Vector::zeros(2), |a, v| a + v) / n;
                    let diameter = verts
                        .iter()
                        .flat_map(|a| verts.iter().map(move |b| (a - b).norm()))
                        .fold(0.0, f64::max);
                    if diameter < SINGLETON_DIAMETER {
                        (SetShape::Singleton, vec![centroid], true, None)
                    } else {
                        (SetShape::Polygon, support_points(&cs), true, Some(centroid))
                    }
                }
            }
        }
        _ => {
            // Least-squares centre and axis-wise extents.
            if cs.is_empty() {
                (SetShape::Spanning, vec![Vector::zeros(dim)], false, None)
            } else {
                let a = nalgebra::DMatrix::from_fn(cs.len(), dim, |i, j| cs[i].u[j]);
                let b = Vector::from_iterator(cs.len(), cs.iter().map(|c| c.b));
                let center = (a.transpose() * &a)
                    .lu()
                    .solve(&(a.transpose() * &b))
                    .unwrap_or_else(|| Vector::zeros(dim));
                let feasible = cs.iter().all(|c| c.u.dot(&center) <= c.b + 1e-7);
                if !feasible {
                    (SetShape::Empty, vec![], true, None)
                } else {
                    let mut pts = vec![center.clone()];
                    for i in 0..dim {
                        for sign in [1.0, -1.0] {
                            let t = cs
                                .iter()
                                .filter(|c| sign * c.u[i] > 0.0)
                                .map(|c| (c.b - c.u.dot(&center)).max(0.0) / (sign * c.u[i]))
                                .fold(f64::INFINITY, f64::min);
                            if t.is_finite() {
                                let mut q = center.clone();
                                q[i] += sign * t;
                                pts.push(q);
                            }
                        }
                    }
                    let pts = merge(pts, MERGE_TOL);
                    let diameter = pts
                        .iter()
                        .flat_map(|a| pts.iter().map(move |b| (a - b).norm()))
                        .fold(0.0, f64::max);
                    if diameter < SINGLETON_DIAMETER {
                        (SetShape::Singleton, vec![center], true, None)
                    } else {
                        (SetShape::Spanning, pts, true, Some(center))
                    }
                }
            }
        }
    };

    let anchor = match &centroid {
        Some(c) => verifier.check(c)?.is_verified().then(|| c.clone()),
        None => None,
    };
    let mut verified = Vec::new();
    for u in &raw {
        match verifier.verify_or_shrink(u, anchor.as_ref())? {
            Some(c) => verified.push(c),
            None => rejected += 1,
        }
    }
    if verified.is_empty() {
        if let Some(a) = &anchor {
            verified.push(verifier.check(a)?);
        }
    }

    // Report extreme points only.
    if dim == 2 && verified.len() > 2 {
        let coords: Vec<Vector> = verified.iter().map(|c| frame_coords(&m, c)).collect();
        let extreme = hull(coords.clone());
        verified = verified
            .into_iter()
            .zip(coords)
            .filter(|(_, u)| extreme.iter().any(|e| (e - u).norm() == 0.0))
            .map(|(c, _)| c)
            .collect();
    } else if dim == 1 && verified.len() == 2 {
        let a = frame_coords(&m, &verified[0])[0];
        let b = frame_coords(&m, &verified[1])[0];
        if (a - b).abs() < SINGLETON_DIAMETER {
            verified.truncate(1);
        }
    }
    let shape = if verified.is_empty() { SetShape::Empty } else { shape };
    Ok(SubdifferentialEstimate {
        point: p.clone(),
        shape,
        candidates: verified,
        rays,
        bounded,
        rejected,
        directions: cs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::SetDescriptor;

    #[test]
    fn abs_at_zero_gives_unit_interval() {
        let f = ScalarField::abs(Manifold::euclidean(1));
        let e = probe_subdifferential(&f, &Point::from_slice(&[0.0]), &DirectionGrid::default()).unwrap();
        let mut v: Vec<f64> = e.vectors().iter().map(|z| z.components[0]).collect();
        v.sort_by(f64::total_cmp);
        assert_eq!(v.len(), 2);
        assert!((v[0] + 1.0).abs() < 1e-8 && (v[1] - 1.0).abs() < 1e-8, "{v:?}");
        assert_eq!(e.shape, SetShape::Interval);
    }

    #[test]
    fn negative_abs_is_empty() {
        let f = ScalarField::new(Manifold::euclidean(1), "-abs", |p| -p[0].abs());
        let e = probe_subdifferential(&f, &Point::from_slice(&[0.0]), &DirectionGrid::default()).unwrap();
        assert!(e.is_empty());
        assert_eq!(e.shape, SetShape::Empty);
    }

    #[test]
    fn smooth_field_gives_its_gradient() {
        let m = Manifold::euclidean(2);
        let f = ScalarField::new(m, "q", |p| p[0] * p[0] + 3.0 * p[0] * p[1]);
        let p = Point::from_slice(&[0.5, -1.0]);
        let e = probe_subdifferential(&f, &p, &DirectionGrid::default()).unwrap();
        assert_eq!(e.shape, SetShape::Singleton);
        let z = &e.candidates[0].zeta.components;
        assert!((z[0] - (1.0 - 3.0)).abs() < 1e-6 && (z[1] - 1.5).abs() < 1e-6, "{z}");
    }

    #[test]
    fn l1_norm_gives_square_corners() {
        let m = Manifold::euclidean(2);
        let f = ScalarField::new(m, "l1", |p| p[0].abs() + p[1].abs());
        let e = probe_subdifferential(&f, &Point::from_slice(&[0.0, 0.0]), &DirectionGrid::default()).unwrap();
        assert_eq!(e.candidates.len(), 4, "{:?}", e.vectors());
        for z in e.vectors() {
            assert!((z.components[0].abs() - 1.0).abs() < 1e-8);
            assert!((z.components[1].abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn circle_indicator_has_normal_rays() {
        let f = ScalarField::indicator(SetDescriptor::circle([0.0, 0.0], 1.0));
        let e = probe_subdifferential(&f, &Point::from_slice(&[0.0, 1.0]), &DirectionGrid::default()).unwrap();
        assert!(!e.bounded);
        assert_eq!(e.rays.len(), 2, "{:?}", e.rays.iter().map(|r| r.zeta.to_vec()).collect::<Vec<_>>());
        for r in &e.rays {
            assert!(r.zeta.components[0].abs() < 1e-5);
        }
        assert!(e.min_norm().unwrap().zeta.norm() < 1e-9);
    }

    #[test]
    fn cylinder_distance_subdifferential_is_bounded_by_lipschitz_constant() {
        let m = Manifold::Cylinder;
        let f = ScalarField::distance_to_point(m, Point::from_slice(&[1.0, 0.0, 0.0]));
        let p = Point::from_slice(&[1.0, 0.0, 0.0]);
        let e = probe_subdifferential(&f, &p, &DirectionGrid::with_directions(4096)).unwrap();
        assert!(!e.is_empty());
        for z in e.vectors() {
            assert!(z.norm() <= 1.0 + 1e-6, "{}", z.norm());
        }
    }
}
