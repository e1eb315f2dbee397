use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, Vector};
use crate::optim::scan_minimize;

pub type CurveFn = Arc<dyn Fn(f64) -> Point + Send + Sync>;
pub type ConstraintFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type ConstraintGradFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// How a closed set is represented.
#[derive(Clone)]
pub enum SetRepresentation {
    PointCloud(Vec<Point>),
    /// t ↦ c(t) on [t_min, t_max]; `closed` curves are periodic in t.
    ParametricCurve {
        curve: CurveFn,
        t_min: f64,
        t_max: f64,
        closed: bool,
    },
    /// Zero set {g = 0} in a Euclidean space.
    ImplicitConstraint {
        g: ConstraintFn,
        grad: ConstraintGradFn,
        /// Points of the set used to seed projections.
        seeds: Vec<Point>,
    },
}

/// A closed subset S of a manifold.
#[derive(Clone)]
pub struct SetDescriptor {
    pub label: String,
    pub manifold: Manifold,
    pub representation: SetRepresentation,
    /// Distances below this are indistinguishable.
    pub resolution: f64,
}

impl fmt::Debug for SetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.representation {
            SetRepresentation::PointCloud(p) => format!("point_cloud({})", p.len()),
            SetRepresentation::ParametricCurve { .. } => "parametric_curve".to_string(),
            SetRepresentation::ImplicitConstraint { .. } => "implicit_constraint".to_string(),
        };
        f.debug_struct("SetDescriptor")
            .field("label", &self.label)
            .field("manifold", &self.manifold)
            .field("representation", &kind)
            .field("resolution", &self.resolution)
            .finish()
    }
}

/// A local minimizer of d(x, ·) over S.
#[derive(Debug, Clone)]
pub struct Projection {
    pub point: Point,
    pub distance: f64,
}

const CURVE_GRID: usize = 4001;

impl SetDescriptor {
    pub fn point_cloud(manifold: Manifold, points: Vec<Point>) -> Self {
        SetDescriptor {
            label: format!("point_cloud({})", points.len()),
            manifold,
            representation: SetRepresentation::PointCloud(points),
            resolution: 1e-9,
        }
    }

    pub fn parametric_curve(
        label: impl Into<String>,
        manifold: Manifold,
        curve: CurveFn,
        t_min: f64,
        t_max: f64,
        closed: bool,
    ) -> Self {
        SetDescriptor {
            label: label.into(),
            manifold,
            representation: SetRepresentation::ParametricCurve {
                curve,
                t_min,
                t_max,
                closed,
            },
            resolution: 1e-9,
        }
    }

    /// Circle of the given radius in euclidean(2).
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self::parametric_curve(
            format!("circle({}, {}; {})", center[0], center[1], radius),
            Manifold::euclidean(2),
            Arc::new(move |t: f64| {
                Point::from_slice(&[center[0] + radius * t.cos(), center[1] + radius * t.sin()])
            }),
            -std::f64::consts::PI,
            std::f64::consts::PI,
            true,
        )
    }

    pub fn implicit(
        label: impl Into<String>,
        n: usize,
        g: ConstraintFn,
        grad: ConstraintGradFn,
        seeds: Vec<Point>,
    ) -> Self {
        SetDescriptor {
            label: label.into(),
            manifold: Manifold::euclidean(n),
            representation: SetRepresentation::ImplicitConstraint { g, grad, seeds },
            resolution: 1e-9,
        }
    }

    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn kind(&self) -> &'static str {
        match self.representation {
            SetRepresentation::PointCloud(_) => "point_cloud",
            SetRepresentation::ParametricCurve { .. } => "parametric_curve",
            SetRepresentation::ImplicitConstraint { .. } => "implicit_constraint",
        }
    }

    fn check_manifold(&self, m: &Manifold) -> Result<()> {
        if *m != self.manifold {
            return Err(Error::InvalidInput(format!(
                "set `{}` lives on {}, not {}",
                self.label,
                self.manifold.name(),
                m.name()
            )));
        }
        Ok(())
    }

    /// All local minimizers of d(x, ·) over S found by the representation's
    /// search, sorted by distance then coordinates.
    pub fn projections(&self, x: &Point) -> Result<Vec<Projection>> {
        let m = self.manifold;
        let mut out = match &self.representation {
            SetRepresentation::PointCloud(points) => {
                let mut v = Vec::with_capacity(points.len());
                for p in points {
                    v.push(Projection {
                        point: p.clone(),
                        distance: m.distance_unchecked(x, p)?,
                    });
                }
                v
            }
            SetRepresentation::ParametricCurve {
                curve,
                t_min,
                t_max,
                closed,
            } => {
                let dist = |t: f64| {
                    m.distance_unchecked(x, &curve(t))
                        .unwrap_or(f64::INFINITY)
                };
                let mins = scan_minimize(dist, *t_min, *t_max, CURVE_GRID, 1e-13);
                let mut v: Vec<Projection> = mins
                    .into_iter()
                    .map(|(t, d)| {
                        let t = refine_stationary(&dist, t, *t_min, *t_max);
                        let dt = dist(t);
                        let (t, d) = if dt <= d { (t, dt) } else { (t, d) };
                        Projection {
                            point: curve(t),
                            distance: d,
                        }
                    })
                    .collect();
                if *closed {
                    // The endpoints of a closed curve coincide.
                    dedup_points(&mut v, self.resolution.max(1e-9));
                }
                v
            }
            SetRepresentation::ImplicitConstraint { g, grad, seeds } => {
                let mut v = Vec::new();
                let mut starts = vec![x.coords().clone()];
                starts.extend(seeds.iter().map(|s| s.coords().clone()));
                for s in starts {
                    if let Some(p) = implicit_project(g, grad, x.coords(), s) {
                        let point = Point::new(p);
                        v.push(Projection {
                            distance: m.distance_unchecked(x, &point)?,
                            point,
                        });
                    }
                }
                if v.is_empty() {
                    return Err(Error::SearchFailure(format!(
                        "projection onto `{}` did not converge",
                        self.label
                    )));
                }
                v
            }
        };
        out.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then_with(|| a.point.lex_cmp(&b.point))
        });
        dedup_points(&mut out, self.resolution.max(1e-9) * 10.0);
        Ok(out)
    }

    /// d_S(x).
    pub fn distance(&self, x: &Point) -> Result<f64> {
        Ok(self
            .projections(x)?
            .first()
            .map(|p| p.distance)
            .unwrap_or(f64::INFINITY))
    }

    pub fn contains(&self, x: &Point) -> bool {
        match &self.representation {
            SetRepresentation::ImplicitConstraint { g, .. } => g(x.coords()).abs() <= self.resolution,
            _ => self
                .distance(x)
                .map(|d| d <= self.resolution)
                .unwrap_or(false),
        }
    }

    /// Members of S inside the ball B(p, radius), at most about `count` of
    /// them, ordered by increasing distance from p.
    pub fn members_near(&self, m: &Manifold, p: &Point, radius: f64, count: usize) -> Result<Vec<Point>> {
        self.check_manifold(m)?;
        let mut out: Vec<(f64, Point)> = Vec::new();
        match &self.representation {
            SetRepresentation::PointCloud(points) => {
                for q in points {
                    let d = m.distance_unchecked(p, q)?;
                    if d < radius {
                        out.push((d, q.clone()));
                    }
                }
            }
            SetRepresentation::ParametricCurve {
                curve, t_min, t_max, ..
            } => {
                // Sample geometrically around the parameter nearest to p.
                let t0 = scan_minimize(
                    |t| m.distance_unchecked(p, &curve(t)).unwrap_or(f64::INFINITY),
                    *t_min,
                    *t_max,
                    CURVE_GRID,
                    1e-13,
                )
                .first()
                .map(|m| m.0)
                .unwrap_or(*t_min);
                let span = t_max - t_min;
                let per_side = (count / 2).max(1);
                for k in 0..per_side {
                    let s = span * 0.25 * (1e-7f64).powf(k as f64 / (per_side - 1).max(1) as f64);
                    for t in [t0 + s, t0 - s] {
                        let q = curve(t);
                        let d = m.distance_unchecked(p, &q)?;
                        if d < radius && d > 0.0 {
                            out.push((d, q));
                        }
                    }
                }
            }
            SetRepresentation::ImplicitConstraint { g, grad, .. } => {
                let n = m.dim();
                for (k, u) in crate::sampling::directions(n, count, 17).into_iter().enumerate() {
                    let r = radius * 0.9 * (1e-6f64).powf((k % 12) as f64 / 11.0);
                    let start = p.coords() + u * r;
                    if let Some(q) = newton_to_surface(g, grad, start) {
                        let q = Point::new(q);
                        let d = m.distance_unchecked(p, &q)?;
                        if d < radius && d > 0.0 {
                            out.push((d, q));
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.lex_cmp(&b.1)));
        Ok(out.into_iter().map(|(_, q)| q).collect())
    }
}

/// Golden section only locates a flat minimum to about √ε in t. Bisecting
/// on the sign of a central-difference derivative of d² does better.
fn refine_stationary<F: Fn(f64) -> f64>(dist: &F, t: f64, t_min: f64, t_max: f64) -> f64 {
    let h = 1e-6 * (1.0 + t.abs());
    let slope = |s: f64| {
        let (a, b) = (dist(s + h), dist(s - h));
        (a * a - b * b) / (2.0 * h)
    };
    let delta = 1e-5 * (1.0 + t.abs());
    let (mut lo, mut hi) = ((t - delta).max(t_min), (t + delta).min(t_max));
    let (slo, shi) = (slope(lo), slope(hi));
    if !(slo < 0.0 && shi > 0.0) {
        return t;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn dedup_points(v: &mut Vec<Projection>, tol: f64) {
    let mut kept: Vec<Projection> = Vec::with_capacity(v.len());
    for p in v.drain(..) {
        if !kept
            .iter()
            .any(|k| (k.point.coords() - p.point.coords()).norm() <= tol)
        {
            kept.push(p);
        }
    }
    *v = kept;
}

fn newton_to_surface(g: &ConstraintFn, grad: &ConstraintGradFn, mut y: Vector) -> Option<Vector> {
    for _ in 0..100 {
        let val = g(&y);
        if val.abs() <= 1e-14 {
            return Some(y);
        }
        let n = grad(&y);
        let nn = n.norm_squared();
        if nn == 0.0 || !nn.is_finite() {
            return None;
        }
        y -= n * (val / nn);
    }
    (g(&y).abs() <= 1e-10).then_some(y)
}

/// Nearest point of {g = 0} to `x` by alternating Newton steps onto the
/// surface and tangential steps toward x, starting from `start`.
fn implicit_project(
    g: &ConstraintFn,
    grad: &ConstraintGradFn,
    x: &Vector,
    start: Vector,
) -> Option<Vector> {
    let mut y = newton_to_surface(g, grad, start)?;
    for _ in 0..500 {
        let n = grad(&y);
        let n = n.normalize();
        let d = x - &y;
        let tangential = &d - &n * n.dot(&d);
        if tangential.norm() <= 1e-13 * (1.0 + d.norm()) {
            return Some(y);
        }
        y = newton_to_surface(g, grad, &y + tangential)?;
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_projection() {
        let s = SetDescriptor::circle([0.0, 0.0], 1.0);
        let pr = s.projections(&Point::from_slice(&[2.0, 0.0])).unwrap();
        assert!((pr[0].distance - 1.0).abs() < 1e-12);
        assert!((pr[0].point[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn implicit_circle_matches_parametric() {
        let s = SetDescriptor::implicit(
            "unit circle",
            2,
            Arc::new(|v: &Vector| v.norm_squared() - 1.0),
            Arc::new(|v: &Vector| v * 2.0),
            vec![Point::from_slice(&[1.0, 0.0])],
        );
        let x = Point::from_slice(&[0.3, -1.7]);
        let d = s.distance(&x).unwrap();
        assert!((d - (x.coords().norm() - 1.0)).abs() < 1e-9);
        assert!(s.contains(&Point::from_slice(&[0.6, 0.8])));
    }

    #[test]
    fn members_near_are_in_the_ball() {
        let s = SetDescriptor::circle([0.0, 0.0], 1.0);
        let m = Manifold::euclidean(2);
        let p = Point::from_slice(&[1.0, 0.0]);
        let pts = s.members_near(&m, &p, 0.1, 40).unwrap();
        assert!(pts.len() >= 30);
        for q in pts {
            assert!((q.coords().norm() - 1.0).abs() < 1e-12);
            assert!((q.coords() - p.coords()).norm() < 0.1);
        }
    }
}
