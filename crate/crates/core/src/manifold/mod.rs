//! Concrete Riemannian manifolds embedded in a Euclidean ambient space.
//!
//! Every manifold here carries the metric induced by its embedding, so
//! tangent vectors live in ambient coordinates and inner products are the
//! ambient dot product. Closed-form manifolds (Euclidean spaces, the round
//! sphere, the cylinder) use analytic formulas; the paraboloid integrates its
//! geodesic and transport equations numerically.

mod cylinder;
mod geodesic;
pub mod ode;
mod paraboloid;
mod point;
mod sphere;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use cylinder::{chart as cylinder_chart, from_chart as cylinder_point, wrap_angle};
pub use geodesic::{GeodesicSample, GeodesicSegment, TransportOperator};
pub use paraboloid::{lift as paraboloid_point, lift_velocity as paraboloid_velocity};
pub use point::{Point, TangentVector, Vector};

use crate::error::{Error, Result};

/// Angular tolerance for deciding that a point sits on the cut locus.
pub(crate) const CUT_TOL: f64 = 1e-10;
const CONSTRAINT_TOL: f64 = 1e-12;

/// The supported manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum Manifold {
    Euclidean { n: usize },
    Sphere2,
    Cylinder,
    Paraboloid,
    /// The cylinder viewed as the Lie group S¹ × ℝ.
    ProductCircleLine,
    /// Finite truncation of ℓ²: ℝⁿ with block-structured linear maps.
    TruncatedL2 { n: usize },
}

/// Relation of a point q to a base point p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRelation {
    /// Unique minimizing geodesic; d(·, p)² is differentiable at q.
    Regular,
    /// d(·, p)² fails to be differentiable at q.
    Singular,
    /// q lies on the cut locus of p.
    Cut,
}

/// How a log-map result is justified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogCertification {
    ClosedForm,
    /// Found by shooting; uniqueness of the minimizing branch is assumed
    /// (no cut locus on the paraboloid), not proven.
    Shooting,
}

/// Serializable summary of a manifold: `{kind, parameters}` plus derived
/// geometric constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldDescriptor {
    #[serde(flatten)]
    pub manifold: Manifold,
    /// `None` means unbounded.
    pub injectivity_radius: Option<f64>,
    pub group_structure: bool,
}

impl Manifold {
    pub fn euclidean(n: usize) -> Self {
        Manifold::Euclidean { n }
    }

    pub fn name(&self) -> String {
        match self {
            Manifold::Euclidean { n } => format!("euclidean({n})"),
            Manifold::Sphere2 => "sphere2".into(),
            Manifold::Cylinder => "cylinder".into(),
            Manifold::Paraboloid => "paraboloid".into(),
            Manifold::ProductCircleLine => "product_circle_line".into(),
            Manifold::TruncatedL2 { n } => format!("truncated_l2({n})"),
        }
    }

    pub fn descriptor(&self) -> ManifoldDescriptor {
        let inj = self.injectivity_radius();
        ManifoldDescriptor {
            manifold: *self,
            injectivity_radius: inj.is_finite().then_some(inj),
            group_structure: self.has_group_structure(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Euclidean { n } | Manifold::TruncatedL2 { n } => *n,
            _ => 3,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::Euclidean { n } | Manifold::TruncatedL2 { n } => *n,
            _ => 2,
        }
    }

    pub fn is_flat(&self) -> bool {
        !matches!(self, Manifold::Sphere2 | Manifold::Paraboloid)
    }

    fn is_vector_space(&self) -> bool {
        matches!(self, Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. })
    }

    fn is_cylinder(&self) -> bool {
        matches!(self, Manifold::Cylinder | Manifold::ProductCircleLine)
    }

    pub fn injectivity_radius(&self) -> f64 {
        match self {
            Manifold::Sphere2 | Manifold::Cylinder | Manifold::ProductCircleLine => PI,
            _ => f64::INFINITY,
        }
    }

    pub fn has_group_structure(&self) -> bool {
        matches!(
            self,
            Manifold::ProductCircleLine | Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. }
        )
    }

    pub fn log_certification(&self) -> LogCertification {
        match self {
            Manifold::Paraboloid => LogCertification::Shooting,
            _ => LogCertification::ClosedForm,
        }
    }

    /// Group law for manifolds with a Lie group structure (vector addition,
    /// or angle/height addition on S¹ × ℝ). The cylinder also accepts it.
    pub fn group_add(&self, a: &Point, b: &Point) -> Result<Point> {
        if self.is_vector_space() {
            Ok(Point::new(a.coords() + b.coords()))
        } else if self.is_cylinder() {
            Ok(Point::new(cylinder::group_add(a.coords(), b.coords())))
        } else {
            Err(Error::InvalidInput(format!(
                "{} has no group structure",
                self.name()
            )))
        }
    }

    /// Identity element of the group structure.
    pub fn group_identity(&self) -> Result<Point> {
        if self.is_vector_space() {
            Ok(Point::origin(self.ambient_dim()))
        } else if self.is_cylinder() {
            Ok(Point::from_slice(&[1.0, 0.0, 0.0]))
        } else {
            Err(Error::InvalidInput(format!(
                "{} has no group structure",
                self.name()
            )))
        }
    }

    pub fn constraint_residual(&self, p: &Point) -> f64 {
        let c = p.coords();
        match self {
            Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. } => 0.0,
            Manifold::Sphere2 => (c.norm_squared() - 1.0).abs(),
            Manifold::Cylinder | Manifold::ProductCircleLine => {
                (c[0] * c[0] + c[1] * c[1] - 1.0).abs()
            }
            Manifold::Paraboloid => (c[2] - c[0] * c[0] - c[1] * c[1]).abs(),
        }
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        if p.ambient_dim() != self.ambient_dim() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, {} expects {}",
                p.ambient_dim(),
                self.name(),
                self.ambient_dim()
            )));
        }
        if !p.is_finite() {
            return Err(Error::InvalidInput("non-finite point coordinates".into()));
        }
        let scale = 1.0 + p.coords().norm_squared();
        if self.constraint_residual(p) > CONSTRAINT_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "point {:?} violates the {} constraint by {:e}",
                p.as_slice(),
                self.name(),
                self.constraint_residual(p)
            )));
        }
        Ok(())
    }

    /// Maps ambient coordinates to a nearby point of the manifold.
    pub fn project_point(&self, coords: &Vector) -> Point {
        match self {
            Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. } => Point::new(coords.clone()),
            Manifold::Sphere2 => Point::new(coords.normalize()),
            Manifold::Cylinder | Manifold::ProductCircleLine => {
                Point::new(cylinder::from_chart(coords[1].atan2(coords[0]), coords[2]))
            }
            Manifold::Paraboloid => Point::new(paraboloid::lift(coords[0], coords[1])),
        }
    }

    pub fn project_tangent(&self, p: &Point, v: &Vector) -> Vector {
        let pc = p.coords();
        match self {
            Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. } => v.clone(),
            Manifold::Sphere2 => sphere::project_tangent(pc, v),
            Manifold::Cylinder | Manifold::ProductCircleLine => cylinder::project_tangent(pc, v),
            Manifold::Paraboloid => paraboloid::project_tangent(pc, v),
        }
    }

    pub fn validate_tangent(&self, p: &Point, v: &Vector) -> Result<()> {
        if v.len() != self.ambient_dim() {
            return Err(Error::InvalidInput(format!(
                "tangent vector has {} components, {} expects {}",
                v.len(),
                self.name(),
                self.ambient_dim()
            )));
        }
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("non-finite tangent vector".into()));
        }
        let normal = (v - self.project_tangent(p, v)).norm();
        let scale = (1.0 + v.norm()) * (1.0 + p.coords().norm());
        if normal > CONSTRAINT_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "vector is not tangent at {:?} (normal component {normal:e})",
                p.as_slice()
            )));
        }
        Ok(())
    }

    /// Orthonormal basis of the tangent space at p, as columns in ambient
    /// coordinates.
    pub fn tangent_frame(&self, p: &Point) -> DMatrix<f64> {
        let pc = p.coords();
        match self {
            Manifold::Euclidean { n } | Manifold::TruncatedL2 { n } => DMatrix::identity(*n, *n),
            Manifold::Sphere2 => sphere::frame(pc),
            Manifold::Cylinder | Manifold::ProductCircleLine => cylinder::frame(pc),
            Manifold::Paraboloid => paraboloid::frame(pc),
        }
    }

    /// Tangent vector at p with the given frame coordinates.
    pub fn from_frame(&self, p: &Point, coeffs: &Vector) -> Vector {
        self.tangent_frame(p) * coeffs
    }

    /// Frame coordinates of an ambient tangent vector at p.
    pub fn to_frame(&self, p: &Point, v: &Vector) -> Vector {
        self.tangent_frame(p).transpose() * v
    }

    /// Exponential map exp_p(v), with `v` in ambient coordinates.
    pub fn exp(&self, p: &Point, v: &Vector) -> Result<Point> {
        self.validate_point(p)?;
        self.validate_tangent(p, v)?;
        self.exp_unchecked(p, v)
    }

    pub(crate) fn exp_unchecked(&self, p: &Point, v: &Vector) -> Result<Point> {
        let pc = p.coords();
        let q = match self {
            Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. } => pc + v,
            Manifold::Sphere2 => sphere::exp(pc, v),
            Manifold::Cylinder | Manifold::ProductCircleLine => cylinder::exp(pc, v),
            Manifold::Paraboloid => paraboloid::exp(pc, v)?,
        };
        Ok(Point::new(q))
    }

    pub fn exp_map(&self, v: &TangentVector) -> Result<Point> {
        self.exp(&v.base, &v.components)
    }

    /// Exponential map of the frame-coordinate vector `coeffs` at p.
    pub fn exp_frame(&self, p: &Point, coeffs: &Vector) -> Result<Point> {
        let v = self.from_frame(p, coeffs);
        self.exp_unchecked(p, &v)
    }

    /// Minimizing-branch inverse of the exponential map.
    pub fn log(&self, p: &Point, q: &Point) -> Result<TangentVector> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        self.log_unchecked(p, q)
    }

    pub(crate) fn log_unchecked(&self, p: &Point, q: &Point) -> Result<TangentVector> {
        let (pc, qc) = (p.coords(), q.coords());
        let v = match self {
            Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. } => qc - pc,
            Manifold::Sphere2 => sphere::log(pc, qc).ok_or_else(|| Error::AmbiguousLog {
                // Every direction is minimizing for antipodal points; report
                // the two frame axes.
                candidates: {
                    let f = sphere::frame(pc);
                    vec![
                        (f.column(0) * PI).iter().copied().collect(),
                        (f.column(1) * PI).iter().copied().collect(),
                    ]
                },
            })?,
            Manifold::Cylinder | Manifold::ProductCircleLine => {
                let mut branches = cylinder::log_branches(pc, qc);
                if branches.len() > 1 {
                    return Err(Error::AmbiguousLog {
                        candidates: branches
                            .iter()
                            .map(|b| b.iter().copied().collect())
                            .collect(),
                    });
                }
                branches.pop().expect("one branch")
            }
            Manifold::Paraboloid => paraboloid::log(pc, qc)?,
        };
        Ok(TangentVector::new(p.clone(), v))
    }

    /// Every minimizing branch of the log map (two on the cylinder's cut
    /// locus, one otherwise).
    pub fn log_branches(&self, p: &Point, q: &Point) -> Result<Vec<TangentVector>> {
        if self.is_cylinder() {
            self.validate_point(p)?;
            self.validate_point(q)?;
            return Ok(cylinder::log_branches(p.coords(), q.coords())
                .into_iter()
                .map(|v| TangentVector::new(p.clone(), v))
                .collect());
        }
        match self.log(p, q) {
            Ok(v) => Ok(vec![v]),
            Err(Error::AmbiguousLog { candidates }) => Ok(candidates
                .into_iter()
                .map(|c| TangentVector::new(p.clone(), Vector::from_vec(c)))
                .collect()),
            Err(e) => Err(e),
        }
    }

    /// Geodesic distance.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        self.distance_unchecked(p, q)
    }

    pub(crate) fn distance_unchecked(&self, p: &Point, q: &Point) -> Result<f64> {
        let (pc, qc) = (p.coords(), q.coords());
        Ok(match self {
            Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. } => (qc - pc).norm(),
            Manifold::Sphere2 => sphere::angle(pc, qc),
            Manifold::Cylinder | Manifold::ProductCircleLine => {
                cylinder::angular_offset(pc, qc).hypot(qc[2] - pc[2])
            }
            Manifold::Paraboloid => {
                let w = paraboloid::log_chart(pc, qc)?;
                paraboloid::lift_velocity(pc[0], pc[1], w[0], w[1]).norm()
            }
        })
    }

    /// Parallel transport L_{pq} along the minimizing geodesic.
    pub fn transport(&self, p: &Point, q: &Point) -> Result<TransportOperator> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        self.transport_unchecked(p, q)
    }

    pub(crate) fn transport_unchecked(&self, p: &Point, q: &Point) -> Result<TransportOperator> {
        let (pc, qc) = (p.coords(), q.coords());
        let n = self.ambient_dim();
        let matrix = match self {
            Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. } => DMatrix::identity(n, n),
            Manifold::Sphere2 => {
                let v = self.log_unchecked(p, q)?;
                sphere::transport_matrix(pc, &v.components)
            }
            Manifold::Cylinder | Manifold::ProductCircleLine => {
                if cylinder::on_cut(pc, qc) {
                    return Err(Error::AmbiguousLog {
                        candidates: cylinder::log_branches(pc, qc)
                            .iter()
                            .map(|b| b.iter().copied().collect())
                            .collect(),
                    });
                }
                cylinder::transport_matrix(pc, qc)
            }
            Manifold::Paraboloid => {
                let w = paraboloid::log_chart(pc, qc)?;
                paraboloid::transport_matrix(pc, w)?
            }
        };
        Ok(TransportOperator {
            from: p.clone(),
            to: q.clone(),
            matrix,
        })
    }

    /// Classifies q relative to p.
    pub fn singular_set_test(&self, p: &Point, q: &Point) -> PointRelation {
        if self.validate_point(p).is_err() || self.validate_point(q).is_err() {
            return PointRelation::Singular;
        }
        let (pc, qc) = (p.coords(), q.coords());
        match self {
            Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. } => PointRelation::Regular,
            Manifold::Sphere2 => {
                if PI - sphere::angle(pc, qc) <= CUT_TOL {
                    PointRelation::Cut
                } else {
                    PointRelation::Regular
                }
            }
            Manifold::Cylinder | Manifold::ProductCircleLine => {
                if cylinder::on_cut(pc, qc) {
                    PointRelation::Cut
                } else {
                    PointRelation::Regular
                }
            }
            Manifold::Paraboloid => match paraboloid::log_chart(pc, qc) {
                Ok(_) => PointRelation::Regular,
                Err(_) => PointRelation::Singular,
            },
        }
    }

    /// Geodesic t ↦ exp_p(t v), t ∈ [0, 1], sampled at `samples + 1` points.
    pub fn geodesic(&self, p: &Point, v: &Vector, samples: usize) -> Result<GeodesicSegment> {
        geodesic::build(self, p, v, samples.max(1))
    }

    /// Minimizing geodesic from p to q.
    pub fn geodesic_between(&self, p: &Point, q: &Point, samples: usize) -> Result<GeodesicSegment> {
        let v = self.log(p, q)?;
        let mut seg = geodesic::build(self, p, &v.components, samples.max(1))?;
        seg.minimizing = true;
        seg.end = q.clone();
        Ok(seg)
    }

    /// Point at arc parameter `t` along the geodesic through p with initial
    /// velocity `v` (not necessarily unit), i.e. exp_p(t v).
    pub fn geodesic_point(&self, p: &Point, v: &Vector, t: f64) -> Result<Point> {
        self.exp_unchecked(p, &(v * t))
    }
}

