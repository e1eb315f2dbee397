use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Manifold, Point, TangentVector, Vector};
use crate::error::Result;

/// A transport operator L_{from,to} between tangent spaces, stored as an
/// ambient matrix acting on tangent vectors at `from`.
#[derive(Debug, Clone)]
pub struct TransportOperator {
    pub from: Point,
    pub to: Point,
    pub matrix: DMatrix<f64>,
}

impl TransportOperator {
    pub fn apply(&self, v: &Vector) -> Vector {
        &self.matrix * v
    }

    pub fn apply_tangent(&self, v: &TangentVector) -> TangentVector {
        TangentVector::new(self.to.clone(), self.apply(&v.components))
    }

    /// Representation in the orthonormal frames of both endpoints.
    pub fn frame_matrix(&self, manifold: &Manifold) -> DMatrix<f64> {
        manifold.tangent_frame(&self.to).transpose()
            * &self.matrix
            * manifold.tangent_frame(&self.from)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicSample {
    pub t: f64,
    pub point: Point,
    pub velocity: TangentVector,
}

/// A constant-speed geodesic t ↦ exp_start(t · initial_velocity), t ∈ [0, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicSegment {
    pub start: Point,
    pub end: Point,
    pub initial_velocity: TangentVector,
    pub length: f64,
    pub minimizing: bool,
    pub samples: Vec<GeodesicSample>,
}

impl GeodesicSegment {
    /// Writes the samples as CSV with columns `t, x, y, z, v_x, v_y, v_z`
    /// (coordinate names become `x1..xn` above three dimensions).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.start.ambient_dim();
        let names: Vec<String> = if n <= 3 {
            ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()
        } else {
            (1..=n).map(|i| format!("x{i}")).collect()
        };
        let mut header = vec!["t".to_string()];
        header.extend(names.iter().cloned());
        header.extend(names.iter().map(|c| format!("v_{c}")));
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![format!("{:.17e}", s.t)];
            row.extend(s.point.as_slice().iter().map(|c| format!("{c:.17e}")));
            row.extend(s.velocity.components.iter().map(|c| format!("{c:.17e}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub(super) fn build(
    manifold: &Manifold,
    p: &Point,
    v: &Vector,
    samples: usize,
) -> Result<GeodesicSegment> {
    manifold.validate_point(p)?;
    manifold.validate_tangent(p, v)?;
    let mut out = Vec::with_capacity(samples + 1);
    if matches!(manifold, Manifold::Paraboloid) {
        // Resample the integrated trajectory on the uniform grid through
        // repeated short shots from the start point.
        for k in 0..=samples {
            let t = k as f64 / samples as f64;
            let (point, vel) = if t == 0.0 {
                (p.clone(), v.clone())
            } else {
                let traj = super::paraboloid::shoot(p.coords(), [v[0] * t, v[1] * t], &[])?;
                let s = traj.last();
                (
                    Point::new(super::paraboloid::lift(s[0], s[1])),
                    super::paraboloid::lift_velocity(s[0], s[1], s[2] / t, s[3] / t),
                )
            };
            out.push(GeodesicSample {
                t,
                velocity: TangentVector::new(point.clone(), vel),
                point,
            });
        }
    } else {
        for k in 0..=samples {
            let t = k as f64 / samples as f64;
            let point = manifold.exp_unchecked(p, &(v * t))?;
            let vel = if t == 0.0 {
                v.clone()
            } else {
                velocity_closed_form(manifold, p, v, t)
            };
            out.push(GeodesicSample {
                t,
                velocity: TangentVector::new(point.clone(), vel),
                point,
            });
        }
    }
    let end = out.last().expect("at least one sample").point.clone();
    Ok(GeodesicSegment {
        start: p.clone(),
        end,
        initial_velocity: TangentVector::new(p.clone(), v.clone()),
        length: v.norm(),
        minimizing: v.norm() < manifold.injectivity_radius(),
        samples: out,
    })
}

fn velocity_closed_form(manifold: &Manifold, p: &Point, v: &Vector, t: f64) -> Vector {
    match manifold {
        Manifold::Sphere2 => {
            let theta = v.norm();
            if theta == 0.0 {
                return v.clone();
            }
            let e = v / theta;
            let (s, c) = (theta * t).sin_cos();
            (e * c - p.coords() * s) * theta
        }
        Manifold::Cylinder | Manifold::ProductCircleLine => {
            let (a, b) = super::cylinder::frame_components(p.coords(), v);
            let q = manifold
                .exp_unchecked(p, &(v * t))
                .expect("closed form never fails");
            super::cylinder::e_theta(q.coords()) * a + super::cylinder::e_z() * b
        }
        _ => v.clone(),
    }
}
