//! Circular cylinder x² + y² = 1 in ℝ³, handled through its flat unrolling
//! (θ, z) ↦ (cos θ, sin θ, z).

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{Vector, CUT_TOL};

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

pub fn chart(p: &Vector) -> (f64, f64) {
    (p[1].atan2(p[0]), p[2])
}

pub fn from_chart(theta: f64, z: f64) -> Vector {
    Vector::from_column_slice(&[theta.cos(), theta.sin(), z])
}

pub(super) fn e_theta(p: &Vector) -> Vector {
    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
    Vector::from_column_slice(&[-p[1] / r, p[0] / r, 0.0])
}

pub(super) fn e_z() -> Vector {
    Vector::from_column_slice(&[0.0, 0.0, 1.0])
}

/// (angular, vertical) components of an ambient tangent vector at p.
pub fn frame_components(p: &Vector, v: &Vector) -> (f64, f64) {
    (e_theta(p).dot(v), v[2])
}

pub(super) fn exp(p: &Vector, v: &Vector) -> Vector {
    let (theta, z) = chart(p);
    let (a, b) = frame_components(p, v);
    from_chart(theta + a, z + b)
}

/// Angular separation of q relative to p, wrapped into (−π, π].
pub(super) fn angular_offset(p: &Vector, q: &Vector) -> f64 {
    let (tp, _) = chart(p);
    let (tq, _) = chart(q);
    wrap_angle(tq - tp)
}

pub(super) fn on_cut(p: &Vector, q: &Vector) -> bool {
    PI - angular_offset(p, q).abs() <= CUT_TOL
}

pub(super) fn log_branches(p: &Vector, q: &Vector) -> Vec<Vector> {
    let dz = q[2] - p[2];
    let d = angular_offset(p, q);
    let et = e_theta(p);
    let make = |a: f64| &et * a + e_z() * dz;
    if PI - d.abs() <= CUT_TOL {
        vec![make(PI), make(-PI)]
    } else {
        vec![make(d)]
    }
}

pub(super) fn project_tangent(p: &Vector, v: &Vector) -> Vector {
    let r2 = p[0] * p[0] + p[1] * p[1];
    let radial = (p[0] * v[0] + p[1] * v[1]) / r2;
    Vector::from_column_slice(&[v[0] - radial * p[0], v[1] - radial * p[1], v[2]])
}

pub(super) fn frame(p: &Vector) -> DMatrix<f64> {
    DMatrix::from_columns(&[e_theta(p), e_z()])
}

/// Rotation about the z-axis carrying p's meridian to q's.
pub(super) fn transport_matrix(p: &Vector, q: &Vector) -> DMatrix<f64> {
    let d = angular_offset(p, q);
    let (s, c) = d.sin_cos();
    DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
}

/// Group law of S¹ × ℝ: angles add, heights add.
pub(super) fn group_add(a: &Vector, b: &Vector) -> Vector {
    let (ta, za) = chart(a);
    let (tb, zb) = chart(b);
    from_chart(ta + tb, za + zb)
}
