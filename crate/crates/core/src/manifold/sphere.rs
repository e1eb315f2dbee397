//! Unit sphere S² ⊂ ℝ³.

use nalgebra::{DMatrix, Vector3};

use super::{Vector, CUT_TOL};

pub(super) fn exp(p: &Vector, v: &Vector) -> Vector {
    let theta = v.norm();
    if theta < 1e-300 {
        return p.clone();
    }
    let q = p * theta.cos() + v * (theta.sin() / theta);
    let n = q.norm();
    q / n
}

/// Returns the minimizing log, or `None` when `q = -p`.
pub(super) fn log(p: &Vector, q: &Vector) -> Option<Vector> {
    let theta = angle(p, q);
    if std::f64::consts::PI - theta <= CUT_TOL {
        return None;
    }
    let w = q - p * p.dot(q);
    let wn = w.norm();
    if wn < 1e-300 {
        return Some(Vector::zeros(3));
    }
    Some(w * (theta / wn))
}

pub(super) fn angle(p: &Vector, q: &Vector) -> f64 {
    let a = Vector3::new(p[0], p[1], p[2]);
    let b = Vector3::new(q[0], q[1], q[2]);
    a.cross(&b).norm().atan2(a.dot(&b))
}

pub(super) fn project_tangent(p: &Vector, v: &Vector) -> Vector {
    v - p * p.dot(v)
}

pub(super) fn frame(p: &Vector) -> DMatrix<f64> {
    // Gram–Schmidt against the coordinate axis least aligned with p.
    let mut axis = 0;
    for i in 1..3 {
        if p[i].abs() < p[axis].abs() {
            axis = i;
        }
    }
    let mut e = Vector::zeros(3);
    e[axis] = 1.0;
    let e1 = project_tangent(p, &e).normalize();
    let pv = Vector3::new(p[0], p[1], p[2]);
    let e1v = Vector3::new(e1[0], e1[1], e1[2]);
    let e2v = pv.cross(&e1v);
    DMatrix::from_columns(&[e1, Vector::from_column_slice(e2v.as_slice())])
}

/// Ambient matrix of parallel transport along the minimizing great circle.
/// It rotates the plane spanned by `p` and the initial direction and fixes
/// its orthogonal complement.
pub(super) fn transport_matrix(p: &Vector, log_pq: &Vector) -> DMatrix<f64> {
    let theta = log_pq.norm();
    if theta < 1e-300 {
        return DMatrix::identity(3, 3);
    }
    let e = log_pq / theta;
    let (s, c) = theta.sin_cos();
    // v = a e + b p + w  ↦  a (e cos θ − p sin θ) + b (p cos θ + e sin θ) + w
    let ee = &e * e.transpose();
    let pp = p * p.transpose();
    let ep = &e * p.transpose();
    let pe = p * e.transpose();
    DMatrix::identity(3, 3) + (ee + &pp) * (c - 1.0) + (ep - pe) * s
}
