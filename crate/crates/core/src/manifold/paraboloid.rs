//! Paraboloid of revolution z = x² + y².
//!
//! The surface is the graph of h(x, y) = x² + y², so the chart (x, y) is
//! global and regular at the apex. In that chart the Christoffel symbols are
//! Γᵏᵢⱼ = 4 xₖ δᵢⱼ / (1 + 4|x|²), which gives
//!
//!   ẍ = −4 x |ẋ|² / (1 + 4|x|²)          (geodesics)
//!   V̇ = −4 x ⟨ẋ, V⟩ / (1 + 4|x|²)        (parallel transport)
//!
//! Rotational symmetry makes the angular momentum x ẏ − y ẋ (Clairaut's
//! invariant) constant along geodesics; it is checked after every solve.

use nalgebra::{DMatrix, Matrix2, Vector2};

use super::ode::{integrate, OdeOptions, Trajectory};
use super::Vector;
use crate::error::{Error, Result};

const CLAIRAUT_TOL: f64 = 1e-8;
const SHOOTING_TOL: f64 = 1e-12;
pub const SHOOTING_MAX_ITERS: usize = 200;

pub fn lift(u: f64, v: f64) -> Vector {
    Vector::from_column_slice(&[u, v, u * u + v * v])
}

/// Ambient tangent vector from chart velocity at chart point (x, y).
pub fn lift_velocity(x: f64, y: f64, vx: f64, vy: f64) -> Vector {
    Vector::from_column_slice(&[vx, vy, 2.0 * x * vx + 2.0 * y * vy])
}

fn geodesic_rhs(s: &[f64], ds: &mut [f64]) {
    let (x, y, vx, vy) = (s[0], s[1], s[2], s[3]);
    let denom = 1.0 + 4.0 * (x * x + y * y);
    let speed2 = vx * vx + vy * vy;
    ds[0] = vx;
    ds[1] = vy;
    ds[2] = -4.0 * x * speed2 / denom;
    ds[3] = -4.0 * y * speed2 / denom;
    // Optional transported vectors follow in pairs.
    let mut i = 4;
    while i + 1 < s.len() {
        let dot = vx * s[i] + vy * s[i + 1];
        ds[i] = -4.0 * x * dot / denom;
        ds[i + 1] = -4.0 * y * dot / denom;
        i += 2;
    }
}

fn ode_options() -> OdeOptions {
    OdeOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        initial_step: 1e-2,
        ..OdeOptions::default()
    }
}

fn clairaut(s: &[f64]) -> f64 {
    s[0] * s[3] - s[1] * s[2]
}

fn check_clairaut(traj: &Trajectory) -> Result<()> {
    let c0 = clairaut(&traj.states[0]);
    let scale = 1.0
        + traj.states[0][2].hypot(traj.states[0][3])
            * (1.0 + traj.states[0][0].hypot(traj.states[0][1]));
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if (clairaut(s) - c0).abs() > CLAIRAUT_TOL * scale {
            return Err(Error::IntegrationFailure {
                reason: format!(
                    "Clairaut invariant drifted from {c0:e} to {:e}",
                    clairaut(s)
                ),
                t: *t,
                step: 0.0,
            });
        }
    }
    Ok(())
}

/// Integrates the geodesic (and optional transported chart vectors) for unit
/// parameter time.
pub fn shoot(p: &Vector, chart_vel: [f64; 2], transported: &[[f64; 2]]) -> Result<Trajectory> {
    let mut y0 = vec![p[0], p[1], chart_vel[0], chart_vel[1]];
    for v in transported {
        y0.extend_from_slice(v);
    }
    let traj = integrate(geodesic_rhs, &y0, 1.0, &ode_options())?;
    check_clairaut(&traj)?;
    Ok(traj)
}

pub(super) fn exp(p: &Vector, v: &Vector) -> Result<Vector> {
    if v.norm() == 0.0 {
        return Ok(p.clone());
    }
    let traj = shoot(p, [v[0], v[1]], &[])?;
    let end = traj.last();
    Ok(lift(end[0], end[1]))
}

fn endpoint(p: &Vector, w: Vector2<f64>) -> Result<Vector2<f64>> {
    if w.norm() == 0.0 {
        return Ok(Vector2::new(p[0], p[1]));
    }
    let traj = shoot(p, [w[0], w[1]], &[])?;
    let e = traj.last();
    Ok(Vector2::new(e[0], e[1]))
}

/// Newton shooting for the chart velocity that reaches `target`.
fn newton(
    p: &Vector,
    target: Vector2<f64>,
    mut w: Vector2<f64>,
    budget: usize,
) -> Result<Vector2<f64>> {
    let mut iters = 0;
    let mut r = endpoint(p, w)? - target;
    while r.norm() > SHOOTING_TOL * (1.0 + target.norm()) {
        if iters >= budget {
            return Err(Error::IntegrationFailure {
                reason: format!("shooting did not converge (residual {:e})", r.norm()),
                t: 1.0,
                step: 0.0,
            });
        }
        iters += 1;
        let h = 1e-7 * (1.0 + w.norm());
        let mut jac = Matrix2::zeros();
        for j in 0..2 {
            let mut wp = w;
            let mut wm = w;
            wp[j] += h;
            wm[j] -= h;
            let col = (endpoint(p, wp)? - endpoint(p, wm)?) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let step = jac.lu().solve(&(-r)).ok_or_else(|| Error::IntegrationFailure {
            reason: "singular shooting Jacobian (conjugate point?)".into(),
            t: 1.0,
            step: 0.0,
        })?;
        let mut lambda = 1.0;
        loop {
            let trial = w + step * lambda;
            let rt = endpoint(p, trial)? - target;
            if rt.norm() < r.norm() || lambda < 1e-6 {
                w = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
        }
    }
    Ok(w)
}

/// Chart velocity of the geodesic from p reaching q at unit time.
pub(super) fn log_chart(p: &Vector, q: &Vector) -> Result<Vector2<f64>> {
    let start = Vector2::new(p[0], p[1]);
    let target = Vector2::new(q[0], q[1]);
    let initial = target - start;
    if initial.norm() == 0.0 {
        return Ok(Vector2::zeros());
    }
    let mut err = match newton(p, target, initial, 40) {
        Ok(w) => return Ok(w),
        Err(e) => e,
    };
    // Continuation along the chart segment, warm-starting each stage.
    'outer: for stages in [8usize, 32, 128] {
        let mut w = initial / stages as f64;
        for k in 1..=stages {
            let partial = start + initial * (k as f64 / stages as f64);
            match newton(p, partial, w, SHOOTING_MAX_ITERS) {
                Ok(next) => w = next,
                Err(e) => {
                    err = e;
                    continue 'outer;
                }
            }
            if k < stages {
                w *= (k + 1) as f64 / k as f64;
            }
        }
        return Ok(w);
    }
    Err(err)
}

pub(super) fn log(p: &Vector, q: &Vector) -> Result<Vector> {
    let w = log_chart(p, q)?;
    Ok(lift_velocity(p[0], p[1], w[0], w[1]))
}

pub(super) fn project_tangent(p: &Vector, v: &Vector) -> Vector {
    let n = Vector::from_column_slice(&[2.0 * p[0], 2.0 * p[1], -1.0]);
    v - &n * (n.dot(v) / n.norm_squared())
}

pub(super) fn frame(p: &Vector) -> DMatrix<f64> {
    let a = lift_velocity(p[0], p[1], 1.0, 0.0).normalize();
    let b = lift_velocity(p[0], p[1], 0.0, 1.0);
    let b = (&b - &a * a.dot(&b)).normalize();
    DMatrix::from_columns(&[a, b])
}

/// Ambient transport matrix (acting on tangent vectors at p) along the
/// geodesic with chart velocity `w`.
pub(super) fn transport_matrix(p: &Vector, w: Vector2<f64>) -> Result<DMatrix<f64>> {
    let e = frame(p);
    if w.norm() == 0.0 {
        return Ok(&e * e.transpose());
    }
    let cols = [[e[(0, 0)], e[(1, 0)]], [e[(0, 1)], e[(1, 1)]]];
    let traj = shoot(p, [w[0], w[1]], &cols)?;
    let s = traj.last();
    let (x, y) = (s[0], s[1]);
    let t1 = lift_velocity(x, y, s[4], s[5]);
    let t2 = lift_velocity(x, y, s[6], s[7]);
    let image = DMatrix::from_columns(&[t1, t2]);
    Ok(image * e.transpose())
}
