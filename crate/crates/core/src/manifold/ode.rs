//! Adaptive Dormand–Prince 5(4) integrator for the small autonomous
//! systems that arise from geodesic and parallel-transport equations.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            initial_step: 1e-2,
            min_step: 1e-14,
            max_steps: 200_000,
        }
    }
}

/// Accepted integration steps, including the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }
}

// Autonomous right-hand sides only, so the node coefficients c_i are unused.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// Integrates `y' = rhs(y)` from `t = 0` to `t = t_end`.
pub fn integrate<F>(rhs: F, y0: &[f64], t_end: f64, opts: &OdeOptions) -> Result<Trajectory>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y0.len();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![y0.to_vec()],
    };
    if t_end == 0.0 {
        return Ok(traj);
    }
    let dir = t_end.signum();
    let span = t_end.abs();

    let mut y = y0.to_vec();
    let mut t = 0.0_f64;
    let mut h = opts.initial_step.min(span);

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    rhs(&y, &mut k1);
    let mut steps = 0usize;
    while t < span {
        if steps >= opts.max_steps {
            return Err(Error::IntegrationFailure {
                reason: "step budget exhausted".into(),
                t,
                step: h,
            });
        }
        steps += 1;
        if t + h > span {
            h = span - t;
        }
        let hs = h * dir;

        axpy(&mut tmp, &y, hs, &[(A21, &k1)]);
        rhs(&tmp, &mut k2);
        axpy(&mut tmp, &y, hs, &[(A31, &k1), (A32, &k2)]);
        rhs(&tmp, &mut k3);
        axpy(&mut tmp, &y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        rhs(&tmp, &mut k4);
        axpy(
            &mut tmp,
            &y,
            hs,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        );
        rhs(&tmp, &mut k5);
        axpy(
            &mut tmp,
            &y,
            hs,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        rhs(&tmp, &mut k6);
        axpy(
            &mut y_new,
            &y,
            hs,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        rhs(&y_new, &mut k7);

        let mut err = 0.0_f64;
        for i in 0..n {
            let e = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            return Err(Error::IntegrationFailure {
                reason: "non-finite state".into(),
                t,
                step: h,
            });
        }

        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y_new);
            k1.copy_from_slice(&k7);
            traj.times.push(t * dir);
            traj.states.push(y.clone());
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < opts.min_step && t < span {
            return Err(Error::IntegrationFailure {
                reason: "step size underflow".into(),
                t,
                step: h,
            });
        }
    }
    // Pin the final time exactly.
    if let Some(last) = traj.times.last_mut() {
        *last = t_end;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        let traj = integrate(
            |y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            std::f64::consts::PI,
            &OdeOptions::default(),
        )
        .unwrap();
        let end = traj.last();
        assert!((end[0] + 1.0).abs() < 1e-10);
        assert!(end[1].abs() < 1e-10);
    }

    #[test]
    fn backward_integration() {
        let traj = integrate(|y, dy| dy[0] = y[0], &[1.0], -1.0, &OdeOptions::default()).unwrap();
        assert!((traj.last()[0] - (-1.0f64).exp()).abs() < 1e-11);
        assert_eq!(*traj.times.last().unwrap(), -1.0);
    }
}
