use std::cell::Cell;

use nalgebra::DMatrix;

use super::maps::MapDescriptor;
use super::report::{ConstantCertificate, IterRecord, SolveReport, SolveVerdict};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, PointRelation, Vector};
use crate::optim::{ball_starts, minimize_on_manifold, BallSpec, LocalSearch};

#[derive(Debug, Clone)]
pub struct FixedPointOptions {
    /// Map evaluations allowed.
    pub budget: usize,
    /// Residual d(x, F(x)) required for a solved verdict.
    pub tol: f64,
    /// Samples used to check that F(x) avoids the singular sets.
    pub check_samples: usize,
    pub seed: u64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            budget: 10_000,
            tol: 1e-8,
            check_samples: 64,
            seed: 11,
        }
    }
}

struct Counted<'a> {
    f: &'a MapDescriptor,
    evals: Cell<usize>,
}

impl Counted<'_> {
    fn apply(&self, p: &Point) -> Point {
        self.evals.set(self.evals.get() + 1);
        self.f.apply(p)
    }

    fn residual(&self, p: &Point) -> f64 {
        let fp = self.apply(p);
        self.f.manifold.distance_unchecked(p, &fp).unwrap_or(f64::INFINITY)
    }
}

fn violated(condition: &str, detail: String) -> Error {
    Error::PreconditionViolated {
        condition: condition.into(),
        detail,
    }
}

/// Newton direction for r(u) = E_xᵀ log_x F(exp_x(E_x u)) − u, in frame
/// coordinates at x.
fn newton_direction(m: &Manifold, f: &Counted, x: &Point) -> Option<Vector> {
    let e = m.tangent_frame(x);
    let d = m.dim();
    let r = |u: &Vector| -> Option<Vector> {
        let y = m.exp_unchecked(x, &(&e * u)).ok()?;
        let fy = f.apply(&y);
        let w = m.log_unchecked(x, &fy).ok()?;
        Some(e.transpose() * w.components - u)
    };
    let r0 = r(&Vector::zeros(d))?;
    let h = 1e-6;
    let mut jac = DMatrix::zeros(d, d);
    for i in 0..d {
        let mut u = Vector::zeros(d);
        u[i] = h;
        let plus = r(&u)?;
        u[i] = -h;
        let minus = r(&u)?;
        jac.set_column(i, &((plus - minus) / (2.0 * h)));
    }
    let step = jac.lu().solve(&(-r0))?;
    step.iter().all(|v| v.is_finite()).then_some(step)
}

/// Solves F(x) = x in B(x₀, R) under a constant certificate, descending on
/// g(x) = d(x, F(x)) and monitoring d(x, witness) ≤ g(x)/δ.
pub fn fixed_point_solve(f: &MapDescriptor, cert: &ConstantCertificate, opts: &FixedPointOptions) -> Result<SolveReport> {
    let m = f.manifold;
    let delta = cert.margin_to_one;
    if !(delta > 0.0) {
        return Err(violated(
            "L + K + eps < 1",
            format!("L + K + eps = {} + {} + {} = {}", cert.l, cert.k, cert.epsilon, 1.0 - delta),
        ));
    }
    let x0 = cert.region.center.clone();
    let radius = cert.region.radius;
    m.validate_point(&x0)?;
    let counted = Counted {
        f,
        evals: Cell::new(0),
    };
    let g0 = counted.residual(&x0);
    if !(g0 < radius * delta) {
        return Err(violated(
            "d(x0, F(x0)) < R(1 - (L + K + eps))",
            format!("d(x0, F(x0)) = {g0}, R(1 - (L + K + eps)) = {}", radius * delta),
        ));
    }
    if !m.is_flat() || m.injectivity_radius().is_finite() {
        let r = if radius.is_finite() { 0.999 * radius } else { 1.0 };
        for x in ball_starts(&m, &x0, r, opts.check_samples, opts.seed) {
            let fx = f.apply(&x);
            let gx = f.base_map().apply(&x);
            if m.singular_set_test(&x, &fx) != PointRelation::Regular || m.singular_set_test(&gx, &fx) != PointRelation::Regular {
                return Err(violated(
                    "F(x) off the singular sets of x and G(x)",
                    format!("x = {:?}, F(x) = {:?}", x.as_slice(), fx.as_slice()),
                ));
            }
        }
    }

    let ball = BallSpec::new(x0.clone(), radius);
    let mut report = SolveReport::new(SolveVerdict::BudgetExhausted);
    report.delta = Some(delta);
    report.certificate = Some(cert.clone());
    report.bound_used = g0 / delta;
    let mut x = x0.clone();
    let mut g = g0;
    let mut trace = vec![IterRecord {
        iteration: 0,
        point: x.clone(),
        value: g,
        bound: g / delta,
        step: 0.0,
        projected: false,
    }];
    let floor = 1e-15 * (1.0 + x0.coords().amax());
    let mut iteration = 0;
    while g > floor && counted.evals.get() < opts.budget {
        iteration += 1;
        let mut accepted = None;
        if let Some(u) = newton_direction(&m, &counted, &x) {
            let e = m.tangent_frame(&x);
            let mut t = 1.0;
            for _ in 0..40 {
                if let Ok(y) = m.exp_unchecked(&x, &(&e * &u * t)) {
                    let (y, projected) = ball.project(&m, y);
                    let gy = counted.residual(&y);
                    if gy <= (1.0 - 1e-4 * t) * g {
                        accepted = Some((y, gy, t * u.norm(), projected));
                        break;
                    }
                }
                t *= 0.5;
            }
        }
        if accepted.is_none() {
            let left = opts.budget.saturating_sub(counted.evals.get());
            if left < 4 * m.dim() + 4 {
                break;
            }
            let local = LocalSearch {
                initial_step: (g / delta).clamp(1e-12, 0.5),
                max_evals: left.min(2000),
                ball: Some(ball.clone()),
                ..Default::default()
            };
            let r = minimize_on_manifold(&m, |p| counted.residual(p), &x, &local)?;
            if r.value < g {
                let step = m.distance_unchecked(&x, &r.point).unwrap_or(f64::NAN);
                accepted = Some((r.point, r.value, step, r.projections > 0));
            }
        }
        let Some((y, gy, step, projected)) = accepted else {
            break;
        };
        if projected {
            report.notes.push(format!("iterate {iteration} projected back to the ball"));
        }
        x = y;
        g = gy;
        trace.push(IterRecord {
            iteration,
            point: x.clone(),
            value: g,
            bound: g / delta,
            step,
            projected,
        });
    }
    let worst = trace
        .iter()
        .map(|t| m.distance_unchecked(&t.point, &x).unwrap_or(f64::INFINITY) - t.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    if worst > 1e-6 {
        report.notes.push(format!("distance bound exceeded by {worst:e}"));
    }
    report.worst_bound_slack = Some(worst);
    report.verdict = if g <= opts.tol {
        SolveVerdict::Solved
    } else {
        SolveVerdict::BudgetExhausted
    };
    report.witness = Some(x);
    report.residual = g;
    report.iterations = iteration;
    report.evaluations = counted.evals.get();
    report.trace = trace;
    Ok(report)
}

/// Picard iteration for a map with Lipschitz constant below one.
pub fn contraction_fallback(f: &MapDescriptor, x_init: &Point, opts: &FixedPointOptions) -> Result<SolveReport> {
    let m = f.manifold;
    let k = f
        .lipschitz_constant
        .ok_or_else(|| violated("Lipschitz constant < 1", "no Lipschitz constant supplied".into()))?;
    if !(k < 1.0) {
        return Err(violated("Lipschitz constant < 1", format!("K = {k}")));
    }
    m.validate_point(x_init)?;
    let mut report = SolveReport::new(SolveVerdict::BudgetExhausted);
    let mut x = x_init.clone();
    let mut prev_step = f64::INFINITY;
    let mut evals = 0;
    let mut trace = Vec::new();
    while evals < opts.budget {
        let y = f.apply(&x);
        evals += 1;
        let step = m.distance_unchecked(&x, &y)?;
        if step > k * prev_step * (1.0 + 1e-6) + 1e-14 {
            return Err(Error::HypothesisRefuted(format!(
                "step {step:e} after {prev_step:e} exceeds the contraction factor {k} (iteration {evals})"
            )));
        }
        trace.push(IterRecord {
            iteration: evals,
            point: y.clone(),
            value: step,
            bound: k / (1.0 - k) * step,
            step,
            projected: false,
        });
        x = y;
        prev_step = step;
        if k / (1.0 - k) * step <= 1e-3 * opts.tol || step == 0.0 {
            break;
        }
    }
    let residual = m.distance_unchecked(&x, &f.apply(&x))?;
    report.verdict = if residual <= opts.tol {
        SolveVerdict::Solved
    } else {
        SolveVerdict::BudgetExhausted
    };
    report.bound_used = k / (1.0 - k) * prev_step;
    report.delta = Some(1.0 - k);
    report.witness = Some(x);
    report.residual = residual;
    report.iterations = evals;
    report.evaluations = evals + 1;
    report.trace = trace;
    report.notes.push(format!("unique fixed point: F is {k}-Lipschitz"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{certify_k, certify_perturbation, CertifyOptions};

    #[test]
    fn expansive_rotation_still_solves() {
        let m = Manifold::euclidean(2);
        let f = MapDescriptor::linear(m, "rot23", DMatrix::from_row_slice(2, 2, &[0.0, 23.0, -23.0, 0.0])).unwrap();
        let region = BallSpec::new(Point::from_slice(&[0.3, -0.2]), 10.0);
        let cert = certify_k(&f, &region, &Default::default()).unwrap();
        let r = fixed_point_solve(&f, &cert, &Default::default()).unwrap();
        assert_eq!(r.verdict, SolveVerdict::Solved);
        assert!(r.witness.unwrap().coords().norm() < 1e-8);
        assert!(r.worst_bound_slack.unwrap() <= 1e-6);
    }

    #[test]
    fn block_rotation_plus_constant() {
        let n = 10;
        let m = Manifold::TruncatedL2 { n };
        let mut t = DMatrix::zeros(n, n);
        for b in 0..n / 2 {
            t[(2 * b, 2 * b + 1)] = 5.0;
            t[(2 * b + 1, 2 * b)] = -5.0;
        }
        let c = Vector::from_fn(n, |i, _| 0.01 * (i as f64 + 1.0));
        let g = MapDescriptor::linear(m, "T", t.clone()).unwrap();
        let c2 = c.clone();
        let h = MapDescriptor::new(m, "c", move |_| Point::new(c2.clone())).with_lipschitz(0.0);
        let f = MapDescriptor::group_sum(&g, &h).unwrap();
        let region = BallSpec::new(Point::origin(n), 1.0);
        let cert = certify_perturbation(&f, &region, &CertifyOptions { samples: 32, ..Default::default() }).unwrap();
        assert!(cert.k.abs() < 1e-12 && cert.l < 1e-9 && cert.epsilon == 0.0);
        let r = fixed_point_solve(&f, &cert, &Default::default()).unwrap();
        let expect = (DMatrix::identity(n, n) - t).lu().solve(&c).unwrap();
        assert!((r.witness.unwrap().coords() - expect).amax() < 1e-8);
    }

    #[test]
    fn rejects_far_start() {
        let m = Manifold::euclidean(1);
        let f = MapDescriptor::new(m, "shift", |p| Point::from_slice(&[p[0] * 0.5 + 10.0]));
        let region = BallSpec::new(Point::from_slice(&[0.0]), 1.0);
        let cert = certify_k(&f, &region, &CertifyOptions { samples: 8, ..Default::default() }).unwrap();
        assert!(matches!(
            fixed_point_solve(&f, &cert, &Default::default()),
            Err(Error::PreconditionViolated { .. })
        ));
    }

    #[test]
    fn picard_on_halving() {
        let m = Manifold::euclidean(1);
        let f = MapDescriptor::new(m, "half", |p| Point::from_slice(&[p[0] / 2.0])).with_lipschitz(0.5);
        let r = contraction_fallback(&f, &Point::from_slice(&[3.0]), &Default::default()).unwrap();
        assert_eq!(r.verdict, SolveVerdict::Solved);
        assert!(r.witness.unwrap()[0].abs() < 1e-10);
    }

    #[test]
    fn picard_detects_false_constant() {
        let m = Manifold::euclidean(1);
        let f = MapDescriptor::new(m, "double", |p| Point::from_slice(&[2.0 * p[0] + 1.0])).with_lipschitz(0.5);
        assert!(matches!(
            contraction_fallback(&f, &Point::from_slice(&[3.0]), &Default::default()),
            Err(Error::HypothesisRefuted(_))
        ));
    }
}
