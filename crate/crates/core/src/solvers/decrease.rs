use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{IterRecord, SolveReport, SolveVerdict};
use crate::calculus::{probe_subdifferential, DirectionGrid, ScalarField};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, Vector};
use crate::optim::{ball_starts, minimize_on_manifold, multistart, BallSpec, LocalSearch};

#[derive(Debug, Clone)]
pub struct DecreaseOptions {
    /// Points of the ball probed for small subgradients.
    pub probe_points: usize,
    pub probe_directions: usize,
    /// Multi-start count for the infimum over the ball.
    pub restarts: usize,
    pub seed: u64,
    pub local: LocalSearch,
}

impl Default for DecreaseOptions {
    fn default() -> Self {
        DecreaseOptions {
            probe_points: 24,
            probe_directions: 64,
            restarts: 12,
            seed: 3,
            local: LocalSearch {
                max_evals: 2000,
                x_tol: 1e-12,
                ..Default::default()
            },
        }
    }
}

/// Smallest verified subgradient norm found on sampled points of a ball,
/// optionally skipping points where `skip` holds.
fn sample_min_norm<S>(f: &ScalarField, ball: &BallSpec, opts: &DecreaseOptions, skip: S) -> Result<(Option<(f64, Point)>, usize)>
where
    S: Fn(&Point) -> bool,
{
    let m = f.manifold;
    let grid = DirectionGrid::with_directions(opts.probe_directions);
    let mut best: Option<(f64, Point)> = None;
    let mut probed = 0;
    let r = if ball.radius.is_finite() { 0.999 * ball.radius } else { 1.0 };
    for p in ball_starts(&m, &ball.center, r, opts.probe_points, opts.seed) {
        if skip(&p) || !f.value(&p).is_finite() {
            continue;
        }
        probed += 1;
        let est = probe_subdifferential(f, &p, &grid)?;
        if let Some(n) = est.min_norm().map(|c| c.zeta.norm()) {
            if best.as_ref().is_none_or(|b| n < b.0) {
                best = Some((n, p));
            }
        }
    }
    Ok((best, probed))
}

/// Checks inf{ f(x) : d(x, x₀) < ρ } ≤ f(x₀) − ρδ, after sampling the ball
/// for proximal subgradients shorter than δ.
pub fn verify_decrease(f: &ScalarField, x0: &Point, rho: f64, delta: f64, opts: &DecreaseOptions) -> Result<SolveReport> {
    let m = f.manifold;
    m.validate_point(x0)?;
    if !(rho > 0.0 && delta > 0.0) {
        return Err(Error::InvalidInput(format!("rho = {rho} and delta = {delta} must be positive")));
    }
    let fx0 = f.value(x0);
    if !fx0.is_finite() {
        return Err(Error::OutsideDomain);
    }
    let ball = BallSpec::new(x0.clone(), rho);
    let (min_norm, probed) = sample_min_norm(f, &ball, opts, |_| false)?;
    if let Some((n, p)) = &min_norm {
        if *n < delta * (1.0 - 1e-3) {
            return Err(Error::HypothesisRefuted(format!(
                "verified proximal subgradient of norm {n} < delta = {delta} at {:?}",
                p.as_slice()
            )));
        }
    }
    let local = LocalSearch {
        ball: Some(ball.clone()),
        initial_step: 0.25 * rho,
        ..opts.local.clone()
    };
    let starts = ball_starts(&m, x0, 0.9 * rho, opts.restarts, opts.seed ^ 0x55);
    let res = multistart(&m, |p| f.value(p), &starts, &local)?;
    let best = &res[0];
    let target = fx0 - rho * delta;
    let mut report = SolveReport::new(if best.value <= target + 1e-7 {
        SolveVerdict::BoundHolds
    } else {
        SolveVerdict::RefutedHypotheses
    });
    report.witness = Some(best.point.clone());
    report.residual = best.value - target;
    report.bound_used = target;
    report.evaluations = res.iter().map(|r| r.evals).sum::<usize>() + 1;
    report.delta = Some(delta);
    report.min_sampled_norm = min_norm.map(|m| m.0);
    report.sampled_points = probed;
    report.notes.push("delta certificate is sampled, not exhaustive".into());
    Ok(report)
}

/// Checks min{ d(x, V^c), d(x, U^c), d(x, zeros) } ≤ F(x)/δ for a
/// nonnegative field F = F(·, α), locating the nearest zero with the exact
/// penalty d(x, y) + 2F(y)/δ.
pub fn solvability_bound(
    field: &ScalarField,
    x: &Point,
    v: &BallSpec,
    u: &BallSpec,
    delta: f64,
    opts: &DecreaseOptions,
) -> Result<SolveReport> {
    let m = field.manifold;
    m.validate_point(x)?;
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("delta = {delta} must be positive")));
    }
    let fx = field.value(x);
    if !(fx >= 0.0) {
        return Err(Error::InvalidInput(format!("F(x) = {fx} must be finite and nonnegative")));
    }
    let zero_tol = 1e-12;
    let (min_norm, probed) = sample_min_norm(field, v, opts, |p| field.value(p) <= zero_tol)?;
    if let Some((n, p)) = &min_norm {
        if *n < delta * (1.0 - 1e-3) {
            return Err(Error::HypothesisRefuted(format!(
                "verified proximal subgradient of norm {n} < delta = {delta} at {:?} where F > 0",
                p.as_slice()
            )));
        }
    }
    let bound = fx / delta;
    let boundary = |b: &BallSpec| b.radius - m.distance_unchecked(&b.center, x).unwrap_or(f64::INFINITY);
    let d_vc = boundary(v).max(0.0);
    let d_uc = boundary(u).max(0.0);

    let penalty = |y: &Point| {
        if !u.contains(&m, y) {
            return f64::INFINITY;
        }
        m.distance_unchecked(x, y).unwrap_or(f64::INFINITY) + 2.0 * field.value(y) / delta
    };
    let local = LocalSearch {
        initial_step: bound.clamp(1e-6, 1.0),
        ball: Some(u.clone()),
        ..opts.local.clone()
    };
    let mut starts = vec![x.clone()];
    starts.extend(ball_starts(&m, x, bound.max(1e-6), opts.restarts, opts.seed).into_iter().skip(1));
    let res = multistart(&m, penalty, &starts, &local)?;
    let mut candidate = res[0].point.clone();
    let mut evals: usize = res.iter().map(|r| r.evals).sum();
    if field.value(&candidate) > zero_tol {
        // Polish the zero itself.
        let r = minimize_on_manifold(&m, |y| field.value(y), &candidate, &local)?;
        evals += r.evals;
        candidate = r.point;
    }
    let residual = field.value(&candidate);
    let dist = m.distance_unchecked(x, &candidate)?;
    let min_term = d_vc.min(d_uc).min(if residual <= zero_tol { dist } else { f64::INFINITY });
    let holds = min_term <= bound + 1e-7;
    let mut report = SolveReport::new(if holds {
        SolveVerdict::BoundHolds
    } else {
        SolveVerdict::RefutedHypotheses
    });
    if residual <= zero_tol {
        report.witness = Some(candidate.clone());
    } else {
        report.notes.push(format!("no zero located (best F = {residual:e}); bound met by a boundary term"));
    }
    report.residual = residual;
    report.bound_used = bound;
    report.delta = Some(delta);
    report.evaluations = evals;
    report.min_sampled_norm = min_norm.map(|m| m.0);
    report.sampled_points = probed;
    report.trace = vec![IterRecord {
        iteration: 0,
        point: candidate,
        value: residual,
        bound,
        step: dist,
        projected: false,
    }];
    report.notes.push(format!("d(x,V^c) = {d_vc}, d(x,U^c) = {d_uc}, d(x,witness) = {dist}"));
    Ok(report)
}

/// Random piecewise-quadratic lower semicontinuous function on ℝⁿ whose
/// proximal subgradients all have norm at least δ:
/// f(x) = φ(⟨u, x⟩) + ψ(x − ⟨u, x⟩u), where φ′ ≥ δ piecewise and ψ is a
/// max/min of quadratics in the complement of u.
#[derive(Debug, Clone)]
pub struct PiecewiseQuadratic {
    pub u: Vector,
    pub delta: f64,
    /// φ(t) = δt + Σ cᵢ max(0, t − τᵢ)², cᵢ ≥ 0.
    pub ramps: Vec<(f64, f64)>,
    /// ψ pieces: (sign, a, center, offset) for sign·(a‖w − center‖² + offset)
    /// combined by max (sign +1) or min (sign −1) in pairs.
    pub pieces: Vec<(f64, f64, Vector, f64)>,
    pub jump: Option<(f64, f64)>,
}

impl PiecewiseQuadratic {
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = Vector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        if u.norm() < 1e-3 {
            u[0] = 1.0;
        }
        u /= u.norm();
        let delta = rng.random_range(0.2..2.0);
        let ramps = (0..2)
            .map(|_| (rng.random_range(0.0..1.5), rng.random_range(-1.0..1.0)))
            .collect();
        let pieces = (0..4)
            .map(|k| {
                let c = Vector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
                let c = &c - &u * u.dot(&c);
                let sign = if k < 2 { 1.0 } else { -1.0 };
                (sign, rng.random_range(0.1..2.0), c, rng.random_range(-0.5..0.5))
            })
            .collect();
        // An upward jump along u keeps f lower semicontinuous and φ′ ≥ δ.
        let jump = seed.is_multiple_of(3).then(|| (rng.random_range(-0.5..0.5), rng.random_range(0.1..1.0)));
        PiecewiseQuadratic {
            u,
            delta,
            ramps,
            pieces,
            jump,
        }
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        let t = self.u.dot(x);
        let w = x - &self.u * t;
        let mut phi = self.delta * t;
        for (c, tau) in &self.ramps {
            phi += c * (t - tau).max(0.0).powi(2);
        }
        if let Some((tau, h)) = self.jump {
            if t > tau {
                phi += h;
            }
        }
        let q = |p: &(f64, f64, Vector, f64)| p.1 * (&w - &p.2).norm_squared() + p.3;
        let up = q(&self.pieces[0]).max(q(&self.pieces[1]));
        let down = q(&self.pieces[2]).min(q(&self.pieces[3]));
        phi + up + down
    }

    pub fn field(&self, m: Manifold) -> ScalarField {
        let me = self.clone();
        ScalarField::new(m, "piecewise-quadratic", move |p| me.eval(p.coords()))
    }
}
