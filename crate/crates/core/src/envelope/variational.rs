use serde::{Deserialize, Serialize};

use super::moreau::{moreau_envelope, sphere_margins, EnvelopeOptions, MinimizerStatus};
use crate::calculus::{default_eta, ScalarField};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point};
use crate::optim::{ball_starts, multistart, LocalSearch};

#[derive(Debug, Clone)]
pub struct BorweinPreissOptions {
    /// Evaluation budget of the global search for inf f.
    pub inf_budget: usize,
    /// Radius of the region searched for inf f (defaults to 2λ + 1).
    pub inf_radius: Option<f64>,
    /// Candidate centers z tried after x₀ itself.
    pub max_candidates: usize,
    pub envelope: EnvelopeOptions,
}

impl Default for BorweinPreissOptions {
    fn default() -> Self {
        BorweinPreissOptions {
            inf_budget: 1000,
            inf_radius: None,
            max_candidates: 32,
            envelope: EnvelopeOptions {
                certify: false,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BorweinPreissResult {
    pub z: Point,
    pub y: Point,
    /// Smallest sampled strong-minimum margin of φ = f + (ε/λ²) d(·, z)² at y.
    pub margin: f64,
    pub margins: Vec<(f64, f64)>,
    pub alpha: f64,
    /// Multi-start estimate of inf f; the premise check is only as good as it.
    pub inf_estimate: f64,
    pub inf_evals: usize,
    pub premise_gap: f64,
    pub d_x0_z: f64,
    pub d_z_y: f64,
    pub f_x0: f64,
    pub f_y: f64,
    pub candidates_tried: usize,
}

/// Estimates inf f over a ball by budgeted multi-start.
pub fn estimate_infimum(f: &ScalarField, center: &Point, radius: f64, budget: usize, seed: u64) -> Result<(f64, usize)> {
    let m = f.manifold;
    let radius = radius.min(0.95 * m.injectivity_radius());
    let starts_n = 8usize;
    let per = (budget / starts_n).max(4 * m.dim() + 4);
    let starts = ball_starts(&m, center, radius, starts_n, seed);
    let opts = LocalSearch {
        initial_step: (radius * 0.25).min(0.5),
        max_evals: per,
        rounds: 3,
        ..Default::default()
    };
    let res = multistart(&m, |p| f.value(p), &starts, &opts)?;
    let evals = res.iter().map(|r| r.evals).sum();
    let best = res.first().map(|r| r.value).unwrap_or(f64::INFINITY);
    let best = match f.lower_bound {
        Some(c) => best.max(c),
        None => best,
    };
    Ok((best, evals))
}

/// Finds z ∈ B(x₀, λ) and y ∈ B(z, λ) with f(y) ≤ f(x₀) such that
/// f + (ε/λ²) d(·, z)² attains a strong minimum at y.
pub fn borwein_preiss(
    f: &ScalarField,
    eps: f64,
    lambda: f64,
    x0: &Point,
    opts: &BorweinPreissOptions,
) -> Result<BorweinPreissResult> {
    if !(eps > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidInput(format!("eps = {eps} and lambda = {lambda} must be positive")));
    }
    let m = f.manifold;
    m.validate_point(x0)?;
    let fx0 = f.value(x0);
    if !fx0.is_finite() {
        return Err(Error::OutsideDomain);
    }
    let radius = opts.inf_radius.unwrap_or(2.0 * lambda + 1.0);
    let (inf_est, inf_evals) = estimate_infimum(f, x0, radius, opts.inf_budget, opts.envelope.seed)?;
    let inf_est = inf_est.min(fx0);
    let premise_gap = inf_est + eps - fx0;
    if premise_gap <= 0.0 {
        return Err(Error::PremiseViolation(format!(
            "f(x0) = {fx0} is not below the estimated inf f + eps = {}",
            inf_est + eps
        )));
    }
    let alpha = eps / (lambda * lambda);
    let eta = opts.envelope.eta.unwrap_or_else(|| default_eta(&m));
    let radii = [1e-1 * eta, 1e-2 * eta, 1e-3 * eta];
    let env_x0 = moreau_envelope(f, alpha, x0, &opts.envelope)?;

    let mut candidates = vec![x0.clone()];
    if let Ok(v) = m.log_unchecked(x0, &env_x0.minimizer) {
        let len = v.norm();
        if len > 0.0 {
            let t = (0.5 * len).min(0.5 * lambda) / len;
            candidates.push(m.exp_unchecked(x0, &(&v.components * t))?);
        }
    }
    candidates.extend(ball_starts(&m, x0, 0.99 * lambda, opts.max_candidates, opts.envelope.seed ^ 0xb9).into_iter().skip(1));

    let slack = 1e-12 * (1.0 + fx0.abs());
    for (k, z) in candidates.iter().enumerate() {
        let d_x0_z = m.distance_unchecked(x0, z)?;
        if d_x0_z > lambda {
            continue;
        }
        let env = if k == 0 { env_x0.clone() } else { moreau_envelope(f, alpha, z, &opts.envelope)? };
        if env.status != MinimizerStatus::Strong || env.value > fx0 + slack {
            continue;
        }
        let y = env.minimizer;
        let f_y = f.value(&y);
        let d_z_y = m.distance_unchecked(z, &y)?;
        if f_y > fx0 + slack || d_z_y > lambda {
            continue;
        }
        let phi = |p: &Point| f.value(p) + alpha * m.distance_unchecked(p, z).map(|d| d * d).unwrap_or(f64::INFINITY);
        let margins = sphere_margins(&m, phi, &y, &radii, opts.envelope.margin_directions, opts.envelope.seed);
        let margin = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
        if margin > 0.0 {
            return Ok(BorweinPreissResult {
                z: z.clone(),
                y,
                margin,
                margins,
                alpha,
                inf_estimate: inf_est,
                inf_evals,
                premise_gap,
                d_x0_z,
                d_z_y,
                f_x0: fx0,
                f_y,
                candidates_tried: k + 1,
            });
        }
    }
    Err(Error::SearchFailure(format!(
        "no center in B(x0, {lambda}) produced a verified strong minimum ({} tried)",
        candidates.len()
    )))
}

/// Distance check helper used by callers that re-verify results.
pub fn borwein_preiss_holds(m: &Manifold, r: &BorweinPreissResult, x0: &Point, lambda: f64, tol: f64) -> Result<bool> {
    Ok(m.distance_unchecked(x0, &r.z)? <= lambda + tol
        && m.distance_unchecked(&r.z, &r.y)? <= lambda + tol
        && r.f_y <= r.f_x0 + tol
        && r.margins.iter().all(|m| m.1 > 0.0))
}
