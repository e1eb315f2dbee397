use serde::{Deserialize, Serialize};

use super::certificate::{check_proximal_subgradient, ProximalCertificate};
use super::field::ScalarField;
use super::probe::{probe_subdifferential, DirectionGrid};
use crate::error::{Error, Result};
use crate::manifold::{GeodesicSegment, Point, TangentVector, Vector};
use crate::optim::{minimize_on_manifold, scan_minimize, BallSpec, LocalSearch};

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub grid: DirectionGrid,
    /// Penalty rounds; α grows tenfold per round.
    pub max_rounds: usize,
    pub local: LocalSearch,
    /// Grid size for the scan of t ↦ f(γ(t)) − G(t).
    pub path_grid: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid: DirectionGrid::with_directions(128),
            max_rounds: 8,
            local: LocalSearch::default(),
            path_grid: 201,
        }
    }
}

/// A point q near p with f(p) − ε ≤ f(q) ≤ f(p) and a verified proximal
/// subgradient at q.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityResult {
    pub point: Point,
    pub certificate: ProximalCertificate,
    /// Every verified candidate found at `point`.
    pub candidates: Vec<ProximalCertificate>,
    /// Penalty parameter of the round that succeeded (absent when p itself
    /// was certified).
    pub alpha: Option<f64>,
    pub rounds: usize,
}

fn certified_at(f: &ScalarField, q: &Point, grid: &DirectionGrid) -> Result<Option<(ProximalCertificate, Vec<ProximalCertificate>)>> {
    let est = probe_subdifferential(f, q, grid)?;
    let mut all = est.candidates.clone();
    all.extend(est.rays.iter().cloned());
    if all.is_empty() {
        return Ok(None);
    }
    let primary = if f.is_indicator() {
        est.rays
            .iter()
            .min_by(|a, b| a.sigma.total_cmp(&b.sigma))
            .or_else(|| est.min_norm())
            .cloned()
    } else {
        est.min_norm().cloned()
    };
    Ok(primary.map(|c| (c, all)))
}

/// Finds q with d(p,q) < ε, f(p) − ε ≤ f(q) ≤ f(p) and ∂_P f(q) ≠ ∅ by
/// minimizing y ↦ f(y) + α d(p,y)² for increasing α.
pub fn density_search(f: &ScalarField, p: &Point, eps: f64, opts: &SearchOptions) -> Result<DensityResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps = {eps} must be positive")));
    }
    let m = f.manifold;
    m.validate_point(p)?;
    let fp = f.value(p);
    if !fp.is_finite() {
        return Err(Error::OutsideDomain);
    }
    if let Some((certificate, candidates)) = certified_at(f, p, &opts.grid)? {
        return Ok(DensityResult {
            point: p.clone(),
            certificate,
            candidates,
            alpha: None,
            rounds: 0,
        });
    }
    let radius = 0.99 * eps.min(0.45 * m.injectivity_radius());
    let mut alpha = 1.0 / eps;
    for round in 1..=opts.max_rounds {
        let objective = |y: &Point| f.value(y) + alpha * m.distance_unchecked(p, y).map(|d| d * d).unwrap_or(f64::INFINITY);
        let local = LocalSearch {
            initial_step: radius * 0.5,
            ball: Some(BallSpec::new(p.clone(), radius)),
            ..opts.local.clone()
        };
        let found = minimize_on_manifold(&m, objective, p, &local)?;
        let q = found.point;
        let fq = f.value(&q);
        if fq.is_finite() && fq >= fp - eps && fq <= fp {
            let w = m.log_unchecked(&q, p)?.components * (2.0 * alpha);
            let zeta = TangentVector::new(q.clone(), m.project_tangent(&q, &w));
            let direct = check_proximal_subgradient(f, &q, &zeta, None, None, &opts.grid.sampler)?;
            if direct.is_verified() {
                return Ok(DensityResult {
                    point: q,
                    candidates: vec![direct.clone()],
                    certificate: direct,
                    alpha: Some(alpha),
                    rounds: round,
                });
            }
            if let Some((certificate, candidates)) = certified_at(f, &q, &opts.grid)? {
                return Ok(DensityResult {
                    point: q,
                    certificate,
                    candidates,
                    alpha: Some(alpha),
                    rounds: round,
                });
            }
        }
        alpha *= 10.0;
    }
    Err(Error::SearchFailure(format!(
        "no certified point within {eps} of {:?} after {} penalty rounds",
        p.as_slice(),
        opts.max_rounds
    )))
}

/// Output of the proximal mean value search along γ: [0, T] → M.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanValueResult {
    pub t0: f64,
    pub z: Point,
    pub zeta: TangentVector,
    pub certificate: ProximalCertificate,
    /// (f(y) − f(x)) / T.
    pub lhs: f64,
    /// ⟨ζ, L_{γ(t₀) z} γ′(t₀)⟩.
    pub rhs: f64,
    pub eps: f64,
    /// Values of t tried, in order.
    pub attempts: Vec<f64>,
}

impl MeanValueResult {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.eps
    }
}

/// Searches for t₀, z with d(z, γ(t₀)) < ε and ζ ∈ ∂_P f(z) satisfying
/// (f(y) − f(x))/T ≤ ⟨ζ, L_{γ(t₀) z} γ′(t₀)⟩ + ε.
pub fn mean_value_search(
    f: &ScalarField,
    gamma: &GeodesicSegment,
    eps: f64,
    opts: &SearchOptions,
) -> Result<MeanValueResult> {
    let m = f.manifold;
    if f.lipschitz_constant.is_none() {
        return Err(Error::InvalidInput(
            "mean value search needs a Lipschitz constant on the field".into(),
        ));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps = {eps} must be positive")));
    }
    let big_t = gamma.length;
    if !(big_t > 0.0) {
        return Err(Error::InvalidInput("geodesic has zero length".into()));
    }
    let x = &gamma.start;
    let unit: Vector = &gamma.initial_velocity.components / big_t;
    let point_at = |t: f64| m.exp_unchecked(x, &(&unit * t));
    let y = point_at(big_t)?;
    let (fx, fy) = (f.value(x), f.value(&y));
    if !fx.is_finite() || !fy.is_finite() {
        return Err(Error::OutsideDomain);
    }
    let lhs = (fy - fx) / big_t;
    let phi = |t: f64| {
        let g = (t / big_t) * fy + ((big_t - t) / big_t) * fx;
        point_at(t).map(|p| f.value(&p) - g).unwrap_or(f64::INFINITY)
    };
    let mut ts: Vec<f64> = scan_minimize(phi, 0.0, big_t, opts.path_grid, 1e-12)
        .into_iter()
        .map(|(t, _)| t)
        .collect();
    for k in 0..=8 {
        ts.push(big_t * k as f64 / 8.0);
    }

    let velocity = |t: f64| -> Result<Vector> {
        let p = point_at(t)?;
        if t == 0.0 {
            return Ok(unit.clone());
        }
        Ok(m.transport_unchecked(x, &p)?.apply(&unit))
    };

    let mut attempts = Vec::new();
    let mut best: Option<MeanValueResult> = None;
    for &t0 in &ts {
        if attempts.iter().any(|&a: &f64| (a - t0).abs() < 1e-12) {
            continue;
        }
        attempts.push(t0);
        let z0 = point_at(t0)?;
        let Ok(gp) = velocity(t0) else { continue };
        let Ok(dens) = density_search(f, &z0, 0.5 * eps, opts) else {
            continue;
        };
        let moved = if dens.point == z0 {
            gp.clone()
        } else {
            match m.transport_unchecked(&z0, &dens.point) {
                Ok(l) => l.apply(&gp),
                Err(_) => continue,
            }
        };
        for c in &dens.candidates {
            let rhs = c.zeta.components.dot(&moved);
            let better = best.as_ref().map(|b| rhs > b.rhs).unwrap_or(true);
            if better {
                best = Some(MeanValueResult {
                    t0,
                    z: dens.point.clone(),
                    zeta: c.zeta.clone(),
                    certificate: c.clone(),
                    lhs,
                    rhs,
                    eps,
                    attempts: vec![],
                });
            }
        }
        if best.as_ref().map(|b| b.holds()).unwrap_or(false) {
            break;
        }
    }
    match best {
        Some(mut b) if b.holds() => {
            b.attempts = attempts;
            Ok(b)
        }
        _ => Err(Error::SearchFailure(format!(
            "mean value inequality not met at t ∈ {attempts:?} (lhs {lhs})"
        ))),
    }
}
