use serde::{Deserialize, Serialize};

use super::field::{FieldKind, ScalarField};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, TangentVector, Vector};
use crate::sampling::{directions, SamplerConfig};

/// Worst slack at or above this verifies a certificate.
pub const VERIFY_TOL: f64 = 1e-9;
/// A witness below this refutes a certificate.
pub const REFUTE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Refuted,
    Inconclusive,
}

/// A claimed proximal subgradient ζ ∈ ∂_P f(p) with quadratic constant σ on
/// B(p, η), together with the sampled verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProximalCertificate {
    pub point: Point,
    pub zeta: TangentVector,
    pub sigma: f64,
    /// σ was fitted to the samples rather than supplied.
    pub sigma_fitted: bool,
    pub eta: f64,
    pub verdict: Verdict,
    /// min over samples of f(q) − f(p) − ⟨ζ, log_p q⟩ + σ d(p,q)².
    pub worst_violation: f64,
    pub worst_point: Option<Point>,
    pub samples: usize,
    pub sampler: SamplerConfig,
}

impl ProximalCertificate {
    pub fn is_verified(&self) -> bool {
        self.verdict == Verdict::Verified
    }
}

/// Default neighbourhood radius: min(0.1, 0.5 · injectivity radius).
pub fn default_eta(m: &Manifold) -> f64 {
    0.1f64.min(0.5 * m.injectivity_radius())
}

fn verdict_of(worst: f64) -> Verdict {
    if worst >= -VERIFY_TOL {
        Verdict::Verified
    } else if worst < -REFUTE_TOL {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    }
}

/// One evaluated sample: q, v = log_p q, d = ‖v‖, g = f(q) − f(p) − ⟨ζ, v⟩.
struct Sample {
    q: Point,
    u: Vector,
    d: f64,
    g: f64,
}

struct Checker<'a> {
    f: &'a ScalarField,
    m: Manifold,
    p: &'a Point,
    fp: f64,
    zeta: &'a Vector,
    frame: nalgebra::DMatrix<f64>,
    eta: f64,
}

impl Checker<'_> {
    /// Sample at frame coordinates `u` (‖u‖ < η).
    fn at(&self, u: Vector) -> Option<Sample> {
        let d = u.norm();
        if d == 0.0 || d >= self.eta {
            return None;
        }
        let v = &self.frame * &u;
        let q = self.m.exp_unchecked(self.p, &v).ok()?;
        let fq = self.f.value(&q);
        if fq.is_nan() {
            return None;
        }
        Some(Sample {
            g: fq - self.fp - self.zeta.dot(&v),
            q,
            u,
            d,
        })
    }

    /// Sample at a point of the set for indicator fields.
    fn at_member(&self, q: Point) -> Option<Sample> {
        let v = self.m.log_unchecked(self.p, &q).ok()?.components;
        let d = v.norm();
        if d == 0.0 || d >= self.eta {
            return None;
        }
        Some(Sample {
            g: -self.fp - self.zeta.dot(&v),
            u: self.frame.transpose() * &v,
            q,
            d,
        })
    }

    fn sample_set(&self, sampler: &SamplerConfig) -> Result<Vec<Sample>> {
        if let FieldKind::Indicator(set) = &self.f.kind {
            let count = sampler.shells * sampler.directions_per_shell;
            return Ok(set
                .members_near(&self.m, self.p, self.eta, count)?
                .into_iter()
                .filter_map(|q| self.at_member(q))
                .collect());
        }
        Ok(sampler
            .radial_shells(self.m.dim(), self.eta * (1.0 - 1e-12))
            .into_iter()
            .filter_map(|u| self.at(u))
            .collect())
    }

    /// Local refinement around the worst sample for slack constant σ.
    fn refine(&self, samples: &mut Vec<Sample>, sigma: f64, sampler: &SamplerConfig) {
        if self.f.is_indicator() || samples.is_empty() {
            return;
        }
        let dim = self.m.dim();
        for round in 0..sampler.refine_rounds {
            let worst = samples
                .iter()
                .min_by(|a, b| slack(a, sigma).total_cmp(&slack(b, sigma)))
                .map(|s| s.u.clone())
                .expect("non-empty");
            let scale = worst.norm() * 0.5f64.powi(round as i32 + 1);
            let mut fresh = Vec::new();
            for w in directions(dim, 16, sampler.seed ^ (round as u64 + 101)) {
                fresh.extend(self.at(&worst + w * scale));
            }
            for c in [0.5, 0.25, 0.1, 1.5] {
                fresh.extend(self.at(&worst * c));
            }
            samples.extend(fresh);
        }
    }
}

fn slack(s: &Sample, sigma: f64) -> f64 {
    s.g + sigma * s.d * s.d
}

fn worst_of(samples: &[Sample], sigma: f64) -> (f64, Option<Point>) {
    samples
        .iter()
        .map(|s| (slack(s, sigma), s))
        .filter(|(v, _)| v.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(v, s)| (v, Some(s.q.clone())))
        .unwrap_or((0.0, None))
}

/// Smallest σ ≥ 0 making every sample in `samples` satisfy the inequality.
fn fit_sigma<'a>(samples: impl Iterator<Item = &'a Sample>) -> f64 {
    samples
        .filter(|s| s.g.is_finite())
        .map(|s| -s.g / (s.d * s.d))
        .fold(0.0, f64::max)
}

/// Tests the proximal subgradient inequality
/// f(q) ≥ f(p) + ⟨ζ, log_p q⟩ − σ d(p,q)² on a deterministic sample of
/// B(p, η). When `sigma` is `None` the smallest admissible σ is fitted and
/// then re-verified on a fresh sample.
pub fn check_proximal_subgradient(
    f: &ScalarField,
    p: &Point,
    zeta: &TangentVector,
    sigma: Option<f64>,
    eta: Option<f64>,
    sampler: &SamplerConfig,
) -> Result<ProximalCertificate> {
    let m = f.manifold;
    m.validate_point(p)?;
    m.validate_tangent(p, &zeta.components)?;
    let fp = f.value(p);
    if !fp.is_finite() {
        return Err(Error::OutsideDomain);
    }
    let inj = m.injectivity_radius();
    let eta = match eta {
        None => default_eta(&m),
        Some(e) if e.is_infinite() && inj.is_infinite() => 1e3,
        Some(e) if e > 0.0 && e <= 0.9 * inj => e,
        Some(e) => {
            return Err(Error::InvalidInput(format!(
                "eta = {e} must lie in (0, 0.9 · injectivity radius]"
            )))
        }
    };
    if let Some(s) = sigma {
        if !(s >= 0.0) {
            return Err(Error::InvalidInput(format!("sigma = {s} must be ≥ 0")));
        }
    }
    let checker = Checker {
        f,
        m,
        p,
        fp,
        zeta: &zeta.components,
        frame: m.tangent_frame(p),
        eta,
    };

    let mut samples = checker.sample_set(sampler)?;
    let (sigma_used, fitted, sampler_used) = match sigma {
        Some(s) => (s, false, *sampler),
        None => {
            // A first-order violation shows up as a fitted σ that blows up
            // like 1/d as the radius shrinks.
            let d_min = samples.iter().map(|s| s.d).fold(f64::INFINITY, f64::min);
            let d_max = samples.iter().map(|s| s.d).fold(0.0, f64::max);
            let inner = fit_sigma(samples.iter().filter(|s| s.d <= 10.0 * d_min));
            let outer = fit_sigma(samples.iter().filter(|s| s.d >= (d_min * d_max).sqrt()));
            if inner > 10.0 * outer + 1e-3 * (1.0 + fp.abs()) {
                let s = outer * 1.25;
                let (worst, worst_point) = worst_of(&samples, s);
                return Ok(ProximalCertificate {
                    point: p.clone(),
                    zeta: zeta.clone(),
                    sigma: s,
                    sigma_fitted: true,
                    eta,
                    verdict: verdict_of(worst),
                    worst_violation: worst,
                    worst_point,
                    samples: samples.len(),
                    sampler: *sampler,
                });
            }
            let s = fit_sigma(samples.iter()) * 1.25 + 1e-12;
            let fresh = SamplerConfig {
                seed: sampler.seed.wrapping_add(1),
                ..*sampler
            };
            samples = checker.sample_set(&fresh)?;
            (s, true, fresh)
        }
    };
    checker.refine(&mut samples, sigma_used, &sampler_used);
    let (worst, worst_point) = worst_of(&samples, sigma_used);
    Ok(ProximalCertificate {
        point: p.clone(),
        zeta: zeta.clone(),
        sigma: sigma_used,
        sigma_fitted: fitted,
        eta,
        verdict: verdict_of(worst),
        worst_violation: worst,
        worst_point,
        samples: samples.len(),
        sampler: sampler_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::SetDescriptor;

    fn e1() -> Manifold {
        Manifold::euclidean(1)
    }

    fn zeta1(p: &Point, z: f64) -> TangentVector {
        TangentVector::new(p.clone(), Vector::from_element(1, z))
    }

    #[test]
    fn abs_has_half_as_subgradient() {
        let f = ScalarField::abs(e1());
        let p = Point::from_slice(&[0.0]);
        let c = check_proximal_subgradient(&f, &p, &zeta1(&p, 0.5), Some(0.0), None, &SamplerConfig::default())
            .unwrap();
        assert_eq!(c.verdict, Verdict::Verified);
    }

    #[test]
    fn negative_abs_is_refuted_for_any_sigma() {
        let f = ScalarField::new(e1(), "-abs", |p| -p[0].abs());
        let p = Point::from_slice(&[0.0]);
        for sigma in [Some(0.0), Some(10.0), Some(1e4), None] {
            let c = check_proximal_subgradient(&f, &p, &zeta1(&p, 0.0), sigma, None, &SamplerConfig::default())
                .unwrap();
            assert_eq!(c.verdict, Verdict::Refuted, "sigma {sigma:?}");
            let w = c.worst_point.unwrap();
            assert!(w[0] != 0.0);
        }
    }

    #[test]
    fn smooth_gradient_verifies_with_fitted_sigma() {
        let m = Manifold::euclidean(2);
        let f = ScalarField::new(m, "smooth", |p| (p[0] * 2.0).sin() + p[1] * p[1] * p[0]);
        let p = Point::from_slice(&[0.3, -0.4]);
        let g = Vector::from_column_slice(&[2.0 * 0.6f64.cos() + 0.16, 2.0 * -0.4 * 0.3]);
        let c = check_proximal_subgradient(
            &f,
            &p,
            &TangentVector::new(p.clone(), g),
            None,
            None,
            &SamplerConfig::default(),
        )
        .unwrap();
        assert_eq!(c.verdict, Verdict::Verified);
        assert!(c.sigma_fitted && c.sigma > 0.0 && c.sigma < 10.0);
    }

    #[test]
    fn outside_domain_is_an_error() {
        let f = ScalarField::indicator(SetDescriptor::circle([0.0, 0.0], 1.0));
        let p = Point::from_slice(&[0.0, 0.0]);
        let r = check_proximal_subgradient(&f, &p, &TangentVector::zero(&p), None, None, &SamplerConfig::default());
        assert!(matches!(r, Err(Error::OutsideDomain)));
    }

    #[test]
    fn circle_indicator_normal_cone() {
        let f = ScalarField::indicator(SetDescriptor::circle([0.0, 0.0], 1.0));
        let p = Point::from_slice(&[1.0, 0.0]);
        let outward = TangentVector::new(p.clone(), Vector::from_column_slice(&[1.0, 0.0]));
        let c = check_proximal_subgradient(&f, &p, &outward, None, None, &SamplerConfig::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Verified);
        assert!(c.sigma < 1e-9);
        // The inward normal needs σ = 1/2 (curvature of the unit circle).
        let inward = TangentVector::new(p.clone(), Vector::from_column_slice(&[-1.0, 0.0]));
        let c = check_proximal_subgradient(&f, &p, &inward, None, None, &SamplerConfig::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Verified);
        assert!((c.sigma - 0.5 * 1.25).abs() < 1e-2, "{}", c.sigma);
        let tangent = TangentVector::new(p.clone(), Vector::from_column_slice(&[0.0, 1.0]));
        let c = check_proximal_subgradient(&f, &p, &tangent, None, None, &SamplerConfig::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Refuted);
    }

    #[test]
    fn sphere_height_gradient_verifies() {
        let m = Manifold::Sphere2;
        let f = ScalarField::new(m, "height", |p| p[2]);
        let p = Point::from_slice(&[0.0, 0.6, 0.8]);
        let g = m.project_tangent(&p, &Vector::from_column_slice(&[0.0, 0.0, 1.0]));
        let c = check_proximal_subgradient(&f, &p, &TangentVector::new(p.clone(), g), None, None, &SamplerConfig::default())
            .unwrap();
        assert_eq!(c.verdict, Verdict::Verified);
    }

    #[test]
    fn certificates_are_deterministic() {
        let f = ScalarField::abs(e1());
        let p = Point::from_slice(&[0.0]);
        let a = check_proximal_subgradient(&f, &p, &zeta1(&p, 1.2), Some(0.0), None, &SamplerConfig::default())
            .unwrap();
        let b = check_proximal_subgradient(&f, &p, &zeta1(&p, 1.2), Some(0.0), None, &SamplerConfig::default())
            .unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.verdict, Verdict::Refuted);
    }
}
