use nalgebra::DMatrix;

use super::maps::{frame_jacobian, operator_norm, symmetric_part_max, MapDescriptor, MapKind, FD_STEP};
use super::report::{CertificateMethod, ConstantCertificate};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, PointRelation};
use crate::optim::{ball_starts, minimize_on_manifold, BallSpec, LocalSearch};

/// Sampling layout shared by the certification routines.
#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Local maximization restarts from the best samples.
    pub refine: usize,
    /// Samples are drawn from B(x₀, shrink·R) so that they stay in the open
    /// ball.
    pub shrink: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            samples: 256,
            seed: 7,
            refine: 3,
            shrink: 0.999,
        }
    }
}

fn region_samples(m: &Manifold, region: &BallSpec, opts: &CertifyOptions) -> Result<Vec<Point>> {
    if !region.radius.is_finite() {
        return Err(Error::InvalidInput("certification region must be bounded".into()));
    }
    let r = (region.radius * opts.shrink).min(0.999 * m.injectivity_radius());
    Ok(ball_starts(m, &region.center, r, opts.samples.max(1), opts.seed))
}

/// K(x) = max over unit h ∈ T_x of ⟨L_{x F(x)} h, L_{G(x) F(x)} dG(x) h⟩.
fn k_at(f: &MapDescriptor, x: &Point) -> Result<f64> {
    let m = f.manifold;
    let g = f.base_map();
    let gx = g.apply(x);
    let fx = f.apply(x);
    if m.singular_set_test(x, &fx) != PointRelation::Regular || m.singular_set_test(&gx, &fx) != PointRelation::Regular {
        return Err(Error::PreconditionViolated {
            condition: "F(x) off the singular sets of x and G(x)".into(),
            detail: format!("x = {:?}", x.as_slice()),
        });
    }
    let dg = g.frame_differential(x)?;
    let p1 = m.transport_unchecked(x, &fx)?.matrix;
    let p2 = m.transport_unchecked(&gx, &fx)?.matrix;
    let ex = m.tangent_frame(x);
    let egx = m.tangent_frame(&gx);
    let b = ex.transpose() * p1.transpose() * p2 * egx * dg;
    Ok(symmetric_part_max(&b))
}

/// Sampled Lipschitz constant: largest operator norm of the differential
/// over the samples (exact on convex regions of flat spaces as the sample
/// grid refines).
fn lipschitz_of(g: &MapDescriptor, points: &[Point]) -> f64 {
    points
        .iter()
        .filter_map(|x| g.frame_differential(x).ok())
        .map(|d| operator_norm(&d))
        .fold(0.0, f64::max)
}

/// Certifies K for F (or for G = F when F is not a perturbation) on a ball.
/// Transports are trivial on vector spaces, so a linear G gets the exact
/// symmetric-part eigenvalue.
pub fn certify_k(f: &MapDescriptor, region: &BallSpec, opts: &CertifyOptions) -> Result<ConstantCertificate> {
    let m = f.manifold;
    if let MapKind::Linear(a) = &f.base_map().kind {
        let k = symmetric_part_max(a);
        let c = operator_norm(a);
        let mut cert = ConstantCertificate {
            k,
            l: 0.0,
            epsilon: 0.0,
            c,
            region: region.clone(),
            method: CertificateMethod::EigenExact,
            sample_count: 0,
            margin_to_one: 0.0,
            deviation: 0.0,
            k_argmax: None,
            excluded: 0,
        };
        cert.refresh_margin();
        return Ok(cert);
    }
    let samples = region_samples(&m, region, opts)?;
    let mut scored: Vec<(f64, Point)> = Vec::new();
    let mut excluded = 0usize;
    for x in &samples {
        match k_at(f, x) {
            Ok(k) if k.is_finite() => scored.push((k, x.clone())),
            _ => excluded += 1,
        }
    }
    if scored.is_empty() {
        return Err(Error::SearchFailure("no sample admitted a well-defined transport".into()));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.lex_cmp(&b.1)));
    let (mut k, mut arg) = scored[0].clone();
    let ball = BallSpec::new(region.center.clone(), region.radius * opts.shrink);
    let local = LocalSearch {
        initial_step: region.radius * 0.05,
        max_evals: 300,
        rounds: 3,
        x_tol: 1e-10,
        ball: Some(ball),
    };
    for (_, start) in scored.iter().take(opts.refine) {
        let r = minimize_on_manifold(&m, |p| k_at(f, p).map(|v| -v).unwrap_or(f64::INFINITY), start, &local)?;
        if -r.value > k {
            k = -r.value;
            arg = r.point;
        }
    }
    let points: Vec<Point> = scored.iter().map(|s| s.1.clone()).collect();
    let c = lipschitz_of(f.base_map(), &points);
    let mut cert = ConstantCertificate {
        k,
        l: 0.0,
        epsilon: 0.0,
        c,
        region: region.clone(),
        method: CertificateMethod::Sampled,
        sample_count: scored.len(),
        margin_to_one: 0.0,
        deviation: 0.0,
        k_argmax: Some(arg),
        excluded,
    };
    cert.refresh_margin();
    Ok(cert)
}

/// Frame matrix of x ↦ J(x, y) at x.
fn dj_dx(f: &MapDescriptor, x: &Point, y: &Point) -> Result<DMatrix<f64>> {
    let m = f.manifold;
    let jxy = f.perturbation(x, y)?;
    frame_jacobian(&m, |p| f.perturbation(p, y).unwrap_or_else(|_| p.clone()), x, &jxy, FD_STEP)
}

/// ‖∂J/∂y(x, y) − L_{y J(x,y)}‖ in frames.
fn dj_dy_deviation(f: &MapDescriptor, x: &Point, y: &Point) -> Result<f64> {
    let m = f.manifold;
    let jxy = f.perturbation(x, y)?;
    if m.singular_set_test(y, &jxy) != PointRelation::Regular {
        return Err(Error::PreconditionViolated {
            condition: "J(x,y) off the singular set of y".into(),
            detail: format!("y = {:?}", y.as_slice()),
        });
    }
    let d = frame_jacobian(&m, |q| f.perturbation(x, q).unwrap_or_else(|_| q.clone()), y, &jxy, FD_STEP)?;
    let t = m.transport_unchecked(y, &jxy)?.matrix;
    let lt = m.tangent_frame(&jxy).transpose() * t * m.tangent_frame(y);
    Ok(operator_norm(&(d - lt)))
}

/// Certifies K, L, ε and C for F(x) = J(x, G(x)) on a ball. Compositions
/// J(x, y) = H(y) have L = 0; group sums J(x, y) = y + H(x) have ε = 0.
pub fn certify_perturbation(f: &MapDescriptor, region: &BallSpec, opts: &CertifyOptions) -> Result<ConstantCertificate> {
    let m = f.manifold;
    let mut cert = certify_k(f, region, opts)?;
    let samples = region_samples(&m, region, opts)?;
    let g = f.base_map();
    if cert.method == CertificateMethod::EigenExact {
        cert.c = lipschitz_of(g, &samples).max(cert.c);
    }
    let images: Vec<Point> = samples.iter().map(|x| g.apply(x)).collect();
    let mut l: f64 = 0.0;
    let mut dev: f64 = 0.0;
    let forced_l = matches!(f.kind, MapKind::Composition { .. });
    let forced_eps = matches!(f.kind, MapKind::GroupSum { .. });
    let stride = (samples.len() / 32).max(1);
    for (i, x) in samples.iter().enumerate() {
        let y = &images[i];
        if !forced_l {
            // Pair x with its own image and with a spread of other images.
            for yy in std::iter::once(y).chain(images.iter().step_by(stride * 4)) {
                if let Ok(d) = dj_dx(f, x, yy) {
                    l = l.max(operator_norm(&d));
                }
            }
        }
        if !forced_eps {
            match dj_dy_deviation(f, x, y) {
                Ok(d) => dev = dev.max(d),
                Err(Error::PreconditionViolated { .. }) => cert.excluded += 1,
                Err(e) => {
                    return Err(Error::DifferentiabilityProbe(format!(
                        "∂J/∂y at x = {:?}: {e}",
                        x.as_slice()
                    )))
                }
            }
        }
    }
    cert.l = l;
    cert.deviation = dev;
    cert.epsilon = cert.c * dev;
    cert.refresh_margin();
    if cert.method == CertificateMethod::EigenExact && (l > 0.0 || dev > 0.0) {
        cert.method = CertificateMethod::Sampled;
    }
    cert.sample_count = cert.sample_count.max(samples.len());
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reflection() -> MapDescriptor {
        MapDescriptor::linear(
            Manifold::Cylinder,
            "reflect",
            DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.0, -1.0, -1.0])),
        )
        .unwrap()
    }

    #[test]
    fn identity_has_k_one() {
        let m = Manifold::euclidean(3);
        let c = certify_k(&MapDescriptor::identity(m), &BallSpec::new(Point::origin(3), 1.0), &Default::default()).unwrap();
        assert!((c.k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_k_is_zero_exactly() {
        let m = Manifold::euclidean(2);
        let f = MapDescriptor::linear(m, "rot23", DMatrix::from_row_slice(2, 2, &[0.0, 23.0, -23.0, 0.0])).unwrap();
        let c = certify_k(&f, &BallSpec::new(Point::origin(2), 1.0), &Default::default()).unwrap();
        assert_eq!(c.method, CertificateMethod::EigenExact);
        assert!(c.k.abs() < 1e-12);
        assert!((c.margin_to_one - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_k_matches_eigenvalue_on_linear_maps() {
        let m = Manifold::euclidean(2);
        let a = DMatrix::from_row_slice(2, 2, &[0.3, 2.0, -1.0, -0.4]);
        let plain = {
            let a = a.clone();
            MapDescriptor::new(m, "plain", move |p| Point::new(&a * p.coords()))
        };
        let sampled = certify_k(&plain, &BallSpec::new(Point::origin(2), 1.0), &CertifyOptions { samples: 16, ..Default::default() }).unwrap();
        assert!((sampled.k - symmetric_part_max(&a)).abs() < 1e-8);
    }

    #[test]
    fn cylinder_reflection_has_k_minus_one() {
        let region = BallSpec::new(Point::from_slice(&[1.0, 0.0, 0.0]), std::f64::consts::FRAC_PI_2);
        let c = certify_k(&reflection(), &region, &CertifyOptions { samples: 64, ..Default::default() }).unwrap();
        assert!((c.k + 1.0).abs() < 1e-6, "K = {}", c.k);
        assert!((c.c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_perturbation_has_zero_l_and_eps() {
        let m = Manifold::euclidean(2);
        let g = MapDescriptor::linear(m, "rot", DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0])).unwrap();
        let f = MapDescriptor::general("J=y", |_, y| y.clone(), &g);
        let c = certify_perturbation(&f, &BallSpec::new(Point::origin(2), 1.0), &CertifyOptions { samples: 32, ..Default::default() }).unwrap();
        assert!(c.l < 1e-9 && c.epsilon < 1e-8, "{c:?}");
    }

    #[test]
    fn group_sum_reports_lipschitz_of_h() {
        let m = Manifold::euclidean(2);
        let g = MapDescriptor::linear(m, "rot", DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0])).unwrap();
        let h = MapDescriptor::new(m, "h", |p| Point::from_slice(&[0.1 * p[1].sin(), 0.0]));
        let f = MapDescriptor::group_sum(&g, &h).unwrap();
        let c = certify_perturbation(&f, &BallSpec::new(Point::origin(2), 1.0), &CertifyOptions { samples: 64, ..Default::default() }).unwrap();
        assert_eq!(c.epsilon, 0.0);
        assert!(c.l <= 0.1 + 1e-8 && c.l > 0.09, "L = {}", c.l);
    }

    #[test]
    fn composition_near_identity() {
        let m = Manifold::euclidean(2);
        let g = MapDescriptor::linear(m, "rot", DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        let h = MapDescriptor::new(m, "h", |p| Point::from_slice(&[p[0] + 0.05 * p[0].sin(), p[1]]));
        let f = MapDescriptor::compose(&h, &g).unwrap();
        let c = certify_perturbation(&f, &BallSpec::new(Point::origin(2), 1.0), &CertifyOptions { samples: 128, ..Default::default() }).unwrap();
        assert_eq!(c.l, 0.0);
        assert!(c.deviation <= 0.05 + 1e-8 && c.deviation > 0.049);
        assert!((c.epsilon - c.c * c.deviation).abs() < 1e-15);
    }
}
