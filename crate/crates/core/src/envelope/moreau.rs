use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::calculus::{check_proximal_subgradient, default_eta, FieldKind, ProximalCertificate, ScalarField};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, TangentVector, Vector};
use crate::optim::{ball_starts, multistart, BallSpec, LocalSearch};
use crate::sampling::{directions, SamplerConfig};

#[derive(Debug, Clone)]
pub struct EnvelopeOptions {
    pub restarts: usize,
    pub seed: u64,
    pub local: LocalSearch,
    /// Scale of the strong-minimum probe radii {1e-1, 1e-2, 1e-3} · η.
    pub eta: Option<f64>,
    /// Directions per probe sphere.
    pub margin_directions: usize,
    /// Cross-check the gradient against central differences of the value.
    pub fd_check: bool,
    pub fd_step: f64,
    /// Verify L_{x₀y₀}(∇f_α(x₀)) ∈ ∂_P f(y₀).
    pub certify: bool,
    pub sampler: SamplerConfig,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            restarts: 16,
            seed: 0x5eed,
            local: LocalSearch {
                max_evals: 3000,
                x_tol: 1e-13,
                ..Default::default()
            },
            eta: None,
            margin_directions: 32,
            fd_check: false,
            fd_step: 1e-6,
            certify: true,
            sampler: SamplerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizerStatus {
    /// Unique minimizer with positive strong-minimum margins.
    Strong,
    /// Restarts disagree: several distinct near-optimal points.
    Ambiguous,
    /// Unique within the restarts but some sampled margin is not positive.
    Weak,
}

/// One local search in the inner minimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub start: Point,
    pub end: Point,
    pub value: f64,
    pub evals: usize,
}

/// f_α(x₀) = inf_y { f(y) + α d(x₀, y)² } with minimizer y₀ and gradient
/// −2α log_{x₀}(y₀).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeResult {
    pub x0: Point,
    pub alpha: f64,
    pub value: f64,
    pub minimizer: Point,
    pub gradient: Option<TangentVector>,
    pub status: MinimizerStatus,
    /// Smallest of `margins` (clamped at zero). This is a finite sampled
    /// surrogate for the strong-minimum property.
    pub strong_minimum_margin: f64,
    /// min over the sphere of radius r around y₀ of the objective minus its
    /// value at y₀, for each probe radius.
    pub margins: Vec<(f64, f64)>,
    /// Other minimizers within tolerance when `status` is ambiguous.
    pub competitors: Vec<Point>,
    pub fd_gradient: Option<Vec<f64>>,
    pub fd_error: Option<f64>,
    pub certificate: Option<ProximalCertificate>,
    pub lower_bound: Option<f64>,
    pub trace: Vec<TraceRecord>,
}

const TIE_VALUE_TOL: f64 = 1e-9;
const TIE_POINT_TOL: f64 = 1e-4;

fn objective(m: &Manifold, f: &ScalarField, alpha: f64, x0: &Point, y: &Point) -> f64 {
    match m.distance_unchecked(x0, y) {
        Ok(d) => f.value(y) + alpha * d * d,
        Err(_) => f64::INFINITY,
    }
}

struct Inner {
    value: f64,
    minimizer: Point,
    competitors: Vec<Point>,
    trace: Vec<TraceRecord>,
}

fn inner_minimum(f: &ScalarField, alpha: f64, x0: &Point, opts: &EnvelopeOptions) -> Result<Inner> {
    let m = f.manifold;
    if let FieldKind::Indicator(set) = &f.kind {
        let proj = set.projections(x0)?;
        let best = proj
            .first()
            .ok_or_else(|| Error::SearchFailure(format!("set `{}` is empty", set.label)))?;
        let tol = 10.0 * set.resolution.max(1e-12);
        let competitors: Vec<Point> = proj
            .iter()
            .skip(1)
            .filter(|p| p.distance - best.distance <= tol)
            .map(|p| p.point.clone())
            .collect();
        return Ok(Inner {
            value: alpha * best.distance * best.distance,
            minimizer: best.point.clone(),
            competitors,
            trace: vec![],
        });
    }
    let fx = f.value(x0);
    let c = f.lower_bound;
    let radius = match (fx.is_finite(), c) {
        (true, Some(c)) => ((fx - c).max(0.0) / alpha).sqrt() + 1.0,
        _ => 1.0,
    };
    let radius = radius.min(0.95 * m.injectivity_radius());
    let starts = ball_starts(&m, x0, radius, opts.restarts.max(1), opts.seed);
    let local = LocalSearch {
        initial_step: (radius * 0.25).min(0.5),
        ..opts.local.clone()
    };
    let obj = |y: &Point| objective(&m, f, alpha, x0, y);
    let results = multistart(&m, obj, &starts, &local)?;
    let trace: Vec<TraceRecord> = starts
        .iter()
        .zip(results.iter())
        .map(|(s, r)| TraceRecord {
            start: s.clone(),
            end: r.point.clone(),
            value: r.value,
            evals: r.evals,
        })
        .collect();
    let best = &results[0];
    if let Some(c) = c {
        if best.value < c - 1e-6 * (1.0 + c.abs()) {
            return Err(Error::UnboundedBelow(best.value));
        }
    } else if best.value < -1e12 {
        return Err(Error::UnboundedBelow(best.value));
    }
    let mut competitors: Vec<Point> = Vec::new();
    for r in results.iter().skip(1) {
        if r.value - best.value > TIE_VALUE_TOL * (1.0 + best.value.abs()) {
            break;
        }
        let far = m
            .distance_unchecked(&best.point, &r.point)
            .map(|d| d > TIE_POINT_TOL)
            .unwrap_or(true);
        if far && !competitors.iter().any(|c| m.distance_unchecked(c, &r.point).map(|d| d <= TIE_POINT_TOL).unwrap_or(false)) {
            competitors.push(r.point.clone());
        }
    }
    Ok(Inner {
        value: best.value,
        minimizer: best.point.clone(),
        competitors,
        trace,
    })
}

/// Objective increase on spheres of radius r around y, minimized over a
/// direction sample.
pub(crate) fn sphere_margins<F>(m: &Manifold, obj: F, y: &Point, radii: &[f64], count: usize, seed: u64) -> Vec<(f64, f64)>
where
    F: Fn(&Point) -> f64,
{
    let base = obj(y);
    let frame = m.tangent_frame(y);
    radii
        .iter()
        .map(|&r| {
            let worst = directions(m.dim(), count, seed)
                .into_iter()
                .filter_map(|u| m.exp_unchecked(y, &(&frame * u * r)).ok())
                .map(|q| obj(&q) - base)
                .fold(f64::INFINITY, f64::min);
            (r, worst)
        })
        .collect()
}

/// Value of f_α at x₀ only (no gradient or certificate work).
pub fn envelope_value(f: &ScalarField, alpha: f64, x0: &Point, opts: &EnvelopeOptions) -> Result<f64> {
    Ok(inner_minimum(f, alpha, x0, opts)?.value)
}

/// Moreau–Yosida envelope f_α(x₀) with minimizer, gradient and the sampled
/// checks of the minimizer formula and subgradient transfer.
pub fn moreau_envelope(f: &ScalarField, alpha: f64, x0: &Point, opts: &EnvelopeOptions) -> Result<EnvelopeResult> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must be positive")));
    }
    let m = f.manifold;
    m.validate_point(x0)?;
    let inner = inner_minimum(f, alpha, x0, opts)?;
    let y0 = inner.minimizer.clone();
    let eta = opts.eta.unwrap_or_else(|| default_eta(&m));
    let radii = [1e-1 * eta, 1e-2 * eta, 1e-3 * eta];
    let margins = if f.is_indicator() {
        // Only members of S are admissible; the margin is the distance gap
        // to the nearest competitor, or positive by strict convexity of d².
        radii.iter().map(|&r| (r, alpha * r * r)).collect()
    } else {
        sphere_margins(
            &m,
            |y| objective(&m, f, alpha, x0, y),
            &y0,
            &radii,
            opts.margin_directions,
            opts.seed,
        )
    };
    let min_margin = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let status = if !inner.competitors.is_empty() {
        MinimizerStatus::Ambiguous
    } else if min_margin > 0.0 {
        MinimizerStatus::Strong
    } else {
        MinimizerStatus::Weak
    };

    let mut gradient = None;
    let mut certificate = None;
    if status == MinimizerStatus::Strong {
        if let Ok(w) = m.log_unchecked(x0, &y0) {
            let g = TangentVector::new(x0.clone(), w.components * (-2.0 * alpha));
            if opts.certify && !f.is_indicator() {
                let transported = m.transport_unchecked(x0, &y0)?.apply(&g.components);
                let zeta = TangentVector::new(y0.clone(), m.project_tangent(&y0, &transported));
                // On flat manifolds d(x₀,·)² is exactly quadratic, so σ = α.
                let sigma = m.is_flat().then_some(alpha);
                certificate = Some(check_proximal_subgradient(f, &y0, &zeta, sigma, None, &opts.sampler)?);
            }
            gradient = Some(g);
        }
    }

    let (fd_gradient, fd_error) = match (&gradient, opts.fd_check) {
        (Some(g), true) => {
            let frame = m.tangent_frame(x0);
            let h = opts.fd_step;
            let mut fd = Vector::zeros(m.dim());
            for i in 0..m.dim() {
                let e = frame.column(i).into_owned();
                let plus = m.exp_unchecked(x0, &(&e * h))?;
                let minus = m.exp_unchecked(x0, &(&e * -h))?;
                let vp = inner_minimum(f, alpha, &plus, opts)?.value;
                let vm = inner_minimum(f, alpha, &minus, opts)?.value;
                fd[i] = (vp - vm) / (2.0 * h);
            }
            let err = (m.to_frame(x0, &g.components) - &fd).amax();
            (Some((&frame * fd).as_slice().to_vec()), Some(err))
        }
        _ => (None, None),
    };

    Ok(EnvelopeResult {
        x0: x0.clone(),
        alpha,
        value: inner.value,
        minimizer: y0,
        gradient,
        status,
        strong_minimum_margin: min_margin.max(0.0),
        margins,
        competitors: inner.competitors,
        fd_gradient,
        fd_error,
        certificate,
        lower_bound: f.lower_bound,
        trace: inner.trace,
    })
}

/// Envelope results on a grid over `region`: a uniform lattice in the frame
/// coordinates at the center, clipped to the ball. `grid` is the number of
/// lattice points per axis. Every result carries a finite-difference check.
pub fn envelope_gradient_field(
    f: &ScalarField,
    alpha: f64,
    region: &BallSpec,
    grid: usize,
    opts: &EnvelopeOptions,
) -> Result<Vec<EnvelopeResult>> {
    let m = f.manifold;
    if !region.radius.is_finite() {
        return Err(Error::InvalidInput("region radius must be finite".into()));
    }
    let dim = m.dim();
    let grid = grid.max(2);
    let axis: Vec<f64> = (0..grid)
        .map(|k| -region.radius + 2.0 * region.radius * k as f64 / (grid - 1) as f64)
        .collect();
    let total = grid.checked_pow(dim as u32).ok_or_else(|| Error::InvalidInput("grid too large".into()))?;
    let frame = m.tangent_frame(&region.center);
    let opts = EnvelopeOptions {
        fd_check: true,
        ..opts.clone()
    };
    let mut out = Vec::new();
    for idx in 0..total {
        let mut u = Vector::zeros(dim);
        let mut rest = idx;
        for i in 0..dim {
            u[i] = axis[rest % grid];
            rest /= grid;
        }
        if u.norm() > region.radius * (1.0 + 1e-12) {
            continue;
        }
        let x = m.exp_unchecked(&region.center, &(&frame * u))?;
        out.push(moreau_envelope(f, alpha, &x, &opts)?);
    }
    Ok(out)
}

/// Writes envelope results as CSV: point coordinates, f_alpha, gradient
/// components, and the finite-difference error.
pub fn write_envelope_csv<W: Write>(results: &[EnvelopeResult], mut out: W) -> Result<()> {
    let Some(first) = results.first() else {
        return Ok(());
    };
    let n = first.x0.ambient_dim();
    let names: Vec<String> = if n <= 3 {
        ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=n).map(|i| format!("x{i}")).collect()
    };
    let mut header = names.clone();
    header.push("f_alpha".into());
    header.extend(names.iter().map(|c| format!("grad_{c}")));
    header.push("fd_error".into());
    writeln!(out, "{}", header.join(","))?;
    for r in results {
        let mut row: Vec<String> = r.x0.as_slice().iter().map(|c| format!("{c:.12e}")).collect();
        row.push(format!("{:.12e}", r.value));
        match &r.gradient {
            Some(g) => row.extend(g.components.iter().map(|c| format!("{c:.12e}"))),
            None => row.extend(std::iter::repeat_n(String::new(), n)),
        }
        row.push(r.fd_error.map(|e| format!("{e:.3e}")).unwrap_or_default());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::SetDescriptor;

    fn abs_envelope(alpha: f64, x: f64) -> f64 {
        if x.abs() <= 1.0 / (2.0 * alpha) {
            alpha * x * x
        } else {
            x.abs() - 1.0 / (4.0 * alpha)
        }
    }

    #[test]
    fn constant_field() {
        let m = Manifold::euclidean(2);
        let f = ScalarField::constant(m, 3.0);
        let x = Point::from_slice(&[0.4, -1.0]);
        let r = moreau_envelope(&f, 2.0, &x, &EnvelopeOptions::default()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-12);
        assert!(r.gradient.unwrap().norm() < 1e-6);
        assert_eq!(r.status, MinimizerStatus::Strong);
    }

    #[test]
    fn abs_matches_closed_form() {
        let f = ScalarField::abs(Manifold::euclidean(1));
        for &(alpha, x) in &[(1.0, 0.2), (1.0, 2.0), (0.5, -0.7), (5.0, 0.05)] {
            let r = moreau_envelope(&f, alpha, &Point::from_slice(&[x]), &EnvelopeOptions {
                fd_check: true,
                ..Default::default()
            })
            .unwrap();
            assert!((r.value - abs_envelope(alpha, x)).abs() < 1e-9, "{alpha} {x}: {}", r.value);
            assert!(r.fd_error.unwrap() < 1e-5);
            assert!(r.certificate.unwrap().is_verified());
        }
    }

    #[test]
    fn indicator_envelope_is_squared_distance() {
        let f = ScalarField::indicator(SetDescriptor::circle([0.0, 0.0], 1.0));
        let x = Point::from_slice(&[0.0, 3.0]);
        let r = moreau_envelope(&f, 1.0, &x, &EnvelopeOptions::default()).unwrap();
        assert!((r.value - 4.0).abs() < 1e-12);
        assert!((r.minimizer[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ambiguous_minimizer_is_reported() {
        // f(y) = −|y|: from x₀ = 0 the two minimizers ±1/(2α) tie.
        let f = ScalarField::new(Manifold::euclidean(1), "-abs", |p| -p[0].abs()).with_lower_bound(-10.0);
        let r = moreau_envelope(&f, 1.0, &Point::from_slice(&[0.0]), &EnvelopeOptions::default()).unwrap();
        assert_eq!(r.status, MinimizerStatus::Ambiguous);
        assert!(r.gradient.is_none());
        assert!((r.value + 0.25).abs() < 1e-9);
    }

    #[test]
    fn unbounded_below_is_detected() {
        let f = ScalarField::new(Manifold::euclidean(1), "neg-cubic", |p| -p[0].powi(3)).with_lower_bound(0.0);
        let r = moreau_envelope(&f, 1.0, &Point::from_slice(&[3.0]), &EnvelopeOptions::default());
        assert!(matches!(r, Err(Error::UnboundedBelow(_))));
    }

    #[test]
    fn cylinder_minimizer_formula() {
        let m = Manifold::Cylinder;
        let a = Point::from_slice(&[0.0, 1.0, 0.3]);
        let f = ScalarField::distance_to_point(m, a);
        let x0 = Point::from_slice(&[1.0, 0.0, 0.0]);
        let alpha = 2.0;
        let r = moreau_envelope(&f, alpha, &x0, &EnvelopeOptions::default()).unwrap();
        let g = r.gradient.clone().unwrap();
        let y = m.exp(&x0, &(g.components * (-0.5 / alpha))).unwrap();
        assert!((y.coords() - r.minimizer.coords()).norm() < 1e-6);
        assert!(r.certificate.unwrap().is_verified());
    }

    #[test]
    fn gradient_field_csv() {
        let f = ScalarField::abs(Manifold::euclidean(1));
        let region = BallSpec::new(Point::from_slice(&[0.0]), 1.0);
        let rs = envelope_gradient_field(&f, 1.0, &region, 5, &EnvelopeOptions::default()).unwrap();
        assert_eq!(rs.len(), 5);
        let mut buf = Vec::new();
        write_envelope_csv(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,f_alpha,grad_x,fd_error\n"));
    }
}
