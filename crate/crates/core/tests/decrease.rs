use riemannian_prox::calculus::ScalarField;
use riemannian_prox::optim::BallSpec;
use riemannian_prox::solvers::{solvability_bound, verify_decrease, DecreaseOptions, PiecewiseQuadratic, SolveVerdict};
use riemannian_prox::{Error, Manifold, Point, Vector};

pub fn piecewise_suite(count: u64) -> Vec<(f64, f64)> {
    let opts = DecreaseOptions {
        probe_points: 8,
        probe_directions: 32,
        ..Default::default()
    };
    (0..count)
        .map(|seed| {
            let dim = 2 + (seed % 2) as usize;
            let m = Manifold::euclidean(dim);
            let pq = PiecewiseQuadratic::random(dim, seed);
            let x0 = Point::new(Vector::from_fn(dim, |i, _| 0.1 * ((seed + i as u64) % 5) as f64 - 0.2));
            let rho = 0.25 + 0.05 * (seed % 7) as f64;
            let r = verify_decrease(&pq.field(m), &x0, rho, pq.delta, &opts).unwrap();
            assert_eq!(r.verdict, SolveVerdict::BoundHolds, "seed {seed}");
            (r.residual, r.bound_used)
        })
        .collect()
}

#[test]
fn hundred_piecewise_quadratics_decrease() {
    for (residual, _) in piecewise_suite(100) {
        assert!(residual <= 1e-7);
    }
}

#[test]
fn triangle_inequality_is_tight() {
    for n in [1, 2, 4] {
        let m = Manifold::euclidean(n);
        let p = Point::new(Vector::from_element(n, 1.0));
        let f = ScalarField::distance_to_point(m, p);
        let x0 = Point::origin(n);
        let d = (n as f64).sqrt();
        let rho = 0.5;
        let r = verify_decrease(&f, &x0, rho, 1.0, &Default::default()).unwrap();
        assert_eq!(r.verdict, SolveVerdict::BoundHolds);
        // inf over the ball is D − ρ: the bound holds with equality.
        assert!((r.residual + r.bound_used - (d - rho)).abs() < 1e-7);
    }
}

#[test]
fn critical_point_is_refuted() {
    let m = Manifold::Cylinder;
    let p = Point::from_slice(&[1.0, 0.0, 0.0]);
    let f = {
        let p = p.clone();
        ScalarField::new(m, "d2", move |q| m.distance(&p, q).unwrap().powi(2))
    };
    let r = verify_decrease(&f, &Point::from_slice(&[1.0, 0.0, 0.2]), 0.5, 1.0, &Default::default());
    assert!(matches!(r, Err(Error::HypothesisRefuted(_))));
}

#[test]
fn solvability_bound_is_respected() {
    let m = Manifold::euclidean(2);
    let (a1, a2) = (Point::from_slice(&[-1.0, 0.3]), Point::from_slice(&[1.0, 0.3]));
    let f = ScalarField::new(m, "bisector", move |p| {
        ((p.coords() - a1.coords()).norm() - (p.coords() - a2.coords()).norm()).abs()
    });
    let v = BallSpec::new(Point::from_slice(&[0.0, 0.3]), 0.6);
    for k in 0..10 {
        let t = k as f64 / 10.0;
        let x = Point::from_slice(&[0.4 * (t * 6.0).cos(), 0.3 + 0.4 * (t * 6.0).sin()]);
        let r = solvability_bound(&f, &x, &v, &v, 1.2, &Default::default()).unwrap();
        assert_eq!(r.verdict, SolveVerdict::BoundHolds);
        let w = r.witness.unwrap();
        // nearest zero is the foot on the perpendicular bisector x = 0
        assert!(w[0].abs() < 1e-8 && (w[1] - x[1]).abs() < 1e-6);
        assert!(m.distance(&x, &w).unwrap() <= r.bound_used + 1e-7);
    }
}

#[test]
fn zero_within_twice_epsilon() {
    let m = Manifold::euclidean(1);
    let eps = 0.1;
    let delta = 1.0;
    let alpha = 0.37;
    let f = ScalarField::new(m, "d(x,alpha)", move |p| (p[0] - alpha).abs());
    let x0 = Point::from_slice(&[0.3]);
    // x = 0.35 lies in B(x0, eps) with F(x) = 0.02 < eps·delta
    let x = Point::from_slice(&[0.35]);
    let ball = BallSpec::new(x0.clone(), 2.0 * eps);
    let r = solvability_bound(&f, &x, &ball, &ball, delta, &Default::default()).unwrap();
    let w = r.witness.unwrap();
    assert!(m.distance(&x0, &w).unwrap() < 2.0 * eps);
    assert!((w[0] - alpha).abs() < 1e-9);
}
