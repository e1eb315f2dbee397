use proptest::prelude::*;

use riemannian_prox::calculus::ScalarField;
use riemannian_prox::envelope::{
    borwein_preiss, borwein_preiss_holds, envelope_gradient_field, moreau_envelope, nearest_point, write_envelope_csv,
    BorweinPreissOptions, DistanceVerdict, EnvelopeOptions, MinimizerStatus, SetDescriptor,
};
use riemannian_prox::optim::BallSpec;
use riemannian_prox::{Error, Manifold, Point};

fn quick() -> EnvelopeOptions {
    EnvelopeOptions {
        restarts: 4,
        margin_directions: 8,
        ..Default::default()
    }
}

#[test]
fn scaled_square_has_closed_form_envelope() {
    // f = c/2 y², minimizer 2αx/(c+2α), value cαx²/(c+2α)
    let c = 3.0;
    let f = ScalarField::new(Manifold::euclidean(1), "c/2 y^2", move |p| 0.5 * c * p[0] * p[0]);
    for (alpha, x) in [(0.5, 1.2), (2.0, -0.7), (10.0, 0.3)] {
        let r = moreau_envelope(&f, alpha, &Point::from_slice(&[x]), &quick()).unwrap();
        assert!((r.minimizer[0] - 2.0 * alpha * x / (c + 2.0 * alpha)).abs() < 1e-7);
        assert!((r.value - c * alpha * x * x / (c + 2.0 * alpha)).abs() < 1e-10);
        assert_eq!(r.status, MinimizerStatus::Strong);
        assert!(r.certificate.unwrap().is_verified());
    }
}

#[test]
fn concave_kink_gives_ambiguous_minimizer() {
    let f = ScalarField::new(Manifold::euclidean(1), "-|y|", |p| -p[0].abs()).with_lower_bound(-10.0);
    let r = moreau_envelope(&f, 1.0, &Point::from_slice(&[0.0]), &quick()).unwrap();
    assert_eq!(r.status, MinimizerStatus::Ambiguous);
    assert!(r.gradient.is_none());
    assert!((r.value + 0.25).abs() < 1e-9);
    assert!((r.minimizer[0].abs() - 0.5).abs() < 1e-6);
}

#[test]
fn sphere_distance_envelope_pulls_toward_the_pole() {
    let m = Manifold::Sphere2;
    let pole = Point::from_slice(&[0.0, 0.0, 1.0]);
    let f = ScalarField::distance_to_point(m, pole.clone());
    let x0 = Point::from_slice(&[1.0, 0.0, 0.0]);
    let alpha = 2.0;
    let r = moreau_envelope(&f, alpha, &x0, &quick()).unwrap();
    // minimizer sits on the meridian at distance 1/(2α) from x0
    let d = m.distance(&x0, &r.minimizer).unwrap();
    assert!((d - 0.25).abs() < 1e-6);
    assert!(r.minimizer[1].abs() < 1e-7 && r.minimizer[2] > 0.0);
    let g = r.gradient.unwrap();
    assert!((g.components.norm() - 1.0).abs() < 1e-6);
}

#[test]
fn gradient_field_csv_has_one_row_per_lattice_point() {
    let f = ScalarField::norm(Manifold::euclidean(2));
    let region = BallSpec::new(Point::origin(2), 1.0);
    let results = envelope_gradient_field(&f, 1.0, &region, 5, &quick()).unwrap();
    assert_eq!(results.len(), 13);
    assert!(results.iter().all(|r| r.fd_error.unwrap() < 1e-4));
    let mut buf = Vec::new();
    write_envelope_csv(&results, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,y,f_alpha,grad_x,grad_y,fd_error");
    assert_eq!(lines.count(), 13);
}

#[test]
fn unbounded_region_is_rejected() {
    let f = ScalarField::norm(Manifold::euclidean(2));
    let region = BallSpec::new(Point::origin(2), f64::INFINITY);
    let err = envelope_gradient_field(&f, 1.0, &region, 3, &quick()).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
}

#[test]
fn circle_distance_is_differentiable_off_the_center() {
    let set = SetDescriptor::circle([0.0, 0.0], 1.0);
    let r = nearest_point(&Point::from_slice(&[2.0, 0.0]), &set).unwrap();
    assert_eq!(r.verdict, DistanceVerdict::Differentiable);
    assert!((r.distance_value - 1.0).abs() < 1e-6);
    let g = r.gradient.unwrap();
    assert!((g.components[0] - 1.0).abs() < 1e-4 && g.components[1].abs() < 1e-4);

    let r = nearest_point(&Point::from_slice(&[0.0, 0.0]), &set).unwrap();
    assert_eq!(r.verdict, DistanceVerdict::Nondifferentiable);
    assert!(r.gradient.is_none());

    let r = nearest_point(&Point::from_slice(&[0.0, 1.0]), &set).unwrap();
    assert_eq!(r.verdict, DistanceVerdict::Member);
}

#[test]
fn borwein_preiss_pair_on_the_cylinder() {
    let m = Manifold::Cylinder;
    let f = ScalarField::new(m, "z^2 + 1 - cos", |p| p[2] * p[2] + 1.0 - p[0]).with_lower_bound(0.0);
    let x0 = Point::new(riemannian_prox::manifold::cylinder_point(0.1, 0.05));
    let (eps, lambda) = (0.05, 0.5);
    assert!(f.value(&x0) < eps);
    let r = borwein_preiss(&f, eps, lambda, &x0, &BorweinPreissOptions::default()).unwrap();
    assert!(borwein_preiss_holds(&m, &r, &x0, lambda, 1e-9).unwrap());
    assert!(r.margin > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn envelope_is_below_f_and_increases_with_alpha(x in -2.0f64..2.0, y in -2.0f64..2.0, a in 0.2f64..5.0) {
        let f = ScalarField::norm(Manifold::euclidean(2));
        let p = Point::from_slice(&[x, y]);
        let lo = moreau_envelope(&f, a, &p, &quick()).unwrap().value;
        let hi = moreau_envelope(&f, 2.0 * a, &p, &quick()).unwrap().value;
        prop_assert!(lo <= hi + 1e-10);
        prop_assert!(hi <= f.value(&p) + 1e-10);
    }
}
