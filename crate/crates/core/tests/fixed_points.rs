use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use riemannian_prox::manifold::{cylinder_chart, cylinder_point};
use riemannian_prox::optim::BallSpec;
use riemannian_prox::solvers::{
    certify_k, certify_perturbation, contraction_fallback, fixed_point_solve, CertificateMethod, CertifyOptions,
    MapDescriptor, SolveVerdict,
};
use riemannian_prox::{Manifold, Point, Vector};
use serde_json::Value;

fn golden(name: &str) -> Value {
    let path = format!("{}/../../oracles/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

pub fn cylinder_h_of_g() -> MapDescriptor {
    let m = Manifold::Cylinder;
    let g = MapDescriptor::linear(m, "reflect", DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0, -1.0]))).unwrap();
    let h = MapDescriptor::new(m, "H", |p| {
        let (phi, w) = cylinder_chart(p.coords());
        Point::new(cylinder_point(phi + 0.05 * phi.cos(), w + 0.1 + 0.05 * phi.sin()))
    });
    MapDescriptor::compose(&h, &g).unwrap()
}

#[test]
fn rotation23_is_expansive_and_solved() {
    let m = Manifold::euclidean(2);
    let f = MapDescriptor::linear(m, "rot23", DMatrix::from_row_slice(2, 2, &[0.0, 23.0, -23.0, 0.0])).unwrap();
    let cert = certify_k(&f, &BallSpec::new(Point::from_slice(&[0.1, 0.1]), 5.0), &Default::default()).unwrap();
    assert_eq!(cert.method, CertificateMethod::EigenExact);
    assert_eq!(cert.k, 0.0);
    assert_eq!(cert.delta(), 1.0);
    let r = fixed_point_solve(&f, &cert, &Default::default()).unwrap();
    assert_eq!(r.verdict, SolveVerdict::Solved);
    assert!(r.witness.unwrap().coords().norm() < 1e-8);
    let x = Point::from_slice(&[0.1, 0.2]);
    let y = Point::from_slice(&[-0.3, 0.05]);
    let fx = f.apply(&x);
    let fy = f.apply(&y);
    assert!((fx.coords() - fy.coords()).norm() > (x.coords() - y.coords()).norm());
}

#[test]
fn block_rotation_matches_linear_solve() {
    let g = golden("linear_solves.json");
    let case = &g["cases"]["block_rotation"];
    let n = case["n"].as_u64().unwrap() as usize;
    let m = Manifold::TruncatedL2 { n };
    let mut t = DMatrix::zeros(n, n);
    for b in 0..n / 2 {
        t[(2 * b, 2 * b + 1)] = 5.0;
        t[(2 * b + 1, 2 * b)] = -5.0;
    }
    let c = Vector::from_vec(floats(&case["c"]));
    let big_t = MapDescriptor::linear(m, "5 block rotation", t).unwrap();
    let h = MapDescriptor::new(m, "c", move |_| Point::new(c.clone())).with_lipschitz(0.0);
    let f = MapDescriptor::group_sum(&big_t, &h).unwrap();
    let cert = certify_perturbation(&f, &BallSpec::new(Point::origin(n), 1.0), &CertifyOptions { samples: 32, ..Default::default() }).unwrap();
    let r = fixed_point_solve(&f, &cert, &Default::default()).unwrap();
    assert_eq!(r.verdict, SolveVerdict::Solved);
    let expect = Vector::from_vec(floats(&case["fixed_point"]));
    assert!((r.witness.unwrap().coords() - expect).amax() < 1e-8);
}

#[test]
fn cylinder_reflection_and_h_of_g() {
    let p0 = Point::from_slice(&[1.0, 0.0, 0.0]);
    let region = BallSpec::new(p0.clone(), FRAC_PI_2);
    let m = Manifold::Cylinder;
    let g = MapDescriptor::linear(m, "reflect", DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0, -1.0]))).unwrap();
    let kc = certify_k(&g, &region, &CertifyOptions { samples: 64, ..Default::default() }).unwrap();
    assert!((kc.k + 1.0).abs() <= 1e-6, "K = {}", kc.k);

    let f = cylinder_h_of_g();
    let cert = certify_perturbation(&f, &region, &CertifyOptions { samples: 64, ..Default::default() }).unwrap();
    assert!((cert.k + 1.0).abs() <= 1e-6);
    assert_eq!(cert.l, 0.0);
    assert!(cert.epsilon > 0.0 && cert.epsilon < 0.06, "eps = {}", cert.epsilon);
    assert!(cert.delta() > 1.9);

    let r = fixed_point_solve(&f, &cert, &Default::default()).unwrap();
    assert_eq!(r.verdict, SolveVerdict::Solved);
    assert!(r.residual <= 1e-8);
    let w = r.witness.unwrap();
    assert!(m.distance(&p0, &w).unwrap() < FRAC_PI_2);
    let oracle = floats(&golden("cylinder_fixed_point.json")["cases"]["h_of_g"]["point"]);
    assert!((w.coords() - Vector::from_vec(oracle)).amax() < 1e-6);
    assert!(r.worst_bound_slack.unwrap() <= 1e-6);
}

#[test]
fn contraction_fallback_matches_linear_solve() {
    let g = golden("linear_solves.json");
    let case = &g["cases"]["rotation_contraction"];
    let (s, th) = (case["factor"].as_f64().unwrap(), case["angle"].as_f64().unwrap());
    let a = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]) * s;
    let c = Vector::from_vec(floats(&case["c"]));
    let m = Manifold::euclidean(2);
    let f = MapDescriptor::new(m, "0.9 rotation + c", move |p| Point::new(&a * p.coords() + &c)).with_lipschitz(s);
    let r = contraction_fallback(&f, &Point::origin(2), &Default::default()).unwrap();
    let expect = Vector::from_vec(floats(&case["fixed_point"]));
    assert!((r.witness.unwrap().coords() - expect).amax() < 1e-8);
}

#[test]
fn cylinder_chart_contraction() {
    let m = Manifold::Cylinder;
    let f = MapDescriptor::new(m, "half chart", |p| {
        let (t, z) = cylinder_chart(p.coords());
        Point::new(cylinder_point(t / 2.0, z / 2.0))
    })
    .with_lipschitz(0.5);
    let r = contraction_fallback(&f, &Point::new(cylinder_point(1.0, 2.0)), &Default::default()).unwrap();
    assert!((r.witness.unwrap().coords() - Vector::from_column_slice(&[1.0, 0.0, 0.0])).amax() < 1e-9);
}
