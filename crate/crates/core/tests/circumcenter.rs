use riemannian_prox::manifold::cylinder_point;
use riemannian_prox::solvers::{alignment_function, find_circumcenter, CircumcenterClass, CircumcenterOptions};
use riemannian_prox::{Manifold, Point};
use serde_json::Value;

fn golden() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../oracles/golden/circumcenter_cylinder.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn chart_points(v: &Value) -> Vec<Point> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|p| Point::new(cylinder_point(p[0].as_f64().unwrap(), p[1].as_f64().unwrap())))
        .collect()
}

#[test]
fn cylinder_triple_has_no_circumcenter() {
    let g = golden();
    let case = &g["cases"]["eps_0.05"];
    let pts: Vec<Point> = case["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| Point::from_slice(&p.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect::<Vec<_>>()))
        .collect();
    let m = Manifold::Cylinder;
    let r = find_circumcenter(&m, &pts[0], &pts[1], &pts[2], &pts[0], &CircumcenterOptions::default()).unwrap();
    assert_eq!(r.classification, Some(CircumcenterClass::NoCircumcenter));
    let lb = r.lower_bound.unwrap();
    let oracle = case["min_f"].as_f64().unwrap();
    assert!(lb > 0.0 && lb <= oracle * (1.0 + 1e-9), "lb {lb} oracle {oracle}");
    assert!((lb - oracle).abs() <= 0.1 * oracle, "lb {lb} oracle {oracle}");
    assert!((r.residual - oracle).abs() <= 0.1 * oracle);
}

#[test]
fn cut_locus_circumcenter_then_loss() {
    let g = golden();
    let m = Manifold::Cylinder;
    let a0 = Point::new(cylinder_point(std::f64::consts::FRAC_PI_2, 0.0));

    let with_a3 = chart_points(&g["cases"]["cut_locus_a3"]["points_chart"]);
    let r = find_circumcenter(&m, &with_a3[0], &with_a3[1], &with_a3[2], &a0, &Default::default()).unwrap();
    assert_eq!(r.classification, Some(CircumcenterClass::Circumcenter));
    let d = &r.distances;
    assert!((d[0] - d[1]).abs() < 1e-6 && (d[0] - d[2]).abs() < 1e-6);
    let arr: [Point; 3] = [with_a3[0].clone(), with_a3[1].clone(), with_a3[2].clone()];
    assert!(alignment_function(&m, &arr, &a0) < 1e-20);

    let case = &g["cases"]["cut_locus_x3"];
    let with_x3 = chart_points(&case["points_chart"]);
    let r = find_circumcenter(&m, &with_x3[0], &with_x3[1], &with_x3[2], &a0, &Default::default()).unwrap();
    assert_eq!(r.classification, Some(CircumcenterClass::NoCircumcenter));
    let oracle = case["min_f"].as_f64().unwrap();
    let lb = r.lower_bound.unwrap();
    assert!((lb - oracle).abs() <= 0.1 * oracle, "lb {lb} oracle {oracle}");
}

#[test]
fn circumcenter_is_seed_stable() {
    let m = Manifold::euclidean(2);
    let a = [
        Point::from_slice(&[0.0, 0.0]),
        Point::from_slice(&[2.0, 0.0]),
        Point::from_slice(&[0.0, 4.0]),
    ];
    for seed in [1, 2, 3] {
        let opts = CircumcenterOptions { seed, ..Default::default() };
        let r = find_circumcenter(&m, &a[0], &a[1], &a[2], &Point::from_slice(&[5.0, -3.0]), &opts).unwrap();
        let w = r.witness.unwrap();
        assert!((w[0] - 1.0).abs() < 1e-8 && (w[1] - 2.0).abs() < 1e-8);
    }
}
