use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::Value;

use super::config::RunConfig;
use super::record::{ExpectationRecord, Provenance, Relation, RunRecord};
use crate::calculus::{check_proximal_subgradient, probe_subdifferential, DirectionGrid, ScalarField};
use crate::envelope::{borwein_preiss, borwein_preiss_holds, moreau_envelope, EnvelopeOptions, SetDescriptor};
use crate::error::{Error, Result};
use crate::manifold::{cylinder_chart, cylinder_point, paraboloid_point, Manifold, Point, PointRelation, TangentVector, Vector};
use crate::optim::BallSpec;
use crate::sampling::SamplerConfig;
use crate::solvers::{
    certify_k, certify_perturbation, contraction_fallback, find_circumcenter, fixed_point_solve, solvability_bound,
    verify_decrease, CertifyOptions, CircumcenterClass, CircumcenterOptions, DecreaseOptions, FixedPointOptions,
    MapDescriptor, PiecewiseQuadratic, SolveVerdict,
};

use Provenance::{Derived, Published, Trivial};

const CIRCUMCENTER_ORACLE: &str = "oracles/circumcenter_cylinder.py";
const FIXED_POINT_ORACLE: &str = "oracles/cylinder_fixed_point.py";
const LINEAR_ORACLE: &str = "oracles/linear_solves.py";
const MOREAU_ORACLE: &str = "oracles/moreau_abs.py";

fn golden(name: &str) -> &'static Value {
    static CELLS: [OnceLock<Value>; 4] = [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let (i, text) = match name {
        "circumcenter_cylinder" => (0, include_str!("../../../../oracles/golden/circumcenter_cylinder.json")),
        "cylinder_fixed_point" => (1, include_str!("../../../../oracles/golden/cylinder_fixed_point.json")),
        "linear_solves" => (2, include_str!("../../../../oracles/golden/linear_solves.json")),
        "moreau_abs" => (3, include_str!("../../../../oracles/golden/moreau_abs.json")),
        _ => unreachable!("unknown golden {name}"),
    };
    CELLS[i].get_or_init(|| serde_json::from_str(text).expect("golden files are valid JSON"))
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

/// Collects expectations and outputs while a scenario runs.
pub struct Run<'a> {
    pub config: &'a RunConfig,
    scenario: &'static str,
    expectations: Vec<ExpectationRecord>,
    outputs: serde_json::Map<String, Value>,
}

impl Run<'_> {
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, name: &str, relation: Relation, expected: Value, actual: Value, tolerance: f64, pass: bool, prov: Provenance) {
        self.expectations.push(ExpectationRecord {
            scenario: self.scenario.to_string(),
            expectation: name.to_string(),
            relation,
            expected,
            actual,
            tolerance,
            pass,
            provenance: prov.label(),
        });
    }

    fn tol(&self, t: f64) -> f64 {
        self.config.tolerance.unwrap_or(t)
    }

    fn num(x: f64) -> Value {
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::String(format!("{x}")))
    }

    pub fn close(&mut self, name: &str, expected: f64, actual: f64, tol: f64, prov: Provenance) {
        let tol = self.tol(tol);
        let pass = (actual - expected).abs() <= tol;
        self.push(name, Relation::Close, Self::num(expected), Self::num(actual), tol, pass, prov);
    }

    pub fn at_most(&mut self, name: &str, bound: f64, actual: f64, tol: f64, prov: Provenance) {
        let tol = self.tol(tol);
        let pass = actual <= bound + tol;
        self.push(name, Relation::AtMost, Self::num(bound), Self::num(actual), tol, pass, prov);
    }

    pub fn at_least(&mut self, name: &str, bound: f64, actual: f64, tol: f64, prov: Provenance) {
        let tol = self.tol(tol);
        let pass = actual >= bound - tol;
        self.push(name, Relation::AtLeast, Self::num(bound), Self::num(actual), tol, pass, prov);
    }

    pub fn equal(&mut self, name: &str, expected: &str, actual: &str, prov: Provenance) {
        let pass = expected == actual;
        self.push(name, Relation::Equal, expected.into(), actual.into(), 0.0, pass, prov);
    }

    pub fn output<T: Serialize>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.outputs.insert(key.to_string(), v);
    }

    fn seed(&self) -> u64 {
        self.config.seed
    }

    fn fixed_point_options(&self) -> FixedPointOptions {
        FixedPointOptions {
            budget: self.config.budget.unwrap_or(FixedPointOptions::default().budget),
            seed: self.seed(),
            ..Default::default()
        }
    }
}

fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    run: fn(&mut Run) -> Result<()>,
}

pub fn registry() -> &'static [Scenario] {
    const S: &[Scenario] = &[
        Scenario {
            name: "cylinder-cut-locus",
            description: "(0,-1,1) lies on the cut locus of (0,1,0) on the cylinder",
            run: cylinder_cut_locus,
        },
        Scenario {
            name: "smooth-subgradient",
            description: "for a C2 field on the sphere, df(p) is a verified proximal subgradient",
            run: smooth_subgradient,
        },
        Scenario {
            name: "lipschitz-subgradient-bound",
            description: "probed subgradients of a 2-Lipschitz field have norm at most 2",
            run: lipschitz_subgradient_bound,
        },
        Scenario {
            name: "indicator-envelope",
            description: "envelope of a set indicator with alpha = 1 equals the squared distance",
            run: indicator_envelope,
        },
        Scenario {
            name: "moreau-abs",
            description: "envelope of |x| on a 601-point grid for alpha in {0.5, 1, 5}",
            run: moreau_abs,
        },
        Scenario {
            name: "borwein-preiss-abs",
            description: "Borwein-Preiss pair for |x| started near its minimum",
            run: borwein_preiss_abs,
        },
        Scenario {
            name: "decrease-piecewise",
            description: "decrease inequality on seeded piecewise-quadratic functions",
            run: decrease_piecewise,
        },
        Scenario {
            name: "solvability-near-zero",
            description: "F < eps*delta somewhere in B(x0, eps) forces a zero in B(x0, 2 eps)",
            run: solvability_near_zero,
        },
        Scenario {
            name: "equilateral-circumcenter",
            description: "circumcenter of an equilateral triangle in the plane",
            run: equilateral_circumcenter,
        },
        Scenario {
            name: "cylinder-no-circumcenter",
            description: "a1=(1,0,0), a2=(1,0,-1), a_eps=(sqrt(1-eps^2),eps,1) on the cylinder have no circumcenter",
            run: cylinder_no_circumcenter,
        },
        Scenario {
            name: "cut-locus-circumcenter",
            description: "a0 is a circumcenter of a1,a2,a3; moving a3 past the cut boundary loses it",
            run: cut_locus_circumcenter,
        },
        Scenario {
            name: "rotation23-fixed-point",
            description: "F(x,y)=23(y,-x): K=0, delta=1, fixed point at the origin although F is expansive",
            run: rotation23_fixed_point,
        },
        Scenario {
            name: "l2-block-rotation",
            description: "truncated l2 (n=10): 5 x block rotation plus a constant, K=0",
            run: l2_block_rotation,
        },
        Scenario {
            name: "cylinder-reflection-k",
            description: "G(x,y,z)=(x,-y,-z) on the cylinder has K=-1 on B((1,0,0), pi/2)",
            run: cylinder_reflection_k,
        },
        Scenario {
            name: "cylinder-h-of-g-fixed-point",
            description: "F = H o G with G the cylinder reflection and H near the identity",
            run: cylinder_h_of_g,
        },
        Scenario {
            name: "group-sum-perturbation",
            description: "J(x,y)=y+H(x) has L = Lip(H) and eps = 0",
            run: group_sum_perturbation,
        },
        Scenario {
            name: "composition-perturbation",
            description: "J(x,y)=H(y) with |DH - I| < eps0 has L = 0 and eps = C eps0",
            run: composition_perturbation,
        },
        Scenario {
            name: "paraboloid-5rotation",
            description: "G(x,y,z)=(5y,-5x,25z) on z=x^2+y^2: K -> 0 near the fixed origin",
            run: paraboloid_5rotation,
        },
        Scenario {
            name: "contraction-rotation",
            description: "Picard iteration for 0.9 rotation plus a constant",
            run: contraction_rotation,
        },
    ];
    S
}

pub fn list_scenarios() -> Vec<(&'static str, &'static str)> {
    registry().iter().map(|s| (s.name, s.description)).collect()
}

/// Runs one scenario. Failed expectations and pipeline errors are recorded,
/// not returned; only an unknown name is an error.
pub fn run_scenario(name: &str, config: &RunConfig) -> Result<RunRecord> {
    let scenario = registry()
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    let mut run = Run {
        config,
        scenario: scenario.name,
        expectations: vec![],
        outputs: serde_json::Map::new(),
    };
    if let Err(e) = (scenario.run)(&mut run) {
        run.push("pipeline completes", Relation::Equal, "ok".into(), e.to_string().into(), 0.0, false, Trivial);
    }
    Ok(RunRecord {
        scenario: scenario.name.to_string(),
        seed: config.seed,
        budget: config.budget,
        expectations: run.expectations,
        outputs: run.outputs,
    })
}

fn cylinder_cut_locus(run: &mut Run) -> Result<()> {
    let m = Manifold::Cylinder;
    let p = Point::from_slice(&[0.0, 1.0, 0.0]);
    let q = Point::from_slice(&[0.0, -1.0, 1.0]);
    let rel = m.singular_set_test(&p, &q);
    run.equal("relation of (0,-1,1) to (0,1,0)", &label(&PointRelation::Cut), &label(&rel), Published);
    let branches = m.log_branches(&p, &q)?;
    run.close("minimizing branches", 2.0, branches.len() as f64, 0.0, Published);
    Ok(())
}

fn smooth_subgradient(run: &mut Run) -> Result<()> {
    let m = Manifold::Sphere2;
    let a = Vector::from_column_slice(&[0.3, -0.5, 0.8]);
    let a2 = a.clone();
    let f = ScalarField::new(m, "<a,x> + x3^2", move |p| a.dot(p.coords()) + p[2] * p[2]);
    let p = Point::new(Vector::from_column_slice(&[1.0, 2.0, 2.0]) / 3.0);
    let grad = &a2 + Vector::from_column_slice(&[0.0, 0.0, 2.0 * p[2]]);
    let zeta = TangentVector::new(p.clone(), m.project_tangent(&p, &grad));
    let cert = check_proximal_subgradient(&f, &p, &zeta, None, None, &SamplerConfig::with_seed(run.seed()))?;
    run.equal("df(p) certificate", "verified", &label(&cert.verdict), Published);
    run.at_least("worst violation", 0.0, cert.worst_violation, 1e-9, Trivial);
    run.output("sigma", &cert.sigma);
    Ok(())
}

fn lipschitz_subgradient_bound(run: &mut Run) -> Result<()> {
    let m = Manifold::euclidean(2);
    let f = ScalarField::new(m, "2|x1| + |x2|", |p| 2.0 * p[0].abs() + p[1].abs()).with_lipschitz(2.0_f64.hypot(1.0));
    let k = 5f64.sqrt();
    let grid = DirectionGrid {
        sampler: SamplerConfig::with_seed(run.seed()),
        ..DirectionGrid::with_directions(256)
    };
    let mut worst: f64 = 0.0;
    for p in [[0.0, 0.0], [0.0, 0.4], [0.3, 0.0], [0.2, -0.1]] {
        let est = probe_subdifferential(&f, &Point::from_slice(&p), &grid)?;
        for c in &est.candidates {
            worst = worst.max(c.zeta.norm());
        }
    }
    run.at_most("largest candidate norm", k, worst, 1e-6, Published);
    Ok(())
}

fn indicator_envelope(run: &mut Run) -> Result<()> {
    let set = SetDescriptor::circle([0.0, 0.0], 1.0);
    let f = ScalarField::indicator(set);
    let x0 = Point::from_slice(&[2.0, 0.5]);
    let opts = EnvelopeOptions {
        seed: run.seed(),
        ..Default::default()
    };
    let r = moreau_envelope(&f, 1.0, &x0, &opts)?;
    let d = 4.25f64.sqrt() - 1.0;
    run.close("f_1(x0) = d_S(x0)^2", d * d, r.value, 1e-9, Published);
    Ok(())
}

fn moreau_abs(run: &mut Run) -> Result<()> {
    let g = golden("moreau_abs");
    let f = ScalarField::abs(Manifold::euclidean(1));
    let opts = EnvelopeOptions {
        seed: run.seed(),
        restarts: 4,
        fd_check: true,
        certify: false,
        margin_directions: 2,
        ..Default::default()
    };
    for alpha in [0.5, 1.0, 5.0] {
        let case = &g["cases"][format!("alpha_{alpha:?}")];
        let (xs, values, grads) = (floats(&case["x"]), floats(&case["value"]), floats(&case["gradient"]));
        let (mut err, mut gerr, mut fd): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for ((x, v), dv) in xs.iter().zip(&values).zip(&grads) {
            let r = moreau_envelope(&f, alpha, &Point::from_slice(&[*x]), &opts)?;
            err = err.max((r.value - v).abs());
            let grad = r.gradient.as_ref().map(|g| g.components[0]).unwrap_or(f64::NAN);
            gerr = gerr.max((grad - dv).abs());
            fd = fd.max(r.fd_error.unwrap_or(f64::INFINITY));
        }
        let prov = Derived(MOREAU_ORACLE);
        run.at_most(&format!("alpha={alpha} max |f_alpha - oracle|"), 0.0, err, 1e-6, prov.clone());
        run.at_most(&format!("alpha={alpha} max |grad - oracle|"), 0.0, gerr, 1e-6, prov);
        run.at_most(&format!("alpha={alpha} max finite-difference error"), 0.0, fd, 1e-5, Trivial);
    }
    Ok(())
}

fn borwein_preiss_abs(run: &mut Run) -> Result<()> {
    let m = Manifold::euclidean(1);
    let f = ScalarField::abs(m);
    let x0 = Point::from_slice(&[0.05]);
    let (eps, lambda) = (0.1, 0.5);
    let mut opts = crate::envelope::BorweinPreissOptions::default();
    opts.envelope.seed = run.seed();
    let r = borwein_preiss(&f, eps, lambda, &x0, &opts)?;
    run.at_most("d(x0, z)", lambda, r.d_x0_z, 1e-9, Trivial);
    run.at_most("d(z, y)", lambda, r.d_z_y, 1e-9, Trivial);
    run.at_most("f(y) - f(x0)", 0.0, r.f_y - r.f_x0, 1e-9, Trivial);
    run.at_least("strong-minimum margin", 0.0, r.margin, 0.0, Trivial);
    run.equal("all inequalities", "true", &borwein_preiss_holds(&m, &r, &x0, lambda, 1e-9)?.to_string(), Trivial);
    run.output("y", &r.y);
    Ok(())
}

fn decrease_piecewise(run: &mut Run) -> Result<()> {
    let opts = DecreaseOptions {
        probe_points: 8,
        probe_directions: 32,
        seed: run.seed(),
        ..Default::default()
    };
    let mut worst = f64::NEG_INFINITY;
    for k in 0..20u64 {
        let seed = run.seed().wrapping_mul(1000).wrapping_add(k);
        let pq = PiecewiseQuadratic::random(2, seed);
        let x0 = Point::from_slice(&[0.1, -0.2]);
        let r = verify_decrease(&pq.field(Manifold::euclidean(2)), &x0, 0.4, pq.delta, &opts)?;
        worst = worst.max(r.residual);
    }
    run.at_most("max of inf - (f(x0) - rho delta)", 0.0, worst, 1e-7, Trivial);
    Ok(())
}

fn solvability_near_zero(run: &mut Run) -> Result<()> {
    let m = Manifold::euclidean(2);
    let target = Point::from_slice(&[0.33, -0.12]);
    let t2 = target.clone();
    let f = ScalarField::new(m, "d(x, alpha)", move |p| m.distance_unchecked(p, &t2).unwrap_or(f64::NAN));
    let (eps, delta) = (0.2, 1.0);
    let x0 = Point::from_slice(&[0.2, 0.0]);
    let x = Point::from_slice(&[0.3, -0.05]);
    run.at_most("F(x) < eps delta", eps * delta, f.value(&x), 0.0, Published);
    let ball = BallSpec::new(x0.clone(), 2.0 * eps);
    let opts = DecreaseOptions {
        seed: run.seed(),
        ..Default::default()
    };
    let r = solvability_bound(&f, &x, &ball, &ball, delta, &opts)?;
    let w = r.witness.ok_or_else(|| Error::SearchFailure("no zero located".into()))?;
    run.at_most("d(x0, zero)", 2.0 * eps, m.distance(&x0, &w)?, 0.0, Published);
    run.at_most("d(x, zero) - F(x)/delta", 0.0, m.distance(&x, &w)? - r.bound_used, 1e-7, Trivial);
    run.output("zero", &w);
    Ok(())
}

fn circumcenter_options(run: &Run) -> CircumcenterOptions {
    let d = CircumcenterOptions::default();
    CircumcenterOptions {
        seed: run.seed(),
        cell_budget: run.config.budget.unwrap_or(d.cell_budget),
        ..d
    }
}

fn equilateral_circumcenter(run: &mut Run) -> Result<()> {
    let m = Manifold::euclidean(2);
    let s = 3f64.sqrt() / 2.0;
    let a = [Point::from_slice(&[1.0, 0.0]), Point::from_slice(&[-0.5, s]), Point::from_slice(&[-0.5, -s])];
    let r = find_circumcenter(&m, &a[0], &a[1], &a[2], &Point::from_slice(&[0.4, 0.3]), &circumcenter_options(run))?;
    run.equal("classification", &label(&CircumcenterClass::Circumcenter), &label(&r.classification), Trivial);
    let w = r.witness.unwrap_or_else(|| Point::from_slice(&[f64::NAN, f64::NAN]));
    run.close("|witness - (0,0)|", 0.0, w.coords().norm(), 1e-8, Trivial);
    Ok(())
}

fn cylinder_no_circumcenter(run: &mut Run) -> Result<()> {
    let m = Manifold::Cylinder;
    let eps: f64 = 0.05;
    let a1 = Point::from_slice(&[1.0, 0.0, 0.0]);
    let a2 = Point::from_slice(&[1.0, 0.0, -1.0]);
    let a3 = Point::from_slice(&[(1.0 - eps * eps).sqrt(), eps, 1.0]);
    let r = find_circumcenter(&m, &a1, &a2, &a3, &a1, &circumcenter_options(run))?;
    run.equal("classification", &label(&CircumcenterClass::NoCircumcenter), &label(&r.classification), Published);
    let lb = r.lower_bound.unwrap_or(0.0);
    run.at_least("certified lower bound on f", 0.0, lb, 0.0, Published);
    let oracle = golden("circumcenter_cylinder")["cases"]["eps_0.05"]["min_f"].as_f64().unwrap_or(f64::NAN);
    run.close("lower bound vs grid oracle (relative)", 1.0, lb / oracle, 0.1, Derived(CIRCUMCENTER_ORACLE));
    run.output("lower_bound", &lb);
    run.output("best_value", &r.residual);
    Ok(())
}

fn cut_locus_circumcenter(run: &mut Run) -> Result<()> {
    let m = Manifold::Cylinder;
    let a0 = Point::new(cylinder_point(FRAC_PI_2, 0.0));
    let a1 = Point::new(cylinder_point(-FRAC_PI_2, -1.0));
    let a2 = Point::new(cylinder_point(-FRAC_PI_2, 1.0));
    // d(a0, a3) = d(a0, a2) with a3 at height 2 on the far side.
    let theta3 = FRAC_PI_2 + (PI * PI - 3.0).sqrt();
    let a3 = Point::new(cylinder_point(theta3, 2.0));
    let x3 = Point::new(cylinder_point(FRAC_PI_2 + (PI * PI - 3.0).sqrt() * 1.05, 2.1));
    let opts = circumcenter_options(run);
    let r = find_circumcenter(&m, &a1, &a2, &a3, &a0, &opts)?;
    run.equal("a1,a2,a3 classification", &label(&CircumcenterClass::Circumcenter), &label(&r.classification), Published);
    let spread = r.distances.iter().fold(0.0f64, |s, d| s.max((d - r.distances[0]).abs()));
    run.close("spread of distances to the circumcenter", 0.0, spread, 1e-6, Published);
    let r = find_circumcenter(&m, &a1, &a2, &x3, &a0, &opts)?;
    run.equal("a1,a2,x3 classification", &label(&CircumcenterClass::NoCircumcenter), &label(&r.classification), Published);
    let oracle = golden("circumcenter_cylinder")["cases"]["cut_locus_x3"]["min_f"].as_f64().unwrap_or(f64::NAN);
    let lb = r.lower_bound.unwrap_or(0.0);
    run.close("x3 lower bound vs grid oracle (relative)", 1.0, lb / oracle, 0.1, Derived(CIRCUMCENTER_ORACLE));
    Ok(())
}

fn rotation23_fixed_point(run: &mut Run) -> Result<()> {
    let m = Manifold::euclidean(2);
    let f = MapDescriptor::linear(m, "23 rotation", DMatrix::from_row_slice(2, 2, &[0.0, 23.0, -23.0, 0.0]))?;
    let region = BallSpec::new(Point::from_slice(&[0.1, 0.1]), 5.0);
    let cert = certify_k(&f, &region, &CertifyOptions { seed: run.seed(), ..Default::default() })?;
    run.close("K", 0.0, cert.k, 1e-12, Published);
    run.close("delta", 1.0, cert.delta(), 1e-12, Published);
    let r = fixed_point_solve(&f, &cert, &run.fixed_point_options())?;
    run.equal("verdict", &label(&SolveVerdict::Solved), &label(&r.verdict), Trivial);
    let w = r.witness.clone().unwrap_or_else(|| Point::from_slice(&[f64::NAN, f64::NAN]));
    run.close("|witness - (0,0)|", 0.0, w.coords().norm(), 1e-8, Trivial);
    run.at_most("residual", 0.0, r.residual, 1e-8, Trivial);
    run.at_most("iterate bound slack", 0.0, r.worst_bound_slack.unwrap_or(f64::INFINITY), 1e-6, Trivial);
    let expansive = expansive_fraction(&f, 2, run.seed());
    run.close("fraction of expanded pairs", 1.0, expansive, 0.0, Published);
    run.output("certificate", &cert);
    Ok(())
}

fn expansive_fraction(f: &MapDescriptor, n: usize, seed: u64) -> f64 {
    let pts = crate::sampling::ball_points(2 * n, 1.0, 32, seed);
    let hits = pts
        .iter()
        .filter(|v| {
            let x = Point::new(v.rows(0, n).into_owned());
            let y = Point::new(v.rows(n, n).into_owned());
            (f.apply(&x).coords() - f.apply(&y).coords()).norm() > (x.coords() - y.coords()).norm()
        })
        .count();
    hits as f64 / pts.len() as f64
}

fn l2_block_rotation(run: &mut Run) -> Result<()> {
    let case = &golden("linear_solves")["cases"]["block_rotation"];
    let n = case["n"].as_u64().unwrap_or(10) as usize;
    let m = Manifold::TruncatedL2 { n };
    let mut t = DMatrix::zeros(n, n);
    for b in 0..n / 2 {
        t[(2 * b, 2 * b + 1)] = 5.0;
        t[(2 * b + 1, 2 * b)] = -5.0;
    }
    let big_t = MapDescriptor::linear(m, "5 block rotation", t)?;
    let c = Vector::from_vec(floats(&case["c"]));
    let h = MapDescriptor::new(m, "constant", move |_| Point::new(c.clone())).with_lipschitz(0.0);
    let f = MapDescriptor::group_sum(&big_t, &h)?;
    let region = BallSpec::new(Point::origin(n), 1.0);
    let cert = certify_perturbation(&f, &region, &CertifyOptions { samples: 32, seed: run.seed(), ..Default::default() })?;
    run.close("K", 0.0, cert.k, 1e-12, Published);
    let r = fixed_point_solve(&f, &cert, &run.fixed_point_options())?;
    run.equal("verdict", &label(&SolveVerdict::Solved), &label(&r.verdict), Trivial);
    let expect = Vector::from_vec(floats(&case["fixed_point"]));
    let got = r.witness.map(|w| (w.coords() - expect).amax()).unwrap_or(f64::INFINITY);
    run.close("max |witness - (I-T)^-1 c|", 0.0, got, 1e-8, Derived(LINEAR_ORACLE));
    run.close("fraction of expanded pairs", 1.0, expansive_fraction(&big_t, n, run.seed()), 0.0, Published);
    Ok(())
}

fn reflection() -> Result<MapDescriptor> {
    MapDescriptor::linear(
        Manifold::Cylinder,
        "reflection",
        DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0, -1.0])),
    )
}

fn cylinder_reflection_k(run: &mut Run) -> Result<()> {
    let region = BallSpec::new(Point::from_slice(&[1.0, 0.0, 0.0]), FRAC_PI_2);
    let cert = certify_k(&reflection()?, &region, &CertifyOptions { samples: 64, seed: run.seed(), ..Default::default() })?;
    run.close("K", -1.0, cert.k, 1e-6, Published);
    run.output("certificate", &cert);
    Ok(())
}

/// H∘G with H(φ, w) = (φ + 0.05 cos φ, w + 0.1 + 0.05 sin φ) in the chart.
pub fn cylinder_h_of_g_map() -> Result<MapDescriptor> {
    let h = MapDescriptor::new(Manifold::Cylinder, "H", |p| {
        let (phi, w) = cylinder_chart(p.coords());
        Point::new(cylinder_point(phi + 0.05 * phi.cos(), w + 0.1 + 0.05 * phi.sin()))
    });
    MapDescriptor::compose(&h, &reflection()?)
}

fn cylinder_h_of_g(run: &mut Run) -> Result<()> {
    let m = Manifold::Cylinder;
    let p0 = Point::from_slice(&[1.0, 0.0, 0.0]);
    let region = BallSpec::new(p0.clone(), FRAC_PI_2);
    let f = cylinder_h_of_g_map()?;
    let cert = certify_perturbation(&f, &region, &CertifyOptions { samples: 64, seed: run.seed(), ..Default::default() })?;
    run.close("K", -1.0, cert.k, 1e-6, Published);
    run.close("L", 0.0, cert.l, 0.0, Published);
    run.at_least("delta", 0.0, cert.delta(), 0.0, Published);
    let r = fixed_point_solve(&f, &cert, &run.fixed_point_options())?;
    run.equal("verdict", &label(&SolveVerdict::Solved), &label(&r.verdict), Trivial);
    run.at_most("residual", 0.0, r.residual, 1e-8, Trivial);
    let w = r.witness.clone().ok_or_else(|| Error::SearchFailure("no witness".into()))?;
    run.at_most("d(p0, witness)", FRAC_PI_2, m.distance(&p0, &w)?, 0.0, Published);
    let oracle = Vector::from_vec(floats(&golden("cylinder_fixed_point")["cases"]["h_of_g"]["point"]));
    run.close("max |witness - oracle|", 0.0, (w.coords() - oracle).amax(), 1e-6, Derived(FIXED_POINT_ORACLE));
    run.output("certificate", &cert);
    run.output("witness", &w);
    Ok(())
}

fn group_sum_perturbation(run: &mut Run) -> Result<()> {
    let m = Manifold::euclidean(2);
    let g = MapDescriptor::linear(m, "2 rotation", DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]))?;
    let l0 = 0.1;
    let h = MapDescriptor::new(m, "H", move |p| Point::from_slice(&[l0 * p[1].sin(), 0.0]));
    let f = MapDescriptor::group_sum(&g, &h)?;
    let cert = certify_perturbation(&f, &BallSpec::new(Point::origin(2), 1.0), &CertifyOptions { samples: 64, seed: run.seed(), ..Default::default() })?;
    run.close("epsilon", 0.0, cert.epsilon, 0.0, Published);
    run.close("L", l0, cert.l, 1e-2 * l0, Published);
    Ok(())
}

fn composition_perturbation(run: &mut Run) -> Result<()> {
    let m = Manifold::euclidean(2);
    let g = MapDescriptor::linear(m, "rotation", DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]))?;
    let eps0 = 0.05;
    let h = MapDescriptor::new(m, "H", move |p| Point::from_slice(&[p[0] + eps0 * p[0].sin(), p[1]]));
    let f = MapDescriptor::compose(&h, &g)?;
    let cert = certify_perturbation(&f, &BallSpec::new(Point::origin(2), 1.0), &CertifyOptions { samples: 128, seed: run.seed(), ..Default::default() })?;
    run.close("L", 0.0, cert.l, 0.0, Published);
    run.close("max |DH - I|", eps0, cert.deviation, 1e-2 * eps0, Published);
    run.close("epsilon / C", eps0, cert.epsilon / cert.c, 1e-2 * eps0, Published);
    Ok(())
}

fn paraboloid_5rotation(run: &mut Run) -> Result<()> {
    let m = Manifold::Paraboloid;
    let g = MapDescriptor::new(m, "(5y,-5x,25z)", |p| Point::from_slice(&[5.0 * p[1], -5.0 * p[0], 25.0 * p[2]]));
    let origin = Point::new(paraboloid_point(0.0, 0.0));
    run.close("|G(0)|", 0.0, g.apply(&origin).coords().norm(), 0.0, Published);
    // dG(0) restricted to the tangent plane is 5(y, -x).
    let d = g.frame_differential(&origin)?;
    let expect = DMatrix::from_row_slice(2, 2, &[0.0, 5.0, -5.0, 0.0]);
    run.close("max |dG(0) - 5(y,-x)|", 0.0, (d - expect).amax(), 1e-5, Published);
    let mut last = f64::INFINITY;
    let mut shrinking = true;
    for r in [0.03, 0.01, 0.003] {
        let cert = certify_k(&g, &BallSpec::new(origin.clone(), r), &CertifyOptions { samples: 48, seed: run.seed(), ..Default::default() })?;
        shrinking &= cert.k < last;
        last = cert.k;
        run.output(&format!("K(R={r})"), &cert.k);
        if r == 0.01 {
            run.at_most("K on B(0, 0.01)", 0.999, cert.k, 0.0, Published);
            let s = fixed_point_solve(&g, &cert, &run.fixed_point_options())?;
            let w = s.witness.map(|w| w.coords().norm()).unwrap_or(f64::INFINITY);
            run.close("|witness|", 0.0, w, 1e-8, Published);
        }
    }
    run.equal("K decreases with R", "true", &shrinking.to_string(), Published);
    Ok(())
}

fn contraction_rotation(run: &mut Run) -> Result<()> {
    let case = &golden("linear_solves")["cases"]["rotation_contraction"];
    let (s, th) = (case["factor"].as_f64().unwrap_or(f64::NAN), case["angle"].as_f64().unwrap_or(f64::NAN));
    let a = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]) * s;
    let c = Vector::from_vec(floats(&case["c"]));
    let f = MapDescriptor::new(Manifold::euclidean(2), "0.9 rotation + c", move |p| Point::new(&a * p.coords() + &c)).with_lipschitz(s);
    let r = contraction_fallback(&f, &Point::origin(2), &run.fixed_point_options())?;
    let expect = Vector::from_vec(floats(&case["fixed_point"]));
    let got = r.witness.map(|w| (w.coords() - expect).amax()).unwrap_or(f64::INFINITY);
    run.close("max |witness - (I-A)^-1 c|", 0.0, got, 1e-8, Derived(LINEAR_ORACLE));
    Ok(())
}
