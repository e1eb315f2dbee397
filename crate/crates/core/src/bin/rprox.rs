use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use riemannian_prox::calculus::{check_proximal_subgradient, ScalarField};
use riemannian_prox::envelope::{envelope_gradient_field, moreau_envelope, write_envelope_csv, EnvelopeOptions};
use riemannian_prox::harness::{
    cylinder_h_of_g_map, export_report, list_scenarios, parse_overrides, registry, run_scenario, ExportFormat,
    RunConfig,
};
use riemannian_prox::optim::BallSpec;
use riemannian_prox::sampling::SamplerConfig;
use riemannian_prox::solvers::{
    certify_k, certify_perturbation, find_circumcenter, fixed_point_solve, CertifyOptions, CircumcenterOptions,
    FixedPointOptions, MapDescriptor,
};
use riemannian_prox::{Error, Manifold, Point, TangentVector, Vector};

#[derive(Parser)]
#[command(name = "rprox", version, about = "Proximal calculus and fixed-point solvers on manifolds")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every sampler and multistart.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Evaluation budget passed to the solvers.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Replaces expectation tolerances (run) or the solver tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<ExportFormat>,
    /// TOML run configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// List registered scenarios.
    List,
    /// Run scenarios (all when none is named) and compare with expected values.
    Run {
        scenarios: Vec<String>,
        /// key=value overrides (seed, budget, tolerance).
        #[arg(long = "set")]
        overrides: Vec<String>,
    },
    /// Moreau envelope at a point, or a gradient field on a ball with --grid.
    Envelope {
        #[arg(long, default_value = "euclidean:1")]
        manifold: String,
        /// abs | norm | sq-norm | linear:<a> | distance:<p>
        #[arg(long, default_value = "abs")]
        field: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Comma-separated ambient coordinates.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Lattice points per axis on B(x, radius).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Find or classify a circumcenter of three points.
    Circumcenter {
        #[arg(long, default_value = "cylinder")]
        manifold: String,
        #[arg(long, allow_hyphen_values = true)]
        a1: String,
        #[arg(long, allow_hyphen_values = true)]
        a2: String,
        #[arg(long, allow_hyphen_values = true)]
        a3: String,
        /// Starting point (defaults to a1).
        #[arg(long, allow_hyphen_values = true)]
        init: Option<String>,
    },
    /// Certify constants and solve for a fixed point of a registered map.
    FixedPoint(MapArgs),
    /// Certify K for a registered map on a ball.
    CertifyK(MapArgs),
    /// Check a claimed proximal subgradient.
    ProxCheck {
        #[arg(long, default_value = "euclidean:1")]
        manifold: String,
        #[arg(long, default_value = "abs")]
        field: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Ambient components of zeta.
        #[arg(long, allow_hyphen_values = true)]
        zeta: String,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
    },
}

#[derive(Args)]
struct MapArgs {
    /// rotation23 | block-rotation | cylinder-reflection | cylinder-h-of-g |
    /// paraboloid-5rotation | identity:<manifold>
    #[arg(long)]
    map: String,
    /// Ball center (defaults per map).
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 64)]
    samples: usize,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::UnknownKey(_) | Error::UnknownScenario(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("rprox: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("rprox: {msg}");
            ExitCode::from(1)
        }
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn coords(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Failure::Usage(format!("`{s}`: {e}"))))
        .collect()
}

fn point(m: &Manifold, s: &str) -> Result<Point, Failure> {
    let p = Point::from_slice(&coords(s)?);
    m.validate_point(&p)?;
    Ok(p)
}

fn manifold(s: &str) -> Result<Manifold, Failure> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let n = || arg.parse::<usize>().map_err(|_| Failure::Usage(format!("manifold `{s}` needs a dimension")));
    Ok(match kind {
        "euclidean" => Manifold::euclidean(n()?),
        "l2" => Manifold::TruncatedL2 { n: n()? },
        "sphere" => Manifold::Sphere2,
        "cylinder" => Manifold::Cylinder,
        "paraboloid" => Manifold::Paraboloid,
        "circle-line" => Manifold::ProductCircleLine,
        _ => return Err(Error::UnknownKey(s.into()).into()),
    })
}

fn field(m: Manifold, s: &str) -> Result<ScalarField, Failure> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    Ok(match kind {
        "abs" => ScalarField::abs(m),
        "norm" => ScalarField::norm(m),
        "sq-norm" => ScalarField::new(m, "sq-norm", |p| p.coords().norm_squared()).with_lower_bound(0.0),
        "linear" => ScalarField::linear(m, Vector::from_vec(coords(arg)?)),
        "distance" => ScalarField::distance_to_point(m, point(&m, arg)?),
        _ => return Err(Error::UnknownKey(s.into()).into()),
    })
}

/// A registered map with its default region (center, radius).
fn map(s: &str) -> Result<(MapDescriptor, Point, f64), Failure> {
    let rot = |k: f64| DMatrix::from_row_slice(2, 2, &[0.0, k, -k, 0.0]);
    Ok(match s {
        "rotation23" => (
            MapDescriptor::linear(Manifold::euclidean(2), "23 rotation", rot(23.0))?,
            Point::from_slice(&[0.1, 0.1]),
            5.0,
        ),
        "block-rotation" => {
            let n = 10;
            let m = Manifold::TruncatedL2 { n };
            let mut t = DMatrix::zeros(n, n);
            for b in 0..n / 2 {
                t[(2 * b, 2 * b + 1)] = 5.0;
                t[(2 * b + 1, 2 * b)] = -5.0;
            }
            let c = Vector::from_fn(n, |i, _| 0.01 * (i as f64 + 1.0));
            let g = MapDescriptor::linear(m, "5 block rotation", t)?;
            let h = MapDescriptor::new(m, "constant", move |_| Point::new(c.clone())).with_lipschitz(0.0);
            (MapDescriptor::group_sum(&g, &h)?, Point::origin(n), 1.0)
        }
        "cylinder-reflection" => (
            MapDescriptor::linear(
                Manifold::Cylinder,
                "reflection",
                DMatrix::from_diagonal(&Vector::from_column_slice(&[1.0, -1.0, -1.0])),
            )?,
            Point::from_slice(&[1.0, 0.0, 0.0]),
            std::f64::consts::FRAC_PI_2,
        ),
        "cylinder-h-of-g" => (cylinder_h_of_g_map()?, Point::from_slice(&[1.0, 0.0, 0.0]), std::f64::consts::FRAC_PI_2),
        "paraboloid-5rotation" => (
            MapDescriptor::new(Manifold::Paraboloid, "(5y,-5x,25z)", |p| {
                Point::from_slice(&[5.0 * p[1], -5.0 * p[0], 25.0 * p[2]])
            }),
            Point::from_slice(&[0.0, 0.0, 0.0]),
            0.01,
        ),
        other => match other.strip_prefix("identity:") {
            Some(ms) => {
                let m = manifold(ms)?;
                let c = m.project_point(&Vector::from_fn(m.ambient_dim(), |i, _| if i == 0 { 1.0 } else { 0.0 }));
                (MapDescriptor::identity(m), c, 1.0)
            }
            None => return Err(Error::UnknownKey(other.into()).into()),
        },
    })
}

fn map_region(args: &MapArgs) -> Result<(MapDescriptor, BallSpec), Failure> {
    let (f, c, r) = map(&args.map)?;
    let center = match &args.center {
        Some(s) => point(&f.manifold, s)?,
        None => c,
    };
    Ok((f, BallSpec::new(center, args.radius.unwrap_or(r))))
}

/// Writes a JSON object in the requested format: aligned key/value lines,
/// one JSON line, or key,value CSV rows.
fn emit(out: &mut dyn Write, format: ExportFormat, v: &Value) -> Result<(), Failure> {
    let obj = v.as_object().cloned().unwrap_or_default();
    match format {
        ExportFormat::Records => writeln!(out, "{}", serde_json::to_string(v).unwrap_or_default())?,
        ExportFormat::Csv => {
            writeln!(out, "key,value")?;
            for (k, v) in &obj {
                writeln!(out, "{k},\"{}\"", v.to_string().replace('"', "\"\""))?;
            }
        }
        ExportFormat::Table => {
            let w = obj.keys().map(|k| k.len()).max().unwrap_or(0);
            for (k, v) in &obj {
                let text = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                writeln!(out, "{k:w$}  {text}")?;
            }
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    let g = cli.global;
    let mut config = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        config.seed = s;
    }
    if g.budget.is_some() {
        config.budget = g.budget;
    }
    if g.tolerance.is_some() {
        config.tolerance = g.tolerance;
    }
    let format = g.format.unwrap_or_default();
    let mut out = output(&g.out)?;

    let ok = match cli.command {
        Command::List => {
            let w = registry().iter().map(|s| s.name.len()).max().unwrap_or(0);
            for (name, desc) in list_scenarios() {
                writeln!(out, "{name:w$}  {desc}")?;
            }
            true
        }
        Command::Run { scenarios, overrides } => {
            config.apply(&parse_overrides(&overrides)?)?;
            let names: Vec<String> = if !scenarios.is_empty() {
                scenarios
            } else if !config.scenarios.is_empty() {
                config.scenarios.clone()
            } else {
                registry().iter().map(|s| s.name.to_string()).collect()
            };
            let records = names.iter().map(|n| run_scenario(n, &config)).collect::<Result<Vec<_>, _>>()?;
            export_report(&records, format, &mut out)?;
            records.iter().all(|r| r.passed())
        }
        Command::Envelope {
            manifold: ms,
            field: fs,
            alpha,
            x,
            grid,
            radius,
        } => {
            let m = manifold(&ms)?;
            let f = field(m, &fs)?;
            let x0 = point(&m, &x)?;
            let opts = EnvelopeOptions {
                seed: config.seed,
                fd_check: true,
                ..Default::default()
            };
            match grid {
                Some(n) => {
                    let res = envelope_gradient_field(&f, alpha, &BallSpec::new(x0, radius), n, &opts)?;
                    match format {
                        ExportFormat::Records => {
                            for r in &res {
                                let v = json!({
                                    "x": r.x0.as_slice(), "f_alpha": r.value,
                                    "grad": r.gradient.as_ref().map(|g| g.components.as_slice().to_vec()),
                                    "fd_error": r.fd_error,
                                });
                                writeln!(out, "{v}")?;
                            }
                        }
                        _ => write_envelope_csv(&res, &mut out)?,
                    }
                    res.iter().all(|r| r.gradient.is_some())
                }
                None => {
                    let r = moreau_envelope(&f, alpha, &x0, &opts)?;
                    let v = json!({
                        "x0": r.x0.as_slice(),
                        "alpha": alpha,
                        "f_alpha": r.value,
                        "minimizer": r.minimizer.as_slice(),
                        "gradient": r.gradient.as_ref().map(|g| g.components.as_slice().to_vec()),
                        "status": r.status,
                        "strong_minimum_margin": r.strong_minimum_margin,
                        "fd_error": r.fd_error,
                        "certificate": r.certificate.as_ref().map(|c| c.verdict),
                    });
                    emit(&mut out, format, &v)?;
                    r.gradient.is_some()
                }
            }
        }
        Command::Circumcenter { manifold: ms, a1, a2, a3, init } => {
            let m = manifold(&ms)?;
            let (a1, a2, a3) = (point(&m, &a1)?, point(&m, &a2)?, point(&m, &a3)?);
            let x = match init {
                Some(s) => point(&m, &s)?,
                None => a1.clone(),
            };
            let d = CircumcenterOptions::default();
            let opts = CircumcenterOptions {
                seed: config.seed,
                cell_budget: config.budget.unwrap_or(d.cell_budget),
                ..d
            };
            let r = find_circumcenter(&m, &a1, &a2, &a3, &x, &opts)?;
            let v = json!({
                "classification": r.classification,
                "verdict": r.verdict,
                "witness": r.witness.as_ref().map(|w| w.as_slice().to_vec()),
                "f_at_witness": r.residual,
                "lower_bound": r.lower_bound,
                "distances": r.distances,
                "evaluations": r.evaluations,
                "seed": config.seed,
                "notes": r.notes,
            });
            emit(&mut out, format, &v)?;
            true
        }
        Command::CertifyK(args) => {
            let (f, region) = map_region(&args)?;
            let opts = CertifyOptions {
                samples: args.samples,
                seed: config.seed,
                ..Default::default()
            };
            let c = certify_k(&f, &region, &opts)?;
            let mut v = serde_json::to_value(&c).unwrap_or(Value::Null);
            if let Some(o) = v.as_object_mut() {
                o.insert("delta".into(), json!(c.delta()));
                o.insert("seed".into(), json!(config.seed));
            }
            emit(&mut out, format, &v)?;
            true
        }
        Command::FixedPoint(args) => {
            let (f, region) = map_region(&args)?;
            let copts = CertifyOptions {
                samples: args.samples,
                seed: config.seed,
                ..Default::default()
            };
            let cert = if f.is_perturbation() {
                certify_perturbation(&f, &region, &copts)?
            } else {
                certify_k(&f, &region, &copts)?
            };
            let d = FixedPointOptions::default();
            let opts = FixedPointOptions {
                budget: config.budget.unwrap_or(d.budget),
                tol: config.tolerance.unwrap_or(d.tol),
                seed: config.seed,
                ..d
            };
            let r = fixed_point_solve(&f, &cert, &opts)?;
            let v = json!({
                "verdict": r.verdict,
                "witness": r.witness.as_ref().map(|w| w.as_slice().to_vec()),
                "residual": r.residual,
                "bound_used": r.bound_used,
                "K": cert.k, "L": cert.l, "epsilon": cert.epsilon, "C": cert.c, "delta": cert.delta(),
                "iterations": r.iterations,
                "evaluations": r.evaluations,
                "worst_bound_slack": r.worst_bound_slack,
                "seed": config.seed,
            });
            emit(&mut out, format, &v)?;
            r.verdict == riemannian_prox::solvers::SolveVerdict::Solved
        }
        Command::ProxCheck {
            manifold: ms,
            field: fs,
            point: ps,
            zeta,
            sigma,
            eta,
        } => {
            let m = manifold(&ms)?;
            let f = field(m, &fs)?;
            let p = point(&m, &ps)?;
            let z = TangentVector::new(p.clone(), Vector::from_vec(coords(&zeta)?));
            let c = check_proximal_subgradient(&f, &p, &z, sigma, eta, &SamplerConfig::with_seed(config.seed))?;
            let v = json!({
                "verdict": c.verdict,
                "sigma": c.sigma,
                "sigma_fitted": c.sigma_fitted,
                "eta": c.eta,
                "worst_violation": c.worst_violation,
                "worst_point": c.worst_point.as_ref().map(|q| q.as_slice().to_vec()),
                "samples": c.samples,
            });
            emit(&mut out, format, &v)?;
            c.is_verified()
        }
    };
    out.flush()?;
    Ok(ok)
}
