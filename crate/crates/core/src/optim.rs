//! Local minimization helpers shared by the envelope, calculus and solver
//! modules: Nelder–Mead in ℝⁿ, its manifold version over retraction charts,
//! deterministic multi-start, and golden-section search.

use nalgebra::DVector;

use crate::error::Result;
use crate::manifold::{Manifold, Point, Vector};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub max_evals: usize,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.1,
            max_evals: 4000,
            x_tol: 1e-13,
            f_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vector,
    pub value: f64,
    pub evals: usize,
}

/// Adaptive Nelder–Mead (dimension-dependent coefficients).
pub fn nelder_mead<F>(mut f: F, x0: &Vector, opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&Vector) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf);
    let (rho, sigma) = (0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let mut evals = 0usize;
    let mut eval = |x: &Vector, evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vector, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.clone(), eval(x0, &mut evals)));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += opts.initial_step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| (x - &simplex[0].0).amax())
            .fold(0.0, f64::max);
        if evals >= opts.max_evals
            || diameter <= opts.x_tol
            || (worst.is_finite() && (worst - best).abs() <= opts.f_tol && opts.f_tol > 0.0)
        {
            break;
        }

        let mut centroid = DVector::zeros(n);
        for (x, _) in simplex.iter().take(n) {
            centroid += x;
        }
        centroid /= nf;

        let xr = &centroid + (&centroid - &simplex[n].0) * alpha;
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = &centroid + (&xr - &centroid) * gamma;
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = &centroid + (&xr - &centroid) * rho;
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = &centroid + (&simplex[n].0 - &centroid) * rho;
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for item in simplex.iter_mut().skip(1) {
            let x = &x_best + (&item.0 - &x_best) * sigma;
            let v = eval(&x, &mut evals);
            *item = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evals }
}

/// Golden-section search for a minimum of a unimodal function on [a, b].
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid scan followed by golden-section refinement around every local
/// minimum of the grid. Returns all refined local minima sorted by value.
pub fn scan_minimize<F>(mut f: F, a: f64, b: f64, grid: usize, tol: f64) -> Vec<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let grid = grid.max(3);
    let h = (b - a) / (grid - 1) as f64;
    let ts: Vec<f64> = (0..grid).map(|k| a + h * k as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut out = Vec::new();
    for k in 0..grid {
        let left = if k > 0 { vals[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < grid { vals[k + 1] } else { f64::INFINITY };
        if vals[k] <= left && vals[k] <= right {
            let lo = (ts[k] - h).max(a);
            let hi = (ts[k] + h).min(b);
            let (t, v) = golden_section(&mut f, lo, hi, tol);
            let (t, v) = if vals[k] < v { (ts[k], vals[k]) } else { (t, v) };
            out.push((t, v));
        }
    }
    out.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)));
    out
}

/// Closed geodesic ball used to localize searches.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BallSpec {
    pub center: Point,
    /// May be `f64::INFINITY`.
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Point, radius: f64) -> Self {
        BallSpec { center, radius }
    }

    pub fn unbounded(center: Point) -> Self {
        BallSpec {
            center,
            radius: f64::INFINITY,
        }
    }

    /// Projects `p` back into the closed ball along the geodesic from the
    /// center. Returns the projected point and whether projection happened.
    pub fn project(&self, m: &Manifold, p: Point) -> (Point, bool) {
        if !self.radius.is_finite() {
            return (p, false);
        }
        let Ok(v) = m.log_unchecked(&self.center, &p) else {
            return (p, false);
        };
        let d = v.norm();
        if d <= self.radius {
            return (p, false);
        }
        let scaled = v.components * (self.radius / d);
        match m.exp_unchecked(&self.center, &scaled) {
            Ok(q) => (q, true),
            Err(_) => (p, false),
        }
    }

    pub fn contains(&self, m: &Manifold, p: &Point) -> bool {
        !self.radius.is_finite()
            || m.distance_unchecked(&self.center, p)
                .map(|d| d <= self.radius)
                .unwrap_or(false)
    }
}

#[derive(Debug, Clone)]
pub struct LocalSearch {
    pub initial_step: f64,
    pub max_evals: usize,
    pub x_tol: f64,
    pub rounds: usize,
    pub ball: Option<BallSpec>,
}

impl Default for LocalSearch {
    fn default() -> Self {
        LocalSearch {
            initial_step: 0.1,
            max_evals: 6000,
            x_tol: 1e-12,
            rounds: 6,
            ball: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManifoldMinimum {
    pub point: Point,
    pub value: f64,
    pub evals: usize,
    /// Number of times an iterate was projected back into the ball.
    pub projections: usize,
}

impl Manifold {
    /// First-order retraction used by the optimizers. Equal to the
    /// exponential map except on the paraboloid, where it moves in the
    /// global graph chart.
    pub fn retract(&self, p: &Point, v: &Vector) -> Result<Point> {
        match self {
            Manifold::Paraboloid => Ok(crate::manifold::paraboloid_point(
                p[0] + v[0],
                p[1] + v[1],
            )
            .into()),
            _ => self.exp_unchecked(p, v),
        }
    }
}

/// Nelder–Mead over successive retraction charts, recentering after every
/// round so that the chart stays local.
pub fn minimize_on_manifold<F>(
    m: &Manifold,
    f: F,
    start: &Point,
    opts: &LocalSearch,
) -> Result<ManifoldMinimum>
where
    F: Fn(&Point) -> f64,
{
    let dim = m.dim();
    let mut center = start.clone();
    let mut projections = 0usize;
    if let Some(ball) = &opts.ball {
        let (p, moved) = ball.project(m, center);
        center = p;
        projections += moved as usize;
    }
    let mut value = f(&center);
    let mut evals = 1usize;
    let mut step = opts.initial_step;
    for _ in 0..opts.rounds.max(1) {
        if evals >= opts.max_evals {
            break;
        }
        let frame = m.tangent_frame(&center);
        let chart = |u: &Vector| -> Option<(Point, bool)> {
            let v = &frame * u;
            let p = m.retract(&center, &v).ok()?;
            Some(match &opts.ball {
                Some(ball) => ball.project(m, p),
                None => (p, false),
            })
        };
        let nm = nelder_mead(
            |u| chart(u).map(|(p, _)| f(&p)).unwrap_or(f64::INFINITY),
            &DVector::zeros(dim),
            &NelderMeadOptions {
                initial_step: step,
                max_evals: (opts.max_evals - evals).max(2 * dim + 2),
                x_tol: opts.x_tol,
                f_tol: 0.0,
            },
        );
        evals += nm.evals;
        let moved = nm.x.norm();
        if nm.value < value {
            if let Some((p, projected)) = chart(&nm.x) {
                center = p;
                value = nm.value;
                projections += projected as usize;
            }
        }
        if moved <= opts.x_tol * 10.0 && step <= opts.x_tol * 1e3 {
            break;
        }
        step = (moved * 2.0).clamp(opts.x_tol * 100.0, step.max(opts.x_tol * 100.0));
        if moved == 0.0 {
            step *= 0.1;
        }
    }
    Ok(ManifoldMinimum {
        point: center,
        value,
        evals,
        projections,
    })
}

/// Runs a local search from every start and returns the results sorted by
/// (value, lexicographic coordinates).
pub fn multistart<F>(
    m: &Manifold,
    f: F,
    starts: &[Point],
    opts: &LocalSearch,
) -> Result<Vec<ManifoldMinimum>>
where
    F: Fn(&Point) -> f64,
{
    let mut out = Vec::with_capacity(starts.len());
    for s in starts {
        out.push(minimize_on_manifold(m, &f, s, opts)?);
    }
    out.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| a.point.lex_cmp(&b.point))
    });
    Ok(out)
}

/// Quasi-random starting points in the geodesic ball B(center, radius),
/// always including the center itself.
pub fn ball_starts(
    m: &Manifold,
    center: &Point,
    radius: f64,
    count: usize,
    seed: u64,
) -> Vec<Point> {
    let frame = m.tangent_frame(center);
    let mut out = vec![center.clone()];
    for u in crate::sampling::ball_points(m.dim(), radius, count.saturating_sub(1), seed) {
        if let Ok(p) = m.exp_unchecked(center, &(&frame * u)) {
            out.push(p);
        }
    }
    out
}

/// Central finite-difference gradient of `f` at p in frame coordinates.
pub fn frame_gradient<F>(m: &Manifold, f: F, p: &Point, h: f64) -> Result<Vector>
where
    F: Fn(&Point) -> f64,
{
    let frame = m.tangent_frame(p);
    let mut g = Vector::zeros(m.dim());
    for i in 0..m.dim() {
        let e = frame.column(i).into_owned();
        let fp = f(&m.exp_unchecked(p, &(&e * h))?);
        let fm = f(&m.exp_unchecked(p, &(&e * -h))?);
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}
