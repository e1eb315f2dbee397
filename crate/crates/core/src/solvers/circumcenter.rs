use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use super::report::{CircumcenterClass, IterRecord, SolveReport, SolveVerdict};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, Vector};
use crate::optim::{ball_starts, multistart, LocalSearch};

#[derive(Debug, Clone)]
pub struct CircumcenterOptions {
    pub restarts: usize,
    pub seed: u64,
    pub local: LocalSearch,
    /// f ≤ this counts as a circumcenter.
    pub zero_tol: f64,
    /// |sin| of the angle between log_{a_i} a_j and log_{a_i} a_k below which
    /// the points count as aligned.
    pub align_tol: f64,
    /// Cells the branch-and-bound may split.
    pub cell_budget: usize,
    /// Stop once the certified bound is within this fraction of the best
    /// value found.
    pub relative_gap: f64,
}

impl Default for CircumcenterOptions {
    fn default() -> Self {
        CircumcenterOptions {
            restarts: 24,
            seed: 5,
            local: LocalSearch {
                max_evals: 3000,
                x_tol: 1e-13,
                ..Default::default()
            },
            zero_tol: 1e-12,
            align_tol: 1e-8,
            cell_budget: 4_000_000,
            relative_gap: 0.05,
        }
    }
}

/// f(x) = (d(x,a₁) − d(x,a₂))² + (d(x,a₁) − d(x,a₃))², with the two
/// differences.
fn residuals(m: &Manifold, a: &[Point; 3], x: &Point) -> (f64, f64) {
    let d = |p: &Point| m.distance_unchecked(x, p).unwrap_or(f64::NAN);
    let d1 = d(&a[0]);
    (d1 - d(&a[1]), d1 - d(&a[2]))
}

pub fn alignment_function(m: &Manifold, a: &[Point; 3], x: &Point) -> f64 {
    let (u, v) = residuals(m, a, x);
    u * u + v * v
}

/// Gauss–Newton on the two residuals, least-norm steps in frame
/// coordinates.
fn polish(m: &Manifold, a: &[Point; 3], x: &Point) -> Point {
    let mut x = x.clone();
    let mut fx = alignment_function(m, a, &x);
    for _ in 0..30 {
        let e = m.tangent_frame(&x);
        let dim = m.dim();
        let h = 1e-7;
        let r0 = residuals(m, a, &x);
        let mut jac = nalgebra::DMatrix::zeros(2, dim);
        for i in 0..dim {
            let step = e.column(i).into_owned() * h;
            let (Ok(p), Ok(q)) = (m.exp_unchecked(&x, &step), m.exp_unchecked(&x, &(-step.clone()))) else {
                return x;
            };
            let (rp, rq) = (residuals(m, a, &p), residuals(m, a, &q));
            jac[(0, i)] = (rp.0 - rq.0) / (2.0 * h);
            jac[(1, i)] = (rp.1 - rq.1) / (2.0 * h);
        }
        let rhs = Vector::from_column_slice(&[-r0.0, -r0.1]);
        let Ok(u) = jac.svd(true, true).solve(&rhs, 1e-12) else {
            return x;
        };
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..20 {
            if let Ok(y) = m.exp_unchecked(&x, &(&e * &u * t)) {
                let fy = alignment_function(m, a, &y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved || fx == 0.0 {
            break;
        }
    }
    x
}

/// The three points lie on one geodesic through a minimizing branch from
/// some a_i.
fn aligned(m: &Manifold, a: &[Point; 3], tol: f64) -> bool {
    (0..3).any(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let (Ok(wj), Ok(wk)) = (m.log_unchecked(&a[i], &a[j]), m.log_unchecked(&a[i], &a[k])) else {
            return false;
        };
        let (x, y) = (wj.components, wk.components);
        let (nx, ny) = (x.norm(), y.norm());
        if nx == 0.0 || ny == 0.0 {
            return true;
        }
        let c = x.dot(&y) / (nx * ny);
        (1.0 - c * c).max(0.0).sqrt() <= tol
    })
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    lb: f64,
    c: [f64; 2],
    h: [f64; 2],
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    // Min-heap on the lower bound, ties by position.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lb
            .total_cmp(&self.lb)
            .then_with(|| other.c[0].total_cmp(&self.c[0]))
            .then_with(|| other.c[1].total_cmp(&self.c[1]))
    }
}

struct BranchBound {
    lower_bound: f64,
    best: (f64, Point),
    cells: usize,
    z_max: f64,
    tail_bound: f64,
}

fn cylinder_point(theta: f64, z: f64) -> Point {
    Point::from_slice(&[theta.cos(), theta.sin(), z])
}

/// Lower bound of f on |z| ≥ s: each d(·, a_i) − d(·, a_j) is controlled by
/// the height difference of a_i and a_j once |z| is large.
fn cylinder_tail(zs: [f64; 3], s: f64) -> f64 {
    let c = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let pi2 = PI * PI;
    [1usize, 2]
        .iter()
        .map(|&j| {
            let a = (zs[j] - zs[0]).abs();
            let b = (zs[0] + zs[j]).abs();
            let num = a * (2.0 * s - b) - pi2;
            let den = 2.0 * (pi2 + (s + c) * (s + c)).sqrt();
            (num / den).max(0.0)
        })
        .fold(0.0f64, |m, h| m.max(h * h))
}

/// Certified lower bound of f over the whole cylinder. Inside |z| ≤ Z each
/// difference of distances is 2-Lipschitz, so on a cell of circumradius r
/// f ≥ (|u_c| − 2r)₊² + (|v_c| − 2r)₊²; outside, `cylinder_tail` applies.
fn cylinder_branch_bound(m: &Manifold, a: &[Point; 3], best: (f64, Point), opts: &CircumcenterOptions) -> Result<BranchBound> {
    let zs = [a[0][2], a[1][2], a[2][2]];
    let target = (1.0 - opts.relative_gap) * best.0;
    let mut z_max = zs.iter().fold(0.0f64, |m, z| m.max(z.abs())) + 1.0;
    while cylinder_tail(zs, z_max) < target && z_max < 1e4 {
        z_max *= 2.0;
    }
    let tail = cylinder_tail(zs, z_max);
    let f_at = |t: f64, z: f64| residuals(m, a, &cylinder_point(t, z));
    let bound = |c: [f64; 2], h: [f64; 2]| {
        let (u, v) = f_at(c[0], c[1]);
        let r = (h[0] * h[0] + h[1] * h[1]).sqrt();
        let lb = (u.abs() - 2.0 * r).max(0.0).powi(2) + (v.abs() - 2.0 * r).max(0.0).powi(2);
        (lb, u * u + v * v)
    };
    let mut best = best;
    let mut heap = BinaryHeap::new();
    let nt = 64usize;
    let ht = PI / nt as f64;
    let nz = ((2.0 * z_max) / (2.0 * ht)).ceil() as usize;
    let hz = z_max / nz as f64;
    for i in 0..nt {
        for k in 0..nz {
            let c = [-PI + (2 * i + 1) as f64 * ht, -z_max + (2 * k + 1) as f64 * hz];
            let (lb, val) = bound(c, [ht, hz]);
            if val < best.0 {
                best = (val, cylinder_point(c[0], c[1]));
            }
            heap.push(Cell { lb, c, h: [ht, hz] });
        }
    }
    let mut cells = heap.len();
    let lower = loop {
        let Some(cell) = heap.pop() else {
            break f64::INFINITY;
        };
        if cell.lb >= (1.0 - opts.relative_gap) * best.0 || best.0 <= opts.zero_tol || cells >= opts.cell_budget {
            break cell.lb;
        }
        let h = [cell.h[0] / 2.0, cell.h[1] / 2.0];
        for (sx, sz) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
            let c = [cell.c[0] + sx * h[0], cell.c[1] + sz * h[1]];
            let (lb, val) = bound(c, h);
            if val < best.0 {
                best = (val, cylinder_point(c[0], c[1]));
            }
            heap.push(Cell { lb, c, h });
        }
        cells += 4;
    };
    Ok(BranchBound {
        lower_bound: lower.min(tail),
        best,
        cells,
        z_max,
        tail_bound: tail,
    })
}

/// Finds a circumcenter of a₁, a₂, a₃ by minimizing f, or classifies the
/// triple as aligned or as having no circumcenter (with a certified
/// positive lower bound on f).
pub fn find_circumcenter(
    m: &Manifold,
    a1: &Point,
    a2: &Point,
    a3: &Point,
    x_init: &Point,
    opts: &CircumcenterOptions,
) -> Result<SolveReport> {
    let a = [a1.clone(), a2.clone(), a3.clone()];
    for p in a.iter().chain(std::iter::once(x_init)) {
        m.validate_point(p)?;
    }
    let mut spread: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            let d = m.distance_unchecked(&a[i], &a[j])?;
            if d < 1e-12 {
                return Err(Error::InvalidInput(format!("points a{} and a{} coincide", i + 1, j + 1)));
            }
            spread = spread.max(d);
        }
    }
    let f = |x: &Point| alignment_function(m, &a, x);
    let mut starts = vec![x_init.clone()];
    starts.extend(a.iter().cloned());
    starts.extend(ball_starts(m, x_init, spread + 1.0, opts.restarts, opts.seed).into_iter().skip(1));
    let res = multistart(m, f, &starts, &opts.local)?;
    let mut evals: usize = res.iter().map(|r| r.evals).sum();
    let mut best = (res[0].value, res[0].point.clone());
    if best.0 < 1e-6 {
        let p = polish(m, &a, &best.1);
        best = (f(&p), p);
    }

    let finish = |class: CircumcenterClass, verdict: SolveVerdict, x: Point, value: f64, evals: usize| {
        let mut r = SolveReport::new(verdict);
        r.classification = Some(class);
        r.distances = a.iter().map(|p| m.distance_unchecked(&x, p).unwrap_or(f64::NAN)).collect();
        r.residual = value;
        r.evaluations = evals;
        r.iterations = starts.len();
        r.trace = vec![IterRecord {
            iteration: 0,
            point: x.clone(),
            value,
            bound: 0.0,
            step: 0.0,
            projected: false,
        }];
        r.witness = Some(x);
        r
    };

    // Collinear triples drive f to zero along rays that escape to infinity,
    // so alignment is decided before trusting a small value.
    if aligned(m, &a, opts.align_tol) {
        let mut r = finish(CircumcenterClass::Aligned, SolveVerdict::BoundHolds, best.1, best.0, evals);
        r.notes.push("the three points lie on one geodesic".into());
        return Ok(r);
    }
    if best.0 <= opts.zero_tol {
        return Ok(finish(CircumcenterClass::Circumcenter, SolveVerdict::Solved, best.1, best.0, evals));
    }
    match m {
        Manifold::Cylinder | Manifold::ProductCircleLine => {
            if a.iter().all(|p| (p[2] - a[0][2]).abs() < 1e-12) {
                return Err(Error::ClassificationInconclusive(
                    "points at equal height: f has no positive limit as |z| grows".into(),
                ));
            }
            let bb = cylinder_branch_bound(m, &a, best.clone(), opts)?;
            evals += bb.cells;
            if bb.best.0 < 1e-6 && bb.best.0 < best.0 {
                let p = polish(m, &a, &bb.best.1);
                let v = f(&p);
                if v <= opts.zero_tol {
                    let mut r = finish(CircumcenterClass::Circumcenter, SolveVerdict::Solved, p, v, evals);
                    r.notes.push("circumcenter located by the grid, missed by descent".into());
                    return Ok(r);
                }
            }
            if bb.lower_bound > 0.0 {
                let (value, x) = if bb.best.0 < best.0 { bb.best } else { best };
                let mut r = finish(CircumcenterClass::NoCircumcenter, SolveVerdict::BoundHolds, x, value, evals);
                r.lower_bound = Some(bb.lower_bound);
                r.bound_used = bb.lower_bound;
                r.notes.push(format!(
                    "branch-and-bound over |z| <= {} with {} cells; tail bound {:e}",
                    bb.z_max, bb.cells, bb.tail_bound
                ));
                return Ok(r);
            }
            Err(Error::ClassificationInconclusive(format!(
                "descent minimum {:e} but no positive lower bound within {} cells",
                best.0, bb.cells
            )))
        }
        _ => Err(Error::ClassificationInconclusive(format!(
            "descent minimum {:e}; no lower-bound certificate on {}",
            best.0,
            m.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilateral_triangle() {
        let m = Manifold::euclidean(2);
        let s = 3f64.sqrt() / 2.0;
        let a = [
            Point::from_slice(&[1.0, 0.0]),
            Point::from_slice(&[-0.5, s]),
            Point::from_slice(&[-0.5, -s]),
        ];
        let r = find_circumcenter(&m, &a[0], &a[1], &a[2], &Point::from_slice(&[0.3, 0.4]), &Default::default()).unwrap();
        assert_eq!(r.classification, Some(CircumcenterClass::Circumcenter));
        assert!(r.witness.unwrap().coords().norm() < 1e-8);
    }

    #[test]
    fn collinear_points() {
        let m = Manifold::euclidean(2);
        let r = find_circumcenter(
            &m,
            &Point::from_slice(&[0.0, 0.0]),
            &Point::from_slice(&[1.0, 1.0]),
            &Point::from_slice(&[3.0, 3.0]),
            &Point::from_slice(&[0.0, 1.0]),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.classification, Some(CircumcenterClass::Aligned));
    }

    #[test]
    fn tail_bound_is_below_f() {
        let m = Manifold::Cylinder;
        let a = [
            Point::from_slice(&[1.0, 0.0, 0.0]),
            Point::from_slice(&[1.0, 0.0, -1.0]),
            Point::from_slice(&[(1.0f64 - 0.0025).sqrt(), 0.05, 1.0]),
        ];
        let zs = [0.0, -1.0, 1.0];
        for s in [3.0, 10.0, 50.0] {
            let t = cylinder_tail(zs, s);
            for k in 0..64 {
                let th = -PI + 2.0 * PI * k as f64 / 64.0;
                for z in [s, -s, 2.0 * s, -3.0 * s] {
                    assert!(alignment_function(&m, &a, &cylinder_point(th, z)) >= t - 1e-15);
                }
            }
        }
    }
}
