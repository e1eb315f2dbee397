use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point};

pub type PointMap = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
/// Ambient Jacobian at the argument.
pub type JacobianFn = Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;
pub type PairMap = Arc<dyn Fn(&Point, &Point) -> Point + Send + Sync>;

/// Step of the central differences used when no analytic differential is
/// available.
pub const FD_STEP: f64 = 1e-6;

#[derive(Clone)]
pub enum MapKind {
    Analytic,
    Linear(DMatrix<f64>),
    /// H∘G, i.e. J(x, y) = H(y).
    Composition {
        outer: Box<MapDescriptor>,
        inner: Box<MapDescriptor>,
    },
    /// G + H in the group structure, i.e. J(x, y) = y + H(x).
    GroupSum {
        g: Box<MapDescriptor>,
        h: Box<MapDescriptor>,
    },
    /// F(x) = J(x, G(x)).
    General { j: PairMap, g: Box<MapDescriptor> },
}

impl MapKind {
    pub fn tag(&self) -> &'static str {
        match self {
            MapKind::Analytic => "analytic",
            MapKind::Linear(_) => "linear",
            MapKind::Composition { .. } => "composition",
            MapKind::GroupSum { .. } => "group_sum",
            MapKind::General { .. } => "general_j",
        }
    }
}

/// A map M → M with optional analytic differential and Lipschitz constant.
#[derive(Clone)]
pub struct MapDescriptor {
    pub manifold: Manifold,
    pub name: String,
    pub kind: MapKind,
    map: PointMap,
    differential: Option<JacobianFn>,
    pub lipschitz_constant: Option<f64>,
}

impl fmt::Debug for MapDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapDescriptor")
            .field("manifold", &self.manifold)
            .field("name", &self.name)
            .field("kind", &self.kind.tag())
            .field("has_differential", &self.differential.is_some())
            .field("lipschitz_constant", &self.lipschitz_constant)
            .finish()
    }
}

impl MapDescriptor {
    pub fn new<F>(manifold: Manifold, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        MapDescriptor {
            manifold,
            name: name.into(),
            kind: MapKind::Analytic,
            map: Arc::new(f),
            differential: None,
            lipschitz_constant: None,
        }
    }

    pub fn with_differential<D>(mut self, d: D) -> Self
    where
        D: Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.differential = Some(Arc::new(d));
        self
    }

    pub fn with_lipschitz(mut self, k: f64) -> Self {
        self.lipschitz_constant = Some(k);
        self
    }

    pub fn identity(manifold: Manifold) -> Self {
        let n = manifold.ambient_dim();
        MapDescriptor::new(manifold, "identity", |p| p.clone())
            .with_differential(move |_| DMatrix::identity(n, n))
            .with_lipschitz(1.0)
    }

    /// x ↦ Ax in ambient coordinates. On a vector space this is a linear
    /// map; on a submanifold A must preserve it.
    pub fn linear(manifold: Manifold, name: impl Into<String>, a: DMatrix<f64>) -> Result<Self> {
        let n = manifold.ambient_dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, expected {n}x{n}",
                a.nrows(),
                a.ncols()
            )));
        }
        let (a1, a2) = (a.clone(), a.clone());
        let mut m = MapDescriptor::new(manifold, name, move |p| Point::new(&a1 * p.coords()))
            .with_differential(move |_| a2.clone());
        if matches!(manifold, Manifold::Euclidean { .. } | Manifold::TruncatedL2 { .. }) {
            m.lipschitz_constant = Some(a.clone().svd(false, false).singular_values.max());
            m.kind = MapKind::Linear(a);
        }
        Ok(m)
    }

    /// H∘G.
    pub fn compose(outer: &MapDescriptor, inner: &MapDescriptor) -> Result<Self> {
        same_manifold(outer, inner)?;
        let (h, g) = (outer.map.clone(), inner.map.clone());
        let differential = match (&outer.differential, &inner.differential) {
            (Some(dh), Some(dg)) => {
                let (dh, dg, g2) = (dh.clone(), dg.clone(), inner.map.clone());
                Some(Arc::new(move |p: &Point| dh(&g2(p)) * dg(p)) as JacobianFn)
            }
            _ => None,
        };
        Ok(MapDescriptor {
            manifold: inner.manifold,
            name: format!("{}∘{}", outer.name, inner.name),
            kind: MapKind::Composition {
                outer: Box::new(outer.clone()),
                inner: Box::new(inner.clone()),
            },
            map: Arc::new(move |p| h(&g(p))),
            differential,
            lipschitz_constant: outer.lipschitz_constant.zip(inner.lipschitz_constant).map(|(a, b)| a * b),
        })
    }

    /// x ↦ G(x) + H(x) in the group structure of the manifold.
    pub fn group_sum(g: &MapDescriptor, h: &MapDescriptor) -> Result<Self> {
        same_manifold(g, h)?;
        let m = g.manifold;
        if !m.has_group_structure() && !matches!(m, Manifold::Cylinder) {
            return Err(Error::InvalidInput(format!("{} has no group structure", m.name())));
        }
        let (gm, hm) = (g.map.clone(), h.map.clone());
        Ok(MapDescriptor {
            manifold: m,
            name: format!("{}+{}", g.name, h.name),
            kind: MapKind::GroupSum {
                g: Box::new(g.clone()),
                h: Box::new(h.clone()),
            },
            map: Arc::new(move |p| m.group_add(&gm(p), &hm(p)).unwrap_or_else(|_| p.clone())),
            differential: None,
            lipschitz_constant: g.lipschitz_constant.zip(h.lipschitz_constant).map(|(a, b)| a + b),
        })
    }

    /// x ↦ J(x, G(x)).
    pub fn general<J>(name: impl Into<String>, j: J, g: &MapDescriptor) -> Self
    where
        J: Fn(&Point, &Point) -> Point + Send + Sync + 'static,
    {
        let j: PairMap = Arc::new(j);
        let (j2, gm) = (j.clone(), g.map.clone());
        MapDescriptor {
            manifold: g.manifold,
            name: name.into(),
            kind: MapKind::General {
                j,
                g: Box::new(g.clone()),
            },
            map: Arc::new(move |p| j2(p, &gm(p))),
            differential: None,
            lipschitz_constant: None,
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        (self.map)(p)
    }

    pub fn has_differential(&self) -> bool {
        self.differential.is_some()
    }

    /// The unperturbed map G (the map itself when it is not a perturbation).
    pub fn base_map(&self) -> &MapDescriptor {
        match &self.kind {
            MapKind::Composition { inner, .. } => inner,
            MapKind::GroupSum { g, .. } => g,
            MapKind::General { g, .. } => g,
            _ => self,
        }
    }

    pub fn is_perturbation(&self) -> bool {
        matches!(
            self.kind,
            MapKind::Composition { .. } | MapKind::GroupSum { .. } | MapKind::General { .. }
        )
    }

    /// J(x, y) for a perturbation map; J(x, y) = y otherwise.
    pub fn perturbation(&self, x: &Point, y: &Point) -> Result<Point> {
        match &self.kind {
            MapKind::Composition { outer, .. } => Ok(outer.apply(y)),
            MapKind::GroupSum { h, .. } => self.manifold.group_add(y, &h.apply(x)),
            MapKind::General { j, .. } => Ok(j(x, y)),
            _ => Ok(y.clone()),
        }
    }

    /// dF(x) as a matrix from frame coordinates at x to frame coordinates at
    /// F(x). Analytic when a Jacobian was supplied, central differences along
    /// geodesics otherwise.
    pub fn frame_differential(&self, x: &Point) -> Result<DMatrix<f64>> {
        let m = self.manifold;
        let fx = self.apply(x);
        let ex = m.tangent_frame(x);
        let efx = m.tangent_frame(&fx);
        if let Some(d) = &self.differential {
            return Ok(efx.transpose() * d(x) * ex);
        }
        frame_jacobian(&m, |p| self.apply(p), x, &fx, FD_STEP)
    }
}

fn same_manifold(a: &MapDescriptor, b: &MapDescriptor) -> Result<()> {
    if a.manifold != b.manifold {
        return Err(Error::InvalidInput(format!(
            "maps `{}` and `{}` live on different manifolds",
            a.name, b.name
        )));
    }
    Ok(())
}

/// Central-difference Jacobian of `f` at x, from frame coordinates at x to
/// frame coordinates at `fx` = f(x), read through log_{fx}.
pub(crate) fn frame_jacobian<F>(m: &Manifold, f: F, x: &Point, fx: &Point, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&Point) -> Point,
{
    let ex = m.tangent_frame(x);
    let efx = m.tangent_frame(fx);
    let d = m.dim();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        let e = ex.column(i).into_owned();
        let plus = f(&m.exp_unchecked(x, &(&e * h))?);
        let minus = f(&m.exp_unchecked(x, &(&e * -h))?);
        let lp = m.log_unchecked(fx, &plus)?;
        let lm = m.log_unchecked(fx, &minus)?;
        let col = efx.transpose() * (lp.components - lm.components) / (2.0 * h);
        out.set_column(i, &col);
    }
    Ok(out)
}

/// Largest eigenvalue of the symmetric part of a square matrix, i.e.
/// max over unit h of ⟨h, Ah⟩.
pub fn symmetric_part_max(a: &DMatrix<f64>) -> f64 {
    let s = (a + a.transpose()) * 0.5;
    nalgebra::SymmetricEigen::new(s).eigenvalues.max()
}

/// Spectral norm.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_chain_rule() {
        let m = Manifold::euclidean(2);
        let a = MapDescriptor::linear(m, "a", DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0])).unwrap();
        let b = MapDescriptor::new(m, "shift", |p| Point::new(p.coords().map(|c| c + 0.5 * c.sin())));
        let c = MapDescriptor::compose(&b, &a).unwrap();
        let x = Point::from_slice(&[0.3, -0.1]);
        let fd = c.frame_differential(&x).unwrap();
        let ax = a.apply(&x);
        let db = DMatrix::from_diagonal(&ax.coords().map(|v| 1.0 + 0.5 * v.cos()));
        let exact = db * DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        assert!((fd - exact).amax() < 1e-8);
    }

    #[test]
    fn cylinder_reflection_differential() {
        let m = Manifold::Cylinder;
        let g = MapDescriptor::linear(m, "reflect", DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.0, -1.0, -1.0]))).unwrap();
        let x = Point::from_slice(&[0.6f64.cos(), 0.6f64.sin(), 0.2]);
        let analytic = g.frame_differential(&x).unwrap();
        let plain = MapDescriptor::new(m, "reflect-fd", |p| Point::from_slice(&[p[0], -p[1], -p[2]]));
        let fd = plain.frame_differential(&x).unwrap();
        assert!((analytic - fd).amax() < 1e-8);
    }

    #[test]
    fn symmetric_part_of_rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 23.0, -23.0, 0.0]);
        assert!(symmetric_part_max(&a).abs() < 1e-12);
        assert!((operator_norm(&a) - 23.0).abs() < 1e-12);
    }
}
