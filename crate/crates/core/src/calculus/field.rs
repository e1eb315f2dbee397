use std::fmt;
use std::sync::Arc;

use crate::envelope::SetDescriptor;
use crate::error::Result;
use crate::manifold::{Manifold, Point, TangentVector, Vector};

pub type EvalFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
/// Differential as an ambient tangent vector at the argument.
pub type DiffFn = Arc<dyn Fn(&Point) -> Vector + Send + Sync>;

#[derive(Debug, Clone)]
pub enum FieldKind {
    Analytic,
    /// I_S: 0 on S, +∞ elsewhere.
    Indicator(SetDescriptor),
    /// d_S.
    DistanceToSet(SetDescriptor),
    Composite,
}

impl FieldKind {
    pub fn tag(&self) -> &'static str {
        match self {
            FieldKind::Analytic => "analytic",
            FieldKind::Indicator(_) => "indicator",
            FieldKind::DistanceToSet(_) => "distance_to_set",
            FieldKind::Composite => "composite",
        }
    }
}

/// A lower semicontinuous function M → (−∞, +∞].
#[derive(Clone)]
pub struct ScalarField {
    pub manifold: Manifold,
    pub name: String,
    evaluate: EvalFn,
    differential: Option<DiffFn>,
    pub lipschitz_constant: Option<f64>,
    pub convex: Option<bool>,
    /// Known lower bound c ≤ inf f.
    pub lower_bound: Option<f64>,
    pub kind: FieldKind,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("manifold", &self.manifold)
            .field("name", &self.name)
            .field("kind", &self.kind.tag())
            .field("has_differential", &self.differential.is_some())
            .field("lipschitz_constant", &self.lipschitz_constant)
            .field("convex", &self.convex)
            .field("lower_bound", &self.lower_bound)
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(manifold: Manifold, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            manifold,
            name: name.into(),
            evaluate: Arc::new(f),
            differential: None,
            lipschitz_constant: None,
            convex: None,
            lower_bound: None,
            kind: FieldKind::Analytic,
        }
    }

    pub fn with_differential<D>(mut self, d: D) -> Self
    where
        D: Fn(&Point) -> Vector + Send + Sync + 'static,
    {
        self.differential = Some(Arc::new(d));
        self
    }

    pub fn with_lipschitz(mut self, k: f64) -> Self {
        self.lipschitz_constant = Some(k);
        self
    }

    pub fn with_convex(mut self, convex: bool) -> Self {
        self.convex = Some(convex);
        self
    }

    pub fn with_lower_bound(mut self, c: f64) -> Self {
        self.lower_bound = Some(c);
        self
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn value(&self, p: &Point) -> f64 {
        (self.evaluate)(p)
    }

    pub fn has_differential(&self) -> bool {
        self.differential.is_some()
    }

    /// df(p) projected onto the tangent space, if an analytic differential
    /// was supplied.
    pub fn differential(&self, p: &Point) -> Option<TangentVector> {
        self.differential.as_ref().map(|d| {
            let v = self.manifold.project_tangent(p, &d(p));
            TangentVector::new(p.clone(), v)
        })
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self.kind, FieldKind::Indicator(_))
    }

    /// Constant function.
    pub fn constant(manifold: Manifold, c: f64) -> Self {
        let n = manifold.ambient_dim();
        ScalarField::new(manifold, format!("constant({c})"), move |_| c)
            .with_differential(move |_| Vector::zeros(n))
            .with_lipschitz(0.0)
            .with_convex(true)
            .with_lower_bound(c)
    }

    /// x ↦ ⟨a, x⟩ on a Euclidean space.
    pub fn linear(manifold: Manifold, a: Vector) -> Self {
        let k = a.norm();
        let b = a.clone();
        ScalarField::new(manifold, "linear", move |p| a.dot(p.coords()))
            .with_differential(move |_| b.clone())
            .with_lipschitz(k)
            .with_convex(true)
    }

    /// x ↦ |x₁| on a Euclidean space (x₁ the first coordinate).
    pub fn abs(manifold: Manifold) -> Self {
        ScalarField::new(manifold, "abs", |p| p[0].abs())
            .with_lipschitz(1.0)
            .with_convex(true)
            .with_lower_bound(0.0)
    }

    /// x ↦ ‖x‖ on a Euclidean space.
    pub fn norm(manifold: Manifold) -> Self {
        ScalarField::new(manifold, "norm", |p| p.coords().norm())
            .with_lipschitz(1.0)
            .with_convex(true)
            .with_lower_bound(0.0)
    }

    /// x ↦ d(x, p₀).
    pub fn distance_to_point(manifold: Manifold, p0: Point) -> Self {
        let name = format!("distance_to({:?})", p0.as_slice());
        ScalarField::new(manifold, name, move |p| {
            manifold.distance_unchecked(p, &p0).unwrap_or(f64::NAN)
        })
        .with_lipschitz(1.0)
        .with_lower_bound(0.0)
    }

    /// x ↦ ½ xᵀAx + bᵀx on a Euclidean space (A symmetric).
    pub fn quadratic(manifold: Manifold, a: nalgebra::DMatrix<f64>, b: Vector) -> Self {
        let (a2, b2) = (a.clone(), b.clone());
        let convex = nalgebra::SymmetricEigen::new(a.clone())
            .eigenvalues
            .iter()
            .all(|&l| l >= 0.0);
        ScalarField::new(manifold, "quadratic", move |p| {
            let x = p.coords();
            0.5 * x.dot(&(&a * x)) + b.dot(x)
        })
        .with_differential(move |p| &a2 * p.coords() + &b2)
        .with_convex(convex)
    }

    /// I_S.
    pub fn indicator(set: SetDescriptor) -> Self {
        let s = set.clone();
        ScalarField::new(set.manifold, format!("indicator({})", set.label), move |p| {
            if s.contains(p) {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .with_lower_bound(0.0)
        .with_kind(FieldKind::Indicator(set))
    }

    /// d_S.
    pub fn distance_to_set(set: SetDescriptor) -> Self {
        let s = set.clone();
        ScalarField::new(set.manifold, format!("distance_to_set({})", set.label), move |p| {
            s.distance(p).unwrap_or(f64::NAN)
        })
        .with_lipschitz(1.0)
        .with_lower_bound(0.0)
        .with_kind(FieldKind::DistanceToSet(set))
    }

    /// c · f for c > 0.
    pub fn scaled(&self, c: f64) -> Self {
        let f = self.evaluate.clone();
        let d = self.differential.clone();
        ScalarField {
            manifold: self.manifold,
            name: format!("{c}*{}", self.name),
            evaluate: Arc::new(move |p| c * f(p)),
            differential: d.map(|d| Arc::new(move |p: &Point| d(p) * c) as DiffFn),
            lipschitz_constant: self.lipschitz_constant.map(|k| k * c.abs()),
            convex: self.convex.filter(|_| c >= 0.0),
            lower_bound: self.lower_bound.filter(|_| c >= 0.0).map(|b| b * c),
            kind: FieldKind::Composite,
        }
    }

    /// f + g.
    pub fn sum(&self, other: &ScalarField) -> Result<Self> {
        if self.manifold != other.manifold {
            return Err(crate::Error::InvalidInput(
                "cannot add fields on different manifolds".into(),
            ));
        }
        let (f, g) = (self.evaluate.clone(), other.evaluate.clone());
        let differential = match (&self.differential, &other.differential) {
            (Some(a), Some(b)) => {
                let (a, b) = (a.clone(), b.clone());
                Some(Arc::new(move |p: &Point| a(p) + b(p)) as DiffFn)
            }
            _ => None,
        };
        Ok(ScalarField {
            manifold: self.manifold,
            name: format!("{}+{}", self.name, other.name),
            evaluate: Arc::new(move |p| f(p) + g(p)),
            differential,
            lipschitz_constant: self
                .lipschitz_constant
                .zip(other.lipschitz_constant)
                .map(|(a, b)| a + b),
            convex: match (self.convex, other.convex) {
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            lower_bound: self.lower_bound.zip(other.lower_bound).map(|(a, b)| a + b),
            kind: FieldKind::Composite,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_and_summed_metadata() {
        let m = Manifold::euclidean(2);
        let f = ScalarField::norm(m).scaled(2.0);
        assert_eq!(f.lipschitz_constant, Some(2.0));
        let g = ScalarField::linear(m, Vector::from_column_slice(&[3.0, 4.0]));
        let h = f.sum(&g).unwrap();
        assert_eq!(h.lipschitz_constant, Some(7.0));
        let x = Point::from_slice(&[3.0, 4.0]);
        assert!((h.value(&x) - (10.0 + 25.0)).abs() < 1e-12);
        assert!(!h.has_differential());
    }

    #[test]
    fn indicator_is_zero_on_the_set_only() {
        let f = ScalarField::indicator(SetDescriptor::circle([0.0, 0.0], 1.0));
        assert_eq!(f.value(&Point::from_slice(&[0.6, 0.8])), 0.0);
        assert_eq!(f.value(&Point::from_slice(&[0.6, 0.9])), f64::INFINITY);
    }

    #[test]
    fn sphere_differential_is_projected() {
        let m = Manifold::Sphere2;
        let f = ScalarField::new(m, "height", |p| p[2]).with_differential(|_| {
            Vector::from_column_slice(&[0.0, 0.0, 1.0])
        });
        let p = Point::from_slice(&[0.0, 0.6, 0.8]);
        let d = f.differential(&p).unwrap();
        assert!(m.validate_tangent(&p, &d.components).is_ok());
    }
}
