use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub type Vector = DVector<f64>;

/// A point of a manifold, stored in ambient embedding coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vector);

impl Point {
    pub fn new(coords: Vector) -> Self {
        Point(coords)
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Point(Vector::from_column_slice(coords))
    }

    pub fn origin(ambient_dim: usize) -> Self {
        Point(Vector::zeros(ambient_dim))
    }

    pub fn coords(&self) -> &Vector {
        &self.0
    }

    pub fn into_coords(self) -> Vector {
        self.0
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Lexicographic comparison on coordinates; used for deterministic tie-breaks.
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(Vector::from_vec(v))
    }
}

impl From<Vector> for Point {
    fn from(v: Vector) -> Self {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.to_vec()
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A tangent vector anchored at `base`, in ambient coordinates.
///
/// Cotangent forms (subgradients, differentials) are identified with
/// tangent vectors through the metric, so they share this type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    #[serde(with = "vector_serde")]
    pub components: Vector,
}

impl TangentVector {
    pub fn new(base: Point, components: Vector) -> Self {
        TangentVector { base, components }
    }

    pub fn zero(base: &Point) -> Self {
        TangentVector {
            components: Vector::zeros(base.ambient_dim()),
            base: base.clone(),
        }
    }

    /// Riemannian norm. All supported manifolds carry the metric induced by
    /// the ambient Euclidean space, so this is the ambient norm.
    pub fn norm(&self) -> f64 {
        self.components.norm()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.components.dot(other)
    }

    pub fn scaled(&self, s: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            components: &self.components * s,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.components.iter().copied().collect()
    }
}

pub(crate) mod vector_serde {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(Vector::from_vec(v))
    }
}
