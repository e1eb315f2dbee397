use serde::{Serialize, Serializer};

use super::set::SetDescriptor;
use crate::error::{Error, Result};
use crate::manifold::{Point, TangentVector};
use crate::optim::frame_gradient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceVerdict {
    /// x ∈ S.
    Member,
    /// Unique nearest point; d_S is differentiable at x.
    Differentiable,
    /// Several nearest points at set resolution.
    Nondifferentiable,
}

fn label<S: Serializer>(set: &SetDescriptor, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&set.label)
}

#[derive(Debug, Clone, Serialize)]
pub struct NearestPointResult {
    pub x: Point,
    #[serde(serialize_with = "label")]
    pub set: SetDescriptor,
    pub distance_value: f64,
    pub nearest: Option<Point>,
    pub gradient: Option<TangentVector>,
    /// Gap between d_S(x) and the distance to every other sampled member
    /// (next local minimizer, or nearby members of S when there is none).
    pub uniqueness_margin: f64,
    pub verdict: DistanceVerdict,
    /// Nearest points within the tie tolerance, including `nearest`.
    pub ties: Vec<Point>,
    /// The minimizing geodesic from x to s₀ is unique (s₀ off the cut locus
    /// of x).
    pub unique_geodesic: Option<bool>,
    pub fd_error: Option<f64>,
}

/// Nearest point of S to x, with the gradient of d_S when it is unique.
pub fn nearest_point(x: &Point, set: &SetDescriptor) -> Result<NearestPointResult> {
    let m = set.manifold;
    m.validate_point(x)?;
    let proj = set.projections(x)?;
    let best = proj
        .first()
        .ok_or_else(|| Error::SearchFailure(format!("set `{}` is empty", set.label)))?
        .clone();
    let tie_tol = 10.0 * set.resolution.max(1e-12);
    if best.distance <= tie_tol {
        return Ok(NearestPointResult {
            x: x.clone(),
            set: set.clone(),
            distance_value: best.distance,
            nearest: Some(x.clone()),
            gradient: None,
            uniqueness_margin: 0.0,
            verdict: DistanceVerdict::Member,
            ties: vec![],
            unique_geodesic: None,
            fd_error: None,
        });
    }
    let ties: Vec<Point> = proj
        .iter()
        .take_while(|p| p.distance - best.distance <= tie_tol)
        .map(|p| p.point.clone())
        .collect();
    if ties.len() > 1 {
        return Ok(NearestPointResult {
            x: x.clone(),
            set: set.clone(),
            distance_value: best.distance,
            nearest: None,
            gradient: None,
            uniqueness_margin: 0.0,
            verdict: DistanceVerdict::Nondifferentiable,
            ties,
            unique_geodesic: None,
            fd_error: None,
        });
    }
    let s0 = best.point.clone();
    let margin = match proj.get(1) {
        Some(next) => next.distance - best.distance,
        None => {
            let r = 1e-3 * best.distance.max(1.0);
            set.members_near(&m, &s0, r, 16)?
                .iter()
                .filter_map(|s| m.distance_unchecked(x, s).ok())
                .map(|d| d - best.distance)
                .fold(f64::INFINITY, f64::min)
        }
    };
    let branches = m.log_branches(x, &s0)?;
    let unique_geodesic = branches.len() == 1;
    let gradient = if unique_geodesic {
        let w = &branches[0];
        Some(TangentVector::new(x.clone(), &w.components * (-1.0 / best.distance)))
    } else {
        None
    };
    let fd_error = match &gradient {
        Some(g) => {
            let fd = frame_gradient(&m, |p| set.distance(p).unwrap_or(f64::NAN), x, 1e-6)?;
            Some((m.to_frame(x, &g.components) - fd).amax())
        }
        None => None,
    };
    Ok(NearestPointResult {
        x: x.clone(),
        set: set.clone(),
        distance_value: best.distance,
        nearest: Some(s0),
        verdict: if gradient.is_some() {
            DistanceVerdict::Differentiable
        } else {
            DistanceVerdict::Nondifferentiable
        },
        gradient,
        uniqueness_margin: margin.max(0.0),
        ties,
        unique_geodesic: Some(unique_geodesic),
        fd_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{probe_subdifferential, DirectionGrid, ScalarField};
    use crate::envelope::{moreau_envelope, EnvelopeOptions};
    use crate::manifold::Manifold;

    #[test]
    fn circle_from_outside() {
        let s = SetDescriptor::circle([0.0, 0.0], 1.0);
        let r = nearest_point(&Point::from_slice(&[2.0, 0.0]), &s).unwrap();
        assert!((r.distance_value - 1.0).abs() < 1e-12);
        assert!((r.nearest.unwrap()[0] - 1.0).abs() < 1e-9);
        let g = r.gradient.unwrap();
        assert!((g.components[0] - 1.0).abs() < 1e-9 && g.components[1].abs() < 1e-9);
        assert!(r.fd_error.unwrap() < 1e-5);
        assert!(r.uniqueness_margin > 0.0);
    }

    #[test]
    fn circle_center_ties_and_has_empty_subdifferential() {
        let s = SetDescriptor::circle([0.0, 0.0], 1.0);
        let x = Point::from_slice(&[0.0, 0.0]);
        let r = nearest_point(&x, &s).unwrap();
        assert_eq!(r.verdict, DistanceVerdict::Nondifferentiable);
        assert!(r.ties.len() > 1);
        let est = probe_subdifferential(&ScalarField::distance_to_set(s), &x, &DirectionGrid::default()).unwrap();
        assert!(est.is_empty());
    }

    #[test]
    fn cylinder_two_points_tie() {
        let m = Manifold::Cylinder;
        let s = SetDescriptor::point_cloud(
            m,
            vec![Point::from_slice(&[0.0, 1.0, 0.0]), Point::from_slice(&[0.0, -1.0, 0.0])],
        );
        let r = nearest_point(&Point::from_slice(&[1.0, 0.0, 0.0]), &s).unwrap();
        assert_eq!(r.verdict, DistanceVerdict::Nondifferentiable);
        assert_eq!(r.ties.len(), 2);
        assert!((r.distance_value - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_indicator_envelope() {
        let s = SetDescriptor::circle([0.5, 0.0], 1.0);
        let x = Point::from_slice(&[2.0, 1.5]);
        let r = nearest_point(&x, &s).unwrap();
        let env = moreau_envelope(&ScalarField::indicator(s), 1.0, &x, &EnvelopeOptions::default()).unwrap();
        assert!((r.distance_value - env.value.sqrt()).abs() < 1e-7);
    }
}
