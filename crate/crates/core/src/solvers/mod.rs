//! Decrease and solvability checks, circumcenters, constant certificates
//! and fixed points of perturbed maps.

mod certify;
mod circumcenter;
mod decrease;
mod fixed_point;
mod maps;
mod report;

pub use certify::{certify_k, certify_perturbation, CertifyOptions};
pub use circumcenter::{alignment_function, find_circumcenter, CircumcenterOptions};
pub use decrease::{solvability_bound, verify_decrease, DecreaseOptions, PiecewiseQuadratic};
pub use fixed_point::{contraction_fallback, fixed_point_solve, FixedPointOptions};
pub use maps::{operator_norm, symmetric_part_max, JacobianFn, MapDescriptor, MapKind, PairMap, PointMap, FD_STEP};
pub use report::{
    CertificateMethod, CircumcenterClass, ConstantCertificate, IterRecord, SolveReport, SolveVerdict,
};
