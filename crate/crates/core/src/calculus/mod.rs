//! Nonsmooth calculus on manifolds: scalar fields, sampled proximal
//! subgradient certificates, subdifferential probing, and the density and
//! mean-value searches.

mod certificate;
mod field;
mod probe;
mod search;

pub use certificate::{
    check_proximal_subgradient, default_eta, ProximalCertificate, Verdict, REFUTE_TOL, VERIFY_TOL,
};
pub use field::{DiffFn, EvalFn, FieldKind, ScalarField};
pub use probe::{probe_subdifferential, DirectionGrid, SetShape, SubdifferentialEstimate};
pub use search::{density_search, mean_value_search, DensityResult, MeanValueResult, SearchOptions};
