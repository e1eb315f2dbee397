//! Moreau–Yosida envelopes, the Borwein–Preiss perturbation and the
//! distance to a closed set.

mod distance;
mod moreau;
mod set;
mod variational;

pub use distance::{nearest_point, DistanceVerdict, NearestPointResult};
pub use moreau::{
    envelope_gradient_field, envelope_value, moreau_envelope, write_envelope_csv, EnvelopeOptions, EnvelopeResult,
    MinimizerStatus, TraceRecord,
};
pub use set::{ConstraintFn, ConstraintGradFn, CurveFn, Projection, SetDescriptor, SetRepresentation};
pub use variational::{borwein_preiss, borwein_preiss_holds, estimate_infimum, BorweinPreissOptions, BorweinPreissResult};
