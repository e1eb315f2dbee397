use serde::{Deserialize, Serialize};

use crate::manifold::Point;
use crate::optim::BallSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    /// Symmetric-part eigenvalue of a linear map on a flat space.
    EigenExact,
    /// Per-point exact maximization over h, sampled over x.
    Sampled,
}

/// Constants K, L, ε, C on a ball B(x₀, R), with δ = 1 − (K + L + ε).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantCertificate {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub region: BallSpec,
    pub method: CertificateMethod,
    pub sample_count: usize,
    pub margin_to_one: f64,
    /// Sampled max of ‖∂J/∂y − L_{yJ}‖ (so ε = C · deviation).
    pub deviation: f64,
    /// Where the largest K(x) was found.
    pub k_argmax: Option<Point>,
    /// Samples dropped because a transport was undefined.
    pub excluded: usize,
}

impl ConstantCertificate {
    pub fn delta(&self) -> f64 {
        self.margin_to_one
    }

    pub(crate) fn refresh_margin(&mut self) {
        self.margin_to_one = 1.0 - (self.k + self.l + self.epsilon);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveVerdict {
    Solved,
    BoundHolds,
    RefutedHypotheses,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircumcenterClass {
    Circumcenter,
    Aligned,
    NoCircumcenter,
}

/// One accepted iterate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub point: Point,
    pub value: f64,
    /// value / δ, the radius the theorem allows around this iterate.
    pub bound: f64,
    pub step: f64,
    pub projected: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub verdict: SolveVerdict,
    pub witness: Option<Point>,
    pub residual: f64,
    pub bound_used: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub trace: Vec<IterRecord>,
    pub delta: Option<f64>,
    pub certificate: Option<ConstantCertificate>,
    pub classification: Option<CircumcenterClass>,
    /// Certified lower bound on the objective (no-circumcenter case).
    pub lower_bound: Option<f64>,
    /// Distances from the witness to the input points (circumcenters).
    pub distances: Vec<f64>,
    /// Smallest verified subgradient norm met while sampling δ.
    pub min_sampled_norm: Option<f64>,
    pub sampled_points: usize,
    /// Worst value of d(x_k, witness) − value_k/δ over the trace.
    pub worst_bound_slack: Option<f64>,
    pub notes: Vec<String>,
}

impl SolveReport {
    pub(crate) fn new(verdict: SolveVerdict) -> Self {
        SolveReport {
            verdict,
            witness: None,
            residual: f64::NAN,
            bound_used: f64::NAN,
            iterations: 0,
            evaluations: 0,
            trace: vec![],
            delta: None,
            certificate: None,
            classification: None,
            lower_bound: None,
            distances: vec![],
            min_sampled_norm: None,
            sampled_points: 0,
            worst_bound_slack: None,
            notes: vec![],
        }
    }
}
