//! The bucketing information function `I(P, λ0, λ1, μ)`, sub-conjugacy, the
//! work lower bounds built on them, the two-by-two conjecture scan and the
//! attainable-region generators.

mod ascent;
mod asymmetric;
mod attainable;
mod bounds;
mod closed_form;
mod conjecture;
mod numeric;
mod objective;
mod subconjugate;

use serde::{Deserialize, Serialize};

pub use asymmetric::{asymmetric_comparisons, AsymmetricEstimate};
pub use attainable::{
    attainable_point, AttainablePoint, CORE_GENERATORS, UNLIMITED_CORE_EXTRA_GENERATOR,
};
pub use bounds::{
    certified_frontier, direct_lower_bound, work_lower_bound, DirectBound, WorkBound,
    WorkBoundSearch, FRONTIER_DIRECTIONS, MU_GRID,
};
pub use closed_form::{info_closed_form, info_closed_form_result};
pub use conjecture::{
    conjecture_margin, conjecture_scan, conjecture_scan_with, constrained_point, ScanPoint,
    ScanReport, DEFAULT_SLACK,
};
pub use numeric::{bucketing_objective, info_numeric, info_numeric_with, NumericSettings};
pub use subconjugate::{
    divergence_ratio_sup, is_subconjugate, subconjugate_frontier, RatioSup, SubconjugacyCheck,
};

use crate::probmodel::NonnegMatrix;

/// Arguments `(λ0, λ1, μ)`; `μ = f64::INFINITY` is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoQuery {
    pub lambda0: f64,
    pub lambda1: f64,
    #[serde(with = "mu_serde")]
    pub mu: f64,
}

impl InfoQuery {
    pub fn new(lambda0: f64, lambda1: f64, mu: f64) -> Self {
        Self { lambda0, lambda1, mu }
    }

    /// `λ0, λ1 ≤ 1 ≤ λ0 + λ1`, the range used by the lower bounds.
    pub fn in_bound_domain(&self) -> bool {
        const SLACK: f64 = 1e-12;
        self.lambda0 <= 1.0 + SLACK
            && self.lambda1 <= 1.0 + SLACK
            && self.lambda0 + self.lambda1 >= 1.0 - SLACK
    }
}

mod mu_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mu: &f64, s: S) -> Result<S::Ok, S::Error> {
        if mu.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*mu)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad mu {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Optimizer,
}

/// Value of `I(P, λ0, λ1, μ)` with a maximizing witness.
///
/// The witness blocks `R_i` have total mass one; re-evaluating
/// [`bucketing_objective`] on them reproduces `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoResult {
    pub query: InfoQuery,
    pub value: f64,
    pub witness: Vec<NonnegMatrix>,
    pub converged: bool,
    pub method: Method,
}

impl InfoResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("info result serializes")
    }
}
