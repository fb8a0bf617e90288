//! Carnot-Carathéodory distance estimation.
//!
//! Two independent estimators produce upper bounds: a lattice-graph
//! shortest path over frozen-coefficient subunit moves, and a penalty-based
//! control optimizer. A certified lower bound from the speed bound closes
//! the interval. The estimators must cross-validate on test pairs; the
//! closed-form Heisenberg solver serves as the oracle for the built-in and
//! is itself validated against both estimators.

pub mod bounds;
pub mod control_opt;
pub mod deviation;
pub mod graph;
pub mod heisenberg;

pub use bounds::{ballbox_check, fit_scaling_exponent, lower_bound_certified, BallBoxReport, PairEstimate};
pub use control_opt::{distance_control_opt, ControlOptParams};
pub use deviation::{metric_deviation, metric_deviation_batch, DeviationEstimator, MetricDeviation};
pub use graph::{build_graph, distance_graph, GraphBuildParams, GraphDiscretization, LatticeSpec};
pub use heisenberg::{dido_vertical_distance, heisenberg_distance};

use crate::flows::Control;
use serde::{Deserialize, Serialize};

/// Which estimator produced the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Graph,
    ControlOpt,
    Combined,
}

/// Feasibility witness for an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Node indices of the shortest lattice path.
    NodePath(Vec<u32>),
    /// Optimized control on `[0, 1]`.
    Control(Control),
}

/// Two-sided distance estimate with its witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CCMetricEstimate {
    pub lower: f64,
    pub upper: f64,
    pub method: EstimateMethod,
    pub witness: Witness,
    /// Correction already folded into `upper` for endpoint snapping or
    /// optimizer endpoint tolerance.
    pub correction: f64,
}

impl CCMetricEstimate {
    pub fn new(
        lower: f64,
        upper: f64,
        method: EstimateMethod,
        witness: Witness,
        correction: f64,
    ) -> crate::Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower < 0.0 || lower > upper {
            return Err(crate::CoreError::GraphBuild(format!(
                "inconsistent estimate interval [{lower}, {upper}]"
            )));
        }
        Ok(CCMetricEstimate {
            lower,
            upper,
            method,
            witness,
            correction,
        })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}
