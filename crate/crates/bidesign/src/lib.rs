//! Design-based causal inference for experiments with bipartite interference.
//!
//! Treatments are randomized over a set of intervention units while outcomes
//! are measured on a different set of units, connected to the intervention
//! units by a bipartite graph. Each outcome unit's response depends on the
//! treatments of its graph neighbours, and nothing else. This crate computes
//! exact treatment-experience probabilities under the supported experimental
//! designs, inverse-probability-weighted point estimates for several
//! exposure-contrast estimands, conservative variance bounds, randomization
//! tests of the sharp null, and exact small-instance enumeration for checking
//! all of the above.
//!
//! Probabilities are kept as exact rationals until the final conversion to
//! `f64`, so positivity screening and support enumeration never suffer from
//! rounding.

pub mod design;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod numeric;
pub mod oracle;
pub mod policy;
pub mod randtest;
pub mod report;
pub mod rng;
pub mod sim;
pub mod variance;

pub use design::{AssignmentDistribution, DesignKind, Strata};
pub use error::{Error, Result};
pub use experiment::{Estimand, ObservedExperiment};
pub use graph::{BipartiteGraph, GraphStats};
pub use numeric::Prob;
pub use policy::{ExposureFn, LocalPolicy, LocalPolicyKind};

/// Largest neighbourhood (or merged-pair neighbourhood) size enumerated
/// exhaustively, unless the caller raises it.
pub const DEFAULT_ENUM_CAP: usize = 20;

/// Largest assignment-support size the enumeration oracle will expand.
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 16;

/// Numerical tolerances used across the crate, fixed in one place.
pub mod tolerances {
    /// Agreement with enumeration oracles and conservative-bound slack.
    pub const ORACLE: f64 = 1e-10;
    /// Normalization slop accepted for user-supplied probability tables.
    pub const PROB_SUM: f64 = 1e-12;
    /// Marginal-matching tolerance for policy implementability checks.
    pub const IMPLEMENTABLE: f64 = 1e-10;
}
