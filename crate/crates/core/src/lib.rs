//! Curve-family modulus, essential metrics and thick quasiconvexity on
//! weighted graphs.
//!
//! A [`MetricMeasureGraph`] stands in for a metric measure space. On it the
//! crate computes p-moduli of path families ([`modulus`]), essential lengths
//! and the metrics they induce ([`essential`]), pull-back metrics of
//! edge-length maps ([`pullback`]), and refinement-based thickness and
//! Sobolev-to-Lipschitz diagnostics ([`analysis`]).

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod essential;
pub mod experiments;
pub mod generators;
pub mod graph;
pub mod io;
pub mod length_map;
pub mod metric;
pub mod modulus;
mod oracle;
pub mod pullback;

pub use analysis::{
    killing_counterexample, quasiconvexity_constant, sobolev_to_lipschitz_check, thickness_profile,
    upper_gradient_violations, Counterexample, DiscreteFunction, LipschitzReport,
    QuasiconvexityResult, ThicknessParams, ThicknessProfile, UpperGradientReport, Verdict,
};
pub use error::{Error, Result};
pub use essential::{
    essential_length, essential_metric, essential_metric_infty, essential_pre_matrix,
    essential_predistance, EssentialLengthResult, EssentialParams,
};
pub use generators::{collapsed_disc, cusp_domain, grid_square, refine, Recipe, DEFAULT_SEGMENT};
pub use graph::{
    path_length, Edge, EdgeId, MetricMeasureGraph, Node, NodeId, NodeSet, Path, SetSpec,
};
pub use length_map::EdgeLengthMap;
pub use metric::{metrize, AxiomReport, MetricMatrix};
pub use modulus::{
    default_eps_mod, modulus_positive, p_modulus, separation_oracle, Cap, Density, FamilySpec,
    ModulusFlag, ModulusParams, ModulusResult,
};
pub use pullback::{
    factorization_check, path_pullback_metric, pullback_essential_metric, quotient_space,
    FactorizationReport, QuotientSpace,
};
