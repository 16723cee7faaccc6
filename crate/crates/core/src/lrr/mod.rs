//! Locally robust refinement: the sensitivity criterion, its brute-force
//! perturbation check, and LRR-restricted confidence regions.

pub mod criterion;
pub mod region;
pub mod sensitivity;

pub use criterion::{
    aso, q_lrr_generic, q_lrr_generic_batch, CounterfactualContext, Densities, DiscretizedSelectionRule, EtaMeasure, LrrCriterion,
    ShockRule, StructuralModel, WeightedAtom,
};
pub use region::{analyze_grid, confidence_set, gamma_lrr_upper, gamma_lrr_upper_at, ConfidenceReport, GridAnalysis, Method, PointDiagnostics};
pub use sensitivity::{sensitivity_oracle, SensitivityReport};
