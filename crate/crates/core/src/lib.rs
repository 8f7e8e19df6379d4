//! Structural model-based fault diagnosis.
//!
//! This crate analyzes equation systems at the level of their incidence
//! structure: which unknowns occur in which equations, where the faults
//! sit, and which occurrences are differentiated. On top of a bipartite
//! matching engine and the coarse Dulmage–Mendelsohn decomposition it
//! provides
//!
//! * classification of equation sets as (minimally) structurally
//!   overdetermined and enumeration of all MSO sets,
//! * pluggable testability operators restricting which overdetermined
//!   sets a residual generation method can actually use, with built-in
//!   back-substitution and low-differential-index restrictions,
//! * enumeration of all residual generation sets (the largest testable
//!   set per realizable fault signature), their irreducible members, and
//!   TES/MTES analysis as the unrestricted special case,
//! * structural detectability and isolability verdicts between fault
//!   modes, and
//! * exact derivation of linear residual coefficient vectors along a
//!   back-substitution order plus minimum-variance residual fusion.
//!
//! Exhaustive brute-force counterparts of the enumeration routines are
//! included so every analysis can be cross-checked on small models.
//!
//! ```
//! use structdiag_core::{find_rg, parse_model, BackSubstitution};
//!
//! let text = std::fs::read_to_string("../../models/eq2.json").unwrap();
//! let model = parse_model(&text).unwrap();
//! let results = find_rg(&model, &BackSubstitution).unwrap();
//! assert_eq!(results.len(), 2);
//! assert_eq!(results[0].set.to_string(), "{e1,e2,e3,e5}");
//! ```

pub mod enumerate;
mod error;
pub mod graph;
pub mod linres;
pub mod model;
pub mod operators;

#[cfg(test)]
pub(crate) mod testdata;

pub use enumerate::{
    brute_force_msos, brute_force_mtes, brute_force_rg, brute_force_tes, detectable_faults,
    find_irg, find_msos, find_mtes, find_rg, isolability, isolability_matrix, IsolabilityMatrix,
    IsolabilityVerdict, RgResult,
};
pub use error::Error;
pub use graph::{
    classify_pso, dm_decompose, dm_decompose_graph, is_mso_by_enumeration, maximum_matching,
    overdetermined_part, redundancy, BipartiteStructure, DmResult, MatchingResult, PsoClass,
};
pub use linres::{
    derive_residual, derive_residuals, fuse_covariance, linear_combination, min_variance_fusion,
    residual_covariance, Fusion, LinearResidual, LinearStaticModel,
};
pub use model::{
    classify_semi_explicit, equations_of_faults, faults_of, parse_model, serialize_model,
    Equation, EquationSet, FaultSignature, Incidence, ModelFile, Occurrence, SemiExplicitSplit,
    StructuralModel, VarKind, VariableRef,
};
pub use operators::{
    brute_force_mstar, computation_order, mstar, testable, BackSubstitution, ComputationOrder,
    LowIndex, OperatorRegistry, Plus, TestabilityOperator, DEFAULT_ORACLE_BOUND,
};
