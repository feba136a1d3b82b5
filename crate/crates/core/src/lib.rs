//! Numerical toolkit for hidden quantum models of PPT states.
//!
//! The crate builds a family of bipartite states that remain positive under
//! partial transposition, simulates arbitrary POVM, sequential-instrument,
//! and multi-copy measurement scenarios on them, and verifies that
//! transposing the state together with Bob's measurements leaves every
//! observable behavior unchanged. Since the transposed state carries a much
//! smaller Schmidt number, the matching behaviors demonstrate that no
//! device-independent protocol can tell the two apart.
//!
//! Everything is pure and deterministic: random objects take explicit seeds,
//! values are immutable, and any of them may be shared across threads.

pub mod error;
pub mod linalg;
pub mod measurements;
pub mod model;
pub mod seed;
pub mod states;
pub mod tol;

pub use error::{Error, Result};
pub use linalg::{
    herm_eig, hs_inner, partial_trace_b, partial_transpose, schmidt_coefficients, tensor,
    Bipartition, ComplexMatrix, C64,
};
pub use measurements::{
    effective_sequential_povm, random_assignment, random_instrument, random_povm, KrausInstrument,
    MeasurementAssignment, Povm,
};
pub use model::{
    behavior_distance, hq_transform, multicopy_state, sequential_hq_transform, simulate_behavior,
    simulate_sequential, BehaviorTable, HqModel, MultiCopyState, SchmidtBound,
    SequentialAssignment,
};
pub use states::{
    build_family_state, fidelity_witness_lower_bound, max_entangled_projector,
    regroup_to_bipartition, schmidt_rank_pure, DensityOperator, FamilyState,
};
