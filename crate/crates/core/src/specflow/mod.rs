//! Spectral flow and partial spectral flow of sampled Hermitian families.
//!
//! A family `t ↦ B_t` on `[0, 1]` is sampled, a partition of `[0, 1]` with
//! fence levels `γ_j ∈ (−δ, δ)` is planned so that no eigenvalue touches a
//! fence on its piece, and the flow along a projector `P` is
//!
//! ```text
//! sf_P = Σ_j m₊(V_j) · sign(γ_j − γ_{j+1})
//! ```
//!
//! where `V_j` is spanned by the eigenvectors of `B_{t_j}` between the two
//! fences and `m₊` counts positive eigenvalues of `V_j†(2P − 1)V_j`.

mod family;
mod flow;
mod intervals;
mod plan;
mod projector;

pub use family::{
    diagonal_family, row_sum_norm, FnFamily, HermitianFamily, Sample, SampledFamily, Scaled,
};
pub use flow::{
    certify_sampled, certify_tameness, dim_along, eigenspace_span, inertia_along,
    partial_spectral_flow, spectral_flow, FlowCertificate, FlowEngine, Inertia, SegmentRecord,
    TamenessReport, TamenessSummary, TamenessWitness, INERTIA_FLOOR, TAME_BOUND,
};
pub use intervals::IntervalSet;
pub use plan::{plan_partition, EngineOptions, PartitionPlan};
pub use projector::{commutator_norm, commutator_norm_with_span, SubspaceProjector};
