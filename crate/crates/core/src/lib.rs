//! Counting classical nodes in quantum networks.
//!
//! A network of `N` nodes is supposed to share a graph state. Some nodes may
//! be classical: they answer each Pauli query from a local hidden variable
//! instead of measuring a qubit. This crate computes the graph-state
//! fidelity such hybrid networks can reach, the thresholds that certify how
//! many nodes at most are classical, the optimal cheating strategy against
//! the GHZ witness, and simulated measurement campaigns.

pub mod error;
pub mod fidelity;
pub mod graph;
pub mod hybrid;
pub mod linalg;
pub mod ocs;
pub mod pauli;
pub mod sim;
pub mod state;
pub mod thresholds;

pub use error::{Error, Result};
pub use fidelity::{
    assemble_fidelity, exact_setting_table, fidelity_exact, setting_cover, CoveredSetting,
    FidelityEstimate, MeasurementSetting, SettingEstimate,
};
pub use graph::{Graph, GraphKind, GraphSpec, Target, TargetForm};
pub use hybrid::{
    classical_expectation, decohere_node, hybrid_string_expectation, ClassicalAssignment,
    ClassicalNodeState, DecoherenceChannel, HybridNetwork,
};
pub use linalg::{hermitian_eigs, EigenDecomposition, HermitianMatrix};
pub use ocs::{
    ocs_alternative_params, ocs_broadcast_outcomes, ocs_hybrid, ocs_hybrid_with_state,
    ocs_landscape, ocs_numeric, ocs_optimal_params, ocs_projection_state, OcsParams,
};
pub use pauli::{
    enumerate_stabilizer, graph_stabilizer_generators, pauli_multiply, Pauli, PauliString, Phase,
    StabilizerGroup,
};
pub use sim::{
    apply_noise, apply_noise_exact, estimate_fidelity_sampled, estimate_from_records,
    noisy_network, sample_cover, sample_setting, sub_seed, white_noise_for_fidelity, NoiseSpec,
    SampledFidelity, ShotRecord,
};
pub use state::{
    build_graph_state, ghz_state, schmidt_decompose, star_to_ghz, target_state, Ensemble,
    PureState, SchmidtDecomposition,
};
pub use thresholds::{
    count_classical_nodes, f_matrix, significance, threshold_bruteforce, threshold_bruteforce_max,
    threshold_closed_form, threshold_excess, BruteForceResult, CountVerdict, FMatrix, NodeCount,
    SignificanceKind, ThresholdTable,
};
