//! Fixtures shared by the benchmarks.

use nodecount::{ocs_hybrid, ocs_optimal_params, HybridNetwork, Target};

/// `GHZ_{n_q + n_c}` and the optimal cheating network on it.
pub fn ocs_fixture(n_q: usize, n_c: usize) -> (Target, HybridNetwork) {
    let target = Target::ghz(n_q + n_c).expect("valid size");
    let params = ocs_optimal_params(n_q, n_c).expect("valid size");
    let net = ocs_hybrid(&target, &params, None).expect("valid partition");
    (target, net)
}
