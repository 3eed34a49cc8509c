//! Hybrid networks: quantum nodes sharing a state, classical nodes holding
//! preexisting answers to the X, Y and Z queries.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MAX_VERTICES;
use crate::pauli::{Pauli, PauliString, Phase};
use crate::state::{Ensemble, PureState};

/// One of the eight preexisting outcome triples `(v1, v2, v3)` answering
/// the X, Y and Z queries.
///
/// The index `eta` runs over `1..=8`; the bits of `eta - 1` from most to
/// least significant select `v1`, `v2`, `v3`, a set bit meaning `-1`. So
/// `eta = 1` is `(+1, +1, +1)`, `eta = 3` is `(+1, -1, +1)` and `eta = 8` is
/// `(-1, -1, -1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ClassicalAssignment {
    eta: u8,
}

impl ClassicalAssignment {
    pub const ALL_PLUS: ClassicalAssignment = ClassicalAssignment { eta: 1 };

    pub fn from_eta(eta: u8) -> Result<Self> {
        if (1..=8).contains(&eta) {
            Ok(ClassicalAssignment { eta })
        } else {
            Err(Error::InvalidParameter(format!(
                "assignment index {eta} outside 1..=8"
            )))
        }
    }

    pub fn from_values(v: [i8; 3]) -> Result<Self> {
        let mut code = 0u8;
        for x in v {
            code <<= 1;
            match x {
                1 => {}
                -1 => code |= 1,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "outcome {other} is not +1 or -1"
                    )))
                }
            }
        }
        Ok(ClassicalAssignment { eta: code + 1 })
    }

    pub fn eta(self) -> u8 {
        self.eta
    }

    /// `[v1, v2, v3]`.
    pub fn values(self) -> [i8; 3] {
        let code = self.eta - 1;
        [2, 1, 0].map(|shift| if code >> shift & 1 == 1 { -1 } else { 1 })
    }

    /// Answer to a query; the identity always answers `+1`.
    pub fn outcome(self, letter: Pauli) -> i8 {
        match letter {
            Pauli::I => 1,
            Pauli::X => self.values()[0],
            Pauli::Y => self.values()[1],
            Pauli::Z => self.values()[2],
        }
    }

    /// The assignment seen after a Hadamard on the node: `X` and `Z` swap
    /// and `Y` flips sign, so `(v1, v2, v3)` becomes `(v3, -v2, v1)`.
    pub fn hadamard_relabel(self) -> ClassicalAssignment {
        let [v1, v2, v3] = self.values();
        ClassicalAssignment::from_values([v3, -v2, v1]).expect("valid outcomes")
    }

    pub fn all() -> impl Iterator<Item = ClassicalAssignment> {
        (1..=8).map(|eta| ClassicalAssignment { eta })
    }
}

impl TryFrom<u8> for ClassicalAssignment {
    type Error = Error;

    fn try_from(eta: u8) -> Result<Self> {
        ClassicalAssignment::from_eta(eta)
    }
}

impl From<ClassicalAssignment> for u8 {
    fn from(a: ClassicalAssignment) -> u8 {
        a.eta
    }
}

impl fmt::Display for ClassicalAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: i8| if v > 0 { '+' } else { '-' };
        let [a, b, c] = self.values();
        write!(f, "v{}({}{}{})", self.eta, s(a), s(b), s(c))
    }
}

/// A classical node: a probability distribution over the eight triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalNodeState {
    pub node: usize,
    /// `distribution[eta - 1]` is the probability of assignment `eta`.
    pub distribution: [f64; 8],
}

impl ClassicalNodeState {
    pub fn new(node: usize, distribution: [f64; 8]) -> Result<Self> {
        if distribution.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "node {node}: negative or NaN probability"
            )));
        }
        let total: f64 = distribution.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "node {node}: probabilities sum to {total}"
            )));
        }
        Ok(ClassicalNodeState { node, distribution })
    }

    pub fn point_mass(node: usize, a: ClassicalAssignment) -> Self {
        let mut distribution = [0.0; 8];
        distribution[a.eta() as usize - 1] = 1.0;
        ClassicalNodeState { node, distribution }
    }

    pub fn uniform(node: usize) -> Self {
        ClassicalNodeState {
            node,
            distribution: [0.125; 8],
        }
    }

    /// Fixed Z marginal `p(v3 = +1) = p_plus`, uniform over `v1` and `v2`.
    pub fn with_z_marginal(node: usize, p_plus: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_plus) {
            return Err(Error::InvalidParameter(format!(
                "p(v3=+1) = {p_plus} outside [0, 1]"
            )));
        }
        let mut distribution = [0.0; 8];
        for a in ClassicalAssignment::all() {
            let p = if a.values()[2] == 1 {
                p_plus
            } else {
                1.0 - p_plus
            };
            distribution[a.eta() as usize - 1] = p / 4.0;
        }
        Ok(ClassicalNodeState { node, distribution })
    }

    /// The assignment if the distribution is a point mass.
    pub fn as_point_mass(&self) -> Option<ClassicalAssignment> {
        let i = self.distribution.iter().position(|&p| p == 1.0)?;
        ClassicalAssignment::from_eta(i as u8 + 1).ok()
    }

    /// Expectation of a query. Identity gives 1.
    pub fn expectation(&self, letter: Pauli) -> f64 {
        classical_expectation(self, letter)
    }

    /// Same distribution seen after a Hadamard on the node.
    pub fn hadamard_relabel(&self) -> ClassicalNodeState {
        let mut distribution = [0.0; 8];
        for a in ClassicalAssignment::all() {
            distribution[a.hadamard_relabel().eta() as usize - 1] =
                self.distribution[a.eta() as usize - 1];
        }
        ClassicalNodeState {
            node: self.node,
            distribution,
        }
    }
}

/// `sum_eta p(eta) v_m(eta)` for the query `letter`; 1 for the identity.
pub fn classical_expectation(state: &ClassicalNodeState, letter: Pauli) -> f64 {
    if letter == Pauli::I {
        return 1.0;
    }
    ClassicalAssignment::all()
        .zip(state.distribution)
        .map(|(a, p)| p * a.outcome(letter) as f64)
        .sum()
}

/// How a quantum node is turned classical by [`decohere_node`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoherenceChannel {
    /// Z measurement with the outcome kept as the node's Z answer.
    MeasureZ,
    /// Complete loss of coherence in the Z basis.
    FullDephasing,
    /// Relaxation towards `|0>` with probability `gamma`, then dephasing.
    AmplitudeDamping { gamma: f64 },
}

/// `N` nodes split into quantum nodes `v_q` sharing `quantum` (qubit `j` of
/// the ensemble is node `v_q[j]`) and classical nodes, one
/// [`ClassicalNodeState`] each. Classical nodes are independent of each
/// other and of the quantum state.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridNetwork {
    n: usize,
    v_q: Vec<usize>,
    quantum: Ensemble,
    classical: Vec<ClassicalNodeState>,
}

impl HybridNetwork {
    pub fn new(
        n: usize,
        v_q: Vec<usize>,
        quantum: Ensemble,
        classical: Vec<ClassicalNodeState>,
    ) -> Result<Self> {
        if n == 0 || n > MAX_VERTICES {
            return Err(Error::InvalidPartition(format!(
                "network size {n} outside 1..={MAX_VERTICES}"
            )));
        }
        if quantum.n() != v_q.len() {
            return Err(Error::DimensionMismatch {
                expected: v_q.len(),
                found: quantum.n(),
            });
        }
        let mut seen = 0u64;
        for v in v_q.iter().copied().chain(classical.iter().map(|c| c.node)) {
            if v >= n {
                return Err(Error::InvalidPartition(format!("node {v} outside 0..{n}")));
            }
            if seen >> v & 1 == 1 {
                return Err(Error::InvalidPartition(format!("node {v} listed twice")));
            }
            seen |= 1 << v;
        }
        if seen.count_ones() as usize != n {
            return Err(Error::InvalidPartition(format!(
                "quantum and classical nodes cover {} of {n} nodes",
                seen.count_ones()
            )));
        }
        Ok(HybridNetwork {
            n,
            v_q,
            quantum,
            classical,
        })
    }

    /// Every node quantum, in natural order.
    pub fn all_quantum(quantum: impl Into<Ensemble>) -> Result<Self> {
        let quantum = quantum.into();
        let n = quantum.n();
        HybridNetwork::new(n, (0..n).collect(), quantum, Vec::new())
    }

    /// Classical nodes `v_c` with point-mass assignments; the quantum nodes
    /// are the rest, ascending.
    pub fn with_assignments(
        n: usize,
        v_c: &[usize],
        assignments: &[ClassicalAssignment],
        quantum: impl Into<Ensemble>,
    ) -> Result<Self> {
        if v_c.len() != assignments.len() {
            return Err(Error::DimensionMismatch {
                expected: v_c.len(),
                found: assignments.len(),
            });
        }
        let v_q = (0..n).filter(|v| !v_c.contains(v)).collect();
        let classical = v_c
            .iter()
            .zip(assignments)
            .map(|(&node, &a)| ClassicalNodeState::point_mass(node, a))
            .collect();
        HybridNetwork::new(n, v_q, quantum.into(), classical)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_q(&self) -> usize {
        self.v_q.len()
    }

    pub fn n_c(&self) -> usize {
        self.classical.len()
    }

    pub fn v_q(&self) -> &[usize] {
        &self.v_q
    }

    pub fn v_c(&self) -> Vec<usize> {
        self.classical.iter().map(|c| c.node).collect()
    }

    pub fn quantum(&self) -> &Ensemble {
        &self.quantum
    }

    pub fn classical(&self) -> &[ClassicalNodeState] {
        &self.classical
    }

    pub fn classical_node(&self, node: usize) -> Option<&ClassicalNodeState> {
        self.classical.iter().find(|c| c.node == node)
    }

    pub fn with_quantum(mut self, quantum: Ensemble) -> Result<Self> {
        if quantum.n() != self.v_q.len() {
            return Err(Error::DimensionMismatch {
                expected: self.v_q.len(),
                found: quantum.n(),
            });
        }
        self.quantum = quantum;
        Ok(self)
    }
}

/// `<P|_{V_Q}> * prod_{k in V_c} <R_{m_k}>` for a Hermitian string `p`
/// indexed in global node order.
pub fn hybrid_string_expectation(net: &HybridNetwork, p: &PauliString) -> Result<f64> {
    if p.n() != net.n {
        return Err(Error::DimensionMismatch {
            expected: net.n,
            found: p.n(),
        });
    }
    let Some(sign) = p.phase().sign() else {
        return Err(Error::InvalidParameter(format!("{p} is not Hermitian")));
    };
    let classical: f64 = net
        .classical
        .iter()
        .map(|c| classical_expectation(c, p.letter(c.node)))
        .product();
    if classical == 0.0 {
        return Ok(0.0);
    }
    let restricted = p.restrict(&net.v_q).with_phase(Phase::ONE);
    let quantum = net.quantum.expectation(&restricted)?;
    Ok(sign * quantum.re * classical)
}

/// Turns quantum node `node` classical.
///
/// The remaining quantum nodes keep the reduced state, written as the
/// ensemble of states conditioned on a Z measurement of `node`. The new
/// classical node gets the Z marginal implied by the channel (`p(v3 = +1)`
/// is the `|0>` population, plus `gamma` times the `|1>` population under
/// amplitude damping) and uniform X and Y answers.
pub fn decohere_node(
    net: &HybridNetwork,
    node: usize,
    channel: DecoherenceChannel,
) -> Result<HybridNetwork> {
    let Some(j) = net.v_q.iter().position(|&v| v == node) else {
        return Err(Error::InvalidPartition(format!(
            "node {node} is not a quantum node"
        )));
    };
    let gamma = match channel {
        DecoherenceChannel::MeasureZ | DecoherenceChannel::FullDephasing => 0.0,
        DecoherenceChannel::AmplitudeDamping { gamma } => {
            if !(0.0..=1.0).contains(&gamma) {
                return Err(Error::InvalidParameter(format!(
                    "gamma {gamma} outside [0, 1]"
                )));
            }
            gamma
        }
    };
    let nq = net.v_q.len();
    let (branches, mixed) = net.quantum.clone().into_parts();
    let mut p0 = mixed / 2.0;
    let mut new_branches = Vec::with_capacity(2 * branches.len());
    for (w, s) in branches {
        for bit in 0..2 {
            let amps = condition_on_qubit(s.amplitudes(), nq, j, bit);
            let prob: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            if bit == 0 {
                p0 += w * prob;
            }
            if w * prob > 0.0 && prob > 1e-300 {
                new_branches.push((w * prob, PureState::normalized(nq - 1, amps)?));
            }
        }
    }
    let total: f64 = new_branches.iter().map(|(w, _)| w).sum::<f64>() + mixed;
    new_branches.iter_mut().for_each(|(w, _)| *w /= total);
    let quantum = Ensemble::with_mixed(nq - 1, new_branches, mixed / total)?;

    let p_plus = (p0 + gamma * (1.0 - p0)).clamp(0.0, 1.0);
    let mut v_q = net.v_q.clone();
    v_q.remove(j);
    let mut classical = net.classical.clone();
    classical.push(ClassicalNodeState::with_z_marginal(node, p_plus)?);
    HybridNetwork::new(net.n, v_q, quantum, classical)
}

/// Unnormalised amplitudes of `(<bit|_j ⊗ I) |psi>` on the other `n - 1`
/// qubits.
fn condition_on_qubit(amps: &[Complex64], n: usize, j: usize, bit: usize) -> Vec<Complex64> {
    let pos = n - 1 - j;
    let low = (1usize << pos) - 1;
    (0..1usize << (n - 1))
        .map(|i| amps[((i & !low) << 1) | (bit << pos) | (i & low)])
        .collect()
}
