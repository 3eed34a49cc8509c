//! Dense pure states, weighted ensembles and the Schmidt decomposition.
//!
//! Basis index convention: qubit 0 is the most significant bit, so for three
//! qubits `|q0 q1 q2>` sits at index `q0*4 + q1*2 + q2`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{check_cap, Error, Result};
use crate::graph::{bits, Graph, Target};
use crate::linalg::{hermitian_eigs, HermitianMatrix};
use crate::pauli::PauliString;

/// Default ceiling on the qubit count of dense state vectors.
pub const DEFAULT_DENSE_CAP: usize = 20;

/// Normalisation tolerance for [`PureState`].
pub const NORM_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// 2x2 single-qubit gate, row major.
pub type Gate = [[Complex64; 2]; 2];

pub fn hadamard() -> Gate {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Normalised amplitude vector over `2^n` basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: amps.len(),
            });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "state is not normalised (norm^2 = {norm})"
            )));
        }
        Ok(PureState { n, amps })
    }

    /// Normalises `amps`; fails on the zero vector.
    pub fn normalized(n: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidParameter(
                "cannot normalise the zero vector".into(),
            ));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        PureState::new(n, amps)
    }

    /// Computational basis state `|index>`.
    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        PureState { n, amps }
    }

    /// `|+>^{⊗n}`.
    pub fn plus(n: usize) -> Self {
        let a = Complex64::new((-(n as f64) / 2.0).exp2(), 0.0);
        PureState {
            n,
            amps: vec![a; 1 << n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`, blind to global phase.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `self ⊗ other`; the qubits of `other` follow those of `self`.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        PureState {
            n: self.n + other.n,
            amps,
        }
    }

    pub fn apply_gate(&mut self, q: usize, g: &Gate) {
        assert!(q < self.n, "qubit {q} out of range");
        let stride = 1usize << (self.n - 1 - q);
        for base in 0..self.amps.len() {
            if base & stride != 0 {
                continue;
            }
            let a0 = self.amps[base];
            let a1 = self.amps[base | stride];
            self.amps[base] = g[0][0] * a0 + g[0][1] * a1;
            self.amps[base | stride] = g[1][0] * a0 + g[1][1] * a1;
        }
    }

    pub fn apply_hadamard(&mut self, q: usize) {
        self.apply_gate(q, &hadamard());
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << (self.n - 1 - a)) | (1usize << (self.n - 1 - b));
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// `<psi| P |psi>`.
    pub fn expectation(&self, p: &PauliString) -> Result<Complex64> {
        p.expectation(&self.amps)
    }

    /// Probability of each computational basis outcome.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Graph state `prod_{(i,j) in E} CZ_{ij} |+>^{⊗N}`.
pub fn build_graph_state(g: &Graph) -> Result<PureState> {
    build_graph_state_capped(g, DEFAULT_DENSE_CAP)
}

pub fn build_graph_state_capped(g: &Graph, cap: usize) -> Result<PureState> {
    check_cap("dense qubits", g.n(), cap)?;
    let mut s = PureState::plus(g.n());
    for &(a, b) in g.edges() {
        s.apply_cz(a, b);
    }
    Ok(s)
}

/// Dense vector of a [`Target`]: the graph state with its Hadamards applied.
pub fn target_state(t: &Target) -> Result<PureState> {
    let mut s = build_graph_state(t.graph())?;
    for q in bits(t.hadamards()) {
        s.apply_hadamard(q);
    }
    Ok(s)
}

/// `(|0...0> + |1...1>) / sqrt(2)`.
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "GHZ state needs at least one qubit".into(),
        ));
    }
    check_cap("dense qubits", n, DEFAULT_DENSE_CAP)?;
    let mut amps = vec![ZERO; 1 << n];
    amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[(1 << n) - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Ok(PureState { n, amps })
}

/// Hadamard on every qubit except `center`. Maps the star graph state
/// centred on `center` to the GHZ state.
pub fn star_to_ghz(s: &PureState, center: usize) -> Result<PureState> {
    if center >= s.n() {
        return Err(Error::InvalidParameter(format!(
            "center {center} outside {} qubits",
            s.n()
        )));
    }
    let mut out = s.clone();
    for q in (0..s.n()).filter(|&q| q != center) {
        out.apply_hadamard(q);
    }
    Ok(out)
}

/// Weighted mixture of pure states plus a maximally mixed component:
/// `rho = sum_i w_i |psi_i><psi_i| + mixed * I / 2^n`, weights summing to one.
///
/// Keeping the maximally mixed part symbolic avoids `2^n` basis branches for
/// white noise.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    n: usize,
    branches: Vec<(f64, PureState)>,
    mixed: f64,
}

impl Ensemble {
    pub fn pure(s: PureState) -> Self {
        Ensemble {
            n: s.n(),
            branches: vec![(1.0, s)],
            mixed: 0.0,
        }
    }

    pub fn new(branches: Vec<(f64, PureState)>) -> Result<Self> {
        let Some(first) = branches.first() else {
            return Err(Error::InvalidParameter(
                "ensemble needs at least one branch".into(),
            ));
        };
        let n = first.1.n();
        Ensemble::with_mixed(n, branches, 0.0)
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n: usize) -> Self {
        Ensemble {
            n,
            branches: Vec::new(),
            mixed: 1.0,
        }
    }

    pub fn with_mixed(n: usize, branches: Vec<(f64, PureState)>, mixed: f64) -> Result<Self> {
        let mut total = mixed;
        if mixed.is_nan() || mixed < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "negative mixed weight {mixed}"
            )));
        }
        for (w, s) in &branches {
            if s.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: s.n(),
                });
            }
            if w.is_nan() || *w < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative branch weight {w}"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "ensemble weights sum to {total}, expected 1"
            )));
        }
        Ok(Ensemble { n, branches, mixed })
    }

    /// `p |psi><psi| + (1 - p) I / 2^n`.
    pub fn white_noise(s: &PureState, p: f64) -> Result<Self> {
        Ensemble::pure(s.clone()).depolarized(p)
    }

    /// `p rho + (1 - p) I / 2^n`.
    pub fn depolarized(mut self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "white-noise weight {p} outside [0, 1]"
            )));
        }
        self.branches.iter_mut().for_each(|(w, _)| *w *= p);
        self.branches.retain(|(w, _)| *w > 0.0);
        self.mixed = p * self.mixed + (1.0 - p);
        Ok(self)
    }

    /// Merges several ensembles, scaling each by its weight.
    pub fn mix(parts: Vec<(f64, Ensemble)>) -> Result<Self> {
        let Some(n) = parts.first().map(|(_, e)| e.n) else {
            return Err(Error::InvalidParameter("nothing to mix".into()));
        };
        let mut mixed = 0.0;
        let mut branches = Vec::new();
        for (w, e) in parts {
            if e.n != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: e.n,
                });
            }
            mixed += w * e.mixed;
            branches.extend(e.branches.into_iter().map(|(bw, s)| (w * bw, s)));
        }
        Ensemble::with_mixed(n, branches, mixed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn branches(&self) -> &[(f64, PureState)] {
        &self.branches
    }

    /// Weight of the maximally mixed component.
    pub fn mixed_weight(&self) -> f64 {
        self.mixed
    }

    pub fn into_parts(self) -> (Vec<(f64, PureState)>, f64) {
        (self.branches, self.mixed)
    }

    /// `tr(rho P)`.
    pub fn expectation(&self, p: &PauliString) -> Result<Complex64> {
        if p.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.n(),
            });
        }
        let identity = if p.is_identity_letters() {
            p.phase().to_complex() * self.mixed
        } else {
            ZERO
        };
        self.branches
            .iter()
            .try_fold(identity, |acc, (w, s)| Ok(acc + s.expectation(p)? * *w))
    }

    /// `tr(rho |phi><phi|)`.
    pub fn fidelity_with(&self, phi: &PureState) -> Result<f64> {
        let base = self.mixed / (1u64 << self.n) as f64;
        self.branches
            .iter()
            .try_fold(base, |acc, (w, s)| Ok(acc + w * s.fidelity(phi)?))
    }

    /// Computational-basis outcome distribution.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut out = vec![self.mixed / (1u64 << self.n) as f64; 1 << self.n];
        for (w, s) in &self.branches {
            for (o, a) in out.iter_mut().zip(s.amplitudes()) {
                *o += w * a.norm_sqr();
            }
        }
        out
    }

    /// Applies `f` to every pure branch. `f` must be unitary for the
    /// maximally mixed component to stay invariant.
    pub fn map_states(self, mut f: impl FnMut(PureState) -> PureState) -> Self {
        let branches = self.branches.into_iter().map(|(w, s)| (w, f(s))).collect();
        Ensemble {
            n: self.n,
            branches,
            mixed: self.mixed,
        }
    }
}

impl From<PureState> for Ensemble {
    fn from(s: PureState) -> Self {
        Ensemble::pure(s)
    }
}

/// Bipartite Schmidt form `|psi> = sum_v values[v] |left_v>|right_v>`.
///
/// `left` states live on `part` (sorted ascending), `right` states on the
/// remaining qubits in ascending order. Terms whose coefficient is below
/// `1e-12` are dropped.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub part: Vec<usize>,
    pub rest: Vec<usize>,
    pub values: Vec<f64>,
    pub left: Vec<PureState>,
    pub right: Vec<PureState>,
}

impl SchmidtDecomposition {
    /// Number of coefficients above `1e-10`.
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|&&v| v > 1e-10).count()
    }

    /// Rebuilds the full state in the original qubit order.
    pub fn reconstruct(&self) -> PureState {
        let n = self.part.len() + self.rest.len();
        let mut amps = vec![ZERO; 1 << n];
        for ((s, l), r) in self.values.iter().zip(&self.left).zip(&self.right) {
            for (a, la) in l.amplitudes().iter().enumerate() {
                for (c, rc) in r.amplitudes().iter().enumerate() {
                    let idx = scatter(a, &self.part, n) | scatter(c, &self.rest, n);
                    amps[idx] += la * rc * *s;
                }
            }
        }
        PureState { n, amps }
    }
}

/// Places the bits of a sub-index (first listed qubit most significant) at
/// the positions of `qubits` within an `n`-qubit index.
pub(crate) fn scatter(sub: usize, qubits: &[usize], n: usize) -> usize {
    let k = qubits.len();
    qubits.iter().enumerate().fold(0, |acc, (j, &q)| {
        acc | ((sub >> (k - 1 - j)) & 1) << (n - 1 - q)
    })
}

/// Inverse of [`scatter`].
pub(crate) fn gather(index: usize, qubits: &[usize], n: usize) -> usize {
    qubits
        .iter()
        .fold(0, |acc, &q| (acc << 1) | ((index >> (n - 1 - q)) & 1))
}

/// Schmidt decomposition across `part | complement`, computed from the
/// eigendecomposition of the reduced density matrix on the smaller side.
pub fn schmidt_decompose(s: &PureState, part: &[usize]) -> Result<SchmidtDecomposition> {
    let n = s.n();
    let mut part = part.to_vec();
    part.sort_unstable();
    part.dedup();
    if part.is_empty() || part.len() >= n {
        return Err(Error::InvalidPartition(format!(
            "part must be a non-empty proper subset of {n} qubits"
        )));
    }
    if let Some(&q) = part.iter().find(|&&q| q >= n) {
        return Err(Error::InvalidPartition(format!(
            "qubit {q} outside {n} qubits"
        )));
    }
    let rest: Vec<usize> = (0..n).filter(|q| !part.contains(q)).collect();
    let (da, db) = (1usize << part.len(), 1usize << rest.len());

    // m[a][c] = psi at the index combining a (on part) and c (on rest)
    let mut m = vec![ZERO; da * db];
    for (idx, amp) in s.amplitudes().iter().enumerate() {
        m[gather(idx, &part, n) * db + gather(idx, &rest, n)] = *amp;
    }

    let mut values = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    if da <= db {
        let mut rho = vec![ZERO; da * da];
        for a in 0..da {
            for a2 in 0..da {
                rho[a * da + a2] = (0..db).map(|c| m[a * db + c] * m[a2 * db + c].conj()).sum();
            }
        }
        let eig = hermitian_eigs(&HermitianMatrix::symmetrized(da, rho));
        for (lambda, u) in eig.values.iter().zip(&eig.vectors) {
            let sv = lambda.max(0.0).sqrt();
            if sv < 1e-12 {
                continue;
            }
            let r: Vec<Complex64> = (0..db)
                .map(|c| {
                    (0..da)
                        .map(|a| u[a].conj() * m[a * db + c])
                        .sum::<Complex64>()
                        / sv
                })
                .collect();
            values.push(sv);
            left.push(PureState::normalized(part.len(), u.clone())?);
            right.push(PureState::normalized(rest.len(), r)?);
        }
    } else {
        let mut sigma = vec![ZERO; db * db];
        for c in 0..db {
            for c2 in 0..db {
                sigma[c * db + c2] = (0..da).map(|a| m[a * db + c].conj() * m[a * db + c2]).sum();
            }
        }
        let eig = hermitian_eigs(&HermitianMatrix::symmetrized(db, sigma));
        for (lambda, w) in eig.values.iter().zip(&eig.vectors) {
            let sv = lambda.max(0.0).sqrt();
            if sv < 1e-12 {
                continue;
            }
            let l: Vec<Complex64> = (0..da)
                .map(|a| (0..db).map(|c| m[a * db + c] * w[c]).sum::<Complex64>() / sv)
                .collect();
            values.push(sv);
            left.push(PureState::normalized(part.len(), l)?);
            right.push(PureState::normalized(
                rest.len(),
                w.iter().map(|z| z.conj()).collect(),
            )?);
        }
    }
    // renormalise the coefficients against rounding in the eigenvalues
    let total: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    values.iter_mut().for_each(|v| *v /= total);
    Ok(SchmidtDecomposition {
        part,
        rest,
        values,
        left,
        right,
    })
}
