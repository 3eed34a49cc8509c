//! Threshold fidelities `F_{n_c}`: the largest fidelity a network with
//! `n_c` classical nodes can show, computed in closed form, by brute force
//! over classical assignments, and through the 2x2 Schmidt-basis matrix.
//! Also the counting rule and the significance ratios built on them.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::fidelity::FidelityEstimate;
use crate::graph::Target;
use crate::hybrid::ClassicalAssignment;
use crate::linalg::{hermitian_eigs, HermitianMatrix};
use crate::pauli::{enumerate_stabilizer, Pauli, DEFAULT_ENUMERATION_CAP};
use crate::state::{gather, schmidt_decompose, target_state, PureState};

/// Most classical nodes [`threshold_bruteforce`] enumerates (`8^6`
/// assignments).
pub const MAX_BRUTEFORCE_CLASSICAL: usize = 6;
/// Most quantum nodes [`threshold_bruteforce`] diagonalises over.
pub const MAX_BRUTEFORCE_QUANTUM: usize = 10;
/// Largest graph for which every classical subset is tried.
pub const MAX_SUBSET_SEARCH_NODES: usize = 8;

const TIE_TOLERANCE: f64 = 1e-12;

/// `F_{n_c} = (1 + 2^{-n_c/2} sqrt(4 + 2^{n_c})) / 4`.
pub fn threshold_closed_form(n_c: u32) -> Result<f64> {
    Ok(0.5 + threshold_excess(n_c)?)
}

/// `F_{n_c} - 1/2`, accurate where `F_{n_c}` itself rounds to 1/2 (from
/// about `n_c = 55` on). With `x = 2^{2 - n_c}` this is
/// `x / (4 (1 + sqrt(1 + x)))`.
pub fn threshold_excess(n_c: u32) -> Result<f64> {
    if n_c < 1 {
        return Err(Error::Domain(
            "threshold needs at least one classical node".into(),
        ));
    }
    let x = (2.0 - n_c as f64).exp2();
    Ok(x / (4.0 * (1.0 + (1.0 + x).sqrt())))
}

/// `F_1 .. F_{n_max}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    entries: Vec<f64>,
}

impl ThresholdTable {
    pub fn new(n_max: u32) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::Domain("threshold table needs n_max >= 1".into()));
        }
        let entries = (1..=n_max)
            .map(threshold_closed_form)
            .collect::<Result<_>>()?;
        Ok(ThresholdTable { entries })
    }

    pub fn n_max(&self) -> u32 {
        self.entries.len() as u32
    }

    /// `F_{n_c}`, or `None` outside `1..=n_max`.
    pub fn get(&self, n_c: u32) -> Option<f64> {
        (n_c >= 1)
            .then(|| self.entries.get(n_c as usize - 1).copied())
            .flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, &f)| (i as u32 + 1, f))
    }
}

/// Best classical assignment for a fixed classical subset.
#[derive(Clone, Debug)]
pub struct BruteForceResult {
    pub v_c: Vec<usize>,
    pub value: f64,
    pub assignment: Vec<ClassicalAssignment>,
    /// Eigenvector on the quantum nodes (ascending node order).
    pub state: PureState,
}

/// Maximum hybrid fidelity for classical nodes `v_c` against `target`.
///
/// For every product assignment `v` the contracted operator
/// `A(v) = sum_P c_P prod_{k in V_c} v_k(P_k) P|_{V_Q}` is built from the
/// full stabilizer enumeration and its largest eigenvalue taken. No
/// assumption is made about the Schmidt rank of the split. Ties go to the
/// lexicographically first assignment (first classical node most
/// significant, `eta` ascending).
pub fn threshold_bruteforce(target: &Target, v_c: &[usize]) -> Result<BruteForceResult> {
    let n = target.n();
    validate_subset(n, v_c)?;
    let nc = v_c.len();
    let v_q: Vec<usize> = (0..n).filter(|v| !v_c.contains(v)).collect();
    let nq = v_q.len();
    check_cap("brute-force classical nodes", nc, MAX_BRUTEFORCE_CLASSICAL)?;
    check_cap("brute-force quantum nodes", nq, MAX_BRUTEFORCE_QUANTUM)?;
    let group = enumerate_stabilizer(target, DEFAULT_ENUMERATION_CAP)?;

    // one dense operator on V_Q per pattern of classical letters
    let d = 1usize << nq;
    let mut blocks: Vec<Option<Vec<Complex64>>> = vec![None; 1 << (2 * nc)];
    for (c, p) in group.terms() {
        let key = v_c
            .iter()
            .fold(0usize, |acc, &k| (acc << 2) | p.letter(k).index());
        let block = blocks[key].get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); d * d]);
        p.restrict(&v_q)
            .for_each_entry(|row, col, v| block[row * d + col] += v * c);
    }
    let blocks: Vec<(usize, Vec<Complex64>)> = blocks
        .into_iter()
        .enumerate()
        .filter_map(|(k, b)| b.map(|b| (k, b)))
        .collect();

    let (index, value, vector) = (0..8usize.pow(nc as u32))
        .into_par_iter()
        .map(|index| {
            let assignment = decode_assignment(index, nc);
            let mut a = vec![Complex64::new(0.0, 0.0); d * d];
            for (key, block) in &blocks {
                let sign = pattern_sign(*key, &assignment);
                for (x, y) in a.iter_mut().zip(block) {
                    *x += y * sign;
                }
            }
            let eig = hermitian_eigs(&HermitianMatrix::symmetrized(d, a));
            let (lambda, v) = eig.max();
            (index, lambda, v.to_vec())
        })
        .reduce_with(|a, b| {
            let better = b.1 > a.1 + TIE_TOLERANCE || (b.1 >= a.1 - TIE_TOLERANCE && b.0 < a.0);
            if better {
                b
            } else {
                a
            }
        })
        .expect("at least one assignment");
    Ok(BruteForceResult {
        v_c: v_c.to_vec(),
        value,
        assignment: decode_assignment(index, nc),
        state: PureState::normalized(nq, vector)?,
    })
}

/// [`threshold_bruteforce`] maximised over every classical subset of size
/// `n_c`, subsets visited in lexicographic order.
pub fn threshold_bruteforce_max(target: &Target, n_c: usize) -> Result<BruteForceResult> {
    let n = target.n();
    check_cap("subset-search nodes", n, MAX_SUBSET_SEARCH_NODES)?;
    if n_c == 0 || n_c > n {
        return Err(Error::InvalidPartition(format!(
            "cannot choose {n_c} classical nodes out of {n}"
        )));
    }
    let mut best: Option<BruteForceResult> = None;
    for v_c in combinations(n, n_c) {
        let r = threshold_bruteforce(target, &v_c)?;
        if best
            .as_ref()
            .is_none_or(|b| r.value > b.value + TIE_TOLERANCE)
        {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one subset"))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn validate_subset(n: usize, v_c: &[usize]) -> Result<()> {
    let mut seen = 0u64;
    for &v in v_c {
        if v >= n {
            return Err(Error::InvalidPartition(format!("node {v} outside 0..{n}")));
        }
        if seen >> v & 1 == 1 {
            return Err(Error::InvalidPartition(format!("node {v} listed twice")));
        }
        seen |= 1 << v;
    }
    Ok(())
}

fn decode_assignment(mut index: usize, nc: usize) -> Vec<ClassicalAssignment> {
    let mut out = vec![ClassicalAssignment::ALL_PLUS; nc];
    for slot in out.iter_mut().rev() {
        *slot = ClassicalAssignment::from_eta((index % 8) as u8 + 1).expect("in range");
        index /= 8;
    }
    out
}

/// `prod_k v_k(letter_k)` for a pattern key packing two bits per classical
/// node, first node most significant.
fn pattern_sign(key: usize, assignment: &[ClassicalAssignment]) -> f64 {
    let nc = assignment.len();
    let mut sign = 1i8;
    for (i, a) in assignment.iter().enumerate() {
        let letter = Pauli::from_index(key >> (2 * (nc - 1 - i)) & 3).expect("two bits");
        sign *= a.outcome(letter);
    }
    sign as f64
}

/// The 2x2 matrix `f_{vv'}` of a rank-2 split together with the quantum
/// Schmidt basis it is written in.
#[derive(Clone, Debug)]
pub struct FMatrix {
    pub matrix: HermitianMatrix,
    /// `|0>_{sQ}`, `|1>_{sQ}` on the quantum nodes in ascending order.
    pub quantum_basis: [PureState; 2],
    /// `|0>_{sc}`, `|1>_{sc}` on `v_c` in ascending order.
    pub classical_basis: [PureState; 2],
}

impl FMatrix {
    /// `lambda_max` and the matching quantum state.
    pub fn optimum(&self) -> Result<(f64, PureState)> {
        let eig = hermitian_eigs(&self.matrix);
        let (lambda, v) = eig.max();
        let [q0, q1] = &self.quantum_basis;
        let amps = q0
            .amplitudes()
            .iter()
            .zip(q1.amplitudes())
            .map(|(a, b)| v[0] * a + v[1] * b)
            .collect();
        Ok((lambda, PureState::normalized(q0.n(), amps)?))
    }
}

/// The Schmidt-basis matrix `f_{vv'} = (1/2) phi_v(|v>_{sc}<v'|)`, with
/// `phi_v` replacing each Pauli on a classical node by its preexisting
/// value. Requires Schmidt rank 2 across `v_c | rest`.
///
/// Basis choice: if the classical side's reduced support is spanned by two
/// computational basis states, those are `|0>_{sc}, |1>_{sc}` in index
/// order and the quantum basis follows from `|G> = (|00> + |11>)/sqrt(2)`;
/// otherwise the same is tried with the roles swapped; otherwise the
/// numerical Schmidt vectors are used with their largest amplitude made
/// real and positive.
pub fn f_matrix(
    target: &Target,
    v_c: &[usize],
    assignment: &[ClassicalAssignment],
) -> Result<FMatrix> {
    let n = target.n();
    validate_subset(n, v_c)?;
    if v_c.is_empty() || v_c.len() >= n {
        return Err(Error::InvalidPartition(
            "f-matrix needs classical and quantum nodes".into(),
        ));
    }
    if assignment.len() != v_c.len() {
        return Err(Error::DimensionMismatch {
            expected: v_c.len(),
            found: assignment.len(),
        });
    }
    let psi = target_state(target)?;
    let sd = schmidt_decompose(&psi, v_c)?;
    if sd.rank() != 2 {
        return Err(Error::UnsupportedBipartition { rank: sd.rank() });
    }
    // sd.part is v_c sorted; keep the assignment aligned with it
    let mut pairs: Vec<(usize, ClassicalAssignment)> = v_c
        .iter()
        .copied()
        .zip(assignment.iter().copied())
        .collect();
    pairs.sort_unstable_by_key(|p| p.0);
    let sorted_assignment: Vec<_> = pairs.iter().map(|p| p.1).collect();

    let (classical_basis, quantum_basis) = if let Some(c) = basis_pair(&sd.left) {
        let q = c.clone().map(|cv| contract(&psi, &sd.part, &cv, &sd.rest));
        (c, q)
    } else if let Some(q) = basis_pair(&sd.right) {
        let c = q.clone().map(|qv| contract(&psi, &sd.rest, &qv, &sd.part));
        (c, q)
    } else {
        let c = [0, 1].map(|i| canonical_phase(&sd.left[i]));
        let q = c.clone().map(|cv| contract(&psi, &sd.part, &cv, &sd.rest));
        (c, q)
    };

    let mut entries = vec![Complex64::new(0.0, 0.0); 4];
    for v in 0..2 {
        for w in 0..2 {
            entries[v * 2 + w] = 0.5
                * realism_functional(&classical_basis[v], &classical_basis[w], &sorted_assignment);
        }
    }
    Ok(FMatrix {
        matrix: HermitianMatrix::new(2, entries)?,
        quantum_basis,
        classical_basis,
    })
}

/// Two computational basis states spanning the support of `states`, if the
/// support is that small.
fn basis_pair(states: &[PureState]) -> Option<[PureState; 2]> {
    let k = states[0].n();
    let support: Vec<usize> = (0..1usize << k)
        .filter(|&i| states.iter().any(|s| s.amplitudes()[i].norm() > 1e-9))
        .collect();
    (support.len() == 2).then(|| {
        [
            PureState::basis(k, support[0]),
            PureState::basis(k, support[1]),
        ]
    })
}

fn canonical_phase(s: &PureState) -> PureState {
    let big = s
        .amplitudes()
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("non-empty");
    let phase = big.conj() / big.norm();
    let amps = s.amplitudes().iter().map(|a| a * phase).collect();
    PureState::normalized(s.n(), amps).expect("normalised input")
}

/// `sqrt(2) (<u|_{on} ⊗ I) |psi>`, a state on `rest`.
fn contract(psi: &PureState, on: &[usize], u: &PureState, rest: &[usize]) -> PureState {
    let n = psi.n();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << rest.len()];
    for (idx, a) in psi.amplitudes().iter().enumerate() {
        amps[gather(idx, rest, n)] += u.amplitudes()[gather(idx, on, n)].conj() * a;
    }
    PureState::normalized(rest.len(), amps).expect("rank-2 split has non-zero overlap")
}

/// `phi(|a><b|) = <b| R |a>` with `R = ⊗_k (I + v1 X + v2 Y + v3 Z) / 2`.
fn realism_functional(
    a: &PureState,
    b: &PureState,
    assignment: &[ClassicalAssignment],
) -> Complex64 {
    let k = a.n();
    let mut amps = a.amplitudes().to_vec();
    for (q, asg) in assignment.iter().enumerate() {
        let [v1, v2, v3] = asg.values().map(|v| v as f64);
        let half = 0.5;
        let r = [
            [
                Complex64::new(half * (1.0 + v3), 0.0),
                Complex64::new(half * v1, -half * v2),
            ],
            [
                Complex64::new(half * v1, half * v2),
                Complex64::new(half * (1.0 - v3), 0.0),
            ],
        ];
        let stride = 1usize << (k - 1 - q);
        for base in 0..amps.len() {
            if base & stride != 0 {
                continue;
            }
            let (x0, x1) = (amps[base], amps[base | stride]);
            amps[base] = r[0][0] * x0 + r[0][1] * x1;
            amps[base | stride] = r[1][0] * x0 + r[1][1] * x1;
        }
    }
    b.amplitudes()
        .iter()
        .zip(&amps)
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// Inferred number of classical nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeCount {
    Zero,
    Exactly(u32),
    /// Fidelity at or below the last tabulated threshold.
    AtLeast(u32),
}

impl NodeCount {
    /// The count when it is determined.
    pub fn value(self) -> Option<u32> {
        match self {
            NodeCount::Zero => Some(0),
            NodeCount::Exactly(n) => Some(n),
            NodeCount::AtLeast(_) => None,
        }
    }
}

impl fmt::Display for NodeCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeCount::Zero => write!(f, "zero"),
            NodeCount::Exactly(n) => write!(f, "{n}"),
            NodeCount::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

impl FromStr for NodeCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad node count {s:?}"));
        if s == "zero" {
            Ok(NodeCount::Zero)
        } else if let Some(rest) = s.strip_prefix(">=") {
            rest.parse().map(NodeCount::AtLeast).map_err(|_| bad())
        } else {
            s.parse().map(NodeCount::Exactly).map_err(|_| bad())
        }
    }
}

impl Serialize for NodeCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountVerdict {
    pub n_c_inferred: NodeCount,
    /// `F > 1/2`.
    pub ew_violated: bool,
    /// `F > F_1`.
    pub steering_confirmed: bool,
    /// `(F - nearest threshold below F) / std_error`; `None` for exact
    /// estimates. Below the last tabulated threshold the limit 1/2 is used.
    pub margin_sigma: Option<f64>,
}

/// Slack in the threshold comparisons of [`count_classical_nodes`], so that
/// a fidelity equal to `F_n` up to rounding is counted as `n`.
pub const COUNT_TOLERANCE: f64 = 1e-12;

/// `F > F_1` gives zero; `F_{n+1} < F <= F_n` gives `n`; `F <= F_{n_max}`
/// is indeterminate. Each comparison allows [`COUNT_TOLERANCE`].
pub fn count_classical_nodes(f: &FidelityEstimate, table: &ThresholdTable) -> CountVerdict {
    let v = f.value;
    let n_max = table.n_max();
    let f1 = table.get(1).expect("table has F_1");
    let above = |t: f64| v > t + COUNT_TOLERANCE;
    let (count, lower) = if above(f1) {
        (NodeCount::Zero, f1)
    } else if let Some(n) = (1..n_max).find(|&n| above(table.get(n + 1).expect("in range"))) {
        (NodeCount::Exactly(n), table.get(n + 1).expect("in range"))
    } else {
        (NodeCount::AtLeast(n_max), 0.5)
    };
    CountVerdict {
        n_c_inferred: count,
        ew_violated: v > 0.5,
        steering_confirmed: above(f1),
        margin_sigma: (f.std_error > 0.0).then(|| (v - lower) / f.std_error),
    }
}

/// What a significance ratio is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignificanceKind {
    /// `(F - 1/2) / E`.
    EntanglementWitness,
    /// `(F - F_{n_c - 1}) / E`, with `F_0 = 1`.
    Count(u32),
}

pub fn significance(f: &FidelityEstimate, kind: SignificanceKind) -> Result<f64> {
    if f.std_error.is_nan() || f.std_error <= 0.0 {
        return Err(Error::UndefinedSignificance);
    }
    let reference = match kind {
        SignificanceKind::EntanglementWitness => 0.5,
        SignificanceKind::Count(0) => {
            return Err(Error::Domain("S(n_c) needs n_c >= 1".into()));
        }
        SignificanceKind::Count(1) => 1.0,
        SignificanceKind::Count(n) => threshold_closed_form(n - 1)?,
    };
    Ok((f.value - reference) / f.std_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::state::build_graph_state;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn eta(e: u8) -> ClassicalAssignment {
        ClassicalAssignment::from_eta(e).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let f = |n| threshold_closed_form(n).unwrap();
        assert!((f(1) - 0.683013).abs() < 5e-7);
        assert!((f(2) - 0.603553).abs() < 5e-7);
        assert!((f(50) - 0.5).abs() < 1e-7);
        // independent evaluation of the unsimplified formula
        for n in 1..=40u32 {
            let raw = (1.0 + (-(n as f64) / 2.0).exp2() * (4.0 + (n as f64).exp2()).sqrt()) / 4.0;
            assert!((f(n) - raw).abs() < 1e-15);
        }
        for n in 1..=60 {
            assert!(f(n + 1) <= f(n));
            let e = |n| threshold_excess(n).unwrap();
            assert!(e(n + 1) < e(n));
            assert!((e(n) - e(n + 1) * 2.0).abs() < e(n) * 0.5);
        }
        for n in 1..=40 {
            assert!(f(n + 1) < f(n));
        }
        assert!(matches!(threshold_closed_form(0), Err(Error::Domain(_))));
    }

    #[test]
    fn table() {
        let t = ThresholdTable::new(6).unwrap();
        assert_eq!(t.n_max(), 6);
        assert_eq!(t.get(0), None);
        assert_eq!(t.get(7), None);
        assert!(t
            .iter()
            .all(|(n, f)| f > 0.5 && f <= t.get(1).unwrap() && n >= 1));
        assert!(ThresholdTable::new(0).is_err());
    }

    #[test]
    fn bruteforce_three_star_leaf() {
        let t: Target = Graph::star(3, 2).unwrap().into();
        let r = threshold_bruteforce(&t, &[2]).unwrap();
        assert!((r.value - threshold_closed_form(1).unwrap()).abs() < 1e-12);
        // every assignment reaches F_1 when the centre is classical
        assert_eq!(r.assignment, vec![eta(1)]);
        let leaf = threshold_bruteforce(&t, &[0]).unwrap();
        assert!((leaf.value - threshold_closed_form(1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bruteforce_three_star_both_leaves() {
        let t: Target = Graph::star(3, 2).unwrap().into();
        let r = threshold_bruteforce(&t, &[0, 1]).unwrap();
        let f2 = threshold_closed_form(2).unwrap();
        assert!((r.value - f2).abs() < 1e-12);
        // the tie-break picks the first maximiser; (v3, v3) is one of them
        assert_eq!(r.assignment, vec![eta(1), eta(1)]);
        let fm = f_matrix(&t, &[0, 1], &[eta(3), eta(3)]).unwrap();
        assert!((fm.optimum().unwrap().0 - f2).abs() < 1e-12);
    }

    #[test]
    fn worked_f_matrices() {
        let t: Target = Graph::star(3, 2).unwrap().into();
        let one = f_matrix(&t, &[2], &[eta(1)]).unwrap().matrix;
        let want = [c(0.5, 0.0), c(0.25, 0.25), c(0.25, -0.25), c(0.0, 0.0)];
        for (g, w) in one.entries().iter().zip(want) {
            assert!((g - w).norm() < 1e-12, "{g} vs {w}");
        }
        let two = f_matrix(&t, &[0, 1], &[eta(3), eta(3)]).unwrap().matrix;
        let want = [c(0.5, 0.0), c(0.0, 0.25), c(0.0, -0.25), c(0.0, 0.0)];
        for (g, w) in two.entries().iter().zip(want) {
            assert!((g - w).norm() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn ghz_f_matrix_all_plus() {
        for nc in 1..=4usize {
            let n = nc + 2;
            let t = Target::ghz(n).unwrap();
            let v_c: Vec<usize> = (n - nc..n).collect();
            let m = f_matrix(&t, &v_c, &vec![eta(1); nc]).unwrap().matrix;
            let f01 = c(1.0, 1.0).powu(nc as u32) * (-(nc as f64 + 1.0)).exp2();
            assert!((m.get(0, 0) - c(0.5, 0.0)).norm() < 1e-12);
            assert!((m.get(0, 1) - f01).norm() < 1e-12);
            assert!((m.get(1, 0) - f01.conj()).norm() < 1e-12);
            assert!(m.get(1, 1).norm() < 1e-12);
        }
    }

    #[test]
    fn f_matrix_rejects_higher_rank() {
        let t: Target = Graph::ring(5).unwrap().into();
        assert!(matches!(
            f_matrix(&t, &[0, 1], &[eta(1), eta(1)]),
            Err(Error::UnsupportedBipartition { rank: 4 })
        ));
    }

    #[test]
    fn f_matrix_agrees_with_contracted_operator() {
        // every assignment, on splits of rank 2
        let cases: Vec<(Target, Vec<usize>)> = vec![
            (Graph::star(4, 0).unwrap().into(), vec![0]),
            (Graph::star(4, 0).unwrap().into(), vec![1, 3]),
            (Graph::chain(4).unwrap().into(), vec![0]),
            (Graph::chain(4).unwrap().into(), vec![0, 1]),
            (Target::ghz(5).unwrap(), vec![1, 4]),
        ];
        for (t, v_c) in cases {
            let group = enumerate_stabilizer(&t, 24).unwrap();
            let v_q: Vec<usize> = (0..t.n()).filter(|v| !v_c.contains(v)).collect();
            for index in 0..8usize.pow(v_c.len() as u32) {
                let a = decode_assignment(index, v_c.len());
                let d = 1usize << v_q.len();
                let mut m = vec![c(0.0, 0.0); d * d];
                for (coef, p) in group.terms() {
                    let s: f64 = v_c
                        .iter()
                        .zip(&a)
                        .map(|(&k, asg)| asg.outcome(p.letter(k)) as f64)
                        .product();
                    p.restrict(&v_q)
                        .for_each_entry(|r, col, v| m[r * d + col] += v * coef * s);
                }
                let full = hermitian_eigs(&HermitianMatrix::new(d, m).unwrap()).max().0;
                let small = f_matrix(&t, &v_c, &a).unwrap().optimum().unwrap().0;
                assert!(
                    (full - small).abs() < 1e-10,
                    "{v_c:?} {a:?}: {full} vs {small}"
                );
            }
        }
    }

    #[test]
    fn stars_match_closed_form() {
        for n in 3..=6 {
            for center in [0, n - 1] {
                let t: Target = Graph::star(n, center).unwrap().into();
                for nc in 1..=3.min(n - 1) {
                    for v_c in combinations(n, nc) {
                        let r = threshold_bruteforce(&t, &v_c).unwrap();
                        let want = threshold_closed_form(nc as u32).unwrap();
                        assert!((r.value - want).abs() < 1e-9, "star {n}/{center} {v_c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn rings_without_rank_two_splits_stay_below_closed_form() {
        // no split of a 5- or 6-ring into 2 or 3 classical nodes has Schmidt
        // rank 2; the brute-force maximum is strictly below F_{n_c}
        for n in [5, 6] {
            let t: Target = Graph::ring(n).unwrap().into();
            let psi = build_graph_state(t.graph()).unwrap();
            for (nc, expected) in [(2, (2.0 + 3f64.sqrt()) / 8.0), (3, 0.375)] {
                for v_c in combinations(n, nc) {
                    assert!(schmidt_decompose(&psi, &v_c).unwrap().rank() > 2);
                }
                let r = threshold_bruteforce_max(&t, nc).unwrap();
                assert!(
                    (r.value - expected).abs() < 1e-10,
                    "ring {n}, n_c {nc}: {}",
                    r.value
                );
                assert!(r.value < threshold_closed_form(nc as u32).unwrap());
            }
        }
    }

    #[test]
    fn bruteforce_state_achieves_value() {
        use crate::fidelity::fidelity_exact;
        use crate::hybrid::HybridNetwork;
        let t: Target = Graph::chain(5).unwrap().into();
        let r = threshold_bruteforce(&t, &[1, 3]).unwrap();
        let net =
            HybridNetwork::with_assignments(5, &r.v_c, &r.assignment, r.state.clone()).unwrap();
        let f = fidelity_exact(&net, &t).unwrap().value;
        assert!((f - r.value).abs() < 1e-10);
    }

    #[test]
    fn bruteforce_caps_and_validation() {
        let t: Target = Graph::chain(12).unwrap().into();
        assert!(matches!(
            threshold_bruteforce(&t, &[0]),
            Err(Error::ResourceCap { .. })
        ));
        let t: Target = Graph::chain(9).unwrap().into();
        assert!(matches!(
            threshold_bruteforce_max(&t, 1),
            Err(Error::ResourceCap { .. })
        ));
        let t: Target = Graph::chain(4).unwrap().into();
        assert!(threshold_bruteforce(&t, &[0, 0]).is_err());
        assert!(threshold_bruteforce(&t, &[4]).is_err());
    }

    #[test]
    fn combinations_lexicographic() {
        assert_eq!(
            combinations(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }

    fn est(value: f64, std_error: f64) -> FidelityEstimate {
        FidelityEstimate {
            value,
            std_error,
            n_settings: 1,
            shots_per_setting: 1,
        }
    }

    #[test]
    fn counting() {
        let table = ThresholdTable::new(6).unwrap();
        let v = count_classical_nodes(&est(0.792, 0.006), &table);
        assert_eq!(v.n_c_inferred, NodeCount::Zero);
        assert!(v.ew_violated && v.steering_confirmed);
        assert!(v.margin_sigma.unwrap() > 18.0);

        let v = count_classical_nodes(&est(0.538, 0.007), &table);
        assert_eq!(v.n_c_inferred, NodeCount::Exactly(3));
        assert!(v.ew_violated && !v.steering_confirmed);

        let f1 = threshold_closed_form(1).unwrap();
        let v = count_classical_nodes(&FidelityEstimate::exact(f1), &table);
        assert_eq!(v.n_c_inferred, NodeCount::Exactly(1));
        assert_eq!(v.margin_sigma, None);
        let v = count_classical_nodes(&FidelityEstimate::exact(f1 + 1e-15), &table);
        assert_eq!(v.n_c_inferred, NodeCount::Exactly(1));
        assert!(!v.steering_confirmed);

        let v = count_classical_nodes(&FidelityEstimate::exact(0.45), &table);
        assert_eq!(v.n_c_inferred, NodeCount::AtLeast(6));
        assert!(!v.ew_violated);

        // exact thresholds count themselves
        for n in 1..=6 {
            let f = FidelityEstimate::exact(threshold_closed_form(n).unwrap());
            let want = if n < 6 {
                NodeCount::Exactly(n)
            } else {
                NodeCount::AtLeast(6)
            };
            assert_eq!(count_classical_nodes(&f, &table).n_c_inferred, want);
        }
        let big = ThresholdTable::new(7).unwrap();
        let f6 = FidelityEstimate::exact(threshold_closed_form(6).unwrap());
        assert_eq!(
            count_classical_nodes(&f6, &big).n_c_inferred,
            NodeCount::Exactly(6)
        );
    }

    #[test]
    fn node_count_text_round_trip() {
        for c in [
            NodeCount::Zero,
            NodeCount::Exactly(3),
            NodeCount::AtLeast(18),
        ] {
            assert_eq!(c.to_string().parse::<NodeCount>().unwrap(), c);
        }
        assert!("three".parse::<NodeCount>().is_err());
    }

    #[test]
    fn significance_ratios() {
        let s = significance(&est(0.792, 0.006), SignificanceKind::EntanglementWitness).unwrap();
        assert!((s - 48.666_666).abs() < 1e-3);
        let s = significance(&est(0.538, 0.007), SignificanceKind::EntanglementWitness).unwrap();
        assert!((s - 5.428_571).abs() < 1e-3);
        let s = significance(&est(0.5, 0.01), SignificanceKind::EntanglementWitness).unwrap();
        assert_eq!(s, 0.0);
        let s = significance(&est(0.6, 0.01), SignificanceKind::Count(2)).unwrap();
        assert!((s - (0.6 - threshold_closed_form(1).unwrap()) / 0.01).abs() < 1e-12);
        let s = significance(&est(0.9, 0.01), SignificanceKind::Count(1)).unwrap();
        assert!((s + 10.0).abs() < 1e-9);
        assert_eq!(
            significance(
                &FidelityEstimate::exact(0.7),
                SignificanceKind::EntanglementWitness
            ),
            Err(Error::UndefinedSignificance)
        );
        assert!(significance(&est(0.7, 0.1), SignificanceKind::Count(0)).is_err());
    }
}
