//! Signed multi-qubit Pauli operators and graph-state stabilizer groups.
//!
//! A [`PauliString`] on `n <= 64` qubits is stored as two bit masks plus a
//! power of `i`. Bit `k` of each mask refers to qubit `k`. The letter at a
//! qubit is read off the pair `(x, z)`: `(0,0) = I`, `(1,0) = X`,
//! `(1,1) = Y`, `(0,1) = Z`. `Y` is the literal Pauli `Y`, so the operator
//! represented is `i^phase * L_0 ⊗ L_1 ⊗ ...`.
//!
//! Dense helpers address basis states with qubit 0 as the most significant
//! bit of the index; [`index_mask`] converts between the two conventions.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{check_cap, Error, Result};
use crate::graph::{bits, Graph, Target};

/// Default ceiling on the number of qubits whose stabilizer group is enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Single-qubit Pauli letter, indexed `0..=3` as `I, X, Y, Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Pauli> {
        Pauli::ALL.get(i).copied()
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn to_bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn symbol(self) -> char {
        ['I', 'X', 'Y', 'Z'][self.index()]
    }

    /// 2x2 matrix, row major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// Power of `i`: `Phase(k)` is `i^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: u32) -> Phase {
        Phase((k % 4) as u8)
    }

    pub fn exponent(self) -> u32 {
        self.0 as u32
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `+1.0` or `-1.0` for real phases.
    pub fn sign(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        I_POWERS[self.0 as usize]
    }
}

const I_POWERS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// Maps a qubit mask (bit `k` = qubit `k`) to a basis-index mask where qubit 0
/// is the most significant of `n` bits.
#[inline]
pub fn index_mask(mask: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        mask.reverse_bits() >> (64 - n)
    }
}

#[inline]
fn parity(v: u64) -> u32 {
    v.count_ones() & 1
}

/// Signed tensor product of single-qubit Paulis.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= 64, "PauliString supports at most 64 qubits");
        PauliString {
            n,
            x: 0,
            z: 0,
            phase: Phase::ONE,
        }
    }

    /// Builds a string from raw masks. Bits above `n` are rejected.
    pub fn from_masks(n: usize, x: u64, z: u64, phase: Phase) -> Result<Self> {
        if n > 64 {
            return Err(Error::ResourceCap {
                what: "Pauli string length",
                requested: n,
                limit: 64,
            });
        }
        let valid = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if (x | z) & !valid != 0 {
            return Err(Error::InvalidParameter(format!(
                "mask bits outside {n} qubits"
            )));
        }
        Ok(PauliString { n, x, z, phase })
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut p = PauliString::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set_letter(q, l);
        }
        p
    }

    /// Single non-identity letter on qubit `q`.
    pub fn single(n: usize, q: usize, letter: Pauli) -> Self {
        let mut p = PauliString::identity(n);
        p.set_letter(q, letter);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    /// Mask of qubits carrying a non-identity letter.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn is_identity_letters(&self) -> bool {
        self.support() == 0
    }

    pub fn letter(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn set_letter(&mut self, q: usize, l: Pauli) {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        let (x, z) = l.to_bits();
        self.x = (self.x & !(1 << q)) | (x as u64) << q;
        self.z = (self.z & !(1 << q)) | (z as u64) << q;
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// True when the symplectic product of the two strings is even.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        parity(self.x & other.z) == parity(self.z & other.x)
    }

    /// Exact product `self * other`.
    pub fn try_mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(self.mul_unchecked(other))
    }

    // Letters are i^{|x&z|} X^x Z^z, and Z^a X^b = (-1)^{|a&b|} X^b Z^a.
    #[inline]
    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> PauliString {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = self.phase.exponent()
            + other.phase.exponent()
            + (self.x & self.z).count_ones()
            + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones()
            + 4 * 64
            - (x & z).count_ones();
        PauliString {
            n: self.n,
            x,
            z,
            phase: Phase::from_exponent(k),
        }
    }

    /// Conjugation by a Hadamard on each qubit of `mask`:
    /// `X <-> Z`, `Y -> -Y`.
    pub fn hadamard_conjugate(&self, mask: u64) -> PauliString {
        let flips = (self.x & self.z & mask).count_ones();
        let x = (self.x & !mask) | (self.z & mask);
        let z = (self.z & !mask) | (self.x & mask);
        PauliString {
            n: self.n,
            x,
            z,
            phase: Phase::from_exponent(self.phase.exponent() + 2 * flips),
        }
    }

    /// Calls `f(row, col, value)` for the one non-zero entry in every column
    /// of the dense matrix.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, Complex64)) {
        let xi = index_mask(self.x, self.n);
        let zi = index_mask(self.z, self.n);
        let base = self.phase.exponent() + (self.x & self.z).count_ones();
        for col in 0..1usize << self.n {
            let k = base + 2 * parity(zi & col as u64);
            f(col ^ xi as usize, col, I_POWERS[(k % 4) as usize]);
        }
    }

    /// `P |psi>` for an amplitude vector of length `2^n`.
    pub fn apply(&self, amplitudes: &[Complex64]) -> Result<Vec<Complex64>> {
        if amplitudes.len() != 1usize << self.n {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n,
                found: amplitudes.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
        self.for_each_entry(|row, col, v| out[row] = v * amplitudes[col]);
        Ok(out)
    }

    /// `<psi| P |psi>` without normalisation.
    pub fn expectation(&self, amplitudes: &[Complex64]) -> Result<Complex64> {
        if amplitudes.len() != 1usize << self.n {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n,
                found: amplitudes.len(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        self.for_each_entry(|row, col, v| acc += amplitudes[row].conj() * v * amplitudes[col]);
        Ok(acc)
    }

    /// Dense `2^n x 2^n` matrix, row major. Meant for checks at small `n`.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let d = 1usize << self.n;
        let mut m = vec![vec![Complex64::new(0.0, 0.0); d]; d];
        self.for_each_entry(|r, c, v| m[r][c] = v);
        m
    }

    /// Restriction to the qubits listed in `qubits`, in that order. The
    /// phase is kept.
    pub fn restrict(&self, qubits: &[usize]) -> PauliString {
        let mut x = 0u64;
        let mut z = 0u64;
        for (j, &q) in qubits.iter().enumerate() {
            x |= (self.x >> q & 1) << j;
            z |= (self.z >> q & 1) << j;
        }
        PauliString {
            n: qubits.len(),
            x,
            z,
            phase: self.phase,
        }
    }
}

/// `a * b` with exact phase.
pub fn pauli_multiply(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.try_mul(b)
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["+", "+i", "-", "-i"][self.phase.0 as usize];
        f.write_str(prefix)?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `[+|-][i]LETTERS`, e.g. `"-iXZY"` or `"IZZ"`.
    fn from_str(s: &str) -> Result<Self> {
        let (sign, rest) = match s.as_bytes().first() {
            Some(b'+') => (0, &s[1..]),
            Some(b'-') => (2, &s[1..]),
            _ => (0, s),
        };
        let (imag, letters) = match rest.strip_prefix('i') {
            Some(r) => (1, r),
            None => (0, rest),
        };
        let letters = letters
            .chars()
            .map(|c| match c {
                'I' | '_' | '.' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidParameter(format!(
                    "bad Pauli letter {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.len() > 64 {
            return Err(Error::ResourceCap {
                what: "Pauli string length",
                requested: letters.len(),
                limit: 64,
            });
        }
        Ok(PauliString::from_letters(&letters).with_phase(Phase::from_exponent(sign + imag)))
    }
}

/// Generators `K_a = X_a * prod_{b ~ a} Z_b` of the graph state's stabilizer.
pub fn graph_stabilizer_generators(g: &Graph) -> Vec<PauliString> {
    let n = g.n();
    (0..n)
        .map(|a| PauliString {
            n,
            x: 1 << a,
            z: g.neighbor_mask(a),
            phase: Phase::ONE,
        })
        .collect()
}

/// Commuting set of `n` independent Hermitian generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerGroup {
    n: usize,
    generators: Vec<PauliString>,
}

impl StabilizerGroup {
    /// Checks that the generators are Hermitian, pairwise commuting and that
    /// there are exactly `n` of them acting on `n` qubits. Independence is
    /// not checked.
    pub fn new(generators: Vec<PauliString>) -> Result<Self> {
        let n = generators.len();
        for g in &generators {
            if g.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.n(),
                });
            }
            if !g.is_hermitian() {
                return Err(Error::InvalidParameter(format!(
                    "generator {g} is not Hermitian"
                )));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if !a.commutes_with(b) {
                    return Err(Error::InvalidParameter(format!("{a} and {b} anticommute")));
                }
            }
        }
        Ok(StabilizerGroup { n, generators })
    }

    pub fn for_graph(g: &Graph) -> Self {
        StabilizerGroup {
            n: g.n(),
            generators: graph_stabilizer_generators(g),
        }
    }

    pub fn for_target(t: &Target) -> Self {
        let generators = graph_stabilizer_generators(t.graph())
            .into_iter()
            .map(|p| p.hadamard_conjugate(t.hadamards()))
            .collect();
        StabilizerGroup {
            n: t.n(),
            generators,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    /// Number of group elements, `2^n`.
    pub fn order(&self) -> u64 {
        1u64 << self.n
    }

    /// Product of the generators selected by the bits of `selector`.
    pub fn element(&self, selector: u64) -> PauliString {
        bits(selector).fold(PauliString::identity(self.n), |acc, j| {
            acc.mul_unchecked(&self.generators[j])
        })
    }

    /// All `2^n` elements in Gray-code order, one multiplication per step.
    pub fn elements(&self) -> Elements<'_> {
        self.elements_range(0, self.order())
    }

    /// Gray-code positions `start..end`, so disjoint ranges can be walked
    /// independently.
    pub fn elements_range(&self, start: u64, end: u64) -> Elements<'_> {
        let end = end.min(self.order());
        let start = start.min(end);
        Elements {
            group: self,
            pos: start,
            end,
            current: self.element(start ^ (start >> 1)),
        }
    }

    /// Terms of `|S><S| = 2^{-n} sum_S S` with each string's sign folded into
    /// a real coefficient; the returned strings carry phase `+1`.
    pub fn terms(&self) -> impl Iterator<Item = (f64, PauliString)> + '_ {
        let scale = (-(self.n as f64)).exp2();
        self.elements().map(move |p| fold_sign(scale, p))
    }

    pub fn terms_range(
        &self,
        start: u64,
        end: u64,
    ) -> impl Iterator<Item = (f64, PauliString)> + '_ {
        let scale = (-(self.n as f64)).exp2();
        self.elements_range(start, end)
            .map(move |p| fold_sign(scale, p))
    }
}

fn fold_sign(scale: f64, p: PauliString) -> (f64, PauliString) {
    let sign = p.phase().sign().expect("stabilizer elements are Hermitian");
    (sign * scale, p.with_phase(Phase::ONE))
}

/// Gray-code walk over a stabilizer group.
pub struct Elements<'a> {
    group: &'a StabilizerGroup,
    pos: u64,
    end: u64,
    current: PauliString,
}

impl Iterator for Elements<'_> {
    type Item = PauliString;

    fn next(&mut self) -> Option<PauliString> {
        if self.pos >= self.end {
            return None;
        }
        let out = self.current;
        self.pos += 1;
        if self.pos < self.end {
            let flip = self.pos.trailing_zeros() as usize;
            self.current = self.current.mul_unchecked(&self.group.generators[flip]);
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.pos) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Elements<'_> {}

/// The `2^N` terms `(±2^{-N}, S)` of the target projector, refusing targets
/// above `cap` qubits.
pub fn enumerate_stabilizer(target: &Target, cap: usize) -> Result<StabilizerGroup> {
    check_cap("enumerated qubits", target.n(), cap)?;
    Ok(StabilizerGroup::for_target(target))
}
