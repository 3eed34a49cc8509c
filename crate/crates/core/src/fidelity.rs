//! Network fidelity `F = tr(rho |G><G|)` as a weighted sum of Pauli
//! correlators, and the grouping of those correlators into product
//! measurement settings.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::graph::Target;
use crate::hybrid::HybridNetwork;
use crate::pauli::{enumerate_stabilizer, Pauli, PauliString, Phase, DEFAULT_ENUMERATION_CAP};

/// Largest network for which [`setting_cover`] runs; the greedy cover is
/// quadratic in the group order.
pub const DEFAULT_COVER_CAP: usize = 14;

/// Quantum registers up to this size memoise expectations in a flat table
/// of `4^n_q` entries; larger ones use a hash map.
const FLAT_MEMO_QUBITS: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_settings: usize,
    /// 0 for exact evaluation.
    pub shots_per_setting: u64,
}

impl FidelityEstimate {
    pub fn exact(value: f64) -> Self {
        FidelityEstimate {
            value,
            std_error: 0.0,
            n_settings: 0,
            shots_per_setting: 0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.shots_per_setting == 0
    }
}

/// One local basis per node, each X, Y or Z.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MeasurementSetting {
    bases: Vec<Pauli>,
}

impl MeasurementSetting {
    pub fn new(bases: Vec<Pauli>) -> Result<Self> {
        if bases.contains(&Pauli::I) {
            return Err(Error::InvalidParameter(
                "a measurement setting needs X, Y or Z at every node".into(),
            ));
        }
        Ok(MeasurementSetting { bases })
    }

    pub fn n(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[Pauli] {
        &self.bases
    }

    pub fn basis(&self, node: usize) -> Pauli {
        self.bases[node]
    }

    /// True when every non-identity letter of `p` matches this setting.
    pub fn covers(&self, p: &PauliString) -> bool {
        p.n() == self.n()
            && (0..self.n()).all(|q| {
                let l = p.letter(q);
                l == Pauli::I || l == self.bases[q]
            })
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bases
            .iter()
            .try_for_each(|b| write!(f, "{}", b.symbol()))
    }
}

impl FromStr for MeasurementSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bases = s
            .chars()
            .map(|c| match c {
                'X' | 'x' => Ok(Pauli::X),
                'Y' | 'y' => Ok(Pauli::Y),
                'Z' | 'z' => Ok(Pauli::Z),
                other => Err(Error::InvalidParameter(format!(
                    "unexpected basis {other:?} in setting {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        MeasurementSetting::new(bases)
    }
}

impl Serialize for MeasurementSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MeasurementSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A setting together with the stabilizer terms `(coefficient, string)` it
/// is responsible for. Strings carry phase `+1`; signs live in the
/// coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CoveredSetting {
    pub setting: MeasurementSetting,
    pub terms: Vec<(f64, PauliString)>,
}

/// Greedy cover of the non-identity stabilizer terms by product settings.
///
/// Terms are visited by decreasing weight (ties in enumeration order). Each
/// still-uncovered term opens a setting; its identity positions are filled
/// left to right with the letter most common among the uncovered terms that
/// remain compatible, ties broken X < Y < Z and all-identity columns
/// defaulting to Z. Every term lands in exactly one setting.
pub fn setting_cover(target: &Target) -> Result<Vec<CoveredSetting>> {
    check_cap("cover qubits", target.n(), DEFAULT_COVER_CAP)?;
    let group = enumerate_stabilizer(target, DEFAULT_ENUMERATION_CAP)?;
    let n = target.n();
    let mut terms: Vec<(f64, PauliString)> = group
        .terms()
        .filter(|(_, p)| !p.is_identity_letters())
        .collect();
    // stable sort keeps enumeration order among equal weights
    terms.sort_by_key(|(_, p)| std::cmp::Reverse(p.weight()));

    let mut covered = vec![false; terms.len()];
    let mut out = Vec::new();
    for i in 0..terms.len() {
        if covered[i] {
            continue;
        }
        let mut bases: Vec<Pauli> = terms[i].1.letters();
        let compatible = |bases: &[Pauli], p: &PauliString| {
            (0..n).all(|q| {
                let (b, l) = (bases[q], p.letter(q));
                b == Pauli::I || l == Pauli::I || b == l
            })
        };
        for q in 0..n {
            if bases[q] != Pauli::I {
                continue;
            }
            let mut counts = [0usize; 4];
            for (j, (_, p)) in terms.iter().enumerate() {
                if !covered[j] && compatible(&bases, p) {
                    counts[p.letter(q).index()] += 1;
                }
            }
            let best = [Pauli::X, Pauli::Y, Pauli::Z]
                .into_iter()
                .rev()
                .max_by_key(|l| counts[l.index()])
                .filter(|l| counts[l.index()] > 0)
                .unwrap_or(Pauli::Z);
            bases[q] = best;
        }
        let setting = MeasurementSetting::new(bases)?;
        let mut mine = Vec::new();
        for (j, t) in terms.iter().enumerate() {
            if !covered[j] && setting.covers(&t.1) {
                covered[j] = true;
                mine.push(*t);
            }
        }
        out.push(CoveredSetting {
            setting,
            terms: mine,
        });
    }
    Ok(out)
}

/// `value = sum c_i e_i`, `std_error = sqrt(sum c_i^2 err_i^2)`.
pub fn assemble_fidelity(
    coefficients: &[f64],
    expectations: &[f64],
    errors: &[f64],
) -> Result<FidelityEstimate> {
    if coefficients.len() != expectations.len() {
        return Err(Error::DimensionMismatch {
            expected: coefficients.len(),
            found: expectations.len(),
        });
    }
    if coefficients.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: coefficients.len(),
            found: errors.len(),
        });
    }
    let value = coefficients
        .iter()
        .zip(expectations)
        .map(|(c, e)| c * e)
        .sum();
    let var: f64 = coefficients
        .iter()
        .zip(errors)
        .map(|(c, e)| (c * e).powi(2))
        .sum();
    Ok(FidelityEstimate {
        value,
        std_error: var.sqrt(),
        n_settings: 0,
        shots_per_setting: 0,
    })
}

/// Exact fidelity of a hybrid network against `target`, summed over the
/// full stabilizer enumeration.
pub fn fidelity_exact(net: &HybridNetwork, target: &Target) -> Result<FidelityEstimate> {
    if net.n() != target.n() {
        return Err(Error::DimensionMismatch {
            expected: target.n(),
            found: net.n(),
        });
    }
    let group = enumerate_stabilizer(target, DEFAULT_ENUMERATION_CAP)?;
    let mut eval = HybridEvaluator::new(net);
    let mut sum = CompensatedSum::default();
    for (c, p) in group.terms() {
        sum.add(c * eval.eval(&p)?);
    }
    Ok(FidelityEstimate::exact(sum.value()))
}

/// Neumaier summation; plain accumulation of `2^N` terms loses about
/// `1e-11` at `N = 24`.
#[derive(Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Exact contribution of each setting of a cover.
pub fn exact_setting_table(
    net: &HybridNetwork,
    cover: &[CoveredSetting],
) -> Result<Vec<SettingEstimate>> {
    let mut eval = HybridEvaluator::new(net);
    cover
        .iter()
        .map(|cs| {
            let mut value = 0.0;
            for (c, p) in &cs.terms {
                value += c * eval.eval(p)?;
            }
            Ok(SettingEstimate {
                setting: cs.setting.to_string(),
                n_terms: cs.terms.len(),
                value,
                std_error: 0.0,
                shots: 0,
            })
        })
        .collect()
}

/// One row of a per-setting table: the summed contribution
/// `sum_{P in setting} c_P <P>` and its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingEstimate {
    pub setting: String,
    pub n_terms: usize,
    pub value: f64,
    pub std_error: f64,
    pub shots: u64,
}

/// Evaluates `<P>` on a hybrid network for many Hermitian strings with
/// phase `+1`, memoising the quantum factor by its restricted string.
pub(crate) struct HybridEvaluator<'a> {
    net: &'a HybridNetwork,
    classical: ClassicalFactor,
    memo: Memo,
}

enum ClassicalFactor {
    /// Nodes answering `-1` to X, Y and Z respectively.
    PointMasses {
        neg: [u64; 3],
    },
    General(Vec<(usize, [f64; 4])>),
}

enum Memo {
    Flat(Vec<f64>),
    Map(HashMap<u64, f64>),
}

impl<'a> HybridEvaluator<'a> {
    pub(crate) fn new(net: &'a HybridNetwork) -> Self {
        let point: Option<Vec<_>> = net
            .classical()
            .iter()
            .map(|c| c.as_point_mass().map(|a| (c.node, a)))
            .collect();
        let classical = match point {
            Some(list) => {
                let mut neg = [0u64; 3];
                for (node, a) in list {
                    for (m, v) in a.values().into_iter().enumerate() {
                        if v < 0 {
                            neg[m] |= 1 << node;
                        }
                    }
                }
                ClassicalFactor::PointMasses { neg }
            }
            None => ClassicalFactor::General(
                net.classical()
                    .iter()
                    .map(|c| {
                        let e = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z].map(|l| c.expectation(l));
                        (c.node, e)
                    })
                    .collect(),
            ),
        };
        let nq = net.n_q();
        let memo = if nq <= FLAT_MEMO_QUBITS {
            Memo::Flat(vec![f64::NAN; 1 << (2 * nq)])
        } else {
            Memo::Map(HashMap::new())
        };
        HybridEvaluator {
            net,
            classical,
            memo,
        }
    }

    /// `<P>` for a string with phase `+1`.
    pub(crate) fn eval(&mut self, p: &PauliString) -> Result<f64> {
        let classical = self.classical_factor(p);
        if classical == 0.0 {
            return Ok(0.0);
        }
        Ok(classical * self.quantum_factor(p)?)
    }

    fn classical_factor(&self, p: &PauliString) -> f64 {
        let (x, z) = (p.x_mask(), p.z_mask());
        match &self.classical {
            ClassicalFactor::PointMasses { neg } => {
                let flips = (x & !z & neg[0]) | (x & z & neg[1]) | (z & !x & neg[2]);
                if flips.count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            ClassicalFactor::General(list) => {
                let mut acc = 1.0;
                for &(node, e) in list {
                    acc *= e[p.letter(node).index()];
                    if acc == 0.0 {
                        break;
                    }
                }
                acc
            }
        }
    }

    fn quantum_factor(&mut self, p: &PauliString) -> Result<f64> {
        let v_q = self.net.v_q();
        let nq = v_q.len();
        let (x, z) = (p.x_mask(), p.z_mask());
        let (mut xq, mut zq) = (0u64, 0u64);
        for (j, &v) in v_q.iter().enumerate() {
            xq |= (x >> v & 1) << j;
            zq |= (z >> v & 1) << j;
        }
        let key = (xq << nq) | zq;
        let cached = match &self.memo {
            Memo::Flat(t) => t[key as usize],
            Memo::Map(m) => m.get(&key).copied().unwrap_or(f64::NAN),
        };
        if !cached.is_nan() {
            return Ok(cached);
        }
        let restricted = PauliString::from_masks(nq, xq, zq, Phase::ONE)?;
        let value = self.net.quantum().expectation(&restricted)?.re;
        match &mut self.memo {
            Memo::Flat(t) => t[key as usize] = value,
            Memo::Map(m) => {
                m.insert(key, value);
            }
        }
        Ok(value)
    }
}
