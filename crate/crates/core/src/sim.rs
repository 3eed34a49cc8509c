//! Shot-level simulation of the verification experiment: noise on the
//! quantum nodes, outcome sampling per measurement setting, and the
//! resulting fidelity estimate with its error bar.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::fidelity::{
    assemble_fidelity, fidelity_exact, setting_cover, CoveredSetting, FidelityEstimate,
    MeasurementSetting, SettingEstimate,
};
use crate::graph::Target;
use crate::hybrid::{ClassicalAssignment, HybridNetwork};
use crate::pauli::{Pauli, PauliString};
use crate::state::{hadamard, Ensemble, Gate, PureState};

/// Most branches [`apply_noise_exact`] will produce.
pub const MAX_EXACT_BRANCHES: usize = 1 << 16;
/// Most stored amplitudes (branches times dimension) it will produce.
pub const MAX_EXACT_AMPLITUDES: usize = 1 << 23;

/// Noise on the quantum nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// `p rho + (1 - p) I / 2^n`.
    White { p: f64 },
    /// Each qubit: `(1 - q) rho + q I / 2`.
    Depolarizing { q: f64 },
    /// Each qubit: `(1 - q/2) rho + (q/2) Z rho Z`; `q = 1` removes all
    /// coherence.
    Dephasing { q: f64 },
    /// Each qubit relaxes to `|0>` with probability `gamma`.
    AmplitudeDamping { gamma: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            NoiseSpec::White { p } => ("p", p),
            NoiseSpec::Depolarizing { q } | NoiseSpec::Dephasing { q } => ("q", q),
            NoiseSpec::AmplitudeDamping { gamma } => ("gamma", gamma),
        };
        if (0.0..=1.0).contains(&v) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "noise parameter {name} = {v} outside [0, 1]"
            )))
        }
    }
}

/// Exact noisy ensemble. White noise stays symbolic; per-qubit channels
/// expand every branch over its Kraus or Pauli branches, refusing
/// expansions above [`MAX_EXACT_BRANCHES`] or [`MAX_EXACT_AMPLITUDES`].
pub fn apply_noise_exact(ens: &Ensemble, spec: &NoiseSpec) -> Result<Ensemble> {
    spec.validate()?;
    let n = ens.n();
    match *spec {
        NoiseSpec::White { p } => ens.clone().depolarized(p),
        NoiseSpec::Depolarizing { q } => {
            let probs = [1.0 - 0.75 * q, q / 4.0, q / 4.0, q / 4.0];
            pauli_expand(ens, &probs)
        }
        NoiseSpec::Dephasing { q } => pauli_expand(ens, &[1.0 - q / 2.0, 0.0, 0.0, q / 2.0]),
        NoiseSpec::AmplitudeDamping { gamma } => {
            let (branches, mixed) = ens.clone().into_parts();
            let mut states: Vec<(f64, PureState)> = branches;
            if mixed > 0.0 {
                // I/2^n is a uniform mixture of basis states, which damping
                // keeps diagonal
                check_cap("exact noise branches", 1usize << n, MAX_EXACT_BRANCHES)?;
                let w = mixed / (1u64 << n) as f64;
                states.extend((0..1usize << n).map(|b| (w, PureState::basis(n, b))));
            }
            let per = 1usize << n;
            check_expansion(states.len().saturating_mul(per), n)?;
            let mut out = Vec::new();
            for (w, s) in states {
                for choice in 0..per {
                    let mut amps = s.amplitudes().to_vec();
                    for q in 0..n {
                        let k = damping_kraus(gamma, choice >> q & 1 == 1);
                        apply_raw(&mut amps, n, q, &k);
                    }
                    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                    if norm > 1e-300 {
                        out.push((w * norm, PureState::normalized(n, amps)?));
                    }
                }
            }
            Ensemble::with_mixed(n, out, 0.0)
        }
    }
}

fn check_expansion(branches: usize, n: usize) -> Result<()> {
    check_cap("exact noise branches", branches, MAX_EXACT_BRANCHES)?;
    check_cap(
        "exact noise amplitudes",
        branches.saturating_mul(1 << n),
        MAX_EXACT_AMPLITUDES,
    )
}

/// Every branch under every Pauli string with per-qubit letter
/// probabilities `probs` (indexed I, X, Y, Z).
fn pauli_expand(ens: &Ensemble, probs: &[f64; 4]) -> Result<Ensemble> {
    let n = ens.n();
    let letters: Vec<usize> = (0..4).filter(|&l| probs[l] > 0.0).collect();
    let per = letters.len().pow(n as u32);
    check_expansion(ens.branches().len().saturating_mul(per), n)?;
    let mut out = Vec::new();
    for (w, s) in ens.branches() {
        for code in 0..per {
            let mut c = code;
            let mut weight = *w;
            let mut word = Vec::with_capacity(n);
            for _ in 0..n {
                let l = letters[c % letters.len()];
                c /= letters.len();
                weight *= probs[l];
                word.push(Pauli::from_index(l).expect("letter"));
            }
            let p = PauliString::from_letters(&word);
            out.push((weight, PureState::normalized(n, p.apply(s.amplitudes())?)?));
        }
    }
    Ensemble::with_mixed(n, out, ens.mixed_weight())
}

fn damping_kraus(gamma: f64, jump: bool) -> Gate {
    let z = Complex64::new(0.0, 0.0);
    if jump {
        [[z, Complex64::new(gamma.sqrt(), 0.0)], [z, z]]
    } else {
        [
            [Complex64::new(1.0, 0.0), z],
            [z, Complex64::new((1.0 - gamma).sqrt(), 0.0)],
        ]
    }
}

fn apply_raw(amps: &mut [Complex64], n: usize, q: usize, g: &Gate) {
    let stride = 1usize << (n - 1 - q);
    for base in 0..amps.len() {
        if base & stride == 0 {
            let (a0, a1) = (amps[base], amps[base | stride]);
            amps[base] = g[0][0] * a0 + g[0][1] * a1;
            amps[base | stride] = g[1][0] * a0 + g[1][1] * a1;
        }
    }
}

/// Stochastic noisy ensemble: every branch is replaced by `trajectories`
/// equally weighted samples of the channel. White noise inserts a uniformly
/// random Pauli string with probability `1 - p`; per-qubit channels pick
/// one Kraus or Pauli branch per qubit with its Born weight. The ensemble
/// average is the exact channel output.
pub fn apply_noise(
    ens: &Ensemble,
    spec: &NoiseSpec,
    seed: u64,
    trajectories: usize,
) -> Result<Ensemble> {
    spec.validate()?;
    if trajectories == 0 {
        return Err(Error::InvalidParameter(
            "need at least one trajectory".into(),
        ));
    }
    let n = ens.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut branches, mut mixed) = ens.clone().into_parts();
    if matches!(spec, NoiseSpec::AmplitudeDamping { .. }) && mixed > 0.0 {
        // damping does not preserve I/2^n; sample it as basis states
        let w = mixed / trajectories as f64;
        for _ in 0..trajectories {
            branches.push((w, PureState::basis(n, rng.random_range(0..1usize << n))));
        }
        mixed = 0.0;
    }
    let mut out = Vec::with_capacity(branches.len() * trajectories);
    for (w, s) in &branches {
        for _ in 0..trajectories {
            let mut amps = s.amplitudes().to_vec();
            match *spec {
                NoiseSpec::White { p } => {
                    if !rng.random_bool(p) {
                        let word: Vec<Pauli> = (0..n)
                            .map(|_| Pauli::from_index(rng.random_range(0..4)).expect("letter"))
                            .collect();
                        amps = PauliString::from_letters(&word).apply(&amps)?;
                    }
                }
                NoiseSpec::Depolarizing { q } => {
                    for k in 0..n {
                        if rng.random_bool(q) {
                            let l = Pauli::from_index(rng.random_range(0..4)).expect("letter");
                            amps = PauliString::single(n, k, l).apply(&amps)?;
                        }
                    }
                }
                NoiseSpec::Dephasing { q } => {
                    for k in 0..n {
                        if rng.random_bool(q / 2.0) {
                            amps = PauliString::single(n, k, Pauli::Z).apply(&amps)?;
                        }
                    }
                }
                NoiseSpec::AmplitudeDamping { gamma } => {
                    for k in 0..n {
                        let stride = 1usize << (n - 1 - k);
                        let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                        let excited: f64 = amps
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| i & stride != 0)
                            .map(|(_, a)| a.norm_sqr())
                            .sum();
                        let p_jump = (gamma * excited / total).clamp(0.0, 1.0);
                        apply_raw(
                            &mut amps,
                            n,
                            k,
                            &damping_kraus(gamma, rng.random_bool(p_jump)),
                        );
                    }
                }
            }
            out.push((w / trajectories as f64, PureState::normalized(n, amps)?));
        }
    }
    Ensemble::with_mixed(n, out, mixed)
}

/// Applies noise to the quantum nodes of a network, exactly when the
/// expansion fits the caps and by `trajectories` samples otherwise.
pub fn noisy_network(
    net: &HybridNetwork,
    spec: &NoiseSpec,
    seed: u64,
    trajectories: usize,
) -> Result<HybridNetwork> {
    let quantum = match apply_noise_exact(net.quantum(), spec) {
        Ok(e) => e,
        Err(Error::ResourceCap { .. }) => apply_noise(net.quantum(), spec, seed, trajectories)?,
        Err(e) => return Err(e),
    };
    net.clone().with_quantum(quantum)
}

/// White-noise weight `p` for which `p rho_Q + (1 - p) I / 2^{n_q}` on the
/// quantum nodes gives exact fidelity `f_target`. Fidelity is affine in
/// `p`, so this is a single interpolation.
pub fn white_noise_for_fidelity(
    net: &HybridNetwork,
    target: &Target,
    f_target: f64,
) -> Result<f64> {
    let f1 = fidelity_exact(net, target)?.value;
    let mixed = net
        .clone()
        .with_quantum(Ensemble::maximally_mixed(net.n_q()))?;
    let f0 = fidelity_exact(&mixed, target)?.value;
    if (f1 - f0).abs() < 1e-15 {
        return Err(Error::Domain(
            "fidelity does not depend on the noise weight".into(),
        ));
    }
    let p = (f_target - f0) / (f1 - f0);
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::Domain(format!(
            "fidelity {f_target} is outside the reachable range [{}, {}]",
            f0.min(f1),
            f0.max(f1)
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// SplitMix64 finaliser of `seed + (index + 1) * 0x9E3779B97F4A7C15`: the
/// seed of the `index`-th independent stream derived from `seed`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcomes of repeated measurements in one setting. Shot `t` is stored as
/// a mask whose bit `k` is set when node `k` reported `-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotRecord {
    pub setting: MeasurementSetting,
    pub outcomes: Vec<u64>,
    pub seed: u64,
}

impl ShotRecord {
    pub fn shots(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcome(&self, shot: usize, node: usize) -> i8 {
        if self.outcomes[shot] >> node & 1 == 1 {
            -1
        } else {
            1
        }
    }

    /// Mean of the product of outcomes over the support of `p`.
    pub fn correlator(&self, p: &PauliString) -> f64 {
        let support = p.support();
        let sum: i64 = self
            .outcomes
            .iter()
            .map(|m| {
                if (m & support).count_ones().is_multiple_of(2) {
                    1
                } else {
                    -1
                }
            })
            .sum();
        sum as f64 / self.outcomes.len() as f64
    }
}

/// Draws `shots` outcomes of `setting` on `net`.
///
/// Quantum nodes: the ensemble's Born distribution after rotating each
/// qubit's measurement basis onto Z (X by H, Y by H S^dagger), sampled by
/// inverting the cumulative distribution. Classical nodes: an assignment is
/// drawn from the node's distribution each shot and the queried value
/// broadcast.
pub fn sample_setting(
    net: &HybridNetwork,
    setting: &MeasurementSetting,
    shots: usize,
    seed: u64,
) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(Error::InvalidParameter("need at least one shot".into()));
    }
    if setting.n() != net.n() {
        return Err(Error::DimensionMismatch {
            expected: net.n(),
            found: setting.n(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v_q = net.v_q();
    let nq = v_q.len();
    let probs = rotated_probabilities(
        net.quantum(),
        &v_q.iter().map(|&v| setting.basis(v)).collect::<Vec<_>>(),
    );
    let quantum = WeightedIndex::new(&probs)
        .map_err(|e| Error::InvalidParameter(format!("Born distribution: {e}")))?;
    // dense index -> node mask
    let masks: Vec<u64> = (0..1usize << nq)
        .map(|idx| {
            v_q.iter()
                .enumerate()
                .filter(|(j, _)| idx >> (nq - 1 - j) & 1 == 1)
                .fold(0u64, |m, (_, &v)| m | 1 << v)
        })
        .collect();

    enum Node {
        Fixed(u64),
        Random(usize, WeightedIndex<f64>, Pauli),
    }
    let mut fixed = 0u64;
    let mut random = Vec::new();
    for c in net.classical() {
        let letter = setting.basis(c.node);
        match c.as_point_mass() {
            Some(a) => {
                if a.outcome(letter) < 0 {
                    fixed |= 1 << c.node;
                }
            }
            None => {
                let w = WeightedIndex::new(c.distribution)
                    .map_err(|e| Error::InvalidParameter(format!("node {}: {e}", c.node)))?;
                random.push(Node::Random(c.node, w, letter));
            }
        }
    }
    random.push(Node::Fixed(fixed));

    let mut outcomes = Vec::with_capacity(shots);
    for _ in 0..shots {
        let mut m = masks[quantum.sample(&mut rng)];
        for node in &random {
            match node {
                Node::Fixed(f) => m |= f,
                Node::Random(k, w, letter) => {
                    let a = ClassicalAssignment::from_eta(w.sample(&mut rng) as u8 + 1)?;
                    if a.outcome(*letter) < 0 {
                        m |= 1 << k;
                    }
                }
            }
        }
        outcomes.push(m);
    }
    Ok(ShotRecord {
        setting: setting.clone(),
        outcomes,
        seed,
    })
}

/// Outcome distribution of the ensemble measured in the product basis
/// `bases` (one per qubit).
fn rotated_probabilities(ens: &Ensemble, bases: &[Pauli]) -> Vec<f64> {
    let n = ens.n();
    let h = hadamard();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let hs_dag: Gate = [
        [Complex64::new(s, 0.0), Complex64::new(0.0, -s)],
        [Complex64::new(s, 0.0), Complex64::new(0.0, s)],
    ];
    let mut out = vec![ens.mixed_weight() / (1u64 << n) as f64; 1 << n];
    for (w, st) in ens.branches() {
        let mut amps = st.amplitudes().to_vec();
        for (q, b) in bases.iter().enumerate() {
            match b {
                Pauli::X => apply_raw(&mut amps, n, q, &h),
                Pauli::Y => apply_raw(&mut amps, n, q, &hs_dag),
                _ => {}
            }
        }
        for (o, a) in out.iter_mut().zip(&amps) {
            *o += w * a.norm_sqr();
        }
    }
    out
}

/// A sampled fidelity estimate with its per-setting breakdown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledFidelity {
    pub estimate: FidelityEstimate,
    pub settings: Vec<SettingEstimate>,
}

/// Samples every setting of `cover`, setting `i` with seed
/// `sub_seed(seed, i)`.
pub fn sample_cover(
    net: &HybridNetwork,
    cover: &[CoveredSetting],
    shots: usize,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    cover
        .par_iter()
        .enumerate()
        .map(|(i, cs)| sample_setting(net, &cs.setting, shots, sub_seed(seed, i as u64)))
        .collect()
}

/// Per setting, the shot-wise estimator `y_t = sum_P c_P s_t(P)` (its
/// mean is the setting's fidelity contribution, its standard error
/// `sd(y) / sqrt(shots)`); settings combine in quadrature with the exact
/// identity term `2^{-N}`.
pub fn estimate_from_records(
    n: usize,
    cover: &[CoveredSetting],
    records: &[ShotRecord],
) -> Result<SampledFidelity> {
    if cover.len() != records.len() {
        return Err(Error::DimensionMismatch {
            expected: cover.len(),
            found: records.len(),
        });
    }
    let mut settings = Vec::with_capacity(cover.len());
    let mut coefficients = vec![(-(n as f64)).exp2()];
    let mut expectations = vec![1.0];
    let mut errors = vec![0.0];
    for (cs, rec) in cover.iter().zip(records) {
        if cs.setting != rec.setting {
            return Err(Error::InvalidParameter(format!(
                "record for {} does not match setting {}",
                rec.setting, cs.setting
            )));
        }
        let supports: Vec<(f64, u64)> = cs
            .terms
            .iter()
            .map(|(c, p)| (*c * p.phase().sign().unwrap_or(1.0), p.support()))
            .collect();
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for &m in &rec.outcomes {
            let y: f64 = supports
                .iter()
                .map(|&(c, s)| if (m & s).count_ones() % 2 == 0 { c } else { -c })
                .sum();
            sum += y;
            sum_sq += y * y;
        }
        let t = rec.shots() as f64;
        let mean = sum / t;
        let var = if rec.shots() > 1 {
            ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0)
        } else {
            0.0
        };
        let err = (var / t).sqrt();
        coefficients.push(1.0);
        expectations.push(mean);
        errors.push(err);
        settings.push(SettingEstimate {
            setting: cs.setting.to_string(),
            n_terms: cs.terms.len(),
            value: mean,
            std_error: err,
            shots: rec.shots() as u64,
        });
    }
    let mut estimate = assemble_fidelity(&coefficients, &expectations, &errors)?;
    estimate.n_settings = cover.len();
    estimate.shots_per_setting = records.first().map_or(0, |r| r.shots() as u64);
    Ok(SampledFidelity { estimate, settings })
}

/// Setting cover, sampling and assembly in one call.
pub fn estimate_fidelity_sampled(
    net: &HybridNetwork,
    target: &Target,
    shots_per_setting: usize,
    seed: u64,
) -> Result<SampledFidelity> {
    if net.n() != target.n() {
        return Err(Error::DimensionMismatch {
            expected: target.n(),
            found: net.n(),
        });
    }
    let cover = setting_cover(target)?;
    let records = sample_cover(net, &cover, shots_per_setting, seed)?;
    estimate_from_records(target.n(), &cover, &records)
}
