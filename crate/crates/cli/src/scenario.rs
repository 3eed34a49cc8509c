//! Scenario files and the report produced from one.

use std::path::Path;

use nodecount::fidelity::SettingEstimate;
use nodecount::ocs::{ocs_alternative_params, ocs_projection_state};
use nodecount::sim::sub_seed;
use nodecount::{
    count_classical_nodes, decohere_node, estimate_fidelity_sampled, fidelity_exact, noisy_network,
    ocs_hybrid, ocs_hybrid_with_state, ocs_numeric, ocs_optimal_params, significance, target_state,
    threshold_closed_form, white_noise_for_fidelity, ClassicalAssignment, CountVerdict,
    DecoherenceChannel, FidelityEstimate, GraphSpec, HybridNetwork, NoiseSpec, OcsParams,
    SignificanceKind, Target, ThresholdTable,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{CliError, Result};

/// Sub-seed index of the noise stream; setting streams use `0..settings`.
const NOISE_STREAM: u64 = 1 << 32;

/// Which `|xi>` the OCS uses when there is one classical node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reading {
    /// `|xi>` prepared directly from the optimal parameters.
    #[default]
    General,
    /// The alternative optimum, with `|xi>` obtained by projecting one node
    /// of a larger GHZ state.
    Projection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Adversary {
    /// Honest preparation. Nodes listed as classical are decohered by
    /// `decoherence` (a Z measurement when omitted).
    None {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decoherence: Option<DecoherenceChannel>,
    },
    /// Closed-form cheating strategy; star and GHZ targets only.
    OcsOptimal {
        #[serde(default)]
        reading: Reading,
    },
    /// Cheating strategy with explicit angles and assignments (`eta` 1..8,
    /// one per classical node, GHZ frame).
    OcsCustom {
        theta: f64,
        phi: f64,
        assignment: Vec<ClassicalAssignment>,
    },
    /// Brute-force optimal cheating for any target.
    OcsNumeric,
}

impl Default for Adversary {
    fn default() -> Self {
        Adversary::None { decoherence: None }
    }
}

/// Exact evaluation or a number of shots per measurement setting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Shots {
    #[default]
    Exact,
    PerSetting(u64),
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Exact => s.serialize_str("exact"),
            Shots::PerSetting(n) => s.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(0) => Err(serde::de::Error::custom("shots must be at least 1")),
            Raw::Count(n) => Ok(Shots::PerSetting(n)),
            Raw::Word(w) if w == "exact" => Ok(Shots::Exact),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "shots must be a positive integer or \"exact\", got {w:?}"
            ))),
        }
    }
}

fn default_trajectories() -> usize {
    64
}

/// One experiment: target, partition, adversary, noise and read-out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub target: GraphSpec,
    /// Classical node ids. For the OCS modes the order matches `assignment`.
    #[serde(default)]
    pub classical: Vec<usize>,
    #[serde(default)]
    pub adversary: Adversary,
    /// Noise on the quantum nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    /// Additional white noise on the quantum nodes, tuned so that the exact
    /// fidelity equals this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune_fidelity: Option<f64>,
    #[serde(default)]
    pub shots: Shots,
    #[serde(default)]
    pub seed: u64,
    /// Trajectories per branch when noise is too large to expand exactly.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
}

impl Scenario {
    /// GHZ target with no adversary, noise or sampling.
    pub fn ideal(target: GraphSpec) -> Self {
        Scenario {
            name: None,
            target,
            classical: Vec::new(),
            adversary: Adversary::default(),
            noise: None,
            tune_fidelity: None,
            shots: Shots::Exact,
            seed: 0,
            trajectories: default_trajectories(),
        }
    }

    /// Checks everything that does not need the network built.
    pub fn validate(&self) -> Result<Target> {
        let target = self.target.to_target()?;
        let n = target.n();
        let mut seen = 0u64;
        for &k in &self.classical {
            if k >= n {
                return Err(CliError::Config(format!(
                    "classical node {k} does not exist in a {n}-node target"
                )));
            }
            if seen >> k & 1 == 1 {
                return Err(CliError::Config(format!("classical node {k} listed twice")));
            }
            seen |= 1 << k;
        }
        let nc = self.classical.len();
        match &self.adversary {
            Adversary::None { .. } => {}
            Adversary::OcsOptimal { reading } => {
                if nc == 0 || nc == n {
                    return Err(CliError::Config(
                        "ocs_optimal needs between 1 and n - 1 classical nodes".into(),
                    ));
                }
                if *reading == Reading::Projection && nc != 1 {
                    return Err(CliError::Config(
                        "reading = \"projection\" needs exactly one classical node".into(),
                    ));
                }
            }
            Adversary::OcsCustom { assignment, .. } => {
                if nc == 0 || nc == n {
                    return Err(CliError::Config(
                        "ocs_custom needs between 1 and n - 1 classical nodes".into(),
                    ));
                }
                if assignment.len() != nc {
                    return Err(CliError::Config(format!(
                        "assignment has {} entries for {nc} classical nodes",
                        assignment.len()
                    )));
                }
            }
            Adversary::OcsNumeric => {
                if nc == 0 {
                    return Err(CliError::Config("ocs_numeric needs classical nodes".into()));
                }
            }
        }
        if let Some(spec) = &self.noise {
            spec.validate()?;
        }
        if let Some(f) = self.tune_fidelity {
            if !(0.0..=1.0).contains(&f) {
                return Err(CliError::Config(format!(
                    "tune_fidelity {f} outside [0, 1]"
                )));
            }
        }
        if self.trajectories == 0 {
            return Err(CliError::Config("trajectories must be at least 1".into()));
        }
        Ok(target)
    }

    /// The network the scenario describes, and the tuned white-noise weight
    /// when `tune_fidelity` is set.
    pub fn build_network(&self, target: &Target) -> Result<(HybridNetwork, Option<f64>)> {
        let n = target.n();
        let v_c = &self.classical;
        let (nq, nc) = (n - v_c.len(), v_c.len());
        let mut net = match &self.adversary {
            Adversary::None { decoherence } => {
                let mut net = HybridNetwork::all_quantum(target_state(target)?)?;
                for &k in v_c {
                    net = decohere_node(
                        &net,
                        k,
                        decoherence.unwrap_or(DecoherenceChannel::MeasureZ),
                    )?;
                }
                net
            }
            Adversary::OcsOptimal {
                reading: Reading::General,
            } => ocs_hybrid(target, &ocs_optimal_params(nq, nc)?, Some(v_c))?,
            Adversary::OcsOptimal {
                reading: Reading::Projection,
            } => {
                let alt = ocs_alternative_params(nq)?;
                let xi = ocs_projection_state(nq, alt.theta, alt.phi)?;
                ocs_hybrid_with_state(target, &alt, Some(v_c), xi)?
            }
            Adversary::OcsCustom {
                theta,
                phi,
                assignment,
            } => {
                let p = OcsParams::new(nq, nc, *theta, *phi, assignment.clone())?;
                ocs_hybrid(target, &p, Some(v_c))?
            }
            Adversary::OcsNumeric => ocs_numeric(target, v_c)?.1,
        };
        if let Some(spec) = &self.noise {
            net = noisy_network(
                &net,
                spec,
                sub_seed(self.seed, NOISE_STREAM),
                self.trajectories,
            )?;
        }
        let mut weight = None;
        if let Some(f) = self.tune_fidelity {
            let p = white_noise_for_fidelity(&net, target, f)?;
            let quantum = net.quantum().clone().depolarized(p)?;
            net = net.with_quantum(quantum)?;
            weight = Some(p);
        }
        Ok((net, weight))
    }
}

/// Significance ratios; absent when the estimate is exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Significances {
    /// `(F - 1/2) / E`.
    pub ew: Option<f64>,
    /// `(F - F_{n_c - 1}) / E`, for networks with classical nodes.
    pub n_c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: Scenario,
    pub n: usize,
    pub n_q: usize,
    pub n_c: usize,
    pub fidelity: FidelityEstimate,
    /// `F_{n_c}` when the network has classical nodes.
    pub threshold: Option<f64>,
    /// Size of the threshold table the verdict was read from.
    pub threshold_table_n_max: u32,
    pub verdict: CountVerdict,
    pub significance: Significances,
    /// Weight `p` of the tuned white noise `p rho + (1 - p) I / 2^{n_q}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuned_noise_weight: Option<f64>,
    /// Per-setting estimates of a sampled run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub settings: Vec<SettingEstimate>,
}

impl ExperimentReport {
    /// Table the verdict was read from.
    pub fn threshold_table(&self) -> Result<ThresholdTable> {
        Ok(ThresholdTable::new(self.threshold_table_n_max)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Reads a scenario from TOML, or JSON when the extension is `.json`.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse_scenario(&text, is_json).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
}

pub fn parse_scenario(text: &str, json: bool) -> std::result::Result<Scenario, String> {
    if json {
        serde_json::from_str(text).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Builds the network, evaluates the fidelity and reads off the verdict.
/// The threshold table runs to `max(n, 1)`.
pub fn run_scenario(s: &Scenario) -> Result<ExperimentReport> {
    let target = s.validate()?;
    let (net, tuned) = s.build_network(&target)?;
    let (fidelity, settings) = match s.shots {
        Shots::Exact => (fidelity_exact(&net, &target)?, Vec::new()),
        Shots::PerSetting(shots) => {
            let shots = usize::try_from(shots)
                .map_err(|_| CliError::Config(format!("shots {shots} too large")))?;
            let r = estimate_fidelity_sampled(&net, &target, shots, s.seed)?;
            (r.estimate, r.settings)
        }
    };
    let n = target.n();
    let n_c = s.classical.len();
    let n_max = n.max(1) as u32;
    let table = ThresholdTable::new(n_max)?;
    let verdict = count_classical_nodes(&fidelity, &table);
    let threshold = if n_c > 0 {
        Some(threshold_closed_form(n_c as u32)?)
    } else {
        None
    };
    let significance = Significances {
        ew: significance(&fidelity, SignificanceKind::EntanglementWitness).ok(),
        n_c: if n_c > 0 {
            significance(&fidelity, SignificanceKind::Count(n_c as u32)).ok()
        } else {
            None
        },
    };
    Ok(ExperimentReport {
        scenario: s.clone(),
        n,
        n_q: n - n_c,
        n_c,
        fidelity,
        threshold,
        threshold_table_n_max: n_max,
        verdict,
        significance,
        tuned_noise_weight: tuned,
        settings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nodecount::NodeCount;

    fn ghz(n: usize) -> GraphSpec {
        GraphSpec::ghz(n)
    }

    #[test]
    fn ideal_ghz6_is_zero() {
        let r = run_scenario(&Scenario::ideal(ghz(6))).unwrap();
        assert!((r.fidelity.value - 1.0).abs() < 1e-12);
        assert_eq!(r.verdict.n_c_inferred, NodeCount::Zero);
        assert_eq!(r.threshold, None);
    }

    #[test]
    fn ocs_single_classical_node() {
        let mut s = Scenario::ideal(ghz(6));
        s.classical = vec![5];
        s.adversary = Adversary::OcsOptimal {
            reading: Reading::General,
        };
        let r = run_scenario(&s).unwrap();
        assert!((r.fidelity.value - 0.683013).abs() < 1e-6);
        assert_eq!(r.verdict.n_c_inferred, NodeCount::Exactly(1));
        assert!(r.verdict.ew_violated);
        s.adversary = Adversary::OcsOptimal {
            reading: Reading::Projection,
        };
        let p = run_scenario(&s).unwrap();
        assert!((p.fidelity.value - r.fidelity.value).abs() < 1e-12);
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            name = "noisy"
            classical = [2]
            seed = 9
            shots = 500
            [target]
            type = "star"
            n = 3
            state = "ghz"
            [adversary]
            mode = "ocs_custom"
            theta = 0.4
            phi = -0.7
            assignment = [2]
            [noise]
            kind = "dephasing"
            q = 0.1
        "#;
        let s = parse_scenario(text, false).unwrap();
        assert_eq!(s.shots, Shots::PerSetting(500));
        let back = parse_scenario(&serde_json::to_string(&s).unwrap(), true).unwrap();
        assert_eq!(back, s);
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.settings.len(), r.fidelity.n_settings);
    }

    #[test]
    fn config_errors() {
        let unknown = "[target]\ntype = \"ring\"\nn = 4\ncolour = 3\n";
        let e = parse_scenario(unknown, false).unwrap_err();
        assert!(e.contains("colour"), "{e}");
        assert!(e.contains("line"), "{e}");
        assert!(parse_scenario("shots = 0\n[target]\ntype = \"ring\"\nn = 4\n", false).is_err());

        let mut s = Scenario::ideal(ghz(4));
        s.classical = vec![4];
        assert_eq!(run_scenario(&s).unwrap_err().exit_code(), 2);
        s.classical = vec![1];
        s.adversary = Adversary::OcsOptimal {
            reading: Reading::Projection,
        };
        assert!(run_scenario(&s).is_ok());
        s.classical = vec![1, 2];
        assert_eq!(run_scenario(&s).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn resource_cap_exit_code() {
        let s = Scenario::ideal(ghz(30));
        assert_eq!(run_scenario(&s).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn decohered_and_tuned() {
        let mut s = Scenario::ideal(ghz(4));
        s.classical = vec![3];
        let r = run_scenario(&s).unwrap();
        // the decohered node answers Z at random independently of the rest,
        // so only the four Z-type stabilizers avoiding it survive
        assert!((r.fidelity.value - 0.25).abs() < 1e-12);

        let mut s = Scenario::ideal(ghz(6));
        s.tune_fidelity = Some(0.792);
        let r = run_scenario(&s).unwrap();
        assert!((r.fidelity.value - 0.792).abs() < 1e-12);
        let p = r.tuned_noise_weight.unwrap();
        assert!((p - (0.792 - 1.0 / 64.0) / (1.0 - 1.0 / 64.0)).abs() < 1e-12);
    }

    #[test]
    fn verdict_reproduces_from_report() {
        let mut s = Scenario::ideal(ghz(5));
        s.classical = vec![3, 4];
        s.adversary = Adversary::OcsOptimal {
            reading: Reading::General,
        };
        s.shots = Shots::PerSetting(3000);
        s.seed = 4;
        let r = run_scenario(&s).unwrap();
        let again = count_classical_nodes(&r.fidelity, &r.threshold_table().unwrap());
        assert_eq!(again, r.verdict);
        let parsed: ExperimentReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(parsed.verdict, r.verdict);
    }
}
