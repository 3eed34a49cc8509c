//! Optimal cheating strategy against GHZ-type targets: the quantum nodes
//! share `|xi> = cos(theta)|0...0> + sin(theta) e^{i phi} |1...1>` and the
//! classical nodes broadcast fixed answers.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{fidelity_exact, MeasurementSetting};
use crate::graph::Target;
use crate::hybrid::{ClassicalAssignment, ClassicalNodeState, HybridNetwork};
use crate::state::{ghz_state, PureState};
use crate::thresholds::threshold_bruteforce;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcsParams {
    pub n_q: usize,
    pub n_c: usize,
    /// In `[0, pi/2]`.
    pub theta: f64,
    /// In `(-pi, pi]`.
    pub phi: f64,
    /// One assignment per classical node, written in the GHZ frame.
    pub assignment: Vec<ClassicalAssignment>,
}

impl OcsParams {
    /// Checks ranges and wraps `phi` into `(-pi, pi]`.
    pub fn new(
        n_q: usize,
        n_c: usize,
        theta: f64,
        phi: f64,
        assignment: Vec<ClassicalAssignment>,
    ) -> Result<Self> {
        if n_q < 1 || n_c < 1 {
            return Err(Error::Domain(
                "OCS needs at least one quantum and one classical node".into(),
            ));
        }
        if !(0.0..=PI / 2.0 + 1e-12).contains(&theta) {
            return Err(Error::Domain(format!("theta {theta} outside [0, pi/2]")));
        }
        if !phi.is_finite() {
            return Err(Error::Domain(format!("phi {phi} is not finite")));
        }
        if assignment.len() != n_c {
            return Err(Error::DimensionMismatch {
                expected: n_c,
                found: assignment.len(),
            });
        }
        Ok(OcsParams {
            n_q,
            n_c,
            theta: theta.min(PI / 2.0),
            phi: wrap_phase(phi),
            assignment,
        })
    }

    /// `|xi>` on `n_q` qubits.
    pub fn state(&self) -> PureState {
        xi_state(self.n_q, self.theta, self.phi)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// `cos(theta)|0...0> + sin(theta) e^{i phi}|1...1>`.
pub fn xi_state(n_q: usize, theta: f64, phi: f64) -> PureState {
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_q];
    amps[0] = Complex64::new(theta.cos(), 0.0);
    amps[(1 << n_q) - 1] += Complex64::from_polar(theta.sin(), phi);
    PureState::normalized(n_q, amps).expect("unit vector")
}

/// `sin^2(theta) = 1 / (2^{n_c-1} + 2 + 2^{n_c/2-1} sqrt(4 + 2^{n_c}))`,
/// `phi = -n_c pi / 4`, every classical node at `v_{k,1}`: the top
/// eigenvector of the GHZ-frame f-matrix.
///
/// The factor in front of the square root is sometimes quoted as
/// `2^{-n_c/2}`; the two agree only at `n_c = 1`, and only this one reaches
/// `F_{n_c}` for larger `n_c`.
pub fn ocs_optimal_params(n_q: usize, n_c: usize) -> Result<OcsParams> {
    if n_c < 1 {
        return Err(Error::Domain(
            "OCS needs at least one classical node".into(),
        ));
    }
    let k = n_c as f64;
    let root = (k / 2.0 - 1.0).exp2() * (4.0 + k.exp2()).sqrt();
    let sin2 = 1.0 / ((k - 1.0).exp2() + 2.0 + root);
    OcsParams::new(
        n_q,
        n_c,
        sin2.sqrt().asin(),
        -k * FRAC_PI_4,
        vec![ClassicalAssignment::ALL_PLUS; n_c],
    )
}

/// The second optimum for one classical node: `v_{k,2}` with
/// `sin(theta) = 1 / sqrt(3 - sqrt(3))`, `phi = -pi/4`.
pub fn ocs_alternative_params(n_q: usize) -> Result<OcsParams> {
    let sin = 1.0 / (3.0 - 3f64.sqrt()).sqrt();
    let v2 = ClassicalAssignment::from_eta(2)?;
    OcsParams::new(n_q, 1, sin.asin(), -FRAC_PI_4, vec![v2])
}

/// `|xi>` obtained by projecting the last node of `GHZ_{n_q+1}` on
/// `cos(theta)|0> + sin(theta) e^{-i phi}|1>`. Equals [`xi_state`].
pub fn ocs_projection_state(n_q: usize, theta: f64, phi: f64) -> Result<PureState> {
    let ghz = ghz_state(n_q + 1)?;
    let probe = [
        Complex64::new(theta.cos(), 0.0),
        Complex64::from_polar(theta.sin(), -phi),
    ];
    let amps: Vec<Complex64> = (0..1usize << n_q)
        .map(|i| {
            probe[0].conj() * ghz.amplitudes()[i << 1]
                + probe[1].conj() * ghz.amplitudes()[(i << 1) | 1]
        })
        .collect();
    PureState::normalized(n_q, amps)
}

/// Centre and extra-Hadamard mask of a star-shaped target relative to the
/// GHZ frame (star with a Hadamard on every leaf).
fn ghz_frame(target: &Target) -> Result<(usize, u64)> {
    let g = target.graph();
    let n = g.n();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let center = (0..n)
        .find(|&c| g.edges().len() == n - 1 && g.edges().iter().all(|&(a, b)| a == c || b == c))
        .filter(|_| n >= 2)
        .ok_or_else(|| {
            Error::InvalidGraph(
                "closed-form OCS needs a star or GHZ target; use ocs_numeric for other graphs"
                    .into(),
            )
        })?;
    let frame = full & !(1u64 << center);
    Ok((center, target.hadamards() ^ frame))
}

/// Hybrid network playing the OCS against a star or GHZ target.
///
/// `v_c` defaults to the last `n_c` nodes. Quantum nodes are the rest in
/// ascending order. When the target differs from the GHZ frame by local
/// Hadamards, `|xi>` and the assignments are transformed to match.
pub fn ocs_hybrid(
    target: &Target,
    params: &OcsParams,
    v_c: Option<&[usize]>,
) -> Result<HybridNetwork> {
    ocs_hybrid_with_state(target, params, v_c, params.state())
}

/// [`ocs_hybrid`] with `|xi>` supplied, e.g. from [`ocs_projection_state`].
pub fn ocs_hybrid_with_state(
    target: &Target,
    params: &OcsParams,
    v_c: Option<&[usize]>,
    xi: PureState,
) -> Result<HybridNetwork> {
    let n = target.n();
    if params.n_q + params.n_c != n {
        return Err(Error::InvalidPartition(format!(
            "n_q + n_c = {} but the target has {n} nodes",
            params.n_q + params.n_c
        )));
    }
    if xi.n() != params.n_q {
        return Err(Error::DimensionMismatch {
            expected: params.n_q,
            found: xi.n(),
        });
    }
    let default: Vec<usize> = (params.n_q..n).collect();
    let v_c = v_c.unwrap_or(&default);
    if v_c.len() != params.n_c {
        return Err(Error::InvalidPartition(format!(
            "{} classical nodes given, n_c = {}",
            v_c.len(),
            params.n_c
        )));
    }
    let (_, extra) = ghz_frame(target)?;
    let v_q: Vec<usize> = (0..n).filter(|v| !v_c.contains(v)).collect();
    let mut xi = xi;
    for (j, &v) in v_q.iter().enumerate() {
        if extra >> v & 1 == 1 {
            xi.apply_hadamard(j);
        }
    }
    let classical = v_c
        .iter()
        .zip(&params.assignment)
        .map(|(&node, &a)| {
            let a = if extra >> node & 1 == 1 {
                a.hadamard_relabel()
            } else {
                a
            };
            ClassicalNodeState::point_mass(node, a)
        })
        .collect();
    HybridNetwork::new(n, v_q, xi.into(), classical)
}

/// Cheating network for an arbitrary target: the brute-force optimum for
/// the classical nodes `v_c`.
pub fn ocs_numeric(target: &Target, v_c: &[usize]) -> Result<(f64, HybridNetwork)> {
    let r = threshold_bruteforce(target, v_c)?;
    let net = HybridNetwork::with_assignments(target.n(), &r.v_c, &r.assignment, r.state)?;
    Ok((r.value, net))
}

/// Exact fidelity over a `(theta, phi)` grid for `GHZ_{n_q + n_c}` with all
/// classical nodes at `v_{k,1}`. Row `i` is `theta_grid[i]`.
pub fn ocs_landscape(
    n_q: usize,
    n_c: usize,
    theta_grid: &[f64],
    phi_grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if theta_grid.is_empty() || phi_grid.is_empty() {
        return Err(Error::InvalidParameter(
            "landscape grids must be non-empty".into(),
        ));
    }
    let target = Target::ghz(n_q + n_c)?;
    theta_grid
        .par_iter()
        .map(|&theta| {
            phi_grid
                .iter()
                .map(|&phi| {
                    let p = OcsParams::new(
                        n_q,
                        n_c,
                        theta,
                        phi,
                        vec![ClassicalAssignment::ALL_PLUS; n_c],
                    )?;
                    Ok(fidelity_exact(&ocs_hybrid(&target, &p, None)?, &target)?.value)
                })
                .collect()
        })
        .collect()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Answers the classical nodes `v_c` broadcast for `setting`: the
/// preexisting value of the queried observable, one per classical node.
pub fn ocs_broadcast_outcomes(
    params: &OcsParams,
    v_c: &[usize],
    setting: &MeasurementSetting,
) -> Result<Vec<i8>> {
    if v_c.len() != params.assignment.len() {
        return Err(Error::DimensionMismatch {
            expected: params.assignment.len(),
            found: v_c.len(),
        });
    }
    v_c.iter()
        .zip(&params.assignment)
        .map(|(&k, a)| {
            if k >= setting.n() {
                return Err(Error::InvalidPartition(format!(
                    "node {k} outside the setting"
                )));
            }
            Ok(a.outcome(setting.basis(k)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::thresholds::threshold_closed_form;

    fn f(n: u32) -> f64 {
        threshold_closed_form(n).unwrap()
    }

    fn ocs_fidelity(target: &Target, p: &OcsParams) -> f64 {
        fidelity_exact(&ocs_hybrid(target, p, None).unwrap(), target)
            .unwrap()
            .value
    }

    #[test]
    fn optimal_params_formulas() {
        let p = ocs_optimal_params(1, 1).unwrap();
        assert!((p.theta.sin() - 1.0 / (3.0 + 3f64.sqrt()).sqrt()).abs() < 1e-15);
        assert!((p.theta.sin() - 0.4597).abs() < 1e-4);
        assert!((p.phi + FRAC_PI_4).abs() < 1e-15);
        let p = ocs_optimal_params(1, 2).unwrap();
        assert!((p.phi + PI / 2.0).abs() < 1e-15);
        assert!((p.theta.sin() - 1.0 / (4.0 + 8f64.sqrt()).sqrt()).abs() < 1e-15);
        // phi wraps into (-pi, pi]
        let p = ocs_optimal_params(1, 5).unwrap();
        assert!((p.phi - 3.0 * FRAC_PI_4).abs() < 1e-12);
        assert!(ocs_optimal_params(1, 0).is_err());
    }

    #[test]
    fn optimal_params_are_the_f_matrix_eigenvector() {
        use crate::thresholds::f_matrix;
        for n_c in 1..=6usize {
            let t = Target::ghz(n_c + 1).unwrap();
            let v_c: Vec<usize> = (1..=n_c).collect();
            let fm = f_matrix(&t, &v_c, &vec![ClassicalAssignment::ALL_PLUS; n_c]).unwrap();
            let eig = crate::linalg::hermitian_eigs(&fm.matrix);
            let v = eig.max().1;
            let theta = v[1].norm().atan2(v[0].norm());
            let phi = (v[1] / v[0]).arg();
            let p = ocs_optimal_params(1, n_c).unwrap();
            assert!((p.theta - theta).abs() < 1e-10, "n_c {n_c}");
            assert!((wrap_phase(p.phi - phi)).abs() < 1e-10, "n_c {n_c}");
        }
    }

    #[test]
    fn optimal_ocs_reaches_threshold() {
        for n_c in 1..=6 {
            for n_q in 1..=3 {
                let t = Target::ghz(n_q + n_c).unwrap();
                let p = ocs_optimal_params(n_q, n_c).unwrap();
                let fid = ocs_fidelity(&t, &p);
                assert!(
                    (fid - f(n_c as u32)).abs() < 1e-9,
                    "n_q {n_q} n_c {n_c}: {fid}"
                );
            }
        }
    }

    #[test]
    fn worked_cases() {
        let t = Target::ghz(6).unwrap();
        assert!((ocs_fidelity(&t, &ocs_optimal_params(5, 1).unwrap()) - 0.683013).abs() < 1e-6);
        let t = Target::ghz(3).unwrap();
        assert!((ocs_fidelity(&t, &ocs_optimal_params(1, 2).unwrap()) - 0.603553).abs() < 1e-6);
        let t = Target::ghz(2).unwrap();
        let p = OcsParams::new(1, 1, 0.0, 0.3, vec![ClassicalAssignment::ALL_PLUS]).unwrap();
        assert!((ocs_fidelity(&t, &p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn alternative_optimum_and_projection() {
        let alt = ocs_alternative_params(5).unwrap();
        let t = Target::ghz(6).unwrap();
        assert!((ocs_fidelity(&t, &alt) - f(1)).abs() < 1e-9);
        let projected = ocs_projection_state(5, alt.theta, alt.phi).unwrap();
        assert!((projected.fidelity(&alt.state()).unwrap() - 1.0).abs() < 1e-12);
        let net = ocs_hybrid_with_state(&t, &alt, None, projected).unwrap();
        assert!((fidelity_exact(&net, &t).unwrap().value - f(1)).abs() < 1e-9);
    }

    #[test]
    fn star_frames() {
        // plain star graph states and other classical placements
        for (n, center, v_c) in [
            (3, 0, vec![2]),
            (4, 1, vec![1]),
            (5, 0, vec![0, 3]),
            (6, 5, vec![1, 2, 5]),
        ] {
            let t: Target = Graph::star(n, center).unwrap().into();
            let p = ocs_optimal_params(n - v_c.len(), v_c.len()).unwrap();
            let net = ocs_hybrid(&t, &p, Some(&v_c)).unwrap();
            let fid = fidelity_exact(&net, &t).unwrap().value;
            assert!(
                (fid - f(v_c.len() as u32)).abs() < 1e-9,
                "{n} {center} {v_c:?}: {fid}"
            );
        }
        let ring: Target = Graph::ring(4).unwrap().into();
        assert!(matches!(
            ocs_hybrid(&ring, &ocs_optimal_params(3, 1).unwrap(), None),
            Err(Error::InvalidGraph(_))
        ));
    }

    #[test]
    fn numeric_ocs_on_chain() {
        let t: Target = Graph::chain(4).unwrap().into();
        let (value, net) = ocs_numeric(&t, &[0]).unwrap();
        assert!((value - f(1)).abs() < 1e-9);
        assert!((fidelity_exact(&net, &t).unwrap().value - value).abs() < 1e-10);
    }

    #[test]
    fn partition_mismatch() {
        let t = Target::ghz(4).unwrap();
        let p = ocs_optimal_params(2, 1).unwrap();
        assert!(matches!(
            ocs_hybrid(&t, &p, None),
            Err(Error::InvalidPartition(_))
        ));
    }

    #[test]
    fn landscape_small() {
        let thetas = linspace(0.0, PI / 2.0, 21);
        let phis = linspace(-PI, PI, 21);
        let grid = ocs_landscape(1, 1, &thetas, &phis).unwrap();
        // theta = 0 row is flat in phi
        assert!(grid[0].iter().all(|&x| (x - grid[0][0]).abs() < 1e-12));
        let max = grid.iter().flatten().copied().fold(f64::MIN, f64::max);
        assert!(max <= f(1) + 1e-9);
        assert!(max > f(1) - 0.01);
        assert!(ocs_landscape(1, 1, &[], &phis).is_err());
    }

    #[test]
    fn fine_landscape_maximum() {
        let thetas = linspace(0.0, PI / 2.0, 801);
        let phis = linspace(-PI, PI, 9);
        for n_c in [1, 6] {
            let grid = ocs_landscape(1, n_c, &thetas, &phis).unwrap();
            let max = grid.iter().flatten().copied().fold(f64::MIN, f64::max);
            assert!((max - f(n_c as u32)).abs() < 1e-4, "n_c {n_c}: {max}");
        }
    }

    #[test]
    fn broadcasts() {
        let p = ocs_optimal_params(2, 2).unwrap();
        let s: MeasurementSetting = "XYZX".parse().unwrap();
        assert_eq!(ocs_broadcast_outcomes(&p, &[2, 3], &s).unwrap(), vec![1, 1]);
        let v8 = OcsParams::new(
            1,
            1,
            0.2,
            0.0,
            vec![ClassicalAssignment::from_eta(8).unwrap()],
        )
        .unwrap();
        let z: MeasurementSetting = "XZ".parse().unwrap();
        let first = ocs_broadcast_outcomes(&v8, &[1], &z).unwrap();
        assert_eq!(first, vec![-1]);
        assert_eq!(ocs_broadcast_outcomes(&v8, &[1], &z).unwrap(), first);
        assert!(ocs_broadcast_outcomes(&v8, &[0, 1], &z).is_err());
    }

    #[test]
    fn ew_is_defeated() {
        let t = Target::ghz(4).unwrap();
        let fid = ocs_fidelity(&t, &ocs_optimal_params(3, 1).unwrap());
        assert!(fid > 0.5 + 0.18);
    }
}
