use nodecount::fidelity::MeasurementSetting;
use nodecount::{
    estimate_fidelity_sampled, fidelity_exact, hybrid_string_expectation, ocs_hybrid,
    ocs_optimal_params, sample_setting, target_state, ClassicalNodeState, Ensemble, Graph,
    HybridNetwork, Pauli, PauliString, Target,
};

fn settings(n: usize) -> Vec<MeasurementSetting> {
    (0..3usize.pow(n as u32))
        .map(|mut c| {
            let bases = (0..n)
                .map(|_| {
                    let l = [Pauli::X, Pauli::Y, Pauli::Z][c % 3];
                    c /= 3;
                    l
                })
                .collect();
            MeasurementSetting::new(bases).unwrap()
        })
        .collect()
}

/// Every string compatible with a setting: each letter either kept or I.
fn covered(s: &MeasurementSetting) -> Vec<PauliString> {
    let n = s.n();
    (1..1u32 << n)
        .map(|keep| {
            let letters: Vec<Pauli> = (0..n)
                .map(|q| {
                    if keep >> q & 1 == 1 {
                        s.basis(q)
                    } else {
                        Pauli::I
                    }
                })
                .collect();
            PauliString::from_letters(&letters)
        })
        .collect()
}

#[test]
fn correlators_are_unbiased() {
    // a noisy 3-qubit chain with one classical node holding a mixture
    let t: Target = Graph::chain(3).unwrap().into();
    let psi = target_state(&Target::ghz(2).unwrap()).unwrap();
    let quantum = Ensemble::white_noise(&psi, 0.8).unwrap();
    let mut dist = [0.0; 8];
    dist[0] = 0.5;
    dist[5] = 0.3;
    dist[6] = 0.2;
    let net = HybridNetwork::new(
        t.n(),
        vec![0, 1],
        quantum,
        vec![ClassicalNodeState::new(2, dist).unwrap()],
    )
    .unwrap();
    let shots = 2000;
    let mut worst: f64 = 0.0;
    for (i, s) in settings(3).iter().enumerate() {
        for seed in 0..100u64 {
            let rec = sample_setting(&net, s, shots, seed * 1000 + i as u64).unwrap();
            for p in covered(s) {
                let exact = hybrid_string_expectation(&net, &p).unwrap();
                let sigma = ((1.0 - exact * exact) / shots as f64).sqrt().max(1e-3);
                worst = worst.max((rec.correlator(&p) - exact).abs() / sigma);
            }
        }
    }
    // 27 * 100 * 7 draws; 5.5 sigma is a comfortable family-wise margin
    assert!(worst < 5.5, "worst deviation {worst} sigma");
}

#[test]
fn sampled_estimates_are_bit_reproducible() {
    let t = Target::ghz(5).unwrap();
    let net = ocs_hybrid(&t, &ocs_optimal_params(3, 2).unwrap(), None).unwrap();
    let a = estimate_fidelity_sampled(&net, &t, 2000, 123).unwrap();
    let b = estimate_fidelity_sampled(&net, &t, 2000, 123).unwrap();
    assert_eq!(a, b);
    let c = estimate_fidelity_sampled(&net, &t, 2000, 124).unwrap();
    assert_ne!(a.estimate.value, c.estimate.value);
}

#[test]
fn error_bars_cover_the_exact_value() {
    let t = Target::ghz(4).unwrap();
    let net =
        HybridNetwork::all_quantum(Ensemble::white_noise(&target_state(&t).unwrap(), 0.7).unwrap())
            .unwrap();
    let exact = fidelity_exact(&net, &t).unwrap().value;
    let runs = 200;
    let inside = (0..runs)
        .filter(|&seed| {
            let r = estimate_fidelity_sampled(&net, &t, 500, seed)
                .unwrap()
                .estimate;
            (r.value - exact).abs() <= r.std_error
        })
        .count();
    let coverage = inside as f64 / runs as f64;
    assert!((coverage - 0.6827).abs() < 0.1, "coverage {coverage}");
}
