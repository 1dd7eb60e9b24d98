use std::f64::consts::TAU;

use proptest::prelude::*;
use whichway::circuit::{CircuitState, Gate};
use whichway::feedforward::{simplified_avg_closed, Protocol};
use whichway::knowledge::{conditional_probs, knowledge_at, knowledge_avg, phase_averaged_knowledge, readout_probs};
use whichway::linalg::{haar_random_basis, ComplexVector, OrthonormalBasis};
use whichway::model::{sample_delta, DetectorCoupling};
use whichway::rng::stream;

fn basis(seed: u64) -> OrthonormalBasis {
    haar_random_basis(3, &mut stream(seed)).unwrap()
}

fn gate() -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0..3usize).prop_map(Gate::Hadamard),
        (0..3usize).prop_map(Gate::PauliX),
        (0..3usize, -TAU..TAU).prop_map(|(q, p)| Gate::Phase(q, p)),
        (0..3usize, 1..3usize, -TAU..TAU).prop_map(|(c, off, angle)| Gate::ControlledRy {
            control: c,
            target: (c + off) % 3,
            angle
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fixed_basis_obeys_duality(seed in any::<u64>(), v in 0.0..=1.0f64) {
        let c = DetectorCoupling::from_visibility(v).unwrap();
        let k = knowledge_avg(&basis(seed), c).unwrap();
        prop_assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&k.likelihood));
        prop_assert!(k.knowledge * k.knowledge + v * v <= 1.0 + 1e-9);
    }

    #[test]
    fn readout_probabilities_are_distributions(seed in any::<u64>(), v in 0.0..=1.0f64, delta in 0.0..TAU) {
        let c = DetectorCoupling::from_visibility(v).unwrap();
        let b = basis(seed);
        let total: f64 = readout_probs(&b, c).unwrap().iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        if 1.0 + v * delta.cos() > 1e-6 {
            let outcomes = conditional_probs(&b, delta, c).unwrap();
            let total: f64 = outcomes.iter().map(|o| o.probability).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for o in outcomes {
                prop_assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&o.guess_quality));
            }
        }
    }

    #[test]
    fn phase_average_recovers_fixed_knowledge(seed in any::<u64>(), v in 0.0..0.99f64) {
        let c = DetectorCoupling::from_visibility(v).unwrap();
        let b = basis(seed);
        let avg = phase_averaged_knowledge(&b, c).unwrap();
        prop_assert!((avg - knowledge_avg(&b, c).unwrap().knowledge).abs() < 1e-7);
    }

    #[test]
    fn conjugated_basis_mirrors_the_phase(seed in any::<u64>(), v in 0.0..0.99f64, delta in 0.0..TAU) {
        let c = DetectorCoupling::from_visibility(v).unwrap();
        let b = basis(seed);
        let conj = b
            .map_components(|w| ComplexVector::new(&w.iter().map(|z| z.conj()).collect::<Vec<_>>()).unwrap())
            .unwrap();
        let k = knowledge_at(&b, delta, c).unwrap().knowledge;
        let mirrored = knowledge_at(&conj, TAU - delta, c).unwrap().knowledge;
        prop_assert!((k - mirrored).abs() < 1e-12);
    }

    #[test]
    fn simplified_average_surpasses_the_bound(v in 0.001..0.999f64) {
        let k = simplified_avg_closed(v).unwrap();
        prop_assert!(k * k + v * v > 1.0);
    }

    #[test]
    fn sampled_phases_stay_in_one_period(seed in any::<u64>(), v in 0.0..=1.0f64) {
        let mut rng = stream(seed);
        for _ in 0..20 {
            let d = sample_delta(v, &mut rng).unwrap();
            prop_assert!((0.0..TAU).contains(&d));
        }
    }

    #[test]
    fn gate_sequences_are_unitary(gates in prop::collection::vec(gate(), 1..30)) {
        let mut s = CircuitState::new();
        for g in gates {
            s.apply(g).unwrap();
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn protocol_names_round_trip() {
    for p in Protocol::ALL {
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, format!("\"{}\"", p.name()));
        assert_eq!(serde_json::from_str::<Protocol>(&json).unwrap(), p);
    }
}
