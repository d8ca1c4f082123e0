//! Structural properties of the generated maps on randomly drawn models.

use lrdyn::algebra::{embed, op_norm, LocalOperator, Volume};
use lrdyn::lattice::{DecayBase, DecayFunction, MetricGraph};
use lrdyn::models::{build, Params};
use lrdyn::propagator::{choi_check, cocycle_defect, propagator_matrix};
use lrdyn::thermolimit::{difference_bound, volume_difference, VolumeSequence};
use proptest::prelude::*;

fn random_model(n: usize, seed: u64, strength: f64, gamma: f64) -> lrdyn::generator::GeneratorSpec {
    let vol = Volume::qubits(MetricGraph::chain(n).unwrap()).unwrap();
    let decay = DecayFunction::new(DecayBase::PowerLaw { alpha: 2.5 }, 0.7, vol.graph()).unwrap();
    let p: Params = [("strength".into(), strength), ("gamma".into(), gamma)].into();
    build("random-decaying", &p, vol, Some(decay), Some(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn propagators_are_unital_cp_contractions(
        seed in any::<u64>(),
        strength in 0.0f64..2.0,
        gamma in 0.0f64..1.0,
        s in 0.0f64..1.0,
        dt in 0.0f64..1.5,
    ) {
        let spec = random_model(2, seed, strength, gamma);
        let p = propagator_matrix(&spec, s, s + dt, 1e-11).unwrap();
        prop_assert!(p.unitality_defect().unwrap() <= 1e-9);
        prop_assert!(p.contraction_violation(4, seed).unwrap() <= 1e-9);
        prop_assert!(choi_check(&p).unwrap() >= -1e-8);
    }

    #[test]
    fn cocycle_composes(seed in any::<u64>(), r in 0.0f64..0.5, a in 0.0f64..0.7, b in 0.0f64..0.7) {
        let spec = random_model(2, seed, 1.0, 0.3);
        prop_assert!(cocycle_defect(&spec, r, r + a, r + a + b, 1e-11).unwrap() <= 1e-8);
    }

    #[test]
    fn evolved_observables_do_not_grow(seed in any::<u64>(), site in 0usize..3, t in 0.0f64..2.0) {
        let spec = random_model(3, seed, 1.0, 0.3);
        let a = LocalOperator::pauli("Y", vec![site]).unwrap();
        let out = lrdyn::propagator::evolve(&spec, &a, 0.0, t, 1e-10).unwrap();
        prop_assert!(op_norm(&out) <= 1.0 + 1e-9);
        let full = embed(&a, spec.volume()).unwrap();
        prop_assert!(op_norm(&(out - full)) <= 2.0 + 1e-9);
    }
}

#[test]
fn nested_random_volumes_respect_the_difference_bound() {
    for seed in [1, 2, 3] {
        let spec = random_model(5, seed, 1.0, 0.2);
        let seq = VolumeSequence::centered_chain(spec, &[1, 3, 5]).unwrap();
        let a = LocalOperator::pauli("X", vec![2]).unwrap();
        for (n, m) in [(1, 0), (2, 1), (2, 0)] {
            let d = volume_difference(&seq, &a, n, m, 0.0, 0.4, 1e-10).unwrap();
            let b = difference_bound(&seq, &a, n, m, 0.0, 0.4).unwrap();
            assert!(d <= b, "seed {seed}, {n}/{m}: {d} > {b}");
        }
    }
}
