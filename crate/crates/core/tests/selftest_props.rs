mod common;

use common::{density, general_povm, projective_povm, rng, rotate_second, unitary};
use proptest::prelude::*;
use qcert_core::effective::{born_table_qc, effective_joint, party_bsm, InputSlot, ProbKey, ProbTable};
use qcert_core::qobjects::{maximally_entangled, observable_povm, pauli, pure_equivalent, qc_inputs, DensityMatrix};
use qcert_core::selftest::{
    check_theorem1, chsh_observables, circuit_output, iqc, iqc_groups, qc_key, swap_output, CircuitMode,
};
use qcert_core::CMatrix;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn swap_output_has_unit_trace(seed: u64, d in 2usize..4) {
        let mut g = rng(seed);
        let rho = density(&mut g, &[d, d], 3);
        let a = general_povm(&mut g, &[d, d], d * d);
        let b = general_povm(&mut g, &[d, d], d * d);
        let out = swap_output(&effective_joint(&rho, &a, &b).unwrap(), d).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn circuit_matches_swap_output_for_projective_measurements() {
    for d in [2, 3] {
        for seed in 0..20u64 {
            let mut g = rng(seed + 100 * d as u64);
            let rho = density(&mut g, &[d, d], 1 + seed as usize % 3);
            let a = projective_povm(&mut g, &[d, d]);
            let b = projective_povm(&mut g, &[d, d]);
            let sw = swap_output(&effective_joint(&rho, &a, &b).unwrap(), d).unwrap();
            let c = circuit_output(&rho, &a, &b, CircuitMode::SqrtKraus).unwrap();
            let diff = c.matrix().max_abs_diff(sw.matrix());
            assert!(diff <= 1e-10, "d={d} seed={seed}: {diff}");
        }
    }
}

fn random_qc_table(seed: u64) -> ProbTable {
    let mut g = rng(seed);
    let mut t = ProbTable::default();
    for a in 0..4 {
        for b in 0..2 {
            for x in 0..4 {
                for y in 0..2 {
                    t.insert(qc_key(a, b, x, y), common::gaussian(&mut g).re);
                }
            }
        }
    }
    t
}

fn relabel(t: &ProbTable, outcome: [usize; 4], input: [usize; 4]) -> ProbTable {
    let mut out = ProbTable::default();
    for (k, p) in t.iter() {
        let key = ProbKey { outcomes: vec![outcome[k.outcomes[0]], k.outcomes[1]], inputs: vec![input[k.inputs[0]]], setting: k.setting };
        out.insert(key, p);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iqc_is_linear(s1: u64, s2: u64, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let (t1, t2) = (random_qc_table(s1), random_qc_table(s2));
        let mut comb = ProbTable::default();
        for (k, p) in t1.iter() {
            comb.insert(k.clone(), alpha * p + beta * t2.get(k).unwrap());
        }
        let lhs = iqc(&comb).unwrap();
        let rhs = alpha * iqc(&t1).unwrap() + beta * iqc(&t2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    /// Swapping outcomes 0↔1 and 2↔3 exchanges the terms of the `|+⟩`/`|−⟩`
    /// groups; swapping 0↔2 and 1↔3 exchanges those of the `|0⟩`/`|1⟩` groups.
    #[test]
    fn iqc_is_invariant_under_consistent_relabelling(seed: u64) {
        let t = random_qc_table(seed);
        let v = iqc(&t).unwrap();
        let within_pairs = relabel(&t, [1, 0, 3, 2], [0, 1, 3, 2]);
        let across_pairs = relabel(&t, [2, 3, 0, 1], [1, 0, 2, 3]);
        prop_assert!((iqc(&within_pairs).unwrap() - v).abs() <= 1e-12);
        prop_assert!((iqc(&across_pairs).unwrap() - v).abs() <= 1e-12);
        let mut groups = iqc_groups(&within_pairs).unwrap();
        groups.swap(2, 3);
        for (x, y) in groups.iter().zip(iqc_groups(&t).unwrap()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn chsh_observables_are_valid_for_any_measurement(seed: u64) {
        let mut g = rng(seed);
        let p = general_povm(&mut g, &[2, 2], 4);
        for slot in [InputSlot::First, InputSlot::Last] {
            for o in chsh_observables(&p, slot).unwrap() {
                prop_assert!(o.validity_defect().unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn chsh_observables_square_to_identity_for_rotated_bell_measurements(seed: u64) {
        let mut g = rng(seed);
        let v = unitary(&mut g, 2);
        let a = rotate_second(&party_bsm(2, InputSlot::First, 1.0).unwrap(), &v);
        for o in chsh_observables(&a, InputSlot::First).unwrap() {
            let x = o.observable();
            prop_assert!(x.matmul(&x).max_abs_diff(&CMatrix::identity(2)) <= 1e-9);
        }
    }

    #[test]
    fn bipartite_residuals_survive_purification(seed: u64) {
        let mut g = rng(seed);
        let rho = density(&mut g, &[2, 2], 1 + (seed % 4) as usize);
        let a = projective_povm(&mut g, &[2, 2]);
        let b = general_povm(&mut g, &[2, 2], 4);
        let eq = pure_equivalent(&rho, &b).unwrap();
        let phi = maximally_entangled(2).unwrap();
        let r0 = check_theorem1(&effective_joint(&rho, &a, &b).unwrap(), &phi, 1e-6).unwrap();
        let pure = DensityMatrix::from_pure(&eq.state);
        let r1 = check_theorem1(&effective_joint(&pure, &a, &eq.povm).unwrap(), &phi, 1e-6).unwrap();
        prop_assert_eq!(r0.residuals.len(), r1.residuals.len());
        for (k, v) in &r0.residuals {
            prop_assert!((v - r1.residuals[k]).abs() <= 1e-9, "{k}");
        }
        prop_assert!((r0.fidelity_estimate.unwrap() - r1.fidelity_estimate.unwrap()).abs() <= 1e-9);
    }
}

#[test]
fn ideal_qc_groups_each_reach_one() {
    let [sx, _, sz] = pauli();
    let bob = [observable_povm(&sz).unwrap(), observable_povm(&sx).unwrap()];
    let rho = DensityMatrix::from_pure(&maximally_entangled(2).unwrap());
    let a = party_bsm(2, InputSlot::First, 1.0).unwrap();
    let table = born_table_qc(&rho, &a, &bob, &qc_inputs()).unwrap();
    for s in iqc_groups(&table).unwrap() {
        assert!((s - 1.0).abs() <= 1e-10, "{s}");
    }
}
