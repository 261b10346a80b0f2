mod common;

use common::{density, general_povm, hermitian, projective_povm, rng};
use proptest::prelude::*;
use qcert_core::effective::{
    effective_joint, effective_qc, effective_teleport, party_bsm, reconstruct, transpose_identity_defect, InputSlot, Scenario,
};
use qcert_core::linalg::hermitian_eigenvalues;
use qcert_core::qobjects::{maximally_entangled, standard_complete_set, DensityMatrix};
use qcert_core::tensor::{partial_trace, partial_transpose};
use qcert_core::CMatrix;

#[test]
fn transpose_identity_on_random_operators() {
    for d in [2, 3] {
        for seed in 0..50u64 {
            let mut g = rng(seed * 7 + d as u64);
            let da = 2 + (seed as usize % 2);
            let m = hermitian(&mut g, da * d);
            let defect = transpose_identity_defect(&m, da, d).unwrap();
            assert!(defect <= 1e-10 * (1.0 + m.max_abs()), "d={d} seed={seed}: {defect}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn joint_sets_sum_to_identity(seed: u64, d in 2usize..4) {
        let mut g = rng(seed);
        let rho = density(&mut g, &[d, d], 3);
        let a = general_povm(&mut g, &[d, d], d * d);
        let b = projective_povm(&mut g, &[d, d]);
        let eff = effective_joint(&rho, &a, &b).unwrap();
        prop_assert!(eff.completeness_defect(None) <= 1e-9);
    }

    #[test]
    fn qc_sets_sum_to_identity_per_setting(seed: u64) {
        let mut g = rng(seed);
        let rho = density(&mut g, &[2, 2], 2);
        let a = general_povm(&mut g, &[2, 2], 4);
        let bob = [general_povm(&mut g, &[2], 2), projective_povm(&mut g, &[2])];
        let eff = effective_qc(&rho, &a, &bob).unwrap();
        for y in 0..2 {
            prop_assert!(eff.sum(Some(y)).max_abs_diff(&CMatrix::identity(2)) <= 1e-9);
        }
    }

    #[test]
    fn teleport_sets_sum_to_bob_marginal(seed: u64, d in 2usize..4) {
        let mut g = rng(seed);
        let rho = density(&mut g, &[d, d], 2);
        let a = general_povm(&mut g, &[d, d], d * d);
        let eff = effective_teleport(&rho, &a).unwrap();
        let rho_b = partial_trace(rho.operator(), &[1]).unwrap();
        let expect = CMatrix::identity(d).kron(rho_b.matrix());
        prop_assert!(eff.sum(None).max_abs_diff(&expect) <= 1e-9);
    }

    #[test]
    fn forward_then_reconstruct_is_identity(seed: u64, d in 2usize..4) {
        let mut g = rng(seed);
        let rho = density(&mut g, &[d, d], 2);
        let a = general_povm(&mut g, &[d, d], 3);
        let b = projective_povm(&mut g, &[d, d]);
        let eff = effective_joint(&rho, &a, &b).unwrap();
        let e = standard_complete_set(d).unwrap();
        let table = eff.forward(&[&e, &e]).unwrap();
        let (back, _) = reconstruct(&table, &[&e, &e], Scenario::Joint).unwrap();
        prop_assert_eq!(back.len(), eff.len());
        for (k, m) in eff.entries() {
            let r = back.get(k).unwrap();
            prop_assert!(r.matrix().max_abs_diff(m.matrix()) <= 1e-8);
        }
    }

    #[test]
    fn separable_states_give_ppt_teleport_operators(seed: u64, d in 2usize..4) {
        let mut g = rng(seed);
        let mut rho = density(&mut g, &[d], 1).tensor(&density(&mut g, &[d], 2)).unwrap();
        for _ in 0..3 {
            let term = density(&mut g, &[d], 2).tensor(&density(&mut g, &[d], 1)).unwrap();
            rho = rho.mix(0.5, &term).unwrap();
        }
        let a = general_povm(&mut g, &[d, d], d * d);
        let eff = effective_teleport(&rho, &a).unwrap();
        for m in eff.entries().values() {
            let pt = partial_transpose(m, 0).unwrap();
            prop_assert!(hermitian_eigenvalues(pt.matrix()).unwrap()[0] >= -1e-10);
        }
    }
}

fn min_pt_eigenvalue(d: usize) -> f64 {
    let rho = DensityMatrix::from_pure(&maximally_entangled(d).unwrap());
    let a = party_bsm(d, InputSlot::First, 1.0).unwrap();
    let b = party_bsm(d, InputSlot::Last, 1.0).unwrap();
    let eff = effective_joint(&rho, &a, &b).unwrap();
    eff.entries()
        .values()
        .map(|m| hermitian_eigenvalues(partial_transpose(m, 0).unwrap().matrix()).unwrap()[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The least negative partial-transpose eigenvalue over all outcome pairs is `−1/d³`.
#[test]
fn maximally_entangled_effective_operators_are_not_ppt() {
    let q = min_pt_eigenvalue(2);
    assert!(q < -0.1, "{q}");
    assert!((q + 0.125).abs() < 1e-12);
    let t = min_pt_eigenvalue(3);
    assert!((t + 1.0 / 27.0).abs() < 1e-12, "{t}");
}
