mod common;

use common::{density, general_povm, projective_povm, rng};
use proptest::prelude::*;
use qcert_core::effective::{born_table, InputSlot};
use qcert_core::linalg::hermitian_eigenvalues;
use qcert_core::qobjects::{
    bell_basis, bsm, correcting_unitary, is_tomographically_complete, maximally_entangled, noisy_bsm, pure_equivalent,
    standard_complete_set, DensityMatrix, Povm,
};
use qcert_core::CMatrix;

#[test]
fn shifted_phi_plus_is_the_bell_basis() {
    for d in 2..=4 {
        let phi = maximally_entangled(d).unwrap();
        let basis = bell_basis(d).unwrap();
        for (m, psi) in basis.iter().enumerate() {
            let u = correcting_unitary(m, d).unwrap().kron(&CMatrix::identity(d));
            let shifted = phi.apply(&u).unwrap();
            let diff = shifted.amplitudes().iter().zip(psi.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-14, "d={d} m={m}: {diff}");
        }
    }
}

fn assert_valid(p: &Povm, tol: f64) {
    let n = p.dims().iter().product();
    let mut sum = CMatrix::zeros(n, n);
    for e in p.effects() {
        assert!(hermitian_eigenvalues(e.matrix()).unwrap()[0] >= -tol);
        sum = &sum + e.matrix();
    }
    assert!(sum.max_abs_diff(&CMatrix::identity(n)) < tol);
}

#[test]
fn bell_measurement_is_rank_one_orthogonal_and_complete() {
    for d in 2..=4 {
        let p = bsm(d).unwrap();
        assert_eq!(p.len(), d * d);
        assert_valid(&p, 1e-12);
        for i in 0..p.len() {
            let e = p.effect(i);
            assert!(e.matmul(e).max_abs_diff(e) < 1e-12);
            assert!((e.trace().re - 1.0).abs() < 1e-12);
            for j in i + 1..p.len() {
                assert!(e.matmul(p.effect(j)).max_abs() < 1e-12);
            }
        }
    }
}

#[test]
fn standard_sets_are_complete() {
    for d in 2..=5 {
        let rep = is_tomographically_complete(&standard_complete_set(d).unwrap()).unwrap();
        assert!(rep.complete, "d={d}: rank {} of {}", rep.rank, rep.required);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noisy_bell_measurement_is_valid(eta in 0.0f64..=1.0, d in 2usize..4) {
        assert_valid(&noisy_bsm(d, eta).unwrap(), 1e-12);
    }
}

/// Full tables for the mixed state and its pure equivalent, on 24 random setups.
#[test]
fn pure_equivalent_preserves_statistics() {
    let mut worst: f64 = 0.0;
    for seed in 0..24u64 {
        let mut g = rng(1000 + seed);
        let (da, db) = if seed % 3 == 0 { (2, 3) } else { (2, 2) };
        let rho = density(&mut g, &[da, db], 1 + (seed as usize % 4));
        let alice = if seed % 2 == 0 { projective_povm(&mut g, &[da, da]) } else { general_povm(&mut g, &[da, da], 3) };
        let bob = general_povm(&mut g, &[db, 2], 2 + seed as usize % 3);
        let eq = pure_equivalent(&rho, &bob).unwrap();
        let ea = standard_complete_set(da).unwrap();
        let eb = standard_complete_set(2).unwrap();
        let parties = |b| [(&alice, InputSlot::First), (b, InputSlot::Last)];
        let t0 = born_table(&rho, &parties(&bob), &[&ea, &eb]).unwrap();
        let t1 = born_table(&DensityMatrix::from_pure(&eq.state), &parties(&eq.povm), &[&ea, &eb]).unwrap();
        assert_eq!(t0.len(), t1.len());
        worst = worst.max(t0.max_abs_diff(&t1));
    }
    assert!(worst <= 1e-10, "{worst}");
}
