mod common;

use common::{density, general_povm, pure_state, rng, rotate_second};
use proptest::prelude::*;
use qcert_core::effective::{effective_teleport, party_bsm, InputSlot};
use qcert_core::linalg::hermitian_eigenvalues;
use qcert_core::network::{certify_chain, chain_fidelity, swap_once, ChainSpec};
use qcert_core::qobjects::{
    bell_basis, isotropic_state, maximally_entangled, noisy_bsm, pauli, pauli_six, standard_complete_set, DensityMatrix,
    InputEnsemble,
};
use qcert_core::telecert::{
    average_fidelity, fidelity_lower_bound, hhh_state_fidelity, reconstruct_teleport, rho_o, teleport,
};
use qcert_core::tensor::pure_fidelity;

fn bound(rho: &DensityMatrix, povm: &qcert_core::qobjects::Povm, e: &InputEnsemble) -> f64 {
    let data = teleport(rho, povm, e).unwrap();
    let b = fidelity_lower_bound(&data).unwrap();
    b.value.unwrap_or_else(|| panic!("solver status {:?}", b.status))
}

fn phi_plus_fidelity(op: &qcert_core::Operator, d: usize) -> f64 {
    pure_fidelity(op, maximally_entangled(d).unwrap().amplitudes()).unwrap()
}

fn random_ensemble(seed: u64, n: usize) -> InputEnsemble {
    let mut g = rng(seed);
    InputEnsemble::new((0..n).map(|_| pure_state(&mut g, &[2])).collect(), (0..n).map(|i| i.to_string()).collect()).unwrap()
}

/// The true effective measurement is feasible, so the bound never exceeds the
/// fidelity of the state it induces. Alice's measurement enters that state as
/// a channel, so the shared state alone does not cap the bound.
#[test]
fn bound_is_sound_against_the_induced_state() {
    for seed in 0..20u64 {
        let mut g = rng(500 + seed);
        let rho = density(&mut g, &[2, 2], 1 + seed as usize % 4);
        let povm = general_povm(&mut g, &[2, 2], 4);
        let e = if seed % 2 == 0 { pauli_six() } else { random_ensemble(seed, 3) };
        let b = bound(&rho, &povm, &e);
        let f = phi_plus_fidelity(&rho_o(&effective_teleport(&rho, &povm).unwrap(), 2).unwrap(), 2);
        assert!(b <= f + 1e-5, "seed {seed}: bound {b} above {f}");
    }
}

#[test]
fn ideal_bell_measurement_bound_is_sound_against_the_shared_state() {
    let bsm = party_bsm(2, InputSlot::First, 1.0).unwrap();
    for seed in 0..20u64 {
        let mut g = rng(700 + seed);
        let rho = density(&mut g, &[2, 2], 1 + seed as usize % 4);
        let e = if seed % 2 == 0 { standard_complete_set(2).unwrap() } else { random_ensemble(seed, 2) };
        let b = bound(&rho, &bsm, &e);
        let f = rho.fidelity(&maximally_entangled(2).unwrap()).unwrap();
        assert!(b <= f + 1e-5, "seed {seed}: bound {b} above {f}");
    }
}

/// A phase flip inside Alice's device undoes the one on the shared `φ⁻`.
#[test]
fn rotated_measurement_certifies_phi_plus_from_phi_minus() {
    let phi_minus = DensityMatrix::from_pure(&bell_basis(2).unwrap()[1]);
    assert!(phi_minus.fidelity(&maximally_entangled(2).unwrap()).unwrap().abs() < 1e-12);
    let rotated = rotate_second(&party_bsm(2, InputSlot::First, 1.0).unwrap(), &pauli()[2]);
    let b = bound(&phi_minus, &rotated, &pauli_six());
    assert!((b - 1.0).abs() < 1e-4, "{b}");
}

#[test]
fn more_inputs_never_lower_the_bound() {
    for seed in 0..8u64 {
        let mut g = rng(900 + seed);
        let rho = density(&mut g, &[2, 2], 2);
        let povm = general_povm(&mut g, &[2, 2], 4);
        let small = random_ensemble(seed, 2);
        let large = small.extended(&random_ensemble(seed + 50, 2)).unwrap();
        let (b1, b2) = (bound(&rho, &povm, &small), bound(&rho, &povm, &large));
        assert!(b1 <= b2 + 1e-6, "seed {seed}: {b1} > {b2}");
    }
}

#[test]
fn complete_ensemble_bound_is_tight_on_isotropic_states() {
    for (d, ps) in [(2, vec![0.1, 0.4, 0.9]), (3, vec![0.35, 0.8])] {
        let e = standard_complete_set(d).unwrap();
        let bsm = party_bsm(d, InputSlot::First, 1.0).unwrap();
        for p in ps {
            let fs = p + (1.0 - p) / (d * d) as f64;
            let b = bound(&isotropic_state(d, p).unwrap(), &bsm, &e);
            assert!((b - fs).abs() < 1e-4, "d={d} p={p}: {b} vs {fs}");
        }
    }
}

#[test]
fn complete_ensemble_bound_equals_reconstructed_fidelity() {
    for seed in 0..10u64 {
        let mut g = rng(1100 + seed);
        let rho = density(&mut g, &[2, 2], 2);
        let povm = general_povm(&mut g, &[2, 2], 4);
        let data = teleport(&rho, &povm, &pauli_six()).unwrap();
        let b = fidelity_lower_bound(&data).unwrap().value.unwrap();
        let f = phi_plus_fidelity(&rho_o(&reconstruct_teleport(&data).unwrap(), 2).unwrap(), 2);
        assert!((b - f).abs() < 1e-5, "seed {seed}: {b} vs {f}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn average_fidelity_inverts_to_state_fidelity(p in 0.0f64..=1.0, d in 2usize..4) {
        let data = teleport(&isotropic_state(d, p).unwrap(), &party_bsm(d, InputSlot::First, 1.0).unwrap(), &standard_complete_set(d).unwrap()).unwrap();
        let fs = p + (1.0 - p) / (d * d) as f64;
        let h = hhh_state_fidelity(average_fidelity(&data).unwrap(), d);
        prop_assert!((h.value - fs).abs() <= 1e-8);
    }

    #[test]
    fn swapping_preserves_trace_and_positivity(seed: u64, d in 2usize..4, eta in 0.0f64..=1.0) {
        let mut g = rng(seed);
        let l = density(&mut g, &[d, d], 2);
        let r = density(&mut g, &[d, d], 3);
        let out = swap_once(&l, &r, &noisy_bsm(d, eta).unwrap()).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() <= 1e-9);
        prop_assert!(hermitian_eigenvalues(out.matrix()).unwrap()[0] >= -1e-9);
    }
}

#[test]
fn chain_bound_is_sound() {
    let e = standard_complete_set(2).unwrap();
    for (n, p, eta) in [(1, 0.8, 1.0), (2, 0.9, 0.95), (3, 0.95, 0.9), (4, 0.97, 0.99)] {
        let spec = ChainSpec::uniform(2, n, p, eta).unwrap();
        let b = certify_chain(&spec, &e).unwrap().value.unwrap();
        let f = chain_fidelity(&spec).unwrap();
        assert!(b <= f + 1e-4, "{n} links: {b} above {f}");
    }
}

#[test]
fn appending_links_never_raises_fidelity() {
    for p in [0.7, 0.9, 0.99] {
        let f: Vec<f64> = (1..=4).map(|n| chain_fidelity(&ChainSpec::uniform(2, n, p, 1.0).unwrap()).unwrap()).collect();
        assert!(f.windows(2).all(|w| w[1] <= w[0] + 1e-12), "p={p}: {f:?}");
    }
}

#[test]
fn chain_bound_falls_with_node_noise() {
    let e = standard_complete_set(2).unwrap();
    let bounds: Vec<f64> = [1.0, 0.95, 0.9, 0.85, 0.8]
        .iter()
        .map(|&eta| certify_chain(&ChainSpec::uniform(2, 3, 0.95, eta).unwrap(), &e).unwrap().value.unwrap())
        .collect();
    assert!(bounds.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{bounds:?}");
}
