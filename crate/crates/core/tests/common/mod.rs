//! Random quantum objects for property tests.
#![allow(dead_code)]

use qcert_core::linalg::{hermitian_fn, vec_inner, vec_norm};
use qcert_core::qobjects::{DensityMatrix, Povm, PureState};
use qcert_core::tensor::SystemShape;
use qcert_core::{c64, CMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> c64 {
    c64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

pub fn ginibre(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    ginibre(rng, n, n).hermitian_part()
}

/// Haar-distributed unitary by Gram–Schmidt on Gaussian columns.
pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = ginibre(rng, n, n);
    let mut u = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut v = g.col(j);
        for k in 0..j {
            let q = u.col(k);
            let p = vec_inner(&q, &v);
            for (vi, qi) in v.iter_mut().zip(&q) {
                *vi -= p * qi;
            }
        }
        let norm = vec_norm(&v);
        let v: Vec<c64> = v.iter().map(|x| x / norm).collect();
        u.set_col(j, &v);
    }
    u
}

pub fn pure_state(rng: &mut ChaCha8Rng, dims: &[usize]) -> PureState {
    let n = dims.iter().product();
    let v = (0..n).map(|_| gaussian(rng)).collect();
    PureState::normalized(v, SystemShape::new(dims.to_vec()).unwrap()).unwrap()
}

/// `G G† / Tr` with `G` of the given column rank.
pub fn density(rng: &mut ChaCha8Rng, dims: &[usize], rank: usize) -> DensityMatrix {
    let n = dims.iter().product();
    let g = ginibre(rng, n, rank);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    DensityMatrix::from_matrix(m.scale_real(1.0 / tr).hermitian_part(), dims.to_vec()).unwrap()
}

/// Rank-one projectors onto the columns of a random unitary.
pub fn projective_povm(rng: &mut ChaCha8Rng, dims: &[usize]) -> Povm {
    let n = dims.iter().product();
    let u = unitary(rng, n);
    let effects = (0..n).map(|k| CMatrix::outer(&u.col(k), &u.col(k))).collect();
    Povm::from_matrices(effects, dims.to_vec()).unwrap()
}

/// `S^{-1/2} G_k S^{-1/2}` with Wishart `G_k` and `S = Σ G_k`.
pub fn general_povm(rng: &mut ChaCha8Rng, dims: &[usize], outcomes: usize) -> Povm {
    let n: usize = dims.iter().product();
    let rank = n.div_ceil(outcomes) + 1;
    let gs: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let a = ginibre(rng, n, rank);
            a.matmul(&a.adjoint())
        })
        .collect();
    let mut s = CMatrix::zeros(n, n);
    for g in &gs {
        s.axpy(c64::new(1.0, 0.0), g);
    }
    let w = hermitian_fn(&s, |x| 1.0 / x.sqrt()).unwrap();
    let effects = gs.iter().map(|g| w.matmul(g).matmul(&w).hermitian_part()).collect();
    Povm::from_matrices(effects, dims.to_vec()).unwrap()
}

/// `(1⊗V) P (1⊗V)†` for every effect of a measurement on `A⊗B`, `V` acting on `B`.
pub fn rotate_second(p: &Povm, v: &CMatrix) -> Povm {
    let da = p.dims()[0];
    let w = CMatrix::identity(da).kron(v);
    let effects = p.effects().iter().map(|e| w.matmul(e.matrix()).matmul(&w.adjoint()).hermitian_part()).collect();
    Povm::from_matrices(effects, p.dims().to_vec()).unwrap()
}
