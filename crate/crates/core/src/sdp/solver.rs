//! Infeasible-start primal-dual interior-point method.
//!
//! Search directions use Nesterov–Todd scaling with a Mehrotra
//! predictor-corrector step. For each block, with `X = LLᵀ` and
//! `LᵀSL = QΛQᵀ`, the scaling matrix is `G = LQΛ^{-1/4}` and `W = GGᵀ`
//! satisfies `WSW = X`. The Schur complement is `M_ij = ⟨A_i, W A_j W⟩`.

use super::problem::{dot, SdpProblem};
use crate::error::Result;
use crate::linalg::{hermitian_eigen, Cholesky, Matrix};
use crate::scalar::RealScalar;
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Fraction of the distance to the cone boundary taken per step.
const STEP_FRACTION: f64 = 0.98;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
    NumericalFailure,
}

/// Which side an infeasibility ray certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// `y` with `bᵀy > 0` and `−Σ y_i A_i ⪰ 0`: no feasible `X`.
    PrimalInfeasible,
    /// `X ⪰ 0` with `A(X) = 0` and `⟨C, X⟩ < 0`: the primal is unbounded.
    DualInfeasible,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions<T> {
    /// Target for relative gap and scaled residuals.
    pub tol: T,
    pub max_iter: usize,
    /// Relative pivot threshold for dropping dependent equalities.
    pub presolve_tol: T,
}

impl<T: RealScalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-8), max_iter: 200, presolve_tol: T::lit(1e-10) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpSolution<T: RealScalar> {
    pub status: SdpStatus,
    pub certificate: Option<Certificate>,
    /// `⟨C, X⟩`.
    pub primal_value: T,
    /// `bᵀy`.
    pub dual_value: T,
    pub x: Vec<Matrix<T>>,
    pub s: Vec<Matrix<T>>,
    /// Dual multipliers, one per original constraint (zero for dropped rows).
    pub y: Vec<T>,
    /// `|⟨C,X⟩ − bᵀy| / (1 + |⟨C,X⟩| + |bᵀy|)`.
    pub gap: T,
    /// `max_i |⟨A_i, X⟩ − b_i| / (1 + max_i |b_i|)` over the constraints kept by presolve.
    pub primal_residual: T,
    /// The same measure over the dropped constraints; large when the data were inconsistent.
    pub dropped_residual: T,
    /// `‖C − S − Σ y_i A_i‖_max / (1 + ‖C‖_max)`.
    pub dual_residual: T,
    /// Smallest eigenvalue over the blocks of `X`.
    pub min_eigenvalue: T,
    pub iterations: usize,
    /// Constraints removed as linearly dependent.
    pub dropped: Vec<usize>,
}

struct Scaling<T: RealScalar> {
    g: Matrix<T>,
    g_inv: Matrix<T>,
    w: Matrix<T>,
    v: Vec<T>,
}

fn sym<T: RealScalar>(m: &Matrix<T>) -> Matrix<T> {
    let t = m.transpose();
    (m + &t).scale_real(T::lit(0.5))
}

fn lower_inverse<T: RealScalar>(l: &Matrix<T>) -> Matrix<T> {
    let n = l.rows();
    let mut inv = Matrix::<T>::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = T::one() / l[(j, j)];
        for i in j + 1..n {
            let mut s = T::zero();
            for k in j..i {
                s += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / l[(i, i)];
        }
    }
    inv
}

fn scaling<T: RealScalar>(x: &Matrix<T>, s: &Matrix<T>) -> Result<Scaling<T>> {
    let l = Cholesky::factor(x)?.lower().clone();
    let lsl = sym(&l.transpose().matmul(s).matmul(&l));
    let eig = hermitian_eigen(&lsl)?;
    let n = x.rows();
    if eig.min_value() <= T::zero() {
        return Err(crate::Error::NumericalConsistency("scaled complementarity lost definiteness".into()));
    }
    let mut g = l.matmul(&eig.vectors);
    let mut g_inv = eig.vectors.transpose().matmul(&lower_inverse(&l));
    let mut v = Vec::with_capacity(n);
    for k in 0..n {
        let lam = eig.values[k];
        let q = lam.powf(T::lit(-0.25));
        for i in 0..n {
            g[(i, k)] *= q;
            g_inv[(k, i)] /= q;
        }
        v.push(lam.sqrt());
    }
    let w = sym(&g.matmul(&g.transpose()));
    Ok(Scaling { g, g_inv, w, v })
}

/// Largest `α` with `M + α D ⪰ 0`, given `L⁻¹` for `M = LLᵀ`.
fn max_step<T: RealScalar>(l_inv: &Matrix<T>, d: &Matrix<T>) -> Result<T> {
    let e = hermitian_eigen(&sym(&l_inv.matmul(d).matmul(&l_inv.transpose())))?;
    let lo = e.min_value();
    Ok(if lo >= T::zero() { T::infinity() } else { -T::one() / lo })
}

fn frob<T: RealScalar>(ms: &[Matrix<T>]) -> T {
    ms.iter().map(|m| dot(m, m)).sum::<T>().sqrt()
}

fn vnorm<T: RealScalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Reduced problem over the blocks that any data touches.
struct Reduced<'a, T: RealScalar> {
    p: &'a SdpProblem<T>,
    /// Original block index of each active block.
    active: Vec<usize>,
    /// Per active block: (row, coefficient) pairs.
    touches: Vec<Vec<(usize, &'a Matrix<T>)>>,
    b: Vec<T>,
    c: Vec<Matrix<T>>,
}

impl<T: RealScalar> Reduced<'_, T> {
    fn apply(&self, x: &[Matrix<T>]) -> Vec<T> {
        let mut out = vec![T::zero(); self.b.len()];
        for (k, t) in self.touches.iter().enumerate() {
            for &(i, a) in t {
                out[i] += dot(a, &x[k]);
            }
        }
        out
    }

    fn adjoint(&self, y: &[T]) -> Vec<Matrix<T>> {
        self.touches
            .iter()
            .zip(&self.c)
            .map(|(t, c)| {
                let mut m = Matrix::zeros(c.rows(), c.cols());
                for &(i, a) in t {
                    m.axpy(y[i], a);
                }
                m
            })
            .collect()
    }
}

/// Solves `p`. Deterministic: identical inputs give bit-identical outputs.
pub fn solve<T: RealScalar>(p: &SdpProblem<T>, opts: &SolverOptions<T>) -> Result<SdpSolution<T>> {
    p.validate()?;
    let keep = p.independent_constraints(opts.presolve_tol);
    let dropped: Vec<usize> = (0..p.constraints.len()).filter(|i| !keep.contains(i)).collect();

    let mut block_touches: Vec<Vec<(usize, &Matrix<T>)>> = vec![Vec::new(); p.blocks.len()];
    for (row, &i) in keep.iter().enumerate() {
        for (k, m) in &p.constraints[i].terms {
            block_touches[*k].push((row, m));
        }
    }
    let active: Vec<usize> = (0..p.blocks.len())
        .filter(|&k| !block_touches[k].is_empty() || p.objective[k].max_abs() > T::zero())
        .collect();
    let red = Reduced {
        p,
        touches: active.iter().map(|&k| std::mem::take(&mut block_touches[k])).collect(),
        c: active.iter().map(|&k| p.objective[k].clone()).collect(),
        b: keep.iter().map(|&i| p.constraints[i].rhs).collect(),
        active,
    };
    let m = red.b.len();
    let n: usize = red.active.iter().map(|&k| p.blocks[k]).sum();
    let nf = T::from_usize(n.max(1)).expect("dimension fits");

    // Identity-multiple start sized by the data norms.
    let ten = T::lit(10.0);
    let mut xi = ten.max(nf.sqrt());
    let mut eta = ten.max(nf.sqrt()).max(frob(&red.c));
    for (row, &i) in keep.iter().enumerate() {
        let an = p.constraints[i].terms.iter().map(|(_, a)| dot(a, a)).sum::<T>().sqrt();
        xi = xi.max(nf * (T::one() + red.b[row].abs()) / (T::one() + an));
        eta = eta.max(an);
    }
    let mut x: Vec<Matrix<T>> = red.c.iter().map(|c| Matrix::identity(c.rows()).scale_real(xi)).collect();
    let mut s: Vec<Matrix<T>> = red.c.iter().map(|c| Matrix::identity(c.rows()).scale_real(eta)).collect();
    let mut y = vec![T::zero(); m];

    let b_max = red.b.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    let c_max = red.c.iter().map(|c| c.max_abs()).fold(T::zero(), T::max);
    let tol = opts.tol;
    let frac = T::lit(STEP_FRACTION);
    let mut status = SdpStatus::MaxIter;
    let mut certificate = None;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let ax = red.apply(&x);
        let rp: Vec<T> = red.b.iter().zip(&ax).map(|(&b, &a)| b - a).collect();
        let aty = red.adjoint(&y);
        let rd: Vec<Matrix<T>> = red.c.iter().zip(&s).zip(&aty).map(|((c, sk), ak)| &(c - sk) - ak).collect();
        let xs: T = x.iter().zip(&s).map(|(a, b)| dot(a, b)).sum();
        let pobj: T = red.c.iter().zip(&x).map(|(c, xk)| dot(c, xk)).sum();
        let dobj: T = red.b.iter().zip(&y).map(|(&b, &yy)| b * yy).sum();
        let denom = T::one() + pobj.abs() + dobj.abs();
        let pinf = rp.iter().map(|v| v.abs()).fold(T::zero(), T::max) / (T::one() + b_max);
        let dinf = rd.iter().map(|r| r.max_abs()).fold(T::zero(), T::max) / (T::one() + c_max);
        let gap = ((pobj - dobj).abs()).max(xs) / denom;
        if !(Float::is_finite(pinf) && Float::is_finite(dinf) && Float::is_finite(gap)) {
            status = SdpStatus::NumericalFailure;
            break;
        }
        if pinf <= tol && dinf <= tol && gap <= tol {
            status = SdpStatus::Optimal;
            break;
        }
        if dobj > T::zero() && pinf > tol {
            let ray: Vec<Matrix<T>> = aty.iter().zip(&s).map(|(a, sk)| a + sk).collect();
            if frob(&ray) / dobj <= tol {
                status = SdpStatus::Infeasible;
                certificate = Some(Certificate::PrimalInfeasible);
                break;
            }
        }
        if pobj < T::zero() && dinf > tol && vnorm(&ax) / (-pobj) <= tol {
            status = SdpStatus::Infeasible;
            certificate = Some(Certificate::DualInfeasible);
            break;
        }
        iterations += 1;

        let mu = xs / nf;
        let scal: Vec<Scaling<T>> = match x.iter().zip(&s).map(|(a, b)| scaling(a, b)).collect::<Result<_>>() {
            Ok(v) => v,
            Err(_) => {
                status = SdpStatus::NumericalFailure;
                break;
            }
        };

        // Schur complement.
        let mut schur = Matrix::<T>::zeros(m, m);
        for (k, t) in red.touches.iter().enumerate() {
            let w = &scal[k].w;
            for (jj, &(j, aj)) in t.iter().enumerate() {
                let waw = w.matmul(aj).matmul(w);
                for &(i, ai) in &t[..=jj] {
                    let v = dot(ai, &waw);
                    schur[(i, j)] += v;
                    if i != j {
                        schur[(j, i)] += v;
                    }
                }
            }
        }
        let chol = {
            let mut attempt = Cholesky::factor(&schur);
            let diag_max = (0..m).map(|i| schur[(i, i)].abs()).fold(T::zero(), T::max);
            let mut reg = T::lit(1e-14) * diag_max.max(T::one());
            for _ in 0..4 {
                if attempt.is_ok() {
                    break;
                }
                let mut shifted = schur.clone();
                for i in 0..m {
                    shifted[(i, i)] += reg;
                }
                attempt = Cholesky::factor(&shifted);
                reg = reg * T::lit(100.0);
            }
            match attempt {
                Ok(c) => c,
                Err(_) => {
                    status = SdpStatus::NumericalFailure;
                    break;
                }
            }
        };
        let wrw: Vec<Matrix<T>> = scal.iter().zip(&rd).map(|(sc, r)| sc.w.matmul(r).matmul(&sc.w)).collect();
        let a_wrw = red.apply(&wrw);

        let direction = |target: &dyn Fn(usize, usize, usize) -> T| -> (Vec<Matrix<T>>, Vec<T>, Vec<Matrix<T>>) {
            let rx: Vec<Matrix<T>> = scal
                .iter()
                .enumerate()
                .map(|(k, sc)| {
                    let nk = sc.v.len();
                    let rt = Matrix::from_fn(nk, nk, |i, j| target(k, i, j) / (sc.v[i] + sc.v[j]));
                    sym(&sc.g.matmul(&rt).matmul(&sc.g.transpose()))
                })
                .collect();
            let a_rx = red.apply(&rx);
            let rhs: Vec<T> = (0..m).map(|i| rp[i] - a_rx[i] + a_wrw[i]).collect();
            let dy = chol.solve(&rhs);
            let atdy = red.adjoint(&dy);
            let ds: Vec<Matrix<T>> = rd.iter().zip(&atdy).map(|(r, a)| sym(&(r - a))).collect();
            let dx: Vec<Matrix<T>> = rx
                .iter()
                .zip(&ds)
                .zip(&scal)
                .map(|((r, d), sc)| sym(&(r - &sc.w.matmul(d).matmul(&sc.w))))
                .collect();
            (dx, dy, ds)
        };
        let steps = |dx: &[Matrix<T>], ds: &[Matrix<T>]| -> Result<(T, T)> {
            let mut ap = T::one();
            let mut ad = T::one();
            for k in 0..x.len() {
                let lx = lower_inverse(Cholesky::factor(&x[k])?.lower());
                let ls = lower_inverse(Cholesky::factor(&s[k])?.lower());
                ap = ap.min(frac * max_step(&lx, &dx[k])?);
                ad = ad.min(frac * max_step(&ls, &ds[k])?);
            }
            Ok((ap, ad))
        };

        // Predictor.
        let two = T::lit(2.0);
        let (dx_a, _, ds_a) = direction(&|k, i, j| if i == j { -two * scal[k].v[i] * scal[k].v[i] } else { T::zero() });
        let Ok((ap, ad)) = steps(&dx_a, &ds_a) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let mut mu_aff = T::zero();
        for k in 0..x.len() {
            let xa = &x[k] + &dx_a[k].scale_real(ap);
            let sa = &s[k] + &ds_a[k].scale_real(ad);
            mu_aff += dot(&xa, &sa);
        }
        mu_aff /= nf;
        let sigma = (mu_aff / mu).max(T::zero()).min(T::one()).powi(3);

        // Corrector.
        let corr: Vec<Matrix<T>> = scal
            .iter()
            .zip(dx_a.iter().zip(&ds_a))
            .map(|(sc, (dx, ds))| {
                let xt = sc.g_inv.matmul(dx).matmul(&sc.g_inv.transpose());
                let st = sc.g.transpose().matmul(ds).matmul(&sc.g);
                let p = xt.matmul(&st);
                &p + &p.transpose()
            })
            .collect();
        let (dx, dy, ds) = direction(&|k, i, j| {
            let base = if i == j { two * (sigma * mu - scal[k].v[i] * scal[k].v[i]) } else { T::zero() };
            base - corr[k][(i, j)]
        });
        let Ok((ap, ad)) = steps(&dx, &ds) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        for k in 0..x.len() {
            x[k] = sym(&(&x[k] + &dx[k].scale_real(ap)));
            s[k] = sym(&(&s[k] + &ds[k].scale_real(ad)));
        }
        for i in 0..m {
            y[i] += ad * dy[i];
        }
    }

    Ok(finish(&red, &keep, x, s, y, status, certificate, iterations, dropped, tol))
}

#[allow(clippy::too_many_arguments)]
fn finish<T: RealScalar>(
    red: &Reduced<'_, T>,
    keep: &[usize],
    x: Vec<Matrix<T>>,
    s: Vec<Matrix<T>>,
    y: Vec<T>,
    mut status: SdpStatus,
    certificate: Option<Certificate>,
    iterations: usize,
    dropped: Vec<usize>,
    tol: T,
) -> SdpSolution<T> {
    let p = red.p;
    let mut full_x: Vec<Matrix<T>> = p.blocks.iter().map(|&n| Matrix::zeros(n, n)).collect();
    let mut full_s = full_x.clone();
    for (k, &orig) in red.active.iter().enumerate() {
        full_x[orig] = x[k].clone();
        full_s[orig] = s[k].clone();
    }
    let mut full_y = vec![T::zero(); p.constraints.len()];
    for (row, &i) in keep.iter().enumerate() {
        full_y[i] = y[row];
    }
    let primal_value = p.objective_value(&full_x);
    let dual_value: T = p.constraints.iter().zip(&full_y).map(|(c, &yy)| c.rhs * yy).sum();
    let gap = (primal_value - dual_value).abs() / (T::one() + primal_value.abs() + dual_value.abs());
    let b_max = p.constraints.iter().map(|c| c.rhs.abs()).fold(T::zero(), T::max);
    let ax = p.apply(&full_x);
    let residual_over = |rows: &[usize]| {
        rows.iter().map(|&i| (ax[i] - p.constraints[i].rhs).abs()).fold(T::zero(), T::max) / (T::one() + b_max)
    };
    let primal_residual = residual_over(keep);
    let dropped_residual = residual_over(&dropped);
    let c_max = p.objective.iter().map(|c| c.max_abs()).fold(T::zero(), T::max);
    let mut dual_residual = T::zero();
    for k in 0..p.blocks.len() {
        let mut r = &p.objective[k] - &full_s[k];
        for (c, &yy) in p.constraints.iter().zip(&full_y) {
            for (kk, a) in &c.terms {
                if *kk == k {
                    r.axpy(-yy, a);
                }
            }
        }
        dual_residual = dual_residual.max(r.max_abs());
    }
    dual_residual /= T::one() + c_max;
    let min_eigenvalue = full_x
        .iter()
        .filter(|m| m.rows() > 0)
        .map(|m| hermitian_eigen(m).map(|e| e.min_value()).unwrap_or_else(|_| T::nan()))
        .fold(T::infinity(), T::min);
    if status == SdpStatus::Optimal {
        let ok = gap <= tol && primal_residual <= tol && dual_residual <= tol && min_eigenvalue >= -tol;
        if !ok {
            status = SdpStatus::NumericalFailure;
        }
    }
    SdpSolution {
        status,
        certificate,
        primal_value,
        dual_value,
        x: full_x,
        s: full_s,
        y: full_y,
        gap,
        primal_residual,
        dropped_residual,
        dual_residual,
        min_eigenvalue,
        iterations,
        dropped,
    }
}
