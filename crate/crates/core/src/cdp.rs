//! Signal-value estimation: minimizes the Hamiltonian over `r` at fixed
//! support by solving the support-restricted normal equations. Off-support
//! entries are exactly zero.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::problem::Instance;

#[derive(Debug, Error)]
pub enum CdpError {
    #[error("rank-deficient support of size {support_size} (m = {m}, condition ≈ {condition:.3e})")]
    RankDeficient {
        support_size: usize,
        m: usize,
        condition: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

fn support_indices(support: &[bool]) -> Vec<usize> {
    support
        .iter()
        .enumerate()
        .filter_map(|(i, &on)| on.then_some(i))
        .collect()
}

fn restricted_columns(inst: &Instance, idx: &[usize]) -> DMatrix<f64> {
    let mut a_s = DMatrix::zeros(inst.m(), idx.len());
    for (c, &j) in idx.iter().enumerate() {
        a_s.column_mut(c).copy_from(&inst.a_mat.column(j));
    }
    a_s
}

/// Condition estimate of an SPD matrix from power iteration (largest
/// eigenvalue) and inverse iteration through its Cholesky factor (smallest).
fn spd_condition_estimate(gram: &DMatrix<f64>, chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let k = gram.nrows();
    if k == 0 {
        return 1.0;
    }
    let mut v = DVector::from_element(k, 1.0 / (k as f64).sqrt());
    let mut lam_max = 0.0;
    for _ in 0..30 {
        let w = gram * &v;
        lam_max = w.norm();
        if lam_max == 0.0 {
            return f64::INFINITY;
        }
        v = w / lam_max;
    }
    let mut u = DVector::from_element(k, 1.0 / (k as f64).sqrt());
    let mut inv_norm = 0.0;
    for _ in 0..30 {
        let w = chol.solve(&u);
        inv_norm = w.norm();
        if !inv_norm.is_finite() || inv_norm == 0.0 {
            return f64::INFINITY;
        }
        u = w / inv_norm;
    }
    lam_max * inv_norm
}

const CONDITION_LIMIT: f64 = 1e12;

/// Solves `(A_Sᵀ A_S) r_S = A_Sᵀ y` on the support and embeds the result;
/// `r_i = 0` exactly where the support is off.
pub fn solve_signal(inst: &Instance, support: &[bool]) -> Result<DVector<f64>, CdpError> {
    if support.len() != inst.n() {
        return Err(CdpError::DimensionMismatch {
            expected: inst.n(),
            got: support.len(),
        });
    }
    let idx = support_indices(support);
    let mut r = DVector::zeros(inst.n());
    if idx.is_empty() {
        return Ok(r);
    }
    if idx.len() > inst.m() {
        return Err(CdpError::RankDeficient {
            support_size: idx.len(),
            m: inst.m(),
            condition: f64::INFINITY,
        });
    }
    let a_s = restricted_columns(inst, &idx);
    let gram = a_s.tr_mul(&a_s);
    let rhs = a_s.tr_mul(&inst.y);
    let chol = nalgebra::Cholesky::new(gram.clone()).ok_or(CdpError::RankDeficient {
        support_size: idx.len(),
        m: inst.m(),
        condition: f64::INFINITY,
    })?;
    let condition = spd_condition_estimate(&gram, &chol);
    if condition > CONDITION_LIMIT {
        return Err(CdpError::RankDeficient {
            support_size: idx.len(),
            m: inst.m(),
            condition,
        });
    }
    let r_s = chol.solve(&rhs);
    for (c, &j) in idx.iter().enumerate() {
        r[j] = r_s[c];
    }
    Ok(r)
}

/// Least-squares fallback for rank-deficient supports: minimum-norm solution
/// of `min ‖y − A_S r_S‖` via SVD.
pub fn solve_signal_lstsq(inst: &Instance, support: &[bool]) -> DVector<f64> {
    let idx = support_indices(support);
    let mut r = DVector::zeros(inst.n());
    if idx.is_empty() {
        return r;
    }
    let a_s = restricted_columns(inst, &idx);
    let svd = a_s.svd(true, true);
    let r_s = svd.solve(&inst.y, 1e-10).expect("svd computed with u/vt");
    for (c, &j) in idx.iter().enumerate() {
        r[j] = r_s[c];
    }
    r
}

/// Hamiltonian `½‖A(σ∘r)‖² − yᵀA(σ∘r) + λ‖σ‖₀` in expanded form.
pub fn residual_energy(inst: &Instance, r: &DVector<f64>, support: &[bool], lambda: f64) -> f64 {
    let n = inst.n();
    assert_eq!(r.len(), n, "value vector length");
    assert_eq!(support.len(), n, "support length");
    let mut v = DVector::zeros(inst.m());
    let mut nnz = 0usize;
    for (j, &on) in support.iter().enumerate() {
        if on {
            v.axpy(r[j], &inst.a_mat.column(j), 1.0);
            nnz += 1;
        }
    }
    0.5 * v.norm_squared() - inst.y.dot(&v) + lambda * nnz as f64
}
