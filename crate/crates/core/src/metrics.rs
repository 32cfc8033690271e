//! Shared evaluation metrics: RMSE against the planted signal, support
//! direction cosine, the L0-RBCS Hamiltonian, and a one-sided two-sample
//! Kolmogorov-Smirnov test.

use nalgebra::DVector;
use thiserror::Error;

pub use crate::cdp::residual_energy as hamiltonian;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    EmptySample,
}

/// `√((1/N) Σ (r_i σ_i − x_i ξ_i)²)`.
pub fn rmse(
    r: &DVector<f64>,
    support: &[bool],
    x_true: &DVector<f64>,
    xi_true: &[bool],
) -> Result<f64, MetricsError> {
    let n = r.len();
    if support.len() != n || x_true.len() != n || xi_true.len() != n {
        return Err(MetricsError::LengthMismatch(n, support.len()));
    }
    let mut acc = 0.0;
    for i in 0..n {
        let est = if support[i] { r[i] } else { 0.0 };
        let tru = if xi_true[i] { x_true[i] } else { 0.0 };
        let d = est - tru;
        acc += d * d;
    }
    Ok((acc / n as f64).sqrt())
}

/// Overlap `Σ ξ_i σ_i / √(Σξ_i · Σσ_i)` between true and estimated supports.
///
/// Both supports empty counts as perfect trivial agreement (1); exactly one
/// empty gives 0.
pub fn direction_cosine(xi_true: &[bool], sigma: &[bool]) -> f64 {
    let count = |bits: &[bool]| bits.iter().filter(|&&b| b).count();
    let (n_xi, n_sigma) = (count(xi_true), count(sigma));
    if n_xi == 0 && n_sigma == 0 {
        return 1.0;
    }
    if n_xi == 0 || n_sigma == 0 {
        return 0.0;
    }
    let overlap = xi_true
        .iter()
        .zip(sigma)
        .filter(|(&a, &b)| a && b)
        .count() as f64;
    overlap / ((n_xi as f64) * (n_sigma as f64)).sqrt()
}

/// One-sided two-sample Kolmogorov-Smirnov test of whether `sample_a` is
/// stochastically larger than `sample_b`.
///
/// The statistic is `D⁺ = sup_x (F_b(x) − F_a(x))`, so a right-shifted
/// `sample_a` produces a large statistic and a small p-value. The p-value is
/// the asymptotic one-sided tail `exp(−2 m n D²/(m+n))`.
pub fn ks_one_sided(sample_a: &[f64], sample_b: &[f64]) -> Result<(f64, f64), MetricsError> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (m, n) = (a.len(), b.len());
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut d_plus: f64 = 0.0;
    while ia < m || ib < n {
        let xa = a.get(ia).copied().unwrap_or(f64::INFINITY);
        let xb = b.get(ib).copied().unwrap_or(f64::INFINITY);
        let x = xa.min(xb);
        while ia < m && a[ia] <= x {
            ia += 1;
        }
        while ib < n && b[ib] <= x {
            ib += 1;
        }
        let fa = ia as f64 / m as f64;
        let fb = ib as f64 / n as f64;
        d_plus = d_plus.max(fb - fa);
    }
    let (mf, nf) = (m as f64, n as f64);
    let p = (-2.0 * mf * nf * d_plus * d_plus / (mf + nf)).exp().min(1.0);
    Ok((d_plus, p))
}
