//! L1 baselines: soft-threshold fixed-point iteration (ISTA) on explicit
//! instances, and a split-Bregman solver for the equality-constrained L1
//! problem used in the imaging comparison.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::problem::{Chi, Instance};

/// Soft-thresholding `T_{χ,η}`: shrink towards zero by `η`, clamping to the
/// non-negative side for `χ = +`.
pub fn soft_threshold(h: f64, eta: f64, chi: Chi) -> f64 {
    match chi {
        Chi::NonNegative => {
            if h >= eta {
                h - eta
            } else {
                0.0
            }
        }
        Chi::Signed => {
            if h >= eta {
                h - eta
            } else if h <= -eta {
                h + eta
            } else {
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IstaResult {
    pub values: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Final `½‖y − AY‖² + η‖Y‖₁`.
    pub objective: f64,
}

/// Largest eigenvalue of `AᵀA` by power iteration; the proximal-gradient
/// step is `1/L`.
fn lipschitz(inst: &Instance) -> f64 {
    let n = inst.n();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lam = 1.0;
    for _ in 0..40 {
        let w = inst.a_mat.tr_mul(&(&inst.a_mat * &v));
        lam = w.norm();
        if lam == 0.0 {
            return 1.0;
        }
        v = w / lam;
    }
    lam
}

fn lasso_objective(inst: &Instance, y_hat: &DVector<f64>, eta: f64) -> f64 {
    let resid = &inst.y - &inst.a_mat * y_hat;
    0.5 * resid.norm_squared() + eta * y_hat.iter().map(|v| v.abs()).sum::<f64>()
}

/// Iterates the soft-thresholding update to its fixed point
/// `Y = T_{χ,η}(Y + Aᵀ(y − AY))`.
///
/// Internally a proximal-gradient step of size `1/λmax(AᵀA)` is used, which
/// keeps the objective non-increasing and converges to the same fixed point
/// as the unit-step rule. Convergence is declared on the unit-step
/// fixed-point residual `‖ΔY‖∞ < tol`.
pub fn run_ista(inst: &Instance, eta: f64, chi: Chi, max_iters: usize, tol: f64) -> IstaResult {
    let n = inst.n();
    let step = 1.0 / lipschitz(inst).max(1.0);
    let mut y_hat = DVector::zeros(n);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iters {
        iterations = it + 1;
        let grad = inst.a_mat.tr_mul(&(&inst.a_mat * &y_hat - &inst.y));
        let mut next = DVector::zeros(n);
        for i in 0..n {
            next[i] = soft_threshold(y_hat[i] - step * grad[i], eta * step, chi);
        }
        // Unit-step fixed-point residual from the freshly computed gradient.
        let mut resid: f64 = 0.0;
        for i in 0..n {
            let fp = soft_threshold(y_hat[i] - grad[i], eta, chi);
            resid = resid.max((fp - y_hat[i]).abs());
        }
        y_hat = next;
        if resid < tol {
            converged = true;
            break;
        }
    }
    let objective = lasso_objective(inst, &y_hat, eta);
    IstaResult {
        values: y_hat,
        converged,
        iterations,
        objective,
    }
}

/// Operator bundle for the equality-constrained problem
/// `min ‖Ψx‖₁ + γ′‖Δ_v x‖² + γ′‖Δ_h x‖²  s.t.  y = Ax`.
pub trait EqConstrainedOps {
    fn signal_dim(&self) -> usize;
    /// `A x` (measurement).
    fn measure(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `Aᵀ v`.
    fn measure_adjoint(&self, v: &DVector<f64>) -> DVector<f64>;
    /// Orthonormal analysis `Ψ x`.
    fn analysis(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Synthesis `Ψᵀ w`.
    fn synthesis(&self, w: &DVector<f64>) -> DVector<f64>;
    /// Smoothness normal operator `Δ_vᵀΔ_v x + Δ_hᵀΔ_h x`.
    fn smoothness(&self, x: &DVector<f64>) -> DVector<f64>;
}

#[derive(Debug, Clone)]
pub struct L1EqResult {
    pub x: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Final constraint violation `‖y − Ax‖ / ‖y‖`.
    pub feasibility: f64,
}

/// Split-Bregman iteration for the equality-constrained L1 problem.
/// Outer Bregman updates enforce `y = Ax` to the requested tolerance; the
/// inner quadratic solve runs matrix-free conjugate gradients.
pub fn solve_l1_equality<O: EqConstrainedOps>(
    ops: &O,
    y: &DVector<f64>,
    gamma_prime: f64,
    max_iters: usize,
    tol: f64,
) -> L1EqResult {
    let n = ops.signal_dim();
    let y_norm = y.norm().max(1e-300);
    let mu = 1.0;
    let rho = 1.0;
    let mut x = DVector::zeros(n);
    let mut w = DVector::zeros(n);
    let mut d = DVector::zeros(n);
    let mut y_breg = y.clone();
    let mut feasibility = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iters {
        iterations = it + 1;
        // x-step: (μ AᵀA + 2γ′ L + ρ I) x = μ Aᵀ y_b + ρ Ψᵀ(w − d)
        let rhs = ops.measure_adjoint(&y_breg) * mu + ops.synthesis(&(&w - &d)) * rho;
        let apply = |v: &DVector<f64>| {
            ops.measure_adjoint(&ops.measure(v)) * mu + ops.smoothness(v) * (2.0 * gamma_prime)
                + v * rho
        };
        x = cg_solve(&apply, &rhs, &x, 1e-10, 400);
        // w-step: shrinkage on the analysis coefficients.
        let px = ops.analysis(&x);
        let target = &px + &d;
        w = target.map(|v| soft_threshold(v, 1.0 / rho, Chi::Signed));
        d += &px - &w;
        // Bregman update on the constraint.
        let ax = ops.measure(&x);
        y_breg += y - &ax;
        feasibility = (y - &ax).norm() / y_norm;
        if feasibility <= tol {
            converged = true;
            break;
        }
    }
    L1EqResult {
        x,
        converged,
        iterations,
        feasibility,
    }
}

/// Matrix-free conjugate gradients for SPD `apply`.
pub fn cg_solve<F>(
    apply: &F,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut x = x0.clone();
    let mut r = b - apply(&x);
    let mut p = r.clone();
    let mut rs_old = r.norm_squared();
    let b_norm = b.norm().max(1e-300);
    if rs_old.sqrt() / b_norm <= rel_tol {
        return x;
    }
    for _ in 0..max_iter {
        let ap = apply(&p);
        let denom = p.dot(&ap);
        if denom <= 0.0 {
            break;
        }
        let alpha = rs_old / denom;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rs_new = r.norm_squared();
        if rs_new.sqrt() / b_norm <= rel_tol {
            break;
        }
        p = &r + &p * (rs_new / rs_old);
        rs_old = rs_new;
    }
    x
}
