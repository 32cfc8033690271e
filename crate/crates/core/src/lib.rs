//! Solver suite for L0-regularization-based compressed sensing (L0-RBCS).
//!
//! The signal-recovery problem `min ½‖y − A(σ∘r)‖² + λ‖σ‖₀` is split into a
//! binary support vector `σ` and real signal values `r`. The crate provides:
//!
//! - [`problem`]: random instance synthesis under the i.i.d. Gaussian
//!   observation model, plus flat-file import/export.
//! - [`cim`]: a truncated-Wigner SDE simulator of a measurement-feedback
//!   coherent Ising machine that estimates the support.
//! - [`cdp`]: the classical digital processor solving the support-restricted
//!   least-squares subproblem.
//! - [`hybrid`]: the alternating CIM/CDP minimization with linear threshold
//!   reduction, plus a deterministic Maxwell-rule sweep backend.
//! - [`lasso`]: ISTA soft-thresholding baseline and an equality-constrained
//!   L1 solver for the imaging comparison.
//! - [`sa`]: Metropolis simulated-annealing baseline for support estimation.
//! - [`meanfield`]: macroscopic self-consistent equations for the hybrid
//!   system (finite and infinite saturation) and for LASSO, critical-point
//!   scans, and L0/L1 recovery thresholds.
//! - [`imaging`]: matrix-free k-space reconstruction with Haar-sparse
//!   phantoms (L0 hybrid, LASSO, equality-constrained L1, zero-filling).
//! - [`metrics`]: RMSE, direction cosine, Hamiltonian, one-sided KS test.
//! - [`harness`]: seeded experiment sweeps, figure presets and CSV emission.

pub mod cdp;
pub mod cim;
pub mod harness;
pub mod hybrid;
pub mod imaging;
pub mod lasso;
pub mod localfield;
pub mod meanfield;
pub mod metrics;
pub mod problem;
pub mod quad;
pub mod rng;
pub mod sa;

pub use problem::{Chi, Instance, InstanceParams, SourceDistribution};
