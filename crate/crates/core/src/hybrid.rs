//! Alternating minimization: support estimation (SDE-simulated Ising machine
//! or deterministic Maxwell-rule sweeps) interleaved with the exact
//! signal-value solve, under a linearly decreasing threshold.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdp::{self, CdpError};
use crate::cim::{self, f_chi, CimConfig, CimError};
use crate::localfield::{FieldState, InstanceFieldState};
use crate::metrics;
use crate::problem::{Chi, Instance};

#[derive(Debug, Error)]
pub enum HybridError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Cim(#[from] CimError),
}

/// Initial signal values handed to the first support-estimation call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RInit {
    Zeros,
    TruthOracle,
    FromLasso,
}

/// Which engine performs the support minimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportBackend {
    /// Truncated-Wigner SDE integration from rest.
    Sde,
    /// Sequential Maxwell-rule sweeps (noise-free idealization); fast and
    /// exactly monotone in the Hamiltonian.
    DeterministicMaxwell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub eta_init: f64,
    pub eta_end: f64,
    pub outer_iters: usize,
    pub r_init: RInit,
    pub backend: SupportBackend,
    pub cim: CimConfig,
}

impl HybridConfig {
    pub fn new(eta: f64, cim: CimConfig) -> Self {
        HybridConfig {
            eta_init: eta,
            eta_end: eta,
            outer_iters: 50,
            r_init: RInit::Zeros,
            backend: SupportBackend::Sde,
            cim,
        }
    }

    pub fn validate(&self) -> Result<(), HybridError> {
        if !(self.eta_init >= self.eta_end && self.eta_end >= 0.0) {
            return Err(HybridError::InvalidConfig(format!(
                "need eta_init >= eta_end >= 0, got {} and {}",
                self.eta_init, self.eta_end
            )));
        }
        if self.outer_iters == 0 {
            return Err(HybridError::InvalidConfig("outer_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// L0 weight corresponding to a threshold: `λ = η²/2`.
pub fn lambda_of_eta(eta: f64) -> f64 {
    0.5 * eta * eta
}

/// Linear threshold schedule `max(η_init·(1 − t/outer_iters), η_end)`.
pub fn threshold_at(cfg: &HybridConfig, t: usize) -> f64 {
    let frac = 1.0 - t as f64 / cfg.outer_iters as f64;
    (cfg.eta_init * frac).max(cfg.eta_end)
}

/// Per-iteration trace row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub eta: f64,
    pub support_size: usize,
    pub energy: f64,
    pub rmse: Option<f64>,
}

pub type HybridTrace = Vec<TraceRow>;

#[derive(Debug, Clone)]
pub struct HybridOutcome {
    pub sigma: Vec<bool>,
    pub r: DVector<f64>,
    pub trace: HybridTrace,
    /// Iterations where the support Gram system was rank-deficient and the
    /// least-squares fallback was used.
    pub rank_deficient_iters: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepReport {
    pub sweeps: usize,
    pub flips: usize,
    pub converged: bool,
}

/// Sequential Maxwell-rule sweeps: visit sites in a fresh random order each
/// sweep, setting `σ_i = H(F_χ(h_i) − η)` and refreshing `r_i = σ_i h_i`.
/// Stops when a sweep produces no support flip and values have settled.
///
/// `on_change(state, i)` runs after every accepted site change, which is the
/// hook used by the energy-monotonicity checks.
pub fn maxwell_sweeps<S, R, F>(
    state: &mut S,
    eta: f64,
    chi: Chi,
    max_sweeps: usize,
    rng: &mut R,
    mut on_change: F,
) -> SweepReport
where
    S: FieldState,
    R: Rng + ?Sized,
    F: FnMut(&S, usize),
{
    let n = state.dim();
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = SweepReport::default();
    for _ in 0..max_sweeps {
        order.shuffle(rng);
        let mut flips = 0usize;
        let mut max_value_delta: f64 = 0.0;
        for &i in &order {
            let h = state.field(i);
            let on = f_chi(h, chi) - eta > 0.0;
            let new_val = if on { h } else { 0.0 };
            let was_on = state.support()[i];
            let old_val = if was_on { state.values()[i] } else { 0.0 };
            if on != was_on || (on && (new_val - old_val).abs() > 0.0) {
                state.assign(i, on, new_val);
                if on != was_on {
                    flips += 1;
                }
                max_value_delta = max_value_delta.max((new_val - old_val).abs());
                on_change(&*state, i);
            }
        }
        report.sweeps += 1;
        report.flips += flips;
        if flips == 0 && max_value_delta < 1e-12 {
            report.converged = true;
            break;
        }
    }
    report
}

/// Runs the alternating minimization and returns the final estimate with a
/// per-iteration trace. Rank-deficient value solves fall back to
/// least-squares and are counted; SDE divergence is fatal.
pub fn run_hybrid<R: Rng + ?Sized>(
    inst: &Instance,
    cfg: &HybridConfig,
    rng: &mut R,
) -> Result<HybridOutcome, HybridError> {
    cfg.validate()?;
    let n = inst.n();
    let mut sigma = vec![false; n];
    let mut r = match cfg.r_init {
        RInit::Zeros => DVector::zeros(n),
        RInit::TruthOracle => inst.true_signal(),
        RInit::FromLasso => {
            let out = crate::lasso::run_ista(inst, cfg.eta_init, cfg.cim.chi, 2000, 1e-9);
            for (i, &v) in out.values.iter().enumerate() {
                sigma[i] = v != 0.0;
            }
            out.values
        }
    };
    let mut eta = cfg.eta_init;
    let mut trace = Vec::with_capacity(cfg.outer_iters);
    let mut rank_deficient_iters = 0usize;

    for t in 0..cfg.outer_iters {
        sigma = match cfg.backend {
            SupportBackend::Sde => cim::run_support_estimation(inst, &r, eta, &cfg.cim, rng)?,
            SupportBackend::DeterministicMaxwell => {
                let mut state = InstanceFieldState::new(inst, sigma.clone(), r.clone());
                maxwell_sweeps(&mut state, eta, cfg.cim.chi, 200, rng, |_, _| {});
                state.support().to_vec()
            }
        };
        r = match cdp::solve_signal(inst, &sigma) {
            Ok(sol) => sol,
            Err(CdpError::RankDeficient { .. }) => {
                rank_deficient_iters += 1;
                cdp::solve_signal_lstsq(inst, &sigma)
            }
            Err(CdpError::DimensionMismatch { .. }) => unreachable!("sigma sized to n"),
        };
        let support_size = sigma.iter().filter(|&&b| b).count();
        let energy = cdp::residual_energy(inst, &r, &sigma, lambda_of_eta(eta));
        let rmse = metrics::rmse(&r, &sigma, &inst.x_true, &inst.xi_true).ok();
        trace.push(TraceRow {
            eta,
            support_size,
            energy,
            rmse,
        });
        eta = threshold_at(cfg, t);
    }

    Ok(HybridOutcome {
        sigma,
        r,
        trace,
        rank_deficient_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{synthesize, InstanceParams, SourceDistribution};
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;

    fn cfg_maxwell(eta: f64) -> HybridConfig {
        HybridConfig {
            eta_init: eta,
            eta_end: eta,
            outer_iters: 10,
            r_init: RInit::Zeros,
            backend: SupportBackend::DeterministicMaxwell,
            cim: CimConfig::new(f64::INFINITY, 5.0, Chi::Signed),
        }
    }

    #[test]
    fn threshold_schedule_examples() {
        let mut cfg = cfg_maxwell(0.6);
        cfg.eta_init = 0.6;
        cfg.eta_end = 0.01;
        cfg.outer_iters = 50;
        assert_relative_eq!(threshold_at(&cfg, 0), 0.6);
        assert_relative_eq!(threshold_at(&cfg, 25), 0.3);
        assert_relative_eq!(threshold_at(&cfg, 50), 0.01);
        assert_relative_eq!(lambda_of_eta(0.05), 0.00125);
    }

    #[test]
    fn zero_observation_yields_empty_estimate() {
        let mut inst = synthesize(&InstanceParams {
            n: 400,
            alpha: 0.5,
            a: 0.25,
            beta: 0.0,
            dist: SourceDistribution::GaussianSigned { sigma2: 1.0 },
            chi: Chi::Signed,
            seed: 2,
        })
        .unwrap();
        inst.y.fill(0.0);
        let mut rng = rng_from_seed(1);
        let out = run_hybrid(&inst, &cfg_maxwell(0.1), &mut rng).unwrap();
        assert!(out.sigma.iter().all(|&b| !b));
        assert_eq!(out.r, DVector::zeros(400));
        let rmse = out.trace.last().unwrap().rmse.unwrap();
        // √(a⟨x²⟩) = 0.5 up to the sample fluctuation of Σ(xξ)².
        assert!((rmse - 0.5).abs() < 0.1, "rmse = {rmse}");
    }

    #[test]
    fn maxwell_energy_monotone_and_output_clean() {
        let inst = synthesize(&InstanceParams {
            n: 48,
            alpha: 0.6,
            a: 0.2,
            beta: 0.05,
            dist: SourceDistribution::HalfGaussianNonneg { sigma2: 1.0 },
            chi: Chi::NonNegative,
            seed: 10,
        })
        .unwrap();
        let eta = 0.1;
        let lambda = lambda_of_eta(eta);
        let mut state = InstanceFieldState::new(&inst, vec![false; 48], DVector::zeros(48));
        let mut energies = vec![0.0];
        let mut rng = rng_from_seed(3);
        maxwell_sweeps(&mut state, eta, Chi::NonNegative, 100, &mut rng, |s, _| {
            energies.push(cdp::residual_energy(
                &inst,
                s.values(),
                s.support(),
                lambda,
            ));
        });
        for pair in energies.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-10,
                "energy increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }

        let mut cfg = cfg_maxwell(eta);
        cfg.cim.chi = Chi::NonNegative;
        let out = run_hybrid(&inst, &cfg, &mut rng_from_seed(4)).unwrap();
        for i in 0..48 {
            if !out.sigma[i] {
                assert_eq!(out.r[i], 0.0);
            }
        }
        assert_eq!(out.rank_deficient_iters, 0);
        assert!(out.sigma.iter().filter(|&&b| b).count() <= inst.m());
        assert_eq!(out.trace.len(), cfg.outer_iters);
    }

    #[test]
    fn hybrid_energy_nonincreasing_across_iterations() {
        let inst = synthesize(&InstanceParams {
            n: 64,
            alpha: 0.6,
            a: 0.25,
            beta: 0.02,
            dist: SourceDistribution::GaussianSigned { sigma2: 1.0 },
            chi: Chi::Signed,
            seed: 11,
        })
        .unwrap();
        let out = run_hybrid(&inst, &cfg_maxwell(0.08), &mut rng_from_seed(7)).unwrap();
        for pair in out.trace.windows(2) {
            assert!(pair[1].energy <= pair[0].energy + 1e-10);
        }
    }

    #[test]
    fn from_lasso_initialization_runs() {
        let inst = synthesize(&InstanceParams {
            n: 96,
            alpha: 0.6,
            a: 0.15,
            beta: 0.0,
            dist: SourceDistribution::HalfGaussianNonneg { sigma2: 1.0 },
            chi: Chi::NonNegative,
            seed: 14,
        })
        .unwrap();
        let mut cfg = cfg_maxwell(0.05);
        cfg.cim.chi = Chi::NonNegative;
        cfg.r_init = RInit::FromLasso;
        let out = run_hybrid(&inst, &cfg, &mut rng_from_seed(2)).unwrap();
        let rmse = out.trace.last().unwrap().rmse.unwrap();
        assert!(rmse < 0.2, "rmse = {rmse}");
    }
}
