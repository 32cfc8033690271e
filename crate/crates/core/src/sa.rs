//! Metropolis support estimation with fixed signal values: the
//! simulated-annealing baseline with zero-temperature, exponential,
//! inverse-linear and inverse-log cooling schedules.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::direction_cosine;
use crate::problem::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoolingKind {
    /// Greedy descent: accept only strictly improving flips.
    Zero,
    /// `T(t) = T₀ e^{−t/τ}`.
    ExpCooling,
    /// `T(t) = T₀ / (1 + t/τ)`.
    InvLinear,
    /// `T(t) = T₀ / ln(e + t/τ)`.
    InvLog,
}

/// Temperature schedule over Monte Carlo time measured in sweeps
/// (proposals / N). `τ` is derived so that `T(horizon) = final_temp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingSchedule {
    pub kind: CoolingKind,
    pub t0_temp: f64,
    pub final_temp: f64,
    /// Total sweeps.
    pub horizon: f64,
}

impl CoolingSchedule {
    pub fn new(kind: CoolingKind) -> Self {
        CoolingSchedule {
            kind,
            t0_temp: 0.02,
            final_temp: 0.00002,
            horizon: 1e5,
        }
    }

    /// `τ` for the kind, from `T(horizon) = final_temp`. The inverse-log
    /// value is returned as `ln τ` by [`CoolingSchedule::ln_tau`] because τ
    /// itself underflows.
    pub fn tau(&self) -> f64 {
        let ratio = self.t0_temp / self.final_temp;
        match self.kind {
            CoolingKind::Zero => f64::NAN,
            CoolingKind::ExpCooling => self.horizon / ratio.ln(),
            CoolingKind::InvLinear => self.horizon / (ratio - 1.0),
            CoolingKind::InvLog => self.ln_tau().exp(),
        }
    }

    /// `ln τ` for the inverse-log schedule: `ln(horizon) − ln(e^{T₀/T_f} − e)`.
    pub fn ln_tau(&self) -> f64 {
        let x = self.t0_temp / self.final_temp;
        // ln(e^x − e) = x + ln(1 − e^{1−x}), safe for large x.
        let ln_denom = x + (-((1.0 - x).exp())).ln_1p();
        self.horizon.ln() - ln_denom
    }

    /// Temperature at sweep time `t`.
    pub fn temperature(&self, t: f64) -> f64 {
        match self.kind {
            CoolingKind::Zero => 0.0,
            CoolingKind::ExpCooling => self.t0_temp * (-t / self.tau()).exp(),
            CoolingKind::InvLinear => self.t0_temp / (1.0 + t / self.tau()),
            CoolingKind::InvLog => {
                if t <= 0.0 {
                    return self.t0_temp;
                }
                let u = t.ln() - self.ln_tau();
                // ln(e + e^u) without overflow.
                let val = if u > 40.0 {
                    u
                } else {
                    (std::f64::consts::E + u.exp()).ln()
                };
                self.t0_temp / val
            }
        }
    }
}

/// Exact Metropolis acceptance ratio for flipping spin `i`:
/// `L = exp((1/2T)(1−2σ_i)(−r_i² + 2 r_i h_i − 2λ))` with unit column norms.
/// Overflow clamps to +∞ (always accept).
pub fn acceptance_ratio(
    inst: &Instance,
    r: &DVector<f64>,
    support: &[bool],
    i: usize,
    lambda: f64,
    temp: f64,
) -> f64 {
    let h = crate::cim::local_field_cim(inst, r, support).expect("matching lengths")[i];
    let sign = 1.0 - 2.0 * if support[i] { 1.0 } else { 0.0 };
    let exponent = (0.5 / temp) * sign * (-r[i] * r[i] + 2.0 * r[i] * h - 2.0 * lambda);
    if exponent > 700.0 {
        f64::INFINITY
    } else {
        exponent.exp()
    }
}

/// Decimated direction-cosine trace, one row per recorded sweep.
pub type SaTrace = Vec<(f64, f64)>;

#[derive(Debug, Clone)]
pub struct SaOutcome {
    pub sigma: Vec<bool>,
    pub trace: SaTrace,
    /// Proposals actually made (zero-temperature runs stop early once
    /// single-flip stable).
    pub proposals: usize,
}

/// Monte Carlo support estimation with `r` fixed: `horizon·N` single-spin
/// proposals from `σ = 0`, Metropolis acceptance, and strict-decrease greedy
/// moves at zero temperature.
pub fn run_sa<R: Rng + ?Sized>(
    inst: &Instance,
    r: &DVector<f64>,
    lambda: f64,
    sched: &CoolingSchedule,
    rng: &mut R,
) -> SaOutcome {
    run_sa_from(inst, r, lambda, sched, vec![false; inst.n()], rng)
}

/// Same engine with an explicit starting support (used by the exhaustive
/// local-minimum checks).
pub fn run_sa_from<R: Rng + ?Sized>(
    inst: &Instance,
    r: &DVector<f64>,
    lambda: f64,
    sched: &CoolingSchedule,
    mut sigma: Vec<bool>,
    rng: &mut R,
) -> SaOutcome {
    let n = inst.n();
    assert_eq!(r.len(), n);
    assert_eq!(sigma.len(), n);
    // Running product w = A(σ∘r); each proposal needs one column dot.
    let mut w = DVector::zeros(inst.m());
    for (j, &on) in sigma.iter().enumerate() {
        if on {
            w.axpy(r[j], &inst.a_mat.column(j), 1.0);
        }
    }
    let total = (sched.horizon * n as f64).round() as usize;
    let record_every = ((sched.horizon / 256.0).ceil() as usize).max(1) * n;
    let mut trace: SaTrace = Vec::new();
    let mut rejects_in_row = 0usize;
    let stability_window = 16 * n;
    let mut proposals = 0usize;

    let mut record = |step: usize, sigma: &[bool], trace: &mut SaTrace| {
        let t_sweeps = step as f64 / n as f64;
        trace.push((t_sweeps, direction_cosine(&inst.xi_true, sigma)));
    };

    record(0, &sigma, &mut trace);
    for step in 0..total {
        proposals = step + 1;
        let temp = sched.temperature(step as f64 / n as f64);
        let i = rng.gen_range(0..n);
        let col = inst.a_mat.column(i);
        let self_term = if sigma[i] { r[i] } else { 0.0 };
        let h = col.dot(&inst.y) - col.dot(&w) + self_term;
        let sign = 1.0 - 2.0 * if sigma[i] { 1.0 } else { 0.0 };
        // ΔH for the flip; accept lowers the Hamiltonian when negative.
        let delta_h = -0.5 * sign * (-r[i] * r[i] + 2.0 * r[i] * h - 2.0 * lambda);
        let accept = if temp <= 0.0 {
            delta_h < 0.0
        } else {
            let exponent = -delta_h / temp;
            exponent >= 0.0 || exponent.exp() > rng.gen::<f64>()
        };
        if accept {
            let delta_v = if sigma[i] { -r[i] } else { r[i] };
            w.axpy(delta_v, &col, 1.0);
            sigma[i] = !sigma[i];
            rejects_in_row = 0;
        } else {
            rejects_in_row += 1;
        }
        if (step + 1) % record_every == 0 {
            record(step + 1, &sigma, &mut trace);
        }
        // Zero-temperature early exit: after a long rejection streak,
        // verify single-flip stability exhaustively and stop.
        if sched.kind == CoolingKind::Zero && rejects_in_row >= stability_window {
            let stable = (0..n).all(|j| {
                let cj = inst.a_mat.column(j);
                let st = if sigma[j] { r[j] } else { 0.0 };
                let hj = cj.dot(&inst.y) - cj.dot(&w) + st;
                let sg = 1.0 - 2.0 * if sigma[j] { 1.0 } else { 0.0 };
                -0.5 * sg * (-r[j] * r[j] + 2.0 * r[j] * hj - 2.0 * lambda) >= 0.0
            });
            if stable {
                record(step + 1, &sigma, &mut trace);
                break;
            }
            rejects_in_row = 0;
        }
    }
    SaOutcome {
        sigma,
        trace,
        proposals,
    }
}
