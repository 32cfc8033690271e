//! Truncated-Wigner SDE simulation of a measurement-feedback coherent Ising
//! machine used for support estimation.
//!
//! Each of the N pulses carries in-phase/quadrature amplitudes `(c_i, s_i)`
//! integrated by Euler-Maruyama:
//!
//! ```text
//! dc_i = [(-1 + p - c_i² - s_i²) c_i + f_i] dt + (1/A_s)√(c_i²+s_i²+½) dW₁
//! ds_i = [(-1 - p - c_i² - s_i²) s_i      ] dt + (1/A_s)√(c_i²+s_i²+½) dW₂
//! ```
//!
//! with the injection `f_i = K̃(F_χ(h_i) − η)` built from the live local
//! field. The support estimate is the binarized in-phase amplitude `H(c_i)`.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{Chi, Instance};

#[derive(Debug, Error)]
pub enum CimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("integration diverged at t = {t:.4} (max amplitude {amplitude:.3e}); reduce dt")]
    IntegrationDiverged { t: f64, amplitude: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Normalized pump rate as a function of time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PumpSchedule {
    /// `p(t) = p_final`.
    Constant { p_final: f64 },
    /// `p(t) = p_final · min(t/ramp_time, 1)`.
    LinearRamp { p_final: f64, ramp_time: f64 },
    /// `p(t) = p_final · min(t/ramp_time, 1)²`.
    SquareRamp { p_final: f64, ramp_time: f64 },
}

impl PumpSchedule {
    pub fn p_at(&self, t: f64) -> f64 {
        match *self {
            PumpSchedule::Constant { p_final } => p_final,
            PumpSchedule::LinearRamp { p_final, ramp_time } => {
                p_final * (t / ramp_time).clamp(0.0, 1.0)
            }
            PumpSchedule::SquareRamp { p_final, ramp_time } => {
                let u = (t / ramp_time).clamp(0.0, 1.0);
                p_final * u * u
            }
        }
    }

    pub fn p_final(&self) -> f64 {
        match *self {
            PumpSchedule::Constant { p_final }
            | PumpSchedule::LinearRamp { p_final, .. }
            | PumpSchedule::SquareRamp { p_final, .. } => p_final,
        }
    }
}

/// SDE simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CimConfig {
    /// Saturation parameter A_s² (noise scale 1/A_s); may be infinite for
    /// the deterministic limit.
    pub as2: f64,
    /// Normalized feedback gain K̃.
    pub k_tilde: f64,
    pub p_schedule: PumpSchedule,
    /// Total integration time in photon lifetimes.
    pub duration: f64,
    /// Euler-Maruyama step.
    pub dt: f64,
    pub chi: Chi,
}

impl CimConfig {
    /// Defaults used throughout: K̃ = 0.25, linear pump ramp to 1.5 over the
    /// full duration, dt = 0.01.
    pub fn new(as2: f64, duration: f64, chi: Chi) -> Self {
        CimConfig {
            as2,
            k_tilde: 0.25,
            p_schedule: PumpSchedule::LinearRamp {
                p_final: 1.5,
                ramp_time: duration,
            },
            duration,
            dt: 0.01,
            chi,
        }
    }

    pub fn validate(&self) -> Result<(), CimError> {
        let bad = |msg: String| Err(CimError::InvalidConfig(msg));
        if !(self.as2 > 0.0) {
            return bad(format!("as2 must be > 0, got {}", self.as2));
        }
        if !(self.k_tilde > 0.0) {
            return bad(format!("k_tilde must be > 0, got {}", self.k_tilde));
        }
        if !(self.dt > 0.0) || self.dt > self.duration {
            return bad(format!(
                "dt must satisfy 0 < dt <= duration, got dt={} duration={}",
                self.dt, self.duration
            ));
        }
        // Explicit-Euler stability guard on the linear part.
        if self.dt * (1.0 + self.p_schedule.p_final()) >= 0.5 {
            return bad(format!(
                "dt too large for stability: dt*(1+p) = {} >= 0.5",
                self.dt * (1.0 + self.p_schedule.p_final())
            ));
        }
        Ok(())
    }
}

/// In-phase/quadrature amplitudes of the N simulated pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct OpoState {
    pub c: DVector<f64>,
    pub s: DVector<f64>,
    /// Normalized time in photon lifetimes.
    pub t: f64,
}

impl OpoState {
    pub fn rest(n: usize) -> Self {
        OpoState {
            c: DVector::zeros(n),
            s: DVector::zeros(n),
            t: 0.0,
        }
    }

    /// Binarized in-phase amplitudes `H(c_i)`.
    pub fn support(&self) -> Vec<bool> {
        self.c.iter().map(|&c| c > 0.0).collect()
    }
}

/// `F_χ`: identity for non-negative signals, absolute value for signed ones.
pub fn f_chi(h: f64, chi: Chi) -> f64 {
    match chi {
        Chi::NonNegative => h,
        Chi::Signed => h.abs(),
    }
}

/// Injection field `f_i = K̃ (F_χ(h_i) − η)`.
pub fn injection_field(h: &DVector<f64>, eta: f64, chi: Chi, k_tilde: f64) -> DVector<f64> {
    h.map(|hi| k_tilde * (f_chi(hi, chi) - eta))
}

/// Local field `h_i = −Σ_{j≠i} (A_iᵀA_j) r_j σ_j + A_iᵀ y`, evaluated as
/// `Aᵀ(y − A(σ∘r)) + σ∘r` thanks to unit column norms.
pub fn local_field_cim(
    inst: &Instance,
    r: &DVector<f64>,
    support: &[bool],
) -> Result<DVector<f64>, CimError> {
    if r.len() != inst.n() || support.len() != inst.n() {
        return Err(CimError::DimensionMismatch {
            expected: inst.n(),
            got: r.len().max(support.len()),
        });
    }
    let v = crate::localfield::masked(r, support);
    let resid = &inst.y - &inst.a_mat * &v;
    let mut h = inst.a_mat.tr_mul(&resid);
    h += &v;
    Ok(h)
}

/// One Euler-Maruyama step of the pulse SDE under injection `f`.
pub fn wsde_step<R: Rng + ?Sized>(
    state: &OpoState,
    f: &DVector<f64>,
    p_now: f64,
    cfg: &CimConfig,
    rng: &mut R,
) -> Result<OpoState, CimError> {
    let mut next = state.clone();
    step_in_place(&mut next, f, p_now, cfg, rng)?;
    Ok(next)
}

fn step_in_place<R: Rng + ?Sized>(
    state: &mut OpoState,
    f: &DVector<f64>,
    p_now: f64,
    cfg: &CimConfig,
    rng: &mut R,
) -> Result<(), CimError> {
    let n = state.c.len();
    let dt = cfg.dt;
    let sqrt_dt = dt.sqrt();
    let noise_amp = if cfg.as2.is_infinite() {
        0.0
    } else {
        1.0 / cfg.as2.sqrt()
    };
    let guard = 10.0 * cfg.p_schedule.p_final().max(1.0).sqrt();
    let mut max_amp: f64 = 0.0;
    for i in 0..n {
        let (c, s) = (state.c[i], state.s[i]);
        let sat = c * c + s * s;
        let mut dc = ((-1.0 + p_now - sat) * c + f[i]) * dt;
        let mut ds = (-1.0 - p_now - sat) * s * dt;
        if noise_amp > 0.0 {
            let amp = noise_amp * (sat + 0.5).sqrt() * sqrt_dt;
            let g1: f64 = StandardNormal.sample(rng);
            let g2: f64 = StandardNormal.sample(rng);
            dc += amp * g1;
            ds += amp * g2;
        }
        state.c[i] = c + dc;
        state.s[i] = s + ds;
        max_amp = max_amp.max(state.c[i].abs()).max(state.s[i].abs());
    }
    state.t += dt;
    if !max_amp.is_finite() || max_amp > guard {
        return Err(CimError::IntegrationDiverged {
            t: state.t,
            amplitude: max_amp,
        });
    }
    Ok(())
}

/// Optional decimated trajectory capture for temporal plots.
#[derive(Debug, Default)]
pub struct TrajectoryDump {
    pub every: usize,
    /// Rows `(t, pulse index, c, s)`.
    pub rows: Vec<(f64, usize, f64, f64)>,
}

impl TrajectoryDump {
    pub fn new(every: usize) -> Self {
        TrajectoryDump {
            every: every.max(1),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,i,c,s")?;
        for &(t, i, c, s) in &self.rows {
            writeln!(w, "{t},{i},{c},{s}")?;
        }
        Ok(())
    }
}

/// Integrates the SDE from rest over the pump schedule with the local field
/// recomputed from `h(σ)` every step; returns the final binarized support.
pub fn run_support_estimation_fields<F, R>(
    n: usize,
    mut field_of: F,
    eta: f64,
    cfg: &CimConfig,
    rng: &mut R,
    mut dump: Option<&mut TrajectoryDump>,
) -> Result<Vec<bool>, CimError>
where
    F: FnMut(&[bool]) -> DVector<f64>,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let steps = (cfg.duration / cfg.dt).round() as usize;
    let mut state = OpoState::rest(n);
    for step in 0..steps {
        let sigma = state.support();
        let h = field_of(&sigma);
        let f = injection_field(&h, eta, cfg.chi, cfg.k_tilde);
        let p_now = cfg.p_schedule.p_at(state.t);
        step_in_place(&mut state, &f, p_now, cfg, rng)?;
        if let Some(d) = dump.as_deref_mut() {
            if step % d.every == 0 {
                for i in 0..n {
                    d.rows.push((state.t, i, state.c[i], state.s[i]));
                }
            }
        }
    }
    Ok(state.support())
}

/// Support estimation on an explicit instance with `r` fixed.
pub fn run_support_estimation<R: Rng + ?Sized>(
    inst: &Instance,
    r: &DVector<f64>,
    eta: f64,
    cfg: &CimConfig,
    rng: &mut R,
) -> Result<Vec<bool>, CimError> {
    if r.len() != inst.n() {
        return Err(CimError::DimensionMismatch {
            expected: inst.n(),
            got: r.len(),
        });
    }
    run_support_estimation_fields(
        inst.n(),
        |sigma| local_field_cim(inst, r, sigma).expect("lengths checked"),
        eta,
        cfg,
        rng,
        None,
    )
}
