//! Problem instances: the observation model `y = A(ξ∘x) + n` with an i.i.d.
//! Gaussian observation matrix, exact column normalization, a planted
//! support `ξ` of exactly `round(a·n)` ones, and source values drawn from
//! one of four distributions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Sign structure of the source signal; selects `F_χ` and the thresholding
/// variants downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chi {
    NonNegative,
    Signed,
}

/// Source-value distribution `g(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceDistribution {
    /// Zero-mean Gaussian with variance `sigma2`.
    GaussianSigned { sigma2: f64 },
    /// `|N(0, sigma2)|`.
    HalfGaussianNonneg { sigma2: f64 },
    /// Gamma with shape `k` and scale `theta`.
    GammaNonneg { k: f64, theta: f64 },
    /// Gamma magnitude with an independent random sign.
    BilateralGammaSigned { k: f64, theta: f64 },
}

impl SourceDistribution {
    pub fn validate(&self) -> Result<(), ProblemError> {
        let bad = |msg: &str| Err(ProblemError::InvalidParameter(msg.to_string()));
        match *self {
            SourceDistribution::GaussianSigned { sigma2 }
            | SourceDistribution::HalfGaussianNonneg { sigma2 } => {
                if !(sigma2 > 0.0) {
                    return bad("sigma2 must be > 0");
                }
            }
            SourceDistribution::GammaNonneg { k, theta }
            | SourceDistribution::BilateralGammaSigned { k, theta } => {
                if !(k > 0.0) {
                    return bad("gamma shape k must be > 0");
                }
                if !(theta > 0.0) {
                    return bad("gamma scale theta must be > 0");
                }
            }
        }
        Ok(())
    }

    /// Closed-form second moment `⟨x²⟩`: `σ²` for both Gaussian kinds,
    /// `k(k+1)θ²` for both Gamma kinds.
    pub fn second_moment(&self) -> f64 {
        match *self {
            SourceDistribution::GaussianSigned { sigma2 }
            | SourceDistribution::HalfGaussianNonneg { sigma2 } => sigma2,
            SourceDistribution::GammaNonneg { k, theta }
            | SourceDistribution::BilateralGammaSigned { k, theta } => k * (k + 1.0) * theta * theta,
        }
    }

    /// The sign structure this distribution implies.
    pub fn natural_chi(&self) -> Chi {
        match self {
            SourceDistribution::GaussianSigned { .. }
            | SourceDistribution::BilateralGammaSigned { .. } => Chi::Signed,
            SourceDistribution::HalfGaussianNonneg { .. }
            | SourceDistribution::GammaNonneg { .. } => Chi::NonNegative,
        }
    }

    /// One draw from `g(x)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SourceDistribution::GaussianSigned { sigma2 } => {
                let z: f64 = StandardNormal.sample(rng);
                z * sigma2.sqrt()
            }
            SourceDistribution::HalfGaussianNonneg { sigma2 } => {
                let z: f64 = StandardNormal.sample(rng);
                z.abs() * sigma2.sqrt()
            }
            SourceDistribution::GammaNonneg { k, theta } => {
                Gamma::new(k, theta).expect("validated").sample(rng)
            }
            SourceDistribution::BilateralGammaSigned { k, theta } => {
                let mag = Gamma::new(k, theta).expect("validated").sample(rng);
                if rng.gen::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
        }
    }

    /// Canonical identifier used in `params.json` and CSV output.
    pub fn tag(&self) -> &'static str {
        match self {
            SourceDistribution::GaussianSigned { .. } => "gaussian_signed",
            SourceDistribution::HalfGaussianNonneg { .. } => "half_gaussian_nonneg",
            SourceDistribution::GammaNonneg { .. } => "gamma_nonneg",
            SourceDistribution::BilateralGammaSigned { .. } => "bilateral_gamma_signed",
        }
    }

    /// Rebuild from the `params.json` representation.
    pub fn from_tag(tag: &str, sigma2: f64, k: f64, theta: f64) -> Result<Self, ProblemError> {
        let dist = match tag {
            "gaussian_signed" => SourceDistribution::GaussianSigned { sigma2 },
            "half_gaussian_nonneg" => SourceDistribution::HalfGaussianNonneg { sigma2 },
            "gamma_nonneg" => SourceDistribution::GammaNonneg { k, theta },
            "bilateral_gamma_signed" => SourceDistribution::BilateralGammaSigned { k, theta },
            other => {
                return Err(ProblemError::InvalidParameter(format!(
                    "unknown distribution tag {other:?}"
                )))
            }
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// i.i.d. samples from `g(x)`.
pub fn sample_source<R: Rng + ?Sized>(
    dist: &SourceDistribution,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>, ProblemError> {
    dist.validate()?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// Generation parameters for a random instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    /// Signal dimension N.
    pub n: usize,
    /// Compression rate α = M/N.
    pub alpha: f64,
    /// Sparseness a = (nonzeros)/N.
    pub a: f64,
    /// Observation-noise standard deviation, in observation units.
    pub beta: f64,
    pub dist: SourceDistribution,
    pub chi: Chi,
    pub seed: u64,
}

impl InstanceParams {
    pub fn m(&self) -> usize {
        (self.alpha * self.n as f64).round() as usize
    }

    pub fn support_count(&self) -> usize {
        (self.a * self.n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let bad = |msg: String| Err(ProblemError::InvalidParameter(msg));
        self.dist.validate()?;
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0,1], got {}", self.alpha));
        }
        if self.m() < 1 {
            return bad(format!("round(alpha*n) = {} must be >= 1", self.m()));
        }
        if !(self.a >= 0.0 && self.a <= 1.0) {
            return bad(format!("a must be in [0,1], got {}", self.a));
        }
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if self.chi != self.dist.natural_chi() {
            return bad(format!(
                "chi {:?} inconsistent with distribution {}",
                self.chi,
                self.dist.tag()
            ));
        }
        Ok(())
    }
}

/// A synthesized observation problem. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// M×N observation matrix with exactly unit-norm columns.
    pub a_mat: DMatrix<f64>,
    /// Observation vector, noise folded in.
    pub y: DVector<f64>,
    /// Source values for every site (support and non-support alike).
    pub x_true: DVector<f64>,
    /// Planted support.
    pub xi_true: Vec<bool>,
    pub params: InstanceParams,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.a_mat.ncols()
    }

    pub fn m(&self) -> usize {
        self.a_mat.nrows()
    }

    /// The ground-truth signal `ξ∘x`.
    pub fn true_signal(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.n(),
            self.x_true
                .iter()
                .zip(&self.xi_true)
                .map(|(&x, &on)| if on { x } else { 0.0 }),
        )
    }

    pub fn support_size(&self) -> usize {
        self.xi_true.iter().filter(|&&b| b).count()
    }
}

/// Draws an instance. Deterministic given the seed; the generator is
/// consumed in the order A, ξ, x, noise.
pub fn synthesize(params: &InstanceParams) -> Result<Instance, ProblemError> {
    params.validate()?;
    let n = params.n;
    let m = params.m();
    let mut rng = rng_from_seed(params.seed);

    // A: standard Gaussian scaled by 1/√M, column by column, then exact
    // column normalization so that Σ_μ (A_i^μ)² = 1 holds at finite size.
    let scale = 1.0 / (m as f64).sqrt();
    let mut a_mat = DMatrix::<f64>::zeros(m, n);
    for j in 0..n {
        for i in 0..m {
            let g: f64 = StandardNormal.sample(&mut rng);
            a_mat[(i, j)] = g * scale;
        }
    }
    for j in 0..n {
        let norm = a_mat.column(j).norm();
        if norm == 0.0 {
            return Err(ProblemError::InvalidParameter(format!(
                "degenerate zero column {j} (m too small)"
            )));
        }
        a_mat.column_mut(j).scale_mut(1.0 / norm);
    }

    // ξ: exactly round(a·n) ones at uniformly random positions
    // (partial Fisher-Yates).
    let k = params.support_count();
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k.min(n) {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let mut xi_true = vec![false; n];
    for &i in idx.iter().take(k) {
        xi_true[i] = true;
    }

    // x: i.i.d. source values for every site, independent of ξ.
    let x_true = DVector::from_vec(sample_source(&params.dist, n, &mut rng)?);

    let mut y = DVector::zeros(m);
    for (j, &on) in xi_true.iter().enumerate() {
        if on {
            y.axpy(x_true[j], &a_mat.column(j), 1.0);
        }
    }
    if params.beta > 0.0 {
        for i in 0..m {
            let g: f64 = StandardNormal.sample(&mut rng);
            y[i] += params.beta * g;
        }
    }

    Ok(Instance {
        a_mat,
        y,
        x_true,
        xi_true,
        params: *params,
    })
}

/// Closed-form second moment of the source distribution.
pub fn second_moment(dist: &SourceDistribution) -> f64 {
    dist.second_moment()
}

pub mod io {
    //! Instance interchange as a directory of flat files:
    //! `a.mat` / `y.vec` / `x.vec` (binary, magic `CIML0CS1`, u32 LE rows,
    //! u32 LE cols, f64 LE row-major), `xi.bits` (ASCII 0/1 per line) and
    //! `params.json`.

    use super::*;
    use std::fs;
    use std::io::{Read, Write};
    use std::path::Path;

    const MAGIC: &[u8; 8] = b"CIML0CS1";

    pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<(), ProblemError> {
        let mut f = fs::File::create(path)?;
        f.write_all(MAGIC)?;
        f.write_all(&(m.nrows() as u32).to_le_bytes())?;
        f.write_all(&(m.ncols() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(m.len() * 8);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                buf.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, ProblemError> {
        let mut f = fs::File::open(path)?;
        let mut header = [0u8; 16];
        f.read_exact(&mut header)?;
        if &header[..8] != MAGIC {
            return Err(ProblemError::Format(format!(
                "{path:?}: bad magic, expected CIML0CS1"
            )));
        }
        let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
        let mut buf = Vec::new();
        f.read_to_end(&mut buf)?;
        if buf.len() != rows * cols * 8 {
            return Err(ProblemError::Format(format!(
                "{path:?}: payload is {} bytes, expected {}",
                buf.len(),
                rows * cols * 8
            )));
        }
        let mut m = DMatrix::zeros(rows, cols);
        let mut off = 0;
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
                off += 8;
            }
        }
        Ok(m)
    }

    pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<(), ProblemError> {
        write_matrix(path, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
    }

    pub fn read_vector(path: &Path) -> Result<DVector<f64>, ProblemError> {
        let m = read_matrix(path)?;
        if m.ncols() != 1 {
            return Err(ProblemError::Format(format!(
                "{path:?}: expected a single-column vector, got {} columns",
                m.ncols()
            )));
        }
        Ok(DVector::from_column_slice(m.column(0).as_slice()))
    }

    #[derive(Serialize, Deserialize)]
    struct ParamsFile {
        n: usize,
        alpha: f64,
        a: f64,
        beta: f64,
        dist: String,
        sigma2: f64,
        k: f64,
        theta: f64,
        chi: Chi,
        seed: u64,
    }

    impl From<&InstanceParams> for ParamsFile {
        fn from(p: &InstanceParams) -> Self {
            let (sigma2, k, theta) = match p.dist {
                SourceDistribution::GaussianSigned { sigma2 }
                | SourceDistribution::HalfGaussianNonneg { sigma2 } => (sigma2, 0.0, 0.0),
                SourceDistribution::GammaNonneg { k, theta }
                | SourceDistribution::BilateralGammaSigned { k, theta } => (0.0, k, theta),
            };
            ParamsFile {
                n: p.n,
                alpha: p.alpha,
                a: p.a,
                beta: p.beta,
                dist: p.dist.tag().to_string(),
                sigma2,
                k,
                theta,
                chi: p.chi,
                seed: p.seed,
            }
        }
    }

    pub fn export_dir(inst: &Instance, dir: &Path) -> Result<(), ProblemError> {
        fs::create_dir_all(dir)?;
        write_matrix(&dir.join("a.mat"), &inst.a_mat)?;
        write_vector(&dir.join("y.vec"), &inst.y)?;
        write_vector(&dir.join("x.vec"), &inst.x_true)?;
        let bits: String = inst
            .xi_true
            .iter()
            .map(|&b| if b { "1\n" } else { "0\n" })
            .collect();
        fs::write(dir.join("xi.bits"), bits)?;
        let pf = ParamsFile::from(&inst.params);
        fs::write(dir.join("params.json"), serde_json::to_string_pretty(&pf)?)?;
        Ok(())
    }

    pub fn import_dir(dir: &Path) -> Result<Instance, ProblemError> {
        let a_mat = read_matrix(&dir.join("a.mat"))?;
        let y = read_vector(&dir.join("y.vec"))?;
        let x_true = read_vector(&dir.join("x.vec"))?;
        let xi_text = fs::read_to_string(dir.join("xi.bits"))?;
        let xi_true: Vec<bool> = xi_text
            .lines()
            .map(|l| match l.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(ProblemError::Format(format!(
                    "xi.bits: expected 0 or 1 per line, got {other:?}"
                ))),
            })
            .collect::<Result<_, _>>()?;
        let pf: ParamsFile = serde_json::from_str(&fs::read_to_string(dir.join("params.json"))?)?;
        let dist = SourceDistribution::from_tag(&pf.dist, pf.sigma2, pf.k, pf.theta)?;
        let params = InstanceParams {
            n: pf.n,
            alpha: pf.alpha,
            a: pf.a,
            beta: pf.beta,
            dist,
            chi: pf.chi,
            seed: pf.seed,
        };
        if a_mat.ncols() != params.n || y.len() != a_mat.nrows() || xi_true.len() != params.n {
            return Err(ProblemError::Format(
                "inconsistent dimensions between files".into(),
            ));
        }
        Ok(Instance {
            a_mat,
            y,
            x_true,
            xi_true,
            params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;

    fn half_gaussian() -> SourceDistribution {
        SourceDistribution::HalfGaussianNonneg { sigma2: 1.0 }
    }

    #[test]
    fn second_moments_closed_form() {
        assert_relative_eq!(
            SourceDistribution::GaussianSigned { sigma2: 1.0 }.second_moment(),
            1.0
        );
        assert_relative_eq!(
            SourceDistribution::GammaNonneg { k: 2.0, theta: 0.4 }.second_moment(),
            0.96
        );
        assert_relative_eq!(
            SourceDistribution::GaussianSigned { sigma2: 0.25 }.second_moment(),
            0.25
        );
    }

    #[test]
    fn sample_second_moment_matches() {
        let mut rng = rng_from_seed(11);
        let xs = sample_source(&half_gaussian(), 1_000_000, &mut rng).unwrap();
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((m2 - 1.0).abs() < 0.01, "half-gaussian ⟨x²⟩ = {m2}");
        assert!(xs.iter().all(|&x| x >= 0.0));

        let gamma = SourceDistribution::GammaNonneg { k: 2.0, theta: 0.4 };
        let xs = sample_source(&gamma, 1_000_000, &mut rng).unwrap();
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((m2 - 0.96).abs() < 0.01, "gamma ⟨x²⟩ = {m2}");

        let empty = sample_source(&gamma, 0, &mut rng).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn bilateral_gamma_is_symmetric() {
        let dist = SourceDistribution::BilateralGammaSigned { k: 2.0, theta: 0.4 };
        let mut rng = rng_from_seed(3);
        let xs = sample_source(&dist, 200_000, &mut rng).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.01, "mean = {mean}");
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((m2 - 0.96).abs() < 0.02);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut rng = rng_from_seed(0);
        assert!(sample_source(
            &SourceDistribution::GaussianSigned { sigma2: -1.0 },
            4,
            &mut rng
        )
        .is_err());
        assert!(sample_source(
            &SourceDistribution::GammaNonneg { k: 0.0, theta: 0.4 },
            4,
            &mut rng
        )
        .is_err());
        // chi/dist mismatch
        let p = InstanceParams {
            n: 16,
            alpha: 0.5,
            a: 0.25,
            beta: 0.0,
            dist: half_gaussian(),
            chi: Chi::Signed,
            seed: 1,
        };
        assert!(p.validate().is_err());
        // round(alpha*n) < 1
        let p = InstanceParams {
            n: 4,
            alpha: 0.1,
            a: 0.25,
            beta: 0.0,
            dist: half_gaussian(),
            chi: Chi::NonNegative,
            seed: 1,
        };
        assert!(synthesize(&p).is_err());
    }

    fn base_params(n: usize, seed: u64) -> InstanceParams {
        InstanceParams {
            n,
            alpha: 0.5,
            a: 0.2,
            beta: 0.0,
            dist: half_gaussian(),
            chi: Chi::NonNegative,
            seed,
        }
    }

    #[test]
    fn synthesis_contract() {
        let inst = synthesize(&base_params(100, 7)).unwrap();
        assert_eq!(inst.m(), 50);
        assert_eq!(inst.support_size(), 20);
        for j in 0..inst.n() {
            assert_relative_eq!(inst.a_mat.column(j).norm_squared(), 1.0, epsilon = 1e-12);
        }
        // Noiseless residual is exactly zero.
        let resid = &inst.y - &inst.a_mat * inst.true_signal();
        assert_eq!(resid.norm(), 0.0);
    }

    #[test]
    fn same_seed_identical_different_seed_differs() {
        let a = synthesize(&base_params(64, 9)).unwrap();
        let b = synthesize(&base_params(64, 9)).unwrap();
        let c = synthesize(&base_params(64, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn noise_variance_matches_sample_oracle() {
        let mut p = base_params(4000, 21);
        p.beta = 0.1;
        let inst = synthesize(&p).unwrap();
        let resid = &inst.y - &inst.a_mat * inst.true_signal();
        // Sample-variance oracle over the generated noise.
        let mse = resid.norm_squared() / inst.m() as f64;
        assert!((mse - 0.01).abs() < 0.002, "noise mse = {mse}");
    }

    #[test]
    fn column_cross_correlation_statistics() {
        let inst = synthesize(&base_params(256, 5)).unwrap();
        let m = inst.m() as f64;
        let mut dots = Vec::new();
        for i in (0..inst.n()).step_by(7) {
            for j in (i + 1..inst.n()).step_by(11) {
                dots.push(inst.a_mat.column(i).dot(&inst.a_mat.column(j)));
            }
        }
        let mean = dots.iter().sum::<f64>() / dots.len() as f64;
        let var = dots.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / dots.len() as f64;
        assert!(mean.abs() < 3.0 / (m * dots.len() as f64).sqrt() + 0.01);
        assert!((var * m - 1.0).abs() < 0.25, "var*m = {}", var * m);
    }

    #[test]
    fn export_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = base_params(32, 13);
        p.beta = 0.05;
        let inst = synthesize(&p).unwrap();
        io::export_dir(&inst, dir.path()).unwrap();
        let back = io::import_dir(dir.path()).unwrap();
        assert_eq!(inst, back);
    }
}
