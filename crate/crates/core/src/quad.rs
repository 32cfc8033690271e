//! Scalar quadrature and Gaussian special functions used by the mean-field
//! solvers.
//!
//! Integrands here are smooth except at known breakpoints (thresholds of
//! step- or kink-like effective outputs), so the workhorse is a composite
//! Gauss-Legendre rule on panels that are geometrically refined towards each
//! breakpoint.

use statrs::function::erf::erfc;
use std::f64::consts::PI;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `P(Z > t)`.
pub fn normal_sf(t: f64) -> f64 {
    0.5 * erfc(t / std::f64::consts::SQRT_2)
}

/// Partial moments of the standard normal over the upper tail `[t, ∞)`:
/// `(∫Dz, ∫z Dz, ∫z² Dz)`.
pub fn upper_moments(t: f64) -> (f64, f64, f64) {
    let q = normal_sf(t);
    let p = normal_pdf(t);
    (q, p, q + t * p)
}

/// Partial moments of the standard normal over the lower tail `(-∞, t]`.
pub fn lower_moments(t: f64) -> (f64, f64, f64) {
    let c = normal_cdf(t);
    let p = normal_pdf(t);
    (c, -p, c - t * p)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Panel edges over `[lo, hi]`: interior breakpoints plus geometric
/// refinement around each breakpoint at distances `scale * 4^k`.
pub fn refined_edges(lo: f64, hi: f64, breaks: &[f64], scale: f64, levels: usize) -> Vec<f64> {
    let mut edges = vec![lo, hi];
    for &b in breaks {
        if b <= lo || b >= hi {
            // Off-interval breakpoints still shape the near edge.
            continue;
        }
        edges.push(b);
        if scale > 0.0 {
            let mut d = scale;
            for _ in 0..levels {
                if b - d > lo {
                    edges.push(b - d);
                }
                if b + d < hi {
                    edges.push(b + d);
                }
                d *= 4.0;
            }
        }
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
    edges
}

/// Composite Gauss-Legendre integral of `f` over consecutive `edges` panels.
pub fn integrate_panels<F: FnMut(f64) -> f64>(edges: &[f64], order: usize, mut f: F) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let mut total = 0.0;
    for seg in edges.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}
