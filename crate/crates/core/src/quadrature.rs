//! Gauss-Hermite quadrature for expectations over a standard normal.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Default rule size used by the MI routines. At 128 nodes the MI of
/// 16-level inputs near 30 dB still moves by a few 1e-8 bits when the rule
/// is doubled; at 256 it moves by less than 1e-9.
pub const DEFAULT_NODES: usize = 256;

/// Nodes whose normalized weight falls below this are dropped; their total
/// contribution is far below double precision for bounded integrands.
const WEIGHT_CUTOFF: f64 = 1e-22;

/// Quadrature rule for `E[f(Z)]`, `Z ~ N(0, 1)`.
///
/// Abscissae are `sqrt(2) * t_i` and weights `w_i / sqrt(pi)` of the
/// physicists' Gauss-Hermite rule, so the weights sum to one.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    order: usize,
    abscissae: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-point rule. Roots are found by Newton iteration on the
    /// orthonormal Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let (t, w) = hermite_roots(n);
        let mut abscissae = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (ti, wi) in t.into_iter().zip(w) {
            let wn = wi / PI.sqrt();
            if wn >= WEIGHT_CUTOFF {
                abscissae.push(std::f64::consts::SQRT_2 * ti);
                weights.push(wn);
            }
        }
        GaussHermite {
            order: n,
            abscissae,
            weights,
        }
    }

    /// Shared instance of the default rule.
    pub fn default_rule() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| GaussHermite::new(DEFAULT_NODES))
    }

    /// Nominal rule size before weight pruning.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(Z)]` for a standard normal `Z`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.abscissae.iter().zip(&self.weights).map(|(&z, &w)| w * f(z)).sum()
    }
}

// Physicists' nodes (descending) and weights for weight exp(-t^2).
//
// Nodes are the eigenvalues of the symmetric tridiagonal Jacobi matrix
// (zero diagonal, off-diagonal sqrt(k/2)), isolated by Sturm-sequence
// bisection, then polished by Newton steps on the orthonormal recurrence,
// which also yields the weights.
fn hermite_roots(n: usize) -> (Vec<f64>, Vec<f64>) {
    let off_sq: Vec<f64> = (1..n).map(|k| k as f64 / 2.0).collect();
    // Gershgorin bound.
    let bound = 2.0 * (n as f64 / 2.0).sqrt() + 1.0;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // i-th largest eigenvalue: exactly n - 1 - i eigenvalues lie below it.
        let rank = n - 1 - i;
        let (mut lo, mut hi) = (0.0f64.min(-bound), bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if count_below(&off_sq, mid) > rank {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let mut pp = 0.0;
        let mut rescaled = false;
        for _ in 0..3 {
            let (p1, p2, r) = hermite_orthonormal(n, z);
            rescaled = r;
            pp = (2.0 * n as f64).sqrt() * p2;
            z -= p1 / pp;
        }
        if n % 2 == 1 && i == n / 2 {
            z = 0.0;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        // A rescaled recurrence means the weight is below 1e-300.
        w[i] = if rescaled { 0.0 } else { 2.0 / (pp * pp) };
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

// Number of eigenvalues of the Jacobi matrix below `t`.
fn count_below(off_sq: &[f64], t: f64) -> usize {
    let mut count = 0;
    let mut d = -t;
    if d < 0.0 {
        count += 1;
    }
    for &b2 in off_sq {
        let prev = if d == 0.0 { f64::EPSILON } else { d };
        d = -t - b2 / prev;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

// Orthonormal Hermite values (p_n, p_{n-1}) at z, without the Gaussian
// factor. Outer roots of large rules overflow; both values are then scaled
// down together, which keeps the Newton ratio exact.
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64, bool) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut rescaled = false;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > 1e150 {
            p1 *= 1e-150;
            p2 *= 1e-150;
            rescaled = true;
        }
    }
    (p1, p2, rescaled)
}
