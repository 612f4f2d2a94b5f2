//! Gaussian quadrature rules and orthonormal function families.
//!
//! Both rules are returned with *scaled* weights, i.e. the Christoffel
//! numbers multiplied by the inverse weight function at each node. A rule of
//! size `n` then integrates `p(x) w(x)` exactly for polynomials `p` of degree
//! below `2n`, where the integrand is supplied as a whole (weight included).
//! Evaluating the integrand through Hermite/Laguerre *functions* keeps every
//! factor in floating-point range well past the sizes used by this crate.

use nalgebra::{DMatrix, SymmetricEigen};

/// Largest Gauss–Hermite rule whose outermost node keeps `exp(-x²/2)` normal.
pub const MAX_HERMITE_NODES: usize = 600;
/// Largest Gauss–Laguerre rule whose outermost node keeps `exp(-s/2)` normal.
pub const MAX_LAGUERRE_NODES: usize = 320;

const NEWTON_STEPS: usize = 4;

/// Nodes and scaled weights of a Gaussian rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub scaled_weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ W_i g(x_i)`; `g` must include the weight function.
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}

/// Normalized Hermite functions `ψ_0(x) … ψ_{count-1}(x)` of the unit
/// oscillator, via the three-term recurrence on the functions themselves.
pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if count == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for k in 2..count {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * x * out[k - 1] - ((kf - 1.0) / kf).sqrt() * out[k - 2];
        out.push(next);
    }
    out
}

/// Laguerre functions `L_k(s) exp(-s/2)`, orthonormal on `[0, ∞)`.
pub fn laguerre_functions(s: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let l0 = (-0.5 * s).exp();
    out.push(l0);
    if count == 1 {
        return out;
    }
    out.push((1.0 - s) * l0);
    for k in 1..count - 1 {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - s) * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

fn jacobi_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
    }
    for (i, &b) in off.iter().enumerate() {
        j[(i, i + 1)] = b;
        j[(i + 1, i)] = b;
    }
    let mut eig = SymmetricEigen::new(j).eigenvalues.as_slice().to_vec();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

/// Gauss–Hermite rule for weight `exp(-x²)` on the real line.
///
/// # Panics
/// If `n` is zero or exceeds [`MAX_HERMITE_NODES`].
pub fn gauss_hermite(n: usize) -> GaussRule {
    assert!(
        (1..=MAX_HERMITE_NODES).contains(&n),
        "Gauss-Hermite rule size {n} out of range"
    );
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let mut nodes = jacobi_eigenvalues(&diag, &off);
    let nf = n as f64;
    for x in nodes.iter_mut() {
        for _ in 0..NEWTON_STEPS {
            let psi = hermite_functions(*x, n + 1);
            let denom = (2.0 * nf).sqrt() * psi[n - 1];
            if denom == 0.0 {
                break;
            }
            *x -= psi[n] / denom;
        }
    }
    let scaled_weights = nodes
        .iter()
        .map(|&x| 1.0 / hermite_functions(x, n).iter().map(|p| p * p).sum::<f64>())
        .collect();
    GaussRule {
        nodes,
        scaled_weights,
    }
}

/// Gauss–Laguerre rule for weight `exp(-s)` on `[0, ∞)`.
///
/// # Panics
/// If `n` is zero or exceeds [`MAX_LAGUERRE_NODES`].
pub fn gauss_laguerre(n: usize) -> GaussRule {
    assert!(
        (1..=MAX_LAGUERRE_NODES).contains(&n),
        "Gauss-Laguerre rule size {n} out of range"
    );
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| k as f64).collect();
    let mut nodes = jacobi_eigenvalues(&diag, &off);
    let nf = n as f64;
    for s in nodes.iter_mut() {
        for _ in 0..NEWTON_STEPS {
            let l = laguerre_functions(*s, n + 1);
            let denom = nf * (l[n] - l[n - 1]);
            if denom == 0.0 {
                break;
            }
            *s -= *s * l[n] / denom;
        }
    }
    let scaled_weights = nodes
        .iter()
        .map(|&s| 1.0 / laguerre_functions(s, n).iter().map(|p| p * p).sum::<f64>())
        .collect();
    GaussRule {
        nodes,
        scaled_weights,
    }
}
