//! Two-mode Fock states expressed in a rotated pair of modes.
//!
//! For a mixing angle `φ` the new modes are
//! `r = cos φ·a − sin φ·b` and `c = sin φ·a + cos φ·b`, so the position
//! quadrature of `r` is `cos φ·x − sin φ·y`. A product state `|m⟩_a|n⟩_b`
//! stays inside the shell of total excitation `N = m + n`:
//!
//! ```text
//! |m, n⟩ = Σ_j  C_N[j, m] · |j⟩_r |N − j⟩_c
//! ```
//!
//! `C_N = exp(φ G_N)` with `G_N` the real antisymmetric tridiagonal generator
//! `G[k, k+1] = −G[k+1, k] = √((k+1)(N−k))`. Conjugating by `diag(i^k)` turns
//! `G_N` into `i·S_N` with `S_N` real symmetric, so
//! `C_N[j, m] = Re(i^{j−m} Σ_l V[j,l] V[m,l] e^{iφλ_l})` from the
//! eigendecomposition `S_N = V Λ Vᵀ`. Unlike a creation-operator recursion
//! this stays accurate for shells of several hundred excitations.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::linalg;

/// Real expansion coefficients of every `|m, n⟩` with `m, n < dim`.
#[derive(Debug, Clone)]
pub struct BeamsplitterTransform {
    angle: f64,
    dim: usize,
    /// `shells[N]` is `C_N`, column `m` holding the expansion of `|m, N−m⟩`.
    shells: Vec<DMatrix<f64>>,
}

impl BeamsplitterTransform {
    /// Builds the expansion for all states `|m, n⟩` with `m, n < dim`.
    pub fn new(angle: f64, dim: usize) -> Self {
        let top = (2 * dim).saturating_sub(1);
        let shells = (0..top).into_par_iter().map(|n| shell(angle, n)).collect();
        Self { angle, dim, shells }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficients of `|m, n⟩`, indexed by the `r`-mode occupation `j`
    /// (the `c`-mode holds `m + n − j`).
    pub fn coeffs(&self, m: usize, n: usize) -> &[f64] {
        assert!(m < self.dim && n < self.dim, "level ({m}, {n}) outside dim {}", self.dim);
        let c = &self.shells[m + n];
        let len = c.nrows();
        &c.as_slice()[m * len..(m + 1) * len]
    }
}

fn shell(angle: f64, total: usize) -> DMatrix<f64> {
    let size = total + 1;
    let mut s = DMatrix::<f64>::zeros(size, size);
    for k in 0..total {
        let b = (((k + 1) * (total - k)) as f64).sqrt();
        s[(k, k + 1)] = b;
        s[(k + 1, k)] = b;
    }
    let (lambda, v) = linalg::symmetric_eigh(&s);
    // Σ_l V[j,l] V[m,l] e^{iφλ_l} = A + iB
    let vc = DMatrix::from_fn(size, size, |j, l| v[(j, l)] * (angle * lambda[l]).cos());
    let vs = DMatrix::from_fn(size, size, |j, l| v[(j, l)] * (angle * lambda[l]).sin());
    let a = vc * v.transpose();
    let b = vs * v.transpose();
    DMatrix::from_fn(size, size, |j, m| match (j + 4 * size - m) % 4 {
        0 => a[(j, m)],
        1 => -b[(j, m)],
        2 => -a[(j, m)],
        _ => b[(j, m)],
    })
}
