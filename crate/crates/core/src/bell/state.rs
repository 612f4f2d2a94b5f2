use nalgebra::DMatrix;
use num_complex::Complex64;

use super::BellError;

/// Normalized amplitudes `c_mn` on `|m⟩_A|n⟩_B`, `m, n < n_sub`, stored
/// row-major in `(m, n)`. The largest amplitude is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    n_sub: usize,
    amplitudes: Vec<Complex64>,
}

impl TwoModeState {
    /// Normalizes `amplitudes` and fixes the global phase.
    pub fn new(n_sub: usize, amplitudes: Vec<Complex64>) -> Result<Self, BellError> {
        if n_sub == 0 || amplitudes.len() != n_sub * n_sub {
            return Err(BellError::Dimension(format!(
                "{} amplitudes for n_sub = {n_sub}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(BellError::InvalidParameter("state has zero or non-finite norm".into()));
        }
        let largest = amplitudes.iter().map(|c| c.norm()).fold(0.0, f64::max);
        // first index within roundoff of the maximum, so ties resolve by index
        let pivot = amplitudes
            .iter()
            .position(|c| c.norm() >= largest * (1.0 - 1e-12))
            .expect("non-empty");
        let phase = amplitudes[pivot].conj() / amplitudes[pivot].norm();
        let scale = phase / norm;
        let mut amplitudes: Vec<Complex64> = amplitudes.iter().map(|c| c * scale).collect();
        amplitudes[pivot].im = 0.0;
        Ok(Self { n_sub, amplitudes })
    }

    /// `|φ⟩_A ⊗ |χ⟩_B`.
    pub fn product(phi: &[Complex64], chi: &[Complex64]) -> Result<Self, BellError> {
        if phi.len() != chi.len() {
            return Err(BellError::Dimension("factors of different length".into()));
        }
        let n = phi.len();
        let amps = (0..n * n).map(|i| phi[i / n] * chi[i % n]).collect();
        Self::new(n, amps)
    }

    /// `|m⟩_A|n⟩_B`.
    pub fn basis(n_sub: usize, m: usize, n: usize) -> Result<Self, BellError> {
        let mut amps = vec![Complex64::new(0.0, 0.0); n_sub * n_sub];
        if m >= n_sub || n >= n_sub {
            return Err(BellError::Dimension(format!("level ({m}, {n}) outside n_sub = {n_sub}")));
        }
        amps[m * n_sub + n] = Complex64::new(1.0, 0.0);
        Self::new(n_sub, amps)
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, m: usize, n: usize) -> Complex64 {
        self.amplitudes[m * self.n_sub + n]
    }

    /// The same state on a larger per-mode truncation.
    pub fn embed(&self, dim: usize) -> Vec<Complex64> {
        assert!(dim >= self.n_sub);
        let mut v = vec![Complex64::new(0.0, 0.0); dim * dim];
        for m in 0..self.n_sub {
            for n in 0..self.n_sub {
                v[m * dim + n] = self.amplitude(m, n);
            }
        }
        v
    }

    /// Singular values of the `n_sub × n_sub` coefficient matrix, descending.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        let c = DMatrix::from_fn(self.n_sub, self.n_sub, |m, n| self.amplitude(m, n));
        let mut s: Vec<f64> = c.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Number of Schmidt coefficients above `tol`.
    pub fn schmidt_rank(&self, tol: f64) -> usize {
        self.schmidt_coefficients().iter().filter(|&&s| s > tol).count()
    }
}
