//! `d̂` and its Heisenberg-picture images inside a finite `n_big²` working
//! space.
//!
//! States on the working space are mapped through the balanced beamsplitter
//! into shells of fixed `c`-mode occupation `k`; `|x − y| = √2|x_r|` acts
//! inside each shell through the single-mode `|q|` table, so
//! `⟨v|d̂|w⟩ = √2 Σ_k v_k† Q w_k` and the dense `n_big⁴` matrix is never
//! formed.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{input_sign, BellError, TwoModeState, INPUT_PAIRS, IMAGINARY_TOL};
use crate::beamsplitter::BeamsplitterTransform;
use crate::dynamics::{propagator_block, HarmonicStrategy, Party};
use crate::fock::abs_position_matrix;
use crate::linalg;

#[derive(Debug, Clone)]
pub struct WorkingSpace {
    n_sub: usize,
    n_big: usize,
    bs: BeamsplitterTransform,
    q: DMatrix<f64>,
}

impl WorkingSpace {
    pub fn new(n_sub: usize, n_big: usize) -> Result<Self, BellError> {
        if n_sub == 0 || n_sub > n_big {
            return Err(BellError::Dimension(format!(
                "need 1 <= n_sub <= n_big, got n_sub = {n_sub}, n_big = {n_big}"
            )));
        }
        Ok(Self {
            n_sub,
            n_big,
            bs: BeamsplitterTransform::new(FRAC_PI_4, n_big),
            q: abs_position_matrix(2 * n_big - 1)?,
        })
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    pub fn n_big(&self) -> usize {
        self.n_big
    }

    /// Splits `v` (length `n_big²`) into shells: `out[k][j]` is the amplitude
    /// on `|j⟩_r|k⟩_c`.
    fn shells(&self, v: &[Complex64]) -> Vec<Vec<Complex64>> {
        let n = self.n_big;
        let top = 2 * n - 1;
        let mut out: Vec<Vec<Complex64>> = (0..top).map(|k| vec![Complex64::new(0.0, 0.0); top - k]).collect();
        for m in 0..n {
            for l in 0..n {
                let amp = v[m * n + l];
                if amp == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let total = m + l;
                for (j, &c) in self.bs.coeffs(m, l).iter().enumerate() {
                    out[total - j][j] += amp * c;
                }
            }
        }
        out
    }

    /// Matrix `⟨v_i| d̂ |v_j⟩` for vectors on the working space.
    pub fn gram(&self, vectors: &[Vec<Complex64>]) -> DMatrix<Complex64> {
        let count = vectors.len();
        let dim = self.n_big * self.n_big;
        assert!(vectors.iter().all(|v| v.len() == dim), "vectors must live on n_big² states");
        let shells: Vec<Vec<Vec<Complex64>>> = vectors.par_iter().map(|v| self.shells(v)).collect();
        let top = 2 * self.n_big - 1;
        let blocks: Vec<DMatrix<Complex64>> = (0..top)
            .into_par_iter()
            .map(|k| {
                let len = top - k;
                let wr = DMatrix::from_fn(len, count, |j, i| shells[i][k][j].re);
                let wi = DMatrix::from_fn(len, count, |j, i| shells[i][k][j].im);
                let q = self.q.view((0, 0), (len, len));
                let qr = q * &wr;
                let qi = q * &wi;
                let re = wr.transpose() * &qr + wi.transpose() * &qi;
                let im = wr.transpose() * &qi - wi.transpose() * &qr;
                DMatrix::from_fn(count, count, |r, c| Complex64::new(re[(r, c)], im[(r, c)]))
            })
            .collect();
        let mut g = DMatrix::<Complex64>::zeros(count, count);
        for b in &blocks {
            g += b;
        }
        g * Complex64::new(SQRT_2, 0.0)
    }

    /// `U_A ⊗ U_B` applied to the ansatz product states `|m⟩|n⟩`, `m, n < n_sub`.
    fn evolved_basis(&self, a: usize, b: usize, t: f64, strategy: &HarmonicStrategy) -> Result<Vec<Vec<Complex64>>, BellError> {
        let (n, s) = (self.n_big, self.n_sub);
        let ua = propagator_block(strategy.omega(Party::A, a), t, n)?;
        let ub = propagator_block(strategy.omega(Party::B, b), t, n)?;
        Ok((0..s * s)
            .map(|i| {
                let (m, l) = (i / s, i % s);
                (0..n * n).map(|r| ua[(r / n, m)] * ub[(r % n, l)]).collect()
            })
            .collect())
    }

    /// Compression of `(U_A ⊗ U_B)† d̂ (U_A ⊗ U_B)` to the ansatz block, with
    /// `d̂` and `U` both truncated to the working space.
    pub fn abs_difference(&self, a: usize, b: usize, t: f64, strategy: &HarmonicStrategy) -> Result<DMatrix<Complex64>, BellError> {
        let vectors = self.evolved_basis(a, b, t, strategy)?;
        let mut g = self.gram(&vectors);
        linalg::symmetrize(&mut g);
        Ok(g)
    }

    /// Compressed `Ŝ(t)` built in the working space.
    pub fn bell_operator(&self, t: f64, strategy: &HarmonicStrategy) -> Result<DMatrix<Complex64>, BellError> {
        let dim = self.n_sub * self.n_sub;
        let mut s = DMatrix::<Complex64>::zeros(dim, dim);
        for (a, b) in INPUT_PAIRS {
            s += self.abs_difference(a, b, t, strategy)? * Complex64::new(input_sign(a, b), 0.0);
        }
        linalg::symmetrize(&mut s);
        Ok(s)
    }

    /// `(U_A ⊗ U_B)|Ψ₀⟩` on the working space.
    pub fn evolve_state(
        &self,
        state: &TwoModeState,
        a: usize,
        b: usize,
        t: f64,
        strategy: &HarmonicStrategy,
    ) -> Result<Vec<Complex64>, BellError> {
        if state.n_sub() > self.n_big {
            return Err(BellError::Dimension(format!(
                "state with n_sub = {} does not fit n_big = {}",
                state.n_sub(),
                self.n_big
            )));
        }
        let (n, s) = (self.n_big, state.n_sub());
        let ua = propagator_block(strategy.omega(Party::A, a), t, n)?;
        let ub = propagator_block(strategy.omega(Party::B, b), t, n)?;
        let c = DMatrix::from_fn(s, s, |m, l| state.amplitude(m, l));
        let evolved = ua.columns(0, s) * c * ub.columns(0, s).transpose();
        Ok((0..n * n).map(|r| evolved[(r / n, r % n)]).collect())
    }

    /// `⟨Ψ^{(a,b)}(t)| d̂ |Ψ^{(a,b)}(t)⟩` with the state propagated forward in
    /// the working space.
    pub fn state_expectation(
        &self,
        state: &TwoModeState,
        a: usize,
        b: usize,
        t: f64,
        strategy: &HarmonicStrategy,
    ) -> Result<f64, BellError> {
        let psi = self.evolve_state(state, a, b, t, strategy)?;
        let z = self.gram(std::slice::from_ref(&psi))[(0, 0)];
        if z.im.abs() > IMAGINARY_TOL {
            return Err(BellError::Accuracy(format!("expectation has imaginary part {}", z.im)));
        }
        Ok(z.re)
    }
}
