//! Truncation-free matrix elements of `d̂_ab(t)` on the ansatz subspace.
//!
//! With `U†xU = λ_A x_{θ_A}` and `U†yU = λ_B y_{θ_B}`, where
//! `x_θ = e^{iθN} x e^{−iθN}`,
//!
//! ```text
//! d̂_ab(t) = e^{i(θ_A N_A + θ_B N_B)} · Λ|cos φ·x − sin φ·y| · e^{−i(θ_A N_A + θ_B N_B)}
//! ```
//!
//! with `Λ = hypot(λ_A, λ_B)` and `tan φ = λ_B/λ_A`. The middle factor is
//! `Λ|x_r|` for the mode `r` of a beamsplitter at angle `φ`, so every element
//! between ansatz states needs `|q|` only up to level `2·n_sub − 2`; no
//! working truncation enters.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{input_sign, BellError, INPUT_PAIRS};
use crate::beamsplitter::BeamsplitterTransform;
use crate::dynamics::{quadrature_rotation, HarmonicStrategy, Party, QuadratureRotation};
use crate::fock::{abs_position_matrix, BasisSpec, FockOperator, ModeCount};
use crate::linalg;
use crate::units::Unit;

/// Precomputed `|q|` table for an ansatz dimension.
#[derive(Debug, Clone)]
pub struct BellKernel {
    n_sub: usize,
    q: DMatrix<f64>,
}

impl BellKernel {
    pub fn new(n_sub: usize) -> Result<Self, BellError> {
        if n_sub == 0 {
            return Err(BellError::Dimension("n_sub must be at least 1".into()));
        }
        Ok(Self {
            n_sub,
            q: abs_position_matrix(2 * n_sub - 1)?,
        })
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    /// `|λ_A x_{θ_A} − λ_B y_{θ_B}|` on the `n_sub²` ansatz states.
    pub fn rotated_abs_difference(&self, ra: QuadratureRotation, rb: QuadratureRotation) -> DMatrix<Complex64> {
        let n = self.n_sub;
        let big_lambda = ra.scale.hypot(rb.scale);
        let phi = rb.scale.atan2(ra.scale);
        let bs = BeamsplitterTransform::new(phi, n);
        let dim = n * n;
        let phases: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::from_polar(1.0, -(ra.angle * (i / n) as f64 + rb.angle * (i % n) as f64)))
            .collect();
        let mut d = DMatrix::<Complex64>::zeros(dim, dim);
        for r in 0..dim {
            let (m1, n1) = (r / n, r % n);
            let (v1, total1) = (bs.coeffs(m1, n1), m1 + n1);
            for c in r..dim {
                let (m2, n2) = (c / n, c % n);
                let total2 = m2 + n2;
                if (total1 + total2) % 2 == 1 {
                    continue;
                }
                let v2 = bs.coeffs(m2, n2);
                let mut acc = 0.0;
                for k in 0..=total1.min(total2) {
                    let (j1, j2) = (total1 - k, total2 - k);
                    acc += v1[j1] * self.q[(j1, j2)] * v2[j2];
                }
                let z = phases[r].conj() * phases[c] * (big_lambda * acc);
                d[(r, c)] = z;
                d[(c, r)] = z.conj();
            }
            d[(r, r)].im = 0.0;
        }
        d
    }

    /// `d̂_ab(t)` on the ansatz states.
    pub fn abs_difference(&self, a: usize, b: usize, t: f64, strategy: &HarmonicStrategy) -> DMatrix<Complex64> {
        let ra = quadrature_rotation(strategy.omega(Party::A, a), t);
        let rb = quadrature_rotation(strategy.omega(Party::B, b), t);
        self.rotated_abs_difference(ra, rb)
    }

    /// `Σ_ab (−1)^{ab} d̂_ab(t)` on the ansatz states.
    pub fn bell_operator(&self, t: f64, strategy: &HarmonicStrategy) -> DMatrix<Complex64> {
        let dim = self.n_sub * self.n_sub;
        let mut s = DMatrix::<Complex64>::zeros(dim, dim);
        for (a, b) in INPUT_PAIRS {
            s += self.abs_difference(a, b, t, strategy) * Complex64::new(input_sign(a, b), 0.0);
        }
        linalg::symmetrize(&mut s);
        s
    }
}

fn check_inputs(t: f64, strategy: &HarmonicStrategy, basis: &BasisSpec) -> Result<(), BellError> {
    if basis.modes != ModeCount::Two {
        return Err(BellError::Dimension("bell operator needs a two-mode basis".into()));
    }
    basis.validate()?;
    strategy.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(BellError::InvalidParameter(format!("time must be finite and non-negative, got {t}")));
    }
    Ok(())
}

/// `d̂_ab(t)` restricted to the `n_sub²` ansatz block.
pub fn evolved_abs_difference(
    a: usize,
    b: usize,
    t: f64,
    strategy: &HarmonicStrategy,
    basis: &BasisSpec,
) -> Result<FockOperator, BellError> {
    check_inputs(t, strategy, basis)?;
    if a > 1 || b > 1 {
        return Err(BellError::InvalidParameter(format!("inputs must be bits, got ({a}, {b})")));
    }
    let kernel = BellKernel::new(basis.n_sub)?;
    Ok(FockOperator::new(
        kernel.abs_difference(a, b, t, strategy),
        Unit::Length,
        ModeCount::Two,
    ))
}

/// `Ŝ(t)` restricted to the `n_sub²` ansatz block.
///
/// The elements are the exact ones of the untruncated operator; the working
/// truncation `n_big` of `basis` is only validated here. See
/// [`WorkingSpace`](super::WorkingSpace) for the same operator built inside a
/// finite `n_big²` space.
pub fn bell_operator(t: f64, strategy: &HarmonicStrategy, basis: &BasisSpec) -> Result<FockOperator, BellError> {
    check_inputs(t, strategy, basis)?;
    let kernel = BellKernel::new(basis.n_sub)?;
    Ok(FockOperator::new(
        kernel.bell_operator(t, strategy),
        Unit::Length,
        ModeCount::Two,
    ))
}
