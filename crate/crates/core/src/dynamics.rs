//! Evolution under the input-dependent harmonic Hamiltonians, in the Fock
//! basis of the reference oscillator.
//!
//! A trap of frequency `ω` acts on the reference-oscillator quadratures as
//! `x(t) = x cos ωt + p sin(ωt)/ω`. Two representations of the propagator are
//! provided:
//!
//! * [`propagator_block`]: the exact matrix elements `⟨m|U|n⟩`, obtained from
//!   the Gaussian (squeeze-and-rotate) form of `U` by a two-term recurrence.
//!   No Hamiltonian truncation is involved.
//! * [`EvolutionCache`]: eigendecomposition of the pentadiagonal `H` on a
//!   padded truncation, returning the leading block of `V e^{−iEt} V†`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{BasisSpec, FockError, FockOperator, ModeCount};
use crate::linalg;
use crate::units::Unit;

/// Largest propagator block the recurrence is trusted for.
pub const MAX_PROPAGATOR_DIM: usize = 320;
/// Largest padded truncation handled by [`EvolutionCache`].
pub const MAX_PADDED_DIM: usize = 4096;
/// Slack allowed on `|U_mn| ≤ 1` before the recurrence is declared unstable.
const MODULUS_GUARD: f64 = 1e-9;
/// Amplitude below which the padded truncation is considered exact.
const PADDING_TAIL: f64 = 1e-18;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical accuracy: {0}")]
    Accuracy(String),
    #[error(transparent)]
    Fock(#[from] FockError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

/// Trap frequency chosen by each party for each input bit, in units of `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicStrategy {
    pub alice: [f64; 2],
    pub bob: [f64; 2],
}

impl Default for HarmonicStrategy {
    /// `4Ω` for input 0 and `Ω` for input 1, on both sides.
    fn default() -> Self {
        Self {
            alice: [4.0, 1.0],
            bob: [4.0, 1.0],
        }
    }
}

impl HarmonicStrategy {
    pub fn omega(&self, party: Party, input: usize) -> f64 {
        match party {
            Party::A => self.alice[input],
            Party::B => self.bob[input],
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        for &w in self.alice.iter().chain(&self.bob) {
            check_frequency(w)?;
        }
        Ok(())
    }
}

fn check_frequency(omega: f64) -> Result<(), DynamicsError> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(DynamicsError::InvalidParameter(format!(
            "frequency must be positive and finite, got {omega}"
        )));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<(), DynamicsError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(DynamicsError::InvalidParameter(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

/// Pentadiagonal `H = ¼[ω²(a+a†)² − (a†−a)²]` on `dim` levels.
pub fn hamiltonian_real(omega: f64, dim: usize) -> DMatrix<f64> {
    let w2 = omega * omega;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for n in 0..dim {
        h[(n, n)] = (w2 + 1.0) * (2 * n + 1) as f64 / 4.0;
        if n + 2 < dim {
            let v = (w2 - 1.0) * (((n + 1) * (n + 2)) as f64).sqrt() / 4.0;
            h[(n, n + 2)] = v;
            h[(n + 2, n)] = v;
        }
    }
    h
}

/// Hamiltonian of a trap with frequency `omega` (units of `Ω`), in units of
/// `ħΩ`. `omega = 0` is accepted and gives the free kinetic term.
pub fn hamiltonian_matrix(omega: f64, basis: &BasisSpec) -> Result<FockOperator, DynamicsError> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(DynamicsError::InvalidParameter(format!(
            "frequency must be non-negative and finite, got {omega}"
        )));
    }
    if basis.modes != ModeCount::One {
        return Err(FockError::InvalidBasis("hamiltonian needs a single-mode basis".into()).into());
    }
    basis.validate()?;
    Ok(FockOperator::from_real(
        &hamiltonian_real(omega, basis.n_big),
        Unit::Energy,
        ModeCount::One,
    ))
}

/// `U†xU = λ·(x cos θ + p sin θ)` for a trap of frequency `ω` after time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRotation {
    pub scale: f64,
    pub angle: f64,
}

pub fn quadrature_rotation(omega: f64, t: f64) -> QuadratureRotation {
    let (s, c) = (omega * t).sin_cos();
    let s = s / omega;
    QuadratureRotation {
        scale: c.hypot(s),
        angle: s.atan2(c),
    }
}

/// Exact `⟨m|e^{−iHt}|n⟩` for `m, n < dim`.
///
/// With `U†aU = αa + βa†` the vacuum amplitude is `e^{−iθ/2}/√|α|`, where `θ`
/// is the continuous phase of `α*`, and the remaining elements follow from
/// `a U = U(αa + βa†)` one row at a time. `U` is symmetric, so only the
/// lower triangle is generated.
pub fn propagator_block(omega: f64, t: f64, dim: usize) -> Result<DMatrix<Complex64>, DynamicsError> {
    check_frequency(omega)?;
    check_time(t)?;
    if dim == 0 {
        return Err(FockError::InvalidBasis("dimension must be at least 1".into()).into());
    }
    if dim > MAX_PROPAGATOR_DIM {
        return Err(DynamicsError::Accuracy(format!(
            "propagator dimension {dim} above the stable limit {MAX_PROPAGATOR_DIM}"
        )));
    }
    let (s, c) = (omega * t).sin_cos();
    let kappa = 0.5 * (omega + 1.0 / omega);
    let alpha = Complex64::new(c, -kappa * s);
    let beta = Complex64::new(0.0, -0.5 * (omega - 1.0 / omega) * s);
    let phi = omega * t;
    let k = (phi / PI).round();
    let theta = k * PI + (kappa * (phi - k * PI).tan()).atan();
    let alpha_c = alpha.conj();
    let ratio = beta / alpha_c;
    let inv = alpha_c.inv();

    let mut u = DMatrix::<Complex64>::zeros(dim, dim);
    u[(0, 0)] = Complex64::from_polar(1.0 / alpha.norm().sqrt(), -0.5 * theta);
    let sq: Vec<f64> = (0..=dim).map(|n| (n as f64).sqrt()).collect();
    for j in 0..dim {
        for m in 0..j {
            u[(m, j)] = u[(j, m)];
        }
        for m in j.saturating_sub(1)..dim - 1 {
            let mut v = Complex64::new(0.0, 0.0);
            if m > 0 {
                v += ratio * sq[m] * u[(m - 1, j)];
            }
            if j > 0 {
                v += sq[j] * u[(m, j - 1)] * inv;
            }
            u[(m + 1, j)] = v / sq[m + 1];
        }
    }
    if let Some(bad) = u.iter().find(|z| !(z.norm() <= 1.0 + MODULUS_GUARD)) {
        return Err(DynamicsError::Accuracy(format!(
            "propagator recurrence lost stability (|U| = {}) at ω = {omega}, t = {t}, dim = {dim}",
            bad.norm()
        )));
    }
    Ok(u)
}

/// Leading block of `e^{−iHt}` for a trap of frequency `omega`.
pub fn evolution_operator(omega: f64, t: f64, basis: &BasisSpec) -> Result<FockOperator, DynamicsError> {
    if basis.modes != ModeCount::One {
        return Err(FockError::InvalidBasis("evolution needs a single-mode basis".into()).into());
    }
    basis.validate()?;
    let u = propagator_block(omega, t, basis.n_big)?;
    Ok(FockOperator::new(u, Unit::Dimensionless, ModeCount::One))
}

/// Number of levels kept for accuracy assertions: the top quarter of a
/// truncated basis is treated as edge.
pub fn inner_block(dim: usize) -> usize {
    dim - dim / 4
}

/// Eigendecomposition of `H(ω)` on a truncation padded far enough that the
/// leading `dim` levels evolve as in the untruncated oscillator.
///
/// `|m⟩` spreads over trap eigenstates up to roughly `m·ρ²` with
/// `ρ = max(ω, 1/ω)`, followed by a geometric tail with ratio
/// `|ω−1|/(ω+1)`; the padding covers both.
#[derive(Debug, Clone)]
pub struct EvolutionCache {
    frequency: f64,
    dim: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl EvolutionCache {
    pub fn new(omega: f64, dim: usize) -> Result<Self, DynamicsError> {
        check_frequency(omega)?;
        let padded = padded_dimension(omega, dim);
        if padded > MAX_PADDED_DIM {
            return Err(DynamicsError::Accuracy(format!(
                "padded dimension {padded} for ω = {omega} exceeds {MAX_PADDED_DIM}"
            )));
        }
        Ok(Self::with_truncation(omega, dim, padded))
    }

    /// Cache on the bare `dim`-level truncation, without padding. The block
    /// is then exactly unitary but only approximates the oscillator.
    pub fn truncated(omega: f64, dim: usize) -> Result<Self, DynamicsError> {
        check_frequency(omega)?;
        Ok(Self::with_truncation(omega, dim, dim))
    }

    fn with_truncation(omega: f64, dim: usize, padded: usize) -> Self {
        // H only couples levels of equal parity
        let h = hamiltonian_real(omega, padded);
        let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(padded);
        for parity in 0..2 {
            let idx: Vec<usize> = (parity..padded).step_by(2).collect();
            if idx.is_empty() {
                continue;
            }
            let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])]);
            let (vals, vecs) = linalg::symmetric_eigh(&block);
            for (k, &e) in vals.iter().enumerate() {
                let mut v = vec![0.0; padded];
                for (r, &i) in idx.iter().enumerate() {
                    v[i] = vecs[(r, k)];
                }
                pairs.push((e, v));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let eigenvalues = pairs.iter().map(|p| p.0).collect();
        let eigenvectors = DMatrix::from_fn(padded, padded, |r, c| pairs[c].1[r]);
        Self {
            frequency: omega,
            dim,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn padded_dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending eigenvalues of the padded Hamiltonian.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Largest entrywise deviation of `V diag(E) Vᵀ` from the pentadiagonal
    /// Hamiltonian.
    pub fn reconstruction_error(&self) -> f64 {
        let n = self.padded_dim();
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(n, n, |r, c| v[(r, c)] * self.eigenvalues[c]);
        let rebuilt = scaled * v.transpose();
        (rebuilt - hamiltonian_real(self.frequency, n)).amax()
    }

    /// Leading `dim × dim` block of `e^{−iHt}`.
    pub fn evolution(&self, t: f64) -> Result<DMatrix<Complex64>, DynamicsError> {
        check_time(t)?;
        let v = self.eigenvectors.rows(0, self.dim);
        let phases: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * t))
            .collect();
        let vp = DMatrix::from_fn(self.dim, phases.len(), |r, c| phases[c] * v[(r, c)]);
        Ok(vp * linalg::to_complex(&v.transpose()))
    }
}

fn padded_dimension(omega: f64, dim: usize) -> usize {
    let rho = omega.max(1.0 / omega);
    let tanh_r = (omega - 1.0).abs() / (omega + 1.0);
    let margin = if tanh_r < 1e-15 {
        0
    } else {
        (2.0 * PADDING_TAIL.ln() / tanh_r.ln()).ceil() as usize
    };
    (dim as f64 * rho * rho).ceil() as usize + 2 * margin
}

/// `(U_A ⊗ U_B)† D (U_A ⊗ U_B)` for a two-mode `D` on `n²` states.
pub fn conjugate_two_mode(
    d: &DMatrix<Complex64>,
    ua: &DMatrix<Complex64>,
    ub: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let n = ua.nrows();
    let dim = n * n;
    let ua_t = ua.transpose();
    let ua_h = ua.adjoint();
    let ub_c = ub.conjugate();
    // rows of D·K, with K = U_A ⊗ U_B acting on the column pair (m, n)
    let dk: Vec<DMatrix<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|r| {
            let row = DMatrix::from_fn(n, n, |m, k| d[(r, m * n + k)]);
            &ua_t * row * ub
        })
        .collect();
    // columns of K†·(D·K)
    let cols: Vec<DMatrix<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|c| {
            let (m, k) = (c / n, c % n);
            let col = DMatrix::from_fn(n, n, |i, j| dk[i * n + j][(m, k)]);
            &ua_h * col * &ub_c
        })
        .collect();
    let mut out = DMatrix::from_fn(dim, dim, |r, c| cols[c][(r / n, r % n)]);
    linalg::symmetrize(&mut out);
    out
}

/// `d̂_ab(t)`: the two-mode operator `d` in the Heisenberg picture for inputs
/// `(a, b)`, on the truncation of `d` itself.
pub fn heisenberg_observable(
    d: &FockOperator,
    a: usize,
    b: usize,
    t: f64,
    strategy: &HarmonicStrategy,
) -> Result<FockOperator, DynamicsError> {
    if d.modes() != ModeCount::Two {
        return Err(DynamicsError::Dimension("observable must be two-mode".into()));
    }
    if a > 1 || b > 1 {
        return Err(DynamicsError::InvalidParameter(format!("inputs must be bits, got ({a}, {b})")));
    }
    strategy.validate()?;
    let n = d.mode_dim();
    let ua = propagator_block(strategy.omega(Party::A, a), t, n)?;
    let ub = propagator_block(strategy.omega(Party::B, b), t, n)?;
    Ok(FockOperator::new(
        conjugate_two_mode(d.matrix(), &ua, &ub),
        d.unit(),
        ModeCount::Two,
    ))
}

/// Quarter-period resonant evolution `diag((−i)^n)`.
///
/// The global factor `e^{−iπ/4}` of `e^{−i(π/2)(N+1/2)}` is dropped; it
/// cancels in every conjugation.
pub fn fourier_operator(basis: &BasisSpec) -> Result<FockOperator, DynamicsError> {
    if basis.modes != ModeCount::One {
        return Err(FockError::InvalidBasis("fourier operator needs a single-mode basis".into()).into());
    }
    basis.validate()?;
    let n = basis.n_big;
    let mut f = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        f[(k, k)] = match k % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
    }
    Ok(FockOperator::new(f, Unit::Dimensionless, ModeCount::One))
}
