//! Operators in the truncated Fock basis of the reference oscillator.
//!
//! Single-mode operators live on `|0⟩ … |dim−1⟩`. Two-mode operators use the
//! product basis `|m⟩_A|n⟩_B` with row index `m·dim + n`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::beamsplitter::BeamsplitterTransform;
use crate::linalg;
use crate::quadrature::{gauss_hermite, gauss_laguerre, hermite_functions, MAX_LAGUERRE_NODES};
use crate::units::Unit;

/// Entrywise agreement required between the beamsplitter and 2D-quadrature
/// constructions of `|x − y|`.
pub const CROSS_CHECK_TOL: f64 = 1e-9;
/// Largest relative change allowed when the `|q|` quadrature is refined.
pub const QUADRATURE_REFINE_TOL: f64 = 1e-12;
/// Working dimensions up to this size are cross-checked on every entry.
pub const FULL_CROSS_CHECK_MAX: usize = 32;
/// Entries sampled for the cross-check above [`FULL_CROSS_CHECK_MAX`].
pub const SAMPLED_CROSS_CHECK_ENTRIES: usize = 200;
const CROSS_CHECK_SEED: u64 = 0x5eed_ab5d;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("quadrature did not converge: {0}")]
    NumericalAccuracy(String),
    #[error(
        "|x-y| construction disagreement at ({row}, {col}): beamsplitter {beamsplitter}, \
         quadrature {quadrature}"
    )]
    CrossValidation {
        row: usize,
        col: usize,
        beamsplitter: f64,
        quadrature: f64,
    },
    #[error("dense two-mode operator needs {needed} bytes, budget is {budget}")]
    MemoryBudget { needed: usize, budget: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeCount {
    One,
    Two,
}

/// Truncation of the Fock space.
///
/// `n_sub` is the physical ansatz dimension per mode, `n_big` the working
/// truncation per mode used when operators are built before compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub n_sub: usize,
    pub n_big: usize,
    pub modes: ModeCount,
    pub memory_budget_bytes: usize,
}

pub const DEFAULT_N_SUB: usize = 9;
pub const DEFAULT_N_BIG: usize = 64;
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

impl BasisSpec {
    /// Single-mode basis with `dim` levels.
    pub fn single(dim: usize) -> Self {
        Self {
            n_sub: dim,
            n_big: dim,
            modes: ModeCount::One,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
        }
    }

    pub fn two_mode(n_sub: usize, n_big: usize) -> Self {
        Self {
            n_sub,
            n_big,
            modes: ModeCount::Two,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
        }
    }

    /// Single-mode view of the working truncation.
    pub fn working_mode(&self) -> Self {
        Self::single(self.n_big)
    }

    pub fn validate(&self) -> Result<(), FockError> {
        if self.n_sub < 1 {
            return Err(FockError::InvalidBasis("n_sub must be at least 1".into()));
        }
        if self.n_sub > self.n_big {
            return Err(FockError::InvalidBasis(format!(
                "n_sub = {} exceeds n_big = {}",
                self.n_sub, self.n_big
            )));
        }
        Ok(())
    }

    fn expect_modes(&self, modes: ModeCount) -> Result<(), FockError> {
        self.validate()?;
        if self.modes != modes {
            return Err(FockError::InvalidBasis(format!(
                "expected a {modes:?}-mode basis, got {:?}",
                self.modes
            )));
        }
        Ok(())
    }

    /// Bytes needed to hold a dense complex operator on `n_big²` states.
    pub fn dense_two_mode_bytes(&self) -> usize {
        self.n_big.pow(4).saturating_mul(std::mem::size_of::<Complex64>())
    }
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self::two_mode(DEFAULT_N_SUB, DEFAULT_N_BIG)
    }
}

/// Dense operator on a single- or two-mode Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    matrix: DMatrix<Complex64>,
    unit: Unit,
    modes: ModeCount,
    mode_dim: usize,
}

impl FockOperator {
    pub fn new(matrix: DMatrix<Complex64>, unit: Unit, modes: ModeCount) -> Self {
        assert!(matrix.is_square(), "operator matrix must be square");
        let dim = matrix.nrows();
        let mode_dim = match modes {
            ModeCount::One => dim,
            ModeCount::Two => {
                let d = (dim as f64).sqrt().round() as usize;
                assert_eq!(d * d, dim, "two-mode dimension must be a square");
                d
            }
        };
        Self {
            matrix,
            unit,
            modes,
            mode_dim,
        }
    }

    pub fn from_real(matrix: &DMatrix<f64>, unit: Unit, modes: ModeCount) -> Self {
        Self::new(linalg::to_complex(matrix), unit, modes)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Levels per mode.
    pub fn mode_dim(&self) -> usize {
        self.mode_dim
    }

    pub fn modes(&self) -> ModeCount {
        self.modes
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// Two-mode element `⟨m' n'| O |m n⟩`.
    pub fn pair_entry(&self, bra: (usize, usize), ket: (usize, usize)) -> Complex64 {
        let d = self.mode_dim;
        self.matrix[(bra.0 * d + bra.1, ket.0 * d + ket.1)]
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.matrix)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigh(&self.matrix).0
    }

    /// `P O P` with `P` the projector onto the first `n_sub` levels of each
    /// mode.
    pub fn compress(&self, n_sub: usize) -> FockOperator {
        assert!(n_sub <= self.mode_dim);
        let d = self.mode_dim;
        let m = match self.modes {
            ModeCount::One => self.matrix.view((0, 0), (n_sub, n_sub)).into_owned(),
            ModeCount::Two => DMatrix::from_fn(n_sub * n_sub, n_sub * n_sub, |r, c| {
                let (m1, n1) = (r / n_sub, r % n_sub);
                let (m2, n2) = (c / n_sub, c % n_sub);
                self.matrix[(m1 * d + n1, m2 * d + n2)]
            }),
        };
        FockOperator::new(m, self.unit, self.modes)
    }
}

/// `x̂ = (a + a†)/√2`.
pub fn position_operator(basis: &BasisSpec) -> Result<FockOperator, FockError> {
    basis.expect_modes(ModeCount::One)?;
    let n = basis.n_big;
    let m = DMatrix::from_fn(n, n, |r, c| {
        if r + 1 == c {
            Complex64::new((c as f64 / 2.0).sqrt(), 0.0)
        } else if c + 1 == r {
            Complex64::new((r as f64 / 2.0).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(FockOperator::new(m, Unit::Length, ModeCount::One))
}

/// `p̂ = i(a† − a)/√2`.
pub fn momentum_operator(basis: &BasisSpec) -> Result<FockOperator, FockError> {
    basis.expect_modes(ModeCount::One)?;
    let n = basis.n_big;
    let m = DMatrix::from_fn(n, n, |r, c| {
        if c + 1 == r {
            Complex64::new(0.0, (r as f64 / 2.0).sqrt())
        } else if r + 1 == c {
            Complex64::new(0.0, -(c as f64 / 2.0).sqrt())
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(FockOperator::new(m, Unit::Dimensionless, ModeCount::One))
}

pub fn number_operator(basis: &BasisSpec) -> Result<FockOperator, FockError> {
    basis.expect_modes(ModeCount::One)?;
    let n = basis.n_big;
    let m = DMatrix::from_fn(n, n, |r, c| {
        Complex64::new(if r == c { r as f64 } else { 0.0 }, 0.0)
    });
    Ok(FockOperator::new(m, Unit::Dimensionless, ModeCount::One))
}

/// `|q̂|` on a single mode.
pub fn abs_position_operator(basis: &BasisSpec) -> Result<FockOperator, FockError> {
    basis.expect_modes(ModeCount::One)?;
    let q = abs_position_matrix(basis.n_big)?;
    Ok(FockOperator::from_real(&q, Unit::Length, ModeCount::One))
}

/// Real matrix `⟨m| |q| |n⟩` for `m, n < dim`.
///
/// With `s = q²` the element is `∫₀^∞ ψ_m(√s) ψ_n(√s) ds`, a polynomial of
/// degree `(m+n)/2` in `s` against `e^{−s}` whenever `m + n` is even (odd
/// combinations vanish by parity). A Gauss–Laguerre rule is therefore exact
/// once large enough; the rule is evaluated at two sizes and the results must
/// agree to [`QUADRATURE_REFINE_TOL`].
pub fn abs_position_matrix(dim: usize) -> Result<DMatrix<f64>, FockError> {
    if dim == 0 {
        return Err(FockError::InvalidBasis("dimension must be at least 1".into()));
    }
    let coarse = dim / 2 + 4;
    let fine = 2 * coarse;
    if fine > MAX_LAGUERRE_NODES {
        return Err(FockError::NumericalAccuracy(format!(
            "|q| table of dimension {dim} needs a {fine}-node rule (limit {MAX_LAGUERRE_NODES})"
        )));
    }
    let a = abs_position_with_rule(dim, coarse);
    let b = abs_position_with_rule(dim, fine);
    for r in 0..dim {
        for c in 0..dim {
            let (x, y) = (a[(r, c)], b[(r, c)]);
            if (x - y).abs() > QUADRATURE_REFINE_TOL * y.abs().max(1.0) {
                return Err(FockError::NumericalAccuracy(format!(
                    "entry ({r}, {c}) moved from {x} to {y} on refinement"
                )));
            }
        }
    }
    Ok(b)
}

fn abs_position_with_rule(dim: usize, nodes: usize) -> DMatrix<f64> {
    let rule = gauss_laguerre(nodes);
    let table: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&s| hermite_functions(s.sqrt(), dim))
        .collect();
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    for r in 0..dim {
        for c in (r..dim).step_by(2) {
            let v: f64 = table
                .iter()
                .zip(&rule.scaled_weights)
                .map(|(psi, w)| w * psi[r] * psi[c])
                .sum();
            q[(r, c)] = v;
            q[(c, r)] = v;
        }
    }
    q
}

/// `d̂ = |x̂ − ŷ|` on the `n_big²` two-mode working space.
///
/// The returned matrix comes from the balanced-beamsplitter reduction
/// `|x − y| = √2·|x_r|` with `x_r` the relative-mode quadrature; it is checked
/// against direct 2D quadrature of Hermite-function products, on every entry
/// up to [`FULL_CROSS_CHECK_MAX`] and on a fixed sample of entries above.
pub fn two_mode_abs_difference(basis: &BasisSpec) -> Result<FockOperator, FockError> {
    basis.expect_modes(ModeCount::Two)?;
    let needed = basis.dense_two_mode_bytes();
    if needed > basis.memory_budget_bytes {
        return Err(FockError::MemoryBudget {
            needed,
            budget: basis.memory_budget_bytes,
        });
    }
    let n = basis.n_big;
    let d = abs_difference_beamsplitter(n)?;
    let dim = n * n;
    if n <= FULL_CROSS_CHECK_MAX {
        let oracle = abs_difference_quadrature_full(n);
        for r in 0..dim {
            for c in 0..dim {
                check_entry(r, c, d[(r, c)], oracle[(r, c)])?;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(CROSS_CHECK_SEED);
        let entries: Vec<(usize, usize)> = (0..SAMPLED_CROSS_CHECK_ENTRIES)
            .map(|_| (rng.random_range(0..dim), rng.random_range(0..dim)))
            .collect();
        let oracle = abs_difference_quadrature_entries(n, &entries);
        for (&(r, c), &o) in entries.iter().zip(&oracle) {
            check_entry(r, c, d[(r, c)], o)?;
        }
    }
    Ok(FockOperator::from_real(&d, Unit::Length, ModeCount::Two))
}

fn check_entry(row: usize, col: usize, beamsplitter: f64, quadrature: f64) -> Result<(), FockError> {
    if (beamsplitter - quadrature).abs() > CROSS_CHECK_TOL {
        return Err(FockError::CrossValidation {
            row,
            col,
            beamsplitter,
            quadrature,
        });
    }
    Ok(())
}

/// Beamsplitter route for `|x − y|` on `n²` states, as a real matrix.
pub fn abs_difference_beamsplitter(n: usize) -> Result<DMatrix<f64>, FockError> {
    if n == 0 {
        return Err(FockError::InvalidBasis("dimension must be at least 1".into()));
    }
    let bs = BeamsplitterTransform::new(std::f64::consts::FRAC_PI_4, n);
    let q = abs_position_matrix(2 * n - 1)?;
    let dim = n * n;
    let rows: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|r| {
            let (m1, n1) = (r / n, r % n);
            let v1 = bs.coeffs(m1, n1);
            let total1 = m1 + n1;
            (0..dim)
                .map(|c| {
                    let (m2, n2) = (c / n, c % n);
                    let total2 = m2 + n2;
                    if (total1 + total2) % 2 == 1 {
                        return 0.0;
                    }
                    let v2 = bs.coeffs(m2, n2);
                    let mut acc = 0.0;
                    for k in 0..=total1.min(total2) {
                        let (j1, j2) = (total1 - k, total2 - k);
                        acc += v1[j1] * q[(j1, j2)] * v2[j2];
                    }
                    std::f64::consts::SQRT_2 * acc
                })
                .collect()
        })
        .collect();
    let mut d = DMatrix::<f64>::zeros(dim, dim);
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            d[(r, c)] = v;
        }
    }
    // exact symmetry; the two triangles only differ by roundoff
    d = (&d + d.transpose()) * 0.5;
    Ok(d)
}

/// Quadrature grid for `∫∫ |x−y| F(x,y)` in the rotated frame
/// `u = (x−y)/√2`, `v = (x+y)/√2`, with `s = u²` folded onto `[0, ∞)`.
struct PlaneRule {
    xs: Vec<f64>,
    ys: Vec<f64>,
    weights: Vec<f64>,
}

impl PlaneRule {
    /// Exact for Hermite-function products of total degree below `4n`.
    fn for_dim(n: usize) -> Self {
        let hermite = gauss_hermite(2 * n + 3);
        let laguerre = gauss_laguerre(n + 4);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut weights = Vec::new();
        for (&s, &wl) in laguerre.nodes.iter().zip(&laguerre.scaled_weights) {
            let u_abs = s.sqrt();
            for (&v, &wh) in hermite.nodes.iter().zip(&hermite.scaled_weights) {
                for u in [u_abs, -u_abs] {
                    xs.push((v + u) * std::f64::consts::FRAC_1_SQRT_2);
                    ys.push((v - u) * std::f64::consts::FRAC_1_SQRT_2);
                    weights.push(wl * wh * std::f64::consts::FRAC_1_SQRT_2);
                }
            }
        }
        Self { xs, ys, weights }
    }
}

/// Direct 2D-quadrature route for every entry of `|x − y|` on `n²` states.
pub fn abs_difference_quadrature_full(n: usize) -> DMatrix<f64> {
    let rule = PlaneRule::for_dim(n);
    let points = rule.weights.len();
    let pairs = n * n;
    // a[p, m'·n + m] = w_p ψ_m'(x_p) ψ_m(x_p);  b[p, n'·n + n] = ψ_n'(y_p) ψ_n(y_p)
    let mut a = DMatrix::<f64>::zeros(points, pairs);
    let mut b = DMatrix::<f64>::zeros(points, pairs);
    for p in 0..points {
        let px = hermite_functions(rule.xs[p], n);
        let py = hermite_functions(rule.ys[p], n);
        for i in 0..n {
            for j in 0..n {
                a[(p, i * n + j)] = rule.weights[p] * px[i] * px[j];
                b[(p, i * n + j)] = py[i] * py[j];
            }
        }
    }
    let e = a.transpose() * b;
    let dim = n * n;
    DMatrix::from_fn(dim, dim, |r, c| {
        let (m1, n1) = (r / n, r % n);
        let (m2, n2) = (c / n, c % n);
        e[(m1 * n + m2, n1 * n + n2)]
    })
}

/// Direct 2D-quadrature route for selected entries `(row, col)` on `n²`
/// states.
pub fn abs_difference_quadrature_entries(n: usize, entries: &[(usize, usize)]) -> Vec<f64> {
    let rule = PlaneRule::for_dim(n);
    let px: Vec<Vec<f64>> = rule.xs.iter().map(|&x| hermite_functions(x, n)).collect();
    let py: Vec<Vec<f64>> = rule.ys.iter().map(|&y| hermite_functions(y, n)).collect();
    entries
        .par_iter()
        .map(|&(r, c)| {
            let (m1, n1) = (r / n, r % n);
            let (m2, n2) = (c / n, c % n);
            (0..rule.weights.len())
                .map(|p| rule.weights[p] * px[p][m1] * px[p][m2] * py[p][n1] * py[p][n2])
                .sum()
        })
        .collect()
}
