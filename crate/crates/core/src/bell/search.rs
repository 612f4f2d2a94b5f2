use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bell_operator, BellError, TwoModeState, WorkingSpace};
use crate::dynamics::HarmonicStrategy;
use crate::fock::BasisSpec;
use crate::linalg;

/// Largest allowed shift of `ξ₋` when the working truncation is doubled.
pub const CONVERGENCE_TOL: f64 = 1e-3;
/// Eigenvalue gap below which the minimum counts as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;
const TIE_BREAK_SEED: u64 = 0x7e1e_b4ea;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Also build the operator in the `n_big` and `2·n_big` working spaces and
    /// report the minimum eigenvalue of each.
    pub convergence_check: bool,
    pub convergence_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            convergence_check: true,
            convergence_tol: CONVERGENCE_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSearchResult {
    pub target_time: f64,
    /// `ξ₋` in units of `(ħ/MΩ)^{1/2}`.
    pub min_eigenvalue: f64,
    pub state: TwoModeState,
    /// Second-smallest eigenvalue minus `ξ₋`.
    pub spectral_gap: f64,
    /// `ξ₋` of the operator built in each working truncation.
    pub convergence_report: BTreeMap<usize, f64>,
    pub violation: bool,
    pub degenerate: bool,
}

/// Minimum eigenpair of the compressed Bell operator at time `target_time`.
///
/// When the smallest eigenvalue is degenerate, the returned vector is the
/// lowest eigenvector of a fixed-seed Hermitian perturbation restricted to the
/// degenerate eigenspace.
pub fn find_violating_state(
    target_time: f64,
    strategy: &HarmonicStrategy,
    basis: &BasisSpec,
    options: &SearchOptions,
) -> Result<EigenSearchResult, BellError> {
    let op = bell_operator(target_time, strategy, basis)?;
    let (values, vectors) = linalg::hermitian_eigh(op.matrix());
    let xi = values[0];
    let spectral_gap = values.get(1).map_or(f64::INFINITY, |v| v - xi);
    let multiplicity = values.iter().take_while(|&&v| v - xi < DEGENERACY_GAP).count();
    let degenerate = multiplicity > 1;
    let vector: Vec<Complex64> = if degenerate {
        tie_break(&vectors.columns(0, multiplicity).into_owned())
    } else {
        vectors.column(0).iter().copied().collect()
    };
    let state = TwoModeState::new(basis.n_sub, vector)?;

    let mut convergence_report = BTreeMap::new();
    if options.convergence_check {
        for n_big in [basis.n_big, 2 * basis.n_big] {
            let ws = WorkingSpace::new(basis.n_sub, n_big)?;
            let s = ws.bell_operator(target_time, strategy)?;
            convergence_report.insert(n_big, linalg::hermitian_eigh(&s).0[0]);
        }
        let small = convergence_report[&basis.n_big];
        let large = convergence_report[&(2 * basis.n_big)];
        if (large - small).abs() > options.convergence_tol {
            return Err(BellError::Truncation {
                n_big: basis.n_big,
                small,
                large,
            });
        }
    }

    Ok(EigenSearchResult {
        target_time,
        min_eigenvalue: xi,
        state,
        spectral_gap,
        convergence_report,
        violation: xi < 0.0,
        degenerate,
    })
}

fn tie_break(space: &DMatrix<Complex64>) -> Vec<Complex64> {
    let g = space.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(TIE_BREAK_SEED);
    let mut p = DMatrix::<Complex64>::zeros(g, g);
    for i in 0..g {
        p[(i, i)] = Complex64::new(rng.random::<f64>() - 0.5, 0.0);
        for j in i + 1..g {
            let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            p[(i, j)] = z;
            p[(j, i)] = z.conj();
        }
    }
    let (_, y) = linalg::hermitian_eigh(&p);
    (space * y.column(0)).iter().copied().collect()
}
