use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{BellError, BellKernel, TwoModeState};
use crate::dynamics::HarmonicStrategy;
use crate::fock::{BasisSpec, ModeCount};
use crate::linalg;

/// Most negative Bell parameter a separable state may show through roundoff.
pub const SEPARABLE_TOL: f64 = 1e-9;
/// Schmidt coefficients at or below this count as zero.
const SCHMIDT_TOL: f64 = 1e-8;

/// A separable state (one or more weighted product components) with a
/// negative Bell parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub time: f64,
    pub value: f64,
    pub components: Vec<(f64, Vec<Complex64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableReport {
    pub min_value: f64,
    pub min_time: f64,
    pub product_states: usize,
    pub mixtures: usize,
    pub grid_points: usize,
}

/// Rejects states with Schmidt rank above one.
pub fn require_separable(state: &TwoModeState) -> Result<(), BellError> {
    let rank = state.schmidt_rank(SCHMIDT_TOL);
    if rank > 1 {
        return Err(BellError::EntangledInput(rank));
    }
    Ok(())
}

fn haar_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn check_grid(t_grid: &[f64]) -> Result<(), BellError> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(BellError::InvalidParameter("time grid must be non-empty, finite and non-negative".into()));
    }
    Ok(())
}

/// Bell parameter of every state at every grid time, `[state][time]`.
fn parameter_table(states: &[TwoModeState], strategy: &HarmonicStrategy, t_grid: &[f64]) -> Result<Vec<Vec<f64>>, BellError> {
    let kernel = BellKernel::new(states[0].n_sub())?;
    let ops: Vec<DMatrix<Complex64>> = t_grid.par_iter().map(|&t| kernel.bell_operator(t, strategy)).collect();
    Ok(states
        .par_iter()
        .map(|s| ops.iter().map(|op| linalg::expectation(op, s.amplitudes()).re).collect())
        .collect())
}

fn lowest(table: &[Vec<f64>], t_grid: &[f64]) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::INFINITY);
    for (i, row) in table.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            if v < best.2 {
                best = (i, k, v);
            }
        }
    }
    debug_assert!(best.1 < t_grid.len());
    best
}

/// Bell parameter of the given product states over `t_grid`; entangled
/// inputs are rejected.
pub fn evaluate_separable_states(
    states: &[TwoModeState],
    strategy: &HarmonicStrategy,
    t_grid: &[f64],
) -> Result<SeparableReport, BellError> {
    strategy.validate()?;
    check_grid(t_grid)?;
    if states.is_empty() {
        return Err(BellError::InvalidParameter("no states given".into()));
    }
    if states.iter().any(|s| s.n_sub() != states[0].n_sub()) {
        return Err(BellError::Dimension("states of different n_sub".into()));
    }
    for s in states {
        require_separable(s)?;
    }
    let table = parameter_table(states, strategy, t_grid)?;
    let (i, k, v) = lowest(&table, t_grid);
    if v < -SEPARABLE_TOL {
        return Err(BellError::Counterexample(Box::new(Counterexample {
            time: t_grid[k],
            value: v,
            components: vec![(1.0, states[i].amplitudes().to_vec())],
        })));
    }
    Ok(SeparableReport {
        min_value: v,
        min_time: t_grid[k],
        product_states: states.len(),
        mixtures: 0,
        grid_points: t_grid.len(),
    })
}

/// Samples `n_states` random product states and as many random mixtures of
/// them, and checks the Bell parameter stays non-negative on `t_grid`.
///
/// A mixture's parameter is the weighted mean of its components', so
/// mixtures are evaluated from the product-state table.
pub fn separable_positivity_check(
    n_states: usize,
    seed: u64,
    strategy: &HarmonicStrategy,
    basis: &BasisSpec,
    t_grid: &[f64],
) -> Result<SeparableReport, BellError> {
    if n_states == 0 {
        return Err(BellError::InvalidParameter("n_states must be at least 1".into()));
    }
    if basis.modes != ModeCount::Two {
        return Err(BellError::Dimension("separable check needs a two-mode basis".into()));
    }
    basis.validate()?;
    strategy.validate()?;
    check_grid(t_grid)?;
    let n = basis.n_sub;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<TwoModeState> = (0..n_states)
        .map(|_| {
            let phi = haar_vector(&mut rng, n);
            let chi = haar_vector(&mut rng, n);
            TwoModeState::product(&phi, &chi)
        })
        .collect::<Result<_, _>>()?;
    let table = parameter_table(&states, strategy, t_grid)?;

    let mixtures: Vec<Vec<(f64, usize)>> = (0..n_states)
        .map(|_| {
            let parts = rng.random_range(2..=4);
            let raw: Vec<(f64, usize)> = (0..parts)
                .map(|_| (-rng.random::<f64>().max(f64::MIN_POSITIVE).ln(), rng.random_range(0..n_states)))
                .collect();
            let total: f64 = raw.iter().map(|p| p.0).sum();
            raw.into_iter().map(|(w, i)| (w / total, i)).collect()
        })
        .collect();
    let mixed: Vec<Vec<f64>> = mixtures
        .iter()
        .map(|mix| {
            (0..t_grid.len())
                .map(|k| mix.iter().map(|&(w, i)| w * table[i][k]).sum())
                .collect()
        })
        .collect();

    let (pi, pk, pv) = lowest(&table, t_grid);
    let (mi, mk, mv) = lowest(&mixed, t_grid);
    let (value, time, components) = if pv <= mv {
        (pv, t_grid[pk], vec![(1.0, states[pi].amplitudes().to_vec())])
    } else {
        let comps = mixtures[mi]
            .iter()
            .map(|&(w, i)| (w, states[i].amplitudes().to_vec()))
            .collect();
        (mv, t_grid[mk], comps)
    };
    if value < -SEPARABLE_TOL {
        return Err(BellError::Counterexample(Box::new(Counterexample { time, value, components })));
    }
    Ok(SeparableReport {
        min_value: value,
        min_time: time,
        product_states: n_states,
        mixtures: mixtures.len(),
        grid_points: t_grid.len(),
    })
}
