//! Doubly stochastic transition matrices and their Birkhoff–von Neumann
//! splitting into permutations.
//!
//! A permutation `π` is stored as a vector with `P_π[π[c], c] = 1`: it sends
//! site `c` to site `π[c]`, matching the column-to-row convention of a
//! transition matrix `D[to, from]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matching::hopcroft_karp;
use super::HvError;

pub const UNITARITY_TOL: f64 = 1e-12;
/// Row and column sum tolerance accepted by [`birkhoff_decompose`].
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// Entries above this belong to the support graph.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Peeling stops once this much mass is left.
pub const RESIDUAL_MASS_TOL: f64 = 1e-10;
const NEGATIVE_CLAMP: f64 = 1e-12;

/// Opt-in Sinkhorn balancing of `|U|²` for nearly unitary `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornRepair {
    /// Largest `max |U†U − I|` that may be repaired.
    pub threshold: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SinkhornRepair {
    fn default() -> Self {
        Self {
            threshold: 1e-9,
            max_iterations: 10_000,
            tolerance: 1e-14,
        }
    }
}

pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let g = u.adjoint() * u;
    g.iter()
        .enumerate()
        .map(|(k, z)| {
            let (r, c) = (k % g.nrows(), k / g.nrows());
            let target = if r == c { 1.0 } else { 0.0 };
            (z - Complex64::new(target, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

/// `D[j, k] = |U_jk|²`.
///
/// Non-unitary input is rejected unless `repair` is given and the defect is
/// within its threshold, in which case `D` is Sinkhorn balanced.
pub fn doubly_stochastic_from_unitary(u: &DMatrix<Complex64>, repair: Option<&SinkhornRepair>) -> Result<DMatrix<f64>, HvError> {
    if !u.is_square() || u.nrows() == 0 {
        return Err(HvError::InvalidParameter(format!("{}×{} matrix is not square", u.nrows(), u.ncols())));
    }
    let defect = unitarity_defect(u);
    let d = u.map(|z| z.norm_sqr());
    if defect <= UNITARITY_TOL {
        return Ok(d);
    }
    match repair {
        Some(r) if defect <= r.threshold => Ok(sinkhorn(d, r)),
        _ => Err(HvError::NonUnitary(defect)),
    }
}

fn sinkhorn(mut d: DMatrix<f64>, opts: &SinkhornRepair) -> DMatrix<f64> {
    for _ in 0..opts.max_iterations {
        for mut row in d.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        for mut col in d.column_iter_mut() {
            let s = col.sum();
            col /= s;
        }
        if row_sum_defect(&d) < opts.tolerance {
            break;
        }
    }
    d
}

fn row_sum_defect(d: &DMatrix<f64>) -> f64 {
    d.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
}

fn col_sum_defect(d: &DMatrix<f64>) -> f64 {
    d.column_iter().map(|c| (c.sum() - 1.0).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffDecomposition {
    pub size: usize,
    /// `(weight, π)` in extraction order.
    pub terms: Vec<(f64, Vec<usize>)>,
}

impl BirkhoffDecomposition {
    /// `Σ w P_π`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.size, self.size);
        for (w, perm) in &self.terms {
            for (c, &r) in perm.iter().enumerate() {
                d[(r, c)] += w;
            }
        }
        d
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.0).sum()
    }

    pub fn reconstruction_error(&self, d: &DMatrix<f64>) -> f64 {
        (self.reconstruct() - d).amax()
    }

    /// `M² − 2M + 2`, the most terms a decomposition needs.
    pub fn term_bound(&self) -> usize {
        let m = self.size;
        m * m - 2 * m + 2
    }

    /// Terms reordered by decreasing weight. The decomposition is not unique
    /// and the sampler walks terms in stored order, so the order fixes which
    /// permutation a given random number selects.
    pub fn sorted_by_weight(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| b.0.total_cmp(&a.0));
        Self { size: self.size, terms }
    }
}

/// Greedy peeling: take a perfect matching on the support of the residual,
/// subtract its smallest covered entry, repeat until the residual mass drops
/// below [`RESIDUAL_MASS_TOL`]. Surplus terms beyond `M² − 2M + 2` are then
/// removed by Carathéodory reduction.
pub fn birkhoff_decompose(d: &DMatrix<f64>) -> Result<BirkhoffDecomposition, HvError> {
    let m = d.nrows();
    if !d.is_square() || m == 0 {
        return Err(HvError::NotDoublyStochastic(format!("{}×{} matrix is not square", d.nrows(), d.ncols())));
    }
    if let Some(v) = d.iter().find(|v| !(v.is_finite() && **v >= -NEGATIVE_CLAMP)) {
        return Err(HvError::NotDoublyStochastic(format!("entry {v}")));
    }
    let (rows, cols) = (row_sum_defect(d), col_sum_defect(d));
    if rows.max(cols) > STOCHASTIC_TOL {
        return Err(HvError::NotDoublyStochastic(format!(
            "row sums off by {rows:e}, column sums off by {cols:e}"
        )));
    }
    let mut residual = d.map(|v| v.max(0.0));
    let mut terms = Vec::new();
    let mass = |r: &DMatrix<f64>| r.sum() / m as f64;
    while mass(&residual) >= RESIDUAL_MASS_TOL {
        let adj: Vec<Vec<usize>> = (0..m)
            .map(|c| (0..m).filter(|&r| residual[(r, c)] > SUPPORT_THRESHOLD).collect())
            .collect();
        let matching = hopcroft_karp(&adj, m);
        let Some(perm) = matching.into_iter().collect::<Option<Vec<usize>>>() else {
            if terms.is_empty() {
                return Err(HvError::NoPerfectMatching(mass(&residual)));
            }
            // leftover roundoff scattered below a full permutation
            break;
        };
        let w = perm.iter().enumerate().map(|(c, &r)| residual[(r, c)]).fold(f64::INFINITY, f64::min);
        for (c, &r) in perm.iter().enumerate() {
            residual[(r, c)] -= w;
            if residual[(r, c)] <= SUPPORT_THRESHOLD {
                residual[(r, c)] = 0.0;
            }
        }
        terms.push((w, perm));
    }
    let mut dec = BirkhoffDecomposition { size: m, terms };
    reduce_terms(&mut dec);
    let err = dec.reconstruction_error(d);
    if err > RESIDUAL_MASS_TOL + rows.max(cols) {
        return Err(HvError::Reconstruction(err));
    }
    Ok(dec)
}

/// Carathéodory step: while there are more terms than the affine dimension
/// of the Birkhoff polytope allows, find weights `z` with `Σ z P = 0`,
/// `Σ z = 0` and shift along `z` until a term vanishes.
fn reduce_terms(dec: &mut BirkhoffDecomposition) {
    let m = dec.size;
    let bound = dec.term_bound();
    while dec.terms.len() > bound {
        let k = bound + 1;
        let rows = m * m + 1;
        let mut a = DMatrix::<f64>::zeros(rows, k);
        for (j, (_, perm)) in dec.terms.iter().take(k).enumerate() {
            for (c, &r) in perm.iter().enumerate() {
                a[(r * m + c, j)] = 1.0;
            }
            a[(m * m, j)] = 1.0;
        }
        // rank(a) ≤ (M−1)² + 1 < k, so the smallest singular value is zero
        let svd = a.svd(false, true);
        let vt = svd.v_t.expect("requested v_t");
        let smallest = (0..k)
            .min_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]))
            .unwrap_or(0);
        let z: Vec<f64> = vt.row(smallest).iter().copied().collect();
        let step = dec
            .terms
            .iter()
            .zip(&z)
            .filter(|(_, &zj)| zj > 0.0)
            .map(|((w, _), &zj)| w / zj)
            .fold(f64::INFINITY, f64::min);
        if !step.is_finite() {
            break;
        }
        for (t, &zj) in dec.terms.iter_mut().zip(&z) {
            t.0 -= step * zj;
        }
        dec.terms.retain(|t| t.0 > SUPPORT_THRESHOLD);
    }
}
