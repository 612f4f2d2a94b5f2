//! Lattice dynamics with a permutation-valued hidden variable.
//!
//! A particle on `M` sites is measured at `N` times. Each step's transition
//! matrix `D_i = |U_{i,i−1}|²` is doubly stochastic; writing it as
//! `Σ μ_π P_π` and drawing one `π` per step with probability `μ_π` yields a
//! deterministic site sequence whose statistics equal
//! `P(m₁…m_N | m₀) = ∏ D_i[m_i, m_{i−1}]`.
//!
//! Sites are 0-based.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::birkhoff::{birkhoff_decompose, doubly_stochastic_from_unitary, unitarity_defect, BirkhoffDecomposition, UNITARITY_TOL};
use super::HvError;
use crate::linalg;

/// Samples drawn per independently seeded chunk.
pub const CHUNK_SIZE: usize = 1 << 16;
/// Largest joint histogram kept in memory; larger models compare per-step
/// marginals instead.
pub const MAX_JOINT_CELLS: usize = 1 << 20;
pub const MIN_CHECK_SAMPLES: usize = 10_000;
/// Family-wise confidence of the multinomial test, in standard deviations.
pub const SIGMA_LEVEL: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    sites: usize,
    spacing: f64,
    total_time: f64,
    unitaries: Vec<DMatrix<Complex64>>,
}

impl LatticeModel {
    pub fn new(spacing: f64, total_time: f64, unitaries: Vec<DMatrix<Complex64>>) -> Result<Self, HvError> {
        if unitaries.is_empty() {
            return Err(HvError::InvalidModel("need at least one step".into()));
        }
        let sites = unitaries[0].nrows();
        if sites < 2 {
            return Err(HvError::InvalidModel(format!("need at least two sites, got {sites}")));
        }
        if !(spacing > 0.0 && spacing.is_finite() && total_time >= 0.0 && total_time.is_finite()) {
            return Err(HvError::InvalidModel("spacing must be positive and total time non-negative".into()));
        }
        for (i, u) in unitaries.iter().enumerate() {
            if u.nrows() != sites || u.ncols() != sites {
                return Err(HvError::InvalidModel(format!("step {i} is {}×{}, expected {sites}×{sites}", u.nrows(), u.ncols())));
            }
            let defect = unitarity_defect(u);
            if defect > UNITARITY_TOL {
                return Err(HvError::NonUnitary(defect));
            }
        }
        Ok(Self {
            sites,
            spacing,
            total_time,
            unitaries,
        })
    }

    /// `N` steps of `exp(−iHT/N)` for a particle in a harmonic trap,
    /// `H = −Δ/(2Δx²) + ω²x²/2` with `Δ` the nearest-neighbour Laplacian and
    /// sites centred on the origin.
    pub fn harmonic(sites: usize, steps: usize, spacing: f64, total_time: f64, omega: f64) -> Result<Self, HvError> {
        if sites < 2 || steps == 0 {
            return Err(HvError::InvalidModel(format!("need M >= 2 and N >= 1, got M = {sites}, N = {steps}")));
        }
        if !(spacing > 0.0 && omega.is_finite()) {
            return Err(HvError::InvalidModel("spacing must be positive and omega finite".into()));
        }
        let hop = 1.0 / (2.0 * spacing * spacing);
        let centre = 0.5 * (sites - 1) as f64;
        let h = DMatrix::from_fn(sites, sites, |i, j| {
            if i == j {
                let x = (i as f64 - centre) * spacing;
                Complex64::new(2.0 * hop + 0.5 * omega * omega * x * x, 0.0)
            } else if i.abs_diff(j) == 1 {
                Complex64::new(-hop, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let (vals, vecs) = linalg::hermitian_eigh(&h);
        let dt = total_time / steps as f64;
        let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            sites,
            vals.iter().map(|&e| Complex64::from_polar(1.0, -e * dt)),
        ));
        let u = &vecs * phases * vecs.adjoint();
        Self::new(spacing, total_time, vec![u; steps])
    }

    /// `N` steps of the unitary discrete Fourier transform.
    pub fn dft(sites: usize, steps: usize) -> Result<Self, HvError> {
        if sites < 2 || steps == 0 {
            return Err(HvError::InvalidModel(format!("need M >= 2 and N >= 1, got M = {sites}, N = {steps}")));
        }
        let s = 1.0 / (sites as f64).sqrt();
        let u = DMatrix::from_fn(sites, sites, |j, k| {
            Complex64::from_polar(s, -2.0 * std::f64::consts::PI * ((j * k) % sites) as f64 / sites as f64)
        });
        Self::new(1.0, steps as f64, vec![u; steps])
    }

    /// `N` steps of the identity.
    pub fn identity(sites: usize, steps: usize) -> Result<Self, HvError> {
        if sites < 2 || steps == 0 {
            return Err(HvError::InvalidModel(format!("need M >= 2 and N >= 1, got M = {sites}, N = {steps}")));
        }
        Self::new(1.0, steps as f64, vec![DMatrix::identity(sites, sites); steps])
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn steps(&self) -> usize {
        self.unitaries.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn unitaries(&self) -> &[DMatrix<Complex64>] {
        &self.unitaries
    }

    /// `D_i = |U_i|²` for every step.
    pub fn transition_matrices(&self) -> Result<Vec<DMatrix<f64>>, HvError> {
        self.unitaries.iter().map(|u| doubly_stochastic_from_unitary(u, None)).collect()
    }

    /// Birkhoff decomposition of every step.
    pub fn decompositions(&self) -> Result<Vec<BirkhoffDecomposition>, HvError> {
        self.transition_matrices()?.iter().map(birkhoff_decompose).collect()
    }
}

/// Cumulative weights per step, in term order.
struct StepTables<'a> {
    decs: &'a [BirkhoffDecomposition],
    cdfs: Vec<Vec<f64>>,
}

impl<'a> StepTables<'a> {
    fn new(model: &LatticeModel, decs: &'a [BirkhoffDecomposition], m0: usize) -> Result<Self, HvError> {
        if m0 >= model.sites {
            return Err(HvError::InvalidParameter(format!("site {m0} outside 0..{}", model.sites)));
        }
        if decs.len() != model.steps() {
            return Err(HvError::InvalidParameter(format!(
                "{} decompositions for {} steps",
                decs.len(),
                model.steps()
            )));
        }
        if let Some(d) = decs.iter().find(|d| d.size != model.sites || d.terms.is_empty()) {
            return Err(HvError::InvalidParameter(format!(
                "decomposition of size {} with {} terms does not fit {} sites",
                d.size,
                d.terms.len(),
                model.sites
            )));
        }
        let cdfs = decs
            .iter()
            .map(|d| {
                d.terms
                    .iter()
                    .scan(0.0, |acc, t| {
                        *acc += t.0;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { decs, cdfs })
    }

    fn walk(&self, rng: &mut impl Rng, m0: usize, out: &mut [usize]) {
        let mut site = m0;
        for (i, cdf) in self.cdfs.iter().enumerate() {
            let total = *cdf.last().expect("non-empty");
            let u = rng.random::<f64>() * total;
            let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            site = self.decs[i].terms[k].1[site];
            out[i] = site;
        }
    }
}

/// One hidden-variable run: a permutation is drawn per step and applied to
/// the current site, starting from `m0`. Returns `(m₁, …, m_N)`.
pub fn sample_hv_trajectory(
    model: &LatticeModel,
    decompositions: &[BirkhoffDecomposition],
    m0: usize,
    seed: Option<u64>,
) -> Result<Vec<usize>, HvError> {
    let seed = seed.ok_or(HvError::MissingSeed)?;
    let tables = StepTables::new(model, decompositions, m0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; model.steps()];
    tables.walk(&mut rng, m0, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Joint histogram when `M^N ≤ 2^20`, otherwise marginals.
    Auto,
    /// Histogram over whole sequences `(m₁, …, m_N)`.
    Joint,
    /// Histogram of each `m_i` separately.
    Marginals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HvCheckOptions {
    pub mode: CheckMode,
    /// Zero the weight of term `(step, term)` and renormalize before
    /// sampling, as a negative control.
    pub corrupt_term: Option<(usize, usize)>,
}

impl Default for HvCheckOptions {
    fn default() -> Self {
        Self {
            mode: CheckMode::Auto,
            corrupt_term: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvReport {
    pub mode: CheckMode,
    pub sites: usize,
    pub steps: usize,
    pub n_samples: usize,
    pub cells: usize,
    pub term_counts: Vec<usize>,
    pub max_reconstruction_error: f64,
    /// Largest `|p̂ − p|` over all cells.
    pub max_abs_deviation: f64,
    /// `½ Σ |p̂ − p|`, summed over steps in marginal mode.
    pub total_variation: f64,
    /// Largest `|n̂ − np| / √(np(1−p))` over cells with `0 < p < 1`.
    pub max_z: f64,
    /// Per-cell bound on `z` giving a family-wise two-sided `3σ` level.
    pub z_bound: f64,
    pub pass: bool,
}

/// Runs the sampler and compares the empirical distribution with
/// `∏ D_i[m_i, m_{i−1}]` computed from the unitaries.
///
/// The test runs at the two-sided `3σ` level `α ≈ 0.0027` for the whole
/// histogram: each cell's count must lie within `z_bound` binomial standard
/// deviations of its expectation, with `z_bound` Bonferroni-corrected for the
/// number of cells (`z_bound = 3` for a single cell). Cells of probability 0
/// or 1 must match exactly.
pub fn hv_distribution_check(
    model: &LatticeModel,
    m0: usize,
    n_samples: usize,
    seed: u64,
    options: &HvCheckOptions,
) -> Result<HvReport, HvError> {
    if n_samples < MIN_CHECK_SAMPLES {
        return Err(HvError::InvalidParameter(format!(
            "need at least {MIN_CHECK_SAMPLES} samples, got {n_samples}"
        )));
    }
    let (m, n) = (model.sites(), model.steps());
    let transitions = model.transition_matrices()?;
    let decs: Vec<BirkhoffDecomposition> = transitions.par_iter().map(birkhoff_decompose).collect::<Result<_, _>>()?;
    let max_reconstruction_error = decs
        .iter()
        .zip(&transitions)
        .map(|(d, t)| d.reconstruction_error(t))
        .fold(0.0, f64::max);
    let term_counts = decs.iter().map(|d| d.terms.len()).collect();

    let mut sampled = decs.clone();
    if let Some((step, term)) = options.corrupt_term {
        let dec = sampled
            .get_mut(step)
            .filter(|d| term < d.terms.len() && d.terms.len() > 1)
            .ok_or_else(|| HvError::InvalidParameter(format!("no term {term} at step {step} to corrupt")))?;
        dec.terms[term].0 = 0.0;
        let total = dec.total_weight();
        for t in &mut dec.terms {
            t.0 /= total;
        }
    }
    let tables = StepTables::new(model, &sampled, m0)?;

    let joint_cells = (m as f64).powi(n as i32);
    let mode = match options.mode {
        CheckMode::Auto if joint_cells <= MAX_JOINT_CELLS as f64 => CheckMode::Joint,
        CheckMode::Auto => CheckMode::Marginals,
        CheckMode::Joint if joint_cells > MAX_JOINT_CELLS as f64 => {
            return Err(HvError::InvalidParameter(format!(
                "joint histogram would need {joint_cells} cells"
            )))
        }
        other => other,
    };

    let cells = match mode {
        CheckMode::Joint => m.pow(n as u32),
        _ => m * n,
    };
    let chunks = n_samples.div_ceil(CHUNK_SIZE);
    let partial: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK_SIZE.min(n_samples - c * CHUNK_SIZE);
            let mut hist = vec![0u64; cells];
            let mut path = vec![0usize; n];
            for _ in 0..count {
                tables.walk(&mut rng, m0, &mut path);
                match mode {
                    CheckMode::Joint => hist[path.iter().fold(0, |acc, &s| acc * m + s)] += 1,
                    _ => {
                        for (i, &s) in path.iter().enumerate() {
                            hist[i * m + s] += 1;
                        }
                    }
                }
            }
            hist
        })
        .collect();
    let mut counts = vec![0u64; cells];
    for hist in &partial {
        for (a, b) in counts.iter_mut().zip(hist) {
            *a += b;
        }
    }

    let expected = match mode {
        CheckMode::Joint => joint_oracle(&transitions, m0),
        _ => marginal_oracle(&transitions, m0),
    };
    let ns = n_samples as f64;
    let z_bound = family_z_bound(cells);
    let mut max_abs_deviation = 0.0f64;
    let mut total_variation = 0.0;
    let mut max_z = 0.0f64;
    let mut pass = true;
    for (&k, &p) in counts.iter().zip(&expected) {
        let p = p.clamp(0.0, 1.0);
        let dev = k as f64 / ns - p;
        max_abs_deviation = max_abs_deviation.max(dev.abs());
        total_variation += 0.5 * dev.abs();
        let sigma = (ns * p * (1.0 - p)).sqrt();
        if sigma > 0.0 {
            let z = (k as f64 - ns * p).abs() / sigma;
            max_z = max_z.max(z);
            pass &= z <= z_bound;
        } else {
            pass &= (k as f64 - ns * p).abs() < 0.5;
        }
    }
    Ok(HvReport {
        mode,
        sites: m,
        steps: n,
        n_samples,
        cells,
        term_counts,
        max_reconstruction_error,
        max_abs_deviation,
        total_variation,
        max_z,
        z_bound,
        pass,
    })
}

/// Per-cell `z` threshold for `cells` simultaneous two-sided tests at the
/// `SIGMA_LEVEL` family-wise level.
pub fn family_z_bound(cells: usize) -> f64 {
    let normal = Normal::standard();
    let alpha = 2.0 * normal.sf(SIGMA_LEVEL);
    normal.inverse_cdf(1.0 - alpha / (2.0 * cells.max(1) as f64))
}

/// `P(m₁…m_N | m₀)` indexed by `Σ m_i M^{N−i}`.
pub fn joint_oracle(transitions: &[DMatrix<f64>], m0: usize) -> Vec<f64> {
    let m = transitions[0].nrows();
    let mut probs = vec![1.0];
    let mut last = vec![m0];
    for d in transitions {
        let mut next_p = Vec::with_capacity(probs.len() * m);
        let mut next_last = Vec::with_capacity(probs.len() * m);
        for (&p, &from) in probs.iter().zip(&last) {
            for to in 0..m {
                next_p.push(p * d[(to, from)]);
                next_last.push(to);
            }
        }
        probs = next_p;
        last = next_last;
    }
    probs
}

/// `P(m_i | m₀)` for each step, indexed by `i·M + m_i`.
pub fn marginal_oracle(transitions: &[DMatrix<f64>], m0: usize) -> Vec<f64> {
    let m = transitions[0].nrows();
    let mut dist = nalgebra::DVector::zeros(m);
    dist[m0] = 1.0;
    let mut out = Vec::with_capacity(m * transitions.len());
    for d in transitions {
        dist = d * dist;
        out.extend(dist.iter().copied());
    }
    out
}
