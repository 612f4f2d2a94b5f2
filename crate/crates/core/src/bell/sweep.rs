use num_complex::Complex64;
use rayon::prelude::*;

use super::{input_sign, BellError, BellKernel, TwoModeState, INPUT_PAIRS};
use crate::dynamics::{quadrature_rotation, HarmonicStrategy, Party};
use crate::fock::{BasisSpec, ModeCount};
use crate::linalg;
use crate::quadrature::{gauss_hermite, gauss_laguerre, hermite_functions};

/// Default width to which interval endpoints are bisected, in `Ω⁻¹`.
pub const DEFAULT_REFINE_TOL: f64 = 1e-3;
/// Largest imaginary part tolerated in an expectation value.
pub const IMAGINARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub refine_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            refine_tol: DEFAULT_REFINE_TOL,
        }
    }
}

/// Time-resolved Bell parameter of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct BellSweep {
    pub times: Vec<f64>,
    /// `⟨d̂_ab(t)⟩` for `(a, b)` in [`INPUT_PAIRS`] order.
    pub expectations: [Vec<f64>; 4],
    pub bell_parameter: Vec<f64>,
    /// Maximal intervals on which the parameter is negative, endpoints refined.
    pub negative_intervals: Vec<(f64, f64)>,
}

impl BellSweep {
    /// Minimum of the parameter over the grid and the time it occurs at.
    pub fn minimum(&self) -> (f64, f64) {
        self.times
            .iter()
            .zip(&self.bell_parameter)
            .fold((f64::NAN, f64::INFINITY), |best, (&t, &s)| if s < best.1 { (t, s) } else { best })
    }
}

fn expectations_at(kernel: &BellKernel, state: &TwoModeState, t: f64, strategy: &HarmonicStrategy) -> Result<[f64; 4], BellError> {
    let mut out = [0.0; 4];
    for (slot, (a, b)) in out.iter_mut().zip(INPUT_PAIRS) {
        let d = kernel.abs_difference(a, b, t, strategy);
        let z = linalg::expectation(&d, state.amplitudes());
        if z.im.abs() > IMAGINARY_TOL {
            return Err(BellError::Accuracy(format!(
                "⟨d_{a}{b}({t})⟩ has imaginary part {}",
                z.im
            )));
        }
        *slot = z.re;
    }
    Ok(out)
}

fn combine(e: &[f64; 4]) -> f64 {
    INPUT_PAIRS.iter().zip(e).map(|(&(a, b), v)| input_sign(a, b) * v).sum()
}

/// `⟨Ψ₀|Ŝ(t)|Ψ₀⟩`, the Heisenberg-picture Bell parameter at a single time.
pub fn bell_parameter_at(state: &TwoModeState, t: f64, strategy: &HarmonicStrategy) -> Result<f64, BellError> {
    strategy.validate()?;
    let kernel = BellKernel::new(state.n_sub())?;
    Ok(combine(&expectations_at(&kernel, state, t, strategy)?))
}

/// `⟨Ψ^{(a,b)}(t)| |x − y| |Ψ^{(a,b)}(t)⟩` from the evolved position density.
///
/// The trap maps the reference wavefunction `Φ(x, y)` with phases
/// `e^{−i(θ_A m + θ_B n)}` on `c_mn` to `Φ(x/λ_A, y/λ_B)/√(λ_Aλ_B)` times a
/// position-dependent chirp, which drops out of `|Ψ|²`. After undoing the
/// scaling the expectation is `∫∫ |λ_A x − λ_B y| |Φ|² dx dy`, integrated
/// exactly by Gauss–Hermite along the centre-of-mass direction and
/// Gauss–Laguerre in the square of the relative coordinate.
pub fn schrodinger_expectation(
    state: &TwoModeState,
    a: usize,
    b: usize,
    t: f64,
    strategy: &HarmonicStrategy,
) -> Result<f64, BellError> {
    strategy.validate()?;
    if a > 1 || b > 1 {
        return Err(BellError::InvalidParameter(format!("inputs must be bits, got ({a}, {b})")));
    }
    let ra = quadrature_rotation(strategy.omega(Party::A, a), t);
    let rb = quadrature_rotation(strategy.omega(Party::B, b), t);
    let big_lambda = ra.scale.hypot(rb.scale);
    let (sin, cos) = rb.scale.atan2(ra.scale).sin_cos();
    let n = state.n_sub();
    let coeffs: Vec<Complex64> = (0..n * n)
        .map(|i| {
            let phase = -(ra.angle * (i / n) as f64 + rb.angle * (i % n) as f64);
            state.amplitudes()[i] * Complex64::from_polar(1.0, phase)
        })
        .collect();
    let hermite = gauss_hermite(2 * n + 3);
    let laguerre = gauss_laguerre(n + 4);
    let mut total = 0.0;
    for (&s, &wl) in laguerre.nodes.iter().zip(&laguerre.scaled_weights) {
        for (&v, &wh) in hermite.nodes.iter().zip(&hermite.scaled_weights) {
            for u in [s.sqrt(), -s.sqrt()] {
                let px = hermite_functions(cos * u + sin * v, n);
                let py = hermite_functions(-sin * u + cos * v, n);
                let mut phi = Complex64::new(0.0, 0.0);
                for m in 0..n {
                    for l in 0..n {
                        phi += coeffs[m * n + l] * (px[m] * py[l]);
                    }
                }
                total += 0.5 * wl * wh * phi.norm_sqr();
            }
        }
    }
    Ok(big_lambda * total)
}

/// `Σ_ab (−1)^{ab} ⟨Ψ^{(a,b)}(t)| |x − y| |Ψ^{(a,b)}(t)⟩` from the evolved
/// densities.
pub fn schrodinger_bell_parameter(state: &TwoModeState, t: f64, strategy: &HarmonicStrategy) -> Result<f64, BellError> {
    INPUT_PAIRS
        .iter()
        .map(|&(a, b)| Ok(input_sign(a, b) * schrodinger_expectation(state, a, b, t, strategy)?))
        .sum()
}

/// Evaluates all four `⟨d̂_ab(t)⟩` and the Bell parameter on
/// `steps` equally spaced times in `[t_start, t_end]`, then bisects every
/// sign change.
pub fn sweep(
    state: &TwoModeState,
    strategy: &HarmonicStrategy,
    basis: &BasisSpec,
    t_start: f64,
    t_end: f64,
    steps: usize,
    options: &SweepOptions,
) -> Result<BellSweep, BellError> {
    if basis.modes != ModeCount::Two {
        return Err(BellError::Dimension("sweep needs a two-mode basis".into()));
    }
    basis.validate()?;
    strategy.validate()?;
    if state.n_sub() != basis.n_sub {
        return Err(BellError::Dimension(format!(
            "state has n_sub = {}, basis has {}",
            state.n_sub(),
            basis.n_sub
        )));
    }
    if !(t_start.is_finite() && t_end.is_finite() && t_start >= 0.0 && t_start < t_end) {
        return Err(BellError::InvalidParameter(format!(
            "need 0 <= t_start < t_end, got [{t_start}, {t_end}]"
        )));
    }
    if steps < 2 {
        return Err(BellError::InvalidParameter("a sweep needs at least 2 points".into()));
    }
    if !(options.refine_tol > 0.0) {
        return Err(BellError::InvalidParameter("refinement tolerance must be positive".into()));
    }
    let kernel = BellKernel::new(basis.n_sub)?;
    let h = (t_end - t_start) / (steps - 1) as f64;
    let times: Vec<f64> = (0..steps)
        .map(|k| if k + 1 == steps { t_end } else { t_start + k as f64 * h })
        .collect();
    let rows: Vec<[f64; 4]> = times
        .par_iter()
        .map(|&t| expectations_at(&kernel, state, t, strategy))
        .collect::<Result<_, _>>()?;
    let bell_parameter: Vec<f64> = rows.iter().map(combine).collect();
    let expectations = std::array::from_fn(|i| rows.iter().map(|r| r[i]).collect());

    let eval = |t: f64| expectations_at(&kernel, state, t, strategy).map(|e| combine(&e));
    let mut negative_intervals = Vec::new();
    let mut k = 0;
    while k < steps {
        if bell_parameter[k] >= 0.0 {
            k += 1;
            continue;
        }
        let first = k;
        while k + 1 < steps && bell_parameter[k + 1] < 0.0 {
            k += 1;
        }
        let last = k;
        let lo = if first == 0 {
            times[0]
        } else {
            bisect(&eval, times[first - 1], times[first], options.refine_tol)?
        };
        let hi = if last + 1 == steps {
            times[last]
        } else {
            bisect(&eval, times[last], times[last + 1], options.refine_tol)?
        };
        negative_intervals.push((lo, hi));
        k += 1;
    }

    Ok(BellSweep {
        times,
        expectations,
        bell_parameter,
        negative_intervals,
    })
}

/// Midpoint of a bracket of width at most `tol` around the sign change of
/// `f` in `[lo, hi]`.
fn bisect(f: &impl Fn(f64) -> Result<f64, BellError>, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, BellError> {
    let lo_negative = f(lo)? < 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Trapezoidal integral of the Bell parameter over `[t_lo, t_hi]`, with the
/// parameter interpolated linearly at endpoints between grid points.
pub fn integrated_s(sweep: &BellSweep, t_lo: f64, t_hi: f64) -> Result<f64, BellError> {
    let times = &sweep.times;
    let values = &sweep.bell_parameter;
    let (start, end) = (times[0], *times.last().expect("non-empty grid"));
    if !(t_lo >= start && t_hi <= end && t_lo <= t_hi) {
        return Err(BellError::Range {
            lo: t_lo,
            hi: t_hi,
            start,
            end,
        });
    }
    if t_lo == t_hi {
        return Ok(0.0);
    }
    let interp = |t: f64| {
        let k = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
        let (t0, t1) = (times[k - 1], times[k]);
        let w = (t - t0) / (t1 - t0);
        values[k - 1] * (1.0 - w) + values[k] * w
    };
    let mut nodes = vec![(t_lo, interp(t_lo))];
    for (&t, &s) in times.iter().zip(values) {
        if t > t_lo && t < t_hi {
            nodes.push((t, s));
        }
    }
    nodes.push((t_hi, interp(t_hi)));
    Ok(nodes.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum())
}
