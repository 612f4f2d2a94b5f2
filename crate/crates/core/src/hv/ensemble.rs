//! Local-realistic trajectory ensembles.
//!
//! Each hidden-variable sample fixes all four trajectories
//! `X^{(0)}, X^{(1)}, Y^{(0)}, Y^{(1)}` on a shared time grid. For a symmetric
//! subadditive `F`, `F[X₁−Y₁] ≤ F[X₁−Y₀] + F[Y₀−X₀] + F[X₀−Y₁]` sample by
//! sample, so the weighted combination `Σ (−1)^{ab} ⟨F[X_a − Y_b]⟩` cannot be
//! negative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HvError;

/// Tolerance on the total weight of an ensemble.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Random triples drawn by [`SubadditiveFunctional::self_test`].
pub const SELF_TEST_DRAWS: usize = 1000;
const SELF_TEST_SEED: u64 = 0x5ab_add;
const SUBADDITIVITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub weight: f64,
    /// `X^{(0)}`, `X^{(1)}`.
    pub x: [Vec<f64>; 2],
    /// `Y^{(0)}`, `Y^{(1)}`.
    pub y: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    pub samples: Vec<TrajectorySample>,
}

impl TrajectoryEnsemble {
    pub fn validate(&self) -> Result<(), HvError> {
        if self.times.is_empty() {
            return Err(HvError::InvalidEnsemble("empty time grid".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HvError::InvalidEnsemble("time grid must be strictly increasing".into()));
        }
        if self.samples.is_empty() {
            return Err(HvError::InvalidEnsemble("no samples".into()));
        }
        let len = self.times.len();
        for (i, s) in self.samples.iter().enumerate() {
            if !(s.weight >= 0.0 && s.weight.is_finite()) {
                return Err(HvError::InvalidEnsemble(format!("sample {i} has weight {}", s.weight)));
            }
            if s.x.iter().chain(&s.y).any(|tr| tr.len() != len) {
                return Err(HvError::InvalidEnsemble(format!("sample {i} is not on the shared grid")));
            }
        }
        let total: f64 = self.samples.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(HvError::InvalidEnsemble(format!("weights sum to {total}")));
        }
        Ok(())
    }
}

/// Pointwise building block `f` of a functional.
#[derive(Debug, Clone, Copy)]
pub enum Pointwise {
    /// `|z|`.
    Abs,
    /// `max(0, z)`.
    PositivePart,
    Custom { name: &'static str, f: fn(f64) -> f64 },
}

impl Pointwise {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Pointwise::Abs => z.abs(),
            Pointwise::PositivePart => z.max(0.0),
            Pointwise::Custom { f, .. } => f(z),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Pointwise::Abs => "abs",
            Pointwise::PositivePart => "positive_part",
            Pointwise::Custom { name, .. } => name,
        }
    }
}

/// How the pointwise values along a trajectory are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `F[Z] = ∫ f(Z(t)) dt` (trapezoid on the grid).
    Integral,
    /// `F[Z] = sup_t f(Z(t))`.
    Sup,
}

/// `F[Z]` built from a pointwise `f`, with the symmetry flag the classical
/// inequality relies on.
#[derive(Debug, Clone, Copy)]
pub struct SubadditiveFunctional {
    pub pointwise: Pointwise,
    pub aggregation: Aggregation,
    pub symmetric: bool,
}

impl SubadditiveFunctional {
    /// `∫|Z(t)| dt`.
    pub fn abs() -> Self {
        Self {
            pointwise: Pointwise::Abs,
            aggregation: Aggregation::Integral,
            symmetric: true,
        }
    }

    /// `max(0, sup Z)`: subadditive but not symmetric.
    pub fn positive_sup() -> Self {
        Self {
            pointwise: Pointwise::PositivePart,
            aggregation: Aggregation::Sup,
            symmetric: false,
        }
    }

    /// Checks symmetry (if flagged) and subadditivity of `f` on random
    /// triples: `f(x−y) = f(y−x)` and `f((x−y)+(y−z)) ≤ f(x−y) + f(y−z)`.
    /// Both properties carry over to the integral and the supremum.
    pub fn self_test(&self) -> Result<(), HvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(SELF_TEST_SEED);
        let f = |z: f64| self.pointwise.eval(z);
        for _ in 0..SELF_TEST_DRAWS {
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            let (x, y, z) = (
                scale * rng.random_range(-1.0..1.0),
                scale * rng.random_range(-1.0..1.0),
                scale * rng.random_range(-1.0..1.0),
            );
            let (u, v) = (x - y, y - z);
            let tol = SUBADDITIVITY_SLACK * scale.max(1.0);
            if !f(u).is_finite() {
                return Err(HvError::FunctionalSelfTest(format!("f({u}) is not finite")));
            }
            if self.symmetric && (f(u) - f(-u)).abs() > tol {
                return Err(HvError::FunctionalSelfTest(format!(
                    "{} flagged symmetric but f({u}) = {} and f({}) = {}",
                    self.pointwise.name(),
                    f(u),
                    -u,
                    f(-u)
                )));
            }
            if f(u + v) > f(u) + f(v) + tol {
                return Err(HvError::FunctionalSelfTest(format!(
                    "{} is not subadditive at ({u}, {v})",
                    self.pointwise.name()
                )));
            }
        }
        Ok(())
    }

    /// `F[Z]` for a trajectory on `times`.
    pub fn apply(&self, times: &[f64], z: impl Fn(usize) -> f64) -> f64 {
        let values: Vec<f64> = (0..times.len()).map(|k| self.pointwise.eval(z(k))).collect();
        match self.aggregation {
            Aggregation::Integral => trapezoid(times, &values),
            Aggregation::Sup => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Time-resolved and integrated classical Bell parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalBell {
    pub s: f64,
    pub s_of_t: Vec<f64>,
}

const SIGNS: [[f64; 2]; 2] = [[1.0, 1.0], [1.0, -1.0]];

/// `𝒮(t) = Σ_λ w_λ Σ_ab (−1)^{ab} f(X_a(t) − Y_b(t))` and its trapezoidal
/// integral `S` over the grid.
///
/// `functional` must be symmetric with integral aggregation; use
/// [`classical_bell_s_generalized`] for other functionals.
pub fn classical_bell_s(ensemble: &TrajectoryEnsemble, functional: &SubadditiveFunctional) -> Result<ClassicalBell, HvError> {
    ensemble.validate()?;
    functional.self_test()?;
    if !functional.symmetric || functional.aggregation != Aggregation::Integral {
        return Err(HvError::FunctionalSelfTest(
            "the time-resolved parameter needs a symmetric functional with integral aggregation".into(),
        ));
    }
    let f = |z: f64| functional.pointwise.eval(z);
    let s_of_t: Vec<f64> = (0..ensemble.times.len())
        .map(|k| {
            ensemble
                .samples
                .iter()
                .map(|smp| {
                    let mut acc = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            acc += SIGNS[a][b] * f(smp.x[a][k] - smp.y[b][k]);
                        }
                    }
                    smp.weight * acc
                })
                .sum()
        })
        .collect();
    Ok(ClassicalBell {
        s: trapezoid(&ensemble.times, &s_of_t),
        s_of_t,
    })
}

/// `Σ_ab (−1)^{ab} ⟨F[(−1)^{(1−a)(1−b)}(X_a − Y_b)]⟩` for any subadditive
/// `F`; the sign flip on `(0, 0)` makes symmetry unnecessary.
pub fn classical_bell_s_generalized(ensemble: &TrajectoryEnsemble, functional: &SubadditiveFunctional) -> Result<f64, HvError> {
    ensemble.validate()?;
    functional.self_test()?;
    let times = &ensemble.times;
    Ok(ensemble
        .samples
        .iter()
        .map(|smp| {
            let mut acc = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let flip = if a == 0 && b == 0 { -1.0 } else { 1.0 };
                    acc += SIGNS[a][b] * functional.apply(times, |k| flip * (smp.x[a][k] - smp.y[b][k]));
                }
            }
            smp.weight * acc
        })
        .sum())
}

/// Random ensemble of piecewise-linear trajectories on `grid_points` equally
/// spaced times in `[0, tau]`, each through `knots` random values, with random
/// normalized weights.
pub fn random_ensemble(
    rng: &mut impl Rng,
    samples: usize,
    grid_points: usize,
    knots: usize,
    tau: f64,
) -> Result<TrajectoryEnsemble, HvError> {
    if samples == 0 || grid_points < 2 || knots < 2 || !(tau > 0.0) {
        return Err(HvError::InvalidParameter(
            "need samples >= 1, grid_points >= 2, knots >= 2 and tau > 0".into(),
        ));
    }
    let times: Vec<f64> = (0..grid_points).map(|k| tau * k as f64 / (grid_points - 1) as f64).collect();
    let path = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
        let scale = 10f64.powf(rng.random_range(-1.0..1.0));
        let values: Vec<f64> = (0..knots).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        times
            .iter()
            .map(|&t| {
                let pos = t / tau * (knots - 1) as f64;
                let i = (pos.floor() as usize).min(knots - 2);
                let w = pos - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            })
            .collect()
    };
    let mut raw: Vec<TrajectorySample> = (0..samples)
        .map(|_| {
            let weight = rng.random::<f64>() + 1e-3;
            let x = [path(rng), path(rng)];
            let y = [path(rng), path(rng)];
            TrajectorySample { weight, x, y }
        })
        .collect();
    let total: f64 = raw.iter().map(|s| s.weight).sum();
    for s in &mut raw {
        s.weight /= total;
    }
    Ok(TrajectoryEnsemble { times, samples: raw })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64, n: usize) -> Vec<f64> {
        vec![v; n]
    }

    fn single(x0: f64, x1: f64, y0: f64, y1: f64) -> TrajectoryEnsemble {
        let n = 11;
        TrajectoryEnsemble {
            times: (0..n).map(|k| k as f64 / 10.0).collect(),
            samples: vec![TrajectorySample {
                weight: 1.0,
                x: [constant(x0, n), constant(x1, n)],
                y: [constant(y0, n), constant(y1, n)],
            }],
        }
    }

    #[test]
    fn triangle_equality_case() {
        let r = classical_bell_s(&single(0.0, 1.0, 0.0, -1.0), &SubadditiveFunctional::abs()).unwrap();
        assert!(r.s_of_t.iter().all(|&v| v.abs() < 1e-15));
        assert!(r.s.abs() < 1e-15);
    }

    #[test]
    fn identical_trajectories_give_zero() {
        let r = classical_bell_s(&single(0.3, 0.3, 0.3, 0.3), &SubadditiveFunctional::abs()).unwrap();
        assert_eq!(r.s, 0.0);
    }

    #[test]
    fn generalized_matches_for_symmetric_functional() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = random_ensemble(&mut rng, 20, 50, 6, 2.0).unwrap();
        let f = SubadditiveFunctional::abs();
        let a = classical_bell_s(&e, &f).unwrap().s;
        let b = classical_bell_s_generalized(&e, &f).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn degenerate_points_reduce_to_scalar_triangle_inequality() {
        let e = TrajectoryEnsemble {
            times: vec![0.0],
            samples: vec![TrajectorySample {
                weight: 1.0,
                x: [vec![0.4], vec![-1.3]],
                y: [vec![2.0], vec![0.1]],
            }],
        };
        let v = classical_bell_s_generalized(&e, &SubadditiveFunctional::positive_sup()).unwrap();
        let p = |z: f64| z.max(0.0);
        let expect = p(2.0 - 0.4) + p(0.4 - 0.1) + p(-1.3 - 2.0) - p(-1.3 - 0.1);
        assert!((v - expect).abs() < 1e-15 && v >= 0.0);
    }

    #[test]
    fn self_test_rejects_bad_functionals() {
        let square = SubadditiveFunctional {
            pointwise: Pointwise::Custom { name: "square", f: |z| z * z },
            aggregation: Aggregation::Integral,
            symmetric: true,
        };
        assert!(square.self_test().is_err());
        let mut fake = SubadditiveFunctional::positive_sup();
        fake.symmetric = true;
        assert!(fake.self_test().is_err());
        assert!(classical_bell_s(&single(0.0, 0.0, 0.0, 0.0), &SubadditiveFunctional::positive_sup()).is_err());
    }

    #[test]
    fn weights_must_be_normalized() {
        let mut e = single(0.0, 1.0, 0.0, -1.0);
        e.samples[0].weight = 0.9;
        assert!(matches!(
            classical_bell_s(&e, &SubadditiveFunctional::abs()),
            Err(HvError::InvalidEnsemble(_))
        ));
    }
}
