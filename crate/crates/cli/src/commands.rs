//! The four experiments. Each returns the bytes to write and the exit code.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use trajbell::bell::{find_violating_state, integrated_s, sweep, SearchOptions, SweepOptions, TwoModeState};
use trajbell::dynamics::HarmonicStrategy;
use trajbell::fock::BasisSpec;
use trajbell::hv::{
    classical_bell_s, classical_bell_s_generalized, hv_distribution_check, random_ensemble, CheckMode, HvCheckOptions,
    LatticeModel, SubadditiveFunctional, TrajectoryEnsemble, TrajectorySample,
};

use crate::config::{FunctionalMode, LatticeKind, RunConfig, Scale, Units};
use crate::error::{CliError, EXIT_CHECK_FAILED, EXIT_NO_VIOLATION, EXIT_OK};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "t,f00,f01,f10,f11,S";
/// Threshold of the classical property checks.
pub const CLASSICAL_TOL: f64 = 1e-10;

pub struct Output {
    pub body: String,
    /// Written next to the main output as `<out>.json`.
    pub sidecar: Option<String>,
    pub exit_code: i32,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UnitsInfo {
    pub system: Units,
    pub length: String,
    pub time: String,
    pub length_scale_m: Option<f64>,
    pub time_scale_s: Option<f64>,
}

fn units_info(config: &RunConfig, scale: &Scale) -> UnitsInfo {
    let si = config.units == Units::Si;
    UnitsInfo {
        system: config.units,
        length: scale.length_unit.into(),
        time: scale.time_unit.into(),
        length_scale_m: si.then(|| config.si.length_m()),
        time_scale_s: si.then(|| config.si.time_s()),
    }
}

fn to_json(value: &impl Serialize) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Check(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Output of `find-state`, also the input of `sweep`.
#[derive(Debug, Serialize, Deserialize)]
pub struct FindStateReport {
    pub schema_version: u32,
    pub command: String,
    pub units: UnitsInfo,
    #[serde(rename = "T")]
    pub target_time: f64,
    pub xi_minus: f64,
    pub violation: bool,
    pub spectral_gap: f64,
    pub degenerate: bool,
    pub strategy: HarmonicStrategy,
    pub n_sub: usize,
    /// `c_mn` as `[re, im]`, row-major in `(m, n)`.
    pub c_mn: Vec<[f64; 2]>,
    /// `ξ₋` per working truncation `n_big`.
    pub convergence: BTreeMap<String, f64>,
}

pub fn find_state(config: &RunConfig) -> Result<Output, CliError> {
    config.validate()?;
    let basis = BasisSpec::two_mode(config.n_sub, config.n_big);
    let options = SearchOptions {
        convergence_check: config.convergence_check,
        ..SearchOptions::default()
    };
    let r = find_violating_state(config.target_time, &config.strategy, &basis, &options)?;
    let scale = config.scale();
    let report = FindStateReport {
        schema_version: SCHEMA_VERSION,
        command: "find-state".into(),
        units: units_info(config, &scale),
        target_time: r.target_time * scale.time,
        xi_minus: r.min_eigenvalue * scale.length,
        violation: r.violation,
        spectral_gap: r.spectral_gap * scale.length,
        degenerate: r.degenerate,
        strategy: config.strategy,
        n_sub: config.n_sub,
        c_mn: r.state.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        convergence: r
            .convergence_report
            .iter()
            .map(|(n, xi)| (n.to_string(), xi * scale.length))
            .collect(),
    };
    Ok(Output {
        body: to_json(&report)?,
        sidecar: None,
        exit_code: if r.violation { EXIT_OK } else { EXIT_NO_VIOLATION },
    })
}

fn read_state(path: &Path) -> Result<TwoModeState, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read state file {}: {e}", path.display())))?;
    let report: FindStateReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("bad state file {}: {e}", path.display())))?;
    let amps = report.c_mn.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    Ok(TwoModeState::new(report.n_sub, amps)?)
}

#[derive(Debug, Serialize)]
struct IntervalReport {
    t_i: f64,
    t_f: f64,
    /// Trapezoidal `∫ S(t) dt` over the interval.
    integral: f64,
}

#[derive(Debug, Serialize)]
struct SweepSidecar {
    schema_version: u32,
    command: &'static str,
    units: UnitsInfo,
    columns: &'static str,
    t_start: f64,
    t_end: f64,
    steps: usize,
    refine_tol: f64,
    n_sub: usize,
    strategy: HarmonicStrategy,
    minimum: [f64; 2],
    negative_intervals: Vec<IntervalReport>,
}

pub fn sweep_cmd(config: &RunConfig, state_file: &Path) -> Result<Output, CliError> {
    config.validate()?;
    let state = read_state(state_file)?;
    if state.n_sub() != config.n_sub {
        return Err(CliError::Config(format!(
            "state file has n_sub = {}, configuration has {}",
            state.n_sub(),
            config.n_sub
        )));
    }
    let sc = &config.sweep;
    let basis = BasisSpec::two_mode(config.n_sub, config.n_big);
    let options = SweepOptions {
        refine_tol: sc.refine_tol,
    };
    let s = sweep(&state, &config.strategy, &basis, sc.t_start, sc.t_end, sc.steps, &options)?;
    let scale = config.scale();
    let (l, tu) = (scale.length, scale.time);

    let mut csv = String::with_capacity(64 * s.times.len());
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for (k, &t) in s.times.iter().enumerate() {
        let f: Vec<f64> = s.expectations.iter().map(|col| col[k] * l).collect();
        // recombined from the scaled columns so each row satisfies the identity
        let total = f[0] + f[1] + f[2] - f[3];
        writeln!(csv, "{},{},{},{},{},{}", t * tu, f[0], f[1], f[2], f[3], total).expect("string write");
    }

    let negative_intervals = s
        .negative_intervals
        .iter()
        .map(|&(lo, hi)| {
            let clamp = |t: f64| t.clamp(sc.t_start, sc.t_end);
            Ok(IntervalReport {
                t_i: lo * tu,
                t_f: hi * tu,
                integral: integrated_s(&s, clamp(lo), clamp(hi))? * l * tu,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let (t_min, s_min) = s.minimum();
    let sidecar = SweepSidecar {
        schema_version: SCHEMA_VERSION,
        command: "sweep",
        units: units_info(config, &scale),
        columns: CSV_HEADER,
        t_start: sc.t_start * tu,
        t_end: sc.t_end * tu,
        steps: sc.steps,
        refine_tol: sc.refine_tol * tu,
        n_sub: config.n_sub,
        strategy: config.strategy,
        minimum: [t_min * tu, s_min * l],
        negative_intervals,
    };
    let violated = !s.negative_intervals.is_empty();
    Ok(Output {
        body: csv,
        sidecar: Some(to_json(&sidecar)?),
        exit_code: if violated { EXIT_OK } else { EXIT_NO_VIOLATION },
    })
}

#[derive(Debug, Serialize)]
struct HvDemoReport {
    schema_version: u32,
    command: &'static str,
    units: UnitsInfo,
    lattice: LatticeKind,
    sites: usize,
    steps: usize,
    spacing: f64,
    total_time: f64,
    m0: usize,
    seed: u64,
    corrupted: bool,
    mode: CheckMode,
    n_samples: usize,
    cells: usize,
    term_counts: Vec<usize>,
    term_bound: usize,
    max_reconstruction_error: f64,
    max_abs_deviation: f64,
    total_variation: f64,
    max_z: f64,
    z_bound: f64,
    pass: bool,
}

pub fn hv_demo(config: &RunConfig) -> Result<Output, CliError> {
    let lc = &config.lattice;
    let model = match lc.kind {
        LatticeKind::Dft => LatticeModel::dft(lc.sites, lc.steps),
        LatticeKind::Identity => LatticeModel::identity(lc.sites, lc.steps),
        LatticeKind::Harmonic => LatticeModel::harmonic(lc.sites, lc.steps, lc.spacing, lc.total_time, lc.omega),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let options = HvCheckOptions {
        mode: lc.mode,
        corrupt_term: lc.corrupt.then_some((0, 0)),
    };
    let r = hv_distribution_check(&model, lc.m0, lc.samples, config.seed, &options)?;
    let scale = config.scale();
    let report = HvDemoReport {
        schema_version: SCHEMA_VERSION,
        command: "hv-demo",
        units: units_info(config, &scale),
        lattice: lc.kind,
        sites: r.sites,
        steps: r.steps,
        spacing: model.spacing() * scale.length,
        total_time: model.total_time() * scale.time,
        m0: lc.m0,
        seed: config.seed,
        corrupted: lc.corrupt,
        mode: r.mode,
        n_samples: r.n_samples,
        cells: r.cells,
        term_counts: r.term_counts,
        term_bound: r.sites * r.sites - 2 * r.sites + 2,
        max_reconstruction_error: r.max_reconstruction_error,
        max_abs_deviation: r.max_abs_deviation,
        total_variation: r.total_variation,
        max_z: r.max_z,
        z_bound: r.z_bound,
        pass: r.pass,
    };
    Ok(Output {
        body: to_json(&report)?,
        sidecar: None,
        exit_code: if r.pass { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

#[derive(Debug, Serialize)]
struct ClassicalReport {
    schema_version: u32,
    command: &'static str,
    units: UnitsInfo,
    seed: u64,
    ensembles: usize,
    functional: FunctionalMode,
    degenerate: bool,
    /// Smallest `S = ∫ 𝒮 dt` (length × time).
    min_s: Option<f64>,
    /// Smallest `𝒮(t)` (length).
    min_s_of_t: Option<f64>,
    /// Smallest sign-flipped combination with `max(0, sup ·)` (length).
    min_generalized: Option<f64>,
    tolerance: f64,
    pass: bool,
}

fn degenerate_ensemble(cc: &crate::config::ClassicalConfig) -> TrajectoryEnsemble {
    let n = cc.grid_points.max(2);
    let times: Vec<f64> = (0..n).map(|k| cc.tau * k as f64 / (n - 1) as f64).collect();
    let path: Vec<f64> = times.iter().map(|t| t.sin()).collect();
    TrajectoryEnsemble {
        times,
        samples: vec![TrajectorySample {
            weight: 1.0,
            x: [path.clone(), path.clone()],
            y: [path.clone(), path],
        }],
    }
}

pub fn classical_check(config: &RunConfig) -> Result<Output, CliError> {
    let cc = &config.classical;
    if cc.ensembles == 0 || cc.max_samples == 0 {
        return Err(CliError::Config("need at least one ensemble and one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ensembles: Vec<TrajectoryEnsemble> = if cc.degenerate {
        vec![degenerate_ensemble(cc)]
    } else {
        (0..cc.ensembles)
            .map(|_| {
                let samples = rng.random_range(1..=cc.max_samples);
                random_ensemble(&mut rng, samples, cc.grid_points, cc.knots, cc.tau)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(e.to_string()))?
    };
    let use_abs = matches!(cc.functional, FunctionalMode::Abs | FunctionalMode::Both);
    let use_sup = matches!(cc.functional, FunctionalMode::PositiveSup | FunctionalMode::Both);
    let (mut min_s, mut min_pointwise, mut min_gen) = (None::<f64>, None::<f64>, None::<f64>);
    let lower = |acc: Option<f64>, v: f64| Some(acc.map_or(v, |a| a.min(v)));
    for e in &ensembles {
        if use_abs {
            let r = classical_bell_s(e, &SubadditiveFunctional::abs())?;
            min_s = lower(min_s, r.s);
            min_pointwise = r.s_of_t.iter().fold(min_pointwise, |acc, &v| lower(acc, v));
        }
        if use_sup {
            min_gen = lower(min_gen, classical_bell_s_generalized(e, &SubadditiveFunctional::positive_sup())?);
        }
    }
    let pass = [min_s, min_pointwise, min_gen].iter().flatten().all(|&v| v >= -CLASSICAL_TOL);
    let scale = config.scale();
    let report = ClassicalReport {
        schema_version: SCHEMA_VERSION,
        command: "classical-check",
        units: units_info(config, &scale),
        seed: config.seed,
        ensembles: ensembles.len(),
        functional: cc.functional,
        degenerate: cc.degenerate,
        min_s: min_s.map(|v| v * scale.length * scale.time),
        min_s_of_t: min_pointwise.map(|v| v * scale.length),
        min_generalized: min_gen.map(|v| v * scale.length),
        tolerance: CLASSICAL_TOL,
        pass,
    };
    Ok(Output {
        body: to_json(&report)?,
        sidecar: None,
        exit_code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}
