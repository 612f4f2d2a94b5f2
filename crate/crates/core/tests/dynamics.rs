use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use trajbell::dynamics::{
    conjugate_two_mode, hamiltonian_real, heisenberg_observable, inner_block, propagator_block, EvolutionCache,
    HarmonicStrategy,
};
use trajbell::fock::{two_mode_abs_difference, BasisSpec};
use trajbell::linalg;

fn resonant_phases(t: f64, dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            Complex64::from_polar(1.0, -t * (r as f64 + 0.5))
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn inner(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let k = inner_block(m.nrows());
    m.view((0, 0), (k, k)).into_owned()
}

#[test]
fn quarter_period_resonance_is_fourier_transform() {
    let dim = 48;
    let f = resonant_phases(FRAC_PI_2, dim);
    let recurrence = propagator_block(1.0, FRAC_PI_2, dim).unwrap();
    let cache = EvolutionCache::new(1.0, dim).unwrap().evolution(FRAC_PI_2).unwrap();
    assert!(linalg::max_abs_diff(&inner(&recurrence), &inner(&f)) < 1e-8);
    assert!(linalg::max_abs_diff(&inner(&cache), &inner(&f)) < 1e-8);
}

#[test]
fn fast_trap_returns_after_quarter_period() {
    // ω = 4 completes two full periods of x by t = π/2
    let dim = 48;
    for u in [
        propagator_block(4.0, FRAC_PI_2, dim).unwrap(),
        EvolutionCache::new(4.0, dim).unwrap().evolution(FRAC_PI_2).unwrap(),
    ] {
        let phase = u[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-6);
        let id = DMatrix::<Complex64>::identity(dim, dim) * phase;
        assert!(linalg::max_abs_diff(&inner(&u), &inner(&id)) < 1e-6);
    }
}

#[test]
fn resonant_heisenberg_observable_keeps_spectrum() {
    let d = two_mode_abs_difference(&BasisSpec::two_mode(3, 10)).unwrap();
    let strategy = HarmonicStrategy { alice: [1.0, 1.0], bob: [1.0, 1.0] };
    let evolved = heisenberg_observable(&d, 0, 1, 0.83, &strategy).unwrap();
    let (a, b) = (d.eigenvalues(), evolved.eigenvalues());
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn resonance_is_pure_phase_at_all_times(t in 0.0f64..6.0) {
        let dim = 40;
        let f = resonant_phases(t, dim);
        let cache = EvolutionCache::new(1.0, dim).unwrap().evolution(t).unwrap();
        let rec = propagator_block(1.0, t, dim).unwrap();
        prop_assert!(linalg::max_abs_diff(&inner(&cache), &inner(&f)) < 1e-8);
        prop_assert!(linalg::max_abs_diff(&inner(&rec), &inner(&f)) < 1e-8);
    }

    #[test]
    fn energy_is_conserved(
        omega in 0.25f64..4.0,
        t in 0.0f64..3.0,
        re in proptest::collection::vec(-1.0f64..1.0, 8),
        im in proptest::collection::vec(-1.0f64..1.0, 8),
    ) {
        let dim = 320;
        let psi0 = DMatrix::from_fn(8, 1, |k, _| Complex64::new(re[k], im[k]));
        let norm = psi0.norm();
        prop_assume!(norm > 1e-3);
        let psi0 = psi0 / Complex64::new(norm, 0.0);
        let u = propagator_block(omega, t, dim).unwrap();
        let psi_t = u.columns(0, 8) * &psi0;
        let h = linalg::to_complex(&hamiltonian_real(omega, dim));
        let h0 = h.view((0, 0), (8, 8)).into_owned();
        let e0 = (psi0.adjoint() * h0 * &psi0)[(0, 0)].re;
        let et = (psi_t.adjoint() * &h * &psi_t)[(0, 0)].re;
        prop_assert!((e0 - et).abs() < 1e-8, "E(0) = {e0}, E(t) = {et}");
    }

    #[test]
    fn recurrence_matches_padded_eigen_route(omega in 0.3f64..4.0, t in 0.0f64..3.0) {
        let dim = 20;
        let rec = propagator_block(omega, t, dim).unwrap();
        let eig = EvolutionCache::new(omega, dim).unwrap().evolution(t).unwrap();
        prop_assert!(linalg::max_abs_diff(&rec, &eig) < 1e-9);
    }

    #[test]
    fn unitary_conjugation_keeps_spectrum(wa in prop::sample::select(vec![1.0, 4.0]), wb in prop::sample::select(vec![1.0, 4.0]), t in 0.0f64..3.0) {
        // the bare truncation is exactly unitary, so only roundoff remains
        let n = 8;
        let d = two_mode_abs_difference(&BasisSpec::two_mode(3, n)).unwrap();
        let ua = EvolutionCache::truncated(wa, n).unwrap().evolution(t).unwrap();
        let ub = EvolutionCache::truncated(wb, n).unwrap().evolution(t).unwrap();
        let conj = conjugate_two_mode(d.matrix(), &ua, &ub);
        let (before, _) = linalg::hermitian_eigh(d.matrix());
        let (after, _) = linalg::hermitian_eigh(&conj);
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}
