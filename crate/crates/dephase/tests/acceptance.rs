//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line with its measured value and pinned tolerance.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use dephase::bath::{BathMode, BathModel, DiscreteBath, SpectralBath, SpectralDensity};
use dephase::cumulant::{cumulant_contribution, cumulant_report};
use dephase::exact::{
    check_trajectory_invariants, propagate_exact_charfn, propagate_exact_gaussian, DensityMatrix,
    ModeState, SystemSpec,
};
use dephase::fock::{prepare_bath_state, FockOracle, TruncatedBathSpec};
use dephase::linalg::eigvalsh;
use dephase::tcl::{
    bloch_redfield_choi, integrate_tcl2, markov_rates, MarkovRates, MomentBath, DEFAULT_ATOL,
};
use dephase::Error;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Deterministic 5-mode Gaussian bath inside the pinned parameter box:
/// ω ∈ [0.5, 3], |g| ≤ 0.3, n̄ ≤ 1, complex displacements.
fn five_mode_bath(seed: u64) -> DiscreteBath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = (0..5)
        .map(|_| {
            let omega = rng.random_range(0.5..3.0);
            let magnitude = rng.random_range(0.05..0.3);
            let angle = rng.random_range(0.0..2.0 * PI);
            let g = Complex64::from_polar(magnitude, angle);
            let nbar = rng.random_range(0.0..1.0);
            let beta = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            BathMode::new(omega, g, nbar, beta).unwrap()
        })
        .collect();
    DiscreteBath::new(modes)
}

fn three_level() -> SystemSpec {
    SystemSpec::new(vec![0.0, 0.7, 1.3], vec![1.0, 0.0, -1.0]).unwrap()
}

fn qubit() -> SystemSpec {
    SystemSpec::new(vec![0.0, 1.0], vec![1.0, -1.0]).unwrap()
}

fn coherent_state(dim: usize) -> DensityMatrix {
    DensityMatrix::pure(&vec![c(1.0, 0.0); dim]).unwrap()
}

fn mixture_preparation() -> (BathMode, ModeState) {
    let mode = BathMode::new(1.0, c(0.1, 0.0), 0.0, Complex64::ZERO).unwrap();
    let state = ModeState::coherent_mixture(vec![(0.5, c(2.0, 0.0)), (0.5, c(-2.0, 0.0))]).unwrap();
    (mode, state)
}

fn ohmic(temperature: f64) -> SpectralBath {
    SpectralBath::new(
        SpectralDensity::OhmicExpCutoff {
            alpha: 0.1,
            omega_c: 5.0,
        },
        temperature,
    )
    .unwrap()
}

fn report(name: &str, pass: bool, detail: String) {
    println!("{name} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name} failed: {detail}");
}

#[test]
fn a1_tcl2_reproduces_the_exact_solution_for_a_gaussian_bath() {
    let system = three_level();
    let bath = five_mode_bath(101);
    let rho0 = coherent_state(3);
    let times = linspace(0.0, 20.0, 400);
    let exact = propagate_exact_gaussian(&system, &bath, &rho0, &times).unwrap();
    let tcl = integrate_tcl2(&system, &bath, &rho0, &times, 1e-10, DEFAULT_ATOL).unwrap();
    let deviation = exact.max_deviation(&tcl).unwrap();
    report(
        "A1",
        deviation <= 1e-8,
        format!("exact-vs-TCL2 max element deviation {deviation:.3e} (tolerance 1e-8)"),
    );
}

#[test]
fn a2_fock_oracle_reproduces_the_exact_solution() {
    let system = qubit();
    let mode = BathMode::new(1.0, c(0.1, 0.0), 0.5, c(0.5, 0.0)).unwrap();
    let state = ModeState::gaussian(0.5, c(0.5, 0.0)).unwrap();
    // Cutoff chosen by the tail criterion itself: grow until the discarded
    // occupation weight is acceptable.
    let mut n_max = 8;
    loop {
        match prepare_bath_state(&state, n_max) {
            Ok(_) => break,
            Err(Error::TruncationTail { required, .. }) => n_max = required,
            Err(other) => panic!("unexpected preparation error: {other}"),
        }
    }
    assert!(
        (20..=64).contains(&n_max),
        "tail criterion produced an implausible cutoff {n_max}"
    );
    let spec = TruncatedBathSpec::new(vec![mode.clone()], vec![n_max]).unwrap();
    let oracle = FockOracle::new(system.clone(), spec).unwrap();
    let rho0 = coherent_state(2);
    let times = linspace(0.0, 10.0, 101);
    let fock = oracle.trajectory(&rho0, &[state], &times).unwrap();
    let bath = DiscreteBath::new(vec![mode]);
    let exact = propagate_exact_gaussian(&system, &bath, &rho0, &times).unwrap();
    let deviation = exact.max_deviation(&fock).unwrap();
    report(
        "A2",
        deviation <= 1e-6,
        format!("exact-vs-oracle max deviation {deviation:.3e} at cutoff {n_max} (tolerance 1e-6)"),
    );
}

#[test]
fn a3_functional_derivatives_match_the_kernel_integrals() {
    // d/dt of the damping amplitude, backaction phase, and displacement phase
    // against the running kernel integrals they integrate:
    //   Λ̇ = ∫₀ᵗ S,   φ̇ = -∫₀ᵗ A,   ψ̇ = -⟨ξ̃(t)⟩.
    let h = 1e-3;
    let stencil = |f: &dyn Fn(f64) -> f64, t: f64| {
        (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
    };
    let mut worst: f64 = 0.0;
    for seed in [7u64, 8, 9] {
        let bath = five_mode_bath(seed);
        let probes = [0.4, 1.1, 2.7, 6.3];
        let pairs: Vec<(Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>)> = vec![
            (
                Box::new(|t| bath.damping_amplitude(t)),
                Box::new(|t| bath.sym_kernel_integral(t)),
            ),
            (
                Box::new(|t| bath.backaction_phase(t)),
                Box::new(|t| -bath.antisym_kernel_integral(t)),
            ),
            (
                Box::new(|t| bath.displacement_phase(t)),
                Box::new(|t| -bath.mean_coordinate(t)),
            ),
        ];
        for (functional, rate) in &pairs {
            // Scale of the rate over the probed window, for a meaningful
            // relative comparison even near isolated zeros.
            let scale = probes.iter().map(|&t| rate(t).abs()).fold(0.0f64, f64::max);
            for &t in &probes {
                let relative = (stencil(functional.as_ref(), t) - rate(t)).abs() / scale;
                worst = worst.max(relative);
            }
        }
    }
    report(
        "A3",
        worst <= 1e-6,
        format!("worst relative derivative mismatch {worst:.3e} at spacing 1e-3 (tolerance 1e-6)"),
    );
}

#[test]
fn a4_ohmic_bath_anchors() {
    // Closed forms for the exponential-cutoff ohmic density at T = 0:
    // Λ(t) = (α/2)ln(1 + ω_c²t²), φ(t) = α[ω_c t − arctan(ω_c t)].
    let cold = ohmic(0.0);
    let alpha = 0.1;
    let omega_c = 5.0;
    let t = 2.0;
    let lambda = cold.damping_amplitude(t).unwrap();
    let lambda_closed = 0.5 * alpha * (1.0 + omega_c * omega_c * t * t).ln();
    let phi = cold.backaction_phase(t).unwrap();
    let phi_closed = alpha * (omega_c * t - (omega_c * t).atan());
    let lambda_anchor = (lambda - 0.230756).abs();
    let lambda_err = (lambda - lambda_closed).abs();
    let phi_err = (phi - phi_closed).abs();

    let warm = ohmic(2.0);
    let rates = markov_rates(&BathModel::Spectral(warm)).unwrap();
    let gamma_expected = 2.0 * PI * alpha * 2.0;
    let gamma_rel = (rates.gamma - gamma_expected).abs() / gamma_expected;
    let shift_err = (rates.shift - (-alpha * omega_c)).abs();
    let cold_rates = markov_rates(&BathModel::Spectral(ohmic(0.0))).unwrap();

    let pass = lambda_anchor <= 1e-5
        && lambda_err <= 1e-5
        && phi_err <= 1e-5
        && gamma_rel <= 0.01
        && shift_err <= 1e-4
        && cold_rates.gamma == 0.0;
    report(
        "A4",
        pass,
        format!(
            "Λ(2)={lambda:.6} (anchor 0.230756±1e-5, closed-form gap {lambda_err:.1e}), \
             φ(2)={phi:.8} (closed-form gap {phi_err:.1e}, tolerance 1e-5), \
             γ(T=2)={:.6} (2παT±1%, rel {gamma_rel:.1e}), shift={:.6} (-0.5±1e-4), γ(T=0)={}",
            rates.gamma, rates.shift, cold_rates.gamma
        ),
    );
}

#[test]
fn a5_non_gaussian_preparation_breaks_tcl2() {
    let system = qubit();
    let (mode, state) = mixture_preparation();
    let preparation = vec![(mode, state.clone())];
    let rho0 = coherent_state(2);
    let times = linspace(0.0, 2.0 * PI, 201);
    let exact = propagate_exact_charfn(&system, &preparation, &rho0, &times).unwrap();
    let kernels = MomentBath::from_states(&preparation);
    let tcl = integrate_tcl2(&system, &kernels, &rho0, &times, 1e-10, DEFAULT_ATOL).unwrap();
    let breakdown = exact.max_deviation(&tcl).unwrap();

    // Gaussian preparations terminate at second order...
    let gaussian_bath = five_mode_bath(55);
    let gaussian_states: Vec<(BathMode, ModeState)> = gaussian_bath
        .modes
        .iter()
        .map(|m| (m.clone(), ModeState::gaussian(m.nbar, m.beta_bar).unwrap()))
        .collect();
    let mut gaussian_tail: f64 = 0.0;
    for &t in &[0.9, 2.5, 6.0] {
        let oc2 = cumulant_contribution(&three_level(), &gaussian_states, 0, 1, t, 2)
            .unwrap()
            .norm();
        for order in [3, 4] {
            let oc = cumulant_contribution(&three_level(), &gaussian_states, 0, 1, t, order)
                .unwrap()
                .norm();
            gaussian_tail = gaussian_tail.max(oc / oc2.max(1e-30));
        }
    }

    // ...while the mixture keeps a macroscopic fourth cumulant somewhere on
    // the period.
    let mut kappa4_max: f64 = 0.0;
    for &t in &times {
        let oc4 = cumulant_contribution(&system, &preparation, 0, 1, t, 4).unwrap();
        kappa4_max = kappa4_max.max((oc4 * 24.0).norm());
    }

    // Fourth-order partial sums shrink the gap to the exact log-coherence.
    // The instant t = π itself is degenerate for this preparation: the
    // accumulated displacement is purely real there, every per-component
    // linear functional vanishes, and exact, second-order, and fourth-order
    // values all coincide to machine precision — nothing is left to reduce.
    // The reduction is therefore asserted as a strict inequality at the
    // quarter period and for the running maximum over (0, π].
    let gaps = |t: f64| {
        let rep = cumulant_report(&system, &preparation, 0, 1, t, 4).unwrap();
        let through2: Complex64 = rep.order_contributions[..2].iter().sum();
        let through4: Complex64 = rep.order_contributions.iter().sum();
        (
            (rep.exact_log - through2).norm(),
            (rep.exact_log - through4).norm(),
        )
    };
    let (gap2_quarter, gap4_quarter) = gaps(FRAC_PI_2);
    let mut gap2_window: f64 = 0.0;
    let mut gap4_window: f64 = 0.0;
    for i in 1..=100 {
        let (g2, g4) = gaps(PI * i as f64 / 100.0);
        gap2_window = gap2_window.max(g2);
        gap4_window = gap4_window.max(g4);
    }
    let (gap2_degenerate, gap4_degenerate) = gaps(PI);

    let pass = breakdown > 1e-3
        && gaussian_tail <= 1e-12
        && kappa4_max > 1e-3
        && gap4_quarter < gap2_quarter
        && gap4_window < gap2_window
        && gap2_degenerate < 1e-12
        && gap4_degenerate < 1e-12;
    report(
        "A5",
        pass,
        format!(
            "exact-vs-TCL2 mixture deviation {breakdown:.3e} (> 1e-3), Gaussian tail ratio \
             {gaussian_tail:.1e} (<= 1e-12), max |κ₄| {kappa4_max:.4} (> 1e-3), gap \
             {gap2_quarter:.4}→{gap4_quarter:.4} at t=π/2 and {gap2_window:.4}→{gap4_window:.4} \
             over (0,π] (t=π itself degenerate: both gaps {gap2_degenerate:.1e})"
        ),
    );
}

#[test]
fn a6_structural_invariants_hold_on_every_engine_output() {
    let system = three_level();
    let bath = five_mode_bath(101);
    let rho0 = coherent_state(3);
    let times = linspace(0.0, 12.0, 121);
    let exact = propagate_exact_gaussian(&system, &bath, &rho0, &times).unwrap();
    let tcl = integrate_tcl2(&system, &bath, &rho0, &times, 1e-10, DEFAULT_ATOL).unwrap();
    check_trajectory_invariants(&exact, &rho0).unwrap();
    check_trajectory_invariants(&tcl, &rho0).unwrap();

    let qubit = qubit();
    let (mode, state) = mixture_preparation();
    let preparation = vec![(mode.clone(), state.clone())];
    let qubit_rho0 = coherent_state(2);
    let mixture_times = linspace(0.0, 2.0 * PI, 101);
    let charfn = propagate_exact_charfn(&qubit, &preparation, &qubit_rho0, &mixture_times).unwrap();
    let kernels = MomentBath::from_states(&preparation);
    let mixture_tcl = integrate_tcl2(
        &qubit,
        &kernels,
        &qubit_rho0,
        &mixture_times,
        1e-10,
        DEFAULT_ATOL,
    )
    .unwrap();
    check_trajectory_invariants(&charfn, &qubit_rho0).unwrap();
    check_trajectory_invariants(&mixture_tcl, &qubit_rho0).unwrap();

    let spec = TruncatedBathSpec::new(vec![mode], vec![24]).unwrap();
    let oracle = FockOracle::new(qubit.clone(), spec).unwrap();
    let fock = oracle
        .trajectory(&qubit_rho0, &[state], &linspace(0.0, 4.0, 21))
        .unwrap();
    check_trajectory_invariants(&fock, &qubit_rho0).unwrap();

    // Constant-rate limit: the map's Choi matrix must stay PSD for every
    // admissible rate pair, i.e. the semigroup is completely positive.
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut min_eig = f64::INFINITY;
    for dim in 2..=4usize {
        for _ in 0..8 {
            let energies: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let couplings: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            let sys = SystemSpec::new(energies, couplings).unwrap();
            let rates = MarkovRates {
                gamma: rng.random_range(0.0..2.0),
                shift: rng.random_range(-1.0..1.0),
            };
            let t = rng.random_range(0.0..5.0);
            let choi = bloch_redfield_choi(&sys, &rates, t);
            let eigs = eigvalsh(&choi).unwrap();
            min_eig = min_eig.min(eigs.iter().cloned().fold(f64::INFINITY, f64::min));
        }
    }
    report(
        "A6",
        min_eig >= -1e-10,
        format!(
            "diagonals, hermiticity, and contraction verified on all five engine outputs; \
             minimum Choi eigenvalue {min_eig:.3e} (>= -1e-10)"
        ),
    );
}

#[test]
fn a7_discretized_continuum_reproduces_spectral_damping() {
    let mut worst: f64 = 0.0;
    for temperature in [0.0, 2.0] {
        let spectral = ohmic(temperature);
        let discrete = spectral.discretize(2000, 75.0).unwrap();
        for &t in &linspace(0.0, 10.0, 101) {
            let reference = spectral.damping_amplitude(t).unwrap();
            let approximated = discrete.damping_amplitude(t);
            worst = worst.max((reference - approximated).abs());
        }
    }
    report(
        "A7",
        worst <= 1e-3,
        format!(
            "2000-mode discretization vs continuum damping: max gap {worst:.3e} \
             on t <= 10 (tolerance 1e-3)"
        ),
    );
}
