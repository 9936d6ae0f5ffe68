//! Exact propagation of the reduced density matrix for pure phase noise.
//!
//! Two independent closed-form routes: [`propagate_exact_gaussian`] uses the
//! damping/phase functionals valid for Gaussian (displaced-thermal) mode
//! states, and [`propagate_exact_charfn`] uses the per-mode characteristic
//! function product, valid for any factorized initial bath state. Both
//! evaluate each grid time directly — no time stepping, no error
//! accumulation.

use ndarray::Array2;
use num_complex::Complex64;

use crate::bath::{BathMode, DiscreteBath};
use crate::exec::{self, ExecMode};
use crate::linalg;
use crate::{Error, Result};

/// Diagonal system data: energies E_n and coupling eigenvalues X_n in the
/// shared eigenbasis of the system Hamiltonian and the coupling operator.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    energies: Vec<f64>,
    couplings: Vec<f64>,
}

impl SystemSpec {
    pub fn new(energies: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::Domain("system needs at least one level".to_string()));
        }
        if energies.len() != couplings.len() {
            return Err(Error::Domain(format!(
                "energies ({}) and couplings ({}) must have the same length",
                energies.len(),
                couplings.len()
            )));
        }
        for &e in &energies {
            if !e.is_finite() {
                return Err(Error::Domain(format!("energy must be finite, got {e}")));
            }
        }
        for &x in &couplings {
            if !x.is_finite() {
                return Err(Error::Domain(format!(
                    "coupling eigenvalue must be finite, got {x}"
                )));
            }
        }
        Ok(SystemSpec {
            energies,
            couplings,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.energies[n]
    }

    pub fn coupling(&self, n: usize) -> f64 {
        self.couplings[n]
    }
}

/// Validated density matrix: hermitian, unit trace, positive semidefinite
/// within numerical tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: Array2<Complex64>,
}

impl DensityMatrix {
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows != cols || rows == 0 {
            return Err(Error::InvalidDensityMatrix(format!(
                "expected a nonempty square matrix, got {rows}x{cols}"
            )));
        }
        for m in 0..rows {
            for n in m..rows {
                let asym = (data[[m, n]] - data[[n, m]].conj()).norm();
                if asym > 1e-12 {
                    return Err(Error::InvalidDensityMatrix(format!(
                        "not hermitian at ({m},{n}): asymmetry {asym:.3e}"
                    )));
                }
            }
        }
        let trace: Complex64 = (0..rows).map(|i| data[[i, i]]).sum();
        if (trace - Complex64::ONE).norm() > 1e-12 {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace must be 1, got {trace}"
            )));
        }
        let eigs = linalg::eigvalsh(&data)?;
        if let Some(min) = eigs.iter().cloned().reduce(f64::min) {
            if min < -1e-10 {
                return Err(Error::InvalidDensityMatrix(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(DensityMatrix { data })
    }

    /// Projector onto the normalized version of `amplitudes`.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
            return Err(Error::InvalidDensityMatrix(
                "state vector must have positive finite norm".to_string(),
            ));
        }
        let d = amplitudes.len();
        let data = Array2::from_shape_fn((d, d), |(m, n)| {
            amplitudes[m] * amplitudes[n].conj() / norm_sqr
        });
        DensityMatrix::new(data)
    }

    pub fn dim(&self) -> usize {
        self.data.dim().0
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[[m, n]]
    }
}

/// Initial state of one bath mode: a displaced thermal (Gaussian) state or
/// a finite statistical mixture of coherent states (the simplest
/// non-Gaussian family with a legal P-function).
#[derive(Clone, Debug, PartialEq)]
pub enum ModeState {
    Gaussian { nbar: f64, beta_bar: Complex64 },
    CoherentMixture { components: Vec<(f64, Complex64)> },
}

impl ModeState {
    pub fn gaussian(nbar: f64, beta_bar: Complex64) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(Error::Domain(format!(
                "occupation must be >= 0, got {nbar}"
            )));
        }
        if !beta_bar.re.is_finite() || !beta_bar.im.is_finite() {
            return Err(Error::Domain("displacement must be finite".to_string()));
        }
        Ok(ModeState::Gaussian { nbar, beta_bar })
    }

    pub fn coherent_mixture(components: Vec<(f64, Complex64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain(
                "a mixture needs at least one component".to_string(),
            ));
        }
        let mut total = 0.0;
        for (w, beta) in &components {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::Domain(format!(
                    "mixture weights must be > 0, got {w}"
                )));
            }
            if !beta.re.is_finite() || !beta.im.is_finite() {
                return Err(Error::Domain(
                    "mixture amplitudes must be finite".to_string(),
                ));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        Ok(ModeState::CoherentMixture { components })
    }

    /// First P-moment ⟨b⟩.
    pub fn mean(&self) -> Complex64 {
        match self {
            ModeState::Gaussian { beta_bar, .. } => *beta_bar,
            ModeState::CoherentMixture { components } => {
                components.iter().map(|(w, beta)| *w * *beta).sum()
            }
        }
    }

    /// Central second P-moment ⟨δb* δb⟩ (thermal-like fluctuation).
    pub fn occupation(&self) -> f64 {
        match self {
            ModeState::Gaussian { nbar, .. } => *nbar,
            ModeState::CoherentMixture { components } => {
                let mean = self.mean();
                components
                    .iter()
                    .map(|(w, beta)| *w * beta.norm_sqr())
                    .sum::<f64>()
                    - mean.norm_sqr()
            }
        }
    }

    /// Central anomalous second P-moment ⟨δb δb⟩; zero for Gaussian states,
    /// generally nonzero for mixtures.
    pub fn anomalous(&self) -> Complex64 {
        match self {
            ModeState::Gaussian { .. } => Complex64::ZERO,
            ModeState::CoherentMixture { components } => {
                let mean = self.mean();
                components
                    .iter()
                    .map(|(w, beta)| *w * beta * beta)
                    .sum::<Complex64>()
                    - mean * mean
            }
        }
    }

    /// Characteristic function χ(λ) = ⟨e^{λ b† - λ* b}⟩ over the P-function.
    pub fn characteristic_fn(&self, lam: Complex64) -> Complex64 {
        match self {
            ModeState::Gaussian { nbar, beta_bar } => (lam * beta_bar.conj()
                - lam.conj() * beta_bar
                - Complex64::new(lam.norm_sqr() * nbar, 0.0))
            .exp(),
            ModeState::CoherentMixture { components } => components
                .iter()
                .map(|(w, beta)| *w * (lam * beta.conj() - lam.conj() * beta).exp())
                .sum(),
        }
    }
}

/// Per-mode displacement accumulated by time t: g*(1 - e^{iωt})/ω.
pub fn displacement_amplitude(mode: &BathMode, t: f64) -> Complex64 {
    mode.g.conj() * (Complex64::ONE - Complex64::new(0.0, mode.omega * t).exp()) / mode.omega
}

/// Reduced-density-matrix samples on a time grid. `interaction` always
/// holds the interaction-picture values; `schrodinger` is filled by
/// [`to_schrodinger`].
#[derive(Clone, Debug)]
pub struct CoherenceTrajectory {
    pub times: Vec<f64>,
    pub interaction: Vec<DensityMatrix>,
    pub schrodinger: Option<Vec<DensityMatrix>>,
}

impl CoherenceTrajectory {
    /// Largest element-wise deviation between two trajectories on the same
    /// grid (interaction picture).
    pub fn max_deviation(&self, other: &CoherenceTrajectory) -> Result<f64> {
        if self.times.len() != other.times.len() {
            return Err(Error::Domain(format!(
                "grids differ in length: {} vs {}",
                self.times.len(),
                other.times.len()
            )));
        }
        for (a, b) in self.times.iter().zip(&other.times) {
            if a != b {
                return Err(Error::Domain(format!(
                    "grids differ starting at t = {a} vs {b}"
                )));
            }
        }
        let mut max = 0.0f64;
        for (a, b) in self.interaction.iter().zip(&other.interaction) {
            if a.dim() != b.dim() {
                return Err(Error::Domain(format!(
                    "dimension mismatch: {} vs {}",
                    a.dim(),
                    b.dim()
                )));
            }
            for m in 0..a.dim() {
                for n in 0..a.dim() {
                    max = max.max((a.get(m, n) - b.get(m, n)).norm());
                }
            }
        }
        Ok(max)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Domain("time grid must be nonempty".to_string()));
    }
    for &t in times {
        if !t.is_finite() {
            return Err(Error::Domain(format!("grid time must be finite, got {t}")));
        }
    }
    Ok(())
}

fn check_dims(system: &SystemSpec, rho0: &DensityMatrix) -> Result<()> {
    if system.dim() != rho0.dim() {
        return Err(Error::Domain(format!(
            "system dimension {} does not match density matrix dimension {}",
            system.dim(),
            rho0.dim()
        )));
    }
    Ok(())
}

fn assemble(
    system: &SystemSpec,
    rho0: &DensityMatrix,
    factor: impl Fn(usize, usize) -> Complex64,
) -> Result<DensityMatrix> {
    let d = system.dim();
    let mut data = Array2::from_elem((d, d), Complex64::ZERO);
    for m in 0..d {
        data[[m, m]] = rho0.get(m, m);
        for n in (m + 1)..d {
            let value = rho0.get(m, n) * factor(m, n);
            data[[m, n]] = value;
            data[[n, m]] = value.conj();
        }
    }
    DensityMatrix::new(data)
}

/// Exact Gaussian-bath propagation: each coherence is multiplied by
/// exp(-(X_m-X_n)² Λ(t) + i [(X_m²-X_n²) φ(t) + (X_m-X_n) ψ(t)]).
pub fn propagate_exact_gaussian(
    system: &SystemSpec,
    bath: &DiscreteBath,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<CoherenceTrajectory> {
    propagate_exact_gaussian_with(ExecMode::default(), system, bath, rho0, times)
}

pub fn propagate_exact_gaussian_with(
    mode: ExecMode,
    system: &SystemSpec,
    bath: &DiscreteBath,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<CoherenceTrajectory> {
    check_dims(system, rho0)?;
    check_times(times)?;
    let interaction = exec::try_map_indexed(mode, times.len(), |i| {
        let t = times[i];
        let lambda = bath.damping_amplitude(t);
        let phi = bath.backaction_phase(t);
        let psi = bath.displacement_phase(t);
        assemble(system, rho0, |m, n| {
            let xm = system.coupling(m);
            let xn = system.coupling(n);
            let dx = xm - xn;
            let dx2 = xm * xm - xn * xn;
            Complex64::new(-dx * dx * lambda, dx2 * phi + dx * psi).exp()
        })
    })?;
    Ok(CoherenceTrajectory {
        times: times.to_vec(),
        interaction,
        schrodinger: None,
    })
}

/// Exact propagation for a thermal continuum bath: same closed form as the
/// Gaussian discrete case with the functionals evaluated by quadrature and
/// a vanishing displacement phase.
pub fn propagate_exact_spectral(
    system: &SystemSpec,
    bath: &crate::bath::SpectralBath,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<CoherenceTrajectory> {
    propagate_exact_spectral_with(ExecMode::default(), system, bath, rho0, times)
}

pub fn propagate_exact_spectral_with(
    mode: ExecMode,
    system: &SystemSpec,
    bath: &crate::bath::SpectralBath,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<CoherenceTrajectory> {
    check_dims(system, rho0)?;
    check_times(times)?;
    let interaction = exec::try_map_indexed(mode, times.len(), |i| {
        let t = times[i];
        let lambda = bath.damping_amplitude(t)?;
        let phi = bath.backaction_phase(t)?;
        assemble(system, rho0, |m, n| {
            let xm = system.coupling(m);
            let xn = system.coupling(n);
            let dx = xm - xn;
            let dx2 = xm * xm - xn * xn;
            Complex64::new(-dx * dx * lambda, dx2 * phi).exp()
        })
    })?;
    Ok(CoherenceTrajectory {
        times: times.to_vec(),
        interaction,
        schrodinger: None,
    })
}

/// Exact propagation for any factorized bath state, via the per-mode
/// characteristic functions: the coherence factor is
/// e^{i(X_m²-X_n²)φ - (X_m-X_n)² Σ|z_k|²/2} Π_k χ_k(z_k (X_m-X_n)).
///
/// The paired [`ModeState`] is authoritative for each mode's initial state;
/// the `nbar`/`beta_bar` fields of the [`BathMode`] itself are not read.
pub fn propagate_exact_charfn(
    system: &SystemSpec,
    modes: &[(BathMode, ModeState)],
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<CoherenceTrajectory> {
    propagate_exact_charfn_with(ExecMode::default(), system, modes, rho0, times)
}

pub fn propagate_exact_charfn_with(
    mode: ExecMode,
    system: &SystemSpec,
    modes: &[(BathMode, ModeState)],
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<CoherenceTrajectory> {
    check_dims(system, rho0)?;
    check_times(times)?;
    let coupling_bath = DiscreteBath::new(modes.iter().map(|(m, _)| m.clone()).collect());
    let interaction = exec::try_map_indexed(mode, times.len(), |i| {
        let t = times[i];
        let phi = coupling_bath.backaction_phase(t);
        let z: Vec<Complex64> = modes
            .iter()
            .map(|(m, _)| displacement_amplitude(m, t))
            .collect();
        let sum_z2: f64 = z.iter().map(|zk| zk.norm_sqr()).sum();
        assemble(system, rho0, |m, n| {
            let xm = system.coupling(m);
            let xn = system.coupling(n);
            let dx = xm - xn;
            let dx2 = xm * xm - xn * xn;
            let mut factor = Complex64::new(-0.5 * dx * dx * sum_z2, dx2 * phi).exp();
            for ((_, state), zk) in modes.iter().zip(&z) {
                factor *= state.characteristic_fn(*zk * dx);
            }
            factor
        })
    })?;
    Ok(CoherenceTrajectory {
        times: times.to_vec(),
        interaction,
        schrodinger: None,
    })
}

/// Fill in the Schrödinger-picture samples by restoring the free phases
/// e^{-i(E_m-E_n)t} on each element.
pub fn to_schrodinger(
    traj: &CoherenceTrajectory,
    system: &SystemSpec,
) -> Result<CoherenceTrajectory> {
    let d = system.dim();
    let mut schrodinger = Vec::with_capacity(traj.interaction.len());
    for (t, rho) in traj.times.iter().zip(&traj.interaction) {
        if rho.dim() != d {
            return Err(Error::Domain(format!(
                "system dimension {} does not match trajectory dimension {}",
                d,
                rho.dim()
            )));
        }
        let data = Array2::from_shape_fn((d, d), |(m, n)| {
            rho.get(m, n) * Complex64::new(0.0, -(system.energy(m) - system.energy(n)) * t).exp()
        });
        schrodinger.push(DensityMatrix::new(data)?);
    }
    Ok(CoherenceTrajectory {
        times: traj.times.clone(),
        interaction: traj.interaction.clone(),
        schrodinger: Some(schrodinger),
    })
}

/// Structural checks shared by every engine's output: constant diagonals,
/// hermiticity (already enforced per matrix), and no coherence growth
/// relative to the initial matrix.
pub fn check_trajectory_invariants(traj: &CoherenceTrajectory, rho0: &DensityMatrix) -> Result<()> {
    for (t, rho) in traj.times.iter().zip(&traj.interaction) {
        for n in 0..rho.dim() {
            let drift = (rho.get(n, n) - rho0.get(n, n)).norm();
            if drift > 1e-12 {
                return Err(Error::Domain(format!(
                    "population ({n},{n}) drifted by {drift:.3e} at t = {t}"
                )));
            }
        }
        for m in 0..rho.dim() {
            for n in 0..rho.dim() {
                let now = rho.get(m, n).norm();
                let initially = rho0.get(m, n).norm();
                if now > initially + 1e-12 {
                    return Err(Error::Domain(format!(
                        "coherence ({m},{n}) grew from {initially:.6e} to {now:.6e} at t = {t}"
                    )));
                }
            }
        }
    }
    Ok(())
}
