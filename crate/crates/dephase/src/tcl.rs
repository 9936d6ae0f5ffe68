//! Second-order time-convolutionless (time-local) master equation with
//! time-dependent coefficients, plus its Markovian Bloch-Redfield limit.
//!
//! The generator needs three scalars per time — the mean bath coordinate
//! and the running integrals of the symmetric/antisymmetric kernels —
//! abstracted as [`DephasingKernels`] so discrete baths (closed forms),
//! continuum baths (quadrature) and moment-matched non-Gaussian states all
//! drive the same solver. The element ODEs decouple for pure dephasing and
//! are integrated independently with an embedded adaptive Runge-Kutta pair;
//! agreement with the exact engine is a genuine numerical check, not shared
//! code.

use ndarray::Array2;
use num_complex::Complex64;

use crate::bath::{BathMode, BathModel, DiscreteBath, SpectralBath};
use crate::exact::{CoherenceTrajectory, DensityMatrix, ModeState, SystemSpec};
use crate::exec::{self, ExecMode};
use crate::{ode, Error, Result};

pub const DEFAULT_RTOL: f64 = 1e-10;
pub const DEFAULT_ATOL: f64 = 1e-14;

/// The three time-dependent scalars entering the second-order generator.
pub trait DephasingKernels: Sync {
    /// Mean bath coordinate ⟨ξ̃(t)⟩.
    fn mean_coordinate(&self, t: f64) -> f64;
    /// ∫₀ᵗ S(t, t-τ) dτ.
    fn sym_kernel_integral(&self, t: f64) -> Result<f64>;
    /// ∫₀ᵗ A(t, t-τ) dτ.
    fn antisym_kernel_integral(&self, t: f64) -> Result<f64>;
}

impl DephasingKernels for DiscreteBath {
    fn mean_coordinate(&self, t: f64) -> f64 {
        DiscreteBath::mean_coordinate(self, t)
    }
    fn sym_kernel_integral(&self, t: f64) -> Result<f64> {
        Ok(DiscreteBath::sym_kernel_integral(self, t))
    }
    fn antisym_kernel_integral(&self, t: f64) -> Result<f64> {
        Ok(DiscreteBath::antisym_kernel_integral(self, t))
    }
}

impl DephasingKernels for SpectralBath {
    fn mean_coordinate(&self, _t: f64) -> f64 {
        0.0
    }
    fn sym_kernel_integral(&self, t: f64) -> Result<f64> {
        SpectralBath::sym_kernel_integral(self, t)
    }
    fn antisym_kernel_integral(&self, t: f64) -> Result<f64> {
        SpectralBath::antisym_kernel_integral(self, t)
    }
}

/// One mode reduced to the moments the second-order generator can see:
/// mean displacement, thermal-like fluctuation ⟨δb*δb⟩ and anomalous
/// fluctuation ⟨δbδb⟩ of its initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMode {
    pub omega: f64,
    pub g: Complex64,
    pub mean: Complex64,
    pub occupation: f64,
    pub anomalous: Complex64,
}

/// Bath description carrying only first and second P-moments per mode.
/// This is exactly the information a second-order master equation retains;
/// for non-Gaussian states it is a deliberate truncation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MomentBath {
    pub modes: Vec<MomentMode>,
}

impl MomentBath {
    /// Gaussian baths map losslessly: anomalous moments vanish.
    pub fn from_discrete(bath: &DiscreteBath) -> Self {
        MomentBath {
            modes: bath
                .modes
                .iter()
                .map(|m| MomentMode {
                    omega: m.omega,
                    g: m.g,
                    mean: m.beta_bar,
                    occupation: m.nbar,
                    anomalous: Complex64::ZERO,
                })
                .collect(),
        }
    }

    /// Keep each state's exact first and second P-moments and discard the
    /// rest — the truncation that makes TCL2 inexact for non-Gaussian
    /// states.
    pub fn from_states(modes: &[(BathMode, ModeState)]) -> Self {
        MomentBath {
            modes: modes
                .iter()
                .map(|(m, state)| MomentMode {
                    omega: m.omega,
                    g: m.g,
                    mean: state.mean(),
                    occupation: state.occupation(),
                    anomalous: state.anomalous(),
                })
                .collect(),
        }
    }

    /// Time integral of [`sym_kernel_integral`](DephasingKernels), i.e. the
    /// moment-matched damping amplitude. Reduces to the Gaussian closed form
    /// when every anomalous moment vanishes.
    pub fn damping_amplitude(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let w2 = m.omega * m.omega;
                let stationary =
                    m.g.norm_sqr() * (1.0 - (m.omega * t).cos()) * (1.0 + 2.0 * m.occupation) / w2;
                let ramp = Complex64::ONE - Complex64::new(0.0, -m.omega * t).exp();
                stationary - (m.g * m.g * m.anomalous * ramp * ramp).re / w2
            })
            .sum()
    }

    /// Time integral of minus [`antisym_kernel_integral`](DephasingKernels):
    /// the backaction phase, independent of the bath state.
    pub fn backaction_phase(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| m.g.norm_sqr() * (m.omega * t - (m.omega * t).sin()) / (m.omega * m.omega))
            .sum()
    }

    /// Time integral of minus [`mean_coordinate`](DephasingKernels): the
    /// displacement phase driven by the modes' mean amplitudes.
    pub fn displacement_phase(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let ramp = Complex64::ONE - Complex64::new(0.0, -m.omega * t).exp();
                -2.0 * (m.g * m.mean * ramp).im / m.omega
            })
            .sum()
    }
}

impl DephasingKernels for MomentBath {
    fn mean_coordinate(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| 2.0 * (m.g * m.mean * Complex64::new(0.0, -m.omega * t).exp()).re)
            .sum()
    }

    fn sym_kernel_integral(&self, t: f64) -> Result<f64> {
        Ok(self
            .modes
            .iter()
            .map(|m| {
                let stationary =
                    m.g.norm_sqr() * (m.omega * t).sin() / m.omega * (1.0 + 2.0 * m.occupation);
                // The anomalous moment makes the S kernel non-stationary;
                // its tau-integral has this closed form.
                let osc = Complex64::new(0.0, -m.omega * t).exp()
                    - Complex64::new(0.0, -2.0 * m.omega * t).exp();
                let anomalous = 2.0 / m.omega * (m.g * m.g * m.anomalous * osc).im;
                stationary + anomalous
            })
            .sum())
    }

    fn antisym_kernel_integral(&self, t: f64) -> Result<f64> {
        Ok(-self
            .modes
            .iter()
            .map(|m| {
                let half = (0.5 * m.omega * t).sin();
                m.g.norm_sqr() * 2.0 * half * half / m.omega
            })
            .sum::<f64>())
    }
}

/// Generator value for one matrix element:
/// -i(X_m-X_n)⟨ξ̃⟩ - (X_m-X_n)²∫S - i(X_m²-X_n²)∫A.
pub fn tcl2_rate<K: DephasingKernels + ?Sized>(
    system: &SystemSpec,
    kernels: &K,
    m: usize,
    n: usize,
    t: f64,
) -> Result<Complex64> {
    let d = system.dim();
    if m >= d || n >= d {
        return Err(Error::Domain(format!(
            "element ({m},{n}) out of range for dimension {d}"
        )));
    }
    let xm = system.coupling(m);
    let xn = system.coupling(n);
    let dx = xm - xn;
    let dx2 = xm * xm - xn * xn;
    if dx == 0.0 && dx2 == 0.0 {
        return Ok(Complex64::ZERO);
    }
    let mean = kernels.mean_coordinate(t);
    let s_int = kernels.sym_kernel_integral(t)?;
    let a_int = kernels.antisym_kernel_integral(t)?;
    Ok(Complex64::new(-dx * dx * s_int, -(dx * mean + dx2 * a_int)))
}

/// Full matrix of generator values at one time.
#[derive(Clone, Debug)]
pub struct TclRates {
    pub t: f64,
    pub drift: Array2<Complex64>,
}

pub fn tcl2_rates<K: DephasingKernels + ?Sized>(
    system: &SystemSpec,
    kernels: &K,
    t: f64,
) -> Result<TclRates> {
    let d = system.dim();
    let mut drift = Array2::from_elem((d, d), Complex64::ZERO);
    for m in 0..d {
        for n in 0..d {
            drift[[m, n]] = tcl2_rate(system, kernels, m, n, t)?;
        }
    }
    Ok(TclRates { t, drift })
}

/// Operator form of the generator:
/// -i⟨ξ̃⟩[X, ρ] - ∫S · [X, [X, ρ]] - i∫A · [X, {X, ρ}],
/// evaluated with genuine matrix products as an independent cross-check of
/// the element-wise rates.
pub fn apply_generator<K: DephasingKernels + ?Sized>(
    system: &SystemSpec,
    kernels: &K,
    t: f64,
    rho: &Array2<Complex64>,
) -> Result<Array2<Complex64>> {
    let d = system.dim();
    if rho.dim() != (d, d) {
        return Err(Error::Domain(format!(
            "state shape {:?} does not match system dimension {d}",
            rho.dim()
        )));
    }
    let x = Array2::from_shape_fn((d, d), |(i, j)| {
        if i == j {
            Complex64::new(system.coupling(i), 0.0)
        } else {
            Complex64::ZERO
        }
    });
    let mean = kernels.mean_coordinate(t);
    let s_int = kernels.sym_kernel_integral(t)?;
    let a_int = kernels.antisym_kernel_integral(t)?;

    let commutator = x.dot(rho) - rho.dot(&x);
    let double_commutator = x.dot(&commutator) - commutator.dot(&x);
    let anticommutator = x.dot(rho) + rho.dot(&x);
    let mixed = x.dot(&anticommutator) - anticommutator.dot(&x);

    let i = Complex64::I;
    Ok(
        commutator.mapv(|v| -i * mean * v) - double_commutator.mapv(|v| s_int * v)
            + mixed.mapv(|v| -i * a_int * v),
    )
}

fn check_grid_from_zero(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Domain("time grid must be nonempty".to_string()));
    }
    if times[0] != 0.0 {
        return Err(Error::Domain(format!(
            "integration grid must start at t = 0, got {}",
            times[0]
        )));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Domain(format!(
                "grid times must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Integrate the decoupled element ODEs ρ̇_mn = rate_mn(t) ρ_mn across the
/// grid. Diagonals are constants of motion and are carried through exactly.
pub fn integrate_tcl2<K: DephasingKernels + ?Sized>(
    system: &SystemSpec,
    kernels: &K,
    rho0: &DensityMatrix,
    times: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<CoherenceTrajectory> {
    integrate_tcl2_with(
        ExecMode::default(),
        system,
        kernels,
        rho0,
        times,
        rtol,
        atol,
    )
}

pub fn integrate_tcl2_with<K: DephasingKernels + ?Sized>(
    mode: ExecMode,
    system: &SystemSpec,
    kernels: &K,
    rho0: &DensityMatrix,
    times: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<CoherenceTrajectory> {
    let d = system.dim();
    if rho0.dim() != d {
        return Err(Error::Domain(format!(
            "system dimension {d} does not match density matrix dimension {}",
            rho0.dim()
        )));
    }
    check_grid_from_zero(times)?;

    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|m| ((m + 1)..d).map(move |n| (m, n)))
        .collect();
    let solutions = exec::try_map_indexed(mode, pairs.len(), |k| {
        let (m, n) = pairs[k];
        ode::integrate_grid(
            |t, y| Ok(tcl2_rate(system, kernels, m, n, t)? * y),
            rho0.get(m, n),
            times,
            rtol,
            atol,
        )
    })?;

    let mut interaction = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let mut data = Array2::from_elem((d, d), Complex64::ZERO);
        for m in 0..d {
            data[[m, m]] = rho0.get(m, m);
        }
        for (k, &(m, n)) in pairs.iter().enumerate() {
            data[[m, n]] = solutions[k][i];
            data[[n, m]] = solutions[k][i].conj();
        }
        interaction.push(DensityMatrix::new(data)?);
    }
    Ok(CoherenceTrajectory {
        times: times.to_vec(),
        interaction,
        schrodinger: None,
    })
}

/// Markov-limit coefficients: `gamma` is the zero-frequency decay rate
/// π·lim_{ω→0} J(ω) coth(ω/2T); `shift` the static frequency shift
/// -∫ J(ω)/ω dω.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarkovRates {
    pub gamma: f64,
    pub shift: f64,
}

pub fn markov_rates(bath: &BathModel) -> Result<MarkovRates> {
    match bath {
        BathModel::Discrete(_) => Err(Error::UnsupportedModel(
            "the Markov limit needs a continuum spectral density; a finite mode set \
             never decorrelates"
                .to_string(),
        )),
        BathModel::Spectral(spectral) => {
            let gamma = if spectral.temperature == 0.0 {
                0.0
            } else {
                2.0 * std::f64::consts::PI * spectral.temperature * spectral.slope_at_zero()
            };
            let shift = -spectral.inverse_frequency_moment()?;
            Ok(MarkovRates { gamma, shift })
        }
    }
}

/// Closed-form constant-rate propagation:
/// ρ_mn(t) = ρ_mn(0) exp{[-(X_m-X_n)²γ - i(X_m²-X_n²)σ] t}.
pub fn integrate_bloch_redfield(
    system: &SystemSpec,
    rates: &MarkovRates,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<CoherenceTrajectory> {
    let d = system.dim();
    if rho0.dim() != d {
        return Err(Error::Domain(format!(
            "system dimension {d} does not match density matrix dimension {}",
            rho0.dim()
        )));
    }
    if times.is_empty() {
        return Err(Error::Domain("time grid must be nonempty".to_string()));
    }
    let mut interaction = Vec::with_capacity(times.len());
    for &t in times {
        let mut data = Array2::from_elem((d, d), Complex64::ZERO);
        for m in 0..d {
            data[[m, m]] = rho0.get(m, m);
            for n in (m + 1)..d {
                let xm = system.coupling(m);
                let xn = system.coupling(n);
                let dx = xm - xn;
                let dx2 = xm * xm - xn * xn;
                let factor =
                    Complex64::new(-dx * dx * rates.gamma * t, -dx2 * rates.shift * t).exp();
                data[[m, n]] = rho0.get(m, n) * factor;
                data[[n, m]] = data[[m, n]].conj();
            }
        }
        interaction.push(DensityMatrix::new(data)?);
    }
    Ok(CoherenceTrajectory {
        times: times.to_vec(),
        interaction,
        schrodinger: None,
    })
}

/// Choi matrix of the Bloch-Redfield map at time t: the d²×d² matrix
/// Σ_mn F_mn |mm⟩⟨nn| whose positivity certifies complete positivity.
pub fn bloch_redfield_choi(system: &SystemSpec, rates: &MarkovRates, t: f64) -> Array2<Complex64> {
    let d = system.dim();
    let mut choi = Array2::from_elem((d * d, d * d), Complex64::ZERO);
    for m in 0..d {
        for n in 0..d {
            let xm = system.coupling(m);
            let xn = system.coupling(n);
            let dx = xm - xn;
            let dx2 = xm * xm - xn * xn;
            choi[[m * d + m, n * d + n]] =
                Complex64::new(-dx * dx * rates.gamma * t, -dx2 * rates.shift * t).exp();
        }
    }
    choi
}
