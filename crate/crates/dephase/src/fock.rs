//! Brute-force oracle: assemble the full system⊗bath Hamiltonian in a
//! truncated number basis, diagonalize it once, propagate the factorized
//! initial state unitarily in closed form, and partial-trace the bath.
//!
//! Nothing here shares formulas with the closed-form engine or the
//! master-equation solver — agreement between the three routes is the
//! point of this module, so it must stay an independent computation.

use ndarray::{s, Array1, Array2};
use num_complex::Complex64;

use crate::bath::BathMode;
use crate::exact::{CoherenceTrajectory, DensityMatrix, ModeState, SystemSpec};
use crate::exec::{self, ExecMode};
use crate::{linalg, Error, Result};

/// Largest total Hilbert dimension the oracle will attempt.
pub const DEFAULT_DIMENSION_LIMIT: usize = 200_000;
/// Largest discarded population a truncated bath state may carry.
pub const TAIL_TOLERANCE: f64 = 1e-10;
const MAX_MODES: usize = 3;

/// Finite bath description: which modes to keep and how many photons each
/// may hold. `n_max[k]` is the highest retained number state of mode k, so
/// the per-mode dimension is `n_max[k] + 1`.
#[derive(Clone, Debug)]
pub struct TruncatedBathSpec {
    modes: Vec<BathMode>,
    n_max: Vec<usize>,
    dimension_limit: usize,
}

impl TruncatedBathSpec {
    pub fn new(modes: Vec<BathMode>, n_max: Vec<usize>) -> Result<Self> {
        if modes.len() > MAX_MODES {
            return Err(Error::Domain(format!(
                "the oracle supports at most {MAX_MODES} modes, got {}",
                modes.len()
            )));
        }
        if modes.len() != n_max.len() {
            return Err(Error::Domain(format!(
                "{} modes but {} cutoffs",
                modes.len(),
                n_max.len()
            )));
        }
        if let Some(k) = n_max.iter().position(|&n| n == 0) {
            return Err(Error::Domain(format!(
                "mode {k}: photon-number cutoff must be at least 1"
            )));
        }
        Ok(TruncatedBathSpec {
            modes,
            n_max,
            dimension_limit: DEFAULT_DIMENSION_LIMIT,
        })
    }

    pub fn with_dimension_limit(mut self, limit: usize) -> Self {
        self.dimension_limit = limit;
        self
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.modes
    }

    pub fn n_max(&self) -> &[usize] {
        &self.n_max
    }

    /// Product of the per-mode dimensions.
    pub fn bath_dimension(&self) -> usize {
        self.n_max.iter().map(|&n| n + 1).product()
    }

    /// Total dimension d·Π(n_max+1), checked against the configured limit.
    pub fn total_dimension(&self, system_dim: usize) -> Result<usize> {
        let mut total = system_dim as u128;
        for &n in &self.n_max {
            total *= (n + 1) as u128;
        }
        if total > self.dimension_limit as u128 {
            return Err(Error::DimensionLimit {
                dim: total.min(usize::MAX as u128) as usize,
                limit: self.dimension_limit,
            });
        }
        Ok(total as usize)
    }
}

/// Truncated annihilation operator: b|n⟩ = √n |n-1⟩, zero above the cutoff.
pub fn lowering_operator(dim: usize) -> Array2<Complex64> {
    let mut b = Array2::from_elem((dim, dim), Complex64::ZERO);
    for n in 1..dim {
        b[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    b
}

fn identity(dim: usize) -> Array2<Complex64> {
    Array2::eye(dim)
}

/// Lift a single-mode operator into the full bath space.
fn embed_mode_operator(
    op: &Array2<Complex64>,
    mode_index: usize,
    dims: &[usize],
) -> Array2<Complex64> {
    let mut out = if mode_index == 0 {
        op.clone()
    } else {
        identity(dims[0])
    };
    for (k, &dim) in dims.iter().enumerate().skip(1) {
        let factor = if k == mode_index {
            op.clone()
        } else {
            identity(dim)
        };
        out = linalg::kron(&out, &factor);
    }
    out
}

/// H = diag(E)⊗1 + 1⊗Σ_k ω_k b_k†b_k + diag(X)⊗Σ_k (g_k b_k + g_k* b_k†).
pub fn build_hamiltonian(
    system: &SystemSpec,
    spec: &TruncatedBathSpec,
) -> Result<Array2<Complex64>> {
    let d = system.dim();
    spec.total_dimension(d)?;
    let dims: Vec<usize> = spec.n_max.iter().map(|&n| n + 1).collect();
    let bath_dim = spec.bath_dimension();

    let mut bath_energy = Array2::from_elem((bath_dim, bath_dim), Complex64::ZERO);
    let mut bath_coordinate = bath_energy.clone();
    for (k, mode) in spec.modes.iter().enumerate() {
        let b = lowering_operator(dims[k]);
        let bdag = b.t().mapv(|v| v.conj());
        let number = bdag.dot(&b);
        bath_energy = bath_energy + embed_mode_operator(&number, k, &dims).mapv(|v| v * mode.omega);
        let coupling = b.mapv(|v| v * mode.g) + bdag.mapv(|v| v * mode.g.conj());
        bath_coordinate = bath_coordinate + embed_mode_operator(&coupling, k, &dims);
    }

    let energy_diag = Array2::from_shape_fn((d, d), |(i, j)| {
        if i == j {
            Complex64::new(system.energy(i), 0.0)
        } else {
            Complex64::ZERO
        }
    });
    let coupling_diag = Array2::from_shape_fn((d, d), |(i, j)| {
        if i == j {
            Complex64::new(system.coupling(i), 0.0)
        } else {
            Complex64::ZERO
        }
    });

    Ok(linalg::kron(&energy_diag, &identity(bath_dim))
        + linalg::kron(&identity(d), &bath_energy)
        + linalg::kron(&coupling_diag, &bath_coordinate))
}

/// Thermal number distribution p_m = n̄^m/(1+n̄)^{m+1} over `dim` levels.
fn thermal_diagonal(nbar: f64, dim: usize) -> Vec<f64> {
    let ratio = nbar / (1.0 + nbar);
    let mut p = Vec::with_capacity(dim);
    let mut current = 1.0 / (1.0 + nbar);
    for _ in 0..dim {
        p.push(current);
        current *= ratio;
    }
    p
}

/// exp(β b† − β* b) in a `dim`-level space, via the spectral theorem applied
/// to the Hermitian matrix i(β b† − β* b).
fn displacement_operator(beta: Complex64, dim: usize) -> Result<Array2<Complex64>> {
    let b = lowering_operator(dim);
    let bdag = b.t().mapv(|v| v.conj());
    let generator = bdag.mapv(|v| v * beta) - b.mapv(|v| v * beta.conj());
    let hermitian = generator.mapv(|v| v * Complex64::I);
    let (vals, vecs) = linalg::eigh(&hermitian)?;
    let vdag = vecs.t().mapv(|v| v.conj());
    let mut phased = vdag;
    for (i, &w) in vals.iter().enumerate() {
        let phase = Complex64::new(0.0, -w).exp();
        phased.row_mut(i).mapv_inplace(|v| v * phase);
    }
    Ok(vecs.dot(&phased))
}

/// Smallest cutoff whose discarded population (from a number-basis
/// probability list) drops below the tail tolerance.
fn required_cutoff_from_diagonal(probabilities: &[f64]) -> usize {
    let mut tail = 1.0;
    for (m, &p) in probabilities.iter().enumerate() {
        tail -= p;
        if tail < TAIL_TOLERANCE {
            return m;
        }
    }
    probabilities.len()
}

/// Smallest cutoff adequate for a coherent mixture, from the Poisson number
/// distributions of its components.
fn required_cutoff_for_mixture(components: &[(f64, Complex64)]) -> usize {
    const CAP: usize = 100_000;
    let mut masses: Vec<f64> = components
        .iter()
        .map(|(_, beta)| (-beta.norm_sqr()).exp())
        .collect();
    let mut tail: f64 = 1.0
        - components
            .iter()
            .zip(&masses)
            .map(|((w, _), p)| w * p)
            .sum::<f64>();
    let mut n = 0;
    while tail >= TAIL_TOLERANCE && n < CAP {
        n += 1;
        for (j, (w, beta)) in components.iter().enumerate() {
            masses[j] *= beta.norm_sqr() / n as f64;
            tail -= w * masses[j];
        }
    }
    n
}

/// Density matrix of one bath mode over `n_max + 1` number states.
///
/// Gaussian states become D(β̄)·ρ_thermal·D(β̄)† with a truncated
/// displacement built in a padded space so the kept block is accurate;
/// mixtures become Σ w_j |β_j⟩⟨β_j| with truncated coherent vectors. The
/// discarded population must stay below the tail tolerance — the result is
/// then renormalized so downstream trace checks see exactly unit trace.
pub fn prepare_bath_state(state: &ModeState, n_max: usize) -> Result<Array2<Complex64>> {
    let dim = n_max + 1;
    match state {
        ModeState::Gaussian { nbar, beta_bar } => {
            let padding = 24 + (4.0 * beta_bar.norm_sqr() + 8.0 * nbar).ceil() as usize;
            let padded_dim = dim + padding;
            let thermal = thermal_diagonal(*nbar, padded_dim);
            let displaced = if *beta_bar == Complex64::ZERO {
                Array2::from_shape_fn((padded_dim, padded_dim), |(i, j)| {
                    if i == j {
                        Complex64::new(thermal[i], 0.0)
                    } else {
                        Complex64::ZERO
                    }
                })
            } else {
                let d_op = displacement_operator(*beta_bar, padded_dim)?;
                let mut scaled = d_op.clone();
                for (j, &p) in thermal.iter().enumerate() {
                    scaled.column_mut(j).mapv_inplace(|v| v * p);
                }
                scaled.dot(&d_op.t().mapv(|v| v.conj()))
            };
            let kept = displaced.slice(s![..dim, ..dim]).to_owned();
            let trace: f64 = (0..dim).map(|i| kept[[i, i]].re).sum();
            let tail = 1.0 - trace;
            if tail >= TAIL_TOLERANCE {
                let diag: Vec<f64> = (0..padded_dim).map(|i| displaced[[i, i]].re).collect();
                return Err(Error::TruncationTail {
                    tail,
                    required: required_cutoff_from_diagonal(&diag),
                });
            }
            Ok(kept.mapv(|v| v / trace))
        }
        ModeState::CoherentMixture { components } => {
            let mut rho = Array2::from_elem((dim, dim), Complex64::ZERO);
            let mut trace = 0.0;
            for (weight, beta) in components {
                let mut amplitude = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
                let mut vector = Vec::with_capacity(dim);
                for n in 0..dim {
                    if n > 0 {
                        amplitude *= beta / (n as f64).sqrt();
                    }
                    vector.push(amplitude);
                }
                let norm_sqr: f64 = vector.iter().map(|v| v.norm_sqr()).sum();
                trace += weight * norm_sqr;
                for i in 0..dim {
                    for j in 0..dim {
                        rho[[i, j]] += weight * vector[i] * vector[j].conj();
                    }
                }
            }
            let tail = 1.0 - trace;
            if tail >= TAIL_TOLERANCE {
                return Err(Error::TruncationTail {
                    tail,
                    required: required_cutoff_for_mixture(components),
                });
            }
            Ok(rho.mapv(|v| v / trace))
        }
    }
}

/// One diagonalization, reused across trajectory points.
pub struct FockOracle {
    system: SystemSpec,
    spec: TruncatedBathSpec,
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<Complex64>,
}

impl FockOracle {
    pub fn new(system: SystemSpec, spec: TruncatedBathSpec) -> Result<Self> {
        let hamiltonian = build_hamiltonian(&system, &spec)?;
        let (eigenvalues, eigenvectors) = linalg::eigh(&hamiltonian)?;
        Ok(FockOracle {
            system,
            spec,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn spec(&self) -> &TruncatedBathSpec {
        &self.spec
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<Complex64> {
        &self.eigenvectors
    }

    /// R(0) = ρ_system ⊗ ρ_mode1 ⊗ ρ_mode2 ⊗ …
    pub fn initial_total_state(
        &self,
        rho0: &DensityMatrix,
        bath_states: &[ModeState],
    ) -> Result<Array2<Complex64>> {
        if rho0.dim() != self.system.dim() {
            return Err(Error::Domain(format!(
                "density matrix dimension {} does not match system dimension {}",
                rho0.dim(),
                self.system.dim()
            )));
        }
        if bath_states.len() != self.spec.modes.len() {
            return Err(Error::Domain(format!(
                "{} bath states for {} modes",
                bath_states.len(),
                self.spec.modes.len()
            )));
        }
        let mut total = rho0.data().clone();
        for (state, &n_max) in bath_states.iter().zip(&self.spec.n_max) {
            total = linalg::kron(&total, &prepare_bath_state(state, n_max)?);
        }
        Ok(total)
    }

    /// Reduced system state at each grid time, in the interaction picture:
    /// ρ̃_mn(t) = e^{+i(E_m−E_n)t} tr_b[e^{−iHt} R(0) e^{iHt}]_mn.
    pub fn trajectory(
        &self,
        rho0: &DensityMatrix,
        bath_states: &[ModeState],
        times: &[f64],
    ) -> Result<CoherenceTrajectory> {
        self.trajectory_with(ExecMode::default(), rho0, bath_states, times)
    }

    pub fn trajectory_with(
        &self,
        mode: ExecMode,
        rho0: &DensityMatrix,
        bath_states: &[ModeState],
        times: &[f64],
    ) -> Result<CoherenceTrajectory> {
        if times.is_empty() {
            return Err(Error::Domain("time grid must be nonempty".to_string()));
        }
        for &t in times {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Domain(format!(
                    "trajectory times must be finite and nonnegative, got {t}"
                )));
            }
        }
        let d = self.system.dim();
        let bath_dim = self.spec.bath_dimension();
        let r0 = self.initial_total_state(rho0, bath_states)?;
        let vdag = self.eigenvectors.t().mapv(|v| v.conj());
        let r0_eigen = vdag.dot(&r0).dot(&self.eigenvectors);

        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|m| (m..d).map(move |n| (m, n))).collect();
        let series = exec::map_indexed(mode, pairs.len(), |k| {
            let (m, n) = pairs[k];
            // W_ij = (Σ_b V_{(m,b),i} V*_{(n,b),j}) · (V†R(0)V)_ij collapses
            // the partial trace into one matrix per element.
            let block_m = self
                .eigenvectors
                .slice(s![m * bath_dim..(m + 1) * bath_dim, ..]);
            let block_n = self
                .eigenvectors
                .slice(s![n * bath_dim..(n + 1) * bath_dim, ..]);
            let overlap = block_m.t().to_owned().dot(&block_n.mapv(|v| v.conj()));
            let weights = &overlap * &r0_eigen;
            let energy_gap = self.system.energy(m) - self.system.energy(n);
            times
                .iter()
                .map(|&t| {
                    let phases: Array1<Complex64> = self
                        .eigenvalues
                        .iter()
                        .map(|&w| Complex64::new(0.0, w * t).exp())
                        .collect();
                    let partial = weights.dot(&phases);
                    let value: Complex64 = phases
                        .iter()
                        .zip(partial.iter())
                        .map(|(u, p)| u.conj() * p)
                        .sum();
                    value * Complex64::new(0.0, energy_gap * t).exp()
                })
                .collect::<Vec<Complex64>>()
        });

        let mut interaction = Vec::with_capacity(times.len());
        for i in 0..times.len() {
            let mut data = Array2::from_elem((d, d), Complex64::ZERO);
            for (k, &(m, n)) in pairs.iter().enumerate() {
                data[[m, n]] = series[k][i];
                if m != n {
                    data[[n, m]] = series[k][i].conj();
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

    /// Single-time convenience wrapper around [`FockOracle::trajectory`].
    pub fn propagate_and_trace(
        &self,
        rho0: &DensityMatrix,
        bath_states: &[ModeState],
        t: f64,
    ) -> Result<DensityMatrix> {
        let mut trajectory = self.trajectory(rho0, bath_states, &[t])?;
        Ok(trajectory.interaction.pop().expect("one grid point"))
    }
}
