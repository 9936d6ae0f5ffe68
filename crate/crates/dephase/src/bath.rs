//! Bath models and every scalar function derived from them: correlation
//! kernels, the mean bath coordinate, and the three dephasing functionals
//! (damping amplitude, back-action phase, displacement phase).
//!
//! Two families are supported. [`DiscreteBath`] is a finite list of
//! harmonic modes with closed-form kernels; [`SpectralBath`] is a continuum
//! described by a spectral density at some temperature, evaluated by
//! adaptive quadrature with series handling of the removable ω → 0 points.

use num_complex::Complex64;

use crate::exec::{self, ExecMode};
use crate::quad::Quadrature;
use crate::{Error, Result};

/// Bose-Einstein occupation of a mode at the given temperature (ħ = k_B = 1).
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "thermal occupation needs omega > 0, got {omega}"
        )));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::Domain(format!(
            "temperature must be finite and >= 0, got {temperature}"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

/// coth(omega / 2T) = 1 + 2 n(omega); equals 1 at T = 0.
fn thermal_weight(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 1.0;
    }
    let y = 0.5 * omega / temperature;
    if y > 19.0 {
        1.0
    } else {
        1.0 / y.tanh()
    }
}

/// 1 - cos(x) without cancellation at small x.
fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// (x - sin x) / x^2, the integrand shape behind the back-action phase;
/// series below |x| = 0.1 keeps full precision through the cancellation.
fn growth_minus_sine(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        x * (1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0 - x2 * x2 * x2 / 362_880.0)
    } else {
        (x - x.sin()) / (x * x)
    }
}

fn check_finite(label: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{label} must be finite, got {value}"
        )))
    }
}

/// One harmonic bath mode: frequency, complex coupling, thermal occupation
/// and mean displacement of its initial Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct BathMode {
    pub omega: f64,
    pub g: Complex64,
    pub nbar: f64,
    pub beta_bar: Complex64,
}

impl BathMode {
    pub fn new(omega: f64, g: Complex64, nbar: f64, beta_bar: Complex64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Domain(format!(
                "mode frequency must be > 0, got {omega}"
            )));
        }
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(Error::Domain(format!(
                "mode occupation must be >= 0, got {nbar}"
            )));
        }
        check_finite("coupling re", g.re)?;
        check_finite("coupling im", g.im)?;
        check_finite("displacement re", beta_bar.re)?;
        check_finite("displacement im", beta_bar.im)?;
        Ok(BathMode {
            omega,
            g,
            nbar,
            beta_bar,
        })
    }

    /// Undisplaced mode thermalized at `temperature`.
    pub fn thermal(omega: f64, g: Complex64, temperature: f64) -> Result<Self> {
        let nbar = if temperature == 0.0 {
            0.0
        } else {
            thermal_occupation(omega, temperature)?
        };
        BathMode::new(omega, g, nbar, Complex64::ZERO)
    }
}

/// Finite collection of independent modes; the empty bath is legal and
/// produces identity dynamics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiscreteBath {
    pub modes: Vec<BathMode>,
}

impl DiscreteBath {
    pub fn new(modes: Vec<BathMode>) -> Self {
        DiscreteBath { modes }
    }

    pub fn empty() -> Self {
        DiscreteBath { modes: Vec::new() }
    }

    pub fn concat(&self, other: &DiscreteBath) -> DiscreteBath {
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        DiscreteBath { modes }
    }

    /// Mean bath coordinate 2 Σ Re(g β̄ e^{-iωt}).
    pub fn mean_coordinate(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| 2.0 * (m.g * m.beta_bar * Complex64::new(0.0, -m.omega * t).exp()).re)
            .sum()
    }

    /// Symmetric correlation kernel Σ |g|² cos(ωτ) (1 + 2n̄).
    pub fn sym_kernel(&self, tau: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| m.g.norm_sqr() * (m.omega * tau).cos() * (1.0 + 2.0 * m.nbar))
            .sum()
    }

    /// Antisymmetric correlation kernel -Σ |g|² sin(ωτ); independent of the
    /// bath state.
    pub fn antisym_kernel(&self, tau: f64) -> f64 {
        -self
            .modes
            .iter()
            .map(|m| m.g.norm_sqr() * (m.omega * tau).sin())
            .sum::<f64>()
    }

    /// Closed form of ∫₀ᵗ sym_kernel(τ) dτ.
    pub fn sym_kernel_integral(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| m.g.norm_sqr() * (m.omega * t).sin() / m.omega * (1.0 + 2.0 * m.nbar))
            .sum()
    }

    /// Closed form of ∫₀ᵗ antisym_kernel(τ) dτ.
    pub fn antisym_kernel_integral(&self, t: f64) -> f64 {
        -self
            .modes
            .iter()
            .map(|m| m.g.norm_sqr() * one_minus_cos(m.omega * t) / m.omega)
            .sum::<f64>()
    }

    /// Damping amplitude Σ |g|² (1 - cos ωt)/ω² (1 + 2n̄); controls how fast
    /// coherence magnitudes decay.
    pub fn damping_amplitude(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                m.g.norm_sqr() * one_minus_cos(m.omega * t) / (m.omega * m.omega)
                    * (1.0 + 2.0 * m.nbar)
            })
            .sum()
    }

    /// Back-action phase Σ |g|² (ωt - sin ωt)/ω²; nonnegative and
    /// nondecreasing, independent of the bath state.
    pub fn backaction_phase(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| m.g.norm_sqr() * t * t * growth_minus_sine(m.omega * t))
            .sum()
    }

    /// Displacement phase 2 Σ Im(β̄* g* (1 - e^{iωt}))/ω; vanishes for
    /// undisplaced baths.
    pub fn displacement_phase(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let osc = Complex64::ONE - Complex64::new(0.0, m.omega * t).exp();
                2.0 * (m.beta_bar.conj() * m.g.conj() * osc).im / m.omega
            })
            .sum()
    }

    /// All three dephasing functionals on a time grid.
    pub fn functionals(&self, times: &[f64]) -> DephasingFunctionals {
        self.functionals_with(ExecMode::default(), times)
    }

    pub fn functionals_with(&self, mode: ExecMode, times: &[f64]) -> DephasingFunctionals {
        let rows = exec::map_indexed(mode, times.len(), |i| {
            let t = times[i];
            (
                self.damping_amplitude(t),
                self.backaction_phase(t),
                self.displacement_phase(t),
            )
        });
        DephasingFunctionals {
            times: times.to_vec(),
            lambda: rows.iter().map(|r| r.0).collect(),
            phi: rows.iter().map(|r| r.1).collect(),
            psi: rows.iter().map(|r| r.2).collect(),
        }
    }
}

/// Dephasing functionals sampled on a grid: `lambda` damps coherence,
/// `phi` is the bath back-action phase, `psi` the displacement phase.
#[derive(Clone, Debug, PartialEq)]
pub struct DephasingFunctionals {
    pub times: Vec<f64>,
    pub lambda: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Either bath family, for call sites that accept both.
#[derive(Clone, Debug, PartialEq)]
pub enum BathModel {
    Discrete(DiscreteBath),
    Spectral(SpectralBath),
}

/// Spectral density family of a continuum bath.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralDensity {
    /// J(ω) = alpha · ω · exp(-ω/omega_c).
    OhmicExpCutoff { alpha: f64, omega_c: f64 },
    /// Piecewise-linear interpolation of (ω, J) samples; zero outside the
    /// sampled support.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl SpectralDensity {
    fn validate(&self) -> Result<()> {
        match self {
            SpectralDensity::OhmicExpCutoff { alpha, omega_c } => {
                if !(*alpha >= 0.0) || !alpha.is_finite() {
                    return Err(Error::Domain(format!(
                        "ohmic prefactor must be >= 0, got {alpha}"
                    )));
                }
                if !(*omega_c > 0.0) || !omega_c.is_finite() {
                    return Err(Error::Domain(format!(
                        "cutoff frequency must be > 0, got {omega_c}"
                    )));
                }
                Ok(())
            }
            SpectralDensity::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(Error::Domain(
                        "tabulated spectral density needs at least 2 samples".to_string(),
                    ));
                }
                for (w, j) in samples {
                    check_finite("sample frequency", *w)?;
                    check_finite("sample density", *j)?;
                    if *w < 0.0 {
                        return Err(Error::Domain(format!(
                            "sample frequency must be >= 0, got {w}"
                        )));
                    }
                    if *j < 0.0 {
                        return Err(Error::Domain(format!(
                            "spectral density must be >= 0, got {j}"
                        )));
                    }
                }
                for pair in samples.windows(2) {
                    if pair[1].0 <= pair[0].0 {
                        return Err(Error::Domain(format!(
                            "sample frequencies must be strictly increasing ({} then {})",
                            pair[0].0, pair[1].0
                        )));
                    }
                }
                if samples[0].0 == 0.0 && samples[0].1 > 0.0 {
                    return Err(Error::LowFrequencyDivergence(format!(
                        "J(0) = {} > 0; J(ω)/ω must stay bounded as ω → 0",
                        samples[0].1
                    )));
                }
                Ok(())
            }
        }
    }

    /// J(ω) at a single frequency.
    pub fn value(&self, omega: f64) -> f64 {
        match self {
            SpectralDensity::OhmicExpCutoff { alpha, omega_c } => {
                if omega <= 0.0 {
                    0.0
                } else {
                    alpha * omega * (-omega / omega_c).exp()
                }
            }
            SpectralDensity::Tabulated { samples } => {
                let first = samples[0].0;
                let last = samples[samples.len() - 1].0;
                if omega < first || omega > last {
                    return 0.0;
                }
                let idx = samples.partition_point(|s| s.0 <= omega);
                if idx == samples.len() {
                    return samples[samples.len() - 1].1;
                }
                let (w0, j0) = samples[idx - 1];
                let (w1, j1) = samples[idx];
                j0 + (j1 - j0) * (omega - w0) / (w1 - w0)
            }
        }
    }

    /// lim_{ω→0} J(ω)/ω; zero when the support starts above zero.
    fn slope_at_zero(&self) -> f64 {
        match self {
            SpectralDensity::OhmicExpCutoff { alpha, .. } => *alpha,
            SpectralDensity::Tabulated { samples } => {
                if samples[0].0 == 0.0 {
                    samples[1].1 / samples[1].0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Continuum bath at thermal equilibrium; mean displacements vanish, so the
/// displacement phase is identically zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBath {
    pub density: SpectralDensity,
    pub temperature: f64,
}

impl SpectralBath {
    pub fn new(density: SpectralDensity, temperature: f64) -> Result<Self> {
        density.validate()?;
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(Error::Domain(format!(
                "temperature must be finite and >= 0, got {temperature}"
            )));
        }
        Ok(SpectralBath {
            density,
            temperature,
        })
    }

    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.density.value(omega)
    }

    pub fn slope_at_zero(&self) -> f64 {
        self.density.slope_at_zero()
    }

    /// Upper end of the frequency range that carries any weight.
    pub fn support_max(&self) -> f64 {
        match &self.density {
            // exp(-40) ≈ 4e-18 leaves the truncated tail far below target
            // tolerances even with a large thermal weight.
            SpectralDensity::OhmicExpCutoff { omega_c, .. } => 40.0 * omega_c,
            SpectralDensity::Tabulated { samples } => samples[samples.len() - 1].0,
        }
    }

    /// (series cut, lower quadrature limit). The removable ω → 0 point is
    /// covered by a leading-order series on [0, cut]; supports starting
    /// above zero need no series.
    fn low_end(&self) -> (f64, f64) {
        match &self.density {
            SpectralDensity::OhmicExpCutoff { omega_c, .. } => {
                let cut = 1e-6 * omega_c;
                (cut, cut)
            }
            SpectralDensity::Tabulated { samples } => {
                if samples[0].0 == 0.0 {
                    let cut = 1e-6 * self.support_max();
                    (cut, cut)
                } else {
                    (0.0, samples[0].0)
                }
            }
        }
    }

    fn quadrature() -> Quadrature {
        Quadrature {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            max_panels: 8192,
        }
    }

    fn integrate_with_series(
        &self,
        integrand: impl Fn(f64) -> f64,
        series: impl Fn(f64) -> f64,
    ) -> Result<f64> {
        let (cut, lower) = self.low_end();
        let head = if cut > 0.0 { series(cut) } else { 0.0 };
        let tail = Self::quadrature().integrate(integrand, lower, self.support_max())?;
        Ok(head + tail)
    }

    /// Damping amplitude ∫ J(ω) coth(ω/2T) (1 - cos ωt)/ω² dω.
    pub fn damping_amplitude(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let s0 = self.slope_at_zero();
        let temp = self.temperature;
        self.integrate_with_series(
            |w| self.density.value(w) * thermal_weight(w, temp) * one_minus_cos(w * t) / (w * w),
            |cut| {
                if temp > 0.0 {
                    s0 * temp * t * t * cut
                } else {
                    s0 * t * t * cut * cut / 4.0
                }
            },
        )
    }

    /// Back-action phase ∫ J(ω) (ωt - sin ωt)/ω² dω; temperature-independent.
    pub fn backaction_phase(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let s0 = self.slope_at_zero();
        self.integrate_with_series(
            |w| self.density.value(w) * t * t * growth_minus_sine(w * t),
            |cut| s0 * t * t * t * cut * cut * cut / 18.0,
        )
    }

    /// ∫₀ᵗ S(τ) dτ evaluated in frequency space: ∫ J coth(ω/2T) sin(ωt)/ω dω.
    pub fn sym_kernel_integral(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let s0 = self.slope_at_zero();
        let temp = self.temperature;
        self.integrate_with_series(
            |w| self.density.value(w) * thermal_weight(w, temp) * (w * t).sin() / w,
            |cut| {
                if temp > 0.0 {
                    2.0 * s0 * temp * t * cut
                } else {
                    s0 * t * cut * cut / 2.0
                }
            },
        )
    }

    /// ∫₀ᵗ A(τ) dτ = -∫ J (1 - cos ωt)/ω dω.
    pub fn antisym_kernel_integral(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let s0 = self.slope_at_zero();
        let v = self.integrate_with_series(
            |w| self.density.value(w) * one_minus_cos(w * t) / w,
            |cut| s0 * t * t * cut * cut * cut / 6.0,
        )?;
        Ok(-v)
    }

    /// ∫ J(ω)/ω dω, the static reorganization integral behind the Markov
    /// frequency shift.
    pub fn inverse_frequency_moment(&self) -> Result<f64> {
        let s0 = self.slope_at_zero();
        self.integrate_with_series(|w| self.density.value(w) / w, |cut| s0 * cut)
    }

    /// Damping amplitude and back-action phase on a grid (the displacement
    /// phase of a thermal continuum is identically zero).
    pub fn functionals(&self, times: &[f64]) -> Result<DephasingFunctionals> {
        self.functionals_with(ExecMode::default(), times)
    }

    pub fn functionals_with(&self, mode: ExecMode, times: &[f64]) -> Result<DephasingFunctionals> {
        let rows = exec::try_map_indexed(mode, times.len(), |i| {
            let t = times[i];
            Ok((self.damping_amplitude(t)?, self.backaction_phase(t)?))
        })?;
        Ok(DephasingFunctionals {
            times: times.to_vec(),
            lambda: rows.iter().map(|r| r.0).collect(),
            phi: rows.iter().map(|r| r.1).collect(),
            psi: vec![0.0; times.len()],
        })
    }

    /// Equally spaced mode discretization on (0, omega_max] with
    /// |g_j|² = J(ω_j)·Δω, thermal occupations, no displacement. Modes sit
    /// at panel midpoints so the thermal integrands (finite at ω = 0) are
    /// sampled without an O(Δω) endpoint bias. Useful for cross-checks
    /// below the recurrence horizon 2π/Δω.
    pub fn discretize(&self, modes: usize, omega_max: f64) -> Result<DiscreteBath> {
        if modes == 0 {
            return Err(Error::Domain(
                "discretization needs at least one mode".to_string(),
            ));
        }
        if !(omega_max > 0.0) || !omega_max.is_finite() {
            return Err(Error::Domain(format!(
                "discretization range must be > 0, got {omega_max}"
            )));
        }
        let delta = omega_max / modes as f64;
        let mut out = Vec::with_capacity(modes);
        for j in 0..modes {
            let omega = delta * (j as f64 + 0.5);
            let g = Complex64::new((self.density.value(omega) * delta).sqrt(), 0.0);
            let nbar = if self.temperature == 0.0 {
                0.0
            } else {
                thermal_occupation(omega, self.temperature)?
            };
            out.push(BathMode::new(omega, g, nbar, Complex64::ZERO)?);
        }
        Ok(DiscreteBath::new(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mode(omega: f64, g: f64, nbar: f64, beta: f64) -> BathMode {
        BathMode::new(omega, c(g, 0.0), nbar, c(beta, 0.0)).unwrap()
    }

    fn random_bath(rng: &mut ChaCha8Rng, n: usize) -> DiscreteBath {
        let modes = (0..n)
            .map(|_| {
                BathMode::new(
                    rng.random_range(0.5..3.0),
                    c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)),
                    rng.random_range(0.0..1.0),
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
                .unwrap()
            })
            .collect();
        DiscreteBath::new(modes)
    }

    #[test]
    fn occupation_limits() {
        assert_eq!(thermal_occupation(1.0, 0.0).unwrap(), 0.0);
        let half = thermal_occupation(1.0, 1.0 / 2f64.ln()).unwrap();
        assert!((half - 1.0).abs() < 1e-12);
        let hot = thermal_occupation(1.0, 10.0).unwrap();
        assert!((hot - 9.50833).abs() < 1e-5);
        assert!(thermal_occupation(0.0, 1.0).is_err());
        assert!(thermal_occupation(-1.0, 1.0).is_err());
    }

    #[test]
    fn mean_coordinate_single_mode() {
        let bath = DiscreteBath::new(vec![mode(1.0, 0.1, 0.3, 1.0)]);
        assert!((bath.mean_coordinate(0.0) - 0.2).abs() < 1e-12);
        assert!((bath.mean_coordinate(PI) + 0.2).abs() < 1e-12);
    }

    #[test]
    fn mean_coordinate_vanishes_for_undisplaced_bath() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let modes = (0..4)
            .map(|_| {
                BathMode::new(
                    rng.random_range(0.5..3.0),
                    c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)),
                    rng.random_range(0.0..1.0),
                    Complex64::ZERO,
                )
                .unwrap()
            })
            .collect();
        let bath = DiscreteBath::new(modes);
        for t in [0.0, 0.7, 3.1, 12.9] {
            assert_eq!(bath.mean_coordinate(t), 0.0);
        }
    }

    #[test]
    fn sym_kernel_single_mode() {
        let cold = DiscreteBath::new(vec![mode(2.0, 0.3, 0.0, 0.0)]);
        assert!((cold.sym_kernel(0.0) - 0.09).abs() < 1e-15);
        let warm = DiscreteBath::new(vec![mode(2.0, 0.3, 0.5, 0.0)]);
        assert!((warm.sym_kernel(0.0) - 0.18).abs() < 1e-15);
        assert!((warm.sym_kernel(PI / 2.0) + 0.18).abs() < 1e-12);
    }

    #[test]
    fn antisym_kernel_values_and_state_independence() {
        let bath = DiscreteBath::new(vec![mode(1.0, 1.0, 0.7, 0.4)]);
        assert_eq!(bath.antisym_kernel(0.0), 0.0);
        assert!((bath.antisym_kernel(PI / 2.0) + 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let base = random_bath(&mut rng, 5);
        let mut perturbed = base.clone();
        for m in &mut perturbed.modes {
            m.nbar += 5.0;
            m.beta_bar += c(2.0, -1.5);
        }
        for tau in [0.0, 0.3, 1.9, 6.4, 15.0] {
            assert_eq!(
                base.antisym_kernel(tau).to_bits(),
                perturbed.antisym_kernel(tau).to_bits()
            );
            assert_eq!(
                base.backaction_phase(tau).to_bits(),
                perturbed.backaction_phase(tau).to_bits()
            );
        }
    }

    #[test]
    fn damping_amplitude_single_mode() {
        let bath = DiscreteBath::new(vec![mode(1.0, 0.2, 0.0, 0.0)]);
        assert_eq!(bath.damping_amplitude(0.0), 0.0);
        assert!((bath.damping_amplitude(PI) - 0.08).abs() < 1e-14);
        assert!(bath.damping_amplitude(2.0 * PI).abs() < 1e-30);
    }

    #[test]
    fn damping_amplitude_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let bath = random_bath(&mut rng, 6);
            for _ in 0..20 {
                let t: f64 = rng.random_range(0.0..30.0);
                assert!(bath.damping_amplitude(t) >= 0.0);
            }
        }
    }

    #[test]
    fn backaction_phase_single_mode() {
        let bath = DiscreteBath::new(vec![mode(1.0, 0.2, 0.0, 0.0)]);
        assert_eq!(bath.backaction_phase(0.0), 0.0);
        let v = bath.backaction_phase(2.0 * PI);
        assert!((v - 0.04 * 2.0 * PI).abs() < 1e-14);
        assert!((v - 0.251327).abs() < 1e-6);
    }

    #[test]
    fn backaction_phase_nondecreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let bath = random_bath(&mut rng, 5);
        let mut prev = 0.0;
        for i in 0..400 {
            let t = 0.05 * i as f64;
            let v = bath.backaction_phase(t);
            assert!(v + 1e-15 >= prev, "t={t}");
            prev = v;
        }
    }

    #[test]
    fn backaction_phase_matches_double_integral_route() {
        // phi(t) should equal the iterated integral of the antisymmetric
        // kernel: outer quadrature over the closed-form inner integral.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bath = random_bath(&mut rng, 4);
        let q = Quadrature::with_rel_tol(1e-12);
        for t in [0.4, 1.3, 3.7, 9.2] {
            let via_quad = q
                .integrate(|tau| -bath.antisym_kernel_integral(tau), 0.0, t)
                .unwrap();
            let direct = bath.backaction_phase(t);
            assert!(
                (via_quad - direct).abs() < 1e-10,
                "t={t}: {via_quad} vs {direct}"
            );
        }
    }

    #[test]
    fn displacement_phase_single_mode() {
        let thermal = DiscreteBath::new(vec![mode(1.3, 0.25, 0.8, 0.0)]);
        for t in [0.0, 0.9, 4.2] {
            assert_eq!(thermal.displacement_phase(t), 0.0);
        }
        let displaced = DiscreteBath::new(vec![mode(1.0, 0.1, 0.0, 1.0)]);
        assert_eq!(displaced.displacement_phase(0.0), 0.0);
        assert!((displaced.displacement_phase(PI / 2.0) + 0.2).abs() < 1e-12);
    }

    #[test]
    fn derivative_relations_hold() {
        // Central five-point stencils of the functionals against the
        // kernel-side quantities they must reproduce.
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        let h = 1e-3;
        let stencil = |f: &dyn Fn(f64) -> f64, t: f64| {
            (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
        };
        for _ in 0..5 {
            let bath = random_bath(&mut rng, 5);
            let probes = [0.4, 1.1, 2.7, 5.3, 11.8];
            let scale_of =
                |f: &dyn Fn(f64) -> f64| probes.iter().map(|&t| f(t).abs()).fold(1e-6, f64::max);
            let s_scale = scale_of(&|t| bath.sym_kernel_integral(t));
            let a_scale = scale_of(&|t| bath.antisym_kernel_integral(t));
            let m_scale = scale_of(&|t| bath.mean_coordinate(t));
            for &t in &probes {
                let lam_dot = stencil(&|x| bath.damping_amplitude(x), t);
                assert!(
                    (lam_dot - bath.sym_kernel_integral(t)).abs() <= 1e-6 * s_scale,
                    "damping rate at t={t}"
                );
                let phi_dot = stencil(&|x| bath.backaction_phase(x), t);
                assert!(
                    (phi_dot + bath.antisym_kernel_integral(t)).abs() <= 1e-6 * a_scale,
                    "back-action rate at t={t}"
                );
                let psi_dot = stencil(&|x| bath.displacement_phase(x), t);
                assert!(
                    (psi_dot + bath.mean_coordinate(t)).abs() <= 1e-6 * m_scale,
                    "displacement rate at t={t}"
                );
            }
        }
    }

    #[test]
    fn short_time_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let bath = random_bath(&mut rng, 5);
            let s0 = bath.sym_kernel(0.0);
            let t = 1e-3 / s0.sqrt();
            let ratio = bath.damping_amplitude(t) / (0.5 * t * t * s0);
            assert!((ratio - 1.0).abs() < 1e-4, "ratio {ratio}");
        }
    }

    #[test]
    fn kernels_are_additive_over_mode_lists() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let a = random_bath(&mut rng, 3);
        let b = random_bath(&mut rng, 4);
        let joined = a.concat(&b);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-14 * (x.abs() + y.abs() + 1.0);
        for t in [0.0, 0.6, 2.2, 7.9] {
            assert!(close(
                joined.mean_coordinate(t),
                a.mean_coordinate(t) + b.mean_coordinate(t)
            ));
            assert!(close(
                joined.sym_kernel(t),
                a.sym_kernel(t) + b.sym_kernel(t)
            ));
            assert!(close(
                joined.antisym_kernel(t),
                a.antisym_kernel(t) + b.antisym_kernel(t)
            ));
            assert!(close(
                joined.sym_kernel_integral(t),
                a.sym_kernel_integral(t) + b.sym_kernel_integral(t)
            ));
            assert!(close(
                joined.antisym_kernel_integral(t),
                a.antisym_kernel_integral(t) + b.antisym_kernel_integral(t)
            ));
            assert!(close(
                joined.damping_amplitude(t),
                a.damping_amplitude(t) + b.damping_amplitude(t)
            ));
            assert!(close(
                joined.backaction_phase(t),
                a.backaction_phase(t) + b.backaction_phase(t)
            ));
            assert!(close(
                joined.displacement_phase(t),
                a.displacement_phase(t) + b.displacement_phase(t)
            ));
        }
    }

    #[test]
    fn empty_bath_is_inert() {
        let bath = DiscreteBath::empty();
        for t in [0.0, 1.0, 10.0] {
            assert_eq!(bath.mean_coordinate(t), 0.0);
            assert_eq!(bath.sym_kernel(t), 0.0);
            assert_eq!(bath.antisym_kernel(t), 0.0);
            assert_eq!(bath.damping_amplitude(t), 0.0);
            assert_eq!(bath.backaction_phase(t), 0.0);
            assert_eq!(bath.displacement_phase(t), 0.0);
        }
    }

    #[test]
    fn functionals_grid_starts_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bath = random_bath(&mut rng, 4);
        let times: Vec<f64> = (0..50).map(|i| 0.2 * i as f64).collect();
        let f = bath.functionals(&times);
        assert_eq!(f.lambda[0], 0.0);
        assert_eq!(f.phi[0], 0.0);
        assert_eq!(f.psi[0], 0.0);
        assert!(f.lambda.iter().all(|&v| v >= 0.0));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn functional_grid_parallel_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let bath = random_bath(&mut rng, 6);
        let times: Vec<f64> = (0..200).map(|i| 0.05 * i as f64).collect();
        let seq = bath.functionals_with(ExecMode::Sequential, &times);
        let par = bath.functionals_with(ExecMode::Parallel, &times);
        for i in 0..times.len() {
            assert_eq!(seq.lambda[i].to_bits(), par.lambda[i].to_bits());
            assert_eq!(seq.phi[i].to_bits(), par.phi[i].to_bits());
            assert_eq!(seq.psi[i].to_bits(), par.psi[i].to_bits());
        }
    }

    fn ohmic(alpha: f64, omega_c: f64, temperature: f64) -> SpectralBath {
        SpectralBath::new(
            SpectralDensity::OhmicExpCutoff { alpha, omega_c },
            temperature,
        )
        .unwrap()
    }

    #[test]
    fn ohmic_damping_anchor_at_zero_temperature() {
        // Closed form at T = 0: (alpha/2) ln(1 + (omega_c t)^2).
        let bath = ohmic(0.1, 5.0, 0.0);
        let got = bath.damping_amplitude(2.0).unwrap();
        let exact = 0.05 * 101f64.ln();
        assert!((got - exact).abs() < 1e-9, "got {got}, exact {exact}");
        assert!((got - 0.230756).abs() < 1e-5);
        assert_eq!(bath.damping_amplitude(0.0).unwrap(), 0.0);
    }

    #[test]
    fn ohmic_backaction_anchor() {
        // Closed form: alpha (omega_c t - arctan(omega_c t)).
        let bath = ohmic(0.1, 5.0, 0.0);
        let got = bath.backaction_phase(2.0).unwrap();
        let exact = 0.1 * (10.0 - 10f64.atan());
        assert!((got - exact).abs() < 1e-9, "got {got}, exact {exact}");
    }

    #[test]
    fn backaction_is_temperature_independent() {
        let cold = ohmic(0.1, 5.0, 0.0);
        let warm = ohmic(0.1, 5.0, 3.0);
        for t in [0.5, 2.0, 8.0] {
            let a = cold.backaction_phase(t).unwrap();
            let b = warm.backaction_phase(t).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn temperature_raises_damping() {
        let cold = ohmic(0.1, 5.0, 0.0);
        let warm = ohmic(0.1, 5.0, 2.0);
        for t in [0.5, 2.0, 8.0] {
            assert!(warm.damping_amplitude(t).unwrap() > cold.damping_amplitude(t).unwrap());
        }
    }

    #[test]
    fn inverse_frequency_moment_ohmic() {
        // int J/omega = alpha * omega_c for the exponential cutoff.
        let bath = ohmic(0.1, 5.0, 0.0);
        let got = bath.inverse_frequency_moment().unwrap();
        assert!((got - 0.5).abs() < 1e-6, "got {got}");
    }

    #[test]
    fn warm_damping_agrees_with_discretization() {
        let bath = ohmic(0.1, 5.0, 2.0);
        let discrete = bath.discretize(4000, 75.0).unwrap();
        for t in [1.0, 3.0] {
            let cont = bath.damping_amplitude(t).unwrap();
            let disc = discrete.damping_amplitude(t);
            assert!((cont - disc).abs() < 1e-3, "t={t}: {cont} vs {disc}");
        }
    }

    #[test]
    fn discretize_layout() {
        let bath = ohmic(0.2, 1.0, 0.0);
        let disc = bath.discretize(10, 5.0).unwrap();
        assert_eq!(disc.modes.len(), 10);
        assert!((disc.modes[0].omega - 0.25).abs() < 1e-15);
        assert!((disc.modes[9].omega - 4.75).abs() < 1e-15);
        let expect = (bath.spectral_density(1.25) * 0.5).sqrt();
        assert!((disc.modes[2].g.re - expect).abs() < 1e-15);
        assert!(disc.modes.iter().all(|m| m.nbar == 0.0));
        assert!(disc.modes.iter().all(|m| m.beta_bar == Complex64::ZERO));
    }

    #[test]
    fn tabulated_interpolation_and_moment() {
        let density = SpectralDensity::Tabulated {
            samples: vec![(0.0, 0.0), (1.0, 0.1), (2.0, 0.2), (2.5, 0.0)],
        };
        let bath = SpectralBath::new(density, 0.0).unwrap();
        assert!((bath.spectral_density(0.5) - 0.05).abs() < 1e-15);
        assert!((bath.spectral_density(2.25) - 0.1).abs() < 1e-15);
        assert_eq!(bath.spectral_density(3.0), 0.0);
        assert!((bath.slope_at_zero() - 0.1).abs() < 1e-15);

        // Piecewise closed form: 0.1 per unit on [0,2], then
        // 0.4 [2.5 ln(2.5/2) - 0.5] on [2, 2.5].
        let exact = 0.2 + 0.4 * (2.5 * (2.5f64 / 2.0).ln() - 0.5);
        let got = bath.inverse_frequency_moment().unwrap();
        assert!((got - exact).abs() < 1e-9, "got {got}, exact {exact}");
    }

    #[test]
    fn tabulated_validation() {
        let unsorted = SpectralDensity::Tabulated {
            samples: vec![(1.0, 0.1), (0.5, 0.2)],
        };
        assert!(SpectralBath::new(unsorted, 0.0).is_err());

        let negative = SpectralDensity::Tabulated {
            samples: vec![(0.0, 0.0), (1.0, -0.1)],
        };
        assert!(SpectralBath::new(negative, 0.0).is_err());

        let divergent = SpectralDensity::Tabulated {
            samples: vec![(0.0, 0.3), (1.0, 0.1)],
        };
        match SpectralBath::new(divergent, 0.0) {
            Err(Error::LowFrequencyDivergence(_)) => {}
            other => panic!("expected low-frequency divergence, got {other:?}"),
        }
    }

    #[test]
    fn mode_validation() {
        assert!(BathMode::new(0.0, c(0.1, 0.0), 0.0, Complex64::ZERO).is_err());
        assert!(BathMode::new(1.0, c(0.1, 0.0), -0.1, Complex64::ZERO).is_err());
        assert!(BathMode::new(1.0, c(f64::NAN, 0.0), 0.0, Complex64::ZERO).is_err());
        assert!(ohmic_is_invalid(-0.1, 5.0));
        assert!(ohmic_is_invalid(0.1, 0.0));
    }

    fn ohmic_is_invalid(alpha: f64, omega_c: f64) -> bool {
        SpectralBath::new(SpectralDensity::OhmicExpCutoff { alpha, omega_c }, 0.0).is_err()
    }
}
