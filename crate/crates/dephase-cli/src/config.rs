//! Scenario files: parsing, validation, and resolution into domain objects.
//!
//! Scenarios are TOML. Validation is aggregated: every problem found is
//! reported in one pass instead of stopping at the first, so a config can be
//! fixed in a single round.

use std::fs;
use std::path::Path;

use dephase::bath::{BathMode, DiscreteBath, SpectralBath, SpectralDensity};
use dephase::exact::{DensityMatrix, ModeState, SystemSpec};
use dephase::tcl::{DEFAULT_ATOL, DEFAULT_RTOL};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Raw scenario file, mirroring the TOML section for section. Optional
/// fields stay optional here so serialization round-trips exactly what was
/// written; defaults are applied during [`resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemSection,
    pub initial: InitialSection,
    pub grid: GridSection,
    pub engines: EnginesSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesSection>,
    pub output: OutputSection,
    pub bath: BathSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub energies: Vec<f64>,
    pub couplings: Vec<f64>,
}

/// Initial density matrix as separate real and imaginary parts, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Uniform grid from t = 0 to `t_end` with `n_points` samples inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t_end: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnginesSection {
    pub selected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub prefix: String,
}

/// Exactly one of `modes` (finite mode list, possibly empty) or `spectral`
/// (continuum family) must be present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ModeSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
}

/// One bath mode. Complex numbers are `[re, im]` pairs. The preparation is
/// Gaussian (`nbar` thermal occupation displaced by `beta`, both defaulting
/// to zero) unless `mixture` is given, in which case it is a finite mixture
/// of coherent states with rows `[weight, re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub omega: f64,
    pub g: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<Vec<[f64; 3]>>,
}

/// Continuum bath: `family = "ohmic"` (J = alpha ω e^{-ω/omega_c}, needs
/// `alpha` and `omega_c`) or `family = "tabulated"` (needs `samples` as
/// `[omega, j]` rows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
    pub temperature: f64,
}

/// Settings for the truncated-Fock oracle engine: one cutoff per mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub n_max: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension_limit: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Exact,
    Tcl2,
    Markov,
    Oracle,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::Tcl2 => "tcl2",
            Engine::Markov => "markov",
            Engine::Oracle => "oracle",
        }
    }

    fn parse(name: &str) -> Option<Engine> {
        match name {
            "exact" => Some(Engine::Exact),
            "tcl2" => Some(Engine::Tcl2),
            "markov" => Some(Engine::Markov),
            "oracle" => Some(Engine::Oracle),
            _ => None,
        }
    }
}

/// Fully validated scenario with every domain object constructed.
#[derive(Debug)]
pub struct Scenario {
    pub system: SystemSpec,
    pub rho0: DensityMatrix,
    pub times: Vec<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub engines: Vec<Engine>,
    pub bath: ScenarioBath,
    pub oracle: Option<OracleSettings>,
    pub prefix: String,
}

#[derive(Debug)]
pub struct OracleSettings {
    pub n_max: Vec<usize>,
    pub dimension_limit: Option<usize>,
}

#[derive(Debug)]
pub enum ScenarioBath {
    /// Finite mode list with one preparation per mode. `mixed` records
    /// whether any preparation is non-Gaussian, which decides the exact and
    /// TCL2 code paths.
    Discrete {
        pairs: Vec<(BathMode, ModeState)>,
        mixed: bool,
    },
    Spectral(SpectralBath),
}

impl ScenarioBath {
    pub fn coupling_bath(pairs: &[(BathMode, ModeState)]) -> DiscreteBath {
        DiscreteBath::new(pairs.iter().map(|(m, _)| m.clone()).collect())
    }
}

pub fn load(path: &Path) -> Result<Scenario, Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    let config: ScenarioConfig =
        toml::from_str(&text).map_err(|e| vec![format!("cannot parse {}: {e}", path.display())])?;
    resolve(&config)
}

/// Validate the raw config and build the domain objects. All discovered
/// problems are returned together.
pub fn resolve(config: &ScenarioConfig) -> Result<Scenario, Vec<String>> {
    let mut errors = Vec::new();

    let system = SystemSpec::new(
        config.system.energies.clone(),
        config.system.couplings.clone(),
    )
    .map_err(|e| errors.push(format!("system: {e}")))
    .ok();

    let rho0 = resolve_initial(&config.initial, &mut errors);
    if let (Some(system), Some(rho0)) = (&system, &rho0) {
        if system.dim() != rho0.dim() {
            errors.push(format!(
                "initial: matrix dimension {} does not match system dimension {}",
                rho0.dim(),
                system.dim()
            ));
        }
    }

    let times = resolve_grid(&config.grid, &mut errors);
    let (rtol, atol) = resolve_tolerances(config.tolerances.as_ref(), &mut errors);
    let engines = resolve_engines(&config.engines, &mut errors);
    let bath = resolve_bath(&config.bath, &mut errors);

    if config.output.prefix.is_empty() {
        errors.push("output: prefix must not be empty".to_string());
    }

    let oracle = config.oracle.as_ref().map(|section| OracleSettings {
        n_max: section.n_max.clone(),
        dimension_limit: section.dimension_limit,
    });
    if engines.contains(&Engine::Oracle) {
        match (&oracle, &bath) {
            (None, Some(ScenarioBath::Discrete { .. })) => errors.push(
                "oracle: the oracle engine needs an [oracle] section with per-mode cutoffs"
                    .to_string(),
            ),
            (Some(settings), Some(ScenarioBath::Discrete { pairs, .. }))
                if settings.n_max.len() != pairs.len() =>
            {
                errors.push(format!(
                    "oracle: {} cutoffs given for {} modes",
                    settings.n_max.len(),
                    pairs.len()
                ));
            }
            // A spectral bath is rejected by the engine itself at run time,
            // matching how the Markov engine treats a discrete bath; a bath
            // that failed to resolve was already reported above.
            _ => {}
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Scenario {
        system: system.unwrap(),
        rho0: rho0.unwrap(),
        times: times.unwrap(),
        rtol,
        atol,
        engines,
        bath: bath.unwrap(),
        oracle,
        prefix: config.output.prefix.clone(),
    })
}

fn resolve_initial(section: &InitialSection, errors: &mut Vec<String>) -> Option<DensityMatrix> {
    let d = section.re.len();
    let square = |rows: &Vec<Vec<f64>>| rows.iter().all(|row| row.len() == d);
    if d == 0 || !square(&section.re) {
        errors.push("initial: re must be a non-empty square matrix".to_string());
        return None;
    }
    if section.im.len() != d || !square(&section.im) {
        errors.push("initial: im must have the same shape as re".to_string());
        return None;
    }
    let data = Array2::from_shape_fn((d, d), |(m, n)| {
        Complex64::new(section.re[m][n], section.im[m][n])
    });
    DensityMatrix::new(data)
        .map_err(|e| errors.push(format!("initial: {e}")))
        .ok()
}

fn resolve_grid(section: &GridSection, errors: &mut Vec<String>) -> Option<Vec<f64>> {
    let mut ok = true;
    if !(section.t_end > 0.0) || !section.t_end.is_finite() {
        errors.push(format!("grid: t_end must be > 0, got {}", section.t_end));
        ok = false;
    }
    if section.n_points < 2 {
        errors.push(format!(
            "grid: n_points must be at least 2, got {}",
            section.n_points
        ));
        ok = false;
    }
    if !ok {
        return None;
    }
    let n = section.n_points;
    Some(
        (0..n)
            .map(|i| section.t_end * i as f64 / (n - 1) as f64)
            .collect(),
    )
}

fn resolve_tolerances(section: Option<&TolerancesSection>, errors: &mut Vec<String>) -> (f64, f64) {
    let rtol = section.and_then(|s| s.rtol).unwrap_or(DEFAULT_RTOL);
    let atol = section.and_then(|s| s.atol).unwrap_or(DEFAULT_ATOL);
    if !(rtol > 0.0) || !rtol.is_finite() {
        errors.push(format!("tolerances: rtol must be > 0, got {rtol}"));
    }
    if !(atol >= 0.0) || !atol.is_finite() {
        errors.push(format!("tolerances: atol must be >= 0, got {atol}"));
    }
    (rtol, atol)
}

fn resolve_engines(section: &EnginesSection, errors: &mut Vec<String>) -> Vec<Engine> {
    if section.selected.is_empty() {
        errors.push("engines: select at least one of exact, tcl2, markov, oracle".to_string());
    }
    let mut engines = Vec::new();
    for name in &section.selected {
        match Engine::parse(name) {
            Some(engine) if engines.contains(&engine) => {
                errors.push(format!("engines: '{name}' selected twice"));
            }
            Some(engine) => engines.push(engine),
            None => errors.push(format!(
                "engines: unknown engine '{name}' (expected exact, tcl2, markov, or oracle)"
            )),
        }
    }
    engines
}

fn resolve_bath(section: &BathSection, errors: &mut Vec<String>) -> Option<ScenarioBath> {
    match (&section.modes, &section.spectral) {
        (Some(_), Some(_)) => {
            errors.push("bath: give either a mode list or a spectral family, not both".to_string());
            None
        }
        (None, None) => {
            errors.push("bath: needs a mode list or a spectral family".to_string());
            None
        }
        (Some(modes), None) => {
            let mut pairs = Vec::new();
            let mut mixed = false;
            let mut complete = true;
            for (index, mode) in modes.iter().enumerate() {
                match resolve_mode(index, mode, errors) {
                    Some((bath_mode, state)) => {
                        if matches!(state, ModeState::CoherentMixture { .. }) {
                            mixed = true;
                        }
                        pairs.push((bath_mode, state));
                    }
                    None => complete = false,
                }
            }
            complete.then_some(ScenarioBath::Discrete { pairs, mixed })
        }
        (None, Some(spectral)) => resolve_spectral(spectral, errors).map(ScenarioBath::Spectral),
    }
}

fn resolve_mode(
    index: usize,
    section: &ModeSection,
    errors: &mut Vec<String>,
) -> Option<(BathMode, ModeState)> {
    let g = Complex64::new(section.g[0], section.g[1]);
    if let Some(mixture) = &section.mixture {
        if section.nbar.is_some() || section.beta.is_some() {
            errors.push(format!(
                "bath mode {index}: gaussian fields (nbar/beta) and a mixture preparation \
                 are mutually exclusive"
            ));
            return None;
        }
        let mode = BathMode::new(section.omega, g, 0.0, Complex64::ZERO)
            .map_err(|e| errors.push(format!("bath mode {index}: {e}")))
            .ok();
        let components = mixture
            .iter()
            .map(|[w, re, im]| (*w, Complex64::new(*re, *im)))
            .collect();
        let state = ModeState::coherent_mixture(components)
            .map_err(|e| errors.push(format!("bath mode {index}: {e}")))
            .ok();
        Some((mode?, state?))
    } else {
        let nbar = section.nbar.unwrap_or(0.0);
        let beta = section
            .beta
            .map(|[re, im]| Complex64::new(re, im))
            .unwrap_or(Complex64::ZERO);
        let mode = BathMode::new(section.omega, g, nbar, beta)
            .map_err(|e| errors.push(format!("bath mode {index}: {e}")))
            .ok()?;
        let state = ModeState::gaussian(nbar, beta)
            .map_err(|e| errors.push(format!("bath mode {index}: {e}")))
            .ok()?;
        Some((mode, state))
    }
}

fn resolve_spectral(section: &SpectralSection, errors: &mut Vec<String>) -> Option<SpectralBath> {
    let density = match section.family.as_str() {
        "ohmic" => {
            if section.samples.is_some() {
                errors.push("bath.spectral: the ohmic family takes no samples".to_string());
                return None;
            }
            match (section.alpha, section.omega_c) {
                (Some(alpha), Some(omega_c)) => SpectralDensity::OhmicExpCutoff { alpha, omega_c },
                _ => {
                    errors.push(
                        "bath.spectral: the ohmic family needs alpha and omega_c".to_string(),
                    );
                    return None;
                }
            }
        }
        "tabulated" => {
            if section.alpha.is_some() || section.omega_c.is_some() {
                errors.push(
                    "bath.spectral: the tabulated family takes samples only, not alpha/omega_c"
                        .to_string(),
                );
                return None;
            }
            match &section.samples {
                Some(samples) => SpectralDensity::Tabulated {
                    samples: samples.iter().map(|[w, j]| (*w, *j)).collect(),
                },
                None => {
                    errors.push("bath.spectral: the tabulated family needs samples".to_string());
                    return None;
                }
            }
        }
        other => {
            errors.push(format!(
                "bath.spectral: unknown family '{other}' (expected \"ohmic\" or \"tabulated\")"
            ));
            return None;
        }
    };
    SpectralBath::new(density, section.temperature)
        .map_err(|e| errors.push(format!("bath.spectral: {e}")))
        .ok()
}
