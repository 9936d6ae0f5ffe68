//! Command-line front end: run the engines on a scenario file, compare two
//! trajectory files, and dump kernel or cumulant tables.
//!
//! Exit codes: 0 success (and comparison pass), 1 comparison threshold
//! exceeded, 2 bad input or engine failure.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dephase::bath::{BathMode, BathModel};
use dephase::cumulant::cumulant_report;
use dephase::exact::{
    propagate_exact_charfn, propagate_exact_gaussian, propagate_exact_spectral, to_schrodinger,
    CoherenceTrajectory, ModeState,
};
use dephase::fock::{FockOracle, TruncatedBathSpec};
use dephase::tcl::{
    integrate_bloch_redfield, integrate_tcl2, markov_rates, DephasingKernels, MomentBath,
};
use dephase::Error;
use ndarray::Array2;
use num_complex::Complex64;

use config::{Engine, Scenario, ScenarioBath};
use output::KernelRow;

#[derive(Parser)]
#[command(
    name = "dephase",
    about = "Pure phase noise: exact, TCL2, and oracle engines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected engines on a scenario and write one CSV per engine
    /// plus the kernel table.
    Run {
        config: PathBuf,
        /// Write Schrödinger-picture matrices (free phases restored) instead
        /// of interaction-picture ones.
        #[arg(long)]
        schrodinger: bool,
    },
    /// Compare two trajectory CSVs element-wise and report the deviations.
    Compare {
        file_a: PathBuf,
        file_b: PathBuf,
        /// Largest acceptable |Δρ_mn| over all elements and times.
        #[arg(long, default_value_t = 1e-8)]
        threshold: f64,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write the kernel table (running kernel integrals, coordinate mean,
    /// and integrated functionals) for a scenario's bath.
    Kernels { config: PathBuf },
    /// Write the per-order cumulant contributions for one matrix element,
    /// next to the exact log coherence and the second-order resummation.
    Cumulants {
        config: PathBuf,
        /// Matrix element as "m,n", e.g. --element 0,1
        #[arg(long, value_parser = parse_element)]
        element: (usize, usize),
        /// Highest cumulant order to include (1 to 4).
        #[arg(long, default_value_t = 4)]
        orders: usize,
    },
}

fn parse_element(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"m,n\", got {s:?}"));
    }
    let parse = |p: &str| {
        p.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad index {p:?}: {e}"))
    };
    Ok((parse(parts[0])?, parse(parts[1])?))
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            schrodinger,
        } => cmd_run(&config, schrodinger),
        Command::Compare {
            file_a,
            file_b,
            threshold,
            report,
        } => cmd_compare(&file_a, &file_b, threshold, report.as_deref()),
        Command::Kernels { config } => cmd_kernels(&config),
        Command::Cumulants {
            config,
            element,
            orders,
        } => cmd_cumulants(&config, element, orders),
    }
}

fn load_or_report(path: &Path) -> Option<Scenario> {
    match config::load(path) {
        Ok(scenario) => Some(scenario),
        Err(errors) => {
            for e in errors {
                eprintln!("config error: {e}");
            }
            None
        }
    }
}

fn cmd_run(config: &Path, schrodinger: bool) -> ExitCode {
    let Some(scenario) = load_or_report(config) else {
        return ExitCode::from(2);
    };
    let mut failed = false;
    for engine in &scenario.engines {
        let label = engine.name();
        match run_engine(*engine, &scenario) {
            Ok(traj) => {
                let matrices = match picture(&traj, &scenario, schrodinger) {
                    Ok(matrices) => matrices,
                    Err(e) => {
                        println!("engine {label}: error: {e}");
                        failed = true;
                        continue;
                    }
                };
                let path = format!("{}_{label}.csv", scenario.prefix);
                let text = output::trajectory_csv(&traj.times, &matrices);
                match output::write_atomic(Path::new(&path), &text) {
                    Ok(()) => println!("engine {label}: ok -> {path}"),
                    Err(e) => {
                        println!("engine {label}: error: cannot write {path}: {e}");
                        failed = true;
                    }
                }
            }
            Err(e) => {
                println!("engine {label}: error: {e}");
                failed = true;
            }
        }
    }
    match write_kernels(&scenario) {
        Ok(path) => println!("kernels: ok -> {path}"),
        Err(e) => {
            println!("kernels: error: {e}");
            failed = true;
        }
    }
    if failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

/// Pick the requested picture's matrices out of a trajectory.
fn picture(
    traj: &CoherenceTrajectory,
    scenario: &Scenario,
    schrodinger: bool,
) -> dephase::Result<Vec<Array2<Complex64>>> {
    let matrices = if schrodinger {
        to_schrodinger(traj, &scenario.system)?.schrodinger.unwrap()
    } else {
        traj.interaction.clone()
    };
    Ok(matrices.iter().map(|m| m.data().clone()).collect())
}

fn run_engine(engine: Engine, scn: &Scenario) -> dephase::Result<CoherenceTrajectory> {
    match engine {
        Engine::Exact => match &scn.bath {
            ScenarioBath::Discrete { pairs, mixed: true } => {
                propagate_exact_charfn(&scn.system, pairs, &scn.rho0, &scn.times)
            }
            ScenarioBath::Discrete {
                pairs,
                mixed: false,
            } => propagate_exact_gaussian(
                &scn.system,
                &ScenarioBath::coupling_bath(pairs),
                &scn.rho0,
                &scn.times,
            ),
            ScenarioBath::Spectral(bath) => {
                propagate_exact_spectral(&scn.system, bath, &scn.rho0, &scn.times)
            }
        },
        Engine::Tcl2 => {
            let integrate = |kernels: &dyn DephasingKernels| {
                integrate_tcl2(
                    &scn.system,
                    kernels,
                    &scn.rho0,
                    &scn.times,
                    scn.rtol,
                    scn.atol,
                )
            };
            match &scn.bath {
                ScenarioBath::Discrete { pairs, mixed: true } => {
                    integrate(&MomentBath::from_states(pairs))
                }
                ScenarioBath::Discrete {
                    pairs,
                    mixed: false,
                } => integrate(&ScenarioBath::coupling_bath(pairs)),
                ScenarioBath::Spectral(bath) => integrate(bath),
            }
        }
        Engine::Markov => {
            let model = match &scn.bath {
                ScenarioBath::Discrete { pairs, .. } => {
                    BathModel::Discrete(ScenarioBath::coupling_bath(pairs))
                }
                ScenarioBath::Spectral(bath) => BathModel::Spectral(bath.clone()),
            };
            let rates = markov_rates(&model)?;
            integrate_bloch_redfield(&scn.system, &rates, &scn.rho0, &scn.times)
        }
        Engine::Oracle => match &scn.bath {
            ScenarioBath::Spectral(_) => Err(Error::UnsupportedModel(
                "the truncated-Fock oracle needs an explicit discrete mode list".to_string(),
            )),
            ScenarioBath::Discrete { pairs, .. } => {
                let settings = scn.oracle.as_ref().ok_or_else(|| {
                    Error::Domain("oracle engine selected without cutoffs".to_string())
                })?;
                let modes: Vec<BathMode> = pairs.iter().map(|(m, _)| m.clone()).collect();
                let mut spec = TruncatedBathSpec::new(modes, settings.n_max.clone())?;
                if let Some(limit) = settings.dimension_limit {
                    spec = spec.with_dimension_limit(limit);
                }
                let oracle = FockOracle::new(scn.system.clone(), spec)?;
                let states: Vec<ModeState> = pairs.iter().map(|(_, s)| s.clone()).collect();
                oracle.trajectory(&scn.rho0, &states, &scn.times)
            }
        },
    }
}

/// Kernel table rows for whichever bath the scenario declares.
fn kernel_rows(scn: &Scenario) -> dephase::Result<Vec<KernelRow>> {
    enum Source<'a> {
        Discrete(dephase::bath::DiscreteBath),
        Moment(MomentBath),
        Spectral(&'a dephase::bath::SpectralBath),
    }
    let source = match &scn.bath {
        ScenarioBath::Discrete { pairs, mixed: true } => {
            Source::Moment(MomentBath::from_states(pairs))
        }
        ScenarioBath::Discrete {
            pairs,
            mixed: false,
        } => Source::Discrete(ScenarioBath::coupling_bath(pairs)),
        ScenarioBath::Spectral(bath) => Source::Spectral(bath),
    };
    scn.times
        .iter()
        .map(|&t| {
            Ok(match &source {
                Source::Discrete(bath) => KernelRow {
                    t,
                    sym_integral: bath.sym_kernel_integral(t),
                    antisym_integral: bath.antisym_kernel_integral(t),
                    mean: bath.mean_coordinate(t),
                    damping: bath.damping_amplitude(t),
                    backaction: bath.backaction_phase(t),
                    displacement: bath.displacement_phase(t),
                },
                Source::Moment(bath) => KernelRow {
                    t,
                    sym_integral: bath.sym_kernel_integral(t)?,
                    antisym_integral: bath.antisym_kernel_integral(t)?,
                    mean: bath.mean_coordinate(t),
                    damping: bath.damping_amplitude(t),
                    backaction: bath.backaction_phase(t),
                    displacement: bath.displacement_phase(t),
                },
                Source::Spectral(bath) => KernelRow {
                    t,
                    sym_integral: bath.sym_kernel_integral(t)?,
                    antisym_integral: bath.antisym_kernel_integral(t)?,
                    // A continuum bath is stationary and undisplaced: the
                    // coordinate mean and displacement phase are identically
                    // zero.
                    mean: 0.0,
                    damping: bath.damping_amplitude(t)?,
                    backaction: bath.backaction_phase(t)?,
                    displacement: 0.0,
                },
            })
        })
        .collect()
}

fn write_kernels(scn: &Scenario) -> Result<String, String> {
    let rows = kernel_rows(scn).map_err(|e| e.to_string())?;
    let path = format!("{}_kernels.csv", scn.prefix);
    output::write_atomic(Path::new(&path), &output::kernels_csv(&rows))
        .map_err(|e| format!("cannot write {path}: {e}"))?;
    Ok(path)
}

fn cmd_compare(
    file_a: &Path,
    file_b: &Path,
    threshold: f64,
    report_path: Option<&Path>,
) -> ExitCode {
    let read = |path: &Path| {
        output::read_trajectory(path).map_err(|e| {
            eprintln!("compare: error: {e}");
        })
    };
    let Ok(table_a) = read(file_a) else {
        return ExitCode::from(2);
    };
    let Ok(table_b) = read(file_b) else {
        return ExitCode::from(2);
    };
    let cmp = match output::compare_tables(&table_a, &table_b, threshold) {
        Ok(cmp) => cmp,
        Err(e) => {
            eprintln!("compare: error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = output::comparison_report(
        &file_a.display().to_string(),
        &file_b.display().to_string(),
        &cmp,
    );
    print!("{report}");
    if let Some(path) = report_path {
        if let Err(e) = output::write_atomic(path, &report) {
            eprintln!("compare: error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if cmp.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_kernels(config: &Path) -> ExitCode {
    let Some(scenario) = load_or_report(config) else {
        return ExitCode::from(2);
    };
    match write_kernels(&scenario) {
        Ok(path) => {
            println!("kernels: ok -> {path}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("kernels: error: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_cumulants(config: &Path, element: (usize, usize), orders: usize) -> ExitCode {
    let Some(scenario) = load_or_report(config) else {
        return ExitCode::from(2);
    };
    if !(1..=4).contains(&orders) {
        eprintln!("cumulants: error: orders must be between 1 and 4, got {orders}");
        return ExitCode::from(2);
    }
    let pairs = match &scenario.bath {
        ScenarioBath::Discrete { pairs, .. } => pairs,
        ScenarioBath::Spectral(_) => {
            eprintln!(
                "cumulants: error: {}",
                Error::UnsupportedModel(
                    "the cumulant breakdown needs an explicit discrete mode list".to_string()
                )
            );
            return ExitCode::from(2);
        }
    };
    let (m, n) = element;
    let mut rows = Vec::with_capacity(scenario.times.len());
    for &t in &scenario.times {
        match cumulant_report(&scenario.system, pairs, m, n, t, orders) {
            Ok(report) => rows.push((
                report.order_contributions,
                report.exact_log,
                report.tcl2_log,
            )),
            Err(e) => {
                eprintln!("cumulants: error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    let path = format!("{}_cumulants_{m}_{n}.csv", scenario.prefix);
    let text = output::cumulants_csv(&scenario.times, orders, &rows);
    match output::write_atomic(Path::new(&path), &text) {
        Ok(()) => {
            println!("cumulants: ok -> {path}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cumulants: error: cannot write {path}: {e}");
            ExitCode::from(2)
        }
    }
}
