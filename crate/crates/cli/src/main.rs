//! `roadheat`: closed-loop runs, oracle checks and with/without-battery
//! comparisons.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 oracle mismatch.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use roadheat_core::controller::{run_closed_loop, RunOptions, SearchMode};
use roadheat_core::oracle::suite;
use roadheat_core::output::{self, Comparison, RunReport};
use roadheat_core::{couple_line_and_cable, load_scenario, Error, Scenario, ShootingOptions};

#[derive(Parser)]
#[command(
    name = "roadheat",
    version,
    about = "Road-heating feeder simulator with predictive switching"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed loop on a scenario and write CSV artifacts.
    Run {
        config: PathBuf,
        /// Simulated minutes (multiple of t_mini); defaults to the series window.
        #[arg(long)]
        duration: Option<f64>,
        /// Pin the battery capacity to its floor.
        #[arg(long)]
        no_battery: bool,
        /// Search every joint word sequence instead of the staged cascade.
        #[arg(long)]
        joint: bool,
        /// Worker threads for candidate rollouts (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Directory for the CSV artifacts.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write every scored candidate to planning_log.csv.
        #[arg(long)]
        log_candidates: bool,
    },
    /// Check a solver against its brute-force reference.
    Oracle {
        which: OracleKind,
        /// Ladder cells (ladder) or number of checked slots (enumeration).
        #[arg(long)]
        size: Option<usize>,
    },
    /// Run two scenarios and report them side by side.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Optional CSV of the per-slot deviation difference.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Ladder,
    Heat,
    Enumeration,
}

enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
    Mismatch(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let numerical = e
            .chain()
            .any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_numerical));
        if numerical {
            Failure::Numerical(e)
        } else {
            Failure::Usage(e)
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Mismatch(msg)) => {
            eprintln!("oracle mismatch: {msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            config,
            duration,
            no_battery,
            joint,
            threads,
            out,
            log_candidates,
        } => {
            set_threads(threads)?;
            let scenario = load(&config, no_battery)?;
            let mode = if joint {
                SearchMode::Joint
            } else {
                SearchMode::Cascade
            };
            let report = run(&scenario, duration, mode, Some((&out, log_candidates)))?;
            println!("{report}");
            Ok(())
        }
        Command::Oracle { which, size } => oracle(which, size),
        Command::Compare {
            config_a,
            config_b,
            duration,
            threads,
            out,
        } => {
            set_threads(threads)?;
            let a = run(
                &load(&config_a, false)?,
                duration,
                SearchMode::Cascade,
                None,
            )?;
            let b = run(
                &load(&config_b, false)?,
                duration,
                SearchMode::Cascade,
                None,
            )?;
            let cmp = Comparison::new(a, b);
            println!("{cmp}");
            if let Some(path) = out {
                let f = create(&path)?;
                cmp.write_csv(f)?;
            }
            Ok(())
        }
    }
}

fn set_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn load(config: &Path, no_battery: bool) -> Result<Scenario, Failure> {
    let sc =
        load_scenario(config).with_context(|| format!("loading scenario {}", config.display()))?;
    Ok(if no_battery { sc.without_battery() } else { sc })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn run(
    scenario: &Scenario,
    duration: Option<f64>,
    mode: SearchMode,
    artifacts: Option<(&Path, bool)>,
) -> Result<RunReport, Failure> {
    let duration = duration.unwrap_or_else(|| {
        let t = scenario.controller.t_mini;
        (scenario.series.end_min() / t + 1e-9).floor() * t
    });
    let opts = ShootingOptions {
        tol: scenario.numerics.shooting_tol,
        max_iter: scenario.numerics.max_newton_iter,
        ..ShootingOptions::default()
    };
    let run_opts = RunOptions {
        mode,
        keep_candidates: artifacts.is_some_and(|(_, log)| log),
    };
    let outcome = run_closed_loop(scenario, duration, run_opts, &opts)?;
    let report = RunReport::from_outcome(&outcome, scenario);
    if let Some((dir, log_candidates)) = artifacts {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        output::write_trajectory(
            create(&dir.join("trajectory.csv"))?,
            &outcome.records,
            &scenario.grid,
        )?;
        let x_m: Vec<f64> = scenario
            .x_grid()
            .iter()
            .map(|x| x * scenario.grid.line_length)
            .collect();
        output::write_thermal(
            create(&dir.join("thermal.csv"))?,
            &outcome.last.thermal,
            &x_m,
        )?;
        let exo = scenario.series.at(outcome.last.t_min, &scenario.thermal);
        let flow = couple_line_and_cable(&outcome.last.control, scenario, &exo, &opts)?;
        output::write_profile(
            create(&dir.join("line_profile.csv"))?,
            &flow.line,
            &scenario.grid,
        )?;
        output::write_profile(
            create(&dir.join("cable_profile.csv"))?,
            &flow.cable,
            &scenario.grid,
        )?;
        if log_candidates {
            output::write_planning_log(
                create(&dir.join("planning_log.csv"))?,
                &outcome.candidates,
            )?;
        }
    }
    Ok(report)
}

fn oracle(which: OracleKind, size: Option<usize>) -> Result<(), Failure> {
    match which {
        OracleKind::Ladder => {
            let cells = size.unwrap_or(10_000);
            let checks = suite::run_ladder_suite(200, cells)?;
            let mut ok = true;
            for c in &checks {
                println!(
                    "{:<28} max rel |dv| {:.3e}  loss rel {:.3e}  solve {:.3} ms  {}",
                    c.name,
                    c.max_rel_error,
                    c.loss_rel_error,
                    c.solve_ms,
                    verdict(c.passes())
                );
                ok &= c.passes();
            }
            println!(
                "threshold {:.0e} relative, {} ms per solve",
                suite::LADDER_TOL,
                suite::SOLVE_BUDGET_MS
            );
            ok.then_some(())
                .ok_or_else(|| Failure::Mismatch("ladder".into()))
        }
        OracleKind::Heat => {
            let h = suite::run_heat_suite();
            println!(
                "steady two-Robin L∞   {:.3e} °C (≤ {:.0e})",
                h.steady_linf,
                suite::STEADY_TOL
            );
            println!(
                "Fourier mid-column    {:.3e} °C (≤ {:.0e})",
                h.fourier,
                suite::FOURIER_TOL
            );
            println!(
                "cable step            {:.3e} °C (≤ {:.0e})",
                h.cable_step,
                suite::CABLE_STEP_TOL
            );
            println!("{}", verdict(h.passes()));
            h.passes()
                .then_some(())
                .ok_or_else(|| Failure::Mismatch("heat".into()))
        }
        OracleKind::Enumeration => {
            let reports = suite::run_enumeration_suite(size.unwrap_or(3))?;
            let mut ok = true;
            for (k, r) in reports.iter().enumerate() {
                for s in &r.stages {
                    println!(
                        "slot {k} {:<8} cascade {} exhaustive {}  {}",
                        s.stage.label(),
                        s.cascade,
                        s.exhaustive,
                        verdict(s.agrees())
                    );
                }
                println!(
                    "slot {k} joint J {:.6e} cascade J {:.6e}",
                    r.joint_j, r.cascade_j
                );
                ok &= r.all_agree();
            }
            ok.then_some(())
                .ok_or_else(|| Failure::Mismatch("enumeration".into()))
        }
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
