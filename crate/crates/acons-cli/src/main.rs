//! `acons`: dynamic active weighted average consensus over switched
//! schedules: simulation, stability certification, and containment
//! control.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use acons_cli::config::ScenarioConfig;
use acons_cli::demos;
use acons_cli::output;
use acons_cli::run;

#[derive(Parser)]
#[command(
    name = "acons",
    version,
    about = "Active weighted average consensus: simulate, analyze, certify, contain",
    after_help = "Set ACONS_LOG=debug|info|warn to control log verbosity."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario config (JSON). Required by everything except `demo`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV and JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Base seed for seed-derived scenario families (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for scenario-level parallelism (certify only).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Run discrete-time scenarios even when delta_c exceeds the stability
    /// limit (useful for demonstrating the Schur boundary).
    #[arg(long, global = true)]
    allow_unstable: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Subsystem spectra, Hurwitz verdicts, and the stable step limit.
    Analyze,
    /// Continuous-time simulation (switch-aligned RK4).
    SimulateCt,
    /// Discrete-time simulation (dual-rate sampling).
    SimulateDt,
    /// Containment control of leaders' convex hull.
    Containment,
    /// Fit exponential envelopes and check bound domination.
    Certify,
    /// Write and run a canned scenario.
    Demo {
        #[arg(value_enum)]
        which: DemoKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoKind {
    Fig2,
    Fig4,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ACONS_LOG", "warn")).init();
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Demo { which } => {
            let cfg = match which {
                DemoKind::Fig2 => demos::fig2_config(),
                DemoKind::Fig4 => demos::fig4_config(),
            };
            std::fs::create_dir_all(&cli.out)
                .with_context(|| format!("creating {}", cli.out.display()))?;
            let cfg_path = cli.out.join(format!("{}_config.json", cfg.name));
            cfg.save(&cfg_path)?;
            info!("wrote {}", cfg_path.display());
            match which {
                DemoKind::Fig2 => cmd_simulate_ct(&cli, &cfg),
                DemoKind::Fig4 => cmd_containment(&cli, &cfg),
            }
        }
        _ => {
            let path = cli
                .config
                .as_ref()
                .context("--config PATH is required (except for `demo`)")?;
            let cfg = ScenarioConfig::load(path)?;
            match &cli.command {
                Command::Analyze => cmd_analyze(&cli, &cfg),
                Command::SimulateCt => cmd_simulate_ct(&cli, &cfg),
                Command::SimulateDt => cmd_simulate_dt(&cli, &cfg),
                Command::Containment => cmd_containment(&cli, &cfg),
                Command::Certify => cmd_certify(&cli, &cfg),
                Command::Demo { .. } => unreachable!("handled above"),
            }
        }
    }
}

fn base_seed(cli: &Cli, cfg: &ScenarioConfig) -> u64 {
    cli.seed.or(cfg.seed).unwrap_or(0)
}

fn out_path(cli: &Cli, cfg: &ScenarioConfig, suffix: &str) -> PathBuf {
    cli.out.join(format!("{}_{suffix}", cfg.name))
}

fn cmd_analyze(cli: &Cli, cfg: &ScenarioConfig) -> Result<()> {
    let report = run::run_analyze(cfg)?;
    let path = out_path(cli, cfg, "analysis.json");
    output::write_json(&path, &report)?;

    println!("scenario {}: {} agents, {} subsystems", report.name, report.agents, report.subsystems.len());
    for sub in &report.subsystems {
        println!(
            "  subsystem {}: {} (max Re = {:+.3e}), -(E+L) hurwitz: {}",
            sub.index, sub.classification, sub.margin, sub.activity_laplacian_hurwitz
        );
    }
    println!("  stable step limit d_bar = {:.6}", report.d_bar);
    if let (Some(dc), Some(stable)) = (report.delta_c, report.delta_c_stable) {
        println!("  delta_c = {dc}: {}", if stable { "stable" } else { "NOT stable" });
    }
    println!("report: {}", path.display());
    if !report.pass {
        bail!("analysis failed: unstable subsystem or delta_c at/above the limit");
    }
    Ok(())
}

fn cmd_simulate_ct(cli: &Cli, cfg: &ScenarioConfig) -> Result<()> {
    let seed = base_seed(cli, cfg);
    let out = run::run_ct(cfg, seed)?;
    let header_only = cfg.horizon == Some(0.0);

    let traj_path = out_path(cli, cfg, "ct_trajectory.csv");
    output::write_ct_csv(&traj_path, &out, header_only)?;
    let err_path = out_path(cli, cfg, "ct_error.csv");
    output::write_ct_error_csv(&err_path, &out, header_only)?;
    println!("trajectory: {}", traj_path.display());
    println!("errors:     {}", err_path.display());

    if let Some(bounds) = &out.bound {
        let bound_path = out_path(cli, cfg, "ct_bound.csv");
        output::write_bound_csv(&bound_path, &out.segments[0].trajectory, bounds)?;
        println!("bound:      {}", bound_path.display());
    }

    let max_err = out
        .max_error_series()
        .iter()
        .fold(0.0f64, |m, (_, e)| m.max(*e));
    println!("max tracking error over the run: {max_err:.6e}");
    Ok(())
}

fn cmd_simulate_dt(cli: &Cli, cfg: &ScenarioConfig) -> Result<()> {
    let seed = base_seed(cli, cfg);
    let out = run::run_dt(cfg, seed, cli.allow_unstable)?;
    let header_only = cfg.dt.as_ref().is_some_and(|d| d.steps == 0);

    let traj_path = out_path(cli, cfg, "dt_trajectory.csv");
    output::write_dt_csv(&traj_path, &out.scenario, &out.trajectory, header_only)?;
    println!("trajectory: {}", traj_path.display());
    println!("stable step limit d_bar = {:.6}", out.d_bar);

    if let Some(bounds) = &out.bound {
        let bound_path = out_path(cli, cfg, "dt_bound.csv");
        output::write_dt_bound_csv(&bound_path, &out.trajectory, bounds)?;
        println!("bound:      {}", bound_path.display());
    }
    println!("max tracking error over the run: {:.6e}", out.trajectory.max_error());
    Ok(())
}

fn cmd_containment(cli: &Cli, cfg: &ScenarioConfig) -> Result<()> {
    let out = run::run_containment(cfg, cli.allow_unstable)?;

    let traj_path = out_path(cli, cfg, "containment.csv");
    output::write_containment_csv(&traj_path, &out.report)?;
    let hull_path = out_path(cli, cfg, "containment_hull.csv");
    output::write_hull_csv(&hull_path, &out.report)?;

    let summary = serde_json::json!({
        "schema_version": acons_cli::config::SCHEMA_VERSION,
        "name": cfg.name,
        "steps": out.report.steps.len(),
        "delta_c": out.delta_c,
        "delta_s": out.delta_s,
        "d_bar": out.d_bar,
        "max_error": out.report.max_error,
        "final_max_error": out.report.steps.last()
            .map(|s| s.errors.iter().cloned().fold(0.0f64, f64::max)),
        "xbar_membership_violations": out.report.xbar_membership_violations,
    });
    let summary_path = out_path(cli, cfg, "containment_summary.json");
    output::write_json(&summary_path, &summary)?;

    println!("followers:  {}", traj_path.display());
    println!("hulls:      {}", hull_path.display());
    println!("summary:    {}", summary_path.display());
    println!(
        "max error {:.6e}, hull-membership violations of the target: {}",
        out.report.max_error, out.report.xbar_membership_violations
    );
    if out.report.xbar_membership_violations > 0 {
        bail!("the consensus target left the observed hull");
    }
    Ok(())
}

fn cmd_certify(cli: &Cli, cfg: &ScenarioConfig) -> Result<()> {
    let seed = base_seed(cli, cfg);
    let report = run::run_certify(cfg, seed, cli.jobs.max(1))?;
    let path = out_path(cli, cfg, "certificate.json");
    output::write_json(&path, &report)?;

    println!("scenario {}: d_bar = {:.6}", report.name, report.d_bar);
    for mode in [&report.ct, &report.dt].into_iter().flatten() {
        println!(
            "  {} certificate: kappa = {:.4}, rate = {:.6}; domination over {} scenarios / {} points: min margin {:+.3e}, {} violations",
            mode.mode,
            mode.kappa,
            mode.rate,
            mode.domination.scenarios,
            mode.domination.points,
            mode.domination.min_margin,
            mode.domination.violations
        );
    }
    println!("report: {}", path.display());
    if !report.pass {
        bail!("bound domination failed");
    }
    println!("certification passed");
    Ok(())
}
