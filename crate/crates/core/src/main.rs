//! Command-line driver: single runs, Monte Carlo ensembles, fixed-seed
//! noise-intensity sweeps, and the verification suite.
//!
//! All outputs go into a run-name-keyed subdirectory of the output root and
//! contain no timestamps, so identical invocations produce byte-identical
//! files. A canonical config echo (`config.json`) is written next to every
//! run's outputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stoch_ch::config::{Mode, RunConfig};
use stoch_ch::ensemble::{run_ensemble, EnsembleResult};
use stoch_ch::error::SimError;
use stoch_ch::mesh::Grid;
use stoch_ch::postproc::{
    extract_contour, format_g17, write_csv_timeseries, write_vtk_field,
};
use stoch_ch::stepper::{run_simulation, ObserverConfig, Trajectory};
use stoch_ch::verify::{
    check_conservation_dissipation, check_element_oracles, check_energy_estimate,
    check_noise_statistics, check_spatial_convergence, check_yosida, CheckReport,
};

#[derive(Parser)]
#[command(name = "stoch-ch", version, about = "Stochastic Cahn-Hilliard tumor-growth simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// JSON config file of dotted keys; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Elements per axis in x.
    #[arg(long)]
    nx: Option<usize>,
    /// Elements per axis in y.
    #[arg(long)]
    ny: Option<usize>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Phase-field noise intensity.
    #[arg(long)]
    nu: Option<f64>,
    /// Number of Monte Carlo samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Base seed for the noise streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Output root directory (fallback: SPDE_TUMOR_OUT, then "out").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    snapshot_times: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a single trajectory.
    Run(CommonOpts),
    /// Run a Monte Carlo ensemble and write mean/std statistics.
    Ensemble(CommonOpts),
    /// Run one trajectory per noise intensity, all from the same seed.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated noise intensities (overrides `sweep.nu`).
        #[arg(long, value_delimiter = ',')]
        nu_values: Option<Vec<f64>>,
    },
    /// Run the verification suite; nonzero exit on any failing check.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// Skip the long-running convergence and estimate checks.
        #[arg(long)]
        quick: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SimError::InvalidInput(_) | SimError::Config(_) | SimError::DimensionMismatch { .. } => 1,
                _ => 2,
            }
        }
    };
    ExitCode::from(code)
}

fn dispatch(cli: Cli) -> Result<u8, SimError> {
    match cli.command {
        Command::Run(opts) => {
            let cfg = build_config(&opts, Mode::Run, None)?;
            init_threads(opts.threads)?;
            cmd_run(&cfg)?;
            Ok(0)
        }
        Command::Ensemble(opts) => {
            let cfg = build_config(&opts, Mode::Ensemble, None)?;
            init_threads(opts.threads)?;
            cmd_ensemble(&cfg)?;
            Ok(0)
        }
        Command::Sweep { common, nu_values } => {
            let cfg = build_config(&common, Mode::Sweep, nu_values)?;
            init_threads(common.threads)?;
            cmd_sweep(&cfg)?;
            Ok(0)
        }
        Command::Verify { common, quick } => {
            let cfg = build_config(&common, Mode::Verify, None)?;
            init_threads(common.threads)?;
            cmd_verify(&cfg, quick)
        }
    }
}

/// Merge defaults, config file, environment, and flags (in that order).
fn build_config(
    opts: &CommonOpts,
    mode: Mode,
    nu_values: Option<Vec<f64>>,
) -> Result<RunConfig, SimError> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.mode = mode;
    let file_set_out = cfg.out_dir != RunConfig::default().out_dir;
    if let Some(nx) = opts.nx {
        cfg.nx = nx;
    }
    if let Some(ny) = opts.ny {
        cfg.ny = ny;
    }
    if let Some(dt) = opts.dt {
        cfg.params.dt = dt;
    }
    if let Some(t) = opts.t_end {
        cfg.params.t_end = t;
    }
    if let Some(nu) = opts.nu {
        cfg.params.noise.nu = nu;
    }
    if let Some(s) = opts.samples {
        cfg.n_samples = s;
    }
    if let Some(s) = opts.seed {
        cfg.base_seed = s;
    }
    if let Some(t) = &opts.snapshot_times {
        cfg.snapshot_times = t.clone();
    }
    if let Some(nus) = nu_values {
        cfg.sweep_nu = nus;
    }
    if let Some(out) = &opts.out {
        cfg.out_dir = out.display().to_string();
    } else if !file_set_out {
        if let Ok(env_out) = std::env::var("SPDE_TUMOR_OUT") {
            if !env_out.is_empty() {
                cfg.out_dir = env_out;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads(threads: Option<usize>) -> Result<(), SimError> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(SimError::InvalidInput("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| SimError::InvalidInput(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn io_err(path: &Path, e: std::io::Error) -> SimError {
    SimError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

fn make_run_dir(cfg: &RunConfig, name: &str) -> Result<PathBuf, SimError> {
    let dir = Path::new(&cfg.out_dir).join(name);
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    std::fs::write(dir.join("config.json"), cfg.echo())
        .map_err(|e| io_err(&dir.join("config.json"), e))?;
    Ok(dir)
}

fn observer(cfg: &RunConfig, log_noise: bool) -> ObserverConfig {
    ObserverConfig {
        qoi_every: cfg.qoi_every,
        snapshot_times: cfg.snapshot_times.clone(),
        log_noise,
    }
}

/// File-name-safe rendering of a time or parameter value (dot kept; it is
/// unambiguous on all supported platforms).
fn tag(v: f64) -> String {
    format_g17(v)
}

fn write_trajectory(dir: &Path, grid: &Grid, traj: &Trajectory) -> Result<(), SimError> {
    write_csv_timeseries(&dir.join("qoi.csv"), &traj.times, &traj.qoi_columns())?;
    for snap in &traj.snapshots {
        let path = dir.join(format!("fields_t{}.vtk", tag(snap.t)));
        write_vtk_field(
            &path,
            grid,
            &[
                ("phi".to_string(), snap.phi.clone()),
                ("sigma".to_string(), snap.sigma.clone()),
            ],
        )?;
        write_contour_csv(&dir.join(format!("contour_t{}.csv", tag(snap.t))), grid, &snap.phi)?;
    }
    Ok(())
}

/// Half-level phase contour as CSV rows `polyline,vertex,x,y`.
fn write_contour_csv(path: &Path, grid: &Grid, phi: &[f64]) -> Result<(), SimError> {
    let contour = extract_contour(grid, phi, 0.5)?;
    let mut out = String::from("polyline,vertex,x,y\n");
    for (pi, line) in contour.polylines.iter().enumerate() {
        for (vi, (x, y)) in line.iter().enumerate() {
            out.push_str(&format!("{pi},{vi},{},{}\n", format_g17(*x), format_g17(*y)));
        }
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

fn cmd_run(cfg: &RunConfig) -> Result<(), SimError> {
    let dir = make_run_dir(cfg, &format!("run-seed{}", cfg.base_seed))?;
    let grid = cfg.build_grid()?;
    let traj = run_simulation(&grid, &cfg.params, cfg.base_seed, &observer(cfg, false))?;
    write_trajectory(&dir, &grid, &traj)?;
    // Always keep the final state and its contour, snapshots or not.
    write_vtk_field(
        &dir.join("fields_final.vtk"),
        &grid,
        &[
            ("phi".to_string(), traj.final_state.phi.clone()),
            ("sigma".to_string(), traj.final_state.sigma.clone()),
        ],
    )?;
    write_contour_csv(&dir.join("contour_final.csv"), &grid, &traj.final_state.phi)?;
    println!("run complete: {}", dir.display());
    Ok(())
}

fn write_stats_csv(dir: &Path, result: &EnsembleResult) -> Result<(), SimError> {
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for (q, name) in result.qoi_names.iter().enumerate() {
        columns.push((format!("mean_{name}"), result.mean[q].clone()));
        columns.push((format!("std_{name}"), result.std[q].clone()));
    }
    write_csv_timeseries(&dir.join("stats.csv"), &result.times, &columns)
}

fn cmd_ensemble(cfg: &RunConfig) -> Result<(), SimError> {
    let dir = make_run_dir(cfg, &format!("ensemble-seed{}", cfg.base_seed))?;
    let grid = cfg.build_grid()?;
    let result = run_ensemble(&grid, &cfg.params, cfg.base_seed, cfg.n_samples, &observer(cfg, false))?;
    write_stats_csv(&dir, &result)?;
    let samples_dir = dir.join("samples");
    std::fs::create_dir_all(&samples_dir).map_err(|e| io_err(&samples_dir, e))?;
    for (i, traj) in result.samples.iter().enumerate() {
        write_csv_timeseries(
            &samples_dir.join(format!("sample_{i:04}.csv")),
            &traj.times,
            &traj.qoi_columns(),
        )?;
    }
    println!("ensemble complete: {} samples, {}", cfg.n_samples, dir.display());
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), SimError> {
    let dir = make_run_dir(cfg, &format!("sweep-seed{}", cfg.base_seed))?;
    let grid = cfg.build_grid()?;
    let mut noise_logs: Vec<Vec<f64>> = Vec::new();
    let mut summary_nu = Vec::new();
    let mut summary_perimeter = Vec::new();
    let mut summary_volume = Vec::new();
    for &nu in &cfg.sweep_nu {
        let mut params = cfg.params.clone();
        params.noise.nu = nu;
        let sub = dir.join(format!("nu-{}", tag(nu)));
        std::fs::create_dir_all(&sub).map_err(|e| io_err(&sub, e))?;
        let traj = run_simulation(&grid, &params, cfg.base_seed, &observer(cfg, true))?;
        write_trajectory(&sub, &grid, &traj)?;
        write_contour_csv(&sub.join("contour_final.csv"), &grid, &traj.final_state.phi)?;
        let contour = extract_contour(&grid, &traj.final_state.phi, 0.5)?;
        summary_nu.push(nu);
        summary_perimeter.push(contour.perimeter());
        summary_volume.push(*traj.tumor_volume.last().unwrap());
        noise_logs.push(traj.noise_log.clone());
    }
    // The sweep's whole point is that every intensity sees the same raw
    // Gaussian stream; record the bitwise comparison.
    let shared = noise_logs.windows(2).all(|w| w[0] == w[1]);
    let log = format!(
        "shared_noise: {}\nintensities: {:?}\nsequence_length: {}\n",
        if shared { "identical" } else { "MISMATCH" },
        summary_nu,
        noise_logs.first().map_or(0, Vec::len),
    );
    std::fs::write(dir.join("shared_noise.txt"), log)
        .map_err(|e| io_err(&dir.join("shared_noise.txt"), e))?;
    if !shared {
        return Err(SimError::InvalidInput(
            "sweep noise streams diverged across intensities".into(),
        ));
    }
    let mut out = String::from("nu,final_perimeter,final_tumor_volume\n");
    for i in 0..summary_nu.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            format_g17(summary_nu[i]),
            format_g17(summary_perimeter[i]),
            format_g17(summary_volume[i])
        ));
    }
    std::fs::write(dir.join("sweep_summary.csv"), out)
        .map_err(|e| io_err(&dir.join("sweep_summary.csv"), e))?;
    println!("sweep complete: {} intensities, {}", summary_nu.len(), dir.display());
    Ok(())
}

fn cmd_verify(cfg: &RunConfig, quick: bool) -> Result<u8, SimError> {
    let mut reports: Vec<CheckReport> = Vec::new();
    reports.extend(check_element_oracles());
    reports.extend(check_noise_statistics(100_000, 0.01, cfg.base_seed.wrapping_add(1)));
    reports.extend(check_yosida(&[1.0, 0.1, 0.01, 0.001], 1000, cfg.base_seed.wrapping_add(2))); 
    reports.extend(check_conservation_dissipation(&[16, 32], 200)?);
    if !quick {
        let grid = Grid::build(32, 32, 1.0, 1.0)?;
        let mut params = cfg.params.clone();
        params.t_end = 0.2;
        reports.push(check_energy_estimate(&grid, &params, cfg.base_seed.wrapping_add(3))?);
        reports.push(check_spatial_convergence()?);
    }

    let mut csv = String::from("name,passed,measured,bound,details\n");
    let mut all_passed = true;
    println!("{:<45} {:>6} {:>14} {:>12}", "check", "status", "measured", "bound");
    for r in &reports {
        all_passed &= r.passed;
        println!(
            "{:<45} {:>6} {:>14.6e} {:>12.3e}",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.measured,
            r.bound
        );
        csv.push_str(&format!(
            "{},{},{},{},\"{}\"\n",
            r.name,
            r.passed,
            format_g17(r.measured),
            format_g17(r.bound),
            r.details.replace('"', "'")
        ));
    }
    let dir = make_run_dir(cfg, "verify")?;
    std::fs::write(dir.join("report.csv"), csv)
        .map_err(|e| io_err(&dir.join("report.csv"), e))?;
    if all_passed {
        println!("all checks passed");
        Ok(0)
    } else {
        eprintln!("verification failed");
        Ok(3)
    }
}
