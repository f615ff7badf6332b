//! Batch experiment runner for the fractional-dissipative laboratory.
//!
//! Subcommands: `run <config.json>`, `verify <manifest.json>`,
//! `dump-kernel <alpha> <t> ...`. Exit codes: 0 success, 1 assertion
//! failure, 2 configuration error, 3 numerical non-convergence.
//!
//! Artifacts per experiment: a results file (JSON, plus CSV for sweeps), a
//! machine-readable verdict file, and a provenance file. Results and verdict
//! files are byte-deterministic given the seed; wall-clock timing lives only
//! in the provenance file.

mod config;
mod experiments;

use clap::{Parser, Subcommand};
use config::{ExperimentConfig, Manifest};
use experiments::{run_experiment, Outcome, Verdict};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "fraclab", version, about = "Numerical laboratory for the fractional dissipative operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment configuration and write its artifacts.
    Run {
        /// Path to the experiment configuration (JSON).
        config: PathBuf,
        /// Output directory (defaults to the configuration's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a manifest of experiments and compare verdicts to expectations.
    Verify {
        /// Path to the manifest (JSON).
        manifest: PathBuf,
        /// Output directory for per-experiment artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize one kernel slice and write it in the field format.
    DumpKernel {
        alpha: f64,
        t: f64,
        /// Spatial dimension (1 or 2).
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Box side length.
        #[arg(long, default_value_t = 32.0)]
        box_len: f64,
        /// Points per axis.
        #[arg(long, default_value_t = 512)]
        points: usize,
        /// Output path (.csv for text, anything else binary).
        #[arg(long, default_value = "kernel.field")]
        out: PathBuf,
        /// Skip the spectral resolvability guard.
        #[arg(long, default_value_t = false)]
        waive_guard: bool,
    },
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => cmd_run(&config, out.as_deref()),
        Command::Verify { manifest, out } => cmd_verify(&manifest, out.as_deref()),
        Command::DumpKernel { alpha, t, dim, box_len, points, out, waive_guard } => {
            cmd_dump_kernel(alpha, t, dim, box_len, points, &out, waive_guard)
        }
    }
}

/// Honor FRACLAB_THREADS when the parallel feature is compiled in.
fn init_thread_pool() {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("FRACLAB_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Numerical errors get exit code 3, everything else arising from a loaded
/// configuration is a user error (2).
fn classify_error(err: &fraclab::Error) -> u8 {
    use fraclab::Error::*;
    match err {
        SpectralGuard { .. } | EpsilonBelowResolution { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn cmd_run(path: &Path, out: Option<&Path>) -> ExitCode {
    let config = match load_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }

    let started = std::time::Instant::now();
    let outcome = match run_experiment(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("experiment {:?} failed: {e}", config.name);
            return ExitCode::from(classify_error(&e));
        }
    };
    let wall_ms = started.elapsed().as_millis();

    if let Err(e) = write_artifacts(&out_dir, &config, &outcome, wall_ms) {
        eprintln!("cannot write artifacts: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    println!("{}: {} — {}", config.name, outcome.verdict.as_str(), outcome.summary);
    match outcome.verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail => ExitCode::from(EXIT_FAIL),
        Verdict::NonConverged => ExitCode::from(EXIT_NUMERICAL),
    }
}

fn write_artifacts(
    out_dir: &Path,
    config: &ExperimentConfig,
    outcome: &Outcome,
    wall_ms: u128,
) -> std::io::Result<()> {
    let file = |suffix: &str| out_dir.join(format!("{}.{suffix}", config.name));
    let results = serde_json::to_string_pretty(&outcome.results_json).expect("serializable");
    std::fs::write(file("results.json"), results + "\n")?;
    if let Some(csv) = &outcome.results_csv {
        // self-describing: embed the configuration as a leading comment
        let cfg_line = format!("# config: {}", serde_json::to_string(config).expect("serializable"));
        std::fs::write(file("results.csv"), format!("{cfg_line}\n{csv}"))?;
    }
    let verdict = serde_json::json!({
        "name": config.name,
        "verdict": outcome.verdict.as_str(),
        "pass": outcome.verdict.passed(),
        "summary": outcome.summary,
        "config": config,
    });
    std::fs::write(
        file("verdict.json"),
        serde_json::to_string_pretty(&verdict).expect("serializable") + "\n",
    )?;
    // wall time is provenance, not results: rerunning with the same seed
    // must reproduce the results files byte for byte
    let provenance = serde_json::json!({
        "name": config.name,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_ms": wall_ms,
        "threads_parallel_feature": fraclab::parallel_enabled(),
        "config": config,
    });
    std::fs::write(
        file("provenance.json"),
        serde_json::to_string_pretty(&provenance).expect("serializable") + "\n",
    )?;
    Ok(())
}

fn cmd_verify(path: &Path, out: Option<&Path>) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let manifest: Manifest = match serde_json::from_str(&text) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("manifest error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    for entry in &manifest.experiments {
        if let Err(e) = entry.config.validate() {
            eprintln!("manifest entry {:?}: {e}", entry.config.name);
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }

    let mut any_mismatch = false;
    let mut any_numerical = false;
    println!("{:<28} {:<44} {:<14} {:<9} ok", "experiment", "checks", "verdict", "expected");
    for entry in &manifest.experiments {
        let started = std::time::Instant::now();
        let (verdict, summary) = match run_experiment(&entry.config) {
            Ok(outcome) => {
                let wall_ms = started.elapsed().as_millis();
                if let Err(e) = write_artifacts(&out_dir, &entry.config, &outcome, wall_ms) {
                    eprintln!("cannot write artifacts: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
                (outcome.verdict, outcome.summary)
            }
            Err(e) => {
                if classify_error(&e) == EXIT_NUMERICAL {
                    any_numerical = true;
                    (Verdict::NonConverged, e.to_string())
                } else {
                    eprintln!("experiment {:?} failed: {e}", entry.config.name);
                    return ExitCode::from(EXIT_CONFIG);
                }
            }
        };
        let ok = verdict.passed() == entry.expect_pass;
        if !ok {
            any_mismatch = true;
        }
        println!(
            "{:<28} {:<44} {:<14} {:<9} {}",
            entry.config.name,
            entry.label,
            verdict.as_str(),
            if entry.expect_pass { "PASS" } else { "FAIL" },
            if ok { "yes" } else { "NO" }
        );
        let _ = summary;
    }
    if any_mismatch {
        ExitCode::from(EXIT_FAIL)
    } else if any_numerical {
        ExitCode::from(EXIT_NUMERICAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_dump_kernel(
    alpha: f64,
    t: f64,
    dim: usize,
    box_len: f64,
    points: usize,
    out: &Path,
    waive_guard: bool,
) -> ExitCode {
    // the kernel slice only needs the spatial part; time axis is nominal
    let grid = match fraclab::make_grid(dim, box_len, points, 1.0, 2) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("grid error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let slice = if waive_guard {
        fraclab::kernel::spectral_kernel_unguarded(&grid, alpha, t)
    } else {
        match fraclab::kernel::spectral_kernel(&grid, alpha, t) {
            Ok(k) => k,
            Err(e) => {
                eprintln!("kernel synthesis error: {e}");
                return ExitCode::from(classify_error(&e));
            }
        }
    };
    match fraclab::io::write_field_path(&slice.values, out) {
        Ok(()) => {
            println!(
                "kernel alpha={alpha} t={t} on {}^{} grid -> {} (mass {:.12})",
                points,
                dim,
                out.display(),
                slice.mass()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cannot write {}: {e}", out.display());
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
