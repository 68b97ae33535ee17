//! Command-line front end: run experiments, emit theory curves, compare
//! series files and sweep a model parameter.

use clap::{Args, Parser, Subcommand};
use sic::harness::{
    self, compare, predict, read_csv, run, sweep, ExperimentConfig, HarnessError, SweepAxis,
};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "sic", about = "Subsystem information capacity simulations", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for CSV + manifest files.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write <stem>.csv + <stem>.json.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Emit theory curves on the config's axes as <stem>_theory.csv.
    Predict {
        config: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Compare two series files; print a JSON report to stdout.
    Compare {
        sim: PathBuf,
        thy: PathBuf,
        /// Fail (exit 4) if max |residual| exceeds this.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// One run per axis value: <stem>_<axis>_<value>.csv + a manifest.
    Sweep {
        config: PathBuf,
        /// Parameter to vary: w, l, delta, p_m or u.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(s) = seed {
        cfg.sampling.master_seed = s;
    }
    Ok(cfg)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into())
}

fn init_pool(jobs: Option<usize>) -> Result<(), HarnessError> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    Ok(())
}

fn value_tag(v: f64) -> String {
    let s = format!("{v}");
    s.replace('-', "m").replace('.', "p")
}

fn main_inner() -> Result<(), HarnessError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, opts } => {
            init_pool(opts.jobs)?;
            let cfg = load_config(&config, opts.seed)?;
            let t0 = Instant::now();
            let series = run(&cfg)?;
            let name = stem(&config);
            harness::write_outputs(&series, &cfg, &opts.out, &name, t0.elapsed().as_secs_f64())?;
            eprintln!(
                "wrote {}.csv ({} cells, {} realizations, {:.1}s)",
                opts.out.join(&name).display(),
                series.times.len() * series.l_a.len(),
                series.n_real,
                t0.elapsed().as_secs_f64()
            );
        }
        Command::Predict { config, opts } => {
            let cfg = load_config(&config, opts.seed)?;
            let t0 = Instant::now();
            let series = predict(&cfg)?;
            let name = format!("{}_theory", stem(&config));
            harness::write_outputs(&series, &cfg, &opts.out, &name, t0.elapsed().as_secs_f64())?;
            eprintln!("wrote {}.csv", opts.out.join(&name).display());
        }
        Command::Compare { sim, thy, tol } => {
            let s = read_csv(&std::fs::read_to_string(&sim)?)?;
            let t = read_csv(&std::fs::read_to_string(&thy)?)?;
            let report = compare(&s, &t)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report)
                    .map_err(|e| HarnessError::Csv(e.to_string()))?
            );
            if let Some(tol) = tol {
                if report.max_abs_residual > tol {
                    return Err(HarnessError::BeyondTolerance(report.max_abs_residual, tol));
                }
            }
        }
        Command::Sweep { config, axis, values, opts } => {
            init_pool(opts.jobs)?;
            let cfg = load_config(&config, opts.seed)?;
            if values.is_empty() {
                return Err(HarnessError::Config("sweep needs at least one value".into()));
            }
            let axis: SweepAxis = axis.parse()?;
            let name = stem(&config);
            let t0 = Instant::now();
            let results = sweep(&cfg, axis, &values);
            let mut manifest_entries = Vec::new();
            let mut failures = Vec::new();
            for (v, res) in results {
                let tag = format!("{name}_{axis:?}_{}", value_tag(v)).to_lowercase();
                match res {
                    Ok(series) => {
                        let member_cfg = harness::apply_axis(&cfg, axis, v);
                        harness::write_outputs(
                            &series,
                            &member_cfg,
                            &opts.out,
                            &tag,
                            t0.elapsed().as_secs_f64(),
                        )?;
                        manifest_entries.push(serde_json::json!({
                            "value": v, "file": format!("{tag}.csv"), "status": "ok"
                        }));
                    }
                    Err(e) => {
                        eprintln!("sweep member {v} failed: {e}");
                        manifest_entries.push(serde_json::json!({
                            "value": v, "status": "failed", "error": e.to_string()
                        }));
                        failures.push(v);
                    }
                }
            }
            std::fs::create_dir_all(&opts.out)?;
            std::fs::write(
                opts.out.join(format!("{name}_sweep_manifest.json")),
                serde_json::to_string_pretty(&manifest_entries)
                    .map_err(|e| HarnessError::Csv(e.to_string()))?,
            )?;
            if !failures.is_empty() {
                return Err(HarnessError::Backend(
                    String::new(),
                    format!("{} sweep member(s) failed: {failures:?}", failures.len()),
                ));
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = main_inner() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
