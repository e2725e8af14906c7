//! `depauw` — experiment runner for the checkerboard-mixing SDE laboratory.
//!
//! Subcommands: `field` (drift grid export), `flow` (exact trajectory),
//! `sde` (Monte Carlo run: samples CSV + manifest JSON), `analyze`
//! (uniformity / branching / backward / residual / convergence reports), and
//! `verify` (deterministic invariant suite).
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

mod analyze;
mod io;
mod settings;
mod verify;

use anyhow::Result;
use clap::{Parser, Subcommand};
use depauw_core::flow::{flow, FlowQuery};
use depauw_core::sde::simulate;
use io::{fmt_f64, write_file, SampleRow};
use settings::Settings;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "depauw", version, about = "Checkerboard-mixing SDE laboratory")]
struct Cli {
    /// Flat `key = value` config file (CLI flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for generated files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the drift on an n×n grid at one time; CSV `t,x1,x2,b1,b2`.
    Field {
        /// Evaluation time in (0, T].
        #[arg(long)]
        t: f64,
        /// Grid side; rows are sampled at cell centers (i+0.5)/n.
        #[arg(long, default_value_t = 64)]
        grid_n: usize,
        /// Export the transported black density instead; CSV `t,x1,x2,rhoB`.
        #[arg(long)]
        density: bool,
        /// Output file name inside the output directory.
        #[arg(long, default_value = "field.csv")]
        out_file: String,
    },
    /// Exact integral curve from a start point; CSV `t,x1,x2`.
    Flow {
        /// Start point `x1,x2`.
        #[arg(long)]
        x0: String,
        #[arg(long, default_value_t = 0.0)]
        t_from: f64,
        /// Defaults to the horizon.
        #[arg(long)]
        t_to: Option<f64>,
        /// Number of uniform output intervals.
        #[arg(long, default_value_t = 256)]
        steps: usize,
        #[arg(long, default_value = "trajectory.csv")]
        out_file: String,
    },
    /// Monte Carlo SDE run: `samples.csv` + `manifest.json`.
    Sde {
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        dt_base: Option<f64>,
        /// `uniform` or `point:x1,x2`.
        #[arg(long)]
        initial: Option<String>,
        /// Comma-separated list in [0, T].
        #[arg(long)]
        save_times: Option<String>,
        /// `drift_splitting` or `euler_maruyama`.
        #[arg(long)]
        integrator: Option<String>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Run a statistics pipeline over stored samples; writes a JSON report.
    Analyze {
        /// One of: uniformity, branching, backward, residual, convergence.
        #[arg(long)]
        kind: String,
        /// Input samples CSV (repeatable; convergence takes a ladder).
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Bins per side for histogram-based analyses.
        #[arg(long)]
        bins: Option<usize>,
        /// Midpoint sub-steps per sample interval for the residual pipeline.
        #[arg(long, default_value_t = 4)]
        quad_substeps: usize,
        #[arg(long, default_value = "report.json")]
        out_file: String,
    },
    /// Deterministic invariant suite; prints one line per check.
    Verify {
        /// Test hook: scale the field amplitude to break the rotation checks.
        #[arg(long, hide = true)]
        corrupt_speed_factor: Option<f64>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn build_settings(cli: &Cli) -> Result<Settings> {
    let mut settings = Settings::default();
    if let Some(path) = &cli.config {
        settings.load_file(path)?;
    }
    if let Some(out) = &cli.out {
        settings.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        settings.seed = seed;
    }
    Ok(settings)
}

fn run(cli: Cli) -> Result<i32> {
    let mut settings = build_settings(&cli)?;
    match cli.command {
        Command::Field { t, grid_n, density, out_file } => {
            let field = settings.field().usage()?;
            if !(t > 0.0 && t <= field.horizon()) {
                usage_error(format!("t = {t} outside (0, {}]", field.horizon()));
            }
            if grid_n == 0 {
                usage_error("grid_n must be positive".into());
            }
            let mut out = String::from(if density { "t,x1,x2,rhoB\n" } else { "t,x1,x2,b1,b2\n" });
            for i in 0..grid_n {
                for j in 0..grid_n {
                    let x = depauw_core::TorusPoint::new(
                        (i as f64 + 0.5) / grid_n as f64,
                        (j as f64 + 0.5) / grid_n as f64,
                    );
                    if density {
                        let rho = depauw_core::flow::black_density(&field, t, x)
                            .map_err(|e| anyhow::anyhow!("{e}"))?;
                        let _ = writeln!(
                            out,
                            "{},{},{},{}",
                            fmt_f64(t),
                            fmt_f64(x.x1()),
                            fmt_f64(x.x2()),
                            rho
                        );
                    } else {
                        let v = field.velocity(t, x);
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{}",
                            fmt_f64(t),
                            fmt_f64(x.x1()),
                            fmt_f64(x.x2()),
                            fmt_f64(v.0),
                            fmt_f64(v.1)
                        );
                    }
                }
            }
            let path = settings.out_dir.join(out_file);
            write_file(&path, &out)?;
            println!("wrote {}", path.display());
            Ok(0)
        }

        Command::Flow { x0, t_from, t_to, steps, out_file } => {
            let field = settings.field().usage()?;
            let start = settings::parse_point(&x0).usage()?;
            let t_to = t_to.unwrap_or(field.horizon());
            for t in [t_from, t_to] {
                if !(0.0..=field.horizon()).contains(&t) {
                    usage_error(format!("time {t} outside [0, {}]", field.horizon()));
                }
            }
            if steps == 0 {
                usage_error("steps must be positive".into());
            }
            let mut out = String::from("t,x1,x2\n");
            let mut pos = start;
            let mut t_prev = t_from;
            let rows = if t_from == t_to { 0 } else { steps };
            for i in 0..=rows {
                let t = if rows == 0 {
                    t_from
                } else {
                    t_from + (t_to - t_from) * i as f64 / rows as f64
                };
                if i > 0 {
                    pos = flow(&field, FlowQuery::new(t_prev, t), pos)
                        .map_err(|e| anyhow::anyhow!("{e}"))?;
                }
                let _ = writeln!(out, "{},{},{}", fmt_f64(t), fmt_f64(pos.x1()), fmt_f64(pos.x2()));
                t_prev = t;
            }
            let path = settings.out_dir.join(out_file);
            write_file(&path, &out)?;
            println!("wrote {}", path.display());
            Ok(0)
        }

        Command::Sde { nu, n_paths, dt_base, initial, save_times, integrator, name } => {
            if let Some(v) = nu {
                settings.nu = v;
            }
            if let Some(v) = n_paths {
                settings.n_paths = v;
            }
            if let Some(v) = dt_base {
                settings.dt_base = v;
            }
            if let Some(v) = initial {
                settings.initial = v;
            }
            if let Some(v) = save_times {
                settings.assign("save_times", &v).usage()?;
            }
            if let Some(v) = integrator {
                settings.integrator = v;
            }
            if let Some(v) = name {
                settings.name = v;
            }
            let field = settings.field().usage()?;
            let cfg = settings.sde_config().usage()?;

            let started = Instant::now();
            let ensemble = simulate(&field, &cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
            let wall = started.elapsed().as_secs_f64();

            let rows = (0..ensemble.n_paths()).flat_map(|p| {
                let states = ensemble.path_states(p);
                ensemble
                    .save_times()
                    .iter()
                    .zip(states.iter())
                    .map(move |(&t, &point)| SampleRow { path_id: p, t, point })
                    .collect::<Vec<_>>()
            });
            let samples_path = settings.out_dir.join("samples.csv");
            write_file(&samples_path, &io::render_samples(rows))?;

            let manifest = serde_json::json!({
                "name": settings.name,
                "seed": settings.seed,
                "nu": settings.nu,
                "n_paths": settings.n_paths,
                "dt_base": settings.dt_base,
                "integrator": settings.integrator,
                "save_times": settings.save_times,
                "wall_time_s": wall,
                "effective_config": settings,
            });
            let manifest_path = settings.out_dir.join("manifest.json");
            write_file(&manifest_path, &format!("{:#}\n", manifest))?;
            println!("wrote {}", samples_path.display());
            println!("wrote {}", manifest_path.display());
            Ok(0)
        }

        Command::Analyze { kind, inputs, bins, quad_substeps, out_file } => {
            if let Some(b) = bins {
                settings.bins = b;
            }
            if !analyze::KINDS.contains(&kind.as_str()) {
                usage_error(format!("unknown analysis kind `{kind}` (expected one of {:?})", analyze::KINDS));
            }
            let report = analyze::run(&kind, &inputs, &settings, quad_substeps)?;
            let path = settings.out_dir.join(out_file);
            write_file(&path, &format!("{:#}\n", report))?;
            println!("wrote {}", path.display());
            Ok(0)
        }

        Command::Verify { corrupt_speed_factor } => {
            let mut field = settings.field().usage()?;
            if let Some(factor) = corrupt_speed_factor {
                field = field.with_speed_factor_scaled(factor);
            }
            let outcomes = verify::run_all(&field);
            let mut all_ok = true;
            for o in &outcomes {
                println!("{} {} — {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                all_ok &= o.passed;
            }
            if all_ok {
                println!("verify: {} checks passed", outcomes.len());
                Ok(0)
            } else {
                println!("verify: FAILURES present");
                Ok(1)
            }
        }
    }
}

fn usage_error(msg: String) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(2);
}

/// Map configuration mistakes to the usage exit code.
trait UsageExt<T> {
    fn usage(self) -> Result<T>;
}

impl<T> UsageExt<T> for Result<T> {
    fn usage(self) -> Result<T> {
        match self {
            Ok(v) => Ok(v),
            Err(e) => {
                eprintln!("error: {e:#}");
                std::process::exit(2);
            }
        }
    }
}
