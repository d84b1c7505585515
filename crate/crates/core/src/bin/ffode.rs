use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ffode_core::bench::{self, BenchConfig, LbParams};
use ffode_core::error::{FfodeError, Result};
use ffode_core::tol;

#[derive(Parser)]
#[command(name = "ffode", version, about = "Fast-forwarded linear-ODE solver benchmarks and lower-bound witnesses")]
struct Cli {
    /// Worker threads for sweep points.
    #[arg(long, global = true, default_value_t = default_jobs())]
    jobs: usize,
    /// Absolute tolerance for unitarity, hermiticity and normality checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a solver campaign from a JSON config.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Drop the wall_time_ms column.
        #[arg(long)]
        no_timing: bool,
    },
    /// Build and certify a lower-bound witness.
    Lb {
        /// One of: realpart-gap, nonnormal-homo, realpart-gap-inhomo, nonnormal-inhomo,
        /// imaginary-time, linear-system, oracle-pair, amplifier, shift, equilibrium, all.
        family: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        shift: Option<f64>,
        #[arg(long)]
        circuits: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write `<family>.lb.v1.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certified minimal polynomial degree over a parameter grid.
    DegreeScan {
        /// exp-shifted, gaussian or gaussian-integral.
        target: String,
        /// Comma-separated parameter grid (T or beta).
        #[arg(long, value_delimiter = ',', default_values_t = vec![16.0, 64.0, 256.0, 1024.0])]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Demo campaign plus every witness family.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Solve { config, out, seed, no_timing } => {
            let mut cfg = BenchConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            install_tolerance(cli.tolerance.or(cfg.tolerance))?;
            let rows = bench::run_campaign(&cfg, cli.jobs)?;
            let csv = bench::solve_csv(&rows, !no_timing)?;
            let dir = out.or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
            let path = bench::solve_csv_path(&dir, &cfg.campaign);
            let name = path.file_name().expect("file name").to_string_lossy().into_owned();
            bench::write_output(&dir, &name, &csv)?;
            println!("{} rows -> {}", rows.len(), path.display());
            Ok(true)
        }
        Cmd::Lb { family, eps, delta, kappa, t, dim, q, shift, circuits, seed, out } => {
            install_tolerance(cli.tolerance)?;
            let params = LbParams { eps, delta, kappa, t, dim, q, shift, circuits, seed };
            let families: Vec<&str> = if family == "all" { bench::LB_FAMILIES.to_vec() } else { vec![family.as_str()] };
            let mut outcomes = Vec::new();
            for f in families {
                let o = bench::run_lb(f, &params)?;
                print!("{}", o.text());
                outcomes.push(o);
            }
            if let Some(dir) = out {
                let path = bench::write_output(&dir, &format!("{family}.lb.v{}.csv", bench::CSV_VERSION), &bench::lb_csv(&outcomes)?)?;
                println!("-> {}", path.display());
            }
            Ok(outcomes.iter().all(|o| o.all_hold()))
        }
        Cmd::DegreeScan { target, grid, eps, out } => {
            let scan = bench::degree_scan(&target, &grid, eps)?;
            let csv = bench::degree_scan_csv(&scan)?;
            match out {
                Some(dir) => {
                    let path = bench::write_output(&dir, &format!("{target}.degree.v{}.csv", bench::CSV_VERSION), &csv)?;
                    println!("-> {}", path.display());
                }
                None => print!("{csv}"),
            }
            Ok(true)
        }
        Cmd::Selftest { seed, out } => {
            install_tolerance(cli.tolerance)?;
            let st = bench::selftest(seed, cli.jobs)?;
            for c in &st.certifications {
                println!("{c}");
            }
            if let Some(dir) = out {
                let path = bench::write_output(&dir, &format!("selftest.v{}.csv", bench::CSV_VERSION), &st.csv()?)?;
                println!("-> {}", path.display());
            }
            let failed = st.certifications.iter().filter(|c| !c.holds).count();
            println!("{} checks, {failed} failed", st.certifications.len());
            Ok(failed == 0)
        }
    }
}

fn install_tolerance(t: Option<f64>) -> Result<()> {
    if let Some(t) = t {
        if !(t > 0.0 && t < 1.0) {
            return Err(FfodeError::Config(format!("tolerance must lie in (0,1), got {t}")));
        }
        tol::install(tol::Tolerances::with_absolute(t));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("FFODE_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
