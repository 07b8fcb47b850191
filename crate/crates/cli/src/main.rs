//! `glauert`: batch driver for single solves, conditioning sweeps and
//! configuration checks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glauert::config::CaseConfig;
use glauert::coupling::HalfSign;
use glauert::linalg::C64;
use glauert::output::write_sweep_csv;
use glauert::pipeline::{linspace, run_case, sweep_conditioning, Problem, SweepOptions};
use glauert::Error;

#[derive(Parser)]
#[command(
    name = "glauert",
    version,
    about = "FEM-BEM acoustic scattering in subsonic flow"
)]
struct Cli {
    /// Worker threads for assembly (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case and write VTK, CSV and JSON outputs.
    Run(RunArgs),
    /// Condition numbers of both formulations over a frequency grid.
    Sweep(SweepArgs),
    /// Parse and check a configuration, build mesh and flow.
    Validate(ConfigArg),
    /// Print mesh statistics as JSON.
    MeshInfo(ConfigArg),
}

#[derive(Args)]
struct ConfigArg {
    /// Case configuration (TOML).
    #[arg(value_name = "CONFIG", required_unless_present = "config")]
    path: Option<PathBuf>,
    #[arg(long, conflicts_with = "path")]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn path(&self) -> &Path {
        self.config
            .as_deref()
            .or(self.path.as_deref())
            .expect("clap enforces a config path")
    }
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// `unstable` or `stable`.
    #[arg(long)]
    formulation: Option<String>,
    /// Coupling parameter as `re` or `re,im`.
    #[arg(long, value_parser = parse_complex)]
    eta: Option<C64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    overrides: Overrides,
    /// Lowest frequency in Hz.
    #[arg(long, requires = "fmax")]
    fmin: Option<f64>,
    /// Highest frequency in Hz.
    #[arg(long, requires = "fmin")]
    fmax: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Lowest transformed wavenumber k̂∞ (alternative to --fmin).
    #[arg(long, requires = "k_hat_max", conflicts_with = "fmin")]
    k_hat_min: Option<f64>,
    #[arg(long, requires = "k_hat_min")]
    k_hat_max: Option<f64>,
    /// Also solve both formulations at every frequency.
    #[arg(long)]
    solve: bool,
    /// Repeat the sweep for each coupling parameter (real values, comma separated).
    #[arg(long, value_delimiter = ',')]
    eta_sweep: Vec<f64>,
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|e| format!("invalid number {t:?}: {e}"))
    };
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got {s:?}")),
    }
}

fn load(arg: &ConfigArg, overrides: Option<&Overrides>) -> glauert::Result<CaseConfig> {
    let mut config = CaseConfig::load(arg.path())?;
    if let Some(o) = overrides {
        if let Some(f) = &o.formulation {
            config.formulation = f.clone();
        }
        if let Some(eta) = o.eta {
            config.eta_re = eta.re;
            config.eta_im = eta.im;
        }
        if let Some(dir) = &o.out_dir {
            config.output.dir = dir.clone();
        }
        config.validate()?;
    }
    Ok(config)
}

fn run(args: &RunArgs) -> glauert::Result<()> {
    let config = load(&args.config, Some(&args.overrides))?;
    let outcome = run_case(&config, &config.output.dir)?;
    let s = &outcome.summary;
    println!(
        "{}: {} iterations, relative residual {:.3e}, outputs in {}",
        s.formulation,
        s.iterations,
        s.final_residual,
        config.output.dir.display()
    );
    Ok(())
}

fn sweep(args: &SweepArgs) -> glauert::Result<()> {
    let config = load(&args.config, Some(&args.overrides))?;
    let problem = Problem::from_config(&config)?;
    let from_config = config.sweep.as_ref();
    let steps = args.steps.or(from_config.map(|s| s.steps)).unwrap_or(2);
    if steps < 2 {
        return Err(Error::Config("a sweep needs at least 2 steps".into()));
    }
    let range = |lo: Option<f64>, hi: Option<f64>| lo.zip(hi);
    let omegas: Vec<f64> = if let Some((lo, hi)) = range(args.fmin, args.fmax) {
        hz_grid(lo, hi, steps)?
    } else if let Some((lo, hi)) = range(args.k_hat_min, args.k_hat_max) {
        k_hat_grid(&problem, lo, hi, steps)?
    } else if let Some(s) = from_config {
        match (range(s.fmin, s.fmax), range(s.k_hat_min, s.k_hat_max)) {
            (Some((lo, hi)), _) => hz_grid(lo, hi, steps)?,
            (None, Some((lo, hi))) => k_hat_grid(&problem, lo, hi, steps)?,
            (None, None) => {
                return Err(Error::Config("sweep needs a frequency or k̂∞ range".into()))
            }
        }
    } else {
        return Err(Error::Config(
            "sweep needs --fmin/--fmax, --k-hat-min/--k-hat-max or a [sweep] section".into(),
        ));
    };
    let base = SweepOptions {
        eta: config.eta(),
        half_sign: config.stable_half_sign,
        solve: args.solve || from_config.is_some_and(|s| s.solve),
        solver: config.solver.clone(),
        incident: config.incident.clone(),
    };
    let out = &config.output.dir;
    if args.eta_sweep.is_empty() {
        let rows = sweep_conditioning(&problem, &omegas, &base)?;
        let path = out.join("sweep.csv");
        write_sweep_csv(&rows, &path)?;
        println!("{} frequencies written to {}", rows.len(), path.display());
    } else {
        for &eta in &args.eta_sweep {
            let opts = SweepOptions {
                eta: C64::new(eta, 0.0),
                half_sign: HalfSign::Plus,
                ..base.clone()
            };
            let rows = sweep_conditioning(&problem, &omegas, &opts)?;
            let path = out.join(format!("sweep_eta_{eta}.csv"));
            write_sweep_csv(&rows, &path)?;
            let peak = rows.iter().map(|r| r.cond_stab).fold(0.0, f64::max);
            println!(
                "eta = {eta}: peak condition number {peak:.3e} ({})",
                path.display()
            );
        }
    }
    Ok(())
}

fn hz_grid(lo: f64, hi: f64, steps: usize) -> glauert::Result<Vec<f64>> {
    if !(0.0 < lo && lo < hi) {
        return Err(Error::Config(format!(
            "need 0 < fmin < fmax, got {lo} and {hi}"
        )));
    }
    Ok(linspace(lo, hi, steps)
        .into_iter()
        .map(|f| 2.0 * std::f64::consts::PI * f)
        .collect())
}

fn k_hat_grid(problem: &Problem, lo: f64, hi: f64, steps: usize) -> glauert::Result<Vec<f64>> {
    if !(0.0 < lo && lo < hi) {
        return Err(Error::Config(format!(
            "need 0 < k_hat_min < k_hat_max, got {lo} and {hi}"
        )));
    }
    Ok(linspace(lo, hi, steps)
        .into_iter()
        .map(|k| problem.ambient.omega_for_k_hat(k))
        .collect())
}

fn validate(arg: &ConfigArg) -> glauert::Result<()> {
    let config = load(arg, None)?;
    let problem = Problem::from_config(&config)?;
    let c = &problem.continuity;
    println!(
        "ok: {} tetrahedra, {} Γ∞ faces, flow continuity on Γ∞ {} (max deviation {:.2e})",
        problem.mesh.tets.len(),
        problem.surface.q(),
        if c.within_tolerance {
            "within tolerance"
        } else {
            "VIOLATED"
        },
        c.max_density_deviation
            .max(c.max_wavenumber_deviation)
            .max(c.max_mach_deviation)
    );
    Ok(())
}

fn mesh_info(arg: &ConfigArg) -> glauert::Result<()> {
    let config = load(arg, None)?;
    let problem = Problem::from_config(&config)?;
    println!("{}", serde_json::to_string_pretty(&problem.mesh.summary())?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("GLAUERT_LOG", "warn"))
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate(a) => validate(a),
        Command::MeshInfo(a) => mesh_info(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::NonConvergence(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
