mod config;
mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use f256::f256;
use num_complex::Complex;
use serde_json::{json, Value};

use schroeder_tails::density::{
    self, FourierDensity, FourierQuadrature, IterationDensity,
};
use schroeder_tails::poincare::{pi_via_limit, PoincareEvaluator};
use schroeder_tails::schroeder::SchroederSeries;
use schroeder_tails::simulate::simulate;
use schroeder_tails::spectral::{KarlinMcGregor, PeriodicMultiplier};
use schroeder_tails::{Error, OffspringDistribution, Real};

use config::RunConfig;
use output::{Plot, Report};

#[derive(Parser)]
#[command(
    name = "schroeder-tails",
    version,
    about = "Left-tail density asymptotics for Schröder-case Galton-Watson processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Offspring probabilities p0,p1,...,pN
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    probs: Option<Vec<f64>>,
    /// TOML run configuration; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output file (stdout otherwise); metadata goes next to it as .json
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV
    #[arg(long)]
    emit_plot: bool,
    /// Write the resolved run configuration as TOML
    #[arg(long)]
    save_config: Option<PathBuf>,
    /// Working precision of the series and spectral stages
    #[arg(long, value_parser = ["f64", "f256"])]
    precision: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Iteration,
    Fourier,
}

#[derive(Subcommand)]
enum Command {
    /// Check an offspring law and print its derived quantities
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Schröder coefficients phi_n
    Phi {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Poincaré function on a line segment, e.g. --grid imag:0:20:41
    Pi {
        #[command(flatten)]
        common: Common,
        /// axis:start:stop:count with axis real or imag
        #[arg(long, default_value = "real:0:20:41")]
        grid: String,
        #[arg(long)]
        order: Option<usize>,
        /// Add a column with the limit oracle at depth t_limit
        #[arg(long)]
        oracle: bool,
    },
    /// Fourier coefficients theta_m of the Karlin-McGregor function
    Theta {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid: Option<usize>,
        /// Print all grid coefficients instead of |m| <= M_f
        #[arg(long)]
        all: bool,
    },
    /// K0 on z = j/(samples-1), j = 0..samples-1
    K0 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// V(x) at the given points
    V {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Limit density p(x)
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "iteration")]
        method: Method,
        #[arg(long)]
        t: Option<u32>,
        #[arg(long)]
        xmin: Option<f64>,
        #[arg(long)]
        xmax: Option<f64>,
        /// Number of x values (fourier method)
        #[arg(long)]
        points: Option<usize>,
    },
    /// Exact against asymptotic density on log-spaced x
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: Option<u32>,
        #[arg(long)]
        xmin: Option<f64>,
        #[arg(long)]
        xmax: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        /// Leave out the Fourier-inversion column
        #[arg(long)]
        no_fourier: bool,
    },
    /// Monte Carlo samples of E^-t Z_t
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: Option<u32>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// One summary row instead of the samples
        #[arg(long)]
        summary: bool,
    },
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Numeric(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical_guard() {
            CliError::Numeric(e)
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn resolve(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(CliError::Input)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &common.probs {
        cfg.probs = p.clone();
    }
    if let Some(p) = &common.precision {
        cfg.precision = p.clone();
    }
    if cfg.probs.is_empty() {
        return Err(CliError::Input("no offspring law: pass --probs or a config with probs".into()));
    }
    if cfg.precision != "f64" && cfg.precision != "f256" {
        return Err(CliError::Input(format!("unknown precision {}", cfg.precision)));
    }
    Ok(cfg)
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn law(cfg: &RunConfig) -> CliResult<OffspringDistribution> {
    if cfg.m_phi.is_some_and(|m| m < 2) || cfg.m_pi.is_some_and(|m| m < 2) {
        return Err(CliError::Input("series orders must be at least 2".into()));
    }
    Ok(OffspringDistribution::validate(&cfg.probs)?)
}

fn karlin_mcgregor<T: Real>(d: &OffspringDistribution, cfg: &RunConfig) -> KarlinMcGregor<T> {
    let phi = match cfg.m_phi {
        Some(m) => SchroederSeries::with_order(d, m),
        None => SchroederSeries::adaptive(d),
    };
    let pi = match cfg.m_pi {
        Some(m) => PoincareEvaluator::with_order(d, m),
        None => PoincareEvaluator::adaptive(d),
    };
    KarlinMcGregor::from_parts(phi, pi)
}

fn multiplier<T: Real>(
    d: &OffspringDistribution,
    cfg: &RunConfig,
    meta: &mut serde_json::Map<String, Value>,
) -> CliResult<PeriodicMultiplier<T>> {
    let km = karlin_mcgregor::<T>(d, cfg);
    let spectrum = km.spectrum(cfg.grid)?;
    meta.insert("m_phi".into(), json!(km.schroeder().order()));
    meta.insert("m_pi".into(), json!(km.poincare().coeffs().len() - 1));
    meta.insert("trusted_radius".into(), json!(km.poincare().trusted_radius().to_f64()));
    meta.insert("grid".into(), json!(spectrum.grid_size()));
    meta.insert("m_f".into(), json!(spectrum.cutoff()));
    meta.insert("decay_rate".into(), json!(spectrum.decay_rate()));
    meta.insert("theta_0".into(), json!(spectrum.theta(0).re.to_f64()));
    Ok(PeriodicMultiplier::new(spectrum, km.ln_mean(), km.ln_p1())?)
}

/// Dispatches a generic stage on the configured precision.
macro_rules! with_precision {
    ($cfg:expr, $f:ident ( $($arg:expr),* )) => {
        if $cfg.precision == "f64" {
            $f::<f64>($($arg),*)
        } else {
            $f::<f256>($($arg),*)
        }
    };
}

fn cmd_validate(cfg: &RunConfig, report: &mut Report) -> CliResult<()> {
    let d = law(cfg)?;
    let mut csv = String::from("key,value\n");
    for (k, v) in [
        ("degree", d.degree() as f64),
        ("p1", d.p1()),
        ("mean", d.mean()),
        ("variance", d.variance()),
        ("alpha", d.tail_exponent()),
    ] {
        writeln!(csv, "{k},{v:e}").unwrap();
    }
    report.csv = csv;
    Ok(())
}

fn cmd_phi<T: Real>(cfg: &RunConfig, report: &mut Report) -> CliResult<()> {
    let d = law(cfg)?;
    let s: SchroederSeries<T> = match cfg.m_phi {
        Some(m) => SchroederSeries::with_order(&d, m),
        None => SchroederSeries::adaptive(&d),
    };
    report.meta.insert("order".into(), json!(s.order()));
    report.meta.insert("truncation_bound".into(), json!(s.truncation_bound().to_f64()));
    let mut csv = String::from("n,phi_n\n");
    for (n, c) in s.coeffs().iter().enumerate() {
        writeln!(csv, "{n},{c:e}").unwrap();
    }
    report.csv = csv;
    Ok(())
}

fn parse_segment(spec: &str) -> CliResult<(bool, f64, f64, usize)> {
    let bad = || CliError::Input(format!("grid '{spec}' is not axis:start:stop:count"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(bad());
    }
    let imag = match parts[0] {
        "real" | "re" => false,
        "imag" | "im" => true,
        _ => return Err(bad()),
    };
    let a: f64 = parts[1].parse().map_err(|_| bad())?;
    let b: f64 = parts[2].parse().map_err(|_| bad())?;
    let n: usize = parts[3].parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok((imag, a, b, n))
}

fn cmd_pi<T: Real>(cfg: &RunConfig, grid: &str, oracle: bool, report: &mut Report) -> CliResult<()> {
    let d = law(cfg)?;
    let (imag, a, b, n) = parse_segment(grid)?;
    let ev: PoincareEvaluator<T> = match cfg.m_pi {
        Some(m) => PoincareEvaluator::with_order(&d, m),
        None => PoincareEvaluator::adaptive(&d),
    };
    report.meta.insert("order".into(), json!(ev.coeffs().len() - 1));
    report.meta.insert("trusted_radius".into(), json!(ev.trusted_radius().to_f64()));
    report.meta.insert("residual".into(), json!(ev.residual(32).to_f64()));
    let mut csv = String::from("z_re,z_im,pi_re,pi_im");
    csv.push_str(if oracle { ",limit_re,limit_im\n" } else { "\n" });
    for i in 0..n {
        let s = if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 };
        let z = if imag {
            Complex::new(T::zero(), T::from_f64(s))
        } else {
            Complex::new(T::from_f64(s), T::zero())
        };
        let v = ev.eval(z);
        write!(csv, "{:e},{:e},{:e},{:e}", z.re, z.im, v.re, v.im).unwrap();
        if oracle {
            let l = pi_via_limit(&d, z, cfg.t_limit)?;
            write!(csv, ",{:e},{:e}", l.re, l.im).unwrap();
        }
        csv.push('\n');
    }
    report.csv = csv;
    Ok(())
}

fn cmd_theta<T: Real>(cfg: &RunConfig, all: bool, report: &mut Report) -> CliResult<()> {
    let d = law(cfg)?;
    let pm = multiplier::<T>(&d, cfg, &mut report.meta)?;
    let mut csv = String::from("m,theta_re,theta_im\n");
    let rows = if all { pm.spectrum().all() } else { pm.spectrum().retained() };
    for (m, th) in rows {
        writeln!(csv, "{m},{:e},{:e}", th.re, th.im).unwrap();
    }
    report.csv = csv;
    Ok(())
}

fn cmd_k0<T: Real>(cfg: &RunConfig, report: &mut Report) -> CliResult<()> {
    let d = law(cfg)?;
    if cfg.samples < 2 {
        return Err(CliError::Input("need at least two samples".into()));
    }
    let pm = multiplier::<T>(&d, cfg, &mut report.meta)?;
    let mut csv = String::from("z,k0\n");
    for j in 0..cfg.samples {
        let z = T::from_usize(j) / T::from_usize(cfg.samples - 1);
        writeln!(csv, "{:e},{:e}", z, pm.k0_eval(z)?).unwrap();
    }
    report.csv = csv;
    report.plot = Some(Plot::linear("z", "K0"));
    Ok(())
}

fn cmd_v<T: Real>(cfg: &RunConfig, xs: &[f64], report: &mut Report) -> CliResult<()> {
    let d = law(cfg)?;
    let pm = multiplier::<T>(&d, cfg, &mut report.meta)?;
    let mut csv = String::from("x,v\n");
    for &x in xs {
        writeln!(csv, "{x:e},{:e}", pm.v_eval(T::from_f64(x))?).unwrap();
    }
    report.csv = csv;
    Ok(())
}

/// The f64 multiplier used by the density stages, built in the configured
/// precision.
fn multiplier_f64(
    d: &OffspringDistribution,
    cfg: &RunConfig,
    meta: &mut serde_json::Map<String, Value>,
) -> CliResult<PeriodicMultiplier<f64>> {
    if cfg.precision == "f64" {
        multiplier::<f64>(d, cfg, meta)
    } else {
        Ok(multiplier::<f256>(d, cfg, meta)?.to_f64())
    }
}

fn default_xmin(cfg: &RunConfig, d: &OffspringDistribution) -> f64 {
    cfg.x_min
        .unwrap_or_else(|| (10.0 * d.mean().powi(-(cfg.t_iter as i32))).max(1e-3))
}

fn fourier_meta(f: &FourierDensity, meta: &mut serde_json::Map<String, Value>) {
    meta.insert("fourier_step".into(), json!(f.step()));
    meta.insert("fourier_y_max".into(), json!(f.y_max()));
}

fn cmd_density(cfg: &RunConfig, method: Method, report: &mut Report) -> CliResult<()> {
    let d = law(cfg)?;
    let x_min = default_xmin(cfg, &d);
    let grid = match method {
        Method::Iteration => {
            let it = IterationDensity::covering(&d, cfg.t_iter, cfg.x_max)?;
            report.meta.insert("t".into(), json!(cfg.t_iter));
            report.meta.insert("grid_spacing".into(), json!(1.0 / it.scale()));
            report.meta.insert("truncated_table".into(), json!(it.table().truncated));
            it.grid(x_min, cfg.x_max)?
        }
        Method::Fourier => {
            let pi = PoincareEvaluator::<f64>::adaptive(&d);
            let f = FourierDensity::new(&pi, cfg.x_max, &FourierQuadrature::default())?;
            fourier_meta(&f, &mut report.meta);
            f.grid(&density::log_grid(x_min, cfg.x_max, cfg.points)?)?
        }
    };
    report.meta.insert("method".into(), json!(grid.method.name()));
    report.meta.insert("clamped".into(), json!(grid.clamped));
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)?;
    report.csv = String::from_utf8(buf).expect("ascii");
    report.plot = Some(Plot::log_log("x", "p(x)"));
    Ok(())
}

fn cmd_compare(cfg: &RunConfig, fourier: bool, report: &mut Report) -> CliResult<()> {
    let d = law(cfg)?;
    let x_min = default_xmin(cfg, &d);
    let xs = density::log_grid(x_min, cfg.x_max, cfg.points)?;
    let it = IterationDensity::covering(&d, cfg.t_iter, cfg.x_max)?;
    let pm = multiplier_f64(&d, cfg, &mut report.meta)?;
    let f = if fourier {
        let pi = PoincareEvaluator::<f64>::adaptive(&d);
        let f = FourierDensity::new(&pi, cfg.x_max, &FourierQuadrature::default())?;
        fourier_meta(&f, &mut report.meta);
        Some(f)
    } else {
        None
    };
    let rows = density::compare(&it, &pm, f.as_ref(), &xs)?;
    report.meta.insert("t".into(), json!(cfg.t_iter));
    report.meta.insert("alpha".into(), json!(d.tail_exponent()));
    report.meta.insert("mean".into(), json!(d.mean()));
    report.meta.insert("grid_spacing".into(), json!(1.0 / it.scale()));
    report.meta.insert("truncated_table".into(), json!(it.table().truncated));
    let mut csv = String::from("x,p_iter,p_fourier,p_asym,ratio\n");
    for r in rows {
        let pf = r.p_fourier.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(csv, "{:e},{:e},{pf},{:e},{:e}", r.x, r.p_iter, r.p_asym, r.ratio).unwrap();
    }
    report.csv = csv;
    report.plot = Some(Plot::compare());
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, summary: bool, report: &mut Report) -> CliResult<()> {
    let d = law(cfg)?;
    let run = simulate(&d, cfg.t_sim, cfg.n, cfg.seed)?;
    let mut csv = String::new();
    if summary {
        let lo = run.w_samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = run.w_samples.iter().copied().fold(0.0, f64::max);
        csv.push_str("n,mean,std,min,max\n");
        writeln!(csv, "{},{:e},{:e},{lo:e},{hi:e}", run.n, run.mean(), run.std_dev()).unwrap();
    } else {
        csv.push_str("w\n");
        for w in &run.w_samples {
            writeln!(csv, "{w:e}").unwrap();
        }
    }
    report.csv = csv;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let started = Instant::now();
    let (name, common) = match &cli.command {
        Command::Validate { common } => ("validate", common),
        Command::Phi { common, .. } => ("phi", common),
        Command::Pi { common, .. } => ("pi", common),
        Command::Theta { common, .. } => ("theta", common),
        Command::K0 { common, .. } => ("k0", common),
        Command::V { common, .. } => ("v", common),
        Command::Density { common, .. } => ("density", common),
        Command::Compare { common, .. } => ("compare", common),
        Command::Simulate { common, .. } => ("simulate", common),
    };
    if common.emit_plot && common.out.is_none() {
        return Err(CliError::Input("--emit-plot needs --out".into()));
    }
    let mut cfg = resolve(common)?;
    let mut report = Report::default();
    match &cli.command {
        Command::Validate { .. } => cmd_validate(&cfg, &mut report)?,
        Command::Phi { order, .. } => {
            cfg.m_phi = order.or(cfg.m_phi);
            with_precision!(cfg, cmd_phi(&cfg, &mut report))?
        }
        Command::Pi { grid, order, oracle, .. } => {
            cfg.m_pi = order.or(cfg.m_pi);
            with_precision!(cfg, cmd_pi(&cfg, grid, *oracle, &mut report))?
        }
        Command::Theta { grid, all, .. } => {
            set(&mut cfg.grid, *grid);
            with_precision!(cfg, cmd_theta(&cfg, *all, &mut report))?
        }
        Command::K0 { samples, grid, .. } => {
            set(&mut cfg.samples, *samples);
            set(&mut cfg.grid, *grid);
            with_precision!(cfg, cmd_k0(&cfg, &mut report))?
        }
        Command::V { x, grid, .. } => {
            set(&mut cfg.grid, *grid);
            with_precision!(cfg, cmd_v(&cfg, x, &mut report))?
        }
        Command::Density { method, t, xmin, xmax, points, .. } => {
            set(&mut cfg.t_iter, *t);
            cfg.x_min = xmin.or(cfg.x_min);
            set(&mut cfg.x_max, *xmax);
            set(&mut cfg.points, *points);
            cmd_density(&cfg, *method, &mut report)?
        }
        Command::Compare { t, xmin, xmax, points, grid, no_fourier, .. } => {
            set(&mut cfg.t_iter, *t);
            cfg.x_min = xmin.or(cfg.x_min);
            set(&mut cfg.x_max, *xmax);
            set(&mut cfg.points, *points);
            set(&mut cfg.grid, *grid);
            cmd_compare(&cfg, !no_fourier, &mut report)?
        }
        Command::Simulate { t, n, seed, summary, .. } => {
            set(&mut cfg.t_sim, *t);
            set(&mut cfg.n, *n);
            set(&mut cfg.seed, *seed);
            cmd_simulate(&cfg, *summary, &mut report)?
        }
    }
    if let Some(p) = &common.save_config {
        std::fs::write(p, cfg.to_toml())?;
    }
    report.finish(name, &cfg, started.elapsed(), common.out.as_deref(), common.emit_plot)?;
    Ok(())
}

fn configure_threads() {
    if let Ok(v) = std::env::var("SCHROEDER_TAILS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring SCHROEDER_TAILS_THREADS={v}: not a positive integer"),
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
    }
}
