use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use elliptic_gas::edge::{arclength_escape_density, n_out_asymptotic, EdgeExpansion};
use elliptic_gas::io::{manifest_path, parse_complex, parse_name_list, parse_range, CsvTable, RunManifest, ToleranceEntry};
use elliptic_gas::kernel::{cauchy_transform, cd_identity_rhs, density, expected_outside_exact, kernel, prekernel_dz};
use elliptic_gas::sampler::{histogram_chi2, run, SamplerConfig, RNG_NAME};
use elliptic_gas::validation::{run_suite, Level};
use elliptic_gas::{EnsembleParams, Geometry};

const THREADS_ENV: &str = "ELLIPTIC_GAS_THREADS";

#[derive(Parser)]
#[command(name = "elliptic-gas", version, about = "Eigenvalue statistics of the elliptic random normal matrix ensemble")]
struct Cli {
    /// Worker threads (default: all cores). ELLIPTIC_GAS_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct ParamArgs {
    /// Asymmetry, 0 <= t < 1.
    #[arg(long, default_value_t = 0.5)]
    t: f64,
    /// Total mass T > 0.
    #[arg(long = "T", default_value_t = 1.0)]
    total_mass: f64,
    /// Number of particles.
    #[arg(long)]
    n: usize,
}

impl ParamArgs {
    fn params(&self) -> Result<EnsembleParams, CliError> {
        EnsembleParams::new(self.t, self.total_mass, self.n).map_err(usage)
    }
}

#[derive(Args)]
struct OutArg {
    /// Output file; stdout when absent. Files get a `.manifest.json` sidecar
    /// (CSV) or an embedded manifest (JSON).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChainArgs {
    /// Seed of the sampler; required, there is no hidden entropy.
    #[arg(long)]
    seed: Option<u64>,
    /// Sweeps per chain, including a 10% burn-in.
    #[arg(long, default_value_t = 100_000)]
    sweeps: usize,
    #[arg(long, default_value_t = 4)]
    chains: usize,
}

impl ChainArgs {
    fn config(&self, params: EnsembleParams) -> Result<SamplerConfig, CliError> {
        let seed = self.seed.ok_or_else(|| CliError::Usage("sampling requires --seed".into()))?;
        let config = SamplerConfig::new(params, seed, self.sweeps, self.chains);
        config.validate().map_err(usage)?;
        Ok(config)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Exact,
    Asymptotic,
    Mcmc,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Density along the normal line at a boundary point against the edge
    /// expansion, in the scaled coordinate xi = sqrt(N) * (normal offset).
    ///
    /// resid1 = rho_exact - rho_erfc, resid2 = rho_exact - rho_order1.
    EdgeProfile {
        #[command(flatten)]
        params: ParamArgs,
        /// Boundary angle of the point sqrt(T/(1-t^2)) (e^{i theta} + t e^{-i theta}).
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value = "-3:3", allow_hyphen_values = true)]
        xi_range: String,
        #[arg(long, default_value_t = 121)]
        steps: usize,
        /// Any of exact, order0, order1, order2.
        #[arg(long, default_value = "exact,order0,order1,order2")]
        include: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact density on a rectangular grid.
    DensityGrid {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "-2:2", allow_hyphen_values = true)]
        x_range: String,
        #[arg(long, default_value = "-2:2", allow_hyphen_values = true)]
        y_range: String,
        #[arg(long, default_value_t = 81)]
        nx: usize,
        #[arg(long, default_value_t = 81)]
        ny: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Kernel at a pair of points and the Christoffel-Darboux check there.
    KernelPair {
        #[command(flatten)]
        params: ParamArgs,
        /// First point, e.g. `0.3-0.2i` or `0.3,-0.2`.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Cauchy transform of |p_n|^2 e^{-NV} at a point inside the droplet.
    Cauchy {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Expected number of particles outside the droplet.
    Outside {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "exact")]
        method: Method,
        #[command(flatten)]
        chains: ChainArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Metropolis sampling of the Coulomb gas; summary and a few configurations.
    Sample {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        chains: ChainArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Histogram of boundary projections of outside particles over
    /// equal-arclength bins, with the predicted escape density.
    ArclengthHist {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        chains: ChainArgs,
        #[arg(long, default_value_t = 35)]
        bins: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Runs the validation suite; exit status 1 when any check fails.
    Validate {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(flag),
    }
}

fn linspace(a: f64, b: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![a];
    }
    (0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect()
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| failure(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(failure)
        }
    }
}

fn emit_csv(out: &Option<PathBuf>, table: &CsvTable, manifest: &RunManifest) -> Result<(), CliError> {
    emit(out, &table.to_csv())?;
    if let Some(path) = out {
        write_manifest(path, manifest)?;
    }
    Ok(())
}

fn write_manifest(data: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let path = manifest_path(data);
    fs::write(&path, manifest.to_json() + "\n").map_err(|e| failure(format!("{}: {e}", path.display())))
}

fn emit_json(out: &Option<PathBuf>, mut body: Value, manifest: &RunManifest) -> Result<(), CliError> {
    body["manifest"] = serde_json::to_value(manifest).map_err(failure)?;
    emit(out, &(serde_json::to_string_pretty(&body).map_err(failure)? + "\n"))
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn execute(cli: Cli, started: Instant) -> Result<bool, CliError> {
    let threads = rayon::current_num_threads();
    let manifest = |command: &str, params: Option<EnsembleParams>, seed: Option<u64>| {
        let mut m = RunManifest::new(command, params, seed, threads);
        m.wall_time = started.elapsed().as_secs_f64();
        m
    };
    match cli.command {
        Command::EdgeProfile { params, theta, xi_range, steps, include, out } => {
            let p = params.params()?;
            if steps == 0 {
                return Err(CliError::Usage("steps must be at least 1".into()));
            }
            if !theta.is_finite() {
                return Err(CliError::Usage(format!("theta must be finite, got {theta}")));
            }
            let (a, b) = parse_range(&xi_range).map_err(usage)?;
            let include = parse_name_list(&include, &["exact", "order0", "order1", "order2"]).map_err(usage)?;
            let has = |name: &str| include.contains(&name);
            let columns: Vec<&str> = [
                ("rho_exact", has("exact")),
                ("rho_erfc", has("order0")),
                ("rho_order1", has("order1")),
                ("rho_order2", has("order2")),
                ("resid1", has("exact") && has("order0")),
                ("resid2", has("exact") && has("order1")),
            ]
            .into_iter()
            .filter_map(|(c, on)| on.then_some(c))
            .collect();
            let mut header = vec!["xi".to_string()];
            header.extend(columns.iter().map(|c| c.to_string()));
            let mut table = CsvTable::new(header);
            let e = EdgeExpansion::new(theta, &p);
            let root = p.big_n().sqrt();
            for xi in linspace(a, b, steps) {
                let exact = density(e.frame.z0 + e.frame.normal * (xi / root), &p);
                let orders = [e.density_to_order(xi, 0), e.density_to_order(xi, 1), e.density_to_order(xi, 2)];
                let mut row = vec![xi];
                for c in &columns {
                    row.push(match *c {
                        "rho_exact" => exact,
                        "rho_erfc" => orders[0],
                        "rho_order1" => orders[1],
                        "rho_order2" => orders[2],
                        "resid1" => exact - orders[0],
                        _ => exact - orders[1],
                    });
                }
                table.push(row);
            }
            emit_csv(&out.out, &table, &manifest("edge-profile", Some(p), None))?;
        }
        Command::DensityGrid { params, x_range, y_range, nx, ny, out } => {
            let p = params.params()?;
            if nx == 0 || ny == 0 {
                return Err(CliError::Usage("nx and ny must be at least 1".into()));
            }
            let (x0, x1) = parse_range(&x_range).map_err(usage)?;
            let (y0, y1) = parse_range(&y_range).map_err(usage)?;
            let geom = Geometry::new(&p);
            let points: Vec<Complex64> = linspace(y0, y1, ny)
                .into_iter()
                .flat_map(|y| linspace(x0, x1, nx).into_iter().map(move |x| Complex64::new(x, y)))
                .collect();
            let profile = elliptic_gas::kernel::density_profile(&points, &p).map_err(usage)?;
            let mut table = CsvTable::new(["x", "y", "rho", "rho_limit"].map(String::from).to_vec());
            for (z, rho) in profile.points {
                let limit = if geom.is_inside(z) { 1.0 / std::f64::consts::PI } else { 0.0 };
                table.push(vec![z.re, z.im, rho, limit]);
            }
            emit_csv(&out.out, &table, &manifest("density-grid", Some(p), None))?;
        }
        Command::KernelPair { params, z, w, out } => {
            let p = params.params()?;
            let z = parse_complex(&z).map_err(usage)?;
            let w = parse_complex(&w).map_err(usage)?;
            let k = kernel(z, w, &p);
            let lhs = prekernel_dz(z, w, &p);
            let rhs = cd_identity_rhs(z, w, &p);
            let diff = (lhs.scaled_by(rhs.log_mag) - rhs.scaled_by(rhs.log_mag)).norm();
            let rel = if rhs.is_zero() { lhs.abs() } else { diff };
            let body = json!({
                "z": complex_json(z),
                "w": complex_json(w),
                "kernel": { "log_abs": k.value.log_mag, "phase": k.value.phase, "value": complex_json(k.to_complex()) },
                "cd_lhs": { "log_abs": lhs.log_mag, "phase": lhs.phase },
                "cd_rhs": { "log_abs": rhs.log_mag, "phase": rhs.phase },
                "cd_relative_error": rel,
            });
            emit_json(&out.out, body, &manifest("kernel-pair", Some(p), None))?;
        }
        Command::Cauchy { params, z, out } => {
            let p = params.params()?;
            let z = parse_complex(&z).map_err(usage)?;
            let c = cauchy_transform(z, &p).map_err(usage)?;
            let body = json!({
                "z": complex_json(z),
                "value": complex_json(c.value),
                "abs": c.value.norm(),
                "error": c.error,
                "normalization": c.normalization,
            });
            emit_json(&out.out, body, &manifest("cauchy", Some(p), None))?;
        }
        Command::Outside { params, method, chains, out } => {
            let p = params.params()?;
            let (body, seed, rng) = match method {
                Method::Exact => {
                    let r = expected_outside_exact(&p).map_err(usage)?;
                    let body = json!({
                        "method": "exact",
                        "n_out": r.n_out,
                        "interior_estimate": r.interior_estimate,
                        "quadrature_error": r.error,
                    });
                    (body, None, None)
                }
                Method::Asymptotic => {
                    let r = n_out_asymptotic(&p).map_err(usage)?;
                    let body = json!({
                        "method": "asymptotic",
                        "n_out": r.total(),
                        "leading": r.leading,
                        "correction": r.correction,
                        "k_modulus": r.k_modulus,
                        "perimeter": r.perimeter,
                    });
                    (body, None, None)
                }
                Method::Mcmc => {
                    let config = chains.config(p)?;
                    let batch = run(&config).map_err(usage)?;
                    let body = json!({
                        "method": "mcmc",
                        "n_out": batch.mean_outside,
                        "stderr": batch.stderr,
                        "r_hat": batch.r_hat,
                        "acceptance_rate": batch.acceptance_rate,
                        "acceptance_warning": batch.acceptance_warning,
                        "sweeps": config.sweeps,
                        "burn_in": config.burn_in,
                        "chains": config.chains,
                    });
                    (body, Some(config.seed), Some(RNG_NAME.to_string()))
                }
            };
            let mut m = manifest("outside", Some(p), seed);
            m.rng = rng;
            emit_json(&out.out, body, &m)?;
        }
        Command::Sample { params, chains, out } => {
            let p = params.params()?;
            let config = chains.config(p)?;
            let batch = run(&config).map_err(usage)?;
            let body = json!({
                "config": config,
                "mean_outside": batch.mean_outside,
                "stderr": batch.stderr,
                "r_hat": batch.r_hat,
                "acceptance_rate": batch.acceptance_rate,
                "acceptance_warning": batch.acceptance_warning,
                "chains": batch.chains,
                "configs": batch.configs.iter().map(|c| c.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>(),
            });
            let mut m = manifest("sample", Some(p), Some(config.seed));
            m.rng = Some(batch.rng.clone());
            emit_json(&out.out, body, &m)?;
        }
        Command::ArclengthHist { params, chains, bins, out } => {
            let p = params.params()?;
            let mut config = chains.config(p)?;
            config.bins = bins;
            config.validate().map_err(usage)?;
            let batch = run(&config).map_err(usage)?;
            let test = histogram_chi2(&batch, &p).map_err(usage)?;
            let geom = Geometry::new(&p);
            let perimeter = geom.perimeter();
            let width = perimeter / bins as f64;
            let recorded = batch.outside_counts.len() as f64;
            let mut table =
                CsvTable::new(["bin", "s_lo", "s_hi", "count", "expected", "per_length", "escape_density"].map(String::from).to_vec());
            for (b, (&count, &expected)) in batch.arclength_bins.iter().zip(&test.expected).enumerate() {
                let s_lo = width * b as f64;
                let theta_mid = geom.theta_at_arclength(s_lo + width / 2.0);
                table.push(vec![
                    b as f64,
                    s_lo,
                    s_lo + width,
                    count as f64,
                    expected,
                    count as f64 / (width * recorded),
                    arclength_escape_density(theta_mid, &p),
                ]);
            }
            let mut m = manifest("arclength-hist", Some(p), Some(config.seed));
            m.rng = Some(batch.rng.clone());
            m.tolerance_report.push(ToleranceEntry {
                name: "chi2/dof".into(),
                value: test.per_dof(),
                bound: 2.0,
                pass: test.per_dof() <= 2.0,
            });
            emit_csv(&out.out, &table, &m)?;
        }
        Command::Validate { level, out } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let report = run_suite(level);
            let mut lines = String::new();
            for c in &report.checks {
                lines.push_str(&format!(
                    "{} {}: {:.4e} (bound {:.4e}) {}\n",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.bound,
                    c.detail
                ));
            }
            let mut m = manifest("validate", None, None);
            m.tolerance_report = report.checks.iter().map(ToleranceEntry::from).collect();
            match &out.out {
                Some(_) => {
                    print!("{lines}");
                    emit_json(&out.out, json!({ "level": report.level, "checks": report.checks }), &m)?;
                }
                None => print!("{lines}"),
            }
            if !report.passed() {
                eprintln!("{} check(s) failed:", report.failures().len());
                for c in report.failures() {
                    eprintln!("  {}: {}", c.name, c.detail);
                }
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let started = Instant::now();
    let result = thread_count(cli.threads).and_then(|threads| {
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(failure)?;
        }
        execute(cli, started)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
