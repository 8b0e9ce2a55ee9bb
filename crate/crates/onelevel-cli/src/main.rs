//! Command-line driver for the one-level density laboratory.
//!
//! Every subcommand reads an optional flat `key = value` configuration
//! file (flags override file entries), emits its report to standard
//! output or `--out`, and logs progress to standard error. Exit codes:
//! 0 success, 2 usage or parameter errors, 3 range or cache problems,
//! 4 accuracy-contract violations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use onelevel::arith::{build_tables, read_prime_cache, write_prime_cache, ArithTables};
use onelevel::coeffs::{
    delta_empirical, provider_delta, provider_delta_from_lambda, provider_gl1,
    provider_sym2_delta, provider_sym2_delta_from_lambda, read_tau_cache, tau_table,
    write_tau_cache, CoefficientProvider, LambdaTable, TauTable,
};
use onelevel::density::{
    density, family_sums, s_m_direct_restricted, s_m_dual, DensityReport, FamilySpec, Mode,
};
use onelevel::poisson::{
    gauss_sum, poisson_check_with, MellinContour, QuadraticCharacter, WtildeKernel,
};
use onelevel::testfn::{bump_weight, fejer_pair, rmt_prediction};
use onelevel::{ComplexScalar, Scalar};

mod config;
use config::FileConfig;

/// Identity tolerance for poisson-check, from the summation contract.
const POISSON_IDENTITY_TOL: f64 = 1e-6;

/// Per-modulus Gauss sum tolerance, as a multiple of sqrt(q).
const GAUSS_TOL_FACTOR: f64 = 1e-9;

/// Relative tolerance for the square-divisor split identity.
const SPLIT_REL_TOL: f64 = 1e-9;

/// Dual-sum agreement tolerance per contributing prime.
const DUAL_PER_PRIME_TOL: f64 = 1e-5;

/// Largest tau index kept in exact 128-bit arithmetic; wider coefficient
/// ranges switch to the floating-point eigenvalue table.
const EXACT_TAU_BOUND: u64 = 3_000_000;

#[derive(Debug)]
pub(crate) struct CliError {
    pub(crate) code: u8,
    pub(crate) message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    fn file(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }

    fn accuracy(message: impl Into<String>) -> Self {
        CliError {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<onelevel::Error> for CliError {
    fn from(err: onelevel::Error) -> Self {
        use onelevel::Error as E;
        let code = match &err {
            E::SieveLimit { .. }
            | E::SieveRange { .. }
            | E::MoebiusRange(..)
            | E::TauLimit(..)
            | E::TauOverflow(..)
            | E::TauCache { .. }
            | E::PrimeCache { .. }
            | E::CoefficientRange(..)
            | E::DualRange(..) => 3,
            E::Accuracy { .. } | E::QuadratureDepth { .. } => 4,
            _ => 2,
        };
        let mut message = err.to_string();
        if let E::SieveRange { required, .. } = &err {
            message.push_str(&format!(
                "; rerun with a sieve limit of at least {required}"
            ));
        }
        CliError { code, message }
    }
}

#[derive(Parser)]
#[command(
    name = "onelevel",
    version,
    about = "One-level density experiments for families of quadratic twists"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the prime sieve and write or reuse the prime cache.
    Sieve(SieveArgs),
    /// Build the Ramanujan tau table and write or reuse its cache.
    Tau(TauArgs),
    /// Empirical one-level density at each scale in --X.
    Density(DensityArgs),
    /// Density at each scale in both formula modes.
    DensitySweep(DensityArgs),
    /// Verify the smoothed character-sum summation identity.
    PoissonCheck(PoissonArgs),
    /// Compare prime quadratic Gauss sums with the closed form.
    GaussCheck(GaussArgs),
    /// Measure the signed average of second-order prime coefficients.
    DeltaCheck(DeltaArgs),
    /// Print the random-matrix prediction for a test function.
    Kernel(KernelArgs),
    /// Verify the square-divisor split and its dual recomputation.
    SplitCheck(SplitArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key = value configuration file; flags override its entries.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Report format: text or json.
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
    /// Write the report to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Cache directory for prime and tau tables; falls back to the
    /// ONELEVEL_CACHE_DIR environment variable, then the working directory.
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Size of the worker thread pool.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Args)]
struct TestArgs {
    /// Coefficient family: gl1, delta, or sym2delta.
    #[arg(long, value_name = "KIND")]
    family: Option<String>,
    /// Test-function kind; fejer is the only one shipped.
    #[arg(long, value_name = "KIND")]
    test: Option<String>,
    /// Support half-width of the test function's transform.
    #[arg(long, value_name = "S")]
    sigma: Option<f64>,
}

#[derive(Args)]
struct WeightArgs {
    /// Lower edge of the averaging weight's support.
    #[arg(long, value_name = "A")]
    weight_a: Option<f64>,
    /// Upper edge of the averaging weight's support.
    #[arg(long, value_name = "B")]
    weight_b: Option<f64>,
}

#[derive(Args)]
struct ContourArgs {
    /// Real part of the Mellin inversion contour.
    #[arg(long, value_name = "C")]
    poisson_c: Option<f64>,
    /// Truncation height of the inversion contour.
    #[arg(long, value_name = "H")]
    poisson_height: Option<f64>,
    /// Node spacing along the contour.
    #[arg(long, value_name = "STEP")]
    poisson_step: Option<f64>,
}

#[derive(Args)]
struct SieveArgs {
    /// Upper bound of the sieve tables.
    #[arg(long, value_name = "N")]
    limit: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TauArgs {
    /// Largest index in the tau table.
    #[arg(long, value_name = "N")]
    n: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    test: TestArgs,
    #[command(flatten)]
    weight: WeightArgs,
    /// Comma-separated list of scales.
    #[arg(long = "X", value_name = "LIST")]
    x: Option<String>,
    /// Explicit-formula variant: simplified or full.
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Square-divisor split parameter; defaults to log^3 X.
    #[arg(long = "Z", value_name = "Z")]
    z: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct PoissonArgs {
    /// Comma-separated odd prime moduli.
    #[arg(long, value_name = "LIST")]
    q: Option<String>,
    /// Comma-separated list of scales.
    #[arg(long = "X", value_name = "LIST")]
    x: Option<String>,
    #[command(flatten)]
    weight: WeightArgs,
    #[command(flatten)]
    contour: ContourArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GaussArgs {
    /// Exclusive upper bound on the tested moduli.
    #[arg(long, value_name = "N")]
    limit: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct DeltaArgs {
    /// Coefficient family: gl1, delta, or sym2delta.
    #[arg(long, value_name = "KIND")]
    family: Option<String>,
    /// Comma-separated list of cutoffs.
    #[arg(long = "X", value_name = "LIST")]
    x: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct KernelArgs {
    /// Support half-width of the test function's transform.
    #[arg(long, value_name = "S")]
    sigma: Option<f64>,
    /// Test-function kind; fejer is the only one shipped.
    #[arg(long, value_name = "KIND")]
    test: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    test: TestArgs,
    #[command(flatten)]
    weight: WeightArgs,
    /// Comma-separated list of scales.
    #[arg(long = "X", value_name = "LIST")]
    x: Option<String>,
    /// Explicit-formula variant: simplified or full.
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Square-divisor split parameter; defaults to log^3 X.
    #[arg(long = "Z", value_name = "Z")]
    z: Option<f64>,
    /// Largest prime in the dual-sum cross-check.
    #[arg(long, value_name = "P")]
    p_max: Option<u64>,
    #[command(flatten)]
    contour: ContourArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum FamilyKind {
    Gl1,
    Delta,
    Sym2Delta,
}

impl FamilyKind {
    fn degree(self) -> u32 {
        match self {
            FamilyKind::Gl1 => 1,
            FamilyKind::Delta => 2,
            FamilyKind::Sym2Delta => 3,
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gl1" => Ok(FamilyKind::Gl1),
            "delta" => Ok(FamilyKind::Delta),
            "sym2delta" => Ok(FamilyKind::Sym2Delta),
            other => Err(format!(
                "unknown family '{other}' (expected gl1, delta, or sym2delta)"
            )),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected text or json)")),
        }
    }
}

struct CommonCtx {
    format: Format,
    out: Option<PathBuf>,
    cache_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sieve(args) => cmd_sieve(args),
        Command::Tau(args) => cmd_tau(args),
        Command::Density(args) => cmd_density(args, false),
        Command::DensitySweep(args) => cmd_density(args, true),
        Command::PoissonCheck(args) => cmd_poisson_check(args),
        Command::GaussCheck(args) => cmd_gauss_check(args),
        Command::DeltaCheck(args) => cmd_delta_check(args),
        Command::Kernel(args) => cmd_kernel(args),
        Command::SplitCheck(args) => cmd_split_check(args),
    }
}

fn load_file(common: &CommonArgs) -> Result<FileConfig, CliError> {
    match &common.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::empty()),
    }
}

fn resolve_common(common: &CommonArgs, file: &FileConfig) -> Result<CommonCtx, CliError> {
    let format = file
        .merge(common.format.clone(), "format")?
        .map(|s| s.parse::<Format>())
        .transpose()
        .map_err(CliError::usage)?
        .unwrap_or(Format::Text);
    let out = file.merge(common.out.clone(), "out")?;
    let cache_dir = file
        .merge(common.cache_dir.clone(), "cache-dir")?
        .or_else(|| std::env::var_os("ONELEVEL_CACHE_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Some(threads) = file.merge(common.threads, "threads")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::usage(format!("threads: {e}")))?;
    }
    Ok(CommonCtx {
        format,
        out,
        cache_dir,
    })
}

struct Experiment {
    family: FamilyKind,
    sigma: f64,
    weight_a: f64,
    weight_b: f64,
}

fn resolve_experiment(
    test: &TestArgs,
    weight: &WeightArgs,
    file: &FileConfig,
    default_sigma: Option<f64>,
) -> Result<Experiment, CliError> {
    let family = file
        .merge(test.family.clone(), "family")?
        .map(|s| s.parse::<FamilyKind>())
        .transpose()
        .map_err(CliError::usage)?
        .unwrap_or(FamilyKind::Gl1);
    resolve_test_kind(test.test.clone(), file)?;
    let sigma = match file.merge(test.sigma, "sigma")? {
        Some(s) => s,
        None => default_sigma.ok_or_else(|| {
            CliError::usage("missing required value for sigma (set --sigma or the config key sigma)")
        })?,
    };
    let weight_a = file.merge(weight.weight_a, "weight-a")?.unwrap_or(1.0);
    let weight_b = file.merge(weight.weight_b, "weight-b")?.unwrap_or(2.0);
    Ok(Experiment {
        family,
        sigma,
        weight_a,
        weight_b,
    })
}

/// Rejects inadmissible (family, sigma) pairs before any table is built;
/// the family constructor would catch them anyway, but only after the
/// coefficient source exists.
fn check_admissible(family: FamilyKind, sigma: f64) -> Result<(), CliError> {
    let degree = family.degree();
    if degree > 1 && sigma * f64::from(degree) >= 2.0 {
        return Err(onelevel::Error::BadSigma(sigma, "(0, 2/M)").into());
    }
    Ok(())
}

fn resolve_test_kind(flag: Option<String>, file: &FileConfig) -> Result<(), CliError> {
    let kind = file.merge(flag, "test")?.unwrap_or_else(|| "fejer".into());
    if kind != "fejer" {
        return Err(CliError::usage(format!(
            "unknown test-function kind '{kind}'; available: fejer"
        )));
    }
    Ok(())
}

fn resolve_contour(args: &ContourArgs, file: &FileConfig) -> Result<MellinContour<Scalar>, CliError> {
    let c = file.merge(args.poisson_c, "poisson-c")?.unwrap_or(1.25);
    let height = file
        .merge(args.poisson_height, "poisson-height")?
        .unwrap_or(900.0);
    let step = file.merge(args.poisson_step, "poisson-step")?.unwrap_or(0.05);
    Ok(MellinContour::new(c, height, step)?)
}

fn require<T>(value: Option<T>, key: &'static str) -> Result<T, CliError> {
    value.ok_or_else(|| {
        CliError::usage(format!(
            "missing required value for {key} (set --{key} or the config key {key})"
        ))
    })
}

fn parse_f64_list(raw: &str, key: &'static str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for piece in raw.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        out.push(
            piece
                .parse::<f64>()
                .map_err(|e| CliError::usage(format!("{key} entry '{piece}': {e}")))?,
        );
    }
    if out.is_empty() {
        return Err(CliError::usage(format!("{key} list is empty")));
    }
    Ok(out)
}

fn parse_u64_list(raw: &str, key: &'static str) -> Result<Vec<u64>, CliError> {
    let mut out = Vec::new();
    for piece in raw.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        out.push(
            piece
                .parse::<u64>()
                .map_err(|e| CliError::usage(format!("{key} entry '{piece}': {e}")))?,
        );
    }
    if out.is_empty() {
        return Err(CliError::usage(format!("{key} list is empty")));
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, content)
                .map_err(|e| CliError::file(format!("writing {}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn json_content(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

/// Reuses a tau cache that covers `n`, otherwise builds and rewrites it.
fn load_or_build_tau(n: u64, dir: &Path) -> Result<(TauTable, PathBuf, bool), CliError> {
    let path = dir.join("tau.tsv");
    if path.exists() {
        let cached = read_tau_cache(&path)?;
        if cached.n_max() >= n {
            eprintln!("tau cache hit: {} (n_max {})", path.display(), cached.n_max());
            return Ok((cached, path, true));
        }
        eprintln!(
            "tau cache covers n <= {}, rebuilding for n <= {n}",
            cached.n_max()
        );
    }
    let table = tau_table(n)?;
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::file(format!("creating {}: {e}", dir.display())))?;
    write_tau_cache(&table, &path)?;
    eprintln!("tau cache written: {}", path.display());
    Ok((table, path, false))
}

/// Coefficient source for a family, sized so every prime up to
/// `coefficient_bound` has a coefficient. Degree-2 and degree-3 sources
/// use the exact tau table (cached on disk) while it fits in 128-bit
/// arithmetic and the floating-point eigenvalue table beyond that.
fn build_provider(
    kind: FamilyKind,
    coefficient_bound: f64,
    cache_dir: &Path,
    tables: &Arc<ArithTables>,
) -> Result<Arc<dyn CoefficientProvider>, CliError> {
    if kind == FamilyKind::Gl1 {
        return Ok(Arc::new(provider_gl1()));
    }
    let need = coefficient_bound.ceil() as u64 + 1;
    if need <= EXACT_TAU_BOUND {
        let (table, _, _) = load_or_build_tau(need, cache_dir)?;
        let tau = Arc::new(table);
        Ok(match kind {
            FamilyKind::Delta => Arc::new(provider_delta(tau)),
            _ => Arc::new(provider_sym2_delta(tau)),
        })
    } else {
        eprintln!("building eigenvalue table for primes below {need}");
        let lambda = Arc::new(LambdaTable::build(need, tables)?);
        Ok(match kind {
            FamilyKind::Delta => Arc::new(provider_delta_from_lambda(lambda)),
            _ => Arc::new(provider_sym2_delta_from_lambda(lambda)),
        })
    }
}

fn cmd_sieve(args: SieveArgs) -> Result<(), CliError> {
    let file = load_file(&args.common)?;
    let ctx = resolve_common(&args.common, &file)?;
    let limit = file.merge(args.limit, "limit")?.unwrap_or(1_000_000);
    let path = ctx.cache_dir.join(format!("primes_{limit}.bin"));
    let (primes, hit) = if path.exists() {
        let cached = read_prime_cache(&path)?;
        eprintln!("prime cache hit: {}", path.display());
        (cached, true)
    } else {
        let tables = build_tables(limit)?;
        std::fs::create_dir_all(&ctx.cache_dir)
            .map_err(|e| CliError::file(format!("creating {}: {e}", ctx.cache_dir.display())))?;
        write_prime_cache(&path, tables.primes())?;
        eprintln!("prime cache written: {}", path.display());
        (tables.primes().to_vec(), false)
    };
    let largest = primes.last().copied().unwrap_or(0);
    let content = match ctx.format {
        Format::Text => format!(
            "limit={limit} primes={} largest={largest} cache={}\n",
            primes.len(),
            path.display()
        ),
        Format::Json => json_content(&json!({
            "limit": limit,
            "primes": primes.len(),
            "largest": largest,
            "cache": path.display().to_string(),
            "cache_hit": hit,
        })),
    };
    emit(&ctx.out, &content)
}

fn cmd_tau(args: TauArgs) -> Result<(), CliError> {
    let file = load_file(&args.common)?;
    let ctx = resolve_common(&args.common, &file)?;
    let n = file.merge(args.n, "n")?.unwrap_or(10_000);
    let (table, path, hit) = load_or_build_tau(n, &ctx.cache_dir)?;
    let tau_n = table.tau(n)?;
    let content = match ctx.format {
        Format::Text => format!("n={n} tau_n={tau_n} cache={}\n", path.display()),
        Format::Json => json_content(&json!({
            "n": n,
            "tau_n": tau_n.to_string(),
            "cache": path.display().to_string(),
            "cache_hit": hit,
        })),
    };
    emit(&ctx.out, &content)
}

fn cmd_density(args: DensityArgs, sweep: bool) -> Result<(), CliError> {
    let file = load_file(&args.common)?;
    let ctx = resolve_common(&args.common, &file)?;
    let exp = resolve_experiment(&args.test, &args.weight, &file, None)?;
    let xs = parse_f64_list(&require(file.merge(args.x.clone(), "X")?, "X")?, "X")?;
    let mode = file
        .merge(args.mode.clone(), "mode")?
        .map(|s| s.parse::<Mode>())
        .transpose()
        .map_err(CliError::usage)?
        .unwrap_or(Mode::Simplified);
    let z = file.merge(args.z, "Z")?;
    let modes = if sweep {
        vec![Mode::Simplified, Mode::Full]
    } else {
        vec![mode]
    };

    check_admissible(exp.family, exp.sigma)?;
    let pair = fejer_pair(exp.sigma)?;
    let weight = bump_weight(exp.weight_a, exp.weight_b)?;
    let degree = exp.family.degree();
    let support = xs
        .iter()
        .map(|x| x.powf(f64::from(degree) * exp.sigma))
        .fold(0.0f64, f64::max);
    let window = xs.iter().map(|x| x * exp.weight_b).fold(0.0f64, f64::max);
    let limit = support.max(window).ceil() as u64 + 1;
    let tables = Arc::new(build_tables(limit)?);
    let provider = build_provider(exp.family, support, &ctx.cache_dir, &tables)?;

    let mut reports: Vec<DensityReport> = Vec::new();
    for &x in &xs {
        for &run_mode in &modes {
            let mut spec = FamilySpec::new(x, weight.clone(), provider.clone(), pair.clone(), run_mode)?;
            if let Some(z) = z {
                spec = spec.with_z(z)?;
            }
            let report = density(&spec, &tables)?;
            eprintln!(
                "density: family={} X={x} mode={run_mode} D={:.6} diff={:+.6} wall={:.2}s",
                report.family, report.empirical_d, report.difference, report.wall_time_s
            );
            reports.push(report);
        }
    }

    let content = match ctx.format {
        Format::Text => {
            let mut text = String::from(DensityReport::CSV_HEADER);
            text.push('\n');
            for report in &reports {
                text.push_str(&report.csv_row());
                text.push('\n');
            }
            text
        }
        Format::Json => json_content(&serde_json::Value::Array(
            reports.iter().map(DensityReport::to_json).collect(),
        )),
    };
    emit(&ctx.out, &content)
}

fn cmd_poisson_check(args: PoissonArgs) -> Result<(), CliError> {
    let file = load_file(&args.common)?;
    let ctx = resolve_common(&args.common, &file)?;
    let weight_a = file.merge(args.weight.weight_a, "weight-a")?.unwrap_or(1.0);
    let weight_b = file.merge(args.weight.weight_b, "weight-b")?.unwrap_or(2.0);
    let weight = bump_weight(weight_a, weight_b)?;
    let contour = resolve_contour(&args.contour, &file)?;
    let qs = parse_u64_list(
        &file
            .merge(args.q.clone(), "q")?
            .unwrap_or_else(|| "3,5,7,11,13".into()),
        "q",
    )?;
    let xs = parse_f64_list(
        &file
            .merge(args.x.clone(), "X")?
            .unwrap_or_else(|| "5,50".into()),
        "X",
    )?;

    let mut kernels: [Option<WtildeKernel<Scalar>>; 2] = [None, None];
    let mut lines = vec![String::from("q X lhs rhs diff mTerms")];
    let mut checks = Vec::new();
    let mut worst = 0.0f64;
    for &q in &qs {
        let chi = QuadraticCharacter::new(q)?;
        let parity = usize::from(chi.parity());
        if kernels[parity].is_none() {
            kernels[parity] = Some(WtildeKernel::new(&weight, chi.parity(), &contour)?);
        }
        let kernel = kernels[parity].as_ref().expect("kernel was just built");
        for &x in &xs {
            let summary = poisson_check_with(&chi, &weight, x, kernel)?;
            let diff = (summary.lhs - summary.rhs).abs();
            worst = worst.max(diff);
            lines.push(format!(
                "{q} {x} {} {} {diff:e} {}",
                summary.lhs, summary.rhs, summary.m_terms
            ));
            checks.push(json!({
                "q": q,
                "X": x,
                "lhs": summary.lhs,
                "rhs": summary.rhs,
                "diff": diff,
                "mTerms": summary.m_terms,
            }));
        }
    }
    let pass = worst <= POISSON_IDENTITY_TOL;
    lines.push(if pass {
        String::from("PASS diff<1e-6")
    } else {
        format!("FAIL max diff {worst:e} exceeds 1e-6")
    });

    let content = match ctx.format {
        Format::Text => {
            let mut text = lines.join("\n");
            text.push('\n');
            text
        }
        Format::Json => json_content(&json!({
            "tolerance": POISSON_IDENTITY_TOL,
            "pass": pass,
            "checks": checks,
        })),
    };
    emit(&ctx.out, &content)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::accuracy(format!(
            "poisson-check: max |lhs - rhs| = {worst:e} exceeds {POISSON_IDENTITY_TOL:e}"
        )))
    }
}

fn cmd_gauss_check(args: GaussArgs) -> Result<(), CliError> {
    let file = load_file(&args.common)?;
    let ctx = resolve_common(&args.common, &file)?;
    let limit = file.merge(args.limit, "limit")?.unwrap_or(200);
    let tables = build_tables(limit.max(3))?;
    let mut lines = vec![String::from("q parity diff bound")];
    let mut checks = Vec::new();
    let mut pass = true;
    let mut worst_ratio = 0.0f64;
    for &q in tables.primes() {
        if q == 2 || q >= limit {
            continue;
        }
        let chi = QuadraticCharacter::new(q)?;
        let g: ComplexScalar = gauss_sum(q)?;
        let root = (q as f64).sqrt();
        let (expected_re, expected_im) = if chi.parity() == 0 {
            (root, 0.0)
        } else {
            (0.0, root)
        };
        let diff = ((g.re - expected_re).powi(2) + (g.im - expected_im).powi(2)).sqrt();
        let bound = GAUSS_TOL_FACTOR * root;
        pass &= diff <= bound;
        worst_ratio = worst_ratio.max(diff / root);
        lines.push(format!("{q} {} {diff:e} {bound:e}", chi.parity()));
        checks.push(json!({
            "q": q,
            "parity": chi.parity(),
            "diff": diff,
            "bound": bound,
        }));
    }
    lines.push(if pass {
        format!("PASS all gauss sums within {GAUSS_TOL_FACTOR:e}*sqrt(q)")
    } else {
        format!("FAIL worst diff/sqrt(q) = {worst_ratio:e}")
    });

    let content = match ctx.format {
        Format::Text => {
            let mut text = lines.join("\n");
            text.push('\n');
            text
        }
        Format::Json => json_content(&json!({
            "limit": limit,
            "tolerance_factor": GAUSS_TOL_FACTOR,
            "pass": pass,
            "checks": checks,
        })),
    };
    emit(&ctx.out, &content)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::accuracy(format!(
            "gauss-check: worst diff/sqrt(q) = {worst_ratio:e} exceeds {GAUSS_TOL_FACTOR:e}"
        )))
    }
}

fn cmd_delta_check(args: DeltaArgs) -> Result<(), CliError> {
    let file = load_file(&args.common)?;
    let ctx = resolve_common(&args.common, &file)?;
    let family = file
        .merge(args.family.clone(), "family")?
        .map(|s| s.parse::<FamilyKind>())
        .transpose()
        .map_err(CliError::usage)?
        .unwrap_or(FamilyKind::Gl1);
    let xs = parse_f64_list(
        &file
            .merge(args.x.clone(), "X")?
            .unwrap_or_else(|| "1e5".into()),
        "X",
    )?;
    let max_x = xs.iter().cloned().fold(0.0f64, f64::max);
    let tables = Arc::new(build_tables(max_x.ceil() as u64 + 1)?);
    let provider = build_provider(family, max_x, &ctx.cache_dir, &tables)?;
    let expected = -f64::from(provider.delta_sign());

    let mut lines = Vec::new();
    let mut checks = Vec::new();
    for &x in &xs {
        let measured = delta_empirical(provider.as_ref(), x, &tables)?;
        lines.push(format!(
            "family={} X={x} measured={measured} expected={expected} deviation={:e}",
            provider.label(),
            (measured - expected).abs()
        ));
        checks.push(json!({
            "family": provider.label(),
            "X": x,
            "measured": measured,
            "expected": expected,
            "deviation": (measured - expected).abs(),
        }));
    }

    let content = match ctx.format {
        Format::Text => {
            let mut text = lines.join("\n");
            text.push('\n');
            text
        }
        Format::Json => json_content(&serde_json::Value::Array(checks)),
    };
    emit(&ctx.out, &content)
}

fn cmd_kernel(args: KernelArgs) -> Result<(), CliError> {
    let file = load_file(&args.common)?;
    let ctx = resolve_common(&args.common, &file)?;
    resolve_test_kind(args.test.clone(), &file)?;
    let sigma = require(file.merge(args.sigma, "sigma")?, "sigma")?;
    let pair = fejer_pair::<Scalar>(sigma)?;
    let prediction = rmt_prediction(&pair);
    let content = match ctx.format {
        Format::Text => format!(
            "sigma={sigma} integral_phi={} integral_phi_hat_unit={} prediction={prediction}\n",
            pair.integral_phi(),
            pair.integral_phi_hat_unit()
        ),
        Format::Json => json_content(&json!({
            "sigma": sigma,
            "integral_phi": pair.integral_phi(),
            "integral_phi_hat_unit": pair.integral_phi_hat_unit(),
            "prediction": prediction,
        })),
    };
    emit(&ctx.out, &content)
}

fn cmd_split_check(args: SplitArgs) -> Result<(), CliError> {
    let file = load_file(&args.common)?;
    let ctx = resolve_common(&args.common, &file)?;
    let exp = resolve_experiment(&args.test, &args.weight, &file, Some(0.5))?;
    let xs = parse_f64_list(
        &file
            .merge(args.x.clone(), "X")?
            .unwrap_or_else(|| "1e3".into()),
        "X",
    )?;
    let mode = file
        .merge(args.mode.clone(), "mode")?
        .map(|s| s.parse::<Mode>())
        .transpose()
        .map_err(CliError::usage)?
        .unwrap_or(Mode::Simplified);
    let z = file.merge(args.z, "Z")?;
    let p_max = file.merge(args.p_max, "p-max")?.unwrap_or(7);
    let contour = resolve_contour(&args.contour, &file)?;

    check_admissible(exp.family, exp.sigma)?;
    let pair = fejer_pair(exp.sigma)?;
    let weight = bump_weight(exp.weight_a, exp.weight_b)?;
    let degree = exp.family.degree();
    let support = xs
        .iter()
        .map(|x| x.powf(f64::from(degree) * exp.sigma))
        .fold(0.0f64, f64::max);
    let window = xs.iter().map(|x| x * exp.weight_b).fold(0.0f64, f64::max);
    let limit = support.max(window).max(p_max as f64).ceil() as u64 + 1;
    let tables = Arc::new(build_tables(limit)?);
    let provider = build_provider(exp.family, support, &ctx.cache_dir, &tables)?;
    let odd_primes = tables
        .primes_below(p_max as f64 + 0.5)
        .iter()
        .filter(|&&p| p != 2)
        .count()
        .max(1);
    let dual_tol = odd_primes as f64 * DUAL_PER_PRIME_TOL;

    let mut lines = Vec::new();
    let mut checks = Vec::new();
    let mut pass = true;
    for &x in &xs {
        let mut spec = FamilySpec::new(x, weight.clone(), provider.clone(), pair.clone(), mode)?;
        if let Some(z) = z {
            spec = spec.with_z(z)?;
        }
        let sums = family_sums(&spec, &tables)?;
        let residual = (sums.s_m + sums.s_r - sums.s).abs();
        let rel = residual / sums.s.abs().max(1.0);
        let split_ok = rel <= SPLIT_REL_TOL;
        let dual = s_m_dual(&spec, &tables, &contour, p_max)?;
        let direct = s_m_direct_restricted(&spec, &tables, p_max)?;
        let dual_diff = (dual - direct).abs();
        let dual_ok = dual_diff <= dual_tol;
        pass &= split_ok && dual_ok;
        lines.push(format!(
            "X={x} Z={} sM={} sR={} s={} rel={rel:e}",
            spec.z(),
            sums.s_m,
            sums.s_r,
            sums.s
        ));
        lines.push(format!(
            "X={x} pMax={p_max} dual={dual} direct={direct} diff={dual_diff:e} tol={dual_tol:e}"
        ));
        checks.push(json!({
            "X": x,
            "Z": spec.z(),
            "s_m": sums.s_m,
            "s_r": sums.s_r,
            "s": sums.s,
            "split_rel": rel,
            "split_pass": split_ok,
            "p_max": p_max,
            "dual": dual,
            "direct": direct,
            "dual_diff": dual_diff,
            "dual_tol": dual_tol,
            "dual_pass": dual_ok,
        }));
    }
    lines.push(if pass {
        String::from("PASS")
    } else {
        String::from("FAIL")
    });

    let content = match ctx.format {
        Format::Text => {
            let mut text = lines.join("\n");
            text.push('\n');
            text
        }
        Format::Json => json_content(&json!({
            "split_tolerance": SPLIT_REL_TOL,
            "pass": pass,
            "checks": checks,
        })),
    };
    emit(&ctx.out, &content)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::accuracy(
            "split-check: a split or dual comparison exceeded its tolerance",
        ))
    }
}
