//! Command-line interface: load observation sets, run identifiability or
//! estimation, emit machine-readable reports, generate synthetic data and
//! verify costs against observations.
//!
//! Exit codes for `identify`: 0 identifiable (including identifiable up to
//! shift equivalence), 2 ambiguous, 3 inconsistent, 4 undecided (combination
//! cap), 1 input error. `verify` exits 0 when every record passes and 3
//! otherwise.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use iot_core::estimate::{
    asymptotic_ci, generate_noisy_observations, lasso_shifted, least_squares,
    random_marginal_sampler, DesignMatrix,
};
use iot_core::files::{
    CostClassFile, CostFile, EstimateFile, ForwardFile, MarginalsFile, ObservationFile,
    ReportFile, TruthFile, VerticesFile, OBSERVATION_FILE_VERSION,
};
use iot_core::forward::solve_forward;
use iot_core::identify::{
    identify_costs_monge, identify_costs_only, identify_costs_only_equality_sufficient,
    identify_costs_plans, identify_costs_plans_rank, identify_costs_plans_sym, identify_full,
    identify_plans_only, identify_plans_only_sym, identify_potentials,
    identify_potentials_monge, verify_consistency, IdentifyOptions,
};
use iot_core::polytope::{enumerate_extreme_points, EnumLimits};
use iot_core::rational::{parse_rational, render_rational};
use iot_core::types::{
    validate_observation_set, CostClass, IdentifiabilityReport, ObservationRecord,
    ObservationSet, Verdict,
};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "iot",
    version,
    about = "Inverse optimal transport: exact cost identifiability and estimation on finite spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward transport problem exactly.
    Forward(ForwardArgs),
    /// Enumerate the extreme points of a transportation polytope.
    Enumerate(EnumerateArgs),
    /// Decide identifiability of the cost from an observation file.
    Identify(IdentifyArgs),
    /// Estimate the cost from noisy totals and plans.
    Estimate(EstimateArgs),
    /// Generate synthetic observations from a ground-truth cost.
    Generate(GenerateArgs),
    /// Check a cost matrix against an observation file, record by record.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ForwardArgs {
    /// Cost matrix file (JSON).
    #[arg(long)]
    cost: PathBuf,
    /// Marginal pair file (JSON).
    #[arg(long)]
    marginals: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    marginals: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Costs,
    Potentials,
    Plans,
    #[value(name = "costs-plans", alias = "costs+plans")]
    CostsPlans,
    Full,
}

impl Mode {
    fn as_str(&self) -> &'static str {
        match self {
            Mode::Costs => "costs",
            Mode::Potentials => "potentials",
            Mode::Plans => "plans",
            Mode::CostsPlans => "costs-plans",
            Mode::Full => "full",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassFlag {
    General,
    Monge,
    Sym0,
    Box,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Observation file (JSON).
    input: PathBuf,
    /// Which observed quantities to use.
    #[arg(long, value_enum)]
    mode: Mode,
    /// Cost class; overrides the class declared in the file.
    #[arg(long, value_enum)]
    class: Option<ClassFlag>,
    /// Upper bound C0 for the box class (0 <= c <= C0).
    #[arg(long = "box", value_name = "C0")]
    box_bound: Option<String>,
    /// Combination-sweep cap.
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    /// Use the reduced inequality set from the maximal faces.
    #[arg(long)]
    reduce_constraints: bool,
    /// Treat each plan as only an extreme point of its minimal face.
    #[arg(long)]
    vertex_only: bool,
    /// Run the equality-only (rank) sufficient check instead of the full
    /// system.
    #[arg(long)]
    equality_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Ls,
    Lasso,
}

#[derive(Args)]
struct EstimateArgs {
    /// Observation file with totals (possibly noisy) and plans.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "ls")]
    method: Method,
    /// LASSO regularization weight.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// LASSO baseline shift b0.
    #[arg(long, default_value_t = 0.0)]
    b0: f64,
    /// Known noise standard deviation (estimated from residuals otherwise).
    #[arg(long)]
    sigma: Option<f64>,
    /// Confidence level for entrywise intervals, e.g. 0.95.
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Ground-truth cost file.
    #[arg(long)]
    cost: PathBuf,
    /// Number of records.
    #[arg(long)]
    k: usize,
    /// Noise standard deviation on the totals.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which fields to emit per record.
    #[arg(long, value_enum)]
    mode: Mode,
    /// Denominator granularity of the sampled marginals.
    #[arg(long, default_value_t = 12)]
    granularity: u64,
    /// Output observation file; the exact truth goes to <out>.truth.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    cost: PathBuf,
    #[arg(long)]
    observations: PathBuf,
}

fn main() -> ExitCode {
    // Die quietly when the output pipe closes (e.g. `iot ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Forward(args) => cmd_forward(args),
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Identify(args) => cmd_identify(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn limits_from_env() -> Result<EnumLimits> {
    let mut limits = EnumLimits::default();
    if let Ok(value) = std::env::var("IOT_MAX_CELLS") {
        limits.max_cells = value
            .parse()
            .with_context(|| format!("IOT_MAX_CELLS={value:?} is not a number"))?;
    }
    Ok(limits)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, String)> {
    let bytes =
        fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let digest = format!("sha256:{:x}", Sha256::digest(&bytes));
    let value = serde_json::from_slice(&bytes)
        .with_context(|| format!("cannot parse {}", path.display()))?;
    Ok((value, digest))
}

/// Writes atomically: serialize to a sibling temp file, then rename.
fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text.as_bytes())
        .with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("cannot move into place {}", path.display()))?;
    Ok(())
}

fn emit<T: serde::Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn cmd_forward(args: ForwardArgs) -> Result<ExitCode> {
    let (cost_file, _): (CostFile, _) = read_json(&args.cost)?;
    let (marg_file, _): (MarginalsFile, _) = read_json(&args.marginals)?;
    let cost = cost_file.to_matrix()?;
    let marg = marg_file.to_pair()?;
    let sol = solve_forward(&cost, &marg)?;
    let out = ForwardFile {
        value: render_rational(&sol.value),
        plan: (0..sol.plan.nrows())
            .map(|i| sol.plan.row(i).iter().map(render_rational).collect())
            .collect(),
        f: sol.potentials.f.iter().map(render_rational).collect(),
        g: sol.potentials.g.iter().map(render_rational).collect(),
    };
    emit(&args.out, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<ExitCode> {
    let (marg_file, _): (MarginalsFile, _) = read_json(&args.marginals)?;
    let marg = marg_file.to_pair()?;
    let limits = limits_from_env()?;
    let eps = enumerate_extreme_points(&marg, &limits)?;
    let out = VerticesFile {
        mu: marg_file.mu.clone(),
        nu: marg_file.nu.clone(),
        count: eps.len(),
        vertices: eps
            .vertices
            .iter()
            .map(|v| {
                (0..v.nrows())
                    .map(|i| v.row(i).iter().map(render_rational).collect())
                    .collect()
            })
            .collect(),
    };
    emit(&args.out, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn effective_class(
    file_class: &CostClassFile,
    flag: Option<ClassFlag>,
    box_bound: &Option<String>,
) -> Result<CostClass> {
    match flag {
        None => file_class.to_class().map_err(Into::into),
        Some(ClassFlag::General) => Ok(CostClass::General),
        Some(ClassFlag::Monge) => Ok(CostClass::Monge),
        Some(ClassFlag::Sym0) => Ok(CostClass::Sym0),
        Some(ClassFlag::Box) => {
            let bound = box_bound
                .as_ref()
                .context("--class box requires --box C0")?;
            Ok(CostClass::Box(parse_rational(bound)?))
        }
    }
}

fn verdict_exit(verdict: Verdict) -> ExitCode {
    match verdict {
        Verdict::Identifiable | Verdict::IdentifiableInQuotient => ExitCode::from(0),
        Verdict::Ambiguous => ExitCode::from(2),
        Verdict::Inconsistent => ExitCode::from(3),
        Verdict::UndecidedCap => ExitCode::from(4),
    }
}

fn dispatch_identify(
    mode: Mode,
    equality_only: bool,
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport> {
    let report = match (mode, &obs.cost_class) {
        (Mode::Costs, CostClass::Monge) => identify_costs_monge(obs, opts)?,
        (Mode::Costs, _) if equality_only => {
            identify_costs_only_equality_sufficient(obs, opts)?
        }
        (Mode::Costs, _) => identify_costs_only(obs, opts)?,
        (Mode::Potentials, CostClass::Monge) => identify_potentials_monge(obs, opts)?,
        (Mode::Potentials, _) => identify_potentials(obs, opts)?,
        (Mode::Plans, CostClass::Sym0) => identify_plans_only_sym(obs, opts)?,
        (Mode::Plans, CostClass::General) => identify_plans_only(obs, opts)?,
        (Mode::Plans, _) => bail!(
            "mode=plans supports only the general and sym0 classes (shifts make \
             other class constraints unobservable)"
        ),
        (Mode::CostsPlans, CostClass::Sym0) if equality_only => {
            identify_costs_plans_sym(obs, opts)?
        }
        (Mode::CostsPlans, _) if equality_only => identify_costs_plans_rank(obs, opts)?,
        (Mode::CostsPlans, _) => identify_costs_plans(obs, opts)?,
        (Mode::Full, _) => identify_full(obs)?,
    };
    Ok(report)
}

fn check_mode_fields(mode: Mode, obs: &ObservationSet) -> Result<()> {
    let need = |ok: bool, what: &str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            bail!("mode={} but a record lacks {what}", mode.as_str())
        }
    };
    for rec in &obs.records {
        match mode {
            Mode::Costs => need(rec.alpha.is_some(), "a total cost (alpha)")?,
            Mode::Potentials => need(rec.potentials.is_some(), "potentials (f, g)")?,
            Mode::Plans => need(rec.plan.is_some(), "a transport plan")?,
            Mode::CostsPlans => {
                need(rec.alpha.is_some(), "a total cost (alpha)")?;
                need(rec.plan.is_some(), "a transport plan")?;
            }
            Mode::Full => {
                need(rec.alpha_or_dual().is_some(), "a total cost (alpha)")?;
                need(rec.plan.is_some(), "a transport plan")?;
                need(rec.potentials.is_some(), "potentials (f, g)")?;
            }
        }
    }
    Ok(())
}

fn cmd_identify(args: IdentifyArgs) -> Result<ExitCode> {
    let (file, digest): (ObservationFile, _) = read_json(&args.input)?;
    let mut obs = file.to_set()?;
    obs.cost_class = effective_class(&file.cost_class, args.class, &args.box_bound)?;
    let violations = validate_observation_set(&obs);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("invalid input: {v}");
        }
        bail!("observation file failed validation");
    }
    check_mode_fields(args.mode, &obs)?;
    let opts = IdentifyOptions {
        limits: limits_from_env()?,
        combination_cap: args.cap,
        reduce_constraints: args.reduce_constraints,
        vertex_only: args.vertex_only,
    };
    let report = dispatch_identify(args.mode, args.equality_only, &obs, &opts)?;
    let file = ReportFile::from_report(&report, TOOL_VERSION, &digest);
    emit(&args.out, &file)?;
    if args.out.is_some() {
        println!("verdict: {}", report.verdict);
    }
    Ok(verdict_exit(report.verdict))
}

fn cmd_estimate(args: EstimateArgs) -> Result<ExitCode> {
    let (file, digest): (ObservationFile, _) = read_json(&args.input)?;
    let obs = file.to_set()?;
    let mut design = DesignMatrix::from_observations(&obs)?;
    design.sigma = args.sigma;
    let (report, method_name) = match args.method {
        Method::Ls => (least_squares(&design)?, "least_squares"),
        Method::Lasso => (
            lasso_shifted(&design, args.lambda, args.b0)?,
            "lasso_shifted",
        ),
    };
    let ci = match (args.level, args.method) {
        (Some(level), Method::Ls) => Some(asymptotic_ci(&report, level)?),
        (Some(_), Method::Lasso) => {
            bail!("confidence intervals are available for the least squares method only")
        }
        (None, _) => None,
    };
    let out = EstimateFile::from_report(&report, method_name, args.level, ci.as_deref(), &digest);
    emit(&args.out, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode> {
    let (cost_file, _): (CostFile, _) = read_json(&args.cost)?;
    let cost = cost_file.to_matrix()?;
    if args.sigma > 0.0 && !matches!(args.mode, Mode::Costs | Mode::CostsPlans) {
        bail!(
            "sigma > 0 applies to observed totals; mode={} carries exact fields only",
            args.mode.as_str()
        );
    }
    if args.k == 0 {
        bail!("need at least one record");
    }
    let (n, m) = (cost.nrows(), cost.ncols());
    let mut sampler = random_marginal_sampler(n, m, args.granularity.max(2));
    let data = generate_noisy_observations(&cost, &mut sampler, args.k, args.sigma, args.seed)?;
    let mut records = Vec::with_capacity(args.k);
    for k in 0..args.k {
        let marg = &data.marginals[k];
        let exact_alpha = &data.alphas[k];
        let noisy = data.design.y[k];
        // Recompute potentials only for the modes that emit them.
        let potentials = match args.mode {
            Mode::Potentials | Mode::Full => {
                Some(solve_forward(&cost, marg)?.potentials)
            }
            _ => None,
        };
        let alpha_string = match args.mode {
            Mode::Plans => None,
            _ if args.sigma > 0.0 => Some(format!("{noisy}")),
            _ => Some(render_rational(exact_alpha)),
        };
        records.push(RecordOut {
            marg: MarginalsFile::from_pair(marg),
            alpha: alpha_string,
            plan: matches!(args.mode, Mode::Plans | Mode::CostsPlans | Mode::Full)
                .then(|| &data.plans[k]),
            potentials,
        });
    }
    let file = ObservationFile {
        version: OBSERVATION_FILE_VERSION,
        n,
        m,
        cost_class: cost_file.cost_class.clone(),
        records: records
            .iter()
            .map(|r| iot_core::files::RecordFile {
                mu: r.marg.mu.clone(),
                nu: r.marg.nu.clone(),
                alpha: r.alpha.clone(),
                plan: r.plan.map(|p| {
                    (0..p.nrows())
                        .map(|i| p.row(i).iter().map(render_rational).collect())
                        .collect()
                }),
                f: r
                    .potentials
                    .as_ref()
                    .map(|p| p.f.iter().map(render_rational).collect()),
                g: r
                    .potentials
                    .as_ref()
                    .map(|p| p.g.iter().map(render_rational).collect()),
            })
            .collect(),
    };
    write_json(&args.out, &file)?;
    let truth = TruthFile {
        cost: cost_file,
        alphas: data.alphas.iter().map(render_rational).collect(),
        sigma: args.sigma,
        seed: args.seed,
        mode: args.mode.as_str().to_string(),
    };
    let truth_path = sidecar_path(&args.out);
    write_json(&truth_path, &truth)?;
    println!(
        "wrote {} records to {} (truth in {})",
        args.k,
        args.out.display(),
        truth_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

struct RecordOut<'a> {
    marg: MarginalsFile,
    alpha: Option<String>,
    plan: Option<&'a iot_core::types::Matrix>,
    potentials: Option<iot_core::types::PotentialPair>,
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".truth.json");
    out.with_file_name(name)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let (cost_file, _): (CostFile, _) = read_json(&args.cost)?;
    let (obs_file, _): (ObservationFile, _) = read_json(&args.observations)?;
    let cost = cost_file.to_matrix()?;
    let obs: ObservationSet = obs_file.to_set()?;
    let checks = verify_consistency(&cost, &obs, &limits_from_env()?)?;
    let mut all_pass = true;
    for check in &checks {
        let status = if check.pass { "PASS" } else { "FAIL" };
        let wanted = describe_observed(&obs.records[check.record]);
        println!(
            "record {}: {} computed={} {}",
            check.record,
            status,
            render_rational(&check.computed_value),
            wanted
        );
        for d in &check.details {
            println!("  {d}");
        }
        all_pass &= check.pass;
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn describe_observed(rec: &ObservationRecord) -> String {
    match &rec.alpha {
        Some(a) => format!("observed={}", render_rational(a)),
        None => String::new(),
    }
}
