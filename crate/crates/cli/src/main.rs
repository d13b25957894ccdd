//! `ecdm` command-line tool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ecdm::inference::{self, Analysis, Sidedness, StructureHypothesis, DEFAULT_KAPPA_THRESHOLD};
use ecdm::io::{read_matrix_file, write_matrix, BlockSpec, Dataset};
use ecdm::simulation::{run_model, Model, SimScenario};
use ecdm::{EcdmError, PairedSample};
use serde::Serialize;

mod report;

use report::{g6, Report};

#[derive(Parser)]
#[command(name = "ecdm", version, about = "High-dimensional correlation tests between two variable blocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test for nonzero cross-covariance between block 1 and block 2.
    Test(TestArgs),
    /// Test the cross-covariance against a candidate matrix.
    Structure(StructureArgs),
    /// Run a Monte Carlo scenario.
    Simulate(SimulateArgs),
    /// Print the version.
    Version,
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file, rows = samples, columns = variables.
    #[arg(long)]
    data: PathBuf,
    /// Block 1 is the first P1 columns.
    #[arg(long, conflicts_with = "block1_cols", required_unless_present = "block1_cols")]
    p1: Option<usize>,
    /// Comma-separated header names forming block 1.
    #[arg(long, value_delimiter = ',')]
    block1_cols: Option<Vec<String>>,
    /// Take base-2 logarithms of every value first.
    #[arg(long)]
    log2: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// κ̂ below this value is reported as the strong-signal regime.
    #[arg(long, default_value_t = DEFAULT_KAPPA_THRESHOLD)]
    kappa_threshold: f64,
}

#[derive(Args)]
struct StructureArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Dense p1 x p2 CSV with the candidate cross-covariance.
    #[arg(long)]
    sigma0: PathBuf,
    /// Reject on |statistic| > z_{alpha/2} instead of statistic > z_alpha.
    #[arg(long)]
    two_sided: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the first N simulated samples and the true cross-covariance.
    #[arg(long, default_value_t = 0)]
    export_samples: usize,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<EcdmError> for Failure {
    fn from(e: EcdmError) -> Self {
        let code = match e {
            EcdmError::DegenerateScale { .. } | EcdmError::NonpositiveScale(_) => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(args) => cmd_test(&args),
        Command::Structure(args) => cmd_structure(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Version => {
            println!("ecdm {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(args: &DataArgs) -> Result<(PairedSample, Vec<String>), Failure> {
    let mut data: Dataset = read_matrix_file(&args.data)?;
    if args.log2 {
        data = data.log2()?;
    }
    let spec = match (&args.block1_cols, args.p1) {
        (Some(cols), _) => BlockSpec::Named(cols.clone()),
        (None, Some(p1)) => BlockSpec::Leading(p1),
        (None, None) => return Err(Failure::input("one of --p1 or --block1-cols is required")),
    };
    Ok(data.paired(&spec)?)
}

/// Turn a degenerate-scale error into a message naming the constant columns.
fn name_columns(e: EcdmError, names: &[String]) -> Failure {
    if let EcdmError::DegenerateScale { block, constant_columns } = &e {
        let listed: Vec<&str> = constant_columns.iter().map(|&c| names[c - 1].as_str()).collect();
        let detail = if listed.is_empty() {
            String::new()
        } else {
            format!("; constant columns: {}", listed.join(", "))
        };
        return Failure {
            code: 3,
            message: format!("degenerate scale: block {block} has W = 0{detail}"),
        };
    }
    e.into()
}

fn emit(out: Option<&Path>, body: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

fn render<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) -> Result<String, Failure> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Text => text(),
    })
}

fn cmd_test(args: &TestArgs) -> CmdResult {
    let (sample, names) = load(&args.data)?;
    let analysis: Analysis = inference::analyze(&sample, args.data.alpha, args.kappa_threshold)
        .map_err(|e| name_columns(e, &names))?;
    let report = Report::from_analysis(&sample, &analysis);
    report.check_finite()?;
    let body = render(args.data.format, &report, || report.text())?;
    emit(args.data.out.as_deref(), &body)
}

#[derive(Serialize)]
struct StructureReport {
    n: usize,
    p1: usize,
    p2: usize,
    t_hat_0: f64,
    sigma0_norm_sq: f64,
    outcome: inference::TestOutcome,
}

fn cmd_structure(args: &StructureArgs) -> CmdResult {
    let (sample, names) = load(&args.data)?;
    let sigma0 = read_matrix_file(&args.sigma0)?;
    if sigma0.names.is_some() {
        return Err(Failure::input("sigma0 must be a plain numeric matrix without header"));
    }
    let hyp = StructureHypothesis::new(sigma0.values)?;
    let sidedness = if args.two_sided { Sidedness::TwoSided } else { Sidedness::Upper };
    let (t0, outcome) = inference::structure_test(&sample, &hyp, args.data.alpha, sidedness)
        .map_err(|e| name_columns(e, &names))?;
    let report = StructureReport {
        n: sample.n(),
        p1: sample.p1(),
        p2: sample.p2(),
        t_hat_0: t0,
        sigma0_norm_sq: hyp.sigma0_norm_sq(),
        outcome,
    };
    let values = [t0, outcome.statistic, outcome.p_value, outcome.ci.lower, outcome.ci.upper];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Failure::input("non-finite value in structure report"));
    }
    let body = render(args.data.format, &report, || {
        format!(
            "n = {}, p1 = {}, p2 = {}\nT_n0 = {}\n||Sigma0||_F^2 = {}\nstatistic = {}\ncritical value = {}\np-value = {}\nsidedness = {}\nreject = {}\nCI({}%) = [{}, {}]{}\n",
            report.n,
            report.p1,
            report.p2,
            g6(t0),
            g6(report.sigma0_norm_sq),
            g6(outcome.statistic),
            g6(outcome.critical_value),
            g6(outcome.p_value),
            if args.two_sided { "two-sided" } else { "upper" },
            outcome.reject,
            g6(100.0 * (1.0 - outcome.alpha)),
            g6(outcome.ci.lower),
            g6(outcome.ci.upper),
            if outcome.ci.degenerate { " (degenerate)" } else { "" },
        )
    })?;
    emit(args.data.out.as_deref(), &body)
}

fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::input(format!("{}: {e}", args.config.display())))?;
    let mut scenario = SimScenario::from_toml(&text)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if args.workers == 0 {
        return Err(Failure::input("--workers must be at least 1"));
    }
    let model = Model::new(&scenario)?;
    let run = run_model(&model, args.workers)?;
    fs::create_dir_all(&args.out)?;

    let summary = serde_json::to_string_pretty(&run.report).map_err(|e| Failure::input(e.to_string()))?;
    fs::write(args.out.join("summary.json"), summary + "\n")?;
    let mut table = Vec::new();
    run.write_table(&mut table)?;
    fs::write(args.out.join("replications.csv"), table)?;

    if args.export_samples > 0 {
        let mut buf = Vec::new();
        write_matrix(&mut buf, &model.sigma_star(), None)?;
        fs::write(args.out.join("sigma_star.csv"), buf)?;
        for r in 0..args.export_samples.min(scenario.replications) {
            let sample = model.replication(r as u64)?;
            let mut buf = Vec::new();
            write_matrix(&mut buf, &sample.to_matrix(), None)?;
            fs::write(args.out.join(format!("sample_{r}.csv")), buf)?;
        }
    }

    let r = &run.report;
    let label = if r.size.is_some() { "size" } else { "power" };
    println!(
        "{} replications, n = {}, p = {}: {label} = {} (se {}), SR {label} = {} (se {})",
        r.replications,
        r.oracle.n,
        scenario.p(),
        g6(r.rejection.rate),
        g6(r.rejection.se),
        g6(r.sr_rejection.rate),
        g6(r.sr_rejection.se),
    );
    if let (Some(_), Some(l)) = (r.power, r.oracle.l_pop) {
        println!("asymptotic power L = {}", g6(l));
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
