//! Command-line driver: test sequences for randomness, calibrate the null
//! distribution, generate sequences, export graphs.
//!
//! Exit codes: 0 = pass, 1 = fail, 2 = suspicious, 3 = usage error,
//! 4 = runtime error.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use expander_test::calibration::{
    calibrate_null, load_calibration, samples_csv, save_calibration, verdict, CalibrationRow,
    CalibrationTable, TestReport, Verdict, DEFAULT_ALPHA_FAIL, DEFAULT_ALPHA_SUSPICIOUS,
};
use expander_test::graph::{build_graph, export_graph, ExportFormat, TiePolicy};
use expander_test::sequence::{
    named_generator, parse_sequence, GeneratorSpec, InputFormat, Sequence,
};
use expander_test::spectral::{compute_lambda, ramanujan_threshold, SpectralOptions};

const EXIT_USAGE: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(
    name = "expander-test",
    version,
    about = "Spectral randomness test: order/index expander graphs and their second eigenvalue",
    after_help = "Exit codes: 0 pass, 1 fail, 2 suspicious, 3 usage error, 4 runtime error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a sequence for plausible i.i.d.-ness via its graph spectrum.
    Test(TestArgs),
    /// Estimate the null distribution of lambda for given lengths.
    Calibrate(CalibrateArgs),
    /// Emit values of a built-in source, one per line.
    Generate(GenerateArgs),
    /// Export the order/index graph of a sequence.
    ExportGraph(ExportArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Built-in source name, or `lcg` for custom parameters
    /// [named: lehmer, pm-20403, textbook-25173, turbo-pascal, rotenberg,
    /// knuth-good, lgm-16807, lecuyer-40692, coveyou, lagged-fib, logistic,
    /// vdc, fib-mod, kronecker, system]
    #[arg(long)]
    source: Option<String>,

    /// Seed for sources with a free start state
    #[arg(long)]
    seed: Option<u64>,

    /// Multiplier a for --source lcg
    #[arg(long)]
    mult: Option<u64>,

    /// Increment c for --source lcg [default: 0]
    #[arg(long)]
    inc: Option<u64>,

    /// Modulus m for --source lcg or fib-mod
    #[arg(long)]
    modulus: Option<u64>,

    /// Modulus exponent (coveyou e, lagged-fib k) [default: 32]
    #[arg(long)]
    exponent: Option<u32>,

    /// Base for --source vdc [default: 2]
    #[arg(long)]
    base: Option<u32>,

    /// Multiplier for --source kronecker [default: sqrt(2)]
    #[arg(long)]
    alpha: Option<f64>,
}

impl SourceArgs {
    fn resolve(&self) -> Result<GeneratorSpec, CliError> {
        let name = self.source.as_deref().ok_or_else(|| usage("--source is required"))?;
        if name == "lcg" {
            let mult = self.mult.ok_or_else(|| usage("--source lcg needs --mult"))?;
            let modulus = self.modulus.ok_or_else(|| usage("--source lcg needs --modulus"))?;
            let spec = GeneratorSpec::Lcg {
                mult,
                inc: self.inc.unwrap_or(0),
                modulus,
                seed: self.seed.unwrap_or(1),
            };
            spec.validate().map_err(|e| usage(&e.to_string()))?;
            return Ok(spec);
        }
        let mut spec = named_generator(name, self.seed).map_err(|e| usage(&e.to_string()))?;
        match &mut spec {
            GeneratorSpec::VanDerCorput { base } => {
                if let Some(b) = self.base {
                    *base = b;
                }
            }
            GeneratorSpec::FibonacciMod { modulus } => {
                if let Some(m) = self.modulus {
                    *modulus = m;
                }
            }
            GeneratorSpec::Kronecker { alpha } => {
                if let Some(a) = self.alpha {
                    *alpha = a;
                }
            }
            GeneratorSpec::Coveyou { exponent, .. }
            | GeneratorSpec::LaggedFibonacci { exponent, .. } => {
                if let Some(e) = self.exponent {
                    *exponent = e;
                }
            }
            _ => {}
        }
        spec.validate().map_err(|e| usage(&e.to_string()))?;
        Ok(spec)
    }

    fn label(&self) -> String {
        self.source.clone().unwrap_or_default()
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Tie policy for equal values
    #[arg(long, value_enum, default_value_t = TieArg::Jitter)]
    ties: TieArg,

    /// Seed of the jitter tie-break shuffle
    #[arg(long, default_value_t = 0)]
    jitter_seed: u64,

    /// Convergence tolerance on the Rayleigh-quotient change
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,

    /// Iteration cap per spectrum end [default: 100 * ceil(log2 n)]
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolverArgs {
    fn tie_policy(&self) -> TiePolicy {
        match self.ties {
            TieArg::Jitter => TiePolicy::Jitter { seed: self.jitter_seed },
            TieArg::Stable => TiePolicy::Stable,
        }
    }

    fn spectral_options(&self) -> SpectralOptions {
        SpectralOptions {
            tolerance: self.tol,
            max_iterations: self.max_iter,
            ..SpectralOptions::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Jitter,
    Stable,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Human,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParseFormat {
    OnePerLine,
    CsvSingleColumn,
}

impl From<ParseFormat> for InputFormat {
    fn from(f: ParseFormat) -> Self {
        match f {
            ParseFormat::OnePerLine => InputFormat::OnePerLine,
            ParseFormat::CsvSingleColumn => InputFormat::CsvSingleColumn,
        }
    }
}

#[derive(Args)]
struct TestArgs {
    /// Input file of numbers, or `-` for stdin (alternative to --source)
    #[arg(long)]
    input: Option<PathBuf>,

    /// Input layout for --input
    #[arg(long, value_enum, default_value_t = ParseFormat::OnePerLine)]
    input_format: ParseFormat,

    #[command(flatten)]
    source: SourceArgs,

    /// Number of values to draw from --source
    #[arg(long)]
    n: Option<usize>,

    #[command(flatten)]
    solver: SolverArgs,

    /// Calibration table file (see `calibrate`)
    #[arg(long)]
    calibration: Option<PathBuf>,

    /// Calibrate on the fly when the table has no row for this n
    #[arg(long)]
    auto_calibrate: bool,

    /// Trials for --auto-calibrate (resolution of p is 1/(trials+1))
    #[arg(long, default_value_t = 400)]
    trials: usize,

    /// Seed of the auto-calibration stream
    #[arg(long, default_value_t = 42)]
    calibration_seed: u64,

    /// Worker threads for auto-calibration (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// p-value below which the verdict is fail
    #[arg(long, default_value_t = DEFAULT_ALPHA_FAIL)]
    alpha_fail: f64,

    /// p-value below which the verdict is suspicious
    #[arg(long, default_value_t = DEFAULT_ALPHA_SUSPICIOUS)]
    alpha_suspicious: f64,

    #[arg(long, value_enum, default_value_t = OutputFormat::Human)]
    format: OutputFormat,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Sequence lengths to calibrate, comma-separated (e.g. 500,1000)
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,

    /// Monte Carlo trials per length (at least 100)
    #[arg(long, default_value_t = 1000)]
    trials: usize,

    /// Seed of the calibration stream
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Output table file; merged into an existing table if present
    #[arg(long)]
    out: PathBuf,

    /// Also write per-trial lambda values as CSV (n,trial,lambda)
    #[arg(long)]
    emit_samples: Option<PathBuf>,

    /// Store only summary statistics (drops p-value support)
    #[arg(long)]
    summary_only: bool,

    #[arg(long, value_enum, default_value_t = OutputFormat::Human)]
    format: OutputFormat,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: SourceArgs,

    /// How many values to emit
    #[arg(long)]
    count: usize,

    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Input file of numbers, or `-` for stdin (alternative to --source)
    #[arg(long)]
    input: Option<PathBuf>,

    /// Input layout for --input
    #[arg(long, value_enum, default_value_t = ParseFormat::OnePerLine)]
    input_format: ParseFormat,

    #[command(flatten)]
    source: SourceArgs,

    /// Number of values to draw from --source
    #[arg(long)]
    n: Option<usize>,

    /// Tie policy for equal values
    #[arg(long, value_enum, default_value_t = TieArg::Jitter)]
    ties: TieArg,

    /// Seed of the jitter tie-break shuffle
    #[arg(long, default_value_t = 0)]
    jitter_seed: u64,

    /// Graph text format
    #[arg(long)]
    format: String,

    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

struct CliError {
    message: String,
    code: u8,
}

fn usage(message: &str) -> CliError {
    CliError { message: message.to_string(), code: EXIT_USAGE }
}

fn runtime(message: String) -> CliError {
    CliError { message, code: EXIT_RUNTIME }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap's own exit code would collide with the suspicious verdict
            let rendered = err.render();
            if err.use_stderr() {
                eprint!("{rendered}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{rendered}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Generate(args) => cmd_generate(args),
        Command::ExportGraph(args) => cmd_export_graph(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn load_sequence(
    input: &Option<PathBuf>,
    input_format: ParseFormat,
    source: &SourceArgs,
    n: Option<usize>,
) -> Result<Sequence, CliError> {
    match (input, &source.source) {
        (Some(path), None) => {
            let reader: Box<dyn BufRead> = if path.as_os_str() == "-" {
                Box::new(BufReader::new(io::stdin()))
            } else {
                Box::new(BufReader::new(
                    File::open(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?,
                ))
            };
            parse_sequence(reader, input_format.into()).map_err(|e| runtime(e.to_string()))
        }
        (None, Some(_)) => {
            let count = n.ok_or_else(|| usage("--source needs --n"))?;
            let spec = source.resolve()?;
            spec.stream(count, source.label()).map_err(|e| usage(&e.to_string()))
        }
        (Some(_), Some(_)) => Err(usage("--input and --source are mutually exclusive")),
        (None, None) => Err(usage("provide --input FILE or --source NAME")),
    }
}

fn cmd_test(args: TestArgs) -> Result<u8, CliError> {
    if args.auto_calibrate && args.trials < 100 {
        return Err(usage("--trials must be at least 100"));
    }
    let seq = load_sequence(&args.input, args.input_format, &args.source, args.n)?;
    let n = seq.len();

    let row = resolve_calibration_row(&args, n)?;
    let graph = build_graph(&seq, args.solver.tie_policy()).map_err(|e| usage(&e.to_string()))?;
    let opts = args.solver.spectral_options();
    let spectral = compute_lambda(&graph, &opts).map_err(|e| usage(&e.to_string()))?;
    let report = verdict(spectral.lambda, &row, args.alpha_fail, args.alpha_suspicious)
        .map_err(|e| usage(&e.to_string()))?;

    let rendered = match args.format {
        OutputFormat::Human => render_report_human(&seq, &spectral, &report),
        OutputFormat::Json => render_report_json(&spectral, &report),
        OutputFormat::Csv => render_report_csv(&spectral, &report),
    };
    print!("{rendered}");
    Ok(match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Suspicious => 2,
    })
}

fn resolve_calibration_row(args: &TestArgs, n: usize) -> Result<CalibrationRow, CliError> {
    if let Some(path) = &args.calibration {
        let table = load_calibration(path).map_err(|e| runtime(e.to_string()))?;
        if let Some(row) = table.find(n) {
            return Ok(row.clone());
        }
        if !args.auto_calibrate {
            return Err(runtime(format!(
                "{} has no calibration for n = {n}; re-run `calibrate --n {n}` or pass --auto-calibrate",
                path.display()
            )));
        }
    } else if !args.auto_calibrate {
        return Err(runtime(
            "no calibration given; pass --calibration FILE or --auto-calibrate".to_string(),
        ));
    }
    eprintln!(
        "auto-calibrating at n = {n} with {} trials (p-value resolution 1/{})",
        args.trials,
        args.trials + 1
    );
    calibrate_null(n, args.trials, args.calibration_seed, args.workers)
        .map_err(|e| usage(&e.to_string()))
}

/// 17 significant digits, reproduces the f64 bit pattern exactly.
fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// 6 significant digits for human-facing numbers.
fn g6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn render_report_human(
    seq: &Sequence,
    spectral: &expander_test::spectral::SpectralResult,
    report: &TestReport,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("source      {}\n", seq.label()));
    out.push_str(&format!("n           {}\n", report.n));
    out.push_str(&format!("lambda      {}\n", g6(report.observed_lambda)));
    out.push_str(&format!("lambda2     {}\n", g6(spectral.lambda2)));
    out.push_str(&format!("lambda_n    {}\n", g6(spectral.lambda_n)));
    out.push_str(&format!(
        "excess      {}  (lambda - 2*sqrt(3), threshold {})\n",
        g6(report.excess),
        g6(ramanujan_threshold())
    ));
    out.push_str(&format!("z-score     {}\n", g6(report.z_score)));
    match report.empirical_p {
        Some(p) => out.push_str(&format!("p-value     {}\n", g6(p))),
        None => out.push_str(&format!(
            "p-value     n/a (no raw samples; z-score approximation{})\n",
            if report.approximate { ", approximate" } else { "" }
        )),
    }
    out.push_str(&format!("calibration {}\n", report.calibration_provenance));
    if spectral.lower_bound_only {
        out.push_str("note        iteration cap hit; lambda is a lower bound\n");
    }
    out.push_str(&format!(
        "iterations  {}   residual {}\n",
        spectral.iterations,
        g6(spectral.residual)
    ));
    out.push_str(&format!("verdict     {}\n", report.verdict));
    out
}

fn json_field_f64(value: f64) -> String {
    if value.is_finite() {
        g17(value)
    } else {
        "null".to_string()
    }
}

fn render_report_json(
    spectral: &expander_test::spectral::SpectralResult,
    report: &TestReport,
) -> String {
    let p = match report.empirical_p {
        Some(p) => g17(p),
        None => "null".to_string(),
    };
    format!(
        concat!(
            "{{\n",
            "  \"n\": {},\n",
            "  \"lambda\": {},\n",
            "  \"lambda2\": {},\n",
            "  \"lambda_n\": {},\n",
            "  \"excess\": {},\n",
            "  \"z_score\": {},\n",
            "  \"empirical_p\": {},\n",
            "  \"verdict\": \"{}\",\n",
            "  \"approximate\": {},\n",
            "  \"calibration\": \"{}\"\n",
            "}}\n"
        ),
        report.n,
        g17(report.observed_lambda),
        g17(spectral.lambda2),
        g17(spectral.lambda_n),
        g17(report.excess),
        json_field_f64(report.z_score),
        p,
        report.verdict,
        report.approximate,
        report.calibration_provenance,
    )
}

const REPORT_CSV_HEADER: &str =
    "n,lambda,lambda2,lambda_n,excess,z_score,empirical_p,verdict,approximate,calibration\n";

fn render_report_csv(
    spectral: &expander_test::spectral::SpectralResult,
    report: &TestReport,
) -> String {
    let p = match report.empirical_p {
        Some(p) => g17(p),
        None => String::new(),
    };
    format!(
        "{}{},{},{},{},{},{},{},{},{},{}\n",
        REPORT_CSV_HEADER,
        report.n,
        g17(report.observed_lambda),
        g17(spectral.lambda2),
        g17(spectral.lambda_n),
        g17(report.excess),
        if report.z_score.is_finite() { g17(report.z_score) } else { String::new() },
        p,
        report.verdict,
        report.approximate,
        report.calibration_provenance,
    )
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<u8, CliError> {
    if args.n.is_empty() {
        return Err(usage("--n needs at least one length"));
    }
    if args.trials < 100 {
        return Err(usage("--trials must be at least 100"));
    }
    for &n in &args.n {
        if n < 10 {
            return Err(usage("calibration lengths must be at least 10"));
        }
    }
    let mut table = if args.out.exists() {
        load_calibration(&args.out).map_err(|e| runtime(e.to_string()))?
    } else {
        CalibrationTable::new()
    };
    let mut emitted: Vec<CalibrationRow> = Vec::new();
    for &n in &args.n {
        let mut row = calibrate_null(n, args.trials, args.seed, args.workers)
            .map_err(|e| usage(&e.to_string()))?;
        emitted.push(row.clone());
        if args.summary_only {
            row.raw_samples = None;
        }
        match args.format {
            OutputFormat::Human => {
                println!(
                    "n={n} trials={} mean={} std={} P(lambda < 2*sqrt(3))={}%",
                    row.trials,
                    g6(row.mean_lambda),
                    g6(row.std_lambda),
                    g6(row.p_below_threshold * 100.0)
                );
            }
            OutputFormat::Json => {
                println!(
                    "{{\"n\": {n}, \"trials\": {}, \"mean\": {}, \"std\": {}, \"p_below\": {}}}",
                    row.trials,
                    g17(row.mean_lambda),
                    g17(row.std_lambda),
                    g17(row.p_below_threshold)
                );
            }
            OutputFormat::Csv => {
                println!(
                    "{n},{},{},{},{}",
                    row.trials,
                    g17(row.mean_lambda),
                    g17(row.std_lambda),
                    g17(row.p_below_threshold)
                );
            }
        }
        table.insert(row);
    }
    save_calibration(&table, &args.out).map_err(|e| runtime(e.to_string()))?;
    if let Some(csv_path) = &args.emit_samples {
        let refs: Vec<&CalibrationRow> = emitted.iter().collect();
        let csv = samples_csv(&refs).map_err(|e| runtime(e.to_string()))?;
        write_output(Some(csv_path), &csv)?;
    }
    Ok(0)
}

/// Integer-valued samples print as integers so that emitted text
/// round-trips bit-exactly through `parse_sequence`.
fn format_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 9e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<u8, CliError> {
    let spec = args.source.resolve()?;
    let seq = spec
        .stream(args.count, args.source.label())
        .map_err(|e| usage(&e.to_string()))?;
    let mut text = String::with_capacity(args.count * 12);
    for &v in seq.values() {
        text.push_str(&format_value(v));
        text.push('\n');
    }
    write_output(args.out.as_deref(), &text)?;
    Ok(0)
}

fn cmd_export_graph(args: ExportArgs) -> Result<u8, CliError> {
    let format: ExportFormat = args.format.parse().map_err(|e: expander_test::graph::GraphError| {
        usage(&e.to_string())
    })?;
    let seq = load_sequence(&args.input, args.input_format, &args.source, args.n)?;
    let policy = match args.ties {
        TieArg::Jitter => TiePolicy::Jitter { seed: args.jitter_seed },
        TieArg::Stable => TiePolicy::Stable,
    };
    let graph = build_graph(&seq, policy).map_err(|e| usage(&e.to_string()))?;
    write_output(args.out.as_deref(), &export_graph(&graph, format))?;
    Ok(0)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(path) => {
            let mut file =
                File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            file.write_all(text.as_bytes())
                .map_err(|e| runtime(format!("{}: {e}", path.display())))
        }
        None => {
            io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| runtime(format!("stdout: {e}")))
        }
    }
}
