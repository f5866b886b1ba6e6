//! Null distribution of lambda for i.i.d. inputs, estimated by Monte
//! Carlo, plus the decision machinery that turns an observed lambda into
//! an empirical p-value and a verdict.
//!
//! Calibration draws from a seeded counter-based stream (not the sequence
//! under test, not the OS RNG) so results are reproducible and do not
//! depend on worker scheduling: trial i is a pure function of
//! (seed, n, i). The on-disk table format is line-oriented text with a
//! version header and a trailing checksum; see [`save_calibration`].

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::thread;

use crate::graph::{build_graph, TiePolicy};
use crate::rng::SplitMix64;
use crate::sequence::Sequence;
use crate::spectral::{compute_lambda, ramanujan_threshold, SpectralOptions};

/// Quantile levels stored in every calibration row.
pub const QUANTILE_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

/// Null-distribution summary for one sequence length.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub n: usize,
    pub trials: usize,
    pub mean_lambda: f64,
    pub std_lambda: f64,
    /// Fraction of trials with lambda < 2 sqrt 3.
    pub p_below_threshold: f64,
    /// Values at [`QUANTILE_LEVELS`], nondecreasing.
    pub quantiles: [f64; 7],
    /// Per-trial lambda values in trial order; required for p-values.
    pub raw_samples: Option<Vec<f64>>,
    /// Tie policy used while calibrating ("jitter" or "stable").
    pub tie_policy: String,
    /// Master seed of the calibration stream.
    pub seed: u64,
}

impl CalibrationRow {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        QUANTILE_LEVELS
            .iter()
            .position(|&l| l == level)
            .map(|i| self.quantiles[i])
    }
}

/// Outcome of testing one observed lambda against a calibration row.
#[derive(Debug, Clone)]
pub struct TestReport {
    pub n: usize,
    pub observed_lambda: f64,
    /// observed_lambda - 2 sqrt 3.
    pub excess: f64,
    /// (observed - mean) / std of the null.
    pub z_score: f64,
    /// Add-one upper-tail p-value; `None` when the row has no raw samples
    /// and the decision fell back to the normal approximation.
    pub empirical_p: Option<f64>,
    pub verdict: Verdict,
    /// True when the verdict came from the z-score fallback.
    pub approximate: bool,
    pub calibration_provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Suspicious,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Suspicious => write!(f, "suspicious"),
            Verdict::Fail => write!(f, "fail"),
        }
    }
}

/// Lambda of the i-th null trial: n i.i.d. uniforms from the calibration
/// stream, order/index graph, power iteration. Pure in (seed, n, i).
fn null_trial_lambda(n: usize, seed: u64, trial: u64, opts: &SpectralOptions) -> f64 {
    let mut rng = SplitMix64::for_stream(seed, 0x6e756c6c, trial);
    let values: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let seq = Sequence::new(values, "calibration").expect("uniforms are finite");
    let jitter_seed = SplitMix64::for_stream(seed, 0x6a697474, trial).next_u64();
    let graph = build_graph(&seq, TiePolicy::Jitter { seed: jitter_seed }).expect("n >= 10");
    let solver_seed = SplitMix64::for_stream(seed, 0x736f6c76, trial).next_u64();
    let trial_opts = SpectralOptions { rng_seed: solver_seed, ..opts.clone() };
    compute_lambda(&graph, &trial_opts).expect("options validated by caller").lambda
}

/// Estimates the null distribution of lambda at length `n`.
///
/// `workers = 0` uses the available parallelism. Results are identical
/// for every worker count.
pub fn calibrate_null(
    n: usize,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<CalibrationRow, CalibrationError> {
    calibrate_null_with_options(n, trials, seed, workers, &SpectralOptions::default())
}

/// [`calibrate_null`] with explicit solver options.
pub fn calibrate_null_with_options(
    n: usize,
    trials: usize,
    seed: u64,
    workers: usize,
    opts: &SpectralOptions,
) -> Result<CalibrationRow, CalibrationError> {
    if n < 10 {
        return Err(CalibrationError::InvalidParameter(format!(
            "calibration needs n >= 10, got {n}"
        )));
    }
    if trials < 100 {
        return Err(CalibrationError::InvalidParameter(format!(
            "calibration needs at least 100 trials, got {trials}"
        )));
    }
    opts.validate()
        .map_err(|e| CalibrationError::InvalidParameter(e.to_string()))?;

    let workers = if workers == 0 {
        thread::available_parallelism().map(|p| p.get()).unwrap_or(1)
    } else {
        workers
    };
    let workers = workers.min(trials);

    let mut samples = vec![0.0f64; trials];
    if workers <= 1 {
        for (i, slot) in samples.iter_mut().enumerate() {
            *slot = null_trial_lambda(n, seed, i as u64, opts);
        }
    } else {
        let per = trials.div_ceil(workers);
        thread::scope(|scope| {
            for (chunk_idx, chunk) in samples.chunks_mut(per).enumerate() {
                let opts = opts.clone();
                scope.spawn(move || {
                    let base = chunk_idx * per;
                    for (off, slot) in chunk.iter_mut().enumerate() {
                        *slot = null_trial_lambda(n, seed, (base + off) as u64, &opts);
                    }
                });
            }
        });
    }

    Ok(summarize(n, seed, "jitter", samples))
}

fn summarize(n: usize, seed: u64, tie_policy: &str, samples: Vec<f64>) -> CalibrationRow {
    let trials = samples.len();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (trials - 1) as f64;
    let threshold = ramanujan_threshold();
    let below = samples.iter().filter(|&&x| x < threshold).count();
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut quantiles = [0.0f64; 7];
    for (slot, &level) in quantiles.iter_mut().zip(QUANTILE_LEVELS.iter()) {
        *slot = quantile_sorted(&sorted, level);
    }
    CalibrationRow {
        n,
        trials,
        mean_lambda: mean,
        std_lambda: var.sqrt(),
        p_below_threshold: below as f64 / trials as f64,
        quantiles,
        raw_samples: Some(samples),
        tie_policy: tie_policy.to_string(),
        seed,
    }
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Add-one upper-tail empirical p-value:
/// (1 + #{null samples >= observed}) / (trials + 1).
pub fn empirical_p(observed: f64, row: &CalibrationRow) -> Result<f64, CalibrationError> {
    let samples = row.raw_samples.as_ref().ok_or(CalibrationError::MissingSamples)?;
    let ge = samples.iter().filter(|&&s| s >= observed).count();
    Ok((1 + ge) as f64 / (samples.len() + 1) as f64)
}

/// Default alpha below which the verdict is `fail`.
pub const DEFAULT_ALPHA_FAIL: f64 = 0.001;
/// Default alpha below which the verdict is `suspicious`.
pub const DEFAULT_ALPHA_SUSPICIOUS: f64 = 0.01;

/// Classifies an observed lambda against the null. When the row carries
/// raw samples the decision uses the empirical p-value; otherwise it
/// falls back to a one-sided z-test, flagged approximate (the shape of
/// the lambda distribution is not known).
pub fn verdict(
    observed: f64,
    row: &CalibrationRow,
    alpha_fail: f64,
    alpha_suspicious: f64,
) -> Result<TestReport, CalibrationError> {
    if !(0.0 < alpha_fail && alpha_fail < alpha_suspicious && alpha_suspicious < 1.0) {
        return Err(CalibrationError::InvalidParameter(format!(
            "need 0 < alpha_fail < alpha_suspicious < 1, got {alpha_fail} and {alpha_suspicious}"
        )));
    }
    let z_score = if row.std_lambda > 0.0 {
        (observed - row.mean_lambda) / row.std_lambda
    } else if observed > row.mean_lambda {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let (empirical, approximate, verdict) = match row.raw_samples {
        Some(_) => {
            let p = empirical_p(observed, row)?;
            let v = if p < alpha_fail {
                Verdict::Fail
            } else if p < alpha_suspicious {
                Verdict::Suspicious
            } else {
                Verdict::Pass
            };
            (Some(p), false, v)
        }
        None => {
            let v = if z_score > normal_quantile(1.0 - alpha_fail) {
                Verdict::Fail
            } else if z_score > normal_quantile(1.0 - alpha_suspicious) {
                Verdict::Suspicious
            } else {
                Verdict::Pass
            };
            (None, true, v)
        }
    };
    Ok(TestReport {
        n: row.n,
        observed_lambda: observed,
        excess: observed - ramanujan_threshold(),
        z_score,
        empirical_p: empirical,
        verdict,
        approximate,
        calibration_provenance: format!(
            "n={} trials={} policy={} seed={}",
            row.n, row.trials, row.tie_policy, row.seed
        ),
    })
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// relative error below 1.2e-9 — far tighter than any alpha used here).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must be in (0,1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// A set of calibration rows, ordered as inserted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalibrationTable {
    rows: Vec<CalibrationRow>,
}

impl CalibrationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a row, replacing any existing row for the same n.
    pub fn insert(&mut self, row: CalibrationRow) {
        match self.rows.iter_mut().find(|r| r.n == row.n) {
            Some(slot) => *slot = row,
            None => self.rows.push(row),
        }
    }

    pub fn find(&self, n: usize) -> Option<&CalibrationRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn rows(&self) -> &[CalibrationRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

const FILE_HEADER: &str = "EXPCAL v1";

/// 17 significant digits: enough to reproduce any f64 exactly.
fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders the table in the versioned line format:
///
/// ```text
/// EXPCAL v1
/// <n> <trials> <mean> <std> <p_below> <q01> <q05> <q25> <q50> <q75> <q95> <q99> <policy> <seed>
/// SAMPLES <n> <count>
/// <lambda> ... (8 per line)
/// CHECKSUM <fnv1a-64 of everything above>
/// ```
pub fn render_calibration(table: &CalibrationTable) -> String {
    let mut out = String::new();
    out.push_str(FILE_HEADER);
    out.push('\n');
    for row in table.rows() {
        out.push_str(&format!(
            "{} {} {} {} {}",
            row.n,
            row.trials,
            fmt_g17(row.mean_lambda),
            fmt_g17(row.std_lambda),
            fmt_g17(row.p_below_threshold),
        ));
        for q in row.quantiles {
            out.push(' ');
            out.push_str(&fmt_g17(q));
        }
        out.push_str(&format!(" {} {}\n", row.tie_policy, row.seed));
        if let Some(samples) = &row.raw_samples {
            out.push_str(&format!("SAMPLES {} {}\n", row.n, samples.len()));
            for chunk in samples.chunks(8) {
                let line: Vec<String> = chunk.iter().map(|&s| fmt_g17(s)).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
    }
    let digest = fnv1a64(out.as_bytes());
    out.push_str(&format!("CHECKSUM {digest:016x}\n"));
    out
}

/// Parses the line format produced by [`render_calibration`]. A trailing
/// CHECKSUM line is verified when present.
pub fn parse_calibration(text: &str) -> Result<CalibrationTable, CalibrationError> {
    let body = match text.rfind("CHECKSUM ") {
        Some(pos) if text[..pos].ends_with('\n') || pos == 0 => {
            let stated = text[pos + "CHECKSUM ".len()..].trim();
            let actual = fnv1a64(&text.as_bytes()[..pos]);
            let stated = u64::from_str_radix(stated, 16)
                .map_err(|_| CalibrationError::Checksum { line: 0 })?;
            if stated != actual {
                return Err(CalibrationError::Checksum { line: 0 });
            }
            &text[..pos]
        }
        _ => text,
    };

    let mut lines = body.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == FILE_HEADER => {}
        Some((_, first)) => return Err(CalibrationError::VersionMismatch(first.to_string())),
        None => return Err(CalibrationError::VersionMismatch(String::new())),
    }

    let mut table = CalibrationTable::new();
    let mut rows: Vec<CalibrationRow> = Vec::new();
    let mut pending_samples: Option<(usize, usize, Vec<f64>)> = None;

    let attach = |rows: &mut Vec<CalibrationRow>,
                  pending: &mut Option<(usize, usize, Vec<f64>)>|
     -> Result<(), CalibrationError> {
        if let Some((n, count, samples)) = pending.take() {
            if samples.len() != count {
                return Err(CalibrationError::Format {
                    line: 0,
                    message: format!(
                        "SAMPLES block for n={n} declared {count} values, found {}",
                        samples.len()
                    ),
                });
            }
            let row = rows
                .iter_mut()
                .rev()
                .find(|r| r.n == n)
                .ok_or(CalibrationError::Format {
                    line: 0,
                    message: format!("SAMPLES block for unknown row n={n}"),
                })?;
            row.raw_samples = Some(samples);
        }
        Ok(())
    };

    for (idx, raw_line) in lines {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("SAMPLES ") {
            attach(&mut rows, &mut pending_samples)?;
            let mut parts = rest.split_whitespace();
            let n = parse_field::<usize>(parts.next(), lineno, "SAMPLES n")?;
            let count = parse_field::<usize>(parts.next(), lineno, "SAMPLES count")?;
            pending_samples = Some((n, count, Vec::with_capacity(count)));
            continue;
        }
        if let Some((_, count, samples)) = pending_samples.as_mut() {
            if samples.len() < *count {
                for tok in line.split_whitespace() {
                    let v: f64 = tok.parse().map_err(|_| CalibrationError::Format {
                        line: lineno,
                        message: format!("bad sample value '{tok}'"),
                    })?;
                    samples.push(v);
                }
                continue;
            }
            attach(&mut rows, &mut pending_samples)?;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 14 {
            return Err(CalibrationError::Format {
                line: lineno,
                message: format!("expected 14 fields in a row record, found {}", fields.len()),
            });
        }
        let mut quantiles = [0.0f64; 7];
        for (slot, tok) in quantiles.iter_mut().zip(&fields[5..12]) {
            *slot = parse_field::<f64>(Some(tok), lineno, "quantile")?;
        }
        rows.push(CalibrationRow {
            n: parse_field(Some(fields[0]), lineno, "n")?,
            trials: parse_field(Some(fields[1]), lineno, "trials")?,
            mean_lambda: parse_field(Some(fields[2]), lineno, "mean")?,
            std_lambda: parse_field(Some(fields[3]), lineno, "std")?,
            p_below_threshold: parse_field(Some(fields[4]), lineno, "p_below")?,
            quantiles,
            raw_samples: None,
            tie_policy: fields[12].to_string(),
            seed: parse_field(Some(fields[13]), lineno, "seed")?,
        });
    }
    attach(&mut rows, &mut pending_samples)?;
    for row in rows {
        table.insert(row);
    }
    Ok(table)
}

fn parse_field<T: std::str::FromStr>(
    token: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, CalibrationError> {
    token
        .ok_or_else(|| CalibrationError::Format { line, message: format!("missing {what}") })?
        .parse()
        .map_err(|_| CalibrationError::Format { line, message: format!("bad {what}") })
}

/// Writes the table atomically (temp file in the same directory, then
/// rename) so an interrupted run never leaves a torn file behind.
pub fn save_calibration(table: &CalibrationTable, path: &Path) -> Result<(), CalibrationError> {
    let rendered = render_calibration(table);
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp_name = format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("calibration"),
        std::process::id()
    );
    let tmp_path = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    {
        let mut file = std::fs::File::create(&tmp_path).map_err(CalibrationError::Io)?;
        file.write_all(rendered.as_bytes()).map_err(CalibrationError::Io)?;
        file.sync_all().map_err(CalibrationError::Io)?;
    }
    std::fs::rename(&tmp_path, path).map_err(CalibrationError::Io)
}

pub fn load_calibration(path: &Path) -> Result<CalibrationTable, CalibrationError> {
    let text = std::fs::read_to_string(path).map_err(CalibrationError::Io)?;
    parse_calibration(&text)
}

/// FNV-1a, 64-bit.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Per-trial samples as CSV (`n,trial,lambda`), plot-ready.
pub fn samples_csv(rows: &[&CalibrationRow]) -> Result<String, CalibrationError> {
    let mut out = String::from("n,trial,lambda\n");
    for row in rows {
        let samples = row.raw_samples.as_ref().ok_or(CalibrationError::MissingSamples)?;
        for (i, s) in samples.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", row.n, i, fmt_g17(*s)));
        }
    }
    Ok(out)
}

/// Summary of several rows keyed by n, handy for reporting.
pub fn table_by_n(table: &CalibrationTable) -> BTreeMap<usize, &CalibrationRow> {
    table.rows().iter().map(|r| (r.n, r)).collect()
}

#[derive(Debug)]
pub enum CalibrationError {
    InvalidParameter(String),
    MissingSamples,
    VersionMismatch(String),
    Checksum { line: usize },
    Format { line: usize, message: String },
    Io(std::io::Error),
}

impl fmt::Display for CalibrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            CalibrationError::MissingSamples => {
                write!(f, "calibration row has no raw samples (p-value mode needs them)")
            }
            CalibrationError::VersionMismatch(found) => {
                write!(f, "not a calibration file (expected header '{FILE_HEADER}', found '{found}')")
            }
            CalibrationError::Checksum { .. } => write!(f, "calibration file checksum mismatch"),
            CalibrationError::Format { line, message } => {
                write!(f, "calibration file line {line}: {message}")
            }
            CalibrationError::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for CalibrationError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_row() -> CalibrationRow {
        let samples: Vec<f64> = (0..1999).map(|i| 3.0 + i as f64 / 10000.0).collect();
        summarize(64, 9, "jitter", samples)
    }

    #[test]
    fn quantiles_are_monotone() {
        let row = small_row();
        for w in row.quantiles.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert_eq!(row.quantile(0.5), Some(row.quantiles[3]));
        assert_eq!(row.quantile(0.123), None);
    }

    #[test]
    fn empirical_p_extremes() {
        let row = small_row();
        // below every sample: all trials count, p = 1
        assert_eq!(empirical_p(0.0, &row).unwrap(), 1.0);
        // above every sample: p = 1 / (trials + 1)
        assert_eq!(empirical_p(10.0, &row).unwrap(), 1.0 / 2000.0);
    }

    #[test]
    fn empirical_p_at_median() {
        let samples: Vec<f64> = (0..999).map(|i| i as f64).collect();
        let row = summarize(100, 0, "jitter", samples);
        let p = empirical_p(499.0, &row).unwrap();
        assert!((p - 0.5).abs() <= 1.0 / 1000.0 + 1e-12, "p at the median = {p}");
    }

    #[test]
    fn empirical_p_monotone_in_observed() {
        let row = small_row();
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let obs = 2.9 + k as f64 * 0.01;
            let p = empirical_p(obs, &row).unwrap();
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn empirical_p_requires_samples() {
        let mut row = small_row();
        row.raw_samples = None;
        assert!(matches!(empirical_p(3.0, &row), Err(CalibrationError::MissingSamples)));
    }

    #[test]
    fn verdict_at_median_passes() {
        let row = small_row();
        let report = verdict(row.quantiles[3], &row, 0.001, 0.01).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(!report.approximate);
        let p = report.empirical_p.unwrap();
        assert!(p > 0.4 && p < 0.6);
    }

    #[test]
    fn verdict_extreme_observation_fails() {
        let row = small_row();
        let report = verdict(3.9, &row, 0.001, 0.01).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert!((report.excess - (3.9 - ramanujan_threshold())).abs() < 1e-15);
    }

    #[test]
    fn verdict_fail_implies_suspicious_threshold() {
        let row = small_row();
        for obs in [2.9, 3.05, 3.1, 3.15, 3.19, 3.1995, 3.2, 3.3] {
            let fail = verdict(obs, &row, 0.001, 0.01).unwrap().verdict;
            if fail == Verdict::Fail {
                let sus = verdict(obs, &row, 0.009, 0.01).unwrap().verdict;
                assert_ne!(sus, Verdict::Pass);
            }
        }
    }

    #[test]
    fn verdict_rejects_bad_alphas() {
        let row = small_row();
        assert!(verdict(3.0, &row, 0.01, 0.001).is_err());
        assert!(verdict(3.0, &row, 0.0, 0.01).is_err());
        assert!(verdict(3.0, &row, 0.001, 1.0).is_err());
    }

    #[test]
    fn zscore_fallback_is_flagged() {
        let mut row = small_row();
        row.raw_samples = None;
        let hot = row.mean_lambda + 10.0 * row.std_lambda;
        let report = verdict(hot, &row, 0.001, 0.01).unwrap();
        assert!(report.approximate);
        assert!(report.empirical_p.is_none());
        assert_eq!(report.verdict, Verdict::Fail);
        let cold = row.mean_lambda;
        let report = verdict(cold, &row, 0.001, 0.01).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
    }

    #[test]
    fn normal_quantile_reference_values() {
        assert!((normal_quantile(1.0 - 0.001) - 3.090232306167813).abs() < 1e-7);
        assert!((normal_quantile(1.0 - 0.01) - 2.3263478740408408).abs() < 1e-7);
        assert!((normal_quantile(0.5)).abs() < 1e-9);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-7);
        assert!((normal_quantile(0.025) + 1.959963984540054).abs() < 1e-7);
    }

    #[test]
    fn calibrate_rejects_bad_sizes() {
        assert!(calibrate_null(9, 200, 0, 1).is_err());
        assert!(calibrate_null(10, 99, 0, 1).is_err());
    }

    #[test]
    fn calibration_is_deterministic_across_worker_counts() {
        let a = calibrate_null(12, 120, 7, 1).unwrap();
        let b = calibrate_null(12, 120, 7, 4).unwrap();
        assert_eq!(a, b);
        let c = calibrate_null(12, 120, 8, 2).unwrap();
        assert_ne!(a.raw_samples, c.raw_samples, "different seeds, different draws");
    }

    #[test]
    fn calibration_sanity_band() {
        let row = calibrate_null(16, 150, 3, 0).unwrap();
        assert!(row.mean_lambda > 2.0 && row.mean_lambda < 4.0);
        assert!(row.std_lambda >= 0.0);
        assert!((0.0..=1.0).contains(&row.p_below_threshold));
        for w in row.quantiles.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn file_roundtrip_empty_table() {
        let table = CalibrationTable::new();
        let text = render_calibration(&table);
        assert!(text.starts_with(FILE_HEADER));
        let loaded = parse_calibration(&text).unwrap();
        assert!(loaded.is_empty());
    }

    #[test]
    fn file_roundtrip_summary_only() {
        let mut row = small_row();
        row.raw_samples = None;
        let mut table = CalibrationTable::new();
        table.insert(row.clone());
        let text = render_calibration(&table);
        let loaded = parse_calibration(&text).unwrap();
        assert_eq!(loaded.rows(), std::slice::from_ref(&row));
    }

    #[test]
    fn file_roundtrip_with_samples_is_byte_identical() {
        let samples: Vec<f64> = {
            let mut rng = crate::rng::SplitMix64::new(17);
            (0..1000).map(|_| 3.3 + 0.3 * rng.next_f64()).collect()
        };
        let row = summarize(500, 21, "jitter", samples);
        let mut table = CalibrationTable::new();
        table.insert(row);
        let text = render_calibration(&table);
        let loaded = parse_calibration(&text).unwrap();
        assert_eq!(loaded, table);
        assert_eq!(render_calibration(&loaded), text, "re-save must be byte-identical");
    }

    #[test]
    fn file_rejects_wrong_header() {
        assert!(matches!(
            parse_calibration("EXPCAL v2\n"),
            Err(CalibrationError::VersionMismatch(_))
        ));
        assert!(parse_calibration("").is_err());
    }

    #[test]
    fn file_rejects_corrupted_checksum() {
        let mut table = CalibrationTable::new();
        table.insert(small_row());
        let text = render_calibration(&table);
        let tampered = text.replace("3.0", "3.1");
        assert!(matches!(
            parse_calibration(&tampered),
            Err(CalibrationError::Checksum { .. })
        ));
    }

    #[test]
    fn file_without_checksum_is_accepted() {
        let mut table = CalibrationTable::new();
        let mut row = small_row();
        row.raw_samples = None;
        table.insert(row);
        let text = render_calibration(&table);
        let body: String = text.lines().filter(|l| !l.starts_with("CHECKSUM")).fold(
            String::new(),
            |mut acc, l| {
                acc.push_str(l);
                acc.push('\n');
                acc
            },
        );
        assert!(parse_calibration(&body).is_ok());
    }

    #[test]
    fn save_and_load_through_disk() {
        let dir = std::env::temp_dir().join(format!("expcal-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("table.expcal");
        let mut table = CalibrationTable::new();
        table.insert(small_row());
        save_calibration(&table, &path).unwrap();
        let loaded = load_calibration(&path).unwrap();
        assert_eq!(loaded, table);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn insert_replaces_same_n() {
        let mut table = CalibrationTable::new();
        table.insert(small_row());
        let mut other = small_row();
        other.seed = 1000;
        table.insert(other.clone());
        assert_eq!(table.rows().len(), 1);
        assert_eq!(table.find(64).unwrap().seed, 1000);
    }

    #[test]
    fn samples_csv_shape() {
        let row = small_row();
        let csv = samples_csv(&[&row]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,trial,lambda"));
        assert_eq!(csv.lines().count(), row.trials + 1);
    }
}
