//! Sequence sources: the classic congruential generators, a handful of
//! deterministic low-discrepancy and chaotic sequences, the platform RNG,
//! and ingestion of user-supplied numbers.
//!
//! All modular recurrences are stepped with 128-bit intermediates, so
//! multipliers near 2^32 against moduli up to 2^35 (and far beyond) are
//! exact. Congruential generators emit starting at the first iterate
//! x2 = (a*x1 + c) mod m; the seed itself is state, not output. The
//! logistic map emits its start value first, matching how the sequence is
//! usually written out.

use std::fmt;
use std::io::BufRead;

use crate::rng::system_f64s;

/// An ordered list of finite sample values with a provenance label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    values: Vec<f64>,
    label: String,
}

impl Sequence {
    /// Wraps raw values. Rejects empty input and non-finite entries;
    /// the `n >= 3` requirement is enforced where a graph is built.
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self, SequenceError> {
        if values.is_empty() {
            return Err(SequenceError::TooFewValues { found: 0, need: 1 });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(SequenceError::NonFinite { index: idx });
        }
        Ok(Self { values, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Number of state integers a lagged Fibonacci generator keeps.
pub const LAGGED_FIB_STATE: usize = 56;
/// Lag pair of the lagged Fibonacci recurrence x_n = x_{n-24} + x_{n-55}.
pub const LAGGED_FIB_LAGS: (usize, usize) = (24, 55);

/// A fully parameterized source of test sequences.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// x_{n+1} = (mult * x_n + inc) mod modulus, emitted from the first iterate.
    Lcg { mult: u64, inc: u64, modulus: u64, seed: u64 },
    /// x_{n+1} = x_n (x_n + 1) mod 2^exponent, seed must be 2 mod 4.
    Coveyou { exponent: u32, seed: u64 },
    /// x_n = x_{n-24} + x_{n-55} mod 2^exponent, 56 state integers.
    LaggedFibonacci { exponent: u32, seed: u64 },
    /// x_{n+1} = 3.98 x_n (1 - x_n), emitted from x_1.
    Logistic { x0: f64 },
    /// Radical-inverse (van der Corput) sequence in the given base.
    VanDerCorput { base: u32 },
    /// Fibonacci numbers reduced mod `modulus`, from F_2 = 1.
    FibonacciMod { modulus: u64 },
    /// x_n = frac(n * alpha).
    Kronecker { alpha: f64 },
    /// Doubles in [0,1) from the operating system CSPRNG.
    SystemRandom,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), SequenceError> {
        match *self {
            GeneratorSpec::Lcg { modulus, seed, .. } => {
                if modulus < 2 {
                    return Err(SequenceError::InvalidParameter(format!(
                        "modulus must be at least 2, got {modulus}"
                    )));
                }
                if seed >= modulus {
                    return Err(SequenceError::InvalidParameter(format!(
                        "seed {seed} out of range for modulus {modulus}"
                    )));
                }
                Ok(())
            }
            GeneratorSpec::Coveyou { exponent, seed } => {
                check_exponent(exponent)?;
                if seed % 4 != 2 {
                    return Err(SequenceError::InvalidParameter(format!(
                        "coveyou seed must be 2 mod 4, got {seed}"
                    )));
                }
                if seed >> exponent != 0 {
                    return Err(SequenceError::InvalidParameter(format!(
                        "seed {seed} out of range for modulus 2^{exponent}"
                    )));
                }
                Ok(())
            }
            GeneratorSpec::LaggedFibonacci { exponent, .. } => check_exponent(exponent),
            GeneratorSpec::Logistic { x0 } => {
                if !(x0.is_finite() && 0.0 < x0 && x0 < 1.0) {
                    return Err(SequenceError::InvalidParameter(format!(
                        "logistic start must lie in (0,1), got {x0}"
                    )));
                }
                Ok(())
            }
            GeneratorSpec::VanDerCorput { base } => {
                if base < 2 {
                    return Err(SequenceError::InvalidParameter(format!(
                        "van der Corput base must be at least 2, got {base}"
                    )));
                }
                Ok(())
            }
            GeneratorSpec::FibonacciMod { modulus } => {
                if modulus < 2 {
                    return Err(SequenceError::InvalidParameter(format!(
                        "modulus must be at least 2, got {modulus}"
                    )));
                }
                Ok(())
            }
            GeneratorSpec::Kronecker { alpha } => {
                if !alpha.is_finite() {
                    return Err(SequenceError::InvalidParameter(
                        "kronecker multiplier must be finite".into(),
                    ));
                }
                Ok(())
            }
            GeneratorSpec::SystemRandom => Ok(()),
        }
    }

    /// Produces `count` values. Deterministic for every kind but `SystemRandom`.
    pub fn stream(&self, count: usize, label: impl Into<String>) -> Result<Sequence, SequenceError> {
        self.validate()?;
        if count == 0 {
            return Err(SequenceError::InvalidParameter("count must be at least 1".into()));
        }
        let values = match *self {
            GeneratorSpec::Lcg { mult, inc, modulus, seed } => {
                let mut x = seed;
                (0..count)
                    .map(|_| {
                        x = lcg_step(mult, inc, modulus, x);
                        x as f64
                    })
                    .collect()
            }
            GeneratorSpec::Coveyou { exponent, seed } => {
                let mask = pow2_mask(exponent);
                let mut x = seed as u128;
                (0..count)
                    .map(|_| {
                        x = (x * (x + 1)) & mask;
                        x as f64
                    })
                    .collect()
            }
            GeneratorSpec::LaggedFibonacci { exponent, seed } => {
                lagged_fibonacci_values(exponent, seed, count)
            }
            GeneratorSpec::Logistic { x0 } => {
                let mut x = x0;
                (0..count)
                    .map(|i| {
                        if i > 0 {
                            x = 3.98 * x * (1.0 - x);
                        }
                        x
                    })
                    .collect()
            }
            GeneratorSpec::VanDerCorput { base } => {
                (1..=count as u64).map(|i| radical_inverse(i, base as u64)).collect()
            }
            GeneratorSpec::FibonacciMod { modulus } => {
                // F_1 = F_2 = 1 mod m; emit from F_2 so the run starts 1, 2, 3, 5, ...
                let mut prev = 1 % modulus;
                let mut cur = 1 % modulus;
                (0..count)
                    .map(|_| {
                        let out = cur;
                        let next = (prev + cur) % modulus;
                        prev = cur;
                        cur = next;
                        out as f64
                    })
                    .collect()
            }
            GeneratorSpec::Kronecker { alpha } => {
                (1..=count as u64).map(|i| (i as f64 * alpha).fract()).collect()
            }
            GeneratorSpec::SystemRandom => {
                system_f64s(count).map_err(|e| SequenceError::Entropy(e.to_string()))?
            }
        };
        Sequence::new(values, label)
    }
}

fn check_exponent(exponent: u32) -> Result<(), SequenceError> {
    if !(1..=63).contains(&exponent) {
        return Err(SequenceError::InvalidParameter(format!(
            "modulus exponent must be in 1..=63, got {exponent}"
        )));
    }
    Ok(())
}

fn pow2_mask(exponent: u32) -> u128 {
    (1u128 << exponent) - 1
}

/// One exact congruential step. The widest product seen here is
/// (2^64-1)^2 + (2^64-1) which still fits u128, so nothing ever wraps.
fn lcg_step(mult: u64, inc: u64, modulus: u64, x: u64) -> u64 {
    ((mult as u128 * x as u128 + inc as u128) % modulus as u128) as u64
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut digit_weight = 1.0 / base as f64;
    while index > 0 {
        inv += (index % base) as f64 * digit_weight;
        index /= base;
        digit_weight /= base as f64;
    }
    inv
}

fn lagged_fibonacci_values(exponent: u32, seed: u64, count: usize) -> Vec<f64> {
    let modulus = 1u64 << exponent;
    // State filled from the minimal-standard generator so any u64 seed is
    // usable; at least one odd entry is required for the maximal period.
    let lgm_modulus = 2_147_483_647u64;
    let mut fill = seed % lgm_modulus;
    if fill == 0 {
        fill = 1;
    }
    let mut state = [0u64; LAGGED_FIB_STATE];
    for slot in state.iter_mut() {
        fill = lcg_step(16807, 0, lgm_modulus, fill);
        *slot = fill % modulus;
    }
    if state.iter().all(|v| v % 2 == 0) {
        state[0] |= 1;
    }
    let (short_lag, long_lag) = LAGGED_FIB_LAGS;
    let mut pos = 0usize; // points at the oldest retained value
    (0..count)
        .map(|_| {
            let a = state[(pos + LAGGED_FIB_STATE - short_lag) % LAGGED_FIB_STATE];
            let b = state[(pos + LAGGED_FIB_STATE - long_lag) % LAGGED_FIB_STATE];
            let next = (a + b) % modulus;
            state[pos] = next;
            pos = (pos + 1) % LAGGED_FIB_STATE;
            next as f64
        })
        .collect()
}

/// x_{n+1} = (a x_n + c) mod m from x_1 = seed, emitting `count` iterates.
pub fn lcg_stream(
    mult: u64,
    inc: u64,
    modulus: u64,
    seed: u64,
    count: usize,
) -> Result<Sequence, SequenceError> {
    let spec = GeneratorSpec::Lcg { mult, inc, modulus, seed };
    spec.stream(count, format!("lcg(a={mult},c={inc},m={modulus},seed={seed})"))
}

/// All built-in source names accepted by [`named_source`].
pub const SOURCE_NAMES: [&str; 15] = [
    "lehmer",
    "pm-20403",
    "textbook-25173",
    "turbo-pascal",
    "rotenberg",
    "knuth-good",
    "lgm-16807",
    "lecuyer-40692",
    "coveyou",
    "lagged-fib",
    "logistic",
    "vdc",
    "fib-mod",
    "kronecker",
    "system",
];

/// Resolves a named source with its published parameters baked in.
///
/// `seed` overrides the start state where the recurrence has a free seed;
/// it is ignored for sources whose start value is part of the definition
/// (lehmer, knuth-good, logistic) and for the seedless sequences.
pub fn named_source(name: &str, seed: Option<u64>, count: usize) -> Result<Sequence, SequenceError> {
    let spec = named_generator(name, seed)?;
    spec.stream(count, name)
}

/// The [`GeneratorSpec`] behind a source name, without running it.
pub fn named_generator(name: &str, seed: Option<u64>) -> Result<GeneratorSpec, SequenceError> {
    let seed_or = |default: u64| seed.unwrap_or(default);
    let spec = match name {
        "lehmer" => GeneratorSpec::Lcg { mult: 23, inc: 0, modulus: 100_000_001, seed: 47_594_118 },
        "pm-20403" => GeneratorSpec::Lcg { mult: 20403, inc: 0, modulus: 1 << 15, seed: seed_or(1) },
        "textbook-25173" => {
            GeneratorSpec::Lcg { mult: 25173, inc: 13840, modulus: 1 << 16, seed: seed_or(1) }
        }
        "turbo-pascal" => {
            GeneratorSpec::Lcg { mult: 129, inc: 907_633_385, modulus: 1 << 32, seed: seed_or(1) }
        }
        "rotenberg" => GeneratorSpec::Lcg { mult: 129, inc: 1, modulus: 1 << 35, seed: seed_or(1) },
        "knuth-good" => GeneratorSpec::Lcg {
            mult: 3_141_592_653,
            inc: 2_718_281_829,
            modulus: 1 << 35,
            seed: 0,
        },
        "lgm-16807" => {
            GeneratorSpec::Lcg { mult: 16807, inc: 0, modulus: 2_147_483_647, seed: seed_or(1) }
        }
        "lecuyer-40692" => {
            GeneratorSpec::Lcg { mult: 40692, inc: 0, modulus: (1 << 31) - 249, seed: seed_or(1) }
        }
        "coveyou" => GeneratorSpec::Coveyou { exponent: 32, seed: seed_or(1234) },
        "lagged-fib" => GeneratorSpec::LaggedFibonacci { exponent: 32, seed: seed_or(1) },
        "logistic" => GeneratorSpec::Logistic { x0: 0.3 },
        "vdc" => GeneratorSpec::VanDerCorput { base: 2 },
        "fib-mod" => GeneratorSpec::FibonacciMod { modulus: 10001 },
        "kronecker" => GeneratorSpec::Kronecker { alpha: std::f64::consts::SQRT_2 },
        "system" => GeneratorSpec::SystemRandom,
        other => return Err(SequenceError::UnknownSource(other.to_string())),
    };
    Ok(spec)
}

/// Accepted input layouts for [`parse_sequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// One decimal number per line.
    OnePerLine,
    /// Single-column CSV; a trailing comma per record is tolerated.
    CsvSingleColumn,
}

/// Reads a sequence from text. Blank lines and `#` comments are skipped;
/// input order is preserved exactly. Fewer than 3 usable values is an
/// error because no graph can be built from them.
pub fn parse_sequence<R: BufRead>(reader: R, format: InputFormat) -> Result<Sequence, SequenceError> {
    let mut values = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(SequenceError::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let token = match format {
            InputFormat::OnePerLine => trimmed,
            InputFormat::CsvSingleColumn => {
                let stripped = trimmed.strip_suffix(',').unwrap_or(trimmed);
                if stripped.contains(',') {
                    return Err(SequenceError::Parse {
                        line: lineno + 1,
                        token: trimmed.to_string(),
                    });
                }
                stripped.trim()
            }
        };
        let value: f64 = token.parse().map_err(|_| SequenceError::Parse {
            line: lineno + 1,
            token: token.to_string(),
        })?;
        if !value.is_finite() {
            return Err(SequenceError::NonFinite { index: values.len() });
        }
        values.push(value);
    }
    if values.len() < 3 {
        return Err(SequenceError::TooFewValues { found: values.len(), need: 3 });
    }
    Sequence::new(values, "parsed")
}

#[derive(Debug)]
pub enum SequenceError {
    InvalidParameter(String),
    UnknownSource(String),
    Parse { line: usize, token: String },
    TooFewValues { found: usize, need: usize },
    NonFinite { index: usize },
    Entropy(String),
    Io(std::io::Error),
}

impl fmt::Display for SequenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            SequenceError::UnknownSource(name) => {
                write!(f, "unknown source '{name}' (expected one of {})", SOURCE_NAMES.join(", "))
            }
            SequenceError::Parse { line, token } => {
                write!(f, "line {line}: cannot parse '{token}' as a number")
            }
            SequenceError::TooFewValues { found, need } => {
                write!(f, "fewer than {need} values (got {found})")
            }
            SequenceError::NonFinite { index } => {
                write!(f, "value at position {index} is not finite")
            }
            SequenceError::Entropy(msg) => write!(f, "system entropy source failed: {msg}"),
            SequenceError::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for SequenceError {}
