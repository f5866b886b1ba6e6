//! Randomness testing through spectral expansion.
//!
//! Given n real numbers, build a 4-regular multigraph by joining the cycle
//! on positions 1..n with the cycle on the rank order of the values, then
//! compute lambda, the largest nontrivial adjacency eigenvalue in
//! magnitude. For i.i.d. samples the graph is almost Ramanujan, so lambda
//! concentrates just below 2*sqrt(3); sequences whose lambda sits far
//! above that threshold are not plausibly i.i.d.
//!
//! The pipeline:
//!
//! 1. [`sequence`] — built-in generators (classic congruential recurrences,
//!    logistic map, van der Corput, Fibonacci residues, Kronecker, the OS
//!    RNG) and parsing of user-supplied numbers.
//! 2. [`graph`] — rank permutation and the order/index multigraph in CSR
//!    form.
//! 3. [`spectral`] — power iteration on PSD shifts of the adjacency
//!    matrix, with a dense Jacobi eigensolver and combinatorial
//!    cross-checks for verification.
//! 4. [`calibration`] — Monte Carlo null distribution of lambda, empirical
//!    p-values on the upper tail, verdicts, and the on-disk table format.

pub mod calibration;
pub mod graph;
pub mod rng;
pub mod sequence;
pub mod spectral;

pub use calibration::{
    calibrate_null, empirical_p, load_calibration, save_calibration, verdict, CalibrationError,
    CalibrationRow, CalibrationTable, TestReport, Verdict,
};
pub use graph::{
    build_graph, export_graph, rank_permutation, ExportFormat, GraphError, RankPermutation,
    RegularMultigraph, TiePolicy,
};
pub use sequence::{
    lcg_stream, named_source, parse_sequence, GeneratorSpec, InputFormat, Sequence, SequenceError,
};
pub use spectral::{
    cheeger_bruteforce, compute_lambda, dense_spectrum_oracle, extreme_eigenvalue,
    mixing_discrepancy, ramanujan_threshold, spmv, SpectralError, SpectralOptions, SpectralResult,
    SpectrumEnd,
};
