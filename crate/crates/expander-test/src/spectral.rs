//! Extreme eigenvalues of the 4-regular adjacency matrix.
//!
//! The quantity of interest is lambda = max(|lambda_2|, |lambda_n|), the
//! largest nontrivial eigenvalue in magnitude. The trivial eigenpair is
//! known (4, constant vector), so both ends are found by power iteration
//! restricted to the mean-zero subspace, each on a positive semidefinite
//! shift of the adjacency matrix:
//!
//! ```text
//! top:     A + 4I   largest eigenvalue 4 + lambda_2
//! bottom:  4I - A   largest eigenvalue 4 - lambda_n
//! ```
//!
//! Shifting keeps the iteration from oscillating when lambda_2 is close to
//! -lambda_n, which is the common situation for these graphs. The iterate
//! has its mean removed periodically to compensate for numerical drift.
//! Convergence is declared on the absolute change of the Rayleigh quotient
//! between iterations; if the iteration cap is reached instead, the
//! quotient is still returned, flagged, and is then a conservative
//! (inward) bound on the true eigenvalue — still usable to reject
//! randomness.
//!
//! A dense cyclic-Jacobi eigensolver, an exhaustive Cheeger-constant
//! search, and an expander-mixing check are included as independent
//! verification routes for moderate sizes.

use std::fmt;

use crate::graph::RegularMultigraph;
use crate::rng::SplitMix64;

/// Degree of every vertex; also the trivial top eigenvalue.
pub const DEGREE: f64 = 4.0;

/// max(|lambda_2|, |lambda_n|) of an optimal 4-regular expander: 2*sqrt(3).
pub fn ramanujan_threshold() -> f64 {
    2.0 * 3f64.sqrt()
}

/// Knobs for the power iteration.
#[derive(Debug, Clone)]
pub struct SpectralOptions {
    /// Stop when the Rayleigh quotient changes less than this between steps.
    pub tolerance: f64,
    /// Iteration cap per shift; `None` picks 100 * ceil(log2 n).
    pub max_iterations: Option<usize>,
    /// Remove the iterate's mean every this many steps.
    pub reproject_every: usize,
    /// Seed for the random start vectors.
    pub rng_seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: None, reproject_every: 50, rng_seed: 0 }
    }
}

impl SpectralOptions {
    pub fn validate(&self) -> Result<(), SpectralError> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(SpectralError::InvalidOptions("tolerance must be positive".into()));
        }
        if self.max_iterations == Some(0) {
            return Err(SpectralError::InvalidOptions("max_iterations must be at least 1".into()));
        }
        if self.reproject_every == 0 {
            return Err(SpectralError::InvalidOptions("reproject_every must be at least 1".into()));
        }
        Ok(())
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or_else(|| {
            let bits = (n.max(2) as f64).log2().ceil() as usize;
            100 * bits.max(1)
        })
    }
}

/// Which end of the nontrivial spectrum to chase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumEnd {
    /// Most positive nontrivial eigenvalue (lambda_2).
    Top,
    /// Most negative eigenvalue (lambda_n).
    Bottom,
}

/// Outcome of a lambda computation.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// Most positive nontrivial eigenvalue estimate.
    pub lambda2: f64,
    /// Most negative eigenvalue estimate.
    pub lambda_n: f64,
    /// max(|lambda2|, |lambda_n|).
    pub lambda: f64,
    /// Total iterations spent across both shifts.
    pub iterations: usize,
    /// Largest final Rayleigh-quotient change of the two shifts.
    pub residual: f64,
    /// Largest final ||Ax - theta x|| of the two shifts (unit iterate).
    pub residual_norm: f64,
    /// Set when an iteration cap was hit; lambda is then an inward bound.
    pub lower_bound_only: bool,
}

/// One converged (or capped) end of the spectrum.
#[derive(Debug, Clone, Copy)]
pub struct EndEstimate {
    /// Eigenvalue of A after un-shifting.
    pub value: f64,
    pub iterations: usize,
    /// Final Rayleigh-quotient change.
    pub residual: f64,
    /// ||Bx - theta x|| at exit for the shifted operator, ||x|| = 1.
    pub residual_norm: f64,
    pub converged: bool,
}

/// y = A x using the CSR multiplicities. O(nnz), no allocation.
pub fn spmv(g: &RegularMultigraph, x: &[f64], y: &mut [f64]) -> Result<(), SpectralError> {
    let n = g.vertex_count();
    if x.len() != n || y.len() != n {
        return Err(SpectralError::DimensionMismatch { expected: n, got: x.len().min(y.len()) });
    }
    let (row_ptr, cols, mults) = g.csr();
    for v in 0..n {
        let lo = row_ptr[v];
        let hi = row_ptr[v + 1];
        let mut acc = 0.0;
        for (c, m) in cols[lo..hi].iter().zip(&mults[lo..hi]) {
            acc += *m as f64 * x[*c as usize];
        }
        y[v] = acc;
    }
    Ok(())
}

/// Convenience wrapper returning a fresh vector.
pub fn spmv_vec(g: &RegularMultigraph, x: &[f64]) -> Result<Vec<f64>, SpectralError> {
    let mut y = vec![0.0; g.vertex_count()];
    spmv(g, x, &mut y)?;
    Ok(y)
}

fn shifted_apply(g: &RegularMultigraph, end: SpectrumEnd, x: &[f64], y: &mut [f64]) {
    spmv(g, x, y).expect("length checked by caller");
    match end {
        SpectrumEnd::Top => {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += DEGREE * *xi;
            }
        }
        SpectrumEnd::Bottom => {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = DEGREE * *xi - *yi;
            }
        }
    }
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_mean_zero_unit(n: usize, rng: &mut SplitMix64) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        remove_mean(&mut x);
        let nrm = norm(&x);
        if nrm > 1e-12 {
            for v in x.iter_mut() {
                *v /= nrm;
            }
            return x;
        }
    }
}

/// Power iteration for one end of the nontrivial spectrum.
pub fn extreme_eigenvalue(
    g: &RegularMultigraph,
    end: SpectrumEnd,
    opts: &SpectralOptions,
) -> Result<EndEstimate, SpectralError> {
    opts.validate()?;
    let n = g.vertex_count();
    let cap = opts.iteration_cap(n);
    let stream_tag = match end {
        SpectrumEnd::Top => 0x746f70,
        SpectrumEnd::Bottom => 0x626f74,
    };
    let mut rng = SplitMix64::for_stream(opts.rng_seed, stream_tag, 0);
    let mut x = random_mean_zero_unit(n, &mut rng);
    let mut y = vec![0.0; n];

    let mut theta_prev = f64::NAN;
    let mut theta = 0.0;
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cap {
        iterations += 1;
        shifted_apply(g, end, &x, &mut y);
        theta = dot(&x, &y); // x is unit, so this is the Rayleigh quotient
        delta = (theta - theta_prev).abs();
        if delta < opts.tolerance {
            converged = true;
            break;
        }
        theta_prev = theta;
        if iterations % opts.reproject_every == 0 {
            remove_mean(&mut y);
            debug_assert!(
                y.iter().sum::<f64>().abs() <= 1e-12 * norm(&y).max(1.0),
                "mean-zero projection drifted"
            );
        }
        let nrm = norm(&y);
        if nrm <= f64::MIN_POSITIVE {
            // iterate landed in the kernel of the shift; restart
            x = random_mean_zero_unit(n, &mut rng);
            theta_prev = f64::NAN;
            continue;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = *yi / nrm;
        }
    }

    // residual ||Bx - theta x|| for the exit iterate
    shifted_apply(g, end, &x, &mut y);
    let residual_norm = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| {
            let r = yi - theta * xi;
            r * r
        })
        .sum::<f64>()
        .sqrt();

    let shifted = theta.clamp(0.0, 2.0 * DEGREE);
    let value = match end {
        SpectrumEnd::Top => shifted - DEGREE,
        SpectrumEnd::Bottom => DEGREE - shifted,
    };
    Ok(EndEstimate { value, iterations, residual: delta, residual_norm, converged })
}

/// Runs both shifted iterations and assembles lambda.
pub fn compute_lambda(
    g: &RegularMultigraph,
    opts: &SpectralOptions,
) -> Result<SpectralResult, SpectralError> {
    let top = extreme_eigenvalue(g, SpectrumEnd::Top, opts)?;
    let bottom = extreme_eigenvalue(g, SpectrumEnd::Bottom, opts)?;
    // the two estimates can cross by rounding when the spectrum is degenerate
    let lambda2 = top.value.max(bottom.value);
    let lambda_n = top.value.min(bottom.value);
    Ok(SpectralResult {
        lambda2,
        lambda_n,
        lambda: lambda2.abs().max(lambda_n.abs()),
        iterations: top.iterations + bottom.iterations,
        residual: top.residual.max(bottom.residual),
        residual_norm: top.residual_norm.max(bottom.residual_norm),
        lower_bound_only: !(top.converged && bottom.converged),
    })
}

/// Largest n accepted by the dense eigensolver.
pub const DENSE_ORACLE_MAX: usize = 1024;

/// Full spectrum of the dense adjacency matrix by cyclic Jacobi rotations,
/// ascending. Verification-scale only (n <= 1024).
pub fn dense_spectrum_oracle(g: &RegularMultigraph) -> Result<Vec<f64>, SpectralError> {
    let n = g.vertex_count();
    if n > DENSE_ORACLE_MAX {
        return Err(SpectralError::TooLarge { n, max: DENSE_ORACLE_MAX });
    }
    let mut a = vec![0.0f64; n * n];
    for u in 0..n {
        for (v, m) in g.neighbors(u) {
            a[u * n + v] = m as f64;
        }
    }
    let mut eigs = jacobi_eigenvalues(&mut a, n)?;
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eigs)
}

/// Classic cyclic Jacobi with the Numerical-Recipes thresholding schedule.
/// Destroys `a` (upper triangle used), returns unsorted eigenvalues.
fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Result<Vec<f64>, SpectralError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let idx = |p: usize, q: usize| p * n + q;
    let mut d: Vec<f64> = (0..n).map(|p| a[idx(p, p)]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0f64; n];

    for sweep in 0..64 {
        let mut off_sum = 0.0;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                off_sum += a[idx(p, q)].abs();
            }
        }
        if off_sum < 1e-13 * (n as f64) {
            return Ok(d);
        }
        let tresh = if sweep < 3 { 0.2 * off_sum / (n * n) as f64 } else { 0.0 };
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let g_small = 100.0 * a[idx(p, q)].abs();
                if sweep > 3
                    && d[p].abs() + g_small == d[p].abs()
                    && d[q].abs() + g_small == d[q].abs()
                {
                    a[idx(p, q)] = 0.0;
                } else if a[idx(p, q)].abs() > tresh {
                    let mut h = d[q] - d[p];
                    let t = if h.abs() + g_small == h.abs() {
                        a[idx(p, q)] / h
                    } else {
                        let theta = 0.5 * h / a[idx(p, q)];
                        let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            t = -t;
                        }
                        t
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    h = t * a[idx(p, q)];
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[idx(p, q)] = 0.0;
                    for j in 0..p {
                        let g = a[idx(j, p)];
                        let h = a[idx(j, q)];
                        a[idx(j, p)] = g - s * (h + g * tau);
                        a[idx(j, q)] = h + s * (g - h * tau);
                    }
                    for j in (p + 1)..q {
                        let g = a[idx(p, j)];
                        let h = a[idx(j, q)];
                        a[idx(p, j)] = g - s * (h + g * tau);
                        a[idx(j, q)] = h + s * (g - h * tau);
                    }
                    for j in (q + 1)..n {
                        let g = a[idx(p, j)];
                        let h = a[idx(q, j)];
                        a[idx(p, j)] = g - s * (h + g * tau);
                        a[idx(q, j)] = h + s * (g - h * tau);
                    }
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }
    Err(SpectralError::NoConvergence)
}

/// Largest n accepted by the exhaustive Cheeger search.
pub const CHEEGER_MAX: usize = 16;

/// Exact expansion ratio h(G) = min |boundary(S)| / |S| over nonempty
/// S with |S| <= n/2, boundary edges counted with multiplicity.
pub fn cheeger_bruteforce(g: &RegularMultigraph) -> Result<f64, SpectralError> {
    let n = g.vertex_count();
    if n > CHEEGER_MAX {
        return Err(SpectralError::TooLarge { n, max: CHEEGER_MAX });
    }
    let half = n / 2;
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size > half {
            continue;
        }
        let mut boundary = 0u64;
        let mut bits = mask;
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            for (v, m) in g.neighbors(u) {
                if mask & (1 << v) == 0 {
                    boundary += m as u64;
                }
            }
        }
        let ratio = boundary as f64 / size as f64;
        if ratio < best {
            best = ratio;
        }
    }
    Ok(best)
}

/// Weighted count of ordered adjacent pairs (u in S, v in T).
pub fn edges_between(g: &RegularMultigraph, s: &[usize], t: &[usize]) -> Result<f64, SpectralError> {
    if s.is_empty() || t.is_empty() {
        return Err(SpectralError::EmptySet);
    }
    let n = g.vertex_count();
    let mut in_t = vec![false; n];
    for &v in t {
        if v >= n {
            return Err(SpectralError::DimensionMismatch { expected: n, got: v });
        }
        in_t[v] = true;
    }
    let mut count = 0u64;
    for &u in s {
        if u >= n {
            return Err(SpectralError::DimensionMismatch { expected: n, got: u });
        }
        for (v, m) in g.neighbors(u) {
            if in_t[v] {
                count += m as u64;
            }
        }
    }
    Ok(count as f64)
}

/// Observed deviation of e(S,T) from its random expectation, next to the
/// mixing-lemma allowance lambda * sqrt(|S| |T|) for a freshly computed
/// lambda. For many (S,T) pairs on one graph, compute lambda once and use
/// [`mixing_discrepancy_with_lambda`].
pub fn mixing_discrepancy(
    g: &RegularMultigraph,
    s: &[usize],
    t: &[usize],
    opts: &SpectralOptions,
) -> Result<(f64, f64), SpectralError> {
    let lambda = compute_lambda(g, opts)?.lambda;
    mixing_discrepancy_with_lambda(g, s, t, lambda)
}

/// Same as [`mixing_discrepancy`] with a caller-provided lambda.
pub fn mixing_discrepancy_with_lambda(
    g: &RegularMultigraph,
    s: &[usize],
    t: &[usize],
    lambda: f64,
) -> Result<(f64, f64), SpectralError> {
    let e = edges_between(g, s, t)?;
    let n = g.vertex_count() as f64;
    let expected = DEGREE / n * s.len() as f64 * t.len() as f64;
    let bound = lambda * (s.len() as f64 * t.len() as f64).sqrt();
    Ok(((e - expected).abs(), bound))
}

#[derive(Debug)]
pub enum SpectralError {
    DimensionMismatch { expected: usize, got: usize },
    TooLarge { n: usize, max: usize },
    EmptySet,
    InvalidOptions(String),
    NoConvergence,
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            SpectralError::TooLarge { n, max } => {
                write!(f, "n = {n} exceeds the limit {max} for this routine")
            }
            SpectralError::EmptySet => write!(f, "vertex set must be nonempty"),
            SpectralError::InvalidOptions(msg) => write!(f, "invalid options: {msg}"),
            SpectralError::NoConvergence => write!(f, "jacobi sweep cap reached"),
        }
    }
}

impl std::error::Error for SpectralError {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, RankPermutation, RegularMultigraph, TiePolicy};
    use crate::sequence::Sequence;

    fn doubled_cycle(n: usize) -> RegularMultigraph {
        let pi = RankPermutation::from_order((0..n).collect()).unwrap();
        RegularMultigraph::from_rank_permutation(&pi)
    }

    fn random_graph(n: usize, seed: u64) -> RegularMultigraph {
        let mut rng = SplitMix64::new(seed);
        let values: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let seq = Sequence::new(values, "random").unwrap();
        build_graph(&seq, TiePolicy::Jitter { seed }).unwrap()
    }

    fn tight_opts() -> SpectralOptions {
        SpectralOptions {
            tolerance: 1e-13,
            max_iterations: Some(50_000),
            ..SpectralOptions::default()
        }
    }

    /// Eigenvalues of the doubled n-cycle are 4 cos(2 pi k / n).
    fn doubled_cycle_spectrum(n: usize) -> Vec<f64> {
        let mut eigs: Vec<f64> = (0..n)
            .map(|k| 4.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eigs
    }

    #[test]
    fn spmv_constant_vector_gives_degree() {
        for n in [3usize, 8, 17] {
            let g = random_graph(n, n as u64);
            let y = spmv_vec(&g, &vec![1.0; n]).unwrap();
            for v in y {
                assert!((v - 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spmv_doubled_four_cycle_alternating_kernel() {
        let g = doubled_cycle(4);
        let y = spmv_vec(&g, &[1.0, 0.0, -1.0, 0.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn spmv_basis_vector_reads_column() {
        let g = random_graph(9, 3);
        for k in 0..9 {
            let mut e = vec![0.0; 9];
            e[k] = 1.0;
            let y = spmv_vec(&g, &e).unwrap();
            assert!((y.iter().sum::<f64>() - 4.0).abs() < 1e-12, "column sums to degree");
            for (v, &yv) in y.iter().enumerate() {
                assert_eq!(yv, g.multiplicity(v, k) as f64);
            }
        }
    }

    #[test]
    fn spmv_rejects_length_mismatch() {
        let g = doubled_cycle(4);
        assert!(spmv_vec(&g, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn oracle_on_doubled_four_cycle() {
        let g = doubled_cycle(4);
        let eigs = dense_spectrum_oracle(&g).unwrap();
        let expected = [-4.0, 0.0, 0.0, 4.0];
        for (got, want) in eigs.iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn oracle_on_doubled_triangle() {
        let g = doubled_cycle(3);
        let eigs = dense_spectrum_oracle(&g).unwrap();
        let expected = [-2.0, -2.0, 4.0];
        for (got, want) in eigs.iter().zip(expected) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_matches_circulant_formula() {
        for n in [5usize, 8, 13, 24] {
            let g = doubled_cycle(n);
            let eigs = dense_spectrum_oracle(&g).unwrap();
            for (got, want) in eigs.iter().zip(doubled_cycle_spectrum(n)) {
                assert!((got - want).abs() < 1e-10, "n={n}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn oracle_top_eigenvalue_is_degree() {
        for seed in 0..10u64 {
            let g = random_graph(20, seed);
            let eigs = dense_spectrum_oracle(&g).unwrap();
            assert!((eigs.last().unwrap() - 4.0).abs() < 1e-10);
            assert!(eigs.iter().all(|&e| (-4.0 - 1e-10..=4.0 + 1e-10).contains(&e)));
            // trace(A) = 0: no self-loops
            assert!(eigs.iter().sum::<f64>().abs() < 1e-8);
        }
    }

    #[test]
    fn oracle_rejects_large_n() {
        let big = doubled_cycle(DENSE_ORACLE_MAX + 1);
        assert!(matches!(dense_spectrum_oracle(&big), Err(SpectralError::TooLarge { .. })));
    }

    #[test]
    fn power_iteration_doubled_eight_cycle() {
        let g = doubled_cycle(8);
        let top = extreme_eigenvalue(&g, SpectrumEnd::Top, &tight_opts()).unwrap();
        let expect = 4.0 * (2.0 * std::f64::consts::PI / 8.0).cos(); // 2 sqrt 2
        assert!(top.converged);
        assert!((top.value - expect).abs() < 1e-9, "lambda2 = {}", top.value);
        let bottom = extreme_eigenvalue(&g, SpectrumEnd::Bottom, &tight_opts()).unwrap();
        assert!((bottom.value + 4.0).abs() < 1e-9, "lambda_n = {}", bottom.value);
    }

    #[test]
    fn compute_lambda_on_doubled_eight_cycle() {
        let g = doubled_cycle(8);
        let res = compute_lambda(&g, &tight_opts()).unwrap();
        assert!((res.lambda - 4.0).abs() < 1e-9);
        assert!((res.lambda2 - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!((res.lambda_n + 4.0).abs() < 1e-9);
        assert!(res.lambda_n <= res.lambda2);
        assert!(!res.lower_bound_only);
        assert!(res.residual <= 1e-13);
    }

    #[test]
    fn lambda_matches_oracle_on_random_graphs() {
        for seed in 0..25u64 {
            let g = random_graph(40, seed);
            let eigs = dense_spectrum_oracle(&g).unwrap();
            let lambda2 = eigs[eigs.len() - 2];
            let lambda_n = eigs[0];
            let truth = lambda2.abs().max(lambda_n.abs());
            let res = compute_lambda(&g, &tight_opts()).unwrap();
            assert!(!res.lower_bound_only, "seed {seed} hit the cap");
            assert!(
                (res.lambda - truth).abs() < 1e-8,
                "seed {seed}: power {} vs oracle {truth}",
                res.lambda
            );
        }
    }

    #[test]
    fn capped_run_is_flagged_not_failed() {
        let g = random_graph(60, 9);
        let opts = SpectralOptions {
            tolerance: 1e-16,
            max_iterations: Some(3),
            ..SpectralOptions::default()
        };
        let res = compute_lambda(&g, &opts).unwrap();
        assert!(res.lower_bound_only);
        assert_eq!(res.iterations, 6);
        // even a capped Rayleigh quotient stays inside the spectral band
        assert!((-4.0..=4.0).contains(&res.lambda2));
        assert!((-4.0..=4.0).contains(&res.lambda_n));
    }

    #[test]
    fn deterministic_given_seed() {
        let g = random_graph(50, 4);
        let a = compute_lambda(&g, &SpectralOptions::default()).unwrap();
        let b = compute_lambda(&g, &SpectralOptions::default()).unwrap();
        assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
        let c = compute_lambda(
            &g,
            &SpectralOptions { rng_seed: 77, ..SpectralOptions::default() },
        )
        .unwrap();
        // different start vector, same spectrum
        assert!((a.lambda - c.lambda).abs() < 1e-7);
    }

    #[test]
    fn options_are_validated() {
        let g = doubled_cycle(4);
        let bad = SpectralOptions { tolerance: 0.0, ..SpectralOptions::default() };
        assert!(compute_lambda(&g, &bad).is_err());
        let bad = SpectralOptions { max_iterations: Some(0), ..SpectralOptions::default() };
        assert!(compute_lambda(&g, &bad).is_err());
        let bad = SpectralOptions { reproject_every: 0, ..SpectralOptions::default() };
        assert!(compute_lambda(&g, &bad).is_err());
    }

    #[test]
    fn cheeger_doubled_eight_cycle() {
        let g = doubled_cycle(8);
        let h = cheeger_bruteforce(&g).unwrap();
        assert_eq!(h, 1.0); // arc of 4 vertices: 2 cut edges of weight 2 over |S| = 4
    }

    #[test]
    fn cheeger_doubled_triangle() {
        let g = doubled_cycle(3);
        assert_eq!(cheeger_bruteforce(&g).unwrap(), 4.0);
    }

    #[test]
    fn cheeger_rejects_large_n() {
        let g = doubled_cycle(17);
        assert!(matches!(cheeger_bruteforce(&g), Err(SpectralError::TooLarge { .. })));
    }

    #[test]
    fn cheeger_sandwich_on_random_graphs() {
        for seed in 0..40u64 {
            let n = 4 + (seed as usize % 11); // 4..=14
            let g = random_graph(n, seed.wrapping_mul(31).wrapping_add(7));
            let h = cheeger_bruteforce(&g).unwrap();
            let eigs = dense_spectrum_oracle(&g).unwrap();
            let lambda2 = eigs[eigs.len() - 2];
            // as printed, with |lambda_2|
            let lower = (4.0 - lambda2.abs()) / 2.0;
            let upper = (2.0 * 4.0 * (4.0 - lambda2.abs())).sqrt();
            assert!(lower <= h + 1e-9, "n={n} seed={seed}: {lower} > {h}");
            assert!(h <= upper + 1e-9, "n={n} seed={seed}: {h} > {upper}");
            // classical signed form
            let lower_s = (4.0 - lambda2) / 2.0;
            let upper_s = (2.0 * 4.0 * (4.0 - lambda2)).sqrt();
            assert!(lower_s <= h + 1e-9 && h <= upper_s + 1e-9);
        }
    }

    #[test]
    fn mixing_whole_graph_has_zero_discrepancy() {
        let g = random_graph(30, 1);
        let all: Vec<usize> = (0..30).collect();
        let (disc, bound) = mixing_discrepancy(&g, &all, &all, &tight_opts()).unwrap();
        assert!(disc.abs() < 1e-9, "e(V,V) = 4n exactly");
        assert!(bound > 0.0);
        assert_eq!(edges_between(&g, &all, &all).unwrap(), 120.0);
    }

    #[test]
    fn mixing_single_vertex_neighborhood() {
        let g = random_graph(30, 2);
        let s = vec![0usize];
        let t: Vec<usize> = g.neighbors(0).map(|(v, _)| v).collect();
        let e = edges_between(&g, &s, &t).unwrap();
        assert_eq!(e, 4.0);
        let lambda = compute_lambda(&g, &tight_opts()).unwrap().lambda;
        let (disc, bound) = mixing_discrepancy_with_lambda(&g, &s, &t, lambda).unwrap();
        assert!(disc <= bound + 1e-9);
    }

    #[test]
    fn mixing_rejects_empty_sets() {
        let g = doubled_cycle(4);
        assert!(matches!(edges_between(&g, &[], &[0]), Err(SpectralError::EmptySet)));
        assert!(matches!(
            mixing_discrepancy_with_lambda(&g, &[0], &[], 4.0),
            Err(SpectralError::EmptySet)
        ));
    }

    #[test]
    fn shifted_operators_are_psd_on_oracle_spectra() {
        for seed in 0..10u64 {
            let g = random_graph(16, seed);
            let eigs = dense_spectrum_oracle(&g).unwrap();
            for &e in &eigs {
                assert!(e + 4.0 >= -1e-10);
                assert!(4.0 - e >= -1e-10);
            }
        }
    }

    #[test]
    fn rotation_invariance_of_lambda() {
        let mut rng = SplitMix64::new(123);
        let n = 48;
        let values: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let base = Sequence::new(values.clone(), "base").unwrap();
        let g = build_graph(&base, TiePolicy::Stable).unwrap();
        let lambda = compute_lambda(&g, &tight_opts()).unwrap().lambda;
        for shift in [1usize, 7, 25] {
            let mut rotated = values.clone();
            rotated.rotate_left(shift);
            let s = Sequence::new(rotated, "rotated").unwrap();
            let gr = build_graph(&s, TiePolicy::Stable).unwrap();
            let lr = compute_lambda(&gr, &tight_opts()).unwrap().lambda;
            assert!(
                (lambda - lr).abs() < 1e-8,
                "rotation by {shift} moved lambda from {lambda} to {lr}"
            );
        }
    }

    #[test]
    fn mean_zero_start_vector() {
        let mut rng = SplitMix64::new(5);
        let x = random_mean_zero_unit(101, &mut rng);
        assert!(x.iter().sum::<f64>().abs() < 1e-12);
        assert!((norm(&x) - 1.0).abs() < 1e-12);
    }
}
