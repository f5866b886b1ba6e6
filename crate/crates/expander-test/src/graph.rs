//! Builds the 4-regular order/index multigraph of a sequence: the cycle on
//! positions 1..n unioned with the cycle on the rank order of the values.
//! Edges shared by both cycles keep multiplicity 2.
//!
//! Vertices are stored 0-based; every external text format prints 1-based
//! labels.

use std::fmt;

use crate::rng::SplitMix64;
use crate::sequence::Sequence;

/// How equal sample values are ordered.
///
/// `Jitter` reproduces the effect of adding an infinitesimal random
/// perturbation to every value: within each class of equal values the
/// order is a seeded uniform shuffle. `Stable` keeps the original index
/// order, which makes pipelines bit-reproducible without a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    Jitter { seed: u64 },
    Stable,
}

impl Default for TiePolicy {
    fn default() -> Self {
        TiePolicy::Jitter { seed: 0 }
    }
}

/// The permutation sorting the sample values increasingly.
/// `order()[k]` is the 0-based position of the k-th smallest value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankPermutation {
    order: Vec<usize>,
}

impl RankPermutation {
    /// Wraps an explicit permutation, checking it is a bijection on 0..n.
    pub fn from_order(order: Vec<usize>) -> Result<Self, GraphError> {
        let n = order.len();
        if n < 3 {
            return Err(GraphError::TooFewVertices { n });
        }
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n || seen[v] {
                return Err(GraphError::NotAPermutation);
            }
            seen[v] = true;
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Sorts the sequence positions by value under the given tie policy.
pub fn rank_permutation(seq: &Sequence, policy: TiePolicy) -> Result<RankPermutation, GraphError> {
    let n = seq.len();
    if n < 3 {
        return Err(GraphError::TooFewVertices { n });
    }
    let values = seq.values();
    let mut order: Vec<usize> = (0..n).collect();
    match policy {
        TiePolicy::Stable => {
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
        }
        TiePolicy::Jitter { seed } => {
            let mut rng = SplitMix64::new(seed);
            let keys: Vec<u64> = (0..n).map(|_| rng.next_u64()).collect();
            order.sort_by(|&a, &b| {
                values[a]
                    .partial_cmp(&values[b])
                    .unwrap()
                    .then(keys[a].cmp(&keys[b]))
                    .then(a.cmp(&b))
            });
        }
    }
    Ok(RankPermutation { order })
}

/// 4-regular multigraph in compressed sparse row form with integer edge
/// multiplicities. Immutable once built; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularMultigraph {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    mults: Vec<u32>,
}

impl RegularMultigraph {
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Distinct neighbors of `v` with multiplicities.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let lo = self.row_ptr[v];
        let hi = self.row_ptr[v + 1];
        self.cols[lo..hi].iter().zip(&self.mults[lo..hi]).map(|(&c, &m)| (c as usize, m))
    }

    /// Weighted degree of `v`; the construction makes this 4 everywhere.
    pub fn degree(&self, v: usize) -> u32 {
        let lo = self.row_ptr[v];
        let hi = self.row_ptr[v + 1];
        self.mults[lo..hi].iter().sum()
    }

    /// Multiplicity of edge {u, v}, 0 if absent.
    pub fn multiplicity(&self, u: usize, v: usize) -> u32 {
        self.neighbors(u).find(|&(w, _)| w == v).map_or(0, |(_, m)| m)
    }

    /// Distinct undirected edges (u < v) with multiplicities, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, u32)> {
        let mut out = Vec::with_capacity(self.cols.len() / 2);
        for u in 0..self.n {
            for (v, m) in self.neighbors(u) {
                if u < v {
                    out.push((u, v, m));
                }
            }
        }
        out
    }

    /// Sum of multiplicities over distinct undirected edges; 2n here.
    pub fn total_edge_weight(&self) -> u64 {
        self.mults.iter().map(|&m| m as u64).sum::<u64>() / 2
    }

    pub(crate) fn csr(&self) -> (&[usize], &[u32], &[u32]) {
        (&self.row_ptr, &self.cols, &self.mults)
    }

    /// Assembles index cycle plus order cycle from a rank permutation.
    pub fn from_rank_permutation(pi: &RankPermutation) -> Self {
        let n = pi.len();
        let order = pi.order();
        let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(2 * n);
        for i in 0..n {
            let j = (i + 1) % n;
            pairs.push(normalize(i as u32, j as u32));
            pairs.push(normalize(order[i] as u32, order[j] as u32));
        }
        pairs.sort_unstable();

        // directed entries: each undirected pair contributes both (u,v) and (v,u)
        let mut degree = vec![0usize; n];
        let mut merged: Vec<(u32, u32, u32)> = Vec::with_capacity(2 * n);
        let mut iter = pairs.into_iter();
        let mut cur = iter.next().expect("n >= 3 guarantees edges");
        let mut mult = 1u32;
        for p in iter {
            if p == cur {
                mult += 1;
            } else {
                merged.push((cur.0, cur.1, mult));
                cur = p;
                mult = 1;
            }
        }
        merged.push((cur.0, cur.1, mult));

        for &(u, v, _) in &merged {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for v in 0..n {
            row_ptr[v + 1] = row_ptr[v] + degree[v];
        }
        let nnz = row_ptr[n];
        let mut cols = vec![0u32; nnz];
        let mut mults = vec![0u32; nnz];
        let mut cursor = row_ptr.clone();
        for &(u, v, m) in &merged {
            cols[cursor[u as usize]] = v;
            mults[cursor[u as usize]] = m;
            cursor[u as usize] += 1;
            cols[cursor[v as usize]] = u;
            mults[cursor[v as usize]] = m;
            cursor[v as usize] += 1;
        }
        RegularMultigraph { n, row_ptr, cols, mults }
    }
}

fn normalize(a: u32, b: u32) -> (u32, u32) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Ranks the sequence and assembles the order/index multigraph.
pub fn build_graph(seq: &Sequence, policy: TiePolicy) -> Result<RegularMultigraph, GraphError> {
    let pi = rank_permutation(seq, policy)?;
    Ok(RegularMultigraph::from_rank_permutation(&pi))
}

/// Text formats understood by [`export_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// `u v multiplicity` per distinct edge, u < v, 1-based, sorted.
    EdgeList,
    /// Graphviz `graph` block with multiedges repeated.
    Dot,
}

impl std::str::FromStr for ExportFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge-list" => Ok(ExportFormat::EdgeList),
            "dot" => Ok(ExportFormat::Dot),
            other => Err(GraphError::UnknownFormat(other.to_string())),
        }
    }
}

/// Renders the graph in the requested format, 1-based vertex labels.
pub fn export_graph(g: &RegularMultigraph, format: ExportFormat) -> String {
    let edges = g.edges();
    match format {
        ExportFormat::EdgeList => {
            let mut out = String::new();
            for (u, v, m) in edges {
                out.push_str(&format!("{} {} {}\n", u + 1, v + 1, m));
            }
            out
        }
        ExportFormat::Dot => {
            let mut out = String::from("graph expander {\n");
            for v in 0..g.vertex_count() {
                out.push_str(&format!("  {};\n", v + 1));
            }
            for (u, v, m) in edges {
                for _ in 0..m {
                    out.push_str(&format!("  {} -- {};\n", u + 1, v + 1));
                }
            }
            out.push_str("}\n");
            out
        }
    }
}

#[derive(Debug)]
pub enum GraphError {
    TooFewVertices { n: usize },
    NotAPermutation,
    UnknownFormat(String),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::TooFewVertices { n } => {
                write!(f, "need at least 3 values to build a graph, got {n}")
            }
            GraphError::NotAPermutation => write!(f, "order is not a permutation of 0..n"),
            GraphError::UnknownFormat(s) => {
                write!(f, "unknown graph format '{s}' (expected edge-list or dot)")
            }
        }
    }
}

impl std::error::Error for GraphError {}
