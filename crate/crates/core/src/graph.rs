//! Symmetrized kNN graph over a sample matrix and its combinatorial Laplacian.

use std::io::Write;

use crate::dataset::{dist_sq, DataMatrix};
use crate::{Error, Result};

/// Edge weighting scheme for the kNN graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// Every kept edge gets weight 1. Exact integer arithmetic in tests.
    Unit,
    /// Self-tuning Gaussian: w(p,q) = exp(-|x_p - x_q|^2 / (sigma_p sigma_q))
    /// with sigma_p the distance from p to its k-th neighbor.
    Gaussian,
}

/// Symmetric weighted adjacency in compressed sparse row form.
///
/// Invariants: structurally symmetric with equal weights, no self-loops,
/// strictly positive weights, column indices strictly increasing per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n_vertices: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseGraph {
    /// Builds a graph from undirected edges `(p, q, w)`; both orientations are
    /// stored. Duplicate edges, self-loops, or non-positive weights error.
    pub fn from_edges(n_vertices: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut undirected: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
        for &(p, q, w) in edges {
            if p == q {
                return Err(Error::InvalidParameter(format!("self-loop on vertex {p}")));
            }
            if p >= n_vertices || q >= n_vertices {
                return Err(Error::InvalidParameter(format!(
                    "edge ({p}, {q}) out of range for {n_vertices} vertices"
                )));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "edge ({p}, {q}) has non-positive weight {w}"
                )));
            }
            undirected.push((p.min(q), p.max(q), w));
        }
        undirected.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if undirected.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidParameter("duplicate edge".into()));
        }
        Ok(Self::from_sorted_undirected(n_vertices, &undirected))
    }

    /// CSR assembly from a deduplicated, (p, q)-sorted undirected edge list.
    fn from_sorted_undirected(n_vertices: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut degree = vec![0usize; n_vertices];
        for &(p, q, _) in edges {
            degree[p] += 1;
            degree[q] += 1;
        }
        let mut row_offsets = vec![0usize; n_vertices + 1];
        for v in 0..n_vertices {
            row_offsets[v + 1] = row_offsets[v] + degree[v];
        }
        let nnz = row_offsets[n_vertices];
        let mut col_indices = vec![0usize; nnz];
        let mut weights = vec![0.0f64; nnz];
        let mut cursor = row_offsets.clone();
        for &(p, q, w) in edges {
            col_indices[cursor[p]] = q;
            weights[cursor[p]] = w;
            cursor[p] += 1;
            col_indices[cursor[q]] = p;
            weights[cursor[q]] = w;
            cursor[q] += 1;
        }
        // Rows receive p<q entries in ascending order already, but the q-side
        // inserts can interleave; sort each row to restore the CSR invariant.
        for v in 0..n_vertices {
            let lo = row_offsets[v];
            let hi = row_offsets[v + 1];
            let mut entries: Vec<(usize, f64)> = col_indices[lo..hi]
                .iter()
                .copied()
                .zip(weights[lo..hi].iter().copied())
                .collect();
            entries.sort_by_key(|e| e.0);
            for (slot, (c, w)) in entries.into_iter().enumerate() {
                col_indices[lo + slot] = c;
                weights[lo + slot] = w;
            }
        }
        Self {
            n_vertices,
            row_offsets,
            col_indices,
            weights,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.col_indices.len() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row_offsets[v + 1] - self.row_offsets[v]
    }

    /// Neighbors of `v` with edge weights, ascending by vertex id.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_offsets[v];
        let hi = self.row_offsets[v + 1];
        self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.weights[lo..hi].iter().copied())
    }

    /// Undirected edges as `(p, q, w)` with `p < q`, lexicographically sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_vertices).flat_map(move |p| {
            self.neighbors(p)
                .filter(move |&(q, _)| p < q)
                .map(move |(q, w)| (p, q, w))
        })
    }

    /// Writes the debug edge-list format: one `p q w` line per edge, `p < q`,
    /// sorted lexicographically.
    pub fn write_edge_list(&self, mut out: impl Write) -> Result<()> {
        for (p, q, w) in self.edges() {
            writeln!(out, "{p} {q} {w}")?;
        }
        Ok(())
    }

    /// Checks every structural invariant; test and debugging aid.
    pub fn validate(&self) -> Result<()> {
        if self.row_offsets.len() != self.n_vertices + 1 || self.row_offsets[0] != 0 {
            return Err(Error::Consistency("malformed row offsets".into()));
        }
        for v in 0..self.n_vertices {
            let lo = self.row_offsets[v];
            let hi = self.row_offsets[v + 1];
            if hi < lo || hi > self.col_indices.len() {
                return Err(Error::Consistency("row offsets not monotone".into()));
            }
            let cols = &self.col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Consistency(format!(
                    "row {v} columns not strictly increasing"
                )));
            }
            for (q, w) in self.neighbors(v) {
                if q == v {
                    return Err(Error::Consistency(format!("self-loop on {v}")));
                }
                if q >= self.n_vertices {
                    return Err(Error::Consistency(format!("column {q} out of range")));
                }
                if !(w > 0.0) {
                    return Err(Error::Consistency(format!(
                        "edge ({v}, {q}) weight {w} not positive"
                    )));
                }
                let back = self
                    .neighbors(q)
                    .find(|&(c, _)| c == v)
                    .map(|(_, bw)| bw)
                    .ok_or_else(|| {
                        Error::Consistency(format!("edge ({v}, {q}) missing reverse"))
                    })?;
                if back != w {
                    return Err(Error::Consistency(format!(
                        "edge ({v}, {q}) asymmetric weight"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Directed k-nearest-neighbor lists: for each point, the k nearest others by
/// Euclidean distance, ties broken toward the lower index, self excluded.
/// Returns `(neighbor indices, squared distances)` flattened row-major.
pub(crate) fn knn_lists(data: &DataMatrix, k: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = data.n_samples();
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be smaller than the number of samples {n}"
        )));
    }
    let mut indices = vec![0usize; n * k];
    let mut dists = vec![0.0f64; n * k];
    // Insertion buffer of the current k best, ascending by (distance, index).
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for i in 0..n {
        best.clear();
        let xi = data.row(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d2 = dist_sq(xi, data.row(j));
            if best.len() == k {
                let worst = best[k - 1];
                if (d2, j) >= (worst.0, worst.1) {
                    continue;
                }
                best.pop();
            }
            let pos = best.partition_point(|&(bd, bj)| (bd, bj) < (d2, j));
            best.insert(pos, (d2, j));
        }
        for (slot, &(d2, j)) in best.iter().enumerate() {
            indices[i * k + slot] = j;
            dists[i * k + slot] = d2;
        }
    }
    Ok((indices, dists))
}

/// Builds the union-symmetrized kNN graph: an edge is kept when either
/// endpoint selected the other among its k nearest neighbors.
pub fn build_knn_graph(data: &DataMatrix, k: usize, weighting: Weighting) -> Result<SparseGraph> {
    let n = data.n_samples();
    let (indices, dists) = knn_lists(data, k)?;

    // Self-tuning scale: distance to the k-th neighbor, floored to 1 for
    // all-duplicate neighborhoods so the Gaussian exponent stays finite.
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            let s = dists[i * k + (k - 1)].sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();

    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n * k);
    for i in 0..n {
        for &j in &indices[i * k..(i + 1) * k] {
            pairs.push((i.min(j), i.max(j)));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    let edges: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .map(|(p, q)| {
            let w = match weighting {
                Weighting::Unit => 1.0,
                Weighting::Gaussian => {
                    let d2 = data.dist_sq(p, q);
                    (-d2 / (sigma[p] * sigma[q])).exp()
                }
            };
            (p, q, w)
        })
        .collect();
    Ok(SparseGraph::from_sorted_undirected(n, &edges))
}

/// Combinatorial Laplacian in CSR form, diagonal included.
///
/// Row p holds -w(p, q) for each edge and the weighted degree on the
/// diagonal, so every row sums to zero and the matrix is symmetric
/// diagonally dominant.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    n_vertices: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Assembles the Laplacian of a graph: off-diagonals are negated weights,
/// diagonals the weighted vertex degrees.
pub fn laplacian(g: &SparseGraph) -> LaplacianMatrix {
    let n = g.n_vertices();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(g.col_indices.len() + n);
    let mut values = Vec::with_capacity(g.col_indices.len() + n);
    row_offsets.push(0);
    for p in 0..n {
        let degree: f64 = g.neighbors(p).map(|(_, w)| w).sum();
        let mut placed_diag = false;
        for (q, w) in g.neighbors(p) {
            if !placed_diag && q > p {
                col_indices.push(p);
                values.push(degree);
                placed_diag = true;
            }
            col_indices.push(q);
            values.push(-w);
        }
        if !placed_diag {
            col_indices.push(p);
            values.push(degree);
        }
        row_offsets.push(col_indices.len());
    }
    LaplacianMatrix {
        n_vertices: n,
        row_offsets,
        col_indices,
        values,
    }
}

impl LaplacianMatrix {
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Entries of row p as (column, value), ascending by column.
    pub fn row(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_offsets[p];
        let hi = self.row_offsets[p + 1];
        self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn diagonal(&self, p: usize) -> f64 {
        self.row(p)
            .find(|&(q, _)| q == p)
            .map(|(_, v)| v)
            .unwrap_or(0.0)
    }

    /// y = L x.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_vertices);
        debug_assert_eq!(y.len(), self.n_vertices);
        for p in 0..self.n_vertices {
            let lo = self.row_offsets[p];
            let hi = self.row_offsets[p + 1];
            let mut acc = 0.0;
            for t in lo..hi {
                acc += self.values[t] * x[self.col_indices[t]];
            }
            y[p] = acc;
        }
    }

    /// x^T L x, the weighted-smoothness quadratic form.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n_vertices];
        self.mul_vec(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// Gershgorin upper bound on the largest eigenvalue: 2 * max degree.
    pub fn eigenvalue_upper_bound(&self) -> f64 {
        (0..self.n_vertices)
            .map(|p| 2.0 * self.diagonal(p))
            .fold(0.0, f64::max)
    }

    /// Dense row-major copy, for the direct eigensolver path.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n_vertices;
        let mut dense = vec![0.0; n * n];
        for p in 0..n {
            for (q, v) in self.row(p) {
                dense[p * n + q] = v;
            }
        }
        dense
    }

    /// Adjacency structure of the underlying graph (off-diagonal pattern).
    pub fn offdiag_neighbors(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(p).filter(move |&(q, _)| q != p).map(|(q, _)| q)
    }
}

/// Assigns component ids in order of first vertex occurrence: two vertices
/// share an id iff they are connected.
pub fn connected_components(g: &SparseGraph) -> Vec<usize> {
    component_ids(g.n_vertices(), |v| g.neighbors(v).map(|(q, _)| q).collect())
}

/// Component ids over the Laplacian's off-diagonal pattern.
pub fn laplacian_components(l: &LaplacianMatrix) -> Vec<usize> {
    component_ids(l.n_vertices(), |v| l.offdiag_neighbors(v).collect())
}

fn component_ids(n: usize, neighbors_of: impl Fn(usize) -> Vec<usize>) -> Vec<usize> {
    let mut ids = vec![usize::MAX; n];
    let mut next_id = 0;
    let mut queue = Vec::new();
    for start in 0..n {
        if ids[start] != usize::MAX {
            continue;
        }
        ids[start] = next_id;
        queue.push(start);
        while let Some(v) = queue.pop() {
            for q in neighbors_of(v) {
                if ids[q] == usize::MAX {
                    ids[q] = next_id;
                    queue.push(q);
                }
            }
        }
        next_id += 1;
    }
    ids
}
