//! Spectral-similarity aggregation: partition points into high-correlation
//! subsets, emit pseudo-samples as subset means, repeat until a target
//! compression ratio is reached, and project cluster labels back.

use std::io::{BufRead, Write};

use crate::dataset::{dist_sq, DataMatrix};
use crate::dbscan::ClusterLabels;
use crate::embedding::{embed, SpectralEmbedding};
use crate::graph::{build_knn_graph, laplacian, SparseGraph, Weighting};
use crate::{Error, Result};

/// Squared-cosine affinity of two spectral coordinate vectors:
/// |<u, v>|^2 / (<u, u> <v, v>). Lies in [0, 1]; a zero vector is defined
/// as dissimilar to everything (result 0).
pub fn spectral_similarity(x_u: &[f64], x_v: &[f64]) -> f64 {
    debug_assert_eq!(x_u.len(), x_v.len());
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for (a, b) in x_u.iter().zip(x_v) {
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return 0.0;
    }
    (uv * uv) / (uu * vv)
}

/// One aggregation pass: a surjective map from `n_in` inputs onto `n_out`
/// aggregates plus the member count of each aggregate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationPass {
    n_in: usize,
    n_out: usize,
    assignment: Vec<usize>,
    sizes: Vec<usize>,
}

impl AggregationPass {
    /// Builds a pass from an assignment array, deriving and validating sizes.
    pub fn from_assignment(assignment: Vec<usize>, n_out: usize) -> Result<Self> {
        let n_in = assignment.len();
        let mut sizes = vec![0usize; n_out];
        for &a in &assignment {
            if a >= n_out {
                return Err(Error::Consistency(format!(
                    "assignment target {a} out of range for {n_out} aggregates"
                )));
            }
            sizes[a] += 1;
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::Consistency("empty aggregate in pass".into()));
        }
        Ok(Self {
            n_in,
            n_out,
            assignment,
            sizes,
        })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
}

/// Greedy similarity matching, one pass.
///
/// Vertices are visited in descending graph degree (ties toward the lower
/// index). An unmatched vertex merges with the unmatched graph neighbor of
/// maximal spectral similarity (ties toward the lower index); merging stops
/// the moment the live-aggregate count reaches `target_n_out`. When neighbor
/// matching alone cannot get there, remaining unmatched vertices merge into
/// the aggregate with the nearest centroid in embedding space. Output
/// indices follow first-occurrence order of the final grouping.
pub fn aggregate_pass(
    emb: &SpectralEmbedding,
    g: &SparseGraph,
    target_n_out: usize,
) -> Result<AggregationPass> {
    let n = g.n_vertices();
    if emb.n_points() != n {
        return Err(Error::Consistency(format!(
            "embedding covers {} points but graph has {n} vertices",
            emb.n_points()
        )));
    }
    if target_n_out < 1 {
        return Err(Error::InvalidParameter("target_n_out must be at least 1".into()));
    }
    if target_n_out >= n {
        return Err(Error::InvalidParameter(format!(
            "target_n_out = {target_n_out} must be below the input count {n}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));

    // group_of[v]: current aggregate representative (smallest member).
    let mut group_of: Vec<usize> = (0..n).collect();
    let mut matched = vec![false; n];
    let mut live = n;

    for &u in &order {
        if live == target_n_out {
            break;
        }
        if matched[u] {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for (v, _) in g.neighbors(u) {
            if matched[v] {
                continue;
            }
            let s = spectral_similarity(emb.point(u), emb.point(v));
            let better = match best {
                None => true,
                Some((bs, _)) => s > bs,
            };
            if better {
                best = Some((s, v));
            }
        }
        if let Some((_, v)) = best {
            matched[u] = true;
            matched[v] = true;
            let rep = u.min(v);
            group_of[u] = rep;
            group_of[v] = rep;
            live -= 1;
        }
    }

    if live > target_n_out {
        centroid_fallback(emb, &order, &matched, &mut group_of, &mut live, target_n_out);
    }

    // Number aggregates by first occurrence of their representative.
    let mut id_of = vec![usize::MAX; n];
    let mut assignment = vec![0usize; n];
    let mut next = 0usize;
    for v in 0..n {
        let rep = group_of[v];
        if id_of[rep] == usize::MAX {
            id_of[rep] = next;
            next += 1;
        }
        assignment[v] = id_of[rep];
    }
    debug_assert_eq!(next, target_n_out);
    AggregationPass::from_assignment(assignment, target_n_out)
}

/// Merges leftover aggregates into their nearest aggregate centroid (squared
/// Euclidean in embedding space, distance ties toward the earlier aggregate)
/// until the target count is met. Never-matched singletons go first, in
/// visit order; if none remain, whole aggregates merge in ascending
/// representative order.
fn centroid_fallback(
    emb: &SpectralEmbedding,
    order: &[usize],
    matched: &[bool],
    group_of: &mut [usize],
    live: &mut usize,
    target: usize,
) {
    let n = group_of.len();
    let r = emb.r();

    // Members and centroid sums per representative.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        members[group_of[v]].push(v);
    }
    let mut reps: Vec<usize> = (0..n).filter(|&v| !members[v].is_empty()).collect();
    let mut sums: Vec<Vec<f64>> = vec![Vec::new(); n];
    for &rep in &reps {
        let mut acc = vec![0.0; r];
        for &v in &members[rep] {
            for (a, x) in acc.iter_mut().zip(emb.point(v)) {
                *a += x;
            }
        }
        sums[rep] = acc;
    }
    let centroid = |sums: &[Vec<f64>], members: &[Vec<usize>], rep: usize| -> Vec<f64> {
        let k = members[rep].len() as f64;
        sums[rep].iter().map(|s| s / k).collect()
    };

    let queue: Vec<usize> = order.iter().copied().filter(|&v| !matched[v]).collect();
    let mut qi = 0;
    while *live > target {
        // Pick the aggregate that will be absorbed.
        let src_rep = loop {
            if qi < queue.len() {
                let v = queue[qi];
                qi += 1;
                if group_of[v] == v && members[v].len() == 1 {
                    break v;
                }
            } else {
                // No singletons left: absorb the earliest surviving aggregate.
                break *reps
                    .iter()
                    .find(|&&rep| !members[rep].is_empty())
                    .expect("live > target implies a survivor");
            }
        };

        let src_centroid = centroid(&sums, &members, src_rep);
        let mut best: Option<(f64, usize)> = None;
        for &rep in &reps {
            if rep == src_rep || members[rep].is_empty() {
                continue;
            }
            let d = dist_sq(&src_centroid, &centroid(&sums, &members, rep));
            let better = match best {
                None => true,
                Some((bd, _)) => d < bd,
            };
            if better {
                best = Some((d, rep));
            }
        }
        let (_, dst) = best.expect("target >= 1 leaves another aggregate");

        let moved = std::mem::take(&mut members[src_rep]);
        for &v in &moved {
            group_of[v] = dst;
        }
        members[dst].extend(moved);
        let src_sum = std::mem::take(&mut sums[src_rep]);
        for (a, s) in sums[dst].iter_mut().zip(src_sum) {
            *a += s;
        }
        reps.retain(|&rep| rep != src_rep);
        *live -= 1;
    }
}

/// Ordered record of aggregation passes with enough structure to project
/// labels between the compressed and original index spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMap {
    passes: Vec<AggregationPass>,
    n_original: usize,
    n_final: usize,
    cumulative_sizes: Vec<usize>,
}

impl AssignmentMap {
    fn new(passes: Vec<AggregationPass>, n_original: usize, n_final: usize) -> Result<Self> {
        let mut prev = n_original;
        for pass in &passes {
            if pass.n_in() != prev {
                return Err(Error::Consistency(format!(
                    "pass input {} does not compose with previous output {prev}",
                    pass.n_in()
                )));
            }
            prev = pass.n_out();
        }
        if prev != n_final {
            return Err(Error::Consistency(format!(
                "final pass output {prev} does not match n_final {n_final}"
            )));
        }
        let mut map = Self {
            passes,
            n_original,
            n_final,
            cumulative_sizes: Vec::new(),
        };
        let mut sizes = vec![0usize; n_final];
        for &j in &map.flatten() {
            sizes[j] += 1;
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::Consistency("empty final aggregate".into()));
        }
        map.cumulative_sizes = sizes;
        Ok(map)
    }

    pub fn passes(&self) -> &[AggregationPass] {
        &self.passes
    }

    pub fn n_original(&self) -> usize {
        self.n_original
    }

    pub fn n_final(&self) -> usize {
        self.n_final
    }

    pub fn cumulative_sizes(&self) -> &[usize] {
        &self.cumulative_sizes
    }

    /// Functional composition of all pass assignments: original index ->
    /// final pseudo-sample index.
    pub fn flatten(&self) -> Vec<usize> {
        let mut flat: Vec<usize> = (0..self.n_original).collect();
        for pass in &self.passes {
            for slot in flat.iter_mut() {
                *slot = pass.assignment()[*slot];
            }
        }
        flat
    }

    /// Every original point inherits the cluster label of its pseudo-sample;
    /// the noise sentinel propagates unchanged.
    pub fn project_labels(&self, compressed: &ClusterLabels) -> Result<ClusterLabels> {
        if compressed.len() != self.n_final {
            return Err(Error::Consistency(format!(
                "{} compressed labels for {} pseudo-samples",
                compressed.len(),
                self.n_final
            )));
        }
        let flat = self.flatten();
        let labels: Vec<i64> = flat.iter().map(|&j| compressed.labels()[j]).collect();
        ClusterLabels::new(labels, compressed.n_clusters())
    }

    /// Versioned text serialization: header, per-pass assignment arrays, and
    /// the cumulative sizes. Enough for out-of-process label projection.
    pub fn write(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "spectral-dbscan-map v1")?;
        writeln!(
            out,
            "{} {} {}",
            self.n_original,
            self.n_final,
            self.passes.len()
        )?;
        for pass in &self.passes {
            writeln!(out, "pass {} {}", pass.n_in(), pass.n_out())?;
            let mut line = String::with_capacity(pass.n_in() * 3);
            for (i, &a) in pass.assignment().iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&a.to_string());
            }
            writeln!(out, "{line}")?;
        }
        writeln!(out, "sizes")?;
        let mut line = String::new();
        for (i, &s) in self.cumulative_sizes.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&s.to_string());
        }
        writeln!(out, "{line}")?;
        Ok(())
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
        let mut cursor = MapCursor { lines: &lines, pos: 0 };

        let header = cursor.next()?;
        if header.trim() != "spectral-dbscan-map v1" {
            return Err(Error::Format(format!("unknown map header {header:?}")));
        }
        let counts = cursor.parse_ints(3)?;
        let (n_original, n_final, n_passes) = (counts[0], counts[1], counts[2]);

        let mut passes = Vec::with_capacity(n_passes);
        for _ in 0..n_passes {
            let head = cursor.next()?;
            let line = cursor.pos;
            let mut it = head.split_whitespace();
            if it.next() != Some("pass") {
                return Err(Error::Parse {
                    line,
                    message: "expected pass header".into(),
                });
            }
            let n_in: usize = parse_int(it.next(), line)?;
            let n_out: usize = parse_int(it.next(), line)?;
            let assignment = cursor.parse_ints(n_in)?;
            passes.push(AggregationPass::from_assignment(assignment, n_out)?);
        }
        let sizes_head = cursor.next()?;
        if sizes_head.trim() != "sizes" {
            return Err(Error::Parse {
                line: cursor.pos,
                message: "expected sizes section".into(),
            });
        }
        let sizes = cursor.parse_ints(n_final)?;

        let map = Self::new(passes, n_original, n_final)?;
        if sizes != map.cumulative_sizes {
            return Err(Error::Consistency(
                "stored sizes disagree with pass composition".into(),
            ));
        }
        Ok(map)
    }
}

struct MapCursor<'a> {
    lines: &'a [String],
    pos: usize,
}

impl<'a> MapCursor<'a> {
    fn next(&mut self) -> Result<&'a str> {
        let line = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::Format("unexpected end of map file".into()))?;
        self.pos += 1;
        Ok(line.as_str())
    }

    fn parse_ints(&mut self, expect: usize) -> Result<Vec<usize>> {
        let line = self.next()?;
        let line_no = self.pos;
        let values: Vec<usize> = line
            .split_whitespace()
            .map(|t| parse_int(Some(t), line_no))
            .collect::<Result<_>>()?;
        if values.len() != expect {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {expect} integers, found {}", values.len()),
            });
        }
        Ok(values)
    }
}

fn parse_int(token: Option<&str>, line: usize) -> Result<usize> {
    token
        .ok_or_else(|| Error::Parse {
            line,
            message: "missing integer".into(),
        })?
        .parse()
        .map_err(|_| Error::Parse {
            line,
            message: format!("{token:?} is not a non-negative integer"),
        })
}

/// Full compression record: the pass map plus the pseudo-sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionHierarchy {
    map: AssignmentMap,
    pseudo_samples: DataMatrix,
}

impl CompressionHierarchy {
    pub fn map(&self) -> &AssignmentMap {
        &self.map
    }

    pub fn passes(&self) -> &[AggregationPass] {
        self.map.passes()
    }

    pub fn n_original(&self) -> usize {
        self.map.n_original()
    }

    pub fn n_final(&self) -> usize {
        self.map.n_final()
    }

    pub fn pseudo_samples(&self) -> &DataMatrix {
        &self.pseudo_samples
    }

    pub fn cumulative_sizes(&self) -> &[usize] {
        self.map.cumulative_sizes()
    }

    pub fn flatten(&self) -> Vec<usize> {
        self.map.flatten()
    }

    pub fn project_labels(&self, compressed: &ClusterLabels) -> Result<ClusterLabels> {
        self.map.project_labels(compressed)
    }
}

/// Compresses `data` down to `ceil(n / ratio)` pseudo-samples.
///
/// Each pass reduces the live count to `max(target, ceil(n_current / 2))`
/// (at most halving), emits size-weighted means, and recomputes the kNN
/// graph and spectral embedding over the pseudo-samples for the next pass;
/// `r` is capped at `n_current - 2` on coarse levels. The initial graph and
/// embedding come from the caller. Deterministic in `seed`.
pub fn compress(
    data: &DataMatrix,
    emb: &SpectralEmbedding,
    g: &SparseGraph,
    ratio: f64,
    knn_k: usize,
    r: usize,
    seed: u64,
) -> Result<CompressionHierarchy> {
    let n = data.n_samples();
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "compression ratio must exceed 1, got {ratio}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("cannot compress fewer than 2 samples".into()));
    }
    let target = (n as f64 / ratio).ceil() as usize;
    if target < 2 {
        return Err(Error::InvalidParameter(format!(
            "ratio {ratio} would leave {target} pseudo-samples; need at least 2"
        )));
    }

    let mut passes: Vec<AggregationPass> = Vec::new();
    let mut level_data = data.clone();
    let mut level_sizes: Vec<usize> = vec![1; n];
    // Owned graph/embedding for coarse levels; the first pass borrows the
    // caller's.
    let mut owned: Option<(SparseGraph, SpectralEmbedding)> = None;

    while level_data.n_samples() > target {
        let n_cur = level_data.n_samples();
        let pass_target = target.max(n_cur.div_ceil(2));
        let (cur_g, cur_emb) = match &owned {
            Some((og, oe)) => (og, oe),
            None => (g, emb),
        };
        let pass = aggregate_pass(cur_emb, cur_g, pass_target)?;
        let (next_data, next_sizes) = weighted_means(&level_data, &level_sizes, &pass)?;
        passes.push(pass);
        level_data = next_data;
        level_sizes = next_sizes;

        if level_data.n_samples() > target {
            let n_next = level_data.n_samples();
            let k_eff = knn_k.min(n_next - 1).max(1);
            let next_g = build_knn_graph(&level_data, k_eff, Weighting::Gaussian)?;
            let r_eff = r.min(n_next - 2).max(1);
            let next_emb = embed(&laplacian(&next_g), r_eff, seed)?;
            owned = Some((next_g, next_emb));
        }
    }

    let map = AssignmentMap::new(passes, n, level_data.n_samples())?;
    debug_assert_eq!(map.cumulative_sizes(), &level_sizes[..]);
    Ok(CompressionHierarchy {
        map,
        pseudo_samples: level_data,
    })
}

/// Size-weighted aggregate means: output row j is the mean of all original
/// points mapped into aggregate j, carried exactly through multiple passes.
fn weighted_means(
    data: &DataMatrix,
    sizes: &[usize],
    pass: &AggregationPass,
) -> Result<(DataMatrix, Vec<usize>)> {
    let d = data.n_features();
    let n_out = pass.n_out();
    let mut sums = vec![0.0f64; n_out * d];
    let mut weight = vec![0usize; n_out];
    for (i, &a) in pass.assignment().iter().enumerate() {
        let w = sizes[i] as f64;
        let row = data.row(i);
        let acc = &mut sums[a * d..(a + 1) * d];
        for (s, v) in acc.iter_mut().zip(row) {
            *s += w * v;
        }
        weight[a] += sizes[i];
    }
    for (a, &w) in weight.iter().enumerate() {
        let inv = 1.0 / w as f64;
        for s in &mut sums[a * d..(a + 1) * d] {
            *s *= inv;
        }
    }
    Ok((DataMatrix::from_vec(n_out, d, sums)?, weight))
}
