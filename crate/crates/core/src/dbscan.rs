//! Exact, deterministic DBSCAN: range queries, core-point identification,
//! cluster expansion over the core graph, border/noise classification.
//!
//! Classic DBSCAN leaves border assignment and cluster numbering order
//! dependent; here border ties resolve to the lowest-indexed claiming core
//! point and clusters are numbered by ascending lowest core index, so the
//! output is a pure function of the input.

use std::io::Write;

use crate::dataset::DataMatrix;
use crate::graph::knn_lists;
use crate::{Error, Result};

/// Cluster id of points that belong to no cluster.
pub const NOISE: i64 = -1;

/// Radius and density threshold; `min_pts` counts the query point itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    eps: f64,
    min_pts: usize,
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive and finite, got {eps}"
            )));
        }
        if min_pts < 1 {
            return Err(Error::InvalidParameter("min_pts must be at least 1".into()));
        }
        Ok(Self { eps, min_pts })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn min_pts(&self) -> usize {
        self.min_pts
    }
}

/// Per-point cluster ids: `0..n_clusters` with no gaps, or [`NOISE`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<i64>,
    n_clusters: usize,
}

impl ClusterLabels {
    /// Validates that cluster ids are exactly `{0, ..., n_clusters - 1}`
    /// (each one present) and that the only negative label is the sentinel.
    pub fn new(labels: Vec<i64>, n_clusters: usize) -> Result<Self> {
        let mut seen = vec![false; n_clusters];
        for &l in &labels {
            if l == NOISE {
                continue;
            }
            if l < 0 || l as usize >= n_clusters {
                return Err(Error::Consistency(format!(
                    "label {l} outside 0..{n_clusters}"
                )));
            }
            seen[l as usize] = true;
        }
        if let Some(gap) = seen.iter().position(|&s| !s) {
            return Err(Error::Consistency(format!("cluster id {gap} is empty")));
        }
        Ok(Self { labels, n_clusters })
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_noise(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    /// Single-column CSV: one id per line, -1 for noise.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        for l in &self.labels {
            writeln!(out, "{l}")?;
        }
        Ok(())
    }
}

/// All indices j (including i) with |x_i - x_j| <= eps, ascending.
pub fn region_query(data: &DataMatrix, i: usize, eps: f64) -> Vec<usize> {
    let eps_sq = eps * eps;
    let xi = data.row(i);
    (0..data.n_samples())
        .filter(|&j| crate::dataset::dist_sq(xi, data.row(j)) <= eps_sq)
        .collect()
}

/// Plain DBSCAN; every point carries weight 1.
pub fn dbscan(data: &DataMatrix, p: &DbscanParams) -> ClusterLabels {
    dbscan_impl(data, p, None)
}

/// Size-weighted DBSCAN for compressed pseudo-samples: the neighborhood
/// density of point i is the sum of the weights inside it, so a pseudo-sample
/// counts for all the original points it aggregates.
pub fn dbscan_weighted(
    data: &DataMatrix,
    p: &DbscanParams,
    weights: &[usize],
) -> Result<ClusterLabels> {
    if weights.len() != data.n_samples() {
        return Err(Error::Consistency(format!(
            "{} weights for {} samples",
            weights.len(),
            data.n_samples()
        )));
    }
    if weights.iter().any(|&w| w == 0) {
        return Err(Error::InvalidParameter("point weights must be positive".into()));
    }
    Ok(dbscan_impl(data, p, Some(weights)))
}

fn dbscan_impl(data: &DataMatrix, p: &DbscanParams, weights: Option<&[usize]>) -> ClusterLabels {
    let n = data.n_samples();
    let eps_sq = p.eps * p.eps;

    // One range query per point, cached; expansion reuses the lists.
    let mut neighbors: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut core = vec![false; n];
    for i in 0..n {
        let xi = data.row(i);
        let mut list = Vec::new();
        let mut mass = 0usize;
        for j in 0..n {
            if crate::dataset::dist_sq(xi, data.row(j)) <= eps_sq {
                list.push(j as u32);
                mass += weights.map_or(1, |w| w[j]);
            }
        }
        core[i] = mass >= p.min_pts;
        neighbors.push(list);
    }

    // Clusters are connected components of the core-core proximity graph,
    // discovered from ascending seeds so ids follow the lowest core index.
    let mut labels = vec![NOISE; n];
    let mut n_clusters = 0usize;
    let mut queue: Vec<usize> = Vec::new();
    for seed in 0..n {
        if !core[seed] || labels[seed] != NOISE {
            continue;
        }
        let cluster = n_clusters as i64;
        n_clusters += 1;
        labels[seed] = cluster;
        queue.push(seed);
        while let Some(v) = queue.pop() {
            for &q in &neighbors[v] {
                let q = q as usize;
                if core[q] && labels[q] == NOISE {
                    labels[q] = cluster;
                    queue.push(q);
                }
            }
        }
    }

    // Border points join the cluster of the lowest-indexed core point in
    // range; the neighbor lists are ascending, so the first core hit wins.
    for j in 0..n {
        if core[j] {
            continue;
        }
        for &v in &neighbors[j] {
            let v = v as usize;
            if core[v] {
                labels[j] = labels[v];
                break;
            }
        }
    }

    ClusterLabels { labels, n_clusters }
}

/// Epsilon heuristic: the nearest-rank percentile of the distribution of
/// each point's distance to its k-th nearest neighbor.
pub fn suggest_eps(data: &DataMatrix, k: usize, percentile: f64) -> Result<f64> {
    let n = data.n_samples();
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::InvalidParameter(format!(
            "percentile must lie in (0, 100], got {percentile}"
        )));
    }
    let (_, dists) = knn_lists(data, k)?;
    let mut kth: Vec<f64> = (0..n).map(|i| dists[i * k + (k - 1)].sqrt()).collect();
    kth.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((percentile / 100.0 * n as f64).ceil() as usize).max(1);
    Ok(kth[rank - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::random_matrix;

    fn matrix_1d(values: &[f64]) -> DataMatrix {
        DataMatrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    /// Independent transcription of the three DBSCAN steps: adjacency by
    /// full distance matrix, clusters by union-find over core pairs, border
    /// points to the lowest-indexed claiming core, ids by lowest core index.
    fn naive_dbscan(data: &DataMatrix, eps: f64, min_pts: usize) -> (Vec<bool>, Vec<i64>) {
        let n = data.n_samples();
        let eps_sq = eps * eps;
        let within = |i: usize, j: usize| data.dist_sq(i, j) <= eps_sq;
        let core: Vec<bool> = (0..n)
            .map(|i| (0..n).filter(|&j| within(i, j)).count() >= min_pts)
            .collect();

        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if core[i] && core[j] && within(i, j) {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }

        let mut labels = vec![NOISE; n];
        let mut next = 0i64;
        let mut cluster_of_root = std::collections::HashMap::new();
        for i in 0..n {
            if core[i] {
                let root = find(&mut parent, i);
                let id = *cluster_of_root.entry(root).or_insert_with(|| {
                    let id = next;
                    next += 1;
                    id
                });
                labels[i] = id;
            }
        }
        for j in 0..n {
            if !core[j] {
                for i in 0..n {
                    if core[i] && within(i, j) {
                        labels[j] = labels[i];
                        break;
                    }
                }
            }
        }
        (core, labels)
    }

    #[test]
    fn region_query_examples() {
        let data = matrix_1d(&[0.0, 1.0, 2.0, 10.0]);
        assert_eq!(region_query(&data, 1, 1.5), vec![0, 1, 2]);
        assert_eq!(region_query(&data, 3, 0.5), vec![3]);
        let same = matrix_1d(&[7.0, 7.0, 7.0]);
        assert_eq!(region_query(&same, 0, 0.1), vec![0, 1, 2]);
    }

    #[test]
    fn two_clusters_and_noise() {
        let data = matrix_1d(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0, 50.0]);
        let p = DbscanParams::new(1.5, 3).unwrap();
        let out = dbscan(&data, &p);
        assert_eq!(out.labels(), &[0, 0, 0, 1, 1, 1, NOISE]);
        assert_eq!(out.n_clusters(), 2);
    }

    #[test]
    fn identical_points_single_cluster() {
        let data = matrix_1d(&[3.0; 8]);
        let p = DbscanParams::new(0.5, 8).unwrap();
        let out = dbscan(&data, &p);
        assert_eq!(out.labels(), &[0; 8]);
    }

    #[test]
    fn min_pts_above_n_all_noise() {
        let data = matrix_1d(&[0.0, 0.1, 0.2]);
        let p = DbscanParams::new(10.0, 4).unwrap();
        let out = dbscan(&data, &p);
        assert_eq!(out.labels(), &[NOISE, NOISE, NOISE]);
        assert_eq!(out.n_clusters(), 0);
    }

    #[test]
    fn matches_naive_reference() {
        for seed in 0..6u64 {
            let n = 40 + (seed as usize) * 30;
            let d = if seed % 2 == 0 { 2 } else { 16 };
            let data = random_matrix(n, d, 0.0, 1.0, seed);
            for eps in [0.05, 0.2, 0.6] {
                for min_pts in [2usize, 4, 8] {
                    let p = DbscanParams::new(eps, min_pts).unwrap();
                    let ours = dbscan(&data, &p);
                    let (_, naive) = naive_dbscan(&data, eps, min_pts);
                    assert_eq!(ours.labels(), &naive[..], "n={n} eps={eps} mp={min_pts}");
                }
            }
        }
    }

    #[test]
    fn core_set_monotone_in_eps() {
        let data = random_matrix(120, 2, 0.0, 1.0, 3);
        let count_core = |eps: f64| {
            (0..120)
                .filter(|&i| region_query(&data, i, eps).len() >= 4)
                .collect::<Vec<_>>()
        };
        let mut prev: Vec<usize> = Vec::new();
        for eps in [0.02, 0.05, 0.1, 0.2, 0.4] {
            let cur = count_core(eps);
            assert!(prev.iter().all(|i| cur.contains(i)));
            prev = cur;
        }
    }

    #[test]
    fn permutation_equivariant_partitions() {
        use rand::seq::SliceRandom;
        let data = random_matrix(90, 2, 0.0, 1.0, 8);
        let p = DbscanParams::new(0.12, 4).unwrap();
        let base = dbscan(&data, &p);

        let mut rng = crate::dataset::seeded_rng(99);
        let mut perm: Vec<usize> = (0..90).collect();
        perm.shuffle(&mut rng);
        let rows: Vec<Vec<f64>> = perm.iter().map(|&i| data.row(i).to_vec()).collect();
        let shuffled = DataMatrix::from_rows(&rows).unwrap();
        let out = dbscan(&shuffled, &p);

        // Same noise set and the same partition of original indices.
        let canon = |labels: &[i64], back: &dyn Fn(usize) -> usize| {
            let mut groups: std::collections::HashMap<i64, Vec<usize>> = Default::default();
            let mut noise = Vec::new();
            for (pos, &l) in labels.iter().enumerate() {
                let orig = back(pos);
                if l == NOISE {
                    noise.push(orig);
                } else {
                    groups.entry(l).or_default().push(orig);
                }
            }
            let mut parts: Vec<Vec<usize>> = groups
                .into_values()
                .map(|mut g| {
                    g.sort();
                    g
                })
                .collect();
            parts.sort();
            noise.sort();
            (parts, noise)
        };
        let identity = |pos: usize| pos;
        let unshuffle = |pos: usize| perm[pos];
        assert_eq!(canon(base.labels(), &identity), canon(out.labels(), &unshuffle));
    }

    #[test]
    fn border_points_within_eps_of_their_cluster() {
        let data = random_matrix(150, 2, 0.0, 1.0, 21);
        let p = DbscanParams::new(0.1, 5).unwrap();
        let out = dbscan(&data, &p);
        let core: Vec<bool> = (0..150)
            .map(|i| region_query(&data, i, 0.1).len() >= 5)
            .collect();
        for j in 0..150 {
            if !core[j] && out.labels()[j] != NOISE {
                let attached = region_query(&data, j, 0.1)
                    .into_iter()
                    .any(|i| core[i] && out.labels()[i] == out.labels()[j]);
                assert!(attached, "border point {j} detached from its cluster");
            }
        }
    }

    #[test]
    fn weighted_counts_use_aggregate_sizes() {
        // Two points 0.5 apart; alone neither reaches min_pts = 5, but with
        // weight 4 the pair is dense enough.
        let data = matrix_1d(&[0.0, 0.5]);
        let p = DbscanParams::new(1.0, 5).unwrap();
        assert_eq!(dbscan(&data, &p).n_clusters(), 0);
        let weighted = dbscan_weighted(&data, &p, &[4, 4]).unwrap();
        assert_eq!(weighted.labels(), &[0, 0]);
        assert!(dbscan_weighted(&data, &p, &[1]).is_err());
    }

    #[test]
    fn suggest_eps_examples() {
        let data = matrix_1d(&[0.0, 3.0]);
        assert_eq!(suggest_eps(&data, 1, 100.0).unwrap(), 3.0);
        assert!(suggest_eps(&data, 1, 0.0).is_err());
        assert!(suggest_eps(&data, 2, 50.0).is_err());
    }

    #[test]
    fn suggest_eps_median_matches_sort_oracle() {
        // 5x5 unit grid.
        let mut rows = Vec::new();
        for x in 0..5 {
            for y in 0..5 {
                rows.push(vec![x as f64, y as f64]);
            }
        }
        let data = DataMatrix::from_rows(&rows).unwrap();
        let k = 3;
        let suggested = suggest_eps(&data, k, 50.0).unwrap();

        let mut kth: Vec<f64> = (0..25)
            .map(|i| {
                let mut d: Vec<f64> = (0..25)
                    .filter(|&j| j != i)
                    .map(|j| data.dist_sq(i, j).sqrt())
                    .collect();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                d[k - 1]
            })
            .collect();
        kth.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = (0.5f64 * 25.0).ceil() as usize;
        assert_eq!(suggested, kth[rank - 1]);
    }

    #[test]
    fn labels_validate_gapless_ids() {
        assert!(ClusterLabels::new(vec![0, 2], 3).is_err());
        assert!(ClusterLabels::new(vec![0, 1, NOISE], 2).is_ok());
        assert!(ClusterLabels::new(vec![-2], 0).is_err());
    }

    #[test]
    fn labels_csv_format() {
        let labels = ClusterLabels::new(vec![0, NOISE, 1], 2).unwrap();
        let mut buf = Vec::new();
        labels.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0\n-1\n1\n");
    }
}
