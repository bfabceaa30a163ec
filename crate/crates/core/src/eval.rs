//! Evaluation: Hungarian-matched clustering accuracy, the k-means contrast
//! demo, the end-to-end compression pipeline, and the benchmark sweep that
//! emits plot-ready CSV.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Instant;

use rand::Rng;

use crate::compression::compress;
use crate::dataset::{make_two_circles, make_two_moons, DataMatrix, GroundTruth};
use crate::dbscan::{dbscan, dbscan_weighted, ClusterLabels, DbscanParams, NOISE};
use crate::embedding::{embed, smallest_eigenpairs_lanczos};
use crate::graph::{build_knn_graph, laplacian, Weighting};
use crate::{Error, Result};

/// Minimum-cost perfect assignment on a square cost matrix (Kuhn-Munkres
/// with potentials, O(n^3)). Returns the column assigned to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Vec<usize>> {
    let n = cost.len();
    for row in cost {
        if row.len() != n {
            return Err(Error::InvalidParameter(format!(
                "cost matrix is not square: row of length {} in an {n}-row matrix",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("cost matrix has non-finite entries".into()));
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    // 1-based arrays; p[j] is the row matched to column j, column 0 virtual.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    Ok(assignment)
}

/// Percentage of points correctly labeled under the optimal one-to-one
/// matching between predicted clusters and truth classes; noise counts as
/// one extra predicted cluster.
pub fn clustering_accuracy(pred: &ClusterLabels, truth: &GroundTruth) -> Result<f64> {
    let n = pred.len();
    if n != truth.len() {
        return Err(Error::Consistency(format!(
            "{n} predictions for {} truth labels",
            truth.len()
        )));
    }
    let has_noise = pred.labels().iter().any(|&l| l == NOISE);
    let n_pred = pred.n_clusters() + usize::from(has_noise);
    let n_true = truth.n_classes();
    let dim = n_pred.max(n_true);

    let mut contingency = vec![vec![0.0f64; dim]; dim];
    for (&l, &t) in pred.labels().iter().zip(truth.labels()) {
        let pi = if l == NOISE {
            n_pred - 1
        } else {
            l as usize
        };
        contingency[pi][t] += 1.0;
    }

    let cost: Vec<Vec<f64>> = contingency
        .iter()
        .map(|row| row.iter().map(|&c| -c).collect())
        .collect();
    let assignment = hungarian(&cost)?;
    let matched: f64 = assignment
        .iter()
        .enumerate()
        .map(|(pi, &ti)| contingency[pi][ti])
        .sum();
    Ok(100.0 * matched / n as f64)
}

/// Lloyd's algorithm from k-means++ seeding, deterministic in `seed`.
/// Stops at an assignment fixpoint or after `max_iter` rounds; an empty
/// cluster is repaired by stealing the point farthest from its centroid.
pub fn kmeans(data: &DataMatrix, k: usize, seed: u64, max_iter: usize) -> Result<ClusterLabels> {
    let n = data.n_samples();
    let d = data.n_features();
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={n}, got {k}"
        )));
    }
    let mut rng = crate::dataset::seeded_rng(seed);

    // k-means++ seeding: next center drawn proportionally to the squared
    // distance from the nearest chosen center.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(data.row(rng.gen_range(0..n)).to_vec());
    let mut nearest_sq: Vec<f64> = (0..n)
        .map(|i| crate::dataset::dist_sq(data.row(i), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = nearest_sq.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in nearest_sq.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.push(data.row(pick).to_vec());
        for i in 0..n {
            let d2 = crate::dataset::dist_sq(data.row(i), centroids.last().unwrap());
            if d2 < nearest_sq[i] {
                nearest_sq[i] = d2;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for _ in 0..max_iter.max(1) {
        let mut next = vec![0usize; n];
        let mut dist = vec![0.0f64; n];
        for i in 0..n {
            let mut best = (f64::INFINITY, 0usize);
            for (c, centroid) in centroids.iter().enumerate() {
                let d2 = crate::dataset::dist_sq(data.row(i), centroid);
                if d2 < best.0 {
                    best = (d2, c);
                }
            }
            next[i] = best.1;
            dist[i] = best.0;
        }

        // Repair empty clusters with the worst-fitting point.
        let mut counts = vec![0usize; k];
        for &a in &next {
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut worst = (f64::NEG_INFINITY, 0usize);
            for i in 0..n {
                if counts[next[i]] > 1 && dist[i] > worst.0 {
                    worst = (dist[i], i);
                }
            }
            let stolen = worst.1;
            counts[next[stolen]] -= 1;
            next[stolen] = c;
            counts[c] = 1;
            dist[stolen] = 0.0;
        }

        let fixpoint = next == assign;
        assign = next;
        // Update centroids to cluster means.
        let mut sums = vec![vec![0.0f64; d]; k];
        for i in 0..n {
            for (s, x) in sums[assign[i]].iter_mut().zip(data.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            let count = counts[c] as f64;
            for s in sums[c].iter_mut() {
                *s /= count;
            }
        }
        centroids = sums;
        if fixpoint {
            break;
        }
    }

    let labels: Vec<i64> = assign.iter().map(|&a| a as i64).collect();
    ClusterLabels::new(labels, k)
}

/// Synthetic dataset flavor for the spectral-vs-raw contrast demo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoKind {
    TwoMoons,
    TwoCircles,
}

impl DemoKind {
    pub fn name(&self) -> &'static str {
        match self {
            DemoKind::TwoMoons => "two_moons",
            DemoKind::TwoCircles => "two_circles",
        }
    }
}

/// Accuracies of k-means in the raw and spectral feature spaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoResult {
    pub raw_accuracy: f64,
    pub spectral_accuracy: f64,
}

const DEMO_NOISE_SIGMA: f64 = 0.05;
const DEMO_CIRCLE_FACTOR: f64 = 0.5;
const DEMO_KNN_K: usize = 10;

/// Runs k-means with two clusters on (a) the raw coordinates and (b) the
/// coordinates given by the two smallest Laplacian eigenvectors of the kNN
/// graph (component indicators included, so disconnected clusters separate),
/// then writes both label files and reports both accuracies.
pub fn spectral_vs_raw_demo(
    kind: DemoKind,
    n: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<DemoResult> {
    if n < 20 {
        return Err(Error::InvalidParameter(format!(
            "demo needs n >= 20, got {n}"
        )));
    }
    let (data, truth) = match kind {
        DemoKind::TwoMoons => make_two_moons(n, DEMO_NOISE_SIGMA, seed)?,
        DemoKind::TwoCircles => make_two_circles(n, DEMO_NOISE_SIGMA, DEMO_CIRCLE_FACTOR, seed)?,
    };

    let raw_labels = kmeans(&data, 2, seed, 300)?;
    let raw_accuracy = clustering_accuracy(&raw_labels, &truth)?;

    let g = build_knn_graph(&data, DEMO_KNN_K.min(n - 1), Weighting::Gaussian)?;
    let l = laplacian(&g);
    let (_, vectors) = smallest_eigenpairs_lanczos(&l, 2, 1e-7, n - 1, seed)?;
    let mut coords = Vec::with_capacity(n * 2);
    for u in 0..n {
        coords.push(vectors[0][u]);
        coords.push(vectors[1][u]);
    }
    let spectral_data = DataMatrix::from_vec(n, 2, coords)?;
    let spectral_labels = kmeans(&spectral_data, 2, seed, 300)?;
    let spectral_accuracy = clustering_accuracy(&spectral_labels, &truth)?;

    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut raw_file = fs::File::create(dir.join(format!("{}_raw_labels.csv", kind.name())))?;
    raw_labels.write_csv(&mut raw_file)?;
    let mut spectral_file =
        fs::File::create(dir.join(format!("{}_spectral_labels.csv", kind.name())))?;
    spectral_labels.write_csv(&mut spectral_file)?;

    Ok(DemoResult {
        raw_accuracy,
        spectral_accuracy,
    })
}

/// Knobs for one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Compression ratio; 1 bypasses compression entirely.
    pub ratio: f64,
    pub params: DbscanParams,
    /// kNN graph degree.
    pub k: usize,
    /// Embedding dimension (capped per level as the set shrinks).
    pub r: usize,
    pub seed: u64,
    /// Count aggregate sizes instead of pseudo-sample multiplicity 1 in the
    /// density test.
    pub weighted_min_pts: bool,
}

impl PipelineConfig {
    pub fn new(ratio: f64, params: DbscanParams) -> Self {
        Self {
            ratio,
            params,
            k: 10,
            r: 25,
            seed: 0,
            weighted_min_pts: false,
        }
    }
}

/// One row of the benchmark output.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub dataset_name: String,
    pub ratio: f64,
    pub n_original: usize,
    pub n_compressed: usize,
    pub accuracy_pct: Option<f64>,
    pub compress_seconds: f64,
    pub dbscan_seconds: f64,
    pub total_seconds: f64,
    pub eps: f64,
    pub min_pts: usize,
    pub k: usize,
    pub r: usize,
}

impl BenchmarkRecord {
    pub fn validate(&self) -> Result<()> {
        if self.n_compressed > self.n_original {
            return Err(Error::Consistency(format!(
                "n_compressed {} exceeds n_original {}",
                self.n_compressed, self.n_original
            )));
        }
        if self.compress_seconds < 0.0 || self.dbscan_seconds < 0.0 || self.total_seconds < 0.0 {
            return Err(Error::Consistency("negative timing".into()));
        }
        if let Some(acc) = self.accuracy_pct {
            if !(0.0..=100.0).contains(&acc) {
                return Err(Error::Consistency(format!("accuracy {acc} outside [0, 100]")));
            }
        }
        Ok(())
    }
}

/// End-to-end run: at ratio 1 plain DBSCAN on the input, otherwise
/// graph -> embedding -> compression -> DBSCAN on pseudo-samples -> label
/// projection. Compression and DBSCAN are timed separately.
pub fn run_pipeline(
    data: &DataMatrix,
    truth: Option<&GroundTruth>,
    cfg: &PipelineConfig,
    dataset_name: &str,
) -> Result<(ClusterLabels, BenchmarkRecord)> {
    if !(cfg.ratio >= 1.0) || !cfg.ratio.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ratio must be >= 1, got {}",
            cfg.ratio
        )));
    }
    let n = data.n_samples();
    let started = Instant::now();

    let (labels, n_compressed, compress_seconds, dbscan_seconds) = if cfg.ratio == 1.0 {
        let t = Instant::now();
        let labels = dbscan(data, &cfg.params);
        (labels, n, 0.0, t.elapsed().as_secs_f64())
    } else {
        let t = Instant::now();
        let k = cfg.k.min(n - 1).max(1);
        let g = build_knn_graph(data, k, Weighting::Gaussian)?;
        let r = cfg.r.min(n.saturating_sub(2)).max(1);
        let emb = embed(&laplacian(&g), r, cfg.seed)?;
        let hierarchy = compress(data, &emb, &g, cfg.ratio, k, r, cfg.seed)?;
        let compress_seconds = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let compressed_labels = if cfg.weighted_min_pts {
            dbscan_weighted(
                hierarchy.pseudo_samples(),
                &cfg.params,
                hierarchy.cumulative_sizes(),
            )?
        } else {
            dbscan(hierarchy.pseudo_samples(), &cfg.params)
        };
        let dbscan_seconds = t.elapsed().as_secs_f64();
        let labels = hierarchy.project_labels(&compressed_labels)?;
        (labels, hierarchy.n_final(), compress_seconds, dbscan_seconds)
    };

    let accuracy_pct = match truth {
        Some(t) => Some(clustering_accuracy(&labels, t)?),
        None => None,
    };
    let record = BenchmarkRecord {
        dataset_name: dataset_name.to_string(),
        ratio: cfg.ratio,
        n_original: n,
        n_compressed,
        accuracy_pct,
        compress_seconds,
        dbscan_seconds,
        total_seconds: started.elapsed().as_secs_f64(),
        eps: cfg.params.eps(),
        min_pts: cfg.params.min_pts(),
        k: cfg.k,
        r: cfg.r,
    };
    record.validate()?;
    Ok((labels, record))
}

/// Fixed CSV schema of the benchmark output.
pub const BENCHMARK_CSV_HEADER: &str =
    "dataset,ratio,n_orig,n_comp,acc_pct,compress_s,dbscan_s,total_s,eps,min_pts,k,r";

/// Runs the pipeline once per ratio (sequentially, so timings do not
/// contend) and returns one record per ratio.
pub fn benchmark_sweep(
    data: &DataMatrix,
    truth: Option<&GroundTruth>,
    ratios: &[f64],
    base: &PipelineConfig,
    dataset_name: &str,
) -> Result<Vec<BenchmarkRecord>> {
    if ratios.is_empty() {
        return Err(Error::InvalidParameter("ratio list is empty".into()));
    }
    if let Some(bad) = ratios.iter().find(|&&r| !(r >= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "every ratio must be >= 1, got {bad}"
        )));
    }
    let mut records = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let cfg = PipelineConfig { ratio, ..*base };
        let (_, record) = run_pipeline(data, truth, &cfg, dataset_name)?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records under the frozen `BENCHMARK_CSV_HEADER` schema; a missing
/// accuracy becomes an empty field.
pub fn write_benchmark_csv(records: &[BenchmarkRecord], mut out: impl Write) -> Result<()> {
    writeln!(out, "{BENCHMARK_CSV_HEADER}")?;
    for r in records {
        let acc = r.accuracy_pct.map_or(String::new(), |a| a.to_string());
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.dataset_name,
            r.ratio,
            r.n_original,
            r.n_compressed,
            acc,
            r.compress_seconds,
            r.dbscan_seconds,
            r.total_seconds,
            r.eps,
            r.min_pts,
            r.k,
            r.r
        )?;
    }
    Ok(())
}

/// Reads the benchmark CSV back into records.
pub fn read_benchmark_csv(reader: impl BufRead) -> Result<Vec<BenchmarkRecord>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Format("empty benchmark CSV".into()))?;
    if header.trim() != BENCHMARK_CSV_HEADER {
        return Err(Error::Format(format!("unexpected header {header:?}")));
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 12 fields, found {}", fields.len()),
            });
        }
        let parse_f64 = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{s:?} is not a number"),
            })
        };
        let parse_usize = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{s:?} is not an integer"),
            })
        };
        let accuracy_pct = if fields[4].is_empty() {
            None
        } else {
            Some(parse_f64(fields[4])?)
        };
        let record = BenchmarkRecord {
            dataset_name: fields[0].to_string(),
            ratio: parse_f64(fields[1])?,
            n_original: parse_usize(fields[2])?,
            n_compressed: parse_usize(fields[3])?,
            accuracy_pct,
            compress_seconds: parse_f64(fields[5])?,
            dbscan_seconds: parse_f64(fields[6])?,
            total_seconds: parse_f64(fields[7])?,
            eps: parse_f64(fields[8])?,
            min_pts: parse_usize(fields[9])?,
            k: parse_usize(fields[10])?,
            r: parse_usize(fields[11])?,
        };
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::random_matrix;

    fn brute_force_min_cost(cost: &[Vec<f64>]) -> f64 {
        let n = cost.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p: &[usize]| {
            let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            if total < best {
                best = total;
            }
        });
        best
    }

    fn permute(items: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
        if at == items.len() {
            visit(items);
            return;
        }
        for i in at..items.len() {
            items.swap(at, i);
            permute(items, at + 1, visit);
            items.swap(at, i);
        }
    }

    #[test]
    fn hungarian_examples() {
        let a = hungarian(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(a, vec![0, 1]);
        let b = hungarian(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(b, vec![1, 0]);
        assert!(hungarian(&[vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn hungarian_matches_exhaustive_search() {
        let mut rng = crate::dataset::seeded_rng(41);
        for trial in 0..60 {
            let n = 2 + trial % 5;
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(0..40) as f64).collect())
                .collect();
            let assignment = hungarian(&cost).unwrap();
            let total: f64 = assignment
                .iter()
                .enumerate()
                .map(|(i, &j)| cost[i][j])
                .sum();
            assert_eq!(total, brute_force_min_cost(&cost), "matrix {cost:?}");
            let mut seen = vec![false; n];
            for &j in &assignment {
                assert!(!seen[j]);
                seen[j] = true;
            }
        }
    }

    #[test]
    fn accuracy_permutation_invariant() {
        let truth = GroundTruth::new(vec![0, 0, 1, 1, 2, 2]).unwrap();
        let pred = ClusterLabels::new(vec![2, 2, 0, 0, 1, 1], 3).unwrap();
        assert_eq!(clustering_accuracy(&pred, &truth).unwrap(), 100.0);
    }

    #[test]
    fn accuracy_single_cluster_half() {
        let truth = GroundTruth::new(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]).unwrap();
        let pred = ClusterLabels::new(vec![0; 10], 1).unwrap();
        assert_eq!(clustering_accuracy(&pred, &truth).unwrap(), 50.0);
    }

    #[test]
    fn accuracy_all_noise_matches_larger_class() {
        let truth = GroundTruth::new(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]).unwrap();
        let pred = ClusterLabels::new(vec![NOISE; 10], 0).unwrap();
        assert_eq!(clustering_accuracy(&pred, &truth).unwrap(), 50.0);
    }

    #[test]
    fn accuracy_rejects_length_mismatch() {
        let truth = GroundTruth::new(vec![0, 1]).unwrap();
        let pred = ClusterLabels::new(vec![0], 1).unwrap();
        assert!(clustering_accuracy(&pred, &truth).is_err());
    }

    #[test]
    fn kmeans_groups_separated_pairs() {
        let data = DataMatrix::from_vec(
            4,
            2,
            vec![0.0, 0.0, 0.1, 0.0, 10.0, 10.0, 10.1, 10.0],
        )
        .unwrap();
        let out = kmeans(&data, 2, 0, 100).unwrap();
        assert_eq!(out.labels()[0], out.labels()[1]);
        assert_eq!(out.labels()[2], out.labels()[3]);
        assert_ne!(out.labels()[0], out.labels()[2]);
    }

    #[test]
    fn kmeans_k_equals_n() {
        let data = random_matrix(6, 2, -1.0, 1.0, 4);
        let out = kmeans(&data, 6, 1, 50).unwrap();
        let mut ids: Vec<i64> = out.labels().to_vec();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn kmeans_k1_centroid_is_mean() {
        let data = random_matrix(30, 3, -2.0, 2.0, 9);
        let out = kmeans(&data, 1, 0, 50).unwrap();
        assert!(out.labels().iter().all(|&l| l == 0));
        // With one cluster every point is assigned to the global mean.
        assert_eq!(out.n_clusters(), 1);
    }

    #[test]
    fn kmeans_rejects_k_over_n() {
        let data = random_matrix(3, 2, 0.0, 1.0, 0);
        assert!(kmeans(&data, 4, 0, 10).is_err());
    }

    #[test]
    fn pipeline_ratio_one_is_plain_dbscan() {
        let data = random_matrix(60, 2, 0.0, 1.0, 12);
        let params = DbscanParams::new(0.15, 4).unwrap();
        let cfg = PipelineConfig::new(1.0, params);
        let (labels, record) = run_pipeline(&data, None, &cfg, "rand").unwrap();
        let direct = dbscan(&data, &params);
        assert_eq!(labels, direct);
        assert_eq!(record.n_compressed, 60);
        assert_eq!(record.compress_seconds, 0.0);
        assert!(record.accuracy_pct.is_none());
    }

    #[test]
    fn pipeline_merges_duplicates_like_dedup_run() {
        // Every point duplicated once and k = 1: each point's sole neighbor
        // is its duplicate, so compressing 2x merges exactly the duplicate
        // pairs and projected labels equal the dedup run's labels, doubled.
        let base = random_matrix(40, 2, 0.0, 1.0, 33);
        let mut rows = Vec::new();
        for row in base.rows() {
            rows.push(row.to_vec());
            rows.push(row.to_vec());
        }
        let doubled = DataMatrix::from_rows(&rows).unwrap();

        let params = DbscanParams::new(0.2, 3).unwrap();
        let mut cfg = PipelineConfig::new(2.0, params);
        cfg.k = 1;
        cfg.r = 8;
        let (labels, record) = run_pipeline(&doubled, None, &cfg, "dup").unwrap();
        assert_eq!(record.n_compressed, 40);

        let dedup = dbscan(&base, &params);
        for i in 0..40 {
            assert_eq!(labels.labels()[2 * i], dedup.labels()[i]);
            assert_eq!(labels.labels()[2 * i + 1], dedup.labels()[i]);
        }
    }

    #[test]
    fn sweep_produces_expected_counts() {
        let data = random_matrix(100, 2, 0.0, 1.0, 21);
        let params = DbscanParams::new(0.2, 4).unwrap();
        let mut base = PipelineConfig::new(1.0, params);
        base.k = 6;
        base.r = 6;
        let records =
            benchmark_sweep(&data, None, &[1.0, 2.0, 5.0, 10.0], &base, "rand").unwrap();
        assert_eq!(records.len(), 4);
        for (record, expect) in records.iter().zip([100usize, 50, 20, 10]) {
            assert_eq!(record.n_compressed, expect);
            record.validate().unwrap();
        }
    }

    #[test]
    fn benchmark_csv_round_trips() {
        let records = vec![
            BenchmarkRecord {
                dataset_name: "moons".into(),
                ratio: 2.0,
                n_original: 100,
                n_compressed: 50,
                accuracy_pct: Some(97.5),
                compress_seconds: 0.125,
                dbscan_seconds: 0.0625,
                total_seconds: 0.25,
                eps: 0.1,
                min_pts: 5,
                k: 10,
                r: 25,
            },
            BenchmarkRecord {
                dataset_name: "blobs".into(),
                ratio: 1.0,
                n_original: 100,
                n_compressed: 100,
                accuracy_pct: None,
                compress_seconds: 0.0,
                dbscan_seconds: 0.5,
                total_seconds: 0.5,
                eps: 0.2,
                min_pts: 4,
                k: 10,
                r: 25,
            },
        ];
        let mut buf = Vec::new();
        write_benchmark_csv(&records, &mut buf).unwrap();
        let restored = read_benchmark_csv(&buf[..]).unwrap();
        assert_eq!(restored, records);
    }

    #[test]
    fn demo_files_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = spectral_vs_raw_demo(DemoKind::TwoCircles, 120, 5, dir.path().join("a")).unwrap();
        let b = spectral_vs_raw_demo(DemoKind::TwoCircles, 120, 5, dir.path().join("b")).unwrap();
        assert_eq!(a, b);
        let fa = fs::read(dir.path().join("a/two_circles_raw_labels.csv")).unwrap();
        let fb = fs::read(dir.path().join("b/two_circles_raw_labels.csv")).unwrap();
        assert_eq!(fa, fb);
        let sa = fs::read(dir.path().join("a/two_circles_spectral_labels.csv")).unwrap();
        let sb = fs::read(dir.path().join("b/two_circles_spectral_labels.csv")).unwrap();
        assert_eq!(sa, sb);
    }
}
