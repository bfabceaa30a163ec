use std::time::Instant;

use spectral_dbscan::dataset::make_two_moons;
use spectral_dbscan::dbscan::{suggest_eps, DbscanParams};
use spectral_dbscan::eval::{run_pipeline, PipelineConfig};
use spectral_dbscan::graph::{build_knn_graph, laplacian, Weighting};

fn main() {
    let n = 20_000;
    let (data, truth) = make_two_moons(n, 0.05, 42).unwrap();

    let t = Instant::now();
    let g = build_knn_graph(&data, 10, Weighting::Gaussian).unwrap();
    println!("knn graph: {:.2}s, edges {}", t.elapsed().as_secs_f64(), g.n_edges());

    let t = Instant::now();
    let l = laplacian(&g);
    println!("laplacian: {:.2}s", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let emb = spectral_dbscan::embedding::embed(&l, 25, 0).unwrap();
    println!(
        "embed r=25: {:.2}s, eigenvalues[0..4] {:?}",
        t.elapsed().as_secs_f64(),
        &emb.eigenvalues()[..4]
    );

    let t = Instant::now();
    let eps = suggest_eps(&data, 10, 90.0).unwrap();
    println!("kdist eps: {eps} ({:.2}s)", t.elapsed().as_secs_f64());

    let params = DbscanParams::new(eps, 10).unwrap();
    for ratio in [1.0, 10.0] {
        let mut cfg = PipelineConfig::new(ratio, params);
        cfg.seed = 42;
        let t = Instant::now();
        let (labels, record) = run_pipeline(&data, Some(&truth), &cfg, "moons").unwrap();
        println!(
            "ratio {ratio}: acc {:?} compress {:.2}s dbscan {:.3}s total {:.2}s clusters {} noise {} ({:.2}s wall)",
            record.accuracy_pct,
            record.compress_seconds,
            record.dbscan_seconds,
            record.total_seconds,
            labels.n_clusters(),
            labels.n_noise(),
            t.elapsed().as_secs_f64()
        );
    }
}
