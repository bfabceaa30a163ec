//! Command-line front end: DBSCAN, spectral compression, the end-to-end
//! pipeline, benchmark sweeps, the k-distance epsilon heuristic, and the
//! spectral-vs-raw k-means demo.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
//! failure (eigensolver non-convergence).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spectral_dbscan::compression::compress;
use spectral_dbscan::dataset::{
    load_csv, load_idx, load_labels_csv, standardize, DataMatrix, GroundTruth,
};
use spectral_dbscan::dbscan::{dbscan, suggest_eps, DbscanParams};
use spectral_dbscan::embedding::embed;
use spectral_dbscan::eval::{
    benchmark_sweep, run_pipeline, spectral_vs_raw_demo, write_benchmark_csv, DemoKind,
    PipelineConfig,
};
use spectral_dbscan::graph::{build_knn_graph, laplacian, Weighting};
use spectral_dbscan::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sdbscan",
    about = "DBSCAN accelerated by spectrum-preserving data compression",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run plain DBSCAN and write one cluster id per input row.
    Dbscan(DbscanArgs),
    /// Compress a dataset to pseudo-samples plus an assignment map.
    Compress(CompressArgs),
    /// Compress, cluster the pseudo-samples, project labels back.
    Pipeline(PipelineArgs),
    /// Run the pipeline across several ratios and emit a benchmark CSV.
    Sweep(SweepArgs),
    /// Print the k-distance epsilon suggestion.
    Kdist(KdistArgs),
    /// k-means on raw vs spectral coordinates for a synthetic dataset.
    Demo(DemoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Csv,
    Idx,
}

#[derive(Args)]
struct InputArgs {
    /// Data file: CSV, or the IDX image file with --format idx.
    #[arg(long)]
    input: PathBuf,

    /// Input container format.
    #[arg(long, value_enum, default_value = "csv")]
    format: InputFormat,

    /// Ground-truth labels: the IDX label file with --format idx, otherwise
    /// a single-column CSV of class ids.
    #[arg(long, alias = "truth")]
    labels: Option<PathBuf>,

    /// Treat the last CSV column as the ground-truth class id.
    #[arg(long)]
    label_column: bool,

    /// Drop the first CSV line.
    #[arg(long)]
    skip_header: bool,

    /// Shift every feature to mean 0 and unit variance before anything else.
    #[arg(long)]
    standardize: bool,
}

impl InputArgs {
    fn load(&self) -> Result<(DataMatrix, Option<GroundTruth>)> {
        let (data, truth) = match self.format {
            InputFormat::Idx => {
                let labels = self.labels.as_ref().ok_or_else(|| {
                    Error::InvalidParameter("--format idx requires --labels <path>".into())
                })?;
                let (data, truth) = load_idx(&self.input, labels)?;
                (data, Some(truth))
            }
            InputFormat::Csv => {
                if self.label_column && self.labels.is_some() {
                    return Err(Error::InvalidParameter(
                        "--label-column and --labels are mutually exclusive".into(),
                    ));
                }
                let (data, mut truth) = load_csv(&self.input, self.label_column, self.skip_header)?;
                if let Some(path) = &self.labels {
                    truth = Some(load_labels_csv(path)?);
                }
                (data, truth)
            }
        };
        if let Some(t) = &truth {
            if t.len() != data.n_samples() {
                return Err(Error::Consistency(format!(
                    "{} labels for {} samples",
                    t.len(),
                    data.n_samples()
                )));
            }
        }
        let data = if self.standardize { standardize(&data) } else { data };
        Ok((data, truth))
    }
}

#[derive(Args)]
struct DbscanArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Neighborhood radius.
    #[arg(long)]
    eps: f64,

    /// Density threshold, counting the point itself.
    #[arg(long)]
    min_pts: usize,

    /// Labels output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompressArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Compression ratio n_original / n_final (> 1).
    #[arg(long)]
    ratio: f64,

    /// kNN graph degree.
    #[arg(long, default_value_t = 10)]
    k: usize,

    /// Spectral embedding dimension.
    #[arg(long, default_value_t = 25)]
    r: usize,

    /// Eigensolver seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Pseudo-sample CSV output path.
    #[arg(long)]
    out_data: PathBuf,

    /// Assignment map output path.
    #[arg(long)]
    out_map: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Compression ratio; 1 runs plain DBSCAN.
    #[arg(long)]
    ratio: f64,

    #[arg(long)]
    eps: f64,

    #[arg(long)]
    min_pts: usize,

    #[arg(long, default_value_t = 10)]
    k: usize,

    #[arg(long, default_value_t = 25)]
    r: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Weight the density test by aggregate sizes.
    #[arg(long)]
    weighted_minpts: bool,

    /// Projected labels output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Comma-separated compression ratios, e.g. 1,2,5,10.
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<f64>,

    #[arg(long)]
    eps: f64,

    #[arg(long)]
    min_pts: usize,

    #[arg(long, default_value_t = 10)]
    k: usize,

    #[arg(long, default_value_t = 25)]
    r: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    weighted_minpts: bool,

    /// Dataset name recorded in the CSV.
    #[arg(long, default_value = "dataset")]
    dataset_name: String,

    /// Benchmark CSV output path.
    #[arg(long)]
    out_csv: PathBuf,
}

#[derive(Args)]
struct KdistArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Which nearest neighbor's distance to collect.
    #[arg(long)]
    k: usize,

    /// Nearest-rank percentile of the k-distance distribution.
    #[arg(long, default_value_t = 90.0)]
    percentile: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DemoKindArg {
    TwoMoons,
    TwoCircles,
}

#[derive(Args)]
struct DemoArgs {
    /// Synthetic dataset to generate.
    #[arg(long, value_enum)]
    kind: DemoKindArg,

    /// Number of points.
    #[arg(long, default_value_t = 500)]
    n: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Directory receiving the label files.
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) => 1,
        Error::Parse { .. } | Error::Format(_) | Error::Consistency(_) | Error::Io(_) => 2,
        Error::NonConvergence { .. } => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dbscan(args) => cmd_dbscan(args),
        Command::Compress(args) => cmd_compress(args),
        Command::Pipeline(args) => cmd_pipeline(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Kdist(args) => cmd_kdist(args),
        Command::Demo(args) => cmd_demo(args),
    }
}

fn cmd_dbscan(args: DbscanArgs) -> Result<()> {
    let (data, truth) = args.input.load()?;
    let params = DbscanParams::new(args.eps, args.min_pts)?;
    let labels = dbscan(&data, &params);
    match &args.out {
        Some(path) => {
            let mut out = BufWriter::new(fs::File::create(path)?);
            labels.write_csv(&mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            labels.write_csv(stdout.lock())?;
        }
    }
    eprintln!(
        "clusters: {}, noise points: {}",
        labels.n_clusters(),
        labels.n_noise()
    );
    if let Some(truth) = truth {
        let acc = spectral_dbscan::eval::clustering_accuracy(&labels, &truth)?;
        eprintln!("accuracy: {acc:.4}%");
    }
    Ok(())
}

fn cmd_compress(args: CompressArgs) -> Result<()> {
    let (data, _) = args.input.load()?;
    let n = data.n_samples();
    if n < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let k = args.k.min(n - 1).max(1);
    let g = build_knn_graph(&data, k, Weighting::Gaussian)?;
    let r = args.r.min(n.saturating_sub(2)).max(1);
    let emb = embed(&laplacian(&g), r, args.seed)?;
    let hierarchy = compress(&data, &emb, &g, args.ratio, k, r, args.seed)?;

    let mut out_data = BufWriter::new(fs::File::create(&args.out_data)?);
    hierarchy.pseudo_samples().write_csv(&mut out_data)?;
    out_data.flush()?;
    let mut out_map = BufWriter::new(fs::File::create(&args.out_map)?);
    hierarchy.map().write(&mut out_map)?;
    out_map.flush()?;

    eprintln!(
        "compressed {} -> {} pseudo-samples in {} passes",
        hierarchy.n_original(),
        hierarchy.n_final(),
        hierarchy.passes().len()
    );
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    let (data, truth) = args.input.load()?;
    let params = DbscanParams::new(args.eps, args.min_pts)?;
    let cfg = PipelineConfig {
        ratio: args.ratio,
        params,
        k: args.k,
        r: args.r,
        seed: args.seed,
        weighted_min_pts: args.weighted_minpts,
    };
    let name = args
        .input
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let (labels, record) = run_pipeline(&data, truth.as_ref(), &cfg, &name)?;

    let mut out = BufWriter::new(fs::File::create(&args.out)?);
    labels.write_csv(&mut out)?;
    out.flush()?;

    let acc = record
        .accuracy_pct
        .map_or(String::from("n/a"), |a| format!("{a:.4}%"));
    println!(
        "ratio {}: {} -> {} points, clusters {}, noise {}, accuracy {}, \
         compress {:.3}s, dbscan {:.3}s, total {:.3}s",
        record.ratio,
        record.n_original,
        record.n_compressed,
        labels.n_clusters(),
        labels.n_noise(),
        acc,
        record.compress_seconds,
        record.dbscan_seconds,
        record.total_seconds
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let (data, truth) = args.input.load()?;
    let params = DbscanParams::new(args.eps, args.min_pts)?;
    let base = PipelineConfig {
        ratio: 1.0,
        params,
        k: args.k,
        r: args.r,
        seed: args.seed,
        weighted_min_pts: args.weighted_minpts,
    };
    let records = benchmark_sweep(&data, truth.as_ref(), &args.ratios, &base, &args.dataset_name)?;
    let mut out = BufWriter::new(fs::File::create(&args.out_csv)?);
    write_benchmark_csv(&records, &mut out)?;
    out.flush()?;
    for record in &records {
        let acc = record
            .accuracy_pct
            .map_or(String::from("n/a"), |a| format!("{a:.4}%"));
        println!(
            "ratio {}: n_comp {}, accuracy {}, dbscan {:.3}s",
            record.ratio, record.n_compressed, acc, record.dbscan_seconds
        );
    }
    Ok(())
}

fn cmd_kdist(args: KdistArgs) -> Result<()> {
    let (data, _) = args.input.load()?;
    let eps = suggest_eps(&data, args.k, args.percentile)?;
    println!("{eps}");
    Ok(())
}

fn cmd_demo(args: DemoArgs) -> Result<()> {
    let kind = match args.kind {
        DemoKindArg::TwoMoons => DemoKind::TwoMoons,
        DemoKindArg::TwoCircles => DemoKind::TwoCircles,
    };
    let result = spectral_vs_raw_demo(kind, args.n, args.seed, &args.out_dir)?;
    println!(
        "{} raw_accuracy {:.4}% spectral_accuracy {:.4}%",
        kind.name(),
        result.raw_accuracy,
        result.spectral_accuracy
    );
    Ok(())
}
