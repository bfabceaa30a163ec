//! Sample matrices: loading (CSV, IDX), synthetic generators, standardization.

use std::fs;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Dense row-major n x D feature matrix. The universal sample container:
/// original points and pseudo-samples alike.
///
/// Invariants: `n_samples >= 1`, `n_features >= 1`, every value finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n_samples: usize,
    n_features: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from a row-major value buffer, validating the invariants.
    pub fn from_vec(n_samples: usize, n_features: usize, values: Vec<f64>) -> Result<Self> {
        if n_samples < 1 || n_features < 1 {
            return Err(Error::InvalidParameter(format!(
                "matrix must be at least 1x1, got {n_samples}x{n_features}"
            )));
        }
        if values.len() != n_samples * n_features {
            return Err(Error::InvalidParameter(format!(
                "value buffer has length {}, expected {}",
                values.len(),
                n_samples * n_features
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at flat index {pos}"
            )));
        }
        Ok(Self {
            n_samples,
            n_features,
            values,
        })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_samples = rows.len();
        let n_features = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n_samples * n_features);
        for row in rows {
            if row.len() != n_features {
                return Err(Error::InvalidParameter(format!(
                    "row length {} does not match first row length {n_features}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_vec(n_samples, n_features, values)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_features)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Squared Euclidean distance between rows `i` and `j`.
    pub fn dist_sq(&self, i: usize, j: usize) -> f64 {
        dist_sq(self.row(i), self.row(j))
    }

    /// Writes the matrix as comma-separated rows; values use the shortest
    /// representation that parses back to the same float.
    pub fn write_csv(&self, mut out: impl std::io::Write) -> Result<()> {
        for row in self.rows() {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    write!(out, ",")?;
                }
                write!(out, "{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Squared Euclidean distance between two equal-length slices.
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Per-point class ids paired with a [`DataMatrix`], for evaluation only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    labels: Vec<usize>,
    n_classes: usize,
}

impl GroundTruth {
    /// Wraps a label vector; `n_classes` becomes `max(label) + 1`.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParameter(
                "ground truth must label at least one sample".into(),
            ));
        }
        let n_classes = labels.iter().copied().max().unwrap() + 1;
        Ok(Self { labels, n_classes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Parses a comma-separated file with one sample per line.
///
/// No header handling beyond `skip_header`, which drops the first line. With
/// `has_label_column` the last field of every row is split off as an integer
/// class id. Accepts LF or CRLF endings and an optional trailing newline.
pub fn load_csv(
    path: impl AsRef<Path>,
    has_label_column: bool,
    skip_header: bool,
) -> Result<(DataMatrix, Option<GroundTruth>)> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, has_label_column, skip_header)
}

/// CSV parsing backend, split out so tests can feed strings directly.
pub fn parse_csv(
    text: &str,
    has_label_column: bool,
    skip_header: bool,
) -> Result<(DataMatrix, Option<GroundTruth>)> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut expected_fields: Option<usize> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if skip_header && idx == 0 {
            continue;
        }
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.is_empty() {
            // Only a trailing blank (from a final newline) is tolerated.
            if text.lines().count() == line_no {
                continue;
            }
            return Err(Error::Parse {
                line: line_no,
                message: "empty line".into(),
            });
        }
        let fields: Vec<&str> = line.split(',').collect();
        match expected_fields {
            None => expected_fields = Some(fields.len()),
            Some(n) if n != fields.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {n} fields, found {}", fields.len()),
                });
            }
            _ => {}
        }
        let n_fields = fields.len();
        let value_fields = if has_label_column {
            if n_fields < 2 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "need at least one feature besides the label column".into(),
                });
            }
            &fields[..n_fields - 1]
        } else {
            &fields[..]
        };

        let mut row = Vec::with_capacity(value_fields.len());
        for field in value_fields {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("field {field:?} is not a number"),
            })?;
            row.push(v);
        }
        if has_label_column {
            let field = fields[n_fields - 1].trim();
            let label: usize = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("label field {field:?} is not a non-negative integer"),
            })?;
            labels.push(label);
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::Format("CSV contains no data rows".into()));
    }
    let matrix = DataMatrix::from_rows(&rows)?;
    let truth = if has_label_column {
        Some(GroundTruth::new(labels)?)
    } else {
        None
    };
    Ok((matrix, truth))
}

/// Reads ground-truth class ids from a single-column CSV (one integer per
/// line).
pub fn load_labels_csv(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line).trim();
        if line.is_empty() {
            continue;
        }
        let label: usize = line.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("label {line:?} is not a non-negative integer"),
        })?;
        labels.push(label);
    }
    GroundTruth::new(labels)
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Loads an IDX image/label file pair (the MNIST container format).
///
/// Every image is flattened to one row; pixel bytes are scaled into [0, 1]
/// by division by 255.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<(DataMatrix, GroundTruth)> {
    let images = fs::read(images_path)?;
    let labels = fs::read(labels_path)?;
    parse_idx(&images, &labels)
}

/// IDX parsing backend over in-memory buffers.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<(DataMatrix, GroundTruth)> {
    let mut img = images;
    let magic = read_u32_be(&mut img)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "images magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}"
        )));
    }
    let n_images = read_u32_be(&mut img)? as usize;
    let n_rows = read_u32_be(&mut img)? as usize;
    let n_cols = read_u32_be(&mut img)? as usize;

    let mut lab = labels;
    let magic = read_u32_be(&mut lab)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "labels magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}"
        )));
    }
    let n_labels = read_u32_be(&mut lab)? as usize;
    if n_images != n_labels {
        return Err(Error::Consistency(format!(
            "{n_images} images but {n_labels} labels"
        )));
    }

    let n_pixels = n_rows * n_cols;
    let mut pixels = vec![0u8; n_images * n_pixels];
    img.read_exact(&mut pixels)?;
    let mut label_bytes = vec![0u8; n_labels];
    lab.read_exact(&mut label_bytes)?;

    let values: Vec<f64> = pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    let matrix = DataMatrix::from_vec(n_images, n_pixels, values)?;
    let truth = GroundTruth::new(label_bytes.iter().map(|&b| b as usize).collect())?;
    Ok((matrix, truth))
}

fn read_u32_be(reader: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

/// Two interleaving half-circles with Gaussian coordinate noise.
///
/// Moon 0 is the upper arc of the unit circle at the origin; moon 1 is the
/// lower arc of the unit circle centered at (1, -0.5). The first
/// `n - n / 2` points form moon 0, the rest moon 1; labels follow the moons.
pub fn make_two_moons(n: usize, noise_sigma: f64, seed: u64) -> Result<(DataMatrix, GroundTruth)> {
    check_generator_args(n, noise_sigma)?;
    let n0 = n - n / 2;
    let n1 = n / 2;

    let mut values = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n0 {
        let t = arc_param(i, n0, std::f64::consts::PI);
        values.push(t.cos());
        values.push(t.sin());
        labels.push(0);
    }
    for i in 0..n1 {
        let t = arc_param(i, n1, std::f64::consts::PI);
        values.push(1.0 + t.cos());
        values.push(-t.sin() - 0.5);
        labels.push(1);
    }

    add_noise(&mut values, noise_sigma, seed);
    Ok((DataMatrix::from_vec(n, 2, values)?, GroundTruth::new(labels)?))
}

/// Two concentric circles (radii 1 and `factor`) with Gaussian noise.
pub fn make_two_circles(
    n: usize,
    noise_sigma: f64,
    factor: f64,
    seed: u64,
) -> Result<(DataMatrix, GroundTruth)> {
    check_generator_args(n, noise_sigma)?;
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "circle factor must lie in (0, 1), got {factor}"
        )));
    }
    let n0 = n - n / 2;
    let n1 = n / 2;

    let mut values = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n0 {
        let t = 2.0 * std::f64::consts::PI * i as f64 / n0 as f64;
        values.push(t.cos());
        values.push(t.sin());
        labels.push(0);
    }
    for i in 0..n1 {
        let t = 2.0 * std::f64::consts::PI * i as f64 / n1 as f64;
        values.push(factor * t.cos());
        values.push(factor * t.sin());
        labels.push(1);
    }

    add_noise(&mut values, noise_sigma, seed);
    Ok((DataMatrix::from_vec(n, 2, values)?, GroundTruth::new(labels)?))
}

fn check_generator_args(n: usize, noise_sigma: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "generator needs n >= 2, got {n}"
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    Ok(())
}

/// Evenly spaced parameter over [0, span], endpoints included when possible.
fn arc_param(i: usize, count: usize, span: f64) -> f64 {
    if count <= 1 {
        0.0
    } else {
        span * i as f64 / (count - 1) as f64
    }
}

fn add_noise(values: &mut [f64], sigma: f64, seed: u64) {
    if sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma validated above");
    for v in values.iter_mut() {
        *v += normal.sample(&mut rng);
    }
}

/// Shifts each feature column to mean 0 and scales it to unit population
/// variance. Zero-variance columns are left at 0 after centering.
pub fn standardize(m: &DataMatrix) -> DataMatrix {
    let n = m.n_samples();
    let d = m.n_features();
    let mut mean = vec![0.0; d];
    for row in m.rows() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for acc in mean.iter_mut() {
        *acc /= n as f64;
    }
    let mut var = vec![0.0; d];
    for row in m.rows() {
        for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
            let dev = v - mu;
            *acc += dev * dev;
        }
    }
    for acc in var.iter_mut() {
        *acc /= n as f64;
    }
    let inv_std: Vec<f64> = var
        .iter()
        .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 })
        .collect();

    let mut values = Vec::with_capacity(n * d);
    for row in m.rows() {
        for ((v, mu), s) in row.iter().zip(&mean).zip(&inv_std) {
            values.push((v - mu) * s);
        }
    }
    DataMatrix::from_vec(n, d, values).expect("standardization preserves shape and finiteness")
}

/// Generates a deterministic ChaCha RNG; shared by modules that need
/// reproducible randomness keyed on a user-facing seed.
pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random matrix helper for benchmarks and tests.
pub fn random_matrix(n: usize, d: usize, lo: f64, hi: f64, seed: u64) -> DataMatrix {
    let mut rng = seeded_rng(seed);
    let values: Vec<f64> = (0..n * d).map(|_| rng.gen_range(lo..hi)).collect();
    DataMatrix::from_vec(n, d, values).expect("range bounds are finite")
}
