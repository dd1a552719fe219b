//! UCR-archive ingestion, per-series normalization, class filtering and
//! seeded batching.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use utsgan_autograd::Tensor;

use crate::error::{Error, IoContext, Result};

/// Shortest series the networks and the spectrogram pipeline accept.
pub const MIN_SERIES_LEN: usize = 8;

/// Standard deviations at or below this are treated as a constant series.
const STD_FLOOR: f64 = 1e-8;

/// A labelled univariate dataset. Rows are z-normalized per series at load
/// time, and labels are contiguous indices into `raw_classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    series_len: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
    raw_classes: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from rows that are already normalized as the caller
    /// wants them. `labels` index into `raw_classes`.
    pub fn from_rows(
        name: impl Into<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        raw_classes: Vec<String>,
    ) -> Result<Self> {
        let series_len = rows.first().map(Vec::len).unwrap_or(0);
        if rows.len() != labels.len() {
            return Err(Error::Shape(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if series_len < MIN_SERIES_LEN {
            return Err(Error::Shape(format!(
                "series length {series_len} is below the minimum of {MIN_SERIES_LEN}"
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != series_len) {
            return Err(Error::Shape(format!(
                "row {i} has length {}, expected {series_len}",
                rows[i].len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= raw_classes.len()) {
            return Err(Error::Shape(format!("label {l} has no class entry")));
        }
        Ok(Dataset {
            name: name.into(),
            series_len,
            values: rows.concat(),
            labels,
            raw_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn series(&self, i: usize) -> &[f64] {
        &self.values[i * self.series_len..(i + 1) * self.series_len]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.series_len)
    }

    /// Sorted distinct class ids present.
    pub fn class_ids(&self) -> Vec<usize> {
        self.labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// The raw label text that class id `id` was remapped from.
    pub fn raw_class(&self, id: usize) -> Option<&str> {
        self.raw_classes.get(id).map(String::as_str)
    }

    pub fn raw_classes(&self) -> &[String] {
        &self.raw_classes
    }

    pub fn count_class(&self, id: usize) -> usize {
        self.labels.iter().filter(|&&l| l == id).count()
    }

    /// All series as an `[N, L]` tensor.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::new([self.len(), self.series_len], self.values.clone())
    }

    /// Rows `idx` as an `[len(idx), L]` tensor.
    pub fn select(&self, idx: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(idx.len() * self.series_len);
        for &i in idx {
            data.extend_from_slice(self.series(i));
        }
        Tensor::new([idx.len(), self.series_len], data)
    }

    /// A dataset holding rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(idx.len() * self.series_len);
        for &i in idx {
            values.extend_from_slice(self.series(i));
        }
        Dataset {
            name: self.name.clone(),
            series_len: self.series_len,
            values,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            raw_classes: self.raw_classes.clone(),
        }
    }

    /// Errors unless the class count is within the supported 2..=5 range.
    pub fn check_class_count(&self) -> Result<()> {
        let c = self.class_ids().len();
        if (2..=5).contains(&c) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{} has {c} classes; datasets with 2 to 5 classes are supported",
                self.name
            )))
        }
    }
}

/// Training-set size bucket.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SizeCategory {
    Small,
    Medium,
    Large,
}

impl fmt::Display for SizeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeCategory::Small => "SMALL",
            SizeCategory::Medium => "MEDIUM",
            SizeCategory::Large => "LARGE",
        })
    }
}

/// Buckets a training-set size: up to 499 is small, 500 to 1000 medium,
/// above 1000 large.
pub fn size_category(n: usize) -> SizeCategory {
    match n {
        0..=499 => SizeCategory::Small,
        500..=1000 => SizeCategory::Medium,
        _ => SizeCategory::Large,
    }
}

/// Z-normalizes with the population standard deviation. A constant series
/// is only centred.
pub fn znormalize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std > STD_FLOOR {
        values.iter().map(|v| (v - mean) / std).collect()
    } else {
        values.iter().map(|v| v - mean).collect()
    }
}

/// Divides a series by its peak magnitude so it fits in [-1, 1], returning
/// the scaled series and the divisor. An all-zero series keeps a divisor
/// of one.
pub fn peak_rescale(values: &[f64]) -> (Vec<f64>, f64) {
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { peak } else { 1.0 };
    (values.iter().map(|v| v / scale).collect(), scale)
}

/// Loads a UCR-format TSV training split, optionally appending the test
/// split. Labels are remapped to `0..C` in sorted order of the raw labels
/// across both files, and every series is z-normalized.
pub fn load_ucr(train_path: &Path, test_path: Option<&Path>) -> Result<Dataset> {
    let mut records = parse_tsv(train_path)?;
    if let Some(p) = test_path {
        let test = parse_tsv(p)?;
        if test[0].1.len() != records[0].1.len() {
            return Err(Error::Shape(format!(
                "train series have length {} but test series have length {}",
                records[0].1.len(),
                test[0].1.len()
            )));
        }
        records.extend(test);
    }

    let mut raw: Vec<(f64, String)> = Vec::new();
    for (label, _) in &records {
        if !raw.iter().any(|(_, s)| s == label) {
            raw.push((label_key(label), label.clone()));
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let raw_classes: Vec<String> = raw.into_iter().map(|(_, s)| s).collect();

    let name = dataset_name(train_path);
    let labels = records
        .iter()
        .map(|(l, _)| raw_classes.iter().position(|c| c == l).unwrap())
        .collect();
    let rows = records.iter().map(|(_, v)| znormalize(v)).collect();
    Dataset::from_rows(name, rows, labels, raw_classes)
}

fn label_key(label: &str) -> f64 {
    label.parse::<f64>().unwrap_or(f64::INFINITY)
}

/// `GunPoint_TRAIN.tsv` → `GunPoint`.
fn dataset_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    stem.strip_suffix("_TRAIN")
        .or_else(|| stem.strip_suffix("_TEST"))
        .unwrap_or(stem)
        .to_string()
}

fn parse_tsv(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let text = fs::read_to_string(path).at(path)?;
    let mut records = Vec::new();
    let mut bad_rows = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let expected = *width.get_or_insert(fields.len());
        if fields.len() != expected || fields.len() < 2 {
            return Err(parse_err(format!(
                "expected {} tab-separated fields, found {}",
                expected.max(2),
                fields.len()
            )));
        }
        let label = normalize_label(fields[0]).ok_or_else(|| parse_err(format!("invalid class label {:?}", fields[0])))?;
        let values = fields[1..]
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("invalid value {:?}", f)))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            bad_rows.push(records.len());
        }
        records.push((label, values));
    }
    if !bad_rows.is_empty() {
        return Err(Error::NonFinite {
            path: path.to_path_buf(),
            rows: bad_rows,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(records)
}

/// Accepts integer labels, also when written as `1.0` or `+1`.
fn normalize_label(field: &str) -> Option<String> {
    let f = field.trim();
    if let Ok(i) = f.parse::<i64>() {
        return Some(i.to_string());
    }
    match f.parse::<f64>() {
        Ok(x) if x.is_finite() && x.fract() == 0.0 => Some((x as i64).to_string()),
        _ => None,
    }
}

/// Keeps only rows of class `class_id`; the name gains a `_class<id>`
/// suffix once.
pub fn filter_class(d: &Dataset, class_id: usize) -> Result<Dataset> {
    let available = d.class_ids();
    if !available.contains(&class_id) {
        return Err(Error::UnknownClass { id: class_id, available });
    }
    let idx: Vec<usize> = (0..d.len()).filter(|&i| d.labels[i] == class_id).collect();
    let mut out = d.subset(&idx);
    let suffix = format!("_class{class_id}");
    if !out.name.ends_with(&suffix) {
        out.name.push_str(&suffix);
    }
    Ok(out)
}

/// Batch size used when none is configured: full batch for classes of up
/// to 64 series.
pub fn default_batch_size(n_class: usize) -> usize {
    n_class.clamp(1, 64)
}

/// One epoch of index batches: a seeded permutation of `0..n` chunked into
/// `batch_size` pieces, keeping a short final batch.
pub fn batch_indices(n: usize, batch_size: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch size must be positive");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

pub fn make_batches(d: &Dataset, batch_size: usize, seed: u64) -> Vec<Vec<usize>> {
    batch_indices(d.len(), batch_size, seed)
}

/// Writes the rows of an `[N, L]` tensor as UCR-format TSV, every row
/// labelled `label`. Values use the shortest representation that parses
/// back to the same `f64`.
pub fn save_ucr(path: &Path, rows: &Tensor, label: &str) -> Result<()> {
    let mut text = String::new();
    for i in 0..rows.shape()[0] {
        text.push_str(label);
        for v in rows.row(i) {
            text.push('\t');
            text.push_str(&v.to_string());
        }
        text.push('\n');
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).at(dir)?;
    }
    fs::write(path, text).at(path)
}
