//! 1-D Fréchet distance between real and generated series, measured in the
//! pooled feature space of a per-dataset FCN classifier.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use utsgan_autograd::{Graph, Tensor};

use crate::checkpoint::Container;
use crate::dataset::Dataset;
use crate::error::{Error, IoContext, Result};
use crate::nn::{sample_latent, BnMode, FcnClassifier, RunningStats, FCN_BLOCKS};
use crate::optim::{Adam, AdamConfig};
use crate::trainer::{Mode, Trainer};

pub const DEFAULT_RUNS: usize = 25;

/// Relative size of an imaginary eigenvalue residue that is discarded.
const IMAG_TOL: f64 = 1e-6;
/// Negative totals down to this (relative) size are clamped to zero.
const NEG_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct FcnConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub val_fraction: f64,
    pub seed: u64,
    pub blocks: [(usize, usize); 3],
}

impl Default for FcnConfig {
    fn default() -> Self {
        FcnConfig {
            max_epochs: 1000,
            patience: 100,
            batch_size: 16,
            adam: AdamConfig {
                lr: 1e-3,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            val_fraction: 0.2,
            seed: 0,
            blocks: FCN_BLOCKS,
        }
    }
}

/// A classifier with the validation accuracy it was selected at.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedClassifier {
    pub model: FcnClassifier,
    pub val_acc: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Per-class shuffled split; every class keeps at least one row on each side.
pub fn stratified_split(labels: &[usize], val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        let n_val = ((idx.len() as f64 * val_fraction).round() as usize).clamp(1, idx.len() - 1);
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Fraction of rows whose most probable class is the label.
pub fn accuracy(model: &FcnClassifier, x: &Tensor, labels: &[usize]) -> Result<f64> {
    let (probs, _) = model.forward(x)?;
    let c = model.classes;
    let hits = probs
        .data()
        .chunks(c)
        .zip(labels)
        .filter(|(row, &l)| {
            let best = (0..c).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            best == l
        })
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Cross-entropy training with Adam on a stratified split, stopping at
/// `max_epochs` or after `patience` epochs without a strictly better
/// validation accuracy. Returns the best-validation parameters.
pub fn train_fcn(dataset: &Dataset, cfg: &FcnConfig) -> Result<TrainedClassifier> {
    let classes = dataset.class_ids();
    if classes.len() < 2 {
        return Err(Error::Config(format!("classifier training needs >= 2 classes, {} has {}", dataset.name, classes.len())));
    }
    if let Some(&c) = classes.iter().find(|&&c| dataset.count_class(c) < 2) {
        return Err(Error::Config(format!("class {c} of {} has fewer than 2 series", dataset.name)));
    }
    let n_classes = classes.iter().max().unwrap() + 1;
    let labels = dataset.labels();
    let (train_idx, val_idx) = stratified_split(labels, cfg.val_fraction, cfg.seed);
    let all = dataset.to_tensor();
    let val_x = all.select_rows(&val_idx);
    let val_y: Vec<usize> = val_idx.iter().map(|&i| labels[i]).collect();

    let mut model = FcnClassifier::with_blocks(dataset.series_len(), n_classes, cfg.blocks, cfg.seed)?;
    let mut opt_body = Adam::new(cfg.adam, model.body.params());
    let mut opt_head = Adam::new(cfg.adam, model.head.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let mut best = (model.clone(), -1.0, 0);
    let mut epoch = 0;
    while epoch < cfg.max_epochs && epoch - best.2 < cfg.patience {
        epoch += 1;
        let mut order = train_idx.clone();
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let x = all.select_rows(batch);
            let mut onehot = vec![0.0; batch.len() * n_classes];
            for (r, &i) in batch.iter().enumerate() {
                onehot[r * n_classes + labels[i]] = 1.0;
            }
            let onehot = Tensor::new([batch.len(), n_classes], onehot);

            let mut stats = model.body.running().to_vec();
            let graph = Graph::new();
            let (gb, gh) = {
                let body = model.body.bind(&graph);
                let head = model.head.bind(&graph);
                let feats = model.body.forward_with(&body.params, graph.input(x), BnMode::Train(&mut stats));
                let logp = head.apply(feats).log_softmax();
                let loss = logp.mul_const(onehot.into()).sum().scale(-1.0 / batch.len() as f64);
                let all_params: Vec<_> = body.params.iter().chain(&head.params).copied().collect();
                let mut grads: Vec<Tensor> = graph.grad(loss, &all_params).iter().map(|v| (*v.value()).clone()).collect();
                let gh = grads.split_off(body.params.len());
                (grads, gh)
            };
            opt_body.update(model.body.params_mut(), &gb);
            opt_head.update(model.head.params_mut(), &gh);
            model.body.set_running(stats);
        }
        let acc = accuracy(&model, &val_x, &val_y)?;
        if acc > best.1 {
            best = (model.clone(), acc, epoch);
        }
    }
    Ok(TrainedClassifier {
        model: best.0,
        val_acc: best.1,
        best_epoch: best.2,
        epochs_run: epoch,
    })
}

impl TrainedClassifier {
    pub fn save(&self, path: &Path) -> Result<()> {
        let m = &self.model;
        let mut c = Container::new();
        c.set_meta("kind", "classifier");
        c.set_meta("classes", m.classes);
        c.set_meta("series_len", m.series_len());
        c.set_meta("val_acc", self.val_acc);
        c.set_meta("best_epoch", self.best_epoch);
        c.set_meta("epochs_run", self.epochs_run);
        let blocks: Vec<String> = m.blocks().iter().map(|(w, k)| format!("{w}x{k}")).collect();
        c.set_meta("blocks", blocks.join(","));
        for (tag, net) in [("body", &m.body), ("head", &m.head)] {
            for (name, t) in net.params().names().iter().zip(net.params().values()) {
                c.push(format!("{tag}/{name}"), t.clone());
            }
        }
        for (i, s) in m.body.running().iter().enumerate() {
            c.push(format!("running/{i}/mean"), Tensor::new([s.mean.len()], s.mean.clone()));
            c.push(format!("running/{i}/var"), Tensor::new([s.var.len()], s.var.clone()));
        }
        c.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c = Container::load(path)?;
        let bad = |msg: String| Error::Checkpoint {
            path: path.to_path_buf(),
            msg,
        };
        if c.meta("kind", path)? != "classifier" {
            return Err(bad("not a classifier checkpoint".into()));
        }
        let blocks: Vec<(usize, usize)> = c
            .meta("blocks", path)?
            .split(',')
            .map(|b| {
                let (w, k) = b.split_once('x')?;
                Some((w.parse().ok()?, k.parse().ok()?))
            })
            .collect::<Option<_>>()
            .ok_or_else(|| bad("bad blocks".into()))?;
        let blocks: [(usize, usize); 3] = blocks.try_into().map_err(|_| bad("expected three blocks".into()))?;
        let mut model = FcnClassifier::with_blocks(c.parse_meta("series_len", path)?, c.parse_meta("classes", path)?, blocks, 0)?;
        for (tag, net) in [("body", &mut model.body), ("head", &mut model.head)] {
            let names = net.params().names().to_vec();
            for (i, name) in names.iter().enumerate() {
                let stored = c.array(&format!("{tag}/{name}"), path)?;
                if stored.shape() != net.params().values()[i].shape() {
                    return Err(bad(format!("{tag}/{name} has shape {:?}", stored.shape())));
                }
                net.params_mut().values_mut()[i] = stored.clone();
            }
        }
        let stats = (0..model.body.running().len())
            .map(|i| {
                Ok(RunningStats {
                    mean: c.array(&format!("running/{i}/mean"), path)?.data().to_vec(),
                    var: c.array(&format!("running/{i}/var"), path)?.data().to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        model.body.set_running(stats);
        Ok(TrainedClassifier {
            model,
            val_acc: c.parse_meta("val_acc", path)?,
            best_epoch: c.parse_meta("best_epoch", path)?,
            epochs_run: c.parse_meta("epochs_run", path)?,
        })
    }
}

/// Pooled classifier features, one row per series.
pub fn extract_features(classifier: &FcnClassifier, series: &Tensor) -> Result<DMatrix<f64>> {
    let f = classifier.features(series)?;
    let (n, d) = (f.shape()[0], f.shape()[1]);
    Ok(DMatrix::from_row_slice(n, d, f.data()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Column means and the `n − 1` sample covariance, symmetrized. Rows are
/// accumulated in lexicographic order, so the result does not depend on
/// row order even in floating point.
pub fn fit_gaussian(features: &DMatrix<f64>) -> Result<Gaussian> {
    let n = features.nrows();
    if n < 2 {
        return Err(Error::Shape(format!("need at least 2 feature rows, got {n}")));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite features".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (features.row(i), features.row(j));
        a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let features = features.select_rows(&order);
    let mean = features.row_mean().transpose();
    let mut centred = features;
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let s = centred.transpose() * &centred / (n as f64 - 1.0);
    let cov = (&s + s.transpose()) * 0.5;
    Ok(Gaussian { mean, cov })
}

/// Symmetric PSD square root; tiny negative eigenvalues are treated as zero.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `tr (Σ_a Σ_b)^{1/2}` via the similar symmetric matrix
/// `Σ_a^{1/2} Σ_b Σ_a^{1/2}`, which shares the eigenvalues of `Σ_a Σ_b`.
pub fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let s = psd_sqrt(a);
    let m = &s * b * &s;
    let eig = SymmetricEigen::new((&m + m.transpose()) * 0.5);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let tol = IMAG_TOL * top.sqrt().max(1.0);
    let mut total = 0.0;
    for &l in eig.eigenvalues.iter() {
        if !l.is_finite() {
            return Err(Error::Numerical("matrix square root did not converge".into()));
        }
        if l < 0.0 && (-l).sqrt() > tol {
            return Err(Error::Numerical(format!(
                "imaginary component {:.3e} in the covariance product square root",
                (-l).sqrt()
            )));
        }
        total += l.max(0.0).sqrt();
    }
    Ok(total)
}

/// Principal square root of `A·B` for positive-definite `A` and PSD `B`:
/// `A^{1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2}`.
pub fn product_sqrt(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new((a + a.transpose()) * 0.5);
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Numerical("product_sqrt needs a positive-definite left factor".into()));
    }
    let v = &eig.eigenvectors;
    let s = v * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * v.transpose();
    let s_inv = v * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * v.transpose();
    Ok(&s * psd_sqrt(&(&s * b * &s)) * s_inv)
}

/// `‖μ_a − μ_b‖² + tr(Σ_a + Σ_b − 2 (Σ_a Σ_b)^{1/2})`.
pub fn frechet_distance(a: &Gaussian, b: &Gaussian) -> Result<f64> {
    let d = a.mean.len();
    if b.mean.len() != d || a.cov.shape() != (d, d) || b.cov.shape() != (d, d) {
        return Err(Error::Shape(format!("Gaussians of dimension {d} and {}", b.mean.len())));
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let traces = a.cov.trace() + b.cov.trace();
    let fid = mean_term + traces - 2.0 * trace_sqrt_product(&a.cov, &b.cov)?;
    if fid < 0.0 {
        if fid < -NEG_TOL * (mean_term + traces).max(1.0) {
            return Err(Error::Numerical(format!("negative Fréchet distance {fid}")));
        }
        return Ok(0.0);
    }
    Ok(fid)
}

/// Fréchet distance between Gaussians fitted to the classifier features of
/// two series sets.
pub fn fid_score(classifier: &FcnClassifier, real: &Tensor, synthetic: &Tensor) -> Result<f64> {
    let a = fit_gaussian(&extract_features(classifier, real)?)?;
    let b = fit_gaussian(&extract_features(classifier, synthetic)?)?;
    frechet_distance(&a, &b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidReport {
    pub dataset: String,
    pub class_id: usize,
    pub mode: Mode,
    pub epoch: usize,
    pub runs: usize,
    pub samples_per_run: usize,
    pub fid_mean: f64,
    pub fid_std: f64,
    pub classifier_val_acc: f64,
    pub per_run: Vec<f64>,
}

impl FidReport {
    pub fn median(&self) -> f64 {
        median(&self.per_run)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.dataset,
            self.class_id,
            self.mode,
            self.epoch,
            self.runs,
            self.samples_per_run,
            self.fid_mean,
            self.fid_std,
            self.classifier_val_acc
        )
    }
}

pub const REPORT_HEADER: &str = "dataset,class,mode,epoch,runs,samples_per_run,fid_mean,fid_std,classifier_val_acc";

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Synthetic samples per FID run: the real pool size, at least 128.
pub fn default_samples_per_run(n_class: usize) -> usize {
    n_class.max(128)
}

/// Generates `count` series from a trained model and maps them back to the
/// data scale. The draw depends only on `seed`.
pub fn generate(trainer: &Trainer, data_scale: f64, count: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(count);
    let chunk = 64;
    let mut left = count;
    while left > 0 {
        let n = left.min(chunk);
        let z = sample_latent(n, trainer.bundle.d_z, &mut rng);
        rows.push(trainer.bundle.generate_series(&z).map(|v| v * data_scale));
        left -= n;
    }
    let len = trainer.bundle.series_len;
    Tensor::new([count, len], rows.into_iter().flat_map(Tensor::into_data).collect())
}

/// FID of a checkpoint against the real class pool, over `runs` generation
/// runs seeded `seed ⊕ r`.
pub fn fid_report(
    checkpoint: &Path,
    real_class: &Tensor,
    classifier: &TrainedClassifier,
    runs: usize,
    samples_per_run: Option<usize>,
    seed: u64,
) -> Result<FidReport> {
    if runs == 0 {
        return Err(Error::Config("runs must be >= 1".into()));
    }
    let (trainer, info) = Trainer::load(checkpoint)?;
    let samples = samples_per_run.unwrap_or_else(|| default_samples_per_run(real_class.shape()[0]));
    let real = fit_gaussian(&extract_features(&classifier.model, real_class)?)?;
    let per_run = (0..runs)
        .map(|r| {
            let synth = generate(&trainer, info.data_scale, samples, seed ^ r as u64);
            frechet_distance(&real, &fit_gaussian(&extract_features(&classifier.model, &synth)?)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = per_run.iter().sum::<f64>() / runs as f64;
    let std = (per_run.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / runs as f64).sqrt();
    Ok(FidReport {
        dataset: info.dataset,
        class_id: info.class_id,
        mode: trainer.cfg.mode,
        epoch: info.epoch,
        runs,
        samples_per_run: samples,
        fid_mean: mean,
        fid_std: std,
        classifier_val_acc: classifier.val_acc,
        per_run,
    })
}

/// Appends report rows to a CSV, writing the header if the file is new.
pub fn append_reports(path: &Path, reports: &[FidReport]) -> Result<()> {
    let fresh = !path.exists();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).at(dir)?;
    }
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path).at(path)?;
    let mut text = String::new();
    if fresh {
        text.push_str(REPORT_HEADER);
        text.push('\n');
    }
    for r in reports {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    f.write_all(text.as_bytes()).at(path)
}
