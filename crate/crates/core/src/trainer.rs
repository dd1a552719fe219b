//! Adversarial training in unified and serial-baseline modes, with epoch
//! checkpoints, a per-step loss log and per-epoch wall-clock timing.
//!
//! Unified mode updates both critics in every critic iteration from one
//! generator forward, then takes a single joint step on `(θ_G, θ_F)` against
//! the averaged objective. Serial mode alternates two standalone WGAN-GPs per
//! iteration: the image side first, then the series side with `G`'s output
//! detached, so no series-side gradient reaches `θ_G`.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use utsgan_autograd::{Graph, Tensor, Var};

use crate::checkpoint::Container;
use crate::dataset::{batch_indices, default_batch_size, peak_rescale, Dataset};
use crate::error::{Error, IoContext, Result};
use crate::nn::{init_bundle, sample_latent, Bound, ModelBundle, Network, Widths};
use crate::objective::{critic_terms, generator_objective, unified_loss, LossBreakdown, TermMask, DEFAULT_LAMBDA};
use crate::optim::{Adam, AdamConfig};
use crate::spectral::{render_batch, StftConfig, DEFAULT_IMAGE_SIZE};

/// RNG stream used by the training loop; stream 0..=5 seed initialization.
const TRAIN_STREAM: u64 = 7;
/// Largest relative gap allowed between a logged unified loss and the
/// average of its components.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Unified,
    Serial,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Unified => "unified",
            Mode::Serial => "serial",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unified" => Ok(Mode::Unified),
            "serial" => Ok(Mode::Serial),
            other => Err(Error::Config(format!("mode must be unified or serial, got {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub mode: Mode,
    pub seed: u64,
    pub epochs: usize,
    /// `None` checkpoints at each quarter of `epochs`.
    pub checkpoints: Option<Vec<usize>>,
    pub n_critic: usize,
    pub adam: AdamConfig,
    pub lambda_x: f64,
    pub lambda_y: f64,
    pub d_z: usize,
    /// `None` uses [`default_batch_size`] of the class size.
    pub batch_size: Option<usize>,
    pub image_size: usize,
    /// `None` derives the STFT window from the series length.
    pub n_fft: Option<usize>,
    pub hop: Option<usize>,
    pub widths: Widths,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            mode: Mode::Unified,
            seed: 0,
            epochs: 1000,
            checkpoints: None,
            n_critic: 5,
            adam: AdamConfig::default(),
            lambda_x: DEFAULT_LAMBDA,
            lambda_y: DEFAULT_LAMBDA,
            d_z: 100,
            batch_size: None,
            image_size: DEFAULT_IMAGE_SIZE,
            n_fft: None,
            hop: None,
            widths: Widths::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|s| parse(key, s.trim())).collect()
}

fn parse_auto(key: &str, value: &str) -> Result<Option<usize>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn show_auto(v: Option<usize>) -> String {
    v.map_or_else(|| "auto".to_string(), |n| n.to_string())
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Keys understood by [`TrainingConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "mode",
    "seed",
    "epochs",
    "checkpoints",
    "n-critic",
    "lr",
    "beta1",
    "beta2",
    "adam-eps",
    "lambda",
    "lambda-x",
    "lambda-y",
    "dz",
    "batch-size",
    "image-size",
    "nfft",
    "hop",
    "g-base",
    "dx-base",
    "f-base",
    "f-bottleneck",
    "dy-widths",
];

impl TrainingConfig {
    /// Sets one option by its key-value name. `lambda` sets both penalties.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "mode" => self.mode = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "checkpoints" => {
                self.checkpoints = if value == "auto" { None } else { Some(parse_list(key, value)?) }
            }
            "n-critic" => self.n_critic = parse(key, value)?,
            "lr" => self.adam.lr = parse(key, value)?,
            "beta1" => self.adam.beta1 = parse(key, value)?,
            "beta2" => self.adam.beta2 = parse(key, value)?,
            "adam-eps" => self.adam.eps = parse(key, value)?,
            "lambda" => {
                self.lambda_x = parse(key, value)?;
                self.lambda_y = self.lambda_x;
            }
            "lambda-x" => self.lambda_x = parse(key, value)?,
            "lambda-y" => self.lambda_y = parse(key, value)?,
            "dz" => self.d_z = parse(key, value)?,
            "batch-size" => self.batch_size = parse_auto(key, value)?,
            "image-size" => self.image_size = parse(key, value)?,
            "nfft" => self.n_fft = parse_auto(key, value)?,
            "hop" => self.hop = parse_auto(key, value)?,
            "g-base" => self.widths.g_base = parse(key, value)?,
            "dx-base" => self.widths.dx_base = parse(key, value)?,
            "f-base" => self.widths.f_base = parse(key, value)?,
            "f-bottleneck" => self.widths.f_bottleneck = parse(key, value)?,
            "dy-widths" => {
                let v = parse_list(key, value)?;
                self.widths.dy = v
                    .try_into()
                    .map_err(|_| Error::Config("dy-widths takes three comma-separated widths".into()))?;
            }
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Flat `key = value` text, one option per line, readable by
    /// [`TrainingConfig::from_kv`].
    pub fn to_kv(&self) -> String {
        let w = &self.widths;
        let entries: Vec<(&str, String)> = vec![
            ("mode", self.mode.to_string()),
            ("seed", self.seed.to_string()),
            ("epochs", self.epochs.to_string()),
            ("checkpoints", self.checkpoints.as_deref().map_or_else(|| "auto".into(), join)),
            ("n-critic", self.n_critic.to_string()),
            ("lr", self.adam.lr.to_string()),
            ("beta1", self.adam.beta1.to_string()),
            ("beta2", self.adam.beta2.to_string()),
            ("adam-eps", self.adam.eps.to_string()),
            ("lambda-x", self.lambda_x.to_string()),
            ("lambda-y", self.lambda_y.to_string()),
            ("dz", self.d_z.to_string()),
            ("batch-size", show_auto(self.batch_size)),
            ("image-size", self.image_size.to_string()),
            ("nfft", show_auto(self.n_fft)),
            ("hop", show_auto(self.hop)),
            ("g-base", w.g_base.to_string()),
            ("dx-base", w.dx_base.to_string()),
            ("f-base", w.f_base.to_string()),
            ("f-bottleneck", w.f_bottleneck.to_string()),
            ("dy-widths", join(&w.dy)),
        ];
        entries.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = TrainingConfig::default();
        for (key, value) in parse_kv(text)? {
            cfg.set(&key, &value)?;
        }
        Ok(cfg)
    }

    pub fn checkpoint_epochs(&self) -> Vec<usize> {
        match &self.checkpoints {
            Some(c) => {
                let mut c = c.clone();
                c.sort_unstable();
                c.dedup();
                c
            }
            None => {
                let mut c: Vec<usize> = (1..=4).map(|q| (self.epochs * q / 4).max(1)).collect();
                c.dedup();
                c
            }
        }
    }

    pub fn batch_size_for(&self, n: usize) -> usize {
        self.batch_size.unwrap_or_else(|| default_batch_size(n))
    }

    pub fn stft(&self, len: usize) -> Result<StftConfig> {
        let derived = StftConfig::for_length(len);
        let n_fft = self.n_fft.unwrap_or(derived.n_fft());
        let hop = self.hop.unwrap_or(n_fft / 4).max(1);
        StftConfig::new(n_fft, hop)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return fail("epochs must be >= 1".into());
        }
        if self.n_critic == 0 {
            return fail("n-critic must be >= 1".into());
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return fail(format!("lr must be positive, got {}", self.adam.lr));
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return fail("Adam betas must lie in [0, 1)".into());
        }
        if self.lambda_x < 0.0 || self.lambda_y < 0.0 {
            return fail("penalty weights must be non-negative".into());
        }
        if self.d_z == 0 {
            return fail("dz must be >= 1".into());
        }
        if self.batch_size == Some(0) {
            return fail("batch-size must be >= 1".into());
        }
        if let Some(&bad) = self.checkpoint_epochs().iter().find(|&&e| e == 0 || e > self.epochs) {
            return fail(format!("checkpoint epoch {bad} outside 1..={}", self.epochs));
        }
        Ok(())
    }
}

/// Parses flat `key = value` text; `#` starts a comment line.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Real training material for one class: series rescaled into [-1, 1] and
/// their rendered spectrograms in network range.
#[derive(Clone, Debug)]
pub struct TrainingData {
    pub dataset: String,
    pub class_id: usize,
    /// `[N, L]` in [-1, 1].
    pub series: Tensor,
    /// `[N, 3, S, S]` in [-1, 1].
    pub images: Tensor,
    /// Mean peak magnitude of the z-normalized series; multiplies generated
    /// series back into data space.
    pub data_scale: f64,
}

impl TrainingData {
    /// `class_data` holds the rows of one class, already z-normalized.
    pub fn new(dataset: &str, class_id: usize, class_data: &Dataset, cfg: &TrainingConfig) -> Result<Self> {
        if class_data.is_empty() {
            return Err(Error::Config(format!("class {class_id} of {dataset} has no series")));
        }
        let mut scaled = Vec::with_capacity(class_data.len() * class_data.series_len());
        let mut peaks = 0.0;
        for row in class_data.rows() {
            let (s, peak) = peak_rescale(row);
            scaled.extend(s);
            peaks += peak;
        }
        let series = Tensor::new([class_data.len(), class_data.series_len()], scaled);
        let images = render_batch(&series, &cfg.stft(class_data.series_len())?, cfg.image_size)?;
        Ok(TrainingData {
            dataset: dataset.to_string(),
            class_id,
            series,
            images,
            data_scale: peaks / class_data.len() as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.series.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn series_len(&self) -> usize {
        self.series.shape()[1]
    }
}

/// Adam states of the four networks.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizers {
    pub g: Adam,
    pub dx: Adam,
    pub f: Adam,
    pub dy: Adam,
}

/// Everything that evolves during training.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub cfg: TrainingConfig,
    pub bundle: ModelBundle,
    pub opt: Optimizers,
    rng: ChaCha8Rng,
    /// Completed training steps.
    pub step: u64,
    /// Completed epochs.
    pub epoch: usize,
    /// Terms of the unified generator objective that are optimized; both
    /// outside of probes.
    pub generator_mask: TermMask,
}

fn values(vars: &[Var<'_>]) -> Vec<Tensor> {
    vars.iter().map(|v| (*v.value()).clone()).collect()
}

fn uniforms(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// `−mean D_x(G(z))`: the standalone image-generator loss.
fn image_generator_loss<'g>(dx: &Bound<'_, 'g>, g: &Bound<'_, 'g>, z: Var<'g>) -> Var<'g> {
    -dx.apply(g.apply(z)).mean()
}

/// The series-side generator objective as each mode optimizes it. Unified
/// mode takes the series term of the joint objective (its value equals
/// [`generator_objective`] with [`TermMask::SERIES_ONLY`]); serial mode feeds
/// F a detached copy of `G(z)`.
fn series_generator_loss<'g>(mode: Mode, dy: &Bound<'_, 'g>, f: &Bound<'_, 'g>, g: &Bound<'_, 'g>, z: Var<'g>) -> Var<'g> {
    match mode {
        Mode::Unified => dy.apply(f.apply(g.apply(z))).mean().scale(-0.5),
        Mode::Serial => {
            let images = z.graph().input(g.net.eval(&z.value()));
            -dy.apply(f.apply(images)).mean()
        }
    }
}

/// Gradient of the series-side generator objective with respect to every
/// parameter of G, as the given mode builds it.
pub fn series_objective_grad_g(bundle: &ModelBundle, z: &Tensor, mode: Mode) -> Vec<Tensor> {
    let graph = Graph::new();
    let (g, f, dy) = (bundle.g.bind(&graph), bundle.f.bind(&graph), bundle.dy.bind(&graph));
    let loss = series_generator_loss(mode, &dy, &f, &g, graph.input(z.clone()));
    values(&graph.grad(loss, &g.params))
}

/// One critic update on `net` with constant real and fake batches. Returns
/// `(wgan, gp)` before the update.
fn critic_step(net: &mut Network, opt: &mut Adam, real: &Tensor, fake: &Tensor, lambda: f64, eps: &[f64]) -> Result<(f64, f64)> {
    let graph = Graph::new();
    let (out, grads) = {
        let critic = net.bind(&graph);
        let terms = critic_terms(&critic, graph.input(real.clone()), graph.input(fake.clone()), lambda, eps)?;
        (terms.values(), values(&graph.grad(terms.critic_loss(), &critic.params)))
    };
    opt.update(net.params_mut(), &grads);
    Ok(out)
}

impl Trainer {
    pub fn new(cfg: TrainingConfig, series_len: usize) -> Result<Self> {
        let bundle = init_bundle(cfg.seed, cfg.d_z, cfg.image_size, series_len, &cfg.widths)?;
        let opt = Optimizers {
            g: Adam::new(cfg.adam, bundle.g.params()),
            dx: Adam::new(cfg.adam, bundle.dx.params()),
            f: Adam::new(cfg.adam, bundle.f.params()),
            dy: Adam::new(cfg.adam, bundle.dy.params()),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(TRAIN_STREAM);
        Ok(Trainer {
            cfg,
            bundle,
            opt,
            rng,
            step: 0,
            epoch: 0,
            generator_mask: TermMask::BOTH,
        })
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// One step in the configured mode, counted in `self.step`. A non-finite
    /// loss aborts with the offending breakdown.
    pub fn train_step(&mut self, real_images: &Tensor, real_series: &Tensor) -> Result<LossBreakdown> {
        let row = match self.cfg.mode {
            Mode::Unified => self.train_step_unified(real_images, real_series)?,
            Mode::Serial => self.train_step_serial(real_images, real_series)?,
        };
        self.step += 1;
        if !row.is_finite() {
            return Err(Error::NonFiniteLoss {
                step: self.step,
                last: Box::new(row),
            });
        }
        let average = unified_loss(row.l_x, row.l_y)?;
        if (row.unified - average).abs() > IDENTITY_TOL * average.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "step {}: unified {} differs from (l_x + l_y)/2 = {average}",
                self.step, row.unified
            )));
        }
        Ok(row)
    }

    /// `n_critic` joint critic iterations followed by one joint generator
    /// update. The returned row holds the last critic iteration's terms.
    pub fn train_step_unified(&mut self, real_images: &Tensor, real_series: &Tensor) -> Result<LossBreakdown> {
        let batch = real_images.shape()[0];
        check_batch(real_images, real_series)?;
        let (lx, ly) = (self.cfg.lambda_x, self.cfg.lambda_y);
        let mut row = LossBreakdown::default();

        for _ in 0..self.cfg.n_critic {
            let z = sample_latent(batch, self.cfg.d_z, &mut self.rng);
            let eps_x = uniforms(batch, &mut self.rng);
            let eps_y = uniforms(batch, &mut self.rng);
            let fake_images = self.bundle.g.eval(&z);
            let fake_series = self.bundle.f.eval(&fake_images);

            let graph = Graph::new();
            let (grads_x, grads_y) = {
                let dx = self.bundle.dx.bind(&graph);
                let dy = self.bundle.dy.bind(&graph);
                let tx = critic_terms(&dx, graph.input(real_images.clone()), graph.input(fake_images), lx, &eps_x)?;
                let ty = critic_terms(&dy, graph.input(real_series.clone()), graph.input(fake_series), ly, &eps_y)?;
                let (wx, gx) = tx.values();
                let (wy, gy) = ty.values();
                row = LossBreakdown::new(wx, gx, wy, gy, lx, ly);

                let loss = tx.critic_loss() + ty.critic_loss();
                let all: Vec<Var> = dx.params.iter().chain(&dy.params).copied().collect();
                let mut grads = values(&graph.grad(loss, &all));
                let grads_y = grads.split_off(dx.params.len());
                (grads, grads_y)
            };
            self.opt.dx.update(self.bundle.dx.params_mut(), &grads_x);
            self.opt.dy.update(self.bundle.dy.params_mut(), &grads_y);
        }

        let z = sample_latent(batch, self.cfg.d_z, &mut self.rng);
        let graph = Graph::new();
        let (grads_g, grads_f) = {
            let b = &self.bundle;
            let (g, f, dx, dy) = (b.g.bind(&graph), b.f.bind(&graph), b.dx.bind(&graph), b.dy.bind(&graph));
            let obj = generator_objective(&dx, &dy, &g, &f, graph.input(z), self.generator_mask);
            let all: Vec<Var> = g.params.iter().chain(&f.params).copied().collect();
            let mut grads = values(&graph.grad(obj, &all));
            let grads_f = grads.split_off(g.params.len());
            (grads, grads_f)
        };
        self.opt.g.update(self.bundle.g.params_mut(), &grads_g);
        self.opt.f.update(self.bundle.f.params_mut(), &grads_f);
        Ok(row)
    }

    /// A standalone image WGAN-GP iteration (`n_critic` D_x updates, one G
    /// update), then a standalone series WGAN-GP iteration on `G`'s detached
    /// output (`n_critic` D_y updates, one F update).
    pub fn train_step_serial(&mut self, real_images: &Tensor, real_series: &Tensor) -> Result<LossBreakdown> {
        let batch = real_images.shape()[0];
        check_batch(real_images, real_series)?;
        let (lx, ly) = (self.cfg.lambda_x, self.cfg.lambda_y);

        let mut image_terms = (0.0, 0.0);
        for _ in 0..self.cfg.n_critic {
            let z = sample_latent(batch, self.cfg.d_z, &mut self.rng);
            let eps = uniforms(batch, &mut self.rng);
            let fake = self.bundle.g.eval(&z);
            image_terms = critic_step(&mut self.bundle.dx, &mut self.opt.dx, real_images, &fake, lx, &eps)?;
        }
        let z = sample_latent(batch, self.cfg.d_z, &mut self.rng);
        let graph = Graph::new();
        let grads = {
            let (g, dx) = (self.bundle.g.bind(&graph), self.bundle.dx.bind(&graph));
            values(&graph.grad(image_generator_loss(&dx, &g, graph.input(z)), &g.params))
        };
        self.opt.g.update(self.bundle.g.params_mut(), &grads);

        let mut series_terms = (0.0, 0.0);
        for _ in 0..self.cfg.n_critic {
            let z = sample_latent(batch, self.cfg.d_z, &mut self.rng);
            let eps = uniforms(batch, &mut self.rng);
            let fake = self.bundle.f.eval(&self.bundle.g.eval(&z));
            series_terms = critic_step(&mut self.bundle.dy, &mut self.opt.dy, real_series, &fake, ly, &eps)?;
        }
        let z = sample_latent(batch, self.cfg.d_z, &mut self.rng);
        let graph = Graph::new();
        let grads = {
            let b = &self.bundle;
            let (g, f, dy) = (b.g.bind(&graph), b.f.bind(&graph), b.dy.bind(&graph));
            values(&graph.grad(series_generator_loss(Mode::Serial, &dy, &f, &g, graph.input(z)), &f.params))
        };
        self.opt.f.update(self.bundle.f.params_mut(), &grads);

        Ok(LossBreakdown::new(image_terms.0, image_terms.1, series_terms.0, series_terms.1, lx, ly))
    }

    /// Runs one epoch over independent seeded image and series batch
    /// streams, returning one loss row per step.
    pub fn train_epoch(&mut self, data: &TrainingData) -> Result<Vec<LossBreakdown>> {
        let n = data.len();
        let bs = self.cfg.batch_size_for(n);
        let epoch = self.epoch as u64 + 1;
        let image_batches = batch_indices(n, bs, stream_seed(self.cfg.seed, epoch, 0));
        let series_batches = batch_indices(n, bs, stream_seed(self.cfg.seed, epoch, 1));
        let mut rows = Vec::with_capacity(image_batches.len());
        for (ib, sb) in image_batches.iter().zip(&series_batches) {
            rows.push(self.train_step(&data.images.select_rows(ib), &data.series.select_rows(sb))?);
        }
        self.epoch += 1;
        Ok(rows)
    }

    /// Serializes the full training state.
    pub fn to_container(&self, data: &TrainingData, loss_rows: u64) -> Container {
        let mut c = Container::new();
        c.set_meta("kind", "trainer");
        c.set_meta("epoch", self.epoch);
        c.set_meta("step", self.step);
        c.set_meta("loss_rows", loss_rows);
        c.set_meta("config", self.cfg.to_kv());
        c.set_meta("dataset", &data.dataset);
        c.set_meta("class", data.class_id);
        c.set_meta("series_len", data.series_len());
        c.set_meta("data_scale", data.data_scale);
        c.set_meta("rng_seed", hex(&self.rng.get_seed()));
        c.set_meta("rng_stream", self.rng.get_stream());
        c.set_meta("rng_word_pos", self.rng.get_word_pos());
        c.set_meta("generator_mask", format!("{},{}", self.generator_mask.image, self.generator_mask.series));
        let nets = [
            ("g", &self.bundle.g, &self.opt.g),
            ("dx", &self.bundle.dx, &self.opt.dx),
            ("f", &self.bundle.f, &self.opt.f),
            ("dy", &self.bundle.dy, &self.opt.dy),
        ];
        for (tag, net, adam) in nets {
            c.set_meta(&format!("adam.{tag}.step"), adam.step);
            for (name, t) in net.params().names().iter().zip(net.params().values()) {
                c.push(format!("{tag}/{name}"), t.clone());
            }
            for (i, (m, v)) in adam.m.iter().zip(&adam.v).enumerate() {
                c.push(format!("adam/{tag}/m/{i}"), m.clone());
                c.push(format!("adam/{tag}/v/{i}"), v.clone());
            }
        }
        c
    }

    /// Restores a state written by [`Trainer::to_container`].
    pub fn from_container(c: &Container, path: &Path) -> Result<(Self, CheckpointInfo)> {
        let bad = |msg: String| Error::Checkpoint {
            path: path.to_path_buf(),
            msg,
        };
        if c.meta("kind", path)? != "trainer" {
            return Err(bad("not a training checkpoint".into()));
        }
        let cfg = TrainingConfig::from_kv(c.meta("config", path)?)?;
        let series_len: usize = c.parse_meta("series_len", path)?;
        let mut t = Trainer::new(cfg, series_len)?;
        t.epoch = c.parse_meta("epoch", path)?;
        t.step = c.parse_meta("step", path)?;

        let seed = unhex(c.meta("rng_seed", path)?).ok_or_else(|| bad("bad rng_seed".into()))?;
        t.rng = ChaCha8Rng::from_seed(seed);
        t.rng.set_stream(c.parse_meta("rng_stream", path)?);
        t.rng.set_word_pos(c.parse_meta("rng_word_pos", path)?);
        let mask = c.meta("generator_mask", path)?;
        let (image, series) = mask.split_once(',').ok_or_else(|| bad("bad generator_mask".into()))?;
        t.generator_mask = TermMask {
            image: image == "true",
            series: series == "true",
        };

        let Trainer { bundle, opt, .. } = &mut t;
        let nets = [
            ("g", &mut bundle.g, &mut opt.g),
            ("dx", &mut bundle.dx, &mut opt.dx),
            ("f", &mut bundle.f, &mut opt.f),
            ("dy", &mut bundle.dy, &mut opt.dy),
        ];
        for (tag, net, adam) in nets {
            adam.step = c.parse_meta(&format!("adam.{tag}.step"), path)?;
            let names = net.params().names().to_vec();
            for (i, name) in names.iter().enumerate() {
                let stored = c.array(&format!("{tag}/{name}"), path)?;
                let slot = &mut net.params_mut().values_mut()[i];
                if stored.shape() != slot.shape() {
                    return Err(bad(format!("{tag}/{name}: shape {:?} vs {:?}", stored.shape(), slot.shape())));
                }
                *slot = stored.clone();
                adam.m[i] = c.array(&format!("adam/{tag}/m/{i}"), path)?.clone();
                adam.v[i] = c.array(&format!("adam/{tag}/v/{i}"), path)?.clone();
            }
        }
        let info = CheckpointInfo {
            epoch: t.epoch,
            step: t.step,
            loss_rows: c.parse_meta("loss_rows", path)?,
            dataset: c.meta("dataset", path)?.to_string(),
            class_id: c.parse_meta("class", path)?,
            data_scale: c.parse_meta("data_scale", path)?,
        };
        Ok((t, info))
    }

    pub fn save(&self, data: &TrainingData, loss_rows: u64, path: &Path) -> Result<()> {
        self.to_container(data, loss_rows).save(path)
    }

    pub fn load(path: &Path) -> Result<(Self, CheckpointInfo)> {
        Self::from_container(&Container::load(path)?, path)
    }
}

/// Bookkeeping stored beside the training state in a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointInfo {
    pub epoch: usize,
    pub step: u64,
    pub loss_rows: u64,
    pub dataset: String,
    pub class_id: usize,
    pub data_scale: f64,
}

fn check_batch(images: &Tensor, series: &Tensor) -> Result<()> {
    if images.rank() != 4 || series.rank() != 2 || images.shape()[0] != series.shape()[0] || images.shape()[0] == 0 {
        return Err(Error::Shape(format!(
            "expected equally sized [B, 3, S, S] and [B, L] batches, got {:?} and {:?}",
            images.shape(),
            series.shape()
        )));
    }
    Ok(())
}

/// Seed of the batch stream `stream` in `epoch`.
pub fn stream_seed(seed: u64, epoch: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1_000 + stream);
    rng.set_word_pos(epoch as u128 * 2);
    rng.random()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}

pub const LOSS_HEADER: &str = "step,epoch,wgan_x,gp_x,wgan_y,gp_y,l_x,l_y,unified";
pub const TIMING_HEADER: &str = "epoch,seconds";

/// Files of one training run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunDir(pub PathBuf);

impl RunDir {
    /// `<root>/<dataset>/<class>/<mode>/<seed>`.
    pub fn new(root: &Path, dataset: &str, class_id: usize, mode: Mode, seed: u64) -> Self {
        RunDir(root.join(dataset).join(class_id.to_string()).join(mode.to_string()).join(seed.to_string()))
    }

    pub fn path(&self) -> &Path {
        &self.0
    }

    pub fn config(&self) -> PathBuf {
        self.0.join("config")
    }

    pub fn losses(&self) -> PathBuf {
        self.0.join("losses.csv")
    }

    pub fn timing(&self) -> PathBuf {
        self.0.join("timing.csv")
    }

    pub fn checkpoint(&self, epoch: usize) -> PathBuf {
        self.0.join(format!("epoch_{epoch}.ckpt"))
    }

    /// Checkpoints present on disk, sorted by epoch.
    pub fn checkpoints(&self) -> Result<Vec<(usize, PathBuf)>> {
        let mut out = Vec::new();
        let entries = match fs::read_dir(&self.0) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(e).at(&self.0),
        };
        for entry in entries {
            let entry = entry.at(&self.0)?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if let Some(epoch) = name.strip_prefix("epoch_").and_then(|s| s.strip_suffix(".ckpt")) {
                if let Ok(e) = epoch.parse() {
                    out.push((e, entry.path()));
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

/// One parsed `losses.csv` row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRow {
    pub step: u64,
    pub epoch: usize,
    pub loss: LossBreakdown,
}

pub fn format_loss_row(step: u64, epoch: usize, b: &LossBreakdown) -> String {
    format!(
        "{step},{epoch},{},{},{},{},{},{},{}",
        b.wgan_x, b.gp_x, b.wgan_y, b.gp_y, b.l_x, b.l_y, b.unified
    )
}

pub fn read_losses(path: &Path) -> Result<Vec<LossRow>> {
    let text = fs::read_to_string(path).at(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad("expected 9 fields"));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad("bad number"));
        rows.push(LossRow {
            step: f[0].parse().map_err(|_| bad("bad step"))?,
            epoch: f[1].parse().map_err(|_| bad("bad epoch"))?,
            loss: LossBreakdown {
                wgan_x: num(2)?,
                gp_x: num(3)?,
                wgan_y: num(4)?,
                gp_y: num(5)?,
                l_x: num(6)?,
                l_y: num(7)?,
                unified: num(8)?,
                lambda_x: f64::NAN,
                lambda_y: f64::NAN,
            },
        });
    }
    Ok(rows)
}

/// `(epoch, seconds)` rows of `timing.csv`.
pub fn read_timing(path: &Path) -> Result<Vec<(usize, f64)>> {
    let text = fs::read_to_string(path).at(path)?;
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, line)| {
            let bad = || Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected epoch,seconds".into(),
            };
            let (e, s) = line.split_once(',').ok_or_else(bad)?;
            Ok((e.parse().map_err(|_| bad())?, s.parse().map_err(|_| bad())?))
        })
        .collect()
}

/// Keeps the header and the first `keep` data rows of a CSV log.
fn truncate_log(path: &Path, header: &str, keep: usize) -> Result<()> {
    let text = fs::read_to_string(path).unwrap_or_default();
    let mut out = String::from(header);
    out.push('\n');
    for line in text.lines().skip(1).take(keep) {
        out.push_str(line);
        out.push('\n');
    }
    fs::write(path, out).at(path)
}

fn append_lines(path: &Path, lines: &[String]) -> Result<()> {
    let file = fs::OpenOptions::new().append(true).open(path).at(path)?;
    let mut w = BufWriter::new(file);
    for l in lines {
        writeln!(w, "{l}").at(path)?;
    }
    w.flush().at(path)
}

/// What a finished (or resumed and finished) run left on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub dir: RunDir,
    pub checkpoints: Vec<(usize, PathBuf)>,
    pub steps: u64,
}

/// Trains one class to `cfg.epochs`, writing the config echo, loss log,
/// timing log and checkpoints into `dir`. With `resume`, continues from
/// the latest checkpoint in `dir`, truncating the logs to match it.
///
/// A non-finite loss stops the run with an error; checkpoints already
/// written are left in place.
pub fn train_in(dir: &RunDir, data: &TrainingData, cfg: &TrainingConfig, resume: bool) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(dir.path()).at(dir.path())?;

    let latest = if resume { dir.checkpoints()?.pop() } else { None };
    let mut trainer = match latest {
        Some((_, path)) => {
            let (mut t, info) = Trainer::load(&path)?;
            let mut saved = t.cfg.clone();
            saved.epochs = cfg.epochs;
            saved.checkpoints = cfg.checkpoints.clone();
            if saved != *cfg {
                return Err(Error::Config(format!(
                    "{} was written with a different configuration; only epochs and checkpoints may change on resume",
                    path.display()
                )));
            }
            t.cfg = cfg.clone();
            truncate_log(&dir.losses(), LOSS_HEADER, info.loss_rows as usize)?;
            truncate_log(&dir.timing(), TIMING_HEADER, info.epoch)?;
            t
        }
        None => {
            for (_, p) in dir.checkpoints()? {
                fs::remove_file(&p).at(&p)?;
            }
            truncate_log(&dir.losses(), LOSS_HEADER, 0)?;
            truncate_log(&dir.timing(), TIMING_HEADER, 0)?;
            Trainer::new(cfg.clone(), data.series_len())?
        }
    };
    fs::write(dir.config(), cfg.to_kv()).at(dir.config())?;

    let marks = cfg.checkpoint_epochs();
    while trainer.epoch < cfg.epochs {
        let start = Instant::now();
        let first_step = trainer.step;
        let result = trainer.train_epoch(data);
        let seconds = start.elapsed().as_secs_f64();
        let rows = result?;
        let epoch = trainer.epoch;
        let lines: Vec<String> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| format_loss_row(first_step + i as u64 + 1, epoch, r))
            .collect();
        append_lines(&dir.losses(), &lines)?;
        append_lines(&dir.timing(), &[format!("{epoch},{seconds}")])?;
        if marks.contains(&epoch) {
            trainer.save(data, trainer.step, &dir.checkpoint(epoch))?;
        }
    }
    Ok(RunOutcome {
        dir: dir.clone(),
        checkpoints: dir.checkpoints()?,
        steps: trainer.step,
    })
}

/// Trains a per-class model under `root/<dataset>/<class>/<mode>/<seed>`.
/// `dataset` is the full (all-class) dataset.
pub fn train(dataset: &Dataset, dataset_name: &str, class_id: usize, cfg: &TrainingConfig, root: &Path, resume: bool) -> Result<RunOutcome> {
    let class = crate::dataset::filter_class(dataset, class_id)?;
    let data = TrainingData::new(dataset_name, class_id, &class, cfg)?;
    let dir = RunDir::new(root, dataset_name, class_id, cfg.mode, cfg.seed);
    train_in(&dir, &data, cfg, resume)
}
