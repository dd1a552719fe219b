//! The four adversarial networks and the FCN classifier.
//!
//! Every network is a flat [`ParamSet`] plus a list of layers that index into
//! it. Forward passes run on a caller-supplied [`Graph`] so the trainer can
//! differentiate through several networks at once; [`Network::eval`] is the
//! graph-free convenience for inference.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use utsgan_autograd::{ConvGeom, Graph, Tensor, Var};

use crate::error::{Error, Result};

const INIT_STD: f64 = 0.02;
const LEAK: f64 = 0.2;
pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;
pub const FCN_FEATURES: usize = 128;

/// Named parameter tensors in a fixed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Tensor) -> usize {
        self.names.push(name.into());
        self.values.push(value);
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Tensor] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Tensor] {
        &mut self.values
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Records every tensor as an input on `g`.
    pub fn attach<'g>(&self, g: &'g Graph) -> Vec<Var<'g>> {
        self.values.iter().map(|t| g.input(t.clone())).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(Tensor::is_finite)
    }

    pub fn max_abs_diff(&self, other: &ParamSet) -> f64 {
        assert_eq!(self.names, other.names);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Batch-norm running statistics for one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl RunningStats {
    fn new(channels: usize) -> Self {
        RunningStats {
            mean: vec![0.0; channels],
            var: vec![1.0; channels],
        }
    }
}

/// Whether batch-norm layers normalize with batch statistics (updating the
/// supplied running averages) or with the stored running averages.
pub enum BnMode<'a> {
    Eval,
    Train(&'a mut [RunningStats]),
}

#[derive(Clone, Debug, PartialEq)]
enum Layer {
    Linear { w: usize, b: usize },
    Conv { w: usize, b: usize, geom: ConvGeom },
    ConvT { w: usize, b: usize, geom: ConvGeom, out: [usize; 2] },
    BatchNorm { gamma: usize, beta: usize, slot: usize },
    /// Per-sample reshape; the batch axis is kept.
    View(Vec<usize>),
    LeakyRelu(f64),
    Tanh,
    /// `[B, C, H, W]` → `[B, C]`.
    GlobalAvgPool,
}

/// A feed-forward stack.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    input: Vec<usize>,
    layers: Vec<Layer>,
    params: ParamSet,
    running: Vec<RunningStats>,
}

impl Network {
    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn running(&self) -> &[RunningStats] {
        &self.running
    }

    pub fn set_running(&mut self, stats: Vec<RunningStats>) {
        assert_eq!(stats.len(), self.running.len());
        self.running = stats;
    }

    /// Per-sample input shape.
    pub fn input_shape(&self) -> &[usize] {
        &self.input
    }

    /// Forward pass in evaluation mode with the parameters attached as `p`.
    pub fn forward<'g>(&self, p: &[Var<'g>], x: Var<'g>) -> Var<'g> {
        self.forward_with(p, x, BnMode::Eval)
    }

    pub fn forward_with<'g>(&self, p: &[Var<'g>], x: Var<'g>, mut bn: BnMode<'_>) -> Var<'g> {
        assert_eq!(p.len(), self.params.len(), "parameter count");
        let shape = x.shape();
        assert_eq!(&shape[1..], &self.input[..], "input shape");
        let batch = shape[0];
        let mut h = x;
        for layer in &self.layers {
            h = match layer {
                Layer::Linear { w, b } => h.matmul(p[*w]).add_channel_bias(p[*b]),
                Layer::Conv { w, b, geom } => h.conv2d(p[*w], *geom).add_channel_bias(p[*b]),
                Layer::ConvT { w, b, geom, out } => h.conv2d_transpose(p[*w], *geom, *out).add_channel_bias(p[*b]),
                Layer::BatchNorm { gamma, beta, slot } => match &mut bn {
                    BnMode::Eval => batch_norm_eval(h, p[*gamma], p[*beta], &self.running[*slot]),
                    BnMode::Train(stats) => batch_norm_train(h, p[*gamma], p[*beta], &mut stats[*slot]),
                },
                Layer::View(s) => {
                    let mut full = vec![batch];
                    full.extend_from_slice(s);
                    h.reshape(full)
                }
                Layer::LeakyRelu(slope) => h.leaky_relu(*slope),
                Layer::Tanh => h.tanh(),
                Layer::GlobalAvgPool => {
                    let s = h.shape();
                    let spatial: usize = s[2..].iter().product();
                    h.reshape([s[0], s[1], spatial]).sum_last().scale(1.0 / spatial as f64)
                }
            };
        }
        h
    }

    /// Attaches the parameters to `g` for use in a larger computation.
    pub fn bind<'a, 'g>(&'a self, g: &'g Graph) -> Bound<'a, 'g> {
        Bound {
            net: self,
            params: self.params.attach(g),
        }
    }

    /// Graph-free forward in evaluation mode.
    pub fn eval(&self, x: &Tensor) -> Tensor {
        let g = Graph::new();
        let p = self.params.attach(&g);
        let out = self.forward(&p, g.input(x.clone()));
        (*out.value()).clone()
    }
}

/// A network whose parameters live on a graph.
pub struct Bound<'a, 'g> {
    pub net: &'a Network,
    pub params: Vec<Var<'g>>,
}

impl<'g> Bound<'_, 'g> {
    pub fn apply(&self, x: Var<'g>) -> Var<'g> {
        self.net.forward(&self.params, x)
    }
}

fn batch_norm_train<'g>(x: Var<'g>, gamma: Var<'g>, beta: Var<'g>, stats: &mut RunningStats) -> Var<'g> {
    let shape = x.shape();
    let n = (shape[0] * shape[2..].iter().product::<usize>()) as f64;
    let mean = x.sum_channels().scale(1.0 / n);
    let centred = x - mean.broadcast_channels(shape.clone());
    let var = centred.square().sum_channels().scale(1.0 / n);
    let scale = var.add_scalar(BN_EPS).sqrt().recip() * gamma;

    let unbiased = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
    for (c, (m, v)) in mean.value().data().iter().zip(var.value().data()).enumerate() {
        stats.mean[c] = (1.0 - BN_MOMENTUM) * stats.mean[c] + BN_MOMENTUM * m;
        stats.var[c] = (1.0 - BN_MOMENTUM) * stats.var[c] + BN_MOMENTUM * v * unbiased;
    }
    (centred * scale.broadcast_channels(shape)).add_channel_bias(beta)
}

fn batch_norm_eval<'g>(x: Var<'g>, gamma: Var<'g>, beta: Var<'g>, stats: &RunningStats) -> Var<'g> {
    let c = stats.mean.len();
    let inv = Tensor::new([c], stats.var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect());
    let scale = gamma.mul_const(inv.into());
    let shift = beta - scale.mul_const(Tensor::new([c], stats.mean.clone()).into());
    (x * scale.broadcast_channels(x.shape())).add_channel_bias(shift)
}

struct Builder {
    input: Vec<usize>,
    layers: Vec<Layer>,
    params: ParamSet,
    running: Vec<RunningStats>,
    rng: ChaCha8Rng,
    init: Normal<f64>,
}

impl Builder {
    fn new(input: Vec<usize>, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Builder {
            input,
            layers: Vec::new(),
            params: ParamSet::new(),
            running: Vec::new(),
            rng,
            init: Normal::new(0.0, INIT_STD).unwrap(),
        }
    }

    fn weight(&mut self, name: String, shape: Vec<usize>) -> usize {
        let n = shape.iter().product();
        let data = (0..n).map(|_| self.init.sample(&mut self.rng)).collect();
        self.params.push(name, Tensor::new(shape, data))
    }

    fn bias(&mut self, name: String, n: usize) -> usize {
        self.params.push(name, Tensor::zeros([n]))
    }

    fn linear(&mut self, inp: usize, out: usize) -> &mut Self {
        let i = self.layers.len();
        let w = self.weight(format!("{i}.linear.weight"), vec![inp, out]);
        let b = self.bias(format!("{i}.linear.bias"), out);
        self.layers.push(Layer::Linear { w, b });
        self
    }

    fn conv(&mut self, inp: usize, out: usize, kernel: [usize; 2], geom: ConvGeom) -> &mut Self {
        let i = self.layers.len();
        let w = self.weight(format!("{i}.conv.weight"), vec![out, inp, kernel[0], kernel[1]]);
        let b = self.bias(format!("{i}.conv.bias"), out);
        self.layers.push(Layer::Conv { w, b, geom });
        self
    }

    fn conv_t(&mut self, inp: usize, out: usize, kernel: [usize; 2], geom: ConvGeom, size: [usize; 2]) -> &mut Self {
        let i = self.layers.len();
        let w = self.weight(format!("{i}.conv_t.weight"), vec![inp, out, kernel[0], kernel[1]]);
        let b = self.bias(format!("{i}.conv_t.bias"), out);
        self.layers.push(Layer::ConvT { w, b, geom, out: size });
        self
    }

    fn batch_norm(&mut self, channels: usize) -> &mut Self {
        let i = self.layers.len();
        let gamma = self.params.push(format!("{i}.bn.gamma"), Tensor::ones([channels]));
        let beta = self.params.push(format!("{i}.bn.beta"), Tensor::zeros([channels]));
        self.running.push(RunningStats::new(channels));
        let slot = self.running.len() - 1;
        self.layers.push(Layer::BatchNorm { gamma, beta, slot });
        self
    }

    fn push(&mut self, layer: Layer) -> &mut Self {
        self.layers.push(layer);
        self
    }

    fn build(self) -> Network {
        Network {
            input: self.input,
            layers: self.layers,
            params: self.params,
            running: self.running,
        }
    }
}

const DOWN: ConvGeom = ConvGeom {
    stride: [2, 2],
    pad: [1, 1],
};
const DOWN_1D: ConvGeom = ConvGeom {
    stride: [1, 2],
    pad: [0, 1],
};

fn same_1d(kernel: usize) -> ConvGeom {
    ConvGeom::new([1, 1], [0, kernel / 2])
}

/// Channel widths of the four GAN networks.
#[derive(Clone, Debug, PartialEq)]
pub struct Widths {
    /// Channels of G's last hidden stage; doubled per stage towards the input.
    pub g_base: usize,
    /// Channels of D_x's first stage; doubled per stage.
    pub dx_base: usize,
    /// Channels of F's first encoder stage; F uses base, 2·base, 4·base.
    pub f_base: usize,
    pub f_bottleneck: usize,
    pub dy: [usize; 3],
}

impl Default for Widths {
    fn default() -> Self {
        Widths {
            g_base: 32,
            dx_base: 32,
            f_base: 32,
            f_bottleneck: 256,
            dy: [64, 128, 64],
        }
    }
}

impl Widths {
    /// Small widths for tests and smoke runs.
    pub fn tiny() -> Self {
        Widths {
            g_base: 4,
            dx_base: 4,
            f_base: 4,
            f_bottleneck: 16,
            dy: [4, 8, 4],
        }
    }
}

/// Number of stride-2 stages between 4×4 and `size`×`size`.
fn image_stages(size: usize) -> Result<usize> {
    if size < 8 || !size.is_power_of_two() {
        return Err(Error::Config(format!("image size must be a power of two >= 8, got {size}")));
    }
    Ok((size / 4).ilog2() as usize)
}

/// G: `[B, d_z]` → `[B, 3, S, S]` in [-1, 1].
pub fn image_generator(d_z: usize, size: usize, base: usize, seed: u64) -> Result<Network> {
    let stages = image_stages(size)?;
    let ch0 = base << (stages - 1);
    let mut b = Builder::new(vec![d_z], seed, 0);
    b.linear(d_z, ch0 * 16).push(Layer::View(vec![ch0, 4, 4])).push(Layer::LeakyRelu(0.0));
    let (mut ch, mut side) = (ch0, 4);
    for s in 0..stages {
        let last = s + 1 == stages;
        let out = if last { 3 } else { ch / 2 };
        side *= 2;
        b.conv_t(ch, out, [4, 4], DOWN, [side, side]);
        b.push(if last { Layer::Tanh } else { Layer::LeakyRelu(0.0) });
        ch = out;
    }
    Ok(b.build())
}

/// D_x: `[B, 3, S, S]` → `[B]`, unbounded.
pub fn image_critic(size: usize, base: usize, seed: u64) -> Result<Network> {
    let stages = image_stages(size)?;
    let mut b = Builder::new(vec![3, size, size], seed, 1);
    let mut ch = 3;
    for s in 0..stages {
        let out = base << s;
        b.conv(ch, out, [4, 4], DOWN).push(Layer::LeakyRelu(LEAK));
        ch = out;
    }
    b.push(Layer::View(vec![ch * 16])).linear(ch * 16, 1).push(Layer::View(vec![]));
    Ok(b.build())
}

/// F: `[B, 3, S, S]` → `[B, L]` in [-1, 1], a strided-conv encoder to a
/// bottleneck vector followed by a 1-D transposed-conv decoder.
pub fn signal_generator(size: usize, len: usize, widths: &Widths, seed: u64) -> Result<Network> {
    image_stages(size)?;
    if len < 8 {
        return Err(Error::Config(format!("series length must be >= 8, got {len}")));
    }
    let f = widths.f_base;
    let mut b = Builder::new(vec![3, size, size], seed, 2);
    b.conv(3, f, [4, 4], DOWN).push(Layer::LeakyRelu(LEAK));
    b.conv(f, 2 * f, [4, 4], DOWN).push(Layer::LeakyRelu(LEAK));
    b.conv(2 * f, 4 * f, [4, 4], DOWN).push(Layer::LeakyRelu(LEAK));
    let flat = 4 * f * (size / 8) * (size / 8);
    b.push(Layer::View(vec![flat])).linear(flat, widths.f_bottleneck).push(Layer::LeakyRelu(LEAK));

    let l0 = len >> 3;
    b.linear(widths.f_bottleneck, 4 * f * l0)
        .push(Layer::View(vec![4 * f, 1, l0]))
        .push(Layer::LeakyRelu(0.0));
    b.conv_t(4 * f, 2 * f, [1, 4], DOWN_1D, [1, len >> 2]).push(Layer::LeakyRelu(0.0));
    b.conv_t(2 * f, f, [1, 4], DOWN_1D, [1, len >> 1]).push(Layer::LeakyRelu(0.0));
    b.conv_t(f, 1, [1, 4], DOWN_1D, [1, len]).push(Layer::Tanh);
    b.push(Layer::View(vec![len]));
    Ok(b.build())
}

/// D_y: `[B, L]` → `[B]`, a 1-D fully-convolutional stack with global
/// average pooling.
pub fn signal_critic(len: usize, widths: [usize; 3], seed: u64) -> Result<Network> {
    if len < 8 {
        return Err(Error::Config(format!("series length must be >= 8, got {len}")));
    }
    let mut b = Builder::new(vec![len], seed, 3);
    b.push(Layer::View(vec![1, 1, len]));
    let mut ch = 1;
    for (w, k) in widths.into_iter().zip([8, 5, 3]) {
        b.conv(ch, w, [1, k], same_1d(k)).push(Layer::LeakyRelu(LEAK));
        ch = w;
    }
    b.push(Layer::GlobalAvgPool).linear(ch, 1).push(Layer::View(vec![]));
    Ok(b.build())
}

/// Parameters of G, D_x, F and D_y.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub g: Network,
    pub dx: Network,
    pub f: Network,
    pub dy: Network,
    pub d_z: usize,
    pub image_size: usize,
    pub series_len: usize,
}

impl ModelBundle {
    /// `F(G(z))` for a `[B, d_z]` latent batch.
    pub fn generate_series(&self, z: &Tensor) -> Tensor {
        self.f.eval(&self.g.eval(z))
    }
}

/// Deterministic initialization: normal(0, 0.02) weights, zero biases, one
/// independent random stream per network.
pub fn init_bundle(seed: u64, d_z: usize, size: usize, len: usize, widths: &Widths) -> Result<ModelBundle> {
    if d_z == 0 {
        return Err(Error::Config("d_z must be >= 1".into()));
    }
    Ok(ModelBundle {
        g: image_generator(d_z, size, widths.g_base, seed)?,
        dx: image_critic(size, widths.dx_base, seed)?,
        f: signal_generator(size, len, widths, seed)?,
        dy: signal_critic(len, widths.dy, seed)?,
        d_z,
        image_size: size,
        series_len: len,
    })
}

/// Standard-normal `[batch, d_z]` latent draws.
pub fn sample_latent(batch: usize, d_z: usize, rng: &mut impl rand::Rng) -> Tensor {
    let data = (0..batch * d_z).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    Tensor::new([batch, d_z], data)
}

/// Fully-convolutional time-series classifier: three conv / batch-norm /
/// ReLU blocks, global average pooling to [`FCN_FEATURES`], and a linear
/// softmax head.
#[derive(Clone, Debug, PartialEq)]
pub struct FcnClassifier {
    pub body: Network,
    pub head: Network,
    pub classes: usize,
    blocks: [(usize, usize); 3],
}

/// Conv widths and kernels of the FCN body.
pub const FCN_BLOCKS: [(usize, usize); 3] = [(128, 8), (256, 5), (FCN_FEATURES, 3)];

impl FcnClassifier {
    pub fn new(len: usize, classes: usize, seed: u64) -> Result<Self> {
        Self::with_blocks(len, classes, FCN_BLOCKS, seed)
    }

    /// Like [`FcnClassifier::new`] with custom `(width, kernel)` blocks.
    pub fn with_blocks(len: usize, classes: usize, blocks: [(usize, usize); 3], seed: u64) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config(format!("classifier needs >= 2 classes, got {classes}")));
        }
        let mut b = Builder::new(vec![len], seed, 4);
        b.push(Layer::View(vec![1, 1, len]));
        let mut ch = 1;
        for (w, k) in blocks {
            b.conv(ch, w, [1, k], same_1d(k)).batch_norm(w).push(Layer::LeakyRelu(0.0));
            ch = w;
        }
        b.push(Layer::GlobalAvgPool);
        let body = b.build();
        let mut h = Builder::new(vec![ch], seed, 5);
        h.linear(ch, classes);
        Ok(FcnClassifier {
            body,
            head: h.build(),
            classes,
            blocks,
        })
    }

    pub fn blocks(&self) -> [(usize, usize); 3] {
        self.blocks
    }

    pub fn series_len(&self) -> usize {
        self.body.input_shape()[0]
    }

    pub fn feature_dim(&self) -> usize {
        self.head.input_shape()[0]
    }

    fn check_len(&self, x: &Tensor) -> Result<()> {
        if x.rank() != 2 || x.shape()[1] != self.series_len() {
            return Err(Error::Shape(format!(
                "classifier expects [n, {}] series, got {:?}",
                self.series_len(),
                x.shape()
            )));
        }
        Ok(())
    }

    /// Class probabilities and pooled features, evaluation mode.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        self.check_len(x)?;
        let g = Graph::new();
        let pb = self.body.params.attach(&g);
        let ph = self.head.params.attach(&g);
        let feats = self.body.forward(&pb, g.input(x.clone()));
        let probs = self.head.forward(&ph, feats).log_softmax().exp();
        Ok(((*probs.value()).clone(), (*feats.value()).clone()))
    }

    /// Pooled features, evaluation mode.
    pub fn features(&self, x: &Tensor) -> Result<Tensor> {
        self.check_len(x)?;
        Ok(self.body.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_at_default_widths() {
        let b = init_bundle(0, 100, 64, 150, &Widths::default()).unwrap();
        let names = b.g.params().names();
        assert_eq!(b.g.params().values()[0].shape(), &[100, 256 * 16]);
        assert_eq!(names.len(), 2 + 2 * 4);
        let z = Tensor::zeros([1, 100]);
        let img = b.g.eval(&z);
        assert_eq!(img.shape(), &[1, 3, 64, 64]);
        assert_eq!(b.dx.eval(&img).shape(), &[1]);
        let y = b.f.eval(&img);
        assert_eq!(y.shape(), &[1, 150]);
        assert_eq!(b.dy.eval(&y).shape(), &[1]);
    }

    #[test]
    fn odd_lengths_decode_exactly() {
        for len in [8, 9, 15, 24, 150, 251, 512] {
            let f = signal_generator(16, len, &Widths::tiny(), 1).unwrap();
            assert_eq!(f.eval(&Tensor::zeros([2, 3, 16, 16])).shape(), &[2, len]);
        }
    }

    #[test]
    fn invalid_dimensions() {
        assert!(init_bundle(0, 0, 32, 64, &Widths::tiny()).is_err());
        assert!(init_bundle(0, 8, 48, 64, &Widths::tiny()).is_err());
        assert!(init_bundle(0, 8, 32, 7, &Widths::tiny()).is_err());
        assert!(FcnClassifier::new(64, 1, 0).is_err());
    }

    #[test]
    fn initialization_statistics() {
        let b = init_bundle(3, 16, 32, 64, &Widths::default()).unwrap();
        let w = &b.dx.params().values()[0];
        let mean = w.mean();
        let std = (w.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
        assert!(mean.abs() < 0.003, "{mean}");
        assert!((std - 0.02).abs() < 0.002, "{std}");
        assert!(b.dx.params().values()[1].data().iter().all(|&v| v == 0.0));
    }

    fn moments(v: &[f64]) -> (f64, f64) {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64)
    }

    #[test]
    fn batch_norm_train_normalizes() {
        let fcn = FcnClassifier::with_blocks(16, 2, [(4, 3), (4, 3), (4, 3)], 0).unwrap();
        let x = Tensor::new([3, 16], (0..48).map(|i| (i as f64 * 0.37).sin() * 5.0 + 2.0).collect());
        let g = Graph::new();
        let p = fcn.body.params().attach(&g);
        let h = g.input(x.reshape([3, 1, 1, 16]));
        let conv = h.conv2d(p[0], same_1d(3)).add_channel_bias(p[1]);
        let mut stats = [RunningStats::new(4)];
        let y = batch_norm_train(conv, p[2], p[3], &mut stats[0]);
        let v = y.value();
        let (b, c, l) = (3, 4, v.shape()[3]);
        for ch in 0..c {
            let vals: Vec<f64> = (0..b)
                .flat_map(|bi| (0..l).map(move |t| (bi, t)))
                .map(|(bi, t)| v.data()[(bi * c + ch) * l + t])
                .collect();
            let raw: Vec<f64> = (0..b)
                .flat_map(|bi| (0..l).map(move |t| (bi, t)))
                .map(|(bi, t)| conv.value().data()[(bi * c + ch) * l + t])
                .collect();
            let (m, var) = moments(&vals);
            let (_, raw_var) = moments(&raw);
            assert!(m.abs() < 1e-10);
            assert!((var - raw_var / (raw_var + BN_EPS)).abs() < 1e-12, "{var}");
        }
        assert!(stats[0].mean.iter().any(|&m| m != 0.0));
    }
}
