#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use utsgan::dataset::{load_ucr, Dataset};
use utsgan::nn::{init_bundle, ModelBundle, Network, Widths};
use utsgan_autograd::Tensor;

pub const MINI_SIZE: usize = 8;
pub const MINI_LEN: usize = 16;
pub const MINI_DZ: usize = 4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_tensor(shape: &[usize], std: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    let d = Normal::new(0.0, std).unwrap();
    Tensor::new(shape, (0..n).map(|_| d.sample(rng)).collect())
}

pub fn uniform_tensor(shape: &[usize], lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(lo..hi)).collect())
}

/// Replaces every parameter with fresh normal draws, so small networks have
/// gradients well above finite-difference noise.
pub fn randomize(net: &mut Network, std: f64, rng: &mut ChaCha8Rng) {
    for t in net.params_mut().values_mut() {
        *t = normal_tensor(t.shape(), std, rng);
    }
}

/// Tiny networks at 8×8 images and length-16 series with re-drawn weights.
pub fn mini_bundle(seed: u64) -> ModelBundle {
    let mut b = init_bundle(seed, MINI_DZ, MINI_SIZE, MINI_LEN, &Widths::tiny()).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    for net in nets_mut(&mut b) {
        randomize(net, 0.3, &mut r);
    }
    b
}

pub fn nets(b: &ModelBundle) -> [&Network; 4] {
    [&b.g, &b.dx, &b.f, &b.dy]
}

pub fn nets_mut(b: &mut ModelBundle) -> [&mut Network; 4] {
    [&mut b.g, &mut b.dx, &mut b.f, &mut b.dy]
}

pub const NET_NAMES: [&str; 4] = ["G", "D_x", "F", "D_y"];
pub const G: usize = 0;
pub const DX: usize = 1;
pub const F: usize = 2;
pub const DY: usize = 3;

/// Outcome of comparing analytic gradients with central differences at
/// randomly probed coordinates.
#[derive(Debug)]
pub struct GradCheck {
    pub probed: usize,
    pub agreeing: usize,
    pub worst: Vec<(String, f64, f64)>,
}

impl GradCheck {
    pub fn fraction(&self) -> f64 {
        self.agreeing as f64 / self.probed as f64
    }
}

/// Relative error with a small absolute floor, so coordinates whose true
/// gradient is at rounding level do not count as disagreements.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Probes `count` random coordinates of the networks in `which`, comparing
/// `analytic[net][param][elem]` against a central difference of `loss`.
pub fn grad_check(
    bundle: &ModelBundle,
    which: &[usize],
    count: usize,
    seed: u64,
    tol: f64,
    analytic: &[Vec<Tensor>; 4],
    loss: impl Fn(&ModelBundle) -> f64,
) -> GradCheck {
    let mut r = rng(seed);
    let h = 1e-5;
    let mut agreeing = 0;
    let mut misses = Vec::new();
    for _ in 0..count {
        let k = which[r.random_range(0..which.len())];
        let net = nets(bundle)[k];
        let p = r.random_range(0..net.params().len());
        let e = r.random_range(0..net.params().values()[p].len());
        let shifted = |delta: f64| {
            let mut b = bundle.clone();
            nets_mut(&mut b)[k].params_mut().values_mut()[p].data_mut()[e] += delta;
            loss(&b)
        };
        let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
        let exact = analytic[k][p].data()[e];
        let err = rel_err(exact, numeric);
        if err <= tol {
            agreeing += 1;
        } else {
            misses.push((format!("{}/{}[{e}]", NET_NAMES[k], net.params().names()[p]), exact, numeric));
        }
    }
    GradCheck {
        probed: count,
        agreeing,
        worst: misses,
    }
}

pub fn zeros_like(net: &Network) -> Vec<Tensor> {
    net.params().values().iter().map(|t| Tensor::zeros(t.shape())).collect()
}

pub fn latent(batch: usize, d_z: usize, seed: u64) -> Tensor {
    let mut r = rng(seed);
    Tensor::new([batch, d_z], (0..batch * d_z).map(|_| r.sample(StandardNormal)).collect())
}

pub fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ucr").join(name)
}

pub fn fixture(name: &str) -> Dataset {
    let dir = fixture_dir(name);
    load_ucr(&dir.join(format!("{name}_TRAIN.tsv")), None).unwrap()
}

/// Two classes of 50 series each: noisy sines and noisy square waves with
/// random phase and period.
pub fn sine_square(len: usize, per_class: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2 {
        for _ in 0..per_class {
            let period = r.random_range(len as f64 / 6.0..len as f64 / 3.0);
            let phase = r.random_range(0.0..std::f64::consts::TAU);
            let row: Vec<f64> = (0..len)
                .map(|t| {
                    let s = (std::f64::consts::TAU * t as f64 / period + phase).sin();
                    let v = if class == 0 { s } else { s.signum() };
                    v + noise.sample(&mut r)
                })
                .collect();
            rows.push(utsgan::dataset::znormalize(&row));
            labels.push(class);
        }
    }
    Dataset::from_rows("SineSquare", rows, labels, vec!["sine".into(), "square".into()]).unwrap()
}
