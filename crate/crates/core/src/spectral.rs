//! Time series → RGB spectrogram images.
//!
//! The pipeline is a reflect-padded Hann STFT, power in decibels relative to
//! the spectrogram's own peak, clipping at [`DB_FLOOR`], a lookup into a fixed
//! 256-entry colormap, and bilinear resampling to the network's image size.
//! Only the rendered pixels are kept; no phase survives.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use utsgan_autograd::Tensor;

use crate::error::{Error, IoContext, Result};

pub const DB_FLOOR: f64 = -80.0;
pub const POWER_EPS: f64 = 1e-10;

/// Side length of the square images fed to the 2-D networks by default.
pub const DEFAULT_IMAGE_SIZE: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct StftConfig {
    n_fft: usize,
    hop: usize,
    window: Vec<f64>,
}

impl StftConfig {
    /// Hann-windowed STFT. `n_fft` must be a power of two and `hop` at most
    /// `n_fft`.
    pub fn new(n_fft: usize, hop: usize) -> Result<Self> {
        if !n_fft.is_power_of_two() || n_fft < 2 {
            return Err(Error::Config(format!("n_fft must be a power of two >= 2, got {n_fft}")));
        }
        if hop == 0 || hop > n_fft {
            return Err(Error::Config(format!("hop must be in 1..={n_fft}, got {hop}")));
        }
        // Periodic Hann: symmetric about n_fft/2 where it peaks at exactly 1.
        let window = (0..n_fft)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n_fft as f64).cos())
            .collect();
        Ok(StftConfig { n_fft, hop, window })
    }

    /// `n_fft = max(8, 2^⌊log₂(L/4)⌋)` with a quarter-window hop.
    pub fn for_length(len: usize) -> Self {
        let quarter = (len / 4).max(1);
        let n_fft = (1usize << quarter.ilog2()).max(8);
        Self::new(n_fft, n_fft / 4).expect("derived STFT parameters are valid")
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn freq_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn frames(&self, len: usize) -> usize {
        len.div_ceil(self.hop)
    }
}

/// Decibel power on a frequency × time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSpectrogram {
    freq_bins: usize,
    frames: usize,
    /// Row-major by frequency: `db[f * frames + t]`.
    db: Vec<f64>,
    pub db_floor: f64,
}

impl PowerSpectrogram {
    pub fn new(freq_bins: usize, frames: usize, db: Vec<f64>, db_floor: f64) -> Self {
        assert_eq!(db.len(), freq_bins * frames);
        PowerSpectrogram {
            freq_bins,
            frames,
            db,
            db_floor,
        }
    }

    pub fn freq_bins(&self) -> usize {
        self.freq_bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn at(&self, f: usize, t: usize) -> f64 {
        self.db[f * self.frames + t]
    }

    pub fn db(&self) -> &[f64] {
        &self.db
    }

    /// Mean over time of each frequency row.
    pub fn mean_over_time(&self) -> Vec<f64> {
        self.db
            .chunks(self.frames)
            .map(|row| row.iter().sum::<f64>() / self.frames as f64)
            .collect()
    }
}

/// Reflect-padded STFT power in dB relative to the peak bin, clipped at
/// [`DB_FLOOR`]. A series with no energy maps to the floor everywhere.
pub fn stft_power(series: &[f64], cfg: &StftConfig) -> Result<PowerSpectrogram> {
    let n = cfg.n_fft;
    if series.len() < n {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            n_fft: n,
        });
    }
    let padded = reflect_pad(series, n / 2);
    let frames = cfg.frames(series.len());
    let bins = cfg.freq_bins();
    let fft = fft_plan(n);

    let mut power = vec![0.0; bins * frames];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..frames {
        let start = t * cfg.hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(padded[start + i] * cfg.window[i], 0.0);
        }
        fft.process(&mut buf);
        for f in 0..bins {
            power[f * frames + t] = buf[f].norm_sqr();
        }
    }

    let peak = power.iter().copied().fold(0.0, f64::max);
    let db = if peak > 0.0 && peak.is_finite() {
        let mut db: Vec<f64> = power.iter().map(|p| 10.0 * (p / peak + POWER_EPS).log10()).collect();
        let top = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        db.iter_mut().for_each(|v| *v = (*v - top).max(DB_FLOOR));
        db
    } else {
        vec![DB_FLOOR; bins * frames]
    };
    Ok(PowerSpectrogram::new(bins, frames, db, DB_FLOOR))
}

fn fft_plan(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

/// Mirror padding without repeating the edge sample.
fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    debug_assert!(pad < x.len());
    let mut out = Vec::with_capacity(x.len() + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((1..=pad).map(|i| x[x.len() - 1 - i]));
    out
}

/// 256 RGB rows with channels in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Colormap(Vec<[f64; 3]>);

impl Colormap {
    pub fn new(rows: Vec<[f64; 3]>) -> Result<Self> {
        if rows.len() != 256 {
            return Err(Error::Config(format!("colormap needs 256 rows, got {}", rows.len())));
        }
        if rows.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Config("colormap entries must lie in [0, 1]".into()));
        }
        Ok(Colormap(rows))
    }

    /// The committed viridis table.
    pub fn viridis() -> &'static Colormap {
        static VIRIDIS: OnceLock<Colormap> = OnceLock::new();
        VIRIDIS.get_or_init(|| {
            let rows = include_str!("../assets/viridis.csv")
                .lines()
                .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
                .map(|l| {
                    let v: Vec<f64> = l.split(',').map(|x| x.trim().parse().unwrap()).collect();
                    [v[0], v[1], v[2]]
                })
                .collect();
            Colormap::new(rows).expect("bundled colormap is valid")
        })
    }

    pub fn row(&self, i: usize) -> [f64; 3] {
        self.0[i]
    }

    /// Colour at a fractional index in [0, 255], interpolating between
    /// neighbouring rows.
    pub fn sample(&self, index: f64) -> [f64; 3] {
        let x = index.clamp(0.0, 255.0);
        let i0 = (x.floor() as usize).min(255);
        let frac = x - i0 as f64;
        if frac == 0.0 || i0 == 255 {
            return self.0[i0];
        }
        let (a, b) = (self.0[i0], self.0[i0 + 1]);
        [lerp(a[0], b[0], frac), lerp(a[1], b[1], frac), lerp(a[2], b[2], frac)]
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Height × width × RGB with channels in [0, 1], row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrogramImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl SpectrogramImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), height * width * 3);
        SpectrogramImage { height, width, pixels }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Channel-first `[3, H, W]` tensor in the networks' [-1, 1] range.
    pub fn to_network(&self) -> Tensor {
        let (h, w) = (self.height, self.width);
        let mut data = vec![0.0; 3 * h * w];
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    data[(c * h + y) * w + x] = 2.0 * self.pixels[(y * w + x) * 3 + c] - 1.0;
                }
            }
        }
        Tensor::new([3, h, w], data)
    }

    /// Inverse of [`SpectrogramImage::to_network`]; values outside [-1, 1]
    /// are clamped.
    pub fn from_network(t: &Tensor) -> Result<Self> {
        let s = t.shape();
        if s.len() != 3 || s[0] != 3 {
            return Err(Error::Shape(format!("expected a [3, H, W] image tensor, got {s:?}")));
        }
        let (h, w) = (s[1], s[2]);
        let mut pixels = vec![0.0; 3 * h * w];
        for c in 0..3 {
            for y in 0..h {
                for x in 0..w {
                    let v = t.data()[(c * h + y) * w + x];
                    pixels[(y * w + x) * 3 + c] = ((v + 1.0) / 2.0).clamp(0.0, 1.0);
                }
            }
        }
        Ok(SpectrogramImage::new(h, w, pixels))
    }

    /// 8-bit RGB bytes, `round(p·255)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|p| (p * 255.0).round() as u8).collect()
    }

    /// Lossless 8-bit RGB PNG.
    pub fn write_png(&self, path: &Path) -> Result<()> {
        write_rgb_png(path, self.width, self.height, &self.to_bytes())
    }
}

pub(crate) fn write_rgb_png(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    let file = File::create(path).at(path)?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let io = |e: png::EncodingError| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    let mut writer = enc.write_header().map_err(io)?;
    writer.write_image_data(rgb).map_err(io)?;
    writer.finish().map_err(io)
}

/// Colours a spectrogram and resamples it to `out_h × out_w`, low
/// frequencies at the bottom.
pub fn render(ps: &PowerSpectrogram, colormap: &Colormap, out_h: usize, out_w: usize) -> SpectrogramImage {
    let (fb, tf) = (ps.freq_bins, ps.frames);
    let span = -ps.db_floor;
    let mut src = vec![[0.0; 3]; fb * tf];
    for f in 0..fb {
        let row = fb - 1 - f;
        for t in 0..tf {
            let unit = ((ps.at(f, t) - ps.db_floor) / span).clamp(0.0, 1.0);
            src[row * tf + t] = colormap.sample(unit * 255.0);
        }
    }

    let mut pixels = Vec::with_capacity(out_h * out_w * 3);
    for y in 0..out_h {
        let (y0, y1, fy) = source_coord(y, out_h, fb);
        for x in 0..out_w {
            let (x0, x1, fx) = source_coord(x, out_w, tf);
            for c in 0..3 {
                let top = lerp(src[y0 * tf + x0][c], src[y0 * tf + x1][c], fx);
                let bottom = lerp(src[y1 * tf + x0][c], src[y1 * tf + x1][c], fx);
                pixels.push(lerp(top, bottom, fy));
            }
        }
    }
    SpectrogramImage::new(out_h, out_w, pixels)
}

/// Half-pixel-centre mapping of output index `i` onto a source axis.
fn source_coord(i: usize, out: usize, src: usize) -> (usize, usize, f64) {
    let pos = ((i as f64 + 0.5) * src as f64 / out as f64 - 0.5).clamp(0.0, (src - 1) as f64);
    let i0 = pos.floor() as usize;
    let i1 = (i0 + 1).min(src - 1);
    (i0, i1, pos - i0 as f64)
}

/// [`stft_power`] followed by [`render`].
pub fn series_to_image(
    series: &[f64],
    cfg: &StftConfig,
    colormap: &Colormap,
    height: usize,
    width: usize,
) -> Result<SpectrogramImage> {
    Ok(render(&stft_power(series, cfg)?, colormap, height, width))
}

/// Renders every row of an `[N, L]` tensor into an `[N, 3, H, W]` network
/// batch.
pub fn render_batch(series: &Tensor, cfg: &StftConfig, size: usize) -> Result<Tensor> {
    let n = series.shape()[0];
    let images = (0..n)
        .map(|i| series_to_image(series.row(i), cfg, Colormap::viridis(), size, size).map(|im| im.to_network()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Tensor::stack(&images))
}
