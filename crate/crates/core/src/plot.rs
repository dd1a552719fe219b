//! Minimal raster plots written as PNG: loss curves, generated spectrogram
//! grids and real-versus-generated overlays. No text is drawn; axis ranges
//! go into the caller's logs instead.

use std::path::Path;

use utsgan_autograd::Tensor;

use crate::error::Result;
use crate::spectral::{write_rgb_png, SpectrogramImage};
use crate::trainer::{LossRow, Mode};

pub const WHITE: [u8; 3] = [255, 255, 255];
pub const AXIS: [u8; 3] = [40, 40, 40];
pub const GRID: [u8; 3] = [225, 225, 225];
pub const BLUE: [u8; 3] = [31, 119, 180];
pub const ORANGE: [u8; 3] = [255, 127, 14];
pub const RED: [u8; 3] = [214, 39, 40];

#[derive(Clone, Debug, PartialEq)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Canvas {
    pub fn new(width: usize, height: usize, background: [u8; 3]) -> Self {
        Canvas {
            width,
            height,
            rgb: background.iter().copied().cycle().take(width * height * 3).collect(),
        }
    }

    pub fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            let i = (y as usize * self.width + x as usize) * 3;
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    /// Bresenham segment.
    pub fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.put(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    /// Copies an image with its top-left corner at `(x, y)`.
    pub fn blit(&mut self, img: &SpectrogramImage, x: usize, y: usize) {
        let bytes = img.to_bytes();
        for r in 0..img.height() {
            for col in 0..img.width() {
                let i = (r * img.width() + col) * 3;
                self.put((x + col) as i64, (y + r) as i64, [bytes[i], bytes[i + 1], bytes[i + 2]]);
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_rgb_png(path, self.width, self.height, &self.rgb)
    }
}

/// One polyline of a line chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub points: Vec<(f64, f64)>,
    pub color: [u8; 3],
}

/// Data ranges of a rendered chart, `(x_min, x_max, y_min, y_max)`.
pub type Extent = (f64, f64, f64, f64);

/// Draws curves into a framed plot area sharing one data range.
pub fn line_chart(curves: &[Curve], width: usize, height: usize) -> (Canvas, Extent) {
    let mut canvas = Canvas::new(width, height, WHITE);
    let pts = curves.iter().flat_map(|c| c.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);

    let m = 20i64;
    let (w, h) = (width as i64 - 2 * m, height as i64 - 2 * m);
    for k in 1..4 {
        let gy = m + h * k / 4;
        canvas.line((m, gy), (m + w, gy), GRID);
    }
    let to_px = |(x, y): (f64, f64)| {
        let px = m + ((x - x0) / (x1 - x0) * w as f64).round() as i64;
        let py = m + h - ((y - y0) / (y1 - y0) * h as f64).round() as i64;
        (px, py)
    };
    for c in curves {
        let finite: Vec<_> = c.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        for seg in finite.windows(2) {
            canvas.line(to_px(seg[0]), to_px(seg[1]), c.color);
        }
        if finite.len() == 1 {
            let (px, py) = to_px(finite[0]);
            canvas.put(px, py, c.color);
        }
    }
    canvas.line((m, m + h), (m + w, m + h), AXIS);
    canvas.line((m, m), (m, m + h), AXIS);
    (canvas, (x0, x1, y0, y1))
}

/// Per-epoch mean of one loss column.
fn epoch_means(rows: &[LossRow], pick: impl Fn(&LossRow) -> f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some((e, s, n)) if *e == r.epoch as f64 => {
                *s += pick(r);
                *n += 1;
            }
            _ => out.push((r.epoch as f64, pick(r), 1)),
        }
    }
    out.into_iter().map(|(e, s, n)| (e, s / n as f64)).collect()
}

/// Loss curves against epoch: the unified loss for a unified run, and
/// `L_x` and `L_y` separately for a serial run, where the two losses are
/// optimized independently.
pub fn loss_curves(rows: &[LossRow], mode: Mode) -> Vec<Curve> {
    match mode {
        Mode::Unified => vec![Curve {
            points: epoch_means(rows, |r| r.loss.unified),
            color: BLUE,
        }],
        Mode::Serial => vec![
            Curve {
                points: epoch_means(rows, |r| r.loss.l_x),
                color: BLUE,
            },
            Curve {
                points: epoch_means(rows, |r| r.loss.l_y),
                color: ORANGE,
            },
        ],
    }
}

pub fn plot_losses(rows: &[LossRow], mode: Mode, path: &Path) -> Result<Extent> {
    let (canvas, extent) = line_chart(&loss_curves(rows, mode), 640, 360);
    canvas.save(path)?;
    Ok(extent)
}

/// Images side by side with a 4-pixel white gutter.
pub fn image_grid(images: &[SpectrogramImage]) -> Canvas {
    let gap = 4;
    let h = images.iter().map(SpectrogramImage::height).max().unwrap_or(0);
    let w: usize = images.iter().map(SpectrogramImage::width).sum::<usize>() + gap * (images.len() + 1);
    let mut canvas = Canvas::new(w, h + 2 * gap, WHITE);
    let mut x = gap;
    for img in images {
        canvas.blit(img, x, gap);
        x += img.width() + gap;
    }
    canvas
}

/// Generated rows in red over real rows in blue.
pub fn overlay(generated: &Tensor, real: &Tensor) -> (Canvas, Extent) {
    let rows = |t: &Tensor, color| {
        (0..t.shape()[0])
            .map(move |i| Curve {
                points: t.row(i).iter().enumerate().map(|(j, &v)| (j as f64, v)).collect(),
                color,
            })
            .collect::<Vec<_>>()
    };
    let mut curves = rows(real, BLUE);
    curves.extend(rows(generated, RED));
    line_chart(&curves, 640, 360)
}
