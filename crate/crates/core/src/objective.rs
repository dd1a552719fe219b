//! Critic terms, gradient penalties and the averaged objective.
//!
//! Critics minimize `−wgan + gp`. The logged component losses follow the
//! `L = WGAN + GP` bookkeeping, and the unified loss is their plain average.

use std::fmt;
use std::rc::Rc;

use utsgan_autograd::{Tensor, Var};

use crate::error::{Error, Result};
use crate::nn::Bound;

pub const DEFAULT_LAMBDA: f64 = 10.0;

/// Added under the square root of the gradient norm so the penalty stays
/// twice differentiable at a zero gradient.
pub const NORM_EPS: f64 = 1e-12;

/// One logged row of loss components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub wgan_x: f64,
    pub gp_x: f64,
    pub wgan_y: f64,
    pub gp_y: f64,
    pub l_x: f64,
    pub l_y: f64,
    pub unified: f64,
    pub lambda_x: f64,
    pub lambda_y: f64,
}

impl LossBreakdown {
    pub fn new(wgan_x: f64, gp_x: f64, wgan_y: f64, gp_y: f64, lambda_x: f64, lambda_y: f64) -> Self {
        let l_x = wgan_x + gp_x;
        let l_y = wgan_y + gp_y;
        LossBreakdown {
            wgan_x,
            gp_x,
            wgan_y,
            gp_y,
            l_x,
            l_y,
            unified: 0.5 * (l_x + l_y),
            lambda_x,
            lambda_y,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.wgan_x, self.gp_x, self.wgan_y, self.gp_y, self.l_x, self.l_y, self.unified]
            .iter()
            .all(|v| v.is_finite())
    }
}

impl fmt::Display for LossBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "wgan_x={} gp_x={} wgan_y={} gp_y={} l_x={} l_y={} unified={}",
            self.wgan_x, self.gp_x, self.wgan_y, self.gp_y, self.l_x, self.l_y, self.unified
        )
    }
}

/// `mean(real) − mean(fake)`.
pub fn critic_term(real_scores: &[f64], fake_scores: &[f64]) -> Result<f64> {
    if real_scores.is_empty() || fake_scores.is_empty() {
        return Err(Error::Shape("critic term needs non-empty score batches".into()));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Ok(mean(real_scores) - mean(fake_scores))
}

/// Differentiable `mean(real) − mean(fake)`.
pub fn critic_term_var<'g>(real_scores: Var<'g>, fake_scores: Var<'g>) -> Var<'g> {
    real_scores.mean() - fake_scores.mean()
}

/// `λ · mean_i (‖∇ critic(x̂_i)‖₂ − 1)²` with `x̂_i = ε_i·real_i + (1−ε_i)·fake_i`.
///
/// The input gradient is built on the same graph, so the result can be
/// differentiated with respect to the critic's parameters (and, through
/// `real`/`fake`, anything upstream of them). `critic` must score rows
/// independently.
pub fn gradient_penalty<'g>(
    critic: impl Fn(Var<'g>) -> Var<'g>,
    real: Var<'g>,
    fake: Var<'g>,
    lambda: f64,
    eps: &[f64],
) -> Result<Var<'g>> {
    let shape = real.shape();
    if shape != fake.shape() {
        return Err(Error::Shape(format!("real {:?} vs fake {:?}", shape, fake.shape())));
    }
    let batch = shape[0];
    if eps.len() != batch {
        return Err(Error::Shape(format!("{} interpolation draws for a batch of {batch}", eps.len())));
    }
    let row: usize = shape[1..].iter().product();
    let weights: Vec<f64> = eps.iter().flat_map(|&e| std::iter::repeat_n(e, row)).collect();
    let x_hat = (real - fake).mul_const(Rc::new(Tensor::new(shape, weights))) + fake;

    let scores = critic(x_hat);
    let grad = real.graph().grad(scores, &[x_hat])[0];
    let norms = grad.square().reshape([batch, row]).sum_last().add_scalar(NORM_EPS).sqrt();
    Ok(norms.add_scalar(-1.0).square().mean().scale(lambda))
}

/// The WGAN term and gradient penalty of one critic.
#[derive(Clone, Copy, Debug)]
pub struct CriticTerms<'g> {
    pub wgan: Var<'g>,
    pub gp: Var<'g>,
}

impl<'g> CriticTerms<'g> {
    /// The quantity the critic minimizes: `−wgan + gp`.
    pub fn critic_loss(&self) -> Var<'g> {
        self.gp - self.wgan
    }

    /// `(wgan, gp)` as numbers.
    pub fn values(&self) -> (f64, f64) {
        (self.wgan.item(), self.gp.item())
    }
}

/// WGAN term and penalty of `critic` on a real batch against a fake batch.
pub fn critic_terms<'g>(critic: &Bound<'_, 'g>, real: Var<'g>, fake: Var<'g>, lambda: f64, eps: &[f64]) -> Result<CriticTerms<'g>> {
    let wgan = critic_term_var(critic.apply(real), critic.apply(fake));
    let gp = gradient_penalty(|x| critic.apply(x), real, fake, lambda, eps)?;
    Ok(CriticTerms { wgan, gp })
}

/// Image-side terms: `D_x` on real images against `G(z)`.
pub fn loss_x<'g>(
    dx: &Bound<'_, 'g>,
    g: &Bound<'_, 'g>,
    real_images: Var<'g>,
    z: Var<'g>,
    lambda_x: f64,
    eps: &[f64],
) -> Result<CriticTerms<'g>> {
    critic_terms(dx, real_images, g.apply(z), lambda_x, eps)
}

/// Series-side terms: `D_y` on real series against `F(G(z))`.
pub fn loss_y<'g>(
    dy: &Bound<'_, 'g>,
    f: &Bound<'_, 'g>,
    g: &Bound<'_, 'g>,
    real_series: Var<'g>,
    z: Var<'g>,
    lambda_y: f64,
    eps: &[f64],
) -> Result<CriticTerms<'g>> {
    critic_terms(dy, real_series, f.apply(g.apply(z)), lambda_y, eps)
}

/// `(l_x + l_y) / 2`.
pub fn unified_loss(l_x: f64, l_y: f64) -> Result<f64> {
    if !l_x.is_finite() || !l_y.is_finite() {
        return Err(Error::Numerical(format!("non-finite component loss: l_x={l_x}, l_y={l_y}")));
    }
    Ok(0.5 * (l_x + l_y))
}

/// Which critic terms enter the generator objective. Both are on in
/// training; masking one is a probe of how the other couples to `θ_G`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TermMask {
    pub image: bool,
    pub series: bool,
}

impl TermMask {
    pub const BOTH: TermMask = TermMask {
        image: true,
        series: true,
    };
    pub const SERIES_ONLY: TermMask = TermMask {
        image: false,
        series: true,
    };
}

/// `−½·[mean D_x(G(z)) + mean D_y(F(G(z)))]`, minimized jointly over the
/// parameters of G and F.
pub fn generator_objective<'g>(
    dx: &Bound<'_, 'g>,
    dy: &Bound<'_, 'g>,
    g: &Bound<'_, 'g>,
    f: &Bound<'_, 'g>,
    z: Var<'g>,
    mask: TermMask,
) -> Var<'g> {
    let images = g.apply(z);
    let graph = z.graph();
    let image_term = if mask.image { dx.apply(images).mean() } else { graph.scalar(0.0) };
    let series_term = if mask.series { dy.apply(f.apply(images)).mean() } else { graph.scalar(0.0) };
    (image_term + series_term).scale(-0.5)
}
