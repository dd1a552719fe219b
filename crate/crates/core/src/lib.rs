//! Unified time-series GAN.
//!
//! Two Wasserstein GANs with gradient penalty are coupled through one
//! generator chain: `G` maps noise to spectrogram images, `F` maps those
//! images to series. Critics `D_x` and `D_y` score images and series, and
//! the generators minimize the average of the two adversarial objectives,
//! so a poor series produced from an image also pushes on `G`. A serial
//! mode trains the two halves as independent GANs for comparison.
//!
//! Modules follow the pipeline:
//!
//! - [`dataset`]: UCR files, z-normalization, class filters, batching.
//! - [`spectral`]: STFT power spectrograms rendered as RGB images.
//! - [`nn`]: the four networks and the FCN classifier.
//! - [`objective`]: critic terms, gradient penalty, the averaged objective.
//! - [`trainer`]: unified and serial training loops, logs, checkpoints.
//! - [`evaluation`]: classifier training and FID over classifier features.
//! - [`plot`]: loss curves, spectrogram grids, series overlays.
//!
//! ```
//! use utsgan::objective::{unified_loss, LossBreakdown};
//!
//! let row = LossBreakdown::new(-0.4, 1.2, 0.3, 0.1, 10.0, 10.0);
//! assert_eq!(row.l_x, -0.4 + 1.2);
//! assert_eq!(row.unified, unified_loss(row.l_x, row.l_y).unwrap());
//! ```

mod error;

pub mod checkpoint;
pub mod dataset;
pub mod evaluation;
pub mod nn;
pub mod objective;
pub mod optim;
pub mod plot;
pub mod spectral;
pub mod trainer;

pub use error::{Error, Result};
