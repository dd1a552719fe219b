//! Tape-based reverse-mode automatic differentiation over dense `f64`
//! tensors.
//!
//! Backward passes are recorded on the same tape as the forward pass, so a
//! gradient can be differentiated again. This is what makes gradient-norm
//! penalties trainable: the penalty is a function of `∇ₓ D(x)`, and its
//! parameter gradient needs the derivative of that input gradient.
//!
//! ```
//! use utsgan_autograd::{Graph, Tensor};
//!
//! let g = Graph::new();
//! let x = g.input(Tensor::new([3], vec![1.0, 2.0, 3.0]));
//! let y = (x * x * x).sum();                  // Σ x³
//! let dx = g.grad(y, &[x])[0];                // 3x²
//! assert_eq!(dx.value().data(), &[3.0, 12.0, 27.0]);
//! let ddx = g.grad(dx.sum(), &[x])[0];        // 6x
//! assert_eq!(ddx.value().data(), &[6.0, 12.0, 18.0]);
//! ```

mod graph;
mod kernels;
mod tensor;

pub use graph::{Graph, Var};
pub use kernels::ConvGeom;
pub use tensor::Tensor;
