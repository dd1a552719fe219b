//! Numeric kernels backing the differentiable ops: GEMM, im2col convolution
//! and its two adjoints.

use crate::tensor::Tensor;

/// Stride and zero padding of a 2-D cross-correlation. 1-D convolutions use
/// a height of one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConvGeom {
    pub stride: [usize; 2],
    pub pad: [usize; 2],
}

impl ConvGeom {
    pub fn new(stride: [usize; 2], pad: [usize; 2]) -> Self {
        assert!(stride[0] > 0 && stride[1] > 0, "conv stride must be positive");
        ConvGeom { stride, pad }
    }

    /// Spatial output size for an input and kernel size.
    pub fn out_dim(&self, input: [usize; 2], kernel: [usize; 2]) -> [usize; 2] {
        let mut out = [0; 2];
        for a in 0..2 {
            let padded = input[a] + 2 * self.pad[a];
            assert!(
                padded >= kernel[a],
                "kernel {:?} larger than padded input {:?}",
                kernel,
                input
            );
            out[a] = (padded - kernel[a]) / self.stride[a] + 1;
        }
        out
    }
}

/// `c = op(a)·op(b) + beta·c` for row-major matrices; `a` is m×k and `b` is
/// k×n after the optional transposes.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    trans_a: bool,
    b: &[f64],
    trans_b: bool,
    c: &mut [f64],
    beta: f64,
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c[..m * n].iter_mut().for_each(|v| *v *= beta);
        return;
    }
    // SAFETY: the slice length assertions above cover every index the
    // strides can address.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = dims2(a);
    let (k2, n) = dims2(b);
    assert_eq!(k, k2, "matmul inner dimension mismatch: {:?} x {:?}", a.shape(), b.shape());
    let mut out = vec![0.0; m * n];
    gemm(m, k, n, a.data(), false, b.data(), false, &mut out, 0.0);
    Tensor::new([m, n], out)
}

pub(crate) fn transpose(a: &Tensor) -> Tensor {
    let (m, n) = dims2(a);
    let src = a.data();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = src[i * n + j];
        }
    }
    Tensor::new([n, m], out)
}

fn dims2(t: &Tensor) -> (usize, usize) {
    assert_eq!(t.rank(), 2, "expected a matrix, got shape {:?}", t.shape());
    (t.shape()[0], t.shape()[1])
}

struct Layout {
    batch: usize,
    in_ch: usize,
    out_ch: usize,
    input: [usize; 2],
    kernel: [usize; 2],
    output: [usize; 2],
}

impl Layout {
    fn patch(&self) -> usize {
        self.in_ch * self.kernel[0] * self.kernel[1]
    }
    fn in_plane(&self) -> usize {
        self.in_ch * self.input[0] * self.input[1]
    }
    fn out_positions(&self) -> usize {
        self.output[0] * self.output[1]
    }
}

fn im2col(x: &[f64], l: &Layout, g: &ConvGeom, cols: &mut [f64]) {
    let [h, w] = l.input;
    let [kh, kw] = l.kernel;
    let [ho, wo] = l.output;
    let p = ho * wo;
    for ci in 0..l.in_ch {
        let plane = &x[ci * h * w..(ci + 1) * h * w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let dst = &mut cols[row * p..(row + 1) * p];
                for oy in 0..ho {
                    let iy = (oy * g.stride[0] + ki) as isize - g.pad[0] as isize;
                    let seg = &mut dst[oy * wo..(oy + 1) * wo];
                    if iy < 0 || iy >= h as isize {
                        seg.iter_mut().for_each(|v| *v = 0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, v) in seg.iter_mut().enumerate() {
                        let ix = (ox * g.stride[1] + kj) as isize - g.pad[1] as isize;
                        *v = if ix >= 0 && ix < w as isize {
                            src[ix as usize]
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
    }
}

fn col2im(cols: &[f64], l: &Layout, g: &ConvGeom, x: &mut [f64]) {
    let [h, w] = l.input;
    let [kh, kw] = l.kernel;
    let [ho, wo] = l.output;
    let p = ho * wo;
    for ci in 0..l.in_ch {
        let plane = &mut x[ci * h * w..(ci + 1) * h * w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let src = &cols[row * p..(row + 1) * p];
                for oy in 0..ho {
                    let iy = (oy * g.stride[0] + ki) as isize - g.pad[0] as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    for ox in 0..wo {
                        let ix = (ox * g.stride[1] + kj) as isize - g.pad[1] as isize;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] += src[oy * wo + ox];
                        }
                    }
                }
            }
        }
    }
}

fn split4(t: &Tensor, what: &str) -> [usize; 4] {
    assert_eq!(t.rank(), 4, "{} must be rank 4, got {:?}", what, t.shape());
    [t.shape()[0], t.shape()[1], t.shape()[2], t.shape()[3]]
}

/// Cross-correlation of `x` [B,C,H,W] with `w` [O,C,kh,kw] → [B,O,Ho,Wo].
pub(crate) fn conv2d(x: &Tensor, w: &Tensor, g: &ConvGeom) -> Tensor {
    let [b, c, h, wd] = split4(x, "conv input");
    let [o, c2, kh, kw] = split4(w, "conv weight");
    assert_eq!(c, c2, "conv channel mismatch: input {:?}, weight {:?}", x.shape(), w.shape());
    let output = g.out_dim([h, wd], [kh, kw]);
    let l = Layout {
        batch: b,
        in_ch: c,
        out_ch: o,
        input: [h, wd],
        kernel: [kh, kw],
        output,
    };
    let (pk, p) = (l.patch(), l.out_positions());
    let mut cols = vec![0.0; pk * p];
    let mut out = vec![0.0; b * o * p];
    for bi in 0..l.batch {
        im2col(&x.data()[bi * l.in_plane()..(bi + 1) * l.in_plane()], &l, g, &mut cols);
        gemm(o, pk, p, w.data(), false, &cols, false, &mut out[bi * o * p..(bi + 1) * o * p], 0.0);
    }
    Tensor::new([b, o, output[0], output[1]], out)
}

/// Adjoint of [`conv2d`] in its input: maps `gy` [B,O,Ho,Wo] back to an
/// input of spatial size `input`.
pub(crate) fn conv2d_transpose(gy: &Tensor, w: &Tensor, g: &ConvGeom, input: [usize; 2]) -> Tensor {
    let [b, o, ho, wo] = split4(gy, "conv-transpose input");
    let [o2, c, kh, kw] = split4(w, "conv weight");
    assert_eq!(o, o2, "conv-transpose channel mismatch: {:?} vs weight {:?}", gy.shape(), w.shape());
    let output = g.out_dim(input, [kh, kw]);
    assert_eq!(
        output,
        [ho, wo],
        "conv-transpose target {:?} inconsistent with input {:?}",
        input,
        gy.shape()
    );
    let l = Layout {
        batch: b,
        in_ch: c,
        out_ch: o,
        input,
        kernel: [kh, kw],
        output,
    };
    let (pk, p) = (l.patch(), l.out_positions());
    let mut cols = vec![0.0; pk * p];
    let mut out = vec![0.0; b * l.in_plane()];
    for bi in 0..l.batch {
        gemm(pk, o, p, w.data(), true, &gy.data()[bi * o * p..(bi + 1) * o * p], false, &mut cols, 0.0);
        col2im(&cols, &l, g, &mut out[bi * l.in_plane()..(bi + 1) * l.in_plane()]);
    }
    Tensor::new([b, c, input[0], input[1]], out)
}

/// Adjoint of [`conv2d`] in its weight: correlates `x` with `gy` to give a
/// kernel-shaped tensor [O,C,kh,kw].
pub(crate) fn conv2d_weight_grad(x: &Tensor, gy: &Tensor, g: &ConvGeom, kernel: [usize; 2]) -> Tensor {
    let [b, c, h, wd] = split4(x, "conv input");
    let [b2, o, ho, wo] = split4(gy, "conv output grad");
    assert_eq!(b, b2, "batch mismatch in weight gradient");
    let output = g.out_dim([h, wd], kernel);
    assert_eq!(output, [ho, wo], "weight-gradient output grid mismatch");
    let l = Layout {
        batch: b,
        in_ch: c,
        out_ch: o,
        input: [h, wd],
        kernel,
        output,
    };
    let (pk, p) = (l.patch(), l.out_positions());
    let mut cols = vec![0.0; pk * p];
    let mut out = vec![0.0; l.out_ch * pk];
    for bi in 0..l.batch {
        im2col(&x.data()[bi * l.in_plane()..(bi + 1) * l.in_plane()], &l, g, &mut cols);
        gemm(o, p, pk, &gy.data()[bi * o * p..(bi + 1) * o * p], false, &cols, true, &mut out, 1.0);
    }
    Tensor::new([o, c, kernel[0], kernel[1]], out)
}
