use std::cell::RefCell;
use std::ops;
use std::rc::Rc;

use crate::kernels::{self, ConvGeom};
use crate::tensor::Tensor;

#[derive(Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    Scale(usize, f64),
    AddScalar(usize),
    MulConst(usize, Rc<Tensor>),
    Tanh(usize),
    LeakyRelu(usize, f64),
    Sqrt(usize),
    Recip(usize),
    Exp(usize),
    Sum(usize),
    Expand(usize),
    SumLast(usize),
    ExpandLast(usize),
    SumChannels(usize),
    BroadcastChannels(usize),
    Reshape(usize),
    MatMul(usize, usize),
    Transpose(usize),
    Conv { x: usize, w: usize, geom: ConvGeom },
    ConvTranspose { gy: usize, w: usize, geom: ConvGeom },
    ConvWeightGrad { x: usize, gy: usize, geom: ConvGeom },
    LogSoftmax(usize),
}

impl Op {
    fn parents(&self) -> Vec<usize> {
        use Op::*;
        match *self {
            Leaf => vec![],
            Add(a, b) | Sub(a, b) | Mul(a, b) | MatMul(a, b) => vec![a, b],
            Conv { x, w, .. } => vec![x, w],
            ConvTranspose { gy, w, .. } => vec![gy, w],
            ConvWeightGrad { x, gy, .. } => vec![x, gy],
            Neg(a) | Scale(a, _) | AddScalar(a) | MulConst(a, _) | Tanh(a) | LeakyRelu(a, _)
            | Sqrt(a) | Recip(a) | Exp(a) | Sum(a) | Expand(a) | SumLast(a) | ExpandLast(a)
            | SumChannels(a) | BroadcastChannels(a) | Reshape(a) | Transpose(a)
            | LogSoftmax(a) => vec![a],
        }
    }
}

struct Node {
    value: Rc<Tensor>,
    op: Op,
}

/// A recording tape. Every op appends a node; [`Graph::grad`] appends the
/// backward computation as further nodes, so gradients are themselves
/// differentiable.
#[derive(Default)]
pub struct Graph {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy)]
pub struct Var<'g> {
    graph: &'g Graph,
    id: usize,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    /// Records an input. Whether it is treated as a variable or a constant
    /// only depends on whether it is later passed to [`Graph::grad`].
    pub fn input(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.input(Tensor::scalar(value))
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Tensor, op: Op) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value: Rc::new(value),
            op,
        });
        Var {
            graph: self,
            id: nodes.len() - 1,
        }
    }

    fn value(&self, id: usize) -> Rc<Tensor> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }

    fn op(&self, id: usize) -> Op {
        self.nodes.borrow()[id].op.clone()
    }

    fn var(&self, id: usize) -> Var<'_> {
        Var { graph: self, id }
    }

    /// Gradient of `sum(y)` with respect to each of `wrt`.
    ///
    /// The returned vars are ordinary nodes on this graph and can be
    /// differentiated again. Inputs that `y` does not depend on get zeros.
    pub fn grad<'g>(&'g self, y: Var<'g>, wrt: &[Var<'g>]) -> Vec<Var<'g>> {
        assert!(
            wrt.iter().chain(std::iter::once(&y)).all(|v| std::ptr::eq(v.graph, self)),
            "grad across graphs"
        );
        let end = y.id + 1;
        let Some(start) = wrt.iter().map(|v| v.id).filter(|&i| i < end).min() else {
            return wrt.iter().map(|v| self.zeros_like(*v)).collect();
        };

        let mut relevant = vec![false; end];
        for v in wrt {
            if v.id < end {
                relevant[v.id] = true;
            }
        }
        for i in start..end {
            if !relevant[i] {
                relevant[i] = self.op(i).parents().iter().any(|&p| p >= start && relevant[p]);
            }
        }

        let mut grads: Vec<Option<Var<'g>>> = vec![None; end];
        if relevant[y.id] {
            grads[y.id] = Some(self.input(Tensor::ones(y.shape())));
        }
        for i in (start..end).rev() {
            let Some(g) = grads[i] else { continue };
            if !relevant[i] {
                continue;
            }
            let op = self.op(i);
            let needs = |p: usize| p >= start && relevant[p];
            for (p, gp) in self.backward(i, &op, g, &needs) {
                grads[p] = Some(match grads[p] {
                    Some(acc) => acc + gp,
                    None => gp,
                });
            }
        }
        wrt.iter()
            .map(|v| match grads.get(v.id).copied().flatten() {
                Some(g) => g,
                None => self.zeros_like(*v),
            })
            .collect()
    }

    fn zeros_like<'g>(&'g self, v: Var<'g>) -> Var<'g> {
        self.input(Tensor::zeros(v.shape()))
    }

    fn backward<'g>(
        &'g self,
        id: usize,
        op: &Op,
        g: Var<'g>,
        needs: &dyn Fn(usize) -> bool,
    ) -> Vec<(usize, Var<'g>)> {
        use Op::*;
        let out = self.var(id);
        let v = |i: usize| self.var(i);
        let mut grads = Vec::with_capacity(2);
        let mut emit = |p: usize, f: &dyn Fn() -> Var<'g>| {
            if needs(p) {
                grads.push((p, f()));
            }
        };
        match op {
            Leaf => {}
            Add(a, b) => {
                emit(*a, &|| g);
                emit(*b, &|| g);
            }
            Sub(a, b) => {
                emit(*a, &|| g);
                emit(*b, &|| -g);
            }
            Mul(a, b) => {
                emit(*a, &|| g * v(*b));
                emit(*b, &|| g * v(*a));
            }
            Neg(a) => emit(*a, &|| -g),
            Scale(a, c) => emit(*a, &|| g.scale(*c)),
            AddScalar(a) => emit(*a, &|| g),
            MulConst(a, m) => emit(*a, &|| g.mul_const(Rc::clone(m))),
            Tanh(a) => emit(*a, &|| g * (-(out * out)).add_scalar(1.0)),
            LeakyRelu(a, slope) => emit(*a, &|| {
                let mask = self.value(*a).map(|x| if x > 0.0 { 1.0 } else { *slope });
                g.mul_const(Rc::new(mask))
            }),
            Sqrt(a) => emit(*a, &|| (g * out.recip()).scale(0.5)),
            Recip(a) => emit(*a, &|| -(g * out * out)),
            Exp(a) => emit(*a, &|| g * out),
            Sum(a) => emit(*a, &|| g.expand(v(*a).shape())),
            Expand(a) => emit(*a, &|| g.sum().reshape(v(*a).shape())),
            SumLast(a) => emit(*a, &|| {
                let n = *v(*a).shape().last().unwrap();
                g.expand_last(n)
            }),
            ExpandLast(a) => emit(*a, &|| g.sum_last()),
            SumChannels(a) => emit(*a, &|| g.broadcast_channels(v(*a).shape())),
            BroadcastChannels(a) => emit(*a, &|| g.sum_channels()),
            Reshape(a) => emit(*a, &|| g.reshape(v(*a).shape())),
            MatMul(a, b) => {
                emit(*a, &|| g.matmul(v(*b).t()));
                emit(*b, &|| v(*a).t().matmul(g));
            }
            Transpose(a) => emit(*a, &|| g.t()),
            Conv { x, w, geom } => {
                emit(*x, &|| {
                    let s = v(*x).shape();
                    g.conv2d_transpose(v(*w), *geom, [s[2], s[3]])
                });
                emit(*w, &|| {
                    let s = v(*w).shape();
                    v(*x).conv2d_weight_grad(g, *geom, [s[2], s[3]])
                });
            }
            ConvTranspose { gy, w, geom } => {
                emit(*gy, &|| g.conv2d(v(*w), *geom));
                emit(*w, &|| {
                    let s = v(*w).shape();
                    g.conv2d_weight_grad(v(*gy), *geom, [s[2], s[3]])
                });
            }
            ConvWeightGrad { x, gy, geom } => {
                emit(*x, &|| {
                    let s = v(*x).shape();
                    v(*gy).conv2d_transpose(g, *geom, [s[2], s[3]])
                });
                emit(*gy, &|| v(*x).conv2d(g, *geom));
            }
            LogSoftmax(a) => emit(*a, &|| g - out.exp() * g.sum_last().expand_last(out.last_dim())),
        }
        grads
    }
}

impl<'g> Var<'g> {
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn value(&self) -> Rc<Tensor> {
        self.graph.value(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.graph.nodes.borrow()[self.id].value.shape().to_vec()
    }

    /// Value of a single-element var.
    pub fn item(&self) -> f64 {
        self.value().item()
    }

    fn last_dim(&self) -> usize {
        *self.shape().last().expect("rank-0 var has no last axis")
    }

    fn unary(self, op: Op, f: impl Fn(f64) -> f64) -> Var<'g> {
        let value = self.value().map(f);
        self.graph.push(value, op)
    }

    fn binary(self, other: Var<'g>, op: Op, f: impl Fn(f64, f64) -> f64) -> Var<'g> {
        assert!(std::ptr::eq(self.graph, other.graph), "vars from different graphs");
        let value = self.value().zip_map(&other.value(), f);
        self.graph.push(value, op)
    }

    pub fn scale(self, c: f64) -> Var<'g> {
        self.unary(Op::Scale(self.id, c), |x| c * x)
    }

    pub fn add_scalar(self, c: f64) -> Var<'g> {
        self.unary(Op::AddScalar(self.id), |x| x + c)
    }

    /// Elementwise product with a tensor that is not differentiated.
    pub fn mul_const(self, m: Rc<Tensor>) -> Var<'g> {
        let value = self.value().zip_map(&m, |a, b| a * b);
        self.graph.push(value, Op::MulConst(self.id, m))
    }

    pub fn tanh(self) -> Var<'g> {
        self.unary(Op::Tanh(self.id), f64::tanh)
    }

    pub fn relu(self) -> Var<'g> {
        self.leaky_relu(0.0)
    }

    pub fn leaky_relu(self, slope: f64) -> Var<'g> {
        self.unary(Op::LeakyRelu(self.id, slope), |x| if x > 0.0 { x } else { slope * x })
    }

    pub fn sqrt(self) -> Var<'g> {
        self.unary(Op::Sqrt(self.id), f64::sqrt)
    }

    pub fn recip(self) -> Var<'g> {
        self.unary(Op::Recip(self.id), |x| 1.0 / x)
    }

    pub fn exp(self) -> Var<'g> {
        self.unary(Op::Exp(self.id), f64::exp)
    }

    pub fn square(self) -> Var<'g> {
        self * self
    }

    /// Sum of all entries as a rank-0 var.
    pub fn sum(self) -> Var<'g> {
        let s = self.value().sum();
        self.graph.push(Tensor::scalar(s), Op::Sum(self.id))
    }

    pub fn mean(self) -> Var<'g> {
        let n = self.value().len() as f64;
        self.sum().scale(1.0 / n)
    }

    /// Broadcasts a single-element var to `shape`.
    pub fn expand(self, shape: Vec<usize>) -> Var<'g> {
        let v = self.value().item();
        self.graph.push(Tensor::full(shape, v), Op::Expand(self.id))
    }

    /// Sums out the last axis.
    pub fn sum_last(self) -> Var<'g> {
        let value = self.value();
        let n = *value.shape().last().expect("sum_last on rank-0");
        let shape = value.shape()[..value.rank() - 1].to_vec();
        let data = value.data().chunks(n).map(|c| c.iter().sum()).collect();
        self.graph.push(Tensor::new(shape, data), Op::SumLast(self.id))
    }

    /// Repeats every entry `n` times along a new last axis.
    pub fn expand_last(self, n: usize) -> Var<'g> {
        let value = self.value();
        let mut shape = value.shape().to_vec();
        shape.push(n);
        let data = value
            .data()
            .iter()
            .flat_map(|&x| std::iter::repeat_n(x, n))
            .collect();
        self.graph.push(Tensor::new(shape, data), Op::ExpandLast(self.id))
    }

    /// Sums a [B, C, ...] var down to [C].
    pub fn sum_channels(self) -> Var<'g> {
        let value = self.value();
        let s = value.shape();
        assert!(s.len() >= 2, "sum_channels needs rank >= 2, got {:?}", s);
        let (b, c) = (s[0], s[1]);
        let inner: usize = s[2..].iter().product();
        let mut out = vec![0.0; c];
        for bi in 0..b {
            for (ci, o) in out.iter_mut().enumerate() {
                let start = (bi * c + ci) * inner;
                *o += value.data()[start..start + inner].iter().sum::<f64>();
            }
        }
        self.graph.push(Tensor::new([c], out), Op::SumChannels(self.id))
    }

    /// Broadcasts a [C] var over a [B, C, ...] shape.
    pub fn broadcast_channels(self, shape: Vec<usize>) -> Var<'g> {
        let value = self.value();
        assert_eq!(value.rank(), 1, "broadcast_channels source must be rank 1");
        assert!(shape.len() >= 2 && shape[1] == value.len(), "cannot broadcast {:?} over {:?}", value.shape(), shape);
        let (b, c) = (shape[0], shape[1]);
        let inner: usize = shape[2..].iter().product();
        let mut data = Vec::with_capacity(b * c * inner);
        for _ in 0..b {
            for &x in value.data() {
                data.extend(std::iter::repeat_n(x, inner));
            }
        }
        self.graph.push(Tensor::new(shape, data), Op::BroadcastChannels(self.id))
    }

    /// Adds a per-channel bias `[C]` to a `[B, C, ...]` var.
    pub fn add_channel_bias(self, bias: Var<'g>) -> Var<'g> {
        self + bias.broadcast_channels(self.shape())
    }

    pub fn reshape(self, shape: impl Into<Vec<usize>>) -> Var<'g> {
        let value = (*self.value()).clone().reshape(shape);
        self.graph.push(value, Op::Reshape(self.id))
    }

    pub fn matmul(self, other: Var<'g>) -> Var<'g> {
        let value = kernels::matmul(&self.value(), &other.value());
        self.graph.push(value, Op::MatMul(self.id, other.id))
    }

    /// Matrix transpose.
    pub fn t(self) -> Var<'g> {
        let value = kernels::transpose(&self.value());
        self.graph.push(value, Op::Transpose(self.id))
    }

    /// Cross-correlation of [B,C,H,W] with weight [O,C,kh,kw].
    pub fn conv2d(self, weight: Var<'g>, geom: ConvGeom) -> Var<'g> {
        let value = kernels::conv2d(&self.value(), &weight.value(), &geom);
        self.graph.push(
            value,
            Op::Conv {
                x: self.id,
                w: weight.id,
                geom,
            },
        )
    }

    /// Transposed convolution: the input-adjoint of [`Var::conv2d`] with the
    /// same `weight` [O,C,kh,kw], mapping [B,O,h,w] to [B,C,H,W] where
    /// `out_hw` = [H, W] must be consistent with `geom`.
    pub fn conv2d_transpose(self, weight: Var<'g>, geom: ConvGeom, out_hw: [usize; 2]) -> Var<'g> {
        let value = kernels::conv2d_transpose(&self.value(), &weight.value(), &geom, out_hw);
        self.graph.push(
            value,
            Op::ConvTranspose {
                gy: self.id,
                w: weight.id,
                geom,
            },
        )
    }

    /// Weight-adjoint of [`Var::conv2d`]: `self` is the conv input and `gy`
    /// the output-shaped cotangent.
    pub fn conv2d_weight_grad(self, gy: Var<'g>, geom: ConvGeom, kernel: [usize; 2]) -> Var<'g> {
        let value = kernels::conv2d_weight_grad(&self.value(), &gy.value(), &geom, kernel);
        self.graph.push(
            value,
            Op::ConvWeightGrad {
                x: self.id,
                gy: gy.id,
                geom,
            },
        )
    }

    /// Log-softmax over the last axis.
    pub fn log_softmax(self) -> Var<'g> {
        let value = self.value();
        let n = *value.shape().last().expect("log_softmax on rank-0");
        let mut data = Vec::with_capacity(value.len());
        for row in value.data().chunks(n) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
            data.extend(row.iter().map(|x| x - lse));
        }
        self.graph
            .push(Tensor::new(value.shape().to_vec(), data), Op::LogSoftmax(self.id))
    }
}

impl<'g> ops::Add for Var<'g> {
    type Output = Var<'g>;
    fn add(self, rhs: Var<'g>) -> Var<'g> {
        self.binary(rhs, Op::Add(self.id, rhs.id), |a, b| a + b)
    }
}

impl<'g> ops::Sub for Var<'g> {
    type Output = Var<'g>;
    fn sub(self, rhs: Var<'g>) -> Var<'g> {
        self.binary(rhs, Op::Sub(self.id, rhs.id), |a, b| a - b)
    }
}

impl<'g> ops::Mul for Var<'g> {
    type Output = Var<'g>;
    fn mul(self, rhs: Var<'g>) -> Var<'g> {
        self.binary(rhs, Op::Mul(self.id, rhs.id), |a, b| a * b)
    }
}

impl<'g> ops::Neg for Var<'g> {
    type Output = Var<'g>;
    fn neg(self) -> Var<'g> {
        self.unary(Op::Neg(self.id), |x| -x)
    }
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{} {:?}", self.id, self.value())
    }
}
