//! Reverse-mode tape over the forward kernels.
//!
//! Ops append a node holding the forward value plus whatever the backward
//! rule needs (im2col buffers, pooling argmaxes, batch statistics).
//! `backward` walks the nodes in reverse, accumulating gradients into every
//! participant that requires them. Nodes whose inputs all have
//! `requires_grad == false` are skipped, so attack passes that only need
//! input gradients do not pay for parameter gradients.

use super::kernels;
use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    Conv2d {
        input: Var,
        weight: Var,
        bias: Var,
        stride: usize,
        padding: usize,
        cols: Tensor,
    },
    Linear {
        input: Var,
        weight: Var,
        bias: Var,
    },
    Relu {
        input: Var,
    },
    MaxPool2d {
        input: Var,
        argmax: Vec<usize>,
    },
    GlobalAvgPool {
        input: Var,
    },
    BatchNorm {
        input: Var,
        gamma: Var,
        beta: Var,
        mean: Vec<f64>,
        var: Vec<f64>,
        eps: f64,
        // Per-batch statistics participate in the gradient only in
        // training mode; with stored statistics they are constants.
        stats_from_batch: bool,
    },
    Add {
        a: Var,
        b: Var,
    },
    Scale {
        input: Var,
        c: f64,
    },
    Mul {
        a: Var,
        b: Var,
    },
    Sum {
        input: Var,
    },
    Reshape {
        input: Var,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        targets: Vec<usize>,
        probs: Tensor,
    },
}

struct Node {
    value: Tensor,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
    op: Op,
}

/// Ordered record of primitive operations for one forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    backward_done: bool,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        self.nodes.push(Node { value, grad: None, requires_grad, op });
        Var(self.nodes.len() - 1)
    }

    fn requires(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Leaf whose gradient will be populated by `backward`.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, true, Op::Leaf)
    }

    /// Leaf treated as a constant.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, false, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of the last `backward` with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        let n = &self.nodes[v.0];
        n.grad.as_ref().map(|g| Tensor::new(n.value.shape().to_vec(), g.clone()).unwrap())
    }

    pub fn conv2d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Var,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        let (out, cols) = kernels::conv2d_forward(
            self.value(input),
            self.value(weight),
            self.value(bias),
            stride,
            padding,
        )?;
        let rg = self.requires(input) || self.requires(weight) || self.requires(bias);
        // The im2col buffer is only needed for the weight gradient.
        let saved = if self.requires(weight) { cols } else { Tensor::zeros(&[0]) };
        Ok(self.push(out, rg, Op::Conv2d { input, weight, bias, stride, padding, cols: saved }))
    }

    pub fn linear(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let out = kernels::linear_forward(self.value(input), self.value(weight), self.value(bias))?;
        let rg = self.requires(input) || self.requires(weight) || self.requires(bias);
        Ok(self.push(out, rg, Op::Linear { input, weight, bias }))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let out = kernels::relu_forward(self.value(input));
        let rg = self.requires(input);
        self.push(out, rg, Op::Relu { input })
    }

    pub fn maxpool2d(&mut self, input: Var, k: usize, stride: usize) -> Result<Var> {
        let (out, argmax) = kernels::maxpool2d_forward(self.value(input), k, stride)?;
        let rg = self.requires(input);
        Ok(self.push(out, rg, Op::MaxPool2d { input, argmax }))
    }

    pub fn global_avgpool(&mut self, input: Var) -> Result<Var> {
        let out = kernels::global_avgpool_forward(self.value(input))?;
        let rg = self.requires(input);
        Ok(self.push(out, rg, Op::GlobalAvgPool { input }))
    }

    /// Batch normalization. With `stats` given, runs in inference mode on
    /// those stored statistics; otherwise normalizes with per-batch
    /// statistics and returns them so the caller can update running stats.
    pub fn batchnorm(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        stats: Option<(&[f64], &[f64])>,
        eps: f64,
    ) -> Result<(Var, Vec<f64>, Vec<f64>)> {
        let c = self.value(input).shape()[1];
        if self.value(gamma).numel() != c || self.value(beta).numel() != c {
            return Err(Error::ShapeMismatch(format!(
                "batchnorm affine params want {} channels",
                c
            )));
        }
        let (mean, var, from_batch) = match stats {
            Some((m, v)) => (m.to_vec(), v.to_vec(), false),
            None => {
                let (m, v) = kernels::batch_stats(self.value(input));
                (m, v, true)
            }
        };
        let out = kernels::batchnorm_apply(
            self.value(input),
            &mean,
            &var,
            self.value(gamma),
            self.value(beta),
            eps,
        );
        let rg = self.requires(input) || self.requires(gamma) || self.requires(beta);
        let v = self.push(
            out,
            rg,
            Op::BatchNorm {
                input,
                gamma,
                beta,
                mean: mean.clone(),
                var: var.clone(),
                eps,
                stats_from_batch: from_batch,
            },
        );
        Ok((v, mean, var))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::ShapeMismatch(format!(
                "add: {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let data: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let out = Tensor::new(self.value(a).shape().to_vec(), data)?;
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(out, rg, Op::Add { a, b }))
    }

    pub fn scale(&mut self, input: Var, c: f64) -> Var {
        let out = self.value(input).map(|x| c * x);
        let rg = self.requires(input);
        self.push(out, rg, Op::Scale { input, c })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::ShapeMismatch(format!(
                "mul: {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let data: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .collect();
        let out = Tensor::new(self.value(a).shape().to_vec(), data)?;
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(out, rg, Op::Mul { a, b }))
    }

    pub fn sum(&mut self, input: Var) -> Var {
        let s: f64 = self.value(input).data().iter().sum();
        let rg = self.requires(input);
        self.push(Tensor::scalar(s), rg, Op::Sum { input })
    }

    pub fn reshape(&mut self, input: Var, shape: Vec<usize>) -> Result<Var> {
        let out = self.value(input).reshape(shape)?;
        let rg = self.requires(input);
        Ok(self.push(out, rg, Op::Reshape { input }))
    }

    /// Flatten [N, ...] to [N, rest].
    pub fn flatten(&mut self, input: Var) -> Result<Var> {
        let s = self.value(input).shape();
        let n = s[0];
        let rest = self.value(input).numel() / n;
        self.reshape(input, vec![n, rest])
    }

    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let (loss, probs) = kernels::softmax_cross_entropy_forward(self.value(logits), targets)?;
        let rg = self.requires(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            rg,
            Op::SoftmaxCrossEntropy { logits, targets: targets.to_vec(), probs },
        ))
    }

    fn add_grad(&mut self, v: Var, contribution: &[f64]) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let numel = self.nodes[v.0].value.numel();
        let g = self.nodes[v.0].grad.get_or_insert_with(|| vec![0.0; numel]);
        for (a, b) in g.iter_mut().zip(contribution) {
            *a += b;
        }
    }

    /// Populate gradients of all requiring participants of a scalar loss.
    /// Contributions accumulate additively within the pass; calling
    /// `backward` a second time on the same tape is an error.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::Invalid(
                "backward already ran on this tape; rebuild the forward pass first".into(),
            ));
        }
        if self.value(loss).numel() != 1 {
            return Err(Error::Invalid(format!(
                "backward wants a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        self.backward_done = true;
        let n = self.nodes.len();
        self.nodes[loss.0].grad = Some(vec![1.0]);

        for i in (0..n).rev() {
            if !self.nodes[i].requires_grad || self.nodes[i].grad.is_none() {
                continue;
            }
            let grad = self.nodes[i].grad.clone().unwrap();
            match &self.nodes[i].op {
                Op::Leaf => {}

                Op::Conv2d { input, weight, bias, stride, padding, cols } => {
                    let (input, weight, bias, stride, padding) =
                        (*input, *weight, *bias, *stride, *padding);
                    let xs = self.value(input).shape().to_vec();
                    let ws = self.value(weight).shape().to_vec();
                    let os = self.nodes[i].value.shape().to_vec();
                    let (nb, c_in, h, w) = (xs[0], xs[1], xs[2], xs[3]);
                    let (c_out, k) = (ws[0], ws[2]);
                    let rows = c_in * k * k;
                    let cols_per = os[2] * os[3];

                    if self.requires(bias) {
                        let mut db = vec![0.0; c_out];
                        for b in 0..nb {
                            for oc in 0..c_out {
                                let base = (b * c_out + oc) * cols_per;
                                for v in &grad[base..base + cols_per] {
                                    db[oc] += v;
                                }
                            }
                        }
                        self.add_grad(bias, &db);
                    }
                    if self.requires(weight) {
                        let cols_data = {
                            let Op::Conv2d { cols, .. } = &self.nodes[i].op else { unreachable!() };
                            cols.data().to_vec()
                        };
                        let mut dw = vec![0.0; c_out * rows];
                        for b in 0..nb {
                            kernels::matmul_bt_acc(
                                &mut dw,
                                &grad[b * c_out * cols_per..(b + 1) * c_out * cols_per],
                                &cols_data[b * rows * cols_per..(b + 1) * rows * cols_per],
                                c_out,
                                cols_per,
                                rows,
                            );
                        }
                        self.add_grad(weight, &dw);
                    }
                    if self.requires(input) {
                        let w_data = self.value(weight).data().to_vec();
                        let mut dcols = vec![0.0; nb * rows * cols_per];
                        for b in 0..nb {
                            kernels::matmul_at_acc(
                                &mut dcols[b * rows * cols_per..(b + 1) * rows * cols_per],
                                &w_data,
                                &grad[b * c_out * cols_per..(b + 1) * c_out * cols_per],
                                rows,
                                c_out,
                                cols_per,
                            );
                        }
                        let dx = kernels::col2im(&dcols, nb, c_in, h, w, k, stride, padding);
                        self.add_grad(input, &dx);
                    }
                    let _ = cols;
                }

                Op::Linear { input, weight, bias } => {
                    let (input, weight, bias) = (*input, *weight, *bias);
                    let xs = self.value(input).shape().to_vec();
                    let (nb, d_in) = (xs[0], xs[1]);
                    let d_out = self.value(weight).shape()[0];
                    if self.requires(bias) {
                        let mut db = vec![0.0; d_out];
                        for r in 0..nb {
                            for o in 0..d_out {
                                db[o] += grad[r * d_out + o];
                            }
                        }
                        self.add_grad(bias, &db);
                    }
                    if self.requires(weight) {
                        // dW[o,i] = sum_r dOut[r,o] * x[r,i]
                        let x = self.value(input).data().to_vec();
                        let mut dw = vec![0.0; d_out * d_in];
                        kernels::matmul_at_acc(&mut dw, &grad, &x, d_out, nb, d_in);
                        self.add_grad(weight, &dw);
                    }
                    if self.requires(input) {
                        // dX[r,i] = sum_o dOut[r,o] * W[o,i]
                        let w = self.value(weight).data().to_vec();
                        let mut dx = vec![0.0; nb * d_in];
                        kernels::matmul_acc(&mut dx, &grad, &w, nb, d_out, d_in);
                        self.add_grad(input, &dx);
                    }
                }

                Op::Relu { input } => {
                    let input = *input;
                    let dg: Vec<f64> = grad
                        .iter()
                        .zip(self.value(input).data())
                        .map(|(g, &x)| if x > 0.0 { *g } else { 0.0 })
                        .collect();
                    self.add_grad(input, &dg);
                }

                Op::MaxPool2d { input, argmax } => {
                    let input = *input;
                    let mut dx = vec![0.0; self.value(input).numel()];
                    for (g, &idx) in grad.iter().zip(argmax.iter()) {
                        dx[idx] += g;
                    }
                    self.add_grad(input, &dx);
                }

                Op::GlobalAvgPool { input } => {
                    let input = *input;
                    let s = self.value(input).shape().to_vec();
                    let (nb, c, hw) = (s[0], s[1], s[2] * s[3]);
                    let mut dx = vec![0.0; nb * c * hw];
                    for b in 0..nb {
                        for ch in 0..c {
                            let g = grad[b * c + ch] / hw as f64;
                            let base = (b * c + ch) * hw;
                            for v in &mut dx[base..base + hw] {
                                *v = g;
                            }
                        }
                    }
                    self.add_grad(input, &dx);
                }

                Op::BatchNorm { input, gamma, beta, mean, var, eps, stats_from_batch } => {
                    let (input, gamma, beta) = (*input, *gamma, *beta);
                    let (mean, var, eps, from_batch) =
                        (mean.clone(), var.clone(), *eps, *stats_from_batch);
                    let s = self.value(input).shape().to_vec();
                    let (nb, c, hw) = (s[0], s[1], s[2] * s[3]);
                    let count = (nb * hw) as f64;
                    let x = self.value(input).data().to_vec();
                    let g_aff = self.value(gamma).data().to_vec();

                    // dgamma / dbeta
                    let mut dgamma = vec![0.0; c];
                    let mut dbeta = vec![0.0; c];
                    for b in 0..nb {
                        for ch in 0..c {
                            let inv = 1.0 / (var[ch] + eps).sqrt();
                            let base = (b * c + ch) * hw;
                            for o in 0..hw {
                                let xhat = (x[base + o] - mean[ch]) * inv;
                                dgamma[ch] += grad[base + o] * xhat;
                                dbeta[ch] += grad[base + o];
                            }
                        }
                    }
                    if self.requires(gamma) {
                        self.add_grad(gamma, &dgamma);
                    }
                    if self.requires(beta) {
                        self.add_grad(beta, &dbeta);
                    }

                    if self.requires(input) {
                        let mut dx = vec![0.0; x.len()];
                        if from_batch {
                            // dxhat_sum and dxhat.xhat_sum per channel
                            let mut sum_dy = vec![0.0; c];
                            let mut sum_dy_xhat = vec![0.0; c];
                            for b in 0..nb {
                                for ch in 0..c {
                                    let inv = 1.0 / (var[ch] + eps).sqrt();
                                    let base = (b * c + ch) * hw;
                                    for o in 0..hw {
                                        let xhat = (x[base + o] - mean[ch]) * inv;
                                        sum_dy[ch] += grad[base + o];
                                        sum_dy_xhat[ch] += grad[base + o] * xhat;
                                    }
                                }
                            }
                            for b in 0..nb {
                                for ch in 0..c {
                                    let inv = 1.0 / (var[ch] + eps).sqrt();
                                    let base = (b * c + ch) * hw;
                                    for o in 0..hw {
                                        let xhat = (x[base + o] - mean[ch]) * inv;
                                        dx[base + o] = g_aff[ch] * inv / count
                                            * (count * grad[base + o]
                                                - sum_dy[ch]
                                                - xhat * sum_dy_xhat[ch]);
                                    }
                                }
                            }
                        } else {
                            // Stored statistics are constants: pure affine map.
                            for b in 0..nb {
                                for ch in 0..c {
                                    let inv = 1.0 / (var[ch] + eps).sqrt();
                                    let base = (b * c + ch) * hw;
                                    for o in 0..hw {
                                        dx[base + o] = grad[base + o] * g_aff[ch] * inv;
                                    }
                                }
                            }
                        }
                        self.add_grad(input, &dx);
                    }
                }

                Op::Add { a, b } => {
                    let (a, b) = (*a, *b);
                    self.add_grad(a, &grad);
                    self.add_grad(b, &grad);
                }

                Op::Scale { input, c } => {
                    let (input, c) = (*input, *c);
                    let dg: Vec<f64> = grad.iter().map(|g| c * g).collect();
                    self.add_grad(input, &dg);
                }

                Op::Mul { a, b } => {
                    let (a, b) = (*a, *b);
                    let da: Vec<f64> =
                        grad.iter().zip(self.value(b).data()).map(|(g, &y)| g * y).collect();
                    let db: Vec<f64> =
                        grad.iter().zip(self.value(a).data()).map(|(g, &x)| g * x).collect();
                    self.add_grad(a, &da);
                    self.add_grad(b, &db);
                }

                Op::Sum { input } => {
                    let input = *input;
                    let dg = vec![grad[0]; self.value(input).numel()];
                    self.add_grad(input, &dg);
                }

                Op::Reshape { input } => {
                    let input = *input;
                    self.add_grad(input, &grad);
                }

                Op::SoftmaxCrossEntropy { logits, targets, probs } => {
                    let logits = *logits;
                    let targets = targets.clone();
                    let p = probs.data().to_vec();
                    let s = self.value(logits).shape().to_vec();
                    let (nb, c) = (s[0], s[1]);
                    let scale = grad[0] / nb as f64;
                    let mut dl = vec![0.0; nb * c];
                    for r in 0..nb {
                        for j in 0..c {
                            let onehot = if j == targets[r] { 1.0 } else { 0.0 };
                            dl[r * c + j] = scale * (p[r * c + j] - onehot);
                        }
                    }
                    self.add_grad(logits, &dl);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_grad_is_ones() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::new(vec![2, 3], vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0]).unwrap());
        let loss = t.sum(x);
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap().data(), &[1.0; 6]);
    }

    #[test]
    fn sum_of_squares_grad() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::new(vec![2], vec![1.0, -2.0]).unwrap());
        let sq = t.mul(x, x).unwrap();
        let loss = t.sum(sq);
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap().data(), &[2.0, -4.0]);
    }

    #[test]
    fn backward_needs_scalar_and_runs_once() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
        assert!(t.backward(x).is_err());
        let loss = t.sum(x);
        t.backward(loss).unwrap();
        assert!(t.backward(loss).is_err());
    }

    #[test]
    fn maxpool_grad_routes_to_argmax() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::new(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let p = t.maxpool2d(x, 2, 2).unwrap();
        let loss = t.sum(p);
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap().data(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn relu_values_and_grad() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::new(vec![2], vec![-1.0, 2.0]).unwrap());
        let r = t.relu(x);
        assert_eq!(t.value(r).data(), &[0.0, 2.0]);
        let loss = t.sum(r);
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap().data(), &[0.0, 1.0]);
    }

    #[test]
    fn constant_gets_no_grad() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
        let loss = t.sum(x);
        t.backward(loss).unwrap();
        assert!(t.grad(x).is_none());
    }

    #[test]
    fn linearity_of_backward() {
        // grad of (a*loss1 + b*loss2) == a*grad1 + b*grad2
        let data = Tensor::new(vec![3], vec![0.3, -0.7, 1.2]).unwrap();
        let (a, b) = (1.7, -0.4);

        let grad_of = |mode: u8| -> Vec<f64> {
            let mut t = Tape::new();
            let x = t.leaf(data.clone());
            let sq = t.mul(x, x).unwrap();
            let l1 = t.sum(sq); // sum of squares
            let l2 = t.sum(x); // plain sum
            let loss = match mode {
                0 => {
                    let s1 = t.scale(l1, a);
                    let s2 = t.scale(l2, b);
                    t.add(s1, s2).unwrap()
                }
                1 => l1,
                _ => l2,
            };
            t.backward(loss).unwrap();
            t.grad(x).unwrap().into_data()
        };

        let combined = grad_of(0);
        let g1 = grad_of(1);
        let g2 = grad_of(2);
        for i in 0..3 {
            let want = a * g1[i] + b * g2[i];
            assert!((combined[i] - want).abs() < 1e-6);
        }
    }

    #[test]
    fn grads_accumulate_across_reuse() {
        // x used twice: d(sum(x) + sum(x))/dx = 2
        let mut t = Tape::new();
        let x = t.leaf(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
        let s1 = t.sum(x);
        let s2 = t.sum(x);
        let loss = t.add(s1, s2).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap().data(), &[2.0, 2.0]);
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = crate::rng::Rng::from_seed(9);
        let x = Tensor::new(vec![2, 1, 6, 6], (0..72).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let w = Tensor::new(vec![3, 1, 3, 3], (0..27).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let b = Tensor::new(vec![3], vec![0.1, -0.2, 0.3]).unwrap();

        let run = || {
            let mut t = Tape::new();
            let xv = t.leaf(x.clone());
            let wv = t.leaf(w.clone());
            let bv = t.leaf(b.clone());
            let c = t.conv2d(xv, wv, bv, 1, 1).unwrap();
            let r = t.relu(c);
            let loss = t.sum(r);
            t.backward(loss).unwrap();
            (
                t.value(loss).item().to_bits(),
                t.grad(wv).unwrap().into_data(),
                t.grad(xv).unwrap().into_data(),
            )
        };
        let (l1, gw1, gx1) = run();
        let (l2, gw2, gx2) = run();
        assert_eq!(l1, l2);
        assert!(gw1.iter().zip(&gw2).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(gx1.iter().zip(&gx2).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
