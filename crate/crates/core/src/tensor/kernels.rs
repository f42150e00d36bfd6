//! Forward compute kernels, shared by the inference path and the tape.
//!
//! All kernels are pure functions of their tensor arguments with fixed loop
//! order, so repeated runs are bitwise identical.

use super::Tensor;
use crate::error::{Error, Result};

/// Output spatial extent of a conv/pool window, or an error when the window
/// does not tile the padded input exactly.
pub fn conv_out_extent(input: usize, k: usize, stride: usize, padding: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::Config("stride must be positive".into()));
    }
    if k == 0 {
        return Err(Error::Config("empty kernel window".into()));
    }
    let padded = input + 2 * padding;
    if padded < k {
        return Err(Error::Config(format!(
            "kernel {} larger than padded input {}",
            k, padded
        )));
    }
    let span = padded - k;
    if span % stride != 0 {
        return Err(Error::Config(format!(
            "non-integer output extent: ({} + 2*{} - {}) not divisible by stride {}",
            input, padding, k, stride
        )));
    }
    Ok(span / stride + 1)
}

/// Patch-matrix expansion of an NCHW batch: for each sample, a
/// `[C*k*k, H_out*W_out]` matrix whose columns are flattened receptive
/// fields. Zero padding is materialized as zeros.
pub fn im2col(
    input: &Tensor,
    k: usize,
    stride: usize,
    padding: usize,
) -> Result<(Tensor, usize, usize)> {
    let s = input.shape();
    if s.len() != 4 {
        return Err(Error::ShapeMismatch(format!("im2col wants NCHW, got {:?}", s)));
    }
    let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
    let h_out = conv_out_extent(h, k, stride, padding)?;
    let w_out = conv_out_extent(w, k, stride, padding)?;
    let rows = c * k * k;
    let cols_per = h_out * w_out;
    let mut out = vec![0.0; n * rows * cols_per];
    let x = input.data();
    for b in 0..n {
        let x_base = b * c * h * w;
        let o_base = b * rows * cols_per;
        for ch in 0..c {
            for ki in 0..k {
                for kj in 0..k {
                    let row = (ch * k + ki) * k + kj;
                    for oi in 0..h_out {
                        let ii = (oi * stride + ki) as isize - padding as isize;
                        if ii < 0 || ii >= h as isize {
                            continue;
                        }
                        for oj in 0..w_out {
                            let jj = (oj * stride + kj) as isize - padding as isize;
                            if jj < 0 || jj >= w as isize {
                                continue;
                            }
                            out[o_base + row * cols_per + oi * w_out + oj] =
                                x[x_base + ch * h * w + ii as usize * w + jj as usize];
                        }
                    }
                }
            }
        }
    }
    Ok((Tensor::new(vec![n, rows, cols_per], out)?, h_out, w_out))
}

/// Scatter-add inverse of [`im2col`]; overlapping windows accumulate.
pub fn col2im(
    cols: &[f64],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    padding: usize,
) -> Vec<f64> {
    let h_out = (h + 2 * padding - k) / stride + 1;
    let w_out = (w + 2 * padding - k) / stride + 1;
    let rows = c * k * k;
    let cols_per = h_out * w_out;
    let mut out = vec![0.0; n * c * h * w];
    for b in 0..n {
        let c_base = b * rows * cols_per;
        let o_base = b * c * h * w;
        for ch in 0..c {
            for ki in 0..k {
                for kj in 0..k {
                    let row = (ch * k + ki) * k + kj;
                    for oi in 0..h_out {
                        let ii = (oi * stride + ki) as isize - padding as isize;
                        if ii < 0 || ii >= h as isize {
                            continue;
                        }
                        for oj in 0..w_out {
                            let jj = (oj * stride + kj) as isize - padding as isize;
                            if jj < 0 || jj >= w as isize {
                                continue;
                            }
                            out[o_base + ch * h * w + ii as usize * w + jj as usize] +=
                                cols[c_base + row * cols_per + oi * w_out + oj];
                        }
                    }
                }
            }
        }
    }
    out
}

/// `C[m,n] += A[m,p] * B[p,n]`, ikj order.
pub fn matmul_acc(c: &mut [f64], a: &[f64], b: &[f64], m: usize, p: usize, n: usize) {
    for i in 0..m {
        for kk in 0..p {
            let aik = a[i * p + kk];
            if aik == 0.0 {
                continue;
            }
            let b_row = &b[kk * n..(kk + 1) * n];
            let c_row = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                c_row[j] += aik * b_row[j];
            }
        }
    }
}

/// `C[m,n] += A^T[m,p] * B[p,n]` where A is stored [p,m].
pub fn matmul_at_acc(c: &mut [f64], a: &[f64], b: &[f64], m: usize, p: usize, n: usize) {
    for kk in 0..p {
        let a_row = &a[kk * m..(kk + 1) * m];
        let b_row = &b[kk * n..(kk + 1) * n];
        for i in 0..m {
            let aik = a_row[i];
            if aik == 0.0 {
                continue;
            }
            let c_row = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                c_row[j] += aik * b_row[j];
            }
        }
    }
}

/// `C[m,n] += A[m,p] * B^T[p,n]` where B is stored [n,p].
pub fn matmul_bt_acc(c: &mut [f64], a: &[f64], b: &[f64], m: usize, p: usize, n: usize) {
    for i in 0..m {
        let a_row = &a[i * p..(i + 1) * p];
        for j in 0..n {
            let b_row = &b[j * p..(j + 1) * p];
            let mut s = 0.0;
            for kk in 0..p {
                s += a_row[kk] * b_row[kk];
            }
            c[i * n + j] += s;
        }
    }
}

/// Cross-correlation of an NCHW batch with `[C_out, C_in, k, k]` weights.
/// Returns the output plus the im2col buffer the backward pass reuses.
pub fn conv2d_forward(
    input: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<(Tensor, Tensor)> {
    let xs = input.shape();
    let ws = weight.shape();
    if xs.len() != 4 || ws.len() != 4 {
        return Err(Error::ShapeMismatch(format!(
            "conv2d wants NCHW input and [Cout,Cin,k,k] weight, got {:?} and {:?}",
            xs, ws
        )));
    }
    if ws[2] != ws[3] {
        return Err(Error::ShapeMismatch(format!("non-square kernel {:?}", ws)));
    }
    if xs[1] != ws[1] {
        return Err(Error::ShapeMismatch(format!(
            "conv2d channel mismatch: input has {} channels, weight expects {}",
            xs[1], ws[1]
        )));
    }
    if bias.numel() != ws[0] {
        return Err(Error::ShapeMismatch(format!(
            "conv2d bias has {} entries for {} output channels",
            bias.numel(),
            ws[0]
        )));
    }
    let (n, c_out, k) = (xs[0], ws[0], ws[2]);
    let (cols, h_out, w_out) = im2col(input, k, stride, padding)?;
    let rows = ws[1] * k * k;
    let cols_per = h_out * w_out;
    let mut out = vec![0.0; n * c_out * cols_per];
    for b in 0..n {
        let col = &cols.data()[b * rows * cols_per..(b + 1) * rows * cols_per];
        let o = &mut out[b * c_out * cols_per..(b + 1) * c_out * cols_per];
        for oc in 0..c_out {
            let bv = bias.data()[oc];
            for v in &mut o[oc * cols_per..(oc + 1) * cols_per] {
                *v = bv;
            }
        }
        matmul_acc(o, weight.data(), col, c_out, rows, cols_per);
    }
    Ok((Tensor::new(vec![n, c_out, h_out, w_out], out)?, cols))
}

/// Affine map `x W^T + b` with `weight: [D_out, D_in]`.
pub fn linear_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let xs = input.shape();
    let ws = weight.shape();
    if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[1] {
        return Err(Error::ShapeMismatch(format!(
            "linear: input {:?} vs weight {:?} (inner dims must agree)",
            xs, ws
        )));
    }
    if bias.numel() != ws[0] {
        return Err(Error::ShapeMismatch(format!(
            "linear bias has {} entries for {} outputs",
            bias.numel(),
            ws[0]
        )));
    }
    let (n, d_in, d_out) = (xs[0], xs[1], ws[0]);
    let mut out = vec![0.0; n * d_out];
    for r in 0..n {
        out[r * d_out..(r + 1) * d_out].copy_from_slice(bias.data());
    }
    matmul_bt_acc(&mut out, input.data(), weight.data(), n, d_in, d_out);
    Tensor::new(vec![n, d_out], out)
}

pub fn relu_forward(input: &Tensor) -> Tensor {
    input.map(|x| x.max(0.0))
}

/// Max pooling over square windows; also returns the flat input index of
/// each window maximum (first occurrence wins) for gradient routing.
pub fn maxpool2d_forward(
    input: &Tensor,
    k: usize,
    stride: usize,
) -> Result<(Tensor, Vec<usize>)> {
    let s = input.shape();
    if s.len() != 4 {
        return Err(Error::ShapeMismatch(format!("maxpool wants NCHW, got {:?}", s)));
    }
    let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
    let h_out = conv_out_extent(h, k, stride, 0)?;
    let w_out = conv_out_extent(w, k, stride, 0)?;
    let x = input.data();
    let mut out = vec![0.0; n * c * h_out * w_out];
    let mut arg = vec![0usize; n * c * h_out * w_out];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * h * w;
            let obase = (b * c + ch) * h_out * w_out;
            for oi in 0..h_out {
                for oj in 0..w_out {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for ki in 0..k {
                        for kj in 0..k {
                            let idx = base + (oi * stride + ki) * w + (oj * stride + kj);
                            if x[idx] > best {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    out[obase + oi * w_out + oj] = best;
                    arg[obase + oi * w_out + oj] = best_idx;
                }
            }
        }
    }
    Ok((Tensor::new(vec![n, c, h_out, w_out], out)?, arg))
}

/// Global average over the spatial dims: [N,C,H,W] -> [N,C].
pub fn global_avgpool_forward(input: &Tensor) -> Result<Tensor> {
    let s = input.shape();
    if s.len() != 4 {
        return Err(Error::ShapeMismatch(format!("avgpool wants NCHW, got {:?}", s)));
    }
    let (n, c, hw) = (s[0], s[1], s[2] * s[3]);
    if hw == 0 {
        return Err(Error::Config("empty pooling window".into()));
    }
    let x = input.data();
    let mut out = vec![0.0; n * c];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * hw;
            let mut s = 0.0;
            for v in &x[base..base + hw] {
                s += v;
            }
            out[b * c + ch] = s / hw as f64;
        }
    }
    Tensor::new(vec![n, c], out)
}

/// Per-channel mean and (biased) variance over N,H,W of an NCHW batch.
pub fn batch_stats(input: &Tensor) -> (Vec<f64>, Vec<f64>) {
    let s = input.shape();
    let (n, c, hw) = (s[0], s[1], s[2] * s[3]);
    let count = (n * hw) as f64;
    let x = input.data();
    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * hw;
            for v in &x[base..base + hw] {
                mean[ch] += v;
            }
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * hw;
            for v in &x[base..base + hw] {
                let d = v - mean[ch];
                var[ch] += d * d;
            }
        }
    }
    for v in &mut var {
        *v /= count;
    }
    (mean, var)
}

/// Channel-wise normalization `gamma * (x - mean)/sqrt(var+eps) + beta`.
pub fn batchnorm_apply(
    input: &Tensor,
    mean: &[f64],
    var: &[f64],
    gamma: &Tensor,
    beta: &Tensor,
    eps: f64,
) -> Tensor {
    let s = input.shape();
    let (n, c, hw) = (s[0], s[1], s[2] * s[3]);
    let x = input.data();
    let g = gamma.data();
    let bt = beta.data();
    let mut out = vec![0.0; x.len()];
    for b in 0..n {
        for ch in 0..c {
            let inv = 1.0 / (var[ch] + eps).sqrt();
            let base = (b * c + ch) * hw;
            for i in base..base + hw {
                out[i] = g[ch] * (x[i] - mean[ch]) * inv + bt[ch];
            }
        }
    }
    Tensor { shape: s.to_vec(), data: out }
}

/// Row-wise softmax of a [N, C] tensor.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let s = logits.shape();
    let (n, c) = (s[0], s[1]);
    let x = logits.data();
    let mut out = vec![0.0; n * c];
    for r in 0..n {
        let row = &x[r * c..(r + 1) * c];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for j in 0..c {
            let e = (row[j] - m).exp();
            out[r * c + j] = e;
            z += e;
        }
        for j in 0..c {
            out[r * c + j] /= z;
        }
    }
    Tensor { shape: vec![n, c], data: out }
}

/// Mean softmax cross-entropy of [N, C] logits against class indices.
/// Returns (loss, softmax probabilities for the backward pass).
pub fn softmax_cross_entropy_forward(
    logits: &Tensor,
    targets: &[usize],
) -> Result<(f64, Tensor)> {
    let s = logits.shape();
    if s.len() != 2 {
        return Err(Error::ShapeMismatch(format!("cross-entropy wants [N,C] logits, got {:?}", s)));
    }
    let (n, c) = (s[0], s[1]);
    if targets.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} targets for batch of {}",
            targets.len(),
            n
        )));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= c) {
        return Err(Error::Invalid(format!("target index {} out of range [0,{})", bad, c)));
    }
    let probs = softmax_rows(logits);
    let mut loss = 0.0;
    for r in 0..n {
        loss -= probs.data()[r * c + targets[r]].max(f64::MIN_POSITIVE).ln();
    }
    Ok((loss / n as f64, probs))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct 6-nested-loop convolution, the independent reference the
    // im2col path is checked against.
    fn conv2d_reference(
        x: &Tensor,
        w: &Tensor,
        b: &Tensor,
        stride: usize,
        pad: usize,
    ) -> Tensor {
        let (n, c_in, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        let (c_out, k) = (w.shape()[0], w.shape()[2]);
        let h_out = (h + 2 * pad - k) / stride + 1;
        let w_out = (wd + 2 * pad - k) / stride + 1;
        let mut out = vec![0.0; n * c_out * h_out * w_out];
        for bn in 0..n {
            for oc in 0..c_out {
                for oi in 0..h_out {
                    for oj in 0..w_out {
                        let mut acc = b.data()[oc];
                        for ic in 0..c_in {
                            for ki in 0..k {
                                for kj in 0..k {
                                    let ii = (oi * stride + ki) as isize - pad as isize;
                                    let jj = (oj * stride + kj) as isize - pad as isize;
                                    if ii < 0 || jj < 0 || ii >= h as isize || jj >= wd as isize {
                                        continue;
                                    }
                                    acc += x.data()[((bn * c_in + ic) * h + ii as usize) * wd
                                        + jj as usize]
                                        * w.data()[((oc * c_in + ic) * k + ki) * k + kj];
                                }
                            }
                        }
                        out[((bn * c_out + oc) * h_out + oi) * w_out + oj] = acc;
                    }
                }
            }
        }
        Tensor::new(vec![n, c_out, h_out, w_out], out).unwrap()
    }

    #[test]
    fn conv_all_ones_sums_to_nine() {
        let x = Tensor::full(&[1, 1, 3, 3], 1.0);
        let w = Tensor::full(&[1, 1, 3, 3], 1.0);
        let b = Tensor::zeros(&[1]);
        let (out, _) = conv2d_forward(&x, &w, &b, 1, 0).unwrap();
        assert_eq!(out.shape(), &[1, 1, 1, 1]);
        assert_eq!(out.item(), 9.0);
    }

    #[test]
    fn conv_identity_kernel_preserves_input() {
        let mut w = Tensor::zeros(&[1, 1, 3, 3]);
        w.data_mut()[4] = 1.0; // center tap
        let x = Tensor::new(
            vec![1, 1, 2, 3],
            vec![0.5, -1.0, 2.0, 3.0, 0.0, -0.25],
        )
        .unwrap();
        let b = Tensor::zeros(&[1]);
        let (out, _) = conv2d_forward(&x, &w, &b, 1, 1).unwrap();
        assert_eq!(out.shape(), x.shape());
        assert_eq!(out.data(), x.data());
    }

    #[test]
    fn conv_matches_loop_reference() {
        let mut rng = crate::rng::Rng::from_seed(11);
        let x = Tensor::new(vec![2, 3, 8, 8], (0..2 * 3 * 64).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let w = Tensor::new(vec![4, 3, 3, 3], (0..4 * 3 * 9).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let b = Tensor::new(vec![4], (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        for (stride, pad) in [(1, 0), (1, 1), (2, 1)] {
            let (got, _) = conv2d_forward(&x, &w, &b, stride, pad).unwrap();
            let want = conv2d_reference(&x, &w, &b, stride, pad);
            assert_eq!(got.shape(), want.shape());
            for (g, e) in got.data().iter().zip(want.data()) {
                let rel = (g - e).abs() / e.abs().max(1.0);
                assert!(rel < 1e-5, "conv mismatch {} vs {}", g, e);
            }
        }
    }

    #[test]
    fn conv_rejects_bad_shapes() {
        let x = Tensor::zeros(&[1, 2, 4, 4]);
        let w = Tensor::zeros(&[1, 3, 3, 3]);
        let b = Tensor::zeros(&[1]);
        assert!(matches!(
            conv2d_forward(&x, &w, &b, 1, 0),
            Err(Error::ShapeMismatch(_))
        ));
        // 4 + 0 - 3 = 1 not divisible by stride 2
        let w2 = Tensor::zeros(&[1, 2, 3, 3]);
        assert!(matches!(conv2d_forward(&x, &w2, &b, 2, 0), Err(Error::Config(_))));
    }

    #[test]
    fn linear_identity_and_zero_weight() {
        let x = Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut eye = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            eye.data_mut()[i * 3 + i] = 1.0;
        }
        let b0 = Tensor::zeros(&[3]);
        let out = linear_forward(&x, &eye, &b0).unwrap();
        assert_eq!(out.data(), x.data());

        let zw = Tensor::zeros(&[2, 3]);
        let b = Tensor::new(vec![2], vec![0.5, -1.5]).unwrap();
        let out = linear_forward(&x, &zw, &b).unwrap();
        assert_eq!(out.data(), &[0.5, -1.5, 0.5, -1.5]);
    }

    #[test]
    fn linear_matches_loop_reference() {
        let mut rng = crate::rng::Rng::from_seed(5);
        let x = Tensor::new(vec![3, 5], (0..15).map(|_| rng.uniform(-2.0, 2.0)).collect()).unwrap();
        let w = Tensor::new(vec![4, 5], (0..20).map(|_| rng.uniform(-2.0, 2.0)).collect()).unwrap();
        let b = Tensor::new(vec![4], (0..4).map(|_| rng.uniform(-2.0, 2.0)).collect()).unwrap();
        let got = linear_forward(&x, &w, &b).unwrap();
        for r in 0..3 {
            for o in 0..4 {
                let mut want = b.data()[o];
                for i in 0..5 {
                    want += x.data()[r * 5 + i] * w.data()[o * 5 + i];
                }
                let rel = (got.data()[r * 4 + o] - want).abs() / want.abs().max(1.0);
                assert!(rel < 1e-6);
            }
        }
    }

    #[test]
    fn maxpool_takes_window_max() {
        let x = Tensor::new(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (out, arg) = maxpool2d_forward(&x, 2, 2).unwrap();
        assert_eq!(out.data(), &[4.0]);
        assert_eq!(arg, vec![3]);
    }

    #[test]
    fn cross_entropy_uniform_is_ln_classes() {
        let logits = Tensor::zeros(&[1, 10]);
        let (loss, _) = softmax_cross_entropy_forward(&logits, &[3]).unwrap();
        assert!((loss - 10.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_perfect_margin_goes_to_zero() {
        let mut prev = f64::INFINITY;
        for margin in [2.0, 8.0, 32.0] {
            let mut logits = Tensor::zeros(&[1, 4]);
            logits.data_mut()[2] = margin;
            let (loss, _) = softmax_cross_entropy_forward(&logits, &[2]).unwrap();
            assert!(loss < prev);
            prev = loss;
        }
        assert!(prev < 1e-10);
    }

    #[test]
    fn cross_entropy_rejects_bad_target() {
        let logits = Tensor::zeros(&[1, 4]);
        assert!(softmax_cross_entropy_forward(&logits, &[4]).is_err());
    }

    #[test]
    fn im2col_col2im_adjoint_roundtrip() {
        // col2im(im2col(x)) multiplies each entry by its window multiplicity;
        // with stride=k (disjoint windows) it is exactly the identity.
        let mut rng = crate::rng::Rng::from_seed(3);
        let x = Tensor::new(vec![1, 2, 4, 4], (0..32).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let (cols, _, _) = im2col(&x, 2, 2, 0).unwrap();
        let back = col2im(cols.data(), 1, 2, 4, 4, 2, 2, 0);
        for (a, b) in back.iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
