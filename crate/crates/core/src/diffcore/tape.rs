//! Reverse-mode tape covering exactly the ops the classifier needs.
//!
//! Every op computes its value eagerly and appends a node; `backward` walks
//! the node list in reverse, which is a valid topological order because
//! nodes can only reference earlier nodes.

use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Conv2d { input: Var, weight: Var, bias: Var, kernel: usize, cols: Vec<f64> },
    Relu { input: Var },
    MaxPool2 { input: Var, argmax: Vec<usize> },
    GlobalAvgPool { input: Var },
    Flatten { input: Var },
    Linear { input: Var, weight: Var, bias: Var },
    CrossEntropy { logits: Var, probs: Vec<f64>, labels: Vec<usize> },
    Pick { input: Var, index: Vec<usize> },
    Sum { input: Var },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient accumulated by the last `backward`, if the node took part.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        let node = &self.nodes[v.0];
        node.grad
            .as_ref()
            .map(|g| Tensor::new(node.value.shape().to_vec(), g.clone()).expect("grad shape mirrors value"))
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad, grad: None });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Same-padded, stride-1 2-D convolution. `input` is (n, cin, h, w),
    /// `weight` is (cout, cin, k, k) with odd k, `bias` is (cout).
    pub fn conv2d(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let xs = self.value(input).shape().to_vec();
        let ws = self.value(weight).shape().to_vec();
        let bs = self.value(bias).shape().to_vec();
        if xs.len() != 4 || ws.len() != 4 || ws[1] != xs[1] || ws[2] != ws[3] || ws[2] % 2 == 0 {
            return Err(Error::ShapeMismatch { expected: vec![0, ws.get(1).copied().unwrap_or(0), 0, 0], got: xs });
        }
        if bs != [ws[0]] {
            return Err(Error::ShapeMismatch { expected: vec![ws[0]], got: bs });
        }
        let (n, cin, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let (cout, k) = (ws[0], ws[2]);
        let hw = h * w;
        let rows = cin * k * k;
        let keep_cols = self.requires_grad(weight);
        let mut cols = if keep_cols { vec![0.0; n * rows * hw] } else { Vec::new() };
        let mut scratch = vec![0.0; rows * hw];
        let mut out = vec![0.0; n * cout * hw];
        {
            let x = self.value(input).data();
            let wt = self.value(weight).data();
            let b = self.value(bias).data();
            for s in 0..n {
                let col: &mut [f64] =
                    if keep_cols { &mut cols[s * rows * hw..(s + 1) * rows * hw] } else { &mut scratch };
                im2col(&x[s * cin * hw..(s + 1) * cin * hw], cin, h, w, k, col);
                let o = &mut out[s * cout * hw..(s + 1) * cout * hw];
                for oc in 0..cout {
                    let orow = &mut o[oc * hw..(oc + 1) * hw];
                    orow.fill(b[oc]);
                    let wrow = &wt[oc * rows..(oc + 1) * rows];
                    for (j, &wj) in wrow.iter().enumerate() {
                        axpy(wj, &col[j * hw..(j + 1) * hw], orow);
                    }
                }
            }
        }
        let rg = self.rg(&[input, weight, bias]);
        let value = Tensor::new(vec![n, cout, h, w], out)?;
        Ok(self.push(value, Op::Conv2d { input, weight, bias, kernel: k, cols }, rg))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let value = self.value(input).map(|v| if v > 0.0 { v } else { 0.0 });
        let rg = self.rg(&[input]);
        self.push(value, Op::Relu { input }, rg)
    }

    /// 2×2 max pooling with stride 2; ties resolve to the first element in
    /// row-major window order.
    pub fn max_pool2(&mut self, input: Var) -> Result<Var> {
        let xs = self.value(input).shape().to_vec();
        if xs.len() != 4 || xs[2] % 2 != 0 || xs[3] % 2 != 0 {
            return Err(Error::invalid(format!("max_pool2 needs (n,c,even h,even w), got {xs:?}")));
        }
        let (n, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let (oh, ow) = (h / 2, w / 2);
        let x = self.value(input).data();
        let mut out = vec![0.0; n * c * oh * ow];
        let mut argmax = vec![0usize; out.len()];
        for plane in 0..n * c {
            let base = plane * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + 2 * oy * w + 2 * ox;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = base + (2 * oy + dy) * w + 2 * ox + dx;
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                    let o = plane * oh * ow + oy * ow + ox;
                    out[o] = x[best];
                    argmax[o] = best;
                }
            }
        }
        let rg = self.rg(&[input]);
        let value = Tensor::new(vec![n, c, oh, ow], out)?;
        Ok(self.push(value, Op::MaxPool2 { input, argmax }, rg))
    }

    /// (n, c, h, w) -> (n, c) spatial mean.
    pub fn global_avg_pool(&mut self, input: Var) -> Result<Var> {
        let xs = self.value(input).shape().to_vec();
        if xs.len() != 4 {
            return Err(Error::invalid(format!("global_avg_pool needs a 4-D input, got {xs:?}")));
        }
        let hw = xs[2] * xs[3];
        let out: Vec<f64> =
            self.value(input).data().chunks_exact(hw).map(|c| c.iter().sum::<f64>() / hw as f64).collect();
        let rg = self.rg(&[input]);
        let value = Tensor::new(vec![xs[0], xs[1]], out)?;
        Ok(self.push(value, Op::GlobalAvgPool { input }, rg))
    }

    /// Collapses every axis after the first.
    pub fn flatten(&mut self, input: Var) -> Var {
        let t = self.value(input);
        let n = t.shape()[0];
        let d = t.len() / n;
        let value = t.clone().reshape(vec![n, d]).expect("element count preserved");
        let rg = self.rg(&[input]);
        self.push(value, Op::Flatten { input }, rg)
    }

    /// `input` (n, d) times `weight`ᵀ with `weight` (o, d), plus `bias` (o).
    pub fn linear(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let xs = self.value(input).shape().to_vec();
        let ws = self.value(weight).shape().to_vec();
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[1] {
            return Err(Error::ShapeMismatch { expected: vec![xs.first().copied().unwrap_or(0), ws.get(1).copied().unwrap_or(0)], got: xs });
        }
        if self.value(bias).shape() != [ws[0]] {
            return Err(Error::ShapeMismatch { expected: vec![ws[0]], got: self.value(bias).shape().to_vec() });
        }
        let (n, d, o) = (xs[0], xs[1], ws[0]);
        let x = self.value(input).data();
        let wt = self.value(weight).data();
        let b = self.value(bias).data();
        let mut out = vec![0.0; n * o];
        for s in 0..n {
            let xr = &x[s * d..(s + 1) * d];
            for j in 0..o {
                out[s * o + j] = b[j] + dot(&wt[j * d..(j + 1) * d], xr);
            }
        }
        let rg = self.rg(&[input, weight, bias]);
        let value = Tensor::new(vec![n, o], out)?;
        Ok(self.push(value, Op::Linear { input, weight, bias }, rg))
    }

    /// Mean softmax cross-entropy of `logits` (n, c) against integer labels.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let ls = self.value(logits).shape().to_vec();
        if ls.len() != 2 || ls[0] != labels.len() {
            return Err(Error::ShapeMismatch { expected: vec![labels.len(), 0], got: ls });
        }
        let (n, c) = (ls[0], ls[1]);
        if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
            return Err(Error::invalid(format!("label {bad} out of range for {c} classes")));
        }
        let z = self.value(logits).data();
        let mut probs = vec![0.0; n * c];
        let mut total = 0.0;
        for s in 0..n {
            let row = &z[s * c..(s + 1) * c];
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = row.iter().map(|&v| (v - m).exp()).sum();
            let lse = m + denom.ln();
            total += lse - row[labels[s]];
            for j in 0..c {
                probs[s * c + j] = (row[j] - m).exp() / denom;
            }
        }
        let rg = self.rg(&[logits]);
        let value = Tensor::scalar(total / n as f64);
        Ok(self.push(value, Op::CrossEntropy { logits, probs, labels: labels.to_vec() }, rg))
    }

    /// Σ_i input[i, index[i]] for a 2-D input.
    pub fn pick(&mut self, input: Var, index: &[usize]) -> Result<Var> {
        let xs = self.value(input).shape().to_vec();
        if xs.len() != 2 || xs[0] != index.len() {
            return Err(Error::ShapeMismatch { expected: vec![index.len(), 0], got: xs });
        }
        if let Some(&bad) = index.iter().find(|&&y| y >= xs[1]) {
            return Err(Error::invalid(format!("class index {bad} out of range for {} classes", xs[1])));
        }
        let x = self.value(input).data();
        let total: f64 = index.iter().enumerate().map(|(s, &y)| x[s * xs[1] + y]).sum();
        let rg = self.rg(&[input]);
        Ok(self.push(Tensor::scalar(total), Op::Pick { input, index: index.to_vec() }, rg))
    }

    pub fn sum(&mut self, input: Var) -> Var {
        let total = self.value(input).data().iter().sum();
        let rg = self.rg(&[input]);
        self.push(Tensor::scalar(total), Op::Sum { input }, rg)
    }

    /// Populates gradients of every grad-requiring node reachable from `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(Error::ContractViolation(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(upstream) = self.nodes[i].grad.take() else { continue };
            self.propagate(i, &upstream);
            self.nodes[i].grad = Some(upstream);
        }
        Ok(())
    }

    fn accumulate(&mut self, v: Var, delta: &[f64]) {
        let node = &mut self.nodes[v.0];
        if !node.requires_grad {
            return;
        }
        match &mut node.grad {
            Some(g) => g.iter_mut().zip(delta).for_each(|(a, &b)| *a += b),
            None => node.grad = Some(delta.to_vec()),
        }
    }

    fn propagate(&mut self, i: usize, up: &[f64]) {
        // Ops hold only Copy handles plus cached buffers; temporarily move the op out.
        let op = std::mem::replace(&mut self.nodes[i].op, Op::Leaf);
        match &op {
            Op::Leaf => {}
            Op::Relu { input } => {
                if self.requires_grad(*input) {
                    let x = self.value(*input).data();
                    let d: Vec<f64> = x.iter().zip(up).map(|(&x, &g)| if x > 0.0 { g } else { 0.0 }).collect();
                    self.accumulate(*input, &d);
                }
            }
            Op::MaxPool2 { input, argmax } => {
                if self.requires_grad(*input) {
                    let mut d = vec![0.0; self.value(*input).len()];
                    for (&src, &g) in argmax.iter().zip(up) {
                        d[src] += g;
                    }
                    self.accumulate(*input, &d);
                }
            }
            Op::GlobalAvgPool { input } => {
                if self.requires_grad(*input) {
                    let xs = self.value(*input).shape();
                    let hw = xs[2] * xs[3];
                    let scale = 1.0 / hw as f64;
                    let d: Vec<f64> = up.iter().flat_map(|&g| std::iter::repeat_n(g * scale, hw)).collect();
                    self.accumulate(*input, &d);
                }
            }
            Op::Flatten { input } => self.accumulate(*input, up),
            Op::Sum { input } => {
                let d = vec![up[0]; self.value(*input).len()];
                self.accumulate(*input, &d);
            }
            Op::Pick { input, index } => {
                let c = self.value(*input).shape()[1];
                let mut d = vec![0.0; self.value(*input).len()];
                for (s, &y) in index.iter().enumerate() {
                    d[s * c + y] = up[0];
                }
                self.accumulate(*input, &d);
            }
            Op::CrossEntropy { logits, probs, labels } => {
                let n = labels.len();
                let c = probs.len() / n;
                let scale = up[0] / n as f64;
                let mut d: Vec<f64> = probs.iter().map(|&p| p * scale).collect();
                for (s, &y) in labels.iter().enumerate() {
                    d[s * c + y] -= scale;
                }
                self.accumulate(*logits, &d);
            }
            Op::Linear { input, weight, bias } => self.linear_backward(*input, *weight, *bias, up),
            Op::Conv2d { input, weight, bias, kernel, cols } => {
                self.conv_backward(*input, *weight, *bias, *kernel, cols, up)
            }
        }
        self.nodes[i].op = op;
    }

    fn linear_backward(&mut self, input: Var, weight: Var, bias: Var, up: &[f64]) {
        let xs = self.value(input).shape();
        let (n, d) = (xs[0], xs[1]);
        let o = self.value(weight).shape()[0];
        if self.requires_grad(bias) {
            let mut db = vec![0.0; o];
            for row in up.chunks_exact(o) {
                db.iter_mut().zip(row).for_each(|(a, &b)| *a += b);
            }
            self.accumulate(bias, &db);
        }
        if self.requires_grad(weight) {
            let x = self.value(input).data();
            let mut dw = vec![0.0; o * d];
            for s in 0..n {
                for j in 0..o {
                    axpy(up[s * o + j], &x[s * d..(s + 1) * d], &mut dw[j * d..(j + 1) * d]);
                }
            }
            self.accumulate(weight, &dw);
        }
        if self.requires_grad(input) {
            let wt = self.value(weight).data();
            let mut dx = vec![0.0; n * d];
            for s in 0..n {
                for j in 0..o {
                    axpy(up[s * o + j], &wt[j * d..(j + 1) * d], &mut dx[s * d..(s + 1) * d]);
                }
            }
            self.accumulate(input, &dx);
        }
    }

    fn conv_backward(&mut self, input: Var, weight: Var, bias: Var, k: usize, cols: &[f64], up: &[f64]) {
        let xs = self.value(input).shape().to_vec();
        let (n, cin, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let cout = self.value(weight).shape()[0];
        let hw = h * w;
        let rows = cin * k * k;
        if self.requires_grad(bias) {
            let mut db = vec![0.0; cout];
            for s in 0..n {
                for (oc, g) in db.iter_mut().enumerate() {
                    *g += up[(s * cout + oc) * hw..(s * cout + oc + 1) * hw].iter().sum::<f64>();
                }
            }
            self.accumulate(bias, &db);
        }
        if self.requires_grad(weight) {
            let mut dw = vec![0.0; cout * rows];
            for s in 0..n {
                let col = &cols[s * rows * hw..(s + 1) * rows * hw];
                for oc in 0..cout {
                    let g = &up[(s * cout + oc) * hw..(s * cout + oc + 1) * hw];
                    let dwr = &mut dw[oc * rows..(oc + 1) * rows];
                    for (j, acc) in dwr.iter_mut().enumerate() {
                        *acc += dot(g, &col[j * hw..(j + 1) * hw]);
                    }
                }
            }
            self.accumulate(weight, &dw);
        }
        if self.requires_grad(input) {
            let wt = self.value(weight).data();
            let mut dx = vec![0.0; n * cin * hw];
            let mut dcol = vec![0.0; rows * hw];
            for s in 0..n {
                dcol.fill(0.0);
                for oc in 0..cout {
                    let g = &up[(s * cout + oc) * hw..(s * cout + oc + 1) * hw];
                    for j in 0..rows {
                        axpy(wt[oc * rows + j], g, &mut dcol[j * hw..(j + 1) * hw]);
                    }
                }
                col2im(&dcol, cin, h, w, k, &mut dx[s * cin * hw..(s + 1) * cin * hw]);
            }
            self.accumulate(input, &dx);
        }
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Output columns `[lo, hi)` whose source column `ox + kx - pad` is in range.
#[inline]
fn valid_cols(w: usize, kx: usize, pad: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(kx);
    let hi = (w + pad).saturating_sub(kx).min(w);
    (lo, hi.max(lo))
}

fn im2col(x: &[f64], cin: usize, h: usize, w: usize, k: usize, col: &mut [f64]) {
    let pad = k / 2;
    let hw = h * w;
    for ic in 0..cin {
        let plane = &x[ic * hw..(ic + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ic * k + ky) * k + kx;
                let dst = &mut col[row * hw..(row + 1) * hw];
                let (lo, hi) = valid_cols(w, kx, pad);
                for oy in 0..h {
                    let drow = &mut dst[oy * w..(oy + 1) * w];
                    let iy = (oy + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        drow.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    drow[..lo].fill(0.0);
                    drow[hi..].fill(0.0);
                    drow[lo..hi].copy_from_slice(&src[lo + kx - pad..hi + kx - pad]);
                }
            }
        }
    }
}

fn col2im(col: &[f64], cin: usize, h: usize, w: usize, k: usize, x: &mut [f64]) {
    let pad = k / 2;
    let hw = h * w;
    for ic in 0..cin {
        let plane = &mut x[ic * hw..(ic + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ic * k + ky) * k + kx;
                let src = &col[row * hw..(row + 1) * hw];
                let (lo, hi) = valid_cols(w, kx, pad);
                for oy in 0..h {
                    let iy = (oy + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    let srow = &src[oy * w..(oy + 1) * w];
                    for ox in lo..hi {
                        dst[ox + kx - pad] += srow[ox];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gradient_is_all_ones() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![2, 3], vec![0.5, -1.0, 2.0, 3.0, 0.0, -7.0]).unwrap(), true);
        let loss = tape.sum(x);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[1.0; 6]);
    }

    #[test]
    fn relu_gradient_masks_negative_inputs() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![2], vec![-1.0, 2.0]).unwrap(), true);
        let r = tape.relu(x);
        let loss = tape.sum(r);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[0.0, 1.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(vec![3]), true);
        let r = tape.relu(x);
        assert!(matches!(tape.backward(r), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn uniform_logits_cross_entropy_is_ln_c() {
        for c in [2usize, 3, 4, 10] {
            let mut tape = Tape::new();
            let z = tape.leaf(Tensor::full(vec![5, c], 0.37), false);
            let loss = tape.cross_entropy(z, &[0, 1, 0, 1, 1]).unwrap();
            assert!((tape.value(loss).data()[0] - (c as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_identity_1x1_then_gap_recovers_constant() {
        let v = 0.625;
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::full(vec![1, 1, 4, 4], v), false);
        let w = tape.leaf(Tensor::full(vec![1, 1, 1, 1], 1.0), false);
        let b = tape.leaf(Tensor::zeros(vec![1]), false);
        let y = tape.conv2d(x, w, b).unwrap();
        let g = tape.global_avg_pool(y).unwrap();
        assert_eq!(tape.value(g).data(), &[v]);
    }

    #[test]
    fn conv_matches_direct_loops() {
        // 2 samples, 2 in-channels, 5x4 spatial, 3 out-channels, k=3.
        let (n, cin, h, w, cout, k) = (2, 2, 5, 4, 3, 3);
        let xv: Vec<f64> = (0..n * cin * h * w).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let wv: Vec<f64> = (0..cout * cin * k * k).map(|i| ((i * 13 % 7) as f64 - 3.0) / 5.0).collect();
        let bv = vec![0.1, -0.2, 0.3];
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![n, cin, h, w], xv.clone()).unwrap(), false);
        let wt = tape.leaf(Tensor::new(vec![cout, cin, k, k], wv.clone()).unwrap(), false);
        let b = tape.leaf(Tensor::new(vec![cout], bv.clone()).unwrap(), false);
        let y = tape.conv2d(x, wt, b).unwrap();
        let got = tape.value(y).data();
        for s in 0..n {
            for oc in 0..cout {
                for oy in 0..h {
                    for ox in 0..w {
                        let mut acc = bv[oc];
                        for ic in 0..cin {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let iy = oy as isize + ky as isize - 1;
                                    let ix = ox as isize + kx as isize - 1;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                        continue;
                                    }
                                    acc += wv[((oc * cin + ic) * k + ky) * k + kx]
                                        * xv[((s * cin + ic) * h + iy as usize) * w + ix as usize];
                                }
                            }
                        }
                        let idx = ((s * cout + oc) * h + oy) * w + ox;
                        assert!((got[idx] - acc).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn max_pool_tie_takes_first_element() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::full(vec![1, 1, 2, 2], 3.0), true);
        let p = tape.max_pool2(x).unwrap();
        let loss = tape.sum(p);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[1.0, 0.0, 0.0, 0.0]);
    }
}
