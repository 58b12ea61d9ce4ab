//! Forward builders and backward rules for every graph operation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Graph, NodeId, Op, grad_buf};
use crate::error::{Error, Result};

impl Graph {
    fn binary_elementwise(&mut self, a: NodeId, b: NodeId, kind: &str) -> Result<(Vec<usize>, bool)> {
        let (na, nb) = (self.node(a), self.node(b));
        if na.shape != nb.shape {
            return Err(Error::Shape(format!(
                "{kind}: shapes {:?} and {:?} differ",
                na.shape, nb.shape
            )));
        }
        Ok((na.shape.clone(), na.requires_grad || nb.requires_grad))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (shape, rg) = self.binary_elementwise(a, b, "add")?;
        let values = self
            .node(a)
            .values
            .iter()
            .zip(&self.node(b).values)
            .map(|(x, y)| x + y)
            .collect();
        Ok(self.push(Op::Add { a, b }, shape, values, rg))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (shape, rg) = self.binary_elementwise(a, b, "sub")?;
        let values = self
            .node(a)
            .values
            .iter()
            .zip(&self.node(b).values)
            .map(|(x, y)| x - y)
            .collect();
        Ok(self.push(Op::Sub { a, b }, shape, values, rg))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (shape, rg) = self.binary_elementwise(a, b, "mul")?;
        let values = self
            .node(a)
            .values
            .iter()
            .zip(&self.node(b).values)
            .map(|(x, y)| x * y)
            .collect();
        Ok(self.push(Op::Mul { a, b }, shape, values, rg))
    }

    /// Multiplication by a scalar constant (the only broadcasting we allow).
    pub fn scale(&mut self, a: NodeId, factor: f32) -> Result<NodeId> {
        let node = self.node(a);
        let shape = node.shape.clone();
        let rg = node.requires_grad;
        let values = node.values.iter().map(|x| x * factor).collect();
        Ok(self.push(Op::Scale { a, factor }, shape, values, rg))
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        let node = self.node(a);
        let shape = node.shape.clone();
        let rg = node.requires_grad;
        let values = node.values.iter().map(|x| x.max(0.0)).collect();
        Ok(self.push(Op::Relu { a }, shape, values, rg))
    }

    /// `[M, K] x [K, N] -> [M, N]` matrix product.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (na, nb) = (self.node(a), self.node(b));
        if na.shape.len() != 2 || nb.shape.len() != 2 {
            return Err(Error::Shape(format!(
                "matmul: expected rank-2 operands, got {:?} and {:?}",
                na.shape, nb.shape
            )));
        }
        let (m, k) = (na.shape[0], na.shape[1]);
        let (k2, n) = (nb.shape[0], nb.shape[1]);
        if k != k2 {
            return Err(Error::Shape(format!(
                "matmul: inner dimensions disagree ({k} vs {k2})"
            )));
        }
        let rg = na.requires_grad || nb.requires_grad;
        let values = matmul_raw(&na.values, &nb.values, m, k, n);
        Ok(self.push(Op::MatMul { a, b }, vec![m, n], values, rg))
    }

    /// Valid (no padding) 3-d cross-correlation.
    ///
    /// `input` is `[N, C, T, H, W]`, `kernel` is `[K, C, t, h, w]`, `bias` is
    /// `[K]`, and `stride` is `(sT, sH, sW)`. Output is `[N, K, T', H', W']`
    /// with `T' = (T - t)/sT + 1` and likewise for H and W.
    pub fn conv3d(
        &mut self,
        input: NodeId,
        kernel: NodeId,
        bias: NodeId,
        stride: [usize; 3],
    ) -> Result<NodeId> {
        let (ni, nk, nb) = (self.node(input), self.node(kernel), self.node(bias));
        if ni.shape.len() != 5 || nk.shape.len() != 5 {
            return Err(Error::Shape(format!(
                "conv3d: expected rank-5 input and kernel, got {:?} and {:?}",
                ni.shape, nk.shape
            )));
        }
        let [n, c, t, h, w] = [ni.shape[0], ni.shape[1], ni.shape[2], ni.shape[3], ni.shape[4]];
        let [k, ck, kt, kh, kw] = [nk.shape[0], nk.shape[1], nk.shape[2], nk.shape[3], nk.shape[4]];
        if c != ck {
            return Err(Error::Shape(format!(
                "conv3d: input has {c} channels, kernel expects {ck}"
            )));
        }
        if nb.shape != [k] {
            return Err(Error::Shape(format!(
                "conv3d: bias shape {:?} does not match {k} output channels",
                nb.shape
            )));
        }
        if kt > t || kh > h || kw > w {
            return Err(Error::Shape(format!(
                "conv3d: kernel {:?} larger than input {:?}",
                &nk.shape[2..],
                &ni.shape[2..]
            )));
        }
        if stride.contains(&0) {
            return Err(Error::Config("conv3d: strides must be >= 1".into()));
        }
        let [st, sh, sw] = stride;
        let (to, ho, wo) = ((t - kt) / st + 1, (h - kh) / sh + 1, (w - kw) / sw + 1);
        let rg = ni.requires_grad || nk.requires_grad || nb.requires_grad;

        let mut out = vec![0.0f32; n * k * to * ho * wo];
        // Pre-fill with bias, then accumulate one kernel tap at a time so the
        // innermost loop streams along contiguous rows.
        for ni_ in 0..n {
            for ki in 0..k {
                let ob = (ni_ * k + ki) * to * ho * wo;
                out[ob..ob + to * ho * wo].fill(nb.values[ki]);
            }
        }
        for nn in 0..n {
            for ki in 0..k {
                for ci in 0..c {
                    for dt in 0..kt {
                        for dh in 0..kh {
                            for dw in 0..kw {
                                let wgt =
                                    nk.values[(((ki * c + ci) * kt + dt) * kh + dh) * kw + dw];
                                for ot in 0..to {
                                    let it = ot * st + dt;
                                    for oh in 0..ho {
                                        let ih = oh * sh + dh;
                                        let ib = (((nn * c + ci) * t + it) * h + ih) * w + dw;
                                        let ob = (((nn * k + ki) * to + ot) * ho + oh) * wo;
                                        let in_row = &ni.values[ib..ib + (wo - 1) * sw + 1];
                                        let out_row = &mut out[ob..ob + wo];
                                        for (ow, o) in out_row.iter_mut().enumerate() {
                                            *o += wgt * in_row[ow * sw];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(self.push(
            Op::Conv3d { input, kernel, bias, stride },
            vec![n, k, to, ho, wo],
            out,
            rg,
        ))
    }

    /// Mean over the T, H, W axes: `[N, K, T, H, W] -> [N, K]`.
    pub fn global_avg_pool(&mut self, input: NodeId) -> Result<NodeId> {
        let node = self.node(input);
        if node.shape.len() != 5 {
            return Err(Error::Shape(format!(
                "global_avg_pool: expected rank-5 input, got {:?}",
                node.shape
            )));
        }
        let (n, k) = (node.shape[0], node.shape[1]);
        let spatial: usize = node.shape[2..].iter().product();
        let rg = node.requires_grad;
        let mut out = Vec::with_capacity(n * k);
        for block in node.values.chunks_exact(spatial) {
            let sum: f64 = block.iter().map(|&v| v as f64).sum();
            out.push((sum / spatial as f64) as f32);
        }
        Ok(self.push(Op::GlobalAvgPool { input }, vec![n, k], out, rg))
    }

    /// Scales each row of `[N, D]` to unit Euclidean norm.
    ///
    /// Rows with norm below `1e-8` cannot be normalized and raise a
    /// degenerate-feature error.
    pub fn l2_normalize(&mut self, input: NodeId) -> Result<NodeId> {
        let node = self.node(input);
        if node.shape.len() != 2 {
            return Err(Error::Shape(format!(
                "l2_normalize: expected rank-2 input, got {:?}",
                node.shape
            )));
        }
        let d = node.shape[1];
        let rg = node.requires_grad;
        let shape = node.shape.clone();
        let mut norms = Vec::with_capacity(node.shape[0]);
        let mut out = Vec::with_capacity(node.values.len());
        for row in node.values.chunks_exact(d) {
            let sq: f64 = row.iter().map(|&v| (v as f64) * (v as f64)).sum();
            let norm = libm::sqrt(sq);
            if norm < 1e-8 {
                return Err(Error::DegenerateFeature(format!(
                    "row norm {norm:.3e} below 1e-8"
                )));
            }
            let inv = (1.0 / norm) as f32;
            out.extend(row.iter().map(|&v| v * inv));
            norms.push(norm as f32);
        }
        Ok(self.push(Op::L2Normalize { input, norms }, shape, out, rg))
    }

    /// Adds a `[D]` bias to every row of `[N, D]`.
    pub fn bias_add(&mut self, input: NodeId, bias: NodeId) -> Result<NodeId> {
        let (ni, nb) = (self.node(input), self.node(bias));
        if ni.shape.len() != 2 || nb.shape.len() != 1 || nb.shape[0] != ni.shape[1] {
            return Err(Error::Shape(format!(
                "bias_add: input {:?} is incompatible with bias {:?}",
                ni.shape, nb.shape
            )));
        }
        let d = ni.shape[1];
        let shape = ni.shape.clone();
        let rg = ni.requires_grad || nb.requires_grad;
        let mut out = Vec::with_capacity(ni.values.len());
        for row in ni.values.chunks_exact(d) {
            out.extend(row.iter().zip(&nb.values).map(|(x, b)| x + b));
        }
        Ok(self.push(Op::BiasAdd { input, bias }, shape, out, rg))
    }

    /// Sum of all elements, as a scalar node.
    pub fn sum_all(&mut self, input: NodeId) -> Result<NodeId> {
        let node = self.node(input);
        let rg = node.requires_grad;
        let sum: f64 = node.values.iter().map(|&v| v as f64).sum();
        Ok(self.push(Op::SumAll { input }, vec![1], vec![sum as f32], rg))
    }

    /// Mean of all elements, as a scalar node.
    pub fn mean_all(&mut self, input: NodeId) -> Result<NodeId> {
        let node = self.node(input);
        let rg = node.requires_grad;
        let n = node.values.len();
        let sum: f64 = node.values.iter().map(|&v| v as f64).sum();
        Ok(self.push(Op::MeanAll { input }, vec![1], vec![(sum / n as f64) as f32], rg))
    }

    /// Mean softmax cross-entropy over rows of `[N, M]` logits.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let node = self.node(logits);
        if node.shape.len() != 2 {
            return Err(Error::Shape(format!(
                "softmax_cross_entropy: expected rank-2 logits, got {:?}",
                node.shape
            )));
        }
        let (n, m) = (node.shape[0], node.shape[1]);
        if labels.len() != n {
            return Err(Error::Shape(format!(
                "softmax_cross_entropy: {n} rows but {} labels",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= m) {
            return Err(Error::Label(format!("label {bad} out of range for {m} classes")));
        }
        let rg = node.requires_grad;
        let mut probs = Vec::with_capacity(n * m);
        let mut loss = 0.0f64;
        for (row, &label) in node.values.chunks_exact(m).zip(labels) {
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
            let exps: Vec<f64> = row.iter().map(|&v| libm::exp(v as f64 - max)).collect();
            let denom: f64 = exps.iter().sum();
            loss -= libm::log(exps[label] / denom);
            probs.extend(exps.iter().map(|&e| (e / denom) as f32));
        }
        let value = (loss / n as f64) as f32;
        Ok(self.push(
            Op::SoftmaxCrossEntropy { logits, labels: labels.to_vec(), probs },
            vec![1],
            vec![value],
            rg,
        ))
    }

    /// Copies values while cutting the tape: no gradient flows upstream.
    pub fn detach(&mut self, input: NodeId) -> Result<NodeId> {
        let node = self.node(input);
        let shape = node.shape.clone();
        let values = node.values.clone();
        Ok(self.push(Op::Detach { input }, shape, values, false))
    }

    /// Routes `gout` (the gradient at node `id`) into the node's inputs.
    pub(crate) fn propagate(
        &self,
        id: usize,
        gout: &[f32],
        grads: &mut [Option<Vec<f32>>],
    ) -> Result<()> {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf | Op::Detach { .. } => {}
            Op::Add { a, b } => {
                for (target, sign) in [(*a, 1.0f32), (*b, 1.0)] {
                    if self.node(target).requires_grad {
                        let buf = grad_buf(grads, target, gout.len());
                        for (g, &go) in buf.iter_mut().zip(gout) {
                            *g += sign * go;
                        }
                    }
                }
            }
            Op::Sub { a, b } => {
                for (target, sign) in [(*a, 1.0f32), (*b, -1.0)] {
                    if self.node(target).requires_grad {
                        let buf = grad_buf(grads, target, gout.len());
                        for (g, &go) in buf.iter_mut().zip(gout) {
                            *g += sign * go;
                        }
                    }
                }
            }
            Op::Mul { a, b } => {
                if self.node(*a).requires_grad {
                    let bv = &self.node(*b).values;
                    let buf = grad_buf(grads, *a, gout.len());
                    for ((g, &go), &y) in buf.iter_mut().zip(gout).zip(bv) {
                        *g += go * y;
                    }
                }
                if self.node(*b).requires_grad {
                    let av = &self.node(*a).values;
                    let buf = grad_buf(grads, *b, gout.len());
                    for ((g, &go), &x) in buf.iter_mut().zip(gout).zip(av) {
                        *g += go * x;
                    }
                }
            }
            Op::Scale { a, factor } => {
                if self.node(*a).requires_grad {
                    let buf = grad_buf(grads, *a, gout.len());
                    for (g, &go) in buf.iter_mut().zip(gout) {
                        *g += factor * go;
                    }
                }
            }
            Op::Relu { a } => {
                if self.node(*a).requires_grad {
                    let av = &self.node(*a).values;
                    let buf = grad_buf(grads, *a, gout.len());
                    for ((g, &go), &x) in buf.iter_mut().zip(gout).zip(av) {
                        if x > 0.0 {
                            *g += go;
                        }
                    }
                }
            }
            Op::MatMul { a, b } => self.backward_matmul(*a, *b, gout, grads),
            Op::Conv3d { input, kernel, bias, stride } => {
                self.backward_conv3d(*input, *kernel, *bias, *stride, id, gout, grads)
            }
            Op::GlobalAvgPool { input } => {
                if self.node(*input).requires_grad {
                    let spatial: usize = self.node(*input).shape[2..].iter().product();
                    let len = self.node(*input).values.len();
                    let scale = 1.0 / spatial as f32;
                    let buf = grad_buf(grads, *input, len);
                    for (block, &go) in buf.chunks_exact_mut(spatial).zip(gout) {
                        let g = go * scale;
                        for slot in block {
                            *slot += g;
                        }
                    }
                }
            }
            Op::L2Normalize { input, norms } => {
                if self.node(*input).requires_grad {
                    let d = node.shape[1];
                    let y = &node.values;
                    let len = y.len();
                    let buf = grad_buf(grads, *input, len);
                    for (r, norm) in norms.iter().enumerate() {
                        let row = &y[r * d..(r + 1) * d];
                        let grow = &gout[r * d..(r + 1) * d];
                        let dot: f64 = grow
                            .iter()
                            .zip(row)
                            .map(|(&g, &v)| g as f64 * v as f64)
                            .sum();
                        let dot = dot as f32;
                        let inv = 1.0 / norm;
                        let out_row = &mut buf[r * d..(r + 1) * d];
                        for ((slot, &g), &v) in out_row.iter_mut().zip(grow).zip(row) {
                            *slot += (g - v * dot) * inv;
                        }
                    }
                }
            }
            Op::BiasAdd { input, bias } => {
                let d = node.shape[1];
                if self.node(*input).requires_grad {
                    let buf = grad_buf(grads, *input, gout.len());
                    for (g, &go) in buf.iter_mut().zip(gout) {
                        *g += go;
                    }
                }
                if self.node(*bias).requires_grad {
                    let buf = grad_buf(grads, *bias, d);
                    for row in gout.chunks_exact(d) {
                        for (g, &go) in buf.iter_mut().zip(row) {
                            *g += go;
                        }
                    }
                }
            }
            Op::SumAll { input } => {
                if self.node(*input).requires_grad {
                    let len = self.node(*input).values.len();
                    let buf = grad_buf(grads, *input, len);
                    for g in buf.iter_mut() {
                        *g += gout[0];
                    }
                }
            }
            Op::MeanAll { input } => {
                if self.node(*input).requires_grad {
                    let len = self.node(*input).values.len();
                    let g = gout[0] / len as f32;
                    let buf = grad_buf(grads, *input, len);
                    for slot in buf.iter_mut() {
                        *slot += g;
                    }
                }
            }
            Op::SoftmaxCrossEntropy { logits, labels, probs } => {
                if self.node(*logits).requires_grad {
                    let m = self.node(*logits).shape[1];
                    let n = labels.len();
                    let scale = gout[0] / n as f32;
                    let buf = grad_buf(grads, *logits, n * m);
                    for (r, &label) in labels.iter().enumerate() {
                        let prow = &probs[r * m..(r + 1) * m];
                        let out_row = &mut buf[r * m..(r + 1) * m];
                        for (j, (slot, &p)) in out_row.iter_mut().zip(prow).enumerate() {
                            let indicator = if j == label { 1.0 } else { 0.0 };
                            *slot += scale * (p - indicator);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn backward_matmul(
        &self,
        a: NodeId,
        b: NodeId,
        gout: &[f32],
        grads: &mut [Option<Vec<f32>>],
    ) {
        let (m, k) = (self.node(a).shape[0], self.node(a).shape[1]);
        let n = self.node(b).shape[1];
        if self.node(a).requires_grad {
            let bv = &self.node(b).values;
            let buf = grad_buf(grads, a, m * k);
            // dA[i, p] = sum_j g[i, j] * B[p, j]
            for i in 0..m {
                let grow = &gout[i * n..(i + 1) * n];
                let arow = &mut buf[i * k..(i + 1) * k];
                for (p, slot) in arow.iter_mut().enumerate() {
                    let brow = &bv[p * n..(p + 1) * n];
                    let mut acc = 0.0f32;
                    for (g, bb) in grow.iter().zip(brow) {
                        acc += g * bb;
                    }
                    *slot += acc;
                }
            }
        }
        if self.node(b).requires_grad {
            let av = &self.node(a).values;
            let buf = grad_buf(grads, b, k * n);
            // dB[p, j] = sum_i A[i, p] * g[i, j]
            for i in 0..m {
                let grow = &gout[i * n..(i + 1) * n];
                for p in 0..k {
                    let aip = av[i * k + p];
                    if aip == 0.0 {
                        continue;
                    }
                    let brow = &mut buf[p * n..(p + 1) * n];
                    for (slot, &g) in brow.iter_mut().zip(grow) {
                        *slot += aip * g;
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn backward_conv3d(
        &self,
        input: NodeId,
        kernel: NodeId,
        bias: NodeId,
        stride: [usize; 3],
        out_id: usize,
        gout: &[f32],
        grads: &mut [Option<Vec<f32>>],
    ) {
        let in_shape = &self.node(input).shape;
        let k_shape = &self.node(kernel).shape;
        let out_shape = &self.nodes[out_id].shape;
        let [n, c, t, h, w] = [in_shape[0], in_shape[1], in_shape[2], in_shape[3], in_shape[4]];
        let [k, _, kt, kh, kw] = [k_shape[0], k_shape[1], k_shape[2], k_shape[3], k_shape[4]];
        let [to, ho, wo] = [out_shape[2], out_shape[3], out_shape[4]];
        let [st, sh, sw] = stride;

        if self.node(bias).requires_grad {
            let buf = grad_buf(grads, bias, k);
            for nn in 0..n {
                for (ki, slot) in buf.iter_mut().enumerate() {
                    let ob = (nn * k + ki) * to * ho * wo;
                    let mut acc = 0.0f64;
                    for &g in &gout[ob..ob + to * ho * wo] {
                        acc += g as f64;
                    }
                    *slot += acc as f32;
                }
            }
        }

        if self.node(kernel).requires_grad {
            let iv = &self.node(input).values;
            let buf = grad_buf(grads, kernel, k * c * kt * kh * kw);
            for nn in 0..n {
                for ki in 0..k {
                    for ci in 0..c {
                        for dt in 0..kt {
                            for dh in 0..kh {
                                for dw in 0..kw {
                                    let mut acc = 0.0f64;
                                    for ot in 0..to {
                                        let it = ot * st + dt;
                                        for oh in 0..ho {
                                            let ih = oh * sh + dh;
                                            let ib = (((nn * c + ci) * t + it) * h + ih) * w + dw;
                                            let ob = (((nn * k + ki) * to + ot) * ho + oh) * wo;
                                            let in_row = &iv[ib..ib + (wo - 1) * sw + 1];
                                            let g_row = &gout[ob..ob + wo];
                                            for (ow, &g) in g_row.iter().enumerate() {
                                                acc += (g * in_row[ow * sw]) as f64;
                                            }
                                        }
                                    }
                                    buf[(((ki * c + ci) * kt + dt) * kh + dh) * kw + dw] +=
                                        acc as f32;
                                }
                            }
                        }
                    }
                }
            }
        }

        if self.node(input).requires_grad {
            let kv = &self.node(kernel).values;
            let buf = grad_buf(grads, input, n * c * t * h * w);
            for nn in 0..n {
                for ki in 0..k {
                    for ci in 0..c {
                        for dt in 0..kt {
                            for dh in 0..kh {
                                for dw in 0..kw {
                                    let wgt = kv[(((ki * c + ci) * kt + dt) * kh + dh) * kw + dw];
                                    for ot in 0..to {
                                        let it = ot * st + dt;
                                        for oh in 0..ho {
                                            let ih = oh * sh + dh;
                                            let ib = (((nn * c + ci) * t + it) * h + ih) * w + dw;
                                            let ob = (((nn * k + ki) * to + ot) * ho + oh) * wo;
                                            let g_row = &gout[ob..ob + wo];
                                            let in_row = &mut buf[ib..ib + (wo - 1) * sw + 1];
                                            for (ow, &g) in g_row.iter().enumerate() {
                                                in_row[ow * sw] += wgt * g;
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Plain `[M, K] x [K, N]` product used by the forward pass.
pub(crate) fn matmul_raw(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &aip) in arow.iter().enumerate() {
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (slot, &bv) in orow.iter_mut().zip(brow) {
                *slot += aip * bv;
            }
        }
    }
    out
}
