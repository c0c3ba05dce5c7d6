//! Forward kernels and their vector-Jacobian products.

use super::{Op, Tape, TensorId};
use crate::error::{Error, Result};

const GELU_SCALE: f32 = 0.797_884_56; // sqrt(2/pi)
const GELU_CUBIC: f32 = 0.044_715;

// ── raw matrix kernels ───────────────────────────────────────────────

/// C[m,n] = A[m,k] · B[k,n]
pub(crate) fn matmul_nn(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            if av != 0.0 {
                let brow = &b[p * n..(p + 1) * n];
                for j in 0..n {
                    orow[j] += av * brow[j];
                }
            }
        }
    }
    out
}

/// C[m,n] = A[m,k] · B[n,k]ᵀ
pub(crate) fn matmul_nt(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for p in 0..k {
                acc += arow[p] * brow[p];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

/// C[k,n] = A[m,k]ᵀ · B[m,n]
pub(crate) fn matmul_tn(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut out = vec![0.0; k * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let brow = &b[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            if av != 0.0 {
                let orow = &mut out[p * n..(p + 1) * n];
                for j in 0..n {
                    orow[j] += av * brow[j];
                }
            }
        }
    }
    out
}

fn gelu_scalar(x: f32) -> f32 {
    let u = GELU_SCALE * (x + GELU_CUBIC * x * x * x);
    0.5 * x * (1.0 + u.tanh())
}

fn gelu_grad_scalar(x: f32) -> f32 {
    let u = GELU_SCALE * (x + GELU_CUBIC * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_SCALE * (1.0 + 3.0 * GELU_CUBIC * x * x)
}

// ── forward ops ──────────────────────────────────────────────────────

impl Tape {
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (m, ka) = self.dims(a);
        let (kb, n) = self.dims(b);
        if ka != kb {
            return Err(Error::Shape(format!(
                "matmul: inner dimensions differ ({m}x{ka} · {kb}x{n})"
            )));
        }
        let data = matmul_nn(self.value(a), self.value(b), m, ka, n);
        let rg = self.node(a).requires_grad || self.node(b).requires_grad;
        self.push_checked("matmul", data, m, n, rg, Op::Matmul { a, b })
    }

    /// a · bᵀ, with `b` stored row-major as n×k.
    pub fn matmul_nt(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (m, ka) = self.dims(a);
        let (n, kb) = self.dims(b);
        if ka != kb {
            return Err(Error::Shape(format!(
                "matmul_nt: inner dimensions differ ({m}x{ka} · ({n}x{kb})ᵀ)"
            )));
        }
        let data = matmul_nt(self.value(a), self.value(b), m, ka, n);
        let rg = self.node(a).requires_grad || self.node(b).requires_grad;
        self.push_checked("matmul_nt", data, m, n, rg, Op::MatmulNt { a, b })
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let da = self.dims(a);
        let db = self.dims(b);
        if da != db {
            return Err(Error::Shape(format!("add: {da:?} vs {db:?}")));
        }
        let data: Vec<f32> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        let rg = self.node(a).requires_grad || self.node(b).requires_grad;
        self.push_checked("add", data, da.0, da.1, rg, Op::Add { a, b })
    }

    pub fn mul_elem(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let da = self.dims(a);
        let db = self.dims(b);
        if da != db {
            return Err(Error::Shape(format!("mul_elem: {da:?} vs {db:?}")));
        }
        let data: Vec<f32> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .collect();
        let rg = self.node(a).requires_grad || self.node(b).requires_grad;
        self.push_checked("mul_elem", data, da.0, da.1, rg, Op::MulElem { a, b })
    }

    /// Add a length-`cols` bias row to every row of `x`. The only
    /// broadcast this library permits.
    pub fn add_bias(&mut self, x: TensorId, bias: TensorId) -> Result<TensorId> {
        let (rows, cols) = self.dims(x);
        let (brows, bcols) = self.dims(bias);
        if brows != 1 || bcols != cols {
            return Err(Error::Shape(format!(
                "add_bias: bias must be 1x{cols}, got {brows}x{bcols}"
            )));
        }
        let mut data = self.value(x).to_vec();
        let b = self.value(bias);
        for r in 0..rows {
            for c in 0..cols {
                data[r * cols + c] += b[c];
            }
        }
        let rg = self.node(x).requires_grad || self.node(bias).requires_grad;
        self.push_checked("add_bias", data, rows, cols, rg, Op::AddBias { x, bias })
    }

    pub fn scale(&mut self, x: TensorId, factor: f32) -> Result<TensorId> {
        let (rows, cols) = self.dims(x);
        let data: Vec<f32> = self.value(x).iter().map(|v| v * factor).collect();
        let rg = self.node(x).requires_grad;
        self.push_checked("scale", data, rows, cols, rg, Op::Scale { x, factor })
    }

    /// Row-wise softmax, stabilized by per-row max subtraction.
    pub fn softmax_rows(&mut self, x: TensorId) -> Result<TensorId> {
        let (rows, cols) = self.dims(x);
        let xv = self.value(x);
        if xv.iter().any(|v| v.is_nan()) {
            return Err(Error::Numeric("softmax_rows: NaN input".into()));
        }
        let mut data = vec![0.0f32; rows * cols];
        for r in 0..rows {
            let row = &xv[r * cols..(r + 1) * cols];
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let mut sum = 0.0f32;
            for c in 0..cols {
                let e = (row[c] - max).exp();
                data[r * cols + c] = e;
                sum += e;
            }
            for c in 0..cols {
                data[r * cols + c] /= sum;
            }
        }
        let rg = self.node(x).requires_grad;
        self.push_checked("softmax_rows", data, rows, cols, rg, Op::SoftmaxRows { x })
    }

    /// Replace masked-out scores with [`super::MASK_VALUE`] ahead of a
    /// softmax, so their post-softmax weight is exactly zero. `keep` is
    /// row-major with `true` marking positions that stay.
    pub fn masked_scale_scores(&mut self, x: TensorId, keep: &[bool]) -> Result<TensorId> {
        let (rows, cols) = self.dims(x);
        if keep.len() != rows * cols {
            return Err(Error::Shape(format!(
                "masked_scale_scores: mask has {} entries for a {rows}x{cols} score matrix",
                keep.len()
            )));
        }
        for r in 0..rows {
            if !keep[r * cols..(r + 1) * cols].iter().any(|&k| k) {
                return Err(Error::Config(format!(
                    "masked_scale_scores: row {r} is entirely masked"
                )));
            }
        }
        let data: Vec<f32> = self
            .value(x)
            .iter()
            .zip(keep)
            .map(|(&v, &k)| if k { v } else { super::MASK_VALUE })
            .collect();
        let rg = self.node(x).requires_grad;
        self.push_checked(
            "masked_scale_scores",
            data,
            rows,
            cols,
            rg,
            Op::MaskedScores { x, keep: keep.to_vec() },
        )
    }

    /// Layer normalization over the last dimension, then per-column gain
    /// and bias. Variance is the population variance of each row.
    pub fn layer_norm(&mut self, x: TensorId, gain: TensorId, bias: TensorId, eps: f32) -> Result<TensorId> {
        let (rows, cols) = self.dims(x);
        for (name, id) in [("gain", gain), ("bias", bias)] {
            let d = self.dims(id);
            if d != (1, cols) {
                return Err(Error::Shape(format!(
                    "layer_norm: {name} must be 1x{cols}, got {}x{}",
                    d.0, d.1
                )));
            }
        }
        if eps <= 0.0 {
            return Err(Error::Config(format!("layer_norm: eps must be positive, got {eps}")));
        }
        let xv = self.value(x);
        let g = self.value(gain);
        let b = self.value(bias);
        let mut data = vec![0.0f32; rows * cols];
        let mut xhat = vec![0.0f32; rows * cols];
        let mut inv_std = vec![0.0f32; rows];
        for r in 0..rows {
            let row = &xv[r * cols..(r + 1) * cols];
            let mean = row.iter().sum::<f32>() / cols as f32;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / cols as f32;
            let is = 1.0 / (var + eps).sqrt();
            inv_std[r] = is;
            for c in 0..cols {
                let xh = (row[c] - mean) * is;
                xhat[r * cols + c] = xh;
                data[r * cols + c] = g[c] * xh + b[c];
            }
        }
        let rg = self.node(x).requires_grad
            || self.node(gain).requires_grad
            || self.node(bias).requires_grad;
        self.push_checked(
            "layer_norm",
            data,
            rows,
            cols,
            rg,
            Op::LayerNorm { x, gain, bias, xhat, inv_std },
        )
    }

    /// Elementwise GELU (tanh approximation of x·Φ(x)).
    pub fn gelu(&mut self, x: TensorId) -> Result<TensorId> {
        let (rows, cols) = self.dims(x);
        let data: Vec<f32> = self.value(x).iter().map(|&v| gelu_scalar(v)).collect();
        let rg = self.node(x).requires_grad;
        self.push_checked("gelu", data, rows, cols, rg, Op::Gelu { x })
    }

    /// Reinterpret the buffer with a new (rows, cols) of equal size.
    pub fn reshape(&mut self, x: TensorId, rows: usize, cols: usize) -> Result<TensorId> {
        let n = self.node(x);
        if n.numel() != rows * cols {
            return Err(Error::Shape(format!(
                "reshape: {}x{} into {rows}x{cols}",
                n.rows, n.cols
            )));
        }
        let data = n.data.clone();
        let rg = n.requires_grad;
        Ok(self.push(data, rows, cols, rg, Op::Reshape { x }))
    }

    /// Columns `[start, start+width)` of every row.
    pub fn slice_cols(&mut self, x: TensorId, start: usize, width: usize) -> Result<TensorId> {
        let (rows, cols) = self.dims(x);
        if start + width > cols {
            return Err(Error::Shape(format!(
                "slice_cols: [{start}, {}) out of {cols} columns",
                start + width
            )));
        }
        let xv = self.value(x);
        let mut data = Vec::with_capacity(rows * width);
        for r in 0..rows {
            data.extend_from_slice(&xv[r * cols + start..r * cols + start + width]);
        }
        let rg = self.node(x).requires_grad;
        Ok(self.push(data, rows, width, rg, Op::SliceCols { x, start, width }))
    }

    /// Concatenate equally-tall blocks side by side.
    pub fn concat_cols(&mut self, parts: &[TensorId]) -> Result<TensorId> {
        if parts.is_empty() {
            return Err(Error::Shape("concat_cols: no parts".into()));
        }
        let rows = self.dims(parts[0]).0;
        let mut widths = Vec::with_capacity(parts.len());
        let mut total = 0usize;
        for &p in parts {
            let (r, c) = self.dims(p);
            if r != rows {
                return Err(Error::Shape(format!(
                    "concat_cols: row counts differ ({rows} vs {r})"
                )));
            }
            widths.push(c);
            total += c;
        }
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                let pv = self.value(p);
                data.extend_from_slice(&pv[r * w..(r + 1) * w]);
            }
        }
        let rg = parts.iter().any(|&p| self.node(p).requires_grad);
        let parts = parts.iter().copied().zip(widths).collect();
        Ok(self.push(data, rows, total, rg, Op::ConcatCols { parts }))
    }

    /// Pure index permutation: out[i] = in[map[i]]. `map` must index every
    /// source element exactly once.
    pub fn gather(&mut self, x: TensorId, map: &[u32], rows: usize, cols: usize) -> Result<TensorId> {
        let n = self.node(x);
        if map.len() != rows * cols || map.len() != n.numel() {
            return Err(Error::Shape(format!(
                "gather: map of {} entries for {} source and {rows}x{cols} output",
                map.len(),
                n.numel()
            )));
        }
        let xv = self.value(x);
        let mut data = Vec::with_capacity(map.len());
        for &src in map {
            let src = src as usize;
            if src >= xv.len() {
                return Err(Error::Shape(format!("gather: index {src} out of range")));
            }
            data.push(xv[src]);
        }
        let rg = n.requires_grad;
        Ok(self.push(data, rows, cols, rg, Op::Gather { x, map: map.to_vec() }))
    }

    /// −ln(max(x[index], floor)) as a scalar node.
    pub fn neg_log_entry(&mut self, x: TensorId, index: usize, floor: f32) -> Result<TensorId> {
        let n = self.node(x);
        if index >= n.numel() {
            return Err(Error::Shape(format!(
                "neg_log_entry: index {index} out of {} entries",
                n.numel()
            )));
        }
        let v = n.data[index].max(floor);
        let data = vec![-v.ln()];
        let rg = n.requires_grad;
        self.push_checked("neg_log_entry", data, 1, 1, rg, Op::NegLogEntry { x, index, floor })
    }

    /// Sum of all entries as a scalar node.
    pub fn sum_all(&mut self, x: TensorId) -> Result<TensorId> {
        let data = vec![self.value(x).iter().sum::<f32>()];
        let rg = self.node(x).requires_grad;
        self.push_checked("sum_all", data, 1, 1, rg, Op::SumAll { x })
    }
}

// ── backward ─────────────────────────────────────────────────────────

impl Tape {
    fn accumulate(&self, grads: &mut [Option<Vec<f32>>], id: TensorId, delta: &[f32]) {
        if !self.nodes[id].requires_grad {
            return;
        }
        match &mut grads[id] {
            Some(g) => {
                for (gi, di) in g.iter_mut().zip(delta) {
                    *gi += di;
                }
            }
            None => grads[id] = Some(delta.to_vec()),
        }
    }

    pub(super) fn backward_node(&self, id: TensorId, up: &[f32], grads: &mut [Option<Vec<f32>>]) {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf => {}
            Op::Matmul { a, b } => {
                let (m, k) = self.dims(*a);
                let n = node.cols;
                if self.nodes[*a].requires_grad {
                    let da = matmul_nt(up, self.value(*b), m, n, k);
                    self.accumulate(grads, *a, &da);
                }
                if self.nodes[*b].requires_grad {
                    let db = matmul_tn(self.value(*a), up, m, k, n);
                    self.accumulate(grads, *b, &db);
                }
            }
            Op::MatmulNt { a, b } => {
                let (m, k) = self.dims(*a);
                let n = node.cols;
                if self.nodes[*a].requires_grad {
                    let da = matmul_nn(up, self.value(*b), m, n, k);
                    self.accumulate(grads, *a, &da);
                }
                if self.nodes[*b].requires_grad {
                    let db = matmul_tn(up, self.value(*a), m, n, k);
                    self.accumulate(grads, *b, &db);
                }
            }
            Op::Add { a, b } => {
                self.accumulate(grads, *a, up);
                self.accumulate(grads, *b, up);
            }
            Op::MulElem { a, b } => {
                if self.nodes[*a].requires_grad {
                    let da: Vec<f32> = up.iter().zip(self.value(*b)).map(|(u, v)| u * v).collect();
                    self.accumulate(grads, *a, &da);
                }
                if self.nodes[*b].requires_grad {
                    let db: Vec<f32> = up.iter().zip(self.value(*a)).map(|(u, v)| u * v).collect();
                    self.accumulate(grads, *b, &db);
                }
            }
            Op::AddBias { x, bias } => {
                self.accumulate(grads, *x, up);
                if self.nodes[*bias].requires_grad {
                    let (rows, cols) = (node.rows, node.cols);
                    let mut db = vec![0.0f32; cols];
                    for r in 0..rows {
                        for c in 0..cols {
                            db[c] += up[r * cols + c];
                        }
                    }
                    self.accumulate(grads, *bias, &db);
                }
            }
            Op::Scale { x, factor } => {
                let dx: Vec<f32> = up.iter().map(|u| u * factor).collect();
                self.accumulate(grads, *x, &dx);
            }
            Op::SoftmaxRows { x } => {
                let (rows, cols) = (node.rows, node.cols);
                let y = &node.data;
                let mut dx = vec![0.0f32; rows * cols];
                for r in 0..rows {
                    let base = r * cols;
                    let mut dot = 0.0f32;
                    for c in 0..cols {
                        dot += up[base + c] * y[base + c];
                    }
                    for c in 0..cols {
                        dx[base + c] = y[base + c] * (up[base + c] - dot);
                    }
                }
                self.accumulate(grads, *x, &dx);
            }
            Op::MaskedScores { x, keep } => {
                let dx: Vec<f32> = up
                    .iter()
                    .zip(keep)
                    .map(|(&u, &k)| if k { u } else { 0.0 })
                    .collect();
                self.accumulate(grads, *x, &dx);
            }
            Op::LayerNorm { x, gain, bias, xhat, inv_std } => {
                let (rows, cols) = (node.rows, node.cols);
                let g = self.value(*gain);
                if self.nodes[*gain].requires_grad {
                    let mut dg = vec![0.0f32; cols];
                    for r in 0..rows {
                        for c in 0..cols {
                            dg[c] += up[r * cols + c] * xhat[r * cols + c];
                        }
                    }
                    self.accumulate(grads, *gain, &dg);
                }
                if self.nodes[*bias].requires_grad {
                    let mut db = vec![0.0f32; cols];
                    for r in 0..rows {
                        for c in 0..cols {
                            db[c] += up[r * cols + c];
                        }
                    }
                    self.accumulate(grads, *bias, &db);
                }
                if self.nodes[*x].requires_grad {
                    let inv_n = 1.0 / cols as f32;
                    let mut dx = vec![0.0f32; rows * cols];
                    for r in 0..rows {
                        let base = r * cols;
                        let mut mean_dxhat = 0.0f32;
                        let mut mean_dxhat_xhat = 0.0f32;
                        for c in 0..cols {
                            let dxh = up[base + c] * g[c];
                            mean_dxhat += dxh;
                            mean_dxhat_xhat += dxh * xhat[base + c];
                        }
                        mean_dxhat *= inv_n;
                        mean_dxhat_xhat *= inv_n;
                        for c in 0..cols {
                            let dxh = up[base + c] * g[c];
                            dx[base + c] =
                                inv_std[r] * (dxh - mean_dxhat - xhat[base + c] * mean_dxhat_xhat);
                        }
                    }
                    self.accumulate(grads, *x, &dx);
                }
            }
            Op::Gelu { x } => {
                let dx: Vec<f32> = up
                    .iter()
                    .zip(self.value(*x))
                    .map(|(u, &v)| u * gelu_grad_scalar(v))
                    .collect();
                self.accumulate(grads, *x, &dx);
            }
            Op::Reshape { x } => {
                self.accumulate(grads, *x, up);
            }
            Op::SliceCols { x, start, width } => {
                let (rows, cols) = self.dims(*x);
                let mut dx = vec![0.0f32; rows * cols];
                for r in 0..rows {
                    for c in 0..*width {
                        dx[r * cols + start + c] = up[r * width + c];
                    }
                }
                self.accumulate(grads, *x, &dx);
            }
            Op::ConcatCols { parts } => {
                let rows = node.rows;
                let total = node.cols;
                let mut offset = 0usize;
                for &(p, w) in parts {
                    if self.nodes[p].requires_grad {
                        let mut dp = vec![0.0f32; rows * w];
                        for r in 0..rows {
                            dp[r * w..(r + 1) * w]
                                .copy_from_slice(&up[r * total + offset..r * total + offset + w]);
                        }
                        self.accumulate(grads, p, &dp);
                    }
                    offset += w;
                }
            }
            Op::Gather { x, map } => {
                let mut dx = vec![0.0f32; self.nodes[*x].numel()];
                for (i, &src) in map.iter().enumerate() {
                    dx[src as usize] += up[i];
                }
                self.accumulate(grads, *x, &dx);
            }
            Op::NegLogEntry { x, index, floor } => {
                let v = self.value(*x)[*index];
                let mut dx = vec![0.0f32; self.nodes[*x].numel()];
                if v > *floor {
                    dx[*index] = -up[0] / v;
                }
                self.accumulate(grads, *x, &dx);
            }
            Op::SumAll { x } => {
                let dx = vec![up[0]; self.nodes[*x].numel()];
                self.accumulate(grads, *x, &dx);
            }
        }
    }
}
