//! Shared oracles for the integration suites: an independent
//! double-precision re-implementation of the model forward pass (plain
//! loops, no tape) used for finite-difference gradient checks, and rank
//! statistics with p-values.

#![allow(dead_code)]

use statrs::distribution::{ContinuousCDF, StudentsT};
use sttcl::model::{ModelConfig, ModelParams};
use sttcl::signal::FeatureSegment;

// ── minimal f64 matrix ───────────────────────────────────────────────

#[derive(Clone)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.rows);
    let mut out = Mat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for p in 0..a.cols {
            let av = a.at(i, p);
            for j in 0..b.cols {
                out.data[i * b.cols + j] += av * b.at(p, j);
            }
        }
    }
    out
}

fn add_bias(mut x: Mat, bias: &Mat) -> Mat {
    assert_eq!(bias.data.len(), x.cols);
    for r in 0..x.rows {
        for c in 0..x.cols {
            x.data[r * x.cols + c] += bias.data[c];
        }
    }
    x
}

fn gelu(x: f64) -> f64 {
    let u = (2.0 / std::f64::consts::PI).sqrt() * (x + 0.044715 * x * x * x);
    0.5 * x * (1.0 + u.tanh())
}

fn gelu_mat(mut x: Mat) -> Mat {
    for v in &mut x.data {
        *v = gelu(*v);
    }
    x
}

fn layer_norm(x: &Mat, gain: &Mat, bias: &Mat, eps: f64) -> Mat {
    let mut out = Mat::zeros(x.rows, x.cols);
    for r in 0..x.rows {
        let row = &x.data[r * x.cols..(r + 1) * x.cols];
        let mean = row.iter().sum::<f64>() / x.cols as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.cols as f64;
        let inv = 1.0 / (var + eps).sqrt();
        for c in 0..x.cols {
            out.data[r * x.cols + c] = gain.data[c] * (row[c] - mean) * inv + bias.data[c];
        }
    }
    out
}

fn softmax_row(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

// ── parameter mirror ─────────────────────────────────────────────────

/// All model weights copied into f64 in canonical visit order.
pub fn params_to_mats(params: &ModelParams) -> Vec<Mat> {
    let mut out = Vec::new();
    params.visit(&mut |_, t| {
        let (rows, cols) = match t.shape() {
            [n] => (1usize, *n),
            [r, c] => (*r, *c),
            other => panic!("unexpected parameter rank {other:?}"),
        };
        out.push(Mat { rows, cols, data: t.data().iter().map(|&v| v as f64).collect() });
    });
    out
}

/// Parameter names in the same order, for diagnostics.
pub fn param_names(params: &ModelParams) -> Vec<String> {
    let mut names = Vec::new();
    params.visit(&mut |name, _| names.push(name));
    names
}

// ── independent forward pass ─────────────────────────────────────────

fn encoder_layer(x: &Mat, p: &[Mat], heads: usize, keep: Option<&[bool]>) -> Mat {
    let (w_q, w_k, w_v) = (&p[0], &p[1], &p[2]);
    let q = matmul(x, w_q);
    let k = matmul(x, w_k);
    let v = matmul(x, w_v);
    let n = x.rows;
    let width = q.cols;
    let head_dim = width / heads;
    let scale = 1.0 / (head_dim as f64).sqrt();
    let mut attn = Mat::zeros(n, width);
    for h in 0..heads {
        let off = h * head_dim;
        for i in 0..n {
            let mut scores = vec![0.0f64; n];
            for (j, slot) in scores.iter_mut().enumerate() {
                let mut dot = 0.0;
                for e in 0..head_dim {
                    dot += q.at(i, off + e) * k.at(j, off + e);
                }
                *slot = dot * scale;
                if let Some(keep) = keep {
                    if !keep[i * n + j] {
                        *slot = -1e300;
                    }
                }
            }
            softmax_row(&mut scores);
            for (j, &w) in scores.iter().enumerate() {
                for e in 0..head_dim {
                    attn.data[i * width + off + e] += w * v.at(j, off + e);
                }
            }
        }
    }
    let h1 = gelu_mat(add_bias(matmul(&attn, &p[3]), &p[4]));
    let ff = add_bias(matmul(&h1, &p[5]), &p[6]);
    let mut sum = x.clone();
    for (s, f) in sum.data.iter_mut().zip(&ff.data) {
        *s += f;
    }
    layer_norm(&sum, &p[7], &p[8], 1e-5)
}

fn positional_encoding(positions: usize, width: usize) -> Mat {
    let mut pe = Mat::zeros(positions, width);
    for t in 0..positions {
        for j in 0..width {
            let pair = (j / 2) as f64;
            let angle = t as f64 / 10_000f64.powf(2.0 * pair / width as f64);
            pe.data[t * width + j] = if j % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    pe
}

/// Cross-entropy loss of the full model, recomputed from scratch in
/// double precision. `slots` follow the canonical parameter order.
pub fn model_loss_f64(slots: &[Mat], cfg: &ModelConfig, seg: &FeatureSegment) -> f64 {
    let layers = cfg.encoder_layers;
    let per_layer = 9;
    let (t_n, c_n, b_n) = (cfg.windows, cfg.channels, cfg.bands);

    // spatial layout: x[c][t·B + b] = seg[t][c][b]
    let mut x = Mat::zeros(c_n, t_n * b_n);
    for t in 0..t_n {
        for c in 0..c_n {
            for b in 0..b_n {
                x.data[c * (t_n * b_n) + t * b_n + b] = seg.get(t, c, b) as f64;
            }
        }
    }

    let mut h = matmul(&x, &slots[0]);
    for l in 0..layers {
        let base = 1 + l * per_layer;
        h = encoder_layer(&h, &slots[base..base + per_layer], cfg.spatial_heads, None);
    }

    // temporal layout: xt[t][c·d + j] = h[c][t·d + j]
    let d = cfg.spatial_dim;
    let mut xt = Mat::zeros(t_n, c_n * d);
    for t in 0..t_n {
        for c in 0..c_n {
            for j in 0..d {
                xt.data[t * (c_n * d) + c * d + j] = h.at(c, t * d + j);
            }
        }
    }
    let pe = positional_encoding(t_n, c_n * d);
    for (v, p) in xt.data.iter_mut().zip(&pe.data) {
        *v += p;
    }

    let half = (cfg.attention_window - 1) / 2;
    let keep: Vec<bool> = (0..t_n * t_n)
        .map(|i| (i / t_n).abs_diff(i % t_n) <= half)
        .collect();
    let mut ht = xt;
    for l in 0..layers {
        let base = 1 + (layers + l) * per_layer;
        ht = encoder_layer(&ht, &slots[base..base + per_layer], cfg.temporal_heads, Some(&keep));
    }
    let out_proj = &slots[1 + 2 * layers * per_layer];
    let ht = matmul(&ht, out_proj);

    let base = 2 + 2 * layers * per_layer;
    let (w1, b1, w2, b2) = (&slots[base], &slots[base + 1], &slots[base + 2], &slots[base + 3]);
    let flat = Mat { rows: 1, cols: ht.rows * ht.cols, data: ht.data };
    let z1 = gelu_mat(add_bias(matmul(&flat, w1), b1));
    let mut logits = add_bias(matmul(&z1, w2), b2);
    softmax_row(&mut logits.data);
    -(logits.data[seg.label].max(1e-12)).ln()
}

// ── rank statistics ──────────────────────────────────────────────────

fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation and the one-sided p-value for ρ > 0
/// (t-approximation with n−2 degrees of freedom).
pub fn spearman_positive(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 3, "need at least 3 points");
    let rho = pearson(&ranks(xs), &ranks(ys));
    if rho >= 1.0 {
        return (rho, 0.0);
    }
    let t = rho * ((n as f64 - 2.0) / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n as f64 - 2.0).expect("valid dof");
    let p = 1.0 - dist.cdf(t);
    (rho, p)
}
