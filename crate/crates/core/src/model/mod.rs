//! The spatial-temporal transformer: a spatial encoder attending across
//! channels, a temporal encoder with windowed attention across feature
//! windows, and a cascaded classifier head.
//!
//! Per encoder layer the update is post-norm exactly as written in the
//! architecture: `out = LayerNorm(x + FFN(Attention(x)))`, with GELU
//! inside the feed-forward block and an inner width of 4× the operating
//! width. The spatial encoder entry carries a learned projection from
//! window·band width to window·d_c width; the temporal encoder ends with
//! a learned projection down to d_t.

use crate::error::{Error, Result};
use crate::signal::FeatureSegment;
use crate::tensor::{Tape, Tensor, TensorId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LN_EPS: f32 = 1e-5;
const FFN_MULT: usize = 4;

/// Architecture hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// C — electrode channels.
    pub channels: usize,
    /// 𝒯 — feature windows per segment.
    pub windows: usize,
    /// B — frequency bands per window.
    pub bands: usize,
    /// d_c — per-window width inside the spatial encoder.
    pub spatial_dim: usize,
    /// d_t — final temporal embedding width.
    pub temporal_dim: usize,
    /// d_h — classifier hidden width.
    pub hidden_dim: usize,
    /// K — emotion classes.
    pub classes: usize,
    pub spatial_heads: usize,
    pub temporal_heads: usize,
    pub encoder_layers: usize,
    /// w — odd attention window width over the 𝒯 axis.
    pub attention_window: usize,
}

impl ModelConfig {
    /// Defaults sized for the synthetic datasets: 5 encoder layers, 4
    /// heads per encoder, a 3-window attention band.
    pub fn new(channels: usize, windows: usize, bands: usize, classes: usize) -> Self {
        ModelConfig {
            channels,
            windows,
            bands,
            spatial_dim: 8,
            temporal_dim: 8,
            hidden_dim: 32,
            classes,
            spatial_heads: 4,
            temporal_heads: 4,
            encoder_layers: 5,
            attention_window: 3.min(if windows % 2 == 0 { windows - 1 } else { windows }),
        }
    }

    /// Operating width of the spatial encoder (𝒯·d_c).
    pub fn spatial_width(&self) -> usize {
        self.windows * self.spatial_dim
    }

    /// Operating width of the temporal encoder (C·d_c).
    pub fn temporal_width(&self) -> usize {
        self.channels * self.spatial_dim
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("channels", self.channels),
            ("windows", self.windows),
            ("bands", self.bands),
            ("spatial_dim", self.spatial_dim),
            ("temporal_dim", self.temporal_dim),
            ("hidden_dim", self.hidden_dim),
            ("spatial_heads", self.spatial_heads),
            ("temporal_heads", self.temporal_heads),
            ("encoder_layers", self.encoder_layers),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.classes < 2 {
            return Err(Error::Config("at least 2 classes required".into()));
        }
        if self.spatial_dim % self.spatial_heads != 0 {
            return Err(Error::Config(format!(
                "spatial_dim {} not divisible by {} heads",
                self.spatial_dim, self.spatial_heads
            )));
        }
        if self.temporal_dim % self.temporal_heads != 0 {
            return Err(Error::Config(format!(
                "temporal_dim {} not divisible by {} heads",
                self.temporal_dim, self.temporal_heads
            )));
        }
        if self.temporal_width() % self.temporal_heads != 0 {
            return Err(Error::Config(format!(
                "temporal width {} not divisible by {} heads",
                self.temporal_width(),
                self.temporal_heads
            )));
        }
        if self.attention_window % 2 == 0 {
            return Err(Error::Config(format!(
                "attention window must be odd, got {}",
                self.attention_window
            )));
        }
        if self.attention_window > self.windows {
            return Err(Error::Config(format!(
                "attention window {} exceeds the {} windows per segment",
                self.attention_window, self.windows
            )));
        }
        Ok(())
    }
}

/// 𝒯×𝒯 binary attention mask with at least one kept slot per row.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    size: usize,
    keep: Vec<bool>,
}

impl BinaryMask {
    /// Band mask of half-width (w−1)/2: `keep[i][j] ⇔ |i−j| ≤ (w−1)/2`.
    pub fn window(windows: usize, w: usize) -> Result<Self> {
        if w % 2 == 0 {
            return Err(Error::Config(format!("attention window must be odd, got {w}")));
        }
        if w < 1 || w > 2 * windows - 1 {
            return Err(Error::Config(format!(
                "attention window {w} outside 1..={} for {windows} windows",
                2 * windows - 1
            )));
        }
        let half = (w - 1) / 2;
        let mut keep = vec![false; windows * windows];
        for i in 0..windows {
            for j in 0..windows {
                keep[i * windows + j] = i.abs_diff(j) <= half;
            }
        }
        Ok(BinaryMask { size: windows, keep })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn as_bools(&self) -> &[bool] {
        &self.keep
    }

    pub fn is_set(&self, i: usize, j: usize) -> bool {
        self.keep[i * self.size + j]
    }

    pub fn ones(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }
}

/// Weights of one encoder layer.
#[derive(Debug, Clone)]
pub struct EncoderLayerParams {
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
    pub ff_w1: Tensor,
    pub ff_b1: Tensor,
    pub ff_w2: Tensor,
    pub ff_b2: Tensor,
    pub ln_gain: Tensor,
    pub ln_bias: Tensor,
}

impl EncoderLayerParams {
    fn init(width: usize, rng: &mut ChaCha8Rng) -> Self {
        let inner = FFN_MULT * width;
        EncoderLayerParams {
            w_q: uniform_init(width, width, rng),
            w_k: uniform_init(width, width, rng),
            w_v: uniform_init(width, width, rng),
            ff_w1: uniform_init(width, inner, rng),
            ff_b1: Tensor::zeros(vec![1, inner]).with_grad(),
            ff_w2: uniform_init(inner, width, rng),
            ff_b2: Tensor::zeros(vec![1, width]).with_grad(),
            ln_gain: Tensor::from_vec(vec![1, width], vec![1.0; width]).unwrap().with_grad(),
            ln_bias: Tensor::zeros(vec![1, width]).with_grad(),
        }
    }

    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor)) {
        f(format!("{prefix}.w_q"), &self.w_q);
        f(format!("{prefix}.w_k"), &self.w_k);
        f(format!("{prefix}.w_v"), &self.w_v);
        f(format!("{prefix}.ff_w1"), &self.ff_w1);
        f(format!("{prefix}.ff_b1"), &self.ff_b1);
        f(format!("{prefix}.ff_w2"), &self.ff_w2);
        f(format!("{prefix}.ff_b2"), &self.ff_b2);
        f(format!("{prefix}.ln_gain"), &self.ln_gain);
        f(format!("{prefix}.ln_bias"), &self.ln_bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Tensor)) {
        for t in [
            &mut self.w_q,
            &mut self.w_k,
            &mut self.w_v,
            &mut self.ff_w1,
            &mut self.ff_b1,
            &mut self.ff_w2,
            &mut self.ff_b2,
            &mut self.ln_gain,
            &mut self.ln_bias,
        ] {
            f(t);
        }
    }
}

fn uniform_init(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let bound = 1.0 / (fan_in as f32).sqrt();
    let data: Vec<f32> = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::from_vec(vec![fan_in, fan_out], data).unwrap().with_grad()
}

/// Every learnable weight of the model. The visit order is the canonical
/// serialization order used by checkpoints and the optimizer.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub input_proj: Tensor,
    pub spatial: Vec<EncoderLayerParams>,
    pub temporal: Vec<EncoderLayerParams>,
    pub output_proj: Tensor,
    pub cls_w1: Tensor,
    pub cls_b1: Tensor,
    pub cls_w2: Tensor,
    pub cls_b2: Tensor,
}

impl ModelParams {
    /// Seeded uniform init scaled by 1/√fan_in; layer-norm gains start
    /// at one, biases at zero.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ws = cfg.spatial_width();
        let wt = cfg.temporal_width();
        let flat = cfg.windows * cfg.temporal_dim;
        Ok(ModelParams {
            input_proj: uniform_init(cfg.windows * cfg.bands, ws, &mut rng),
            spatial: (0..cfg.encoder_layers)
                .map(|_| EncoderLayerParams::init(ws, &mut rng))
                .collect(),
            temporal: (0..cfg.encoder_layers)
                .map(|_| EncoderLayerParams::init(wt, &mut rng))
                .collect(),
            output_proj: uniform_init(wt, cfg.temporal_dim, &mut rng),
            cls_w1: uniform_init(flat, cfg.hidden_dim, &mut rng),
            cls_b1: Tensor::zeros(vec![1, cfg.hidden_dim]).with_grad(),
            cls_w2: uniform_init(cfg.hidden_dim, cfg.classes, &mut rng),
            cls_b2: Tensor::zeros(vec![1, cfg.classes]).with_grad(),
        })
    }

    /// Visit every parameter in canonical order.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(String, &'a Tensor)) {
        f("input_proj".into(), &self.input_proj);
        for (i, layer) in self.spatial.iter().enumerate() {
            layer.visit(&format!("spatial.{i}"), f);
        }
        for (i, layer) in self.temporal.iter().enumerate() {
            layer.visit(&format!("temporal.{i}"), f);
        }
        f("output_proj".into(), &self.output_proj);
        f("cls_w1".into(), &self.cls_w1);
        f("cls_b1".into(), &self.cls_b1);
        f("cls_w2".into(), &self.cls_w2);
        f("cls_b2".into(), &self.cls_b2);
    }

    /// Mutable visit in the same canonical order.
    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Tensor)) {
        f(&mut self.input_proj);
        for layer in &mut self.spatial {
            layer.visit_mut(f);
        }
        for layer in &mut self.temporal {
            layer.visit_mut(f);
        }
        f(&mut self.output_proj);
        f(&mut self.cls_w1);
        f(&mut self.cls_b1);
        f(&mut self.cls_w2);
        f(&mut self.cls_b2);
    }

    pub fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, t| n += t.numel());
        n
    }
}

/// Reorganize a feature segment into the spatial layout C × (𝒯·B):
/// element (c, t·B + b) = seg[t][c][b].
pub fn reorganize_spatial(seg: &FeatureSegment, cfg: &ModelConfig) -> Result<Tensor> {
    if seg.windows != cfg.windows || seg.channels != cfg.channels || seg.bands != cfg.bands {
        return Err(Error::Shape(format!(
            "segment {}×{}×{} does not match configured {}×{}×{}",
            seg.windows, seg.channels, seg.bands, cfg.windows, cfg.channels, cfg.bands
        )));
    }
    let (t_n, c_n, b_n) = (seg.windows, seg.channels, seg.bands);
    let mut data = vec![0.0f32; c_n * t_n * b_n];
    for t in 0..t_n {
        for c in 0..c_n {
            for b in 0..b_n {
                data[c * (t_n * b_n) + t * b_n + b] = seg.get(t, c, b);
            }
        }
    }
    Tensor::from_vec(vec![c_n, t_n * b_n], data)
}

/// Sinusoidal positional encoding rows for the temporal axis.
fn positional_encoding(positions: usize, width: usize) -> Vec<f32> {
    let mut pe = vec![0.0f32; positions * width];
    for t in 0..positions {
        for j in 0..width {
            let pair = (j / 2) as f64;
            let angle = t as f64 / 10_000f64.powf(2.0 * pair / width as f64);
            pe[t * width + j] = if j % 2 == 0 { angle.sin() } else { angle.cos() } as f32;
        }
    }
    pe
}

struct LayerIds {
    w_q: TensorId,
    w_k: TensorId,
    w_v: TensorId,
    ff_w1: TensorId,
    ff_b1: TensorId,
    ff_w2: TensorId,
    ff_b2: TensorId,
    ln_gain: TensorId,
    ln_bias: TensorId,
}

/// One forward pass under construction: the tape plus the ids of every
/// registered parameter (in canonical order) so gradients can be
/// collected after `backward`.
pub struct ModelGraph {
    cfg: ModelConfig,
    pub tape: Tape,
    input_proj: TensorId,
    spatial: Vec<LayerIds>,
    temporal: Vec<LayerIds>,
    output_proj: TensorId,
    cls_w1: TensorId,
    cls_b1: TensorId,
    cls_w2: TensorId,
    cls_b2: TensorId,
    /// Attention probability nodes recorded by the most recent encoder
    /// calls, one per (layer, head); handy for inspection and tests.
    pub attn_probs: Vec<TensorId>,
}

impl ModelGraph {
    pub fn new(params: &ModelParams, cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut tape = Tape::new();
        let mut ids = Vec::new();
        let mut err = None;
        params.visit(&mut |_, t| match tape.param(t) {
            Ok(id) => ids.push(id),
            Err(e) => err = Some(e),
        });
        if let Some(e) = err {
            return Err(e);
        }
        let per_layer = 9;
        let l = cfg.encoder_layers;
        let layer_ids = |base: usize| LayerIds {
            w_q: ids[base],
            w_k: ids[base + 1],
            w_v: ids[base + 2],
            ff_w1: ids[base + 3],
            ff_b1: ids[base + 4],
            ff_w2: ids[base + 5],
            ff_b2: ids[base + 6],
            ln_gain: ids[base + 7],
            ln_bias: ids[base + 8],
        };
        Ok(ModelGraph {
            cfg: cfg.clone(),
            tape,
            input_proj: ids[0],
            spatial: (0..l).map(|i| layer_ids(1 + i * per_layer)).collect(),
            temporal: (0..l).map(|i| layer_ids(1 + (l + i) * per_layer)).collect(),
            output_proj: ids[1 + 2 * l * per_layer],
            cls_w1: ids[2 + 2 * l * per_layer],
            cls_b1: ids[3 + 2 * l * per_layer],
            cls_w2: ids[4 + 2 * l * per_layer],
            cls_b2: ids[5 + 2 * l * per_layer],
            attn_probs: Vec::new(),
        })
    }

    /// Parameter tape ids in canonical order.
    pub fn param_ids(&self) -> Vec<TensorId> {
        let mut ids = vec![self.input_proj];
        for layer in self.spatial.iter().chain(&self.temporal) {
            ids.extend([
                layer.w_q,
                layer.w_k,
                layer.w_v,
                layer.ff_w1,
                layer.ff_b1,
                layer.ff_w2,
                layer.ff_b2,
                layer.ln_gain,
                layer.ln_bias,
            ]);
        }
        ids.extend([self.output_proj, self.cls_w1, self.cls_b1, self.cls_w2, self.cls_b2]);
        ids
    }

    fn multi_head_attention(
        &mut self,
        x: TensorId,
        layer: usize,
        temporal: bool,
        mask: Option<&BinaryMask>,
    ) -> Result<TensorId> {
        let ids = if temporal { &self.temporal[layer] } else { &self.spatial[layer] };
        let (w_q, w_k, w_v) = (ids.w_q, ids.w_k, ids.w_v);
        let heads = if temporal { self.cfg.temporal_heads } else { self.cfg.spatial_heads };
        let q = self.tape.matmul(x, w_q)?;
        let k = self.tape.matmul(x, w_k)?;
        let v = self.tape.matmul(x, w_v)?;
        let width = self.tape.dims(q).1;
        let head_dim = width / heads;
        let scale = 1.0 / (head_dim as f32).sqrt();
        let mut parts = Vec::with_capacity(heads);
        for h in 0..heads {
            let qh = self.tape.slice_cols(q, h * head_dim, head_dim)?;
            let kh = self.tape.slice_cols(k, h * head_dim, head_dim)?;
            let vh = self.tape.slice_cols(v, h * head_dim, head_dim)?;
            let scores = self.tape.matmul_nt(qh, kh)?;
            let scaled = self.tape.scale(scores, scale)?;
            let gated = match mask {
                Some(m) => self.tape.masked_scale_scores(scaled, m.as_bools())?,
                None => scaled,
            };
            let probs = self.tape.softmax_rows(gated)?;
            self.attn_probs.push(probs);
            parts.push(self.tape.matmul(probs, vh)?);
        }
        self.tape.concat_cols(&parts)
    }

    /// out = LayerNorm(x + FFN(Attention(x)))
    fn encoder_layer(
        &mut self,
        x: TensorId,
        layer: usize,
        temporal: bool,
        mask: Option<&BinaryMask>,
    ) -> Result<TensorId> {
        let attn = self.multi_head_attention(x, layer, temporal, mask)?;
        let ids = if temporal { &self.temporal[layer] } else { &self.spatial[layer] };
        let (ff_w1, ff_b1, ff_w2, ff_b2) = (ids.ff_w1, ids.ff_b1, ids.ff_w2, ids.ff_b2);
        let (ln_gain, ln_bias) = (ids.ln_gain, ids.ln_bias);
        let h1 = self.tape.matmul(attn, ff_w1)?;
        let h1 = self.tape.add_bias(h1, ff_b1)?;
        let h1 = self.tape.gelu(h1)?;
        let h2 = self.tape.matmul(h1, ff_w2)?;
        let ff = self.tape.add_bias(h2, ff_b2)?;
        let sum = self.tape.add(x, ff)?;
        self.tape.layer_norm(sum, ln_gain, ln_bias, LN_EPS)
    }

    /// Full-attention encoder over the channel axis. `x` is C × (𝒯·B);
    /// the learned entry projection lifts it to C × (𝒯·d_c).
    pub fn spatial_encoder(&mut self, x: TensorId) -> Result<TensorId> {
        let mut h = self.tape.matmul(x, self.input_proj)?;
        for layer in 0..self.cfg.encoder_layers {
            h = self.encoder_layer(h, layer, false, None)?;
        }
        Ok(h)
    }

    /// Pure index permutation C×(𝒯·d_c) → 𝒯×(C·d_c):
    /// out(t, c·d_c + j) = h_s(c, t·d_c + j).
    pub fn reorganize_temporal(&mut self, h_s: TensorId) -> Result<TensorId> {
        let (c_n, width) = self.tape.dims(h_s);
        let d = self.cfg.spatial_dim;
        let t_n = self.cfg.windows;
        if c_n != self.cfg.channels || width != t_n * d {
            return Err(Error::Shape(format!(
                "reorganize_temporal: got {c_n}×{width}, expected {}×{}",
                self.cfg.channels,
                t_n * d
            )));
        }
        let mut map = vec![0u32; t_n * c_n * d];
        for t in 0..t_n {
            for c in 0..c_n {
                for j in 0..d {
                    map[t * (c_n * d) + c * d + j] = (c * (t_n * d) + t * d + j) as u32;
                }
            }
        }
        self.tape.gather(h_s, &map, t_n, c_n * d)
    }

    /// Windowed encoder over the 𝒯 axis with sinusoidal positions added
    /// before the first layer and a final projection to d_t.
    pub fn temporal_encoder(&mut self, x_t: TensorId, mask: &BinaryMask) -> Result<TensorId> {
        let (t_n, width) = self.tape.dims(x_t);
        if mask.size() != t_n {
            return Err(Error::Shape(format!(
                "mask is {}×{} but the sequence has {t_n} rows",
                mask.size(),
                mask.size()
            )));
        }
        let pe = self.tape.constant(t_n, width, positional_encoding(t_n, width))?;
        let mut h = self.tape.add(x_t, pe)?;
        for layer in 0..self.cfg.encoder_layers {
            h = self.encoder_layer(h, layer, true, Some(mask))?;
        }
        self.tape.matmul(h, self.output_proj)
    }

    /// probabilities = Softmax(W₂·GELU(W₁·Flatten(H_t)) + biases)
    pub fn classify(&mut self, h_t: TensorId) -> Result<TensorId> {
        let (rows, cols) = self.tape.dims(h_t);
        let flat = self.tape.reshape(h_t, 1, rows * cols)?;
        let z1 = self.tape.matmul(flat, self.cls_w1)?;
        let z1 = self.tape.add_bias(z1, self.cls_b1)?;
        let a = self.tape.gelu(z1)?;
        let logits = self.tape.matmul(a, self.cls_w2)?;
        let logits = self.tape.add_bias(logits, self.cls_b2)?;
        self.tape.softmax_rows(logits)
    }

    /// End-to-end forward for one segment; returns the 1×K probability
    /// node.
    pub fn forward(&mut self, seg: &FeatureSegment) -> Result<TensorId> {
        let x = reorganize_spatial(seg, &self.cfg)?;
        let x = self.tape.leaf(x)?;
        let h_s = self.spatial_encoder(x)?;
        let x_t = self.reorganize_temporal(h_s)?;
        let mask = BinaryMask::window(self.cfg.windows, self.cfg.attention_window)?;
        let h_t = self.temporal_encoder(x_t, &mask)?;
        self.classify(h_t)
    }
}

/// Convenience inference: per-class probabilities for one segment.
pub fn predict(seg: &FeatureSegment, params: &ModelParams, cfg: &ModelConfig) -> Result<Vec<f32>> {
    let mut graph = ModelGraph::new(params, cfg)?;
    let out = graph.forward(seg)?;
    Ok(graph.tape.value(out).to_vec())
}
