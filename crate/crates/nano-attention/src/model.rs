//! A minimal pre-norm transformer classifier with a pluggable reweighting
//! function in its attention, small enough that exact manual backprop stays
//! auditable: token embedding, `depth` blocks of (self-attention + two-layer
//! tanh feedforward, both with residuals and pre-normalization), mean
//! pooling, linear head.

use crate::attention::reweight_rows;
use crate::error::{Error, Result};
use crate::mat::Mat;
use reweight_core::rng::SplitMix64;
use reweight_core::{vjp, ModulatorParams, OrderParams, ReweightSpec, Scores};
use serde::{Deserialize, Serialize};

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModelConfig {
    pub depth: usize,
    pub heads: usize,
    pub model_dim: usize,
    pub ff_dim: usize,
    pub seq_len: usize,
    pub vocab: usize,
    pub classes: usize,
    pub reweight: ReweightSpec,
    pub seed: u64,
    pub batch_size: usize,
}

impl ToyModelConfig {
    /// Defaults sized for quick CPU training.
    pub fn new(reweight: ReweightSpec, seed: u64) -> Self {
        ToyModelConfig {
            depth: 2,
            heads: 2,
            model_dim: 16,
            ff_dim: 32,
            seq_len: 32,
            vocab: 64,
            classes: 4,
            reweight,
            seed,
            batch_size: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("depth", self.depth),
            ("heads", self.heads),
            ("model_dim", self.model_dim),
            ("ff_dim", self.ff_dim),
            ("classes", self.classes),
            ("vocab", self.vocab),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidInput(format!("{name} must be at least 1")));
            }
        }
        if self.seq_len < 2 {
            return Err(Error::InvalidInput("seq_len must be at least 2".into()));
        }
        if self.model_dim % self.heads != 0 {
            return Err(Error::InvalidInput(format!(
                "model_dim {} not divisible by heads {}",
                self.model_dim, self.heads
            )));
        }
        if let ReweightSpec::Multimax(p) = &self.reweight {
            let _ = p; // parameter invariants enforced by the type
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl LayerNorm {
    fn ones(dim: usize) -> Self {
        LayerNorm {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
        }
    }

    fn zeros(dim: usize) -> Self {
        LayerNorm {
            gamma: vec![0.0; dim],
            beta: vec![0.0; dim],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub ln1: LayerNorm,
    pub wq: Mat,
    pub wk: Mat,
    pub wv: Mat,
    pub wo: Mat,
    pub ln2: LayerNorm,
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
    /// Per-layer modulator, shared across heads; present only for MultiMax.
    pub modulator: Option<ModulatorParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub cfg: ToyModelConfig,
    pub embed: Mat,
    pub blocks: Vec<Block>,
    pub head_w: Mat,
    pub head_b: Vec<f64>,
}

fn zero_modulator_like(p: &ModulatorParams) -> ModulatorParams {
    ModulatorParams::new(
        p.orders()
            .iter()
            .map(|_| OrderParams {
                b: 0.0,
                d: 0.0,
                t_b: 0.0,
                t_d: 0.0,
            })
            .collect(),
    )
    .expect("zero params are valid")
}

impl Model {
    /// Seeded initialization: 1/sqrt(fan_in) normal weights, unit layer
    /// norms, zero biases, modulator taken from the config's reweight spec.
    pub fn init(cfg: &ToyModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = SplitMix64::new(cfg.seed);
        let d = cfg.model_dim;
        let f = cfg.ff_dim;
        let mut mat = |rows: usize, cols: usize, scale: f64| {
            Mat::from_fn(rows, cols, |_, _| rng.normal() * scale)
        };
        let embed = mat(cfg.vocab, d, 0.5);
        let d_scale = 1.0 / (d as f64).sqrt();
        let f_scale = 1.0 / (f as f64).sqrt();
        let mut blocks = Vec::with_capacity(cfg.depth);
        for _ in 0..cfg.depth {
            blocks.push(Block {
                ln1: LayerNorm::ones(d),
                wq: mat(d, d, d_scale),
                wk: mat(d, d, d_scale),
                wv: mat(d, d, d_scale),
                wo: mat(d, d, d_scale),
                ln2: LayerNorm::ones(d),
                w1: mat(d, f, d_scale),
                b1: vec![0.0; f],
                w2: mat(f, d, f_scale),
                b2: vec![0.0; d],
                modulator: match &cfg.reweight {
                    ReweightSpec::Multimax(p) => Some(p.clone()),
                    _ => None,
                },
            });
        }
        let head_w = mat(d, cfg.classes, d_scale);
        Ok(Model {
            cfg: cfg.clone(),
            embed,
            blocks,
            head_w,
            head_b: vec![0.0; cfg.classes],
        })
    }

    /// Same shape, all parameters zero; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let d = self.cfg.model_dim;
        let f = self.cfg.ff_dim;
        Model {
            cfg: self.cfg.clone(),
            embed: Mat::zeros(self.cfg.vocab, d),
            blocks: self
                .blocks
                .iter()
                .map(|b| Block {
                    ln1: LayerNorm::zeros(d),
                    wq: Mat::zeros(d, d),
                    wk: Mat::zeros(d, d),
                    wv: Mat::zeros(d, d),
                    wo: Mat::zeros(d, d),
                    ln2: LayerNorm::zeros(d),
                    w1: Mat::zeros(d, f),
                    b1: vec![0.0; f],
                    w2: Mat::zeros(f, d),
                    b2: vec![0.0; d],
                    modulator: b.modulator.as_ref().map(zero_modulator_like),
                })
                .collect(),
            head_w: Mat::zeros(d, self.cfg.classes),
            head_b: vec![0.0; self.cfg.classes],
        }
    }

    /// Reweighting spec used by one layer's attention.
    pub fn layer_spec(&self, layer: usize) -> ReweightSpec {
        match &self.blocks[layer].modulator {
            Some(p) => ReweightSpec::Multimax(p.clone()),
            None => self.cfg.reweight.clone(),
        }
    }

    /// Flatten all parameters in a fixed order, with named group spans.
    pub fn flatten(&self) -> (Vec<f64>, Vec<(String, std::ops::Range<usize>)>) {
        let mut values = Vec::new();
        let mut spans = Vec::new();
        let push = |name: String,
                    vals: &[f64],
                    values: &mut Vec<f64>,
                    spans: &mut Vec<(String, std::ops::Range<usize>)>| {
            let start = values.len();
            values.extend_from_slice(vals);
            spans.push((name, start..values.len()));
        };
        push("embed".into(), &self.embed.data, &mut values, &mut spans);
        for (i, b) in self.blocks.iter().enumerate() {
            push(
                format!("block{i}.ln1.gamma"),
                &b.ln1.gamma,
                &mut values,
                &mut spans,
            );
            push(
                format!("block{i}.ln1.beta"),
                &b.ln1.beta,
                &mut values,
                &mut spans,
            );
            push(format!("block{i}.wq"), &b.wq.data, &mut values, &mut spans);
            push(format!("block{i}.wk"), &b.wk.data, &mut values, &mut spans);
            push(format!("block{i}.wv"), &b.wv.data, &mut values, &mut spans);
            push(format!("block{i}.wo"), &b.wo.data, &mut values, &mut spans);
            push(
                format!("block{i}.ln2.gamma"),
                &b.ln2.gamma,
                &mut values,
                &mut spans,
            );
            push(
                format!("block{i}.ln2.beta"),
                &b.ln2.beta,
                &mut values,
                &mut spans,
            );
            push(format!("block{i}.w1"), &b.w1.data, &mut values, &mut spans);
            push(format!("block{i}.b1"), &b.b1, &mut values, &mut spans);
            push(format!("block{i}.w2"), &b.w2.data, &mut values, &mut spans);
            push(format!("block{i}.b2"), &b.b2, &mut values, &mut spans);
            if let Some(p) = &b.modulator {
                let (mut tb, mut td, mut bb, mut dd) = (vec![], vec![], vec![], vec![]);
                for o in p.orders() {
                    tb.push(o.t_b);
                    td.push(o.t_d);
                    bb.push(o.b);
                    dd.push(o.d);
                }
                push(
                    format!("block{i}.modulator.t_b"),
                    &tb,
                    &mut values,
                    &mut spans,
                );
                push(
                    format!("block{i}.modulator.t_d"),
                    &td,
                    &mut values,
                    &mut spans,
                );
                push(
                    format!("block{i}.modulator.b"),
                    &bb,
                    &mut values,
                    &mut spans,
                );
                push(
                    format!("block{i}.modulator.d"),
                    &dd,
                    &mut values,
                    &mut spans,
                );
            }
        }
        push("head.w".into(), &self.head_w.data, &mut values, &mut spans);
        push("head.b".into(), &self.head_b, &mut values, &mut spans);
        (values, spans)
    }

    /// Load parameters from the flat layout produced by [`Self::flatten`].
    pub fn unflatten(&mut self, values: &[f64]) {
        let mut pos = 0usize;
        let take = |dst: &mut [f64], pos: &mut usize| {
            dst.copy_from_slice(&values[*pos..*pos + dst.len()]);
            *pos += dst.len();
        };
        take(&mut self.embed.data, &mut pos);
        for b in &mut self.blocks {
            take(&mut b.ln1.gamma, &mut pos);
            take(&mut b.ln1.beta, &mut pos);
            take(&mut b.wq.data, &mut pos);
            take(&mut b.wk.data, &mut pos);
            take(&mut b.wv.data, &mut pos);
            take(&mut b.wo.data, &mut pos);
            take(&mut b.ln2.gamma, &mut pos);
            take(&mut b.ln2.beta, &mut pos);
            take(&mut b.w1.data, &mut pos);
            take(&mut b.b1, &mut pos);
            take(&mut b.w2.data, &mut pos);
            take(&mut b.b2, &mut pos);
            if let Some(p) = &mut b.modulator {
                let n = p.num_orders();
                let mut fields = vec![0.0; 4 * n];
                take(&mut fields, &mut pos);
                for (k, o) in p.orders_mut().iter_mut().enumerate() {
                    o.t_b = fields[k];
                    o.t_d = fields[n + k];
                    o.b = fields[2 * n + k];
                    o.d = fields[3 * n + k];
                }
            }
        }
        take(&mut self.head_w.data, &mut pos);
        take(&mut self.head_b, &mut pos);
        assert_eq!(pos, values.len(), "flat parameter length mismatch");
    }
}

/// Per-layer forward cache for one sample.
struct LayerCache {
    x_in: Mat,
    xhat1: Mat,
    rstd1: Vec<f64>,
    q: Mat,
    k: Mat,
    v: Mat,
    /// Raw attention logits per head.
    scores: Vec<Mat>,
    /// Reweighted attention per head.
    probs: Vec<Mat>,
    /// Concatenated per-head context, pre output projection.
    concat: Mat,
    xhat2: Mat,
    rstd2: Vec<f64>,
    h1: Mat,
}

/// Full forward cache for one sample.
pub struct SampleCache {
    layers: Vec<LayerCache>,
    x_final: Mat,
    pooled: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Attention matrices and token representations captured for diagnostics.
pub struct SampleDiagnostics {
    /// [layer][head]: raw pre-reweighting attention logits, T x T.
    pub scores: Vec<Vec<Mat>>,
    /// [layer][head]: attention probabilities, rows on the simplex.
    pub probs: Vec<Vec<Mat>>,
    /// [layer]: token representations after the block, T x D.
    pub tokens: Vec<Mat>,
    pub logits: Vec<f64>,
}

fn layer_norm_forward(x: &Mat, ln: &LayerNorm) -> (Mat, Mat, Vec<f64>) {
    let (t, d) = (x.rows, x.cols);
    let mut y = Mat::zeros(t, d);
    let mut xhat = Mat::zeros(t, d);
    let mut rstds = Vec::with_capacity(t);
    for i in 0..t {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let rstd = 1.0 / (var + LN_EPS).sqrt();
        for j in 0..d {
            let h = (row[j] - mean) * rstd;
            *xhat.at_mut(i, j) = h;
            *y.at_mut(i, j) = ln.gamma[j] * h + ln.beta[j];
        }
        rstds.push(rstd);
    }
    (y, xhat, rstds)
}

/// dL/dx for a layer norm given dL/dy; accumulates gamma/beta gradients.
fn layer_norm_backward(
    dy: &Mat,
    xhat: &Mat,
    rstd: &[f64],
    ln: &LayerNorm,
    g_ln: &mut LayerNorm,
) -> Mat {
    let (t, d) = (dy.rows, dy.cols);
    let mut dx = Mat::zeros(t, d);
    for i in 0..t {
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for j in 0..d {
            let dyij = dy.at(i, j);
            let h = xhat.at(i, j);
            g_ln.gamma[j] += dyij * h;
            g_ln.beta[j] += dyij;
            let dxh = dyij * ln.gamma[j];
            mean_dxhat += dxh;
            mean_dxhat_xhat += dxh * h;
        }
        mean_dxhat /= d as f64;
        mean_dxhat_xhat /= d as f64;
        for j in 0..d {
            let dxh = dy.at(i, j) * ln.gamma[j];
            *dx.at_mut(i, j) = rstd[i] * (dxh - mean_dxhat - xhat.at(i, j) * mean_dxhat_xhat);
        }
    }
    dx
}

impl Model {
    /// Forward pass for one sample, keeping everything backward needs.
    pub fn forward_cached(&self, tokens: &[usize]) -> Result<SampleCache> {
        let cfg = &self.cfg;
        if tokens.len() != cfg.seq_len {
            return Err(Error::InvalidInput(format!(
                "expected {} tokens, got {}",
                cfg.seq_len,
                tokens.len()
            )));
        }
        let (t, d, heads) = (cfg.seq_len, cfg.model_dim, cfg.heads);
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let mut x = Mat::zeros(t, d);
        for (i, &tok) in tokens.iter().enumerate() {
            if tok >= cfg.vocab {
                return Err(Error::InvalidInput(format!(
                    "token id {tok} outside vocabulary {}",
                    cfg.vocab
                )));
            }
            x.row_mut(i).copy_from_slice(self.embed.row(tok));
        }

        let mut layers = Vec::with_capacity(cfg.depth);
        for (li, block) in self.blocks.iter().enumerate() {
            let spec = self.layer_spec(li);
            let x_in = x.clone();
            let (xn1, xhat1, rstd1) = layer_norm_forward(&x_in, &block.ln1);
            let q = xn1.matmul(&block.wq);
            let k = xn1.matmul(&block.wk);
            let v = xn1.matmul(&block.wv);

            let mut scores = Vec::with_capacity(heads);
            let mut probs = Vec::with_capacity(heads);
            let mut concat = Mat::zeros(t, d);
            for h in 0..heads {
                let (lo, hi) = (h * dh, (h + 1) * dh);
                let qh = q.col_slice(lo, hi);
                let kh = k.col_slice(lo, hi);
                let vh = v.col_slice(lo, hi);
                let mut s = qh.matmul_bt(&kh);
                for val in &mut s.data {
                    *val *= scale;
                }
                let p = reweight_rows(&s, &spec)?;
                let ctx = p.matmul(&vh);
                concat.add_into_cols(lo, &ctx);
                scores.push(s);
                probs.push(p);
            }
            let attn_out = concat.matmul(&block.wo);
            let mut x_mid = x_in.clone();
            x_mid.add_assign(&attn_out);

            let (xn2, xhat2, rstd2) = layer_norm_forward(&x_mid, &block.ln2);
            let mut h1 = xn2.matmul(&block.w1);
            for i in 0..t {
                for (val, b) in h1.row_mut(i).iter_mut().zip(&block.b1) {
                    *val = (*val + b).tanh();
                }
            }
            let mut ffn_out = h1.matmul(&block.w2);
            for i in 0..t {
                for (val, b) in ffn_out.row_mut(i).iter_mut().zip(&block.b2) {
                    *val += b;
                }
            }
            let mut x_out = x_mid.clone();
            x_out.add_assign(&ffn_out);

            layers.push(LayerCache {
                x_in,
                xhat1,
                rstd1,
                q,
                k,
                v,
                scores,
                probs,
                concat,
                xhat2,
                rstd2,
                h1,
            });
            x = x_out;
        }

        let pooled: Vec<f64> = (0..d)
            .map(|j| (0..t).map(|i| x.at(i, j)).sum::<f64>() / t as f64)
            .collect();
        let mut logits = self.head_b.clone();
        for (j, &p) in pooled.iter().enumerate() {
            for (c, logit) in logits.iter_mut().enumerate() {
                *logit += p * self.head_w.at(j, c);
            }
        }
        Ok(SampleCache {
            layers,
            x_final: x,
            pooled,
            logits,
        })
    }

    /// Cross-entropy of the cached logits against a label.
    pub fn loss(cache: &SampleCache, label: usize) -> f64 {
        let z = &cache.logits;
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        lse - z[label]
    }

    /// Backward pass for one sample; accumulates into `grads` (a zeros_like
    /// model) with the given overall weight (e.g. 1/batch).
    pub fn backward(
        &self,
        cache: &SampleCache,
        tokens: &[usize],
        label: usize,
        weight: f64,
        grads: &mut Model,
    ) -> Result<()> {
        let cfg = &self.cfg;
        let (t, d, heads) = (cfg.seq_len, cfg.model_dim, cfg.heads);
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();

        // d loss / d logits = softmax(logits) - onehot(label).
        let z = &cache.logits;
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let zsum: f64 = exps.iter().sum();
        let mut dlogits: Vec<f64> = exps.iter().map(|e| weight * e / zsum).collect();
        dlogits[label] -= weight;

        // Head.
        let mut dpooled = vec![0.0; d];
        for (j, dp) in dpooled.iter_mut().enumerate() {
            for (c, &dl) in dlogits.iter().enumerate() {
                *grads.head_w.at_mut(j, c) += cache.pooled[j] * dl;
                *dp += self.head_w.at(j, c) * dl;
            }
        }
        for (gb, &dl) in grads.head_b.iter_mut().zip(&dlogits) {
            *gb += dl;
        }

        // Mean pool.
        let mut dx = Mat::zeros(t, d);
        for i in 0..t {
            for (j, &dp) in dpooled.iter().enumerate() {
                *dx.at_mut(i, j) = dp / t as f64;
            }
        }

        for (li, block) in self.blocks.iter().enumerate().rev() {
            let lc = &cache.layers[li];
            let g = &mut grads.blocks[li];
            let spec = self.layer_spec(li);

            // FFN: x_out = x_mid + tanh(xn2 w1 + b1) w2 + b2.
            let df = &dx; // gradient of the ffn output
            let mut dh1 = df.matmul_bt(&block.w2);
            let dw2 = lc.h1.at_mul_b(df);
            g.w2.add_assign(&dw2);
            for i in 0..t {
                for (gb, &v) in g.b2.iter_mut().zip(df.row(i)) {
                    *gb += v;
                }
            }
            for i in 0..t {
                for j in 0..cfg.ff_dim {
                    let h = lc.h1.at(i, j);
                    *dh1.at_mut(i, j) *= 1.0 - h * h;
                }
            }
            let xn2 = {
                // Rebuild xn2 from the cached normalized activations.
                let mut m = Mat::zeros(t, d);
                for i in 0..t {
                    for j in 0..d {
                        *m.at_mut(i, j) =
                            block.ln2.gamma[j] * lc.xhat2.at(i, j) + block.ln2.beta[j];
                    }
                }
                m
            };
            let dw1 = xn2.at_mul_b(&dh1);
            g.w1.add_assign(&dw1);
            for i in 0..t {
                for (gb, &v) in g.b1.iter_mut().zip(dh1.row(i)) {
                    *gb += v;
                }
            }
            let dxn2 = dh1.matmul_bt(&block.w1);
            let dx_ln2 = layer_norm_backward(&dxn2, &lc.xhat2, &lc.rstd2, &block.ln2, &mut g.ln2);
            let mut dx_mid = dx.clone();
            dx_mid.add_assign(&dx_ln2);

            // Attention: x_mid = x_in + concat wo.
            let dconcat = dx_mid.matmul_bt(&block.wo);
            let dwo = lc.concat.at_mul_b(&dx_mid);
            g.wo.add_assign(&dwo);

            let mut dq = Mat::zeros(t, d);
            let mut dk = Mat::zeros(t, d);
            let mut dv = Mat::zeros(t, d);
            for h in 0..heads {
                let (lo, hi) = (h * dh, (h + 1) * dh);
                let dctx = dconcat.col_slice(lo, hi);
                let vh = lc.v.col_slice(lo, hi);
                let kh = lc.k.col_slice(lo, hi);
                let qh = lc.q.col_slice(lo, hi);
                let dp = dctx.matmul_bt(&vh);
                let dvh = lc.probs[h].at_mul_b(&dctx);
                dv.add_into_cols(lo, &dvh);

                // Rows of the attention matrix go through the reweighting
                // function independently.
                let mut ds = Mat::zeros(t, t);
                for r in 0..t {
                    let s_row = Scores::from_slice(lc.scores[h].row(r))?;
                    let cot = Scores::from_slice(dp.row(r))?;
                    let pull = vjp(&spec, &s_row, &cot)?;
                    ds.row_mut(r).copy_from_slice(&pull.grad_x);
                    if let (Some(gp), Some(gmod)) = (pull.grad_params, g.modulator.as_mut()) {
                        for (acc, got) in gmod.orders_mut().iter_mut().zip(gp.orders()) {
                            acc.t_b += got.t_b;
                            acc.t_d += got.t_d;
                            acc.b += got.b;
                            acc.d += got.d;
                        }
                    }
                }
                for val in &mut ds.data {
                    *val *= scale;
                }
                let dqh = ds.matmul(&kh);
                let dkh = ds.at_mul_b(&qh);
                dq.add_into_cols(lo, &dqh);
                dk.add_into_cols(lo, &dkh);
            }

            let xn1 = {
                let mut m = Mat::zeros(t, d);
                for i in 0..t {
                    for j in 0..d {
                        *m.at_mut(i, j) =
                            block.ln1.gamma[j] * lc.xhat1.at(i, j) + block.ln1.beta[j];
                    }
                }
                m
            };
            let mut dxn1 = dq.matmul_bt(&block.wq);
            dxn1.add_assign(&dk.matmul_bt(&block.wk));
            dxn1.add_assign(&dv.matmul_bt(&block.wv));
            g.wq.add_assign(&xn1.at_mul_b(&dq));
            g.wk.add_assign(&xn1.at_mul_b(&dk));
            g.wv.add_assign(&xn1.at_mul_b(&dv));

            let dx_ln1 = layer_norm_backward(&dxn1, &lc.xhat1, &lc.rstd1, &block.ln1, &mut g.ln1);
            dx = dx_mid;
            dx.add_assign(&dx_ln1);
        }

        // Embedding rows.
        for (i, &tok) in tokens.iter().enumerate() {
            let row = dx.row(i).to_vec();
            for (gj, v) in grads.embed.row_mut(tok).iter_mut().zip(row) {
                *gj += v;
            }
        }
        Ok(())
    }

    /// Forward pass capturing attention matrices and per-layer token
    /// representations.
    pub fn forward_diagnostics(&self, tokens: &[usize]) -> Result<SampleDiagnostics> {
        let cache = self.forward_cached(tokens)?;
        let mut scores = Vec::with_capacity(self.cfg.depth);
        let mut probs = Vec::with_capacity(self.cfg.depth);
        let mut reps = Vec::with_capacity(self.cfg.depth);
        for (li, lc) in cache.layers.iter().enumerate() {
            scores.push(lc.scores.clone());
            probs.push(lc.probs.clone());
            let next_input = cache
                .layers
                .get(li + 1)
                .map(|n| n.x_in.clone())
                .unwrap_or_else(|| cache.x_final.clone());
            reps.push(next_input);
        }
        Ok(SampleDiagnostics {
            scores,
            probs,
            tokens: reps,
            logits: cache.logits,
        })
    }
}
