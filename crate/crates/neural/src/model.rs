//! Model parameters, the forward graph and the BMD objective.

use std::collections::HashMap;
use std::path::Path;

use mrx_autodiff::{
    read_checkpoint, write_checkpoint, CheckpointTensor, Graph, Real, TensorId,
};
use mrx_chansim::MultiApObservation;
use mrx_phy::PilotMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::config::ModelConfig;
use crate::posenc::positional_encoding_2d;
use crate::token::{tokenize, TokenGrid};
use crate::{NeuralError, Result};

/// Hard limit applied to emitted LLRs before they reach the decoder.
pub const LLR_CLAMP: f64 = 20.0;

#[derive(Debug, Clone)]
struct ParamTensor<R> {
    name: String,
    shape: Vec<usize>,
    data: Vec<R>,
}

/// All learnable tensors in a fixed construction order, plus the cached
/// positional encoding for the configured grid.
#[derive(Debug, Clone)]
pub struct Model<R: Real> {
    pub cfg: ModelConfig,
    params: Vec<ParamTensor<R>>,
    index: HashMap<String, usize>,
    posenc: Vec<R>,
}

/// Tensor ids of the staged parameters inside one [`Graph`], in the
/// model's parameter order.
pub struct GraphParams {
    pub ids: Vec<TensorId>,
}

impl<R: Real> Model<R> {
    /// Initialize with scaled-uniform fan-in weights (`U(±1/sqrt(fan_in))`),
    /// zero biases and unit layer-norm gains.
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let d = cfg.d_model;
        let mut params = Vec::new();
        let mut index = HashMap::new();

        let weight = |params: &mut Vec<ParamTensor<R>>,
                          index: &mut HashMap<String, usize>,
                          name: String,
                          rows: usize,
                          cols: usize,
                          rng: &mut ChaCha12Rng| {
            let bound = 1.0 / (rows as f64).sqrt();
            let data: Vec<R> = (0..rows * cols)
                .map(|_| R::from_f64(rng.gen_range(-bound..bound)))
                .collect();
            index.insert(name.clone(), params.len());
            params.push(ParamTensor {
                name,
                shape: vec![rows, cols],
                data,
            });
        };
        let vecp = |params: &mut Vec<ParamTensor<R>>,
                        index: &mut HashMap<String, usize>,
                        name: String,
                        len: usize,
                        fill: f64| {
            index.insert(name.clone(), params.len());
            params.push(ParamTensor {
                name,
                shape: vec![len],
                data: vec![R::from_f64(fill); len],
            });
        };

        weight(&mut params, &mut index, "embed.w".into(), 3, d, &mut rng);
        vecp(&mut params, &mut index, "embed.b".into(), d, 0.0);
        for l in 0..cfg.layers {
            vecp(&mut params, &mut index, format!("enc{l}.ln1.g"), d, 1.0);
            vecp(&mut params, &mut index, format!("enc{l}.ln1.b"), d, 0.0);
            for proj in ["q", "k", "v", "o"] {
                weight(&mut params, &mut index, format!("enc{l}.attn.w{proj}"), d, d, &mut rng);
                vecp(&mut params, &mut index, format!("enc{l}.attn.b{proj}"), d, 0.0);
            }
            vecp(&mut params, &mut index, format!("enc{l}.ln2.g"), d, 1.0);
            vecp(&mut params, &mut index, format!("enc{l}.ln2.b"), d, 0.0);
            weight(&mut params, &mut index, format!("enc{l}.ffn.w1"), d, cfg.ff, &mut rng);
            vecp(&mut params, &mut index, format!("enc{l}.ffn.b1"), cfg.ff, 0.0);
            weight(&mut params, &mut index, format!("enc{l}.ffn.w2"), cfg.ff, d, &mut rng);
            vecp(&mut params, &mut index, format!("enc{l}.ffn.b2"), d, 0.0);
        }
        for proj in ["q", "k", "v", "o"] {
            weight(&mut params, &mut index, format!("cross.w{proj}"), d, d, &mut rng);
            vecp(&mut params, &mut index, format!("cross.b{proj}"), d, 0.0);
        }
        vecp(&mut params, &mut index, "cross.ln.g".into(), d, 1.0);
        vecp(&mut params, &mut index, "cross.ln.b".into(), d, 0.0);
        weight(&mut params, &mut index, "head.w1".into(), d, cfg.ff, &mut rng);
        vecp(&mut params, &mut index, "head.b1".into(), cfg.ff, 0.0);
        weight(&mut params, &mut index, "head.w2".into(), cfg.ff, cfg.m, &mut rng);
        vecp(&mut params, &mut index, "head.b2".into(), cfg.m, 0.0);

        let posenc = positional_encoding_2d(cfg.n_c, cfg.n_s, d)?
            .into_iter()
            .map(R::from_f64)
            .collect();
        Ok(Model {
            cfg,
            params,
            index,
            posenc,
        })
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.params.iter().map(|p| p.data.len()).collect()
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn get_param(&self, name: &str) -> Option<&[R]> {
        self.index.get(name).map(|&i| self.params[i].data.as_slice())
    }

    pub fn set_param(&mut self, name: &str, data: Vec<R>) -> Result<()> {
        let i = *self
            .index
            .get(name)
            .ok_or_else(|| NeuralError::Shape(format!("no parameter named {name}")))?;
        if data.len() != self.params[i].data.len() {
            return Err(NeuralError::Shape(format!(
                "parameter {name}: {} values for shape {:?}",
                data.len(),
                self.params[i].shape
            )));
        }
        self.params[i].data = data;
        Ok(())
    }

    /// Flat view of all parameters in order (for optimizer steps).
    pub fn params_flat_mut(&mut self) -> Vec<&mut [R]> {
        self.params.iter_mut().map(|p| p.data.as_mut_slice()).collect()
    }

    /// Flatten every parameter into one vector (gradient-check helper).
    pub fn flatten(&self) -> Vec<R> {
        self.params.iter().flat_map(|p| p.data.iter().copied()).collect()
    }

    /// Overwrite all parameters from one flat vector in order.
    pub fn unflatten(&mut self, flat: &[R]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(NeuralError::Shape(format!(
                "flat vector has {} values for {} parameters",
                flat.len(),
                self.n_params()
            )));
        }
        let mut off = 0;
        for p in &mut self.params {
            let n = p.data.len();
            p.data.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// Push every parameter into the graph, as grad-requiring leaves when
    /// `trainable`.
    pub fn stage_params(&self, g: &mut Graph<R>, trainable: bool) -> Result<GraphParams> {
        let mut ids = Vec::with_capacity(self.params.len());
        for p in &self.params {
            let id = if trainable {
                g.param(&p.shape, p.data.clone())?
            } else {
                g.input(&p.shape, p.data.clone())?
            };
            ids.push(id);
        }
        Ok(GraphParams { ids })
    }

    fn pid(&self, gp: &GraphParams, name: &str) -> TensorId {
        gp.ids[self.index[name]]
    }

    /// Multi-head attention core shared by the encoder and the fusion
    /// block: `q`, `k`, `v` are `[*, d_model]` flattened to `[rows, d]`;
    /// the batched layout is built by the callers.
    fn mha_rows(
        &self,
        g: &mut Graph<R>,
        q: TensorId,
        k_batched: TensorId,
        v_batched: TensorId,
    ) -> Result<TensorId> {
        let dk = self.cfg.d_k();
        let kt = {
            let rank = g.shape(k_batched).len();
            debug_assert_eq!(rank, 3);
            g.permute(k_batched, &[0, 2, 1])?
        };
        let scores = g.matmul(q, kt)?;
        let scaled = g.scale(scores, R::from_f64(1.0 / (dk as f64).sqrt()))?;
        let probs = g.softmax_rows(scaled)?;
        Ok(g.matmul(probs, v_batched)?)
    }

    fn linear(
        &self,
        g: &mut Graph<R>,
        gp: &GraphParams,
        x: TensorId,
        w: &str,
        b: &str,
    ) -> Result<TensorId> {
        let wi = self.pid(gp, w);
        let bi = self.pid(gp, b);
        let y = g.matmul(x, wi)?;
        Ok(g.bias_add(y, bi)?)
    }

    /// Embed one AP's standardized tokens and run the shared encoder
    /// stack. Returns the `[n_tokens, d_model]` latent sequence.
    pub fn encoder_forward(
        &self,
        g: &mut Graph<R>,
        gp: &GraphParams,
        token_features: &[R],
    ) -> Result<TensorId> {
        let t = self.cfg.n_tokens();
        let d = self.cfg.d_model;
        let h = self.cfg.heads;
        let dk = self.cfg.d_k();
        if token_features.len() != t * 3 {
            return Err(NeuralError::Shape(format!(
                "{} token features for {t} tokens",
                token_features.len()
            )));
        }
        let x = g.input(&[t, 3], token_features.to_vec())?;
        let mut z = self.linear(g, gp, x, "embed.w", "embed.b")?;
        z = g.add_const(z, &self.posenc)?;
        for l in 0..self.cfg.layers {
            let hn = {
                let gain = self.pid(gp, &format!("enc{l}.ln1.g"));
                let bias = self.pid(gp, &format!("enc{l}.ln1.b"));
                g.layer_norm(z, gain, bias)?
            };
            let q = self.linear(g, gp, hn, &format!("enc{l}.attn.wq"), &format!("enc{l}.attn.bq"))?;
            let k = self.linear(g, gp, hn, &format!("enc{l}.attn.wk"), &format!("enc{l}.attn.bk"))?;
            let v = self.linear(g, gp, hn, &format!("enc{l}.attn.wv"), &format!("enc{l}.attn.bv"))?;
            // [t,d] -> [heads, t, dk]
            let to_heads = |g: &mut Graph<R>, x: TensorId| -> Result<TensorId> {
                let r = g.reshape(x, &[t, h, dk])?;
                Ok(g.permute(r, &[1, 0, 2])?)
            };
            let qh = to_heads(g, q)?;
            let kh = to_heads(g, k)?;
            let vh = to_heads(g, v)?;
            let att = self.mha_rows(g, qh, kh, vh)?;
            let att = g.permute(att, &[1, 0, 2])?;
            let att = g.reshape(att, &[t, d])?;
            let proj =
                self.linear(g, gp, att, &format!("enc{l}.attn.wo"), &format!("enc{l}.attn.bo"))?;
            z = g.add(z, proj)?;
            let hn2 = {
                let gain = self.pid(gp, &format!("enc{l}.ln2.g"));
                let bias = self.pid(gp, &format!("enc{l}.ln2.b"));
                g.layer_norm(z, gain, bias)?
            };
            let f1 = self.linear(g, gp, hn2, &format!("enc{l}.ffn.w1"), &format!("enc{l}.ffn.b1"))?;
            let f1 = g.relu(f1)?;
            let f2 = self.linear(g, gp, f1, &format!("enc{l}.ffn.w2"), &format!("enc{l}.ffn.b2"))?;
            z = g.add(z, f2)?;
        }
        Ok(z)
    }

    /// Token-wise anchor-query fusion of the per-AP latent sequences
    /// (`latents[0]` is the anchor). Returns `[n_tokens, d_model]`.
    pub fn cross_attention_fuse(
        &self,
        g: &mut Graph<R>,
        gp: &GraphParams,
        latents: &[TensorId],
    ) -> Result<TensorId> {
        if latents.is_empty() {
            return Err(NeuralError::Shape("no AP latents to fuse".into()));
        }
        let n_r = latents.len();
        let t = self.cfg.n_tokens();
        let d = self.cfg.d_model;
        let h = self.cfg.heads;
        let dk = self.cfg.d_k();
        let anchor = latents[0];
        let q = self.linear(g, gp, anchor, "cross.wq", "cross.bq")?;
        let mut ks = Vec::with_capacity(n_r);
        let mut vs = Vec::with_capacity(n_r);
        for &z in latents {
            ks.push(self.linear(g, gp, z, "cross.wk", "cross.bk")?);
            vs.push(self.linear(g, gp, z, "cross.wv", "cross.bv")?);
        }
        // [n_r, t, d] -> [t*heads, n_r, dk] so every (position, head) pair
        // attends over the n_r-token AP axis
        let to_batch = |g: &mut Graph<R>, parts: &[TensorId]| -> Result<TensorId> {
            let s = g.stack0(parts)?;
            let r = g.reshape(s, &[n_r, t, h, dk])?;
            let p = g.permute(r, &[1, 2, 0, 3])?;
            Ok(g.reshape(p, &[t * h, n_r, dk])?)
        };
        let kb = to_batch(g, &ks)?;
        let vb = to_batch(g, &vs)?;
        // [t, d] is contiguous as [t*heads, 1, dk]
        let qb = g.reshape(q, &[t * h, 1, dk])?;
        let att = self.mha_rows(g, qb, kb, vb)?;
        let att = g.reshape(att, &[t, d])?;
        let proj = self.linear(g, gp, att, "cross.wo", "cross.bo")?;
        let res = g.add(anchor, proj)?;
        let gain = self.pid(gp, "cross.ln.g");
        let bias = self.pid(gp, "cross.ln.b");
        Ok(g.layer_norm(res, gain, bias)?)
    }

    /// MLP head over the selected (data-RE) token rows: `[rows, m]` logits
    /// read directly as LLRs.
    pub fn head_forward(
        &self,
        g: &mut Graph<R>,
        gp: &GraphParams,
        fused: TensorId,
        data_rows: &[usize],
    ) -> Result<TensorId> {
        let sel = g.gather_rows(fused, data_rows)?;
        let h1 = self.linear(g, gp, sel, "head.w1", "head.b1")?;
        let h1 = g.relu(h1)?;
        Ok(self.linear(g, gp, h1, "head.w2", "head.b2")?)
    }

    /// Full forward pass: encode every AP with the shared weights, fuse,
    /// and map data-RE rows to logits.
    pub fn build_forward(
        &self,
        g: &mut Graph<R>,
        tokens: &[TokenGrid],
        data_rows: &[usize],
        trainable: bool,
    ) -> Result<(TensorId, GraphParams)> {
        let gp = self.stage_params(g, trainable)?;
        let mut latents = Vec::with_capacity(tokens.len());
        for tg in tokens {
            let feats: Vec<R> = tg.x.iter().map(|&v| R::from_f64(v)).collect();
            latents.push(self.encoder_forward(g, &gp, &feats)?);
        }
        let fused = self.cross_attention_fuse(g, &gp, &latents)?;
        let logits = self.head_forward(g, &gp, fused, data_rows)?;
        Ok((logits, gp))
    }

    /// Append the BMD objective to the graph:
    /// `loss = (1/(n ln2)) Σ softplus(-s_i L_i)` with `s_i = 2c_i - 1`.
    pub fn bmd_loss_graph(
        &self,
        g: &mut Graph<R>,
        logits: TensorId,
        bits: &[u8],
    ) -> Result<TensorId> {
        let n = g.data(logits).len();
        if bits.len() != n {
            return Err(NeuralError::Shape(format!(
                "{} bits for {n} logits",
                bits.len()
            )));
        }
        let neg_signs: Vec<R> = bits
            .iter()
            .map(|&c| R::from_f64(if c == 1 { -1.0 } else { 1.0 }))
            .collect();
        let z = g.mul_const(logits, &neg_signs)?;
        let sp = g.softplus(z)?;
        let total = g.sum_all(sp)?;
        Ok(g.scale(total, R::from_f64(1.0 / (n as f64 * std::f64::consts::LN_2)))?)
    }

    /// Deterministic inference: fused LLRs over the data REs in fill
    /// order, clamped to ±[`LLR_CLAMP`].
    pub fn infer_llrs(&self, obs: &MultiApObservation, mask: &PilotMask) -> Result<Vec<f64>> {
        let tokens = tokenize(obs, &self.cfg)?;
        let rows = data_rows(mask);
        let mut g = Graph::new();
        let (logits, _) = self.build_forward(&mut g, &tokens, &rows, false)?;
        Ok(g.data(logits)
            .iter()
            .map(|&x| x.to_f64().clamp(-LLR_CLAMP, LLR_CLAMP))
            .collect())
    }

    /// Write all parameters plus a config header tensor.
    pub fn save(&self, path: &Path) -> Result<()> {
        let c = &self.cfg;
        let mut tensors = vec![CheckpointTensor {
            name: "__config".into(),
            dims: vec![10],
            data: vec![
                c.d_model as f32,
                c.heads as f32,
                c.layers as f32,
                c.ff as f32,
                c.m as f32,
                c.max_n_r as f32,
                c.n_c as f32,
                c.n_s as f32,
                c.sigma2_scale as f32,
                c.sigma2_shift as f32,
            ],
        }];
        for p in &self.params {
            tensors.push(CheckpointTensor {
                name: p.name.clone(),
                dims: p.shape.clone(),
                data: p.data.iter().map(|&x| x.to_f64() as f32).collect(),
            });
        }
        write_checkpoint(path, &tensors)?;
        Ok(())
    }
}

impl Model<f32> {
    /// Rebuild a model from a checkpoint written by [`Model::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let tensors = read_checkpoint(path)?;
        let meta = tensors
            .iter()
            .find(|t| t.name == "__config")
            .ok_or_else(|| NeuralError::BadCheckpoint("missing __config tensor".into()))?;
        if meta.data.len() != 10 {
            return Err(NeuralError::BadCheckpoint("malformed __config".into()));
        }
        let cfg = ModelConfig {
            d_model: meta.data[0] as usize,
            heads: meta.data[1] as usize,
            layers: meta.data[2] as usize,
            ff: meta.data[3] as usize,
            m: meta.data[4] as usize,
            max_n_r: meta.data[5] as usize,
            n_c: meta.data[6] as usize,
            n_s: meta.data[7] as usize,
            sigma2_scale: meta.data[8] as f64,
            sigma2_shift: meta.data[9] as f64,
        };
        let mut model = Model::new(cfg, 0)?;
        for t in tensors.iter().filter(|t| t.name != "__config") {
            let i = *model.index.get(&t.name).ok_or_else(|| {
                NeuralError::BadCheckpoint(format!("unknown tensor {}", t.name))
            })?;
            if model.params[i].shape != t.dims {
                return Err(NeuralError::BadCheckpoint(format!(
                    "tensor {} has dims {:?}, expected {:?}",
                    t.name, t.dims, model.params[i].shape
                )));
            }
            model.params[i].data = t.data.clone();
        }
        Ok(model)
    }
}

/// Token-row indices of the data REs, in fill order.
pub fn data_rows(mask: &PilotMask) -> Vec<usize> {
    mask.data_positions()
        .iter()
        .map(|&(f, t)| t * mask.n_c + f)
        .collect()
}

/// Standalone BMD objective on plain LLRs. Returns `(loss, R_BMD)` with
/// `R_BMD = 1 - loss` exactly.
pub fn bmd_loss(llrs: &[f64], bits: &[u8]) -> Result<(f64, f64)> {
    if llrs.len() != bits.len() {
        return Err(NeuralError::Shape(format!(
            "{} LLRs vs {} bits",
            llrs.len(),
            bits.len()
        )));
    }
    if llrs.is_empty() {
        return Err(NeuralError::Shape("empty LLR vector".into()));
    }
    let mut total = 0.0;
    for (&l, &c) in llrs.iter().zip(bits) {
        let s = if c == 1 { 1.0 } else { -1.0 };
        let x = -s * l;
        total += x.max(0.0) + (-x.abs()).exp().ln_1p();
    }
    let loss = total / (llrs.len() as f64 * std::f64::consts::LN_2);
    Ok((loss, 1.0 - loss))
}
