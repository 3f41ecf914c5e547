//! Encoder-only Transformer mapping a syndrome to per-bit error
//! probabilities, and its supervised training loop.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use symdec_autodiff::nn::{LayerNorm, Linear};
use symdec_autodiff::{Bound, Graph, Optimizer, ParamId, ParamStore, Real, Tensor, Var};

use crate::dataset::Dataset;
use crate::error::{check_len, CoreError, Result};
use crate::seeding::{derived_rng, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Readout {
    MeanPool,
    Flatten,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderArch {
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub ff_width: usize,
    pub readout: Readout,
}

impl Default for DecoderArch {
    fn default() -> Self {
        Self {
            d_model: 128,
            heads: 8,
            layers: 4,
            ff_width: 4 * 128,
            readout: Readout::MeanPool,
        }
    }
}

#[derive(Clone, Debug)]
struct EncoderLayer {
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
    ln1: LayerNorm,
    ff1: Linear,
    ff2: Linear,
    ln2: LayerNorm,
}

/// Parameter ids and shape of a decoder, separate from the values so a
/// forward pass can be built while the store is mutably borrowed.
#[derive(Clone, Debug)]
pub struct DecoderLayout {
    arch: DecoderArch,
    n: usize,
    seq_len: usize,
    value0: ParamId,
    value1: ParamId,
    position: ParamId,
    layers: Vec<EncoderLayer>,
    head: Linear,
}

#[derive(Clone, Debug)]
pub struct TransformerDecoder {
    pub store: ParamStore<f32>,
    layout: DecoderLayout,
}

impl TransformerDecoder {
    /// Model for a code with `n` qubits and `seq_len = n − 1` syndrome bits.
    pub fn new<R: Rng + ?Sized>(arch: &DecoderArch, n: usize, seq_len: usize, rng: &mut R) -> Result<Self> {
        let d = arch.d_model;
        if d == 0 || arch.heads == 0 || !d.is_multiple_of(arch.heads) || arch.ff_width == 0 || n == 0 || seq_len == 0 {
            return Err(CoreError::Config(format!("invalid decoder architecture {arch:?}")));
        }
        let mut store = ParamStore::new();
        let uniform = |shape: &[usize], bound: f64, rng: &mut R| {
            Tensor::from_fn(shape, |_| rng.gen_range(-bound..bound) as f32)
        };
        let value0 = store.add("embed.value0", uniform(&[d], 1.0, rng))?;
        let value1 = store.add("embed.value1", uniform(&[d], 1.0, rng))?;
        let position = store.add("embed.position", uniform(&[seq_len, d], 1.0, rng))?;
        let mut layers = Vec::with_capacity(arch.layers);
        for l in 0..arch.layers {
            let name = |s: &str| format!("layer{l}.{s}");
            layers.push(EncoderLayer {
                q: Linear::new(&mut store, &name("query"), d, d, rng)?,
                k: Linear::new(&mut store, &name("key"), d, d, rng)?,
                v: Linear::new(&mut store, &name("value"), d, d, rng)?,
                o: Linear::new(&mut store, &name("attn_out"), d, d, rng)?,
                ln1: LayerNorm::new(&mut store, &name("norm1"), d)?,
                ff1: Linear::new(&mut store, &name("ff1"), d, arch.ff_width, rng)?,
                ff2: Linear::new(&mut store, &name("ff2"), arch.ff_width, d, rng)?,
                ln2: LayerNorm::new(&mut store, &name("norm2"), d)?,
            });
        }
        let head_in = match arch.readout {
            Readout::MeanPool => d,
            Readout::Flatten => d * seq_len,
        };
        let head = Linear::new(&mut store, "head", head_in, 2 * n, rng)?;
        Ok(Self {
            store,
            layout: DecoderLayout {
                arch: arch.clone(),
                n,
                seq_len,
                value0,
                value1,
                position,
                layers,
                head,
            },
        })
    }

    /// Rebuilds a model of the given shape around checkpointed parameters.
    pub fn from_store(arch: &DecoderArch, n: usize, seq_len: usize, store: &ParamStore<f32>) -> Result<Self> {
        let mut rng = derived_rng(0, &[]);
        let mut model = Self::new(arch, n, seq_len, &mut rng)?;
        model.store.copy_values_from(store)?;
        Ok(model)
    }

    pub fn layout(&self) -> &DecoderLayout {
        &self.layout
    }

    pub fn arch(&self) -> &DecoderArch {
        &self.layout.arch
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn seq_len(&self) -> usize {
        self.layout.seq_len
    }

    /// Output head weights, exposed for tests and diagnostics.
    pub fn head(&self) -> &Linear {
        &self.layout.head
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, syndromes: Var) -> Result<Var> {
        self.layout.forward(g, p, syndromes)
    }

    /// Batched inference on row-major `B × (n−1)` syndromes.
    pub fn decode_batch(&self, syndromes: &[f32]) -> Result<Vec<f32>> {
        let l = self.seq_len();
        if syndromes.is_empty() || !syndromes.len().is_multiple_of(l) {
            return Err(CoreError::Dimension { expected: l, found: syndromes.len() });
        }
        let mut out = Vec::with_capacity(syndromes.len() / l * 2 * self.n());
        for chunk in syndromes.chunks(INFERENCE_CHUNK * l) {
            let mut g = Graph::new();
            let p = self.store.bind_frozen(&mut g);
            let x = g.input(&[chunk.len() / l, l], chunk.to_vec())?;
            let y = self.forward(&mut g, &p, x)?;
            out.extend_from_slice(g.value(y));
        }
        Ok(out)
    }

    /// Single syndrome (binary or real) → `2n` probabilities.
    pub fn decode(&self, m: &[f64]) -> Result<Vec<f64>> {
        check_len(self.seq_len(), m.len())?;
        let x: Vec<f32> = m.iter().map(|&v| v as f32).collect();
        Ok(self.decode_batch(&x)?.into_iter().map(f64::from).collect())
    }
}

impl DecoderLayout {
    /// Forward pass: `syndromes` of shape `[B, n−1]` → probabilities `[B, 2n]`.
    pub fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, syndromes: Var) -> Result<Var> {
        let shape = g.shape(syndromes).to_vec();
        if shape.len() != 2 || shape[1] != self.seq_len {
            return Err(CoreError::Dimension {
                expected: self.seq_len,
                found: *shape.last().unwrap_or(&0),
            });
        }
        let (b, l, d) = (shape[0], self.seq_len, self.arch.d_model);
        // Token embedding interpolates between the two bit embeddings, so real
        // syndromes in [0, 1] are accepted as well as binary ones.
        let v0 = p.var(self.value0);
        let delta = g.sub(p.var(self.value1), v0)?;
        let delta = g.reshape(delta, &[1, d])?;
        let s = g.reshape(syndromes, &[b * l, 1])?;
        let tok = g.matmul(s, delta)?;
        let tok = g.add(tok, v0)?;
        let tok = g.reshape(tok, &[b, l, d])?;
        let mut x = g.add(tok, p.var(self.position))?;
        let heads = self.arch.heads;
        let scale = 1.0 / ((d / heads) as f64).sqrt();
        for layer in &self.layers {
            let q = layer.q.forward(g, p, x)?;
            let k = layer.k.forward(g, p, x)?;
            let v = layer.v.forward(g, p, x)?;
            let scores = g.head_scores(q, k, heads)?;
            let scores = g.scale(scores, scale);
            let attn = g.softmax(scores, 3)?;
            let mixed = g.head_mix(attn, v, heads)?;
            let o = layer.o.forward(g, p, mixed)?;
            let r = g.add(x, o)?;
            x = layer.ln1.forward(g, p, r)?;
            let h = layer.ff1.forward(g, p, x)?;
            let h = g.selu(h);
            let h = layer.ff2.forward(g, p, h)?;
            let r = g.add(x, h)?;
            x = layer.ln2.forward(g, p, r)?;
        }
        let pooled = match self.arch.readout {
            Readout::MeanPool => g.mean(x, 1)?,
            Readout::Flatten => g.reshape(x, &[b, l * d])?,
        };
        let logits = self.head.forward(g, p, pooled)?;
        Ok(g.sigmoid(logits))
    }
}

const INFERENCE_CHUNK: usize = 250;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub arch: DecoderArch,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub batch: usize,
    /// Gradients of micro-batches are accumulated into one optimizer step.
    pub micro_batch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Keep training past `epochs` until test loss stops improving.
    pub to_convergence: bool,
    pub patience: usize,
    pub max_epochs: usize,
}

impl DecoderConfig {
    pub fn full(epochs: usize) -> Self {
        Self {
            arch: DecoderArch::default(),
            train_pairs: 1_000_000,
            test_pairs: 100_000,
            batch: 1000,
            micro_batch: 250,
            epochs,
            lr: 1e-4,
            seed: 0,
            to_convergence: false,
            patience: 5,
            max_epochs: 500,
        }
    }

    pub fn desk() -> Self {
        Self {
            train_pairs: 100_000,
            test_pairs: 10_000,
            ..Self::full(15)
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.micro_batch == 0 || self.epochs == 0 || self.train_pairs == 0 {
            return Err(CoreError::Config("decoder sizes must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(CoreError::Config("decoder learning rate must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderEpoch {
    pub epoch: usize,
    pub train_bce: f64,
    pub test_bce: f64,
}

/// Mean BCE of the model over a dataset.
pub fn evaluate_bce(model: &TransformerDecoder, data: &Dataset) -> Result<f64> {
    let idx: Vec<usize> = (0..data.len()).collect();
    let eps = symdec_autodiff::BCE_EPSILON as f32;
    let mut total = 0.0f64;
    for chunk in idx.chunks(INFERENCE_CHUNK * 4) {
        let pred = model.decode_batch(&data.syndrome_matrix(chunk))?;
        let target = data.error_matrix(chunk);
        total += pred
            .iter()
            .zip(&target)
            .map(|(&p, &t)| {
                let p = p.clamp(eps, 1.0 - eps) as f64;
                -(t as f64 * p.ln() + (1.0 - t as f64) * (1.0 - p).ln())
            })
            .sum::<f64>();
    }
    Ok(total / (data.len() * 2 * model.n()) as f64)
}

/// Runs one optimizer step over `idx`, accumulating micro-batch gradients.
/// `loss_fn` records the per-micro-batch mean loss on the graph.
pub(crate) fn accumulate_step(
    store: &mut ParamStore<f32>,
    opt: &mut Optimizer,
    idx: &[usize],
    micro: usize,
    mut loss_fn: impl FnMut(&mut Graph<f32>, &Bound, &[usize]) -> Result<Var>,
) -> Result<f64> {
    store.zero_grad();
    let mut total = 0.0;
    for chunk in idx.chunks(micro) {
        let mut g = Graph::new();
        let p = store.bind(&mut g);
        let loss = loss_fn(&mut g, &p, chunk)?;
        let l = g.value(loss)[0] as f64;
        if !l.is_finite() {
            return Ok(f64::NAN);
        }
        total += l * chunk.len() as f64;
        let weighted = g.scale(loss, chunk.len() as f64 / idx.len() as f64);
        let grads = g.backward(weighted)?;
        store.accumulate(&p, &grads)?;
    }
    opt.step(store)?;
    Ok(total / idx.len() as f64)
}

pub fn train_decoder(
    train: &Dataset,
    test: &Dataset,
    cfg: &DecoderConfig,
    mut on_epoch: impl FnMut(&DecoderEpoch),
) -> Result<(TransformerDecoder, Vec<DecoderEpoch>)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(CoreError::Config("empty training set".into()));
    }
    let n = train.n;
    let m = train.pairs[0].syndrome.len();
    let mut model = TransformerDecoder::new(&cfg.arch, n, m, &mut derived_rng(cfg.seed, &[stream::DECODER_INIT]))?;
    let mut opt = Optimizer::radam(cfg.lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log: Vec<DecoderEpoch> = Vec::new();
    let (mut best, mut stale) = (f64::INFINITY, 0usize);
    let limit = if cfg.to_convergence { cfg.max_epochs.max(cfg.epochs) } else { cfg.epochs };
    for epoch in 1..=limit {
        order.shuffle(&mut derived_rng(cfg.seed, &[stream::DECODER_SHUFFLE, epoch as u64]));
        let layout = model.layout.clone();
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch) {
            let l = accumulate_step(&mut model.store, &mut opt, batch, cfg.micro_batch, |g, p, idx| {
                let s = g.input(&[idx.len(), m], train.syndrome_matrix(idx))?;
                let t = g.input(&[idx.len(), 2 * n], train.error_matrix(idx))?;
                let y = layout.forward(g, p, s)?;
                Ok(g.bce(y, t)?)
            })?;
            if !l.is_finite() {
                return Err(CoreError::NonFinite { stage: "decoder training", epoch });
            }
            total += l * batch.len() as f64;
        }
        let test_bce = if test.is_empty() { f64::NAN } else { evaluate_bce(&model, test)? };
        let entry = DecoderEpoch {
            epoch,
            train_bce: total / train.len() as f64,
            test_bce,
        };
        on_epoch(&entry);
        log.push(entry);
        if epoch >= cfg.epochs && cfg.to_convergence {
            if test_bce < best {
                best = test_bce;
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        } else if test_bce < best {
            best = test_bce;
        }
    }
    Ok((model, log))
}
