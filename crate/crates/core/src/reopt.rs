//! Oracle-driven fine-tuning of a trained decoder.
//!
//! The residual `d = |decode(m) − e|` is pushed through a frozen syndrome
//! oracle and penalised with BCE against the all-zero syndrome, so any
//! correction equivalent to `e` up to a stabilizer is rewarded.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use symdec_autodiff::{Bound, Graph, Optimizer, ParamStore, Real, Tensor, Var};
use symdec_codes::CheckMatrix;

use crate::dataset::Dataset;
use crate::decoder::{accumulate_step, DecoderLayout, TransformerDecoder};
use crate::error::{check_len, CoreError, Result};
use crate::oracle::{coefficient_matrix, exact_f_graph, Oracle, OracleMlp};
use crate::seeding::{derived_rng, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReoptConfig {
    pub batch: usize,
    pub micro_batch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl ReoptConfig {
    pub fn full() -> Self {
        Self {
            batch: 1000,
            micro_batch: 250,
            epochs: 75,
            lr: 1e-7,
            seed: 0,
        }
    }

    pub fn desk() -> Self {
        Self { epochs: 20, ..Self::full() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReoptEpoch {
    pub epoch: usize,
    pub loss: f64,
}

/// An oracle placed on a graph. The MLP variant holds its frozen binding so
/// the contract check can confirm no gradient reached its weights.
pub enum OracleBinding<'a, T: Real> {
    Exact(Tensor<T>),
    Mlp(&'a OracleMlp, Bound),
}

impl<'a, T: Real> OracleBinding<'a, T> {
    /// `mlp_params` must be the oracle's store cast to `T` (for `T = f32`,
    /// the store itself).
    pub fn bind(g: &mut Graph<T>, code: &CheckMatrix, oracle: &'a Oracle, mlp_params: Option<&ParamStore<T>>) -> Result<Self> {
        match oracle {
            Oracle::Exact => Ok(Self::Exact(coefficient_matrix(code))),
            Oracle::Mlp(mlp) => {
                check_len(2 * code.n(), mlp.input_dim())?;
                check_len(code.num_rows(), mlp.output_dim())?;
                let params = mlp_params.ok_or_else(|| CoreError::Config("MLP oracle parameters not supplied".into()))?;
                Ok(Self::Mlp(mlp, params.bind_frozen(g)))
            }
        }
    }

    pub fn apply(&self, g: &mut Graph<T>, x: Var) -> Result<Var> {
        match self {
            Self::Exact(c) => exact_f_graph(g, c, x),
            Self::Mlp(mlp, p) => mlp.forward(g, p, x),
        }
    }

    /// Fails if any oracle weight received a gradient.
    pub fn check_frozen(&self, grads: &symdec_autodiff::Gradients<T>) -> Result<()> {
        if let Self::Mlp(_, p) = self {
            if p.vars().iter().any(|&v| grads.get(v).is_some()) {
                return Err(CoreError::Contract("oracle weights received gradients during re-optimization".into()));
            }
        }
        Ok(())
    }
}

/// Records the composite loss `BCE(oracle(|decode(m) − e|), 0)`.
pub fn composite_loss<T: Real>(
    g: &mut Graph<T>,
    layout: &DecoderLayout,
    dec: &Bound,
    oracle: &OracleBinding<'_, T>,
    syndromes: Var,
    errors: Var,
) -> Result<Var> {
    let pred = layout.forward(g, dec, syndromes)?;
    let diff = g.sub(pred, errors)?;
    let residual = g.abs(diff);
    let s_hat = oracle.apply(g, residual)?;
    let zeros = g.constant(&Tensor::zeros(g.shape(s_hat)));
    Ok(g.bce(s_hat, zeros)?)
}

/// Mean composite loss over a dataset without updating anything.
pub fn evaluate_reopt_loss(code: &CheckMatrix, decoder: &TransformerDecoder, oracle: &Oracle, data: &Dataset) -> Result<f64> {
    let (m, n2) = (decoder.seq_len(), 2 * decoder.n());
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut total = 0.0;
    for chunk in idx.chunks(500) {
        let mut g = Graph::new();
        let p = decoder.store.bind_frozen(&mut g);
        let ob = OracleBinding::bind(&mut g, code, oracle, mlp_store(oracle))?;
        let s = g.input(&[chunk.len(), m], data.syndrome_matrix(chunk))?;
        let e = g.input(&[chunk.len(), n2], data.error_matrix(chunk))?;
        let l = composite_loss(&mut g, decoder.layout(), &p, &ob, s, e)?;
        total += g.value(l)[0] as f64 * chunk.len() as f64;
    }
    Ok(total / data.len() as f64)
}

fn mlp_store(oracle: &Oracle) -> Option<&ParamStore<f32>> {
    match oracle {
        Oracle::Exact => None,
        Oracle::Mlp(mlp) => Some(&mlp.store),
    }
}

/// Fine-tunes `decoder` in place. Each epoch visits the dataset in an order
/// reshuffled from the run seed; the logged loss is the mean over the
/// epoch's batches, measured before each update. On a non-finite loss the
/// decoder is restored to the parameters at the start of the failing epoch.
pub fn run_reopt(
    code: &CheckMatrix,
    decoder: &mut TransformerDecoder,
    oracle: &Oracle,
    data: &Dataset,
    cfg: &ReoptConfig,
    mut on_epoch: impl FnMut(&ReoptEpoch),
) -> Result<Vec<ReoptEpoch>> {
    if cfg.batch == 0 || cfg.micro_batch == 0 || cfg.epochs == 0 {
        return Err(CoreError::Config("re-optimization sizes must be positive".into()));
    }
    if !(cfg.lr.is_finite() && cfg.lr >= 0.0) {
        return Err(CoreError::Config("re-optimization learning rate must be finite and non-negative".into()));
    }
    if data.is_empty() {
        return Err(CoreError::Config("empty re-optimization set".into()));
    }
    check_len(decoder.n(), data.n)?;
    let (m, n2) = (decoder.seq_len(), 2 * decoder.n());
    let layout = decoder.layout().clone();
    let mut opt = Optimizer::radam(cfg.lr);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let snapshot = decoder.store.clone();
        order.shuffle(&mut derived_rng(cfg.seed, &[stream::REOPT_SHUFFLE, epoch as u64]));
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch) {
            let l = accumulate_step(&mut decoder.store, &mut opt, batch, cfg.micro_batch, |g, p, idx| {
                let ob = OracleBinding::bind(g, code, oracle, mlp_store(oracle))?;
                let s = g.input(&[idx.len(), m], data.syndrome_matrix(idx))?;
                let e = g.input(&[idx.len(), n2], data.error_matrix(idx))?;
                composite_loss(g, &layout, p, &ob, s, e)
            })?;
            if !l.is_finite() || !decoder.store.all_finite() {
                decoder.store = snapshot;
                return Err(CoreError::NonFinite { stage: "re-optimization", epoch });
            }
            total += l * batch.len() as f64;
        }
        let entry = ReoptEpoch { epoch, loss: total / data.len() as f64 };
        on_epoch(&entry);
        log.push(entry);
    }
    Ok(log)
}

/// One forward/backward of the composite loss with the frozen-oracle check,
/// returning the loss and the decoder gradients in store order.
pub fn composite_gradients<T: Real>(
    code: &CheckMatrix,
    decoder: &TransformerDecoder,
    params: &ParamStore<T>,
    oracle: &Oracle,
    oracle_params: Option<&ParamStore<T>>,
    syndromes: &[T],
    errors: &[T],
) -> Result<(f64, Vec<Vec<T>>)> {
    let (m, n2) = (decoder.seq_len(), 2 * decoder.n());
    let b = errors.len() / n2;
    let mut g = Graph::new();
    let p = params.bind(&mut g);
    let ob = OracleBinding::bind(&mut g, code, oracle, oracle_params)?;
    let s = g.input(&[b, m], syndromes.to_vec())?;
    let e = g.input(&[b, n2], errors.to_vec())?;
    let l = composite_loss(&mut g, decoder.layout(), &p, &ob, s, e)?;
    let loss = g.value(l)[0].as_f64();
    let grads = g.backward(l)?;
    ob.check_frozen(&grads)?;
    let out = p
        .vars()
        .iter()
        .map(|&v| grads.get(v).map(<[T]>::to_vec).unwrap_or_default())
        .collect();
    Ok((loss, out))
}
