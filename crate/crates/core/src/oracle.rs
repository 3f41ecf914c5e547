//! The continuous extension `f` of syndrome measurement and its MLP
//! approximation.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use symdec_autodiff::nn::Linear;
use symdec_autodiff::{Bound, Graph, Optimizer, ParamStore, Real, Tensor, Var};
use symdec_codes::CheckMatrix;

use crate::error::{check_len, CoreError, Result};
use crate::seeding::{derived_rng, stream};

/// Lower and upper end of the sampling box for oracle training inputs.
pub const SAMPLE_LOW: f64 = -0.5;
pub const SAMPLE_HIGH: f64 = 1.0;

/// `v_i = Σ_j e_j·S^Z_{i,j} + e_{j+n}·S^X_{i,j}` for every row.
fn parities(code: &CheckMatrix, e: &[f64]) -> Result<Vec<f64>> {
    check_len(2 * code.n(), e.len())?;
    Ok((0..code.num_rows())
        .map(|i| (0..2 * code.n()).filter(|&j| code.parity_coefficient(i, j)).map(|j| e[j]).sum())
        .collect())
}

/// `f_i(e) = (1 − cos(π v_i)) / 2`.
pub fn exact_f(code: &CheckMatrix, e: &[f64]) -> Result<Vec<f64>> {
    Ok(parities(code, e)?.into_iter().map(|v| (1.0 - (v * PI).cos()) / 2.0).collect())
}

/// Jacobian of [`exact_f`], row-major `(n−1) × 2n`.
pub fn exact_f_grad(code: &CheckMatrix, e: &[f64]) -> Result<Vec<Vec<f64>>> {
    let v = parities(code, e)?;
    Ok(v.iter()
        .enumerate()
        .map(|(i, &vi)| {
            let s = PI / 2.0 * (vi * PI).sin();
            (0..2 * code.n())
                .map(|j| if code.parity_coefficient(i, j) { s } else { 0.0 })
                .collect()
        })
        .collect())
}

/// Squared Frobenius norm of the exact Jacobian at `e`.
pub fn exact_f_grad_sq_norm(code: &CheckMatrix, e: &[f64]) -> Result<f64> {
    let v = parities(code, e)?;
    Ok(v.iter()
        .enumerate()
        .map(|(i, &vi)| {
            let touched = (0..2 * code.n()).filter(|&j| code.parity_coefficient(i, j)).count();
            let s = PI / 2.0 * (vi * PI).sin();
            touched as f64 * s * s
        })
        .sum())
}

/// Coefficient matrix `C[j, i]` (shape `[2n, n−1]`) so that `v = e·C`.
pub fn coefficient_matrix<T: Real>(code: &CheckMatrix) -> Tensor<T> {
    let (n2, m) = (2 * code.n(), code.num_rows());
    Tensor::from_fn(&[n2, m], |k| {
        if code.parity_coefficient(k % m, k / m) {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// Records `f` applied row-wise to `x` (shape `[B, 2n]`) on a graph.
pub fn exact_f_graph<T: Real>(g: &mut Graph<T>, coeffs: &Tensor<T>, x: Var) -> Result<Var> {
    let c = g.constant(coeffs);
    let v = g.matmul(x, c)?;
    let a = g.scale(v, PI);
    let cos = g.cos(a);
    let neg = g.scale(cos, -0.5);
    Ok(g.add_scalar(neg, 0.5))
}

/// Uniform inputs on the sampling box with their exact targets.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub batch: usize,
    /// Row-major `batch × 2n`.
    pub inputs: Vec<f64>,
    /// Row-major `batch × (n−1)`.
    pub targets: Vec<f64>,
}

pub fn sample_training_batch<R: Rng + ?Sized>(code: &CheckMatrix, batch: usize, rng: &mut R) -> Result<SampleBatch> {
    if batch == 0 {
        return Err(CoreError::Config("batch must be at least 1".into()));
    }
    let n2 = 2 * code.n();
    let inputs: Vec<f64> = (0..batch * n2).map(|_| rng.gen_range(SAMPLE_LOW..=SAMPLE_HIGH)).collect();
    let mut targets = Vec::with_capacity(batch * code.num_rows());
    for row in inputs.chunks_exact(n2) {
        targets.extend(exact_f(code, row)?);
    }
    Ok(SampleBatch { batch, inputs, targets })
}

/// One-hidden-layer perceptron approximating `f`: `2n → hidden (SeLU) → n−1
/// (sigmoid)`.
#[derive(Clone, Debug)]
pub struct OracleMlp {
    pub store: ParamStore<f32>,
    hidden: Linear,
    out: Linear,
}

impl OracleMlp {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: usize, output_dim: usize, rng: &mut R) -> Result<Self> {
        let mut store = ParamStore::new();
        let h = Linear::new(&mut store, "hidden", input_dim, hidden, rng)?;
        let o = Linear::new(&mut store, "output", hidden, output_dim, rng)?;
        Ok(Self { store, hidden: h, out: o })
    }

    /// Rebuilds the model around stored parameters (e.g. from a checkpoint).
    pub fn from_store(store: ParamStore<f32>) -> Result<Self> {
        let lin = |name: &str| -> Result<Linear> {
            let w = store
                .id(&format!("{name}.weight"))
                .ok_or_else(|| CoreError::Format(format!("missing {name}.weight")))?;
            let b = store
                .id(&format!("{name}.bias"))
                .ok_or_else(|| CoreError::Format(format!("missing {name}.bias")))?;
            let shape = store.get(w).shape();
            if shape.len() != 2 || store.get(b).shape() != [shape[1]] {
                return Err(CoreError::Format(format!("bad shapes for {name}")));
            }
            Ok(Linear {
                weight: w,
                bias: b,
                fan_in: shape[0],
                fan_out: shape[1],
            })
        };
        let hidden = lin("hidden")?;
        let out = lin("output")?;
        if hidden.fan_out != out.fan_in {
            return Err(CoreError::Format("hidden and output layers disagree".into()));
        }
        Ok(Self { store, hidden, out })
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.fan_in
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden.fan_out
    }

    pub fn output_dim(&self) -> usize {
        self.out.fan_out
    }

    /// Forward pass on a graph using parameters bound from a store with this
    /// model's layout (any precision).
    pub fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, x: Var) -> Result<Var> {
        let h = self.hidden.forward(g, p, x)?;
        let h = g.selu(h);
        let o = self.out.forward(g, p, h)?;
        Ok(g.sigmoid(o))
    }

    /// Batched inference; `inputs` is row-major `batch × input_dim`.
    pub fn predict(&self, inputs: &[f32]) -> Result<Vec<f32>> {
        let d = self.input_dim();
        if inputs.is_empty() || !inputs.len().is_multiple_of(d) {
            return Err(CoreError::Dimension { expected: d, found: inputs.len() });
        }
        let mut out = Vec::with_capacity(inputs.len() / d * self.output_dim());
        for chunk in inputs.chunks(PREDICT_CHUNK * d) {
            let mut g = Graph::new();
            let p = self.store.bind_frozen(&mut g);
            let x = g.input(&[chunk.len() / d, d], chunk.to_vec())?;
            let y = self.forward(&mut g, &p, x)?;
            out.extend_from_slice(g.value(y));
        }
        Ok(out)
    }
}

const PREDICT_CHUNK: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub hidden: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub batch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl OracleConfig {
    /// Full-size settings (10⁷ samples, 50 epochs).
    pub fn full() -> Self {
        Self {
            hidden: 1000,
            train_samples: 10_000_000,
            test_samples: 100_000,
            batch: 1000,
            epochs: 50,
            lr: 1e-4,
            seed: 0,
        }
    }

    /// Desk-scale settings: 10⁶ samples, 10 epochs, otherwise unchanged.
    pub fn desk() -> Self {
        Self {
            train_samples: 1_000_000,
            epochs: 10,
            test_samples: 10_000,
            ..Self::full()
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CoreError::Config(m.to_string()));
        if self.hidden == 0 || self.batch == 0 || self.epochs == 0 || self.train_samples == 0 || self.test_samples == 0 {
            return bad("oracle sizes must be positive");
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad("oracle learning rate must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
}

/// Training inputs are streamed: batch `b` of every epoch is regenerated from
/// `(seed, b)`, and the batch order is reshuffled each epoch.
pub fn train_oracle(
    code: &CheckMatrix,
    cfg: &OracleConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<(OracleMlp, Vec<EpochLog>)> {
    cfg.validate()?;
    let (n2, m) = (2 * code.n(), code.num_rows());
    let mut model = OracleMlp::new(n2, cfg.hidden, m, &mut derived_rng(cfg.seed, &[stream::ORACLE_INIT]))?;
    let mut opt = Optimizer::adamw(cfg.lr);
    let batches = cfg.train_samples.div_ceil(cfg.batch);
    let test = sample_training_batch(code, cfg.test_samples, &mut derived_rng(cfg.seed, &[stream::ORACLE_TEST]))?;
    let mut order: Vec<usize> = (0..batches).collect();
    let mut shuffle = derived_rng(cfg.seed, &[stream::ORACLE_TRAIN, u64::MAX]);
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for &b in &order {
            let size = cfg.batch.min(cfg.train_samples - b * cfg.batch);
            let batch = sample_training_batch(code, size, &mut derived_rng(cfg.seed, &[stream::ORACLE_TRAIN, b as u64]))?;
            let mut g = Graph::<f32>::new();
            let p = model.store.bind(&mut g);
            let x = g.input(&[size, n2], to_f32(&batch.inputs))?;
            let t = g.input(&[size, m], to_f32(&batch.targets))?;
            let y = model.forward(&mut g, &p, x)?;
            let loss = g.mse(y, t)?;
            let l = g.value(loss)[0] as f64;
            if !l.is_finite() {
                return Err(CoreError::NonFinite { stage: "oracle training", epoch });
            }
            total += l * size as f64;
            let grads = g.backward(loss)?;
            model.store.zero_grad();
            model.store.accumulate(&p, &grads)?;
            opt.step(&mut model.store)?;
        }
        let test_loss = mse(&model.predict(&to_f32(&test.inputs))?, &test.targets);
        if !test_loss.is_finite() {
            return Err(CoreError::NonFinite { stage: "oracle evaluation", epoch });
        }
        let entry = EpochLog {
            epoch,
            train_loss: total / cfg.train_samples as f64,
            test_loss,
        };
        on_epoch(&entry);
        log.push(entry);
    }
    Ok((model, log))
}

pub(crate) fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn mse(pred: &[f32], target: &[f64]) -> f64 {
    pred.iter().zip(target).map(|(&a, &b)| (a as f64 - b).powi(2)).sum::<f64>() / target.len() as f64
}

/// A syndrome oracle used by re-optimization and the metrics: either the
/// exact `f` or a trained approximation.
#[derive(Clone, Debug)]
pub enum Oracle {
    Exact,
    Mlp(OracleMlp),
}

impl Oracle {
    pub fn id(&self) -> &'static str {
        match self {
            Oracle::Exact => "exact",
            Oracle::Mlp(_) => "mlp",
        }
    }

    /// Row-wise evaluation on `batch × 2n` inputs.
    pub fn eval(&self, code: &CheckMatrix, inputs: &[f64]) -> Result<Vec<f64>> {
        let n2 = 2 * code.n();
        if !inputs.len().is_multiple_of(n2) {
            return Err(CoreError::Dimension { expected: n2, found: inputs.len() });
        }
        match self {
            Oracle::Exact => {
                let mut out = Vec::with_capacity(inputs.len() / n2 * code.num_rows());
                for row in inputs.chunks_exact(n2) {
                    out.extend(exact_f(code, row)?);
                }
                Ok(out)
            }
            Oracle::Mlp(mlp) => {
                check_len(n2, mlp.input_dim())?;
                check_len(code.num_rows(), mlp.output_dim())?;
                Ok(mlp.predict(&to_f32(inputs))?.into_iter().map(f64::from).collect())
            }
        }
    }
}
