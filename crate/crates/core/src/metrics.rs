//! Quality and structural metrics of a syndrome oracle against the exact `f`.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use symdec_autodiff::{Graph, Tensor};
use symdec_codes::CheckMatrix;

use crate::error::{CoreError, Result};
use crate::oracle::{coefficient_matrix, exact_f, exact_f_graph, exact_f_grad_sq_norm, sample_training_batch, Oracle};
use crate::seeding::{derived_rng, stream};

const METRIC_QUALITY: u64 = 1;
const METRIC_DIRICHLET: u64 = 2;
const METRIC_INVARIANCE: u64 = 3;
const JACOBIAN_CHUNK: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleQuality {
    pub cosine: f64,
    pub mse: f64,
    pub mae: f64,
    pub samples: usize,
}

/// Cosine similarity with the convention that two zero vectors agree.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 1.0,
        (false, false) => dot / (na * nb).sqrt(),
        _ => 0.0,
    }
}

/// Per-sample cosine, MSE and MAE on uniform inputs, averaged.
pub fn oracle_quality(oracle: &Oracle, code: &CheckMatrix, samples: usize, seed: u64) -> Result<OracleQuality> {
    if samples == 0 {
        return Err(CoreError::Config("samples must be at least 1".into()));
    }
    let batch = sample_training_batch(code, samples, &mut derived_rng(seed, &[stream::METRICS, METRIC_QUALITY]))?;
    let pred = oracle.eval(code, &batch.inputs)?;
    let m = code.num_rows();
    let (mut cos, mut mse, mut mae) = (0.0, 0.0, 0.0);
    for (p, t) in pred.chunks_exact(m).zip(batch.targets.chunks_exact(m)) {
        cos += cosine_similarity(p, t);
        mse += p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / m as f64;
        mae += p.iter().zip(t).map(|(a, b)| (a - b).abs()).sum::<f64>() / m as f64;
    }
    let k = samples as f64;
    Ok(OracleQuality { cosine: cos / k, mse: mse / k, mae: mae / k, samples })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletEstimate {
    pub ratio: f64,
    pub energy_oracle: f64,
    pub energy_exact: f64,
    pub samples: usize,
    pub seed: u64,
}

/// `E(g)/E(f)` with `E(g)` the mean squared Frobenius norm of the Jacobian
/// over uniform inputs. The oracle's Jacobian comes from reverse mode at
/// 64-bit (one backward pass per output); `E(f)` from the analytic gradient.
pub fn dirichlet_ratio(oracle: &Oracle, code: &CheckMatrix, samples: usize, seed: u64) -> Result<DirichletEstimate> {
    if samples == 0 {
        return Err(CoreError::Config("samples must be at least 1".into()));
    }
    let batch = sample_training_batch(code, samples, &mut derived_rng(seed, &[stream::METRICS, METRIC_DIRICHLET]))?;
    let n2 = 2 * code.n();
    let energy_exact = batch
        .inputs
        .chunks_exact(n2)
        .map(|x| exact_f_grad_sq_norm(code, x))
        .sum::<Result<f64>>()?
        / samples as f64;
    if energy_exact == 0.0 {
        return Err(CoreError::Degenerate("exact Dirichlet energy estimate is zero".into()));
    }
    let coeffs = coefficient_matrix::<f64>(code);
    let mlp_params = match oracle {
        Oracle::Mlp(mlp) => Some(mlp.store.cast::<f64>()),
        Oracle::Exact => None,
    };
    let m = code.num_rows();
    let mut total = 0.0;
    for chunk in batch.inputs.chunks(JACOBIAN_CHUNK * n2) {
        let b = chunk.len() / n2;
        let mut g = Graph::<f64>::new();
        let x = g.leaf(&Tensor::new(&[b, n2], chunk.to_vec())?.with_requires_grad(true));
        let y = match (oracle, &mlp_params) {
            (Oracle::Mlp(mlp), Some(params)) => {
                let p = params.bind_frozen(&mut g);
                mlp.forward(&mut g, &p, x)?
            }
            _ => exact_f_graph(&mut g, &coeffs, x)?,
        };
        let mut seed_buf = vec![0.0; b * m];
        for i in 0..m {
            seed_buf.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..b {
                seed_buf[r * m + i] = 1.0;
            }
            let grads = g.backward_with_seed(y, &seed_buf)?;
            if let Some(gx) = grads.get(x) {
                total += gx.iter().map(|v| v * v).sum::<f64>();
            }
        }
    }
    let energy_oracle = total / samples as f64;
    Ok(DirichletEstimate {
        ratio: energy_oracle / energy_exact,
        energy_oracle,
        energy_exact,
        samples,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupInvariance {
    pub per_generator: Vec<f64>,
    pub mean: f64,
    pub samples: usize,
}

/// For each generator `s`: MSE between `f(x)` and `oracle(x ⊕ s)` over
/// uniformly random binary `x`.
pub fn group_invariance(oracle: &Oracle, code: &CheckMatrix, samples: usize, seed: u64) -> Result<GroupInvariance> {
    if samples == 0 {
        return Err(CoreError::Config("samples must be at least 1".into()));
    }
    let mut rng = derived_rng(seed, &[stream::METRICS, METRIC_INVARIANCE]);
    let n2 = 2 * code.n();
    let m = code.num_rows();
    let xs: Vec<f64> = (0..samples * n2).map(|_| f64::from(u8::from(rng.gen::<bool>()))).collect();
    let mut reference = Vec::with_capacity(samples * m);
    for x in xs.chunks_exact(n2) {
        reference.extend(exact_f(code, x)?);
    }
    let mut per_generator = Vec::with_capacity(m);
    for row in code.rows() {
        let s = row.to_bits();
        let shifted: Vec<f64> = xs
            .chunks_exact(n2)
            .flat_map(|x| x.iter().zip(&s).map(|(&v, &b)| if b == 1 { 1.0 - v } else { v }))
            .collect();
        let pred = oracle.eval(code, &shifted)?;
        let mse = pred.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / reference.len() as f64;
        per_generator.push(mse);
    }
    let mean = per_generator.iter().sum::<f64>() / m as f64;
    Ok(GroupInvariance { per_generator, mean, samples })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralMetrics {
    pub oracle: String,
    pub quality: OracleQuality,
    pub dirichlet: DirichletEstimate,
    pub invariance: GroupInvariance,
}

pub fn structural_metrics(oracle: &Oracle, code: &CheckMatrix, samples: usize, seed: u64) -> Result<StructuralMetrics> {
    Ok(StructuralMetrics {
        oracle: oracle.id().into(),
        quality: oracle_quality(oracle, code, samples, seed)?,
        dirichlet: dirichlet_ratio(oracle, code, samples, seed)?,
        invariance: group_invariance(oracle, code, samples, seed)?,
    })
}

impl StructuralMetrics {
    /// Flat `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "oracle={}", self.oracle);
        let _ = writeln!(s, "samples={}", self.quality.samples);
        let _ = writeln!(s, "cosine={}", self.quality.cosine);
        let _ = writeln!(s, "mse={}", self.quality.mse);
        let _ = writeln!(s, "mae={}", self.quality.mae);
        let _ = writeln!(s, "dirichlet_ratio={}", self.dirichlet.ratio);
        let _ = writeln!(s, "dirichlet_energy_oracle={}", self.dirichlet.energy_oracle);
        let _ = writeln!(s, "dirichlet_energy_exact={}", self.dirichlet.energy_exact);
        let _ = writeln!(s, "dirichlet_seed={}", self.dirichlet.seed);
        let _ = writeln!(s, "group_invariance_mean={}", self.invariance.mean);
        for (i, v) in self.invariance.per_generator.iter().enumerate() {
            let _ = writeln!(s, "group_invariance_{i}={v}");
        }
        s
    }
}
