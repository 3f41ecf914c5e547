use crate::error::{AutodiffError, Result};
use crate::params::ParamStore;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    AdamW,
    RAdam,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Hyper {
    /// AdamW defaults with decoupled weight decay 0.01.
    pub fn adamw(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }

    pub fn radam(lr: f64) -> Self {
        Self {
            weight_decay: 0.0,
            ..Self::adamw(lr)
        }
    }
}

/// Moment estimates and step counter of an Adam-family optimizer.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    hyper: Hyper,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

/// Variance rectification is applied only once the SMA length exceeds this.
pub const RADAM_RHO_THRESHOLD: f64 = 4.0;

impl Optimizer {
    pub fn new(kind: OptimizerKind, hyper: Hyper) -> Self {
        Self {
            kind,
            hyper,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn adamw(lr: f64) -> Self {
        Self::new(OptimizerKind::AdamW, Hyper::adamw(lr))
    }

    pub fn radam(lr: f64) -> Self {
        Self::new(OptimizerKind::RAdam, Hyper::radam(lr))
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.hyper.lr = lr;
    }

    /// Applies one update using the gradients stored on each parameter.
    pub fn step<T: Real>(&mut self, params: &mut ParamStore<T>) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|(_, t)| vec![0.0; t.numel()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(AutodiffError::Usage("optimizer bound to a different parameter set".into()));
        }
        for id in params.ids() {
            if params.get(id).grad().is_none() {
                return Err(AutodiffError::Usage(format!(
                    "parameter {} has no gradient",
                    params.name(id)
                )));
            }
        }
        self.step += 1;
        let h = self.hyper;
        let t = self.step as f64;
        let bc1 = 1.0 - h.beta1.powf(t);
        let bc2 = 1.0 - h.beta2.powf(t);
        // Per-step scale on m/(√v + eps), or `None` for the plain momentum step.
        let adaptive = match self.kind {
            OptimizerKind::AdamW => Some(h.lr / bc1),
            OptimizerKind::RAdam => {
                let rho_inf = 2.0 / (1.0 - h.beta2) - 1.0;
                let rho_t = rho_inf - 2.0 * t * h.beta2.powf(t) / bc2;
                if rho_t > RADAM_RHO_THRESHOLD {
                    let r = ((rho_t - 4.0) * (rho_t - 2.0) * rho_inf
                        / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
                        .sqrt();
                    Some(h.lr * r / bc1)
                } else {
                    None
                }
            }
        };
        let sqrt_bc2 = bc2.sqrt();
        for (i, tensor) in params.tensors_mut().iter_mut().enumerate() {
            let grad: Vec<f64> = tensor
                .grad()
                .expect("checked above")
                .iter()
                .map(|g| g.to_f64().unwrap_or(f64::NAN))
                .collect();
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, x) in tensor.data_mut().iter_mut().enumerate() {
                let g = grad[j];
                let mut p = x.to_f64().unwrap_or(f64::NAN);
                m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g;
                v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g * g;
                if h.weight_decay != 0.0 {
                    p *= 1.0 - h.lr * h.weight_decay;
                }
                p -= match adaptive {
                    Some(scale) => scale * m[j] / (v[j].sqrt() / sqrt_bc2 + h.eps),
                    None => h.lr * m[j] / bc1,
                };
                *x = T::from_f64(p).unwrap_or_else(T::nan);
            }
        }
        Ok(())
    }
}
