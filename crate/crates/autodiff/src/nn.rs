//! Small layer helpers on top of [`Graph`] and [`ParamStore`].

use rand::Rng;

use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::params::{Bound, ParamId, ParamStore};
use crate::scalar::Real;

/// Affine map `x·W + b` over the last axis.
#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl Linear {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self {
            weight: store.add_uniform(format!("{name}.weight"), fan_in, fan_out, rng)?,
            bias: store.add_zeros(format!("{name}.bias"), &[fan_out])?,
            fan_in,
            fan_out,
        })
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, x: Var) -> Result<Var> {
        let shape = g.shape(x).to_vec();
        let rows = shape[..shape.len() - 1].iter().product::<usize>();
        let flat = if shape.len() == 2 { x } else { g.reshape(x, &[rows, self.fan_in])? };
        let y = g.matmul(flat, p.var(self.weight))?;
        let y = g.add(y, p.var(self.bias))?;
        if shape.len() == 2 {
            return Ok(y);
        }
        let mut out = shape;
        *out.last_mut().expect("rank ≥ 1") = self.fan_out;
        g.reshape(y, &out)
    }
}

/// Layer normalization over the last axis with learned gain and shift.
#[derive(Clone, Copy, Debug)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub shift: ParamId,
}

impl LayerNorm {
    pub fn new<T: Real>(store: &mut ParamStore<T>, name: &str, dim: usize) -> Result<Self> {
        Ok(Self {
            gain: store.add_ones(format!("{name}.gain"), &[dim])?,
            shift: store.add_zeros(format!("{name}.shift"), &[dim])?,
        })
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, x: Var) -> Result<Var> {
        let axis = g.shape(x).len() - 1;
        let n = g.layer_norm(x, axis)?;
        let n = g.mul(n, p.var(self.gain))?;
        g.add(n, p.var(self.shift))
    }
}
