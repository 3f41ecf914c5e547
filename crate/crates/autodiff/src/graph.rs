//! Recorded computation graph and reverse-mode backward pass.

use std::rc::Rc;

use crate::error::{shape_err, AutodiffError, Result};
use crate::kernels::matmul_into;
use crate::scalar::Real;
use crate::tensor::{numel, Tensor};

/// SeLU constants.
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
/// Clamp applied to predictions inside binary cross-entropy.
pub const BCE_EPSILON: f64 = 1e-7;
/// Variance epsilon of layer normalization.
pub const LAYER_NORM_EPSILON: f64 = 1e-5;

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    BatchMatMul { a: Var, b: Var, trans_b: bool },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Abs(Var),
    Selu(Var),
    Sigmoid(Var),
    Cos(Var),
    Softmax { x: Var, axis: usize },
    LayerNorm { x: Var, axis: usize },
    Mean { x: Var, axis: usize },
    MeanAll(Var),
    Concat { xs: Vec<Var>, axis: usize },
    Reshape(Var),
    Permute { x: Var, perm: Vec<usize> },
    HeadScores { q: Var, k: Var, heads: usize },
    HeadMix { attn: Var, v: Var, heads: usize },
    Mse(Var, Var),
    Bce(Var, Var),
}

struct Node<T> {
    shape: Vec<usize>,
    value: Rc<Vec<T>>,
    op: Op,
    requires_grad: bool,
    /// Per-op cache (layer-norm inverse standard deviations).
    aux: Vec<T>,
}

/// Gradients produced by one backward pass, indexed by [`Var`].
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}

/// Tape of operations in topological (creation) order.
#[derive(Default)]
pub struct Graph<T: Real> {
    nodes: Vec<Node<T>>,
}

/// `(outer, len, inner)` sizes for a reduction along `axis`.
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    (numel(&shape[..axis]), shape[axis], numel(&shape[axis + 1..]))
}

fn add_into<T: Real>(dst: &mut [T], src: &[T]) {
    dst.iter_mut().zip(src).for_each(|(d, &s)| *d = *d + s);
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<T>, op: Op, requires_grad: bool) -> Var {
        debug_assert_eq!(numel(&shape), value.len());
        self.nodes.push(Node {
            shape,
            value: Rc::new(value),
            op,
            requires_grad,
            aux: Vec::new(),
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.nodes[v.0].value
    }

    pub fn tensor(&self, v: Var) -> Tensor<T> {
        Tensor::new(self.shape(v), self.value(v).to_vec()).expect("consistent node")
    }

    /// Records `t` as a leaf; it is differentiated iff `t.requires_grad()`.
    pub fn leaf(&mut self, t: &Tensor<T>) -> Var {
        self.push(t.shape().to_vec(), t.data().to_vec(), Op::Leaf, t.requires_grad())
    }

    /// Records `t` as a constant leaf regardless of its flag.
    pub fn constant(&mut self, t: &Tensor<T>) -> Var {
        self.push(t.shape().to_vec(), t.data().to_vec(), Op::Leaf, false)
    }

    pub fn input(&mut self, shape: &[usize], data: Vec<T>) -> Result<Var> {
        if numel(shape) != data.len() || shape.contains(&0) {
            return shape_err("input", shape, &[data.len()]);
        }
        Ok(self.push(shape.to_vec(), data, Op::Leaf, false))
    }

    // ----- linear algebra -----

    /// `[m, k] · [k, n] → [m, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return shape_err("matmul", sa, sb);
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![T::zero(); m * n];
        matmul_into(self.value(a), false, self.value(b), false, m, k, n, &mut out, false);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b), rg))
    }

    /// `[B, m, k] · [B, k, n] → [B, m, n]`; with `trans_b` the right operand
    /// is `[B, n, k]` and used transposed.
    pub fn batch_matmul(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let ok = sa.len() == 3 && sb.len() == 3 && sa[0] == sb[0] && sa[2] == if trans_b { sb[2] } else { sb[1] };
        if !ok {
            return shape_err("batch_matmul", sa, sb);
        }
        let (bs, m, k) = (sa[0], sa[1], sa[2]);
        let n = if trans_b { sb[1] } else { sb[2] };
        let mut out = vec![T::zero(); bs * m * n];
        let (va, vb) = (self.value(a), self.value(b));
        for i in 0..bs {
            matmul_into(
                &va[i * m * k..(i + 1) * m * k],
                false,
                &vb[i * k * n..(i + 1) * k * n],
                trans_b,
                m,
                k,
                n,
                &mut out[i * m * n..(i + 1) * m * n],
                false,
            );
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(vec![bs, m, n], out, Op::BatchMatMul { a, b, trans_b }, rg))
    }

    // ----- element-wise binary (rhs broadcast over leading axes) -----

    fn broadcast_check(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sb.len() > sa.len() || sa[sa.len() - sb.len()..] != *sb {
            return shape_err(op, sa, sb);
        }
        Ok(())
    }

    fn binary(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(T, T) -> T, mk: fn(Var, Var) -> Op) -> Result<Var> {
        self.broadcast_check(op, a, b)?;
        let (va, vb) = (self.value(a), self.value(b));
        let nb = vb.len();
        let out: Vec<T> = va.iter().enumerate().map(|(i, &x)| f(x, vb[i % nb])).collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(self.shape(a).to_vec(), out, mk(a, b), rg))
    }

    /// `a + b`, where `b`'s shape is a suffix of `a`'s.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let k = T::lit(c);
        let out = self.value(a).iter().map(|&x| x * k).collect();
        let rg = self.rg(a);
        self.push(self.shape(a).to_vec(), out, Op::Scale(a, c), rg)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let k = T::lit(c);
        let out = self.value(a).iter().map(|&x| x + k).collect();
        let rg = self.rg(a);
        self.push(self.shape(a).to_vec(), out, Op::AddScalar(a), rg)
    }

    // ----- element-wise unary -----

    fn unary(&mut self, a: Var, f: impl Fn(T) -> T, op: Op) -> Var {
        let out = self.value(a).iter().map(|&x| f(x)).collect();
        let rg = self.rg(a);
        self.push(self.shape(a).to_vec(), out, op, rg)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.abs(), Op::Abs(a))
    }

    pub fn selu(&mut self, a: Var) -> Var {
        let (alpha, lambda) = (T::lit(SELU_ALPHA), T::lit(SELU_LAMBDA));
        self.unary(
            a,
            move |x| if x > T::zero() { lambda * x } else { lambda * alpha * (x.exp() - T::one()) },
            Op::Selu(a),
        )
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn cos(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.cos(), Op::Cos(a))
    }

    // ----- axis operations -----

    fn check_axis(&self, op: &'static str, x: Var, axis: usize) -> Result<()> {
        if axis >= self.shape(x).len() {
            return shape_err(op, self.shape(x), &[axis]);
        }
        Ok(())
    }

    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.check_axis("softmax", x, axis)?;
        let (outer, len, inner) = split_axis(self.shape(x), axis);
        let v = self.value(x);
        let mut out = vec![T::zero(); v.len()];
        for o in 0..outer {
            for i in 0..inner {
                let at = |j: usize| o * len * inner + j * inner + i;
                let max = (0..len).map(|j| v[at(j)]).fold(T::neg_infinity(), T::max);
                let mut sum = T::zero();
                for j in 0..len {
                    let e = (v[at(j)] - max).exp();
                    out[at(j)] = e;
                    sum = sum + e;
                }
                for j in 0..len {
                    out[at(j)] = out[at(j)] / sum;
                }
            }
        }
        let rg = self.rg(x);
        Ok(self.push(self.shape(x).to_vec(), out, Op::Softmax { x, axis }, rg))
    }

    /// Normalizes to zero mean and unit variance along `axis` (no affine
    /// parameters; compose with `mul`/`add` for those).
    pub fn layer_norm(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.check_axis("layer_norm", x, axis)?;
        let (outer, len, inner) = split_axis(self.shape(x), axis);
        let v = self.value(x);
        let mut out = vec![T::zero(); v.len()];
        let mut inv_std = vec![T::zero(); outer * inner];
        let nl = T::from_usize(len).expect("len");
        let eps = T::lit(LAYER_NORM_EPSILON);
        for o in 0..outer {
            for i in 0..inner {
                let at = |j: usize| o * len * inner + j * inner + i;
                let mean = (0..len).map(|j| v[at(j)]).sum::<T>() / nl;
                let var = (0..len).map(|j| (v[at(j)] - mean).powi(2)).sum::<T>() / nl;
                let is = T::one() / (var + eps).sqrt();
                inv_std[o * inner + i] = is;
                for j in 0..len {
                    out[at(j)] = (v[at(j)] - mean) * is;
                }
            }
        }
        let rg = self.rg(x);
        let var = self.push(self.shape(x).to_vec(), out, Op::LayerNorm { x, axis }, rg);
        self.nodes[var.0].aux = inv_std;
        Ok(var)
    }

    /// Mean along `axis`, removing it (a rank-1 input yields shape `[1]`).
    pub fn mean(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.check_axis("mean", x, axis)?;
        let shape = self.shape(x).to_vec();
        let (outer, len, inner) = split_axis(&shape, axis);
        let v = self.value(x);
        let nl = T::from_usize(len).expect("len");
        let mut out = vec![T::zero(); outer * inner];
        for o in 0..outer {
            for j in 0..len {
                let row = &v[o * len * inner + j * inner..o * len * inner + (j + 1) * inner];
                add_into(&mut out[o * inner..(o + 1) * inner], row);
            }
        }
        out.iter_mut().for_each(|x| *x = *x / nl);
        let mut out_shape: Vec<usize> = shape[..axis].iter().chain(&shape[axis + 1..]).copied().collect();
        if out_shape.is_empty() {
            out_shape.push(1);
        }
        let rg = self.rg(x);
        Ok(self.push(out_shape, out, Op::Mean { x, axis }, rg))
    }

    /// Mean of all elements, shape `[1]`.
    pub fn mean_all(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let m = v.iter().copied().sum::<T>() / T::from_usize(v.len()).expect("len");
        let rg = self.rg(x);
        self.push(vec![1], vec![m], Op::MeanAll(x), rg)
    }

    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Result<Var> {
        let first = *xs.first().ok_or_else(|| AutodiffError::Usage("concat of nothing".into()))?;
        self.check_axis("concat", first, axis)?;
        let base = self.shape(first).to_vec();
        let mut total = 0;
        for &x in xs {
            let s = self.shape(x);
            if s.len() != base.len() || s.iter().zip(&base).enumerate().any(|(i, (a, b))| i != axis && a != b) {
                return shape_err("concat", &base, s);
            }
            total += s[axis];
        }
        let (outer, _, inner) = split_axis(&base, axis);
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &x in xs {
                let len = self.shape(x)[axis];
                out.extend_from_slice(&self.value(x)[o * len * inner..(o + 1) * len * inner]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let rg = xs.iter().any(|&x| self.rg(x));
        Ok(self.push(shape, out, Op::Concat { xs: xs.to_vec(), axis }, rg))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        if numel(shape) != self.value(x).len() || shape.contains(&0) {
            return shape_err("reshape", self.shape(x), shape);
        }
        let value = Rc::clone(&self.nodes[x.0].value);
        let rg = self.rg(x);
        self.nodes.push(Node {
            shape: shape.to_vec(),
            value,
            op: Op::Reshape(x),
            requires_grad: rg,
            aux: Vec::new(),
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Axis permutation: output axis `i` is input axis `perm[i]`.
    pub fn permute(&mut self, x: Var, perm: &[usize]) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        let mut seen = vec![false; shape.len()];
        if perm.len() != shape.len() || perm.iter().any(|&p| p >= shape.len() || std::mem::replace(&mut seen[p], true)) {
            return shape_err("permute", &shape, perm);
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
        let out = permute_data(self.value(x), &shape, perm);
        let rg = self.rg(x);
        Ok(self.push(out_shape, out, Op::Permute { x, perm: perm.to_vec() }, rg))
    }

    // ----- multi-head attention kernels -----

    /// Per-head scores `S[b,h,i,j] = Σ_d Q[b,i,h·dh+d] · K[b,j,h·dh+d]` for
    /// `Q, K` of shape `[B, L, heads·dh]`; output `[B, heads, L, L]`.
    pub fn head_scores(&mut self, q: Var, k: Var, heads: usize) -> Result<Var> {
        let (sq, sk) = (self.shape(q), self.shape(k));
        if sq.len() != 3 || sq != sk || heads == 0 || sq[2] % heads != 0 {
            return shape_err("head_scores", sq, sk);
        }
        let (b, l, d) = (sq[0], sq[1], sq[2]);
        let dh = d / heads;
        let mut out = vec![T::zero(); b * heads * l * l];
        let (vq, vk) = (self.value(q), self.value(k));
        for bi in 0..b {
            for h in 0..heads {
                let off = bi * l * d + h * dh;
                let o = (bi * heads + h) * l * l;
                // SAFETY: strided views stay inside the [B, L, D] buffers.
                unsafe {
                    T::gemm(
                        l, dh, l, T::one(),
                        vq.as_ptr().add(off), d as isize, 1,
                        vk.as_ptr().add(off), 1, d as isize,
                        T::zero(), out.as_mut_ptr().add(o), l as isize, 1,
                    );
                }
            }
        }
        let rg = self.rg(q) || self.rg(k);
        Ok(self.push(vec![b, heads, l, l], out, Op::HeadScores { q, k, heads }, rg))
    }

    /// Applies per-head weights `A [B, heads, L, L]` to values `V [B, L, D]`:
    /// `O[b,i,h·dh+d] = Σ_j A[b,h,i,j] · V[b,j,h·dh+d]`.
    pub fn head_mix(&mut self, attn: Var, v: Var, heads: usize) -> Result<Var> {
        let (sa, sv) = (self.shape(attn), self.shape(v));
        let ok = sa.len() == 4 && sv.len() == 3 && sa[0] == sv[0] && sa[1] == heads && sa[2] == sv[1] && sa[3] == sv[1] && sv[2] % heads == 0;
        if !ok {
            return shape_err("head_mix", sa, sv);
        }
        let (b, l, d) = (sv[0], sv[1], sv[2]);
        let dh = d / heads;
        let mut out = vec![T::zero(); b * l * d];
        let (va, vv) = (self.value(attn), self.value(v));
        for bi in 0..b {
            for h in 0..heads {
                let off = bi * l * d + h * dh;
                let a_off = (bi * heads + h) * l * l;
                // SAFETY: strided views stay inside their buffers.
                unsafe {
                    T::gemm(
                        l, l, dh, T::one(),
                        va.as_ptr().add(a_off), l as isize, 1,
                        vv.as_ptr().add(off), d as isize, 1,
                        T::zero(), out.as_mut_ptr().add(off), d as isize, 1,
                    );
                }
            }
        }
        let rg = self.rg(attn) || self.rg(v);
        Ok(self.push(vec![b, l, d], out, Op::HeadMix { attn, v, heads }, rg))
    }

    // ----- losses -----

    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        if self.shape(pred) != self.shape(target) {
            return shape_err("mse", self.shape(pred), self.shape(target));
        }
        let (p, t) = (self.value(pred), self.value(target));
        let loss = p.iter().zip(t.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>()
            / T::from_usize(p.len()).expect("len");
        let rg = self.rg(pred) || self.rg(target);
        Ok(self.push(vec![1], vec![loss], Op::Mse(pred, target), rg))
    }

    /// Mean binary cross-entropy with predictions clamped to
    /// `[ε, 1 − ε]`, `ε = 1e-7`.
    pub fn bce(&mut self, pred: Var, target: Var) -> Result<Var> {
        if self.shape(pred) != self.shape(target) {
            return shape_err("bce", self.shape(pred), self.shape(target));
        }
        let (p, t) = (self.value(pred), self.value(target));
        if p.iter().chain(t.iter()).any(|x| x.is_nan()) {
            return Err(AutodiffError::Numeric("NaN in binary cross-entropy input".into()));
        }
        let loss = p
            .iter()
            .zip(t.iter())
            .map(|(&p, &t)| {
                let pc = clamp_prob(p);
                -(t * pc.ln() + (T::one() - t) * (T::one() - pc).ln())
            })
            .sum::<T>()
            / T::from_usize(p.len()).expect("len");
        let rg = self.rg(pred) || self.rg(target);
        Ok(self.push(vec![1], vec![loss], Op::Bce(pred, target), rg))
    }

    // ----- backward -----

    /// Reverse pass from a scalar (`[1]`-shaped) `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.value(loss).len() != 1 {
            return Err(AutodiffError::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        self.backward_with_seed(loss, &[T::one()])
    }

    /// Reverse pass seeded with an explicit output cotangent.
    pub fn backward_with_seed(&self, out: Var, seed: &[T]) -> Result<Gradients<T>> {
        if seed.len() != self.value(out).len() {
            return shape_err("backward seed", self.shape(out), &[seed.len()]);
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];
        if !self.rg(out) {
            return Ok(Gradients { grads });
        }
        grads[out.0] = Some(seed.to_vec());
        for idx in (0..=out.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = (if matches!(node.op, Op::Leaf) { None } else { grads[idx].take() }) else {
                continue;
            };
            self.propagate(idx, &g, &mut grads);
        }
        Ok(Gradients { grads })
    }

    fn acc<'g>(&self, grads: &'g mut [Option<Vec<T>>], v: Var) -> Option<&'g mut Vec<T>> {
        if !self.rg(v) {
            return None;
        }
        let len = self.value(v).len();
        Some(grads[v.0].get_or_insert_with(|| vec![T::zero(); len]))
    }

    fn propagate(&self, idx: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let node = &self.nodes[idx];
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (self.shape(*a)[0], self.shape(*a)[1]);
                let n = self.shape(*b)[1];
                if let Some(ga) = self.acc(grads, *a) {
                    matmul_into(g, false, self.value(*b), true, m, n, k, ga, true);
                }
                if let Some(gb) = self.acc(grads, *b) {
                    matmul_into(self.value(*a), true, g, false, k, m, n, gb, true);
                }
            }
            Op::BatchMatMul { a, b, trans_b } => {
                let sa = self.shape(*a);
                let (bs, m, k) = (sa[0], sa[1], sa[2]);
                let n = node.shape[2];
                let (va, vb) = (self.value(*a), self.value(*b));
                if let Some(ga) = self.acc(grads, *a) {
                    for i in 0..bs {
                        // dA = dC · op(B)^T
                        matmul_into(
                            &g[i * m * n..(i + 1) * m * n], false,
                            &vb[i * k * n..(i + 1) * k * n], !trans_b,
                            m, n, k, &mut ga[i * m * k..(i + 1) * m * k], true,
                        );
                    }
                }
                if let Some(gb) = self.acc(grads, *b) {
                    for i in 0..bs {
                        let (gi, ai) = (&g[i * m * n..(i + 1) * m * n], &va[i * m * k..(i + 1) * m * k]);
                        let dst = &mut gb[i * k * n..(i + 1) * k * n];
                        if *trans_b {
                            // d(B^T) = dC^T · A, B stored [n, k]
                            matmul_into(gi, true, ai, false, n, m, k, dst, true);
                        } else {
                            matmul_into(ai, true, gi, false, k, m, n, dst, true);
                        }
                    }
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -T::one() } else { T::one() };
                if let Some(ga) = self.acc(grads, *a) {
                    add_into(ga, g);
                }
                if let Some(gb) = self.acc(grads, *b) {
                    let nb = gb.len();
                    for (i, &gi) in g.iter().enumerate() {
                        gb[i % nb] = gb[i % nb] + sign * gi;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let nb = vb.len();
                if let Some(ga) = self.acc(grads, *a) {
                    for (i, &gi) in g.iter().enumerate() {
                        ga[i] = ga[i] + gi * vb[i % nb];
                    }
                }
                if let Some(gb) = self.acc(grads, *b) {
                    for (i, &gi) in g.iter().enumerate() {
                        gb[i % nb] = gb[i % nb] + gi * va[i];
                    }
                }
            }
            Op::Scale(a, c) => {
                let k = T::lit(*c);
                if let Some(ga) = self.acc(grads, *a) {
                    ga.iter_mut().zip(g).for_each(|(d, &s)| *d = *d + s * k);
                }
            }
            Op::AddScalar(a) | Op::Reshape(a) => {
                if let Some(ga) = self.acc(grads, *a) {
                    add_into(ga, g);
                }
            }
            Op::Abs(a) => {
                let x = self.value(*a);
                if let Some(ga) = self.acc(grads, *a) {
                    for i in 0..g.len() {
                        let s = if x[i] > T::zero() {
                            T::one()
                        } else if x[i] < T::zero() {
                            -T::one()
                        } else {
                            T::zero()
                        };
                        ga[i] = ga[i] + g[i] * s;
                    }
                }
            }
            Op::Selu(a) => {
                let x = self.value(*a);
                let (alpha, lambda) = (T::lit(SELU_ALPHA), T::lit(SELU_LAMBDA));
                if let Some(ga) = self.acc(grads, *a) {
                    for i in 0..g.len() {
                        let d = if x[i] > T::zero() { lambda } else { lambda * alpha * x[i].exp() };
                        ga[i] = ga[i] + g[i] * d;
                    }
                }
            }
            Op::Sigmoid(a) => {
                if let Some(ga) = self.acc(grads, *a) {
                    for i in 0..g.len() {
                        ga[i] = ga[i] + g[i] * y[i] * (T::one() - y[i]);
                    }
                }
            }
            Op::Cos(a) => {
                let x = self.value(*a);
                if let Some(ga) = self.acc(grads, *a) {
                    for i in 0..g.len() {
                        ga[i] = ga[i] - g[i] * x[i].sin();
                    }
                }
            }
            Op::Softmax { x, axis } => {
                let (outer, len, inner) = split_axis(&node.shape, *axis);
                if let Some(gx) = self.acc(grads, *x) {
                    for o in 0..outer {
                        for i in 0..inner {
                            let at = |j: usize| o * len * inner + j * inner + i;
                            let dot = (0..len).map(|j| g[at(j)] * y[at(j)]).sum::<T>();
                            for j in 0..len {
                                gx[at(j)] = gx[at(j)] + y[at(j)] * (g[at(j)] - dot);
                            }
                        }
                    }
                }
            }
            Op::LayerNorm { x, axis } => {
                let (outer, len, inner) = split_axis(&node.shape, *axis);
                let nl = T::from_usize(len).expect("len");
                if let Some(gx) = self.acc(grads, *x) {
                    for o in 0..outer {
                        for i in 0..inner {
                            let at = |j: usize| o * len * inner + j * inner + i;
                            let is = node.aux[o * inner + i];
                            let mg = (0..len).map(|j| g[at(j)]).sum::<T>() / nl;
                            let mgy = (0..len).map(|j| g[at(j)] * y[at(j)]).sum::<T>() / nl;
                            for j in 0..len {
                                gx[at(j)] = gx[at(j)] + is * (g[at(j)] - mg - y[at(j)] * mgy);
                            }
                        }
                    }
                }
            }
            Op::Mean { x, axis } => {
                let (outer, len, inner) = split_axis(self.shape(*x), *axis);
                let nl = T::from_usize(len).expect("len");
                if let Some(gx) = self.acc(grads, *x) {
                    for o in 0..outer {
                        for j in 0..len {
                            for i in 0..inner {
                                let t = o * len * inner + j * inner + i;
                                gx[t] = gx[t] + g[o * inner + i] / nl;
                            }
                        }
                    }
                }
            }
            Op::MeanAll(x) => {
                if let Some(gx) = self.acc(grads, *x) {
                    let share = g[0] / T::from_usize(gx.len()).expect("len");
                    gx.iter_mut().for_each(|d| *d = *d + share);
                }
            }
            Op::Concat { xs, axis } => {
                let (outer, total, inner) = split_axis(&node.shape, *axis);
                let mut start = 0;
                for &x in xs {
                    let len = self.shape(x)[*axis];
                    if let Some(gx) = self.acc(grads, x) {
                        for o in 0..outer {
                            let src = &g[(o * total + start) * inner..(o * total + start + len) * inner];
                            add_into(&mut gx[o * len * inner..(o + 1) * len * inner], src);
                        }
                    }
                    start += len;
                }
            }
            Op::Permute { x, perm } => {
                let mut inverse = vec![0; perm.len()];
                for (i, &p) in perm.iter().enumerate() {
                    inverse[p] = i;
                }
                let back = permute_data(g, &node.shape, &inverse);
                if let Some(gx) = self.acc(grads, *x) {
                    add_into(gx, &back);
                }
            }
            Op::HeadScores { q, k, heads } => {
                let s = self.shape(*q);
                let (b, l, d) = (s[0], s[1], s[2]);
                let dh = d / heads;
                let (vq, vk) = (self.value(*q), self.value(*k));
                if let Some(gq) = self.acc(grads, *q) {
                    for bi in 0..b {
                        for h in 0..*heads {
                            let off = bi * l * d + h * dh;
                            let o = (bi * heads + h) * l * l;
                            // SAFETY: strided views stay inside their buffers.
                            unsafe {
                                T::gemm(
                                    l, l, dh, T::one(),
                                    g.as_ptr().add(o), l as isize, 1,
                                    vk.as_ptr().add(off), d as isize, 1,
                                    T::one(), gq.as_mut_ptr().add(off), d as isize, 1,
                                );
                            }
                        }
                    }
                }
                if let Some(gk) = self.acc(grads, *k) {
                    for bi in 0..b {
                        for h in 0..*heads {
                            let off = bi * l * d + h * dh;
                            let o = (bi * heads + h) * l * l;
                            // SAFETY: as above.
                            unsafe {
                                T::gemm(
                                    l, l, dh, T::one(),
                                    g.as_ptr().add(o), 1, l as isize,
                                    vq.as_ptr().add(off), d as isize, 1,
                                    T::one(), gk.as_mut_ptr().add(off), d as isize, 1,
                                );
                            }
                        }
                    }
                }
            }
            Op::HeadMix { attn, v, heads } => {
                let s = self.shape(*v);
                let (b, l, d) = (s[0], s[1], s[2]);
                let dh = d / heads;
                let (va, vv) = (self.value(*attn), self.value(*v));
                if let Some(ga) = self.acc(grads, *attn) {
                    for bi in 0..b {
                        for h in 0..*heads {
                            let off = bi * l * d + h * dh;
                            let a_off = (bi * heads + h) * l * l;
                            // SAFETY: strided views stay inside their buffers.
                            unsafe {
                                T::gemm(
                                    l, dh, l, T::one(),
                                    g.as_ptr().add(off), d as isize, 1,
                                    vv.as_ptr().add(off), 1, d as isize,
                                    T::one(), ga.as_mut_ptr().add(a_off), l as isize, 1,
                                );
                            }
                        }
                    }
                }
                if let Some(gv) = self.acc(grads, *v) {
                    for bi in 0..b {
                        for h in 0..*heads {
                            let off = bi * l * d + h * dh;
                            let a_off = (bi * heads + h) * l * l;
                            // SAFETY: as above.
                            unsafe {
                                T::gemm(
                                    l, l, dh, T::one(),
                                    va.as_ptr().add(a_off), 1, l as isize,
                                    g.as_ptr().add(off), d as isize, 1,
                                    T::one(), gv.as_mut_ptr().add(off), d as isize, 1,
                                );
                            }
                        }
                    }
                }
            }
            Op::Mse(p, t) => {
                let (vp, vt) = (self.value(*p), self.value(*t));
                let scale = T::lit(2.0) * g[0] / T::from_usize(vp.len()).expect("len");
                if let Some(gp) = self.acc(grads, *p) {
                    for i in 0..vp.len() {
                        gp[i] = gp[i] + scale * (vp[i] - vt[i]);
                    }
                }
                if let Some(gt) = self.acc(grads, *t) {
                    for i in 0..vp.len() {
                        gt[i] = gt[i] - scale * (vp[i] - vt[i]);
                    }
                }
            }
            Op::Bce(p, t) => {
                let (vp, vt) = (self.value(*p), self.value(*t));
                let scale = g[0] / T::from_usize(vp.len()).expect("len");
                if let Some(gp) = self.acc(grads, *p) {
                    for i in 0..vp.len() {
                        let pc = clamp_prob(vp[i]);
                        gp[i] = gp[i] + scale * (pc - vt[i]) / (pc * (T::one() - pc));
                    }
                }
                if let Some(gt) = self.acc(grads, *t) {
                    for i in 0..vp.len() {
                        let pc = clamp_prob(vp[i]);
                        gt[i] = gt[i] + scale * ((T::one() - pc).ln() - pc.ln());
                    }
                }
            }
        }
    }
}

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[inline]
fn clamp_prob<T: Real>(p: T) -> T {
    let eps = T::lit(BCE_EPSILON);
    p.max(eps).min(T::one() - eps)
}

fn permute_data<T: Real>(v: &[T], shape: &[usize], perm: &[usize]) -> Vec<T> {
    let rank = shape.len();
    let mut in_strides = vec![1; rank];
    for i in (0..rank.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * shape[i + 1];
    }
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let mut out = Vec::with_capacity(v.len());
    let mut idx = vec![0usize; rank];
    for _ in 0..v.len() {
        let src: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        out.push(v[src]);
        for ax in (0..rank).rev() {
            idx[ax] += 1;
            if idx[ax] < out_shape[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
    out
}
