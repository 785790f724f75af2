//! Minimal differentiable building blocks.
//!
//! A `Tape` records the forward pass as a flat list of vector-valued
//! nodes; `backward` walks it in reverse and accumulates exact gradients
//! into the `ParamStore`. This is enough for the unrolled encoder-decoder
//! and planner graphs, including gradients through the softmax
//! probability feedback between decoder steps.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("ground-truth class {class} of joint {joint} has zero frequency")]
    ZeroFrequency { joint: usize, class: usize },
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    /// `W x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = &self.values[r * self.cols..(r + 1) * self.cols];
            out[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(usize);

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
    velocity: Matrix,
}

/// Named parameters with paired gradient and momentum slots.
#[derive(Debug, Clone)]
pub struct ParamStore {
    params: Vec<Param>,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl ParamStore {
    pub fn new(seed: u64) -> ParamStore {
        ParamStore {
            params: Vec::new(),
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Register a parameter initialized uniformly in
    /// [-1/sqrt(fan_in), +1/sqrt(fan_in)].
    pub fn add(&mut self, name: &str, rows: usize, cols: usize, fan_in: usize) -> ParamId {
        assert!(
            self.params.iter().all(|p| p.name != name),
            "duplicate parameter name {name}"
        );
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let mut value = Matrix::zeros(rows, cols);
        for v in value.values.iter_mut() {
            *v = self.rng.gen_range(-bound..bound);
        }
        self.params.push(Param {
            name: name.to_string(),
            value,
            grad: Matrix::zeros(rows, cols),
            velocity: Matrix::zeros(rows, cols),
        });
        ParamId(self.params.len() - 1)
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].grad
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    /// Overwrite every parameter with zeros; useful for probing
    /// architecture-level identities (zero nets emit uniform softmaxes).
    pub fn set_all_zero(&mut self) {
        for p in self.params.iter_mut() {
            p.value.values.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn zero_grads(&mut self) {
        for p in self.params.iter_mut() {
            p.grad.values.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// `v <- momentum*v + grad; p <- p - lr*v`; gradients are zeroed.
    pub fn sgd_step(&mut self, lr: f64, momentum: f64) {
        for p in self.params.iter_mut() {
            for i in 0..p.value.values.len() {
                p.velocity.values[i] = momentum * p.velocity.values[i] + p.grad.values[i];
                p.value.values[i] -= lr * p.velocity.values[i];
                p.grad.values[i] = 0.0;
            }
        }
    }
}

/// Plain forward `W x + b` (b stored as rows x 1).
pub fn linear_forward(w: &Matrix, b: &Matrix, x: &[f64]) -> Result<Vec<f64>, NetError> {
    if w.cols != x.len() || b.rows != w.rows || b.cols != 1 {
        return Err(NetError::ShapeMismatch(format!(
            "linear: W {}x{}, b {}x{}, x {}",
            w.rows,
            w.cols,
            b.rows,
            b.cols,
            x.len()
        )));
    }
    let mut out = w.matvec(x);
    for (o, bv) in out.iter_mut().zip(&b.values) {
        *o += bv;
    }
    Ok(out)
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Gate layout inside the packed 4H pre-activation vector: input, forget,
/// candidate, output.
#[derive(Debug, Clone, Copy)]
pub struct LstmParams {
    pub wx: ParamId,
    pub wh: ParamId,
    pub b: ParamId,
    pub hidden: usize,
}

impl LstmParams {
    pub fn new(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize) -> LstmParams {
        LstmParams {
            wx: store.add(&format!("{prefix}.wx"), 4 * hidden, input, input),
            wh: store.add(&format!("{prefix}.wh"), 4 * hidden, hidden, hidden),
            b: store.add(&format!("{prefix}.b"), 4 * hidden, 1, input),
            hidden,
        }
    }
}

/// Plain forward LSTM step; returns (hidden', cell').
pub fn lstm_forward_step(
    store: &ParamStore,
    p: &LstmParams,
    x: &[f64],
    hidden: &[f64],
    cell: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), NetError> {
    let h = p.hidden;
    if hidden.len() != h || cell.len() != h {
        return Err(NetError::ShapeMismatch("lstm state".into()));
    }
    let mut z = linear_forward(store.value(p.wx), store.value(p.b), x)?;
    let zh = store.value(p.wh).matvec(hidden);
    for (a, b) in z.iter_mut().zip(&zh) {
        *a += b;
    }
    let mut new_h = vec![0.0; h];
    let mut new_c = vec![0.0; h];
    for i in 0..h {
        let ig = sigmoid(z[i]);
        let fg = sigmoid(z[h + i]);
        let g = z[2 * h + i].tanh();
        let og = sigmoid(z[3 * h + i]);
        new_c[i] = fg * cell[i] + ig * g;
        new_h[i] = og * new_c[i].tanh();
    }
    Ok((new_h, new_c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op {
    Leaf,
    MatVec { param: ParamId, input: NodeId },
    AddBias { param: ParamId, input: NodeId },
    Add { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Sigmoid { input: NodeId },
    Tanh { input: NodeId },
    Concat { inputs: Vec<NodeId> },
    Slice { input: NodeId, start: usize },
    Softmax { input: NodeId },
    // -weight * log(softmax(logits)[label]); probs kept for backward
    NllPick { logits: NodeId, label: usize, weight: f64, probs: Vec<f64> },
    SumScaled { inputs: Vec<NodeId>, scale: f64 },
}

struct Node {
    value: Vec<f64>,
    op: Op,
}

/// Records a forward computation for exact reverse-mode differentiation.
pub struct Tape {
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn leaf(&mut self, v: Vec<f64>) -> NodeId {
        self.push(v, Op::Leaf)
    }

    pub fn zeros(&mut self, n: usize) -> NodeId {
        self.push(vec![0.0; n], Op::Leaf)
    }

    pub fn matvec(&mut self, store: &ParamStore, param: ParamId, input: NodeId) -> NodeId {
        let v = store.value(param).matvec(self.value(input));
        self.push(v, Op::MatVec { param, input })
    }

    pub fn add_bias(&mut self, store: &ParamStore, param: ParamId, input: NodeId) -> NodeId {
        let b = store.value(param);
        assert_eq!(b.cols, 1, "bias must be a column");
        let v: Vec<f64> = self
            .value(input)
            .iter()
            .zip(&b.values)
            .map(|(a, b)| a + b)
            .collect();
        assert_eq!(v.len(), b.rows, "bias length mismatch");
        self.push(v, Op::AddBias { param, input })
    }

    /// `W x + b`.
    pub fn linear(
        &mut self,
        store: &ParamStore,
        w: ParamId,
        b: ParamId,
        x: NodeId,
    ) -> NodeId {
        let y = self.matvec(store, w, x);
        self.add_bias(store, b, y)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v: Vec<f64> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        self.push(v, Op::Add { a, b })
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v: Vec<f64> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .collect();
        self.push(v, Op::Mul { a, b })
    }

    pub fn sigmoid(&mut self, input: NodeId) -> NodeId {
        let v: Vec<f64> = self.value(input).iter().map(|&x| sigmoid(x)).collect();
        self.push(v, Op::Sigmoid { input })
    }

    pub fn tanh(&mut self, input: NodeId) -> NodeId {
        let v: Vec<f64> = self.value(input).iter().map(|x| x.tanh()).collect();
        self.push(v, Op::Tanh { input })
    }

    pub fn concat(&mut self, inputs: &[NodeId]) -> NodeId {
        let mut v = Vec::new();
        for id in inputs {
            v.extend_from_slice(self.value(*id));
        }
        self.push(
            v,
            Op::Concat {
                inputs: inputs.to_vec(),
            },
        )
    }

    pub fn slice(&mut self, input: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.value(input)[start..start + len].to_vec();
        self.push(v, Op::Slice { input, start })
    }

    pub fn softmax(&mut self, input: NodeId) -> NodeId {
        let v = softmax(self.value(input));
        self.push(v, Op::Softmax { input })
    }

    /// Scalar node `-weight * log(softmax(logits)[label])`.
    pub fn nll_pick(&mut self, logits: NodeId, label: usize, weight: f64) -> NodeId {
        let probs = softmax(self.value(logits));
        let v = vec![-weight * probs[label].ln()];
        self.push(
            v,
            Op::NllPick {
                logits,
                label,
                weight,
                probs,
            },
        )
    }

    /// `scale * sum(scalars)`.
    pub fn sum_scaled(&mut self, inputs: &[NodeId], scale: f64) -> NodeId {
        let total: f64 = inputs.iter().map(|id| self.value(*id)[0]).sum();
        self.push(
            vec![total * scale],
            Op::SumScaled {
                inputs: inputs.to_vec(),
                scale,
            },
        )
    }

    /// One recurrent cell step on the tape; returns (hidden', cell').
    pub fn lstm_step(
        &mut self,
        store: &ParamStore,
        p: &LstmParams,
        x: NodeId,
        hidden: NodeId,
        cell: NodeId,
    ) -> (NodeId, NodeId) {
        let h = p.hidden;
        let zx = self.linear(store, p.wx, p.b, x);
        let zh = self.matvec(store, p.wh, hidden);
        let z = self.add(zx, zh);
        let zi = self.slice(z, 0, h);
        let zf = self.slice(z, h, h);
        let zg = self.slice(z, 2 * h, h);
        let zo = self.slice(z, 3 * h, h);
        let ig = self.sigmoid(zi);
        let fg = self.sigmoid(zf);
        let g = self.tanh(zg);
        let og = self.sigmoid(zo);
        let fc = self.mul(fg, cell);
        let igg = self.mul(ig, g);
        let new_c = self.add(fc, igg);
        let tc = self.tanh(new_c);
        let new_h = self.mul(og, tc);
        (new_h, new_c)
    }

    /// Reverse-mode sweep from a scalar node; gradients accumulate into
    /// the store (existing gradient contents are added to, not replaced).
    pub fn backward(&mut self, store: &mut ParamStore, output: NodeId) {
        assert_eq!(self.nodes[output.0].value.len(), 1, "output must be scalar");
        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.len()])
            .collect();
        grads[output.0][0] = 1.0;
        for idx in (0..self.nodes.len()).rev() {
            let go = std::mem::take(&mut grads[idx]);
            if go.iter().all(|&g| g == 0.0) {
                continue;
            }
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::MatVec { param, input } => {
                    let x = self.nodes[input.0].value.clone();
                    let w = store.value(*param).clone();
                    let pg = &mut store.params[param.0].grad;
                    for r in 0..w.rows {
                        for c in 0..w.cols {
                            pg.values[r * w.cols + c] += go[r] * x[c];
                        }
                    }
                    let gi = &mut grads[input.0];
                    for c in 0..w.cols {
                        let mut acc = 0.0;
                        for r in 0..w.rows {
                            acc += w.values[r * w.cols + c] * go[r];
                        }
                        gi[c] += acc;
                    }
                }
                Op::AddBias { param, input } => {
                    let pg = &mut store.params[param.0].grad;
                    for (g, o) in pg.values.iter_mut().zip(&go) {
                        *g += o;
                    }
                    for (g, o) in grads[input.0].iter_mut().zip(&go) {
                        *g += o;
                    }
                }
                Op::Add { a, b } => {
                    let (a, b) = (*a, *b);
                    for (g, o) in grads[a.0].iter_mut().zip(&go) {
                        *g += o;
                    }
                    for (g, o) in grads[b.0].iter_mut().zip(&go) {
                        *g += o;
                    }
                }
                Op::Mul { a, b } => {
                    let (a, b) = (*a, *b);
                    let av = self.nodes[a.0].value.clone();
                    let bv = self.nodes[b.0].value.clone();
                    for i in 0..go.len() {
                        grads[a.0][i] += go[i] * bv[i];
                        grads[b.0][i] += go[i] * av[i];
                    }
                }
                Op::Sigmoid { input } => {
                    let input = *input;
                    let y = &self.nodes[idx].value;
                    for i in 0..go.len() {
                        grads[input.0][i] += go[i] * y[i] * (1.0 - y[i]);
                    }
                }
                Op::Tanh { input } => {
                    let input = *input;
                    let y = &self.nodes[idx].value;
                    for i in 0..go.len() {
                        grads[input.0][i] += go[i] * (1.0 - y[i] * y[i]);
                    }
                }
                Op::Concat { inputs } => {
                    let inputs = inputs.clone();
                    let mut off = 0;
                    for id in inputs {
                        let len = self.nodes[id.0].value.len();
                        for i in 0..len {
                            grads[id.0][i] += go[off + i];
                        }
                        off += len;
                    }
                }
                Op::Slice { input, start } => {
                    let (input, start) = (*input, *start);
                    for i in 0..go.len() {
                        grads[input.0][start + i] += go[i];
                    }
                }
                Op::Softmax { input } => {
                    let input = *input;
                    let y = self.nodes[idx].value.clone();
                    let dot: f64 = go.iter().zip(&y).map(|(g, p)| g * p).sum();
                    for i in 0..go.len() {
                        grads[input.0][i] += y[i] * (go[i] - dot);
                    }
                }
                Op::NllPick {
                    logits,
                    label,
                    weight,
                    probs,
                } => {
                    let (logits, label, weight) = (*logits, *label, *weight);
                    let probs = probs.clone();
                    for i in 0..probs.len() {
                        let ind = if i == label { 1.0 } else { 0.0 };
                        grads[logits.0][i] += go[0] * weight * (probs[i] - ind);
                    }
                }
                Op::SumScaled { inputs, scale } => {
                    let (inputs, scale) = (inputs.clone(), *scale);
                    for id in inputs {
                        grads[id.0][0] += go[0] * scale;
                    }
                }
            }
        }
    }
}

/// Eq. for the per-joint inverse-frequency weighted loss:
/// `L = -(1/(N*J)) sum_t sum_j (1/f_gt) log softmax(logits)[gt]`.
///
/// `logits[t][j]` are K class scores; `freqs[j][c]` are training counts.
pub fn weighted_ce_loss(
    logits: &[Vec<Vec<f64>>],
    labels: &[Vec<usize>],
    freqs: &[Vec<u64>],
) -> Result<f64, NetError> {
    if logits.len() != labels.len() {
        return Err(NetError::ShapeMismatch("timestep count".into()));
    }
    let n = logits.len();
    let j_count = freqs.len();
    let mut total = 0.0;
    for (lt, lb) in logits.iter().zip(labels) {
        if lt.len() != j_count || lb.len() != j_count {
            return Err(NetError::ShapeMismatch("joint count".into()));
        }
        for j in 0..j_count {
            let gt = lb[j];
            let f = freqs[j][gt];
            if f == 0 {
                return Err(NetError::ZeroFrequency { joint: j, class: gt });
            }
            let p = softmax(&lt[j]);
            total += -(1.0 / f as f64) * p[gt].ln();
        }
    }
    Ok(total / (n as f64 * j_count as f64))
}

/// Central finite differences over every parameter element.
///
/// Returns the worst relative error. `loss` must be a pure function of
/// the store's parameter values.
pub fn finite_diff_check(
    store: &mut ParamStore,
    loss: &mut dyn FnMut(&ParamStore) -> f64,
    step: f64,
) -> f64 {
    // analytic gradients first
    let mut worst = 0.0f64;
    let n_params = store.params.len();
    for p in 0..n_params {
        for i in 0..store.params[p].value.values.len() {
            let orig = store.params[p].value.values[i];
            store.params[p].value.values[i] = orig + step;
            let plus = loss(store);
            store.params[p].value.values[i] = orig - step;
            let minus = loss(store);
            store.params[p].value.values[i] = orig;
            let fd = (plus - minus) / (2.0 * step);
            let g = store.params[p].grad.values[i];
            let denom = g.abs().max(fd.abs()).max(1e-4);
            worst = worst.max((g - fd).abs() / denom);
        }
    }
    worst
}

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MK01";

/// Versioned binary checkpoint: magic, architecture tag, dims, seed,
/// codebook hash, then parameters in declaration order.
pub fn save_checkpoint(
    path: &Path,
    tag: &str,
    dims: &[u32],
    store: &ParamStore,
    codebook_hash: &[u8; 32],
) -> Result<(), NetError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&(tag.len() as u32).to_le_bytes())?;
    out.write_all(tag.as_bytes())?;
    out.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in dims {
        out.write_all(&d.to_le_bytes())?;
    }
    out.write_all(&store.seed.to_le_bytes())?;
    out.write_all(codebook_hash)?;
    out.write_all(&(store.params.len() as u32).to_le_bytes())?;
    for p in &store.params {
        out.write_all(&(p.name.len() as u32).to_le_bytes())?;
        out.write_all(p.name.as_bytes())?;
        out.write_all(&(p.value.rows as u32).to_le_bytes())?;
        out.write_all(&(p.value.cols as u32).to_le_bytes())?;
        for v in &p.value.values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub struct Checkpoint {
    pub tag: String,
    pub dims: Vec<u32>,
    pub seed: u64,
    pub codebook_hash: [u8; 32],
    pub params: Vec<(String, Matrix)>,
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NetError> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let fail = |what: &str| NetError::Format(what.to_string());
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic).map_err(|_| fail("truncated magic"))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(fail("bad magic"));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |f: &mut dyn Read, what: &str| -> Result<u32, NetError> {
        f.read_exact(&mut u32buf)
            .map_err(|_| NetError::Format(format!("truncated {what}")))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let tag_len = read_u32(&mut f, "tag length")? as usize;
    if tag_len > 64 {
        return Err(fail("implausible tag length"));
    }
    let mut tag = vec![0u8; tag_len];
    f.read_exact(&mut tag).map_err(|_| fail("truncated tag"))?;
    let tag = String::from_utf8(tag).map_err(|_| fail("tag not utf-8"))?;
    let n_dims = read_u32(&mut f, "dim count")? as usize;
    if n_dims > 64 {
        return Err(fail("implausible dim count"));
    }
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        dims.push(read_u32(&mut f, "dims")?);
    }
    let mut u64buf = [0u8; 8];
    f.read_exact(&mut u64buf).map_err(|_| fail("truncated seed"))?;
    let seed = u64::from_le_bytes(u64buf);
    let mut codebook_hash = [0u8; 32];
    f.read_exact(&mut codebook_hash)
        .map_err(|_| fail("truncated codebook hash"))?;
    let n_params = read_u32(&mut f, "param count")? as usize;
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        let name_len = read_u32(&mut f, "name length")? as usize;
        if name_len > 256 {
            return Err(fail("implausible name length"));
        }
        let mut name = vec![0u8; name_len];
        f.read_exact(&mut name).map_err(|_| fail("truncated name"))?;
        let name = String::from_utf8(name).map_err(|_| fail("name not utf-8"))?;
        let rows = read_u32(&mut f, "rows")? as usize;
        let cols = read_u32(&mut f, "cols")? as usize;
        let mut m = Matrix::zeros(rows, cols);
        for v in m.values.iter_mut() {
            f.read_exact(&mut u64buf)
                .map_err(|_| fail("truncated values"))?;
            *v = f64::from_le_bytes(u64buf);
        }
        params.push((name, m));
    }
    Ok(Checkpoint {
        tag,
        dims,
        seed,
        codebook_hash,
        params,
    })
}

/// Copy checkpoint parameters into a freshly built store with matching
/// names and shapes.
pub fn restore_params(store: &mut ParamStore, ckpt: &Checkpoint) -> Result<(), NetError> {
    if store.params.len() != ckpt.params.len() {
        return Err(NetError::Format(format!(
            "parameter count mismatch: store {}, checkpoint {}",
            store.params.len(),
            ckpt.params.len()
        )));
    }
    for (p, (name, m)) in store.params.iter_mut().zip(&ckpt.params) {
        if &p.name != name || p.value.rows != m.rows || p.value.cols != m.cols {
            return Err(NetError::Format(format!(
                "parameter mismatch: store {} {}x{}, checkpoint {} {}x{}",
                p.name, p.value.rows, p.value.cols, name, m.rows, m.cols
            )));
        }
        p.value = m.clone();
    }
    Ok(())
}
