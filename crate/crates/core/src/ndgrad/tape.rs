use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{matmul_raw, ParamId, ParamStore, ShapeError, Tensor};

/// Index of a recorded value on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
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
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    ScaleRows(Var, Vec<f64>),
    Sigmoid(Var),
    Relu(Var),
    Tanh(Var),
    SoftmaxRows(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    MaxPoolRows(Var, Vec<usize>),
    AvgPoolRows(Var),
    SumPoolRows(Var),
    Sum(Var),
    /// Mean negative log-likelihood; keeps the row softmax for backward.
    CrossEntropy(Var, Vec<usize>, Tensor),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Records a forward computation for reverse-mode differentiation.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(ParamId, Var)>,
}

fn dims(t: &Tensor) -> (usize, usize) {
    (t.rows(), t.cols())
}

fn require_matrix(op: &'static str, t: &Tensor) -> Result<(usize, usize), ShapeError> {
    if t.is_matrix() {
        Ok(dims(t))
    } else {
        Err(ShapeError::new(op, format!("expected a matrix, got shape {:?}", t.shape())))
    }
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::matrix(t.rows(), t.cols(), t.data().iter().map(|&x| f(x)).collect())
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn softmax_row(row: &[f64], out: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &x) in out.iter_mut().zip(row) {
        *o = libm::exp(x - max);
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Records a constant (or an input whose gradient is read back via
    /// [`Gradients::wrt`]).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Leaf for a stored parameter; repeated calls return the same var.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&(_, v)) = self.params.iter().find(|(p, _)| *p == id) {
            return v;
        }
        let v = self.leaf(store.get(id).clone());
        self.params.push((id, v));
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, ShapeError> {
        let (n, k) = require_matrix("matmul", self.value(a))?;
        let (k2, m) = require_matrix("matmul", self.value(b))?;
        if k != k2 {
            return Err(ShapeError::new("matmul", format!("[{n}, {k}] x [{k2}, {m}]")));
        }
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), n, k, m);
        Ok(self.push(Tensor::matrix(n, m, out), Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, ShapeError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(ShapeError::new("add", format!("{:?} + {:?}", ta.shape(), tb.shape())));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
        let value = Tensor::matrix(ta.rows(), ta.cols(), data);
        Ok(self.push(value, Op::Add(a, b)))
    }

    /// Adds a `1×c` row to every row of an `r×c` matrix.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var, ShapeError> {
        let (r, c) = require_matrix("add_row", self.value(a))?;
        let (br, bc) = require_matrix("add_row", self.value(bias))?;
        if br != 1 || bc != c {
            return Err(ShapeError::new("add_row", format!("[{r}, {c}] + [{br}, {bc}]")));
        }
        let b = self.value(bias).data();
        let data = self.value(a).data().chunks(c).flat_map(|row| row.iter().zip(b).map(|(x, y)| x + y)).collect();
        Ok(self.push(Tensor::matrix(r, c, data), Op::AddRow(a, bias)))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = map(self.value(a), |x| x * factor);
        self.push(value, Op::Scale(a, factor))
    }

    /// Multiplies row `i` by `factors[i]`.
    pub fn scale_rows(&mut self, a: Var, factors: Vec<f64>) -> Result<Var, ShapeError> {
        let (r, c) = require_matrix("scale_rows", self.value(a))?;
        if factors.len() != r {
            return Err(ShapeError::new("scale_rows", format!("{} factors for [{r}, {c}]", factors.len())));
        }
        let data = self
            .value(a)
            .data()
            .chunks(c)
            .zip(&factors)
            .flat_map(|(row, &f)| row.iter().map(move |x| x * f))
            .collect();
        Ok(self.push(Tensor::matrix(r, c, data), Op::ScaleRows(a, factors)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = map(self.value(a), sigmoid);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = map(self.value(a), |x| if x > 0.0 { x } else { 0.0 });
        self.push(value, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = map(self.value(a), libm::tanh);
        self.push(value, Op::Tanh(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var, ShapeError> {
        let (r, c) = require_matrix("softmax", self.value(a))?;
        let mut out = vec![0.0; r * c];
        for (row, o) in self.value(a).data().chunks(c).zip(out.chunks_mut(c)) {
            softmax_row(row, o);
        }
        Ok(self.push(Tensor::matrix(r, c, out), Op::SoftmaxRows(a)))
    }

    /// Horizontal concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, ShapeError> {
        let first = parts.first().ok_or_else(|| ShapeError::new("concat_cols", "no inputs".into()))?;
        let rows = self.value(*first).rows();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = require_matrix("concat_cols", self.value(p))?;
            if r != rows {
                return Err(ShapeError::new("concat_cols", format!("row counts {rows} and {r}")));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(i));
            }
        }
        Ok(self.push(Tensor::matrix(rows, total, data), Op::ConcatCols(parts.to_vec())))
    }

    /// Vertical concatenation of matrices with equal column counts.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, ShapeError> {
        let first = parts.first().ok_or_else(|| ShapeError::new("concat_rows", "no inputs".into()))?;
        let cols = self.value(*first).cols();
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let (r, c) = require_matrix("concat_rows", self.value(p))?;
            if c != cols {
                return Err(ShapeError::new("concat_rows", format!("column counts {cols} and {c}")));
            }
            rows += r;
            data.extend_from_slice(self.value(p).data());
        }
        Ok(self.push(Tensor::matrix(rows, cols, data), Op::ConcatRows(parts.to_vec())))
    }

    /// Selects rows by index; also serves as embedding lookup.
    pub fn gather_rows(&mut self, a: Var, rows: &[usize]) -> Result<Var, ShapeError> {
        let (r, c) = require_matrix("gather_rows", self.value(a))?;
        if let Some(&bad) = rows.iter().find(|&&i| i >= r) {
            return Err(ShapeError::new("gather_rows", format!("row {bad} of [{r}, {c}]")));
        }
        let src = self.value(a);
        let data = rows.iter().flat_map(|&i| src.row_slice(i).iter().copied()).collect();
        Ok(self.push(Tensor::matrix(rows.len(), c, data), Op::GatherRows(a, rows.to_vec())))
    }

    /// Column-wise maximum over rows, giving a `1×c` row.
    pub fn max_pool_rows(&mut self, a: Var) -> Result<Var, ShapeError> {
        let (r, c) = require_matrix("max_pool_rows", self.value(a))?;
        if r == 0 {
            return Err(ShapeError::new("max_pool_rows", format!("[{r}, {c}]")));
        }
        let src = self.value(a);
        let mut arg = vec![0usize; c];
        let mut out = src.row_slice(0).to_vec();
        for i in 1..r {
            for (j, &x) in src.row_slice(i).iter().enumerate() {
                if x > out[j] {
                    out[j] = x;
                    arg[j] = i;
                }
            }
        }
        Ok(self.push(Tensor::row(out), Op::MaxPoolRows(a, arg)))
    }

    pub fn avg_pool_rows(&mut self, a: Var) -> Result<Var, ShapeError> {
        let (r, c) = require_matrix("avg_pool_rows", self.value(a))?;
        if r == 0 {
            return Err(ShapeError::new("avg_pool_rows", format!("[{r}, {c}]")));
        }
        let mut out = column_sums(self.value(a));
        for x in &mut out {
            *x /= r as f64;
        }
        Ok(self.push(Tensor::row(out), Op::AvgPoolRows(a)))
    }

    pub fn sum_pool_rows(&mut self, a: Var) -> Result<Var, ShapeError> {
        let (r, c) = require_matrix("sum_pool_rows", self.value(a))?;
        if r == 0 {
            return Err(ShapeError::new("sum_pool_rows", format!("[{r}, {c}]")));
        }
        let out = column_sums(self.value(a));
        Ok(self.push(Tensor::row(out), Op::SumPoolRows(a)))
    }

    /// Sum of all entries as a 1×1 tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(total), Op::Sum(a))
    }

    /// Mean cross-entropy of row-wise softmax over `logits` against one
    /// target class per row.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var, ShapeError> {
        let (r, c) = require_matrix("cross_entropy", self.value(logits))?;
        if targets.len() != r || r == 0 {
            return Err(ShapeError::new("cross_entropy", format!("{} targets for [{r}, {c}]", targets.len())));
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= c) {
            return Err(ShapeError::new("cross_entropy", format!("class {bad} of {c}")));
        }
        let mut probs = vec![0.0; r * c];
        let mut loss = 0.0;
        for (i, (row, p)) in self.value(logits).data().chunks(c).zip(probs.chunks_mut(c)).enumerate() {
            softmax_row(row, p);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_z = max + libm::log(row.iter().map(|&x| libm::exp(x - max)).sum::<f64>());
            loss += log_z - row[targets[i]];
        }
        let value = Tensor::scalar(loss / r as f64);
        Ok(self.push(value, Op::CrossEntropy(logits, targets.to_vec(), Tensor::matrix(r, c, probs))))
    }

    /// Gradients of the scalar `loss` with respect to every recorded node.
    pub fn backward(&self, loss: Var) -> Result<Gradients, ShapeError> {
        let shape = self.value(loss).shape();
        if shape != [1, 1] {
            return Err(ShapeError::new("backward", format!("loss must be 1x1, got {shape:?}")));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (n, k, m) = (ta.rows(), ta.cols(), tb.cols());
                    let ga = matmul_raw(g.data(), tb.transpose().data(), n, m, k);
                    let gb = matmul_raw(ta.transpose().data(), g.data(), k, n, m);
                    accumulate(&mut grads, *a, Tensor::matrix(n, k, ga));
                    accumulate(&mut grads, *b, Tensor::matrix(k, m, gb));
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g.clone());
                }
                Op::AddRow(a, bias) => {
                    accumulate(&mut grads, *bias, Tensor::row(column_sums(&g)));
                    accumulate(&mut grads, *a, g.clone());
                }
                Op::Scale(a, f) => accumulate(&mut grads, *a, map(&g, |x| x * f)),
                Op::ScaleRows(a, factors) => {
                    let c = g.cols();
                    let data = g
                        .data()
                        .chunks(c)
                        .zip(factors)
                        .flat_map(|(row, &f)| row.iter().map(move |x| x * f))
                        .collect();
                    accumulate(&mut grads, *a, Tensor::matrix(g.rows(), c, data));
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let data = g.data().iter().zip(y.data()).map(|(d, s)| d * s * (1.0 - s)).collect();
                    accumulate(&mut grads, *a, Tensor::matrix(g.rows(), g.cols(), data));
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let data = g.data().iter().zip(x.data()).map(|(d, &x)| if x > 0.0 { *d } else { 0.0 }).collect();
                    accumulate(&mut grads, *a, Tensor::matrix(g.rows(), g.cols(), data));
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let data = g.data().iter().zip(y.data()).map(|(d, t)| d * (1.0 - t * t)).collect();
                    accumulate(&mut grads, *a, Tensor::matrix(g.rows(), g.cols(), data));
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let c = y.cols();
                    let mut data = vec![0.0; y.len()];
                    for ((dy, yr), out) in g.data().chunks(c).zip(y.data().chunks(c)).zip(data.chunks_mut(c)) {
                        let dot: f64 = dy.iter().zip(yr).map(|(a, b)| a * b).sum();
                        for ((o, d), s) in out.iter_mut().zip(dy).zip(yr) {
                            *o = s * (d - dot);
                        }
                    }
                    accumulate(&mut grads, *a, Tensor::matrix(y.rows(), c, data));
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    let total = g.cols();
                    for &p in parts {
                        let (r, c) = dims(self.value(p));
                        let mut data = Vec::with_capacity(r * c);
                        for i in 0..r {
                            data.extend_from_slice(&g.data()[i * total + offset..i * total + offset + c]);
                        }
                        accumulate(&mut grads, p, Tensor::matrix(r, c, data));
                        offset += c;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (r, c) = dims(self.value(p));
                        let data = g.data()[offset * c..(offset + r) * c].to_vec();
                        accumulate(&mut grads, p, Tensor::matrix(r, c, data));
                        offset += r;
                    }
                }
                Op::GatherRows(a, rows) => {
                    let mut out = Tensor::zeros_like(self.value(*a));
                    let c = out.cols();
                    for (k, &i) in rows.iter().enumerate() {
                        for (o, d) in out.data_mut()[i * c..(i + 1) * c].iter_mut().zip(g.row_slice(k)) {
                            *o += d;
                        }
                    }
                    accumulate(&mut grads, *a, out);
                }
                Op::MaxPoolRows(a, arg) => {
                    let mut out = Tensor::zeros_like(self.value(*a));
                    let c = out.cols();
                    for (j, &i) in arg.iter().enumerate() {
                        out.data_mut()[i * c + j] = g.data()[j];
                    }
                    accumulate(&mut grads, *a, out);
                }
                Op::AvgPoolRows(a) | Op::SumPoolRows(a) => {
                    let (r, c) = dims(self.value(*a));
                    let scale = if matches!(node.op, Op::AvgPoolRows(_)) { 1.0 / r as f64 } else { 1.0 };
                    let data = (0..r).flat_map(|_| g.data().iter().map(move |d| d * scale)).collect();
                    accumulate(&mut grads, *a, Tensor::matrix(r, c, data));
                }
                Op::Sum(a) => {
                    let (r, c) = dims(self.value(*a));
                    accumulate(&mut grads, *a, Tensor::matrix(r, c, vec![g.item(); r * c]));
                }
                Op::CrossEntropy(a, targets, probs) => {
                    let (r, c) = dims(probs);
                    let scale = g.item() / r as f64;
                    let mut data = probs.data().to_vec();
                    for (i, &t) in targets.iter().enumerate() {
                        data[i * c + t] -= 1.0;
                    }
                    for x in &mut data {
                        *x *= scale;
                    }
                    accumulate(&mut grads, *a, Tensor::matrix(r, c, data));
                }
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads, params: self.params.clone() })
    }
}

fn column_sums(t: &Tensor) -> Vec<f64> {
    let c = t.cols();
    let mut out = vec![0.0; c];
    for row in t.data().chunks(c) {
        for (o, x) in out.iter_mut().zip(row) {
            *o += x;
        }
    }
    out
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Result of [`Tape::backward`].
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    params: Vec<(ParamId, Var)>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`; `None` when `v` does not
    /// influence the loss.
    pub fn wrt(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// One gradient per stored parameter, zeros where no path exists.
    pub fn for_params(&self, store: &ParamStore) -> Vec<Tensor> {
        let mut out: Vec<Tensor> = store.iter().map(|(_, _, t)| Tensor::zeros_like(t)).collect();
        for &(id, v) in &self.params {
            if let Some(g) = self.wrt(v) {
                out[id.0] = g.clone();
            }
        }
        out
    }
}
