//! Reverse-mode automatic differentiation over [`Matrix`] values.
//!
//! A [`Tape`] records operations eagerly: every call computes its value
//! immediately and appends a node whose inputs are earlier nodes, so the
//! node list is always in topological order. [`Tape::backward`] walks the
//! list once in reverse. Trainable tensors live in a [`ParamStore`] outside
//! the tape; a tape is built for one update and then dropped.

use crate::error::{Error, Result};
use crate::tensor::{matmul_at_acc, matmul_bt_acc, sigmoid, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named trainable tensors.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    values: Vec<Matrix>,
    names: Vec<String>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        self.values.push(value);
        self.names.push(name.into());
        ParamId(self.values.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }
}

/// Gradients aligned with a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Matrix>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Gradients {
            grads: store
                .values
                .iter()
                .map(|m| Matrix::zeros(m.rows(), m.cols()))
                .collect(),
        }
    }

    pub fn from_matrices(grads: Vec<Matrix>) -> Self {
        Gradients { grads }
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.grads[id.0]
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &Gradients, factor: f64) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            axpy(a, factor, b);
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Matrix> {
        self.grads.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(Matrix::is_finite)
    }

    pub fn max_abs(&self) -> f64 {
        self.grads.iter().fold(0.0, |m, g| m.max(g.max_abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// Adds a 1xC row to every row of an RxC matrix.
    AddRow(NodeId, NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Exp(NodeId),
    Affine { x: NodeId, scale: f64 },
    SumAll(NodeId),
    StackRows(Vec<NodeId>),
    SliceCols { x: NodeId, start: usize },
    LogSoftmaxRows(NodeId),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Matrix,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
    adjoints: Option<Vec<Option<Matrix>>>,
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

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Matrix, needs_grad: bool) -> Result<NodeId> {
        if self.adjoints.is_some() {
            return Err(Error::usage("tape already differentiated"));
        }
        if !value.is_finite() {
            return Err(Error::non_finite(format!("forward value of {op:?}")));
        }
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    fn needs(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].needs_grad)
    }

    pub fn constant(&mut self, value: Matrix) -> Result<NodeId> {
        self.push(Op::Constant, value, false)
    }

    /// Leaf for a trainable tensor. Registering the same id twice returns
    /// the same node, so a parameter used at every time step accumulates
    /// its gradient in one place.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Result<NodeId> {
        if let Some(Some(node)) = self.param_nodes.get(id.0) {
            return Ok(*node);
        }
        let node = self.push(Op::Param, store.get(id).clone(), true)?;
        if self.param_nodes.len() <= id.0 {
            self.param_nodes.resize(id.0 + 1, None);
        }
        self.param_nodes[id.0] = Some(node);
        Ok(node)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        let g = self.needs(&[a, b]);
        self.push(Op::MatMul(a, b), value, g)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y)?;
        let g = self.needs(&[a, b]);
        self.push(Op::Add(a, b), value, g)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y)?;
        let g = self.needs(&[a, b]);
        self.push(Op::Sub(a, b), value, g)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y)?;
        let g = self.needs(&[a, b]);
        self.push(Op::Mul(a, b), value, g)
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (m, r) = (self.value(a), self.value(row));
        if r.rows() != 1 || r.cols() != m.cols() {
            return Err(Error::config(format!(
                "add_row: {:?} onto {:?}",
                r.shape(),
                m.shape()
            )));
        }
        let mut value = m.clone();
        let cols = m.cols();
        for (i, x) in value.data_mut().iter_mut().enumerate() {
            *x += r.data()[i % cols];
        }
        let g = self.needs(&[a, row]);
        self.push(Op::AddRow(a, row), value, g)
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        let value = self.value(a).map(f64::tanh);
        let g = self.needs(&[a]);
        self.push(Op::Tanh(a), value, g)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        let value = self.value(a).map(sigmoid);
        let g = self.needs(&[a]);
        self.push(Op::Sigmoid(a), value, g)
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId> {
        let value = self.value(a).map(f64::exp);
        let g = self.needs(&[a]);
        self.push(Op::Exp(a), value, g)
    }

    /// `scale * x + shift`, elementwise.
    pub fn affine(&mut self, x: NodeId, scale: f64, shift: f64) -> Result<NodeId> {
        let value = self.value(x).map(|v| scale * v + shift);
        let g = self.needs(&[x]);
        self.push(Op::Affine { x, scale }, value, g)
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> Result<NodeId> {
        self.affine(x, factor, 0.0)
    }

    /// `1 - x`, elementwise.
    pub fn one_minus(&mut self, x: NodeId) -> Result<NodeId> {
        self.affine(x, -1.0, 1.0)
    }

    pub fn sum_all(&mut self, a: NodeId) -> Result<NodeId> {
        let value = Matrix::scalar(self.value(a).sum());
        let g = self.needs(&[a]);
        self.push(Op::SumAll(a), value, g)
    }

    pub fn stack_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::config("stack_rows of nothing"));
        }
        let blocks: Vec<&Matrix> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Matrix::stack_rows(&blocks)?;
        let g = self.needs(parts);
        self.push(Op::StackRows(parts.to_vec()), value, g)
    }

    /// Columns `start..start + len` of `x`.
    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let v = self.value(x);
        if start + len > v.cols() {
            return Err(Error::config(format!(
                "slice_cols {start}..{} of width {}",
                start + len,
                v.cols()
            )));
        }
        let value = Matrix::from_fn(v.rows(), len, |i, j| v.get(i, start + j));
        let g = self.needs(&[x]);
        self.push(Op::SliceCols { x, start }, value, g)
    }

    /// Row-wise `x - logsumexp(x)`.
    pub fn log_softmax_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let x = self.value(a);
        let mut value = x.clone();
        let cols = x.cols();
        for row in value.data_mut().chunks_mut(cols) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        let g = self.needs(&[a]);
        self.push(Op::LogSoftmaxRows(a), value, g)
    }

    /// Populates adjoints for every node and returns parameter gradients.
    ///
    /// A tape can be differentiated once; adjoints of nodes the loss does
    /// not depend on are exactly zero.
    pub fn backward(&mut self, loss: NodeId, store: &ParamStore) -> Result<Gradients> {
        if self.adjoints.is_some() {
            return Err(Error::usage("backward called twice on one tape"));
        }
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::usage(format!(
                "loss must be 1x1, got {:?}",
                self.value(loss).shape()
            )));
        }
        let mut adj: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        adj[loss.0] = Some(Matrix::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let Some(dy) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            if node.needs_grad {
                self.propagate(node, &dy, &mut adj);
            }
            adj[i] = Some(dy);
        }

        let mut grads = Gradients::zeros_like(store);
        for (p, node) in self.param_nodes.iter().enumerate() {
            if let Some(node) = node {
                if let Some(g) = &adj[node.0] {
                    grads.grads[p] = g.clone();
                }
            }
        }
        self.adjoints = Some(adj);
        if !grads.is_finite() {
            return Err(Error::non_finite("parameter gradients"));
        }
        Ok(grads)
    }

    /// Adjoint of `id` after [`Tape::backward`]; zeros where the loss does not reach.
    pub fn adjoint(&self, id: NodeId) -> Option<Matrix> {
        let adj = self.adjoints.as_ref()?;
        let v = self.value(id);
        Some(
            adj[id.0]
                .clone()
                .unwrap_or_else(|| Matrix::zeros(v.rows(), v.cols())),
        )
    }

    fn propagate(&self, node: &Node, dy: &Matrix, adj: &mut [Option<Matrix>]) {
        let nodes = &self.nodes;
        let wants = |id: NodeId| nodes[id.0].needs_grad;
        match &node.op {
            Op::Constant | Op::Param => {}
            Op::MatMul(a, b) => {
                if wants(*a) {
                    let acc = slot(adj, *a, nodes);
                    matmul_bt_acc(dy, &nodes[b.0].value, acc);
                }
                if wants(*b) {
                    let acc = slot(adj, *b, nodes);
                    matmul_at_acc(&nodes[a.0].value, dy, acc);
                }
            }
            Op::Add(a, b) => {
                for &x in [a, b] {
                    if wants(x) {
                        slot(adj, x, nodes).add_assign(dy);
                    }
                }
            }
            Op::Sub(a, b) => {
                if wants(*a) {
                    slot(adj, *a, nodes).add_assign(dy);
                }
                if wants(*b) {
                    axpy(slot(adj, *b, nodes), -1.0, dy);
                }
            }
            Op::Mul(a, b) => {
                if wants(*a) {
                    let other = &nodes[b.0].value;
                    let acc = slot(adj, *a, nodes);
                    for ((g, &d), &o) in acc.data_mut().iter_mut().zip(dy.data()).zip(other.data())
                    {
                        *g += d * o;
                    }
                }
                if wants(*b) {
                    let other = &nodes[a.0].value;
                    let acc = slot(adj, *b, nodes);
                    for ((g, &d), &o) in acc.data_mut().iter_mut().zip(dy.data()).zip(other.data())
                    {
                        *g += d * o;
                    }
                }
            }
            Op::AddRow(a, row) => {
                if wants(*a) {
                    slot(adj, *a, nodes).add_assign(dy);
                }
                if wants(*row) {
                    let cols = dy.cols();
                    let acc = slot(adj, *row, nodes);
                    for r in dy.data().chunks(cols) {
                        for (g, &d) in acc.data_mut().iter_mut().zip(r) {
                            *g += d;
                        }
                    }
                }
            }
            Op::Tanh(a) => {
                let y = &node.value;
                let acc = slot(adj, *a, nodes);
                for ((g, &d), &v) in acc.data_mut().iter_mut().zip(dy.data()).zip(y.data()) {
                    *g += d * (1.0 - v * v);
                }
            }
            Op::Sigmoid(a) => {
                let y = &node.value;
                let acc = slot(adj, *a, nodes);
                for ((g, &d), &v) in acc.data_mut().iter_mut().zip(dy.data()).zip(y.data()) {
                    *g += d * v * (1.0 - v);
                }
            }
            Op::Exp(a) => {
                let y = &node.value;
                let acc = slot(adj, *a, nodes);
                for ((g, &d), &v) in acc.data_mut().iter_mut().zip(dy.data()).zip(y.data()) {
                    *g += d * v;
                }
            }
            Op::Affine { x, scale } => axpy(slot(adj, *x, nodes), *scale, dy),
            Op::SumAll(a) => {
                let d = dy.item();
                for g in slot(adj, *a, nodes).data_mut() {
                    *g += d;
                }
            }
            Op::StackRows(parts) => {
                let cols = dy.cols();
                let mut offset = 0;
                for &p in parts {
                    let n = nodes[p.0].value.len();
                    if wants(p) {
                        let src = &dy.data()[offset..offset + n];
                        for (g, &d) in slot(adj, p, nodes).data_mut().iter_mut().zip(src) {
                            *g += d;
                        }
                    }
                    offset += n;
                }
                debug_assert_eq!(offset, dy.rows() * cols);
            }
            Op::SliceCols { x, start } => {
                let acc = slot(adj, *x, nodes);
                let width = acc.cols();
                for (r, d_row) in dy.data().chunks(dy.cols()).enumerate() {
                    let dst = &mut acc.data_mut()[r * width + start..r * width + start + d_row.len()];
                    for (g, &d) in dst.iter_mut().zip(d_row) {
                        *g += d;
                    }
                }
            }
            Op::LogSoftmaxRows(a) => {
                let y = &node.value;
                let cols = y.cols();
                let acc = slot(adj, *a, nodes);
                for ((g_row, d_row), y_row) in acc
                    .data_mut()
                    .chunks_mut(cols)
                    .zip(dy.data().chunks(cols))
                    .zip(y.data().chunks(cols))
                {
                    let total: f64 = d_row.iter().sum();
                    for ((g, &d), &lp) in g_row.iter_mut().zip(d_row).zip(y_row) {
                        *g += d - lp.exp() * total;
                    }
                }
            }
        }
    }
}

fn slot<'a>(adj: &'a mut [Option<Matrix>], id: NodeId, nodes: &[Node]) -> &'a mut Matrix {
    adj[id.0].get_or_insert_with(|| {
        let v = &nodes[id.0].value;
        Matrix::zeros(v.rows(), v.cols())
    })
}

fn axpy(acc: &mut Matrix, alpha: f64, x: &Matrix) {
    for (g, &d) in acc.data_mut().iter_mut().zip(x.data()) {
        *g += alpha * d;
    }
}
