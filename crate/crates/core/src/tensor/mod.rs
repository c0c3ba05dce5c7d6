//! Dense single-precision matrices with reverse-mode gradients.
//!
//! A [`Tape`] records every differentiable operation of one forward pass
//! (define-by-run) and replays it backward to accumulate gradients. Values
//! are at most two-dimensional: vectors live as `1×n` rows, scalars as
//! `1×1`. Every operation validates shapes and rejects non-finite outputs.

use crate::error::{Error, Result};

mod ops;

/// Handle to a value recorded on a [`Tape`].
pub type TensorId = usize;

/// Score written into masked attention positions before the softmax.
///
/// Finite (so the no-NaN/Inf invariant holds) yet negative enough that
/// `exp(MASK_VALUE - row_max)` underflows to exactly zero for any row
/// maximum that survives the finiteness checks.
pub const MASK_VALUE: f32 = f32::MIN / 2.0;

/// An owned value: shape, row-major data, and whether gradients are wanted.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
    requires_grad: bool,
}

impl Tensor {
    /// Build a tensor from a shape and row-major data.
    pub fn from_vec(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!("dimensions must be positive, got {shape:?}")));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} holds {numel} elements but data has {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data, requires_grad: false })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Tensor { shape, data: vec![0.0; numel], requires_grad: false }
    }

    pub fn scalar(v: f32) -> Self {
        Tensor { shape: vec![1], data: vec![v], requires_grad: false }
    }

    /// Mark the tensor as a trainable parameter.
    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// (rows, cols) view: vectors are rows, scalars are 1×1.
    fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.len() {
            1 => Ok((1, self.shape[0])),
            2 => Ok((self.shape[0], self.shape[1])),
            _ => Err(Error::Shape(format!("expected rank ≤ 2, got shape {:?}", self.shape))),
        }
    }
}

/// One recorded node: its value plus how it was produced.
struct Node {
    data: Vec<f32>,
    rows: usize,
    cols: usize,
    requires_grad: bool,
    op: Op,
}

impl Node {
    fn numel(&self) -> usize {
        self.rows * self.cols
    }
}

enum Op {
    Leaf,
    Matmul { a: TensorId, b: TensorId },
    /// out = a · bᵀ with b given row-major as n×k.
    MatmulNt { a: TensorId, b: TensorId },
    Add { a: TensorId, b: TensorId },
    MulElem { a: TensorId, b: TensorId },
    /// Row-broadcast bias add over the last dimension.
    AddBias { x: TensorId, bias: TensorId },
    Scale { x: TensorId, factor: f32 },
    SoftmaxRows { x: TensorId },
    /// Masked-out scores replaced by [`MASK_VALUE`]; gradient flows only
    /// through kept positions.
    MaskedScores { x: TensorId, keep: Vec<bool> },
    LayerNorm { x: TensorId, gain: TensorId, bias: TensorId, xhat: Vec<f32>, inv_std: Vec<f32> },
    Gelu { x: TensorId },
    Reshape { x: TensorId },
    SliceCols { x: TensorId, start: usize, width: usize },
    ConcatCols { parts: Vec<(TensorId, usize)> },
    /// Pure index permutation: out[i] = in[map[i]].
    Gather { x: TensorId, map: Vec<u32> },
    /// out = −ln(max(x[index], floor)), scalar.
    NegLogEntry { x: TensorId, index: usize, floor: f32 },
    SumAll { x: TensorId },
}

/// Gradients produced by [`Tape::backward`], indexed by [`TensorId`].
pub struct Gradients {
    grads: Vec<Option<Vec<f32>>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. node `id`, if any flowed to it.
    pub fn get(&self, id: TensorId) -> Option<&[f32]> {
        self.grads.get(id).and_then(|g| g.as_deref())
    }

    /// Gradient or zeros when the node is disconnected from the loss.
    pub fn of(&self, id: TensorId, numel: usize) -> Vec<f32> {
        match self.get(id) {
            Some(g) => g.to_vec(),
            None => vec![0.0; numel],
        }
    }
}

/// Define-by-run operation record. Build one per forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Record an owned tensor as a leaf.
    pub fn leaf(&mut self, t: Tensor) -> Result<TensorId> {
        let (rows, cols) = t.dims2()?;
        Ok(self.push(t.data, rows, cols, t.requires_grad, Op::Leaf))
    }

    /// Record a parameter leaf (clones the data, keeps gradients on).
    pub fn param(&mut self, t: &Tensor) -> Result<TensorId> {
        let (rows, cols) = t.dims2()?;
        Ok(self.push(t.data.clone(), rows, cols, true, Op::Leaf))
    }

    /// Record a constant leaf (no gradient).
    pub fn constant(&mut self, rows: usize, cols: usize, data: Vec<f32>) -> Result<TensorId> {
        if rows * cols != data.len() {
            return Err(Error::Shape(format!(
                "constant {rows}x{cols} needs {} elements, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(self.push(data, rows, cols, false, Op::Leaf))
    }

    pub fn value(&self, id: TensorId) -> &[f32] {
        &self.nodes[id].data
    }

    pub fn dims(&self, id: TensorId) -> (usize, usize) {
        (self.nodes[id].rows, self.nodes[id].cols)
    }

    /// Copy a node's value out as an owned [`Tensor`].
    pub fn to_tensor(&self, id: TensorId) -> Tensor {
        let n = &self.nodes[id];
        Tensor { shape: vec![n.rows, n.cols], data: n.data.clone(), requires_grad: false }
    }

    fn push(&mut self, data: Vec<f32>, rows: usize, cols: usize, requires_grad: bool, op: Op) -> TensorId {
        self.nodes.push(Node { data, rows, cols, requires_grad, op });
        self.nodes.len() - 1
    }

    fn node(&self, id: TensorId) -> &Node {
        &self.nodes[id]
    }

    /// Push an op output after verifying it is finite.
    fn push_checked(
        &mut self,
        what: &str,
        data: Vec<f32>,
        rows: usize,
        cols: usize,
        requires_grad: bool,
        op: Op,
    ) -> Result<TensorId> {
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!("{what} produced a non-finite value")));
        }
        Ok(self.push(data, rows, cols, requires_grad, op))
    }

    /// Reverse-mode sweep from a scalar `loss` node.
    ///
    /// Walks the tape once in reverse creation order (a valid reverse
    /// topological order for define-by-run graphs), accumulating gradients
    /// additively across fan-out.
    pub fn backward(&self, loss: TensorId) -> Result<Gradients> {
        let ln = self
            .nodes
            .get(loss)
            .ok_or_else(|| Error::Shape(format!("loss id {loss} not on tape")))?;
        if ln.numel() != 1 {
            return Err(Error::Shape(format!(
                "loss must be scalar, got {}x{}",
                ln.rows, ln.cols
            )));
        }
        let mut grads: Vec<Option<Vec<f32>>> = vec![None; self.nodes.len()];
        grads[loss] = Some(vec![1.0]);

        for id in (0..=loss).rev() {
            if grads[id].is_none() || !self.nodes[id].requires_grad {
                continue;
            }
            let upstream = grads[id].take().expect("grad present");
            self.backward_node(id, &upstream, &mut grads);
            grads[id] = Some(upstream);
        }
        Ok(Gradients { grads })
    }
}
