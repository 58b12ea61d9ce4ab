//! Reverse-mode automatic differentiation over dense f32 tensors.
//!
//! A [`Graph`] is an eager tape: every operation computes its output
//! immediately and records what it needs for the backward pass. Node inputs
//! always precede the node itself, so [`Graph::backward`] is a single reverse
//! sweep that visits each node at most once, accumulating gradients with `+=`
//! wherever a tensor fans out into several consumers.
//!
//! The operation set is exactly what the encoder, heads, and losses need:
//! elementwise add/sub/mul/scale/relu, matmul, valid (no padding) 3-d
//! convolution, global average pooling, row-wise L2 normalization, bias add,
//! sum/mean reductions, softmax cross-entropy, and detach (stop-gradient).
//! There is no broadcasting beyond scalars and no higher-order gradients.

mod ops;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense tensor: row-major f32 values plus an optional gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f32>,
    grad: Option<Vec<f32>>,
    requires_grad: bool,
}

impl Tensor {
    /// Builds a tensor, checking that the shape matches the value count and
    /// every dimension is positive.
    pub fn new(shape: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Shape(format!(
                "dimensions must be positive, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} wants {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Tensor {
            shape,
            values,
            grad: None,
            requires_grad: false,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor::new(shape, vec![0.0; len]).expect("positive dims")
    }

    pub fn scalar(v: f32) -> Self {
        Tensor::new(vec![1], vec![v]).expect("scalar")
    }

    /// Marks this tensor as a trainable leaf.
    pub fn with_requires_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn set_requires_grad(&mut self, requires_grad: bool) {
        self.requires_grad = requires_grad;
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn grad(&self) -> Option<&[f32]> {
        self.grad.as_deref()
    }

    /// Resets the gradient buffer to zeros, allocating it if needed.
    pub fn zero_grad(&mut self) {
        match &mut self.grad {
            Some(g) => g.fill(0.0),
            None => self.grad = Some(vec![0.0; self.values.len()]),
        }
    }

    /// Adds `delta` into the gradient buffer (allocating zeros first if the
    /// buffer does not exist yet).
    pub fn accumulate_grad(&mut self, delta: &[f32]) -> Result<()> {
        if delta.len() != self.values.len() {
            return Err(Error::Shape(format!(
                "gradient length {} does not match tensor length {}",
                delta.len(),
                self.values.len()
            )));
        }
        let g = self.grad.get_or_insert_with(|| vec![0.0; delta.len()]);
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += di;
        }
        Ok(())
    }
}

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Leaf,
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Scale { a: NodeId, factor: f32 },
    Relu { a: NodeId },
    MatMul { a: NodeId, b: NodeId },
    Conv3d { input: NodeId, kernel: NodeId, bias: NodeId, stride: [usize; 3] },
    GlobalAvgPool { input: NodeId },
    L2Normalize { input: NodeId, norms: Vec<f32> },
    BiasAdd { input: NodeId, bias: NodeId },
    SumAll { input: NodeId },
    MeanAll { input: NodeId },
    SoftmaxCrossEntropy { logits: NodeId, labels: Vec<usize>, probs: Vec<f32> },
    Detach { input: NodeId },
}

impl Op {
    fn inputs(&self) -> Vec<NodeId> {
        match self {
            Op::Leaf => Vec::new(),
            Op::Scale { a, .. } | Op::Relu { a } => vec![*a],
            Op::Add { a, b } | Op::Sub { a, b } | Op::Mul { a, b } | Op::MatMul { a, b } => {
                vec![*a, *b]
            }
            Op::Conv3d { input, kernel, bias, .. } => vec![*input, *kernel, *bias],
            Op::BiasAdd { input, bias } => vec![*input, *bias],
            Op::GlobalAvgPool { input }
            | Op::L2Normalize { input, .. }
            | Op::SumAll { input }
            | Op::MeanAll { input }
            | Op::Detach { input } => vec![*input],
            Op::SoftmaxCrossEntropy { logits, .. } => vec![*logits],
        }
    }
}

#[derive(Debug)]
pub(crate) struct Node {
    pub(crate) op: Op,
    pub(crate) shape: Vec<usize>,
    pub(crate) values: Vec<f32>,
    pub(crate) requires_grad: bool,
}

/// Eager computation tape.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f32>>>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    /// Number of nodes recorded so far.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Copies a tensor into the graph as a leaf.
    pub fn leaf(&mut self, t: &Tensor) -> NodeId {
        self.push(Op::Leaf, t.shape.clone(), t.values.clone(), t.requires_grad)
    }

    /// Leaf from raw parts with `requires_grad = false`.
    pub fn constant(&mut self, shape: Vec<usize>, values: Vec<f32>) -> Result<NodeId> {
        let t = Tensor::new(shape, values)?;
        Ok(self.leaf(&t))
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn values(&self, id: NodeId) -> &[f32] {
        &self.nodes[id.0].values
    }

    pub fn requires_grad(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Clones a node's value out of the graph as a plain tensor.
    pub fn to_tensor(&self, id: NodeId) -> Tensor {
        let node = &self.nodes[id.0];
        Tensor {
            shape: node.shape.clone(),
            values: node.values.clone(),
            grad: None,
            requires_grad: false,
        }
    }

    /// Gradient of the last `backward` call with respect to node `id`.
    ///
    /// `None` means no gradient reached the node (it was behind a detach, or
    /// does not require one).
    pub fn grad(&self, id: NodeId) -> Option<&[f32]> {
        self.grads.get(id.0).and_then(|g| g.as_deref())
    }

    /// Ids of the nodes feeding node `id`. Always strictly smaller than `id`,
    /// which is what makes the single reverse sweep in `backward` valid.
    pub fn op_inputs(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes[id.0].op.inputs()
    }

    pub(crate) fn push(
        &mut self,
        op: Op,
        shape: Vec<usize>,
        values: Vec<f32>,
        requires_grad: bool,
    ) -> NodeId {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            op,
            shape,
            values,
            requires_grad,
        });
        id
    }

    pub(crate) fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    /// Reverse sweep from a scalar loss. Populates per-node gradient buffers;
    /// read them back with [`Graph::grad`].
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.nodes[loss.0].values.len() != 1 {
            return Err(Error::Shape(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].shape
            )));
        }
        let mut grads: Vec<Option<Vec<f32>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for id in (0..=loss.0).rev() {
            if !self.nodes[id].requires_grad {
                continue;
            }
            let Some(gout) = grads[id].clone() else {
                continue;
            };
            self.propagate(id, &gout, &mut grads)?;
        }
        self.grads = grads;
        Ok(())
    }
}

/// Fetches (allocating if needed) the gradient buffer for node `id`.
pub(crate) fn grad_buf(
    grads: &mut [Option<Vec<f32>>],
    id: NodeId,
    len: usize,
) -> &mut [f32] {
    grads[id.0].get_or_insert_with(|| vec![0.0; len])
}
