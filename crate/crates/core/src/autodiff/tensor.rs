use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use super::ops::{self, numel, OpKind, View};
use crate::error::{Error, Result};

struct Node {
    shape: Vec<usize>,
    values: Vec<f64>,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
    op: Option<Recorded>,
}

struct Recorded {
    kind: OpKind,
    inputs: Vec<usize>,
}

#[derive(Default)]
struct TapeInner {
    nodes: Vec<Node>,
}

/// Define-by-run gradient tape.
///
/// Every tensor lives in the tape's arena and is addressed by its insertion
/// index, so insertion order is a topological order of the graph. A tape is
/// confined to the thread that created it.
#[derive(Clone, Default)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a leaf tensor. Values must be finite and match the shape.
    pub fn leaf(&self, shape: &[usize], values: Vec<f64>, requires_grad: bool) -> Result<Tensor> {
        if numel(shape) != values.len() {
            return Err(Error::InvalidShape {
                op: "leaf",
                shape: shape.to_vec(),
                reason: format!("{} values supplied", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("leaf"));
        }
        Ok(self.push(Node {
            shape: shape.to_vec(),
            values,
            requires_grad,
            grad: None,
            op: None,
        }))
    }

    /// Leaf that participates in gradient computation.
    pub fn var(&self, shape: &[usize], values: Vec<f64>) -> Result<Tensor> {
        self.leaf(shape, values, true)
    }

    pub fn constant(&self, shape: &[usize], values: Vec<f64>) -> Result<Tensor> {
        self.leaf(shape, values, false)
    }

    /// Number of tensors held by the tape.
    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of operations recorded for the backward pass.
    pub fn recorded_ops(&self) -> usize {
        self.inner
            .borrow()
            .nodes
            .iter()
            .filter(|n| n.op.is_some())
            .count()
    }

    fn push(&self, node: Node) -> Tensor {
        let mut inner = self.inner.borrow_mut();
        inner.nodes.push(node);
        Tensor {
            tape: self.clone(),
            id: inner.nodes.len() - 1,
        }
    }

    fn same(&self, other: &Tape) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape")
            .field("tensors", &self.len())
            .field("recorded_ops", &self.recorded_ops())
            .finish()
    }
}

/// Handle to a dense `f64` array stored on a [`Tape`].
#[derive(Clone)]
pub struct Tensor {
    tape: Tape,
    id: usize,
}

/// Applies `kind` to `inputs`, recording the operation when any input
/// requires a gradient.
pub fn forward_op(kind: OpKind, inputs: &[&Tensor]) -> Result<Tensor> {
    let tape = inputs
        .first()
        .map(|t| t.tape.clone())
        .ok_or_else(|| Error::InvalidArgument(format!("{} with no inputs", kind.name())))?;
    if inputs.iter().any(|t| !t.tape.same(&tape)) {
        return Err(Error::TapeMismatch);
    }
    let (shape, values, requires_grad) = {
        let inner = tape.inner.borrow();
        let views: Vec<View<'_>> = inputs
            .iter()
            .map(|t| {
                let n = &inner.nodes[t.id];
                View {
                    shape: &n.shape,
                    data: &n.values,
                }
            })
            .collect();
        let (shape, values) = ops::forward(&kind, &views)?;
        let requires_grad = inputs.iter().any(|t| inner.nodes[t.id].requires_grad);
        (shape, values, requires_grad)
    };
    let op = requires_grad.then(|| Recorded {
        kind,
        inputs: inputs.iter().map(|t| t.id).collect(),
    });
    Ok(tape.push(Node {
        shape,
        values,
        requires_grad,
        grad: None,
        op,
    }))
}

impl Tensor {
    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.inner.borrow().nodes[self.id].shape.clone()
    }

    pub fn len(&self) -> usize {
        self.tape.inner.borrow().nodes[self.id].values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        self.tape.inner.borrow().nodes[self.id].values.clone()
    }

    /// Runs `f` on the stored values without copying them.
    pub fn with_values<T>(&self, f: impl FnOnce(&[f64]) -> T) -> T {
        f(&self.tape.inner.borrow().nodes[self.id].values)
    }

    /// First stored value; the whole value for a scalar.
    pub fn item(&self) -> f64 {
        self.tape.inner.borrow().nodes[self.id].values[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.inner.borrow().nodes[self.id].requires_grad
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.tape.inner.borrow().nodes[self.id].grad.clone()
    }

    pub fn zero_grad(&self) {
        self.tape.inner.borrow_mut().nodes[self.id].grad = None;
    }

    /// Constant copy of this tensor with no gradient connection.
    pub fn detach(&self) -> Tensor {
        let (shape, values) = {
            let inner = self.tape.inner.borrow();
            let n = &inner.nodes[self.id];
            (n.shape.clone(), n.values.clone())
        };
        self.tape.push(Node {
            shape,
            values,
            requires_grad: false,
            grad: None,
            op: None,
        })
    }

    /// Accumulates `d self / d t` into every reachable tensor `t` that
    /// requires a gradient. Repeated calls add to existing gradients.
    pub fn backward(&self) -> Result<()> {
        let mut inner = self.tape.inner.borrow_mut();
        let root = &inner.nodes[self.id];
        if root.values.len() != 1 {
            return Err(Error::NotScalar(root.shape.clone()));
        }
        if !root.requires_grad {
            return Err(Error::NotAttached);
        }
        let mut pending: Vec<Option<Vec<f64>>> = vec![None; self.id + 1];
        pending[self.id] = Some(vec![1.0]);
        for i in (0..=self.id).rev() {
            let Some(g) = pending[i].take() else {
                continue;
            };
            if let Some(op) = &inner.nodes[i].op {
                let views: Vec<View<'_>> = op
                    .inputs
                    .iter()
                    .map(|&j| View {
                        shape: &inner.nodes[j].shape,
                        data: &inner.nodes[j].values,
                    })
                    .collect();
                let out = View {
                    shape: &inner.nodes[i].shape,
                    data: &inner.nodes[i].values,
                };
                let contribs = ops::backward(&op.kind, &views, out, &g);
                for (&j, c) in op.inputs.iter().zip(contribs) {
                    if !inner.nodes[j].requires_grad {
                        continue;
                    }
                    match &mut pending[j] {
                        Some(acc) => acc.iter_mut().zip(&c).for_each(|(a, v)| *a += v),
                        slot => *slot = Some(c),
                    }
                }
            }
            let node = &mut inner.nodes[i];
            match &mut node.grad {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, v)| *a += v),
                slot => *slot = Some(g),
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        forward_op(OpKind::Add, &[self, other])
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        forward_op(OpKind::Subtract, &[self, other])
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        forward_op(OpKind::Multiply, &[self, other])
    }

    pub fn div(&self, other: &Tensor) -> Result<Tensor> {
        forward_op(OpKind::Divide, &[self, other])
    }

    pub fn neg(&self) -> Result<Tensor> {
        forward_op(OpKind::Negate, &[self])
    }

    pub fn exp(&self) -> Result<Tensor> {
        forward_op(OpKind::Exponent, &[self])
    }

    pub fn ln(&self) -> Result<Tensor> {
        forward_op(OpKind::Logarithm, &[self])
    }

    pub fn powf(&self, exponent: f64) -> Result<Tensor> {
        forward_op(OpKind::Power(exponent), &[self])
    }

    pub fn sum_axis(&self, axis: usize) -> Result<Tensor> {
        forward_op(OpKind::SumAxis(axis), &[self])
    }

    pub fn mean_axis(&self, axis: usize) -> Result<Tensor> {
        forward_op(OpKind::MeanAxis(axis), &[self])
    }

    pub fn sum(&self) -> Result<Tensor> {
        forward_op(OpKind::Sum, &[self])
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        forward_op(OpKind::MatMul, &[self, other])
    }

    pub fn relu(&self) -> Result<Tensor> {
        forward_op(OpKind::Relu, &[self])
    }

    pub fn softmax(&self, axis: usize) -> Result<Tensor> {
        forward_op(OpKind::SoftmaxAxis(axis), &[self])
    }

    pub fn abs(&self) -> Result<Tensor> {
        forward_op(OpKind::AbsoluteValue, &[self])
    }

    pub fn square(&self) -> Result<Tensor> {
        forward_op(OpKind::Square, &[self])
    }

    pub fn index_select(&self, axis: usize, indices: &[usize]) -> Result<Tensor> {
        forward_op(
            OpKind::IndexSelect {
                axis,
                indices: indices.to_vec(),
            },
            &[self],
        )
    }

    pub fn broadcast(&self, batch: usize) -> Result<Tensor> {
        forward_op(OpKind::Broadcast(batch), &[self])
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        forward_op(OpKind::Reshape(shape.to_vec()), &[self])
    }

    pub fn scale(&self, factor: f64) -> Result<Tensor> {
        forward_op(OpKind::Scale(factor), &[self])
    }

    pub fn add_scalar(&self, offset: f64) -> Result<Tensor> {
        forward_op(OpKind::AddScalar(offset), &[self])
    }

    pub fn clamp_min(&self, floor: f64) -> Result<Tensor> {
        forward_op(OpKind::ClampMin(floor), &[self])
    }
}

/// Concatenates tensors along `axis`.
pub fn concat(tensors: &[&Tensor], axis: usize) -> Result<Tensor> {
    forward_op(OpKind::Concatenate(axis), tensors)
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = self.tape.inner.borrow();
        let n = &inner.nodes[self.id];
        f.debug_struct("Tensor")
            .field("shape", &n.shape)
            .field("values", &n.values)
            .field("requires_grad", &n.requires_grad)
            .finish()
    }
}
