//! Forward and backward kernels for every recorded operation.
//!
//! Kernels work on flat row-major buffers. Axis reductions decompose a
//! shape into `(outer, len, inner)` blocks around the reduced axis.

use crate::error::{Error, Result};

/// The operation kinds understood by the tape.
#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    Add,
    Subtract,
    Multiply,
    Divide,
    Negate,
    Exponent,
    Logarithm,
    /// Elementwise `x^p` for a constant exponent.
    Power(f64),
    SumAxis(usize),
    MeanAxis(usize),
    /// Sum of every element, producing a scalar.
    Sum,
    MatMul,
    Relu,
    SoftmaxAxis(usize),
    AbsoluteValue,
    Square,
    Concatenate(usize),
    IndexSelect { axis: usize, indices: Vec<usize> },
    /// Repeat the input along a new leading batch dimension.
    Broadcast(usize),
    Reshape(Vec<usize>),
    Scale(f64),
    AddScalar(f64),
    /// `max(x, floor)`; gradient passes where `x >= floor`.
    ClampMin(f64),
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::Subtract => "subtract",
            OpKind::Multiply => "multiply",
            OpKind::Divide => "divide",
            OpKind::Negate => "negate",
            OpKind::Exponent => "exponent",
            OpKind::Logarithm => "logarithm",
            OpKind::Power(_) => "power",
            OpKind::SumAxis(_) => "sum-over-axis",
            OpKind::MeanAxis(_) => "mean-over-axis",
            OpKind::Sum => "sum",
            OpKind::MatMul => "matrix-multiply",
            OpKind::Relu => "relu",
            OpKind::SoftmaxAxis(_) => "softmax-over-axis",
            OpKind::AbsoluteValue => "absolute-value",
            OpKind::Square => "square",
            OpKind::Concatenate(_) => "concatenate",
            OpKind::IndexSelect { .. } => "index-select",
            OpKind::Broadcast(_) => "broadcast",
            OpKind::Reshape(_) => "reshape",
            OpKind::Scale(_) => "scale",
            OpKind::AddScalar(_) => "add-scalar",
            OpKind::ClampMin(_) => "clamp-min",
        }
    }

    fn arity(&self) -> Option<usize> {
        match self {
            OpKind::Add | OpKind::Subtract | OpKind::Multiply | OpKind::Divide | OpKind::MatMul => {
                Some(2)
            }
            OpKind::Concatenate(_) => None,
            _ => Some(1),
        }
    }
}

/// Borrowed view of a tensor's data.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub shape: &'a [usize],
    pub data: &'a [f64],
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Which operand of a binary op is repeated along the leading dimension.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Bcast {
    None,
    Lhs,
    Rhs,
}

fn binary_layout(op: &'static str, a: &[usize], b: &[usize]) -> Result<(Vec<usize>, Bcast)> {
    if a == b {
        Ok((a.to_vec(), Bcast::None))
    } else if !a.is_empty() && &a[1..] == b {
        Ok((a.to_vec(), Bcast::Rhs))
    } else if !b.is_empty() && &b[1..] == a {
        Ok((b.to_vec(), Bcast::Lhs))
    } else {
        Err(Error::ShapeMismatch {
            op,
            lhs: a.to_vec(),
            rhs: b.to_vec(),
        })
    }
}

fn split_axis(op: &'static str, shape: &[usize], axis: usize) -> Result<(usize, usize, usize)> {
    if axis >= shape.len() {
        return Err(Error::InvalidShape {
            op,
            shape: shape.to_vec(),
            reason: format!("axis {axis} out of range"),
        });
    }
    Ok((
        numel(&shape[..axis]),
        shape[axis],
        numel(&shape[axis + 1..]),
    ))
}

fn drop_axis(shape: &[usize], axis: usize) -> Vec<usize> {
    let mut out = shape.to_vec();
    out.remove(axis);
    out
}

fn check_arity(kind: &OpKind, n: usize) -> Result<()> {
    match kind.arity() {
        Some(k) if k != n => Err(Error::InvalidArgument(format!(
            "{} expects {k} inputs, got {n}",
            kind.name()
        ))),
        None if n == 0 => Err(Error::InvalidArgument(format!(
            "{} expects at least one input",
            kind.name()
        ))),
        _ => Ok(()),
    }
}

fn unary(x: View<'_>, f: impl Fn(f64) -> f64) -> (Vec<usize>, Vec<f64>) {
    (x.shape.to_vec(), x.data.iter().map(|&v| f(v)).collect())
}

/// Runs the forward kernel, returning the output shape and values.
pub(crate) fn forward(kind: &OpKind, inputs: &[View<'_>]) -> Result<(Vec<usize>, Vec<f64>)> {
    check_arity(kind, inputs.len())?;
    let x = inputs[0];
    let out = match kind {
        OpKind::Add | OpKind::Subtract | OpKind::Multiply | OpKind::Divide => {
            let b = inputs[1];
            let (shape, bc) = binary_layout(kind.name(), x.shape, b.shape)?;
            if *kind == OpKind::Divide && b.data.contains(&0.0) {
                return Err(Error::DivisionByZero);
            }
            let n = numel(&shape);
            let f: fn(f64, f64) -> f64 = match kind {
                OpKind::Add => |p, q| p + q,
                OpKind::Subtract => |p, q| p - q,
                OpKind::Multiply => |p, q| p * q,
                _ => |p, q| p / q,
            };
            let values = (0..n)
                .map(|k| {
                    let (ia, ib) = operand_index(bc, k, x.data.len(), b.data.len());
                    f(x.data[ia], b.data[ib])
                })
                .collect();
            (shape, values)
        }
        OpKind::Negate => unary(x, |v| -v),
        OpKind::Exponent => unary(x, f64::exp),
        OpKind::Logarithm => {
            if let Some(&bad) = x.data.iter().find(|&&v| v <= 0.0) {
                return Err(Error::LogOfNonPositive(bad));
            }
            unary(x, f64::ln)
        }
        OpKind::Power(p) => unary(x, |v| v.powf(*p)),
        OpKind::SumAxis(axis) | OpKind::MeanAxis(axis) => {
            let (outer, len, inner) = split_axis(kind.name(), x.shape, *axis)?;
            let mean = matches!(kind, OpKind::MeanAxis(_));
            if mean && len == 0 {
                return Err(Error::InvalidShape {
                    op: kind.name(),
                    shape: x.shape.to_vec(),
                    reason: "mean over an empty axis".into(),
                });
            }
            let mut values = vec![0.0; outer * inner];
            for o in 0..outer {
                for l in 0..len {
                    let row = &x.data[(o * len + l) * inner..(o * len + l + 1) * inner];
                    for (acc, v) in values[o * inner..(o + 1) * inner].iter_mut().zip(row) {
                        *acc += v;
                    }
                }
            }
            if mean {
                values.iter_mut().for_each(|v| *v /= len as f64);
            }
            (drop_axis(x.shape, *axis), values)
        }
        OpKind::Sum => (Vec::new(), vec![x.data.iter().sum()]),
        OpKind::MatMul => {
            let b = inputs[1];
            let (m, k, n) = matmul_dims(x.shape, b.shape)?;
            let mut values = vec![0.0; m * n];
            for i in 0..m {
                for p in 0..k {
                    let a_ip = x.data[i * k + p];
                    let b_row = &b.data[p * n..(p + 1) * n];
                    for (o, bv) in values[i * n..(i + 1) * n].iter_mut().zip(b_row) {
                        *o += a_ip * bv;
                    }
                }
            }
            (vec![m, n], values)
        }
        OpKind::Relu => unary(x, |v| v.max(0.0)),
        OpKind::SoftmaxAxis(axis) => {
            let (outer, len, inner) = split_axis(kind.name(), x.shape, *axis)?;
            let mut values = vec![0.0; x.data.len()];
            for o in 0..outer {
                for i in 0..inner {
                    let idx = |l: usize| (o * len + l) * inner + i;
                    let max = (0..len)
                        .map(|l| x.data[idx(l)])
                        .fold(f64::NEG_INFINITY, f64::max);
                    let mut total = 0.0;
                    for l in 0..len {
                        let e = (x.data[idx(l)] - max).exp();
                        values[idx(l)] = e;
                        total += e;
                    }
                    for l in 0..len {
                        values[idx(l)] /= total;
                    }
                }
            }
            (x.shape.to_vec(), values)
        }
        OpKind::AbsoluteValue => unary(x, f64::abs),
        OpKind::Square => unary(x, |v| v * v),
        OpKind::Concatenate(axis) => concat_forward(inputs, *axis)?,
        OpKind::IndexSelect { axis, indices } => {
            let (outer, len, inner) = split_axis(kind.name(), x.shape, *axis)?;
            if let Some(&bad) = indices.iter().find(|&&i| i >= len) {
                return Err(Error::InvalidArgument(format!(
                    "index {bad} out of range for axis of length {len}"
                )));
            }
            let mut values = Vec::with_capacity(outer * indices.len() * inner);
            for o in 0..outer {
                for &l in indices {
                    let start = (o * len + l) * inner;
                    values.extend_from_slice(&x.data[start..start + inner]);
                }
            }
            let mut shape = x.shape.to_vec();
            shape[*axis] = indices.len();
            (shape, values)
        }
        OpKind::Broadcast(batch) => {
            let mut shape = Vec::with_capacity(x.shape.len() + 1);
            shape.push(*batch);
            shape.extend_from_slice(x.shape);
            (shape, x.data.repeat(*batch))
        }
        OpKind::Reshape(shape) => {
            if numel(shape) != x.data.len() {
                return Err(Error::ShapeMismatch {
                    op: kind.name(),
                    lhs: x.shape.to_vec(),
                    rhs: shape.clone(),
                });
            }
            (shape.clone(), x.data.to_vec())
        }
        OpKind::Scale(c) => unary(x, |v| v * c),
        OpKind::AddScalar(c) => unary(x, |v| v + c),
        OpKind::ClampMin(floor) => unary(x, |v| v.max(*floor)),
    };
    if out.1.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(kind.name()));
    }
    Ok(out)
}

fn operand_index(bc: Bcast, k: usize, a_len: usize, b_len: usize) -> (usize, usize) {
    match bc {
        Bcast::None => (k, k),
        Bcast::Lhs => (k % a_len, k),
        Bcast::Rhs => (k, k % b_len),
    }
}

fn matmul_dims(a: &[usize], b: &[usize]) -> Result<(usize, usize, usize)> {
    if a.len() != 2 || b.len() != 2 || a[1] != b[0] {
        return Err(Error::ShapeMismatch {
            op: "matrix-multiply",
            lhs: a.to_vec(),
            rhs: b.to_vec(),
        });
    }
    Ok((a[0], a[1], b[1]))
}

fn concat_forward(inputs: &[View<'_>], axis: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let first = inputs[0].shape;
    let (outer, _, inner) = split_axis("concatenate", first, axis)?;
    let mut total = 0;
    for v in inputs {
        let compatible = v.shape.len() == first.len()
            && v.shape
                .iter()
                .zip(first)
                .enumerate()
                .all(|(d, (p, q))| d == axis || p == q);
        if !compatible {
            return Err(Error::ShapeMismatch {
                op: "concatenate",
                lhs: first.to_vec(),
                rhs: v.shape.to_vec(),
            });
        }
        total += v.shape[axis];
    }
    let mut values = Vec::with_capacity(outer * total * inner);
    for o in 0..outer {
        for v in inputs {
            let chunk = v.shape[axis] * inner;
            values.extend_from_slice(&v.data[o * chunk..(o + 1) * chunk]);
        }
    }
    let mut shape = first.to_vec();
    shape[axis] = total;
    Ok((shape, values))
}

/// Gradients of the output w.r.t. each input, given the upstream gradient.
///
/// `out` holds the saved forward output; softmax and exponent reuse it.
pub(crate) fn backward(
    kind: &OpKind,
    inputs: &[View<'_>],
    out: View<'_>,
    grad: &[f64],
) -> Vec<Vec<f64>> {
    let x = inputs[0];
    match kind {
        OpKind::Add | OpKind::Subtract | OpKind::Multiply | OpKind::Divide => {
            let b = inputs[1];
            // Layout was validated on the forward pass.
            let (_, bc) = binary_layout(kind.name(), x.shape, b.shape).expect("validated layout");
            let mut ga = vec![0.0; x.data.len()];
            let mut gb = vec![0.0; b.data.len()];
            for (k, &g) in grad.iter().enumerate() {
                let (ia, ib) = operand_index(bc, k, x.data.len(), b.data.len());
                let (p, q) = (x.data[ia], b.data[ib]);
                let (da, db) = match kind {
                    OpKind::Add => (g, g),
                    OpKind::Subtract => (g, -g),
                    OpKind::Multiply => (g * q, g * p),
                    _ => (g / q, -g * p / (q * q)),
                };
                ga[ia] += da;
                gb[ib] += db;
            }
            vec![ga, gb]
        }
        OpKind::Negate => vec![grad.iter().map(|g| -g).collect()],
        OpKind::Exponent => vec![zip_map(grad, out.data, |g, y| g * y)],
        OpKind::Logarithm => vec![zip_map(grad, x.data, |g, v| g / v)],
        OpKind::Power(p) => vec![zip_map(grad, x.data, |g, v| g * p * v.powf(p - 1.0))],
        OpKind::SumAxis(axis) | OpKind::MeanAxis(axis) => {
            let (outer, len, inner) = split_axis(kind.name(), x.shape, *axis).expect("validated");
            let scale = if matches!(kind, OpKind::MeanAxis(_)) {
                1.0 / len as f64
            } else {
                1.0
            };
            let mut gx = vec![0.0; x.data.len()];
            for o in 0..outer {
                for l in 0..len {
                    for i in 0..inner {
                        gx[(o * len + l) * inner + i] = grad[o * inner + i] * scale;
                    }
                }
            }
            vec![gx]
        }
        OpKind::Sum => vec![vec![grad[0]; x.data.len()]],
        OpKind::MatMul => {
            let b = inputs[1];
            let (m, k, n) = (x.shape[0], x.shape[1], b.shape[1]);
            let mut ga = vec![0.0; m * k];
            let mut gb = vec![0.0; k * n];
            for i in 0..m {
                for p in 0..k {
                    let mut acc = 0.0;
                    for j in 0..n {
                        let g = grad[i * n + j];
                        acc += g * b.data[p * n + j];
                        gb[p * n + j] += x.data[i * k + p] * g;
                    }
                    ga[i * k + p] = acc;
                }
            }
            vec![ga, gb]
        }
        OpKind::Relu => vec![zip_map(grad, x.data, |g, v| if v > 0.0 { g } else { 0.0 })],
        OpKind::SoftmaxAxis(axis) => {
            let (outer, len, inner) = split_axis(kind.name(), x.shape, *axis).expect("validated");
            let y = out.data;
            let mut gx = vec![0.0; y.len()];
            for o in 0..outer {
                for i in 0..inner {
                    let idx = |l: usize| (o * len + l) * inner + i;
                    let dot: f64 = (0..len).map(|l| grad[idx(l)] * y[idx(l)]).sum();
                    for l in 0..len {
                        gx[idx(l)] = y[idx(l)] * (grad[idx(l)] - dot);
                    }
                }
            }
            vec![gx]
        }
        OpKind::AbsoluteValue => vec![zip_map(grad, x.data, |g, v| {
            if v > 0.0 {
                g
            } else if v < 0.0 {
                -g
            } else {
                0.0
            }
        })],
        OpKind::Square => vec![zip_map(grad, x.data, |g, v| 2.0 * v * g)],
        OpKind::Concatenate(axis) => {
            let (outer, _, inner) = split_axis("concatenate", x.shape, *axis).expect("validated");
            let total: usize = inputs.iter().map(|v| v.shape[*axis]).sum();
            let mut grads: Vec<Vec<f64>> = inputs.iter().map(|v| Vec::with_capacity(v.data.len())).collect();
            for o in 0..outer {
                let mut offset = o * total * inner;
                for (v, gv) in inputs.iter().zip(grads.iter_mut()) {
                    let chunk = v.shape[*axis] * inner;
                    gv.extend_from_slice(&grad[offset..offset + chunk]);
                    offset += chunk;
                }
            }
            grads
        }
        OpKind::IndexSelect { axis, indices } => {
            let (outer, len, inner) = split_axis(kind.name(), x.shape, *axis).expect("validated");
            let mut gx = vec![0.0; x.data.len()];
            let mut k = 0;
            for o in 0..outer {
                for &l in indices {
                    let start = (o * len + l) * inner;
                    for (dst, g) in gx[start..start + inner].iter_mut().zip(&grad[k..k + inner]) {
                        *dst += g;
                    }
                    k += inner;
                }
            }
            vec![gx]
        }
        OpKind::Broadcast(_) => {
            let n = x.data.len();
            let mut gx = vec![0.0; n];
            for (k, g) in grad.iter().enumerate() {
                gx[k % n] += g;
            }
            vec![gx]
        }
        OpKind::Reshape(_) => vec![grad.to_vec()],
        OpKind::Scale(c) => vec![grad.iter().map(|g| g * c).collect()],
        OpKind::AddScalar(_) => vec![grad.to_vec()],
        OpKind::ClampMin(floor) => {
            vec![zip_map(grad, x.data, |g, v| if v >= *floor { g } else { 0.0 })]
        }
    }
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&p, &q)| f(p, q)).collect()
}
