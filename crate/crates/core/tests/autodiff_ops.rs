//! Every differentiable op against central finite differences, over 100
//! random inputs each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sampling_argmax::autodiff::{concat, grad_check, Tape, Tensor};
use sampling_argmax::Result;

const SEEDS: u64 = 100;
const STEP: f64 = 1e-5;
// Relative error per coordinate; softmax cancellation leaves some gradients
// small enough that difference noise reaches 1e-5.
const TOL: f64 = 1e-4;

type Op = fn(&Tensor) -> Result<Tensor>;

/// Two `[3, 4]` operands carved out of a `[2, 3, 4]` input.
fn halves(x: &Tensor) -> Result<(Tensor, Tensor)> {
    let a = x.index_select(0, &[0])?.reshape(&[3, 4])?;
    let b = x.index_select(0, &[1])?.reshape(&[3, 4])?;
    Ok((a, b))
}

fn ops() -> Vec<(&'static str, bool, Op)> {
    // (name, needs positive inputs, op producing any-shaped output)
    vec![
        ("add", false, |x| { let (a, b) = halves(x)?; a.add(&b) }),
        ("subtract", false, |x| { let (a, b) = halves(x)?; a.sub(&b) }),
        ("multiply", false, |x| { let (a, b) = halves(x)?; a.mul(&b) }),
        ("divide", false, |x| { let (a, b) = halves(x)?; a.div(&b) }),
        ("broadcast-add", false, |x| {
            let (a, b) = halves(x)?;
            a.add(&b.index_select(0, &[2])?.reshape(&[4])?)
        }),
        ("negate", false, |x| x.neg()),
        ("exponent", false, |x| x.exp()),
        ("logarithm", true, |x| x.ln()),
        ("power", true, |x| x.powf(2.5)),
        ("sum-axis-0", false, |x| x.sum_axis(0)),
        ("sum-axis-2", false, |x| x.sum_axis(2)),
        ("mean-axis-1", false, |x| x.mean_axis(1)),
        ("sum", false, |x| x.sum()),
        ("matmul", false, |x| {
            let (a, b) = halves(x)?;
            a.matmul(&b.reshape(&[4, 3])?)
        }),
        ("relu", false, |x| x.relu()),
        ("softmax-axis-0", false, |x| x.softmax(0)),
        ("softmax-axis-2", false, |x| x.softmax(2)),
        ("absolute-value", false, |x| x.abs()),
        ("square", false, |x| x.square()),
        ("concatenate-0", false, |x| { let (a, b) = halves(x)?; concat(&[&a, &b, &a], 0) }),
        ("concatenate-1", false, |x| { let (a, b) = halves(x)?; concat(&[&b, &a], 1) }),
        ("index-select", false, |x| x.index_select(1, &[2, 0, 2, 1])),
        ("broadcast", false, |x| x.broadcast(3)),
        ("reshape", false, |x| x.reshape(&[6, 4])),
        ("scale", false, |x| x.scale(-1.7)),
        ("add-scalar", false, |x| x.add_scalar(0.3)),
        ("clamp-min", false, |x| x.clamp_min(0.1)),
    ]
}

fn input(seed: u64, positive: bool) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..24)
        .map(|_| {
            let mag = rng.random_range(0.5..2.0);
            if positive || rng.random::<bool>() { mag } else { -mag }
        })
        .collect()
}

/// Contracts the op output with fixed random weights, so every output
/// element contributes a distinct, non-negligible amount.
fn scalarize(out: &Tensor, seed: u64) -> Result<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let w: Vec<f64> = (0..out.len())
        .map(|_| {
            let mag = rng.random_range(0.5..1.5);
            if rng.random::<bool>() { mag } else { -mag }
        })
        .collect();
    out.mul(&out.tape().constant(&out.shape(), w)?)?.sum()
}

#[test]
fn every_op_matches_finite_differences() {
    let mut failures = Vec::new();
    for (name, positive, op) in ops() {
        for seed in 0..SEEDS {
            let tape = Tape::new();
            let x = tape.var(&[2, 3, 4], input(seed, positive)).unwrap();
            let report = grad_check(|t| scalarize(&op(t)?, seed), &x, STEP, TOL).unwrap();
            if !report.passed {
                failures.push(format!("{name} seed {seed}: {}", report.max_rel_error));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn composite_graph_with_reuse_matches_finite_differences() {
    for seed in 0..SEEDS {
        let tape = Tape::new();
        let x = tape.var(&[2, 3, 4], input(seed, false)).unwrap();
        let f = |t: &Tensor| -> Result<Tensor> {
            let (a, b) = halves(t)?;
            let h = a.matmul(&b.reshape(&[4, 3])?)?.relu()?.add_scalar(0.1)?;
            let s = h.softmax(1)?;
            s.mul(&a.square()?.sum_axis(1)?.reshape(&[3, 1])?.matmul(&tape_ones(t, 1, 3)?)?)?
                .add(&s.ln()?.scale(0.2)?)?
                .sum()
        };
        let report = grad_check(f, &x, STEP, TOL).unwrap();
        assert!(report.passed, "seed {seed}: {}", report.max_rel_error);
    }
}

fn tape_ones(t: &Tensor, rows: usize, cols: usize) -> Result<Tensor> {
    t.tape().constant(&[rows, cols], vec![1.0; rows * cols])
}
