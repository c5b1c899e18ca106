//! The eight acceptance criteria, one verdict line each. Exits non-zero if
//! any criterion fails.

mod support;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sampling_argmax::autodiff::Tape;
use sampling_argmax::harness::{calibrate, distcheck, gradcheck, varcompare, ConfigPatch, Objective};
use sampling_argmax::mixture::{Basis, Mixture, MixtureSpec, ProbabilityMap, Support};
use sampling_argmax::operator::{inference_localize, soft_argmax};
use sampling_argmax::Execution;
use support::softmax;

type Check = Box<dyn FnOnce() -> Verdict>;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn gradient_suite() -> Verdict {
    let (rows, took) = timed(|| gradcheck::run(Execution::Parallel).unwrap());
    let failing = rows.iter().filter(|r| !r.passed).count();
    let worst = rows.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    verdict(
        failing == 0 && rows.len() == 600 && took < Duration::from_secs(120),
        format!("{} rows, {failing} failing, worst rel error {worst:.2e}, {took:.1?}", rows.len()),
    )
}

fn sampler_fidelity() -> (Verdict, Verdict) {
    let params = distcheck::DistParams::default();
    let (report, took) = timed(|| distcheck::run(&params, Execution::Parallel).unwrap());
    let min_p = report.rows.iter().map(|r| r.ks_p).fold(1.0, f64::min);
    let per_basis = Basis::ALL
        .iter()
        .all(|b| report.rows.iter().filter(|r| r.basis == *b).count() >= 20);
    let exact = verdict(
        report.reference_passes() && per_basis && params.draws == 100_000 && took < Duration::from_secs(60),
        format!("{} rows, min KS p-value {min_p:.3}, {took:.1?}", report.rows.len()),
    );
    let max_dev = report.rows.iter().map(|r| r.freq_max_dev).fold(0.0, f64::max);
    let ordered = report
        .rows
        .iter()
        .filter(|r| r.relaxed_ks_low < r.relaxed_ks_high)
        .count();
    let relaxed = verdict(
        report.frequencies_pass() && report.temperature_ordering_holds(),
        format!(
            "max frequency deviation {max_dev:.4}, KS(tau {}) < KS(tau {}) on {ordered}/{} rows",
            distcheck::TAU_LOW,
            distcheck::TAU_HIGH,
            report.rows.len()
        ),
    );
    (exact, relaxed)
}

fn variance_ordering() -> Verdict {
    let params = varcompare::VarParams::default();
    let rows = varcompare::run(&params, Execution::Parallel).unwrap();
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    verdict(
        rows.len() == 10 && params.draws == 10_000 && rows.iter().all(|r| r.sf_trace > r.rp_trace),
        format!("{} seeds, smallest SF/RP trace ratio {min_ratio:.2}", rows.len()),
    )
}

/// Per-axis mixture variance from the discrete moments plus the basis
/// variance.
fn closed_form_variance(support: &Support, w: &[f64], basis_var: f64) -> Vec<f64> {
    (0..support.dim())
        .map(|a| {
            let m: f64 = (0..support.len()).map(|i| w[i] * support.position(i)[a]).sum();
            let s: f64 = (0..support.len()).map(|i| w[i] * support.position(i)[a].powi(2)).sum();
            s + basis_var - m * m
        })
        .collect()
}

fn moment_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut mean_err, mut var_err, mut interp_err) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..300 {
        let c = rng.random_range(0.25..3.0);
        let support = Arc::new(if k % 2 == 0 {
            Support::grid_1d(rng.random_range(2..20), c).unwrap()
        } else {
            Support::grid(&[rng.random_range(2..7), rng.random_range(2..7)], c).unwrap()
        });
        let logits: Vec<f64> = (0..support.len()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let w = softmax(&logits);
        let sigma = rng.random_range(0.1..2.0);
        for (spec, basis_var) in [
            (MixtureSpec::uniform(), c * c / 12.0),
            (MixtureSpec::triangular(), c * c / 6.0),
            (MixtureSpec::gaussian(sigma), sigma * sigma),
        ] {
            let mixture = Mixture::new(support.clone(), w.clone(), spec).unwrap();
            let moments = mixture.moments();
            let tape = Tape::new();
            let map = ProbabilityMap::constant(support.clone(), &tape, w.clone()).unwrap();
            let soft = soft_argmax(&map).unwrap().values();
            for (m, s) in moments.mean.iter().zip(&soft) {
                mean_err = mean_err.max((m - s).abs());
            }
            for (v, e) in moments.variance.iter().zip(closed_form_variance(&support, &w, basis_var)) {
                var_err = var_err.max((v - e).abs());
            }
        }
        if support.dim() == 1 {
            let mixture = Mixture::new(support.clone(), w.clone(), MixtureSpec::triangular()).unwrap();
            let n = support.len();
            for _ in 0..50 {
                let y = rng.random_range(0.0..(n - 1) as f64 * c);
                let i = ((y / c) as usize).min(n - 2);
                let t = y / c - i as f64;
                let interp = ((1.0 - t) * w[i] + t * w[i + 1]) / c;
                interp_err = interp_err.max((mixture.pdf(&[y]).unwrap() - interp).abs());
            }
        }
    }
    verdict(
        mean_err <= 1e-12 && var_err <= 1e-10 && interp_err <= 1e-12,
        format!("mean {mean_err:.1e}, variance {var_err:.1e}, triangular interpolation {interp_err:.1e}"),
    )
}

fn directional_replication() -> Verdict {
    let patch = ConfigPatch::default();
    let cfg = patch.run_config(0);
    assert_eq!(cfg.basis, Basis::Triangular);
    assert_eq!(cfg.sampling.num_samples, 5);
    assert!(cfg.task.noise > 0.0);
    let methods = [Objective::Soft, Objective::Samp];
    let mut rows = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in 0..5 {
        for method in methods {
            let (row, took) = timed(|| calibrate::run_one(&patch, method, seed).unwrap());
            slowest = slowest.max(took);
            rows.push(row);
        }
    }
    let agg = calibrate::aggregate(&rows, &methods);
    let (soft_err, soft_r) = (agg[0].1, agg[0].2);
    let (samp_err, samp_r) = (agg[1].1, agg[1].2);
    let better_calibrated = matches!((samp_r, soft_r), (Some(a), Some(b)) if a > b);
    verdict(
        samp_err <= soft_err && better_calibrated && slowest < Duration::from_secs(180),
        format!(
            "mean error samp {samp_err:.3} vs soft {soft_err:.3}; pearson r samp {} vs soft {}; slowest run {slowest:.1?}",
            samp_r.map_or("undefined".into(), |r| format!("{r:.3}")),
            soft_r.map_or("undefined".into(), |r| format!("{r:.3}")),
        ),
    )
}

fn inference_equivalence() -> Verdict {
    let mut maps = ChaCha8Rng::seed_from_u64(77);
    let bystander = ChaCha8Rng::seed_from_u64(78);
    let before = bystander.get_word_pos();
    let mut mismatches = 0;
    for k in 0..1000 {
        let support = Arc::new(if k % 2 == 0 {
            Support::grid_1d(maps.random_range(2..40), 1.0).unwrap()
        } else {
            Support::grid(&[maps.random_range(2..10), maps.random_range(2..10)], 1.0).unwrap()
        });
        let logits: Vec<f64> = (0..support.len()).map(|_| maps.random_range(-8.0..8.0)).collect();
        let tape = Tape::new();
        let map = ProbabilityMap::constant(support, &tape, softmax(&logits)).unwrap();
        let a: Vec<u64> = inference_localize(&map).unwrap().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = soft_argmax(&map).unwrap().values().iter().map(|v| v.to_bits()).collect();
        mismatches += usize::from(a != b);
    }
    let untouched = bystander.get_word_pos() == before;
    verdict(
        mismatches == 0 && untouched,
        format!("1000 maps, {mismatches} mismatches, RNG state untouched: {untouched}"),
    )
}

fn cli_reproducibility() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let results = support::cli::reproducible(dir.path());
    let differing: Vec<&str> = results.iter().filter(|(_, same)| !same).map(|(n, _)| *n).collect();
    verdict(
        differing.is_empty(),
        format!("{} subcommands, differing: {differing:?}", results.len()),
    )
}

fn main() {
    let (exact, relaxed) = sampler_fidelity();
    let criteria: Vec<(&str, Check)> = vec![
        ("gradient suite", Box::new(gradient_suite)),
        ("exact-sampler fidelity", Box::new(move || exact)),
        ("relaxed-sampler category fidelity", Box::new(move || relaxed)),
        ("estimator-variance ordering", Box::new(variance_ordering)),
        ("moment oracle", Box::new(moment_oracle)),
        ("directional replication", Box::new(directional_replication)),
        ("inference equivalence", Box::new(inference_equivalence)),
        ("reproducibility", Box::new(cli_reproducibility)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let v = check();
        failed += usize::from(!v.passed);
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if v.passed { "pass" } else { "FAIL" },
            v.detail
        );
    }
    println!("{} of 8 criteria pass", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
