//! Runs the `sargmax` binary on small configurations.

use std::path::Path;
use std::process::{Command, Output};

pub fn sargmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sargmax"))
        .args(args)
        .output()
        .expect("spawning sargmax")
}

/// One small invocation per subcommand; `--out` is appended by the caller.
pub fn cases() -> Vec<(&'static str, Vec<&'static str>)> {
    let data = ["--train", "128", "--val", "16", "--test", "24"];
    let with = |head: &[&'static str], tail: &[&'static str]| {
        head.iter().chain(tail).copied().collect::<Vec<_>>()
    };
    vec![
        ("train", with(&["train", "--loss", "samp", "--epochs", "2", "--seed", "3"], &data)),
        ("eval", with(&["eval", "--loss", "soft-dr", "--epochs", "2", "--seed", "4"], &data)),
        ("gradcheck", vec!["gradcheck"]),
        ("distcheck", vec!["distcheck", "--maps", "2", "--draws", "2000", "--seed", "5"]),
        ("varcompare", vec!["varcompare", "--seeds", "2", "--draws", "300"]),
        (
            "calibrate",
            with(&["calibrate", "--seeds", "2", "--epochs", "1", "--methods", "soft,samp,discrete"], &data),
        ),
    ]
}

/// Runs `args` writing its CSV to `out` and returns the CSV bytes. A suite
/// verdict of FAIL (exit 1) still counts as a completed run.
pub fn run_to_csv(args: &[&str], out: &Path) -> Vec<u8> {
    let mut full: Vec<&str> = args.to_vec();
    let out_str = out.to_str().unwrap();
    full.extend(["--out", out_str]);
    let output = sargmax(&full);
    assert!(
        matches!(output.status.code(), Some(0 | 1)),
        "{args:?} failed: {}{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    std::fs::read(out).unwrap()
}

/// Whether every case writes byte-identical CSV on two invocations.
pub fn reproducible(dir: &Path) -> Vec<(&'static str, bool)> {
    cases()
        .into_iter()
        .map(|(name, args)| {
            let a = run_to_csv(&args, &dir.join(format!("{name}-a.csv")));
            let b = run_to_csv(&args, &dir.join(format!("{name}-b.csv")));
            (name, !a.is_empty() && a == b)
        })
        .collect()
}
