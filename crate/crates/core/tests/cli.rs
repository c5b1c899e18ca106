mod support;

use support::cli::{reproducible, run_to_csv, sargmax};

fn csv_rows(bytes: &[u8]) -> Vec<Vec<String>> {
    csv::Reader::from_reader(bytes)
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn header(bytes: &[u8]) -> Vec<String> {
    csv::Reader::from_reader(bytes)
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect()
}

#[test]
fn every_subcommand_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    for (name, same) in reproducible(dir.path()) {
        assert!(same, "{name} output differs between runs");
    }
}

#[test]
fn training_history_and_evaluation_columns() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["train", "--epochs", "3", "--train", "64", "--val", "8"];
    let history = run_to_csv(&args, &dir.path().join("h.csv"));
    assert_eq!(header(&history), ["epoch", "loss", "val_mean_err", "tau"]);
    assert_eq!(csv_rows(&history).len(), 3);

    let args = ["eval", "--task", "heat2d", "--epochs", "1", "--train", "64", "--test", "10"];
    let eval = run_to_csv(&args, &dir.path().join("e.csv"));
    assert_eq!(header(&eval), ["idx", "pred0", "pred1", "gt0", "gt1", "peak", "err"]);
    assert_eq!(csv_rows(&eval).len(), 10);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "loss = \"soft-vr\"\nepochs = 2\ntrain = 64\nval = 8\nseed = 3\n").unwrap();
    let config = config.to_str().unwrap();

    let from_file = run_to_csv(&["train", "--config", config], &dir.path().join("a.csv"));
    assert_eq!(csv_rows(&from_file).len(), 2);

    let overridden = run_to_csv(
        &["train", "--config", config, "--epochs", "4"],
        &dir.path().join("b.csv"),
    );
    let rows = csv_rows(&overridden);
    assert_eq!(rows.len(), 4);
    let explicit = run_to_csv(
        &["train", "--loss", "soft-vr", "--epochs", "4", "--train", "64", "--val", "8", "--seed", "3"],
        &dir.path().join("c.csv"),
    );
    assert_eq!(overridden, explicit);
}

#[test]
fn saved_model_evaluates_like_an_inline_run() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let common = ["--epochs", "2", "--train", "64", "--val", "8", "--test", "12", "--seed", "8"];
    let mut train: Vec<&str> = vec!["train", "--model-out", model.to_str().unwrap()];
    train.extend(common);
    assert!(sargmax(&train).status.success());

    let mut saved: Vec<&str> = vec!["eval", "--model", model.to_str().unwrap()];
    saved.extend(common);
    let mut inline: Vec<&str> = vec!["eval"];
    inline.extend(common);
    assert_eq!(
        run_to_csv(&saved, &dir.path().join("saved.csv")),
        run_to_csv(&inline, &dir.path().join("inline.csv"))
    );
}

#[test]
fn parallel_and_sequential_reports_match() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["varcompare", "--seeds", "3", "--draws", "200"];
    let par = run_to_csv(&args, &dir.path().join("p.csv"));
    let mut seq_args = args.to_vec();
    seq_args.push("--sequential");
    assert_eq!(par, run_to_csv(&seq_args, &dir.path().join("s.csv")));
}

#[test]
fn bad_input_exits_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "learning-rate = 0.1\n").unwrap();
    let out = sargmax(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning-rate"));

    let out = sargmax(&["train", "--tau-start", "0.1", "--tau-end", "0.5", "--epochs", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
