use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use sampling_argmax::harness::report::{fmt_f64, Table};
use sampling_argmax::harness::{
    calibrate, distcheck, evaluate, gradcheck, train, varcompare, ConfigPatch, Mlp, Objective,
    Split, TaskKind,
};
use sampling_argmax::mixture::Basis;
use sampling_argmax::Execution;

#[derive(Parser)]
#[command(name = "sargmax", version, about = "Sampling-argmax localisation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write the per-epoch history.
    Train {
        #[command(flatten)]
        opts: Opts,
        /// Also save the trained model as JSON.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Evaluate a model (trained on the fly unless --model is given).
    Eval {
        #[command(flatten)]
        opts: Opts,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "test", value_parser = parse_split)]
        split: Split,
    },
    /// Finite-difference check of every loss, basis and dimension.
    Gradcheck {
        #[command(flatten)]
        opts: Opts,
    },
    /// Goodness-of-fit checks of the exact and relaxed samplers.
    Distcheck {
        #[command(flatten)]
        opts: Opts,
        /// Number of random maps.
        #[arg(long)]
        maps: Option<usize>,
    },
    /// Score-function versus reparameterised gradient variance.
    Varcompare {
        #[command(flatten)]
        opts: Opts,
        /// Temperature of the reparameterised estimator.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Paired-seed accuracy and calibration comparison of objectives.
    Calibrate {
        #[command(flatten)]
        opts: Opts,
        /// Comma-separated objectives.
        #[arg(long, value_delimiter = ',', default_value = "soft,samp")]
        methods: Vec<Objective>,
    },
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Args, Clone, Default)]
struct Opts {
    /// Flat TOML file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    loss: Option<Objective>,
    #[arg(long)]
    basis: Option<Basis>,
    /// Gaussian basis standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    num_samples: Option<usize>,
    #[arg(long)]
    tau_start: Option<f64>,
    #[arg(long)]
    tau_end: Option<f64>,
    #[arg(long)]
    sigma_t_sq: Option<f64>,
    #[arg(long)]
    reg_weight: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Observation noise level.
    #[arg(long)]
    noise: Option<f64>,
    /// Grid length, grid side or point count.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    val: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeds (calibrate, varcompare).
    #[arg(long)]
    seeds: Option<u64>,
    /// Monte-Carlo draws (distcheck, varcompare).
    #[arg(long)]
    draws: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run independent work items on one thread.
    #[arg(long)]
    sequential: bool,
}

fn parse_split(s: &str) -> Result<Split, String> {
    match s {
        "train" => Ok(Split::Train),
        "val" => Ok(Split::Val),
        "test" => Ok(Split::Test),
        other => Err(format!("unknown split `{other}`")),
    }
}

impl Opts {
    fn patch(&self) -> anyhow::Result<ConfigPatch> {
        let file = match &self.config {
            Some(path) => ConfigPatch::from_file(path)?,
            None => ConfigPatch::default(),
        };
        let flags = ConfigPatch {
            task: self.task,
            loss: self.loss,
            basis: self.basis,
            sigma: self.sigma,
            num_samples: self.num_samples,
            tau_start: self.tau_start,
            tau_end: self.tau_end,
            anneal: None,
            distance: None,
            sigma_t_sq: self.sigma_t_sq,
            reg_weight: self.reg_weight,
            epochs: self.epochs,
            batch: self.batch,
            lr: self.lr,
            hidden: self.hidden,
            noise: self.noise,
            size: self.size,
            train: self.train,
            val: self.val,
            test: self.test,
            seed: self.seed,
            seeds: self.seeds,
            draws: self.draws,
            out: self.out.clone(),
        };
        Ok(file.merged(flags))
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

fn emit(table: &Table, out: Option<&Path>) -> anyhow::Result<()> {
    print!("{}", table.render());
    if let Some(path) = out {
        table
            .write_csv(path)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn verdict(passed: bool, what: &str) -> ExitCode {
    if passed {
        println!("{what}: pass");
        ExitCode::SUCCESS
    } else {
        println!("{what}: FAIL");
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Train { opts, model_out } => {
            let patch = opts.patch()?;
            let cfg = patch.run_config(patch.seed());
            let (model, history) = train(&cfg)?;
            let mut t = Table::new(["epoch", "loss", "val_mean_err", "tau"]);
            for r in &history {
                t.push(vec![
                    r.epoch.to_string(),
                    fmt_f64(r.loss),
                    fmt_f64(r.val_mean_err),
                    fmt_f64(r.tau),
                ]);
            }
            emit(&t, patch.out.as_deref())?;
            if let Some(path) = model_out {
                model
                    .save(&path)
                    .with_context(|| format!("saving model to {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { opts, model, split } => {
            let patch = opts.patch()?;
            let cfg = patch.run_config(patch.seed());
            let model = match model {
                Some(path) => {
                    Mlp::load(&path).with_context(|| format!("loading model {}", path.display()))?
                }
                None => train(&cfg)?.0,
            };
            let eval = evaluate(&model, &cfg.task, split)?;
            let dim = eval.records.first().map_or(0, |r| r.target.len());
            let mut header = vec!["idx".to_string()];
            header.extend((0..dim).map(|k| format!("pred{k}")));
            header.extend((0..dim).map(|k| format!("gt{k}")));
            header.extend(["peak".to_string(), "err".to_string()]);
            let mut t = Table::new(header);
            for (i, r) in eval.records.iter().enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(r.prediction.iter().map(|v| fmt_f64(*v)));
                row.extend(r.target.iter().map(|v| fmt_f64(*v)));
                row.extend([fmt_f64(r.peak), fmt_f64(r.error)]);
                t.push(row);
            }
            match patch.out.as_deref() {
                Some(path) => {
                    t.write_csv(path)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{}", t.render()),
            }
            let s = eval.summary;
            println!(
                "mean_err {}  median_err {}  within1 {}",
                fmt_f64(s.mean_err),
                fmt_f64(s.median_err),
                fmt_f64(s.within_one)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck { opts } => {
            let patch = opts.patch()?;
            let rows = gradcheck::run(opts.exec())?;
            emit(&gradcheck::table(&rows), patch.out.as_deref())?;
            let failed = rows.iter().filter(|r| !r.passed).count();
            println!("{} rows, {failed} failing", rows.len());
            Ok(verdict(failed == 0, "gradcheck"))
        }
        Command::Distcheck { opts, maps } => {
            let patch = opts.patch()?;
            let params = distcheck::DistParams {
                maps: maps.unwrap_or(distcheck::MAPS),
                draws: patch.draws.unwrap_or(distcheck::DRAWS),
                seed: patch.seed(),
            };
            let report = distcheck::run(&params, opts.exec())?;
            emit(&distcheck::table(&report), patch.out.as_deref())?;
            print!("{}", distcheck::one_hot_table(&report).render());
            println!(
                "relaxed KS smaller at tau {} than at tau {} on every row: {}",
                distcheck::TAU_LOW,
                distcheck::TAU_HIGH,
                report.temperature_ordering_holds()
            );
            Ok(verdict(report.passed(), "distcheck"))
        }
        Command::Varcompare { opts, tau } => {
            let patch = opts.patch()?;
            let params = varcompare::VarParams {
                seeds: patch.seeds.unwrap_or(varcompare::SEEDS),
                draws: patch.draws.unwrap_or(varcompare::DRAWS),
                tau: tau.unwrap_or(varcompare::TAU),
                base_seed: patch.seed(),
                repeat: 0,
            };
            if params.draws < 2 || params.seeds == 0 {
                bail!("varcompare needs at least one seed and two draws");
            }
            let rows = varcompare::run(&params, opts.exec())?;
            emit(&varcompare::table(&rows), patch.out.as_deref())?;
            Ok(verdict(rows.iter().all(|r| r.passed), "varcompare"))
        }
        Command::Calibrate { opts, methods } => {
            let patch = opts.patch()?;
            if methods.is_empty() {
                bail!("no methods given");
            }
            let seeds = patch.seeds.unwrap_or(5);
            let rows = calibrate::run(&patch, &methods, patch.seed(), seeds, opts.exec())?;
            emit(&calibrate::table(&rows), patch.out.as_deref())?;
            print!("{}", calibrate::aggregate_table(&rows, &methods).render());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
