//! Command-line front end.
//!
//! Subcommands: generate | diagnose | check | experiment | impulse | compare.
//! Every command is deterministic given its configuration; worker count for
//! multi-seed experiments can be overridden through the environment (see
//! [`crate::training::WORKERS_ENV`]).
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_check, cmd_compare, cmd_diagnose, cmd_experiment, cmd_generate, cmd_impulse,
    DiagnosisReport, ExperimentReport, ImpulseReport, TtestReport, VerdictReport,
};
pub use config::{
    DatasetSource, ExperimentConfig, GenerateConfig, ModelConfig, PRESET_ARFIMA,
    PRESET_RNN_CONTROL,
};

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const USAGE: &str = "\
longmem <command> [options]

Commands:
  generate    --preset NAME | --config PATH   [--seed N] [--out FILE]
  diagnose    <series.csv>  [--column I] [--out DIR]
  check       <params.json> [--contraction A] [--out FILE]
  experiment  --config PATH | --preset NAME   [--out DIR] [--scale-inputs]
  impulse     <linear-spec.json> [--k N] [--tail-start N] [--out DIR]
  compare     <a/metrics.csv> <b/metrics.csv> [--metric rmse|mae|mape] [--out FILE]

The experiment worker count can be overridden with the LONGMEM_WORKERS
environment variable.
";

struct Args {
    positional: Vec<String>,
    flags: Vec<(String, Option<String>)>,
}

const VALUE_FLAGS: &[&str] =
    &["config", "seed", "out", "preset", "column", "contraction", "k", "tail-start", "metric"];
const BOOL_FLAGS: &[&str] = &["scale-inputs", "help"];

fn parse_args(args: &[String]) -> Result<Args> {
    let mut positional = Vec::new();
    let mut flags = Vec::new();
    let mut it = args.iter().peekable();
    while let Some(arg) = it.next() {
        if let Some(name) = arg.strip_prefix("--") {
            if BOOL_FLAGS.contains(&name) {
                flags.push((name.to_string(), None));
            } else if VALUE_FLAGS.contains(&name) {
                let value = it
                    .next()
                    .ok_or_else(|| Error::Config(format!("--{name} expects a value")))?;
                flags.push((name.to_string(), Some(value.clone())));
            } else {
                return Err(Error::Config(format!("unknown flag --{name}")));
            }
        } else {
            positional.push(arg.clone());
        }
    }
    Ok(Args { positional, flags })
}

impl Args {
    fn flag(&self, name: &str) -> Option<&str> {
        self.flags.iter().rev().find(|(n, _)| n == name).and_then(|(_, v)| v.as_deref())
    }

    fn has(&self, name: &str) -> bool {
        self.flags.iter().any(|(n, _)| n == name)
    }

    fn parsed_flag<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>> {
        match self.flag(name) {
            None => Ok(None),
            Some(text) => text
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("--{name}: cannot parse '{text}'"))),
        }
    }

    fn positional(&self, idx: usize, what: &str) -> Result<&str> {
        self.positional
            .get(idx)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing {what} argument")))
    }
}

/// Run the CLI with the given arguments (without the program name). Returns
/// the process exit code.
pub fn run(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(args: &[String]) -> Result<()> {
    let Some(command) = args.first() else {
        print!("{USAGE}");
        return Ok(());
    };
    let rest = parse_args(&args[1..])?;
    if rest.has("help") {
        print!("{USAGE}");
        return Ok(());
    }
    match command.as_str() {
        "generate" => {
            let mut config: GenerateConfig = match rest.flag("config") {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => GenerateConfig { preset: None, source: None, seed: None, out: None },
            };
            if let Some(preset) = rest.flag("preset") {
                config.preset = Some(preset.to_string());
            }
            if let Some(seed) = rest.parsed_flag::<u64>("seed")? {
                config.seed = Some(seed);
            }
            if let Some(out) = rest.flag("out") {
                config.out = Some(out.to_string());
            }
            let path = cmd_generate(&config)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        "diagnose" => {
            let input = PathBuf::from(rest.positional(0, "series CSV")?);
            let column = rest.parsed_flag::<usize>("column")?.unwrap_or(0);
            let out_dir = PathBuf::from(rest.flag("out").unwrap_or("diagnosis"));
            let report = cmd_diagnose(&input, column, &out_dir)?;
            println!(
                "{}: {:?} (white-noise fraction {:.3}, low-frequency slope {:.3}); reports in {}",
                input.display(),
                report.class,
                report.white_noise_fraction,
                report.lowfreq_slope,
                out_dir.display()
            );
            Ok(())
        }
        "check" => {
            let input = PathBuf::from(rest.positional(0, "parameter JSON")?);
            let a = rest
                .parsed_flag::<f64>("contraction")?
                .unwrap_or_else(commands::default_contraction);
            let out = rest.flag("out").map(PathBuf::from);
            let report = cmd_check(&input, a, out.as_deref())?;
            println!("{}: {:?}", report.model_kind, report.verdict.conclusion);
            for c in &report.verdict.checked_inequalities {
                println!(
                    "  {} : {:.6} vs {:.6} -> {}",
                    c.name,
                    c.lhs,
                    c.bound,
                    if c.satisfied { "ok" } else { "violated" }
                );
            }
            Ok(())
        }
        "experiment" => {
            let mut config = match rest.flag("config") {
                Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
                None => ExperimentConfig {
                    name: None,
                    preset: None,
                    dataset: None,
                    data_seed: None,
                    split: None,
                    models: Vec::new(),
                    seeds: None,
                    seed_range: None,
                    stopping: None,
                    lr: None,
                    scale_inputs: None,
                    out: None,
                },
            };
            if let Some(preset) = rest.flag("preset") {
                config.preset = Some(preset.to_string());
            }
            if rest.has("scale-inputs") {
                config.scale_inputs = Some(true);
            }
            if let Some(seed) = rest.parsed_flag::<u64>("seed")? {
                config.data_seed = Some(seed);
            }
            let out = rest.flag("out").map(PathBuf::from);
            let dir = cmd_experiment(&config, out.as_deref())?;
            println!("experiment complete: {}", dir.display());
            print_summary(&dir)?;
            Ok(())
        }
        "impulse" => {
            let input = PathBuf::from(rest.positional(0, "linear spec JSON")?);
            let k = rest.parsed_flag::<usize>("k")?.unwrap_or(1000);
            let tail = rest.parsed_flag::<usize>("tail-start")?.unwrap_or(20);
            let out_dir = PathBuf::from(rest.flag("out").unwrap_or("impulse"));
            let report = cmd_impulse(&input, k, tail, &out_dir)?;
            for e in &report.entries {
                println!(
                    "entry ({}, {}): {:?} rate {:.4} (R^2 {:.4}/{:.4})",
                    e.row, e.col, e.decay.kind, e.decay.rate, e.decay.fit_r2.0, e.decay.fit_r2.1
                );
            }
            Ok(())
        }
        "compare" => {
            let a = PathBuf::from(rest.positional(0, "first metrics CSV")?);
            let b = PathBuf::from(rest.positional(1, "second metrics CSV")?);
            let metric = rest.flag("metric").unwrap_or("rmse");
            let out = rest.flag("out").map(PathBuf::from);
            let report = cmd_compare(&a, &b, metric, out.as_deref())?;
            println!(
                "{metric}: mean(a) = {:.6}, mean(b) = {:.6}, t = {:.4}, df = {:.2}, one-sided p = {:.6}",
                report.mean_a, report.mean_b, report.t, report.df, report.p_one_sided
            );
            Ok(())
        }
        other => Err(Error::Config(format!("unknown command '{other}'\n{USAGE}"))),
    }
}

fn print_summary(dir: &Path) -> Result<()> {
    let report: ExperimentReport =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json"))?)?;
    for m in &report.models {
        println!(
            "  {:>18}: rmse mean {:.4} (std {:.4}, min {:.4}) over {} runs{}",
            m.name,
            m.summary.rmse.mean,
            m.summary.rmse.std,
            m.summary.rmse.min,
            m.summary.runs,
            if m.summary.failed > 0 { format!(", {} failed", m.summary.failed) } else { String::new() }
        );
    }
    Ok(())
}
