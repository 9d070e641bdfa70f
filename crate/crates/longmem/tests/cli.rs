//! End-to-end tests of the command-line surface: every subcommand, the file
//! formats it reads and writes, and the documented exit codes.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use longmem::cli::{self, cmd_compare, cmd_diagnose, cmd_generate, cmd_impulse};
use longmem::diagnostics::MemoryClass;
use longmem::rng::Rng64;
use longmem::series::TimeSeries;

static DIR_SEQ: AtomicUsize = AtomicUsize::new(0);

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "longmem-cli-{}-{}-{}",
        std::process::id(),
        tag,
        DIR_SEQ.fetch_add(1, Ordering::SeqCst)
    ));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> i32 {
    let owned: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    cli::run(&owned)
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn generate_preset_is_deterministic_and_right_sized() {
    let dir = temp_dir("gen");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    assert_eq!(run(&["generate", "--preset", "arfima-paper", "--out", a.to_str().unwrap()]), 0);
    assert_eq!(run(&["generate", "--preset", "arfima-paper", "--out", b.to_str().unwrap()]), 0);
    let text_a = std::fs::read_to_string(&a).unwrap();
    let text_b = std::fs::read_to_string(&b).unwrap();
    assert_eq!(text_a, text_b, "same seed must give identical files");
    assert_eq!(text_a.lines().count(), 4002, "header plus 4001 rows");
    // The CSV round-trips losslessly through the ingestion path.
    let series = TimeSeries::read_csv(&a).unwrap();
    assert_eq!(series.to_csv_string(), text_a);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn generate_zero_noise_writes_zero_column() {
    let dir = temp_dir("gen0");
    let cfg = dir.join("cfg.json");
    let out = dir.join("zero.csv");
    write(
        &cfg,
        &format!(
            r#"{{"source": {{"arfima": {{"spec": {{"ar": [0.5], "d": 0.3, "ma": [], "noise_std": 0.0, "burn_in": 100}}, "n": 50, "seed": 3}}}}, "out": "{}"}}"#,
            out.display()
        ),
    );
    assert_eq!(run(&["generate", "--config", cfg.to_str().unwrap()]), 0);
    let series = TimeSeries::read_csv(&out).unwrap();
    assert!(series.univariate_values().unwrap().iter().all(|v| *v == 0.0));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn diagnose_classifies_and_rejects_tiny_files() {
    let dir = temp_dir("diag");
    // White noise: short memory.
    let mut rng = Rng64::from_seed(9);
    let wn: Vec<f64> = (0..20_000).map(|_| rng.normal()).collect();
    let wn_path = dir.join("wn.csv");
    TimeSeries::univariate(wn).write_csv(&wn_path).unwrap();
    let report = cmd_diagnose(&wn_path, 0, &dir.join("wn-out")).unwrap();
    assert_eq!(report.class, MemoryClass::ShortMemory);
    // The emitted ACF CSV starts at lag 1 (lag 0 cropped).
    let acf_text = std::fs::read_to_string(dir.join("wn-out/acf.csv")).unwrap();
    assert!(acf_text.starts_with("lag,autocorrelation\n1,"));

    // Long-memory benchmark series via the generate command.
    let lm_path = dir.join("lm.csv");
    assert_eq!(run(&["generate", "--preset", "arfima-paper", "--out", lm_path.to_str().unwrap()]), 0);
    let report = cmd_diagnose(&lm_path, 0, &dir.join("lm-out")).unwrap();
    assert_eq!(report.class, MemoryClass::LongMemory);

    // A 3-row file is insufficient data: exit code 3.
    let tiny = dir.join("tiny.csv");
    write(&tiny, "y0\n1.0\n2.0\n3.0\n");
    assert_eq!(run(&["diagnose", tiny.to_str().unwrap(), "--out", dir.join("t").to_str().unwrap()]), 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ergodicity").join(name)
}

#[test]
fn check_handles_fixtures_and_linear_docs() {
    let dir = temp_dir("check");
    // Zero forget weights: proven.
    let out = dir.join("verdict.json");
    assert_eq!(
        run(&[
            "check",
            fixture("lstm_zero_forget_weights.json").to_str().unwrap(),
            "--contraction",
            "0.6",
            "--out",
            out.to_str().unwrap(),
        ]),
        0
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("short-memory-proven"));
    // Saturated forget bias: inconclusive.
    assert_eq!(
        run(&["check", fixture("lstm_saturated_forget_bias.json").to_str().unwrap(), "--contraction", "0.999"]),
        0
    );
    // Bounded activation: proven for any weights.
    assert_eq!(
        run(&["check", fixture("rnn_bounded_activation_any_weights.json").to_str().unwrap()]),
        0
    );
    // Unstable linear transition matrix: the criterion is two-sided.
    let linear = dir.join("linear.json");
    write(&linear, r#"{"kind": "linear-mc", "W": [[1.05, 0.0], [0.0, 0.2]]}"#);
    let report = cli::cmd_check(&linear, 0.99, None).unwrap();
    assert_eq!(
        report.verdict.conclusion,
        longmem::diagnostics::Conclusion::NotGeometricallyErgodic
    );
    // Garbage input: data error.
    let garbage = dir.join("garbage.json");
    write(&garbage, r#"{"hello": 1}"#);
    assert_eq!(run(&["check", garbage.to_str().unwrap()]), 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

fn smoke_experiment_config(dir: &Path) -> PathBuf {
    let cfg = dir.join("exp.json");
    write(
        &cfg,
        &format!(
            r#"{{
  "name": "smoke",
  "dataset": {{"arfima": {{"spec": {{"ar": [0.7, -0.4], "d": 0.4, "ma": [-0.2], "noise_std": 1.0, "burn_in": 300}}, "n": 420, "seed": 5}}}},
  "split": {{"n_train": 240, "n_val": 100, "n_test": 80}},
  "models": [
    {{"name": "rnn", "kind": "rnn", "hidden": 2, "filter_len": 0}},
    {{"name": "mrnnf", "kind": "mrnnf", "hidden": 2, "filter_len": 10}}
  ],
  "seeds": [1, 2],
  "stopping": {{"min_loss_drop": 1e-5, "patience": 100, "max_steps": 8}},
  "out": "{}"
}}"#,
            dir.join("runs").display()
        ),
    );
    cfg
}

#[test]
fn experiment_writes_run_directory_and_refuses_rerun() {
    let dir = temp_dir("exp");
    let cfg = smoke_experiment_config(&dir);
    assert_eq!(run(&["experiment", "--config", cfg.to_str().unwrap()]), 0);
    let run_dir: Vec<_> = std::fs::read_dir(dir.join("runs")).unwrap().collect();
    assert_eq!(run_dir.len(), 1);
    let run_dir = run_dir[0].as_ref().unwrap().path();
    for file in ["config.json", "summary.json", "summary.csv"] {
        assert!(run_dir.join(file).exists(), "{file} missing");
    }
    for model in ["rnn", "mrnnf"] {
        for file in ["records.json", "metrics.csv", "best_checkpoint.json"] {
            assert!(run_dir.join(model).join(file).exists(), "{model}/{file} missing");
        }
        let records: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(run_dir.join(model).join("records.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(records["records"].as_array().unwrap().len(), 2, "one record per seed");
    }
    // Identical configuration: refuse with the config-error exit code.
    assert_eq!(run(&["experiment", "--config", cfg.to_str().unwrap()]), 2);

    // The per-seed metric tables feed the comparison command.
    let report = cmd_compare(
        &run_dir.join("mrnnf/metrics.csv"),
        &run_dir.join("rnn/metrics.csv"),
        "rmse",
        Some(&dir.join("ttest.json")),
    )
    .unwrap();
    assert_eq!(report.n_a, 2);
    assert!(report.p_one_sided > 0.0 && report.p_one_sided < 1.0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn impulse_command_outputs_csv_and_classification() {
    let dir = temp_dir("imp");
    let spec = dir.join("spec.json");
    write(
        &spec,
        r#"{"kind": "linear-rnn", "W_zh": [[1.0]], "W_hh": [[0.5]], "W_hx": [[1.0]]}"#,
    );
    let report = cmd_impulse(&spec, 300, 20, &dir.join("out")).unwrap();
    assert_eq!(report.entries.len(), 1);
    assert_eq!(report.entries[0].decay.kind, longmem::diagnostics::DecayKind::Exponential);
    assert!((report.entries[0].decay.rate - 0.5).abs() < 0.01);
    let csv = std::fs::read_to_string(dir.join("out/impulse.csv")).unwrap();
    assert!(csv.starts_with("k,a_0_0\n0,1\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn compare_file_with_itself_is_centered() {
    let dir = temp_dir("cmp");
    let metrics = dir.join("m.csv");
    let mut rng = Rng64::from_seed(33);
    let vals: Vec<f64> = (0..12).map(|_| 1.0 + 0.05 * rng.normal()).collect();
    let table = |shift: f64| {
        let mut text = String::from("seed,rmse,mae,mape\n");
        for (i, v) in vals.iter().enumerate() {
            text.push_str(&format!("{},{},0.8,2.0\n", i + 1, v + shift));
        }
        text
    };
    write(&metrics, &table(0.0));
    let report = cmd_compare(&metrics, &metrics, "rmse", None).unwrap();
    assert_eq!(report.t, 0.0);
    assert!((report.p_one_sided - 0.5).abs() < 1e-12);

    // Shifted copy: overwhelming evidence.
    let shifted = dir.join("s.csv");
    write(&shifted, &table(10.0));
    let report = cmd_compare(&metrics, &shifted, "rmse", None).unwrap();
    assert!(report.p_one_sided < 1e-10);
    // Unknown metric: config error.
    assert_eq!(run(&["compare", metrics.to_str().unwrap(), shifted.to_str().unwrap(), "--metric", "nope"]), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn cli_rejects_unknown_commands_and_flags() {
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["generate", "--bogus", "1"]), 2);
    assert_eq!(run(&["diagnose"]), 2);
    assert_eq!(run(&[]), 0, "bare invocation prints usage");
}

#[test]
fn generated_experiment_is_deterministic_across_runs() {
    let dir = temp_dir("det");
    let cfg = smoke_experiment_config(&dir);
    assert_eq!(run(&["experiment", "--config", cfg.to_str().unwrap()]), 0);
    let run_dirs: Vec<_> = std::fs::read_dir(dir.join("runs")).unwrap().collect();
    let first = run_dirs[0].as_ref().unwrap().path();
    let metrics_a = std::fs::read_to_string(first.join("mrnnf/metrics.csv")).unwrap();
    // Fresh output root, same config: identical metric tables.
    let dir2 = temp_dir("det2");
    let cfg2 = smoke_experiment_config(&dir2);
    assert_eq!(run(&["experiment", "--config", cfg2.to_str().unwrap()]), 0);
    let run_dirs2: Vec<_> = std::fs::read_dir(dir2.join("runs")).unwrap().collect();
    let second = run_dirs2[0].as_ref().unwrap().path();
    let metrics_b = std::fs::read_to_string(second.join("mrnnf/metrics.csv")).unwrap();
    assert_eq!(metrics_a, metrics_b);
    std::fs::remove_dir_all(&dir).unwrap();
    std::fs::remove_dir_all(&dir2).unwrap();
}
