//! Implementations of the CLI commands. Each returns its primary artifact so
//! library callers and tests can drive them without a process boundary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    acf, check_linear_ergodicity, check_lstm_ergodicity, check_rnn_ergodicity, classify_decay,
    classify_series_memory, impulse_response, linear_fit, periodogram, DecayClass, LinearSpec,
    MemoryClass, Verdict, DEFAULT_CONTRACTION, DEFAULT_RADIUS_TOL,
};
use crate::error::{Error, Result};
use crate::networks::{CellKind, CellParams};
use crate::series::TimeSeries;
use crate::training::{
    config_digest, multi_seed_experiment, welch_ttest, Checkpoint, ExperimentSummary, RunRecord,
};

use super::config::{ExperimentConfig, GenerateConfig, LinearMcDocument, ResolvedExperiment};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// generate: produce a dataset CSV.
pub fn cmd_generate(config: &GenerateConfig) -> Result<PathBuf> {
    let source = config.resolve()?;
    let series = source.load()?;
    let out = PathBuf::from(config.out.clone().unwrap_or_else(|| "series.csv".into()));
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    series.write_csv(&out)?;
    Ok(out)
}

pub const DIAGNOSIS_FORMAT: &str = "longmem-diagnosis";
pub const DIAGNOSIS_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub column: usize,
    pub class: MemoryClass,
    pub white_noise_fraction: f64,
    pub acf_decay: Option<DecayClass>,
    pub max_lag: usize,
    /// Log-log slope of the periodogram over the lowest frequencies
    /// (up to 50 of them), where long memory shows up as divergence.
    pub lowfreq_slope: f64,
    pub lowfreq_count: usize,
    pub parseval_mean: f64,
}

/// diagnose: ACF, periodogram and a memory classification for one column of
/// a CSV series. Writes `diagnosis.json`, `acf.csv` (lag 0 cropped) and
/// `periodogram.csv` into `out_dir`.
pub fn cmd_diagnose(input: &Path, column: usize, out_dir: &Path) -> Result<DiagnosisReport> {
    let series = TimeSeries::read_csv(input)?;
    if column >= series.dim() {
        return Err(Error::Config(format!(
            "column {column} out of range for a {}-column series",
            series.dim()
        )));
    }
    let values = series.column(column);
    if values.len() < 32 {
        return Err(Error::Data(format!(
            "diagnosis needs at least 32 samples, the file has {}",
            values.len()
        )));
    }
    let report_core = classify_series_memory(&values)?;
    let acf_res = acf(&values, report_core.max_lag)?;
    let spectrum = periodogram(&values)?;
    let low = spectrum.ordinates.len().min(50);
    let xs: Vec<f64> = spectrum.frequencies[..low].iter().map(|f| f.ln()).collect();
    let ys: Vec<f64> = spectrum.ordinates[..low].iter().map(|o| o.max(1e-300).ln()).collect();
    let (slope, _, _) = linear_fit(&xs, &ys);

    std::fs::create_dir_all(out_dir)?;
    let mut acf_csv = String::from("lag,autocorrelation\n");
    for k in 1..acf_res.autocorrelation.len() {
        let _ = writeln!(acf_csv, "{},{}", k, acf_res.autocorrelation[k]);
    }
    std::fs::write(out_dir.join("acf.csv"), acf_csv)?;
    let mut per_csv = String::from("frequency,ordinate\n");
    for (f, o) in spectrum.frequencies.iter().zip(&spectrum.ordinates) {
        let _ = writeln!(per_csv, "{f},{o}");
    }
    std::fs::write(out_dir.join("periodogram.csv"), per_csv)?;

    let report = DiagnosisReport {
        format: DIAGNOSIS_FORMAT.into(),
        version: DIAGNOSIS_VERSION,
        n: values.len(),
        column,
        class: report_core.class,
        white_noise_fraction: report_core.white_noise_fraction,
        acf_decay: report_core.acf_decay,
        max_lag: report_core.max_lag,
        lowfreq_slope: slope,
        lowfreq_count: low,
        parseval_mean: spectrum.parseval_mean(),
    };
    write_json(&out_dir.join("diagnosis.json"), &report)?;
    Ok(report)
}

pub const VERDICT_FORMAT: &str = "longmem-verdict";
pub const VERDICT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictReport {
    pub format: String,
    pub version: u32,
    pub model_kind: String,
    pub contraction: f64,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// check: run the applicable ergodicity conditions on a parameter file
/// (cell-params document, checkpoint, or a linear transition matrix).
pub fn cmd_check(input: &Path, contraction: f64, out: Option<&Path>) -> Result<VerdictReport> {
    let text = std::fs::read_to_string(input)?;
    let (kind_name, verdict) = if let Ok(ck) = Checkpoint::load(input) {
        (ck.params.kind.name().to_string(), dispatch_check(&ck.params, contraction)?)
    } else if let Ok(params) = CellParams::from_json(&text) {
        (params.kind.name().to_string(), dispatch_check(&params, contraction)?)
    } else if let Ok(doc) = serde_json::from_str::<LinearMcDocument>(&text) {
        if doc.kind != "linear-mc" {
            return Err(Error::Config(format!("unknown document kind '{}'", doc.kind)));
        }
        ("linear-mc".to_string(), check_linear_ergodicity(&doc.w, DEFAULT_RADIUS_TOL)?)
    } else {
        return Err(Error::Data(format!(
            "{} is not a cell-params document, checkpoint, or linear-mc matrix",
            input.display()
        )));
    };
    let report = VerdictReport {
        format: VERDICT_FORMAT.into(),
        version: VERDICT_VERSION,
        model_kind: kind_name,
        contraction,
        verdict,
    };
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        write_json(path, &report)?;
    }
    Ok(report)
}

fn dispatch_check(params: &CellParams, a: f64) -> Result<Verdict> {
    match params.kind {
        CellKind::Rnn => check_rnn_ergodicity(params, a),
        CellKind::Lstm => check_lstm_ergodicity(params, a),
        other => Err(Error::Config(format!(
            "ergodicity conditions are available for rnn and lstm cells, not {}",
            other.name()
        ))),
    }
}

pub fn default_contraction() -> f64 {
    DEFAULT_CONTRACTION
}

pub const SUMMARY_FORMAT: &str = "longmem-experiment-summary";
pub const SUMMARY_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelResult {
    pub name: String,
    pub summary: ExperimentSummary,
    pub failed_seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub digest: String,
    pub seeds: Vec<u64>,
    pub models: Vec<ModelResult>,
}

pub const RECORDS_FORMAT: &str = "longmem-run-records";
pub const RECORDS_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordsDocument {
    pub format: String,
    pub version: u32,
    pub model: String,
    pub records: Vec<RunRecord>,
}

fn metrics_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("seed,rmse,mae,mape\n");
    for r in records {
        let mape = r.test_metrics.mape.map(|v| v.to_string()).unwrap_or_else(|| "nan".into());
        let _ = writeln!(out, "{},{},{},{}", r.seed, r.test_metrics.rmse, r.test_metrics.mae, mape);
    }
    out
}

/// experiment: run every configured model over every seed and write one run
/// directory: resolved config, per-model records/metrics/best checkpoint,
/// and the cross-model summary. Refuses to overwrite a completed run of the
/// same configuration.
pub fn cmd_experiment(config: &ExperimentConfig, out_override: Option<&Path>) -> Result<PathBuf> {
    let resolved: ResolvedExperiment = config.resolve()?;
    let data = resolved.dataset.load()?.with_split(resolved.split)?;

    // Digest over the first model's spec pins data + split + seeds; model
    // names key the subdirectories.
    let digest = config_digest(&resolved.models[0].1, &data);
    let base = out_override
        .map(Path::to_path_buf)
        .or_else(|| config.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let run_dir = base.join(format!("{}-{}", resolved.name, &digest[..8]));
    let summary_path = run_dir.join("summary.json");
    if summary_path.exists() {
        return Err(Error::Config(format!(
            "run directory {} already holds a completed experiment with this configuration; \
             remove it or choose another --out",
            run_dir.display()
        )));
    }
    std::fs::create_dir_all(&run_dir)?;
    write_json(&run_dir.join("config.json"), config)?;

    let mut model_results = Vec::new();
    for (model, spec) in &resolved.models {
        let experiment = multi_seed_experiment(spec, &data, &resolved.seeds)?;
        let model_dir = run_dir.join(&model.name);
        std::fs::create_dir_all(&model_dir)?;
        let records: Vec<RunRecord> = experiment.outcomes.iter().map(|o| o.record.clone()).collect();
        write_json(
            &model_dir.join("records.json"),
            &RecordsDocument {
                format: RECORDS_FORMAT.into(),
                version: RECORDS_VERSION,
                model: model.name.clone(),
                records: records.clone(),
            },
        )?;
        std::fs::write(model_dir.join("metrics.csv"), metrics_csv(&records))?;
        let best = experiment
            .outcomes
            .iter()
            .min_by(|a, b| {
                a.record.test_metrics.rmse.partial_cmp(&b.record.test_metrics.rmse).unwrap()
            })
            .expect("at least one successful run");
        best.checkpoint.save(&model_dir.join("best_checkpoint.json"))?;
        model_results.push(ModelResult {
            name: model.name.clone(),
            summary: experiment.summary.clone(),
            failed_seeds: experiment.failures.iter().map(|f| f.seed).collect(),
        });
    }

    let mut summary_csv = String::from("model,runs,failed,rmse_mean,rmse_std,rmse_min,mae_mean,mae_std,mae_min\n");
    for m in &model_results {
        let _ = writeln!(
            summary_csv,
            "{},{},{},{},{},{},{},{},{}",
            m.name,
            m.summary.runs,
            m.summary.failed,
            m.summary.rmse.mean,
            m.summary.rmse.std,
            m.summary.rmse.min,
            m.summary.mae.mean,
            m.summary.mae.std,
            m.summary.mae.min
        );
    }
    std::fs::write(run_dir.join("summary.csv"), summary_csv)?;
    write_json(
        &summary_path,
        &ExperimentReport {
            format: SUMMARY_FORMAT.into(),
            version: SUMMARY_VERSION,
            name: resolved.name.clone(),
            digest,
            seeds: resolved.seeds.clone(),
            models: model_results,
        },
    )?;
    Ok(run_dir)
}

pub const IMPULSE_FORMAT: &str = "longmem-impulse-decay";
pub const IMPULSE_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryDecay {
    pub row: usize,
    pub col: usize,
    pub decay: DecayClass,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImpulseReport {
    pub format: String,
    pub version: u32,
    pub k: usize,
    pub tail_start: usize,
    pub entries: Vec<EntryDecay>,
}

/// impulse: compute A_0..A_K of a linearized cell spec, write them as CSV
/// (one column per matrix entry) plus a decay classification per entry.
pub fn cmd_impulse(
    spec_path: &Path,
    k: usize,
    tail_start: usize,
    out_dir: &Path,
) -> Result<ImpulseReport> {
    let spec: LinearSpec = serde_json::from_str(&std::fs::read_to_string(spec_path)?)?;
    let mats = impulse_response(&spec, k)?;
    std::fs::create_dir_all(out_dir)?;
    let (rows, cols) = (mats[0].rows(), mats[0].cols());
    let mut csv = String::from("k");
    for i in 0..rows {
        for j in 0..cols {
            let _ = write!(csv, ",a_{i}_{j}");
        }
    }
    csv.push('\n');
    for (kk, m) in mats.iter().enumerate() {
        let _ = write!(csv, "{kk}");
        for i in 0..rows {
            for j in 0..cols {
                let _ = write!(csv, ",{}", m[(i, j)]);
            }
        }
        csv.push('\n');
    }
    std::fs::write(out_dir.join("impulse.csv"), csv)?;
    let mut entries = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let coeffs: Vec<f64> = mats.iter().map(|m| m[(i, j)]).collect();
            let decay = classify_decay(&coeffs, tail_start)?;
            entries.push(EntryDecay { row: i, col: j, decay });
        }
    }
    let report = ImpulseReport {
        format: IMPULSE_FORMAT.into(),
        version: IMPULSE_VERSION,
        k,
        tail_start,
        entries,
    };
    write_json(&out_dir.join("decay.json"), &report)?;
    Ok(report)
}

pub const TTEST_FORMAT: &str = "longmem-ttest";
pub const TTEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TtestReport {
    pub format: String,
    pub version: u32,
    pub metric: String,
    pub n_a: usize,
    pub n_b: usize,
    pub t: f64,
    pub df: f64,
    /// One-sided p for the alternative mean(a) < mean(b).
    pub p_one_sided: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

fn metric_column(path: &Path, metric: &str) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Data("empty metrics CSV".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let idx = names
        .iter()
        .position(|n| *n == metric)
        .ok_or_else(|| Error::Config(format!("metric '{metric}' not in {names:?}")))?;
    let mut out = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(Error::Data("ragged metrics CSV".into()));
        }
        let v: f64 = fields[idx]
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("cannot parse '{}' as a number", fields[idx])))?;
        if v.is_finite() {
            out.push(v);
        }
    }
    Ok(out)
}

/// compare: Welch's t-test between the same metric column of two per-seed
/// metric tables, one-sided with the alternative mean(a) < mean(b).
pub fn cmd_compare(
    a_csv: &Path,
    b_csv: &Path,
    metric: &str,
    out: Option<&Path>,
) -> Result<TtestReport> {
    let a = metric_column(a_csv, metric)?;
    let b = metric_column(b_csv, metric)?;
    let res = welch_ttest(&a, &b)?;
    let report = TtestReport {
        format: TTEST_FORMAT.into(),
        version: TTEST_VERSION,
        metric: metric.to_string(),
        n_a: a.len(),
        n_b: b.len(),
        t: res.t,
        df: res.df,
        p_one_sided: res.p_one_sided,
        mean_a: res.mean_a,
        mean_b: res.mean_b,
    };
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        write_json(path, &report)?;
    }
    Ok(report)
}
