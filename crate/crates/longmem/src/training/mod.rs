//! Training harness: full-batch Adam over the training segment, the
//! stopping rules, best-validation model selection, rolling one-step
//! forecasts, error metrics, and the multi-seed experiment driver.

pub mod adam;
pub mod stats;

pub use adam::{adam_step, adam_step_flat, AdamState};
pub use stats::{student_t_cdf, welch_ttest, WelchTest};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::activations::{Activation, OutputFn};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::networks::{backward, forward, init_params, CellKind, CellParams, Dims};
use crate::series::TimeSeries;

/// Early-stopping thresholds: stop when one full-batch step improves the
/// training loss by less than `min_loss_drop`, when the training loss has
/// increased for `patience` consecutive steps, or at `max_steps`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StoppingRule {
    pub min_loss_drop: f64,
    pub patience: usize,
    pub max_steps: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule { min_loss_drop: 1e-5, patience: 100, max_steps: 1000 }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_loss_drop <= 0.0 || self.patience == 0 || self.max_steps == 0 {
            return Err(Error::Config("stopping rule fields must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    LossDropBelowThreshold,
    LossIncreasing,
    MaxSteps,
}

/// Applies the stopping rule to a stream of training losses. Seed it with
/// the pre-training loss, then feed one loss per optimization step.
pub struct StopTracker {
    rule: StoppingRule,
    prev: f64,
    increase_streak: usize,
    steps: usize,
}

impl StopTracker {
    pub fn new(rule: StoppingRule, initial_loss: f64) -> StopTracker {
        StopTracker { rule, prev: initial_loss, increase_streak: 0, steps: 0 }
    }

    pub fn observe(&mut self, loss: f64) -> Option<StopReason> {
        self.steps += 1;
        let drop = self.prev - loss;
        if loss > self.prev {
            self.increase_streak += 1;
        } else {
            self.increase_streak = 0;
        }
        self.prev = loss;
        if (0.0..self.rule.min_loss_drop).contains(&drop) {
            return Some(StopReason::LossDropBelowThreshold);
        }
        if self.increase_streak >= self.rule.patience {
            return Some(StopReason::LossIncreasing);
        }
        if self.steps >= self.rule.max_steps {
            return Some(StopReason::MaxSteps);
        }
        None
    }
}

/// Per-coordinate affine map onto [-1, 1], fitted on the training segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub center: Vec<f64>,
    pub half_range: Vec<f64>,
}

impl Preprocess {
    pub fn identity(dim: usize) -> Preprocess {
        Preprocess { center: vec![0.0; dim], half_range: vec![1.0; dim] }
    }

    pub fn fit(data: &TimeSeries, n_train: usize) -> Preprocess {
        let dim = data.dim();
        let mut center = vec![0.0; dim];
        let mut half_range = vec![1.0; dim];
        for i in 0..dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for t in 0..n_train {
                let v = data.row(t)[i];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            center[i] = 0.5 * (lo + hi);
            half_range[i] = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
        }
        Preprocess { center, half_range }
    }

    fn scale(&self, i: usize, v: f64) -> f64 {
        (v - self.center[i]) / self.half_range[i]
    }

    fn unscale(&self, i: usize, v: f64) -> f64 {
        v * self.half_range[i] + self.center[i]
    }
}

/// What to train and how.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSpec {
    pub kind: CellKind,
    pub hidden: usize,
    pub filter_len: usize,
    #[serde(default)]
    pub rule: StoppingRule,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub scale_inputs: bool,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_output")]
    pub output: OutputFn,
}

fn default_lr() -> f64 {
    0.01
}
fn default_activation() -> Activation {
    Activation::Tanh
}
fn default_output() -> OutputFn {
    OutputFn::Identity
}

impl TrainSpec {
    pub fn new(kind: CellKind, hidden: usize, filter_len: usize) -> TrainSpec {
        TrainSpec {
            kind,
            hidden,
            filter_len,
            rule: StoppingRule::default(),
            lr: default_lr(),
            scale_inputs: false,
            activation: default_activation(),
            output: default_output(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    /// Undefined when every target is below the near-zero threshold.
    pub mape: Option<f64>,
    pub mape_skipped: usize,
}

/// One seeded training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub config_digest: String,
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    /// Index into the loss histories (0 = before any update).
    pub best_step: usize,
    pub steps: usize,
    pub stop_reason: StopReason,
    pub test_metrics: Metrics,
    pub wall_time_secs: f64,
}

pub const CHECKPOINT_FORMAT: &str = "longmem-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained model bundle: parameters plus the input preprocessing they expect.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub params: CellParams,
    pub preprocess: Preprocess,
}

impl Checkpoint {
    pub fn new(params: CellParams, preprocess: Preprocess) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            params,
            preprocess,
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Checkpoint> {
        let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!(
                "unexpected checkpoint format '{}' v{}",
                ck.format, ck.version
            )));
        }
        ck.params.validate()?;
        Ok(ck)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub record: RunRecord,
    pub checkpoint: Checkpoint,
}

/// FNV-1a over the spec and the data, so identical configurations land in
/// identical run directories.
pub fn config_digest(spec: &TrainSpec, data: &TimeSeries) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    eat(serde_json::to_string(spec).expect("spec serializes").as_bytes());
    eat(&(data.dim() as u64).to_le_bytes());
    eat(&(data.len() as u64).to_le_bytes());
    if let Some(split) = data.split {
        eat(&(split.n_train as u64).to_le_bytes());
        eat(&(split.n_val as u64).to_le_bytes());
        eat(&(split.n_test as u64).to_le_bytes());
    }
    for t in 0..data.len() {
        for v in data.row(t) {
            eat(&v.to_le_bytes());
        }
    }
    format!("{hash:016x}")
}

/// Teacher-forced one-step arrangement: the input at step t is the observed
/// value at t-1 (zero at the first step), the target is the value at t.
fn build_inputs(data: &TimeSeries, pre: &Preprocess, t_len: usize) -> (Mat, Mat) {
    let dim = data.dim();
    let mut inputs = Mat::zeros(t_len, dim);
    let mut targets = Mat::zeros(t_len, dim);
    for t in 0..t_len {
        for i in 0..dim {
            if t > 0 {
                inputs[(t, i)] = pre.scale(i, data.row(t - 1)[i]);
            }
            targets[(t, i)] = pre.scale(i, data.row(t)[i]);
        }
    }
    (inputs, targets)
}

fn segment_mse(pred: &Mat, targets: &Mat, range: std::ops::Range<usize>) -> f64 {
    let mut acc = 0.0;
    for t in range.clone() {
        for (a, b) in pred.row(t).iter().zip(targets.row(t)) {
            let d = a - b;
            acc += d * d;
        }
    }
    acc / range.len() as f64
}

/// Full-batch training with best-validation model selection.
///
/// Each step runs one forward pass over the train+validation prefix, one
/// Adam update from the training-segment loss, and records both losses; the
/// returned checkpoint is the parameter state with the smallest validation
/// loss anywhere along the trajectory (step 0 included).
pub fn train(spec: &TrainSpec, data: &TimeSeries, seed: u64) -> Result<TrainOutcome> {
    spec.rule.validate()?;
    let split = data
        .split
        .ok_or_else(|| Error::Config("training data must carry a train/val/test split".into()))?;
    let started = Instant::now();
    let dim = data.dim();
    let dims = Dims { p_x: dim, q: spec.hidden, p_z: dim };
    let pre = if spec.scale_inputs { Preprocess::fit(data, split.n_train) } else { Preprocess::identity(dim) };
    let t_fit = split.n_train + split.n_val;
    let (inputs, targets) = build_inputs(data, &pre, t_fit);
    let train_range = split.train_range();
    let val_range = split.val_range();

    let mut params = init_params(spec.kind, dims, spec.filter_len, seed)?;
    params.activation = spec.activation;
    params.output = spec.output;
    let mut adam = AdamState::with_lr(params.num_params(), spec.lr);

    let evaluate = |params: &CellParams| -> Result<(f64, f64, Mat, crate::networks::StateCache)> {
        let (pred, cache) = forward(params, &inputs)?;
        let tl = segment_mse(&pred, &targets, train_range.clone());
        let vl = segment_mse(&pred, &targets, val_range.clone());
        Ok((tl, vl, pred, cache))
    };

    let (tl0, vl0, mut pred, mut cache) = evaluate(&params)?;
    let mut train_losses = vec![tl0];
    let mut val_losses = vec![vl0];
    let mut best_step = 0usize;
    let mut best_val = vl0;
    let mut best_params = params.clone();
    let mut tracker = StopTracker::new(spec.rule, tl0);
    let stop_reason;

    loop {
        // Gradient of the training-segment mean loss; validation rows get
        // zero so they contribute state but no gradient.
        let mut out_grads = Mat::zeros(t_fit, dim);
        for t in train_range.clone() {
            for i in 0..dim {
                out_grads[(t, i)] = 2.0 * (pred[(t, i)] - targets[(t, i)]) / train_range.len() as f64;
            }
        }
        let grads = backward(&params, &cache, &out_grads)?;
        adam_step(&mut adam, &mut params, &grads)?;

        let (tl, vl, new_pred, new_cache) = evaluate(&params)?;
        train_losses.push(tl);
        val_losses.push(vl);
        pred = new_pred;
        cache = new_cache;
        if vl < best_val {
            best_val = vl;
            best_step = train_losses.len() - 1;
            best_params = params.clone();
        }
        if let Some(reason) = tracker.observe(tl) {
            stop_reason = reason;
            break;
        }
    }

    let steps = train_losses.len() - 1;
    let checkpoint = Checkpoint::new(best_params, pre);
    let predictions = rolling_forecast(&checkpoint, data, split.test_range())?;
    let mut test_targets = Mat::zeros(split.n_test, dim);
    for (row, t) in split.test_range().enumerate() {
        for i in 0..dim {
            test_targets[(row, i)] = data.row(t)[i];
        }
    }
    let test_metrics = metrics(&predictions, &test_targets)?;
    let record = RunRecord {
        seed,
        config_digest: config_digest(spec, data),
        train_losses,
        val_losses,
        best_step,
        steps,
        stop_reason,
        test_metrics,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome { record, checkpoint })
}

/// One-step rolling forecasts over `range`: each prediction uses the true
/// observed history up to the previous step (teacher forcing), never its own
/// output. Predictions are returned in the original data scale.
pub fn rolling_forecast(
    checkpoint: &Checkpoint,
    data: &TimeSeries,
    range: std::ops::Range<usize>,
) -> Result<Mat> {
    if range.end > data.len() || range.start >= range.end {
        return Err(Error::Config(format!(
            "forecast range {range:?} outside the series of length {}",
            data.len()
        )));
    }
    let dim = data.dim();
    if checkpoint.params.dims.p_x != dim || checkpoint.params.dims.p_z != dim {
        return Err(Error::Shape("checkpoint dimensions do not match the series".into()));
    }
    let pre = &checkpoint.preprocess;
    let (inputs, _) = build_inputs(data, pre, range.end);
    let (pred, _) = forward(&checkpoint.params, &inputs)?;
    let mut out = Mat::zeros(range.len(), dim);
    for (row, t) in range.clone().enumerate() {
        for i in 0..dim {
            out[(row, i)] = pre.unscale(i, pred[(t, i)]);
        }
    }
    Ok(out)
}

/// RMSE, MAE and MAPE. MAPE skips targets with |y| below 1e-8 and reports
/// how many were skipped; it is `None` when nothing remains.
pub fn metrics(pred: &Mat, target: &Mat) -> Result<Metrics> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::Shape("metrics need congruent prediction/target shapes".into()));
    }
    let n = pred.data().len() as f64;
    let mut se = 0.0;
    let mut ae = 0.0;
    let mut ape = 0.0;
    let mut ape_n = 0usize;
    let mut skipped = 0usize;
    for (p, y) in pred.data().iter().zip(target.data()) {
        let e = p - y;
        se += e * e;
        ae += e.abs();
        if y.abs() >= 1e-8 {
            ape += (e / y).abs();
            ape_n += 1;
        } else {
            skipped += 1;
        }
    }
    Ok(Metrics {
        rmse: (se / n).sqrt(),
        mae: ae / n,
        mape: if ape_n > 0 { Some(ape / ape_n as f64) } else { None },
        mape_skipped: skipped,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
}

fn summarize(values: &[f64]) -> StatSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    StatSummary { mean, std: var.sqrt(), min: values.iter().cloned().fold(f64::INFINITY, f64::min) }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailedRun {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub runs: usize,
    pub failed: usize,
    pub rmse: StatSummary,
    pub mae: StatSummary,
    pub mape: Option<StatSummary>,
}

pub struct Experiment {
    pub outcomes: Vec<TrainOutcome>,
    pub failures: Vec<FailedRun>,
    pub summary: ExperimentSummary,
}

/// Worker-count override honored by the multi-seed driver.
pub const WORKERS_ENV: &str = "LONGMEM_WORKERS";

fn worker_count(jobs: usize) -> usize {
    let from_env = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    from_env.unwrap_or(available).clamp(1, jobs.max(1))
}

/// Run one seeded training per entry of `seeds`, concurrently, merging
/// results in seed order so the outcome is schedule-independent. Diverged
/// runs are excluded from the summary and reported in `failures`; the
/// experiment only errors when every run failed.
pub fn multi_seed_experiment(spec: &TrainSpec, data: &TimeSeries, seeds: &[u64]) -> Result<Experiment> {
    if seeds.len() < 2 {
        return Err(Error::Config("a multi-seed experiment needs at least 2 seeds".into()));
    }
    let slots: Mutex<Vec<Option<std::result::Result<TrainOutcome, String>>>> =
        Mutex::new((0..seeds.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = worker_count(seeds.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= seeds.len() {
                    break;
                }
                let outcome = match train(spec, data, seeds[idx]) {
                    Ok(o) => Ok(o),
                    Err(Error::Numerical(msg)) => Err(msg),
                    // Configuration problems abort the whole experiment, so
                    // surface them distinctly from divergence.
                    Err(other) => Err(format!("fatal: {other}")),
                };
                slots.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (idx, slot) in slots.into_inner().unwrap().into_iter().enumerate() {
        match slot.expect("every slot filled") {
            Ok(o) => outcomes.push(o),
            Err(msg) => {
                if let Some(rest) = msg.strip_prefix("fatal: ") {
                    return Err(Error::Config(rest.to_string()));
                }
                failures.push(FailedRun { seed: seeds[idx], error: msg });
            }
        }
    }
    if outcomes.is_empty() {
        return Err(Error::Numerical("every seeded run failed".into()));
    }
    let rmse: Vec<f64> = outcomes.iter().map(|o| o.record.test_metrics.rmse).collect();
    let mae: Vec<f64> = outcomes.iter().map(|o| o.record.test_metrics.mae).collect();
    let mapes: Vec<f64> = outcomes.iter().filter_map(|o| o.record.test_metrics.mape).collect();
    let summary = ExperimentSummary {
        runs: outcomes.len(),
        failed: failures.len(),
        rmse: summarize(&rmse),
        mae: summarize(&mae),
        mape: if mapes.len() == outcomes.len() { Some(summarize(&mapes)) } else { None },
    };
    Ok(Experiment { outcomes, failures, summary })
}

#[cfg(test)]
mod tests;
