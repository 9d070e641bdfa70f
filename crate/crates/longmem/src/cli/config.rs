//! CLI configuration documents and preset expansion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::networks::{CellKind, Dims};
use crate::procgen::{ArfimaSpec, ProcessSpec};
use crate::series::Split;
use crate::training::{StoppingRule, TrainSpec};

/// Benchmark dataset preset: ARMA(2,1) innovations under fractional
/// integration with d = 0.4, 4001 samples split 2000+1200+800.
pub const PRESET_ARFIMA: &str = "arfima-paper";
/// Short-memory control preset: a stable tanh cell process of the same
/// length and split, which no model should lose badly on.
pub const PRESET_RNN_CONTROL: &str = "rnn-control";

pub const DEFAULT_DATA_SEED: u64 = 20200603;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Csv { path: String },
    Arfima { spec: ArfimaSpec, n: usize, seed: u64 },
    Process { spec: ProcessSpec, n: usize, seed: u64 },
}

/// Stable short-memory control process: moderate positive weights keep the
/// state well inside the tanh linear band.
pub fn control_process_spec(seed: u64) -> ProcessSpec {
    let mut rng = crate::rng::Rng64::substream(seed, 7);
    let mut params =
        crate::networks::init_params(CellKind::Rnn, Dims::univariate(2), 0, seed).expect("valid dims");
    params.for_each_param_mut(|v| *v = rng.uniform_in(0.25, 0.55));
    match &mut params.weights {
        crate::networks::CellWeights::Rnn(p) => {
            p.b_h.iter_mut().for_each(|v| *v = 0.0);
            p.b_z.iter_mut().for_each(|v| *v = 0.0);
        }
        _ => unreachable!(),
    }
    ProcessSpec::Cell { params, noise_std: 1.0 }
}

impl DatasetSource {
    pub fn preset(name: &str, seed: u64) -> Result<DatasetSource> {
        match name {
            PRESET_ARFIMA => {
                Ok(DatasetSource::Arfima { spec: ArfimaSpec::benchmark_long_memory(), n: 4001, seed })
            }
            PRESET_RNN_CONTROL => {
                Ok(DatasetSource::Process { spec: control_process_spec(seed), n: 4001, seed })
            }
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (available: {PRESET_ARFIMA}, {PRESET_RNN_CONTROL})"
            ))),
        }
    }

    pub fn load(&self) -> Result<crate::series::TimeSeries> {
        match self {
            DatasetSource::Csv { path } => crate::series::TimeSeries::read_csv(std::path::Path::new(path)),
            DatasetSource::Arfima { spec, n, seed } => crate::procgen::generate_arfima(spec, *n, *seed),
            DatasetSource::Process { spec, n, seed } => {
                crate::procgen::generate_network_process(spec, *n, *seed)
            }
        }
    }
}

/// Configuration for `generate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub source: Option<DatasetSource>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<String>,
}

impl GenerateConfig {
    pub fn resolve(&self) -> Result<DatasetSource> {
        let seed = self.seed.unwrap_or(DEFAULT_DATA_SEED);
        match (&self.preset, &self.source) {
            (Some(name), None) => DatasetSource::preset(name, seed),
            (None, Some(src)) => {
                let mut src = src.clone();
                if let Some(s) = self.seed {
                    match &mut src {
                        DatasetSource::Arfima { seed, .. } | DatasetSource::Process { seed, .. } => {
                            *seed = s;
                        }
                        DatasetSource::Csv { .. } => {}
                    }
                }
                Ok(src)
            }
            (Some(_), Some(_)) => {
                Err(Error::Config("give either a preset or an explicit source, not both".into()))
            }
            (None, None) => Err(Error::Config("generate needs a preset or a source".into())),
        }
    }
}

/// One model entry of an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    pub kind: CellKind,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_filter_len")]
    pub filter_len: usize,
}

fn default_hidden() -> usize {
    8
}
fn default_filter_len() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRange {
    pub start: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub dataset: Option<DatasetSource>,
    #[serde(default)]
    pub data_seed: Option<u64>,
    #[serde(default)]
    pub split: Option<Split>,
    #[serde(default)]
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub seed_range: Option<SeedRange>,
    #[serde(default)]
    pub stopping: Option<StoppingRule>,
    #[serde(default)]
    pub lr: Option<f64>,
    #[serde(default)]
    pub scale_inputs: Option<bool>,
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub name: String,
    pub dataset: DatasetSource,
    pub split: Split,
    pub models: Vec<(ModelConfig, TrainSpec)>,
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let data_seed = self.data_seed.unwrap_or(DEFAULT_DATA_SEED);
        let (dataset, split, default_models, default_seeds, name) = match self.preset.as_deref() {
            Some(name) => {
                let dataset = DatasetSource::preset(name, data_seed)?;
                let split = Split { n_train: 2000, n_val: 1200, n_test: 800 };
                let models = vec![
                    ModelConfig { name: "rnn".into(), kind: CellKind::Rnn, hidden: 8, filter_len: 0 },
                    ModelConfig { name: "mrnnf".into(), kind: CellKind::Mrnnf, hidden: 8, filter_len: 100 },
                ];
                let seeds: Vec<u64> =
                    (1..=if name == PRESET_RNN_CONTROL { 10 } else { 20 }).collect();
                (Some(dataset), Some(split), models, seeds, name.to_string())
            }
            None => (None, None, Vec::new(), (1..=10).collect(), "experiment".to_string()),
        };
        let dataset = match (&self.dataset, dataset) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => d,
            (None, None) => return Err(Error::Config("experiment needs a dataset or a preset".into())),
        };
        let split = match (self.split, split) {
            (Some(s), _) => s,
            (None, Some(s)) => s,
            (None, None) => return Err(Error::Config("experiment needs split sizes".into())),
        };
        let models = if self.models.is_empty() { default_models } else { self.models.clone() };
        if models.is_empty() {
            return Err(Error::Config("experiment needs at least one model".into()));
        }
        let seeds = match (&self.seeds, &self.seed_range) {
            (Some(s), None) => s.clone(),
            (None, Some(r)) => (r.start..r.start + r.count).collect(),
            (None, None) => default_seeds,
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either seeds or seed_range, not both".into()))
            }
        };
        if seeds.is_empty() {
            return Err(Error::Config("experiment needs seeds".into()));
        }
        let mut specs = Vec::new();
        for m in models {
            let mut spec = TrainSpec::new(m.kind, m.hidden, m.filter_len);
            if let Some(rule) = self.stopping {
                spec.rule = rule;
            }
            if let Some(lr) = self.lr {
                spec.lr = lr;
            }
            if let Some(scale) = self.scale_inputs {
                spec.scale_inputs = scale;
            }
            specs.push((m, spec));
        }
        Ok(ResolvedExperiment {
            name: self.name.clone().unwrap_or(name),
            dataset,
            split,
            models: specs,
            seeds,
        })
    }
}

/// Document accepted by `check`: a raw linear transition matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearMcDocument {
    pub kind: String,
    #[serde(rename = "W")]
    pub w: Mat,
}
